//! Exact stationarity check for every kernel on a small config.

use aiit_core::diagnostics::{expected_stationary, kernel_oracle, minimal_informative_constant, tvd, ORACLE_DIM_CAP};
use aiit_core::{Basis, Kernel, SamplerKind, TargetSpec};

use crate::config::Plan;

#[derive(Debug, Clone)]
pub struct OracleLine {
    pub kind: SamplerKind,
    pub ln_gamma: f64,
    /// TVD between the kernel's stationary law and its expected law (`π` or
    /// the normalized `Z·π`).
    pub tvd: f64,
    pub residual: f64,
}

/// Tolerance a kernel must meet to count as correct.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Error for targets too large to enumerate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TooLarge {
    pub p: usize,
}

impl std::fmt::Display for TooLarge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "the kernel oracle enumerates 2^p states and needs p <= {ORACLE_DIM_CAP}, got p = {}", self.p)
    }
}

impl std::error::Error for TooLarge {}

pub fn check_size(target: &TargetSpec) -> Result<(), TooLarge> {
    if target.dim() > ORACLE_DIM_CAP {
        Err(TooLarge { p: target.dim() })
    } else {
        Ok(())
    }
}

/// Builds every kernel on the un-tempered target with the bounding constant
/// frozen at `γ*` and compares stationary laws.
pub fn run_oracle(plan: &Plan) -> anyhow::Result<Vec<OracleLine>> {
    check_size(&plan.target)?;
    let basis = plan.balancing.spec.basis().unwrap_or(Basis::Sqrt);
    let ln_star = minimal_informative_constant(&plan.target, basis)?;
    let mut out = Vec::new();
    for kind in SamplerKind::ALL {
        let informed = match plan.balancing.spec.is_bounded() {
            true => plan.balancing.spec,
            false => aiit_core::BalancingSpec::bounded(basis, 1.0)?,
        };
        let kernel = Kernel::for_kind(kind, informed, plan.balancing.statistic)?;
        let ln_gamma = if kind.is_adaptive() { ln_star } else { 0.0 };
        let o = kernel_oracle(&kernel, &plan.target, ln_gamma)?;
        let want = expected_stationary(&kernel, &plan.target, ln_gamma)?;
        out.push(OracleLine {
            kind,
            ln_gamma,
            tvd: tvd(&o.stationary, &want)?,
            residual: o.residual,
        });
    }
    Ok(out)
}
