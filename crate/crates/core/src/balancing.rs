//! Balancing functions `h(r) = r·h(1/r)` and the bounded construction
//! `h_γ(r) = min{f_γ(r), r·f_γ(1/r)}` with `f_γ(r) = min{γ, f(r)}/γ`.
//!
//! Everything is evaluated from log ratios; linear values are only formed at
//! the edges, so extreme ratios of cold replicas never overflow.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Nondecreasing basis function `f` of the bounded construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `f(r) = √r`.
    Sqrt,
    /// `f(r) = r`.
    Linear,
}

impl Basis {
    /// `log f(e^l)`.
    #[inline]
    pub fn log_eval(self, log_r: f64) -> f64 {
        match self {
            Basis::Sqrt => 0.5 * log_r,
            Basis::Linear => log_r,
        }
    }

    pub fn eval(self, r: f64) -> f64 {
        match self {
            Basis::Sqrt => libm::sqrt(r),
            Basis::Linear => r,
        }
    }
}

/// Which balancing function a [`BalancingSpec`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BalancingKind {
    Min,
    Max,
    Sqrt,
    Bounded(Basis),
}

/// A balancing function, with its bounding constant when bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancingSpec {
    kind: BalancingKind,
    gamma: f64,
    ln_gamma: f64,
}

impl BalancingSpec {
    pub const MIN: BalancingSpec = BalancingSpec::unbounded(BalancingKind::Min);
    pub const MAX: BalancingSpec = BalancingSpec::unbounded(BalancingKind::Max);
    pub const SQRT: BalancingSpec = BalancingSpec::unbounded(BalancingKind::Sqrt);

    const fn unbounded(kind: BalancingKind) -> Self {
        Self {
            kind,
            gamma: 1.0,
            ln_gamma: 0.0,
        }
    }

    /// `h_γ` built from `basis` (γ ≥ 1).
    pub fn bounded(basis: Basis, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            kind: BalancingKind::Bounded(basis),
            gamma,
            ln_gamma: libm::log(gamma),
        })
    }

    /// Bounded spec given `ln γ` directly (`ln γ ≥ 0`), for constants whose
    /// linear value would overflow.
    pub fn bounded_log(basis: Basis, ln_gamma: f64) -> Result<Self> {
        if !(ln_gamma >= 0.0 && ln_gamma.is_finite()) {
            return Err(Error::Domain(format!("ln(gamma) must be finite and >= 0, got {ln_gamma}")));
        }
        Ok(Self {
            kind: BalancingKind::Bounded(basis),
            gamma: libm::exp(ln_gamma),
            ln_gamma,
        })
    }

    pub fn kind(&self) -> BalancingKind {
        self.kind
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, BalancingKind::Bounded(_))
    }

    pub fn basis(&self) -> Option<Basis> {
        match self.kind {
            BalancingKind::Bounded(b) => Some(b),
            _ => None,
        }
    }

    /// Bounding constant (1 for unbounded kinds).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ln_gamma(&self) -> f64 {
        self.ln_gamma
    }

    /// Same bounded function with a different constant.
    pub fn with_ln_gamma(&self, ln_gamma: f64) -> Self {
        debug_assert!(self.is_bounded() && ln_gamma >= 0.0);
        Self {
            kind: self.kind,
            gamma: libm::exp(ln_gamma),
            ln_gamma,
        }
    }

    /// The unbounded function underlying a bounded spec (`bounded(√)` → `√`).
    pub fn unbounded_basis(&self) -> BalancingSpec {
        match self.kind {
            BalancingKind::Bounded(Basis::Sqrt) => Self::SQRT,
            BalancingKind::Bounded(Basis::Linear) => Self::MAX,
            _ => *self,
        }
    }

    /// `log h(e^l)`; the hot-path form, no domain checks.
    #[inline]
    pub fn log_eval(&self, log_r: f64) -> f64 {
        match self.kind {
            BalancingKind::Min => log_r.min(0.0),
            BalancingKind::Max => log_r.max(0.0),
            BalancingKind::Sqrt => 0.5 * log_r,
            BalancingKind::Bounded(basis) => {
                // log f_γ(r) and log(r·f_γ(1/r))
                let direct = (basis.log_eval(log_r) - self.ln_gamma).min(0.0);
                let mirrored = log_r + (basis.log_eval(-log_r) - self.ln_gamma).min(0.0);
                direct.min(mirrored)
            }
        }
    }

    /// `h(r)` for `r > 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("balancing functions need finite r > 0, got {r}")));
        }
        Ok(libm::exp(self.log_eval(libm::log(r))))
    }
}

/// `h_γ` for basis `f`, rejecting `γ < 1`.
pub fn bound_from_f(basis: Basis, gamma: f64) -> Result<BalancingSpec> {
    BalancingSpec::bounded(basis, gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("bounding constant must be finite and >= 1, got {gamma}")));
    }
    Ok(())
}

/// The bounded square-root function written piecewise:
/// `r` below `1/γ²`, `√r/γ` on `[1/γ², γ²)`, `1` from `γ²` on.
pub fn bounded_sqrt_piecewise(r: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    if r < 1.0 / g2 {
        r
    } else if r < g2 {
        libm::sqrt(r) / gamma
    } else {
        1.0
    }
}

/// `ln M(X)` where `M(X) = max_i max{f(ρ_i), f(1/ρ_i)}` over neighbor
/// log ratios `log ρ_i`. Since `f` is nondecreasing this is
/// `f(exp(max_i |log ρ_i|))`.
pub fn log_bound_statistic(log_ratios: &[f64], basis: Basis) -> Result<f64> {
    if log_ratios.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let mut widest = 0.0f64;
    for &l in log_ratios {
        if !l.is_finite() {
            return Err(Error::Domain(format!("non-finite log ratio {l}")));
        }
        widest = widest.max(libm::fabs(l));
    }
    Ok(basis.log_eval(widest))
}

/// `M(X)` in linear scale (at least `f(1) = 1`).
pub fn bound_statistic(log_ratios: &[f64], basis: Basis) -> Result<f64> {
    log_bound_statistic(log_ratios, basis).map(libm::exp)
}

/// Time-indexed record of an adaptive bounding constant.
///
/// The constant only grows, and stops changing once frozen. The history
/// stores `(update index, γ)` at every increase.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrace {
    ln_gamma: f64,
    updates: u64,
    history: Vec<(u64, f64)>,
    frozen_at: Option<u64>,
}

impl BoundTrace {
    pub fn new(gamma0: f64) -> Result<Self> {
        check_gamma(gamma0)?;
        Ok(Self {
            ln_gamma: libm::log(gamma0),
            updates: 0,
            history: vec![(0, gamma0)],
            frozen_at: None,
        })
    }

    pub fn gamma(&self) -> f64 {
        libm::exp(self.ln_gamma)
    }

    pub fn ln_gamma(&self) -> f64 {
        self.ln_gamma
    }

    pub fn history(&self) -> &[(u64, f64)] {
        &self.history
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen_at.is_some()
    }

    pub fn frozen_at(&self) -> Option<u64> {
        self.frozen_at
    }

    pub fn freeze(&mut self) {
        if self.frozen_at.is_none() {
            self.frozen_at = Some(self.updates);
        }
    }

    /// `γ ← max(γ, candidate)`, with candidates below 1 clamped to 1.
    pub fn update(&mut self, candidate: f64) -> f64 {
        let c = candidate.max(1.0);
        self.raise(libm::log(c), || c);
        self.gamma()
    }

    /// Log-scale form of [`BoundTrace::update`].
    #[inline]
    pub fn update_log(&mut self, ln_candidate: f64) {
        self.raise(ln_candidate, || libm::exp(ln_candidate));
    }

    #[inline]
    fn raise(&mut self, ln_candidate: f64, linear: impl FnOnce() -> f64) {
        if self.frozen_at.is_some() {
            return;
        }
        self.updates += 1;
        if ln_candidate > self.ln_gamma {
            self.ln_gamma = ln_candidate;
            self.history.push((self.updates, linear()));
        }
    }
}
