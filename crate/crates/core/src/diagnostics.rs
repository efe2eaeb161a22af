//! Run summaries, TVD, mode hitting, evaluation accounting and exact
//! transition-kernel oracles for small spaces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::balancing::{log_bound_statistic, Basis, BalancingSpec};
use crate::math::NeumaierSum;
use crate::samplers::{escape_probability_at, Kernel, SamplerKind, TransitionRow, WeightKind};
use crate::target::{exact_distribution, BinaryState, DistanceCache, ExactDistribution, TargetSpec, EXACT_DIM_CAP};
use crate::tempering::{swap_prob_standard, swap_prob_z_corrected, ReplicaLadder, SlotSpec, SwapRecord, WindowRecord, ZFactors};
use crate::{Error, Result};

/// Largest dimension the kernel oracles accept.
pub const ORACLE_DIM_CAP: usize = 10;

/// Largest dimension of the two-slot oracle (`4^p` joint states).
pub const PAIR_ORACLE_DIM_CAP: usize = 7;

/// `½ Σ |p_i − q_i|` between two distributions over the same index set.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    let mut acc = NeumaierSum::default();
    for (a, b) in p.iter().zip(q) {
        acc.add(libm::fabs(a - b));
    }
    Ok(0.5 * acc.value())
}

/// Weighted empirical distribution over `{0,1}^p`, indexed like
/// [`ExactDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHistogram {
    dim: usize,
    weights: Vec<f64>,
    total: f64,
}

impl WeightedHistogram {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            weights: vec![0.0; 1usize << dim],
            total: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn add(&mut self, index: u64, weight: f64) {
        self.weights[index as usize] += weight;
        self.total += weight;
    }

    pub fn add_state(&mut self, x: &BinaryState, weight: f64) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        self.add(x.index(), weight);
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Self-normalized probabilities (all zero while empty).
    pub fn probabilities(&self) -> Vec<f64> {
        if self.total > 0.0 {
            self.weights.iter().map(|w| w / self.total).collect()
        } else {
            vec![0.0; self.weights.len()]
        }
    }

    pub fn tvd(&self, exact: &ExactDistribution) -> Result<f64> {
        if exact.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: exact.dim(),
                found: self.dim,
            });
        }
        if self.total <= 0.0 {
            return Err(Error::EmptyAccumulator);
        }
        tvd(&self.probabilities(), exact.probs())
    }
}

/// First visit of a mode, in three clocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitTime {
    /// Completed rounds (0 for the starting state).
    pub sweep: u64,
    /// Target evaluations of all slots combined.
    pub evaluations: u64,
    pub seconds: Option<f64>,
}

/// Index of the first state in `trace` equal to each mode (`None` if never).
pub fn mode_hitting<'a, I>(trace: I, modes: &[BinaryState]) -> Vec<Option<usize>>
where
    I: IntoIterator<Item = &'a BinaryState>,
{
    let mut first = vec![None; modes.len()];
    for (t, x) in trace.into_iter().enumerate() {
        for (slot, m) in first.iter_mut().zip(modes) {
            if slot.is_none() && x == m {
                *slot = Some(t);
            }
        }
        if first.iter().all(Option::is_some) {
            break;
        }
    }
    first
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairSwapStats {
    pub attempts: u64,
    pub accepted: u64,
    pub probability_sum: f64,
    /// Rounds run, attempted or not.
    pub rounds: u64,
}

impl PairSwapStats {
    /// Accepted swaps per attempt.
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.accepted as f64 / self.attempts as f64)
    }

    /// Accepted swaps per round. Under the even/odd schedule each pair is
    /// attempted every other round, so this is about half the acceptance
    /// rate.
    pub fn rate_per_round(&self) -> Option<f64> {
        (self.rounds > 0).then(|| self.accepted as f64 / self.rounds as f64)
    }

    pub fn mean_probability(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.probability_sum / self.attempts as f64)
    }
}

/// Per-slot counters of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SlotSummary {
    pub windows: u64,
    /// Sum of recorded weights over all windows.
    pub weight: f64,
    pub recorded_windows: u64,
    pub recorded_rf_steps: u64,
    pub recorded_draws: u64,
    pub recorded_weight: f64,
    pub gamma_final: f64,
    pub gamma_updates: u64,
    /// Includes swap-time `Z` evaluations.
    pub evaluations: u64,
    pub steps: u64,
    pub moves: u64,
    pub rejection_free_steps: u64,
}

impl SlotSummary {
    /// Mean rejection-free steps per window after burn-in.
    pub fn mean_rf_steps(&self) -> Option<f64> {
        (self.recorded_windows > 0).then(|| self.recorded_rf_steps as f64 / self.recorded_windows as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvdPoint {
    pub round: u64,
    pub evaluations: u64,
    pub tvd: f64,
}

/// Result of a tempering run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub slots: Vec<SlotSummary>,
    /// Indexed by the lower slot of each adjacent pair.
    pub swap_stats: Vec<PairSwapStats>,
    /// Cold-slot first visits, one entry per mode.
    pub hits: Vec<Option<HitTime>>,
    pub tvd_curve: Vec<TvdPoint>,
    pub swaps: Vec<SwapRecord>,
    /// `(round, slot, record)`, when requested.
    pub windows: Vec<(u64, usize, WindowRecord)>,
    pub burnin_rounds: u64,
    pub rounds_run: u64,
    pub z_corrected: bool,
    pub cold_histogram: Option<WeightedHistogram>,
}

impl RunSummary {
    pub fn new(replicas: usize, modes: usize) -> Self {
        Self {
            slots: vec![SlotSummary::default(); replicas],
            swap_stats: vec![PairSwapStats::default(); replicas.saturating_sub(1)],
            hits: vec![None; modes],
            tvd_curve: Vec::new(),
            swaps: Vec::new(),
            windows: Vec::new(),
            burnin_rounds: 0,
            rounds_run: 0,
            z_corrected: false,
            cold_histogram: None,
        }
    }

    /// The latest of the per-mode first visits, once every mode is found.
    pub fn all_found(&self) -> Option<HitTime> {
        let mut latest: Option<HitTime> = None;
        for h in &self.hits {
            let h = (*h)?;
            if latest.is_none_or(|l| (h.evaluations, h.sweep) > (l.evaluations, l.sweep)) {
                latest = Some(h);
            }
        }
        latest
    }

    pub fn total_evaluations(&self) -> u64 {
        self.slots.iter().map(|s| s.evaluations).sum()
    }

    pub fn final_tvd(&self) -> Option<f64> {
        self.tvd_curve.last().map(|p| p.tvd)
    }
}

/// One line of [`accounting_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountingRow {
    pub slot: usize,
    pub kind: SamplerKind,
    pub beta: f64,
    pub mean_rf_steps: Option<f64>,
    pub evaluations: u64,
    /// Evaluations per unit of recorded weight.
    pub evaluations_per_sample: Option<f64>,
    /// Evaluations per rejection-free step (swap costs excluded when the slot
    /// takes no rejection-free steps).
    pub evaluations_per_rf_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccountingReport {
    pub rows: Vec<AccountingRow>,
    /// For ladders mixing A-IIT and SS-IIT slots: mean evaluations per
    /// retained sample of the A-IIT slots over that of the SS-IIT slots.
    pub rf_to_single_step_ratio: Option<f64>,
}

pub fn accounting_report(summary: &RunSummary, ladder: &ReplicaLadder) -> AccountingReport {
    let rows: Vec<AccountingRow> = summary
        .slots
        .iter()
        .enumerate()
        .map(|(k, s)| AccountingRow {
            slot: k,
            kind: ladder.kinds()[k],
            beta: ladder.betas()[k],
            mean_rf_steps: s.mean_rf_steps(),
            evaluations: s.evaluations,
            evaluations_per_sample: (s.weight > 0.0).then(|| s.evaluations as f64 / s.weight),
            evaluations_per_rf_step: (s.rejection_free_steps > 0)
                .then(|| s.evaluations as f64 / s.rejection_free_steps as f64),
        })
        .collect();
    let mean_of = |kind: SamplerKind| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.kind == kind)
            .filter_map(|r| r.evaluations_per_sample)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let rf_to_single_step_ratio = match (mean_of(SamplerKind::AIit), mean_of(SamplerKind::SsIit)) {
        (Some(a), Some(s)) => Some(a / s),
        _ => match (mean_of(SamplerKind::AIitSqrtFast), mean_of(SamplerKind::SsIit)) {
            (Some(a), Some(s)) => Some(a / s),
            _ => None,
        },
    };
    AccountingReport {
        rows,
        rf_to_single_step_ratio,
    }
}

/// Smallest `γ` covering every neighbor ratio of the space, as `ln γ*`:
/// the maximum of the bound statistic over all states (by enumeration).
pub fn minimal_informative_constant(target: &TargetSpec, basis: Basis) -> Result<f64> {
    let p = target.dim();
    if p > EXACT_DIM_CAP {
        return Err(Error::TooLarge {
            what: "minimal informative constant",
            dim: p,
            cap: EXACT_DIM_CAP,
        });
    }
    let mut best: f64 = 0.0;
    let mut ratios = vec![0.0; p];
    for idx in 0..(1u64 << p) {
        let x = BinaryState::from_index(p, idx);
        let cache = DistanceCache::new(&x, target)?;
        target.neighbor_log_ratios_into(&x, &cache, &mut ratios);
        best = best.max(log_bound_statistic(&ratios, basis)?);
    }
    Ok(best)
}

fn check_oracle_dim(dim: usize) -> Result<()> {
    if dim > ORACLE_DIM_CAP {
        return Err(Error::TooLarge {
            what: "kernel oracle",
            dim,
            cap: ORACLE_DIM_CAP,
        });
    }
    Ok(())
}

/// Exact transition kernel over `{0,1}^p`, stored by rows: each state moves
/// only to itself or a single-bit flip.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    dim: usize,
    rows: Vec<TransitionRow>,
}

impl KernelMatrix {
    /// Builds the kernel of `kernel` on `target` with bounding constant
    /// `exp(ln_gamma)` held fixed.
    pub fn build(kernel: &Kernel, target: &TargetSpec, ln_gamma: f64) -> Result<Self> {
        let p = target.dim();
        check_oracle_dim(p)?;
        let rows = (0..(1u64 << p))
            .map(|idx| {
                let x = BinaryState::from_index(p, idx);
                let cache = DistanceCache::new(&x, target)?;
                kernel.transition_row(target, &x, &cache, ln_gamma)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: p, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, index: usize) -> &TransitionRow {
        &self.rows[index]
    }

    /// `P(from, to)`.
    pub fn entry(&self, from: usize, to: usize) -> f64 {
        let row = &self.rows[from];
        if from == to {
            return row.stay;
        }
        let diff = from ^ to;
        if diff.is_power_of_two() {
            row.flips[diff.trailing_zeros() as usize]
        } else {
            0.0
        }
    }

    /// Largest `|Σ_y P(x, y) − 1|`.
    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| libm::fabs(r.stay + r.flips.iter().sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }

    /// `out = v P`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, (vi, row)) in out.iter_mut().zip(v.iter().zip(&self.rows)) {
            *o = vi * row.stay;
        }
        for (x, row) in self.rows.iter().enumerate() {
            let vx = v[x];
            if vx == 0.0 {
                continue;
            }
            for (i, &q) in row.flips.iter().enumerate() {
                out[x ^ (1 << i)] += vx * q;
            }
        }
    }

    /// `‖vP − v‖₁`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        out.iter().zip(v).map(|(a, b)| libm::fabs(a - b)).sum()
    }

    /// Stationary distribution by solving `π(P − I) = 0`, `Σπ = 1` with
    /// partial-pivot elimination; returns it with its residual.
    pub fn stationary(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.len();
        // Row r of the system is column r of (P − I); the last row is Σπ = 1.
        let mut a = vec![0.0; n * n];
        for x in 0..n {
            let row = &self.rows[x];
            a[x * n + x] += row.stay - 1.0;
            for (i, &q) in row.flips.iter().enumerate() {
                let y = x ^ (1 << i);
                a[y * n + x] += q;
            }
        }
        for c in 0..n {
            a[(n - 1) * n + c] = 1.0;
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let mut pi = solve_dense(a, b, n)?;
        let s: f64 = pi.iter().sum();
        for v in pi.iter_mut() {
            *v /= s;
        }
        let res = self.residual(&pi);
        Ok((pi, res))
    }
}

fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| libm::fabs(a[i * n + col]).total_cmp(&libm::fabs(a[j * n + col])))
            .unwrap_or(col);
        if a[pivot * n + col] == 0.0 {
            return Err(Error::Domain(format!("singular system at column {col}")));
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * x[c];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

/// Exact kernel with its stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOracle {
    pub matrix: KernelMatrix,
    pub stationary: Vec<f64>,
    pub residual: f64,
}

pub fn kernel_oracle(kernel: &Kernel, target: &TargetSpec, ln_gamma: f64) -> Result<KernelOracle> {
    let matrix = KernelMatrix::build(kernel, target, ln_gamma)?;
    let (stationary, residual) = matrix.stationary()?;
    Ok(KernelOracle {
        matrix,
        stationary,
        residual,
    })
}

/// Normalized `Z_h(x)·π^β(x)` by enumeration.
pub fn jump_chain_reference(target: &TargetSpec, balancing: &BalancingSpec) -> Result<Vec<f64>> {
    let exact = exact_distribution(target)?;
    let p = target.dim();
    let mut out: Vec<f64> = exact
        .probs()
        .iter()
        .enumerate()
        .map(|(idx, &pi)| {
            let x = BinaryState::from_index(p, idx as u64);
            let cache = DistanceCache::new(&x, target)?;
            Ok(pi * escape_probability_at(&x, &cache, target, balancing)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let s: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= s;
    }
    Ok(out)
}

/// Stationary law of the kernel's own chain by enumeration: `π^β` for
/// single-step kinds, normalized `Z_h·π^β` for rejection-free kinds.
pub fn expected_stationary(kernel: &Kernel, target: &TargetSpec, ln_gamma: f64) -> Result<Vec<f64>> {
    if kernel.kind().is_rejection_free() {
        jump_chain_reference(target, &kernel.effective_balancing(ln_gamma))
    } else {
        Ok(exact_distribution(target)?.into_probs())
    }
}

/// Stationary law of a two-slot tempering chain (one step per slot, then a
/// swap attempt), over pairs indexed `x_0·2^p + x_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOracle {
    pub stationary: Vec<f64>,
    pub residual: f64,
    pub iterations: u64,
}

/// Power iteration on the lazy version `(I + K·S)/2` of the two-slot chain,
/// where `K` moves both slots independently and `S` is the swap step.
/// Slots with inverse-Z kinds contribute their escape probabilities when
/// `z_corrected` is set, exactly as in [`crate::tempering::deo_round`].
pub fn pt_pair_oracle(
    slots: &[SlotSpec; 2],
    ln_gammas: [f64; 2],
    z_corrected: bool,
    tolerance: f64,
    max_iterations: u64,
) -> Result<PairOracle> {
    let p = slots[0].target.dim();
    if p > PAIR_ORACLE_DIM_CAP {
        return Err(Error::TooLarge {
            what: "pair oracle",
            dim: p,
            cap: PAIR_ORACLE_DIM_CAP,
        });
    }
    let k0 = KernelMatrix::build(&slots[0].kernel, &slots[0].target, ln_gammas[0])?;
    let k1 = KernelMatrix::build(&slots[1].kernel, &slots[1].target, ln_gammas[1])?;
    let n = 1usize << p;

    let states: Vec<BinaryState> = (0..n as u64).map(|i| BinaryState::from_index(p, i)).collect();
    let caches: Vec<DistanceCache> = states
        .iter()
        .map(|x| DistanceCache::new(x, &slots[0].target))
        .collect::<Result<_>>()?;
    let log_pi: Vec<f64> = caches.iter().map(|c| slots[0].target.log_base_cached(c)).collect();
    let z_of = |slot: usize| -> Result<Option<Vec<f64>>> {
        let s = &slots[slot];
        if !(z_corrected && s.kernel.kind().weight_kind() == WeightKind::InverseZ) {
            return Ok(None);
        }
        let h = s.kernel.effective_balancing(ln_gammas[slot]);
        states
            .iter()
            .zip(&caches)
            .map(|(x, c)| escape_probability_at(x, c, &s.target, &h))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    };
    let (z0, z1) = (z_of(0)?, z_of(1)?);
    let (b0, b1) = (slots[0].target.beta(), slots[1].target.beta());
    let mut accept = vec![0.0; n * n];
    for xi in 0..n {
        for xj in 0..n {
            let mut z = ZFactors::ONE;
            if let Some(z0) = &z0 {
                z.z_i_xi = z0[xi];
                z.z_i_xj = z0[xj];
            }
            if let Some(z1) = &z1 {
                z.z_j_xi = z1[xi];
                z.z_j_xj = z1[xj];
            }
            accept[xi * n + xj] = if z_corrected {
                swap_prob_z_corrected(log_pi[xi], log_pi[xj], b0, b1, &z)?
            } else {
                swap_prob_standard(log_pi[xi], log_pi[xj], b0, b1)
            };
        }
    }

    let mut v = vec![1.0 / (n * n) as f64; n * n];
    let mut tmp = vec![0.0; n * n];
    let mut moved = vec![0.0; n * n];
    let mut col_in = vec![0.0; n];
    let mut col_out = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        // slot 1 moves: for each x0, row block v[x0, ·] ← v[x0, ·] K1
        for x0 in 0..n {
            k1.apply(&v[x0 * n..(x0 + 1) * n], &mut tmp[x0 * n..(x0 + 1) * n]);
        }
        // slot 0 moves: for each x1, column v[·, x1] ← v[·, x1] K0
        for x1 in 0..n {
            for x0 in 0..n {
                col_in[x0] = tmp[x0 * n + x1];
            }
            k0.apply(&col_in, &mut col_out);
            for x0 in 0..n {
                moved[x0 * n + x1] = col_out[x0];
            }
        }
        // swap
        tmp.iter_mut().for_each(|t| *t = 0.0);
        for xi in 0..n {
            for xj in 0..n {
                let m = moved[xi * n + xj];
                let a = accept[xi * n + xj];
                tmp[xj * n + xi] += a * m;
                tmp[xi * n + xj] += (1.0 - a) * m;
            }
        }
        residual = 0.0;
        for (vi, t) in v.iter_mut().zip(&tmp) {
            let next = 0.5 * (*vi + t);
            residual += libm::fabs(t - *vi);
            *vi = next;
        }
        if residual < tolerance {
            break;
        }
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    Ok(PairOracle {
        stationary: v,
        residual,
        iterations,
    })
}

/// Product of the two slots' own stationary laws, indexed like
/// [`PairOracle::stationary`].
pub fn product_measure(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}
