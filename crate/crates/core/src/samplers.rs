//! Single-replica step kernels.
//!
//! | kind             | balancing       | weight         |
//! |------------------|-----------------|----------------|
//! | `Mh`             | `min{1,r}`      | 1              |
//! | `MhMult`         | `min{1,r}`      | `1 + G(Z)`     |
//! | `RfMh`           | `min{1,r}`      | `1/Z`          |
//! | `NaiveIit`       | unbounded (`√`) | `1/Z`          |
//! | `AIit`           | adaptive `h_γ`  | `1 + G(Z)`     |
//! | `AIitSqrtFast`   | adaptive `h_γ`  | `1 + G(Z)`     |
//! | `SsIit`          | adaptive `h_γ`  | 1              |
//!
//! A step is split in two: [`ReplicaState::draw`] computes the weight of the
//! current state and picks the next move without taking it, and
//! [`ReplicaState::apply`] takes it. The L0 budget procedure needs the split
//! because a truncated multiplicity keeps the chain where it is.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::balancing::{log_bound_statistic, Basis, BalancingSpec, BoundTrace};
use crate::rng::StreamRng;
use crate::target::{state_label, BinaryState, DistanceCache, TargetSpec};
use crate::{Error, Result};

/// The seven step kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Mh,
    MhMult,
    RfMh,
    NaiveIit,
    AIit,
    SsIit,
    AIitSqrtFast,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        SamplerKind::Mh,
        SamplerKind::MhMult,
        SamplerKind::RfMh,
        SamplerKind::NaiveIit,
        SamplerKind::AIit,
        SamplerKind::SsIit,
        SamplerKind::AIitSqrtFast,
    ];

    pub fn weight_kind(self) -> WeightKind {
        match self {
            SamplerKind::Mh | SamplerKind::SsIit => WeightKind::Unit,
            SamplerKind::MhMult | SamplerKind::AIit | SamplerKind::AIitSqrtFast => WeightKind::Multiplicity,
            SamplerKind::RfMh | SamplerKind::NaiveIit => WeightKind::InverseZ,
        }
    }

    /// Rejection-free kinds evaluate the whole neighborhood every step.
    pub fn is_rejection_free(self) -> bool {
        !matches!(self, SamplerKind::Mh | SamplerKind::SsIit)
    }

    /// Kinds whose bounding constant adapts.
    pub fn is_adaptive(self) -> bool {
        matches!(self, SamplerKind::AIit | SamplerKind::SsIit | SamplerKind::AIitSqrtFast)
    }

    pub fn tag(self) -> &'static str {
        match self {
            SamplerKind::Mh => "MH",
            SamplerKind::MhMult => "MH_MULT",
            SamplerKind::RfMh => "RF_MH",
            SamplerKind::NaiveIit => "NAIVE_IIT",
            SamplerKind::AIit => "A_IIT",
            SamplerKind::SsIit => "SS_IIT",
            SamplerKind::AIitSqrtFast => "A_IIT_SQRT_FAST",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.tag().eq_ignore_ascii_case(s) || k.tag().replace('_', "-").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown sampler kind {s:?}")))
    }
}

/// How a sample's weight enters the weighted estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Unit,
    Multiplicity,
    InverseZ,
}

/// A retained state with its estimator weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub state: BinaryState,
    pub weight: f64,
    pub kind: WeightKind,
}

/// Outcome of [`ReplicaState::draw`]: the current state's weight and the
/// chosen move (`None` for a rejection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub weight: f64,
    pub kind: WeightKind,
    pub flip: Option<usize>,
    /// Escape probability of the current state, for rejection-free kinds.
    pub escape: Option<f64>,
}

/// A sampler kind with the balancing function it runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    kind: SamplerKind,
    balancing: BalancingSpec,
    statistic: Basis,
}

impl Kernel {
    /// Validates the pairing of kind and balancing function.
    ///
    /// MH-family kinds always run `min{1,r}`; adaptive kinds need a bounded
    /// spec (the fast path a square-root basis). `statistic` is the basis of
    /// the bound statistic used to adapt `γ`.
    pub fn new(kind: SamplerKind, balancing: BalancingSpec, statistic: Basis) -> Result<Self> {
        match kind {
            SamplerKind::Mh | SamplerKind::MhMult | SamplerKind::RfMh => {
                if balancing != BalancingSpec::MIN {
                    return Err(Error::Domain(format!("{kind} runs min(1, r), got {balancing:?}")));
                }
            }
            SamplerKind::NaiveIit => {}
            SamplerKind::AIit | SamplerKind::SsIit => {
                if !balancing.is_bounded() {
                    return Err(Error::Domain(format!("{kind} needs a bounded balancing function")));
                }
            }
            SamplerKind::AIitSqrtFast => {
                if balancing.basis() != Some(Basis::Sqrt) {
                    return Err(Error::Domain(format!("{kind} needs the bounded square-root function")));
                }
            }
        }
        Ok(Self {
            kind,
            balancing,
            statistic,
        })
    }

    /// Kernel for `kind` given the configured informed balancing function:
    /// MH kinds get `min`, naive IIT the unbounded basis, adaptive kinds the
    /// bounded spec itself.
    pub fn for_kind(kind: SamplerKind, informed: BalancingSpec, statistic: Basis) -> Result<Self> {
        let balancing = match kind {
            SamplerKind::Mh | SamplerKind::MhMult | SamplerKind::RfMh => BalancingSpec::MIN,
            SamplerKind::NaiveIit => informed.unbounded_basis(),
            _ => informed,
        };
        Self::new(kind, balancing, statistic)
    }

    pub fn mh(kind: SamplerKind) -> Result<Self> {
        Self::new(kind, BalancingSpec::MIN, Basis::Sqrt)
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn balancing(&self) -> &BalancingSpec {
        &self.balancing
    }

    pub fn statistic(&self) -> Basis {
        self.statistic
    }

    /// Balancing function in effect for bounding constant `ln γ`.
    pub fn effective_balancing(&self, ln_gamma: f64) -> BalancingSpec {
        if self.kind.is_adaptive() {
            self.balancing.with_ln_gamma(ln_gamma)
        } else {
            self.balancing
        }
    }

    /// Exact transition probabilities out of `x` with `γ` fixed at
    /// `exp(ln_gamma)` (ignored by non-adaptive kinds). For rejection-free
    /// kinds this is the jump-chain row.
    pub fn transition_row(
        &self,
        target: &TargetSpec,
        x: &BinaryState,
        cache: &DistanceCache,
        ln_gamma: f64,
    ) -> Result<TransitionRow> {
        let p = target.dim();
        let ratios = target.neighbor_log_ratios(x, cache)?;
        let h = self.effective_balancing(ln_gamma);
        let hs: Vec<f64> = ratios.iter().map(|&l| libm::exp(h.log_eval(l))).collect();
        let sum: f64 = hs.iter().sum();
        if self.kind.is_rejection_free() {
            if !(sum > 0.0) {
                return Err(Error::AbsorbingState { state: state_label(x) });
            }
            Ok(TransitionRow {
                flips: hs.iter().map(|v| v / sum).collect(),
                stay: 0.0,
                escape: sum / p as f64,
            })
        } else {
            let flips: Vec<f64> = hs.iter().map(|v| v / p as f64).collect();
            let moved: f64 = flips.iter().sum();
            Ok(TransitionRow {
                flips,
                stay: (1.0 - moved).max(0.0),
                escape: moved,
            })
        }
    }
}

/// One row of an exact transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    /// Probability of moving to `flip(x, i)`.
    pub flips: Vec<f64>,
    pub stay: f64,
    /// `Z_h(x)` (for single-step kinds, the probability of leaving).
    pub escape: f64,
}

/// Per-replica counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplicaStats {
    /// Calls to `draw`.
    pub steps: u64,
    /// Rejection-free (full-neighborhood) steps.
    pub rejection_free_steps: u64,
    /// Target evaluations at neighbor states.
    pub evaluations: u64,
    /// Moves actually taken.
    pub moves: u64,
}

/// A chain's mutable state: position, cached distances, adaptive bound and
/// its own random stream.
#[derive(Debug, Clone)]
pub struct ReplicaState {
    x: BinaryState,
    cache: DistanceCache,
    bound: BoundTrace,
    rng: StreamRng,
    stats: ReplicaStats,
    log_ratios: Vec<f64>,
    weights: Vec<f64>,
}

impl ReplicaState {
    pub fn new(x: BinaryState, target: &TargetSpec, gamma0: f64, rng: StreamRng) -> Result<Self> {
        let cache = DistanceCache::new(&x, target)?;
        let p = x.dim();
        Ok(Self {
            x,
            cache,
            bound: BoundTrace::new(gamma0)?,
            rng,
            stats: ReplicaStats::default(),
            log_ratios: vec![0.0; p],
            weights: vec![0.0; p],
        })
    }

    /// Starts from a uniformly random state drawn from `rng`.
    pub fn random(target: &TargetSpec, gamma0: f64, mut rng: StreamRng) -> Result<Self> {
        let x = BinaryState::random(target.dim(), &mut rng);
        Self::new(x, target, gamma0, rng)
    }

    pub fn state(&self) -> &BinaryState {
        &self.x
    }

    pub fn cache(&self) -> &DistanceCache {
        &self.cache
    }

    pub fn bound(&self) -> &BoundTrace {
        &self.bound
    }

    pub fn bound_mut(&mut self) -> &mut BoundTrace {
        &mut self.bound
    }

    pub fn stats(&self) -> &ReplicaStats {
        &self.stats
    }

    pub(crate) fn stats_mut(&mut self) -> &mut ReplicaStats {
        &mut self.stats
    }

    pub fn rng_mut(&mut self) -> &mut StreamRng {
        &mut self.rng
    }

    /// Exchanges position and distance cache with another replica; bounds,
    /// streams and counters stay put.
    pub fn swap_states(&mut self, other: &mut ReplicaState) {
        core::mem::swap(&mut self.x, &mut other.x);
        core::mem::swap(&mut self.cache, &mut other.cache);
    }

    /// Moves to `x` (recomputing the cache).
    pub fn reset_state(&mut self, x: BinaryState, target: &TargetSpec) -> Result<()> {
        self.cache = DistanceCache::new(&x, target)?;
        self.x = x;
        Ok(())
    }

    /// `Z_h(x)` for the current state under `balancing` (no counters touched).
    pub fn escape_probability(&self, target: &TargetSpec, balancing: &BalancingSpec) -> Result<f64> {
        escape_probability_at(&self.x, &self.cache, target, balancing)
    }

    /// Weight of the current state and the next move, without moving.
    pub fn draw(&mut self, target: &TargetSpec, kernel: &Kernel) -> Result<Transition> {
        target.check_dim(&self.x)?;
        self.stats.steps += 1;
        match kernel.kind {
            SamplerKind::Mh => Ok(self.draw_metropolis(target)),
            SamplerKind::SsIit => Ok(self.draw_single_step(target, kernel)),
            _ => {
                self.fill_log_ratios(target);
                if kernel.kind.is_adaptive() {
                    self.adapt(kernel)?;
                }
                let (ln_z, total) = self.prepare(kernel)?;
                self.finish(ln_z, total, kernel.kind.weight_kind())
            }
        }
    }

    /// Exact jump distribution of a rejection-free kind at the current state
    /// and bounding constant, computed by the same code the sampler uses:
    /// `(Z, probabilities of flipping each coordinate)`. Counters and `γ` are
    /// left alone.
    pub fn jump_distribution(&mut self, target: &TargetSpec, kernel: &Kernel) -> Result<(f64, Vec<f64>)> {
        target.check_dim(&self.x)?;
        if !kernel.kind.is_rejection_free() {
            return Err(Error::Domain(format!("{} has no jump chain", kernel.kind)));
        }
        target.neighbor_log_ratios_into(&self.x, &self.cache, &mut self.log_ratios);
        let (ln_z, total) = self.prepare(kernel)?;
        Ok((libm::exp(ln_z), self.weights.iter().map(|w| w / total).collect()))
    }

    /// Raises `γ` with the bound statistic of the current state (no-op when
    /// frozen); no evaluations are counted.
    pub fn adapt_to_current(&mut self, target: &TargetSpec, kernel: &Kernel) -> Result<()> {
        target.check_dim(&self.x)?;
        target.neighbor_log_ratios_into(&self.x, &self.cache, &mut self.log_ratios);
        self.adapt(kernel)
    }

    /// Takes the move chosen by `draw` (no-op on a rejection).
    pub fn apply(&mut self, transition: &Transition, target: &TargetSpec) {
        if let Some(i) = transition.flip {
            self.cache.apply_flip(&self.x, i, target);
            self.x.flip(i);
            self.stats.moves += 1;
        }
    }

    /// `draw` followed by `apply`, returning the weighted current state.
    pub fn step(&mut self, target: &TargetSpec, kernel: &Kernel) -> Result<WeightedSample> {
        let t = self.draw(target, kernel)?;
        let sample = WeightedSample {
            state: self.x.clone(),
            weight: t.weight,
            kind: t.kind,
        };
        self.apply(&t, target);
        Ok(sample)
    }

    fn draw_metropolis(&mut self, target: &TargetSpec) -> Transition {
        let i = self.rng.gen_range(0..self.x.dim());
        let lr = target.neighbor_log_ratio(&self.x, &self.cache, i);
        self.stats.evaluations += 1;
        let u: f64 = self.rng.gen();
        let accept = u < libm::exp(lr.min(0.0));
        Transition {
            weight: 1.0,
            kind: WeightKind::Unit,
            flip: accept.then_some(i),
            escape: None,
        }
    }

    fn draw_single_step(&mut self, target: &TargetSpec, kernel: &Kernel) -> Transition {
        let i = self.rng.gen_range(0..self.x.dim());
        let lr = target.neighbor_log_ratio(&self.x, &self.cache, i);
        self.stats.evaluations += 1;
        if !self.bound.is_frozen() {
            self.bound.update_log(kernel.statistic.log_eval(libm::fabs(lr)));
        }
        let h = kernel.balancing.with_ln_gamma(self.bound.ln_gamma());
        let u: f64 = self.rng.gen();
        let accept = u < libm::exp(h.log_eval(lr));
        Transition {
            weight: 1.0,
            kind: WeightKind::Unit,
            flip: accept.then_some(i),
            escape: None,
        }
    }

    fn fill_log_ratios(&mut self, target: &TargetSpec) {
        target.neighbor_log_ratios_into(&self.x, &self.cache, &mut self.log_ratios);
        self.stats.evaluations += self.x.dim() as u64;
        self.stats.rejection_free_steps += 1;
    }

    fn adapt(&mut self, kernel: &Kernel) -> Result<()> {
        if !self.bound.is_frozen() {
            let ln_m = log_bound_statistic(&self.log_ratios, kernel.statistic)?;
            self.bound.update_log(ln_m);
        }
        Ok(())
    }

    /// Fills `weights` with the relative choice weights of a rejection-free
    /// kind; returns `(ln Z, Σ weights)`.
    fn prepare(&mut self, kernel: &Kernel) -> Result<(f64, f64)> {
        match kernel.kind {
            SamplerKind::AIit => {
                let h = kernel.balancing.with_ln_gamma(self.bound.ln_gamma());
                self.weigh(&h)
            }
            SamplerKind::AIitSqrtFast => self.prepare_sqrt_fast(kernel),
            _ => self.weigh(&kernel.balancing),
        }
    }

    /// Turns `log_ratios` into relative choice weights under `h`; returns
    /// `(ln Z, Σ weights)`.
    fn weigh(&mut self, h: &BalancingSpec) -> Result<(f64, f64)> {
        let mut lmax = f64::NEG_INFINITY;
        for (w, &l) in self.weights.iter_mut().zip(&self.log_ratios) {
            *w = h.log_eval(l);
            lmax = lmax.max(*w);
        }
        self.relative_weights(lmax)
    }

    fn relative_weights(&mut self, lmax: f64) -> Result<(f64, f64)> {
        if !lmax.is_finite() {
            return Err(Error::AbsorbingState { state: state_label(&self.x) });
        }
        let mut total = 0.0;
        for w in self.weights.iter_mut() {
            *w = libm::exp(*w - lmax);
            total += *w;
        }
        let ln_z = lmax + libm::log(total) - libm::log(self.x.dim() as f64);
        Ok((ln_z, total))
    }

    /// Square-root fast path: once `γ` covers every neighbor ratio,
    /// `h_γ(R) = √R/γ`, so the choice weights are `√R` and `Z = mean(√R)/γ`.
    fn prepare_sqrt_fast(&mut self, kernel: &Kernel) -> Result<(f64, f64)> {
        let ln_gamma = self.bound.ln_gamma();
        let widest = self.log_ratios.iter().fold(0.0f64, |a, &l| a.max(libm::fabs(l)));
        if 0.5 * widest > ln_gamma {
            // Frozen below the local statistic: the shortcut does not apply.
            let h = kernel.balancing.with_ln_gamma(ln_gamma);
            return self.weigh(&h);
        }
        let mut lmax = f64::NEG_INFINITY;
        for (w, &l) in self.weights.iter_mut().zip(&self.log_ratios) {
            *w = 0.5 * l;
            lmax = lmax.max(*w);
        }
        let (ln_mean_sqrt, total) = self.relative_weights(lmax)?;
        Ok((ln_mean_sqrt - ln_gamma, total))
    }

    fn finish(&mut self, ln_z: f64, total: f64, weight_kind: WeightKind) -> Result<Transition> {
        let z = libm::exp(ln_z);
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::AbsorbingState { state: state_label(&self.x) });
        }
        let weight = match weight_kind {
            WeightKind::Multiplicity => sample_multiplicity(z.min(1.0), &mut self.rng)? as f64,
            WeightKind::InverseZ => {
                let w = libm::exp(-ln_z);
                if !w.is_finite() {
                    return Err(Error::AbsorbingState { state: state_label(&self.x) });
                }
                w
            }
            WeightKind::Unit => 1.0,
        };
        let u: f64 = self.rng.gen();
        let flip = categorical(&self.weights, total, u);
        Ok(Transition {
            weight,
            kind: weight_kind,
            flip: Some(flip),
            escape: Some(z),
        })
    }
}

/// `Z_h(x) = (1/p)·Σ_i h(π^β(flip(x,i))/π^β(x))`.
pub fn escape_probability_at(
    x: &BinaryState,
    cache: &DistanceCache,
    target: &TargetSpec,
    balancing: &BalancingSpec,
) -> Result<f64> {
    target.check_dim(x)?;
    let p = x.dim();
    let d_min_ratios = target.neighbor_log_ratios(x, cache)?;
    let logs: Vec<f64> = d_min_ratios.iter().map(|&l| balancing.log_eval(l)).collect();
    let lmax = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lmax.is_finite() {
        return Err(Error::AbsorbingState { state: state_label(x) });
    }
    let total: f64 = logs.iter().map(|&l| libm::exp(l - lmax)).sum();
    let z = libm::exp(lmax + libm::log(total / p as f64));
    if !(z > 0.0) {
        return Err(Error::AbsorbingState { state: state_label(x) });
    }
    Ok(z)
}

/// `1 + G` with `P(G = k) = (1 − z)^k z`, by inversion:
/// `G = ⌊ln U / ln(1 − z)⌋`.
pub fn sample_multiplicity<R: Rng + ?Sized>(z: f64, rng: &mut R) -> Result<u64> {
    if !(z > 0.0 && z <= 1.0) {
        return Err(Error::Domain(format!("escape probability must lie in (0, 1], got {z}")));
    }
    if z == 1.0 {
        return Ok(1);
    }
    let u = 1.0 - rng.gen::<f64>();
    let g = libm::floor(libm::log(u) / libm::log1p(-z));
    // `as` saturates for astronomically small z.
    Ok((g as u64).saturating_add(1))
}

/// Index `i` with cumulative weight first exceeding `u·total`, scanning in
/// index order.
pub(crate) fn categorical(weights: &[f64], total: f64, u: f64) -> usize {
    let threshold = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if acc > threshold {
                return i;
            }
        }
    }
    last_positive
}
