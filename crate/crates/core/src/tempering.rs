//! Non-reversible parallel tempering.
//!
//! Slots are ordered coldest first (`β_0 > β_1 > …`). Each round every slot
//! advances one window (an L0 budget of original-chain samples for
//! multiplicity and unit-weight kinds, a fixed number of iterations for
//! inverse-Z kinds), then a DEO round attempts swaps on the pairs of the
//! round's parity. Swaps move states between slots; `β`, kernels, bounding
//! constants and random streams stay with the slot.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::balancing::{Basis, BalancingSpec};
use crate::diagnostics::{HitTime, RunSummary, TvdPoint, WeightedHistogram};
use crate::rng::{stream, StreamRng, COORDINATOR_STREAM};
use crate::samplers::{escape_probability_at, Kernel, ReplicaState, SamplerKind, WeightKind};
use crate::target::{exact_distribution, TargetSpec};
use crate::{Error, Result};

/// Largest dimension for which runs keep a full weighted histogram.
pub const TVD_DIM_CAP: usize = 20;

/// `min{1, exp((β_j − β_i)(log π(x_i) − log π(x_j)))}` from un-tempered
/// log densities.
pub fn swap_prob_standard(log_pi_i: f64, log_pi_j: f64, beta_i: f64, beta_j: f64) -> f64 {
    let l = (beta_j - beta_i) * (log_pi_i - log_pi_j);
    if l >= 0.0 {
        1.0
    } else {
        libm::exp(l)
    }
}

/// Escape probabilities entering the corrected swap: `z_i_xj` is slot `i`'s
/// `Z` evaluated at slot `j`'s state, and so on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZFactors {
    pub z_i_xi: f64,
    pub z_i_xj: f64,
    pub z_j_xi: f64,
    pub z_j_xj: f64,
}

impl ZFactors {
    pub const ONE: ZFactors = ZFactors {
        z_i_xi: 1.0,
        z_i_xj: 1.0,
        z_j_xi: 1.0,
        z_j_xj: 1.0,
    };
}

/// Swap probability for replicas whose stationary law is `Z·π^β`:
/// `min{1, Z_j(x_i)π_j(x_i)Z_i(x_j)π_i(x_j) / (Z_i(x_i)π_i(x_i)Z_j(x_j)π_j(x_j))}`.
pub fn swap_prob_z_corrected(log_pi_i: f64, log_pi_j: f64, beta_i: f64, beta_j: f64, z: &ZFactors) -> Result<f64> {
    for v in [z.z_i_xi, z.z_i_xj, z.z_j_xi, z.z_j_xj] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::AbsorbingState {
                state: format!("escape probability {v} in swap"),
            });
        }
    }
    let l = (beta_j - beta_i) * (log_pi_i - log_pi_j) + libm::log(z.z_j_xi) + libm::log(z.z_i_xj)
        - libm::log(z.z_i_xi)
        - libm::log(z.z_j_xj);
    Ok(if l >= 0.0 { 1.0 } else { libm::exp(l) })
}

/// Which swap probability a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapRule {
    Standard,
    ZCorrected,
    /// Corrected when any slot carries inverse-Z weights, standard otherwise.
    Auto,
}

impl SwapRule {
    pub fn tag(self) -> &'static str {
        match self {
            SwapRule::Standard => "standard",
            SwapRule::ZCorrected => "z_corrected",
            SwapRule::Auto => "auto",
        }
    }

    /// Whether the corrected probability applies to a ladder of `kinds`.
    pub fn resolve(self, kinds: &[SamplerKind]) -> bool {
        match self {
            SwapRule::Standard => false,
            SwapRule::ZCorrected => true,
            SwapRule::Auto => kinds.iter().any(|k| k.weight_kind() == WeightKind::InverseZ),
        }
    }
}

impl fmt::Display for SwapRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SwapRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SwapRule::Standard),
            "z_corrected" => Ok(SwapRule::ZCorrected),
            "auto" => Ok(SwapRule::Auto),
            _ => Err(Error::Domain(format!("unknown swap rule {s:?}"))),
        }
    }
}

/// Replays the budget procedure on a sequence of drawn multiplicities:
/// returns the recorded weights. A draw larger than the remaining budget is
/// cut to it and ends the window.
pub fn budget_truncate(l0: u64, draws: &[u64]) -> Vec<u64> {
    let mut remaining = l0;
    let mut out = Vec::new();
    for &m in draws {
        if remaining == 0 {
            break;
        }
        let w = m.min(remaining);
        out.push(w);
        remaining -= w;
    }
    out
}

/// What one replica did between two swap attempts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindowRecord {
    /// Sum of recorded weights.
    pub weight: f64,
    /// Calls to `draw`, including a truncated last one.
    pub draws: u64,
    /// Full-neighborhood steps among `draws`.
    pub rejection_free_steps: u64,
    pub evaluations: u64,
    /// The last multiplicity exceeded the remaining budget and its jump was
    /// dropped.
    pub truncated: bool,
}

/// Advances until the recorded weights sum to `l0`.
///
/// Each draw records `min(M, L)`. When `M > L` the pending jump is dropped
/// and the replica stays where it is; by memorylessness the next window's
/// fresh `1 + G` stands in for the unused part of the holding time. `sink`
/// sees the replica (at the sampled state) and the recorded weight.
pub fn advance_to_budget<F>(
    replica: &mut ReplicaState,
    target: &TargetSpec,
    kernel: &Kernel,
    l0: u64,
    mut sink: F,
) -> Result<WindowRecord>
where
    F: FnMut(&ReplicaState, f64),
{
    if kernel.kind().weight_kind() == WeightKind::InverseZ {
        return Err(Error::Domain(format!("{} has no multiplicity to budget", kernel.kind())));
    }
    let start = replica.stats().evaluations;
    let mut rec = WindowRecord::default();
    let mut remaining = l0;
    while remaining > 0 {
        let t = replica.draw(target, kernel)?;
        rec.draws += 1;
        if kernel.kind().is_rejection_free() {
            rec.rejection_free_steps += 1;
        }
        let m = t.weight as u64;
        if m > remaining {
            sink(replica, remaining as f64);
            rec.weight += remaining as f64;
            rec.truncated = true;
            remaining = 0;
        } else {
            sink(replica, m as f64);
            rec.weight += m as f64;
            remaining -= m;
            replica.apply(&t, target);
        }
    }
    rec.evaluations = replica.stats().evaluations - start;
    Ok(rec)
}

/// Takes `iterations` steps, recording every weight.
pub fn advance_iterations<F>(
    replica: &mut ReplicaState,
    target: &TargetSpec,
    kernel: &Kernel,
    iterations: u64,
    mut sink: F,
) -> Result<WindowRecord>
where
    F: FnMut(&ReplicaState, f64),
{
    let start = replica.stats().evaluations;
    let mut rec = WindowRecord::default();
    for _ in 0..iterations {
        let t = replica.draw(target, kernel)?;
        rec.draws += 1;
        if kernel.kind().is_rejection_free() {
            rec.rejection_free_steps += 1;
        }
        sink(replica, t.weight);
        rec.weight += t.weight;
        replica.apply(&t, target);
    }
    rec.evaluations = replica.stats().evaluations - start;
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_round(round: u64) -> Self {
        if round.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Lower indices `i` of the pairs `(i, i+1)` attempted under `parity` with
/// `replicas` slots.
pub fn deo_pairs(replicas: usize, parity: Parity) -> impl Iterator<Item = usize> {
    let first = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    (first..replicas.saturating_sub(1)).step_by(2)
}

/// One attempted swap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapRecord {
    pub round: u64,
    /// Lower slot index; the pair is `(pair, pair + 1)`.
    pub pair: usize,
    pub parity: Parity,
    pub probability: f64,
    pub accepted: bool,
    /// Un-tempered `log π` of the two states before the attempt.
    pub log_pi_lower: f64,
    pub log_pi_upper: f64,
}

/// A slot's fixed ingredients: its tempered target and kernel.
#[derive(Debug, Clone)]
pub struct SlotSpec {
    pub target: TargetSpec,
    pub kernel: Kernel,
}

impl SlotSpec {
    /// `Z` of this slot at an arbitrary replica's state, or 1 when the slot
    /// does not need the correction.
    fn z_factor(&self, own: &ReplicaState, at: &ReplicaState) -> Result<Option<f64>> {
        if self.kernel.kind().weight_kind() != WeightKind::InverseZ {
            return Ok(None);
        }
        let h = self.kernel.effective_balancing(own.bound().ln_gamma());
        escape_probability_at(at.state(), at.cache(), &self.target, &h).map(Some)
    }
}

/// Attempts swaps on the pairs of `round`'s parity, in increasing order.
///
/// With `z_corrected`, slots whose kind carries inverse-Z weights contribute
/// their escape probabilities; each such slot is charged `2p` evaluations
/// per attempt.
pub fn deo_round(
    replicas: &mut [ReplicaState],
    slots: &[SlotSpec],
    z_corrected: bool,
    round: u64,
    rng: &mut StreamRng,
) -> Result<Vec<SwapRecord>> {
    if replicas.len() != slots.len() {
        return Err(Error::InvalidLadder(format!(
            "{} replicas for {} slots",
            replicas.len(),
            slots.len()
        )));
    }
    let parity = Parity::of_round(round);
    let mut records = Vec::new();
    for i in deo_pairs(replicas.len(), parity) {
        let (lo, hi) = replicas.split_at_mut(i + 1);
        let (a, b) = (&mut lo[i], &mut hi[0]);
        let (si, sj) = (&slots[i], &slots[i + 1]);
        let log_pi_i = si.target.log_base_cached(a.cache());
        let log_pi_j = sj.target.log_base_cached(b.cache());
        let (beta_i, beta_j) = (si.target.beta(), sj.target.beta());
        let probability = if z_corrected {
            let mut z = ZFactors::ONE;
            let p = a.state().dim() as u64;
            if let (Some(ii), Some(ij)) = (si.z_factor(a, a)?, si.z_factor(a, b)?) {
                z.z_i_xi = ii;
                z.z_i_xj = ij;
                a.stats_mut().evaluations += 2 * p;
            }
            if let (Some(ji), Some(jj)) = (sj.z_factor(b, a)?, sj.z_factor(b, b)?) {
                z.z_j_xi = ji;
                z.z_j_xj = jj;
                b.stats_mut().evaluations += 2 * p;
            }
            swap_prob_z_corrected(log_pi_i, log_pi_j, beta_i, beta_j, &z)?
        } else {
            swap_prob_standard(log_pi_i, log_pi_j, beta_i, beta_j)
        };
        let u: f64 = rng.gen();
        let accepted = u < probability;
        if accepted {
            a.swap_states(b);
        }
        records.push(SwapRecord {
            round,
            pair: i,
            parity,
            probability,
            accepted,
            log_pi_lower: log_pi_i,
            log_pi_upper: log_pi_j,
        });
    }
    Ok(records)
}

/// How a slot spends the time between swap attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Budget(u64),
    Iterations(u64),
}

/// Temperatures, per-slot kinds and window sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaLadder {
    betas: Vec<f64>,
    kinds: Vec<SamplerKind>,
    l0: u64,
    iters_between_swaps: u64,
}

impl ReplicaLadder {
    /// Checks: at least one slot, `β` finite, non-negative and strictly
    /// decreasing, one kind per slot, positive window sizes, and
    /// rejection-free kinds occupying the coldest slots.
    pub fn new(betas: Vec<f64>, kinds: Vec<SamplerKind>, l0: u64, iters_between_swaps: u64) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidLadder("no replicas".into()));
        }
        if betas.len() != kinds.len() {
            return Err(Error::InvalidLadder(format!(
                "{} betas but {} kinds",
                betas.len(),
                kinds.len()
            )));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidLadder(format!("beta {b} is not a finite non-negative number")));
        }
        if let Some(w) = betas.windows(2).find(|w| w[0] <= w[1]) {
            return Err(Error::InvalidLadder(format!(
                "betas must be strictly decreasing, found {} then {}",
                w[0], w[1]
            )));
        }
        if kinds
            .windows(2)
            .any(|w| !w[0].is_rejection_free() && w[1].is_rejection_free())
        {
            return Err(Error::InvalidLadder(
                "rejection-free kinds must occupy the coldest slots".into(),
            ));
        }
        if l0 == 0 || iters_between_swaps == 0 {
            return Err(Error::InvalidLadder("L0 and iters_between_swaps must be positive".into()));
        }
        Ok(Self {
            betas,
            kinds,
            l0,
            iters_between_swaps,
        })
    }

    /// Same kind in every slot.
    pub fn uniform(betas: Vec<f64>, kind: SamplerKind, l0: u64, iters_between_swaps: u64) -> Result<Self> {
        let kinds = vec![kind; betas.len()];
        Self::new(betas, kinds, l0, iters_between_swaps)
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn kinds(&self) -> &[SamplerKind] {
        &self.kinds
    }

    pub fn l0(&self) -> u64 {
        self.l0
    }

    pub fn iters_between_swaps(&self) -> u64 {
        self.iters_between_swaps
    }

    pub fn rf_replica_count(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_rejection_free()).count()
    }

    pub fn window(&self, slot: usize) -> Window {
        match self.kinds[slot].weight_kind() {
            WeightKind::InverseZ => Window::Iterations(self.iters_between_swaps),
            _ => Window::Budget(self.l0),
        }
    }
}

/// Informed balancing function plus adaptation policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancingConfig {
    /// Balancing function of the informed kinds; its `γ` is the initial
    /// bounding constant.
    pub spec: BalancingSpec,
    /// Basis of the adaptation statistic.
    pub statistic: Basis,
    pub adapt: bool,
    pub freeze_after_burnin: bool,
}

impl Default for BalancingConfig {
    fn default() -> Self {
        Self {
            spec: BalancingSpec::bounded(Basis::Sqrt, 1.0).expect("gamma 1 is valid"),
            statistic: Basis::Sqrt,
            adapt: true,
            freeze_after_burnin: false,
        }
    }
}

/// Burn-in thresholds: cumulative multiplicity for budgeted slots, iterations
/// for inverse-Z slots. The run burns in for as many rounds as the slowest
/// slot needs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Burnin {
    pub multiplicity: u64,
    pub iterations: u64,
}

/// Everything [`run_pt`] needs.
#[derive(Debug, Clone)]
pub struct PtConfig {
    /// Un-tempered target (`β` is taken from the ladder).
    pub target: TargetSpec,
    pub ladder: ReplicaLadder,
    pub balancing: BalancingConfig,
    pub swap_rule: SwapRule,
    /// Rounds after burn-in.
    pub rounds: u64,
    pub burnin: Burnin,
    pub seed: u64,
    pub record_swaps: bool,
    pub record_windows: bool,
    /// Track the cold slot's weighted histogram and TVD (only for
    /// `p ≤ TVD_DIM_CAP`).
    pub track_tvd: bool,
    /// Ratio between consecutive TVD checkpoints (in recorded rounds).
    pub tvd_growth: f64,
    /// End the run once the cold slot has visited every mode.
    pub stop_when_all_found: bool,
}

impl PtConfig {
    pub fn new(target: TargetSpec, ladder: ReplicaLadder, balancing: BalancingConfig) -> Self {
        Self {
            target,
            ladder,
            balancing,
            swap_rule: SwapRule::Auto,
            rounds: 100,
            burnin: Burnin::default(),
            seed: 0,
            record_swaps: false,
            record_windows: false,
            track_tvd: true,
            tvd_growth: 1.5,
            stop_when_all_found: false,
        }
    }

    /// Number of rounds spent in burn-in.
    pub fn burnin_rounds(&self) -> u64 {
        (0..self.ladder.len())
            .map(|k| match self.ladder.window(k) {
                Window::Budget(l0) => self.burnin.multiplicity.div_ceil(l0),
                Window::Iterations(n) => self.burnin.iterations.div_ceil(n),
            })
            .max()
            .unwrap_or(0)
    }

    /// Tempered target and kernel of every slot; fails on an invalid pairing
    /// of kind and balancing function.
    pub fn slot_specs(&self) -> Result<Vec<SlotSpec>> {
        self.ladder
            .betas
            .iter()
            .zip(&self.ladder.kinds)
            .map(|(&beta, &kind)| {
                Ok(SlotSpec {
                    target: self.target.with_beta(beta)?,
                    kernel: Kernel::for_kind(kind, self.balancing.spec, self.balancing.statistic)?,
                })
            })
            .collect()
    }

    /// Fresh replicas: slot `k` draws its start and all later randomness
    /// from stream `k` of the seed.
    pub fn initial_replicas(&self) -> Result<Vec<ReplicaState>> {
        let gamma0 = self.balancing.spec.gamma();
        (0..self.ladder.len())
            .map(|k| {
                let mut r = ReplicaState::random(&self.target, gamma0, stream(self.seed, k as u64))?;
                if !self.balancing.adapt {
                    r.bound_mut().freeze();
                }
                Ok(r)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.slot_specs()?;
        if !(self.tvd_growth > 1.0) {
            return Err(Error::Domain(format!("tvd_growth must exceed 1, got {}", self.tvd_growth)));
        }
        if self.target.beta() != 1.0 {
            return Err(Error::InvalidTarget("run targets are given un-tempered (beta = 1)".into()));
        }
        Ok(())
    }
}

/// Runs per-slot work between barriers. Implementations may run the slots
/// concurrently; results come back in slot order.
pub trait Executor {
    fn map_slots<T, R, F>(&self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send;
}

/// Runs slots one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_slots<T, R, F>(&self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        items.iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Source of elapsed wall-clock seconds, if any.
pub trait Clock {
    fn seconds(&self) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> Option<f64> {
        None
    }
}

struct SlotOutcome {
    record: WindowRecord,
    modes_seen: Vec<usize>,
    samples: Vec<(u64, f64)>,
}

fn advance_slot(
    replica: &mut ReplicaState,
    spec: &SlotSpec,
    window: Window,
    observe: bool,
    histogram: bool,
) -> Result<SlotOutcome> {
    let mut modes_seen: Vec<usize> = Vec::new();
    let mut samples = Vec::new();
    let mut see = |r: &ReplicaState| {
        if let Some(m) = r.cache().mode_hit() {
            if !modes_seen.contains(&m) {
                modes_seen.push(m);
            }
        }
    };
    let sink = |r: &ReplicaState, w: f64| {
        if observe {
            see(r);
            if histogram {
                samples.push((r.state().index(), w));
            }
        }
    };
    let record = match window {
        Window::Budget(l0) => advance_to_budget(replica, &spec.target, &spec.kernel, l0, sink)?,
        Window::Iterations(n) => advance_iterations(replica, &spec.target, &spec.kernel, n, sink)?,
    };
    if observe {
        see(replica);
    }
    Ok(SlotOutcome {
        record,
        modes_seen,
        samples,
    })
}

/// Runs the tempering scheme described by `config`.
///
/// Hit times use round-end clocks: a mode seen by the cold slot during
/// round `k` is stamped with sweep `k + 1` and the total evaluation count of
/// all slots after the window (states swapped into the cold slot are stamped
/// after the swap round).
pub fn run_pt<E: Executor, C: Clock>(config: &PtConfig, exec: &E, clock: &C) -> Result<RunSummary> {
    config.validate()?;
    let specs = config.slot_specs()?;
    let mut replicas = config.initial_replicas()?;
    let r = replicas.len();
    let ladder = &config.ladder;
    let z_corrected = config.swap_rule.resolve(ladder.kinds());
    let burnin_rounds = config.burnin_rounds();
    let total_rounds = burnin_rounds + config.rounds;
    let num_modes = config.target.num_modes();

    let exact = if config.track_tvd && config.target.dim() <= TVD_DIM_CAP {
        Some(exact_distribution(&specs[0].target)?)
    } else {
        None
    };
    let mut hist = exact.as_ref().map(|e| WeightedHistogram::new(e.dim()));
    let mut coordinator = stream(config.seed, COORDINATOR_STREAM);

    let mut summary = RunSummary::new(r, num_modes);
    summary.burnin_rounds = burnin_rounds;
    summary.z_corrected = z_corrected;
    let mut next_checkpoint = 1u64;
    let total_evals = |reps: &[ReplicaState]| reps.iter().map(|x| x.stats().evaluations).sum::<u64>();

    let stamp = |summary: &mut RunSummary, mode: usize, sweep: u64, evaluations: u64, clock: &C| {
        if summary.hits[mode].is_none() {
            summary.hits[mode] = Some(HitTime {
                sweep,
                evaluations,
                seconds: clock.seconds(),
            });
        }
    };

    // The starting state counts as visited at time zero.
    if let Some(m) = replicas[0].cache().mode_hit() {
        stamp(&mut summary, m, 0, 0, clock);
    }

    for round in 0..total_rounds {
        let recording = round >= burnin_rounds;
        if round == burnin_rounds && config.balancing.freeze_after_burnin {
            for rep in &mut replicas {
                rep.bound_mut().freeze();
            }
        }
        let track_hist = recording && hist.is_some();
        let outcomes = exec.map_slots(&mut replicas, |k, rep| {
            advance_slot(rep, &specs[k], ladder.window(k), k == 0, k == 0 && track_hist)
        });
        let evals_now = total_evals(&replicas);
        for (k, outcome) in outcomes.into_iter().enumerate() {
            let outcome = outcome?;
            if k == 0 {
                for &m in &outcome.modes_seen {
                    stamp(&mut summary, m, round + 1, evals_now, clock);
                }
                if let Some(h) = hist.as_mut() {
                    for &(idx, w) in &outcome.samples {
                        h.add(idx, w);
                    }
                }
            }
            let slot = &mut summary.slots[k];
            slot.windows += 1;
            slot.weight += outcome.record.weight;
            if recording {
                slot.recorded_windows += 1;
                slot.recorded_rf_steps += outcome.record.rejection_free_steps;
                slot.recorded_draws += outcome.record.draws;
                slot.recorded_weight += outcome.record.weight;
            }
            if config.record_windows {
                summary.windows.push((round, k, outcome.record));
            }
        }

        if recording {
            let done = round + 1 - burnin_rounds;
            if let (Some(h), Some(e)) = (hist.as_ref(), exact.as_ref()) {
                if done >= next_checkpoint || round + 1 == total_rounds {
                    summary.tvd_curve.push(TvdPoint {
                        round: round + 1,
                        evaluations: evals_now,
                        tvd: h.tvd(e)?,
                    });
                    while next_checkpoint <= done {
                        next_checkpoint = (libm::ceil(next_checkpoint as f64 * config.tvd_growth) as u64)
                            .max(next_checkpoint + 1);
                    }
                }
            }
        }

        if r > 1 {
            let swaps = deo_round(&mut replicas, &specs, z_corrected, round, &mut coordinator)?;
            for s in &swaps {
                let pair = &mut summary.swap_stats[s.pair];
                pair.attempts += 1;
                pair.accepted += s.accepted as u64;
                pair.probability_sum += s.probability;
            }
            if config.record_swaps {
                summary.swaps.extend(swaps);
            }
            if let Some(m) = replicas[0].cache().mode_hit() {
                let evals = total_evals(&replicas);
                stamp(&mut summary, m, round + 1, evals, clock);
            }
        }
        summary.rounds_run = round + 1;
        if config.stop_when_all_found && summary.all_found().is_some() {
            break;
        }
    }

    for pair in summary.swap_stats.iter_mut() {
        pair.rounds = summary.rounds_run;
    }
    for (slot, rep) in summary.slots.iter_mut().zip(&replicas) {
        slot.gamma_final = rep.bound().gamma();
        slot.gamma_updates = rep.bound().history().len() as u64 - 1;
        slot.evaluations = rep.stats().evaluations;
        slot.steps = rep.stats().steps;
        slot.moves = rep.stats().moves;
        slot.rejection_free_steps = rep.stats().rejection_free_steps;
    }
    summary.cold_histogram = hist;
    Ok(summary)
}

/// [`run_pt`] on the calling thread without a clock.
pub fn run_pt_sequential(config: &PtConfig) -> Result<RunSummary> {
    run_pt(config, &Sequential, &NoClock)
}

/// Short description of a ladder, e.g. `A_IIT x4`.
pub fn ladder_label(ladder: &ReplicaLadder) -> String {
    let mut parts: Vec<(SamplerKind, usize)> = Vec::new();
    for &k in ladder.kinds() {
        match parts.last_mut() {
            Some((last, n)) if *last == k => *n += 1,
            _ => parts.push((k, 1)),
        }
    }
    let mut s = String::new();
    for (i, (k, n)) in parts.iter().enumerate() {
        if i > 0 {
            s.push('+');
        }
        s.push_str(&format!("{k}x{n}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{BinaryState, ModePattern};

    fn bimodal(p: usize, theta: f64) -> TargetSpec {
        TargetSpec::new(ModePattern::Alternating.modes(p).unwrap(), theta).unwrap()
    }

    #[test]
    fn standard_swap_examples() {
        assert_eq!(swap_prob_standard(-3.0, -3.0, 1.0, 0.5), 1.0);
        // cold slot holds the better state
        let p = swap_prob_standard(-1.0, -5.0, 1.0, 0.5);
        assert!((p - libm::exp(-0.5 * 4.0)).abs() < 1e-15);
        let back = swap_prob_standard(-5.0, -1.0, 1.0, 0.5);
        assert_eq!(back, 1.0);
        let ratio = |a: f64, b: f64| libm::exp((0.5 - 1.0) * (a - b));
        assert!((ratio(-1.0, -5.0) * ratio(-5.0, -1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corrected_swap_reduces_to_standard_with_unit_factors() {
        for (a, b) in [(-1.0, -2.5), (-4.0, 0.0), (0.0, 0.0)] {
            let s = swap_prob_standard(a, b, 0.9, 0.3);
            let z = swap_prob_z_corrected(a, b, 0.9, 0.3, &ZFactors::ONE).unwrap();
            assert!((s - z).abs() < 1e-15);
        }
        let bad = ZFactors { z_i_xi: 0.0, ..ZFactors::ONE };
        assert!(swap_prob_z_corrected(0.0, 0.0, 1.0, 0.5, &bad).is_err());
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(budget_truncate(5, &[3, 4]), vec![3, 2]);
        assert_eq!(budget_truncate(5, &[5, 9]), vec![5]);
        assert_eq!(budget_truncate(3, &[1, 1, 1, 1]), vec![1, 1, 1]);
        assert_eq!(budget_truncate(4, &[10]), vec![4]);
    }

    #[test]
    fn pairs_by_parity() {
        assert_eq!(deo_pairs(4, Parity::Even).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(deo_pairs(4, Parity::Odd).collect::<Vec<_>>(), vec![1]);
        assert_eq!(deo_pairs(5, Parity::Odd).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(deo_pairs(2, Parity::Even).collect::<Vec<_>>(), vec![0]);
        assert_eq!(deo_pairs(2, Parity::Odd).count(), 0);
        assert_eq!(deo_pairs(1, Parity::Even).count(), 0);
    }

    #[test]
    fn ladder_validation() {
        use SamplerKind::*;
        assert!(ReplicaLadder::new(vec![1.0, 0.5], vec![AIit, SsIit], 10, 1).is_ok());
        assert!(ReplicaLadder::new(vec![1.0, 0.5], vec![SsIit, AIit], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![0.5, 1.0], vec![AIit, AIit], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![1.0, 1.0], vec![AIit, AIit], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![1.0, -0.1], vec![AIit, AIit], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![1.0], vec![AIit, AIit], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![], vec![], 10, 1).is_err());
        assert!(ReplicaLadder::new(vec![1.0], vec![Mh], 0, 1).is_err());
        let l = ReplicaLadder::new(vec![1.0, 0.5, 0.2], vec![RfMh, AIit, SsIit], 10, 3).unwrap();
        assert_eq!(l.rf_replica_count(), 2);
        assert_eq!(l.window(0), Window::Iterations(3));
        assert_eq!(l.window(1), Window::Budget(10));
        assert_eq!(ladder_label(&l), "RF_MHx1+A_IITx1+SS_IITx1");
    }

    #[test]
    fn unit_kind_budget_gives_l0_samples() {
        let t = bimodal(12, 1.0);
        let k = Kernel::for_kind(
            SamplerKind::SsIit,
            BalancingSpec::bounded(Basis::Sqrt, 1.0).unwrap(),
            Basis::Sqrt,
        )
        .unwrap();
        let mut r = ReplicaState::random(&t, 1.0, stream(1, 0)).unwrap();
        let mut n = 0;
        let rec = advance_to_budget(&mut r, &t, &k, 800, |_, w| {
            assert_eq!(w, 1.0);
            n += 1;
        })
        .unwrap();
        assert_eq!(n, 800);
        assert_eq!(rec.weight, 800.0);
        assert_eq!(rec.evaluations, 800);
        assert!(!rec.truncated);
    }

    #[test]
    fn inverse_z_kinds_refuse_budgets() {
        let t = bimodal(6, 1.0);
        let k = Kernel::mh(SamplerKind::RfMh).unwrap();
        let mut r = ReplicaState::random(&t, 1.0, stream(1, 0)).unwrap();
        assert!(advance_to_budget(&mut r, &t, &k, 10, |_, _| {}).is_err());
    }

    #[test]
    fn flat_target_swaps_always_accepted() {
        let t = TargetSpec::new(vec![BinaryState::zeros(6)], 0.0).unwrap();
        let ladder = ReplicaLadder::uniform(vec![1.0, 0.6, 0.3, 0.1], SamplerKind::Mh, 5, 1).unwrap();
        let mut cfg = PtConfig::new(t, ladder, BalancingConfig::default());
        cfg.rounds = 2000;
        cfg.track_tvd = false;
        let s = run_pt_sequential(&cfg).unwrap();
        for pair in &s.swap_stats {
            assert!(pair.attempts > 0);
            assert_eq!(pair.accepted, pair.attempts);
        }
    }

    #[test]
    fn parity_alternates_and_no_slot_swaps_twice() {
        let t = bimodal(8, 1.0);
        let ladder = ReplicaLadder::uniform(vec![1.0, 0.7, 0.4, 0.2, 0.1], SamplerKind::MhMult, 20, 1).unwrap();
        let mut cfg = PtConfig::new(t, ladder, BalancingConfig::default());
        cfg.rounds = 50;
        cfg.record_swaps = true;
        let s = run_pt_sequential(&cfg).unwrap();
        for round in 0..50u64 {
            let rs: Vec<_> = s.swaps.iter().filter(|x| x.round == round).collect();
            let mut used = [false; 5];
            for x in &rs {
                assert_eq!(x.parity, Parity::of_round(round));
                assert!(!used[x.pair] && !used[x.pair + 1]);
                used[x.pair] = true;
                used[x.pair + 1] = true;
            }
        }
    }

    #[test]
    fn swap_records_match_recomputation() {
        let t = bimodal(10, 2.0);
        let ladder = ReplicaLadder::uniform(vec![1.0, 0.5, 0.25], SamplerKind::AIit, 50, 1).unwrap();
        let mut cfg = PtConfig::new(t, ladder.clone(), BalancingConfig::default());
        cfg.rounds = 40;
        cfg.record_swaps = true;
        let s = run_pt_sequential(&cfg).unwrap();
        for x in &s.swaps {
            let b = ladder.betas();
            let p = swap_prob_standard(x.log_pi_lower, x.log_pi_upper, b[x.pair], b[x.pair + 1]);
            assert_eq!(p, x.probability);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let t = bimodal(10, 2.0);
        let ladder = ReplicaLadder::uniform(vec![1.0, 0.5, 0.25], SamplerKind::AIit, 50, 1).unwrap();
        let mut cfg = PtConfig::new(t, ladder, BalancingConfig::default());
        cfg.rounds = 30;
        cfg.seed = 17;
        cfg.record_swaps = true;
        let a = run_pt_sequential(&cfg).unwrap();
        let b = run_pt_sequential(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_kernel_pairing_fails_before_work() {
        let t = bimodal(6, 1.0);
        let ladder = ReplicaLadder::uniform(vec![1.0], SamplerKind::AIit, 5, 1).unwrap();
        let bal = BalancingConfig {
            spec: BalancingSpec::SQRT,
            ..BalancingConfig::default()
        };
        assert!(run_pt_sequential(&PtConfig::new(t, ladder, bal)).is_err());
    }

    #[test]
    fn burnin_rounds_take_the_slowest_slot() {
        let t = bimodal(6, 1.0);
        let ladder = ReplicaLadder::new(
            vec![1.0, 0.5],
            vec![SamplerKind::RfMh, SamplerKind::Mh],
            100,
            4,
        )
        .unwrap();
        let mut cfg = PtConfig::new(t, ladder, BalancingConfig::default());
        cfg.burnin = Burnin {
            multiplicity: 250,
            iterations: 10,
        };
        assert_eq!(cfg.burnin_rounds(), 3);
    }
}
