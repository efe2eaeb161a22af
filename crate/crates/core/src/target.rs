//! Binary states and the mixture-of-modes target
//! `π(x) ∝ Σ_j exp(-θ·‖x − x_(j)‖₁)`, optionally tempered by `β`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::math::{log_add_exp, log_sum_exp, NeumaierSum};
use crate::{Error, Result};

const WORD_BITS: usize = 64;

/// Largest dimension [`exact_distribution`] will enumerate.
pub const EXACT_DIM_CAP: usize = 22;

/// A point of `{0,1}^p`, packed into 64-bit words.
///
/// Coordinate `k` lives in bit `k % 64` of word `k / 64`; bits past `p - 1`
/// are always zero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinaryState {
    words: Vec<u64>,
    dim: usize,
}

impl BinaryState {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "binary state needs at least one coordinate");
        Self {
            words: vec![0; dim.div_ceil(WORD_BITS)],
            dim,
        }
    }

    pub fn ones(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.clear_padding();
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// State whose coordinate `k` is bit `k` of `index` (`dim ≤ 64`).
    pub fn from_index(dim: usize, index: u64) -> Self {
        assert!(dim <= WORD_BITS, "from_index supports dim <= 64");
        let mut s = Self::zeros(dim);
        s.words[0] = index;
        s.clear_padding();
        s
    }

    /// Uniformly random state.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(dim);
        for w in &mut s.words {
            *w = rng.next_u64();
        }
        s.clear_padding();
        s
    }

    /// Enumeration index (inverse of [`BinaryState::from_index`]).
    pub fn index(&self) -> u64 {
        assert!(self.dim <= WORD_BITS, "index() supports dim <= 64");
        self.words[0]
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.dim);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.dim, "coordinate {i} out of range for dim {}", self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.dim, "coordinate {i} out of range for dim {}", self.dim);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Copy with coordinate `i` flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hamming (L1) distance.
    pub fn hamming(&self, other: &BinaryState) -> usize {
        debug_assert_eq!(self.dim, other.dim);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// True when no bit beyond `dim - 1` is set.
    pub fn is_canonical(&self) -> bool {
        let rem = self.dim % WORD_BITS;
        rem == 0 || self.words[self.words.len() - 1] >> rem == 0
    }

    fn clear_padding(&mut self) {
        let rem = self.dim % WORD_BITS;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }
}

/// Bit-strings list coordinates in order, coordinate 0 first.
impl fmt::Display for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryState({self})")
    }
}

impl FromStr for BinaryState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidTarget("empty bit-string".into()));
        }
        let mut state = BinaryState::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => state.set(i, true),
                other => {
                    return Err(Error::InvalidTarget(format!(
                        "bit-string contains {other:?} at position {i}"
                    )))
                }
            }
        }
        Ok(state)
    }
}

/// Hamming distances from one state to every mode of a target.
///
/// Kept alongside a replica's state and updated in `O(m)` per accepted flip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceCache {
    distances: Vec<u32>,
}

impl DistanceCache {
    pub fn new(x: &BinaryState, target: &TargetSpec) -> Result<Self> {
        target.check_dim(x)?;
        Ok(Self {
            distances: target.modes.iter().map(|m| x.hamming(m) as u32).collect(),
        })
    }

    #[inline]
    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    /// Index of the first mode at distance zero, if any.
    pub fn mode_hit(&self) -> Option<usize> {
        self.distances.iter().position(|&d| d == 0)
    }

    /// Applies the distance change of flipping coordinate `i` of `x`.
    /// Must be called with `x` as it is *before* the flip.
    #[inline]
    pub fn apply_flip(&mut self, x: &BinaryState, i: usize, target: &TargetSpec) {
        let bit = x.get(i);
        for (d, mode) in self.distances.iter_mut().zip(target.modes.iter()) {
            if mode.get(i) == bit {
                *d += 1;
            } else {
                *d -= 1;
            }
        }
    }

    pub fn is_consistent(&self, x: &BinaryState, target: &TargetSpec) -> bool {
        self.distances.len() == target.modes.len()
            && self
                .distances
                .iter()
                .zip(target.modes.iter())
                .all(|(&d, m)| d as usize == x.hamming(m))
    }
}

/// The mixture-of-modes target with sharpness `θ` and inverse temperature `β`.
///
/// Modes are shared behind an `Arc`, so tempered copies are cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    modes: Arc<[BinaryState]>,
    theta: f64,
    beta: f64,
}

impl TargetSpec {
    pub fn new(modes: Vec<BinaryState>, theta: f64) -> Result<Self> {
        let Some(first) = modes.first() else {
            return Err(Error::InvalidTarget("at least one mode is required".into()));
        };
        let dim = first.dim();
        if let Some(bad) = modes.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidTarget(format!(
                "theta must be finite and nonnegative, got {theta}"
            )));
        }
        Ok(Self {
            modes: modes.into(),
            theta,
            beta: 1.0,
        })
    }

    /// Same modes and `θ`, tempered by `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidTarget(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        Ok(Self {
            modes: self.modes.clone(),
            theta: self.theta,
            beta,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.modes[0].dim()
    }

    pub fn modes(&self) -> &[BinaryState] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub(crate) fn check_dim(&self, x: &BinaryState) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Un-normalized, un-tempered `log π(x)` from cached distances.
    #[inline]
    pub fn log_base_cached(&self, cache: &DistanceCache) -> f64 {
        let theta = self.theta;
        log_sum_exp(cache.distances.iter().map(move |&d| -theta * d as f64))
    }

    /// Un-normalized, un-tempered `log π(x)`.
    pub fn log_base(&self, x: &BinaryState) -> Result<f64> {
        self.check_dim(x)?;
        let theta = self.theta;
        Ok(log_sum_exp(
            self.modes.iter().map(move |m| -theta * x.hamming(m) as f64),
        ))
    }

    /// `β · log π(x)`, un-normalized.
    pub fn log_target(&self, x: &BinaryState) -> Result<f64> {
        Ok(self.beta * self.log_base(x)?)
    }

    /// Tempered log ratio `log π^β(flip(x, i)) − log π^β(x)` for one
    /// coordinate, using the cached distances (`O(m)`).
    #[inline]
    pub fn neighbor_log_ratio(&self, x: &BinaryState, cache: &DistanceCache, i: usize) -> f64 {
        let d_min = cache.distances.iter().copied().min().unwrap_or(0);
        self.neighbor_log_ratio_with_min(x, cache, i, d_min)
    }

    #[inline]
    fn neighbor_log_ratio_with_min(
        &self,
        x: &BinaryState,
        cache: &DistanceCache,
        i: usize,
        d_min: u32,
    ) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let theta = self.theta;
        let bit = x.get(i);
        if self.modes.len() == 1 {
            let sign = if self.modes[0].get(i) == bit { -1.0 } else { 1.0 };
            return self.beta * sign * theta;
        }
        // Weight of each mode's term relative to the largest one, split by
        // whether the flip moves away from (+1) or towards (-1) the mode.
        let mut away = NeumaierSum::default();
        let mut toward = NeumaierSum::default();
        for (&d, mode) in cache.distances.iter().zip(self.modes.iter()) {
            let w = libm::exp(-theta * (d - d_min) as f64);
            if mode.get(i) == bit {
                away.add(w);
            } else {
                toward.add(w);
            }
        }
        let (a, t) = (away.value(), toward.value());
        let total = a + t;
        let la = if a > 0.0 { libm::log(a / total) } else { f64::NEG_INFINITY };
        let lt = if t > 0.0 { libm::log(t / total) } else { f64::NEG_INFINITY };
        self.beta * log_add_exp(la - theta, lt + theta)
    }

    /// All `p` tempered neighbor log ratios, written into `out`.
    pub fn neighbor_log_ratios_into(&self, x: &BinaryState, cache: &DistanceCache, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let d_min = cache.distances.iter().copied().min().unwrap_or(0);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.neighbor_log_ratio_with_min(x, cache, i, d_min);
        }
    }

    /// All `p` tempered neighbor log ratios.
    pub fn neighbor_log_ratios(&self, x: &BinaryState, cache: &DistanceCache) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim()];
        self.neighbor_log_ratios_into(x, cache, &mut out);
        Ok(out)
    }
}

/// `m·(1 + e^{-θ})^p`: the normalizer of the un-tempered target.
///
/// Each mode contributes `Σ_x e^{-θ‖x − x_(j)‖₁} = (1 + e^{-θ})^p`
/// regardless of where it sits, so the sum is exact for any mode set.
pub fn closed_form_normalizer(num_modes: usize, theta: f64, dim: usize) -> f64 {
    num_modes as f64 * libm::pow(1.0 + libm::exp(-theta), dim as f64)
}

/// Exact, normalized `π^β` over all `2^p` states, indexed by
/// [`BinaryState::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    dim: usize,
    probs: Vec<f64>,
    log_normalizer: f64,
}

impl ExactDistribution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: &BinaryState) -> f64 {
        self.probs[x.index() as usize]
    }

    /// `log Σ_x π^β(x)` of the un-normalized target.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn expectation(&self, mut g: impl FnMut(&BinaryState) -> f64) -> f64 {
        let mut acc = NeumaierSum::default();
        for (idx, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc.add(p * g(&BinaryState::from_index(self.dim, idx as u64)));
            }
        }
        acc.value()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// Enumerates the tempered target over `{0,1}^p` (refuses `p > 22`).
pub fn exact_distribution(target: &TargetSpec) -> Result<ExactDistribution> {
    let dim = target.dim();
    if dim > EXACT_DIM_CAP {
        return Err(Error::TooLarge {
            what: "exact enumeration",
            dim,
            cap: EXACT_DIM_CAP,
        });
    }
    let n = 1usize << dim;
    let mode_words: Vec<u64> = target.modes.iter().map(|m| m.words[0]).collect();
    let theta = target.theta;
    let beta = target.beta;
    let logs: Vec<f64> = (0..n as u64)
        .map(|idx| {
            beta * log_sum_exp(
                mode_words
                    .iter()
                    .map(move |&w| -theta * (idx ^ w).count_ones() as f64),
            )
        })
        .collect();
    let log_z = log_sum_exp(logs.iter().copied());
    let probs = logs.iter().map(|&l| libm::exp(l - log_z)).collect();
    Ok(ExactDistribution {
        dim,
        probs,
        log_normalizer: log_z,
    })
}

/// Named mode layouts used by the experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModePattern {
    /// `1010…` and `0101…`.
    Alternating,
    /// The seven 16-bit modes of the low-dimensional multimodal example.
    SevenMode16,
    /// Alternating pair plus the two half blocks `11…00…`, `00…11…`.
    Blocks4,
    /// `Blocks4` plus a centered block of ones on `[p/4, 3p/4)` and its
    /// complement.
    Blocks6,
}

impl ModePattern {
    pub const ALL: [ModePattern; 4] = [
        ModePattern::Alternating,
        ModePattern::SevenMode16,
        ModePattern::Blocks4,
        ModePattern::Blocks6,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModePattern::Alternating => "alternating",
            ModePattern::SevenMode16 => "seven16",
            ModePattern::Blocks4 => "blocks4",
            ModePattern::Blocks6 => "blocks6",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.id() == id)
    }

    /// Builds the modes for dimension `dim`.
    pub fn modes(self, dim: usize) -> Result<Vec<BinaryState>> {
        if dim == 0 {
            return Err(Error::InvalidTarget("dimension must be positive".into()));
        }
        let alt = |start_with_one: bool| {
            let mut s = BinaryState::zeros(dim);
            for i in 0..dim {
                s.set(i, (i % 2 == 0) == start_with_one);
            }
            s
        };
        let block = |lo: usize, hi: usize| {
            let mut s = BinaryState::zeros(dim);
            for i in lo..hi {
                s.set(i, true);
            }
            s
        };
        let modes = match self {
            ModePattern::Alternating => vec![alt(true), alt(false)],
            ModePattern::SevenMode16 => {
                if dim != 16 {
                    return Err(Error::InvalidTarget(format!(
                        "pattern seven16 is defined for p = 16 only, got {dim}"
                    )));
                }
                [
                    "1111111111111111",
                    "1010101010101010",
                    "0101010101010101",
                    "1111111100000000",
                    "0000000011111111",
                    "1000000000000001",
                    "0000000110000000",
                ]
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<_>>>()?
            }
            ModePattern::Blocks4 | ModePattern::Blocks6 => {
                if !dim.is_multiple_of(4) {
                    return Err(Error::InvalidTarget(format!(
                        "block patterns need p divisible by 4, got {dim}"
                    )));
                }
                let mut modes = vec![alt(true), alt(false), block(0, dim / 2), block(dim / 2, dim)];
                if self == ModePattern::Blocks6 {
                    let centered = block(dim / 4, 3 * dim / 4);
                    let mut outer = BinaryState::ones(dim);
                    for i in dim / 4..3 * dim / 4 {
                        outer.set(i, false);
                    }
                    modes.push(centered);
                    modes.push(outer);
                }
                check_separation(&modes, dim / 2)?;
                modes
            }
        };
        Ok(modes)
    }
}

fn check_separation(modes: &[BinaryState], min_distance: usize) -> Result<()> {
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate().skip(i + 1) {
            let d = a.hamming(b);
            if d < min_distance {
                return Err(Error::InvalidTarget(format!(
                    "modes {i} and {j} are {d} apart, need at least {min_distance}"
                )));
            }
        }
    }
    Ok(())
}

/// A proposal over the Hamming-1 neighbors `N_x` of a state.
pub trait NeighborProposal {
    fn dim(&self) -> usize;

    /// `Q(flip(x, i) | x)`.
    fn prob(&self, i: usize) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
}

/// `Q(y|x) = 1/p` on every single-bit flip. Symmetric, so `Q(x|y)/Q(y|x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformFlip {
    dim: usize,
}

impl UniformFlip {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyNeighborhood);
        }
        Ok(Self { dim })
    }
}

impl NeighborProposal for UniformFlip {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prob(&self, i: usize) -> f64 {
        if i < self.dim {
            1.0 / self.dim as f64
        } else {
            0.0
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.dim)
    }
}

/// Shorthand for the proposal the samplers use.
pub fn uniform_proposal(x: &BinaryState) -> UniformFlip {
    UniformFlip { dim: x.dim() }
}

pub(crate) fn state_label(x: &BinaryState) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    if x.dim() <= 128 {
        let _ = write!(s, "{x}");
    } else {
        let _ = write!(s, "<p={} ones={}>", x.dim(), x.count_ones());
    }
    s
}
