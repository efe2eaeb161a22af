//! Experiment configuration files.
//!
//! A config is strict JSON: unknown keys are rejected so that a typo in a
//! ladder never silently falls back to a default. Parse errors and semantic
//! errors both carry a `line:column` anchor into the source text.

use std::fmt;
use std::path::PathBuf;

use aiit_core::tempering::{BalancingConfig, Burnin};
use aiit_core::{
    BalancingSpec, Basis, BinaryState, ModePattern, PtConfig, ReplicaLadder, SamplerKind, SwapRule, TargetSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Problem size class. `Full` configs reproduce a published setting and may
/// take hours; `Desk` configs finish in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModesBlock {
    Pattern(String),
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub p: usize,
    pub theta: f64,
    pub modes: ModesBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub betas: Vec<f64>,
    /// One kind per replica.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<String>>,
    /// One kind for the whole ladder; with `rf_replica_count`, only the
    /// coldest replicas use it and the rest use its single-step variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_replica_count: Option<usize>,
    #[serde(rename = "L0", default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters_between_swaps: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BalancingKindTag {
    Min,
    Max,
    Sqrt,
    #[default]
    BoundedSqrt,
}

/// How the bounding constant is adapted: from the balancing basis applied to
/// the neighbor ratios, or from the raw ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaStatistic {
    #[default]
    Basis,
    Ratio,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancingBlock {
    #[serde(default)]
    pub kind: BalancingKindTag,
    #[serde(default = "one")]
    pub gamma0: f64,
    #[serde(default = "yes")]
    pub adapt: bool,
    #[serde(default)]
    pub freeze_after_burnin: bool,
    #[serde(default)]
    pub gamma_statistic: GammaStatistic,
}

impl Default for BalancingBlock {
    fn default() -> Self {
        Self {
            kind: BalancingKindTag::default(),
            gamma0: 1.0,
            adapt: true,
            freeze_after_burnin: false,
            gamma_statistic: GammaStatistic::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BurninBlock {
    #[serde(default)]
    pub multiplicity: u64,
    #[serde(default)]
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedsBlock {
    List(Vec<u64>),
    Derived { count: u64, master: u64 },
}

impl Default for SeedsBlock {
    fn default() -> Self {
        SeedsBlock::List(vec![1])
    }
}

impl SeedsBlock {
    /// Seeds in run order. Derived seeds are `master, master + 1, …`; each
    /// is expanded by the core RNG, so neighbouring seeds give unrelated
    /// streams.
    pub fn resolve(&self) -> Vec<u64> {
        match self {
            SeedsBlock::List(v) => v.clone(),
            SeedsBlock::Derived { count, master } => (0..*count).map(|i| master.wrapping_add(i)).collect(),
        }
    }
}

fn default_rounds() -> u64 {
    100
}

fn default_growth() -> f64 {
    1.5
}

fn default_swap_rule() -> String {
    "auto".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub scale: Scale,
    pub target: TargetBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladders: Option<Vec<LadderBlock>>,
    #[serde(default)]
    pub balancing: BalancingBlock,
    #[serde(default = "default_swap_rule")]
    pub swap_rule: String,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default)]
    pub burnin: BurninBlock,
    #[serde(default)]
    pub seeds: SeedsBlock,
    #[serde(default = "yes")]
    pub tvd: bool,
    #[serde(default = "default_growth")]
    pub tvd_growth: f64,
    #[serde(default)]
    pub stop_when_all_found: bool,
    #[serde(default)]
    pub record_swaps: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// A config error with an optional source position.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(text: &str, key: &str, message: impl Into<String>) -> Self {
        let (line, column) = match locate_key(text, key) {
            Some((l, c)) => (Some(l), Some(c)),
            None => (None, None),
        };
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line and column of the first `"key"` in `text`.
fn locate_key(text: &str, key: &str) -> Option<(usize, usize)> {
    let needle = format!("\"{key}\"");
    let offset = text.find(&needle)?;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

/// A ladder ready to run, with the label used in every output file.
#[derive(Debug, Clone)]
pub struct LadderPlan {
    pub label: String,
    pub ladder: ReplicaLadder,
}

/// Validated, fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub target: TargetSpec,
    pub ladders: Vec<LadderPlan>,
    pub balancing: BalancingConfig,
    pub swap_rule: SwapRule,
    pub seeds: Vec<u64>,
}

impl Plan {
    /// Core configuration for one (ladder, seed) job.
    pub fn pt_config(&self, config: &ExperimentConfig, ladder: usize, seed: u64) -> PtConfig {
        let mut c = PtConfig::new(self.target.clone(), self.ladders[ladder].ladder.clone(), self.balancing);
        c.swap_rule = self.swap_rule;
        c.rounds = config.rounds;
        c.burnin = Burnin {
            multiplicity: config.burnin.multiplicity,
            iterations: config.burnin.iterations,
        };
        c.seed = seed;
        c.record_swaps = config.record_swaps;
        c.track_tvd = config.tvd;
        c.tvd_growth = config.tvd_growth;
        c.stop_when_all_found = config.stop_when_all_found;
        c
    }
}

/// Single-step counterpart used for the warm part of a mixed ladder.
fn single_step_of(kind: SamplerKind) -> Option<SamplerKind> {
    match kind {
        SamplerKind::AIit | SamplerKind::AIitSqrtFast => Some(SamplerKind::SsIit),
        SamplerKind::MhMult | SamplerKind::RfMh => Some(SamplerKind::Mh),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Parses and validates `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })?;
        config.plan_with_source(text)?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn ladder_blocks(&self) -> Vec<&LadderBlock> {
        self.ladder.iter().chain(self.ladders.iter().flatten()).collect()
    }

    /// Resolves the config without source positions for errors.
    pub fn plan(&self) -> Result<Plan, ConfigError> {
        self.plan_with_source("")
    }

    fn plan_with_source(&self, text: &str) -> Result<Plan, ConfigError> {
        let err = |key: &str, msg: String| ConfigError::at(text, key, msg);
        let t = &self.target;
        if t.p == 0 {
            return Err(err("p", "target.p must be positive".into()));
        }
        if !(t.theta > 0.0 && t.theta.is_finite()) {
            return Err(err("theta", format!("target.theta must be positive and finite, got {}", t.theta)));
        }
        let modes = match &t.modes {
            ModesBlock::Pattern(id) => {
                let pattern = ModePattern::from_id(id).ok_or_else(|| {
                    let known: Vec<&str> = ModePattern::ALL.iter().map(|p| p.id()).collect();
                    err("modes", format!("unknown mode pattern {id:?} (known: {})", known.join(", ")))
                })?;
                pattern.modes(t.p).map_err(|e| err("modes", e.to_string()))?
            }
            ModesBlock::Explicit(list) => {
                let mut modes = Vec::with_capacity(list.len());
                for s in list {
                    let m: BinaryState = s.parse().map_err(|e| err("modes", format!("mode {s:?}: {e}")))?;
                    if m.dim() != t.p {
                        return Err(err("modes", format!("mode {s:?} has length {}, expected p = {}", m.dim(), t.p)));
                    }
                    modes.push(m);
                }
                modes
            }
        };
        let target = TargetSpec::new(modes, t.theta).map_err(|e| err("modes", e.to_string()))?;

        let b = &self.balancing;
        let spec = match b.kind {
            BalancingKindTag::Min => BalancingSpec::MIN,
            BalancingKindTag::Max => BalancingSpec::MAX,
            BalancingKindTag::Sqrt => BalancingSpec::SQRT,
            BalancingKindTag::BoundedSqrt => {
                BalancingSpec::bounded(Basis::Sqrt, b.gamma0).map_err(|e| err("gamma0", e.to_string()))?
            }
        };
        let statistic = match b.gamma_statistic {
            GammaStatistic::Basis => spec.basis().unwrap_or(Basis::Sqrt),
            GammaStatistic::Ratio => Basis::Linear,
        };
        let balancing = BalancingConfig {
            spec,
            statistic,
            adapt: b.adapt,
            freeze_after_burnin: b.freeze_after_burnin,
        };

        let swap_rule: SwapRule = self.swap_rule.parse().map_err(|_| {
            err(
                "swap_rule",
                format!("swap_rule must be standard, z_corrected or auto, got {:?}", self.swap_rule),
            )
        })?;
        if self.rounds == 0 {
            return Err(err("rounds", "rounds must be positive".into()));
        }
        if self.tvd_growth.is_nan() || self.tvd_growth <= 1.0 {
            return Err(err("tvd_growth", format!("tvd_growth must exceed 1, got {}", self.tvd_growth)));
        }

        let blocks = match (&self.ladder, &self.ladders) {
            (Some(_), Some(_)) => return Err(err("ladders", "give either ladder or ladders, not both".into())),
            (None, None) => return Err(err("target", "missing field `ladder` (or `ladders`)".into())),
            (Some(l), None) => vec![l],
            (None, Some(v)) if v.is_empty() => return Err(err("ladders", "ladders is empty".into())),
            (None, Some(v)) => v.iter().collect(),
        };
        let mut ladders = Vec::with_capacity(blocks.len());
        for block in blocks {
            let ladder = block.resolve().map_err(|m| err(m.0, m.1))?;
            let label = block.label.clone().unwrap_or_else(|| aiit_core::tempering::ladder_label(&ladder));
            // Catch invalid kind/balancing pairings now rather than mid-run.
            let probe = PtConfig::new(target.clone(), ladder.clone(), balancing);
            probe.slot_specs().map_err(|e| err("balancing", format!("ladder {label}: {e}")))?;
            if ladders.iter().any(|l: &LadderPlan| l.label == label) {
                return Err(err("label", format!("duplicate ladder label {label:?}")));
            }
            ladders.push(LadderPlan { label, ladder });
        }

        let seeds = self.seeds.resolve();
        if seeds.is_empty() {
            return Err(err("seeds", "at least one seed is required".into()));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(err("seeds", "seeds must be distinct".into()));
        }
        Ok(Plan {
            target,
            ladders,
            balancing,
            swap_rule,
            seeds,
        })
    }

    /// SHA-256 of the semantic content: the resolved config without its
    /// name, description, scale and output directory, with seeds expanded.
    pub fn semantic_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let obj = value.as_object_mut().expect("config is an object");
        for key in ["name", "description", "scale", "output"] {
            obj.remove(key);
        }
        obj.insert("seeds".into(), serde_json::to_value(self.seeds.resolve()).expect("seeds serialize"));
        let ladders: Vec<&LadderBlock> = self.ladder_blocks();
        obj.remove("ladder");
        obj.insert("ladders".into(), serde_json::to_value(ladders).expect("ladders serialize"));
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

impl LadderBlock {
    fn resolve(&self) -> Result<ReplicaLadder, (&'static str, String)> {
        let r = self.betas.len();
        if r == 0 {
            return Err(("betas", "betas is empty".into()));
        }
        let parse = |s: &str| -> Result<SamplerKind, (&'static str, String)> {
            s.parse().map_err(|_| {
                let known: Vec<&str> = SamplerKind::ALL.iter().map(|k| k.tag()).collect();
                ("kind", format!("unknown sampler kind {s:?} (known: {})", known.join(", ")))
            })
        };
        let kinds = match (&self.kinds, &self.kind) {
            (Some(_), Some(_)) => return Err(("kinds", "give either kinds or kind, not both".into())),
            (None, None) => return Err(("betas", "ladder needs kinds or kind".into())),
            (Some(list), None) => {
                if self.rf_replica_count.is_some() {
                    return Err(("rf_replica_count", "rf_replica_count goes with kind, not kinds".into()));
                }
                if list.len() != r {
                    return Err(("kinds", format!("{} kinds for {} betas", list.len(), r)));
                }
                list.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?
            }
            (None, Some(s)) => {
                let kind = parse(s)?;
                let rf = self.rf_replica_count.unwrap_or(r);
                if rf > r {
                    return Err(("rf_replica_count", format!("rf_replica_count {rf} exceeds {r} replicas")));
                }
                let warm = if rf < r {
                    single_step_of(kind).ok_or((
                        "rf_replica_count",
                        format!("{kind} has no single-step counterpart for a mixed ladder"),
                    ))?
                } else {
                    kind
                };
                (0..r).map(|i| if i < rf { kind } else { warm }).collect()
            }
        };
        let budgeted = kinds.iter().any(|k| !matches!(k.weight_kind(), aiit_core::WeightKind::InverseZ));
        let iterated = kinds.iter().any(|k| matches!(k.weight_kind(), aiit_core::WeightKind::InverseZ));
        if budgeted && self.l0.is_none() {
            return Err(("betas", "L0 is required for multiplicity and single-step kinds".into()));
        }
        if iterated && self.iters_between_swaps.is_none() {
            return Err(("betas", "iters_between_swaps is required for inverse-Z kinds".into()));
        }
        let l0 = self.l0.unwrap_or(1);
        let iters = self.iters_between_swaps.unwrap_or(1);
        ReplicaLadder::new(self.betas.clone(), kinds, l0, iters).map_err(|e| ("betas", e.to_string()))
    }
}
