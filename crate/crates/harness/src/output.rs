//! CSV and manifest output.
//!
//! Every file has a header line and one row per record. Floats use Rust's
//! shortest round-trip formatting and rows follow job order, so a rerun with
//! the same config writes byte-identical CSVs. Missing values are empty
//! fields.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{ExperimentConfig, Plan};
use crate::runner::{JobResult, RunOptions};

pub const RUNS: &str = "runs.csv";
pub const HITS: &str = "hits.csv";
pub const TVD: &str = "tvd.csv";
pub const SWAPS: &str = "swaps.csv";
pub const GAMMA: &str = "gamma.csv";
pub const SWAP_RATES: &str = "swap_rates.csv";
pub const MANIFEST: &str = "manifest.json";

/// The CSV files written by every run.
pub const CSV_FILES: [&str; 6] = [RUNS, HITS, TVD, SWAPS, GAMMA, SWAP_RATES];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Table {
    w: csv::Writer<fs::File>,
    name: &'static str,
}

impl Table {
    fn create(dir: &Path, name: &'static str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        Ok(Self { w, name })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.w.write_record(&fields).with_context(|| format!("writing {}", self.name))
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().with_context(|| format!("flushing {}", self.name))
    }
}

#[derive(Debug, Serialize)]
struct LadderEntry<'a> {
    label: &'a str,
    kinds: Vec<&'static str>,
    betas: &'a [f64],
}

#[derive(Debug, Serialize)]
struct SeedTime {
    seed: u64,
    ladder: String,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    name: Option<&'a str>,
    config_hash: String,
    seeds: &'a [u64],
    ladders: Vec<LadderEntry<'a>>,
    rounds: u64,
    created_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<Vec<SeedTime>>,
}

/// Writes the CSVs and the manifest into `dir`, creating it if needed.
pub fn write_all(dir: &Path, config: &ExperimentConfig, plan: &Plan, results: &[JobResult], opts: RunOptions) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let label = |r: &JobResult| plan.ladders[r.ladder].label.clone();

    let mut runs = Table::create(
        dir,
        RUNS,
        &[
            "seed",
            "algorithm",
            "replicas",
            "swap_rule",
            "burnin_rounds",
            "rounds_run",
            "total_evaluations",
            "modes_found",
            "all_found_sweep",
            "all_found_evaluations",
            "all_found_seconds",
            "final_tvd",
        ],
    )?;
    let mut hits = Table::create(dir, HITS, &["seed", "algorithm", "mode", "sweep", "evaluations", "seconds"])?;
    let mut tvd = Table::create(dir, TVD, &["seed", "algorithm", "checkpoint", "evaluations", "tvd"])?;
    let mut swaps = Table::create(
        dir,
        SWAPS,
        &["seed", "algorithm", "round", "pair", "parity", "probability", "accepted"],
    )?;
    let mut gamma = Table::create(
        dir,
        GAMMA,
        &[
            "seed",
            "algorithm",
            "replica",
            "beta",
            "kind",
            "gamma_final",
            "gamma_updates",
            "mean_rf_steps",
            "evaluations",
        ],
    )?;
    let mut rates = Table::create(
        dir,
        SWAP_RATES,
        &[
            "seed",
            "algorithm",
            "pair",
            "attempts",
            "accepted",
            "acceptance_rate",
            "rate_per_round",
            "mean_probability",
        ],
    )?;

    for r in results {
        let s = &r.summary;
        let alg = label(r);
        let seed = r.seed.to_string();
        let ladder = &plan.ladders[r.ladder].ladder;
        let all = s.all_found();
        runs.row(vec![
            seed.clone(),
            alg.clone(),
            ladder.len().to_string(),
            if s.z_corrected { "z_corrected" } else { "standard" }.into(),
            s.burnin_rounds.to_string(),
            s.rounds_run.to_string(),
            s.total_evaluations().to_string(),
            s.hits.iter().filter(|h| h.is_some()).count().to_string(),
            opt(all.map(|h| h.sweep)),
            opt(all.map(|h| h.evaluations)),
            opt(all.and_then(|h| h.seconds)),
            opt(s.final_tvd()),
        ])?;
        for (m, h) in s.hits.iter().enumerate() {
            hits.row(vec![
                seed.clone(),
                alg.clone(),
                m.to_string(),
                opt(h.map(|h| h.sweep)),
                opt(h.map(|h| h.evaluations)),
                opt(h.and_then(|h| h.seconds)),
            ])?;
        }
        hits.row(vec![
            seed.clone(),
            alg.clone(),
            "all".into(),
            opt(all.map(|h| h.sweep)),
            opt(all.map(|h| h.evaluations)),
            opt(all.and_then(|h| h.seconds)),
        ])?;
        for p in &s.tvd_curve {
            tvd.row(vec![
                seed.clone(),
                alg.clone(),
                p.round.to_string(),
                p.evaluations.to_string(),
                p.tvd.to_string(),
            ])?;
        }
        for w in &s.swaps {
            swaps.row(vec![
                seed.clone(),
                alg.clone(),
                w.round.to_string(),
                w.pair.to_string(),
                w.parity.tag().into(),
                w.probability.to_string(),
                (w.accepted as u8).to_string(),
            ])?;
        }
        for (k, slot) in s.slots.iter().enumerate() {
            gamma.row(vec![
                seed.clone(),
                alg.clone(),
                k.to_string(),
                ladder.betas()[k].to_string(),
                ladder.kinds()[k].tag().into(),
                slot.gamma_final.to_string(),
                slot.gamma_updates.to_string(),
                opt(slot.mean_rf_steps()),
                slot.evaluations.to_string(),
            ])?;
        }
        for (i, p) in s.swap_stats.iter().enumerate() {
            rates.row(vec![
                seed.clone(),
                alg.clone(),
                i.to_string(),
                p.attempts.to_string(),
                p.accepted.to_string(),
                opt(p.acceptance_rate()),
                opt(p.rate_per_round()),
                opt(p.mean_probability()),
            ])?;
        }
    }
    for t in [runs, hits, tvd, swaps, gamma, rates] {
        t.finish()?;
    }

    let manifest = Manifest {
        tool: "aiit",
        version: env!("CARGO_PKG_VERSION"),
        name: config.name.as_deref(),
        config_hash: config.semantic_hash(),
        seeds: &plan.seeds,
        ladders: plan
            .ladders
            .iter()
            .map(|l| LadderEntry {
                label: &l.label,
                kinds: l.ladder.kinds().iter().map(|k| k.tag()).collect(),
                betas: l.ladder.betas(),
            })
            .collect(),
        rounds: config.rounds,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_seconds: opts.wall_clock.then(|| {
            results
                .iter()
                .map(|r| SeedTime {
                    seed: r.seed,
                    ladder: label(r),
                    seconds: r.seconds.unwrap_or(0.0),
                })
                .collect()
        }),
    };
    let path = dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
