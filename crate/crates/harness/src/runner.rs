//! Seed-parallel execution of a [`Plan`].

use std::time::Instant;

use aiit_core::tempering::{run_pt, Clock, Executor, NoClock, Sequential};
use aiit_core::RunSummary;
use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Plan};

/// Dimension from which replicas of one run are advanced in parallel. Below
/// it a window is too short to pay for the fork/join.
pub const REPLICA_PARALLEL_DIM: usize = 256;

/// Advances the slots of one run on the current rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl Executor for RayonExecutor {
    fn map_slots<T, R, F>(&self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut T) -> R + Sync + Send,
    {
        items.par_iter_mut().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Seconds since the run started.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub workers: Option<usize>,
    /// Stamp hits with wall-clock seconds. Off by default because it makes
    /// the output machine dependent.
    pub wall_clock: bool,
}

/// Outcome of one (seed, ladder) job.
#[derive(Debug, Clone)]
pub struct JobResult {
    pub seed: u64,
    pub ladder: usize,
    pub summary: RunSummary,
    pub seconds: Option<f64>,
}

fn run_job(config: &ExperimentConfig, plan: &Plan, ladder: usize, seed: u64, opts: RunOptions) -> Result<JobResult> {
    let pt = plan.pt_config(config, ladder, seed);
    let parallel = plan.target.dim() >= REPLICA_PARALLEL_DIM;
    let start = Instant::now();
    let summary = match (parallel, opts.wall_clock) {
        (true, true) => run_pt(&pt, &RayonExecutor, &WallClock::start()),
        (true, false) => run_pt(&pt, &RayonExecutor, &NoClock),
        (false, true) => run_pt(&pt, &Sequential, &WallClock::start()),
        (false, false) => run_pt(&pt, &Sequential, &NoClock),
    }
    .with_context(|| format!("seed {seed}, ladder {}", plan.ladders[ladder].label))?;
    Ok(JobResult {
        seed,
        ladder,
        summary,
        seconds: opts.wall_clock.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Runs every (seed, ladder) pair. Results come back ordered by seed (in
/// config order) and then ladder, whatever the thread count.
pub fn run_plan(config: &ExperimentConfig, plan: &Plan, opts: RunOptions) -> Result<Vec<JobResult>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().context("building the worker pool")?;
    let jobs: Vec<(u64, usize)> = plan
        .seeds
        .iter()
        .flat_map(|&s| (0..plan.ladders.len()).map(move |l| (s, l)))
        .collect();
    pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, ladder)| run_job(config, plan, ladder, seed, opts))
            .collect()
    })
}
