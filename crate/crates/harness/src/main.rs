use std::path::PathBuf;
use std::process::ExitCode;

use aiit_harness::config::SeedsBlock;
use aiit_harness::oracle::{check_size, run_oracle, ORACLE_TOLERANCE};
use aiit_harness::{fixtures, output, run_plan, ExperimentConfig, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aiit", version, about = "Adaptive informed importance tempering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a shipped fixture instead of a config file.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed and ladder of a config and write the CSVs.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides the config's `output`).
        #[arg(long, env = "AIIT_OUT_DIR")]
        out: Option<PathBuf>,
        /// Run this many seeds, counting up from the config's first seed.
        #[arg(long, conflicts_with = "seed_list")]
        seeds: Option<u64>,
        /// Explicit seeds, comma separated.
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the number of rounds after burn-in.
        #[arg(long)]
        rounds: Option<u64>,
        /// Write every swap attempt to swaps.csv.
        #[arg(long)]
        record_swaps: bool,
        /// Record wall-clock seconds in hits.csv and the manifest.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Check the exact stationary law of every kernel (p <= 10).
    Oracle {
        #[command(flatten)]
        source: Source,
    },
    /// List the shipped fixtures, or print one.
    Fixtures { name: Option<String> },
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(source: &Source) -> Result<ExperimentConfig, Failure> {
    let (origin, text) = match (&source.config, &source.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            (path.display().to_string(), text)
        }
        (None, Some(name)) => {
            let f = fixtures::find(name).ok_or_else(|| Failure::Config(format!("unknown fixture {name:?}")))?;
            (format!("{}.json", f.name), f.json.to_string())
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{origin}:{e}")))
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[allow(clippy::too_many_arguments)]
fn run(
    source: &Source,
    out: Option<PathBuf>,
    seeds: Option<u64>,
    seed_list: Option<Vec<u64>>,
    workers: Option<usize>,
    rounds: Option<u64>,
    record_swaps: bool,
    wall_clock: bool,
) -> Result<(), Failure> {
    let mut config = load(source)?;
    if let Some(n) = seeds {
        let master = config.seeds.resolve().first().copied().unwrap_or(1);
        config.seeds = SeedsBlock::Derived { count: n, master };
    }
    if let Some(list) = seed_list {
        config.seeds = SeedsBlock::List(list);
    }
    if let Some(r) = rounds {
        config.rounds = r;
    }
    config.record_swaps |= record_swaps;
    let plan = config.plan().map_err(|e| Failure::Config(e.to_string()))?;
    let dir = out
        .or_else(|| config.output.clone())
        .ok_or_else(|| Failure::Config("no output directory: pass --out or set AIIT_OUT_DIR".into()))?;
    let opts = RunOptions { workers, wall_clock };
    let results = run_plan(&config, &plan, opts)?;
    output::write_all(&dir, &config, &plan, &results, opts)?;

    for (l, ladder) in plan.ladders.iter().enumerate() {
        let mine: Vec<_> = results.iter().filter(|r| r.ladder == l).collect();
        let found: Vec<f64> = mine
            .iter()
            .filter_map(|r| r.summary.all_found().map(|h| h.evaluations as f64))
            .collect();
        let tvds: Vec<f64> = mine.iter().filter_map(|r| r.summary.final_tvd()).collect();
        let mut line = format!(
            "{:<10} seeds {:>3}  all modes found {:>3}",
            ladder.label,
            mine.len(),
            found.len()
        );
        if let Some(m) = median(found) {
            line += &format!("  median evaluations {m:.0}");
        }
        if !tvds.is_empty() {
            line += &format!("  mean final TVD {:.4}", tvds.iter().sum::<f64>() / tvds.len() as f64);
        }
        println!("{line}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn oracle(source: &Source) -> Result<(), Failure> {
    let config = load(source)?;
    let plan = config.plan().map_err(|e| Failure::Config(e.to_string()))?;
    check_size(&plan.target).map_err(|e| Failure::Config(e.to_string()))?;
    let lines = run_oracle(&plan)?;
    let mut ok = true;
    for l in &lines {
        let pass = l.tvd <= ORACLE_TOLERANCE;
        ok &= pass;
        println!(
            "{:<16} ln_gamma {:>8.4}  tvd {:.3e}  residual {:.3e}  {}",
            l.kind.tag(),
            l.ln_gamma,
            l.tvd,
            l.residual,
            if pass { "ok" } else { "FAIL" }
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow::anyhow!("some kernels miss their stationary law")))
    }
}

fn list(name: Option<String>) -> Result<(), Failure> {
    match name {
        None => {
            for f in fixtures::FIXTURES {
                println!("{}", f.listing());
            }
        }
        Some(n) => {
            let f = fixtures::find(&n).ok_or_else(|| Failure::Config(format!("unknown fixture {n:?}")))?;
            print!("{}", f.json);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            source,
            out,
            seeds,
            seed_list,
            workers,
            rounds,
            record_swaps,
            wall_clock,
        } => run(&source, out, seeds, seed_list, workers, rounds, record_swaps, wall_clock),
        Command::Oracle { source } => oracle(&source),
        Command::Fixtures { name } => list(name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
