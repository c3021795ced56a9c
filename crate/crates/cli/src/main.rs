use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qst_cli::bench::{self, BenchConfig};
use qst_cli::experiment::{generate, ExperimentConfig};
use qst_cli::run::{self, PsdMode, RunRequest, EXIT_ERROR};
use qst_cli::selftest;

/// Iterative quantum state tomography from measured outcome statistics.
///
/// Exit status: 0 on success (for `reconstruct`: converged), 2 when
/// `reconstruct` stops at --max-sweeps, 1 on any error.
#[derive(Parser)]
#[command(name = "qst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate measurements of a true state; writes records.json and truth.json.
    Gen(GenArgs),
    /// Reconstruct a state from a records file; writes result.json and trace.csv.
    Reconstruct(ReconstructArgs),
    /// Time the iteration against the linear-inversion baseline.
    Bench(BenchArgs),
    /// Run a quick check of the core invariants.
    Selftest(SelftestArgs),
}

/// A tolerance value, or `off` to disable that stopping rule.
#[derive(Clone, Copy, Debug)]
struct Tol(Option<f64>);

impl std::str::FromStr for Tol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "off" {
            return Ok(Tol(None));
        }
        s.parse::<f64>()
            .map(|t| Tol(Some(t)))
            .map_err(|e| format!("expected a number or `off`: {e}"))
    }
}

#[derive(Args)]
struct GenArgs {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// mub, random, pauli, or a path to an observable-set JSON file.
    #[arg(long)]
    family: Option<String>,
    /// Number of observables [default: d + 1, or 3 for pauli].
    #[arg(long)]
    m: Option<usize>,
    /// pure, mixed, or a path to a density-matrix JSON file.
    #[arg(long = "true")]
    true_state: Option<String>,
    /// Rank of a mixed true state [default: d].
    #[arg(long)]
    true_rank: Option<usize>,
    /// Shots per observable; omit for exact probabilities.
    #[arg(long)]
    shots: Option<u64>,
    /// Depolarizing preparation error.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "QST_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Records file written by `gen`.
    #[arg(long)]
    records: PathBuf,
    /// JSON experiment config supplying iteration settings and seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep only the r largest spectral components after each imposition.
    #[arg(long)]
    rank: Option<usize>,
    /// Distributional-distance tolerance, or `off`.
    #[arg(long)]
    tol_distributional: Option<Tol>,
    /// Tolerance on the HS step between sweeps, or `off`.
    #[arg(long)]
    tol_step: Option<Tol>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Final projection onto the PSD cone; `auto` projects finite-shot data.
    #[arg(long, value_enum, default_value = "auto")]
    psd_project: PsdMode,
    /// Seed for the random pure starting state.
    #[arg(long)]
    seed: Option<u64>,
    /// True state, for HS distance and (pure states) fidelity in the outputs.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, env = "QST_OUT", default_value = ".")]
    out: PathBuf,
    /// Write zero in the trace timing column, making outputs byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// mub, random or pauli.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Root directory; the campaign goes in a subdirectory named by config hash.
    #[arg(long, env = "QST_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.dim {
        cfg.dim = v;
    }
    if let Some(v) = args.family {
        cfg.family = v;
    }
    if args.m.is_some() {
        cfg.m = args.m;
    }
    if let Some(v) = args.true_state {
        cfg.true_state = v;
    }
    if args.true_rank.is_some() {
        cfg.true_rank = args.true_rank;
    }
    if args.shots.is_some() {
        cfg.shots = args.shots;
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let (records, truth) = generate(&cfg)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(
        args.out.join("records.json"),
        serde_json::to_string_pretty(&records)? + "\n",
    )?;
    std::fs::write(
        args.out.join("truth.json"),
        serde_json::to_string_pretty(&truth)? + "\n",
    )?;
    println!(
        "wrote {} records (d={}, family={}, {}) to {}",
        records.records.len(),
        cfg.dim,
        cfg.family,
        cfg.shots
            .map_or("exact".to_string(), |n| format!("{n} shots")),
        args.out.display()
    );
    Ok(0)
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<i32> {
    let base = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut iteration = base.iteration;
    if args.rank.is_some() {
        iteration.rank = args.rank;
    }
    if let Some(Tol(t)) = args.tol_distributional {
        iteration.tol_distributional = t;
    }
    if let Some(Tol(t)) = args.tol_step {
        iteration.tol_step = t;
    }
    if let Some(n) = args.max_sweeps {
        iteration.max_sweeps = n;
    }
    let req = RunRequest {
        records: args.records,
        truth: args.truth,
        iteration,
        psd: args.psd_project,
        seed: args.seed.unwrap_or(base.seed),
        no_timing: args.no_timing,
    };
    let out = run::run(&req)?;
    out.write(&args.out)?;
    let res = &out.result;
    println!(
        "{:?} after {} sweeps, distributional {:.3e}{}",
        res.stop_reason,
        res.sweeps,
        res.final_distributional(),
        out.hs_to_truth
            .map_or(String::new(), |h| format!(", HS to truth {h:.3e}"))
    );
    Ok(out.exit_code())
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid config {}", p.display()))?
        }
        None => BenchConfig::default(),
    };
    if let Some(v) = args.dims {
        cfg.dims = v;
    }
    if let Some(v) = args.family {
        cfg.family = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.max_sweeps {
        cfg.iteration.max_sweeps = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let (dir, rows) = bench::run_campaign(&cfg, &args.out, args.jobs)?;
    print!("{}", bench::to_csv(&rows));
    eprintln!("wrote {}", dir.join("bench.csv").display());
    Ok(0)
}

fn cmd_selftest(args: SelftestArgs) -> Result<i32> {
    let checks = selftest::run(args.seed);
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(if checks.iter().all(|c| c.passed) {
        0
    } else {
        1
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match status {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
