//! Timing campaigns: the iterative reconstruction against the linear-inversion
//! baseline over a list of dimensions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qst_core::imposition::{distributional_residual, fmt17};
use qst_core::matcore::{JACOBI_MAX_SWEEPS, JACOBI_REL_TOL};
use qst_core::random::derive_seed;
use qst_core::{baseline_estimate, random_pure_state, reconstruct, IterationConfig, StopReason};

use crate::experiment::{generate, ExperimentConfig};

pub const CSV_HEADER: &str =
    "d,family,algorithm,mean_seconds,std_seconds,mean_sweeps,success_rate,status,kernel";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    /// `mub`, `random` or `pauli`; each instance measures d + 1 observables
    /// (all three for pauli) of a full-rank random true state, exact data.
    pub family: String,
    pub trials: usize,
    pub seed: u64,
    pub iteration: IterationConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 5],
            family: "mub".into(),
            trials: 100,
            seed: 0,
            iteration: IterationConfig::default(),
        }
    }
}

impl BenchConfig {
    /// Hex digest of the canonical JSON form; names the campaign directory.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn campaign_dir(&self, root: &Path) -> PathBuf {
        root.join(format!("bench-{}", self.digest()))
    }

    fn experiment(&self, d: usize, trial: usize) -> ExperimentConfig {
        ExperimentConfig {
            dim: d,
            family: self.family.clone(),
            m: None,
            true_state: "mixed".into(),
            true_rank: Some(d),
            shots: None,
            eps: 0.0,
            iteration: self.iteration.clone(),
            n_seeds: 1,
            seed: derive_seed(derive_seed(self.seed, d as u64), trial as u64),
        }
    }
}

/// One CSV row. A failed cell keeps its numeric fields as NaN and carries the
/// error in `status`.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub d: usize,
    pub family: String,
    pub algorithm: &'static str,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    /// Absent for the baseline, which is not iterative.
    pub mean_sweeps: Option<f64>,
    pub success_rate: f64,
    pub status: std::result::Result<(), String>,
}

impl BenchRow {
    fn failed(d: usize, family: &str, algorithm: &'static str, err: String) -> Self {
        Self {
            d,
            family: family.to_string(),
            algorithm,
            mean_seconds: f64::NAN,
            std_seconds: f64::NAN,
            mean_sweeps: None,
            success_rate: f64::NAN,
            status: Err(err),
        }
    }

    pub fn to_csv(&self) -> String {
        let status = match &self.status {
            Ok(()) => "ok".to_string(),
            Err(e) => format!("failed: {}", e.replace([',', '\n', '\r'], ";")),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.d,
            self.family,
            self.algorithm,
            fmt17(self.mean_seconds),
            fmt17(self.std_seconds),
            self.mean_sweeps.map(|s| s.to_string()).unwrap_or_default(),
            self.success_rate,
            status,
            kernel_fingerprint()
        )
    }
}

/// Parameters of the numerical kernel that affect timings, so rows from
/// different builds or machines are not compared blindly.
pub fn kernel_fingerprint() -> String {
    format!(
        "jacobi(max_sweeps={JACOBI_MAX_SWEEPS};rel_tol={JACOBI_REL_TOL:e});fused-sweep;{}-{};{}",
        std::env::consts::ARCH,
        std::env::consts::OS,
        if cfg!(debug_assertions) {
            "debug-assertions"
        } else {
            "release"
        }
    )
}

struct Trial {
    iterative_seconds: f64,
    sweeps: usize,
    iterative_ok: bool,
    baseline_seconds: f64,
    baseline_ok: bool,
}

fn run_trial(cfg: &BenchConfig, d: usize, trial: usize) -> Result<Trial> {
    let exp = cfg.experiment(d, trial);
    let (file, _) = generate(&exp)?;
    let records = &file.records;
    let seed_state = random_pure_state(d, derive_seed(exp.seed, 3))?;

    let start = Instant::now();
    let res = reconstruct(records, &seed_state, &cfg.iteration)?;
    let iterative_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let est = baseline_estimate(records)?;
    let baseline_seconds = start.elapsed().as_secs_f64();
    let tol = cfg.iteration.tol_distributional.unwrap_or(1e-10);
    let baseline_ok = distributional_residual(records, est.matrix())? < tol;

    Ok(Trial {
        iterative_seconds,
        sweeps: res.sweeps,
        iterative_ok: res.stop_reason == StopReason::DistributionalTol,
        baseline_seconds,
        baseline_ok,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every (d, trial) pair on the current rayon pool and returns two rows
/// per dimension, iterative first. Trials are merged in index order.
pub fn run(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::with_capacity(2 * cfg.dims.len());
    for &d in &cfg.dims {
        let trials: Vec<Result<Trial>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, d, t))
            .collect();
        let trials: Result<Vec<Trial>> = trials.into_iter().collect();
        let trials = match trials {
            Ok(t) if !t.is_empty() => t,
            Ok(_) => {
                let msg = "no trials".to_string();
                rows.push(BenchRow::failed(d, &cfg.family, "imposition", msg.clone()));
                rows.push(BenchRow::failed(d, &cfg.family, "baseline", msg));
                continue;
            }
            Err(e) => {
                let msg = format!("{e:#}");
                rows.push(BenchRow::failed(d, &cfg.family, "imposition", msg.clone()));
                rows.push(BenchRow::failed(d, &cfg.family, "baseline", msg));
                continue;
            }
        };
        let n = trials.len() as f64;
        let rate = |f: fn(&Trial) -> bool| trials.iter().filter(|t| f(t)).count() as f64 / n;

        let (mean, std) = mean_std(
            &trials
                .iter()
                .map(|t| t.iterative_seconds)
                .collect::<Vec<_>>(),
        );
        rows.push(BenchRow {
            d,
            family: cfg.family.clone(),
            algorithm: "imposition",
            mean_seconds: mean,
            std_seconds: std,
            mean_sweeps: Some(trials.iter().map(|t| t.sweeps as f64).sum::<f64>() / n),
            success_rate: rate(|t| t.iterative_ok),
            status: Ok(()),
        });
        let (mean, std) = mean_std(
            &trials
                .iter()
                .map(|t| t.baseline_seconds)
                .collect::<Vec<_>>(),
        );
        rows.push(BenchRow {
            d,
            family: cfg.family.clone(),
            algorithm: "baseline",
            mean_seconds: mean,
            std_seconds: std,
            mean_sweeps: None,
            success_rate: rate(|t| t.baseline_ok),
            status: Ok(()),
        });
    }
    rows
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Runs the campaign and writes `config.json` and `bench.csv` into its
/// directory under `root`. Returns the directory and the rows.
pub fn run_campaign(
    cfg: &BenchConfig,
    root: &Path,
    jobs: Option<usize>,
) -> Result<(PathBuf, Vec<BenchRow>)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().context("building worker pool")?;
    let rows = pool.install(|| run(cfg));
    let dir = cfg.campaign_dir(root);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    std::fs::write(dir.join("bench.csv"), to_csv(&rows))?;
    Ok((dir, rows))
}
