//! The `reconstruct` command: run the iteration on a records file and write
//! the result and its trace.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use qst_core::random::derive_seed;
use qst_core::{
    fidelity_to_pure, hs_distance, purity, random_pure_state, reconstruct_with_reference,
    DensityMatrix, IterationConfig, ReconstructionResult, StopReason,
};

use crate::experiment::{load_state, RecordsFile};

pub const RESULT_FILE: &str = "result.json";
pub const TRACE_FILE: &str = "trace.csv";

/// Exit status for a run that hit `max_sweeps` without meeting a tolerance.
pub const EXIT_MAX_SWEEPS: i32 = 2;
/// Exit status for invalid input or a numerical failure.
pub const EXIT_ERROR: i32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PsdMode {
    /// On for finite-shot data, off for exact data.
    Auto,
    On,
    Off,
}

impl PsdMode {
    pub fn resolve(self, file: &RecordsFile) -> bool {
        match self {
            PsdMode::On => true,
            PsdMode::Off => false,
            PsdMode::Auto => file.records.iter().any(|r| r.shots().is_some()),
        }
    }
}

pub struct RunRequest {
    pub records: PathBuf,
    pub truth: Option<PathBuf>,
    pub iteration: IterationConfig,
    pub psd: PsdMode,
    pub seed: u64,
    pub no_timing: bool,
}

#[derive(Serialize)]
pub struct ResultFile<'a> {
    pub estimate: &'a DensityMatrix,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub sweeps: usize,
    pub projected: bool,
    pub final_distributional: f64,
    pub purity: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hs_to_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_to_truth: Option<f64>,
}

pub struct RunOutput {
    pub result: ReconstructionResult,
    pub hs_to_truth: Option<f64>,
    pub fidelity_to_truth: Option<f64>,
    pub seed: u64,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.result.converged {
            0
        } else {
            EXIT_MAX_SWEEPS
        }
    }

    pub fn result_json(&self) -> Result<String> {
        let file = ResultFile {
            estimate: &self.result.estimate,
            converged: self.result.converged,
            stop_reason: self.result.stop_reason,
            sweeps: self.result.sweeps,
            projected: self.result.projected,
            final_distributional: self.result.final_distributional(),
            purity: purity(&self.result.estimate),
            seed: self.seed,
            hs_to_truth: self.hs_to_truth,
            fidelity_to_truth: self.fidelity_to_truth,
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    /// Writes both output files. Called only after the run succeeded, so a
    /// failed run leaves the output directory untouched.
    pub fn write(&self, out: &Path) -> Result<()> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        std::fs::write(out.join(RESULT_FILE), self.result_json()?)?;
        std::fs::write(out.join(TRACE_FILE), self.result.trace.to_csv())?;
        Ok(())
    }
}

/// Seed state for run `i` of master seed `seed`; index 0 is the single-run
/// seed, and matches the first run of a multi-start campaign.
pub fn seed_state(d: usize, seed: u64) -> Result<DensityMatrix> {
    Ok(random_pure_state(d, derive_seed(seed, 0))?)
}

pub fn run(req: &RunRequest) -> Result<RunOutput> {
    let file = RecordsFile::load(&req.records)?;
    let truth = req.truth.as_deref().map(load_state).transpose()?;
    if let Some(t) = &truth {
        anyhow::ensure!(
            t.dim() == file.dim,
            "truth has dim {}, records have {}",
            t.dim(),
            file.dim
        );
    }
    let mut cfg = req.iteration.clone();
    cfg.final_psd_projection = req.psd.resolve(&file);
    cfg.validate(file.dim)?;

    let rho0 = seed_state(file.dim, req.seed)?;
    let mut result = reconstruct_with_reference(&file.records, &rho0, &cfg, truth.as_ref())?;
    if req.no_timing {
        result.trace = result.trace.without_timing();
    }
    let hs_to_truth = truth
        .as_ref()
        .map(|t| hs_distance(result.estimate.matrix(), t.matrix()))
        .transpose()?;
    let fidelity_to_truth = truth
        .as_ref()
        .and_then(|t| fidelity_to_pure(&result.estimate, t).ok());
    Ok(RunOutput {
        result,
        hs_to_truth,
        fidelity_to_truth,
        seed: req.seed,
    })
}
