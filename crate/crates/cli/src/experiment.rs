//! Experiment configuration and synthetic data generation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qst_core::observables::is_prime;
use qst_core::random::derive_seed;
use qst_core::{
    depolarize, mub_set, pauli_set, random_mixed_state, random_observable_set, random_pure_state,
    record_set, DensityMatrix, IterationConfig, MeasurementRecord, ObservableSet,
};

/// Where the measured observables come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySpec {
    Mub,
    Random,
    Pauli,
    File(PathBuf),
}

impl FromStr for FamilySpec {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "mub" => FamilySpec::Mub,
            "random" => FamilySpec::Random,
            "pauli" => FamilySpec::Pauli,
            path => FamilySpec::File(PathBuf::from(path)),
        })
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Mub => f.write_str("mub"),
            FamilySpec::Random => f.write_str("random"),
            FamilySpec::Pauli => f.write_str("pauli"),
            FamilySpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// How the true state is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TruthSpec {
    Pure,
    Mixed,
    File(PathBuf),
}

impl FromStr for TruthSpec {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "pure" => TruthSpec::Pure,
            "mixed" => TruthSpec::Mixed,
            path => TruthSpec::File(PathBuf::from(path)),
        })
    }
}

impl fmt::Display for TruthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthSpec::Pure => f.write_str("pure"),
            TruthSpec::Mixed => f.write_str("mixed"),
            TruthSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Everything needed to generate and reconstruct one synthetic experiment.
/// Loadable from JSON; absent fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// `mub`, `random`, `pauli` or a path to an observable-set JSON file.
    pub family: String,
    /// Number of observables; defaults to d + 1 (3 for pauli).
    pub m: Option<usize>,
    /// `pure`, `mixed` or a path to a density-matrix JSON file.
    pub true_state: String,
    /// Rank of a `mixed` true state; defaults to d.
    pub true_rank: Option<usize>,
    /// Shots per observable; absent for exact probabilities.
    pub shots: Option<u64>,
    /// Depolarizing preparation error applied to the true state.
    pub eps: f64,
    pub iteration: IterationConfig,
    pub n_seeds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            family: "mub".into(),
            m: None,
            true_state: "pure".into(),
            true_rank: None,
            shots: None,
            eps: 0.0,
            iteration: IterationConfig::default(),
            n_seeds: 1,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn family_spec(&self) -> FamilySpec {
        self.family.parse().unwrap_or(FamilySpec::Random)
    }

    pub fn truth_spec(&self) -> TruthSpec {
        self.true_state.parse().unwrap_or(TruthSpec::Pure)
    }

    pub fn observable_count(&self) -> usize {
        self.m.unwrap_or(match self.family_spec() {
            FamilySpec::Pauli => 3,
            _ => self.dim + 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d < 2 {
            bail!("dim must be at least 2, got {d}");
        }
        let m = self.observable_count();
        if m == 0 {
            bail!("m must be at least 1");
        }
        match self.family_spec() {
            FamilySpec::Pauli if d != 2 => bail!("family pauli requires dim 2, got {d}"),
            FamilySpec::Pauli if m > 3 => bail!("family pauli has 3 observables, requested {m}"),
            FamilySpec::Mub if !is_prime(d) => bail!("family mub requires a prime dim, got {d}"),
            FamilySpec::Mub if m > d + 1 => bail!(
                "family mub has at most {} bases in dim {d}, requested {m}",
                d + 1
            ),
            _ => {}
        }
        if let Some(r) = self.true_rank {
            if r == 0 || r > d {
                bail!("true_rank must be in 1..={d}, got {r}");
            }
        }
        if self.shots == Some(0) {
            bail!("shots must be positive");
        }
        if !(0.0..=1.0).contains(&self.eps) {
            bail!("eps must be in [0, 1], got {}", self.eps);
        }
        if self.n_seeds == 0 {
            bail!("n_seeds must be at least 1");
        }
        self.iteration.validate(d)?;
        Ok(())
    }
}

/// Records file: the measurement records plus their common dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsFile {
    pub dim: usize,
    pub records: Vec<MeasurementRecord>,
}

impl RecordsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading records {}", path.display()))?;
        let file: RecordsFile = serde_json::from_str(&text)
            .with_context(|| format!("invalid records file {}", path.display()))?;
        if file.records.is_empty() {
            bail!("records file {} contains no records", path.display());
        }
        if let Some((i, r)) = file
            .records
            .iter()
            .enumerate()
            .find(|(_, r)| r.dim() != file.dim)
        {
            bail!(
                "record {i} has dimension {}, file declares {}",
                r.dim(),
                file.dim
            );
        }
        Ok(file)
    }
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading state {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid state file {}", path.display()))
}

/// Child seeds of the master seed, one per random ingredient.
const TRUTH_STREAM: u64 = 0;
const OBSERVABLE_STREAM: u64 = 1;
const SAMPLING_STREAM: u64 = 2;

pub fn observable_set(cfg: &ExperimentConfig) -> Result<ObservableSet> {
    let m = cfg.observable_count();
    let set = match cfg.family_spec() {
        FamilySpec::Mub => mub_set(cfg.dim, m)?,
        FamilySpec::Random => {
            random_observable_set(cfg.dim, m, derive_seed(cfg.seed, OBSERVABLE_STREAM))?
        }
        FamilySpec::Pauli => {
            let full = pauli_set();
            ObservableSet::new(full.observables()[..m].to_vec(), full.family())?
        }
        FamilySpec::File(path) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            let set: ObservableSet = serde_json::from_str(&text)
                .with_context(|| format!("invalid observable set {}", path.display()))?;
            if set.dim() != cfg.dim {
                bail!(
                    "observable set {} has dim {}, config has {}",
                    path.display(),
                    set.dim(),
                    cfg.dim
                );
            }
            if cfg.m.is_some_and(|m| m != set.len()) {
                bail!(
                    "observable set {} has {} observables, config asks for {m}",
                    path.display(),
                    set.len()
                );
            }
            set
        }
    };
    Ok(set)
}

/// The state actually measured: the chosen true state after preparation error.
pub fn prepared_state(cfg: &ExperimentConfig) -> Result<DensityMatrix> {
    let seed = derive_seed(cfg.seed, TRUTH_STREAM);
    let truth = match cfg.truth_spec() {
        TruthSpec::Pure => random_pure_state(cfg.dim, seed)?,
        TruthSpec::Mixed => random_mixed_state(cfg.dim, cfg.true_rank.unwrap_or(cfg.dim), seed)?,
        TruthSpec::File(path) => {
            let rho = load_state(&path)?;
            if rho.dim() != cfg.dim {
                bail!(
                    "state {} has dim {}, config has {}",
                    path.display(),
                    rho.dim(),
                    cfg.dim
                );
            }
            rho
        }
    };
    Ok(depolarize(&truth, cfg.eps)?)
}

/// Simulates the configured experiment: (records, prepared true state).
pub fn generate(cfg: &ExperimentConfig) -> Result<(RecordsFile, DensityMatrix)> {
    cfg.validate()?;
    let truth = prepared_state(cfg)?;
    let set = observable_set(cfg)?;
    let records = record_set(
        &truth,
        &set,
        cfg.shots,
        derive_seed(cfg.seed, SAMPLING_STREAM),
    )?;
    Ok((
        RecordsFile {
            dim: cfg.dim,
            records,
        },
        truth,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_messages() {
        let cfg = ExperimentConfig {
            dim: 4,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("prime"));
        let cfg = ExperimentConfig {
            dim: 3,
            family: "pauli".into(),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("dim 2"));
        let cfg = ExperimentConfig {
            dim: 3,
            m: Some(5),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"dim": 3, "family": "random"}"#).unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.observable_count(), 4);
        assert_eq!(cfg.iteration, IterationConfig::default());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dimm": 3}"#).is_err());
    }

    #[test]
    fn generate_shapes() {
        let cfg = ExperimentConfig {
            dim: 3,
            m: Some(4),
            seed: 1,
            ..Default::default()
        };
        let (file, truth) = generate(&cfg).unwrap();
        assert_eq!(file.records.len(), 4);
        assert!(file
            .records
            .iter()
            .all(|r| r.probabilities().len() == 3 && r.shots().is_none()));
        assert!((qst_core::purity(&truth) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_subset() {
        let cfg = ExperimentConfig {
            family: "pauli".into(),
            m: Some(2),
            ..Default::default()
        };
        assert_eq!(observable_set(&cfg).unwrap().len(), 2);
    }
}
