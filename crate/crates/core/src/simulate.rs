//! Measurement simulation: Born-rule probabilities, finite-shot sampling and
//! depolarizing preparation error.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;
use crate::metrics::PROB_TOL;
use crate::observables::{Observable, ObservableSet};
use crate::random::{derive_seed, rng_from_seed};
use crate::states::DensityMatrix;

/// Negative Born probabilities down to this value are round-off and clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
const RENORMALIZE_DRIFT: f64 = 1e-14;

/// One observable with its outcome distribution; `shots` is `None` for exact data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordJson", into = "RecordJson")]
pub struct MeasurementRecord {
    observable: Observable,
    probabilities: Vec<f64>,
    shots: Option<u64>,
}

impl MeasurementRecord {
    /// Validates `p` (nonnegative, sums to 1 within 1e-9) and renormalizes it.
    pub fn new(
        observable: Observable,
        probabilities: Vec<f64>,
        shots: Option<u64>,
    ) -> Result<Self> {
        if probabilities.len() != observable.dim() {
            return Err(Error::DimensionMismatch {
                expected: observable.dim(),
                found: probabilities.len(),
            });
        }
        if shots == Some(0) {
            return Err(Error::InvalidShots);
        }
        let probabilities = crate::metrics::normalized_probabilities(&probabilities, PROB_TOL)?;
        Ok(Self {
            observable,
            probabilities,
            shots,
        })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    /// D_A: the probabilities on the diagonal.
    pub fn diagonal_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::diag_embed_real(&self.probabilities)
    }
}

/// Real part of diag(U† M U): ⟨u_j|M|u_j⟩ for each eigenvector, no clamping.
pub fn expectation_diagonal(m: &ComplexMatrix, obs: &Observable) -> Result<Vec<f64>> {
    if m.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: m.dim(),
        });
    }
    let d = m.dim();
    let u = obs.basis();
    Ok((0..d)
        .map(|j| {
            let col = u.column(j);
            let mu = m.apply(&col);
            col.iter().zip(&mu).map(|(a, b)| (a.conj() * b).re).sum()
        })
        .collect())
}

/// p_j = Tr(ρ Π_j).
pub fn born_probabilities(rho: &DensityMatrix, obs: &Observable) -> Result<Vec<f64>> {
    let mut p = expectation_diagonal(rho.matrix(), obs)?;
    for (j, x) in p.iter_mut().enumerate() {
        if *x < 0.0 {
            if *x < -NEGATIVE_CLAMP {
                return Err(Error::NegativeProbability {
                    outcome: j,
                    value: *x,
                });
            }
            *x = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_DRIFT {
        p.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(p)
}

/// Multinomial frequencies from `shots` draws of the Born distribution,
/// sampled as a chain of conditional binomials.
pub fn sample_record(
    rho: &DensityMatrix,
    obs: &Observable,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let p = born_probabilities(rho, obs)?;
    let counts = multinomial(&p, shots, seed);
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    MeasurementRecord::new(obs.clone(), freqs, Some(shots))
}

fn multinomial(p: &[f64], n: u64, seed: u64) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; p.len()];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    for (j, &pj) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j == p.len() - 1 {
            counts[j] = remaining;
            break;
        }
        let q = if mass_left > 0.0 {
            (pj / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = if q == 0.0 {
            0
        } else if q == 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("q in (0,1)")
                .sample(&mut rng)
        };
        counts[j] = k;
        remaining -= k;
        mass_left -= pj;
    }
    counts
}

/// (1 − ε) ρ + ε I/d.
pub fn depolarize(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let d = rho.dim();
    let mixed = ComplexMatrix::identity(d).scale(eps / d as f64);
    let out = &rho.matrix().scale(1.0 - eps) + &mixed;
    Ok(DensityMatrix::from_trusted(out))
}

/// One record per observable in set order. Finite-shot records use the
/// per-index child seed `derive_seed(seed, i)`.
pub fn record_set(
    rho: &DensityMatrix,
    set: &ObservableSet,
    shots: Option<u64>,
    seed: u64,
) -> Result<Vec<MeasurementRecord>> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: rho.dim(),
        });
    }
    set.iter()
        .enumerate()
        .map(|(i, obs)| match shots {
            Some(n) => sample_record(rho, obs, n, derive_seed(seed, i as u64)),
            None => MeasurementRecord::new(obs.clone(), born_probabilities(rho, obs)?, None),
        })
        .collect()
}

/// Every record must share one dimension; returns it.
pub fn common_dim(records: &[MeasurementRecord]) -> Result<usize> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let d = first.dim();
    match records.iter().find(|r| r.dim() != d) {
        Some(r) => Err(Error::DimensionMismatch {
            expected: d,
            found: r.dim(),
        }),
        None => Ok(d),
    }
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    observable: Observable,
    p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
}

impl TryFrom<RecordJson> for MeasurementRecord {
    type Error = Error;

    fn try_from(j: RecordJson) -> Result<Self> {
        MeasurementRecord::new(j.observable, j.p, j.shots)
    }
}

impl From<MeasurementRecord> for RecordJson {
    fn from(r: MeasurementRecord) -> Self {
        RecordJson {
            observable: r.observable,
            p: r.probabilities,
            shots: r.shots,
        }
    }
}
