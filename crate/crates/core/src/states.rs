//! Density matrices, unit-trace Hermitian iterates, and random state generation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, ComplexMatrix, HERMITIAN_TOL};
use crate::random::{complex_gaussian, rng_from_seed, Rng};

/// Tolerance used when wrapping freshly constructed states.
pub const STATE_TOL: f64 = 1e-9;
/// Purity deviation allowed for a reference state to count as pure.
pub const PURE_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

/// Hermitian unit-trace matrix that may leave the PSD cone.
#[derive(Clone, Debug, PartialEq)]
pub struct IntermediateState(ComplexMatrix);

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// |ψ⟩⟨ψ| for a normalized vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        check_normalized(psi, 1e-10)?;
        Ok(Self(ComplexMatrix::outer(psi, psi).hermitian_part()))
    }

    /// I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }

    /// Wraps a matrix that is known to be a state by construction.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        debug_assert!(validate_state(&m, 1e-8).is_ok());
        Self(m)
    }
}

impl IntermediateState {
    /// Checks Hermiticity and unit trace (PSD is not required).
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.check_finite()?;
        m.check_hermitian(HERMITIAN_TOL)?;
        let trace = m.trace().re;
        if (trace - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::TraceNotOne {
                trace,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(Self(m.hermitian_part()))
    }

    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl From<DensityMatrix> for IntermediateState {
    fn from(rho: DensityMatrix) -> Self {
        Self(rho.0)
    }
}

impl From<&DensityMatrix> for IntermediateState {
    fn from(rho: &DensityMatrix) -> Self {
        Self(rho.0.clone())
    }
}

/// Checks Hermiticity, unit trace and positivity, each against `tol`.
pub fn validate_state(m: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    m.check_finite()?;
    m.check_hermitian(tol)?;
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(Error::TraceNotOne { trace, tol });
    }
    let h = m.hermitian_part();
    let min_eigenvalue = hermitian_eig(&h)?.min_eigenvalue();
    if min_eigenvalue < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue,
            tol,
        });
    }
    Ok(DensityMatrix(h))
}

/// Haar-distributed unit vector: normalized complex Gaussian.
pub fn random_state_vector(d: usize, rng: &mut Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure_state(d: usize, seed: u64) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let psi = random_state_vector(d, &mut rng_from_seed(seed));
    DensityMatrix::from_pure(&psi)
}

/// Pure state together with its generating vector.
pub fn random_pure_vector(d: usize, seed: u64) -> Result<Vec<Complex64>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(random_state_vector(d, &mut rng_from_seed(seed)))
}

/// Rank-r state G G† / Tr(G G†) with G a d×r Ginibre matrix.
pub fn random_mixed_state(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if rank == 0 || rank > d {
        return Err(Error::InvalidRank { rank, dim: d });
    }
    let mut rng = rng_from_seed(seed);
    let g: Vec<Vec<Complex64>> = (0..d)
        .map(|_| (0..rank).map(|_| complex_gaussian(&mut rng)).collect())
        .collect();
    let m = ComplexMatrix::from_fn(d, |r, c| {
        g[r].iter().zip(&g[c]).map(|(a, b)| a * b.conj()).sum()
    });
    let trace = m.trace().re;
    Ok(DensityMatrix(m.scale(1.0 / trace).hermitian_part()))
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = ‖ρ‖_F² for Hermitian ρ
    rho.0.frobenius_norm().powi(2)
}

/// Tr(ρψ) for a pure reference ψ.
pub fn fidelity_to_pure(rho: &DensityMatrix, psi: &DensityMatrix) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: rho.dim(),
        });
    }
    let p = purity(psi);
    if (p - 1.0).abs() > PURE_TOL {
        return Err(Error::NotPure {
            purity: p,
            tol: PURE_TOL,
        });
    }
    let d = rho.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            acc += rho.0[(r, c)] * psi.0[(c, r)];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

pub(crate) fn check_normalized(psi: &[Complex64], tol: f64) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm, tol });
    }
    Ok(())
}

/// `{ "kind": "density", "dim": d, "re": ..., "im": ... }`
#[derive(Serialize, Deserialize)]
struct DensityJson {
    kind: String,
    #[serde(flatten)]
    matrix: ComplexMatrix,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson {
            kind: "density".into(),
            matrix: self.0.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = DensityJson::deserialize(d)?;
        if j.kind != "density" {
            return Err(D::Error::custom(format!(
                "expected kind \"density\", found \"{}\"",
                j.kind
            )));
        }
        validate_state(&j.matrix, STATE_TOL).map_err(D::Error::custom)
    }
}
