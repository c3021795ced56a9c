//! Non-degenerate observables: complementary (MUB), Haar-random and Pauli families.
//!
//! An observable is stored as its eigenbasis `U_A` (eigenvectors in the
//! columns) plus eigenvalue labels. Labels are metadata: probabilities are
//! indexed by basis column and the reconstruction never reads the labels.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;
use crate::random::{complex_gaussian, derive_seed, rng_from_seed, Rng};

pub const UNITARY_TOL: f64 = 1e-10;

/// Components below this modulus are treated as zero by the phase convention.
const PHASE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableJson", into = "ObservableJson")]
pub struct Observable {
    basis: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl Observable {
    /// Validates unitarity and distinct labels, then fixes the column phases
    /// so that the first non-negligible component of each column is real positive.
    pub fn new(basis: ComplexMatrix, eigenvalues: Vec<f64>) -> Result<Self> {
        let d = basis.dim();
        if eigenvalues.len() != d {
            return Err(Error::LengthMismatch {
                left: d,
                right: eigenvalues.len(),
            });
        }
        basis.check_finite()?;
        let deviation = basis.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let mut sorted = eigenvalues.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DegenerateLabels);
        }
        Ok(Self {
            basis: canonical_phases(basis),
            eigenvalues,
        })
    }

    /// Observable with default labels d−1, …, 0.
    pub fn from_basis(basis: ComplexMatrix) -> Result<Self> {
        let d = basis.dim();
        Self::new(basis, default_labels(d))
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector |u_j⟩ (column j of the basis).
    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        self.basis.column(j)
    }

    /// Π_j = |u_j⟩⟨u_j|.
    pub fn projector(&self, j: usize) -> Result<ComplexMatrix> {
        projector(self, j)
    }

    /// Σ_j λ_j Π_j.
    pub fn operator(&self) -> ComplexMatrix {
        crate::matcore::spectral_sum(&self.basis, &self.eigenvalues)
    }
}

pub fn projector(obs: &Observable, j: usize) -> Result<ComplexMatrix> {
    let d = obs.dim();
    if j >= d {
        return Err(Error::IndexOutOfRange { index: j, dim: d });
    }
    let u = obs.eigenvector(j);
    Ok(ComplexMatrix::outer(&u, &u))
}

fn default_labels(d: usize) -> Vec<f64> {
    (0..d).rev().map(|k| k as f64).collect()
}

fn canonical_phases(mut basis: ComplexMatrix) -> ComplexMatrix {
    let d = basis.dim();
    for j in 0..d {
        let col = basis.column(j);
        if let Some(lead) = col.iter().find(|z| z.norm() > PHASE_EPS) {
            let phase = lead.conj() / lead.norm();
            let lead_norm = lead.norm();
            let mut rotated: Vec<Complex64> = col.iter().map(|z| z * phase).collect();
            let k = col
                .iter()
                .position(|z| z.norm() > PHASE_EPS)
                .expect("found above");
            rotated[k] = Complex64::new(lead_norm, 0.0);
            basis.set_column(j, &rotated);
        }
    }
    basis
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mub,
    Random,
    Pauli,
    Custom,
}

/// Ordered list of observables of a common dimension. The order is the order
/// in which a sweep imposes them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableSetJson", into = "ObservableSetJson")]
pub struct ObservableSet {
    observables: Vec<Observable>,
    family: Family,
}

impl ObservableSet {
    pub fn new(observables: Vec<Observable>, family: Family) -> Result<Self> {
        let first = observables.first().ok_or(Error::InvalidConfig(
            "an observable set needs at least one observable".into(),
        ))?;
        let d = first.dim();
        if let Some(o) = observables.iter().find(|o| o.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: o.dim(),
            });
        }
        Ok(Self {
            observables,
            family,
        })
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observable> {
        self.observables.iter()
    }
}

impl<'a> IntoIterator for &'a ObservableSet {
    type Item = &'a Observable;
    type IntoIter = std::slice::Iter<'a, Observable>;

    fn into_iter(self) -> Self::IntoIter {
        self.observables.iter()
    }
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// First `m` of the d+1 mutually unbiased bases for prime `d`.
///
/// Basis 0 is computational. For odd d, basis a+1 has columns
/// (1/√d)·ω^{a·l² + k·l} (row l, column k), ω = e^{2πi/d}. For d = 2 the
/// bases are the σ_z, σ_x, σ_y eigenbases.
pub fn mub_set(d: usize, m: usize) -> Result<ObservableSet> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if m == 0 || m > d + 1 {
        return Err(Error::TooManyBases {
            requested: m,
            dim: d,
            max: d + 1,
        });
    }
    if d == 2 {
        let all = pauli_bases();
        let obs = all
            .into_iter()
            .take(m)
            .map(Observable::from_basis)
            .collect::<Result<Vec<_>>>()?;
        return ObservableSet::new(obs, Family::Mub);
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut obs = Vec::with_capacity(m);
    obs.push(Observable::from_basis(ComplexMatrix::identity(d))?);
    for a in 0..(m - 1) {
        let basis = ComplexMatrix::from_fn(d, |l, k| {
            // exponent reduced mod d keeps the angle exact for large l
            let e = (a * l * l + k * l) % d;
            Complex64::from_polar(scale, 2.0 * PI * e as f64 / d as f64)
        });
        obs.push(Observable::from_basis(basis)?);
    }
    ObservableSet::new(obs, Family::Mub)
}

fn pauli_bases() -> Vec<ComplexMatrix> {
    let h = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    vec![
        ComplexMatrix::identity(2),
        ComplexMatrix::from_rows(vec![
            vec![c(h, 0.0), c(h, 0.0)],
            vec![c(h, 0.0), c(-h, 0.0)],
        ])
        .expect("static"),
        ComplexMatrix::from_rows(vec![
            vec![c(h, 0.0), c(h, 0.0)],
            vec![c(0.0, h), c(0.0, -h)],
        ])
        .expect("static"),
    ]
}

/// σ_z, σ_x, σ_y eigenbases with labels (+1, −1).
pub fn pauli_set() -> ObservableSet {
    let obs = pauli_bases()
        .into_iter()
        .map(|b| Observable::new(b, vec![1.0, -1.0]).expect("static"))
        .collect();
    ObservableSet::new(obs, Family::Pauli).expect("static")
}

/// Haar-random unitary: Gram-Schmidt QR of a Ginibre matrix. Gram-Schmidt
/// yields a positive real R diagonal, which is the phase normalization that
/// makes Q Haar distributed.
pub fn haar_unitary(d: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        // two passes of modified Gram-Schmidt for orthogonality at machine precision
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(d, |r, c| cols[c][r])
}

/// `m` Haar-random observables with labels 0, …, d−1. Observable i is drawn
/// from its own stream so prefixes of the set do not depend on `m`.
pub fn random_observable_set(d: usize, m: usize, seed: u64) -> Result<ObservableSet> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if m == 0 {
        return Err(Error::InvalidConfig(
            "random observable set needs m >= 1".into(),
        ));
    }
    let labels: Vec<f64> = (0..d).map(|k| k as f64).collect();
    let obs = (0..m)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            Observable::new(haar_unitary(d, &mut rng), labels.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ObservableSet::new(obs, Family::Random)
}

/// Largest deviation of |(U†V)_ij|² from 1/d.
pub fn unbiasedness_deviation(a: &Observable, b: &Observable) -> f64 {
    let d = a.dim();
    let overlap = a.basis().adjoint().matmul(b.basis());
    let target = 1.0 / d as f64;
    overlap
        .as_slice()
        .iter()
        .map(|z| (z.norm_sqr() - target).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
struct ObservableJson {
    basis: ComplexMatrix,
    eigenvalues: Vec<f64>,
}

impl TryFrom<ObservableJson> for Observable {
    type Error = Error;

    fn try_from(j: ObservableJson) -> Result<Self> {
        Observable::new(j.basis, j.eigenvalues)
    }
}

impl From<Observable> for ObservableJson {
    fn from(o: Observable) -> Self {
        ObservableJson {
            basis: o.basis,
            eigenvalues: o.eigenvalues,
        }
    }
}

/// `{ "dim": d, "bases": [<matrix>...], "family": ... }`. Labels are not on the
/// wire; they are restored from the family convention.
#[derive(Serialize, Deserialize)]
struct ObservableSetJson {
    dim: usize,
    bases: Vec<ComplexMatrix>,
    family: Family,
}

impl TryFrom<ObservableSetJson> for ObservableSet {
    type Error = Error;

    fn try_from(j: ObservableSetJson) -> Result<Self> {
        let labels = match j.family {
            Family::Pauli => vec![1.0, -1.0],
            Family::Random => (0..j.dim).map(|k| k as f64).collect(),
            Family::Mub | Family::Custom => default_labels(j.dim),
        };
        let obs = j
            .bases
            .into_iter()
            .map(|b| {
                if b.dim() != j.dim {
                    return Err(Error::DimensionMismatch {
                        expected: j.dim,
                        found: b.dim(),
                    });
                }
                Observable::new(b, labels.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        ObservableSet::new(obs, j.family)
    }
}

impl From<ObservableSet> for ObservableSetJson {
    fn from(s: ObservableSet) -> Self {
        ObservableSetJson {
            dim: s.dim(),
            family: s.family,
            bases: s.observables.into_iter().map(|o| o.basis).collect(),
        }
    }
}
