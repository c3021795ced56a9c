//! Reference estimator: least-squares linear inversion of the Born constraints
//! followed by projection onto the PSD cone.
//!
//! Unit-trace Hermitian matrices are parameterized as H = I/d + Σ_a x_a G_a
//! with {G_a} the d²−1 generalized Gell-Mann matrices, normalized so that
//! Tr(G_a G_b) = δ_ab. Then ‖H‖_F² = 1/d + ‖x‖², and the minimum-norm
//! least-squares x gives the minimum-Frobenius-norm H.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, spectral_sum, ComplexMatrix};
use crate::simulate::{common_dim, MeasurementRecord};
use crate::states::{validate_state, DensityMatrix, IntermediateState, STATE_TOL};

/// Normal-equation eigenvalues below this fraction of the largest are treated as zero.
pub const PINV_REL_CUTOFF: f64 = 1e-12;

/// One generalized Gell-Mann generator, normalized to unit HS norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GellMann {
    /// (|k⟩⟨l| + |l⟩⟨k|)/√2, k < l
    Symmetric(usize, usize),
    /// (−i|k⟩⟨l| + i|l⟩⟨k|)/√2, k < l
    Antisymmetric(usize, usize),
    /// (Σ_{k<l} |k⟩⟨k| − l|l⟩⟨l|)/√(l(l+1)), 1 ≤ l < d
    Diagonal(usize),
}

impl GellMann {
    /// Fixed ordering: all symmetric, then antisymmetric, then diagonal generators.
    pub fn basis(d: usize) -> Vec<GellMann> {
        let mut out = Vec::with_capacity(d * d - 1);
        for k in 0..d {
            for l in (k + 1)..d {
                out.push(GellMann::Symmetric(k, l));
            }
        }
        for k in 0..d {
            for l in (k + 1)..d {
                out.push(GellMann::Antisymmetric(k, l));
            }
        }
        for l in 1..d {
            out.push(GellMann::Diagonal(l));
        }
        out
    }

    pub fn matrix(self, d: usize) -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = ComplexMatrix::zeros(d);
        match self {
            GellMann::Symmetric(k, l) => {
                m[(k, l)] = Complex64::new(s, 0.0);
                m[(l, k)] = Complex64::new(s, 0.0);
            }
            GellMann::Antisymmetric(k, l) => {
                m[(k, l)] = Complex64::new(0.0, -s);
                m[(l, k)] = Complex64::new(0.0, s);
            }
            GellMann::Diagonal(l) => {
                let n = 1.0 / ((l * (l + 1)) as f64).sqrt();
                for k in 0..l {
                    m[(k, k)] = Complex64::new(n, 0.0);
                }
                m[(l, l)] = Complex64::new(-(l as f64) * n, 0.0);
            }
        }
        m
    }

    /// ⟨u|G|u⟩ without forming G.
    pub fn expectation(self, u: &[Complex64]) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        match self {
            GellMann::Symmetric(k, l) => s2 * (u[k].conj() * u[l]).re,
            GellMann::Antisymmetric(k, l) => s2 * (u[k].conj() * u[l]).im,
            GellMann::Diagonal(l) => {
                let head: f64 = u[..l].iter().map(|z| z.norm_sqr()).sum();
                (head - l as f64 * u[l].norm_sqr()) / ((l * (l + 1)) as f64).sqrt()
            }
        }
    }
}

/// Minimum-norm Hermitian unit-trace H minimizing Σ (Tr(H Π_j) − p_j)².
pub fn linear_inversion(records: &[MeasurementRecord]) -> Result<IntermediateState> {
    let d = common_dim(records)?;
    let gens = GellMann::basis(d);
    let n = gens.len();
    let offset = 1.0 / d as f64;

    // normal equations N x = rhs, accumulated row by row
    let mut normal = vec![0.0f64; n * n];
    let mut rhs = vec![0.0f64; n];
    let mut row = vec![0.0f64; n];
    for rec in records {
        let obs = rec.observable();
        for (j, &pj) in rec.probabilities().iter().enumerate() {
            let u = obs.eigenvector(j);
            for (slot, g) in row.iter_mut().zip(&gens) {
                *slot = g.expectation(&u);
            }
            let b = pj - offset;
            for a in 0..n {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                rhs[a] += ra * b;
                for c in 0..n {
                    normal[a * n + c] += ra * row[c];
                }
            }
        }
    }

    let coeffs = pseudo_inverse_solve(&normal, &rhs, n)?;
    let mut h = ComplexMatrix::identity(d).scale(offset);
    for (x, g) in coeffs.iter().zip(&gens) {
        if *x != 0.0 {
            h = &h + &g.matrix(d).scale(*x);
        }
    }
    IntermediateState::new(h.hermitian_part())
}

fn pseudo_inverse_solve(normal: &[f64], rhs: &[f64], n: usize) -> Result<Vec<f64>> {
    let sym = ComplexMatrix::from_fn(n, |r, c| {
        Complex64::new(0.5 * (normal[r * n + c] + normal[c * n + r]), 0.0)
    });
    let eig = hermitian_eig(&sym)?;
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = PINV_REL_CUTOFF * top;
    let mut x = vec![0.0f64; n];
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        // N is real symmetric, so the eigenvectors can be taken real up to a phase
        let proj: Complex64 = v.iter().zip(rhs).map(|(a, &b)| a.conj() * b).sum();
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi += (proj * vi).re / lambda;
        }
    }
    Ok(x)
}

/// sqrt(Σ_{records, j} (Tr(H Π_j) − p_j)²).
pub fn born_residual(records: &[MeasurementRecord], h: &ComplexMatrix) -> Result<f64> {
    let mut acc = 0.0;
    for rec in records {
        let q = crate::simulate::expectation_diagonal(h, rec.observable())?;
        acc += q
            .iter()
            .zip(rec.probabilities())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    }
    Ok(acc.sqrt())
}

/// Clip negative eigenvalues to zero and renormalize the spectrum.
pub fn psd_project(h: &IntermediateState) -> Result<DensityMatrix> {
    let eig = hermitian_eig(h.matrix())?;
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if sum <= 1e-12 {
        return Err(Error::AllNonPositive { sum });
    }
    let weights: Vec<f64> = clipped.iter().map(|l| l / sum).collect();
    validate_state(&spectral_sum(&eig.eigenvectors, &weights), STATE_TOL)
}

/// psd_project(linear_inversion(records)).
pub fn baseline_estimate(records: &[MeasurementRecord]) -> Result<DensityMatrix> {
    psd_project(&linear_inversion(records)?)
}
