//! The physical imposition operator and the fixed-point iteration built on it.
//!
//! Convention: the columns of `U_A` are the eigenvectors of `A`, so the
//! probabilities of `A` are the diagonal of `U_A† σ U_A`. Imposing `p` rotates
//! σ into that frame, overwrites the diagonal with `p` and rotates back:
//!
//! ```text
//! T_A(σ) = U_A (U_A† σ U_A − Diag[U_A† σ U_A] + diag(p)) U_A†
//!        = σ + U_A Diag[diag(p) − U_A† σ U_A] U_A†
//! ```
//!
//! The rank-r variant diagonalizes `T_A(σ)`, keeps the r largest spectral
//! components and renormalizes. A sweep applies the operators for every
//! record in order; [`reconstruct`] repeats sweeps until a stopping rule fires.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::psd_project;
use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, spectral_sum, ComplexMatrix};
use crate::metrics::{hellinger_unchecked, hs_distance, normalized_probabilities, PROB_TOL};
use crate::observables::Observable;
use crate::random::derive_seed;
use crate::simulate::{common_dim, expectation_diagonal, MeasurementRecord};
use crate::states::{
    check_normalized, purity, random_pure_state, validate_state, DensityMatrix, IntermediateState,
    PURE_TOL, STATE_TOL,
};

/// Minimum gap between the last kept and first dropped eigenvalue.
pub const RANK_GAP_TOL: f64 = 1e-12;
/// Amplitudes below this modulus get phase 1 in [`impose_pure`].
pub const ZERO_AMPLITUDE: f64 = 1e-15;

fn check_inputs(obs: &Observable, p: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: dim,
        });
    }
    if p.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.len(),
        });
    }
    normalized_probabilities(p, PROB_TOL)
}

/// T_A(σ): replace the diagonal of σ in the eigenbasis of `obs` by `p`.
///
/// Off-diagonal entries in that basis are untouched, so the output satisfies
/// the imposed statistics exactly and stays Hermitian with unit trace.
pub fn impose(obs: &Observable, p: &[f64], sigma: &IntermediateState) -> Result<IntermediateState> {
    let p = check_inputs(obs, p, sigma.dim())?;
    let u = obs.basis();
    let mut rotated = sigma.matrix().conjugate_by_adjoint(u);
    for (j, &pj) in p.iter().enumerate() {
        rotated[(j, j)] = Complex64::new(pj, 0.0);
    }
    Ok(IntermediateState::from_trusted(
        rotated.conjugate_by(u).hermitian_part(),
    ))
}

/// T_A(σ) in additive form σ + Σ_j (p_j − ⟨u_j|σ|u_j⟩) |u_j⟩⟨u_j|.
///
/// Algebraically equal to [`impose`]; kept as an independent evaluation path.
pub fn impose_additive(
    obs: &Observable,
    p: &[f64],
    sigma: &IntermediateState,
) -> Result<IntermediateState> {
    let p = check_inputs(obs, p, sigma.dim())?;
    let current = expectation_diagonal(sigma.matrix(), obs)?;
    let deltas: Vec<f64> = p.iter().zip(&current).map(|(a, b)| a - b).collect();
    let correction = spectral_sum(obs.basis(), &deltas);
    Ok(IntermediateState::from_trusted(
        (sigma.matrix() + &correction).hermitian_part(),
    ))
}

/// T_A^(r)(σ): impose, then keep the `rank` largest spectral components and renormalize.
///
/// Fails with [`Error::RankDegenerate`] when the boundary eigenvalues are
/// within [`RANK_GAP_TOL`] of each other and the dropped one is not negligible,
/// since the truncation is then not uniquely defined.
pub fn impose_rank(
    obs: &Observable,
    p: &[f64],
    sigma: &IntermediateState,
    rank: usize,
) -> Result<IntermediateState> {
    let d = sigma.dim();
    if rank == 0 || rank > d {
        return Err(Error::InvalidRank { rank, dim: d });
    }
    let imposed = impose(obs, p, sigma)?;
    truncate_rank(imposed.matrix(), rank).map(IntermediateState::from_trusted)
}

fn truncate_rank(m: &ComplexMatrix, rank: usize) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let lambda = &eig.eigenvalues;
    if rank < lambda.len() {
        let kept = lambda[rank - 1];
        let dropped = lambda[rank];
        if kept - dropped < RANK_GAP_TOL && dropped.abs() > RANK_GAP_TOL {
            return Err(Error::RankDegenerate {
                rank,
                kept,
                dropped,
            });
        }
    }
    let sum: f64 = lambda[..rank].iter().sum();
    if sum <= 1e-12 {
        return Err(Error::NonPositiveTruncation { sum });
    }
    let weights: Vec<f64> = lambda[..rank].iter().map(|l| l / sum).collect();
    Ok(spectral_sum(&eig.eigenvectors, &weights))
}

/// Pure-state imposition |Ψ₁⟩ = Σ_k √p_k · (⟨u_k|Ψ₀⟩ / |⟨u_k|Ψ₀⟩|) · |u_k⟩.
///
/// A vanishing amplitude ⟨u_k|Ψ₀⟩ contributes phase 1.
pub fn impose_pure(obs: &Observable, p: &[f64], psi: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = check_inputs(obs, p, psi.len())?;
    check_normalized(psi, 1e-10)?;
    let d = psi.len();
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for (k, &pk) in p.iter().enumerate() {
        let u = obs.eigenvector(k);
        let amp: Complex64 = u.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        let phase = if amp.norm() > ZERO_AMPLITUDE {
            amp / amp.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let coeff = phase * pk.sqrt();
        for (o, x) in out.iter_mut().zip(&u) {
            *o += coeff * x;
        }
    }
    Ok(out)
}

/// One pass of T_{A_m} ∘ … ∘ T_{A_1}, records applied in list order.
pub fn sweep(
    records: &[MeasurementRecord],
    sigma: &IntermediateState,
    rank: Option<usize>,
) -> Result<IntermediateState> {
    let mut state = sigma.clone();
    for rec in records {
        state = match rank {
            Some(r) => impose_rank(rec.observable(), rec.probabilities(), &state, r)?,
            None => impose(rec.observable(), rec.probabilities(), &state)?,
        };
    }
    Ok(state)
}

/// Outcome distribution of an iterate for one observable. Iterates may leave
/// the PSD cone, so negative entries are clamped and the vector renormalized.
pub fn model_probabilities(state: &ComplexMatrix, obs: &Observable) -> Result<Vec<f64>> {
    let mut q = expectation_diagonal(state, obs)?;
    clamp_renormalize(&mut q);
    Ok(q)
}

fn clamp_renormalize(q: &mut [f64]) {
    q.iter_mut().for_each(|x| *x = x.max(0.0));
    let sum: f64 = q.iter().sum();
    if sum > 0.0 {
        q.iter_mut().for_each(|x| *x /= sum);
    }
}

/// Scratch space for the unconstrained sweep, evaluated in place in the
/// additive form σ += U diag(p − q) U† with q = Diag[U† σ U]. This is the
/// same map as [`impose`] without the two full basis rotations and without
/// allocating per record; the driver spends nearly all of its time here.
struct SweepKernel {
    d: usize,
    su: Vec<Complex64>,
    scaled: Vec<Complex64>,
    q: Vec<f64>,
}

impl SweepKernel {
    fn new(d: usize) -> Self {
        Self {
            d,
            su: vec![Complex64::new(0.0, 0.0); d * d],
            scaled: vec![Complex64::new(0.0, 0.0); d * d],
            q: vec![0.0; d],
        }
    }

    /// q_j = ⟨u_j|σ|u_j⟩, leaving σU in `self.su`.
    fn diagonal(&mut self, sigma: &[Complex64], u: &[Complex64]) -> &[f64] {
        let d = self.d;
        self.su
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        for r in 0..d {
            let out = &mut self.su[r * d..(r + 1) * d];
            for k in 0..d {
                let s = sigma[r * d + k];
                for (o, x) in out.iter_mut().zip(&u[k * d..(k + 1) * d]) {
                    *o += s * x;
                }
            }
        }
        self.q.iter_mut().for_each(|x| *x = 0.0);
        for r in 0..d {
            for j in 0..d {
                let a = u[r * d + j];
                let b = self.su[r * d + j];
                self.q[j] += a.re * b.re + a.im * b.im;
            }
        }
        &self.q
    }

    fn impose(&mut self, sigma: &mut [Complex64], u: &[Complex64], p: &[f64]) {
        let d = self.d;
        self.diagonal(sigma, u);
        for r in 0..d {
            for j in 0..d {
                self.scaled[r * d + j] = u[r * d + j] * (p[j] - self.q[j]);
            }
        }
        // the correction is Hermitian: fill the upper triangle and mirror it
        for r in 0..d {
            let vr = &self.scaled[r * d..(r + 1) * d];
            for c in r..d {
                let uc = &u[c * d..(c + 1) * d];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in vr.iter().zip(uc) {
                    acc += a * b.conj();
                }
                if c == r {
                    sigma[r * d + r].re += acc.re;
                    sigma[r * d + r].im = 0.0;
                } else {
                    let z = sigma[r * d + c] + acc;
                    sigma[r * d + c] = z;
                    sigma[c * d + r] = z.conj();
                }
            }
        }
    }

    fn sweep(&mut self, records: &[MeasurementRecord], sigma: &mut ComplexMatrix) {
        let data = sigma.as_mut_slice();
        for rec in records {
            self.impose(
                data,
                rec.observable().basis().as_slice(),
                rec.probabilities(),
            );
        }
    }

    fn residual(&mut self, records: &[MeasurementRecord], sigma: &ComplexMatrix) -> f64 {
        let mut acc = 0.0;
        for rec in records {
            self.diagonal(sigma.as_slice(), rec.observable().basis().as_slice());
            clamp_renormalize(&mut self.q);
            acc += hellinger_unchecked(rec.probabilities(), &self.q).powi(2);
        }
        (acc / records.len() as f64).sqrt()
    }
}

/// Distributional distance between the iterate's statistics and the records.
pub fn distributional_residual(
    records: &[MeasurementRecord],
    state: &ComplexMatrix,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut acc = 0.0;
    for rec in records {
        let q = model_probabilities(state, rec.observable())?;
        acc += hellinger_unchecked(rec.probabilities(), &q).powi(2);
    }
    Ok((acc / records.len() as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    pub max_sweeps: usize,
    /// Stop once the distributional distance drops below this value.
    pub tol_distributional: Option<f64>,
    /// Stop once consecutive sweep iterates are closer than this in HS distance.
    pub tol_step: Option<f64>,
    /// Rank constraint; `None` runs the unconstrained operator.
    pub rank: Option<usize>,
    pub final_psd_projection: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 10_000,
            tol_distributional: Some(1e-10),
            tol_step: Some(1e-12),
            rank: None,
            final_psd_projection: false,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        for (name, tol) in [
            ("tol_distributional", self.tol_distributional),
            ("tol_step", self.tol_step),
        ] {
            if let Some(t) = tol {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "{name} must be positive, got {t}"
                    )));
                }
            }
        }
        if self.tol_distributional.is_none() && self.tol_step.is_none() {
            return Err(Error::InvalidConfig(
                "at least one of tol_distributional, tol_step must be set".into(),
            ));
        }
        if let Some(r) = self.rank {
            if r == 0 || r > dim {
                return Err(Error::InvalidRank { rank: r, dim });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    DistributionalTol,
    StepTol,
    MaxSweeps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub distributional: f64,
    pub hs_step: f64,
    pub fidelity: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionTrace {
    pub rows: Vec<TraceRow>,
}

impl ReconstructionTrace {
    pub const CSV_HEADER: &'static str = "sweep,distributional,hs_step,fidelity,seconds";

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// CSV with 17 significant digits; an absent fidelity is an empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fid = r.fidelity.map(fmt17).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.sweep,
                fmt17(r.distributional),
                fmt17(r.hs_step),
                fid,
                fmt17(r.seconds)
            ));
        }
        out
    }

    /// Zeroes the timing column, for byte-level reproducibility.
    pub fn without_timing(mut self) -> Self {
        self.rows.iter_mut().for_each(|r| r.seconds = 0.0);
        self
    }
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub estimate: DensityMatrix,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub sweeps: usize,
    /// Whether the final iterate was clipped onto the PSD cone.
    pub projected: bool,
    pub trace: ReconstructionTrace,
}

impl ReconstructionResult {
    pub fn final_distributional(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.distributional)
    }
}

pub fn reconstruct(
    records: &[MeasurementRecord],
    seed_state: &DensityMatrix,
    cfg: &IterationConfig,
) -> Result<ReconstructionResult> {
    reconstruct_with_reference(records, seed_state, cfg, None)
}

/// Iterates sweeps from `seed_state` until a stopping rule fires.
///
/// The distributional rule is checked before the step rule. With a pure
/// `reference`, each trace row carries Tr(ρ_n ψ). The returned estimate is
/// always a valid density matrix: it is PSD-projected when the config asks
/// for it, or when the final iterate is not PSD within [`STATE_TOL`].
pub fn reconstruct_with_reference(
    records: &[MeasurementRecord],
    seed_state: &DensityMatrix,
    cfg: &IterationConfig,
    reference: Option<&DensityMatrix>,
) -> Result<ReconstructionResult> {
    let d = common_dim(records)?;
    if seed_state.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: seed_state.dim(),
        });
    }
    cfg.validate(d)?;
    let reference = match reference {
        Some(r) if r.dim() != d => {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.dim(),
            })
        }
        Some(r) if (purity(r) - 1.0).abs() <= PURE_TOL => Some(r),
        _ => None,
    };

    let mut current = IntermediateState::from(seed_state);
    let mut kernel = SweepKernel::new(d);
    let mut trace = ReconstructionTrace::default();
    let mut stop_reason = StopReason::MaxSweeps;
    for n in 1..=cfg.max_sweeps {
        let start = Instant::now();
        let next = match cfg.rank {
            Some(r) => sweep(records, &current, Some(r))?,
            None => {
                let mut m = current.matrix().clone();
                kernel.sweep(records, &mut m);
                IntermediateState::from_trusted(m)
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        let hs_step = hs_distance(next.matrix(), current.matrix())?;
        let distributional = kernel.residual(records, next.matrix());
        let fidelity = reference.map(|psi| overlap(next.matrix(), psi.matrix()));
        trace.rows.push(TraceRow {
            sweep: n,
            distributional,
            hs_step,
            fidelity,
            seconds,
        });
        current = next;
        if cfg.tol_distributional.is_some_and(|t| distributional < t) {
            stop_reason = StopReason::DistributionalTol;
            break;
        }
        if cfg.tol_step.is_some_and(|t| hs_step < t) {
            stop_reason = StopReason::StepTol;
            break;
        }
    }

    let (estimate, projected) = if cfg.final_psd_projection {
        (psd_project(&current)?, true)
    } else {
        match validate_state(current.matrix(), STATE_TOL) {
            Ok(rho) => (rho, false),
            Err(Error::NotPsd { .. }) => (psd_project(&current)?, true),
            Err(e) => return Err(e),
        }
    };
    Ok(ReconstructionResult {
        estimate,
        converged: stop_reason != StopReason::MaxSweeps,
        stop_reason,
        sweeps: trace.len(),
        projected,
        trace,
    })
}

/// Re Tr(A B) for Hermitian A, B.
fn overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for r in 0..d {
        for c in 0..d {
            acc += (a[(r, c)] * b[(c, r)]).re;
        }
    }
    acc
}

/// Runs [`reconstruct_with_reference`] from `n_seeds` Haar-random pure seeds,
/// seed state i drawn from `derive_seed(seed, i)`. Runs execute in parallel;
/// results come back in seed order.
pub fn multi_start(
    records: &[MeasurementRecord],
    cfg: &IterationConfig,
    n_seeds: usize,
    seed: u64,
    reference: Option<&DensityMatrix>,
) -> Result<Vec<Result<ReconstructionResult>>> {
    let d = common_dim(records)?;
    Ok((0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let rho0 = random_pure_state(d, derive_seed(seed, i as u64))?;
            reconstruct_with_reference(records, &rho0, cfg, reference)
        })
        .collect())
}

/// Fraction of random seeds whose run stops on the distributional tolerance.
/// Runs that fail numerically count as unsuccessful.
pub fn success_rate(
    records: &[MeasurementRecord],
    cfg: &IterationConfig,
    n_seeds: usize,
    seed: u64,
) -> f64 {
    if n_seeds == 0 {
        return 0.0;
    }
    let runs = match multi_start(records, cfg, n_seeds, seed, None) {
        Ok(r) => r,
        Err(_) => return 0.0,
    };
    let ok = runs
        .iter()
        .filter(|r| matches!(r, Ok(res) if res.stop_reason == StopReason::DistributionalTol))
        .count();
    ok as f64 / n_seeds as f64
}
