//! Hellinger, distributional and Hilbert-Schmidt distances.

use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;

/// Validation tolerance for probability vectors. Empirical frequencies and
/// iterates both arrive with round-off, so this is looser than matrix tolerances.
pub const PROB_TOL: f64 = 1e-9;
const RENORMALIZE_DRIFT: f64 = 1e-14;

/// Checks that `p` is a probability vector within `tol`, clamps tiny
/// negatives to zero and renormalizes when the sum drifts.
pub fn normalized_probabilities(p: &[f64], tol: f64) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::NotAProbabilityVector {
            reason: "empty vector".into(),
        });
    }
    if let Some((j, &x)) = p
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite() || **x < -tol)
    {
        return Err(Error::NotAProbabilityVector {
            reason: format!("entry {j} = {x:e}"),
        });
    }
    let mut q: Vec<f64> = p.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotAProbabilityVector {
            reason: format!("sum = {sum}"),
        });
    }
    if (sum - 1.0).abs() > RENORMALIZE_DRIFT {
        q.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(q)
}

/// H(p, q) = sqrt(2 − 2 Σ √p_i √q_i).
///
/// Evaluated as sqrt(Σ (√p_i − √q_i)²), which is equal for normalized inputs
/// and avoids the cancellation that floors the direct form near 1e-8.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let p = normalized_probabilities(p, PROB_TOL)?;
    let q = normalized_probabilities(q, PROB_TOL)?;
    Ok(hellinger_unchecked(&p, &q))
}

pub(crate) fn hellinger_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// D = sqrt((1/m) Σ_j H(p^j, q^j)²).
pub fn distributional<P: AsRef<[f64]>, Q: AsRef<[f64]>>(ps: &[P], qs: &[Q]) -> Result<f64> {
    if ps.len() != qs.len() {
        return Err(Error::LengthMismatch {
            left: ps.len(),
            right: qs.len(),
        });
    }
    if ps.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut acc = 0.0;
    for (p, q) in ps.iter().zip(qs) {
        acc += hellinger(p.as_ref(), q.as_ref())?.powi(2);
    }
    Ok((acc / ps.len() as f64).sqrt())
}

/// sqrt(Tr[(A − B)†(A − B)]).
pub fn hs_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok((a - b).frobenius_norm())
}
