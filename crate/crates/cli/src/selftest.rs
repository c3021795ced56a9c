//! A fast pass over the core invariants, for checking a build on a new machine.

use qst_core::imposition::distributional_residual;
use qst_core::random::derive_seed;
use qst_core::simulate::expectation_diagonal;
use qst_core::*;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run(seed: u64) -> Vec<Check> {
    vec![
        check("eigendecomposition reconstructs", || {
            let mut worst = 0.0f64;
            for d in 2..=12 {
                let rho = random_mixed_state(d, d, derive_seed(seed, d as u64))?;
                let eig = hermitian_eig(rho.matrix())?;
                worst = worst.max(eig.reconstruct().max_abs_diff(rho.matrix()));
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
        }),
        check("imposition hits target statistics", || {
            let mut worst = 0.0f64;
            for i in 0..100u64 {
                let d = 2 + (i as usize % 9);
                let s = derive_seed(seed, 100 + i);
                let obs = random_observable_set(d, 1, s)?.observables()[0].clone();
                let p = born_probabilities(&random_mixed_state(d, d, s ^ 1)?, &obs)?;
                let sigma = IntermediateState::from(random_pure_state(d, s ^ 2)?);
                let q = expectation_diagonal(impose(&obs, &p, &sigma)?.matrix(), &obs)?;
                worst = q
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(worst, f64::max);
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
        }),
        check("imposition contracts toward consistent states", || {
            let mut violations = 0;
            for i in 0..200u64 {
                let d = 2 + (i as usize % 5);
                let s = derive_seed(seed, 300 + i);
                let obs = random_observable_set(d, 1, s)?.observables()[0].clone();
                let rho = random_mixed_state(d, d, s ^ 1)?;
                let sigma = IntermediateState::from(random_mixed_state(d, d, s ^ 2)?);
                let out = impose(&obs, &born_probabilities(&rho, &obs)?, &sigma)?;
                let before = hs_distance(sigma.matrix(), rho.matrix())?;
                if hs_distance(out.matrix(), sigma.matrix())? > before + 1e-12
                    || hs_distance(out.matrix(), rho.matrix())? > 2.0 * before + 1e-12
                {
                    violations += 1;
                }
            }
            Ok((violations == 0, format!("{violations} violations")))
        }),
        check("complete MUB data converges in one sweep", || {
            let mut worst = 0.0f64;
            for d in [2usize, 3, 5, 7] {
                let rho = random_mixed_state(d, d, derive_seed(seed, 500 + d as u64))?;
                let recs = record_set(&rho, &mub_set(d, d + 1)?, None, 0)?;
                let sigma = IntermediateState::from(random_pure_state(
                    d,
                    derive_seed(seed, 600 + d as u64),
                )?);
                let once = sweep(&recs, &sigma, None)?;
                worst = worst.max(distributional_residual(&recs, once.matrix())?);
            }
            Ok((worst < 1e-10, format!("max distributional {worst:.2e}")))
        }),
        check("iteration agrees with linear inversion", || {
            let d = 3;
            let rho = random_mixed_state(d, d, derive_seed(seed, 700))?;
            let recs = record_set(
                &rho,
                &random_observable_set(d, d + 1, derive_seed(seed, 701))?,
                None,
                0,
            )?;
            let cfg = IterationConfig {
                max_sweeps: 100_000,
                ..Default::default()
            };
            let res = reconstruct(&recs, &random_pure_state(d, derive_seed(seed, 702))?, &cfg)?;
            let gap = hs_distance(res.estimate.matrix(), baseline_estimate(&recs)?.matrix())?;
            Ok((
                res.converged && gap < 1e-6,
                format!("{} sweeps, HS gap {gap:.2e}", res.sweeps),
            ))
        }),
    ]
}
