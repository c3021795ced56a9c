use proptest::prelude::*;

use qst_core::baseline::{born_residual, GellMann};
use qst_core::matcore::spectral_sum;
use qst_core::observables::{is_prime, unbiasedness_deviation};
use qst_core::random::{derive_seed, rng_from_seed};
use qst_core::simulate::expectation_diagonal;
use qst_core::states::random_pure_vector;
use qst_core::*;

fn random_observable(d: usize, seed: u64) -> Observable {
    random_observable_set(d, 1, seed).unwrap().observables()[0].clone()
}

fn random_probabilities(d: usize, seed: u64) -> Vec<f64> {
    born_probabilities(
        &random_mixed_state(d, d, seed).unwrap(),
        &random_observable(d, seed ^ 1),
    )
    .unwrap()
}

fn random_hermitian(d: usize, seed: u64) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    let g = ComplexMatrix::from_fn(d, |_, _| qst_core::random::complex_gaussian(&mut rng));
    (&g + &g.adjoint()).scale(0.5)
}

fn state(rho: &DensityMatrix) -> IntermediateState {
    IntermediateState::from(rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn imposition_hits_target_statistics(d in 2usize..=16, seed in any::<u64>()) {
        let obs = random_observable(d, derive_seed(seed, 0));
        let p = random_probabilities(d, derive_seed(seed, 1));
        let sigma = state(&random_mixed_state(d, 1 + (seed as usize % d), derive_seed(seed, 2)).unwrap());
        let out = impose(&obs, &p, &sigma).unwrap();
        let q = expectation_diagonal(out.matrix(), &obs).unwrap();
        for (a, b) in q.iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(out.matrix().hermiticity_deviation() < 1e-12);
        prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn imposition_routes_agree(d in 2usize..=12, seed in any::<u64>()) {
        let obs = random_observable(d, derive_seed(seed, 0));
        let p = random_probabilities(d, derive_seed(seed, 1));
        let sigma = state(&random_mixed_state(d, d, derive_seed(seed, 2)).unwrap());
        let a = impose(&obs, &p, &sigma).unwrap();
        let b = impose_additive(&obs, &p, &sigma).unwrap();
        prop_assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn imposition_is_idempotent(d in 2usize..=10, seed in any::<u64>()) {
        let obs = random_observable(d, derive_seed(seed, 0));
        let p = random_probabilities(d, derive_seed(seed, 1));
        let sigma = state(&random_pure_state(d, derive_seed(seed, 2)).unwrap());
        let once = impose(&obs, &p, &sigma).unwrap();
        let twice = impose(&obs, &p, &once).unwrap();
        prop_assert!(once.matrix().max_abs_diff(twice.matrix()) < 1e-12);
    }

    /// The imposition is an orthogonal projection onto an affine set containing
    /// every state with the imposed statistics, so it moves σ no further than
    /// any such state is from σ, and lands no further from it than σ was.
    #[test]
    fn imposition_distance_bounds(d in 2usize..=8, seed in any::<u64>()) {
        let obs = random_observable(d, derive_seed(seed, 0));
        let rho = random_mixed_state(d, 1 + (seed as usize % d), derive_seed(seed, 1)).unwrap();
        let p = born_probabilities(&rho, &obs).unwrap();
        let sigma = state(&random_mixed_state(d, d, derive_seed(seed, 2)).unwrap());
        let out = impose(&obs, &p, &sigma).unwrap();
        let before = hs_distance(sigma.matrix(), rho.matrix()).unwrap();
        prop_assert!(hs_distance(out.matrix(), sigma.matrix()).unwrap() <= before + 1e-12);
        prop_assert!(hs_distance(out.matrix(), rho.matrix()).unwrap() <= before + 1e-12);
    }

    #[test]
    fn sweeps_never_move_away_from_consistent_state(d in 2usize..=6, seed in any::<u64>()) {
        let rho = random_mixed_state(d, d, derive_seed(seed, 0)).unwrap();
        let recs = record_set(&rho, &random_observable_set(d, d + 1, derive_seed(seed, 1)).unwrap(), None, 0).unwrap();
        let mut sigma = state(&random_pure_state(d, derive_seed(seed, 2)).unwrap());
        let mut dist = hs_distance(sigma.matrix(), rho.matrix()).unwrap();
        for _ in 0..20 {
            sigma = sweep(&recs, &sigma, None).unwrap();
            let next = hs_distance(sigma.matrix(), rho.matrix()).unwrap();
            prop_assert!(next <= dist + 1e-12);
            dist = next;
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(d in 2usize..=16, seed in any::<u64>()) {
        let m = random_hermitian(d, seed);
        let eig = hermitian_eig(&m).unwrap();
        let scale = m.frobenius_norm().max(1.0);
        prop_assert!(eig.reconstruct().max_abs_diff(&m) < 1e-10 * scale);
        prop_assert!(eig.eigenvectors.unitarity_deviation() < 1e-10);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let sum: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((sum - m.trace().re).abs() < 1e-10 * scale);
    }

    #[test]
    fn metric_triangle_inequalities(d in 2usize..=6, m in 1usize..=4, seed in any::<u64>()) {
        let obs: Vec<Observable> = (0..m).map(|i| random_observable(d, derive_seed(seed, i as u64))).collect();
        let states: Vec<DensityMatrix> = (0..3)
            .map(|k| random_mixed_state(d, d, derive_seed(seed, 100 + k)).unwrap())
            .collect();
        let stats: Vec<Vec<Vec<f64>>> = states
            .iter()
            .map(|s| obs.iter().map(|o| born_probabilities(s, o).unwrap()).collect())
            .collect();
        let dd = |a: usize, b: usize| distributional(&stats[a], &stats[b]).unwrap();
        prop_assert!(dd(0, 2) <= dd(0, 1) + dd(1, 2) + 1e-12);
        let h = |a: usize, b: usize| hellinger(&stats[a][0], &stats[b][0]).unwrap();
        prop_assert!(h(0, 2) <= h(0, 1) + h(1, 2) + 1e-12);
        let hs = |a: usize, b: usize| hs_distance(states[a].matrix(), states[b].matrix()).unwrap();
        prop_assert!(hs(0, 2) <= hs(0, 1) + hs(1, 2) + 1e-12);
    }

    #[test]
    fn born_probabilities_match_projector_traces(d in 2usize..=10, seed in any::<u64>()) {
        let rho = random_mixed_state(d, 1 + (seed as usize % d), derive_seed(seed, 0)).unwrap();
        let obs = random_observable(d, derive_seed(seed, 1));
        let p = born_probabilities(&rho, &obs).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (j, pj) in p.iter().enumerate() {
            let t = rho.matrix().matmul(&projector(&obs, j).unwrap()).trace();
            prop_assert!((t.re - pj).abs() < 1e-12 && t.im.abs() < 1e-12);
        }
    }

    #[test]
    fn linear_inversion_matches_dense_oracle(d in 2usize..=4, seed in any::<u64>()) {
        // Dense least squares over explicit Gell-Mann matrices: the minimum-norm
        // solution reproduces the statistics of informationally complete data.
        let rho = random_mixed_state(d, d, derive_seed(seed, 0)).unwrap();
        let recs = record_set(&rho, &random_observable_set(d, d + 1, derive_seed(seed, 1)).unwrap(), None, 0).unwrap();
        let h = linear_inversion(&recs).unwrap();
        let gens = GellMann::basis(d);
        for g in &gens {
            let coef = h.matrix().matmul(&g.matrix(d)).trace();
            let expected = rho.matrix().matmul(&g.matrix(d)).trace();
            prop_assert!((coef - expected).norm() < 1e-7);
        }
        prop_assert!(born_residual(&recs, h.matrix()).unwrap() < 1e-9);
    }

    #[test]
    fn linear_inversion_residual_is_least_squares(d in 2usize..=4, m in 1usize..=3, seed in any::<u64>()) {
        let rho = random_mixed_state(d, d, derive_seed(seed, 0)).unwrap();
        let recs = record_set(&rho, &random_observable_set(d, m, derive_seed(seed, 1)).unwrap(), Some(50), seed).unwrap();
        let h = linear_inversion(&recs).unwrap();
        let r0 = born_residual(&recs, h.matrix()).unwrap();
        // any traceless Hermitian perturbation cannot lower the residual
        let mut pert = random_hermitian(d, derive_seed(seed, 2)).scale(1e-3);
        let shift = pert.trace().re / d as f64;
        pert = &pert - &ComplexMatrix::identity(d).scale(shift);
        prop_assert!(born_residual(&recs, &(h.matrix() + &pert)).unwrap() >= r0 - 1e-12);
    }

    #[test]
    fn psd_projection_is_idempotent(d in 2usize..=6, seed in any::<u64>()) {
        let mut m = random_hermitian(d, seed);
        let t = m.trace().re;
        m = &m - &ComplexMatrix::identity(d).scale((t - 1.0) / d as f64);
        let h = IntermediateState::new(m).unwrap();
        if let Ok(once) = psd_project(&h) {
            let twice = psd_project(&IntermediateState::from(&once)).unwrap();
            prop_assert!(twice.matrix().max_abs_diff(once.matrix()) < 1e-10);
            prop_assert!(hermitian_eig(once.matrix()).unwrap().min_eigenvalue() > -1e-12);
        }
    }

    #[test]
    fn pure_imposition_hits_statistics(d in 2usize..=8, seed in any::<u64>()) {
        let obs = random_observable(d, derive_seed(seed, 0));
        let p = random_probabilities(d, derive_seed(seed, 1));
        let psi = random_pure_vector(d, derive_seed(seed, 2)).unwrap();
        let out = impose_pure(&obs, &p, &psi).unwrap();
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let rho = DensityMatrix::from_pure(&out).unwrap();
        let q = born_probabilities(&rho, &obs).unwrap();
        for (a, b) in q.iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_truncation_keeps_trace_and_rank(d in 2usize..=6, seed in any::<u64>()) {
        let r = 1 + (seed as usize % d);
        let obs = random_observable(d, derive_seed(seed, 0));
        let p = random_probabilities(d, derive_seed(seed, 1));
        let sigma = state(&random_mixed_state(d, d, derive_seed(seed, 2)).unwrap());
        if let Ok(out) = impose_rank(&obs, &p, &sigma, r) {
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
            let eig = hermitian_eig(out.matrix()).unwrap();
            // Kept eigenvalues may be negative and sort below the zeros, so count
            // nonzero eigenvalues rather than inspecting the tail.
            prop_assert!(eig.eigenvalues.iter().filter(|l| l.abs() > 1e-10).count() <= r);
        }
    }
}

#[test]
fn mub_sets_are_unbiased_for_primes() {
    for d in [2usize, 3, 5, 7, 11, 13] {
        assert!(is_prime(d));
        let set = mub_set(d, d + 1).unwrap();
        for (i, a) in set.iter().enumerate() {
            assert!(a.basis().unitarity_deviation() < 1e-12);
            for b in set.iter().skip(i + 1) {
                assert!(unbiasedness_deviation(a, b) < 1e-12, "d={d}");
            }
        }
    }
}

#[test]
fn spectral_sum_of_basis_is_identity() {
    let obs = random_observable(5, 3);
    let m = spectral_sum(obs.basis(), &[1.0; 5]);
    assert!(m.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-12);
}
