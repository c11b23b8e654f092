mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use psi_gauge::ensembles::{theorem1_ensemble, theorem2_states};
use psi_gauge::experiment::{clopper_pearson_upper, noisy_outcome_distribution, NoiseSpec};
use psi_gauge::ontic::{epsilon_overlap, nogo_check, product_model, total_variation};
use psi_gauge::qcore::{
    born_prob, gram, inner, sample_state_in_ball, tensor_power, unitary_from_correspondence, Ball, Operator, Povm,
    StateVector, C64,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Orthonormal basis by Gram–Schmidt on random vectors.
fn random_basis(rng: &mut ChaCha8Rng, dim: usize) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = Vec::new();
    while out.len() < dim {
        let v = common::random_state(rng, dim);
        let mut amps: Vec<C64> = v.amplitudes().to_vec();
        for b in &out {
            let c = inner(b, &v).unwrap();
            for (a, x) in amps.iter_mut().zip(b.amplitudes()) {
                *a -= c * x;
            }
        }
        if let Ok(s) = StateVector::normalized(amps) {
            out.push(s);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_inner_products_multiply(seed in any::<u64>(), da in 2usize..5, db in 2usize..5) {
        let mut r = rng(seed);
        let (a, b) = (common::random_state(&mut r, da), common::random_state(&mut r, db));
        let (c, d) = (common::random_state(&mut r, da), common::random_state(&mut r, db));
        let lhs = inner(&a.kron(&b).unwrap(), &c.kron(&d).unwrap()).unwrap();
        let rhs = inner(&a, &c).unwrap() * inner(&b, &d).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tensor_power_overlaps(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let (a, b) = (common::random_state(&mut r, 2), common::random_state(&mut r, 2));
        let lhs = inner(&tensor_power(&a, n).unwrap(), &tensor_power(&b, n).unwrap()).unwrap();
        let rhs = inner(&a, &b).unwrap().powu(n as u32);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn gram_matrices_are_positive(seed in any::<u64>(), dim in 2usize..6, k in 1usize..8) {
        let mut r = rng(seed);
        let states: Vec<_> = (0..k).map(|_| common::random_state(&mut r, dim)).collect();
        let g = Operator::from_matrix(gram(&states).unwrap()).unwrap();
        prop_assert!(g.hermiticity_defect() < 1e-14);
        prop_assert!(g.min_eigenvalue() > -1e-12);
        prop_assert!((g.trace().re - k as f64).abs() < 1e-12);
    }

    #[test]
    fn correspondence_is_isometric(seed in any::<u64>(), dim in 2usize..6) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=dim);
        let src: Vec<_> = (0..k).map(|_| common::random_state(&mut r, dim)).collect();
        // A permutation with phases preserves every inner product.
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut r);
        let phases: Vec<C64> = (0..dim).map(|_| C64::from_polar(1.0, r.gen_range(0.0..6.3))).collect();
        let dst: Vec<_> = src
            .iter()
            .map(|s| {
                let amps = (0..dim).map(|i| s.amplitudes()[perm[i]] * phases[i]).collect();
                StateVector::new(amps).unwrap()
            })
            .collect();
        let iso = unitary_from_correspondence(&src, &dst).unwrap();
        prop_assert!(iso.residual(&src, &dst).unwrap() < 1e-9);
        prop_assert!(iso.isometry_defect() < 1e-10);
    }

    #[test]
    fn povm_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..6, p in 0.0f64..1.0, q in 0.0f64..1.0) {
        let mut r = rng(seed);
        let povm = Povm::projective(&random_basis(&mut r, dim)).unwrap();
        let s = common::random_state(&mut r, dim);
        let probs = povm.probabilities(&s).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let noisy = noisy_outcome_distribution(&s, &povm, NoiseSpec::new(p, q).unwrap()).unwrap();
        prop_assert!((noisy.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for e in povm.effects() {
            let b = born_prob(&s, e).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn ball_samples_stay_inside(seed in any::<u64>(), dim in 2usize..6, radius in 0.01f64..1.0) {
        let mut r = rng(seed);
        let ball = Ball::new(common::random_state(&mut r, dim), radius).unwrap();
        let s = sample_state_in_ball(&ball, seed).unwrap();
        prop_assert!(ball.contains(&s));
    }

    #[test]
    fn overlap_bounds_exclusion_sum(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = common::random_model(&mut r);
        let labels = common::preparation_labels(&model);
        let qs: Vec<&str> = labels.iter().map(String::as_str).collect();
        for m in model.measurement_labels() {
            let c = nogo_check(&model, &qs, m).unwrap();
            prop_assert!(c.inequality_holds, "{c:?}");
        }
    }

    #[test]
    fn pairwise_overlap_is_one_minus_tv(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = common::random_model(&mut r);
        let eps = epsilon_overlap(&model, &["q0", "q1"]).unwrap().epsilon;
        let tv = total_variation(model.preparation("q0").unwrap(), model.preparation("q1").unwrap()).unwrap();
        prop_assert!((eps - (1.0 - tv)).abs() < 1e-12);
    }

    #[test]
    fn product_overlap_dominates_power(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let model = common::random_model(&mut r);
        let labels = common::preparation_labels(&model);
        let qs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let eps = epsilon_overlap(&model, &qs).unwrap().epsilon;
        let eps_n = epsilon_overlap(&product_model(&model, n).unwrap(), &qs).unwrap().epsilon;
        prop_assert!(eps_n >= eps.powi(n as i32) - 1e-12);
        prop_assert!(eps_n <= eps + 1e-12);
    }

    #[test]
    fn clopper_pearson_upper_is_monotone(trials in 1u64..500, frac in 0.0f64..1.0, alpha in 0.001f64..0.5) {
        let k = ((trials as f64) * frac) as u64;
        let u = clopper_pearson_upper(k, trials, alpha).unwrap();
        prop_assert!(u >= k as f64 / trials as f64 - 1e-12);
        prop_assert!(u <= 1.0);
        if k < trials {
            prop_assert!(clopper_pearson_upper(k + 1, trials, alpha).unwrap() >= u - 1e-12);
        }
        prop_assert!(clopper_pearson_upper(k, trials, alpha / 2.0).unwrap() >= u - 1e-12);
    }
}

#[test]
fn multi_copy_gram_is_exact() {
    for d in 3..=6 {
        for n in 1..=4 {
            let fam = theorem2_states(d, n).unwrap();
            let target = (d as f64 - 2.0) / (d as f64 - 1.0);
            let g = gram(&fam.states).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let expected = if i == j { 1.0 } else { target.powf(1.0 / n as f64) };
                    assert_abs_diff_eq!(g[(i, j)].re, expected, epsilon = 1e-12);
                    assert_abs_diff_eq!(g[(i, j)].im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn exclusion_states_sit_on_the_ball_boundary() {
    for d in 2..=10 {
        let e = theorem1_ensemble(d).unwrap();
        let ball = Ball::new(e.center.clone(), e.delta_star).unwrap();
        for s in &e.states {
            assert!(ball.contains(s));
        }
        assert!(e.boundary_defect().unwrap() < 1e-12);
    }
}
