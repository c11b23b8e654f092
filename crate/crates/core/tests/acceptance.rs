//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test -p psi-gauge-core --test acceptance`.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Vector3;
use psi_gauge::ensembles::{
    gamma_coefficient, scaling_report, theorem1_ensemble, theorem2_delta, theorem2_ensemble, theorem2_states,
    theorem4_ensemble, theorem4_states,
};
use psi_gauge::exclusion::{exclusion_value, optimize, ExclusionProblem};
use psi_gauge::experiment::{run_protocol, NoiseSpec};
use psi_gauge::ontic::{
    classify, delta_continuity_probe, epsilon_overlap, ks_qubit_model, ks_reproduction_error, nogo_check,
    product_model, total_variation, ContinuityVerdict, Ontology, ParametricModel, SUPPORT_THRESHOLD,
};
use psi_gauge::orbit::steps_to_cover;
use psi_gauge::qcore::{gram, inner, tensor_power, unitary_from_correspondence, validate_povm, StateVector, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn exclusion_identity() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut worst_overlap: f64 = 0.0;
    for d in 2..=8 {
        let e = theorem1_ensemble(d).map_err(|e| e.to_string())?;
        worst_sum = worst_sum.max(e.exclusion_sum().map_err(|e| e.to_string())?);
        let expected = ((d as f64 - 1.0) / d as f64).sqrt();
        for s in &e.states {
            let overlap = inner(s, &e.center).map_err(|e| e.to_string())?.norm();
            worst_overlap = worst_overlap.max((overlap - expected).abs());
        }
    }
    check(worst_sum <= 1e-12, format!("exclusion sum {worst_sum:.3e} > 1e-12"))?;
    check(worst_overlap <= 1e-12, format!("overlap error {worst_overlap:.3e} > 1e-12"))?;
    Ok(format!("max sum {worst_sum:.1e}, max overlap error {worst_overlap:.1e}"))
}

fn multi_copy_construction() -> Outcome {
    let mut worst = [0.0f64; 5];
    for d in 3..=5 {
        let target_single = (d as f64 - 2.0) / (d as f64 - 1.0);
        for n in 1..=3 {
            let fam = theorem2_states(d, n).map_err(|e| e.to_string())?;
            let single = target_single.powf(1.0 / n as f64);
            for s in &fam.states {
                let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                worst[0] = worst[0].max((norm - 1.0).abs());
            }
            let g = gram(&fam.states).map_err(|e| e.to_string())?;
            let copies: Vec<StateVector> = fam
                .states
                .iter()
                .map(|s| tensor_power(s, n))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let gn = gram(&copies).map_err(|e| e.to_string())?;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        worst[1] = worst[1].max((g[(i, j)] - C64::new(single, 0.0)).norm());
                        worst[2] = worst[2].max((gn[(i, j)] - C64::new(target_single, 0.0)).norm());
                    }
                }
            }
            let ens = theorem2_ensemble(d, n).map_err(|e| e.to_string())?;
            let targets = theorem1_ensemble(d).map_err(|e| e.to_string())?.states;
            let iso = unitary_from_correspondence(&ens.states, &targets).map_err(|e| e.to_string())?;
            worst[3] = worst[3].max(iso.residual(&ens.states, &targets).map_err(|e| e.to_string())?);
            check(
                validate_povm(&ens.measurement).passed,
                format!("invalid measurement at d={d}, n={n}"),
            )?;
            worst[4] = worst[4].max(ens.exclusion_sum().map_err(|e| e.to_string())?);
        }
    }
    let limits = [1e-12, 1e-12, 1e-10, 1e-9, 1e-9];
    let names = ["norm", "single-copy gram", "tensor gram", "isometry residual", "exclusion sum"];
    for ((w, l), name) in worst.iter().zip(limits).zip(names) {
        check(*w <= l, format!("{name} {w:.3e} > {l:.0e}"))?;
    }
    Ok(format!(
        "norm {:.1e}, gram {:.1e}, tensor gram {:.1e}, residual {:.1e}, sum {:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

fn asymptote() -> Outcome {
    // ln 2 / 3, computed independently of the library.
    let gamma_ref = 0.231_049_060_186_648_4;
    let gamma = gamma_coefficient(3).map_err(|e| e.to_string())?;
    check((gamma - gamma_ref).abs() <= 1e-12, format!("gamma(3) = {gamma}"))?;
    let scaled = 1000.0 * theorem2_delta(3, 1000).map_err(|e| e.to_string())?;
    let rel = (scaled - gamma_ref).abs() / gamma_ref;
    check(rel <= 0.01, format!("relative error {rel:.3e} > 0.01"))?;
    Ok(format!("n*delta = {scaled:.6}, relative error {rel:.2e}"))
}

fn inequality_suite() -> Outcome {
    let mut checks = 0;
    let mut failures = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = common::random_model(&mut rng);
        let labels = common::preparation_labels(&model);
        let qs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let ms: Vec<String> = model.measurement_labels().map(str::to_string).collect();
        for m in &ms {
            let r = nogo_check(&model, &qs, m).map_err(|e| e.to_string())?;
            checks += 1;
            if r.lhs < r.epsilon - 1e-9 {
                failures += 1;
            }
        }
    }
    check(failures == 0, format!("{failures} of {checks} checks failed"))?;
    Ok(format!("{checks} measurement checks over 200 models, 0 failures"))
}

/// Two preparations, each uniform on its own support. On the common support
/// one of them is pointwise smaller, so the product overlap factorizes.
fn flat_model(rng: &mut ChaCha8Rng) -> psi_gauge::ontic::DiscreteOnticModel {
    use rand::Rng;
    let lambdas = rng.gen_range(2..=8);
    let flat = |rng: &mut ChaCha8Rng| {
        let mut support: Vec<bool> = (0..lambdas).map(|_| rng.gen_bool(0.6)).collect();
        support[rng.gen_range(0..lambdas)] = true;
        let count = support.iter().filter(|&&s| s).count() as f64;
        support.iter().map(|&s| if s { 1.0 / count } else { 0.0 }).collect::<Vec<f64>>()
    };
    let preparations = [("q0".to_string(), flat(rng)), ("q1".to_string(), flat(rng))].into();
    psi_gauge::ontic::DiscreteOnticModel::new(lambdas, preparations, Default::default()).unwrap()
}

fn overlap_identities() -> Outcome {
    let mut worst_tv: f64 = 0.0;
    let mut worst_prod: f64 = 0.0;
    let mut worst_flat: f64 = 0.0;
    let mut below_power = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let model = common::random_model(&mut rng);
        let p = model.preparation("q0").map_err(|e| e.to_string())?;
        let q = model.preparation("q1").map_err(|e| e.to_string())?;
        let eps = epsilon_overlap(&model, &["q0", "q1"]).map_err(|e| e.to_string())?.epsilon;
        let tv = total_variation(p, q).map_err(|e| e.to_string())?;
        worst_tv = worst_tv.max((eps - (1.0 - tv)).abs());
        let flat = flat_model(&mut rng);
        let eps_flat = epsilon_overlap(&flat, &["q0", "q1"]).map_err(|e| e.to_string())?.epsilon;
        for n in 1..=3 {
            let prod = product_model(&model, n).map_err(|e| e.to_string())?;
            let eps_n = epsilon_overlap(&prod, &["q0", "q1"]).map_err(|e| e.to_string())?.epsilon;
            worst_prod = worst_prod.max((eps_n - eps.powi(n as i32)).abs());
            if eps_n < eps.powi(n as i32) - 1e-12 {
                below_power += 1;
            }
            let prod = product_model(&flat, n).map_err(|e| e.to_string())?;
            let eps_n = epsilon_overlap(&prod, &["q0", "q1"]).map_err(|e| e.to_string())?.epsilon;
            worst_flat = worst_flat.max((eps_n - eps_flat.powi(n as i32)).abs());
        }
    }
    let detail = format!(
        "1 - TV error {worst_tv:.1e}; product overlap vs eps^n: general models {worst_prod:.1e}, \
         flat-support models {worst_flat:.1e}, eps_n < eps^n in {below_power} cases"
    );
    check(worst_tv <= 1e-12, format!("1 - TV error {worst_tv:.3e}"))?;
    check(below_power == 0, detail.clone())?;
    // The product overlap factorizes only when one preparation is pointwise
    // smaller on the common support; in general eps_n >= eps^n.
    check(worst_prod <= 1e-10 && worst_flat <= 1e-10, detail.clone())?;
    Ok(detail)
}

fn qubit_fixture() -> Outcome {
    let model = ks_qubit_model(100_000).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pairs: Vec<(StateVector, Vector3<f64>)> = (0..100)
        .map(|_| {
            let s = common::random_state(&mut rng, 2);
            let a = common::random_state(&mut rng, 2);
            (s, psi_gauge::sphere::bloch_vector(&a).unwrap())
        })
        .collect();
    let err = ks_reproduction_error(&model, &pairs).map_err(|e| e.to_string())?;
    check(err <= 0.01, format!("Born-rule error {err:.3e} > 0.01"))?;

    let mut min_overlap = f64::INFINITY;
    for _ in 0..10 {
        let a = common::random_state(&mut rng, 2);
        let perp = StateVector::normalized(vec![-a.amplitudes()[1].conj(), a.amplitudes()[0].conj()])
            .map_err(|e| e.to_string())?;
        let phase = C64::from_polar((1.0f64 - 0.81).sqrt(), 0.7);
        let amps = (0..2)
            .map(|i| a.amplitudes()[i] * 0.9 + perp.amplitudes()[i] * phase)
            .collect();
        let b = StateVector::normalized(amps).map_err(|e| e.to_string())?;
        let fid = a.fidelity_amplitude(&b).map_err(|e| e.to_string())?;
        check((fid - 0.9).abs() < 1e-12, format!("pair fidelity {fid}"))?;
        let discrete = model
            .discretize(&[("a".into(), a), ("b".into(), b)], &[])
            .map_err(|e| e.to_string())?;
        let c = classify(&discrete, &["a", "b"]).map_err(|e| e.to_string())?;
        check(c.verdict == Ontology::PsiEpistemic, "fidelity-0.9 pair classified psi-ontic")?;
        min_overlap = min_overlap.min(c.overlap);
    }

    let plus = StateVector::uniform(2).map_err(|e| e.to_string())?;
    let near = delta_continuity_probe(&model, &plus, 0.25, 2000, SUPPORT_THRESHOLD, 0).map_err(|e| e.to_string())?;
    let far = delta_continuity_probe(&model, &plus, 0.35, 2000, SUPPORT_THRESHOLD, 0).map_err(|e| e.to_string())?;
    check(
        near.verdict == ContinuityVerdict::ContinuousAtDelta,
        format!("delta 0.25 verdict {:?}", near.verdict),
    )?;
    check(
        far.verdict == ContinuityVerdict::NoWitnessFound,
        format!("delta 0.35 verdict {:?}", far.verdict),
    )?;
    Ok(format!(
        "Born error {err:.1e}, min pair overlap {min_overlap:.3}, probe verdicts continuous / no witness"
    ))
}

fn finite_shot_statistics() -> Outcome {
    let e = theorem1_ensemble(3).map_err(|e| e.to_string())?;
    let r = run_protocol(&e, NoiseSpec::noiseless(), 100_000, 0.95, 0).map_err(|e| e.to_string())?;
    check(r.epsilon_exp_hat == 0.0, format!("noiseless estimate {}", r.epsilon_exp_hat))?;
    check(
        r.epsilon_upper_bound <= 2e-4,
        format!("noiseless bound {:.3e} > 2e-4", r.epsilon_upper_bound),
    )?;

    // Depolarizing noise p: each term has probability p / 3, the sum is p.
    let p = 0.01;
    let noise = NoiseSpec::new(p, 0.0).map_err(|e| e.to_string())?;
    let shots = 10_000u64;
    let term = p / 3.0;
    let se = (3.0 * term * (1.0 - term) / shots as f64).sqrt();
    let mut total = 0.0;
    let mut outside = 0;
    for seed in 0..100 {
        let r = run_protocol(&e, noise, shots, 0.95, seed).map_err(|e| e.to_string())?;
        total += r.epsilon_exp_hat;
        if (r.epsilon_exp_hat - p).abs() > 3.0 * se {
            outside += 1;
        }
    }
    let mean = total / 100.0;
    let se_mean = se / 10.0;
    check(
        (mean - p).abs() <= 3.0 * se_mean,
        format!("mean {mean:.5} more than 3 SE ({se_mean:.2e}) from {p}"),
    )?;
    // Per-run 3-SE excursions: Binomial(100, 0.0027) exceeds 3 with probability < 1e-3.
    check(outside <= 3, format!("{outside} of 100 runs outside 3 SE"))?;

    let reps = 500;
    let coverage_shots = 2_000u64;
    let covered = (0..reps)
        .filter(|&seed| {
            let r = run_protocol(&e, noise, coverage_shots, 0.95, 10_000 + seed).unwrap();
            r.epsilon_exp_expected <= r.epsilon_upper_bound
        })
        .count();
    let frac = covered as f64 / reps as f64;
    let floor = 0.95 - 3.0 * (0.95 * 0.05 / reps as f64).sqrt();
    check(frac >= floor, format!("coverage {frac:.3} < {floor:.3}"))?;
    Ok(format!(
        "noiseless bound {:.2e}; p=0.01 mean {mean:.5} (3 SE = {:.1e}), {outside}/100 runs outside 3 SE; coverage {frac:.3} (floor {floor:.3})",
        r.epsilon_upper_bound,
        3.0 * se_mean
    ))
}

fn scaling() -> Outcome {
    let gamma = 2f64.ln() / 3.0;
    let mut rows = Vec::new();
    for delta in [0.1, 0.01, 0.001] {
        let s = scaling_report(delta).map_err(|e| e.to_string())?;
        rows.push((delta, s.thm1_dim as f64 * 2.0 * delta, s.thm2_copies_d3 as f64 * delta / gamma));
    }
    let &(_, r1, r2) = rows.last().unwrap();
    check((r1 - 1.0).abs() <= 0.2, format!("dimension ratio {r1:.3} at delta 0.001"))?;
    check((r2 - 1.0).abs() <= 0.2, format!("copy ratio {r2:.3} at delta 0.001"))?;
    let first = &rows[0];
    check(
        (first.1 - 1.0).abs() >= (r1 - 1.0).abs() && (first.2 - 1.0).abs() >= (r2 - 1.0).abs(),
        "ratios do not approach 1",
    )?;
    Ok(rows
        .iter()
        .map(|(d, a, b)| format!("delta {d}: {a:.3}/{b:.3}"))
        .collect::<Vec<_>>()
        .join(", "))
}

fn rotated_states_and_orbits() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 3..=7 {
        let t_max = ((d as f64 - 1.0) / d as f64).sqrt();
        for t in [0.3, 0.6, t_max] {
            let fam = theorem4_states(d, t).map_err(|e| e.to_string())?;
            let sum_sq: f64 = fam.alpha.iter().map(|a| a * a).sum();
            worst = worst.max((sum_sq - 1.0).abs()).max(fam.alpha[0].abs());
            for s in &fam.states {
                worst = worst.max((inner(s, &fam.center).map_err(|e| e.to_string())?.norm() - t).abs());
            }
            let e = theorem4_ensemble(d, t).map_err(|e| e.to_string())?;
            let basis: Vec<StateVector> = (0..d).map(|k| StateVector::basis(d, (k + 1) % d).unwrap()).collect();
            let povm = psi_gauge::qcore::Povm::projective(&basis).map_err(|e| e.to_string())?;
            worst = worst.max(exclusion_value(&e.states, &povm).map_err(|e| e.to_string())?);
        }
    }
    check(worst <= 1e-12, format!("rotated-state identity error {worst:.3e}"))?;

    let quarter = steps_to_cover(FRAC_PI_2, 0.99, 0.1, 0).map_err(|e| e.to_string())?;
    check(
        quarter.steps.is_some_and(|k| k <= 4),
        format!("pi/2 needs {:?} steps", quarter.steps),
    )?;
    let mut steps = Vec::new();
    for theta in [PI / 4.0, PI / 8.0, PI / 16.0] {
        let r = steps_to_cover(theta, 0.99, 0.1, 0).map_err(|e| e.to_string())?;
        steps.push(r.steps.ok_or(format!("theta {theta:.4} hit the step cap"))?);
    }
    let increments: Vec<i64> = steps.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    check(
        increments.iter().all(|&i| i <= 2),
        format!("steps {steps:?} grow faster than additively"),
    )?;
    Ok(format!(
        "identity error {worst:.1e}; pi/2 covered in {} steps; pi/4, pi/8, pi/16 need {steps:?}",
        quarter.steps.unwrap()
    ))
}

fn optimizer() -> Outcome {
    let mut worst_value: f64 = 0.0;
    let mut worst_consistency: f64 = 0.0;
    for d in 2..=6 {
        let states = theorem1_ensemble(d).map_err(|e| e.to_string())?.states;
        let problem = ExclusionProblem::new(states.clone()).map_err(|e| e.to_string())?;
        let r = optimize(&problem, 50, 5000, d as u64).map_err(|e| e.to_string())?;
        let povm = r.measurement().map_err(|e| e.to_string())?;
        let recomputed = exclusion_value(&states, &povm).map_err(|e| e.to_string())?;
        worst_value = worst_value.max(r.best_value);
        worst_consistency = worst_consistency.max((recomputed - r.best_value).abs());
    }
    check(worst_value <= 1e-6, format!("best value {worst_value:.3e} > 1e-6"))?;
    check(
        worst_consistency <= 1e-12,
        format!("recomputed value differs by {worst_consistency:.3e}"),
    )?;
    Ok(format!("max best value {worst_value:.1e}, self-consistency {worst_consistency:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exclusion identity", exclusion_identity),
        ("multi-copy construction", multi_copy_construction),
        ("large-n asymptote", asymptote),
        ("overlap inequality on random models", inequality_suite),
        ("overlap identities", overlap_identities),
        ("qubit fixture", qubit_fixture),
        ("finite-shot statistics", finite_shot_statistics),
        ("resource scaling", scaling),
        ("rotated states and orbits", rotated_states_and_orbits),
        ("exclusion optimizer", optimizer),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
