use std::cell::RefCell;
use std::collections::BTreeMap;

use psi_gauge::ensembles::{
    gamma_coefficient, scaling_report, theorem1_ensemble, theorem2_delta, theorem2_ensemble, theorem4_ensemble,
    NoGoEnsemble,
};
use psi_gauge::exclusion::{optimize, ExclusionProblem};
use psi_gauge::experiment::{run_protocol, sweep, sweep_csv, EstimateReport, NoiseSpec, SweepPoint};
use psi_gauge::ontic::{
    classify, delta_continuity_probe, epsilon_overlap, ks_qubit_model, ks_reproduction_check, nogo_check,
    DiscreteOnticModel, KsQubitModel, ParametricModel, SUPPORT_THRESHOLD,
};
use psi_gauge::orbit::run_orbit;
use psi_gauge::qcore::{validate_povm, ComplexArray, StateVector, C64};
use psi_gauge::sphere::tilted_state;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{csv_line, emit, read_file, report, write_file, CliError, CliResult};
use crate::{
    Center, Check, Cli, Command, ExclusionArgs, Format, Kind, ModelArgs, OrbitArgs, ProtocolArgs, ScalingArgs,
    SweepArgs, Thm1Args, Thm2Args, Thm4Args,
};

pub fn run(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed;
    let format = cli.format;
    let text = match &cli.command {
        Command::Thm1(a) => thm1(a, seed, format)?,
        Command::Thm2(a) => thm2(a, seed, format)?,
        Command::Thm4(a) => thm4(a, seed, format)?,
        Command::Model(a) => model(a, seed, format)?,
        Command::Orbit(a) => orbit(a, seed, format)?,
        Command::Scaling(a) => scaling(a, seed, format)?,
        Command::Exclusion(a) => exclusion(a, seed, format)?,
        Command::Sweep(a) => run_sweep(a, seed, format)?,
    };
    emit(&text, cli.out.as_deref())
}

fn json_only(format: Format, command: &str) -> CliResult<()> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Usage(format!("`{command}` has no CSV output; use --format json"))),
    }
}

fn noise(p: &ProtocolArgs) -> CliResult<NoiseSpec> {
    Ok(NoiseSpec::new(p.noise_p, p.noise_q)?)
}

/// The measurement is checked before any shots are simulated so that a
/// broken construction exits with the contract code.
fn checked(ensemble: NoGoEnsemble, out: Option<&std::path::PathBuf>) -> CliResult<NoGoEnsemble> {
    let r = validate_povm(&ensemble.measurement);
    if !r.passed {
        return Err(CliError::Contract(format!("measurement failed validation: {r:?}")));
    }
    if let Some(path) = out {
        write_file(path, &serde_json::to_string_pretty(&ensemble)?)?;
    }
    Ok(ensemble)
}

const PROTOCOL_CSV_HEADER: &str =
    "kind,d,n,shots,noise_p,noise_q,eps_hat,eps_expected,eps_upper,confidence,delta_star,seed\n";

fn protocol_csv_row(e: &NoGoEnsemble, r: &EstimateReport) -> String {
    csv_line([
        serde_json::to_value(e.kind).unwrap().as_str().unwrap_or_default().to_string(),
        e.center.dim().to_string(),
        r.n_copies.to_string(),
        r.shots_per_preparation.to_string(),
        r.noise.depolarizing_p.to_string(),
        r.noise.outcome_flip_q.to_string(),
        r.epsilon_exp_hat.to_string(),
        r.epsilon_exp_expected.to_string(),
        r.epsilon_upper_bound.to_string(),
        r.confidence.to_string(),
        e.delta_star.to_string(),
        r.seed.to_string(),
    ])
}

#[derive(Serialize)]
struct ProtocolResult<X: Serialize> {
    delta_star: f64,
    params: BTreeMap<String, f64>,
    /// Quantum value of `Σ_k P(k | M, ψ_k)` for the ideal construction.
    exclusion_sum: f64,
    estimate: EstimateReport,
    #[serde(flatten)]
    extra: X,
}

fn protocol<X: Serialize>(
    command: &'static str,
    config: &impl Serialize,
    ensemble: &NoGoEnsemble,
    p: &ProtocolArgs,
    seed: u64,
    format: Format,
    extra: X,
) -> CliResult<String> {
    let estimate = run_protocol(ensemble, noise(p)?, p.shots, p.confidence, seed)?;
    if format == Format::Csv {
        return Ok(format!("{PROTOCOL_CSV_HEADER}{}", protocol_csv_row(ensemble, &estimate)));
    }
    let result = ProtocolResult {
        delta_star: ensemble.delta_star,
        params: ensemble.params.clone(),
        exclusion_sum: ensemble.exclusion_sum()?,
        estimate,
        extra,
    };
    report(command, seed, config, result)
}

fn thm1(a: &Thm1Args, seed: u64, format: Format) -> CliResult<String> {
    let e = checked(theorem1_ensemble(a.dim as usize)?, a.ensemble_out.as_ref())?;
    protocol("thm1", a, &e, &a.protocol, seed, format, json!({}))
}

#[derive(Serialize)]
struct DeltaRow {
    n: usize,
    delta: f64,
    n_delta_over_gamma: f64,
}

fn thm2(a: &Thm2Args, seed: u64, format: Format) -> CliResult<String> {
    let (d, n) = (a.dim as usize, a.copies as usize);
    let e = checked(theorem2_ensemble(d, n)?, a.ensemble_out.as_ref())?;
    let gamma = gamma_coefficient(d)?;
    let delta_table = [1, 2, 3, 5, 10, 20, 50, 100, 1000, 10_000]
        .into_iter()
        .map(|n| {
            let delta = theorem2_delta(d, n)?;
            Ok(DeltaRow {
                n,
                delta,
                n_delta_over_gamma: n as f64 * delta / gamma,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let extra = json!({ "gamma": gamma, "delta_table": delta_table });
    protocol("thm2", a, &e, &a.protocol, seed, format, extra)
}

fn thm4(a: &Thm4Args, seed: u64, format: Format) -> CliResult<String> {
    let d = a.dim as usize;
    let t = a.t.unwrap_or_else(|| ((d as f64 - 1.0) / d as f64).sqrt());
    let e = checked(theorem4_ensemble(d, t)?, a.ensemble_out.as_ref())?;
    protocol("thm4", a, &e, &a.protocol, seed, format, json!({ "t": t }))
}

fn center_state(c: Center) -> CliResult<StateVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match c {
        Center::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        Center::One => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        Center::Plus => [C64::new(h, 0.0), C64::new(h, 0.0)],
        Center::Minus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
        Center::PlusI => [C64::new(h, 0.0), C64::new(0.0, h)],
        Center::MinusI => [C64::new(h, 0.0), C64::new(0.0, -h)],
    };
    Ok(StateVector::new(amps.to_vec())?)
}

fn builtin_checks(a: &ModelArgs, seed: u64) -> CliResult<BTreeMap<&'static str, Value>> {
    let model: KsQubitModel = ks_qubit_model(a.grid)?;
    let center = center_state(a.center)?;
    let mut out = BTreeMap::new();
    let pair = || -> CliResult<DiscreteOnticModel> {
        let other = tilted_state(&center, a.fidelity)?;
        Ok(model.discretize(&[("a".into(), center.clone()), ("b".into(), other)], &[])?)
    };
    for check in &a.check {
        match check {
            Check::Validate => {
                out.insert("validate", json!({ "valid": true, "lambda_count": model.lambda_count() }));
            }
            Check::Reproduce => {
                let err = ks_reproduction_check(&model, a.pairs, seed)?;
                out.insert("reproduce", json!({ "pairs": a.pairs, "max_error": err }));
            }
            Check::Classify => {
                let c = classify(&pair()?, &["a", "b"])?;
                out.insert("classify", json!({ "fidelity": a.fidelity, "classification": c }));
            }
            Check::Epsilon => {
                let r = epsilon_overlap(&pair()?, &["a", "b"])?;
                out.insert(
                    "epsilon",
                    json!({ "fidelity": a.fidelity, "epsilon": r.epsilon, "witness_count": r.witness_lambdas.len() }),
                );
            }
            Check::Nogo => {
                let e = theorem1_ensemble(2)?;
                let d = model.discretize(
                    &[("a".into(), e.states[0].clone()), ("b".into(), e.states[1].clone())],
                    &[("m".into(), e.measurement.clone())],
                )?;
                out.insert("nogo", json!({ "ensemble": "thm1 d=2", "check": nogo_check(&d, &["a", "b"], "m")? }));
            }
            Check::Continuity => {
                let r = delta_continuity_probe(&model, &center, a.delta, a.samples, SUPPORT_THRESHOLD, seed)?;
                out.insert(
                    "continuity",
                    json!({
                        "center": a.center,
                        "delta": r.delta,
                        "n_samples": r.n_samples,
                        "n_deterministic": r.n_deterministic,
                        "common_support_size": r.common_support.len(),
                        "empirical_epsilon": r.empirical_epsilon,
                        "verdict": r.verdict,
                    }),
                );
            }
        }
    }
    Ok(out)
}

fn file_checks(a: &ModelArgs, path: &std::path::PathBuf) -> CliResult<BTreeMap<&'static str, Value>> {
    let model = DiscreteOnticModel::from_json(&read_file(path)?).map_err(|e| match e {
        psi_gauge::Error::Json(j) => CliError::Usage(format!("{}: {j}", path.display())),
        other => CliError::from(other),
    })?;
    let labels: Vec<String> = match &a.preparations {
        Some(l) => l.clone(),
        None => model.preparation_labels().map(str::to_string).collect(),
    };
    let qs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for check in &a.check {
        match check {
            Check::Validate => {
                out.insert(
                    "validate",
                    json!({
                        "valid": true,
                        "lambda_count": model.lambda_count(),
                        "preparations": model.preparation_labels().collect::<Vec<_>>(),
                        "measurements": model.measurement_labels().collect::<Vec<_>>(),
                    }),
                );
            }
            Check::Classify => {
                out.insert("classify", serde_json::to_value(classify(&model, &qs)?)?);
            }
            Check::Epsilon => {
                out.insert("epsilon", serde_json::to_value(epsilon_overlap(&model, &qs)?)?);
            }
            Check::Nogo => {
                let checks = model
                    .measurement_labels()
                    .map(|m| Ok((m.to_string(), nogo_check(&model, &qs, m)?)))
                    .collect::<CliResult<BTreeMap<_, _>>>()?;
                out.insert("nogo", serde_json::to_value(checks)?);
            }
            Check::Reproduce | Check::Continuity => {
                return Err(CliError::Usage(format!(
                    "check `{}` needs a model defined on all states; use --builtin",
                    serde_json::to_value(check)?.as_str().unwrap_or_default()
                )));
            }
        }
    }
    Ok(out)
}

fn model(a: &ModelArgs, seed: u64, format: Format) -> CliResult<String> {
    json_only(format, "model")?;
    let checks = match (&a.builtin, &a.file) {
        (Some(_), _) => builtin_checks(a, seed)?,
        (None, Some(path)) => file_checks(a, path)?,
        (None, None) => return Err(CliError::Usage("give --builtin or --file".into())),
    };
    report("model", seed, a, checks)
}

fn orbit(a: &OrbitArgs, seed: u64, format: Format) -> CliResult<String> {
    let r = run_orbit(a.theta, a.target, a.steps, a.tol, a.grid, seed)?;
    let points: Vec<[f64; 3]> = r.final_cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect();
    if let Some(path) = &a.points_out {
        write_file(path, &serde_json::to_string(&points)?)?;
    }
    match format {
        Format::Csv => {
            let mut text = String::from("k,cloud_size,coverage\n");
            for row in &r.trajectory {
                text.push_str(&csv_line([row.k.to_string(), row.cloud_size.to_string(), row.coverage.to_string()]));
            }
            Ok(text)
        }
        Format::Json => {
            let final_coverage = r.trajectory.last().map(|t| t.coverage).unwrap_or(0.0);
            let result = json!({
                "steps_to_target": r.steps,
                "final_coverage": final_coverage,
                "trajectory": r.trajectory,
                "points": points,
            });
            report("orbit", seed, a, result)
        }
    }
}

fn scaling(a: &ScalingArgs, seed: u64, format: Format) -> CliResult<String> {
    let rows = a
        .delta
        .iter()
        .map(|&d| scaling_report(d))
        .collect::<Result<Vec<_>, _>>()?;
    match format {
        Format::Csv => {
            let mut text = String::from("delta_target,thm1_dim,thm2_copies_d3,pbr_copies,pbr_state_count\n");
            for r in &rows {
                text.push_str(&csv_line([
                    r.delta_target.to_string(),
                    r.thm1_dim.to_string(),
                    r.thm2_copies_d3.to_string(),
                    r.pbr_copies.to_string(),
                    r.pbr_state_count.to_string(),
                ]));
            }
            Ok(text)
        }
        Format::Json => report("scaling", seed, a, rows),
    }
}

fn parse_states(text: &str) -> CliResult<Vec<StateVector>> {
    let value: Value = serde_json::from_str(text)?;
    let list = match value {
        Value::Object(mut map) => map
            .remove("states")
            .ok_or_else(|| CliError::Usage("object has no \"states\" field".into()))?,
        v => v,
    };
    let arrays: Vec<ComplexArray> = serde_json::from_value(list)?;
    Ok(arrays
        .into_iter()
        .map(StateVector::try_from)
        .collect::<Result<Vec<_>, _>>()?)
}

fn exclusion(a: &ExclusionArgs, seed: u64, format: Format) -> CliResult<String> {
    json_only(format, "exclusion")?;
    let states = parse_states(&read_file(&a.states)?)?;
    let problem = ExclusionProblem::new(states)?;
    let r = optimize(&problem, a.restarts, a.max_iters, seed)?;
    report("exclusion", seed, a, r)
}

fn sweep_point(kind: Kind, d: usize, n: usize, p: f64, a: &SweepArgs) -> CliResult<SweepPoint> {
    let ensemble = match kind {
        Kind::Thm1 => theorem1_ensemble(d)?,
        Kind::Thm2 => theorem2_ensemble(d, n)?,
        Kind::Thm4 => theorem4_ensemble(d, a.t.unwrap_or_else(|| ((d as f64 - 1.0) / d as f64).sqrt()))?,
    };
    let mut params = BTreeMap::from([
        ("d".to_string(), d as f64),
        ("noise_p".to_string(), p),
        ("noise_q".to_string(), a.noise_q),
    ]);
    if kind == Kind::Thm2 {
        params.insert("n".to_string(), n as f64);
    }
    params.insert("delta_star".to_string(), ensemble.delta_star);
    Ok(SweepPoint {
        params,
        ensemble,
        noise: NoiseSpec::new(p, a.noise_q)?,
    })
}

fn run_sweep(a: &SweepArgs, seed: u64, format: Format) -> CliResult<String> {
    let copies: &[usize] = if a.kind == Kind::Thm2 { &a.copies } else { &[1] };
    let mut grid = Vec::new();
    for &d in &a.dims {
        for &n in copies {
            for &p in &a.noise_p {
                grid.push((d, n, p));
            }
        }
    }
    // Keeps the CLI error (and its exit code) of a failing grid point.
    let error = RefCell::new(None);
    let rows = sweep(
        &grid,
        |&(d, n, p)| {
            sweep_point(a.kind, d, n, p, a).map_err(|e| {
                let msg = e.to_string();
                *error.borrow_mut() = Some(e);
                psi_gauge::Error::InvalidArgument(msg)
            })
        },
        a.shots,
        a.confidence,
        seed,
    );
    let rows = match (rows, error.into_inner()) {
        (Ok(rows), _) => rows,
        (Err(_), Some(e)) => return Err(e),
        (Err(e), None) => return Err(e.into()),
    };
    match format {
        Format::Csv => Ok(sweep_csv(&rows)),
        Format::Json => report("sweep", seed, a, rows),
    }
}
