//! Browser bindings for the demo page in `www/`.
//!
//! The plain functions hold the logic and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use psi_gauge::ensembles::{gamma_coefficient, theorem1_ensemble, theorem2_delta};
use psi_gauge::experiment::{run_protocol, NoiseSpec};
use psi_gauge::orbit::run_orbit;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coverage grid used by the page; smaller than the CLI default to stay interactive.
pub const DEMO_COVERAGE_GRID: usize = 2000;
pub const MAX_DEMO_STEPS: usize = 6;

/// `[δ_{1,d}, …, δ_{n_max,d}]` followed by `γ(d)`.
pub fn delta_curve(d: usize, n_max: usize) -> Result<Vec<f64>, String> {
    if !(1..=10_000).contains(&n_max) {
        return Err(format!("n_max must lie in 1..=10000, got {n_max}"));
    }
    let mut out = (1..=n_max)
        .map(|n| theorem2_delta(d, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    out.push(gamma_coefficient(d).map_err(|e| e.to_string())?);
    Ok(out)
}

#[derive(Serialize)]
struct OrbitView {
    steps_to_target: Option<usize>,
    coverage: Vec<f64>,
    cloud_size: Vec<usize>,
    points: Vec<[f64; 3]>,
}

/// Orbit growth from the pair at Bloch angle `theta`, as JSON with the
/// per-generation coverage and the final point cloud.
pub fn orbit_growth(theta: f64, steps: usize, tol: f64, seed: u64) -> Result<String, String> {
    if steps > MAX_DEMO_STEPS {
        return Err(format!("at most {MAX_DEMO_STEPS} steps in the demo, got {steps}"));
    }
    let r = run_orbit(theta, Some(0.999), steps, tol, DEMO_COVERAGE_GRID, seed).map_err(|e| e.to_string())?;
    let view = OrbitView {
        steps_to_target: r.steps,
        coverage: r.trajectory.iter().map(|t| t.coverage).collect(),
        cloud_size: r.trajectory.iter().map(|t| t.cloud_size).collect(),
        points: r.final_cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Finite-shot run of the `d`-state exclusion ensemble, as JSON.
pub fn simulate_exclusion(d: usize, shots: u64, noise_p: f64, noise_q: f64, seed: u64) -> Result<String, String> {
    let e = theorem1_ensemble(d).map_err(|e| e.to_string())?;
    let noise = NoiseSpec::new(noise_p, noise_q).map_err(|e| e.to_string())?;
    let r = run_protocol(&e, noise, shots, 0.95, seed).map_err(|e| e.to_string())?;
    serde_json::to_string(&serde_json::json!({ "delta_star": e.delta_star, "report": r })).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = deltaCurve)]
pub fn delta_curve_js(d: usize, n_max: usize) -> Result<Vec<f64>, JsError> {
    delta_curve(d, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = orbitGrowth)]
pub fn orbit_growth_js(theta: f64, steps: usize, tol: f64, seed: u32) -> Result<String, JsError> {
    orbit_growth(theta, steps, tol, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateExclusion)]
pub fn simulate_exclusion_js(d: usize, shots: u32, noise_p: f64, noise_q: f64, seed: u32) -> Result<String, JsError> {
    simulate_exclusion(d, shots as u64, noise_p, noise_q, seed as u64).map_err(|e| JsError::new(&e))
}
