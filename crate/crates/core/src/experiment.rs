//! Finite-shot simulation of the exclusion tests under noise.
//!
//! Each preparation is measured `shots` times. The observed exclusion sum
//! `ε_exp = Σ_k n_kk / shots` upper-bounds the ontic overlap, and exact
//! one-sided Clopper–Pearson limits combined with a union bound over the `d`
//! terms turn it into a confidence statement.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::ensembles::{EnsembleKind, NoGoEnsemble};
use crate::error::{Error, Result};
use crate::qcore::{born_prob, validate_povm, Povm, StateVector};

pub const BOUND_METHOD: &str = "one-sided Clopper-Pearson per term at level 1-(1-confidence)/d, \
                                summed over the d terms (union bound)";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NoiseSpec {
    /// Weight of the maximally mixed state mixed into each preparation.
    pub depolarizing_p: f64,
    /// Weight of a uniformly random outcome mixed into each readout.
    pub outcome_flip_q: f64,
}

impl NoiseSpec {
    pub fn new(depolarizing_p: f64, outcome_flip_q: f64) -> Result<Self> {
        for (name, v) in [("depolarizing_p", depolarizing_p), ("outcome_flip_q", outcome_flip_q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(Self {
            depolarizing_p,
            outcome_flip_q,
        })
    }

    pub fn noiseless() -> Self {
        Self::default()
    }
}

/// Outcome distribution of `povm` on `(1−p)|ψ><ψ| + p·I/D`, then mixed with
/// the uniform outcome distribution at weight `q`.
pub fn noisy_outcome_distribution(state: &StateVector, povm: &Povm, noise: NoiseSpec) -> Result<Vec<f64>> {
    let report = validate_povm(povm);
    if !report.passed {
        return Err(Error::InvalidPovm(format!(
            "min eigenvalue {:.3e}, completeness deviation {:.3e}",
            report.min_eigenvalue, report.completeness_deviation
        )));
    }
    distribution_unchecked(state, povm, noise)
}

fn distribution_unchecked(state: &StateVector, povm: &Povm, noise: NoiseSpec) -> Result<Vec<f64>> {
    let dim = povm.dim() as f64;
    let outcomes = povm.outcome_count() as f64;
    let NoiseSpec {
        depolarizing_p: p,
        outcome_flip_q: q,
    } = noise;
    povm.effects()
        .iter()
        .map(|e| {
            let born = born_prob(state, e)?;
            let mixed = e.trace().re / dim;
            Ok((1.0 - q) * ((1.0 - p) * born + p * mixed) + q / outcomes)
        })
        .collect()
}

/// Exact one-sided upper confidence limit for a binomial proportion: the
/// `p` at which `P(X ≤ successes | trials, p) = alpha`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, alpha: f64) -> Result<f64> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if successes == trials {
        return Ok(1.0);
    }
    if successes == 0 {
        return Ok(1.0 - alpha.powf(1.0 / trials as f64));
    }
    // P(X ≤ x | p) = 1 − I_p(x + 1, n − x), increasing target in p.
    let a = successes as f64 + 1.0;
    let b = (trials - successes) as f64;
    let (mut lo, mut hi) = (successes as f64 / trials as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < 1.0 - alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// Multinomial draw via sequential conditional binomials. Outcomes with zero
/// probability never receive counts.
fn multinomial(shots: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut suffix = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        suffix[i] = suffix[i + 1] + probs[i];
    }
    let mut remaining = shots;
    let mut counts = vec![0; probs.len()];
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if suffix[i + 1] <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let cond = (p / suffix[i]).clamp(0.0, 1.0);
        if cond > 0.0 {
            let c = Binomial::new(remaining, cond)
                .expect("conditional probability lies in [0, 1]")
                .sample(rng);
            counts[i] = c;
            remaining -= c;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub ensemble_kind: EnsembleKind,
    pub noise: NoiseSpec,
    pub shots_per_preparation: u64,
    /// `counts[k][r]`: outcome `r` observed on preparation `k`.
    pub counts: Vec<Vec<u64>>,
    pub epsilon_exp_hat: f64,
    /// Noisy `Σ_k P(k | M, Q_k)` the estimator targets.
    pub epsilon_exp_expected: f64,
    pub epsilon_upper_bound: f64,
    pub confidence: f64,
    pub bound_method: String,
    pub n_copies: usize,
    /// `epsilon_upper_bound^{1/n}`; only valid under preparation independence.
    pub epsilon_single_copy_bound: Option<f64>,
    pub assumes_preparation_independence: bool,
    pub seed: u64,
}

pub fn run_protocol(
    ensemble: &NoGoEnsemble,
    noise: NoiseSpec,
    shots: u64,
    confidence: f64,
    seed: u64,
) -> Result<EstimateReport> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let d = ensemble.states.len();
    if ensemble.outcome_count() < d {
        return Err(Error::InvalidArgument(format!(
            "{} outcomes cannot exclude {d} preparations",
            ensemble.outcome_count()
        )));
    }
    let report = validate_povm(&ensemble.measurement);
    if !report.passed {
        return Err(Error::InvalidPovm(format!("{report:?}")));
    }

    let alpha = (1.0 - confidence) / d as f64;
    let mut counts = Vec::with_capacity(d);
    let mut epsilon_exp_expected = 0.0;
    let mut epsilon_upper_bound = 0.0;
    for (k, state) in ensemble.states.iter().enumerate() {
        let probs = distribution_unchecked(state, &ensemble.measurement, noise)?;
        epsilon_exp_expected += probs[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let row = multinomial(shots, &probs, &mut rng);
        epsilon_upper_bound += clopper_pearson_upper(row[k], shots, alpha)?;
        counts.push(row);
    }
    let epsilon_exp_hat = counts
        .iter()
        .enumerate()
        .map(|(k, row)| row[k] as f64 / shots as f64)
        .sum();

    let multi_copy = ensemble.kind == EnsembleKind::Theorem2;
    let n = ensemble.copies.max(1);
    Ok(EstimateReport {
        ensemble_kind: ensemble.kind,
        noise,
        shots_per_preparation: shots,
        counts,
        epsilon_exp_hat,
        epsilon_exp_expected,
        epsilon_upper_bound,
        confidence,
        bound_method: BOUND_METHOD.to_string(),
        n_copies: n,
        epsilon_single_copy_bound: multi_copy.then(|| single_copy_bound(epsilon_upper_bound, n)),
        assumes_preparation_independence: multi_copy,
        seed,
    })
}

/// `ε ≤ ε_n^{1/n}`, valid when joint ontic distributions factorize.
pub fn single_copy_bound(n_copy_bound: f64, n: usize) -> f64 {
    n_copy_bound.min(1.0).powf(1.0 / n as f64)
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub params: BTreeMap<String, f64>,
    pub ensemble: NoGoEnsemble,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, f64>,
    pub shots: u64,
    pub eps_hat: f64,
    pub eps_upper: f64,
    pub confidence: f64,
    pub seed: u64,
}

/// Runs the protocol at every grid point; row `i` uses seed `seed + i`.
pub fn sweep<G, F>(grid: &[G], generator: F, shots: u64, confidence: f64, seed: u64) -> Result<Vec<SweepRow>>
where
    F: Fn(&G) -> Result<SweepPoint>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(i, g)| {
            let point = generator(g)?;
            let row_seed = seed.wrapping_add(i as u64);
            let r = run_protocol(&point.ensemble, point.noise, shots, confidence, row_seed)?;
            Ok(SweepRow {
                params: point.params,
                shots,
                eps_hat: r.epsilon_exp_hat,
                eps_upper: r.epsilon_upper_bound,
                confidence,
                seed: row_seed,
            })
        })
        .collect()
}

/// CSV with header `params…, shots, eps_hat, eps_upper, confidence, seed`;
/// parameter columns follow the first row's (sorted) keys.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let keys: Vec<&String> = rows.first().map(|r| r.params.keys().collect()).unwrap_or_default();
    let mut out = String::new();
    for k in &keys {
        let _ = write!(out, "{k},");
    }
    out.push_str("shots,eps_hat,eps_upper,confidence,seed\n");
    for r in rows {
        for k in &keys {
            let _ = write!(out, "{},", r.params.get(*k).copied().unwrap_or(f64::NAN));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.shots, r.eps_hat, r.eps_upper, r.confidence, r.seed
        );
    }
    out
}
