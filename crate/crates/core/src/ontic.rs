//! Discrete ontological models.
//!
//! An ontic space is a finite set `Λ = {0, …, lambda_count − 1}`. Each
//! preparation is a probability vector over `Λ` and each measurement a
//! row-stochastic response table `P(r | M, λ)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{theorem1_delta, theorem1_states};
use crate::error::{Error, Result};
use crate::qcore::{self, born_prob, Ball, Povm, StateVector, C64};
use crate::sphere::{bloch_vector, fibonacci_lattice};

/// Tolerance on probability-vector and response-row sums.
pub const STOCHASTIC_TOL: f64 = 1e-10;
/// Probabilities at or below this count as zero in support tests.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Largest ontic space `product_model` will build.
pub const LAMBDA_CAP: usize = 1_000_000;
/// Largest response table (entries) `product_model` will build.
pub const RESPONSE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Deserialize)]
struct RawModel {
    lambda_count: usize,
    preparations: BTreeMap<String, Vec<f64>>,
    responses: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct DiscreteOnticModel {
    lambda_count: usize,
    preparations: BTreeMap<String, Vec<f64>>,
    responses: BTreeMap<String, Vec<Vec<f64>>>,
}

impl TryFrom<RawModel> for DiscreteOnticModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        Self::new(raw.lambda_count, raw.preparations, raw.responses)
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidModel {
        field: field.into(),
        reason: reason.into(),
    }
}

fn check_distribution(field: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid(
            format!("{field}[{i}]"),
            format!("entry {} is not a nonnegative number", values[i]),
        ));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(invalid(field, format!("entries sum to {sum}, expected 1")));
    }
    Ok(())
}

impl DiscreteOnticModel {
    pub fn new(
        lambda_count: usize,
        preparations: BTreeMap<String, Vec<f64>>,
        responses: BTreeMap<String, Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if lambda_count == 0 {
            return Err(invalid("lambda_count", "must be positive"));
        }
        for (label, p) in &preparations {
            let field = format!("preparations.{label}");
            if p.len() != lambda_count {
                return Err(invalid(
                    field,
                    format!("has {} entries, expected {lambda_count}", p.len()),
                ));
            }
            check_distribution(&field, p)?;
        }
        for (label, table) in &responses {
            let field = format!("responses.{label}");
            if table.len() != lambda_count {
                return Err(invalid(
                    field,
                    format!("has {} rows, expected {lambda_count}", table.len()),
                ));
            }
            let outcomes = table[0].len();
            if outcomes == 0 {
                return Err(invalid(field, "rows have no outcomes"));
            }
            for (i, row) in table.iter().enumerate() {
                let row_field = format!("{field}[{i}]");
                if row.len() != outcomes {
                    return Err(invalid(
                        row_field,
                        format!("has {} outcomes, expected {outcomes}", row.len()),
                    ));
                }
                check_distribution(&row_field, row)?;
            }
        }
        Ok(Self {
            lambda_count,
            preparations,
            responses,
        })
    }

    /// Parses the JSON file format, reporting line/column or field errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn lambda_count(&self) -> usize {
        self.lambda_count
    }

    pub fn preparation_labels(&self) -> impl Iterator<Item = &str> {
        self.preparations.keys().map(String::as_str)
    }

    pub fn measurement_labels(&self) -> impl Iterator<Item = &str> {
        self.responses.keys().map(String::as_str)
    }

    pub fn preparation(&self, label: &str) -> Result<&[f64]> {
        self.preparations
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn response(&self, label: &str) -> Result<&[Vec<f64>]> {
        self.responses
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn outcome_count(&self, measurement: &str) -> Result<usize> {
        Ok(self.response(measurement)?[0].len())
    }
}

/// `P(r | M, Q) = Σ_λ P(r | M, λ) P(λ | Q)`.
pub fn predict(model: &DiscreteOnticModel, q: &str, m: &str) -> Result<Vec<f64>> {
    let prep = model.preparation(q)?;
    let table = model.response(m)?;
    let mut out = vec![0.0; table[0].len()];
    for (p, row) in prep.iter().zip(table) {
        if *p == 0.0 {
            continue;
        }
        for (o, r) in out.iter_mut().zip(row) {
            *o += p * r;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub epsilon: f64,
    pub witness_lambdas: Vec<usize>,
    pub per_lambda_min: Vec<f64>,
}

/// `ε = Σ_λ min_k P(λ | Q_k)`.
pub fn epsilon_overlap(model: &DiscreteOnticModel, qs: &[&str]) -> Result<OverlapReport> {
    if qs.len() < 2 {
        return Err(Error::InvalidArgument(
            "overlap needs at least two preparations".into(),
        ));
    }
    let preps = qs
        .iter()
        .map(|q| model.preparation(q))
        .collect::<Result<Vec<_>>>()?;
    let per_lambda_min: Vec<f64> = (0..model.lambda_count)
        .map(|l| preps.iter().map(|p| p[l]).fold(f64::INFINITY, f64::min))
        .collect();
    let witness_lambdas = per_lambda_min
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(l, _)| l)
        .collect();
    Ok(OverlapReport {
        epsilon: per_lambda_min.iter().sum(),
        witness_lambdas,
        per_lambda_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoGoCheck {
    /// `Σ_k P(k | M, Q_k)`.
    pub lhs: f64,
    pub epsilon: f64,
    pub inequality_holds: bool,
}

/// Evaluates both sides of `Σ_k P(k | M, Q_k) ≥ ε`.
pub fn nogo_check(model: &DiscreteOnticModel, qs: &[&str], m: &str) -> Result<NoGoCheck> {
    let outcomes = model.outcome_count(m)?;
    if outcomes < qs.len() {
        return Err(Error::InvalidArgument(format!(
            "measurement `{m}` has {outcomes} outcomes but {} preparations were given",
            qs.len()
        )));
    }
    let mut lhs = 0.0;
    for (k, q) in qs.iter().enumerate() {
        lhs += predict(model, q, m)?[k];
    }
    let epsilon = epsilon_overlap(model, qs)?.epsilon;
    Ok(NoGoCheck {
        lhs,
        epsilon,
        inequality_holds: lhs >= epsilon - 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ontology {
    PsiOntic,
    PsiEpistemic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Ontology,
    /// Pair with the largest pairwise overlap.
    pub pair: (String, String),
    pub overlap: f64,
}

/// ψ-epistemic iff some pair of preparations overlaps by more than `1e-12`.
pub fn classify(model: &DiscreteOnticModel, qs: &[&str]) -> Result<Classification> {
    if qs.len() < 2 {
        return Err(Error::InvalidArgument(
            "classification needs at least two preparations".into(),
        ));
    }
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..qs.len() {
        for j in i + 1..qs.len() {
            let eps = epsilon_overlap(model, &[qs[i], qs[j]])?.epsilon;
            if eps > best.2 {
                best = (i, j, eps);
            }
        }
    }
    Ok(Classification {
        verdict: if best.2 > SUPPORT_THRESHOLD {
            Ontology::PsiEpistemic
        } else {
            Ontology::PsiOntic
        },
        pair: (qs[best.0].to_string(), qs[best.1].to_string()),
        overlap: best.2,
    })
}

/// `(1/2) Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `n` independent copies: ontic space `Λ^n`, product preparations and
/// product responses, under the same labels.
///
/// The overlap of the product satisfies `ε_n ≥ ε^n`, with equality when one
/// preparation is pointwise smaller on the common support (for instance when
/// both are flat on their supports). It does not factorize in general.
pub fn product_model(model: &DiscreteOnticModel, n: usize) -> Result<DiscreteOnticModel> {
    if n == 0 {
        return Err(Error::InvalidArgument("product needs n >= 1".into()));
    }
    let cap_err = |requested| Error::DimensionCap {
        requested,
        cap: LAMBDA_CAP,
    };
    let lambdas = model
        .lambda_count
        .checked_pow(n as u32)
        .filter(|&l| l <= LAMBDA_CAP)
        .ok_or_else(|| cap_err(model.lambda_count.saturating_pow(n as u32)))?;
    for table in model.responses.values() {
        let outcomes = table[0].len().saturating_pow(n as u32);
        if lambdas.saturating_mul(outcomes) > RESPONSE_CAP {
            return Err(Error::DimensionCap {
                requested: lambdas.saturating_mul(outcomes),
                cap: RESPONSE_CAP,
            });
        }
    }

    let preparations = model
        .preparations
        .iter()
        .map(|(label, p)| (label.clone(), kron_power(p, n)))
        .collect();
    let responses = model
        .responses
        .iter()
        .map(|(label, table)| {
            let mut acc: Vec<Vec<f64>> = table.clone();
            for _ in 1..n {
                let mut next = Vec::with_capacity(acc.len() * table.len());
                for row_a in &acc {
                    for row_b in table {
                        next.push(kron(row_a, row_b));
                    }
                }
                acc = next;
            }
            (label.clone(), acc)
        })
        .collect();
    DiscreteOnticModel::new(lambdas, preparations, responses)
}

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn kron_power(p: &[f64], n: usize) -> Vec<f64> {
    (1..n).fold(p.to_vec(), |acc, _| kron(&acc, p))
}

/// Ontic model with one ontic state per quantum state and Born-rule responses.
///
/// Preparations are labelled `q0, q1, …` and measurements `m0, m1, …`.
pub fn psi_ontic_fixture(states: &[StateVector], measurements: &[Povm]) -> Result<DiscreteOnticModel> {
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            if states[i].fidelity_amplitude(&states[j])? >= 1.0 - SUPPORT_THRESHOLD {
                return Err(Error::InvalidArgument(format!(
                    "states {i} and {j} coincide up to phase"
                )));
            }
        }
    }
    let n = states.len();
    let preparations = (0..n)
        .map(|k| {
            let mut p = vec![0.0; n];
            p[k] = 1.0;
            (format!("q{k}"), p)
        })
        .collect();
    let responses = measurements
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let table = states
                .iter()
                .map(|s| normalized_row(m.probabilities(s)?))
                .collect::<Result<Vec<_>>>()?;
            Ok((format!("m{j}"), table))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    DiscreteOnticModel::new(n, preparations, responses)
}

fn normalized_row(mut row: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPovm(format!(
            "outcome probabilities sum to {sum}"
        )));
    }
    row.iter_mut().for_each(|r| *r /= sum);
    Ok(row)
}

/// A model defined for every quantum state, over a fixed finite ontic space.
pub trait ParametricModel: Sync {
    fn lambda_count(&self) -> usize;

    /// Hilbert-space dimension the model describes.
    fn dim(&self) -> usize;

    fn preparation(&self, state: &StateVector) -> Result<Vec<f64>>;

    fn response(&self, measurement: &Povm) -> Result<Vec<Vec<f64>>>;

    /// Freezes the model on finitely many labelled states and measurements.
    fn discretize(
        &self,
        preparations: &[(String, StateVector)],
        measurements: &[(String, Povm)],
    ) -> Result<DiscreteOnticModel> {
        let preps = preparations
            .iter()
            .map(|(l, s)| Ok((l.clone(), self.preparation(s)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let resp = measurements
            .iter()
            .map(|(l, m)| Ok((l.clone(), self.response(m)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        DiscreteOnticModel::new(self.lambda_count(), preps, resp)
    }
}

/// Kochen–Specker qubit model on a Fibonacci grid of Bloch vectors.
///
/// `P(λ | ψ) ∝ max(0, b_ψ · b_λ)`; a projective measurement along `m`
/// returns `+` iff `b_m · b_λ ≥ 0` (ties go to `+`).
#[derive(Debug, Clone)]
pub struct KsQubitModel {
    grid: Vec<Vector3<f64>>,
}

pub fn ks_qubit_model(grid_size: usize) -> Result<KsQubitModel> {
    if grid_size < 100 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 100, got {grid_size}"
        )));
    }
    Ok(KsQubitModel {
        grid: fibonacci_lattice(grid_size),
    })
}

impl KsQubitModel {
    pub fn grid(&self) -> &[Vector3<f64>] {
        &self.grid
    }

    /// Bloch axis of the first effect of a rank-one projective qubit measurement.
    pub fn measurement_axis(measurement: &Povm) -> Result<Vector3<f64>> {
        if measurement.dim() != 2 || measurement.outcome_count() != 2 {
            return Err(Error::InvalidPovm(
                "qubit model accepts two-outcome qubit measurements only".into(),
            ));
        }
        let report = qcore::validate_povm(measurement);
        if !report.passed {
            return Err(Error::InvalidPovm(format!("{report:?}")));
        }
        let e = measurement.effects()[0].matrix();
        let axis = Vector3::new(
            2.0 * e[(1, 0)].re,
            2.0 * e[(1, 0)].im,
            (e[(0, 0)] - e[(1, 1)]).re,
        );
        if (axis.norm() - 1.0).abs() > 1e-9 || (e.trace().re - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPovm(
                "qubit model needs rank-one projective effects".into(),
            ));
        }
        Ok(axis / axis.norm())
    }

    pub fn response_along(&self, axis: &Vector3<f64>) -> Vec<Vec<f64>> {
        self.grid
            .iter()
            .map(|l| {
                if axis.dot(l) >= 0.0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect()
    }
}

impl ParametricModel for KsQubitModel {
    fn lambda_count(&self) -> usize {
        self.grid.len()
    }

    fn dim(&self) -> usize {
        2
    }

    fn preparation(&self, state: &StateVector) -> Result<Vec<f64>> {
        let b = bloch_vector(state)?;
        let mut w: Vec<f64> = self.grid.iter().map(|l| b.dot(l).max(0.0)).collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "grid too coarse: no ontic state in the state's hemisphere".into(),
            ));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Ok(w)
    }

    fn response(&self, measurement: &Povm) -> Result<Vec<Vec<f64>>> {
        let axis = Self::measurement_axis(measurement)?;
        Ok(self.response_along(&axis))
    }
}

/// Projective qubit measurement along a Bloch axis, `+` first.
pub fn qubit_axis_measurement(axis: &Vector3<f64>) -> Result<Povm> {
    let plus = crate::sphere::state_from_bloch(axis)?;
    let minus = crate::sphere::state_from_bloch(&-axis)?;
    Povm::projective(&[plus, minus])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuityVerdict {
    /// Some ontic state is supported by every probed state of the ball.
    ContinuousAtDelta,
    /// No common ontic state among the probed states. Evidence against
    /// continuity at this center, not a proof.
    NoWitnessFound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub delta: f64,
    pub n_samples: usize,
    /// Deterministic worst-case states probed in addition to the samples.
    pub n_deterministic: usize,
    pub common_support: Vec<usize>,
    pub empirical_epsilon: f64,
    pub verdict: ContinuityVerdict,
}

/// Deterministic probe states: the center, boundary points along an
/// orthonormal frame of the center's complement (real and imaginary
/// directions, both signs), and the exclusion states carried onto the
/// center whenever they fit inside the ball.
fn deterministic_probes(center: &StateVector, delta: f64) -> Result<Vec<StateVector>> {
    let dim = center.dim();
    let c = DVector::from_column_slice(center.amplitudes());
    let mut probes = vec![center.clone()];

    let mut frame: Vec<DVector<C64>> = Vec::new();
    for j in 0..dim {
        let mut v = DVector::<C64>::zeros(dim);
        v[j] = C64::new(1.0, 0.0);
        v -= &c * c.dotc(&v);
        for f in &frame {
            v -= f * f.dotc(&v);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            frame.push(v / C64::new(norm, 0.0));
        }
    }
    let f = 1.0 - delta;
    let s = (1.0 - f * f).max(0.0).sqrt();
    for e in frame.iter().take(dim - 1) {
        for phase in [
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
        ] {
            let v = &c * C64::new(f, 0.0) + e * (phase * s);
            probes.push(StateVector::normalized(v.iter().copied().collect())?);
        }
    }

    if delta >= theorem1_delta(dim) - 1e-15 {
        let to_center: DMatrix<C64> = qcore::uniform_to_center(center);
        for psi in theorem1_states(dim)? {
            probes.push(qcore::transform(&to_center, &psi)?);
        }
    }
    Ok(probes)
}

/// Looks for an ontic state supported by every state of the ball around
/// `center`, probing `n_samples` random ball states plus deterministic
/// boundary states.
pub fn delta_continuity_probe(
    family: &dyn ParametricModel,
    center: &StateVector,
    delta: f64,
    n_samples: usize,
    support_threshold: f64,
    seed: u64,
) -> Result<ContinuityReport> {
    if center.dim() != family.dim() {
        return Err(Error::DimensionMismatch(center.dim(), family.dim()));
    }
    if support_threshold <= 0.0 {
        return Err(Error::InvalidArgument(
            "support threshold must be positive".into(),
        ));
    }
    let ball = Ball::new(center.clone(), delta)?;
    let probes = deterministic_probes(center, delta)?;
    let lambdas = family.lambda_count();

    let elementwise_min = |mut a: Vec<f64>, b: Vec<f64>| {
        a.iter_mut().zip(&b).for_each(|(x, y)| *x = x.min(*y));
        a
    };

    let sampled = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let phi = qcore::sample_in_ball_with(&ball, &mut rng)?;
            family.preparation(&phi)
        })
        .try_reduce(|| vec![f64::INFINITY; lambdas], |a, b| Ok(elementwise_min(a, b)))?;
    let minima = probes
        .iter()
        .map(|s| family.preparation(s))
        .try_fold(sampled, |acc, p| p.map(|p| elementwise_min(acc, p)))?;

    let common_support: Vec<usize> = minima
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > support_threshold)
        .map(|(l, _)| l)
        .collect();
    let verdict = if common_support.is_empty() {
        ContinuityVerdict::NoWitnessFound
    } else {
        ContinuityVerdict::ContinuousAtDelta
    };
    Ok(ContinuityReport {
        delta,
        n_samples,
        n_deterministic: probes.len(),
        common_support,
        empirical_epsilon: minima.iter().sum(),
        verdict,
    })
}

/// Largest `|predict − born|` over the given state/axis pairs.
pub fn ks_reproduction_error(
    model: &KsQubitModel,
    pairs: &[(StateVector, Vector3<f64>)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (state, axis) in pairs {
        let prep = model.preparation(state)?;
        let p_plus: f64 = prep
            .iter()
            .zip(model.grid())
            .filter(|(_, l)| axis.dot(l) >= 0.0)
            .map(|(p, _)| p)
            .sum();
        let povm = qubit_axis_measurement(axis)?;
        let born = born_prob(state, &povm.effects()[0])?;
        worst = worst.max((p_plus - born).abs());
    }
    Ok(worst)
}

/// [`ks_reproduction_error`] over `n_pairs` Haar-random states, each
/// measured along the Bloch axis of a further Haar-random state. Pair `i`
/// uses seeds `seed + 2i` and `seed + 2i + 1`.
pub fn ks_reproduction_check(model: &KsQubitModel, n_pairs: usize, seed: u64) -> Result<f64> {
    let pairs = (0..n_pairs as u64)
        .map(|i| {
            let state = qcore::random_state(2, seed.wrapping_add(2 * i))?;
            let axis = bloch_vector(&qcore::random_state(2, seed.wrapping_add(2 * i + 1))?)?;
            Ok((state, axis))
        })
        .collect::<Result<Vec<_>>>()?;
    ks_reproduction_error(model, &pairs)
}
