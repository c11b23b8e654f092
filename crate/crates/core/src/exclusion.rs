//! Search for projective exclusion measurements.
//!
//! Minimizes `f(U) = Σ_k |<u_k|ψ_k>|²` over unitaries `U` (columns `u_k`),
//! moving along `U ← U·exp(−t·grad)` with `grad` the skew-Hermitian
//! Riemannian gradient and `t` chosen by Armijo backtracking. Basis vectors
//! beyond the first `d` are outcomes nobody is assigned to.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{born_prob, hermitian_eigen, haar_unitary, validate_povm, Povm, StateVector, C64};

pub const ARMIJO_CONSTANT: f64 = 1e-4;
pub const INITIAL_STEP: f64 = 1.0;
pub const GRADIENT_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-20;
const REORTHONORMALIZE_EVERY: usize = 100;

/// `Σ_k P(k | M, states[k])`.
pub fn exclusion_value(states: &[StateVector], povm: &Povm) -> Result<f64> {
    let report = validate_povm(povm);
    if !report.passed {
        return Err(Error::InvalidPovm(format!(
            "min eigenvalue {:.3e}, completeness deviation {:.3e}",
            report.min_eigenvalue, report.completeness_deviation
        )));
    }
    if povm.outcome_count() < states.len() {
        return Err(Error::InvalidArgument(format!(
            "{} outcomes cannot exclude {} states",
            povm.outcome_count(),
            states.len()
        )));
    }
    states
        .iter()
        .zip(povm.effects())
        .map(|(s, e)| born_prob(s, e))
        .sum()
}

#[derive(Debug, Clone)]
pub struct ExclusionProblem {
    states: Vec<StateVector>,
}

impl ExclusionProblem {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("no states given".into()))?;
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        if states.len() > dim {
            return Err(Error::InvalidArgument(format!(
                "{} states do not fit {dim} basis outcomes",
                states.len()
            )));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExclusionResult {
    pub best_value: f64,
    /// Orthonormal basis; vector `k < d` is the outcome assigned to state `k`.
    pub basis: Vec<StateVector>,
    pub restarts_used: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Restart index that produced the reported optimum.
    pub best_restart: usize,
    pub seed: u64,
}

impl ExclusionResult {
    pub fn measurement(&self) -> Result<Povm> {
        Povm::projective(&self.basis)
    }
}

struct Descent {
    unitary: DMatrix<C64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
}

fn objective(u: &DMatrix<C64>, psi: &[DVector<C64>]) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(k, p)| u.column(k).dotc(p).norm_sqr())
        .sum()
}

/// Skew-Hermitian gradient of the objective at `U` for moves `U·exp(A)`.
fn riemannian_gradient(u: &DMatrix<C64>, psi: &[DVector<C64>]) -> DMatrix<C64> {
    let dim = u.nrows();
    let mut x = DMatrix::<C64>::zeros(dim, dim);
    for (k, p) in psi.iter().enumerate() {
        let w = u.adjoint() * p;
        let wk = w[k].conj();
        for j in 0..dim {
            x[(k, j)] = (wk * w[j]).conj() * -2.0;
        }
    }
    (&x - x.adjoint()) * C64::new(0.5, 0.0)
}

/// `exp(S)` for skew-Hermitian `S`, through the eigenvectors of `iS`.
fn skew_exp(s: &DMatrix<C64>) -> DMatrix<C64> {
    let h = s * C64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let (values, vectors) = hermitian_eigen(&h);
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::from_polar(1.0, -l)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// Gram–Schmidt with positive diagonal, pulling `u` back onto the unitaries.
fn reorthonormalize(u: &DMatrix<C64>) -> DMatrix<C64> {
    let qr = u.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let mut col = q.column_mut(j);
            col *= d / d.norm();
        }
    }
    q
}

fn descend(start: DMatrix<C64>, psi: &[DVector<C64>], max_iters: usize) -> Descent {
    let mut u = start;
    let mut value = objective(&u, psi);
    let mut grad = riemannian_gradient(&u, psi);
    let mut gnorm = grad.norm();
    let mut iterations = 0;
    while iterations < max_iters && gnorm > GRADIENT_TOL {
        let mut t = INITIAL_STEP;
        let accepted = loop {
            let candidate = &u * skew_exp(&(&grad * C64::new(-t, 0.0)));
            let cand_value = objective(&candidate, psi);
            if cand_value <= value - ARMIJO_CONSTANT * t * gnorm * gnorm {
                break Some((candidate, cand_value));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((next, next_value)) = accepted else {
            break;
        };
        iterations += 1;
        u = if iterations % REORTHONORMALIZE_EVERY == 0 {
            reorthonormalize(&next)
        } else {
            next
        };
        value = if iterations % REORTHONORMALIZE_EVERY == 0 {
            objective(&u, psi)
        } else {
            next_value
        };
        grad = riemannian_gradient(&u, psi);
        gnorm = grad.norm();
    }
    let unitary = reorthonormalize(&u);
    let grad = riemannian_gradient(&unitary, psi);
    Descent {
        value: objective(&unitary, psi),
        gradient_norm: grad.norm(),
        unitary,
        iterations,
    }
}

/// Best local optimum over `restarts` Haar-random starting bases.
pub fn optimize(problem: &ExclusionProblem, restarts: usize, max_iters: usize, seed: u64) -> Result<ExclusionResult> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let dim = problem.dim();
    let psi: Vec<DVector<C64>> = problem
        .states
        .iter()
        .map(|s| DVector::from_column_slice(s.amplitudes()))
        .collect();
    let runs: Vec<Descent> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            descend(haar_unitary(dim, &mut rng), &psi, max_iters)
        })
        .collect();
    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one restart");

    let basis = (0..dim)
        .map(|j| StateVector::normalized(best.unitary.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let best_value = problem
        .states
        .iter()
        .zip(&basis)
        .map(|(s, b)| born_prob(s, &b.projector()))
        .sum::<Result<f64>>()?;
    Ok(ExclusionResult {
        best_value,
        basis,
        restarts_used: restarts,
        converged: best.gradient_norm <= GRADIENT_TOL,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        best_restart,
        seed,
    })
}
