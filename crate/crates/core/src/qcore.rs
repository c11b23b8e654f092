//! Complex linear algebra substrate: pure states, dense operators, POVMs,
//! tensor powers, Gram matrices and isometries built from matched state
//! families.
//!
//! Everything here is immutable after construction. Randomized helpers take
//! an explicit seed and never touch a shared generator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on state norms.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on operator identities (Hermiticity, completeness, PSD).
pub const OPERATOR_TOL: f64 = 1e-10;
/// Tolerance on residuals of constructed objects.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Largest number of amplitudes a tensor power may produce.
pub const TENSOR_CAP: usize = 1_000_000;
/// Largest dimension for which dense effect operators are materialized.
pub const DENSE_OPERATOR_CAP: usize = 1024;
/// Largest total number of matrix entries over all effects of a dense POVM
/// (2^24 entries, about 270 MB); allows basis measurements up to `d = 256`.
pub const DENSE_POVM_ENTRY_CAP: usize = 1 << 24;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Wire form shared by states and operators: `{"dim", "re", "im"}`, with
/// matrices flattened row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexArray {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexArray {
    fn values(&self, expected: usize) -> Result<Vec<C64>> {
        if self.re.len() != expected || self.im.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} real and imaginary parts, got {} and {}",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect())
    }
}

/// A normalized pure state in `C^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexArray", into = "ComplexArray")]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Computational basis vector `|k>`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[k] = ONE;
        Self::new(amps)
    }

    /// Uniform superposition `(1/sqrt(dim)) sum_j |j>`.
    pub fn uniform(dim: usize) -> Result<Self> {
        let a = 1.0 / (dim as f64).sqrt();
        Self::normalized(vec![C64::new(a, 0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }

    /// Builds a state from a column, renormalizing away round-off.
    pub(crate) fn from_dvector(v: &DVector<C64>) -> Result<Self> {
        Self::normalized(v.iter().copied().collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector> {
        let dim = self.dim() * other.dim();
        if dim > TENSOR_CAP {
            return Err(Error::DimensionCap {
                requested: dim,
                cap: TENSOR_CAP,
            });
        }
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Self::normalized(amps)
    }

    /// `|<self|other>|`.
    pub fn fidelity_amplitude(&self, other: &StateVector) -> Result<f64> {
        Ok(inner(self, other)?.norm())
    }

    /// Projector `|self><self|`.
    pub fn projector(&self) -> Operator {
        let v = self.to_dvector();
        Operator {
            entries: &v * v.adjoint(),
        }
    }
}

impl TryFrom<ComplexArray> for StateVector {
    type Error = Error;

    fn try_from(raw: ComplexArray) -> Result<Self> {
        let amps = raw.values(raw.dim)?;
        Self::new(amps)
    }
}

impl From<StateVector> for ComplexArray {
    fn from(s: StateVector) -> Self {
        ComplexArray {
            dim: s.dim(),
            re: s.amps.iter().map(|a| a.re).collect(),
            im: s.amps.iter().map(|a| a.im).collect(),
        }
    }
}

/// Dense square operator on `C^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexArray", into = "ComplexArray")]
pub struct Operator {
    entries: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch(entries.nrows(), entries.ncols()));
        }
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.map(|z| z * factor),
        }
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.entries - self.entries.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()).map(|z| z * 0.5);
        hermitian_eigen(&herm)
            .0
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `<state|self|state>` as a complex number.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch(state.dim(), self.dim()));
        }
        let v = state.to_dvector();
        Ok(v.dotc(&(&self.entries * &v)))
    }
}

impl TryFrom<ComplexArray> for Operator {
    type Error = Error;

    fn try_from(raw: ComplexArray) -> Result<Self> {
        let values = raw.values(raw.dim * raw.dim)?;
        Ok(Self {
            entries: DMatrix::from_row_slice(raw.dim, raw.dim, &values),
        })
    }
}

impl From<Operator> for ComplexArray {
    fn from(op: Operator) -> Self {
        let dim = op.dim();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = op.entries[(i, j)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        ComplexArray { dim, re, im }
    }
}

/// A measurement given by its effects, one per outcome.
///
/// Construction only checks shapes; use [`validate_povm`] for the physical
/// constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Operator>", into = "Vec<Operator>")]
pub struct Povm {
    effects: Vec<Operator>,
}

impl Povm {
    pub fn new(effects: Vec<Operator>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        let dim = first.dim();
        if let Some(bad) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        Ok(Self { effects })
    }

    /// Rank-one projectors onto the given vectors, in order.
    pub fn projective(basis: &[StateVector]) -> Result<Self> {
        let dim = basis.first().map_or(0, StateVector::dim);
        let entries = basis.len().saturating_mul(dim.saturating_mul(dim));
        if entries > DENSE_POVM_ENTRY_CAP {
            return Err(Error::DimensionCap {
                requested: entries,
                cap: DENSE_POVM_ENTRY_CAP,
            });
        }
        Self::new(basis.iter().map(StateVector::projector).collect())
    }

    /// Measurement in the computational basis of `C^dim`.
    pub fn computational(dim: usize) -> Result<Self> {
        let entries = dim.saturating_mul(dim.saturating_mul(dim));
        if entries > DENSE_POVM_ENTRY_CAP {
            return Err(Error::DimensionCap {
                requested: entries,
                cap: DENSE_POVM_ENTRY_CAP,
            });
        }
        let basis = (0..dim)
            .map(|k| StateVector::basis(dim, k))
            .collect::<Result<Vec<_>>>()?;
        Self::projective(&basis)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcome_count(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    /// Born probabilities of every outcome.
    pub fn probabilities(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.effects.iter().map(|e| born_prob(state, e)).collect()
    }
}

impl TryFrom<Vec<Operator>> for Povm {
    type Error = Error;

    fn try_from(effects: Vec<Operator>) -> Result<Self> {
        Self::new(effects)
    }
}

impl From<Povm> for Vec<Operator> {
    fn from(p: Povm) -> Self {
        p.effects
    }
}

/// Outcome of [`validate_povm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmReport {
    pub min_eigenvalue: f64,
    pub max_hermiticity_defect: f64,
    pub completeness_deviation: f64,
    pub passed: bool,
}

pub fn validate_povm(p: &Povm) -> PovmReport {
    let dim = p.dim();
    let mut sum = DMatrix::<C64>::zeros(dim, dim);
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_hermiticity_defect: f64 = 0.0;
    for e in p.effects() {
        sum += e.matrix();
        min_eigenvalue = min_eigenvalue.min(e.min_eigenvalue());
        max_hermiticity_defect = max_hermiticity_defect.max(e.hermiticity_defect());
    }
    let completeness_deviation = (sum - DMatrix::<C64>::identity(dim, dim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    PovmReport {
        min_eigenvalue,
        max_hermiticity_defect,
        completeness_deviation,
        passed: min_eigenvalue >= -OPERATOR_TOL
            && max_hermiticity_defect <= OPERATOR_TOL
            && completeness_deviation <= OPERATOR_TOL,
    }
}

/// Set of states `phi` with `|<phi|center>| >= 1 - radius`.
///
/// Note this is a fidelity-amplitude neighbourhood, not a metric ball.
#[derive(Debug, Clone)]
pub struct Ball {
    center: StateVector,
    radius: f64,
}

impl Ball {
    pub fn new(center: StateVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must lie in (0, 1], got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &StateVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, phi: &StateVector) -> bool {
        match phi.fidelity_amplitude(&self.center) {
            Ok(f) => f >= 1.0 - self.radius - NORM_TOL,
            Err(_) => false,
        }
    }
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `<state|effect|state>`, clamped onto [0, 1] when within tolerance.
pub fn born_prob(state: &StateVector, effect: &Operator) -> Result<f64> {
    let value = effect.expectation(state)?.re;
    if !(-OPERATOR_TOL..=1.0 + OPERATOR_TOL).contains(&value) {
        return Err(Error::ProbabilityOutOfRange(value));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `state^{⊗n}` in `C^{dim^n}`.
pub fn tensor_power(state: &StateVector, n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs n >= 1".into()));
    }
    let requested = state
        .dim()
        .checked_pow(n as u32)
        .filter(|&d| d <= TENSOR_CAP)
        .ok_or(Error::DimensionCap {
            requested: state.dim().saturating_pow(n as u32),
            cap: TENSOR_CAP,
        })?;
    let mut out = state.clone();
    for _ in 1..n {
        out = out.kron(state)?;
    }
    debug_assert_eq!(out.dim(), requested);
    Ok(out)
}

/// `G[k][l] = <states[k]|states[l]>`.
pub fn gram(states: &[StateVector]) -> Result<DMatrix<C64>> {
    let m = states.len();
    let mut g = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in k..m {
            let z = inner(&states[k], &states[l])?;
            g[(k, l)] = z;
            g[(l, k)] = z.conj();
        }
    }
    Ok(g)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Columns of `states` as a `dim × m` matrix.
fn column_matrix(states: &[StateVector]) -> DMatrix<C64> {
    let cols: Vec<DVector<C64>> = states.iter().map(StateVector::to_dvector).collect();
    DMatrix::from_columns(&cols)
}

/// Linear map `V` with `V src[k] = dst[k]`, isometric on `span(src)` and
/// zero on its orthocomplement.
#[derive(Debug, Clone)]
pub struct Isometry {
    matrix: DMatrix<C64>,
    src_frame: DMatrix<C64>,
}

impl Isometry {
    /// `dst_dim × src_dim` matrix of the map.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Orthonormal frame (as columns) of the source span.
    pub fn source_frame(&self) -> &DMatrix<C64> {
        &self.src_frame
    }

    pub fn apply(&self, state: &StateVector) -> Result<DVector<C64>> {
        if state.dim() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch(state.dim(), self.matrix.ncols()));
        }
        Ok(&self.matrix * state.to_dvector())
    }

    /// `V† v` for a vector of the target space.
    pub fn pull_back(&self, target: &DVector<C64>) -> Result<DVector<C64>> {
        if target.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(target.len(), self.matrix.nrows()));
        }
        Ok(self.matrix.adjoint() * target)
    }

    /// `max_k ‖V src[k] − dst[k]‖`.
    pub fn residual(&self, src: &[StateVector], dst: &[StateVector]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (s, d) in src.iter().zip(dst) {
            let diff = self.apply(s)? - d.to_dvector();
            worst = worst.max(diff.norm());
        }
        Ok(worst)
    }

    /// Largest entry of `F†V†VF − I` for the source frame `F`.
    pub fn isometry_defect(&self) -> f64 {
        let vf = &self.matrix * &self.src_frame;
        let m = vf.ncols();
        (vf.adjoint() * vf - DMatrix::<C64>::identity(m, m))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `G^{-1/2}` for a positive definite Hermitian `G`.
fn inverse_sqrt(g: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (values, vectors) = hermitian_eigen(g);
    let smallest = values.first().copied().unwrap_or(0.0);
    if smallest <= OPERATOR_TOL {
        return Err(Error::RankDeficient(smallest));
    }
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::new(1.0 / l.sqrt(), 0.0)),
    ));
    Ok(&vectors * diag * vectors.adjoint())
}

/// Builds the isometry carrying each `src[k]` onto `dst[k]`.
///
/// Both families are symmetrically orthogonalized with the same coefficient
/// matrix `G^{-1/2}`, so equal Grams give frames in exact correspondence.
pub fn unitary_from_correspondence(src: &[StateVector], dst: &[StateVector]) -> Result<Isometry> {
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch(src.len(), dst.len()));
    }
    if src.is_empty() {
        return Err(Error::InvalidArgument("empty state family".into()));
    }
    let g_src = gram(src)?;
    let g_dst = gram(dst)?;
    let mismatch = (&g_src - &g_dst)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if mismatch > OPERATOR_TOL {
        return Err(Error::GramMismatch(mismatch));
    }
    let coeffs = inverse_sqrt(&g_src)?;
    let src_frame = column_matrix(src) * &coeffs;
    let dst_frame = column_matrix(dst) * &coeffs;
    Ok(Isometry {
        matrix: &dst_frame * src_frame.adjoint(),
        src_frame,
    })
}

pub(crate) fn gaussian_vector(dim: usize, rng: &mut impl Rng) -> DVector<C64> {
    DVector::from_iterator(
        dim,
        (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    )
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// diagonal phases of `R` divided out.
pub(crate) fn haar_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let cols: Vec<DVector<C64>> = (0..dim).map(|_| gaussian_vector(dim, rng)).collect();
    let qr = DMatrix::from_columns(&cols).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Draws a state from the ball.
///
/// A Haar-random direction orthogonal to the center is drawn, a fidelity `f`
/// uniform in `[1 − δ, 1]`, and the result is `f·center + sqrt(1 − f²)·direction`.
pub fn sample_state_in_ball(ball: &Ball, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_in_ball_with(ball, &mut rng)
}

/// Haar-random pure state drawn from `seed`.
pub fn random_state(dim: usize, seed: u64) -> Result<StateVector> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StateVector::normalized(gaussian_vector(dim, &mut rng).iter().copied().collect())
}

pub(crate) fn sample_in_ball_with(ball: &Ball, rng: &mut impl Rng) -> Result<StateVector> {
    let center = ball.center.to_dvector();
    let dim = center.len();
    let direction = loop {
        let g = gaussian_vector(dim, rng);
        let v = &g - &center * center.dotc(&g);
        let norm = v.norm();
        if norm > 1e-8 {
            break v / C64::new(norm, 0.0);
        }
    };
    let f: f64 = rng.gen_range((1.0 - ball.radius)..=1.0);
    let phi = center * C64::new(f, 0.0) + direction * C64::new((1.0 - f * f).max(0.0).sqrt(), 0.0);
    StateVector::from_dvector(&phi)
}

/// Unitary carrying the uniform superposition onto `center` up to a global
/// phase (a Householder reflection).
pub(crate) fn uniform_to_center(center: &StateVector) -> DMatrix<C64> {
    let dim = center.dim();
    let u = DVector::from_element(dim, C64::new(1.0 / (dim as f64).sqrt(), 0.0));
    let c = center.to_dvector();
    let overlap = u.dotc(&c);
    let phase = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        ONE
    };
    let c_aligned = c * phase;
    let w = &u - &c_aligned;
    let norm = w.norm();
    let eye = DMatrix::<C64>::identity(dim, dim);
    if norm < 1e-14 {
        return eye;
    }
    let w = w / C64::new(norm, 0.0);
    let reflection = eye - (&w * w.adjoint()) * C64::new(2.0, 0.0);
    reflection * phase.conj()
}

/// Multiplies a state by a matrix and renormalizes.
pub(crate) fn transform(m: &DMatrix<C64>, s: &StateVector) -> Result<StateVector> {
    StateVector::from_dvector(&(m * s.to_dvector()))
}
