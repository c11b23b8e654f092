//! Exact state families, exclusion measurements and resource-scaling
//! formulas for the continuity no-go arguments.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{
    self, tensor_power, unitary_from_correspondence, Operator, Povm, StateVector, C64,
    DENSE_OPERATOR_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Theorem1,
    Theorem2,
    Theorem4,
}

/// Preparations, the measurement that excludes each of them, and the ball
/// that contains them.
#[derive(Debug, Clone, Serialize)]
pub struct NoGoEnsemble {
    pub kind: EnsembleKind,
    pub params: BTreeMap<String, f64>,
    pub states: Vec<StateVector>,
    pub measurement: Povm,
    pub center: StateVector,
    pub delta_star: f64,
    /// Single-copy factors of `states`; these are what sit on the ball
    /// boundary. Identical to `states` unless `copies > 1`.
    #[serde(skip)]
    pub single_copy_states: Vec<StateVector>,
    #[serde(skip)]
    pub copies: usize,
}

impl NoGoEnsemble {
    pub fn outcome_count(&self) -> usize {
        self.measurement.outcome_count()
    }

    /// `Σ_k P(k | M, states[k])`.
    pub fn exclusion_sum(&self) -> Result<f64> {
        self.states
            .iter()
            .zip(self.measurement.effects())
            .map(|(s, e)| qcore::born_prob(s, e))
            .sum()
    }

    /// Largest `| |<s|center>| − (1 − delta_star) |` over the single-copy states.
    pub fn boundary_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in &self.single_copy_states {
            let f = s.fidelity_amplitude(&self.center)?;
            worst = worst.max((f - (1.0 - self.delta_star)).abs());
        }
        Ok(worst)
    }
}

/// Radius `1 − sqrt((d−1)/d)` at which the `d` exclusion states fit in a ball.
pub fn theorem1_delta(d: usize) -> f64 {
    1.0 - ((d as f64 - 1.0) / d as f64).sqrt()
}

/// `(1/sqrt(d−1)) Σ_{j≠k} |j>` for every `k`.
pub fn theorem1_states(d: usize) -> Result<Vec<StateVector>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    let a = 1.0 / ((d - 1) as f64).sqrt();
    (0..d)
        .map(|k| {
            let v: Vec<f64> = (0..d).map(|j| if j == k { 0.0 } else { a }).collect();
            StateVector::from_real(&v)
        })
        .collect()
}

pub fn theorem1_ensemble(d: usize) -> Result<NoGoEnsemble> {
    let states = theorem1_states(d)?;
    Ok(NoGoEnsemble {
        kind: EnsembleKind::Theorem1,
        params: BTreeMap::from([("d".to_string(), d as f64)]),
        single_copy_states: states.clone(),
        states,
        measurement: Povm::computational(d)?,
        center: StateVector::uniform(d)?,
        delta_star: theorem1_delta(d),
        copies: 1,
    })
}

/// Single-copy family whose `n`-fold tensor powers reproduce the Gram matrix
/// of the `d`-dimensional exclusion states.
#[derive(Debug, Clone)]
pub struct Theorem2States {
    pub states: Vec<StateVector>,
    /// Pairwise overlap `[(d−2)/(d−1)]^{1/n}`.
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta_nd: f64,
}

#[derive(Debug, Clone, Copy)]
struct Theorem2Coefficients {
    c: f64,
    alpha: f64,
    beta: f64,
    delta_nd: f64,
}

fn theorem2_coefficients(d: usize, n: usize) -> Result<Theorem2Coefficients> {
    if d < 3 || n < 1 {
        return Err(Error::InvalidArgument(format!(
            "need d >= 3 and n >= 1, got d = {d}, n = {n}"
        )));
    }
    let df = d as f64;
    let c = ((df - 2.0) / (df - 1.0)).powf(1.0 / n as f64);
    let alpha = -(1.0 - c).sqrt();
    let beta = -alpha / df.sqrt() + (alpha * alpha / df + c).sqrt();
    let delta_nd = 1.0 - (1.0 - (df - 1.0) * alpha * alpha / df).sqrt();
    Ok(Theorem2Coefficients {
        c,
        alpha,
        beta,
        delta_nd,
    })
}

/// Ball radius `δ_{n,d}` certified by the `n`-copy construction in dimension `d`.
pub fn theorem2_delta(d: usize, n: usize) -> Result<f64> {
    Ok(theorem2_coefficients(d, n)?.delta_nd)
}

/// `|φ_k> = α|k> + (β/sqrt(d)) Σ_i |i>`.
pub fn theorem2_states(d: usize, n: usize) -> Result<Theorem2States> {
    let Theorem2Coefficients {
        c,
        alpha,
        beta,
        delta_nd,
    } = theorem2_coefficients(d, n)?;
    let shared = beta / (d as f64).sqrt();
    let states = (0..d)
        .map(|k| {
            let v: Vec<f64> = (0..d)
                .map(|i| if i == k { alpha + shared } else { shared })
                .collect();
            StateVector::from_real(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Theorem2States {
        states,
        c,
        alpha,
        beta,
        delta_nd,
    })
}

/// `n`-copy ensemble with a `d`-outcome measurement on `C_d^{⊗n}`.
///
/// An isometry `V` maps `φ_k^{⊗n}` onto the `d`-dimensional exclusion states;
/// effects are `|u_k><u_k| + (1/d)(I − Σ_m |u_m><u_m|)` with `u_k = V†|k>`.
pub fn theorem2_ensemble(d: usize, n: usize) -> Result<NoGoEnsemble> {
    let family = theorem2_states(d, n)?;
    let big = d
        .checked_pow(n as u32)
        .filter(|&dim| dim <= DENSE_OPERATOR_CAP)
        .ok_or(Error::DimensionCap {
            requested: d.saturating_pow(n as u32),
            cap: DENSE_OPERATOR_CAP,
        })?;
    let copies = family
        .states
        .iter()
        .map(|s| tensor_power(s, n))
        .collect::<Result<Vec<_>>>()?;
    let targets = theorem1_states(d)?;
    let iso = unitary_from_correspondence(&copies, &targets)?;

    let pulled: Vec<DVector<C64>> = (0..d)
        .map(|k| {
            let mut e = DVector::zeros(d);
            e[k] = C64::new(1.0, 0.0);
            iso.pull_back(&e)
        })
        .collect::<Result<_>>()?;
    let mut span_projector = DMatrix::<C64>::zeros(big, big);
    for u in &pulled {
        span_projector += u * u.adjoint();
    }
    let complement = (DMatrix::<C64>::identity(big, big) - span_projector) * C64::new(1.0 / d as f64, 0.0);
    let effects = pulled
        .iter()
        .map(|u| Operator::from_matrix(u * u.adjoint() + &complement))
        .collect::<Result<Vec<_>>>()?;

    let params = BTreeMap::from([
        ("d".to_string(), d as f64),
        ("n".to_string(), n as f64),
        ("c".to_string(), family.c),
        ("alpha".to_string(), family.alpha),
        ("beta".to_string(), family.beta),
        ("gamma".to_string(), gamma_coefficient(d)?),
    ]);
    Ok(NoGoEnsemble {
        kind: EnsembleKind::Theorem2,
        params,
        states: copies,
        measurement: Povm::new(effects)?,
        center: StateVector::uniform(d)?,
        delta_star: family.delta_nd,
        single_copy_states: family.states,
        copies: n,
    })
}

/// Large-`n` slope `γ = (d−1)[ln(d−1) − ln(d−2)]/(2d)` of `δ_{n,d} ≈ γ/n`.
pub fn gamma_coefficient(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("need d >= 3, got {d}")));
    }
    let df = d as f64;
    Ok((df - 1.0) * ((df - 1.0).ln() - (df - 2.0).ln()) / (2.0 * df))
}

/// Rotated states `|Φ_k> = Σ_i α_{i−k−1 mod d} |i>` sharing the fidelity `t`
/// with the uniform superposition, plus that center.
#[derive(Debug, Clone)]
pub struct Theorem4States {
    pub states: Vec<StateVector>,
    pub center: StateVector,
    /// `alpha[0] = 0`; the rest solve `Σ α² = 1`, `Σ α / sqrt(d) = t`.
    pub alpha: Vec<f64>,
}

pub fn theorem4_states(d: usize, t: f64) -> Result<Theorem4States> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    let df = d as f64;
    let t_max = ((df - 1.0) / df).sqrt();
    if !(0.0..=t_max + 1e-12).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside [0, {t_max}]"
        )));
    }
    let t = t.min(t_max);
    let r = (1.0 - t * t * df / (df - 1.0)).max(0.0).sqrt();
    if d == 2 && r > 1e-12 {
        // No direction orthogonal to the ones vector in one dimension.
        return Err(Error::InvalidArgument(format!(
            "d = 2 only admits t = {t_max}, got {t}"
        )));
    }
    let base = t * df.sqrt() / (df - 1.0);
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let mut alpha = vec![0.0; d];
    for (j, a) in alpha.iter_mut().enumerate().skip(1) {
        let wj = match j {
            1 => w,
            2 => -w,
            _ => 0.0,
        };
        *a = base + if d > 2 { r * wj } else { 0.0 };
    }
    let states = (0..d)
        .map(|k| {
            let v: Vec<f64> = (0..d).map(|i| alpha[(i + 2 * d - k - 1) % d]).collect();
            StateVector::from_real(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Theorem4States {
        states,
        center: StateVector::uniform(d)?,
        alpha,
    })
}

/// Rotated family with the basis measurement whose outcome `k` is `|k+1 mod d>`.
pub fn theorem4_ensemble(d: usize, t: f64) -> Result<NoGoEnsemble> {
    let fam = theorem4_states(d, t)?;
    let basis = (0..d)
        .map(|k| StateVector::basis(d, (k + 1) % d))
        .collect::<Result<Vec<_>>>()?;
    Ok(NoGoEnsemble {
        kind: EnsembleKind::Theorem4,
        params: BTreeMap::from([("d".to_string(), d as f64), ("t".to_string(), t)]),
        single_copy_states: fam.states.clone(),
        states: fam.states,
        measurement: Povm::projective(&basis)?,
        center: fam.center,
        delta_star: 1.0 - t,
        copies: 1,
    })
}

/// Resources needed to rule out continuity at a given radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub delta_target: f64,
    pub thm1_dim: usize,
    pub thm2_copies_d3: usize,
    pub pbr_copies: usize,
    /// `2^pbr_copies`, saturating at `u128::MAX`.
    pub pbr_state_count: u128,
    pub notes: String,
}

pub fn scaling_report(delta_target: f64) -> Result<ScalingReport> {
    if !(delta_target > 0.0 && delta_target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_target must lie in (0, 1), got {delta_target}"
        )));
    }
    let thm1_dim = (2..)
        .find(|&d| theorem1_delta(d) <= delta_target)
        .expect("theorem1_delta decreases to zero");
    let mut thm2_copies_d3 = 1;
    while theorem2_states(3, thm2_copies_d3)?.delta_nd > delta_target {
        thm2_copies_d3 += 1;
    }
    let pbr_copies =
        (std::f64::consts::SQRT_2 * std::f64::consts::LN_2 / delta_target.sqrt()).ceil() as usize;
    let pbr_state_count = 1u128.checked_shl(pbr_copies as u32).unwrap_or(u128::MAX);
    let mut notes = String::from(
        "thm1_dim and thm2_copies_d3 are exact searches; pbr_copies is asymptotic \
         (ceil(sqrt(2) ln 2 / sqrt(delta)))",
    );
    if pbr_copies >= 128 {
        notes.push_str("; pbr_state_count saturated");
    }
    Ok(ScalingReport {
        delta_target,
        thm1_dim,
        thm2_copies_d3,
        pbr_copies: pbr_copies.max(1),
        pbr_state_count,
        notes,
    })
}
