//! Bloch-sphere helpers shared by the qubit model and the orbit numerics.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::qcore::{StateVector, C64};

/// Near-uniform points on the unit sphere along a golden-angle spiral.
pub fn fibonacci_lattice(n: usize) -> Vec<Vector3<f64>> {
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Bloch vector of a qubit state `a|0> + b|1>`.
pub fn bloch_vector(state: &StateVector) -> Result<Vector3<f64>> {
    if state.dim() != 2 {
        return Err(Error::DimensionMismatch(state.dim(), 2));
    }
    let a = state.amplitudes()[0];
    let b = state.amplitudes()[1];
    let ab = a.conj() * b;
    Ok(Vector3::new(
        2.0 * ab.re,
        2.0 * ab.im,
        a.norm_sqr() - b.norm_sqr(),
    ))
}

/// Qubit state with the given Bloch direction (normalized internally).
pub fn state_from_bloch(v: &Vector3<f64>) -> Result<StateVector> {
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    let u = v / n;
    let theta = u.z.clamp(-1.0, 1.0).acos();
    let phi = u.y.atan2(u.x);
    StateVector::normalized(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// Qubit state at fidelity `|<a|b>| = fidelity` from `a`, reached by tilting
/// its Bloch vector by `2 acos(fidelity)` about a fixed perpendicular axis.
pub fn tilted_state(a: &StateVector, fidelity: f64) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!(
            "fidelity must lie in [0, 1], got {fidelity}"
        )));
    }
    let b = bloch_vector(a)?;
    let helper = if b.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let axis = b.cross(&helper).normalize();
    state_from_bloch(&rotate(&b, &axis, 2.0 * fidelity.acos()))
}

/// Angle between two unit vectors, robust near 0 and π.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Rotation of `v` about the unit `axis` by `angle` (Rodrigues).
pub fn rotate(v: &Vector3<f64>, axis: &Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Uniform-grid bucket index for angular neighbourhood queries on the sphere.
#[derive(Debug, Clone)]
pub struct SphereIndex {
    cell: f64,
    chord: f64,
    buckets: HashMap<(i64, i64, i64), Vec<usize>>,
    points: Vec<Vector3<f64>>,
}

impl SphereIndex {
    pub fn new(angular_tol: f64) -> Self {
        let chord = 2.0 * (angular_tol.clamp(0.0, std::f64::consts::PI) / 2.0).sin();
        Self {
            cell: chord.max(1e-6),
            chord,
            buckets: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: &Vector3<f64>) -> (i64, i64, i64) {
        (
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        )
    }

    pub fn insert(&mut self, p: Vector3<f64>) {
        let key = self.key(&p);
        self.buckets.entry(key).or_default().push(self.points.len());
        self.points.push(p);
    }

    /// Whether some stored point lies within the angular tolerance of `p`.
    pub fn has_neighbor(&self, p: &Vector3<f64>) -> bool {
        let (i, j, k) = self.key(p);
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(ids) = self.buckets.get(&(i + di, j + dj, k + dk)) {
                        if ids
                            .iter()
                            .any(|&id| (self.points[id] - p).norm() <= self.chord)
                        {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Vector3<f64>> {
        self.points
    }
}
