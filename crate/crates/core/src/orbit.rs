//! Stabilizer orbits on the Bloch sphere.
//!
//! Starting from two points, each generation adds the images of every point
//! under rotations about every other point's axis (the unitaries fixing that
//! state). Circles are sampled at finitely many angles and deduplicated at an
//! angular tolerance, so coverage figures are lower bounds.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qcore::StateVector;
use crate::sphere::{fibonacci_lattice, rotate, state_from_bloch, SphereIndex};

pub const DEFAULT_DEDUP_TOLERANCE: f64 = 0.02;
pub const DEFAULT_ROTATIONS_PER_PAIR: usize = 24;
pub const DEFAULT_POINT_CAP: usize = 100_000;
/// Ordered pairs expanded per step before switching to seeded subsampling.
pub const DEFAULT_PAIR_BUDGET: usize = 20_000;
pub const DEFAULT_STEP_CAP: usize = 30;
pub const DEFAULT_COVERAGE_GRID: usize = 4_000;

fn serialize_points<S: Serializer>(points: &[Vector3<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitCloud {
    #[serde(serialize_with = "serialize_points")]
    pub points: Vec<Vector3<f64>>,
    pub generation: usize,
    pub dedup_tolerance: f64,
}

impl OrbitCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Two Bloch points at angle `theta`: `+z` and `z` rotated by `theta` about `y`.
pub fn initial_cloud(theta: f64) -> Result<OrbitCloud> {
    if !(theta > 0.0 && theta <= std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in (0, pi], got {theta}"
        )));
    }
    let a = Vector3::z();
    let b = rotate(&a, &Vector3::y(), theta);
    Ok(OrbitCloud {
        points: vec![a, b],
        generation: 0,
        dedup_tolerance: DEFAULT_DEDUP_TOLERANCE,
    })
}

/// Qubit states of the initial pair; their overlap is `cos(theta / 2)`.
pub fn initial_states(theta: f64) -> Result<[StateVector; 2]> {
    let cloud = initial_cloud(theta)?;
    Ok([
        state_from_bloch(&cloud.points[0])?,
        state_from_bloch(&cloud.points[1])?,
    ])
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub rotations_per_pair: usize,
    pub point_cap: usize,
    pub pair_budget: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            rotations_per_pair: DEFAULT_ROTATIONS_PER_PAIR,
            point_cap: DEFAULT_POINT_CAP,
            pair_budget: DEFAULT_PAIR_BUDGET,
        }
    }
}

pub fn orbit_step(cloud: &OrbitCloud, rotations_per_pair: usize, seed: u64) -> Result<OrbitCloud> {
    orbit_step_with(
        cloud,
        StepOptions {
            rotations_per_pair,
            ..StepOptions::default()
        },
        seed,
    )
}

pub fn orbit_step_with(cloud: &OrbitCloud, opts: StepOptions, seed: u64) -> Result<OrbitCloud> {
    if opts.rotations_per_pair < 4 {
        return Err(Error::InvalidArgument(format!(
            "rotations_per_pair must be at least 4, got {}",
            opts.rotations_per_pair
        )));
    }
    let n = cloud.points.len();
    let total_pairs = n * n.saturating_sub(1);
    let pairs: Vec<(usize, usize)> = if total_pairs <= opts.pair_budget {
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..opts.pair_budget)
            .map(|_| {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..n)) % n;
                (i, j)
            })
            .collect()
    };

    let step = 2.0 * std::f64::consts::PI / opts.rotations_per_pair as f64;
    let circles: Vec<Vec<Vector3<f64>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let axis = cloud.points[i];
            let b = cloud.points[j];
            (1..opts.rotations_per_pair)
                .map(|r| rotate(&b, &axis, step * r as f64).normalize())
                .collect()
        })
        .collect();

    let mut index = SphereIndex::new(cloud.dedup_tolerance);
    for p in &cloud.points {
        index.insert(*p);
    }
    for p in circles.into_iter().flatten() {
        if !index.has_neighbor(&p) {
            index.insert(p);
        }
    }
    let mut points = index.into_points();
    if points.len() > opts.point_cap {
        let len = points.len();
        points = (0..opts.point_cap)
            .map(|i| points[i * len / opts.point_cap])
            .collect();
    }
    Ok(OrbitCloud {
        points,
        generation: cloud.generation + 1,
        dedup_tolerance: cloud.dedup_tolerance,
    })
}

/// Fraction of a Fibonacci reference grid within `angular_tol` of the cloud.
pub fn coverage(cloud: &OrbitCloud, grid_size: usize, angular_tol: f64) -> Result<f64> {
    if grid_size < 100 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 100, got {grid_size}"
        )));
    }
    let mut index = SphereIndex::new(angular_tol);
    for p in &cloud.points {
        index.insert(*p);
    }
    let grid = fibonacci_lattice(grid_size);
    let hit = grid.par_iter().filter(|g| index.has_neighbor(g)).count();
    Ok(hit as f64 / grid_size as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub k: usize,
    pub cloud_size: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub theta: f64,
    pub target: f64,
    pub tol: f64,
    /// First generation reaching the target, `None` if the step cap was hit.
    pub steps: Option<usize>,
    pub trajectory: Vec<TrajectoryRow>,
    #[serde(skip)]
    pub final_cloud: OrbitCloud,
}

/// Grows the orbit from the pair at angle `theta` until coverage reaches
/// `target`, recording the coverage trajectory.
pub fn steps_to_cover(theta: f64, target: f64, tol: f64, seed: u64) -> Result<CoverReport> {
    run_orbit(theta, Some(target), DEFAULT_STEP_CAP, tol, DEFAULT_COVERAGE_GRID, seed)
}

/// Runs at most `max_steps` generations, stopping early once `target`
/// (when given) is reached.
pub fn run_orbit(
    theta: f64,
    target: Option<f64>,
    max_steps: usize,
    tol: f64,
    grid_size: usize,
    seed: u64,
) -> Result<CoverReport> {
    if let Some(t) = target {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target must lie in (0, 1), got {t}"
            )));
        }
    }
    let mut cloud = initial_cloud(theta)?;
    let mut trajectory = vec![TrajectoryRow {
        k: 0,
        cloud_size: cloud.len(),
        coverage: coverage(&cloud, grid_size, tol)?,
    }];
    let mut steps = None;
    for k in 1..=max_steps {
        cloud = orbit_step(&cloud, DEFAULT_ROTATIONS_PER_PAIR, seed.wrapping_add(k as u64))?;
        let cov = coverage(&cloud, grid_size, tol)?;
        trajectory.push(TrajectoryRow {
            k,
            cloud_size: cloud.len(),
            coverage: cov,
        });
        if target.is_some_and(|t| cov >= t) {
            steps = Some(k);
            break;
        }
    }
    Ok(CoverReport {
        theta,
        target: target.unwrap_or(f64::NAN),
        tol,
        steps,
        trajectory,
        final_cloud: cloud,
    })
}
