#![allow(dead_code)]

use std::collections::BTreeMap;

use psi_gauge::ontic::DiscreteOnticModel;
use psi_gauge::qcore::{StateVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random stochastic vector; each entry is zeroed with probability `sparsity`
/// (at least one entry survives).
pub fn random_distribution(rng: &mut ChaCha8Rng, len: usize, sparsity: f64) -> Vec<f64> {
    let keep = rng.gen_range(0..len);
    let mut v: Vec<f64> = (0..len)
        .map(|i| {
            if i != keep && rng.gen_bool(sparsity) {
                0.0
            } else {
                rng.gen::<f64>() + 1e-3
            }
        })
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Labels `q0..` for preparations and `m0..` for measurements. Every
/// measurement has one outcome per preparation.
pub fn random_model(rng: &mut ChaCha8Rng) -> DiscreteOnticModel {
    let lambdas = rng.gen_range(1..=12);
    let preps = rng.gen_range(2..=5);
    let sparsity = rng.gen_range(0.0..0.6);
    let preparations: BTreeMap<String, Vec<f64>> = (0..preps)
        .map(|k| (format!("q{k}"), random_distribution(rng, lambdas, sparsity)))
        .collect();
    let measurements = rng.gen_range(1..=3);
    let responses = (0..measurements)
        .map(|m| {
                        let table = (0..lambdas)
                .map(|_| random_distribution(rng, preps, 0.5))
                .collect();
            (format!("m{m}"), table)
        })
        .collect();
    DiscreteOnticModel::new(lambdas, preparations, responses).unwrap()
}

pub fn preparation_labels(model: &DiscreteOnticModel) -> Vec<String> {
    model.preparation_labels().map(str::to_string).collect()
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    let amps = (0..dim)
        .map(|_| {
            C64::new(
                StandardNormal.sample(&mut *rng),
                StandardNormal.sample(&mut *rng),
            )
        })
        .collect();
    StateVector::normalized(amps).unwrap()
}
