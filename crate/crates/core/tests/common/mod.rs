#![allow(dead_code)]

use polarmoments::fock_state::{build, ExplicitManifold, StateSpec};
use polarmoments::{Direction, PolarizationState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

/// Random unnormalized block `G G^+` of rank `rank` in manifold `n`.
pub fn random_block(rng: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> ExplicitManifold {
    let d = n + 1;
    let g: Vec<Vec<(f64, f64)>> = (0..d).map(|_| (0..rank).map(|_| (normal(rng), normal(rng))).collect()).collect();
    let mut matrix = vec![vec![[0.0; 2]; d]; d];
    let mut trace = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (mut re, mut im) = (0.0, 0.0);
            for (&(a, b), &(c, e)) in g[i].iter().zip(&g[j]) {
                re += a * c + b * e;
                im += b * c - a * e;
            }
            matrix[i][j] = [re, im];
        }
        trace += matrix[i][i][0];
    }
    for row in &mut matrix {
        for z in row.iter_mut() {
            z[0] *= scale / trace;
            z[1] *= scale / trace;
        }
    }
    ExplicitManifold { n, matrix }
}

/// Random mixed state on manifold `n`.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> PolarizationState {
    let rank = rng.random_range(1..=n + 1);
    build(&StateSpec::Explicit { manifolds: vec![random_block(rng, n, rank, 1.0)], vacuum: 0.0 }).unwrap()
}

/// Random state spread over several manifolds up to `n_max`, with vacuum.
pub fn random_multi_state(rng: &mut ChaCha8Rng, n_max: usize) -> PolarizationState {
    let mut weights: Vec<f64> = (0..=n_max).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let manifolds = (1..=n_max)
        .map(|n| {
            let rank = rng.random_range(1..=n + 1);
            random_block(rng, n, rank, weights[n])
        })
        .collect();
    build(&StateSpec::Explicit { manifolds, vacuum: weights[0] }).unwrap()
}

pub fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Direction::new(z.acos(), phi)
}
