//! Sampling probe of the lower bound `3N` on the total variance of states
//! with isotropic second-order fluctuations.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::family::sample_unpol_family;
use crate::error::{Error, Result};
use crate::fock_state::{build, PolarizationState, StateSpec};
use crate::linalg::{c, symmetric3_eigen, trace_product, CMatrix};
use crate::moment_engine::{covariance, Manifold};
use crate::parallel;
use crate::stokes_algebra::stokes;

/// Eigenvalue spread of the covariance below which a search result counts
/// as isotropic.
pub const ISOTROPY_TOL: f64 = 1e-9;
const MARGIN: f64 = 1e-6;
const DESCENT_STEPS: usize = 40;
const PROJECTION_ITERS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub n: usize,
    /// Conjectured minimum `3N` of the total variance.
    pub bound: f64,
    pub candidate_sum: f64,
    pub candidate_anisotropy: f64,
    pub samples: usize,
    /// Search results whose covariance spread fell below [`ISOTROPY_TOL`].
    pub isotropic_found: usize,
    pub min_sum_found: Option<f64>,
    /// Smallest total variance over sampled second-order-unpolarized
    /// family members (`N = 3` only).
    pub family_min_sum: Option<f64>,
    /// An isotropic state below `bound - 1e-6` was found.
    pub counterexample: bool,
}

/// `p |N,0><N,0| + (1-p) |0,N><0,N|` with `p = (1 + sqrt((N-1)/N)) / 2`.
pub fn conjecture_candidate(n: usize) -> Result<PolarizationState> {
    if n < 1 {
        return Err(Error::UnsupportedManifold("candidate needs N >= 1".into()));
    }
    let p = 0.5 * (1.0 + ((n as f64 - 1.0) / n as f64).sqrt());
    build(&StateSpec::basis_mixture(n, &[(n, p), (0, 1.0 - p)]))
}

struct Evaluator {
    dim: usize,
    ops: [CMatrix; 3],
    products: [[CMatrix; 3]; 3],
}

impl Evaluator {
    fn new(n: usize) -> Self {
        let s = stokes(n);
        let ops = [s.s1.clone(), s.s2.clone(), s.s3.clone()];
        let products = [0, 1, 2].map(|i| [0, 1, 2].map(|j| (&ops[i] * &ops[j] + &ops[j] * &ops[i]) * c(0.5)));
        Self { dim: n + 1, ops, products }
    }

    fn matrix(&self, x: &DVector<f64>) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |i, j| Complex64::new(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]))
    }

    /// Covariance of `rho = A A^dagger / Tr`.
    fn gamma(&self, x: &DVector<f64>) -> Matrix3<f64> {
        let a = self.matrix(x);
        let rho = &a * a.adjoint();
        let rho = &rho / c(rho.trace().re);
        let s = [0, 1, 2].map(|j| trace_product(&rho, &self.ops[j]).re);
        Matrix3::from_fn(|i, j| trace_product(&rho, &self.products[i][j]).re - s[i] * s[j])
    }

    /// The five conditions for an isotropic covariance.
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = self.gamma(x);
        DVector::from_vec(vec![g[(0, 0)] - g[(1, 1)], g[(1, 1)] - g[(2, 2)], g[(0, 1)], g[(0, 2)], g[(1, 2)]])
    }

    fn spread(&self, x: &DVector<f64>) -> (f64, f64) {
        let g = self.gamma(x);
        let (ev, _) = symmetric3_eigen(&g);
        (g.trace(), ev[0] - ev[2])
    }

    /// Gauss-Newton minimum-norm steps onto the isotropic set.
    fn project(&self, mut x: DVector<f64>) -> Option<DVector<f64>> {
        let mut r = self.residuals(&x);
        for _ in 0..PROJECTION_ITERS {
            if r.norm() < 1e-13 {
                break;
            }
            let mut jac = DMatrix::zeros(5, x.len());
            for k in 0..x.len() {
                let h = 1e-7 * x[k].abs().max(1e-2);
                let mut xp = x.clone();
                xp[k] += h;
                jac.set_column(k, &((self.residuals(&xp) - &r) / h));
            }
            let jjt = &jac * jac.transpose();
            let step = jac.transpose() * jjt.lu().solve(&r)?;
            let mut t = 1.0;
            loop {
                let trial = &x - &step * t;
                let rt = self.residuals(&trial);
                if rt.norm() < r.norm() || t < 1e-4 {
                    x = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
            }
        }
        (r.norm() < 1e-10).then_some(x)
    }
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * Distribution::<f64>::sample(&StandardNormal, rng))
}

/// A random state projected onto the isotropic set, then a (1+1) evolution
/// strategy on the total variance with every trial projected back.
fn local_search(eval: &Evaluator, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let len = 2 * eval.dim * eval.dim;
    let mut x = eval.project(random_vector(rng, len, 1.0))?;
    let (mut sum, _) = eval.spread(&x);
    let mut sigma = 0.1;
    for _ in 0..DESCENT_STEPS {
        let trial = &x + random_vector(rng, len, sigma * x.norm() / (len as f64).sqrt());
        match eval.project(trial) {
            Some(t) if eval.spread(&t).0 < sum => {
                sum = eval.spread(&t).0;
                x = t;
                sigma = (sigma * 1.5).min(1.0);
            }
            _ => sigma = (sigma * 0.85).max(1e-6),
        }
    }
    Some(eval.spread(&x))
}

/// Searches from `samples` random starting states for second-order-isotropic
/// states with total variance below `3N`. Sampling evidence, not a proof.
pub fn min_isotropy_conjecture_scan(n: usize, samples: usize, seed: u64) -> Result<ConjectureReport> {
    if n < 2 {
        return Err(Error::UnsupportedManifold("conjecture scan needs N >= 2".into()));
    }
    let candidate = conjecture_candidate(n)?;
    let g = covariance(&candidate, Manifold::Single(n))?;
    let eval = Evaluator::new(n);
    let results = parallel::map_indexed(samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        local_search(&eval, &mut rng)
    });
    let iso: Vec<f64> = results.iter().flatten().filter(|r| r.1 < ISOTROPY_TOL).map(|r| r.0).collect();
    let min_sum_found = iso.iter().copied().reduce(f64::min);
    let family_min_sum = (n == 3).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        sample_unpol_family(&mut rng, samples.max(1))
            .iter()
            .map(|(_, s)| covariance(s, Manifold::Single(3)).map(|g| g.trace()).unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min)
    });
    let bound = 3.0 * n as f64;
    Ok(ConjectureReport {
        n,
        bound,
        candidate_sum: g.trace(),
        candidate_anisotropy: g.eigenvalues[0] - g.eigenvalues[2],
        samples,
        isotropic_found: iso.len(),
        min_sum_found,
        family_min_sum,
        counterexample: min_sum_found.is_some_and(|m| m < bound - MARGIN)
            || family_min_sum.is_some_and(|m| m < bound - MARGIN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_attains_bound() {
        for n in 1..=6 {
            let g = covariance(&conjecture_candidate(n).unwrap(), Manifold::Single(n)).unwrap();
            assert!((g.trace() - 3.0 * n as f64).abs() < 1e-10);
            assert!(g.eigenvalues[0] - g.eigenvalues[2] < 1e-10);
        }
    }

    #[test]
    fn small_scan() {
        let r = min_isotropy_conjecture_scan(3, 64, 4).unwrap();
        assert!((r.candidate_sum - 9.0).abs() < 1e-10);
        assert!(!r.counterexample, "{r:?}");
        assert!((r.family_min_sum.unwrap() - 15.0).abs() < 1e-9);
        eprintln!("{r:?}");
    }
}
