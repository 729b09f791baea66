//! Three-photon density matrices with isotropic first and second moments.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_state::{ManifoldDensity, PolarizationState};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnpolFamilyParams {
    pub rho11: f64,
    pub rho12: Complex64,
    pub rho13: Complex64,
    pub rho14: Complex64,
}

impl UnpolFamilyParams {
    pub fn diagonal(rho11: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { rho11, rho12: z, rho13: z, rho14: z }
    }

    /// Diagonal in row order `|3,0>, |2,1>, |1,2>, |0,3>`.
    pub fn diagonal_entries(&self) -> [f64; 4] {
        let a = self.rho11;
        [a, 1.0 - 3.0 * a, 3.0 * a - 0.5, 0.5 - a]
    }

    /// The matrix in row order `|3,0>, |2,1>, |1,2>, |0,3>`.
    pub fn matrix_rows(&self) -> [[Complex64; 4]; 4] {
        let [d0, d1, d2, d3] = self.diagonal_entries().map(|d| Complex64::new(d, 0.0));
        let (x, y, z) = (self.rho12, self.rho13, self.rho14);
        let s3 = 3f64.sqrt();
        [
            [d0, x, y, z],
            [x.conj(), d1, -s3 * x, -y],
            [y.conj(), -s3 * x.conj(), d2, x],
            [z.conj(), -y.conj(), x.conj(), d3],
        ]
    }
}

/// The family member for `params`, validated as a density matrix.
///
/// Rows of the printed matrix run from `|3,0>` to `|0,3>`; they are stored
/// in the crate's ascending-`m` order.
pub fn unpol_family(params: &UnpolFamilyParams) -> Result<PolarizationState> {
    if !(1.0 / 6.0 - 1e-15..=1.0 / 3.0 + 1e-15).contains(&params.rho11) {
        return Err(Error::InvalidSpec(format!("rho11 = {} outside [1/6, 1/3]", params.rho11)));
    }
    let rows = params.matrix_rows();
    let rho = CMatrix::from_fn(4, 4, |i, j| rows[3 - i][3 - j]);
    PolarizationState::single(ManifoldDensity::new(3, rho)?)
}

fn random_coherence(rng: &mut ChaCha8Rng, bound: f64) -> Complex64 {
    let magnitude = bound * rng.random::<f64>();
    Complex64::from_polar(magnitude, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Random valid family members: `rho11` uniform on `[1/6, 1/3]`, each
/// coherence drawn uniformly below the pairwise bound it must satisfy, with
/// a uniform phase, rejecting matrices that are not positive semidefinite.
pub fn sample_unpol_family(rng: &mut ChaCha8Rng, count: usize) -> Vec<(UnpolFamilyParams, PolarizationState)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(1.0 / 6.0..=1.0 / 3.0);
        let d = UnpolFamilyParams::diagonal(a).diagonal_entries();
        let b12 = (d[0] * d[1]).sqrt().min((d[1] * d[2] / 3.0).sqrt()).min((d[2] * d[3]).sqrt());
        let b13 = (d[0] * d[2]).sqrt().min((d[1] * d[3]).sqrt());
        let b14 = (d[0] * d[3]).sqrt();
        let params = UnpolFamilyParams {
            rho11: a,
            rho12: random_coherence(rng, b12),
            rho13: random_coherence(rng, b13),
            rho14: random_coherence(rng, b14),
        };
        if let Ok(state) = unpol_family(&params) {
            out.push((params, state));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityObstruction {
    /// Residual of the third purity condition once the first two force
    /// `rho11 = 1/3`, `rho12 = 0`.
    pub algebraic_residual: f64,
    /// Smallest total squared residual of the three conditions over the
    /// `rho11` grid, minimized over `|rho12|^2` at each grid point.
    pub min_grid_residual: f64,
    pub grid_points: usize,
    pub samples: usize,
    pub max_sampled_purity: f64,
    /// No pure state in the family.
    pub infeasible: bool,
}

/// Checks that no pure state has isotropic first and second moments at
/// `N = 3`: the three purity conditions on the family admit no common
/// solution, and sampled members all have `Tr(rho^2) < 1`.
pub fn purity_obstruction_check(resolution: usize, samples: usize, rng: &mut ChaCha8Rng) -> PurityObstruction {
    let conditions = |a: f64| {
        [a * (1.0 - 3.0 * a), (1.0 - 3.0 * a) * (3.0 * a - 0.5) / 3.0, (3.0 * a - 0.5) * (0.5 - a)]
    };
    let [_, _, third] = conditions(1.0 / 3.0);
    let grid_points = resolution.max(2);
    let min_grid_residual = (0..grid_points)
        .map(|i| {
            let a = 1.0 / 6.0 + (1.0 / 6.0) * i as f64 / (grid_points - 1) as f64;
            let [c1, c2, c3] = conditions(a);
            // Conditions read |x|^2 = c1, 3|x|^2 = 3 c2, |x|^2 = c3.
            let x = ((c1 + 9.0 * c2 + c3) / 11.0).max(0.0);
            (x - c1).powi(2) + (3.0 * x - 3.0 * c2).powi(2) + (x - c3).powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    let max_sampled_purity = sample_unpol_family(rng, samples)
        .iter()
        .map(|(_, s)| s.manifolds()[0].density.purity())
        .fold(0.0, f64::max);
    PurityObstruction {
        algebraic_residual: third,
        min_grid_residual,
        grid_points,
        samples,
        max_sampled_purity,
        infeasible: third.abs() > 1e-12 && min_grid_residual > 1e-12 && max_sampled_purity < 1.0 - 1e-9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_engine::{covariance, stokes_vector, Manifold};
    use rand::SeedableRng;

    fn check_isotropic(s: &PolarizationState) {
        let v = stokes_vector(s, Manifold::Single(3)).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-10), "{v:?}");
        let g = covariance(s, Manifold::Single(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 5.0 } else { 0.0 };
                assert!((g.gamma[i][j] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_members() {
        let s = unpol_family(&UnpolFamilyParams::diagonal(0.25)).unwrap();
        assert!((s.manifolds()[0].density.purity() - 0.25).abs() < 1e-15);
        check_isotropic(&s);
        let s = unpol_family(&UnpolFamilyParams::diagonal(1.0 / 6.0)).unwrap();
        let d: Vec<f64> = (0..4).map(|m| s.manifolds()[0].density.rho[(3 - m, 3 - m)].re).collect();
        for (a, b) in d.iter().zip([1.0 / 6.0, 0.5, 0.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        check_isotropic(&s);
    }

    #[test]
    fn psd_failure_and_range() {
        let p = UnpolFamilyParams { rho12: Complex64::new(0.01, 0.0), ..UnpolFamilyParams::diagonal(1.0 / 3.0) };
        assert!(matches!(unpol_family(&p), Err(Error::NotPositive { .. })));
        assert!(matches!(unpol_family(&UnpolFamilyParams::diagonal(0.4)), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn random_members_are_unpolarized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (_, s) in sample_unpol_family(&mut rng, 200) {
            check_isotropic(&s);
        }
    }

    #[test]
    fn no_pure_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = purity_obstruction_check(1001, 500, &mut rng);
        assert!((r.algebraic_residual - 1.0 / 12.0).abs() < 1e-15);
        assert!(r.infeasible && r.max_sampled_purity < 1.0);
    }
}
