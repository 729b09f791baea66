//! Stokes operators on an excitation manifold, directions on the Poincaré
//! sphere and the SU(2) rotations that realize measurements along them.
//!
//! On manifold `N` the basis is `|m, N-m>`, `m = 0..=N`. `S3` is diagonal
//! with entries `2m - N`; `S1` and `S2` are built from
//! `<m+1| a_H^dagger a_V |m> = sqrt((m+1)(N-m))`, giving
//! `<m+1|S1|m> = sqrt((m+1)(N-m))` and `<m+1|S2|m> = -i sqrt((m+1)(N-m))`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock_state::{ManifoldDensity, PolarizationState};
use crate::linalg::{c, max_abs_entry, unitary_exp, CMatrix, I};

#[derive(Debug, Clone)]
pub struct StokesMatrices {
    pub n: usize,
    pub s0: CMatrix,
    pub s1: CMatrix,
    pub s2: CMatrix,
    pub s3: CMatrix,
}

impl StokesMatrices {
    pub fn new(n: usize) -> Self {
        let d = n + 1;
        let mut s1 = CMatrix::zeros(d, d);
        let mut s2 = CMatrix::zeros(d, d);
        let mut s3 = CMatrix::zeros(d, d);
        for m in 0..d {
            s3[(m, m)] = c(2.0 * m as f64 - n as f64);
        }
        for m in 0..n {
            let amp = (((m + 1) * (n - m)) as f64).sqrt();
            s1[(m + 1, m)] = c(amp);
            s1[(m, m + 1)] = c(amp);
            s2[(m + 1, m)] = -I * amp;
            s2[(m, m + 1)] = I * amp;
        }
        let s0 = CMatrix::identity(d, d).scale(n as f64);
        Self { n, s0, s1, s2, s3 }
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `S1, S2, S3` as an array, index `j` holding `S_{j+1}`.
    pub fn vector(&self) -> [&CMatrix; 3] {
        [&self.s1, &self.s2, &self.s3]
    }

    /// `n . S` for a unit vector `n`.
    pub fn along(&self, n: &[f64; 3]) -> CMatrix {
        self.s1.scale(n[0]) + self.s2.scale(n[1]) + self.s3.scale(n[2])
    }

    /// Residuals of the su(2) relations: the three cyclic commutators,
    /// `[S0, S_j]` and the Casimir `S1^2 + S2^2 + S3^2 = S0(S0 + 2)`.
    pub fn algebra_residuals(&self) -> AlgebraResiduals {
        let ops = self.vector();
        let mut commutator: f64 = 0.0;
        for j in 0..3 {
            let k = (j + 1) % 3;
            let l = (j + 2) % 3;
            let lhs = ops[j] * ops[k] - ops[k] * ops[j];
            let rhs = ops[l] * (I * 2.0);
            commutator = commutator.max(max_abs_entry(&(lhs - rhs)));
        }
        let mut s0_commutator: f64 = 0.0;
        for op in ops {
            s0_commutator = s0_commutator.max(max_abs_entry(&(&self.s0 * op - op * &self.s0)));
        }
        let casimir = &self.s1 * &self.s1 + &self.s2 * &self.s2 + &self.s3 * &self.s3;
        let expected = CMatrix::identity(self.dim(), self.dim()).scale((self.n * (self.n + 2)) as f64);
        AlgebraResiduals {
            commutator,
            s0_commutator,
            casimir: max_abs_entry(&(casimir - expected)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraResiduals {
    pub commutator: f64,
    pub s0_commutator: f64,
    pub casimir: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.commutator.max(self.s0_commutator).max(self.casimir)
    }
}

pub fn build_stokes(n: usize) -> StokesMatrices {
    StokesMatrices::new(n)
}

/// Shared per-manifold operator table.
pub fn stokes(n: usize) -> Arc<StokesMatrices> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<StokesMatrices>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(found) = cache.read().expect("stokes cache poisoned").get(&n) {
        return Arc::clone(found);
    }
    let built = Arc::new(StokesMatrices::new(n));
    let mut guard = cache.write().expect("stokes cache poisoned");
    Arc::clone(guard.entry(n).or_insert(built))
}

/// A point on the Poincaré sphere; `theta` is measured from the `S3` axis and
/// `phi` is the azimuth in the `S1`-`S2` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const AXIS1: Direction = Direction { theta: PI / 2.0, phi: 0.0 };
    pub const AXIS2: Direction = Direction { theta: PI / 2.0, phi: PI / 2.0 };
    pub const AXIS3: Direction = Direction { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Direction of a nonzero vector.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / norm).clamp(-1.0, 1.0);
        let theta = z.acos();
        let phi = if v[0] == 0.0 && v[1] == 0.0 { 0.0 } else { v[1].atan2(v[0]) };
        Self { theta, phi }
    }

    pub fn unit(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn vector3(&self) -> Vector3<f64> {
        Vector3::from(self.unit())
    }

    /// Great-circle angle to another direction.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit();
        let b = other.unit();
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        sin.atan2(dot)
    }
}

pub fn stokes_in_direction(ops: &StokesMatrices, dir: &Direction) -> CMatrix {
    ops.along(&dir.unit())
}

/// Unitary with `U S3 U^dagger = n . S` on one manifold.
#[derive(Debug, Clone)]
pub struct RotationOperator {
    pub n: usize,
    pub u: CMatrix,
    pub target: Direction,
}

impl RotationOperator {
    /// `max |U S3 U^dagger - n.S|`.
    pub fn defining_residual(&self) -> f64 {
        let ops = stokes(self.n);
        let lhs = &self.u * &ops.s3 * self.u.adjoint();
        max_abs_entry(&(lhs - ops.along(&self.target.unit())))
    }

    pub fn unitarity_residual(&self) -> f64 {
        let d = self.n + 1;
        max_abs_entry(&(&self.u * self.u.adjoint() - CMatrix::identity(d, d)))
    }
}

/// `U = exp(-i phi S3 / 2) exp(-i theta S2 / 2)`.
pub fn rotation_to_direction(n: usize, dir: &Direction) -> RotationOperator {
    let ops = stokes(n);
    let u = unitary_exp(&ops.s3, dir.phi / 2.0) * unitary_exp(&ops.s2, dir.theta / 2.0);
    RotationOperator { n, u, target: *dir }
}

/// `exp(-i angle (a . S) / 2)`: maps Stokes vectors by the proper rotation of
/// `angle` radians about the unit axis `a` when applied as `U rho U^dagger`.
pub fn rotation_about_axis(n: usize, axis: [f64; 3], angle: f64) -> CMatrix {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let a = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    unitary_exp(&stokes(n).along(&a), angle / 2.0)
}

/// Measurement-frame rotation `rho -> U^dagger rho U` on every manifold, so
/// that `S3` statistics of the result are `S_n` statistics of the input.
pub fn rotate_state(state: &PolarizationState, dir: &Direction) -> PolarizationState {
    state.map_manifolds(|md| {
        let u = rotation_to_direction(md.n, dir).u;
        u.adjoint() * &md.rho * &u
    })
}

/// Active rotation `rho -> U rho U^dagger` of every manifold by `angle`
/// about `axis`; Stokes vectors rotate by the same proper rotation.
pub fn rotate_state_about(state: &PolarizationState, axis: [f64; 3], angle: f64) -> PolarizationState {
    state.map_manifolds(|md| {
        let u = rotation_about_axis(md.n, axis, angle);
        &u * &md.rho * u.adjoint()
    })
}

/// Checks `S3^2` against its normal-ordered form
/// `a_H^+ a_H^+ a_H a_H - 2 a_H^+ a_V^+ a_H a_V + a_V^+ a_V^+ a_V a_V + a_H^+ a_H + a_V^+ a_V`
/// with both sides built from single-mode ladder matrices in the two-mode
/// Fock space (per-mode cutoff `N`) and restricted to manifold `N`.
pub fn normal_order_check(n: usize) -> f64 {
    let (ah, av) = ladder_pair(n);
    let ah_d = ah.adjoint();
    let av_d = av.adjoint();
    let nh = &ah_d * &ah;
    let nv = &av_d * &av;
    let s3 = &nh - &nv;
    let lhs = &s3 * &s3;
    let rhs = &ah_d * &ah_d * &ah * &ah - (&ah_d * &av_d * &ah * &av).scale(2.0) + &av_d * &av_d * &av * &av + &nh + &nv;
    let idx = manifold_indices(n);
    let restrict = |m: &CMatrix| CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
    let mut residual = max_abs_entry(&(restrict(&lhs) - restrict(&rhs)));
    // the ladder-built S3^2 must also agree with the manifold table
    let table = stokes(n);
    residual = residual.max(max_abs_entry(&(restrict(&lhs) - &table.s3 * &table.s3)));
    residual
}

/// `S1` built as `a_H a_V^+ + a_H^+ a_V` from ladder matrices, restricted to
/// manifold `N`; an independent route to the operator table.
pub fn ladder_s1(n: usize) -> CMatrix {
    let (ah, av) = ladder_pair(n);
    let s1 = &ah * av.adjoint() + ah.adjoint() * &av;
    let idx = manifold_indices(n);
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| s1[(idx[i], idx[j])])
}

/// Two-mode ladder operators with per-mode cutoff `n`; the two-mode index is
/// `nh * (n + 1) + nv`.
fn ladder_pair(n: usize) -> (CMatrix, CMatrix) {
    let d = n + 1;
    let mut a = CMatrix::zeros(d, d);
    for k in 1..d {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    let id = CMatrix::identity(d, d);
    (a.kronecker(&id), id.kronecker(&a))
}

/// Two-mode indices of `|m, N-m>` for `m = 0..=N`.
fn manifold_indices(n: usize) -> Vec<usize> {
    (0..=n).map(|m| m * (n + 1) + (n - m)).collect()
}

/// Expectation `Tr(rho_N O)` of a manifold operator.
pub fn expectation(md: &ManifoldDensity, op: &CMatrix) -> Complex64 {
    crate::linalg::trace_product(&md.rho, op)
}
