//! Raw and central polarization moments.
//!
//! Moments are available per manifold ([`Manifold::Single`]) or averaged
//! over excitation manifolds with weights `p_N` ([`Manifold::Averaged`]).
//! In averaged mode raw moments are the weighted sums `sum_N p_N <S^r>_N`,
//! and central moments are taken about the averaged Stokes vector, so they
//! describe the whole state rather than summing per-manifold fluctuations.

mod pack;
mod scan;

use std::fmt;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_state::{ManifoldDensity, PolarizationState};
use crate::linalg::{binomial, c, symmetric3_eigen, trace_product, CMatrix};
use crate::parallel;
use crate::stokes_algebra::{stokes, Direction};

pub use pack::{
    central_to_raw, index_of, multi_indices, pack_len, raw_to_central, HomPoly, SymmetricPack,
};
pub use scan::{max_neighbor_gap, sphere_scan, sphere_scan_tensors, GridSpec, ScanFile, ScanPoint, SphereScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Single(usize),
    Averaged,
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Single(n) => write!(f, "N={n}"),
            Manifold::Averaged => f.write_str("averaged"),
        }
    }
}

impl std::str::FromStr for Manifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("averaged") || t.eq_ignore_ascii_case("avg") {
            return Ok(Manifold::Averaged);
        }
        let digits = t.strip_prefix("N=").unwrap_or(t);
        digits
            .parse()
            .map(Manifold::Single)
            .map_err(|_| Error::Parse(format!("manifold selector '{s}'")))
    }
}

/// The manifold selector a state implies when none is given: its only
/// manifold, or the average for multi-manifold states.
pub fn default_selector(state: &PolarizationState) -> Manifold {
    state.single_manifold().map_or(Manifold::Averaged, Manifold::Single)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTensors {
    pub manifold: Manifold,
    pub r_max: u32,
    /// `raw[r-1]` holds order `r`.
    pub raw: Vec<SymmetricPack>,
    pub central: Vec<SymmetricPack>,
}

impl MomentTensors {
    pub fn zeros(manifold: Manifold, r_max: u32) -> Self {
        let packs: Vec<_> = (1..=r_max).map(SymmetricPack::zeros).collect();
        Self { manifold, r_max, raw: packs.clone(), central: packs }
    }

    /// Builds the central packs from raw ones with zeroth moment `weight`.
    pub fn from_raw(manifold: Manifold, raw: Vec<SymmetricPack>, weight: f64) -> Self {
        let central = raw_to_central(&raw, weight);
        Self { manifold, r_max: raw.len() as u32, raw, central }
    }

    pub fn raw_pack(&self, r: u32) -> Result<&SymmetricPack> {
        self.check_order(r)?;
        Ok(&self.raw[(r - 1) as usize])
    }

    pub fn central_pack(&self, r: u32) -> Result<&SymmetricPack> {
        self.check_order(r)?;
        Ok(&self.central[(r - 1) as usize])
    }

    fn check_order(&self, r: u32) -> Result<()> {
        if r == 0 || r > self.r_max {
            return Err(Error::InvalidOrder(r));
        }
        Ok(())
    }

    pub fn stokes_vector(&self) -> [f64; 3] {
        let v = &self.raw[0].values;
        [v[0], v[1], v[2]]
    }

    pub fn raw_moment(&self, dir: &Direction, r: u32) -> Result<f64> {
        Ok(self.raw_pack(r)?.evaluate(&dir.unit()))
    }

    pub fn central_moment(&self, dir: &Direction, r: u32) -> Result<f64> {
        Ok(self.central_pack(r)?.evaluate(&dir.unit()))
    }

    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        Ok(CovarianceMatrix::from_pack(self.central_pack(2)?))
    }
}

/// Fully symmetrized expectations of products of `ops`, orders `1..=r_max`.
///
/// Every word over `{0,1,2}` of length `r` is enumerated once with shared
/// prefix products; each trace lands in the bin of its letter counts and the
/// bins are divided by their multinomial sizes.
pub fn symmetrized_packs(rho: &CMatrix, ops: &[CMatrix; 3], r_max: u32) -> Vec<SymmetricPack> {
    let mut sums: Vec<SymmetricPack> = (1..=r_max).map(SymmetricPack::zeros).collect();
    if r_max == 0 {
        return sums;
    }
    fn walk(
        rho: &CMatrix,
        ops: &[CMatrix; 3],
        prefix: Option<&CMatrix>,
        counts: [u32; 3],
        r_max: u32,
        sums: &mut [SymmetricPack],
    ) {
        let depth = counts.iter().sum::<u32>() + 1;
        for (j, op) in ops.iter().enumerate() {
            let product = match prefix {
                Some(p) => p * op,
                None => op.clone(),
            };
            let mut next = counts;
            next[j] += 1;
            let i = index_of(depth, next);
            sums[(depth - 1) as usize].values[i] += trace_product(rho, &product).re;
            if depth < r_max {
                walk(rho, ops, Some(&product), next, r_max, sums);
            }
        }
    }
    walk(rho, ops, None, [0, 0, 0], r_max, &mut sums);
    for pack in &mut sums {
        let idx = multi_indices(pack.order);
        for (v, m) in pack.values.iter_mut().zip(idx) {
            *v /= crate::linalg::multinomial3(m[0], m[1], m[2]);
        }
    }
    sums
}

fn manifold_stokes_mean(md: &ManifoldDensity) -> [f64; 3] {
    let s = stokes(md.n);
    let v = s.vector();
    [0, 1, 2].map(|j| trace_product(&md.rho, v[j]).re)
}

/// Raw and central packs of one normalized manifold.
pub fn manifold_tensors(md: &ManifoldDensity, r_max: u32) -> MomentTensors {
    let s = stokes(md.n);
    let ops = [s.s1.clone(), s.s2.clone(), s.s3.clone()];
    let raw = symmetrized_packs(&md.rho, &ops, r_max);
    let mean = manifold_stokes_mean(md);
    let id = CMatrix::identity(md.dim(), md.dim());
    let deltas = [0, 1, 2].map(|j| &ops[j] - &id * c(mean[j]));
    let mut central = symmetrized_packs(&md.rho, &deltas, r_max);
    if let Some(first) = central.first_mut() {
        first.values = vec![0.0; 3];
    }
    MomentTensors { manifold: Manifold::Single(md.n), r_max, raw, central }
}

fn selected(state: &PolarizationState, n: usize) -> Result<Option<&ManifoldDensity>> {
    if n == 0 {
        return Ok(None);
    }
    state.manifold(n).map(|w| Some(&w.density)).ok_or(Error::ManifoldAbsent(n))
}

pub fn moment_tensors(state: &PolarizationState, sel: Manifold, r_max: u32) -> Result<MomentTensors> {
    if r_max == 0 {
        return Err(Error::InvalidOrder(0));
    }
    match sel {
        Manifold::Single(n) => Ok(match selected(state, n)? {
            Some(md) => manifold_tensors(md, r_max),
            None => MomentTensors::zeros(sel, r_max),
        }),
        Manifold::Averaged => {
            let per = parallel::map_slice(state.manifolds(), |w| {
                let ops = stokes(w.density.n);
                let ops = [ops.s1.clone(), ops.s2.clone(), ops.s3.clone()];
                symmetrized_packs(&w.density.rho, &ops, r_max)
            });
            let mut raw: Vec<SymmetricPack> = (1..=r_max).map(SymmetricPack::zeros).collect();
            for (w, packs) in state.manifolds().iter().zip(per) {
                for (acc, p) in raw.iter_mut().zip(packs) {
                    acc.values.iter_mut().zip(p.values).for_each(|(a, v)| *a += w.weight * v);
                }
            }
            Ok(MomentTensors::from_raw(Manifold::Averaged, raw, state.total_weight()))
        }
    }
}

fn check_order(r: u32) -> Result<()> {
    if r == 0 {
        Err(Error::InvalidOrder(0))
    } else {
        Ok(())
    }
}

fn matrix_power(m: &CMatrix, r: u32) -> CMatrix {
    let mut out = m.clone();
    for _ in 1..r {
        out = &out * m;
    }
    out
}

/// `Tr(rho S_n^r)` by direct matrix powers; averaged mode sums `p_N` times
/// the manifold values.
pub fn raw_moment(state: &PolarizationState, sel: Manifold, dir: &Direction, r: u32) -> Result<f64> {
    check_order(r)?;
    let per = |md: &ManifoldDensity| {
        let sn = stokes(md.n).along(&dir.unit());
        trace_product(&md.rho, &matrix_power(&sn, r)).re
    };
    match sel {
        Manifold::Single(n) => Ok(selected(state, n)?.map_or(0.0, per)),
        Manifold::Averaged => Ok(excitation_average(state, per)),
    }
}

/// `Tr(rho (S_n - <S_n>)^r)` by direct matrix powers. In averaged mode the
/// mean is the averaged one and the vacuum contributes `p_0 (-<S_n>)^r`.
pub fn central_moment(state: &PolarizationState, sel: Manifold, dir: &Direction, r: u32) -> Result<f64> {
    check_order(r)?;
    let n = dir.unit();
    let shifted = |md: &ManifoldDensity, mean: f64| {
        let sn = stokes(md.n).along(&n);
        let id = CMatrix::identity(md.dim(), md.dim());
        let delta = sn - id * c(mean);
        trace_product(&md.rho, &matrix_power(&delta, r)).re
    };
    match sel {
        Manifold::Single(k) => Ok(match selected(state, k)? {
            Some(md) => {
                let m = manifold_stokes_mean(md);
                shifted(md, m[0] * n[0] + m[1] * n[1] + m[2] * n[2])
            }
            None => 0.0,
        }),
        Manifold::Averaged => {
            let s = stokes_vector(state, sel)?;
            let total = state.total_weight();
            let mean = (s[0] * n[0] + s[1] * n[1] + s[2] * n[2]) / total;
            let body = excitation_average(state, |md| shifted(md, mean));
            Ok(body + state.vacuum_weight() * (-mean).powi(r as i32))
        }
    }
}

pub fn stokes_vector(state: &PolarizationState, sel: Manifold) -> Result<[f64; 3]> {
    match sel {
        Manifold::Single(n) => Ok(selected(state, n)?.map_or([0.0; 3], manifold_stokes_mean)),
        Manifold::Averaged => {
            let mut acc = [0.0; 3];
            for w in state.manifolds() {
                let m = manifold_stokes_mean(&w.density);
                (0..3).for_each(|j| acc[j] += w.weight * m[j]);
            }
            Ok(acc)
        }
    }
}

/// `sum_{N>=1} p_N q(rho_N)`.
pub fn excitation_average<F>(state: &PolarizationState, q: F) -> f64
where
    F: Fn(&ManifoldDensity) -> f64,
{
    state.manifolds().iter().map(|w| w.weight * q(&w.density)).sum()
}

/// Cumulant of the distribution of `S_n` of order `r`, from the raw moments
/// by the standard moment-to-cumulant recursion.
pub fn cumulant(state: &PolarizationState, sel: Manifold, dir: &Direction, r: u32) -> Result<f64> {
    check_order(r)?;
    let weight = match sel {
        Manifold::Single(_) => 1.0,
        Manifold::Averaged => state.total_weight(),
    };
    let moments = (1..=r)
        .map(|k| raw_moment(state, sel, dir, k).map(|m| m / weight))
        .collect::<Result<Vec<_>>>()?;
    let mut kappa: Vec<f64> = Vec::with_capacity(r as usize);
    for n in 1..=r as usize {
        let mut k = moments[n - 1];
        for j in 1..n {
            k -= binomial((n - 1) as u32, (j - 1) as u32) * kappa[j - 1] * moments[n - j - 1];
        }
        kappa.push(k);
    }
    Ok(kappa[r as usize - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub gamma: [[f64; 3]; 3],
    /// Descending.
    pub eigenvalues: [f64; 3],
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`; first nonzero component positive.
    pub eigenvectors: [[f64; 3]; 3],
    /// Some eigenvalues coincide, so the matching eigenvectors are not unique.
    pub degenerate: bool,
}

pub const DEGENERACY_TOL: f64 = 1e-9;

impl CovarianceMatrix {
    pub fn from_gamma(gamma: [[f64; 3]; 3]) -> Self {
        let m = Matrix3::from_fn(|i, j| 0.5 * (gamma[i][j] + gamma[j][i]));
        let (eigenvalues, eigenvectors) = symmetric3_eigen(&m);
        let scale = eigenvalues.iter().fold(1.0f64, |a, l| a.max(l.abs()));
        let degenerate = eigenvalues.windows(2).any(|w| (w[0] - w[1]).abs() < DEGENERACY_TOL * scale);
        let gamma = [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]));
        Self { gamma, eigenvalues, eigenvectors, degenerate }
    }

    pub fn from_pack(pack: &SymmetricPack) -> Self {
        assert_eq!(pack.order, 2);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut idx = [0u32; 3];
                idx[i] += 1;
                idx[j] += 1;
                g[i][j] = pack.get(idx[0], idx[1], idx[2]);
            }
        }
        Self::from_gamma(g)
    }

    pub fn variance_along(&self, n: &[f64; 3]) -> f64 {
        (0..3).map(|i| (0..3).map(|j| n[i] * self.gamma[i][j] * n[j]).sum::<f64>()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.gamma[0][0] + self.gamma[1][1] + self.gamma[2][2]
    }

    /// Eigenvalues that are not degenerate with any other, with their vectors.
    pub fn unique_axes(&self) -> Vec<(f64, [f64; 3])> {
        let scale = self.eigenvalues.iter().fold(1.0f64, |a, l| a.max(l.abs()));
        (0..3)
            .filter(|&k| {
                (0..3).all(|o| o == k || (self.eigenvalues[k] - self.eigenvalues[o]).abs() >= DEGENERACY_TOL * scale)
            })
            .map(|k| (self.eigenvalues[k], self.eigenvectors[k]))
            .collect()
    }
}

pub fn covariance(state: &PolarizationState, sel: Manifold) -> Result<CovarianceMatrix> {
    moment_tensors(state, sel, 2)?.covariance()
}

pub const UNCERTAINTY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub n: usize,
    /// `2 <S0>`
    pub lower: f64,
    /// `sum_j <D_j^2>`
    pub total_variance: f64,
    /// `<S0>(<S0> + 2)`
    pub upper: f64,
    pub lower_saturated: bool,
    pub upper_saturated: bool,
}

pub fn uncertainty_check(state: &PolarizationState, n: usize) -> Result<UncertaintyReport> {
    if n == 0 {
        return Err(Error::UnsupportedManifold("uncertainty relation needs N >= 1".into()));
    }
    let cov = covariance(state, Manifold::Single(n))?;
    let nf = n as f64;
    let report = UncertaintyReport {
        n,
        lower: 2.0 * nf,
        total_variance: cov.trace(),
        upper: nf * (nf + 2.0),
        lower_saturated: (cov.trace() - 2.0 * nf).abs() <= UNCERTAINTY_TOL * nf.max(1.0),
        upper_saturated: (cov.trace() - nf * (nf + 2.0)).abs() <= UNCERTAINTY_TOL * nf.max(1.0),
    };
    let tol = UNCERTAINTY_TOL * report.upper;
    if report.total_variance < report.lower - tol || report.total_variance > report.upper + tol {
        return Err(Error::UncertaintyViolation(format!(
            "N={n}: {} <= {} <= {} fails",
            report.lower, report.total_variance, report.upper
        )));
    }
    Ok(report)
}
