//! Reconstruction of moment packs from directional Stokes statistics.
//!
//! Along a direction `n` the order-`r` raw moment is linear in the order-`r`
//! pack, so each order is an independent linear system. Orders are solved
//! from 1 upward; central packs follow from the raw ones.

mod directions;
mod misalignment;
mod observations;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::multinomial3;
use crate::moment_engine::{multi_indices, pack_len, raw_to_central, Manifold, MomentTensors, SymmetricPack};
use crate::stokes_algebra::Direction;

pub use directions::{
    canonical_directions, protocol_directions, DirectionSet, DirectionSetLabel, ThirdOrderVariant,
};
pub use misalignment::{misalignment_fit, rotation_angle_axis, MisalignmentFit};
pub use observations::{MomentObservations, Observation};

pub const CONDITION_WARN: f64 = 1e6;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub order: u32,
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub condition: f64,
}

pub fn design_matrix(dirs: &[Direction], order: u32) -> DesignMatrix {
    let idx = multi_indices(order);
    let matrix = DMatrix::from_fn(dirs.len(), idx.len(), |i, j| {
        let n = dirs[i].unit();
        let [a, b, c] = idx[j];
        multinomial3(a, b, c) * n[0].powi(a as i32) * n[1].powi(b as i32) * n[2].powi(c as i32)
    });
    let (rank, condition) = rank_and_condition(&matrix);
    DesignMatrix { order, matrix, rank, condition }
}

fn rank_and_condition(m: &DMatrix<f64>) -> (usize, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, f64::INFINITY);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let rank = sv.iter().filter(|s| **s > RANK_TOL * max).count();
    let cond = if rank < m.ncols() { f64::INFINITY } else { max / sv.min() };
    (rank, cond)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: u32,
    pub observations: usize,
    pub unknowns: usize,
    pub rank: usize,
    pub condition: f64,
    /// Euclidean norm of the unweighted residual `A x - b`.
    pub residual: f64,
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub tensors: MomentTensors,
    /// Delta-method standard errors of the raw pack entries, per order, when
    /// every observation of that order carried one.
    pub raw_stderr: Vec<Option<Vec<f64>>>,
    /// Same for the central packs; present when all orders have errors.
    pub central_stderr: Option<Vec<Vec<f64>>>,
    pub fits: Vec<OrderFit>,
    pub residual_norm: f64,
    pub condition_number: f64,
    pub parameter_counts: Option<ParameterCounts>,
    pub warnings: Vec<String>,
}

struct Solved {
    x: DVector<f64>,
    cov: Option<DMatrix<f64>>,
    fit: OrderFit,
}

fn solve_order(obs: &MomentObservations, r: u32) -> Result<Solved> {
    let rows = obs.of_order(r);
    let dirs: Vec<Direction> = rows.iter().map(|o| o.direction).collect();
    let design = design_matrix(&dirs, r);
    let needed = pack_len(r);
    if design.rank < needed {
        return Err(Error::RankDeficient { order: r, rank: design.rank, needed });
    }
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|o| o.value));
    let weighted = rows.iter().all(|o| o.stderr.is_some_and(|s| s > 0.0));
    let sw = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|o| if weighted { 1.0 / o.stderr.unwrap() } else { 1.0 }),
    );
    let aw = DMatrix::from_fn(rows.len(), needed, |i, j| design.matrix[(i, j)] * sw[i]);
    let bw = b.component_mul(&sw);
    let qr = aw.qr();
    let rmat = qr.r();
    let qtb = qr.q().transpose() * bw;
    let x = rmat
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient { order: r, rank: design.rank, needed })?;
    let cov = if weighted {
        rmat.clone().try_inverse().map(|ri| &ri * ri.transpose())
    } else {
        None
    };
    let residual = (&design.matrix * &x - &b).norm();
    let fit = OrderFit {
        order: r,
        observations: rows.len(),
        unknowns: needed,
        rank: design.rank,
        condition: design.condition,
        residual,
        weighted,
    };
    Ok(Solved { x, cov, fit })
}

/// Reconstructs raw and central packs of orders `1..=r_max`.
///
/// Each order uses only observations of that order: an exact solve when
/// the system is square, least squares otherwise, weighted by inverse
/// variances when every observation of the order has a standard error.
pub fn reconstruct(obs: &MomentObservations, r_max: u32) -> Result<ReconstructionResult> {
    if r_max == 0 {
        return Err(Error::InvalidOrder(0));
    }
    obs.check()?;
    if obs.max_order() < r_max {
        return Err(Error::InconsistentObservations(format!(
            "order {r_max} requested but observations stop at order {}",
            obs.max_order()
        )));
    }
    let mut raw = vec![];
    let mut raw_cov = vec![];
    let mut fits = vec![];
    let mut warnings = vec![];
    for r in 1..=r_max {
        let s = solve_order(obs, r)?;
        if s.fit.condition > CONDITION_WARN {
            warnings.push(format!("order {r}: design condition number {:.3e} exceeds {CONDITION_WARN:e}", s.fit.condition));
        }
        raw.push(SymmetricPack { order: r, values: s.x.iter().copied().collect() });
        raw_cov.push(s.cov);
        fits.push(s.fit);
    }
    let tensors = MomentTensors::from_raw(obs.manifold, raw, obs.weight);
    let raw_stderr: Vec<Option<Vec<f64>>> = raw_cov
        .iter()
        .map(|c| c.as_ref().map(|c| c.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()))
        .collect();
    let central_stderr = if raw_cov.iter().all(Option::is_some) {
        let covs: Vec<&DMatrix<f64>> = raw_cov.iter().map(|c| c.as_ref().unwrap()).collect();
        Some(central_stderr(&tensors.raw, &covs, obs.weight))
    } else {
        None
    };
    let residual_norm = fits.iter().map(|f| f.residual * f.residual).sum::<f64>().sqrt();
    let condition_number = fits.iter().map(|f| f.condition).fold(0.0, f64::max);
    let parameter_counts = match obs.manifold {
        Manifold::Single(n) if n >= 1 => Some(parameter_counts(n)?),
        _ => None,
    };
    Ok(ReconstructionResult {
        tensors,
        raw_stderr,
        central_stderr,
        fits,
        residual_norm,
        condition_number,
        parameter_counts,
        warnings,
    })
}

/// First-order propagation of the raw-pack covariances (orders taken as
/// independent) through the raw-to-central map, by finite differences.
fn central_stderr(raw: &[SymmetricPack], covs: &[&DMatrix<f64>], weight: f64) -> Vec<Vec<f64>> {
    let flat: Vec<f64> = raw.iter().flat_map(|p| p.values.iter().copied()).collect();
    let unflatten = |v: &[f64]| {
        let mut at = 0;
        raw.iter()
            .map(|p| {
                let len = p.values.len();
                let pack = SymmetricPack { order: p.order, values: v[at..at + len].to_vec() };
                at += len;
                pack
            })
            .collect::<Vec<_>>()
    };
    let base: Vec<f64> = raw_to_central(raw, weight).iter().flat_map(|p| p.values.clone()).collect();
    let mut jac = DMatrix::zeros(base.len(), flat.len());
    for k in 0..flat.len() {
        let h = 1e-6 * flat[k].abs().max(1.0);
        let mut plus = flat.clone();
        let mut minus = flat.clone();
        plus[k] += h;
        minus[k] -= h;
        let fp: Vec<f64> = raw_to_central(&unflatten(&plus), weight).iter().flat_map(|p| p.values.clone()).collect();
        let fm: Vec<f64> = raw_to_central(&unflatten(&minus), weight).iter().flat_map(|p| p.values.clone()).collect();
        for i in 0..base.len() {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let mut sigma = DMatrix::zeros(flat.len(), flat.len());
    let mut at = 0;
    for c in covs {
        sigma.view_mut((at, at), (c.nrows(), c.ncols())).copy_from(c);
        at += c.nrows();
    }
    let prop = &jac * sigma * jac.transpose();
    let mut out = vec![];
    let mut at = 0;
    for p in raw {
        out.push((0..p.values.len()).map(|i| prop[(at + i, at + i)].max(0.0).sqrt()).collect());
        at += p.values.len();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCounts {
    pub n: usize,
    /// Independent sum terms at each order `r = 1..=N`: `(r+1)(r+2)/2`.
    pub per_order: Vec<usize>,
    /// All polarization-sector terms up to order `N`.
    pub cumulative: usize,
    /// Real parameters of a general state truncated at `N` photons.
    pub full_tomography: usize,
    /// Real parameters of an `N`-photon density matrix.
    pub state_parameters: usize,
    /// Real parameters in the generalized coherence-matrix description.
    pub coherence_matrices: usize,
}

pub fn parameter_counts(n: usize) -> Result<ParameterCounts> {
    if n == 0 {
        return Err(Error::UnsupportedManifold("parameter counts need N >= 1".into()));
    }
    let per_order: Vec<usize> = (1..=n as u32).map(pack_len).collect();
    Ok(ParameterCounts {
        n,
        cumulative: n * (n * n + 6 * n + 11) / 6,
        full_tomography: n * (n * n * n + 6 * n * n + 13 * n + 12) / 4,
        state_parameters: n * (n + 2),
        coherence_matrices: n * (2 * n * n + 9 * n + 13) / 6,
        per_order,
    })
}
