//! Two-mode photon-number states, decomposed into excitation manifolds.
//!
//! Coherences between manifolds carry no polarization information, so a
//! [`PolarizationState`] keeps only the diagonal blocks: one normalized
//! [`ManifoldDensity`] per photon number `N >= 1` with its probability `p_N`,
//! plus the vacuum probability as a bare weight.

mod menagerie;
mod spec;

pub use menagerie::{menagerie, named_state, MENAGERIE_NAMES};
pub use spec::{build, Component, ExplicitManifold, ManifoldWeight, StateSpec, DEFAULT_MAX_TAIL};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, hermitize, CMatrix};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
/// Hermiticity defect accepted (and symmetrized away) by [`normalize_manifold`].
pub const RAW_HERMITIAN_TOL: f64 = 1e-8;

/// Normalized density matrix of the `N`-photon manifold in the basis
/// `|m, N-m>`, `m = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldDensity {
    pub n: usize,
    pub rho: CMatrix,
}

impl ManifoldDensity {
    /// Checks the Hermiticity, unit-trace and positivity invariants.
    pub fn new(n: usize, rho: CMatrix) -> Result<Self> {
        let md = Self { n, rho };
        md.diagnose().into_result()?;
        Ok(md)
    }

    /// Projector onto the basis state `|m, N-m>`.
    pub fn basis(n: usize, m: usize) -> Self {
        let mut rho = CMatrix::zeros(n + 1, n + 1);
        rho[(m, m)] = crate::linalg::c(1.0);
        Self { n, rho }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = n + 1;
        Self { n, rho: CMatrix::identity(d, d).scale(1.0 / d as f64) }
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product(&self.rho, &self.rho).re
    }

    pub fn diagnose(&self) -> ManifoldDiagnostics {
        let (rows, cols) = self.rho.shape();
        if rows != self.n + 1 || cols != self.n + 1 {
            return ManifoldDiagnostics {
                n: self.n,
                weight: f64::NAN,
                hermiticity: f64::INFINITY,
                trace_error: f64::INFINITY,
                min_eigenvalue: f64::NEG_INFINITY,
                shape: Some((rows, cols)),
            };
        }
        let trace: f64 = (0..rows).map(|i| self.rho[(i, i)].re).sum();
        let min_eigenvalue = hermitian_eigenvalues(&hermitize(&self.rho))
            .first()
            .copied()
            .unwrap_or(0.0);
        ManifoldDiagnostics {
            n: self.n,
            weight: f64::NAN,
            hermiticity: hermiticity_defect(&self.rho),
            trace_error: (trace - 1.0).abs(),
            min_eigenvalue,
            shape: None,
        }
    }
}

/// Normalizes a raw `N`-photon block `<m, N-m| rho |n, N-n>`.
/// Returns the original trace `p_N` and the Hermitized, trace-one density.
pub fn normalize_manifold(raw: &CMatrix, n: usize) -> Result<(f64, ManifoldDensity)> {
    let (rows, cols) = raw.shape();
    if rows != n + 1 || cols != n + 1 {
        return Err(Error::Dimension { manifold: n, expected: n + 1, rows, cols });
    }
    let defect = hermiticity_defect(raw);
    if defect > RAW_HERMITIAN_TOL {
        return Err(Error::NotHermitian { manifold: n, defect });
    }
    let trace: f64 = (0..=n).map(|i| raw[(i, i)].re).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::BadTrace { manifold: n, trace });
    }
    let rho = hermitize(raw).unscale(trace);
    Ok((trace, ManifoldDensity::new(n, rho)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldDiagnostics {
    pub n: usize,
    pub weight: f64,
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    #[serde(skip)]
    shape: Option<(usize, usize)>,
}

impl ManifoldDiagnostics {
    pub fn into_result(self) -> Result<Self> {
        if let Some((rows, cols)) = self.shape {
            return Err(Error::Dimension { manifold: self.n, expected: self.n + 1, rows, cols });
        }
        if !(self.hermiticity <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { manifold: self.n, defect: self.hermiticity });
        }
        if !(self.trace_error <= TRACE_TOL) {
            return Err(Error::BadTrace { manifold: self.n, trace: 1.0 + self.trace_error });
        }
        if !(self.min_eigenvalue >= -PSD_TOL) {
            return Err(Error::NotPositive { manifold: self.n, min_eigenvalue: self.min_eigenvalue });
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub vacuum_weight: f64,
    pub total_weight: f64,
    pub manifolds: Vec<ManifoldDiagnostics>,
}

impl Diagnostics {
    /// Worst residual over all manifolds: Hermiticity, trace error and
    /// negative part of the smallest eigenvalue.
    pub fn worst_residual(&self) -> f64 {
        self.manifolds
            .iter()
            .map(|m| m.hermiticity.max(m.trace_error).max((-m.min_eigenvalue).max(0.0)))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedManifold {
    pub weight: f64,
    pub density: ManifoldDensity,
}

/// Manifold-indexed family of normalized densities with weights `p_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationState {
    manifolds: Vec<WeightedManifold>,
    vacuum_weight: f64,
    cutoff: usize,
}

impl PolarizationState {
    /// Assembles a state from weighted manifolds (`N >= 1`, any order, no
    /// repeats) and a vacuum weight, validating every invariant.
    pub fn new(vacuum_weight: f64, manifolds: Vec<(f64, ManifoldDensity)>) -> Result<Self> {
        let mut manifolds: Vec<WeightedManifold> = manifolds
            .into_iter()
            .map(|(weight, density)| WeightedManifold { weight, density })
            .collect();
        manifolds.sort_by_key(|m| m.density.n);
        if manifolds.windows(2).any(|w| w[0].density.n == w[1].density.n) {
            return Err(Error::InvalidSpec("manifold listed twice".into()));
        }
        if manifolds.iter().any(|m| m.density.n == 0) {
            return Err(Error::InvalidSpec("the vacuum is stored as a weight, not a manifold".into()));
        }
        let cutoff = manifolds.last().map_or(0, |m| m.density.n);
        let state = Self { manifolds, vacuum_weight, cutoff };
        validate(&state)?;
        Ok(state)
    }

    /// A state living entirely in one manifold.
    pub fn single(density: ManifoldDensity) -> Result<Self> {
        if density.n == 0 {
            return Self::new(1.0, vec![]);
        }
        Self::new(0.0, vec![(1.0, density)])
    }

    pub fn manifolds(&self) -> &[WeightedManifold] {
        &self.manifolds
    }

    pub fn manifold(&self, n: usize) -> Option<&WeightedManifold> {
        self.manifolds.iter().find(|m| m.density.n == n)
    }

    pub fn vacuum_weight(&self) -> f64 {
        self.vacuum_weight
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Photon numbers with nonzero weight, vacuum excluded.
    pub fn support(&self) -> Vec<usize> {
        self.manifolds.iter().filter(|m| m.weight > 0.0).map(|m| m.density.n).collect()
    }

    /// The photon number if the state occupies exactly one manifold `N >= 1`.
    pub fn single_manifold(&self) -> Option<usize> {
        match self.support().as_slice() {
            [n] if self.vacuum_weight == 0.0 => Some(*n),
            _ => None,
        }
    }

    /// `p_0 + sum_N p_N`; falls short of one by the truncated tail.
    pub fn total_weight(&self) -> f64 {
        self.vacuum_weight + self.manifolds.iter().map(|m| m.weight).sum::<f64>()
    }

    pub fn map_manifolds<F>(&self, f: F) -> Self
    where
        F: Fn(&ManifoldDensity) -> CMatrix,
    {
        let manifolds = self
            .manifolds
            .iter()
            .map(|m| WeightedManifold {
                weight: m.weight,
                density: ManifoldDensity { n: m.density.n, rho: hermitize(&f(&m.density)) },
            })
            .collect();
        Self { manifolds, vacuum_weight: self.vacuum_weight, cutoff: self.cutoff }
    }

    /// SHA-256 of the state's contents printed at 12 significant digits, with
    /// entries below `1e-13` treated as zero.
    pub fn digest(&self) -> String {
        let mut text = format!("vacuum {}\n", fmt12(self.vacuum_weight));
        for m in &self.manifolds {
            text.push_str(&format!("manifold {} {}\n", m.density.n, fmt12(m.weight)));
            for z in m.density.rho.iter() {
                let clean = |x: f64| if x.abs() < 1e-13 { 0.0 } else { x };
                text.push_str(&format!("{} {}\n", fmt12(clean(z.re)), fmt12(clean(z.im))));
            }
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Per-manifold invariant residuals; fails on the first violation.
pub fn validate(state: &PolarizationState) -> Result<Diagnostics> {
    let mut manifolds = Vec::with_capacity(state.manifolds.len());
    for m in &state.manifolds {
        if !(m.weight >= 0.0) {
            return Err(Error::InvalidWeights(format!("p_{} = {} is negative", m.density.n, m.weight)));
        }
        let mut diag = m.density.diagnose().into_result()?;
        diag.weight = m.weight;
        manifolds.push(diag);
    }
    if !(state.vacuum_weight >= 0.0) {
        return Err(Error::InvalidWeights(format!("vacuum weight {} is negative", state.vacuum_weight)));
    }
    let total_weight = state.total_weight();
    if total_weight > 1.0 + TRACE_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total_weight} > 1")));
    }
    Ok(Diagnostics { vacuum_weight: state.vacuum_weight, total_weight, manifolds })
}
