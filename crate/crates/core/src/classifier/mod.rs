//! Order-by-order isotropy, the three-photon polarization classes, and the
//! family of three-photon states unpolarized to second order.

mod family;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_state::{PolarizationState, StateSpec};
use crate::moment_engine::{moment_tensors, GridSpec, Manifold, MomentTensors};
use crate::stokes_algebra::Direction;
use crate::tomography::{canonical_directions, ThirdOrderVariant};

pub use family::{
    purity_obstruction_check, sample_unpol_family, unpol_family, PurityObstruction, UnpolFamilyParams,
};
pub use search::{conjecture_candidate, min_isotropy_conjecture_scan, ConjectureReport};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Spread of `<S_n>`, i.e. a vanishing Stokes vector.
    Raw,
    /// Spread of `<D_n^r>`.
    Central,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderIsotropy {
    pub order: u32,
    /// `max - min` of `<S_n^r>` over the test directions.
    pub raw_spread: f64,
    /// `max - min` of `<D_n^r>` over the test directions.
    pub central_spread: f64,
    pub criterion: Criterion,
    pub isotropic: bool,
    /// The constant value of the deciding moment when isotropic.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub manifold: Manifold,
    pub tolerance: f64,
    pub directions: usize,
    pub orders: Vec<OrderIsotropy>,
}

impl IsotropyReport {
    pub fn isotropic(&self, r: u32) -> Option<bool> {
        self.orders.iter().find(|o| o.order == r).map(|o| o.isotropic)
    }
}

/// Test directions: a Fibonacci grid with at least `8 (r_max + 1)^2` points
/// together with the canonical measurement directions.
pub fn test_directions(r_max: u32) -> Vec<Direction> {
    let n = (8 * (r_max as usize + 1).pow(2)).max(200);
    let mut dirs = GridSpec::Fibonacci { n }.directions().expect("nonempty grid");
    for order in [2, 3] {
        dirs.extend(canonical_directions(order, ThirdOrderVariant::Tilted).unwrap().directions);
    }
    dirs.extend(canonical_directions(3, ThirdOrderVariant::Minimal).unwrap().directions);
    dirs
}

fn spread(values: &[f64]) -> (f64, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    (max - min, scale)
}

/// Isotropy of each order of the given tensors.
///
/// Order 1 is decided on `<S_n>`, higher orders on the central moments
/// `<D_n^r>`; both spreads are reported. An order is isotropic when its
/// spread is below `tolerance * max(1, max |value|)`.
pub fn isotropy_from_tensors(tensors: &MomentTensors, tolerance: f64) -> IsotropyReport {
    let dirs = test_directions(tensors.r_max);
    let units: Vec<[f64; 3]> = dirs.iter().map(Direction::unit).collect();
    let orders = (1..=tensors.r_max)
        .map(|r| {
            let raw: Vec<f64> = units.iter().map(|n| tensors.raw[(r - 1) as usize].evaluate(n)).collect();
            let central: Vec<f64> = units.iter().map(|n| tensors.central[(r - 1) as usize].evaluate(n)).collect();
            let (raw_spread, raw_scale) = spread(&raw);
            let (central_spread, central_scale) = spread(&central);
            let (criterion, s, scale, vals) = if r == 1 {
                (Criterion::Raw, raw_spread, raw_scale, &raw)
            } else {
                (Criterion::Central, central_spread, central_scale, &central)
            };
            let isotropic = s < tolerance * scale;
            let constant = isotropic.then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            OrderIsotropy { order: r, raw_spread, central_spread, criterion, isotropic, constant }
        })
        .collect();
    IsotropyReport { manifold: tensors.manifold, tolerance, directions: dirs.len(), orders }
}

pub fn isotropy_test(state: &PolarizationState, sel: Manifold, r_max: u32, tolerance: f64) -> Result<IsotropyReport> {
    Ok(isotropy_from_tensors(&moment_tensors(state, sel, r_max)?, tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolarizationClass {
    /// Isotropic at orders 1, 2 and 3.
    UnpolarizedToThirdOrder,
    /// Isotropic at orders 1 and 2 only.
    UnpolarizedToSecondOrder,
    /// No Stokes vector and isotropic third order, anisotropic second order.
    SecondOrderOnly,
    /// No Stokes vector, anisotropic second and third orders.
    HiddenPolarization,
    /// Stokes vector with isotropic second order, anisotropic third order.
    IsotropicFluctuations,
    /// Anisotropic at every order.
    Polarized,
}

impl PolarizationClass {
    pub const ALL: [PolarizationClass; 6] = [
        Self::UnpolarizedToThirdOrder,
        Self::UnpolarizedToSecondOrder,
        Self::SecondOrderOnly,
        Self::HiddenPolarization,
        Self::IsotropicFluctuations,
        Self::Polarized,
    ];

    /// Isotropy at orders 1, 2, 3.
    pub fn triple(self) -> [bool; 3] {
        match self {
            Self::UnpolarizedToThirdOrder => [true, true, true],
            Self::UnpolarizedToSecondOrder => [true, true, false],
            Self::SecondOrderOnly => [true, false, true],
            Self::HiddenPolarization => [true, false, false],
            Self::IsotropicFluctuations => [false, true, false],
            Self::Polarized => [false, false, false],
        }
    }

    pub fn from_triple(t: [bool; 3]) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.triple() == t).ok_or(Error::UnrealizableClass(t))
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::UnpolarizedToThirdOrder => "unpolarized to third order",
            Self::UnpolarizedToSecondOrder => "unpolarized to second order",
            Self::SecondOrderOnly => "second-order polarized only",
            Self::HiddenPolarization => "hidden polarization",
            Self::IsotropicFluctuations => "polarized with isotropic fluctuations",
            Self::Polarized => "polarized",
        }
    }
}

impl fmt::Display for PolarizationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "Yes" } else { "No" };
        let [a, b, c] = self.triple();
        write!(f, "({}, {}, {}) {}", yn(a), yn(b), yn(c), self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PolarizationClass,
    pub triple: [bool; 3],
    pub label: String,
    pub report: IsotropyReport,
}

/// Class of three-photon moment tensors (orders 1 to 3 required).
pub fn classify_tensors(tensors: &MomentTensors, tolerance: f64) -> Result<Classification> {
    if tensors.manifold != Manifold::Single(3) {
        return Err(Error::UnsupportedManifold(format!(
            "classes are defined for N=3, got {}",
            tensors.manifold
        )));
    }
    if tensors.r_max < 3 {
        return Err(Error::InvalidOrder(tensors.r_max));
    }
    let trimmed = MomentTensors {
        manifold: tensors.manifold,
        r_max: 3,
        raw: tensors.raw[..3].to_vec(),
        central: tensors.central[..3].to_vec(),
    };
    let report = isotropy_from_tensors(&trimmed, tolerance);
    let triple = [1, 2, 3].map(|r| report.isotropic(r).unwrap());
    let class = PolarizationClass::from_triple(triple)?;
    Ok(Classification { class, triple, label: class.label().to_string(), report })
}

/// Class of a state supported on the three-photon manifold only.
pub fn classify3(state: &PolarizationState) -> Result<Classification> {
    if state.support() != [3] {
        return Err(Error::UnsupportedManifold(format!(
            "classification needs a state supported on N=3 only, got manifolds {:?}",
            state.support()
        )));
    }
    classify_tensors(&moment_tensors(state, Manifold::Single(3), 3)?, DEFAULT_TOLERANCE)
}

/// One exemplar state for each three-photon class.
pub fn class_exemplars() -> Vec<(&'static str, StateSpec, PolarizationClass)> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ("identity/4", StateSpec::Unpolarized { n: 3 }, PolarizationClass::UnpolarizedToThirdOrder),
        (
            "1/3 |3,0> + 1/2 |1,2> + 1/6 |0,3>",
            StateSpec::basis_mixture(3, &[(3, 1.0 / 3.0), (1, 0.5), (0, 1.0 / 6.0)]),
            PolarizationClass::UnpolarizedToSecondOrder,
        ),
        (
            "(|3,0><3,0| + |0,3><0,3|)/2",
            StateSpec::basis_mixture(3, &[(3, 0.5), (0, 0.5)]),
            PolarizationClass::SecondOrderOnly,
        ),
        (
            "(|3,0> + |0,3>)/sqrt(2)",
            StateSpec::Pure { n: 3, amplitudes: vec![[h, 0.0], [0.0, 0.0], [0.0, 0.0], [h, 0.0]] },
            PolarizationClass::HiddenPolarization,
        ),
        (
            "19/36 |3,0> + 15/36 |1,2> + 1/18 |0,3>",
            StateSpec::basis_mixture(3, &[(3, 19.0 / 36.0), (1, 15.0 / 36.0), (0, 1.0 / 18.0)]),
            PolarizationClass::IsotropicFluctuations,
        ),
        ("|3,0>", StateSpec::Fock { h: 3, v: 0 }, PolarizationClass::Polarized),
    ]
}
