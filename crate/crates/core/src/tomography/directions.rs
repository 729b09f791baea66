//! Measurement direction sets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment_engine::{pack_len, GridSpec};
use crate::stokes_algebra::Direction;

pub(crate) const DUPLICATE_TOL: f64 = DirectionSet::DUPLICATE_TOL;


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionSetLabel {
    Canonical2nd,
    Canonical3rdTilted,
    Canonical3rdMinimal,
    Custom,
}

/// Which ten directions to use at third order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdOrderVariant {
    /// Axes plus seven directions built on `arccos(sqrt(2/3))`.
    #[default]
    Tilted,
    /// The six second-order directions plus four supplements.
    Minimal,
}

impl FromStr for ThirdOrderVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tilted" => Ok(Self::Tilted),
            "minimal" => Ok(Self::Minimal),
            _ => Err(Error::Parse(format!("direction-set variant '{s}' (tilted or minimal)"))),
        }
    }
}

impl fmt::Display for ThirdOrderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tilted => "tilted",
            Self::Minimal => "minimal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub label: DirectionSetLabel,
    pub directions: Vec<Direction>,
}

impl DirectionSet {
    /// Directions closer than this (radians) count as duplicates.
    pub const DUPLICATE_TOL: f64 = 1e-9;

    pub fn new(label: DirectionSetLabel, directions: Vec<Direction>) -> Result<Self> {
        for (i, a) in directions.iter().enumerate() {
            for b in &directions[..i] {
                if a.angle_to(b) <= DUPLICATE_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate direction ({}, {}) in set",
                        a.theta, a.phi
                    )));
                }
            }
        }
        Ok(Self { label, directions })
    }

    pub fn custom(directions: Vec<Direction>) -> Result<Self> {
        Self::new(DirectionSetLabel::Custom, directions)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn second_order_directions() -> Vec<Direction> {
    vec![
        Direction::AXIS1,
        Direction::AXIS2,
        Direction::AXIS3,
        Direction::new(PI / 2.0, PI / 4.0),
        Direction::new(PI / 4.0, 0.0),
        Direction::new(PI / 4.0, PI / 2.0),
    ]
}

pub fn canonical_directions(order: u32, variant: ThirdOrderVariant) -> Result<DirectionSet> {
    match order {
        1 | 2 => DirectionSet::new(DirectionSetLabel::Canonical2nd, second_order_directions()),
        3 => match variant {
            ThirdOrderVariant::Tilted => {
                let p = (2.0f64 / 3.0).sqrt().acos();
                let h = PI / 2.0;
                let dirs = vec![
                    Direction::AXIS3,
                    Direction::AXIS1,
                    Direction::AXIS2,
                    Direction::new(h, p),
                    Direction::new(h, -p),
                    Direction::new(h - p, 0.0),
                    Direction::new(h + p, 0.0),
                    Direction::new(h - p, h),
                    Direction::new(h + p, h),
                    Direction::new(h - p, PI / 4.0),
                ];
                DirectionSet::new(DirectionSetLabel::Canonical3rdTilted, dirs)
            }
            ThirdOrderVariant::Minimal => {
                let mut dirs = second_order_directions();
                for (t, f) in [(6.0, 6.0), (6.0, 3.0), (3.0, 6.0), (3.0, 3.0)] {
                    dirs.push(Direction::new(PI / t, PI / f));
                }
                DirectionSet::new(DirectionSetLabel::Canonical3rdMinimal, dirs)
            }
        },
        _ => Err(Error::InvalidOrder(order)),
    }
}

/// Directions to observe at each order `1..=r_max`: the canonical sets up
/// to third order, and a Fibonacci grid with twice the pack size beyond.
pub fn protocol_directions(r_max: u32, variant: ThirdOrderVariant) -> Result<Vec<(u32, DirectionSet)>> {
    (1..=r_max)
        .map(|r| {
            let set = if r <= 3 {
                canonical_directions(r, variant)?
            } else {
                let grid = GridSpec::Fibonacci { n: 2 * pack_len(r) };
                DirectionSet::custom(grid.directions()?)?
            };
            Ok((r, set))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sets() {
        let s = canonical_directions(2, ThirdOrderVariant::Tilted).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(&s.directions[..3], &[Direction::AXIS1, Direction::AXIS2, Direction::AXIS3]);
        let p = canonical_directions(3, ThirdOrderVariant::Tilted).unwrap();
        assert_eq!(p.len(), 10);
        let phi1 = (2.0f64 / 3.0).sqrt().acos();
        let target = Direction::new(PI / 2.0 - phi1, PI / 4.0);
        assert!(p.directions.iter().any(|d| d.angle_to(&target) < 1e-12));
        let m = canonical_directions(3, ThirdOrderVariant::Minimal).unwrap();
        assert_eq!(m.len(), 10);
        assert_eq!(&m.directions[..6], &s.directions[..]);
        assert!(canonical_directions(4, ThirdOrderVariant::Tilted).is_err());
        assert!(DirectionSet::custom(vec![Direction::AXIS1, Direction::new(PI / 2.0, 2.0 * PI)]).is_err());
    }
}
