//! Directional moment observations and their tab-separated file form.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::directions::{DirectionSet, DUPLICATE_TOL};
use crate::error::{Error, Result};
use crate::format::fmt12;
use crate::moment_engine::{Manifold, MomentTensors};
use crate::stokes_algebra::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub direction: Direction,
    pub order: u32,
    /// Observed `<S_n^r>`.
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentObservations {
    pub manifold: Manifold,
    /// Zeroth moment of the observed distribution; 1 for a normalized manifold.
    pub weight: f64,
    pub entries: Vec<Observation>,
}

const COLUMNS: [&str; 5] = ["theta", "phi", "order", "value", "stderr"];

impl MomentObservations {
    pub fn new(manifold: Manifold, entries: Vec<Observation>) -> Self {
        Self { manifold, weight: 1.0, entries }
    }

    /// Noiseless observations of known tensors over per-order direction sets.
    pub fn from_tensors(tensors: &MomentTensors, plan: &[(u32, DirectionSet)]) -> Result<Self> {
        let mut entries = vec![];
        for (order, set) in plan {
            for d in &set.directions {
                entries.push(Observation {
                    direction: *d,
                    order: *order,
                    value: tensors.raw_moment(d, *order)?,
                    stderr: None,
                });
            }
        }
        Ok(Self::new(tensors.manifold, entries))
    }

    pub fn max_order(&self) -> u32 {
        self.entries.iter().map(|o| o.order).max().unwrap_or(0)
    }

    pub fn of_order(&self, r: u32) -> Vec<&Observation> {
        self.entries.iter().filter(|o| o.order == r).collect()
    }

    /// Orders must run contiguously from 1, with no repeated direction inside
    /// an order and finite numbers throughout.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentObservations(m));
        if self.entries.is_empty() {
            return bad("no observations".into());
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return bad(format!("weight {} must be positive", self.weight));
        }
        for r in 1..=self.max_order() {
            let obs = self.of_order(r);
            if obs.is_empty() {
                return bad(format!("orders must be contiguous from 1; order {r} is missing"));
            }
            for (i, a) in obs.iter().enumerate() {
                if !a.value.is_finite() || a.stderr.is_some_and(|s| !s.is_finite() || s < 0.0) {
                    return bad(format!("non-finite value or negative stderr at order {r}"));
                }
                if obs[..i].iter().any(|b| a.direction.angle_to(&b.direction) <= DUPLICATE_TOL) {
                    return bad(format!(
                        "direction ({}, {}) repeated at order {r}",
                        a.direction.theta, a.direction.phi
                    ));
                }
            }
        }
        if self.entries.iter().any(|o| o.order == 0) {
            return bad("order 0 is not an observation".into());
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# manifold: {}", self.manifold)?;
        writeln!(w, "# weight: {}", fmt12(self.weight))?;
        writeln!(w, "{}", COLUMNS.join("\t"))?;
        for o in &self.entries {
            let stderr = o.stderr.map_or("-".to_string(), fmt12);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                fmt12(o.direction.theta),
                fmt12(o.direction.phi),
                o.order,
                fmt12(o.value),
                stderr
            )?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut manifold = None;
        let mut weight = 1.0;
        let mut entries = vec![];
        let mut saw_columns = false;
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    match k.trim() {
                        "manifold" => manifold = Some(v.parse::<Manifold>()?),
                        "weight" => weight = num(v.trim())?,
                        _ => {}
                    }
                }
                continue;
            }
            let cells: Vec<&str> = t.split('\t').map(str::trim).collect();
            if !saw_columns {
                if cells != COLUMNS {
                    return Err(Error::Parse(format!("unexpected observation columns: {t}")));
                }
                saw_columns = true;
                continue;
            }
            if cells.len() != 5 {
                return Err(Error::Parse(format!("observation row has {} cells", cells.len())));
            }
            let order = cells[2].parse::<u32>().map_err(|_| Error::Parse(format!("bad order '{}'", cells[2])))?;
            let stderr = match cells[4] {
                "" | "-" | "nan" | "NaN" => None,
                s => Some(num(s)?),
            };
            entries.push(Observation {
                direction: Direction::new(num(cells[0])?, num(cells[1])?),
                order,
                value: num(cells[3])?,
                stderr,
            });
        }
        if !saw_columns {
            return Err(Error::Parse("observation file has no column header".into()));
        }
        let manifold = manifold.ok_or_else(|| Error::Parse("observation file lacks '# manifold:' header".into()))?;
        Ok(Self { manifold, weight, entries })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let obs = MomentObservations::new(
            Manifold::Single(2),
            vec![
                Observation { direction: Direction::AXIS1, order: 1, value: -0.19, stderr: Some(0.06) },
                Observation { direction: Direction::AXIS3, order: 2, value: 3.93, stderr: None },
            ],
        );
        let mut buf = vec![];
        obs.write_to(&mut buf).unwrap();
        let back = MomentObservations::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.manifold, obs.manifold);
        for (a, b) in back.entries.iter().zip(&obs.entries) {
            assert!(a.direction.angle_to(&b.direction) < 1e-11);
            assert_eq!((a.order, a.value, a.stderr), (b.order, b.value, b.stderr));
        }
    }

    #[test]
    fn gaps_rejected() {
        let obs = MomentObservations::new(
            Manifold::Single(2),
            vec![Observation { direction: Direction::AXIS1, order: 2, value: 1.0, stderr: None }],
        );
        assert!(matches!(obs.check(), Err(Error::InconsistentObservations(_))));
        let text = "theta\tphi\torder\tvalue\tstderr\n0\t0\t1\t2\t-\n";
        assert!(MomentObservations::read_from(text.as_bytes()).is_err());
    }
}
