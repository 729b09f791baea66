//! Quasi-uniform direction grids and scans of a moment over the sphere.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{moment_tensors, Manifold, MomentTensors};
use crate::error::{Error, Result};
use crate::fock_state::PolarizationState;
use crate::format::fmt12;
use crate::parallel;
use crate::stokes_algebra::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    /// Icosahedron subdivided `level` times: `10 * 4^level + 2` points.
    Icosphere { level: u32 },
    /// `n_theta` polar rings including both poles, `n_phi` azimuths per ring.
    LatLon { n_theta: usize, n_phi: usize },
    Fibonacci { n: usize },
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Icosphere { level } => write!(f, "ico:{level}"),
            GridSpec::LatLon { n_theta, n_phi } => write!(f, "latlon:{n_theta}x{n_phi}"),
            GridSpec::Fibonacci { n } => write!(f, "fib:{n}"),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid spec '{s}' (expected ico:L, latlon:TxP or fib:N)"));
        let (kind, arg) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "ico" => Ok(GridSpec::Icosphere { level: arg.parse().map_err(|_| bad())? }),
            "latlon" => {
                let (t, p) = arg.split_once('x').ok_or_else(bad)?;
                Ok(GridSpec::LatLon { n_theta: t.parse().map_err(|_| bad())?, n_phi: p.parse().map_err(|_| bad())? })
            }
            "fib" => Ok(GridSpec::Fibonacci { n: arg.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<[f64; 3]> {
        match *self {
            GridSpec::Icosphere { level } => icosphere(level.min(8)),
            GridSpec::LatLon { n_theta, n_phi } => latlon(n_theta, n_phi),
            GridSpec::Fibonacci { n } => fibonacci(n),
        }
    }

    pub fn directions(&self) -> Result<Vec<Direction>> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(pts.into_iter().map(Direction::from_vector).collect())
    }
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn icosphere(level: u32) -> Vec<[f64; 3]> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalized)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalized([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts
}

fn latlon(n_theta: usize, n_phi: usize) -> Vec<[f64; 3]> {
    if n_theta == 0 || n_phi == 0 {
        return vec![];
    }
    if n_theta == 1 {
        return vec![[0.0, 0.0, 1.0]];
    }
    let mut out = vec![[0.0, 0.0, 1.0]];
    for i in 1..n_theta - 1 {
        let theta = std::f64::consts::PI * i as f64 / (n_theta - 1) as f64;
        for k in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    out.push([0.0, 0.0, -1.0]);
    out
}

fn fibonacci(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Largest angle (radians) from any grid point to its nearest neighbour.
pub fn max_neighbor_gap(points: &[[f64; 3]]) -> f64 {
    let gaps = parallel::map_indexed(points.len(), |i| {
        let p = points[i];
        points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, q)| (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0).acos())
            .fold(f64::INFINITY, f64::min)
    });
    gaps.into_iter().filter(|g| g.is_finite()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub direction: Direction,
    pub unit: [f64; 3],
    /// Signed `<D_n^r>`.
    pub central: f64,
    pub raw: f64,
}

impl ScanPoint {
    /// The reported value: `|<D_n^r>|` for odd `r`, `<D_n^r>` otherwise.
    pub fn value(&self, order: u32) -> f64 {
        if order % 2 == 1 {
            self.central.abs()
        } else {
            self.central
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereScan {
    pub order: u32,
    pub grid: GridSpec,
    pub manifold: Manifold,
    pub state_digest: String,
    pub points: Vec<ScanPoint>,
}

pub fn sphere_scan(state: &PolarizationState, sel: Manifold, order: u32, grid: GridSpec) -> Result<SphereScan> {
    let tensors = moment_tensors(state, sel, order)?;
    sphere_scan_tensors(&tensors, order, grid, state.digest())
}

pub fn sphere_scan_tensors(
    tensors: &MomentTensors,
    order: u32,
    grid: GridSpec,
    state_digest: String,
) -> Result<SphereScan> {
    let raw = tensors.raw_pack(order)?;
    let central = tensors.central_pack(order)?;
    let dirs = grid.directions()?;
    let points = parallel::map_slice(&dirs, |d| {
        let unit = d.unit();
        ScanPoint { direction: *d, unit, central: central.evaluate(&unit), raw: raw.evaluate(&unit) }
    });
    Ok(SphereScan { order, grid, manifold: tensors.manifold, state_digest, points })
}

const COLUMNS: [&str; 6] = ["theta", "phi", "n1", "n2", "n3", "value"];

impl SphereScan {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value(self.order)).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# state_digest: {}", self.state_digest)?;
        writeln!(w, "# manifold: {}", self.manifold)?;
        writeln!(w, "# order: {}", self.order)?;
        writeln!(w, "# grid: {}", self.grid)?;
        writeln!(w, "# points: {}", self.points.len())?;
        writeln!(w, "{}", COLUMNS.join("\t"))?;
        for p in &self.points {
            let row = [p.direction.theta, p.direction.phi, p.unit[0], p.unit[1], p.unit[2], p.value(self.order)];
            let cells: Vec<String> = row.iter().map(|v| fmt12(*v)).collect();
            writeln!(w, "{}", cells.join("\t"))?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(f)
    }
}

/// A scan file as read back: header fields and rows of the six columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFile {
    pub header: Vec<(String, String)>,
    pub rows: Vec<[f64; 6]>,
}

impl ScanFile {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut header = vec![];
        let mut rows = vec![];
        let mut saw_columns = false;
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    header.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let cells: Vec<&str> = t.split('\t').collect();
            if !saw_columns {
                if cells != COLUMNS {
                    return Err(Error::Parse(format!("unexpected scan columns: {t}")));
                }
                saw_columns = true;
                continue;
            }
            if cells.len() != 6 {
                return Err(Error::Parse(format!("scan row has {} cells", cells.len())));
            }
            let mut row = [0.0; 6];
            for (slot, cell) in row.iter_mut().zip(&cells) {
                *slot = cell.parse().map_err(|_| Error::Parse(format!("bad number '{cell}'")))?;
            }
            rows.push(row);
        }
        if !saw_columns {
            return Err(Error::Parse("scan file has no column header".into()));
        }
        Ok(Self { header, rows })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_state::{build, StateSpec};

    #[test]
    fn grid_sizes_and_gaps() {
        for level in 0..4u32 {
            let pts = GridSpec::Icosphere { level }.points();
            assert_eq!(pts.len(), 10 * 4usize.pow(level) + 2);
        }
        assert_eq!(GridSpec::LatLon { n_theta: 19, n_phi: 36 }.points().len(), 17 * 36 + 2);
        assert_eq!(GridSpec::Fibonacci { n: 300 }.points().len(), 300);
        let gap = max_neighbor_gap(&GridSpec::Icosphere { level: 3 }.points());
        assert!(gap < 0.17, "gap {gap}");
        assert!(matches!(GridSpec::Fibonacci { n: 0 }.directions(), Err(Error::EmptyGrid)));
        for s in ["ico:3", "latlon:19x36", "fib:200"] {
            assert_eq!(s.parse::<GridSpec>().unwrap().to_string(), s);
        }
        assert!("ico".parse::<GridSpec>().is_err());
    }

    #[test]
    fn torus_of_h2() {
        let s = build(&StateSpec::Fock { h: 2, v: 0 }).unwrap();
        let scan = sphere_scan(&s, Manifold::Single(2), 2, GridSpec::Icosphere { level: 2 }).unwrap();
        for p in &scan.points {
            let expect = 2.0 * (1.0 - p.unit[2] * p.unit[2]);
            assert!((p.central - expect).abs() < 1e-10);
        }
        let first = sphere_scan(&s, Manifold::Single(2), 1, GridSpec::Fibonacci { n: 50 }).unwrap();
        assert!(first.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn file_round_trip() {
        let s = build(&StateSpec::Unpolarized { n: 2 }).unwrap();
        let scan = sphere_scan(&s, Manifold::Single(2), 3, GridSpec::LatLon { n_theta: 5, n_phi: 4 }).unwrap();
        let mut buf = vec![];
        scan.write_to(&mut buf).unwrap();
        let back = ScanFile::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.rows.len(), scan.points.len());
        assert_eq!(back.header_value("grid"), Some("latlon:5x4"));
        assert_eq!(back.header_value("order"), Some("3"));
        assert_eq!(back.header_value("state_digest"), Some(s.digest().as_str()));
        assert!(back.rows.iter().all(|r| r[5] >= 0.0));
    }
}
