use serde::{Deserialize, Serialize};

use super::{normalize_manifold, ManifoldDensity, PolarizationState};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::stokes_algebra::{rotation_to_direction, Direction};

/// Tail mass a truncated coherent or thermal expansion may discard.
pub const DEFAULT_MAX_TAIL: f64 = 1e-10;
const WEIGHT_TOL: f64 = 1e-12;

/// Declarative description of a state, as read from a state-spec file.
///
/// Complex numbers are `[re, im]` pairs. Manifold matrices and pure-state
/// amplitudes use the basis `|m, N-m>`, `m = 0..=N` (photons in H).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// `|h, v>`.
    Fock { h: usize, v: usize },
    /// `|N, 0>` rotated so its Stokes vector points along `(theta, phi)`.
    Su2Coherent { n: usize, theta: f64, phi: f64 },
    /// `|N, N>`.
    Nn { n: usize },
    /// Two-mode coherent state `||alpha|, 0>`.
    Coherent {
        alpha: f64,
        #[serde(default)]
        cutoff: Option<usize>,
        #[serde(default)]
        max_tail: Option<f64>,
    },
    /// Two-mode thermal state with mean photon number `mean`.
    Thermal {
        mean: f64,
        #[serde(default)]
        cutoff: Option<usize>,
        #[serde(default)]
        max_tail: Option<f64>,
    },
    /// `1_N / (N + 1)`.
    Unpolarized { n: usize },
    /// `sum_N p_N 1_N / (N + 1)`.
    Su2Invariant { weights: Vec<ManifoldWeight> },
    /// Pure superposition inside one manifold; normalized on build.
    Pure { n: usize, amplitudes: Vec<[f64; 2]> },
    Mixture { components: Vec<Component> },
    Explicit {
        manifolds: Vec<ExplicitManifold>,
        #[serde(default)]
        vacuum: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldWeight {
    pub n: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub state: StateSpec,
}

/// Unnormalized block `<m, N-m| rho |n, N-n>`; its trace is `p_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitManifold {
    pub n: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state spec serializes")
    }

    /// Incoherent mixture of projectors onto `|m, N-m>` with the given weights.
    pub fn basis_mixture(n: usize, weights: &[(usize, f64)]) -> Self {
        let components = weights
            .iter()
            .map(|&(m, weight)| Component { weight, state: StateSpec::Fock { h: m, v: n - m } })
            .collect();
        StateSpec::Mixture { components }
    }
}

pub fn build(spec: &StateSpec) -> Result<PolarizationState> {
    let blocks = blocks(spec)?;
    assemble(blocks)
}

/// Unnormalized manifold blocks of a spec (`N = 0` is the vacuum weight).
struct Blocks {
    vacuum: f64,
    manifolds: Vec<(usize, CMatrix)>,
}

impl Blocks {
    fn single(n: usize, rho: CMatrix) -> Self {
        if n == 0 {
            return Self { vacuum: rho[(0, 0)].re, manifolds: vec![] };
        }
        Self { vacuum: 0.0, manifolds: vec![(n, rho)] }
    }

    fn add_scaled(&mut self, other: Blocks, w: f64) {
        self.vacuum += w * other.vacuum;
        for (n, rho) in other.manifolds {
            match self.manifolds.iter_mut().find(|(k, _)| *k == n) {
                Some((_, acc)) => *acc += rho.scale(w),
                None => self.manifolds.push((n, rho.scale(w))),
            }
        }
    }
}

fn assemble(blocks: Blocks) -> Result<PolarizationState> {
    let mut manifolds = Vec::with_capacity(blocks.manifolds.len());
    for (n, raw) in blocks.manifolds {
        let trace: f64 = (0..=n).map(|i| raw[(i, i)].re).sum();
        if trace == 0.0 {
            continue;
        }
        let (p, density) = normalize_manifold(&raw, n)?;
        manifolds.push((p, density));
    }
    PolarizationState::new(blocks.vacuum, manifolds)
}

fn blocks(spec: &StateSpec) -> Result<Blocks> {
    match spec {
        StateSpec::Fock { h, v } => Ok(Blocks::single(h + v, ManifoldDensity::basis(h + v, *h).rho)),
        StateSpec::Nn { n } => Ok(Blocks::single(2 * n, ManifoldDensity::basis(2 * n, *n).rho)),
        StateSpec::Su2Coherent { n, theta, phi } => {
            check_finite(&[*theta, *phi])?;
            Ok(Blocks::single(*n, su2_coherent(*n, &Direction::new(*theta, *phi))))
        }
        StateSpec::Unpolarized { n } => Ok(Blocks::single(*n, ManifoldDensity::maximally_mixed(*n).rho)),
        StateSpec::Su2Invariant { weights } => {
            let total: f64 = weights.iter().map(|w| w.p).sum();
            if weights.iter().any(|w| !(w.p >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::InvalidWeights(format!("SU(2)-invariant weights sum to {total}")));
            }
            let mut acc = Blocks { vacuum: 0.0, manifolds: vec![] };
            for w in weights {
                acc.add_scaled(Blocks::single(w.n, ManifoldDensity::maximally_mixed(w.n).rho), w.p);
            }
            Ok(acc)
        }
        StateSpec::Coherent { alpha, cutoff, max_tail } => {
            check_finite(&[*alpha])?;
            let mean = alpha * alpha;
            let weights = truncated_weights(
                |k| poisson(mean, k),
                *cutoff,
                max_tail.unwrap_or(DEFAULT_MAX_TAIL),
            )?;
            let mut acc = Blocks { vacuum: 0.0, manifolds: vec![] };
            for (n, p) in weights.into_iter().enumerate() {
                acc.add_scaled(Blocks::single(n, ManifoldDensity::basis(n, n).rho), p);
            }
            Ok(acc)
        }
        StateSpec::Thermal { mean, cutoff, max_tail } => {
            if !(*mean >= 0.0) || !mean.is_finite() {
                return Err(Error::InvalidSpec(format!("thermal mean {mean} must be non-negative")));
            }
            let weights = truncated_weights(
                |k| thermal_weight(*mean, k),
                *cutoff,
                max_tail.unwrap_or(DEFAULT_MAX_TAIL),
            )?;
            let mut acc = Blocks { vacuum: 0.0, manifolds: vec![] };
            for (n, p) in weights.into_iter().enumerate() {
                acc.add_scaled(Blocks::single(n, ManifoldDensity::maximally_mixed(n).rho), p);
            }
            Ok(acc)
        }
        StateSpec::Pure { n, amplitudes } => {
            if amplitudes.len() != n + 1 {
                return Err(Error::InvalidSpec(format!(
                    "pure state on manifold {n} needs {} amplitudes, got {}",
                    n + 1,
                    amplitudes.len()
                )));
            }
            let psi: Vec<num_complex::Complex64> =
                amplitudes.iter().map(|[re, im]| num_complex::Complex64::new(*re, *im)).collect();
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::InvalidSpec("pure state has zero norm".into()));
            }
            let rho = CMatrix::from_fn(n + 1, n + 1, |i, j| psi[i] * psi[j].conj() / norm);
            Ok(Blocks::single(*n, rho))
        }
        StateSpec::Mixture { components } => {
            if components.is_empty() {
                return Err(Error::InvalidWeights("empty mixture".into()));
            }
            let total: f64 = components.iter().map(|c| c.weight).sum();
            if components.iter().any(|c| !(c.weight >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::InvalidWeights(format!("mixture weights sum to {total}")));
            }
            let mut acc = Blocks { vacuum: 0.0, manifolds: vec![] };
            for comp in components {
                let state = build(&comp.state)?;
                let mut b = Blocks { vacuum: state.vacuum_weight(), manifolds: vec![] };
                for m in state.manifolds() {
                    b.manifolds.push((m.density.n, m.density.rho.scale(m.weight)));
                }
                acc.add_scaled(b, comp.weight);
            }
            Ok(acc)
        }
        StateSpec::Explicit { manifolds, vacuum } => {
            if !(*vacuum >= 0.0) {
                return Err(Error::InvalidWeights(format!("vacuum weight {vacuum} is negative")));
            }
            let mut acc = Blocks { vacuum: *vacuum, manifolds: vec![] };
            for em in manifolds {
                if em.n == 0 {
                    return Err(Error::InvalidSpec("give the vacuum as `vacuum`, not as a manifold".into()));
                }
                if acc.manifolds.iter().any(|(k, _)| *k == em.n) {
                    return Err(Error::InvalidSpec(format!("manifold {} listed twice", em.n)));
                }
                let d = em.n + 1;
                if em.matrix.len() != d || em.matrix.iter().any(|row| row.len() != d) {
                    return Err(Error::Dimension {
                        manifold: em.n,
                        expected: d,
                        rows: em.matrix.len(),
                        cols: em.matrix.first().map_or(0, Vec::len),
                    });
                }
                let raw = CMatrix::from_fn(d, d, |i, j| {
                    let [re, im] = em.matrix[i][j];
                    num_complex::Complex64::new(re, im)
                });
                acc.manifolds.push((em.n, raw));
            }
            Ok(acc)
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidSpec("non-finite parameter".into()))
    }
}

/// Projector onto `U |N, 0>` with `U S3 U^dagger = n . S`.
pub(crate) fn su2_coherent(n: usize, dir: &Direction) -> CMatrix {
    if n == 0 {
        return CMatrix::from_element(1, 1, c(1.0));
    }
    let u = rotation_to_direction(n, dir).u;
    let col = u.column(n).into_owned();
    &col * col.adjoint()
}

fn poisson(mean: f64, k: usize) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = -mean + k as f64 * mean.ln() - ln_factorial(k);
    ln.exp()
}

fn thermal_weight(mean: f64, k: usize) -> f64 {
    let q = mean / (1.0 + mean);
    q.powi(k as i32) / (1.0 + mean)
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// Weights `p_0..=p_cutoff`. Without an explicit cutoff, picks the smallest
/// one whose discarded tail is below `max_tail`.
fn truncated_weights<F>(weight: F, cutoff: Option<usize>, max_tail: f64) -> Result<Vec<f64>>
where
    F: Fn(usize) -> f64,
{
    const HARD_LIMIT: usize = 400;
    let tail_after = |n: usize| -> f64 {
        // direct sum of the tail avoids cancellation in 1 - sum
        let mut tail = 0.0;
        let mut k = n + 1;
        loop {
            let p = weight(k);
            tail += p;
            if (p < 1e-300 || p < tail * 1e-17) && k > n + 4 || k > n + 100_000 {
                break;
            }
            k += 1;
        }
        tail
    };
    let cutoff = match cutoff {
        Some(n) => {
            let tail = tail_after(n);
            if tail > max_tail {
                return Err(Error::TailMass { cutoff: n, tail, allowed: max_tail });
            }
            n
        }
        None => {
            let mut n = 0;
            while tail_after(n) >= max_tail {
                n += 1;
                if n > HARD_LIMIT {
                    return Err(Error::TailMass { cutoff: n, tail: tail_after(n), allowed: max_tail });
                }
            }
            n
        }
    };
    Ok((0..=cutoff).map(weight).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_entry;

    #[test]
    fn fock_two_zero() {
        let s = build(&StateSpec::Fock { h: 2, v: 0 }).unwrap();
        assert_eq!(s.support(), vec![2]);
        let rho = &s.manifold(2).unwrap().density.rho;
        let want = CMatrix::from_fn(3, 3, |i, j| if i == 2 && j == 2 { c(1.0) } else { c(0.0) });
        assert_eq!(rho, &want);
    }

    #[test]
    fn su2_coherent_at_pole_is_fock() {
        let a = build(&StateSpec::Su2Coherent { n: 2, theta: 0.0, phi: 0.0 }).unwrap();
        let b = build(&StateSpec::Fock { h: 2, v: 0 }).unwrap();
        let da = &a.manifold(2).unwrap().density.rho;
        let db = &b.manifold(2).unwrap().density.rho;
        assert!(max_abs_entry(&(da - db)) < 1e-14);
    }

    #[test]
    fn thermal_weights_and_blocks() {
        let mean = 0.7;
        let s = build(&StateSpec::Thermal { mean, cutoff: None, max_tail: None }).unwrap();
        assert!((s.vacuum_weight() - 1.0 / 1.7).abs() < 1e-15);
        for m in s.manifolds() {
            let n = m.density.n;
            let want = mean.powi(n as i32) / 1.7f64.powi(n as i32 + 1);
            assert!((m.weight - want).abs() < 1e-15 * want.max(1.0));
            assert!(max_abs_entry(&(&m.density.rho - ManifoldDensity::maximally_mixed(n).rho)) < 1e-15);
        }
        // geometric tail beyond the cutoff
        let q: f64 = mean / (1.0 + mean);
        let tail = q.powi(s.cutoff() as i32 + 1);
        assert!(tail < DEFAULT_MAX_TAIL);
        assert!(q.powi(s.cutoff() as i32) >= DEFAULT_MAX_TAIL);
        assert!((1.0 - s.total_weight() - tail).abs() < 1e-14);
    }

    #[test]
    fn coherent_blocks_are_su2_coherent() {
        let s = build(&StateSpec::Coherent { alpha: 1.3, cutoff: None, max_tail: None }).unwrap();
        let mean: f64 = 1.69;
        for m in s.manifolds() {
            let n = m.density.n;
            let want = (-mean).exp() * mean.powi(n as i32) / crate::linalg::factorial(n as u32);
            assert!((m.weight - want).abs() < 1e-14);
            let reference = build(&StateSpec::Su2Coherent { n, theta: 0.0, phi: 0.0 }).unwrap();
            let rho = &reference.manifold(n).unwrap().density.rho;
            assert!(max_abs_entry(&(&m.density.rho - rho)) < 1e-13);
        }
        assert!(1.0 - s.total_weight() < DEFAULT_MAX_TAIL);
    }

    #[test]
    fn short_cutoff_is_rejected() {
        let err = build(&StateSpec::Coherent { alpha: 2.0, cutoff: Some(3), max_tail: None });
        assert!(matches!(err, Err(Error::TailMass { .. })));
        let ok = build(&StateSpec::Coherent { alpha: 2.0, cutoff: Some(3), max_tail: Some(0.6) });
        assert!(ok.is_ok());
    }

    #[test]
    fn mixture_weights_are_checked() {
        let spec = StateSpec::basis_mixture(2, &[(2, 0.5), (0, 0.4)]);
        assert!(matches!(build(&spec), Err(Error::InvalidWeights(_))));
        let spec = StateSpec::basis_mixture(2, &[(2, 0.5), (0, 0.5)]);
        let s = build(&spec).unwrap();
        assert_eq!(s.manifold(2).unwrap().density.rho[(0, 0)].re, 0.5);
    }

    #[test]
    fn mixture_across_manifolds() {
        let spec = StateSpec::Mixture {
            components: vec![
                Component { weight: 0.25, state: StateSpec::Fock { h: 1, v: 0 } },
                Component { weight: 0.75, state: StateSpec::Unpolarized { n: 2 } },
            ],
        };
        let s = build(&spec).unwrap();
        assert_eq!(s.support(), vec![1, 2]);
        assert!((s.manifold(1).unwrap().weight - 0.25).abs() < 1e-15);
        assert!((s.total_weight() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = StateSpec::Mixture {
            components: vec![
                Component { weight: 0.5, state: StateSpec::Pure { n: 1, amplitudes: vec![[1.0, 0.0], [0.0, 1.0]] } },
                Component {
                    weight: 0.5,
                    state: StateSpec::Thermal { mean: 0.2, cutoff: None, max_tail: None },
                },
            ],
        };
        let back = StateSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
        let parsed = StateSpec::from_json(r#"{"type": "fock", "h": 2, "v": 0}"#).unwrap();
        assert_eq!(parsed, StateSpec::Fock { h: 2, v: 0 });
        assert!(StateSpec::from_json(r#"{"type": "fock", "h": 2}"#).is_err());
    }
}
