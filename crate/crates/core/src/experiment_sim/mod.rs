//! Simulation of the photon-counting polarization measurement.
//!
//! For each direction the state is rotated into the measurement frame and
//! each shot yields the photon numbers `(k, N - k)` in the two output ports,
//! or nothing. Detector losses thin each outcome class by its relative
//! efficiency; calibration divides them back out.

mod detector;

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_state::PolarizationState;
use crate::format::fmt12;
use crate::moment_engine::Manifold;
use crate::parallel;
use crate::stokes_algebra::{rotate_state, Direction};
use crate::tomography::{DirectionSet, MomentObservations, Observation};

pub use detector::{ClassEfficiency, DetectorConfig, EFFICIENCIES_11, EFFICIENCIES_20};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub n: usize,
    /// Photons in the H port.
    pub k: usize,
    pub probability: f64,
}

impl Outcome {
    /// Eigenvalue of `S_n` for this outcome.
    pub fn stokes_value(&self) -> f64 {
        2.0 * self.k as f64 - self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub direction: Direction,
    pub outcomes: Vec<Outcome>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

/// `p(N, k) = p_N <k, N-k| U^dagger rho_N U |k, N-k>`.
pub fn outcome_distribution(state: &PolarizationState, dir: &Direction) -> OutcomeDistribution {
    let rotated = rotate_state(state, dir);
    let mut outcomes = vec![];
    for w in rotated.manifolds() {
        for k in 0..=w.density.n {
            let p = (w.weight * w.density.rho[(k, k)].re).max(0.0);
            outcomes.push(Outcome { n: w.density.n, k, probability: p });
        }
    }
    OutcomeDistribution { direction: *dir, outcomes }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountEntry {
    pub n: usize,
    pub k: usize,
    /// Registered counts; integral unless produced in exact mode.
    pub raw: f64,
    pub calibrated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub run: usize,
    pub direction: Direction,
    pub trials: u64,
    pub entries: Vec<CountEntry>,
}

impl CountsRecord {
    pub fn manifold_entries(&self, n: usize) -> impl Iterator<Item = &CountEntry> {
        self.entries.iter().filter(move |e| e.n == n)
    }
}

/// Multinomial draw of `config.trials` shots over the outcomes (the missing
/// probability is "nothing registered"), then binomial thinning of each
/// class by its efficiency.
pub fn sample_counts(dist: &OutcomeDistribution, config: &DetectorConfig, rng: &mut ChaCha8Rng, run: usize) -> CountsRecord {
    let mut remaining = config.trials;
    let mut mass = 1.0f64;
    let mut entries = Vec::with_capacity(dist.outcomes.len());
    for o in &dist.outcomes {
        let emitted = if remaining == 0 || o.probability <= 0.0 {
            0
        } else if o.probability >= mass {
            remaining
        } else {
            let p = (o.probability / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, p).expect("valid binomial").sample(rng)
        };
        remaining -= emitted;
        mass = (mass - o.probability).max(0.0);
        let eff = config.class_efficiency(o.n, o.k);
        let registered = if emitted == 0 || eff >= 1.0 {
            emitted
        } else {
            Binomial::new(emitted, eff).expect("valid binomial").sample(rng)
        };
        entries.push(CountEntry { n: o.n, k: o.k, raw: registered as f64, calibrated: registered as f64 });
    }
    CountsRecord { run, direction: dist.direction, trials: config.trials, entries }
}

/// Expected registered counts, no sampling.
pub fn expected_counts(dist: &OutcomeDistribution, config: &DetectorConfig, run: usize) -> CountsRecord {
    let t = config.trials as f64;
    let entries = dist
        .outcomes
        .iter()
        .map(|o| {
            let raw = t * o.probability * config.class_efficiency(o.n, o.k);
            CountEntry { n: o.n, k: o.k, raw, calibrated: raw }
        })
        .collect();
    CountsRecord { run, direction: dist.direction, trials: config.trials, entries }
}

/// Divides raw counts by their class efficiencies.
pub fn calibrate(record: &CountsRecord, config: &DetectorConfig) -> Result<CountsRecord> {
    let mut out = record.clone();
    for e in &mut out.entries {
        let eff = config.class_efficiency(e.n, e.k);
        if !(eff > 0.0) {
            return Err(Error::InvalidConfig(format!("zero efficiency for class (N={}, k={})", e.n, e.k)));
        }
        e.calibrated = e.raw / eff;
    }
    Ok(out)
}

/// Calibrated estimate of `<S_n^q>` in manifold `n` from one record, with
/// its delta-method variance under Poisson-distributed class counts.
pub fn estimate(record: &CountsRecord, config: &DetectorConfig, n: usize, q: u32) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let mut first = 0.0;
    for e in record.manifold_entries(n) {
        let v = (2.0 * e.k as f64 - n as f64).powi(q as i32);
        total += e.calibrated;
        first += e.calibrated * v;
    }
    if total <= 0.0 {
        return None;
    }
    let mean = first / total;
    let mut var = 0.0;
    for e in record.manifold_entries(n) {
        let w = 1.0 / config.class_efficiency(e.n, e.k);
        let v = (2.0 * e.k as f64 - n as f64).powi(q as i32);
        var += w * w * (v - mean) * (v - mean) * e.raw;
    }
    Some((mean, var / (total * total)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoment {
    pub direction: Direction,
    pub n: usize,
    pub order: u32,
    pub mean: f64,
    /// Standard deviation of the per-run estimates.
    pub std_runs: f64,
    /// `std_runs / sqrt(runs)`.
    pub sem_runs: f64,
    /// Shot-noise standard error of `mean` from the delta method.
    pub shot_se: f64,
    pub runs: usize,
    pub detected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    /// One observation set per excitation manifold present in the state.
    pub observations: Vec<MomentObservations>,
    pub empirical: Vec<EmpiricalMoment>,
    pub counts: Vec<CountsRecord>,
}

impl ProtocolResult {
    pub fn observations_for(&self, n: usize) -> Option<&MomentObservations> {
        self.observations.iter().find(|o| o.manifold == Manifold::Single(n))
    }
}

fn unique_directions(plan: &[(u32, DirectionSet)]) -> Vec<Direction> {
    let mut out: Vec<Direction> = vec![];
    for (_, set) in plan {
        for d in &set.directions {
            if !out.iter().any(|o| o.angle_to(d) <= DirectionSet::DUPLICATE_TOL) {
                out.push(*d);
            }
        }
    }
    out
}

fn summarize(dir: Direction, n: usize, q: u32, ests: &[(f64, f64)], detected: f64) -> EmpiricalMoment {
    let r = ests.len() as f64;
    let mean = ests.iter().map(|e| e.0).sum::<f64>() / r;
    let std_runs = if ests.len() > 1 {
        (ests.iter().map(|e| (e.0 - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
    } else {
        0.0
    };
    let shot_se = ests.iter().map(|e| e.1).sum::<f64>().sqrt() / r;
    EmpiricalMoment {
        direction: dir,
        n,
        order: q,
        mean,
        std_runs,
        sem_runs: std_runs / r.sqrt(),
        shot_se,
        runs: ests.len(),
        detected,
    }
}

/// Runs the counting protocol: `runs` runs of `trials` shots along every
/// direction of the plan, then per manifold and per planned order the mean
/// calibrated moment over runs.
///
/// Each (direction, run) pair draws from its own ChaCha stream of the
/// master seed, so results do not depend on scheduling. The observation
/// standard error is the shot-noise error, floored at `N^q / detected` so
/// that eigenstate outcomes keep a finite weight; exact mode reports none.
pub fn run_protocol(state: &PolarizationState, plan: &[(u32, DirectionSet)], config: &DetectorConfig) -> Result<ProtocolResult> {
    config.validate()?;
    let dirs = unique_directions(plan);
    let runs = config.runs;
    let records: Vec<CountsRecord> = parallel::map_indexed(dirs.len() * runs, |idx| {
        let (d, run) = (idx / runs, idx % runs);
        let dist = outcome_distribution(state, &dirs[d]);
        if config.exact {
            expected_counts(&dist, config, run)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(idx as u64);
            sample_counts(&dist, config, &mut rng, run)
        }
    })
    .into_iter()
    .map(|r| calibrate(&r, config))
    .collect::<Result<_>>()?;

    let mut observations = vec![];
    let mut empirical = vec![];
    for w in state.manifolds() {
        let n = w.density.n;
        let mut entries = vec![];
        for (q, set) in plan {
            for dir in &set.directions {
                let d = dirs.iter().position(|o| o.angle_to(dir) <= DirectionSet::DUPLICATE_TOL).unwrap();
                let recs = &records[d * runs..(d + 1) * runs];
                let ests: Vec<(f64, f64)> = recs.iter().filter_map(|r| estimate(r, config, n, *q)).collect();
                if ests.is_empty() {
                    continue;
                }
                let detected: f64 = recs.iter().flat_map(|r| r.manifold_entries(n)).map(|e| e.calibrated).sum();
                let m = summarize(*dir, n, *q, &ests, detected);
                let stderr = if config.exact {
                    None
                } else {
                    let floor = (n as f64).powi(*q as i32) / detected;
                    Some(m.shot_se.max(floor))
                };
                entries.push(Observation { direction: *dir, order: *q, value: m.mean, stderr });
                empirical.push(m);
            }
        }
        observations.push(MomentObservations::new(Manifold::Single(n), entries));
    }
    Ok(ProtocolResult { observations, empirical, counts: records })
}

const COUNT_COLUMNS: [&str; 7] = ["run", "theta", "phi", "N", "k", "raw", "calibrated"];

pub fn write_counts<W: Write>(records: &[CountsRecord], config: &DetectorConfig, mut w: W) -> Result<()> {
    writeln!(w, "# trials: {}", config.trials)?;
    writeln!(w, "# runs: {}", config.runs)?;
    writeln!(w, "# seed: {}", config.seed)?;
    writeln!(w, "# exact: {}", config.exact)?;
    writeln!(w, "{}", COUNT_COLUMNS.join("\t"))?;
    for r in records {
        for e in &r.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.run,
                fmt12(r.direction.theta),
                fmt12(r.direction.phi),
                e.n,
                e.k,
                fmt12(e.raw),
                fmt12(e.calibrated)
            )?;
        }
    }
    Ok(())
}

pub fn write_counts_file(records: &[CountsRecord], config: &DetectorConfig, path: &Path) -> Result<()> {
    write_counts(records, config, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_state::{build, StateSpec};
    use crate::tomography::{protocol_directions, ThirdOrderVariant};
    use std::f64::consts::PI;

    fn fock(h: usize, v: usize) -> PolarizationState {
        build(&StateSpec::Fock { h, v }).unwrap()
    }

    fn probs(d: &OutcomeDistribution) -> Vec<f64> {
        d.outcomes.iter().map(|o| o.probability).collect()
    }

    #[test]
    fn distribution_examples() {
        let d = outcome_distribution(&fock(2, 0), &Direction::AXIS3);
        assert!((probs(&d)[2] - 1.0).abs() < 1e-12);
        let d = outcome_distribution(&fock(2, 0), &Direction::AXIS1);
        for (p, e) in probs(&d).iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-12);
        }
        let d = outcome_distribution(&fock(1, 1), &Direction::AXIS3);
        assert!((probs(&d)[1] - 1.0).abs() < 1e-12 && d.outcomes[1].stokes_value() == 0.0);
        let d = outcome_distribution(&fock(2, 1), &Direction::new(0.4, 2.0 * PI / 3.0));
        assert!((d.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_seeded_and_respects_zeros() {
        let d = outcome_distribution(&fock(2, 0), &Direction::AXIS3);
        let cfg = DetectorConfig { trials: 1000, ..DetectorConfig::unit() };
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let ra = sample_counts(&d, &cfg, &mut a, 0);
        assert_eq!(ra, sample_counts(&d, &cfg, &mut b, 0));
        assert_eq!(ra.entries[0].raw, 0.0);
        assert_eq!(ra.entries[1].raw, 0.0);
        assert_eq!(ra.entries[2].raw, 1000.0);
    }

    #[test]
    fn frequencies_within_binomial_bounds() {
        let d = outcome_distribution(&fock(2, 0), &Direction::AXIS1);
        let t = 1_000_000u64;
        let cfg = DetectorConfig { trials: t, ..DetectorConfig::unit() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = sample_counts(&d, &cfg, &mut rng, 0);
        for (e, o) in r.entries.iter().zip(&d.outcomes) {
            let sigma = (t as f64 * o.probability * (1.0 - o.probability)).sqrt();
            assert!((e.raw - t as f64 * o.probability).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn calibration_recovers_thinned_classes() {
        let d = outcome_distribution(&fock(2, 0), &Direction::AXIS1);
        let cfg = DetectorConfig { trials: 1_000_000, ..DetectorConfig::preset("eff20").unwrap() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = sample_counts(&d, &cfg, &mut rng, 0);
        let cal = calibrate(&raw, &cfg).unwrap();
        for (e, o) in cal.entries.iter().zip(&d.outcomes) {
            let expect = 1e6 * o.probability;
            assert!((e.calibrated - expect).abs() / expect < 0.01);
            let ratio = e.raw / expect;
            assert!((ratio - cfg.class_efficiency(o.n, o.k)).abs() < 0.01);
        }
        let half = DetectorConfig {
            class_efficiencies: vec![ClassEfficiency { n: 2, k: 1, efficiency: 0.5 }],
            ..DetectorConfig::unit()
        };
        let c = calibrate(&raw, &half).unwrap();
        assert_eq!(c.entries[1].calibrated, 2.0 * raw.entries[1].raw);
        assert_eq!(calibrate(&raw, &DetectorConfig::unit()).unwrap().entries[0].calibrated, raw.entries[0].raw);
    }

    #[test]
    fn exact_mode_is_noiseless() {
        let s = fock(1, 1);
        let plan = protocol_directions(2, ThirdOrderVariant::Tilted).unwrap();
        let cfg = DetectorConfig { exact: true, ..DetectorConfig::preset("eff11").unwrap() };
        let res = run_protocol(&s, &plan, &cfg).unwrap();
        let obs = res.observations_for(2).unwrap();
        let t = crate::moment_engine::moment_tensors(&s, Manifold::Single(2), 2).unwrap();
        for o in &obs.entries {
            assert!((o.value - t.raw_moment(&o.direction, o.order).unwrap()).abs() < 1e-10);
            assert!(o.stderr.is_none());
        }
        assert!(res.empirical.iter().all(|m| m.std_runs < 1e-12));
    }

    #[test]
    fn protocol_is_deterministic() {
        let s = build(&StateSpec::Unpolarized { n: 2 }).unwrap();
        let plan = protocol_directions(2, ThirdOrderVariant::Tilted).unwrap();
        let cfg = DetectorConfig { trials: 2000, seed: 9, ..DetectorConfig::preset("eff20").unwrap() };
        let a = run_protocol(&s, &plan, &cfg).unwrap();
        let b = run_protocol(&s, &plan, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.len(), 6 * 3);
    }
}
