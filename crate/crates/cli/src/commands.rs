use std::fs;
use std::path::Path;

use polarmoments::classifier::{classify_tensors, isotropy_from_tensors, Classification, IsotropyReport};
use polarmoments::experiment_sim::{run_protocol, write_counts_file, DetectorConfig, EmpiricalMoment};
use polarmoments::fock_state::{build, named_state};
use polarmoments::moment_engine::{
    default_selector, moment_tensors, multi_indices, sphere_scan, uncertainty_check, CovarianceMatrix, GridSpec,
    UncertaintyReport,
};
use polarmoments::tomography::{
    misalignment_fit, parameter_counts, protocol_directions, reconstruct, MisalignmentFit, MomentObservations,
    ReconstructionResult, ThirdOrderVariant,
};
use polarmoments::{Error, Manifold, MomentTensors, PolarizationState, Result, StateSpec, SymmetricPack};
use serde::Serialize;
use serde_json::Value;

use crate::output::Emitter;
use crate::{Cli, Command};

const VACUUM_NOTICE: &str = "vacuum has no polarization";

/// A state from a JSON file, inline JSON, or a named state.
pub fn load_state(arg: &str) -> Result<PolarizationState> {
    let path = Path::new(arg);
    if path.is_file() {
        return build(&StateSpec::from_json(&fs::read_to_string(path)?)?);
    }
    if arg.trim_start().starts_with('{') {
        return build(&StateSpec::from_json(arg)?);
    }
    named_state(arg)
}

fn selector(state: &PolarizationState, manifold: Option<&str>) -> Result<Manifold> {
    match manifold {
        Some(m) => m.parse(),
        None => Ok(default_selector(state)),
    }
}

fn check_order(r: u32) -> Result<()> {
    if r == 0 {
        Err(Error::InvalidOrder(0))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct PackEntry {
    index: [u32; 3],
    value: f64,
}

#[derive(Serialize)]
struct PackReport {
    order: u32,
    entries: Vec<PackEntry>,
}

fn pack_report(p: &SymmetricPack) -> PackReport {
    let entries = multi_indices(p.order)
        .into_iter()
        .zip(&p.values)
        .map(|(index, &value)| PackEntry { index, value })
        .collect();
    PackReport { order: p.order, entries }
}

#[derive(Serialize)]
struct MomentsReport {
    state_digest: String,
    manifold: String,
    r_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    notice: Option<&'static str>,
    stokes: [f64; 3],
    covariance: CovarianceMatrix,
    raw: Vec<PackReport>,
    central: Vec<PackReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncertainty: Option<UncertaintyReport>,
}

fn cmd_moments(em: &Emitter, state: &str, order: u32, manifold: Option<&str>, out: Option<&Path>) -> Result<()> {
    check_order(order)?;
    let state = load_state(state)?;
    let sel = selector(&state, manifold)?;
    let tensors = moment_tensors(&state, sel, order.max(2))?;
    let vacuum = sel == Manifold::Single(0);
    let uncertainty = match sel {
        Manifold::Single(n) if n > 0 => Some(uncertainty_check(&state, n)?),
        _ => None,
    };
    let report = MomentsReport {
        state_digest: state.digest(),
        manifold: sel.to_string(),
        r_max: order,
        notice: vacuum.then_some(VACUUM_NOTICE),
        stokes: tensors.stokes_vector(),
        covariance: tensors.covariance()?,
        raw: tensors.raw.iter().take(order as usize).map(pack_report).collect(),
        central: tensors.central.iter().take(order as usize).map(pack_report).collect(),
        uncertainty,
    };
    if vacuum {
        eprintln!("notice: {VACUUM_NOTICE}");
    }
    em.json(&report, out)
}

fn cmd_scan(state: &str, order: u32, grid: &str, manifold: Option<&str>, out: &Path) -> Result<()> {
    check_order(order)?;
    let state = load_state(state)?;
    let sel = selector(&state, manifold)?;
    let grid: GridSpec = grid.parse()?;
    sphere_scan(&state, sel, order, grid)?.write_file(out)
}

#[derive(Serialize)]
struct SimulateReport {
    state_digest: String,
    config: DetectorConfig,
    counts: String,
    observations: Vec<String>,
    empirical: Vec<EmpiricalMoment>,
}

struct SimulateArgs<'a> {
    state: &'a str,
    config: Option<&'a Path>,
    preset: Option<&'a str>,
    trials: Option<u64>,
    runs: Option<usize>,
    seed: Option<u64>,
    exact: bool,
    order: u32,
    variant: &'a str,
    out_dir: &'a Path,
}

fn cmd_simulate(em: &Emitter, a: SimulateArgs<'_>) -> Result<()> {
    check_order(a.order)?;
    let state = load_state(a.state)?;
    let mut cfg = match (a.config, a.preset) {
        (Some(path), _) => DetectorConfig::from_file(path)?,
        (None, Some(name)) => DetectorConfig::preset(name)?,
        (None, None) => DetectorConfig::unit(),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.exact |= a.exact;
    cfg.validate()?;
    let variant: ThirdOrderVariant = a.variant.parse()?;
    let plan = protocol_directions(a.order, variant)?;
    let result = run_protocol(&state, &plan, &cfg)?;

    fs::create_dir_all(a.out_dir)?;
    let counts = "counts.tsv".to_string();
    write_counts_file(&result.counts, &cfg, &a.out_dir.join(&counts))?;
    let mut observations = Vec::new();
    for obs in &result.observations {
        let name = match obs.manifold {
            Manifold::Single(n) => format!("observations-N{n}.tsv"),
            Manifold::Averaged => "observations-averaged.tsv".to_string(),
        };
        obs.write_file(&a.out_dir.join(&name))?;
        observations.push(name);
    }
    let report = SimulateReport {
        state_digest: state.digest(),
        config: cfg,
        counts,
        observations,
        empirical: result.empirical,
    };
    em.json(&report, Some(&a.out_dir.join("empirical.json")))
}

#[derive(Serialize)]
struct ReconstructReport {
    manifold: String,
    stokes: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    covariance: Option<CovarianceMatrix>,
    reconstruction: ReconstructionResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    misalignment: Option<MisalignmentFit>,
}

fn cmd_reconstruct(
    em: &Emitter,
    observations: &Path,
    order: Option<u32>,
    reference: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let obs = MomentObservations::read_file(observations)?;
    let r_max = order.unwrap_or_else(|| obs.max_order());
    check_order(r_max)?;
    let result = reconstruct(&obs, r_max)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let covariance = if r_max >= 2 { Some(result.tensors.covariance()?) } else { None };
    let misalignment = match reference {
        Some(spec) => {
            let reference = moment_tensors(&load_state(spec)?, obs.manifold, 2)?;
            Some(misalignment_fit(&result.tensors, &reference)?)
        }
        None => None,
    };
    let report = ReconstructReport {
        manifold: obs.manifold.to_string(),
        stokes: result.tensors.stokes_vector(),
        covariance,
        reconstruction: result,
        misalignment,
    };
    em.json(&report, out)
}

#[derive(Serialize)]
struct ClassifyReport {
    manifold: String,
    isotropy: IsotropyReport,
    class: Option<Classification>,
}

fn tensors_from_reconstruction(path: &Path) -> Result<MomentTensors> {
    let value: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let tensors = value
        .get("reconstruction")
        .and_then(|r| r.get("tensors"))
        .ok_or_else(|| Error::Parse(format!("{}: no reconstruction.tensors field", path.display())))?;
    Ok(serde_json::from_value(tensors.clone())?)
}

struct ClassifyArgs<'a> {
    state: Option<&'a str>,
    reconstruction: Option<&'a Path>,
    order: u32,
    manifold: Option<&'a str>,
    tolerance: f64,
    out: Option<&'a Path>,
}

fn cmd_classify(em: &Emitter, a: ClassifyArgs<'_>) -> Result<()> {
    check_order(a.order)?;
    if a.tolerance.is_nan() || a.tolerance <= 0.0 {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", a.tolerance)));
    }
    let tensors = match (a.state, a.reconstruction) {
        (Some(spec), _) => {
            let state = load_state(spec)?;
            let sel = selector(&state, a.manifold)?;
            moment_tensors(&state, sel, a.order)?
        }
        (None, Some(path)) => tensors_from_reconstruction(path)?,
        (None, None) => return Err(Error::InvalidConfig("need --state or --reconstruction".into())),
    };
    let isotropy = isotropy_from_tensors(&tensors, a.tolerance);
    let class = if tensors.manifold == Manifold::Single(3) && tensors.r_max >= 3 {
        Some(classify_tensors(&tensors, a.tolerance)?)
    } else {
        None
    };
    let report = ClassifyReport { manifold: tensors.manifold.to_string(), isotropy, class };
    em.json(&report, a.out)
}

pub fn run(cli: Cli) -> Result<()> {
    let em = Emitter { timestamp: cli.timestamp };
    match cli.command {
        Command::Moments { state, order, manifold, out } => {
            cmd_moments(&em, &state.state, order, manifold.as_deref(), out.as_deref())
        }
        Command::Scan { state, order, grid, manifold, out } => {
            cmd_scan(&state.state, order, &grid, manifold.as_deref(), &out)
        }
        Command::Simulate { state, config, preset, trials, runs, seed, exact, order, variant, out_dir } => cmd_simulate(
            &em,
            SimulateArgs {
                state: &state.state,
                config: config.as_deref(),
                preset: preset.as_deref(),
                trials,
                runs,
                seed,
                exact,
                order,
                variant: &variant,
                out_dir: &out_dir,
            },
        ),
        Command::Reconstruct { observations, order, reference, out } => {
            cmd_reconstruct(&em, &observations, order, reference.as_deref(), out.as_deref())
        }
        Command::Classify { state, reconstruction, order, manifold, tolerance, out } => cmd_classify(
            &em,
            ClassifyArgs {
                state: state.as_deref(),
                reconstruction: reconstruction.as_deref(),
                order,
                manifold: manifold.as_deref(),
                tolerance,
                out: out.as_deref(),
            },
        ),
        Command::Counts { n, out } => em.json(&parameter_counts(n)?, out.as_deref()),
    }
}
