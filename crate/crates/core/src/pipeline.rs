//! End-to-end runs: hypothesis screening, `M_f`, orbit, telescope and
//! the bound report.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bounds::{chi_lower_envelope, evaluate, BoundError, BoundParams, BoundReport, EnvelopeInput, EnvelopePoint};
use crate::cycles::{detect_basin, estimate_mf, find_cycles, BasinOptions, BasinResult, Cycle, CycleError, CycleSearch};
use crate::map::MapSpec;
use crate::numeric::format_complex;
use crate::orbit::{geometry_constants, iterate, GeometryConstants, IterateOptions, MfProvenance, Orbit, OrbitError};
use crate::telescope::{compute_tau, TelescopeError, TelescopeOptions, TelescopeResult};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("z0 lies in the basin of an attracting cycle of period {} (|multiplier| = {:.6})", .0.period, .0.multiplier.norm())]
    BasinDetected(Cycle),
    #[error(transparent)]
    Cycles(#[from] CycleError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Telescope(#[from] TelescopeError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub map: MapSpec,
    pub z0: Complex64,
    pub n: usize,
    pub telescope: TelescopeOptions,
    pub params: BoundParams,
    pub search: CycleSearch,
    pub basin: BasinOptions,
}

impl RunConfig {
    pub fn new(map: MapSpec, z0: Complex64, n: usize) -> Self {
        Self {
            map,
            z0,
            n,
            telescope: TelescopeOptions::default(),
            params: BoundParams::default(),
            search: CycleSearch::default(),
            basin: BasinOptions::default(),
        }
    }
}

/// Everything a telescope run produces.
#[derive(Debug, Clone)]
pub struct TelescopeRun {
    pub orbit: Orbit,
    pub constants: GeometryConstants,
    pub telescope: TelescopeResult,
}

#[derive(Debug, Clone)]
pub struct VerifyRun {
    pub run: TelescopeRun,
    pub report: BoundReport,
}

/// `M_f` from the cycles a grid search finds; always an upper bound.
pub fn estimate_m_f(map: &MapSpec, search: CycleSearch) -> Result<f64, PipelineError> {
    let cycles = find_cycles(map, search)?;
    Ok(estimate_mf(&cycles)?)
}

pub fn screen_basin(cfg: &RunConfig) -> Result<(), PipelineError> {
    match detect_basin(&cfg.map, cfg.z0, cfg.basin) {
        BasinResult::InBasin(c) => Err(PipelineError::BasinDetected(c)),
        BasinResult::NotDetected => Ok(()),
    }
}

/// Orbit, constants and telescope for a given `M_f`.
pub fn telescope_with(cfg: &RunConfig, n: usize, m_f: f64) -> Result<TelescopeRun, PipelineError> {
    let orbit = iterate(&cfg.map, cfg.z0, n, IterateOptions::default())?;
    let constants = geometry_constants(&cfg.map, &orbit, m_f)?.with_provenance(MfProvenance::UpperBound);
    let telescope = compute_tau(&cfg.map, &orbit, &constants, cfg.telescope)?;
    Ok(TelescopeRun {
        orbit,
        constants,
        telescope,
    })
}

pub fn run_telescope(cfg: &RunConfig) -> Result<TelescopeRun, PipelineError> {
    let m_f = estimate_m_f(&cfg.map, cfg.search)?;
    telescope_with(cfg, cfg.n, m_f)
}

/// Full verification: refuses basin orbits, then evaluates every claim.
pub fn verify(cfg: &RunConfig) -> Result<VerifyRun, PipelineError> {
    cfg.params.validate()?;
    screen_basin(cfg)?;
    let run = run_telescope(cfg)?;
    let report = evaluate(&cfg.map, &run.orbit, &run.telescope, &run.constants, &cfg.params, cfg.telescope)?;
    Ok(VerifyRun { run, report })
}

/// Lower envelope next to `chi_n` for each `n`, one telescope per `n`.
pub fn envelope_series(cfg: &RunConfig, ns: &[usize]) -> Result<Vec<EnvelopePoint>, PipelineError> {
    screen_basin(cfg)?;
    let m_f = estimate_m_f(&cfg.map, cfg.search)?;
    let inputs: Vec<EnvelopeInput> = ns
        .par_iter()
        .map(|&n| {
            let run = telescope_with(cfg, n, m_f)?;
            Ok(EnvelopeInput {
                n,
                rho_n: run.constants.rho_n,
                sum_m: run.telescope.m.iter().fold(0.0, |a, b| a + b),
                chi: run.orbit.chi(),
            })
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(chi_lower_envelope(&inputs))
}

#[derive(Serialize)]
struct RunHeader<'a> {
    map: String,
    z0: String,
    n: usize,
    constants: &'a GeometryConstants,
}

/// The JSON document written by `verify`.
pub fn report_json(cfg: &RunConfig, v: &VerifyRun) -> Value {
    let header = RunHeader {
        map: cfg.map.to_string(),
        z0: format_complex(cfg.z0),
        n: cfg.n,
        constants: &v.run.constants,
    };
    json!({
        "status": if v.report.passed() { "pass" } else { "fail" },
        "run": header,
        "claims": v.report.claims,
        "final": v.report.final_bounds,
    })
}

/// The JSON document written when a hypothesis fails.
pub fn hypothesis_failure_json(cfg: &RunConfig, err: &PipelineError) -> Value {
    let mut v = json!({
        "status": "hypothesis_failure",
        "run": { "map": cfg.map.to_string(), "z0": format_complex(cfg.z0), "n": cfg.n },
        "reason": err.to_string(),
    });
    if let PipelineError::BasinDetected(c) = err {
        v["cycle"] = json!({
            "period": c.period,
            "points": c.points.iter().map(|p| [p.re, p.im]).collect::<Vec<_>>(),
            "multiplier": [c.multiplier.re, c.multiplier.im],
        });
    }
    v
}
