//! `pullback` command-line front end.
//!
//! Exit codes: 0 success, 1 a constant-free check failed, 2 usage or
//! configuration error, 3 a hypothesis of the derivative bound fails
//! (basin orbit, orbit through the singular value, escaping orbit),
//! 4 numerical failure.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use pullback::conformal::lambda_brackets;
use pullback::cycles::{cycles_to_json, detect_basin, estimate_mf, find_cycles, BasinOptions, BasinResult, CycleError};
use pullback::numeric::{fmt_f64, format_complex};
use pullback::orbit::{geometry_constants, iterate, IterateOptions, OrbitError, OrbitStatus};
use pullback::pipeline::{self, hypothesis_failure_json, report_json, PipelineError};
use pullback::telescope::{regions_to_json, tail_distribution, trace_pullback, TailDistribution, TelescopeError};
use pullback::{Family, MapSpec};
use serde_json::{json, Value};
use thiserror::Error;

use config::{Format, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    ChecksFailed(String),
    #[error("{0}")]
    Hypothesis(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<OrbitError> for CliError {
    fn from(e: OrbitError) -> Self {
        match e {
            OrbitError::DegenerateOrbit { .. } | OrbitError::Incomplete(_) => CliError::Hypothesis(e.to_string()),
            OrbitError::InvalidArgument(_) | OrbitError::Parse(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CycleError> for CliError {
    fn from(e: CycleError) -> Self {
        match e {
            CycleError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            CycleError::NoCycleFound => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<TelescopeError> for CliError {
    fn from(e: TelescopeError) -> Self {
        match e {
            TelescopeError::Orbit(o) => o.into(),
            TelescopeError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::BasinDetected(_) => CliError::Hypothesis(e.to_string()),
            PipelineError::Cycles(c) => c.into(),
            PipelineError::Orbit(o) => o.into(),
            PipelineError::Telescope(t) => t.into(),
            PipelineError::Bound(b) => CliError::Usage(b.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pullback", version, about = "Orbits, inverse-branch telescopes and derivative lower bounds for z^d + c and a e^z + c")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the map and write the orbit with running exponents.
    Orbit {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        cycles: CycleArgs,
    },
    /// Compute the telescope radii tau_i and moduli m_i.
    Telescope {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        tele: TelescopeArgs,
        #[command(flatten)]
        cycles: CycleArgs,
        /// Write the tail distribution F(m) as JSON to this path.
        #[arg(long)]
        tail_json: Option<String>,
        /// Write the traced pullbacks of the circle of radius tau_0 as JSON to this path.
        #[arg(long)]
        polylines: Option<String>,
    },
    /// Evaluate every claim and write the bound report.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        tele: TelescopeArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        cycles: CycleArgs,
    },
    /// Envelope series over n, or a basin map over a grid of c.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        tele: TelescopeArgs,
        #[command(flatten)]
        cycles: CycleArgs,
        /// Comma-separated list of n values.
        #[arg(long)]
        n_series: Option<String>,
        /// Real range of c as lo:hi.
        #[arg(long, allow_hyphen_values = true)]
        c_re_range: Option<String>,
        /// Imaginary range of c as lo:hi.
        #[arg(long, allow_hyphen_values = true)]
        c_im_range: Option<String>,
        /// Grid points per axis.
        #[arg(long)]
        c_steps: Option<String>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        jobs: Option<String>,
    },
    /// List periodic cycles and the resulting M_f estimate.
    Cycles {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        map: Option<String>,
        #[command(flatten)]
        cycles: CycleArgs,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Tabulate the brackets of the extremal modulus Lambda(R).
    LambdaTable {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        r_min: Option<String>,
        #[arg(long)]
        r_max: Option<String>,
        #[arg(long)]
        points: Option<String>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Map, e.g. poly:d=2,c=-2 or exp:a=1,c=0.
    #[arg(long, allow_hyphen_values = true)]
    pub map: Option<String>,
    /// Starting point, e.g. 2, -i, 0.3+0.02i.
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    /// Number of iterations.
    #[arg(long)]
    pub n: Option<String>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path (stdout when absent).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct TelescopeArgs {
    /// Initial samples on the traced circle.
    #[arg(long)]
    pub samples: Option<String>,
    /// Bisection tolerance on log tau.
    #[arg(long)]
    pub bisect_tol: Option<String>,
    /// Mantissa bits; only 53 is supported.
    #[arg(long)]
    pub precision_bits: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long = "C-abs")]
    pub c_abs: Option<String>,
    #[arg(long)]
    pub c1: Option<String>,
    #[arg(long)]
    pub c2: Option<String>,
    #[arg(long)]
    pub c3: Option<String>,
    #[arg(long)]
    pub c4: Option<String>,
    #[arg(long)]
    pub c5: Option<String>,
    #[arg(long)]
    pub c6: Option<String>,
    /// power_fifth, inverse_log or inverse_log_log.
    #[arg(long)]
    pub a_n_rule: Option<String>,
}

#[derive(Debug, Args)]
pub struct CycleArgs {
    /// Largest period searched for M_f.
    #[arg(long)]
    pub max_period: Option<String>,
    /// Half-width of the square seeded by the cycle search.
    #[arg(long = "box")]
    pub box_radius: Option<String>,
    /// Seeds per axis.
    #[arg(long)]
    pub grid: Option<String>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("map", self.map.clone()),
            ("z0", self.z0.clone()),
            ("n", self.n.clone()),
            ("format", self.format.clone()),
            ("out", self.out.clone()),
        ]
    }
}

impl TelescopeArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("samples", self.samples.clone()),
            ("bisect_tol", self.bisect_tol.clone()),
            ("precision_bits", self.precision_bits.clone()),
        ]
    }
}

impl BoundArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("gamma", self.gamma.clone()),
            ("C_abs", self.c_abs.clone()),
            ("c1", self.c1.clone()),
            ("c2", self.c2.clone()),
            ("c3", self.c3.clone()),
            ("c4", self.c4.clone()),
            ("c5", self.c5.clone()),
            ("c6", self.c6.clone()),
            ("a_n_rule", self.a_n_rule.clone()),
        ]
    }
}

impl CycleArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("max_period", self.max_period.clone()),
            ("box", self.box_radius.clone()),
            ("grid", self.grid.clone()),
        ]
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Output without an `out` path goes to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = write!(stdout, "{e}");
            CliError::Usage(String::new())
        }
        _ => CliError::Usage(e.to_string().trim_end().to_string()),
    });
    let cli = match cli {
        Err(CliError::Usage(msg)) if msg.is_empty() => return Ok(()),
        other => other?,
    };
    execute(cli.command, stdout)
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Orbit { run, cycles } => {
            let s = Settings::load(run.config.as_deref(), &[run.pairs(), cycles.pairs()].concat())?;
            cmd_orbit(&s, stdout)
        }
        Command::Telescope {
            run,
            tele,
            cycles,
            tail_json,
            polylines,
        } => {
            let mut pairs = [run.pairs(), tele.pairs(), cycles.pairs()].concat();
            pairs.push(("tail_json", tail_json));
            pairs.push(("polylines", polylines));
            let s = Settings::load(run.config.as_deref(), &pairs)?;
            cmd_telescope(&s, stdout)
        }
        Command::Verify { run, tele, bounds, cycles } => {
            let pairs = [run.pairs(), tele.pairs(), bounds.pairs(), cycles.pairs()].concat();
            let s = Settings::load(run.config.as_deref(), &pairs)?;
            cmd_verify(&s, stdout)
        }
        Command::Sweep {
            run,
            tele,
            cycles,
            n_series,
            c_re_range,
            c_im_range,
            c_steps,
            jobs,
        } => {
            let mut pairs = [run.pairs(), tele.pairs(), cycles.pairs()].concat();
            pairs.extend([
                ("n_series", n_series),
                ("c_re_range", c_re_range),
                ("c_im_range", c_im_range),
                ("c_steps", c_steps),
                ("jobs", jobs),
            ]);
            let s = Settings::load(run.config.as_deref(), &pairs)?;
            cmd_sweep(&s, stdout)
        }
        Command::Cycles {
            config,
            map,
            cycles,
            format,
            out,
        } => {
            let mut pairs = cycles.pairs();
            pairs.extend([("map", map), ("format", format), ("out", out)]);
            let s = Settings::load(config.as_deref(), &pairs)?;
            cmd_cycles(&s, stdout)
        }
        Command::LambdaTable {
            config,
            r_min,
            r_max,
            points,
            format,
            out,
        } => {
            let pairs = vec![
                ("r_min", r_min),
                ("r_max", r_max),
                ("points", points),
                ("format", format),
                ("out", out),
            ];
            let s = Settings::load(config.as_deref(), &pairs)?;
            cmd_lambda_table(&s, stdout)
        }
    }
}

fn emit(path: Option<&str>, body: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(Path::new(p), body).map_err(|e| CliError::Usage(format!("cannot write {p}: {e}"))),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn cmd_orbit(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let map = s.map()?;
    let z0 = s.z0_or(None)?;
    let n = s.n()?;
    let format = s.format_or(Format::Csv)?;
    let search = s.cycle_search()?;
    let orbit = iterate(&map, z0, n, IterateOptions::default())?;
    if let OrbitStatus::Overflowed { step } = orbit.status {
        return Err(CliError::Hypothesis(format!("orbit escaped at step {step}")));
    }
    let body = match format {
        Format::Csv => orbit.to_csv(&map),
        Format::Json => {
            // constants need M_f and a non-degenerate orbit; report null otherwise
            let constants = estimate_mf(&find_cycles(&map, search)?)
                .ok()
                .and_then(|m_f| geometry_constants(&map, &orbit, m_f).ok());
            json_text(&json!({
                "map": map.to_string(),
                "z0": format_complex(z0),
                "n": n,
                "z": orbit.z.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "log_abs_deriv": orbit.log_abs_deriv,
                "chi_n": orbit.chi(),
                "constants": constants,
            }))
        }
    };
    emit(s.get("out"), &body, stdout)
}

fn tail_json(tail: &TailDistribution, m_max: f64) -> Value {
    let grid = pullback::bounds::log_grid(1e-3, m_max, 200);
    json!({
        "n": tail.n,
        "sorted_m": tail.sorted_m,
        "integral": tail.integral(),
        "max_m": tail.max_m(),
        "F": grid.iter().map(|&m| json!([m, tail.eval(m)])).collect::<Vec<_>>(),
    })
}

fn cmd_telescope(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = s.run_config(s.n()?)?;
    let format = s.format_or(Format::Csv)?;
    let run = pipeline::run_telescope(&cfg)?;
    let tail = tail_distribution(&run.telescope);
    let tail_doc = tail_json(&tail, run.constants.m_max);
    if let Some(p) = s.get("tail_json") {
        emit(Some(p), &json_text(&tail_doc), stdout)?;
    }
    if let Some(p) = s.get("polylines") {
        let regions = trace_pullback(&cfg.map, &run.orbit, None, 0, run.telescope.tau[0], cfg.telescope)?;
        emit(Some(p), &json_text(&regions_to_json(&regions)), stdout)?;
    }
    let body = match format {
        Format::Csv => run.telescope.to_csv(),
        Format::Json => json_text(&json!({
            "map": cfg.map.to_string(),
            "z0": format_complex(cfg.z0),
            "constants": run.constants,
            "telescope": run.telescope,
            "telescoping_residual": run.telescope.telescoping_residual(),
            "tail": tail_doc,
        })),
    };
    emit(s.get("out"), &body, stdout)
}

fn cmd_verify(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = s.run_config(s.n()?)?;
    let format = s.format_or(Format::Json)?;
    let v = match pipeline::verify(&cfg) {
        Ok(v) => v,
        Err(e @ (PipelineError::BasinDetected(_) | PipelineError::Orbit(_))) => {
            let err: CliError = match &e {
                PipelineError::Orbit(o) => o.clone().into(),
                _ => CliError::Hypothesis(e.to_string()),
            };
            if let CliError::Hypothesis(_) = err {
                emit(s.get("out"), &json_text(&hypothesis_failure_json(&cfg, &e)), stdout)?;
            }
            return Err(err);
        }
        Err(e) => return Err(e.into()),
    };
    let body = match format {
        Format::Json => json_text(&report_json(&cfg, &v)),
        Format::Csv => {
            let mut out = String::from("claim_id,pass,vacuous,gating,measured_margin\n");
            for c in &v.report.claims {
                let margin = c.measured_margin.map(fmt_f64).unwrap_or_default();
                out.push_str(&format!("{},{},{},{},{margin}\n", c.claim_id, c.pass, c.vacuous, c.gating));
            }
            out
        }
    };
    emit(s.get("out"), &body, stdout)?;
    let failures = v.report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        let ids: Vec<&str> = failures.iter().map(|c| c.claim_id.as_str()).collect();
        Err(CliError::ChecksFailed(format!("failed checks: {}", ids.join(", "))))
    }
}

fn with_c(template: &MapSpec, c: Complex64) -> Result<MapSpec, CliError> {
    match template.family() {
        Family::UnicriticalPoly { degree, .. } => MapSpec::unicritical(degree, c),
        Family::Exponential { a, .. } => MapSpec::exponential(a, c),
    }
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_sweep(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let jobs = s.jobs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let format = s.format_or(Format::Csv)?;
    if let Some(ns) = s.n_series()? {
        let max_n = *ns.iter().max().expect("non-empty");
        let cfg = s.run_config(max_n)?;
        let mut env = pool.install(|| pipeline::envelope_series(&cfg, &ns))?;
        env.sort_by_key(|p| p.n);
        let body = match format {
            Format::Csv => {
                let mut out = String::from("n,chi_n,envelope\n");
                for p in &env {
                    out.push_str(&format!("{},{},{}\n", p.n, fmt_f64(p.chi), fmt_f64(p.envelope)));
                }
                out
            }
            Format::Json => json_text(&json!({ "map": cfg.map.to_string(), "z0": format_complex(cfg.z0), "series": env })),
        };
        return emit(s.get("out"), &body, stdout);
    }
    let (Some(re), Some(im)) = (s.range("c_re_range")?, s.range("c_im_range")?) else {
        return Err(CliError::Usage("sweep needs n_series or both c_re_range and c_im_range".into()));
    };
    let steps = s.usize_or("c_steps", 0)?;
    if steps == 0 {
        return Err(CliError::Usage("empty parameter grid: c_steps must be positive".into()));
    }
    let template = match s.get("map") {
        Some(_) => s.map()?,
        None => MapSpec::unicritical(2, Complex64::new(0.0, 0.0)).expect("valid"),
    };
    let z0 = s.z0_or(Some(Complex64::new(0.0, 0.0)))?;
    let axis = |(lo, hi): (f64, f64), k: usize| {
        if steps == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (steps - 1) as f64
        }
    };
    let points: Vec<(usize, usize)> = (0..steps).flat_map(|j| (0..steps).map(move |k| (j, k))).collect();
    let rows: Vec<Result<String, CliError>> = pool.install(|| {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|&(j, k)| {
                let c = Complex64::new(axis(re, k), axis(im, j));
                let f = with_c(&template, c)?;
                let row = match detect_basin(&f, z0, BasinOptions::default()) {
                    BasinResult::InBasin(cyc) => {
                        format!("{},{},1,{},{}\n", fmt_f64(c.re), fmt_f64(c.im), cyc.period, fmt_f64(cyc.multiplier.norm()))
                    }
                    BasinResult::NotDetected => format!("{},{},0,,\n", fmt_f64(c.re), fmt_f64(c.im)),
                };
                Ok(row)
            })
            .collect()
    });
    let mut body = String::from("c_re,c_im,basin,period,multiplier_abs\n");
    for r in rows {
        body.push_str(&r?);
    }
    emit(s.get("out"), &body, stdout)
}

fn cmd_cycles(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let map = s.map()?;
    let cycles = find_cycles(&map, s.cycle_search()?)?;
    let m_f = estimate_mf(&cycles).ok();
    let body = match s.format_or(Format::Json)? {
        Format::Json => json_text(&json!({
            "map": map.to_string(),
            "cycles": cycles_to_json(&cycles),
            "M_f": m_f,
            "M_f_provenance": "UpperBound",
        })),
        Format::Csv => {
            let mut out = String::from("period,k,re,im,multiplier_re,multiplier_im,max_modulus\n");
            for c in &cycles {
                for (k, p) in c.points.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{k},{},{},{},{},{}\n",
                        c.period,
                        fmt_f64(p.re),
                        fmt_f64(p.im),
                        fmt_f64(c.multiplier.re),
                        fmt_f64(c.multiplier.im),
                        fmt_f64(c.max_modulus)
                    ));
                }
            }
            out
        }
    };
    emit(s.get("out"), &body, stdout)
}

fn cmd_lambda_table(s: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let r_min = s.f64_or("r_min", 1.001)?;
    let r_max = s.f64_or("r_max", 1000.0)?;
    let points = s.usize_or("points", 100)?;
    if !(r_min > 1.0 && r_max >= r_min) || points < 2 {
        return Err(CliError::Usage("lambda-table needs 1 < r_min <= r_max and points >= 2".into()));
    }
    let grid = pullback::bounds::log_grid(r_min, r_max, points);
    let rows: Vec<(f64, f64, f64)> = grid
        .iter()
        .map(|&r| {
            let (lo, hi) = lambda_brackets(r).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((r, lo, hi))
        })
        .collect::<Result<_, CliError>>()?;
    let body = match s.format_or(Format::Csv)? {
        Format::Csv => {
            let mut out = String::from("R,lambda_lower,lambda_upper\n");
            for (r, lo, hi) in rows {
                out.push_str(&format!("{},{},{}\n", fmt_f64(r), fmt_f64(lo), fmt_f64(hi)));
            }
            out
        }
        Format::Json => json_text(&json!(rows.iter().map(|&(r, lo, hi)| json!({"R": r, "lower": lo, "upper": hi})).collect::<Vec<_>>())),
    };
    emit(s.get("out"), &body, stdout)
}
