//! Flat `key = value` run configuration. Command-line flags are folded in
//! as overrides, so both sources go through the same validation.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use pullback::bounds::{AnRule, BoundParams};
use pullback::cycles::CycleSearch;
use pullback::numeric::parse_complex;
use pullback::pipeline::RunConfig;
use pullback::telescope::TelescopeOptions;
use pullback::MapSpec;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "map",
    "z0",
    "n",
    "n_series",
    "precision_bits",
    "samples",
    "bisect_tol",
    "gamma",
    "C_abs",
    "c1",
    "c2",
    "c3",
    "c4",
    "c5",
    "c6",
    "a_n_rule",
    "max_period",
    "box",
    "grid",
    "format",
    "out",
    "jobs",
    "tail_json",
    "polylines",
    "c_re_range",
    "c_im_range",
    "c_steps",
    "r_min",
    "r_max",
    "points",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl Settings {
    /// Parses a config file body. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(usage(format!("config line {}: unknown key `{k}`", lineno + 1)));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(usage(format!("config line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>, overrides: &[(&str, Option<String>)]) -> Result<Self, CliError> {
        let mut s = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        for (k, v) in overrides {
            debug_assert!(KNOWN_KEYS.contains(k), "flag for unknown key {k}");
            if let Some(v) = v {
                s.values.insert((*k).to_string(), v.clone());
            }
        }
        Ok(s)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| usage(format!("invalid value for {key}: `{v}`"))))
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(usage(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn map(&self) -> Result<MapSpec, CliError> {
        let s = self.get("map").ok_or_else(|| usage("missing required `map`"))?;
        s.parse::<MapSpec>().map_err(|e| usage(format!("invalid map `{s}`: {e}")))
    }

    pub fn z0_or(&self, default: Option<Complex64>) -> Result<Complex64, CliError> {
        match self.get("z0") {
            Some(s) => parse_complex(s).ok_or_else(|| usage(format!("invalid z0 `{s}`"))),
            None => default.ok_or_else(|| usage("missing required `z0`")),
        }
    }

    pub fn n(&self) -> Result<usize, CliError> {
        let n: usize = self.parsed("n")?.ok_or_else(|| usage("missing required `n`"))?;
        if n == 0 {
            return Err(usage("n must be at least 1"));
        }
        Ok(n)
    }

    pub fn n_series(&self) -> Result<Option<Vec<usize>>, CliError> {
        let Some(s) = self.get("n_series") else {
            return Ok(None);
        };
        let ns: Vec<usize> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| usage(format!("invalid n_series entry `{t}`"))))
            .collect::<Result<_, _>>()?;
        if ns.is_empty() || ns.contains(&0) {
            return Err(usage("n_series must list positive integers"));
        }
        Ok(Some(ns))
    }

    pub fn format_or(&self, default: Format) -> Result<Format, CliError> {
        match self.get("format") {
            None => Ok(default),
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(other) => Err(usage(format!("format must be csv or json, got `{other}`"))),
        }
    }

    pub fn range(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        let Some(s) = self.get(key) else {
            return Ok(None);
        };
        let (a, b) = s.split_once(':').or_else(|| s.split_once(',')).ok_or_else(|| usage(format!("{key} must be lo:hi")))?;
        let parse = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        match (parse(a), parse(b)) {
            (Some(lo), Some(hi)) if lo <= hi => Ok(Some((lo, hi))),
            _ => Err(usage(format!("{key} must be lo:hi with lo <= hi"))),
        }
    }

    pub fn telescope_options(&self) -> Result<TelescopeOptions, CliError> {
        let bits = self.usize_or("precision_bits", 53)?;
        if bits != 53 {
            return Err(usage(format!(
                "precision_bits = {bits} unsupported: regions are traced in rescaled double precision (53 bits)"
            )));
        }
        let d = TelescopeOptions::default();
        let samples = self.usize_or("samples", d.samples)?;
        if samples < 8 {
            return Err(usage("samples must be at least 8"));
        }
        let bisect_tol = self.f64_or("bisect_tol", d.bisect_tol)?;
        if !(bisect_tol > 0.0 && bisect_tol <= 1e-2) {
            return Err(usage("bisect_tol must lie in (0, 1e-2]"));
        }
        Ok(TelescopeOptions {
            samples,
            bisect_tol,
            ..d
        })
    }

    pub fn bound_params(&self) -> Result<BoundParams, CliError> {
        let d = BoundParams::default();
        let mut c = d.c;
        for (k, slot) in c.iter_mut().enumerate() {
            *slot = self.f64_or(&format!("c{}", k + 1), *slot)?;
        }
        let a_n_rule = match self.get("a_n_rule") {
            Some(s) => s.parse::<AnRule>().map_err(usage)?,
            None => d.a_n_rule,
        };
        let p = BoundParams {
            gamma: self.f64_or("gamma", d.gamma)?,
            c_abs: self.f64_or("C_abs", d.c_abs)?,
            c,
            a_n_rule,
        };
        p.validate().map_err(|e| usage(e.to_string()))?;
        Ok(p)
    }

    pub fn cycle_search(&self) -> Result<CycleSearch, CliError> {
        let d = CycleSearch::default();
        let s = CycleSearch {
            max_period: self.usize_or("max_period", d.max_period)?,
            box_radius: self.f64_or("box", d.box_radius)?,
            grid: self.usize_or("grid", d.grid)?,
            ..d
        };
        if s.max_period == 0 || s.grid < 2 || s.box_radius.is_nan() || s.box_radius <= 0.0 {
            return Err(usage("cycle search needs max_period >= 1, grid >= 2, box > 0"));
        }
        Ok(s)
    }

    pub fn run_config(&self, n: usize) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::new(self.map()?, self.z0_or(None)?, n);
        cfg.telescope = self.telescope_options()?;
        cfg.params = self.bound_params()?;
        cfg.search = self.cycle_search()?;
        Ok(cfg)
    }

    pub fn jobs(&self) -> Result<usize, CliError> {
        let j = self.usize_or("jobs", 0)?;
        Ok(if j == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            j
        })
    }
}
