//! Periodic-point search, attracting-basin detection and the `M_f`
//! estimate built from found cycles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{MapError, MapSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error("no cycle found; widen the search box or raise the grid density")]
    NoCycleFound,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub points: Vec<Complex64>,
    pub period: usize,
    pub multiplier: Complex64,
    pub max_modulus: f64,
}

impl Cycle {
    /// Builds the cycle through `start` of the given period.
    pub fn through(map: &MapSpec, start: Complex64, period: usize) -> Result<Cycle, MapError> {
        let mut points = Vec::with_capacity(period);
        let mut multiplier = Complex64::new(1.0, 0.0);
        let mut z = start;
        for _ in 0..period {
            points.push(z);
            multiplier *= map.deriv(z)?;
            z = map.eval(z)?;
        }
        let max_modulus = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        Ok(Cycle {
            points,
            period,
            multiplier,
            max_modulus,
        })
    }

    pub fn is_attracting(&self, margin: f64) -> bool {
        self.multiplier.norm() < 1.0 - margin
    }

    fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.points.iter().any(|p| (p - z).norm() <= tol * (1.0 + p.norm()))
    }
}

/// Settings for Newton refinement of `f^p(z) = z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_steps: usize,
    pub residual_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_steps: 200,
            residual_tol: 1e-12,
        }
    }
}

/// `(f^p(z) - z, (f^p)'(z) - 1)`.
fn periodic_residual(map: &MapSpec, z: Complex64, period: usize) -> Option<(Complex64, Complex64)> {
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..period {
        d *= map.deriv(w).ok()?;
        w = map.eval(w).ok()?;
    }
    let r = w - z;
    (r.is_finite() && d.is_finite()).then_some((r, d - 1.0))
}

/// Damped Newton iteration for a point of period dividing `period`.
pub fn refine_periodic_point(map: &MapSpec, seed: Complex64, period: usize, opts: NewtonOptions) -> Option<Complex64> {
    let mut z = seed;
    let (mut r, mut dr) = periodic_residual(map, z, period)?;
    for _ in 0..opts.max_steps {
        if r.norm() < opts.residual_tol * z.norm().max(1.0) {
            return Some(polish(map, z, r, dr, period));
        }
        if dr.norm() == 0.0 {
            return None;
        }
        let step = r / dr;
        let mut lambda = 1.0;
        loop {
            let cand = z - step * lambda;
            match periodic_residual(map, cand, period) {
                Some((rc, dc)) if rc.norm() < r.norm() => {
                    z = cand;
                    r = rc;
                    dr = dc;
                    break;
                }
                _ if lambda < 1e-6 => {
                    // No descent: accept the full step to escape a plateau.
                    z -= step;
                    let (rc, dc) = periodic_residual(map, z, period)?;
                    r = rc;
                    dr = dc;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
    }
    (r.norm() < opts.residual_tol * z.norm().max(1.0)).then_some(z)
}

/// A few undamped Newton steps past the tolerance, kept while the
/// residual keeps shrinking.
fn polish(map: &MapSpec, mut z: Complex64, mut r: Complex64, mut dr: Complex64, period: usize) -> Complex64 {
    for _ in 0..4 {
        if r.norm() == 0.0 || dr.norm() == 0.0 {
            break;
        }
        let cand = z - r / dr;
        match periodic_residual(map, cand, period) {
            Some((rc, dc)) if rc.norm() < r.norm() => {
                z = cand;
                r = rc;
                dr = dc;
            }
            _ => break,
        }
    }
    z
}

/// Square search region `[-radius, radius]^2` seeded on a `grid x grid` lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSearch {
    pub max_period: usize,
    pub box_radius: f64,
    pub grid: usize,
    pub newton: NewtonOptions,
}

impl Default for CycleSearch {
    fn default() -> Self {
        Self {
            max_period: 4,
            box_radius: 4.0,
            grid: 64,
            newton: NewtonOptions::default(),
        }
    }
}

fn minimal_period(map: &MapSpec, z: Complex64, period: usize, tol: f64) -> Option<usize> {
    let mut w = z;
    for q in 1..=period {
        w = map.eval(w).ok()?;
        if period.is_multiple_of(q) && (w - z).norm() <= tol * (1.0 + z.norm()) {
            return Some(q);
        }
    }
    None
}

pub fn find_cycles(map: &MapSpec, search: CycleSearch) -> Result<Vec<Cycle>, CycleError> {
    if search.max_period == 0 {
        return Err(CycleError::InvalidArgument("max_period must be at least 1".into()));
    }
    if search.grid < 1 || !(search.box_radius > 0.0) {
        return Err(CycleError::InvalidArgument("empty search box".into()));
    }
    let g = search.grid;
    let seeds: Vec<Complex64> = (0..g * g)
        .map(|k| {
            let (ix, iy) = (k % g, k / g);
            let t = |i: usize| {
                if g == 1 {
                    0.0
                } else {
                    -search.box_radius + 2.0 * search.box_radius * i as f64 / (g - 1) as f64
                }
            };
            Complex64::new(t(ix), t(iy))
        })
        .collect();
    let dedup_tol = 1e-8;
    let mut cycles: Vec<Cycle> = Vec::new();
    for period in 1..=search.max_period {
        let roots: Vec<Option<Complex64>> = seeds
            .par_iter()
            .map(|&s| refine_periodic_point(map, s, period, search.newton))
            .collect();
        for z in roots.into_iter().flatten() {
            if minimal_period(map, z, period, dedup_tol) != Some(period) {
                continue;
            }
            if cycles
                .iter()
                .any(|c| c.period == period && c.contains(z, dedup_tol))
            {
                continue;
            }
            if let Ok(c) = Cycle::through(map, z, period) {
                cycles.push(c);
            }
        }
    }
    if cycles.is_empty() {
        return Err(CycleError::NoCycleFound);
    }
    for c in &mut cycles {
        canonicalize(c);
    }
    cycles.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then(a.max_modulus.total_cmp(&b.max_modulus))
            .then(a.points[0].re.total_cmp(&b.points[0].re))
            .then(a.points[0].im.total_cmp(&b.points[0].im))
    });
    Ok(cycles)
}

// Rotate so the cycle starts at its lexicographically smallest point.
fn canonicalize(c: &mut Cycle) {
    let start = (0..c.points.len())
        .min_by(|&i, &j| {
            let (a, b) = (c.points[i], c.points[j]);
            a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
        })
        .unwrap_or(0);
    c.points.rotate_left(start);
}

/// `min (max |p| + 1)` over the given cycles: an upper bound for `M_f`.
pub fn estimate_mf(cycles: &[Cycle]) -> Result<f64, CycleError> {
    cycles
        .iter()
        .map(|c| c.max_modulus + 1.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| CycleError::InvalidArgument("no cycles supplied".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    pub max_iter: usize,
    /// Successive period blocks must agree to this tolerance.
    pub block_tol: f64,
    /// Number of consecutive agreeing blocks.
    pub blocks: usize,
    pub max_period: usize,
    /// Attracting means `|multiplier| < 1 - multiplier_margin`.
    pub multiplier_margin: f64,
    pub escape_radius: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            block_tol: 1e-9,
            blocks: 50,
            max_period: 32,
            multiplier_margin: 1e-6,
            escape_radius: 1e100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasinResult {
    InBasin(Cycle),
    /// No convergence to an attracting cycle was observed. This never
    /// certifies that `z0` lies outside every basin.
    NotDetected,
}

pub fn detect_basin(map: &MapSpec, z0: Complex64, opts: BasinOptions) -> BasinResult {
    let mut orbit = Vec::with_capacity(opts.max_iter + 1);
    orbit.push(z0);
    let check_every = 256;
    for step in 1..=opts.max_iter {
        let next = match map.eval(orbit[step - 1]) {
            Ok(w) if w.norm() <= opts.escape_radius => w,
            _ => return BasinResult::NotDetected,
        };
        orbit.push(next);
        if step % check_every == 0 || step == opts.max_iter {
            if let Some(result) = tail_cycle(map, &orbit, &opts) {
                return result;
            }
        }
    }
    BasinResult::NotDetected
}

fn tail_cycle(map: &MapSpec, orbit: &[Complex64], opts: &BasinOptions) -> Option<BasinResult> {
    let k = orbit.len() - 1;
    for p in 1..=opts.max_period {
        let span = opts.blocks * p;
        if k < span + p {
            break;
        }
        let settled = (k - span + 1..=k).all(|j| {
            let (a, b) = (orbit[j], orbit[j - p]);
            (a - b).norm() < opts.block_tol * (1.0 + a.norm())
        });
        if !settled {
            continue;
        }
        let start = refine_periodic_point(map, orbit[k], p, NewtonOptions::default()).unwrap_or(orbit[k]);
        let p = minimal_period(map, start, p, 1e-8).unwrap_or(p);
        let mut cycle = Cycle::through(map, start, p).ok()?;
        canonicalize(&mut cycle);
        return Some(if cycle.is_attracting(opts.multiplier_margin) {
            BasinResult::InBasin(cycle)
        } else {
            BasinResult::NotDetected
        });
    }
    None
}

/// JSON array `[{period, points: [[re, im]...], multiplier: [re, im], max_modulus}]`.
pub fn cycles_to_json(cycles: &[Cycle]) -> serde_json::Value {
    serde_json::Value::Array(
        cycles
            .iter()
            .map(|c| {
                serde_json::json!({
                    "period": c.period,
                    "points": c.points.iter().map(|p| [p.re, p.im]).collect::<Vec<_>>(),
                    "multiplier": [c.multiplier.re, c.multiplier.im],
                    "max_modulus": c.max_modulus,
                })
            })
            .collect(),
    )
}
