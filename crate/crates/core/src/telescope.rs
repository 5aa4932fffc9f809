//! The telescope: maximal radii `tau_i` such that the orbit branch of
//! `f^{-(n-i)}` extends univalently over `B(z_n, tau_i)`, the moduli
//! `m_i = log(tau_{i+1}/tau_i)`, and their tail distribution.
//!
//! Regions are traced by pulling back a sampled circle `∂B(z_n, t)`
//! (plus a radial spoke from `z_n` that pins the branch) one level at a
//! time. Each level is stored in orbit-relative coordinates
//! `z_l + e^{L_l} ζ` with `L_l = log t - log |(f^{n-l})'(z_l)|`, so
//! regions far below `|z_l| · eps` keep full relative precision.
//!
//! Both implemented families have a single singular value `c`, and a
//! pullback over a simply connected region exists iff the region avoids
//! `c`. The radius `tau_i` is therefore the largest `t <= tau_{i+1}` for
//! which no traced region at levels `i+1..=n` encloses `c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{ContinuationTol, MapError, MapSpec};
use crate::numeric::{distance_to_polyline, distance_to_segment, fmt_f64, winding_number};
use crate::orbit::{GeometryConstants, Orbit, OrbitError, OrbitStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelescopeError {
    #[error("singular value enclosed by the traced region at level {level}")]
    SingularCrossed { level: usize },
    #[error("ambiguous inverse branch at level {level}")]
    AmbiguousBranch { level: usize },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("Koebe consistency violated: log|(f^n)'(z_0)| = {lhs} < {rhs}")]
    KoebeInconsistent { lhs: f64, rhs: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeOptions {
    /// Initial number of samples on the circle.
    pub samples: usize,
    /// Relative tolerance of the bisection on each `tau_i`.
    pub bisect_tol: f64,
    /// Guard band, as a fraction of `delta_n`, within which a traced
    /// boundary passing the singular value counts as enclosing it.
    pub containment_rel: f64,
    /// Adjacent boundary samples are kept closer than this fraction of
    /// the region's diameter.
    pub gap_fraction: f64,
    pub max_points: usize,
    pub continuation: ContinuationTol,
}

impl Default for TelescopeOptions {
    fn default() -> Self {
        Self {
            samples: 256,
            bisect_tol: 1e-9,
            containment_rel: 1e-10,
            gap_fraction: 1e-2,
            max_points: 1 << 20,
            continuation: ContinuationTol::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopeResult {
    pub n: usize,
    /// `tau_0 ..= tau_n`. `tau_n = delta_n`.
    pub tau: Vec<f64>,
    /// `log tau_i`, authoritative when `tau_i` underflows.
    pub log_tau: Vec<f64>,
    /// `m_i = log tau_{i+1} - log tau_i`, `i < n`.
    pub m: Vec<f64>,
    /// Mantissa bits of the arithmetic used for the trace.
    pub precision_bits: u32,
}

impl TelescopeResult {
    /// `|log tau_0 - (log delta_n - sum m_i)|`.
    pub fn telescoping_residual(&self) -> f64 {
        let sum: f64 = self.m.iter().sum();
        (self.log_tau[0] - (self.log_tau[self.n] - sum)).abs()
    }

    /// CSV `i, tau_i, m_i`; the last row has an empty `m_i`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,tau_i,m_i\n");
        for i in 0..=self.n {
            let m = self.m.get(i).map(|&m| fmt_f64(m)).unwrap_or_default();
            out.push_str(&format!("{i},{},{m}\n", fmt_f64(self.tau[i])));
        }
        out
    }
}

/// A traced pullback of `∂B(z_n, t)` at one level, stored as offsets
/// `center + e^{log_scale} * offsets[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackRegion {
    pub level: usize,
    pub center: Complex64,
    pub log_scale: f64,
    pub offsets: Vec<Complex64>,
}

impl PullbackRegion {
    /// Boundary in absolute coordinates. Lossy once the region is below
    /// the resolution of `center`.
    pub fn boundary(&self) -> Vec<Complex64> {
        let s = self.log_scale.exp();
        self.offsets.iter().map(|w| self.center + w * s).collect()
    }

    /// Distance from the center to the traced boundary.
    pub fn inner_radius(&self) -> f64 {
        distance_to_polyline(Complex64::new(0.0, 0.0), &self.offsets) * self.log_scale.exp()
    }

    /// Boundary offsets rescaled to `e^{log_scale}` units.
    pub fn offsets_in_scale(&self, log_scale: f64) -> Vec<Complex64> {
        let r = (self.log_scale - log_scale).exp();
        self.offsets.iter().map(|w| w * r).collect()
    }

    pub fn winding_around(&self, p: Complex64) -> i32 {
        let q = (p - self.center) * (-self.log_scale).exp();
        winding_number(q, &self.offsets)
    }
}

#[derive(Debug, Clone)]
struct PathPoint {
    /// Path parameter: `[0, 1]` is the spoke, `[1, 2]` the circle.
    u: f64,
    /// `chain[n - l]` is the offset at level `l`.
    chain: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct Trace {
    log_t: f64,
    level: usize,
    points: Vec<PathPoint>,
}

struct Tracer<'a> {
    map: &'a MapSpec,
    z: &'a [Complex64],
    /// `suffix[l] = log |(f^{n-l})'(z_l)|`.
    suffix: Vec<f64>,
    n: usize,
    c: Complex64,
    guard_abs: f64,
    opts: TelescopeOptions,
}

fn level_n_offset(u: f64) -> Complex64 {
    if u <= 1.0 {
        Complex64::new(u, 0.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * (u - 1.0))
    }
}

impl<'a> Tracer<'a> {
    fn new(map: &'a MapSpec, orbit: &'a Orbit, delta_n: f64, opts: TelescopeOptions) -> Result<Self, TelescopeError> {
        if orbit.status != OrbitStatus::Complete {
            return Err(OrbitError::Incomplete(orbit.status).into());
        }
        if opts.samples < 8 {
            return Err(TelescopeError::InvalidArgument("samples must be at least 8".into()));
        }
        if !(opts.bisect_tol > 0.0) {
            return Err(TelescopeError::InvalidArgument("bisect_tol must be positive".into()));
        }
        let n = orbit.n();
        let mut suffix = vec![0.0; n + 1];
        for l in (0..n).rev() {
            suffix[l] = suffix[l + 1] + orbit.log_abs_deriv[l];
        }
        if suffix.iter().any(|s| !s.is_finite()) {
            return Err(OrbitError::DegenerateOrbit { step: 0 }.into());
        }
        Ok(Self {
            map,
            z: &orbit.z,
            suffix,
            n,
            c: map.c(),
            guard_abs: opts.containment_rel * delta_n,
            opts,
        })
    }

    fn log_scale(&self, log_t: f64, level: usize) -> f64 {
        log_t - self.suffix[level]
    }

    fn start(&self, log_t: f64) -> Result<Trace, TelescopeError> {
        let samples = self.opts.samples;
        let spoke = (samples / 4).max(4);
        let mut points: Vec<PathPoint> = (0..spoke)
            .map(|j| j as f64 / spoke as f64)
            .chain((0..=samples).map(|j| 1.0 + j as f64 / samples as f64))
            .map(|u| PathPoint {
                u,
                chain: vec![level_n_offset(u)],
            })
            .collect();
        points[0].chain[0] = Complex64::new(0.0, 0.0);
        let mut trace = Trace {
            log_t,
            level: self.n,
            points,
        };
        let seps = vec![f64::INFINITY; trace.points.len()];
        self.refine(&mut trace, seps)?;
        Ok(trace)
    }

    /// Offset of the singular value at `level`, if it is within reach.
    fn scaled_singular(&self, log_t: f64, level: usize) -> Option<Complex64> {
        let d = self.c - self.z[level];
        let ls = self.log_scale(log_t, level);
        if d.norm().ln() - ls > 600.0 {
            return None;
        }
        Some(d * (-ls).exp())
    }

    fn pull(&self, log_t: f64, level: usize, offset: Complex64, reference: Complex64) -> Result<(Complex64, f64), TelescopeError> {
        let r = self
            .map
            .pull_back_offset(
                self.z[level - 1],
                self.z[level],
                self.log_scale(log_t, level),
                self.log_scale(log_t, level - 1),
                offset,
                reference,
                self.opts.continuation,
            )
            .map_err(|e| match e {
                MapError::AmbiguousBranch => TelescopeError::AmbiguousBranch { level: level - 1 },
                MapError::SingularHit => TelescopeError::SingularCrossed { level },
                other => TelescopeError::Map(other),
            })?;
        if !r.offset.is_finite() {
            return Err(TelescopeError::PrecisionExhausted(format!(
                "non-finite offset at level {}",
                level - 1
            )));
        }
        Ok((r.offset, r.separation))
    }

    /// Chain of a new path point from level `n` down to `to_level`,
    /// continued alongside its left neighbour.
    fn new_point(&self, log_t: f64, u: f64, left: &PathPoint, to_level: usize) -> Result<(PathPoint, f64), TelescopeError> {
        let mut chain = Vec::with_capacity(self.n - to_level + 1);
        chain.push(level_n_offset(u));
        let mut sep = f64::INFINITY;
        for level in (to_level + 1..=self.n).rev() {
            let k = self.n - level;
            let (w, s) = self.pull(log_t, level, chain[k], left.chain[k + 1])?;
            chain.push(w);
            sep = s;
        }
        Ok((PathPoint { u, chain }, sep))
    }

    fn step_down(&self, trace: &mut Trace) -> Result<(), TelescopeError> {
        let level = trace.level;
        let k = self.n - level;
        let mut seps = Vec::with_capacity(trace.points.len());
        let mut prev = Complex64::new(0.0, 0.0);
        for (j, p) in trace.points.iter_mut().enumerate() {
            let (w, s) = if j == 0 {
                // the spoke starts at the orbit point itself
                self.pull(trace.log_t, level, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))?
            } else {
                self.pull(trace.log_t, level, p.chain[k], prev)?
            };
            p.chain.push(w);
            seps.push(s);
            prev = w;
        }
        trace.level = level - 1;
        self.refine(trace, seps)
    }

    fn refine(&self, trace: &mut Trace, mut seps: Vec<f64>) -> Result<(), TelescopeError> {
        let level = trace.level;
        let k = self.n - level;
        let sigma = self.scaled_singular(trace.log_t, level);
        let guard = self.guard_abs * (-self.log_scale(trace.log_t, level)).exp();
        loop {
            let diam = circle_diameter(&trace.points, k);
            if !(diam > 0.0) || !diam.is_finite() {
                return Err(TelescopeError::PrecisionExhausted(format!(
                    "degenerate traced region at level {level}"
                )));
            }
            let mut inserts: Vec<usize> = Vec::new();
            for j in 0..trace.points.len() - 1 {
                let (a, b) = (&trace.points[j], &trace.points[j + 1]);
                let (wa, wb) = (a.chain[k], b.chain[k]);
                let gap = (wb - wa).norm();
                let mut violated = gap > self.opts.gap_fraction * diam || gap > 0.25 * seps[j].min(seps[j + 1]);
                if !violated && a.u >= 1.0 {
                    if let Some(s) = sigma {
                        let d = distance_to_segment(s, wa, wb);
                        violated = d > guard && d < diam && gap > 0.5 * (d * diam).sqrt();
                    }
                }
                if violated {
                    if b.u - a.u < 1e-13 {
                        return Err(TelescopeError::PrecisionExhausted(format!(
                            "path parameter exhausted at level {level}"
                        )));
                    }
                    inserts.push(j);
                }
            }
            if inserts.is_empty() {
                return Ok(());
            }
            if trace.points.len() + inserts.len() > self.opts.max_points {
                return Err(TelescopeError::PrecisionExhausted(format!(
                    "more than {} boundary samples needed at level {level}",
                    self.opts.max_points
                )));
            }
            let mut points = Vec::with_capacity(trace.points.len() + inserts.len());
            let mut new_seps = Vec::with_capacity(points.capacity());
            let mut next = inserts.iter().peekable();
            for (j, p) in trace.points.iter().enumerate() {
                points.push(p.clone());
                new_seps.push(seps[j]);
                if next.peek() == Some(&&j) {
                    next.next();
                    let u = 0.5 * (p.u + trace.points[j + 1].u);
                    let (q, s) = self.new_point(trace.log_t, u, p, level)?;
                    points.push(q);
                    new_seps.push(s);
                }
            }
            trace.points = points;
            seps = new_seps;
        }
    }

    /// Err(SingularCrossed) when the region at `trace.level` encloses `c`.
    fn check(&self, trace: &Trace) -> Result<(), TelescopeError> {
        let level = trace.level;
        if level == self.n {
            // exact disk
            return if (self.c - self.z[level]).norm() < trace.log_t.exp() {
                Err(TelescopeError::SingularCrossed { level })
            } else {
                Ok(())
            };
        }
        let k = self.n - level;
        let circle: Vec<Complex64> = trace.points.iter().filter(|p| p.u >= 1.0).map(|p| p.chain[k]).collect();
        let diam = polyline_diameter(&circle);
        let closure = (circle[circle.len() - 1] - circle[0]).norm();
        if closure > 1e-6 * diam {
            return Err(TelescopeError::SingularCrossed { level: level + 1 });
        }
        let Some(sigma) = self.scaled_singular(trace.log_t, level) else {
            return Ok(());
        };
        let guard = self.guard_abs * (-self.log_scale(trace.log_t, level)).exp();
        if winding_number(sigma, &circle) != 0 || distance_to_polyline(sigma, &circle) < guard {
            return Err(TelescopeError::SingularCrossed { level });
        }
        Ok(())
    }

    /// Pull back `∂B(z_n, e^{log_t})` to `to_level`, checking every level
    /// above it.
    fn run(&self, log_t: f64, to_level: usize) -> Result<Trace, TelescopeError> {
        let mut trace = self.start(log_t)?;
        self.extend(&mut trace, to_level)?;
        Ok(trace)
    }

    fn extend(&self, trace: &mut Trace, to_level: usize) -> Result<(), TelescopeError> {
        while trace.level > to_level {
            self.check(trace)?;
            self.step_down(trace)?;
        }
        Ok(())
    }

    fn regions(&self, trace: &Trace) -> Vec<PullbackRegion> {
        (trace.level..=self.n)
            .rev()
            .map(|level| {
                let k = self.n - level;
                PullbackRegion {
                    level,
                    center: self.z[level],
                    log_scale: self.log_scale(trace.log_t, level),
                    offsets: trace.points.iter().filter(|p| p.u >= 1.0).map(|p| p.chain[k]).collect(),
                }
            })
            .collect()
    }
}

fn circle_diameter(points: &[PathPoint], k: usize) -> f64 {
    let circle: Vec<Complex64> = points.iter().filter(|p| p.u >= 1.0).map(|p| p.chain[k]).collect();
    polyline_diameter(&circle)
}

fn polyline_diameter(poly: &[Complex64]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for w in poly {
        x0 = x0.min(w.re);
        y0 = y0.min(w.im);
        x1 = x1.max(w.re);
        y1 = y1.max(w.im);
    }
    ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
}

/// Pull back `∂B(z_n, radius)` from level `from_level` (the orbit's
/// last index when `None`) down to `to_level`, returning the traced
/// region at every level from `from_level` to `to_level`.
pub fn trace_pullback(
    map: &MapSpec,
    orbit: &Orbit,
    from_level: Option<usize>,
    to_level: usize,
    radius: f64,
    opts: TelescopeOptions,
) -> Result<Vec<PullbackRegion>, TelescopeError> {
    let owned;
    let orbit = match from_level {
        Some(n) if n < orbit.n() => {
            owned = orbit.prefix(n);
            &owned
        }
        Some(n) if n > orbit.n() => {
            return Err(TelescopeError::InvalidArgument(format!("from_level {n} beyond orbit length")))
        }
        _ => orbit,
    };
    if to_level >= orbit.n() {
        return Err(TelescopeError::InvalidArgument("to_level must be below from_level".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(TelescopeError::InvalidArgument("radius must be positive".into()));
    }
    let delta = map.singular_set().distance(orbit.z[orbit.n()]).min(0.5);
    let tracer = Tracer::new(map, orbit, delta, opts)?;
    let trace = tracer.run(radius.ln(), to_level)?;
    Ok(tracer.regions(&trace))
}

/// Computes `tau_0 ..= tau_n` by bisection on the enclosure predicate.
pub fn compute_tau(
    map: &MapSpec,
    orbit: &Orbit,
    constants: &GeometryConstants,
    opts: TelescopeOptions,
) -> Result<TelescopeResult, TelescopeError> {
    let tracer = Tracer::new(map, orbit, constants.delta_n, opts)?;
    let n = tracer.n;
    if constants.n != n {
        return Err(TelescopeError::InvalidArgument("constants computed for a different n".into()));
    }
    let log_delta = constants.delta_n.ln();
    let mut log_tau = vec![0.0; n + 1];
    log_tau[n] = log_delta;
    let mut trace = tracer.start(log_delta)?;
    for i in (0..n).rev() {
        // warm start: keep tau_{i+1} if it still pulls back one more level
        let mut warm = trace.clone();
        match tracer.extend(&mut warm, i) {
            Ok(()) => {
                log_tau[i] = log_tau[i + 1];
                trace = warm;
                continue;
            }
            Err(TelescopeError::SingularCrossed { .. }) => {}
            Err(e) => return Err(e),
        }
        let mut hi = log_tau[i + 1];
        let mut lo = hi - constants.m_max;
        let mut lo_trace = None;
        for _ in 0..64 {
            match tracer.run(lo, i) {
                Ok(t) => {
                    lo_trace = Some(t);
                    break;
                }
                Err(TelescopeError::SingularCrossed { .. }) => {
                    hi = lo;
                    lo -= constants.m_max;
                }
                Err(e) => return Err(e),
            }
        }
        let mut lo_trace = lo_trace.ok_or_else(|| {
            TelescopeError::PrecisionExhausted(format!("no admissible radius found for tau_{i}"))
        })?;
        while hi - lo > opts.bisect_tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Err(TelescopeError::PrecisionExhausted(format!(
                    "bisection for tau_{i} cannot separate {lo} and {hi}"
                )));
            }
            match tracer.run(mid, i) {
                Ok(t) => {
                    lo = mid;
                    lo_trace = t;
                }
                Err(TelescopeError::SingularCrossed { .. }) => hi = mid,
                Err(e) => return Err(e),
            }
        }
        log_tau[i] = lo;
        trace = lo_trace;
    }
    let tau: Vec<f64> = log_tau
        .iter()
        .map(|&l| if l == log_delta { constants.delta_n } else { l.exp() })
        .collect();
    let m: Vec<f64> = log_tau.windows(2).map(|w| w[1] - w[0]).collect();
    let result = TelescopeResult {
        n,
        tau,
        log_tau,
        m,
        precision_bits: f64::MANTISSA_DIGITS,
    };
    let lhs = orbit.log_deriv_sum();
    let rhs = koebe_log_lower_bound(&result, constants);
    if lhs < rhs {
        return Err(TelescopeError::KoebeInconsistent { lhs, rhs });
    }
    Ok(result)
}

/// `log(tau_0 / (4 (M_f + |z_0|)))`, the Koebe quarter lower bound for
/// `log |(f^n)'(z_0)|`.
pub fn koebe_log_lower_bound(tele: &TelescopeResult, constants: &GeometryConstants) -> f64 {
    tele.log_tau[0] - (4.0 * (constants.m_f + constants.z0_abs)).ln()
}

/// Regions of `∂B(z_n, tau)` traced to `level`, reusing the telescope's
/// options. Used by checks that need the actual geometry.
pub fn trace_at(
    map: &MapSpec,
    orbit: &Orbit,
    constants: &GeometryConstants,
    log_radius: f64,
    level: usize,
    opts: TelescopeOptions,
) -> Result<PullbackRegion, TelescopeError> {
    let tracer = Tracer::new(map, orbit, constants.delta_n, opts)?;
    let trace = tracer.run(log_radius, level)?;
    Ok(tracer
        .regions(&trace)
        .pop()
        .expect("trace has at least one level"))
}

/// Polyline dump: one JSON array of `[re, im]` pairs per level.
pub fn regions_to_json(regions: &[PullbackRegion]) -> serde_json::Value {
    serde_json::Value::Array(
        regions
            .iter()
            .map(|r| {
                serde_json::json!({
                    "level": r.level,
                    "center": [r.center.re, r.center.im],
                    "boundary": r.boundary().iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// `F(m) = #{i : m_i >= m}` as a step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDistribution {
    pub n: usize,
    /// Positive moduli in descending order, with multiplicity.
    pub sorted_m: Vec<f64>,
}

impl TailDistribution {
    pub fn from_moduli(m: &[f64]) -> Self {
        let mut sorted_m: Vec<f64> = m.iter().copied().filter(|&x| x > 0.0).collect();
        sorted_m.sort_by(|a, b| b.total_cmp(a));
        Self { n: m.len(), sorted_m }
    }

    pub fn eval(&self, m: f64) -> usize {
        if m <= 0.0 {
            return self.n;
        }
        self.sorted_m.partition_point(|&x| x >= m)
    }

    /// `∫_0^∞ F(m) dm`, equal to the sum of the moduli.
    pub fn integral(&self) -> f64 {
        self.sorted_m.iter().rev().fold(0.0, |a, b| a + b)
    }

    /// `∫_a^b F(m) dm` for `0 <= a <= b` (`b` may be infinite).
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        assert!(a >= 0.0 && b >= a, "bad interval [{a}, {b}]");
        self.sorted_m
            .iter()
            .rev()
            .fold(0.0, |acc, &x| acc + (x.min(b) - a).max(0.0))
    }

    pub fn max_m(&self) -> f64 {
        self.sorted_m.first().copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_m.is_empty()
    }
}

pub fn tail_distribution(tele: &TelescopeResult) -> TailDistribution {
    TailDistribution::from_moduli(&tele.m)
}
