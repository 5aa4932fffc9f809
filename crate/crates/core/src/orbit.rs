//! Finite orbits, finite-time Lyapunov exponents and the geometric
//! constants (distance to the singular set, orbit bound, `rho_n`, cutoff
//! moduli) that every derivative bound is expressed in.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::MapSpec;
use crate::numeric::fmt_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("orbit meets the singular set at step {step}; distance to the singular set is zero")]
    DegenerateOrbit { step: usize },
    #[error("orbit is incomplete: {0:?}")]
    Incomplete(OrbitStatus),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cannot parse orbit CSV: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitStatus {
    Complete,
    /// `|z|` passed the escape radius (or became non-finite) at this step.
    Overflowed { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateOptions {
    pub escape_radius: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            escape_radius: 1e100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    /// `z_0 ... z_n` (shorter when the status is not `Complete`).
    pub z: Vec<Complex64>,
    /// `log |f'(z_i)|` for `i < len(z) - 1`.
    pub log_abs_deriv: Vec<f64>,
    /// `chi_prefix[k]` is the Birkhoff average of the first `k` log-derivatives;
    /// `chi_prefix[0]` is 0.
    pub chi_prefix: Vec<f64>,
    pub status: OrbitStatus,
}

/// Iterate `map` from `z0` for `n` steps.
pub fn iterate(map: &MapSpec, z0: Complex64, n: usize, opts: IterateOptions) -> Result<Orbit, OrbitError> {
    if n == 0 {
        return Err(OrbitError::InvalidArgument("n must be at least 1".into()));
    }
    let mut z = Vec::with_capacity(n + 1);
    let mut log_abs_deriv = Vec::with_capacity(n);
    let mut chi_prefix = Vec::with_capacity(n + 1);
    chi_prefix.push(0.0);
    if !z0.is_finite() || z0.norm() > opts.escape_radius {
        return Ok(Orbit {
            z,
            log_abs_deriv,
            chi_prefix,
            status: OrbitStatus::Overflowed { step: 0 },
        });
    }
    z.push(z0);
    let mut sum = 0.0;
    let mut status = OrbitStatus::Complete;
    for step in 1..=n {
        let prev = z[step - 1];
        let next = match map.eval(prev) {
            Ok(w) if w.norm() <= opts.escape_radius => w,
            _ => {
                status = OrbitStatus::Overflowed { step };
                break;
            }
        };
        let ld = map.log_abs_deriv(prev);
        sum += ld;
        log_abs_deriv.push(ld);
        chi_prefix.push(sum / step as f64);
        z.push(next);
    }
    Ok(Orbit {
        z,
        log_abs_deriv,
        chi_prefix,
        status,
    })
}

impl Orbit {
    /// Number of completed steps.
    pub fn n(&self) -> usize {
        self.log_abs_deriv.len()
    }

    /// `chi_n`, the finite-time exponent at the final step.
    pub fn chi(&self) -> f64 {
        self.chi_prefix[self.n()]
    }

    /// `sum_{i<n} log |f'(z_i)| = log |(f^n)'(z_0)|`.
    pub fn log_deriv_sum(&self) -> f64 {
        self.log_abs_deriv.iter().fold(0.0, |a, b| a + b)
    }

    /// Minimum of `chi_k` over the trailing window `n - window < k <= n`,
    /// the finite proxy for the lower exponent. `window = None` uses `n/10`
    /// (at least one sample).
    pub fn chi_window_min(&self, window: Option<usize>) -> f64 {
        let n = self.n();
        let w = window.unwrap_or(n / 10).clamp(1, n.max(1));
        self.chi_prefix[n + 1 - w..=n]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Prefix of the first `k` steps (`z_0..=z_k`).
    pub fn prefix(&self, k: usize) -> Orbit {
        assert!(k <= self.n(), "prefix longer than orbit");
        Orbit {
            z: self.z[..=k].to_vec(),
            log_abs_deriv: self.log_abs_deriv[..k].to_vec(),
            chi_prefix: self.chi_prefix[..=k].to_vec(),
            status: OrbitStatus::Complete,
        }
    }

    /// Running `delta_i` and `D_i` for every recorded point.
    pub fn running_delta_d(&self, map: &MapSpec) -> Vec<(f64, f64)> {
        let sing = map.singular_set();
        let mut delta = 0.5f64;
        let mut dmax = 0.0f64;
        self.z
            .iter()
            .map(|&z| {
                delta = delta.min(sing.distance(z));
                dmax = dmax.max(z.norm());
                (delta, dmax + 1.0)
            })
            .collect()
    }

    /// Orbit CSV: `i, re_z, im_z, log_abs_deriv, chi_i, delta_i, D_i`.
    ///
    /// Row `i` carries `log |f'(z_i)|` and the running average of the
    /// log-derivatives of rows `0..=i`, so the last row uses `f'(z_n)`.
    pub fn to_csv(&self, map: &MapSpec) -> String {
        let mut out = String::from("i,re_z,im_z,log_abs_deriv,chi_i,delta_i,D_i\n");
        let running = self.running_delta_d(map);
        let mut sum = 0.0;
        for (i, &z) in self.z.iter().enumerate() {
            let ld = self
                .log_abs_deriv
                .get(i)
                .copied()
                .unwrap_or_else(|| map.log_abs_deriv(z));
            sum += ld;
            let chi = sum / (i + 1) as f64;
            let (delta, d) = running[i];
            out.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(ld),
                fmt_f64(chi),
                fmt_f64(delta),
                fmt_f64(d)
            ));
        }
        out
    }

    /// Reads back an orbit written by [`Orbit::to_csv`].
    pub fn from_csv(text: &str) -> Result<Orbit, OrbitError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| OrbitError::Parse("empty".into()))?;
        if header.trim() != "i,re_z,im_z,log_abs_deriv,chi_i,delta_i,D_i" {
            return Err(OrbitError::Parse(format!("unexpected header `{header}`")));
        }
        let mut z = Vec::new();
        let mut lds = Vec::new();
        for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 || cols[0].trim().parse::<usize>().ok() != Some(row) {
                return Err(OrbitError::Parse(format!("bad row {row}")));
            }
            let num = |k: usize| -> Result<f64, OrbitError> {
                cols[k]
                    .trim()
                    .parse()
                    .map_err(|_| OrbitError::Parse(format!("bad number in row {row}")))
            };
            z.push(Complex64::new(num(1)?, num(2)?));
            lds.push(num(3)?);
        }
        if z.is_empty() {
            return Err(OrbitError::Parse("no rows".into()));
        }
        lds.pop();
        let mut chi_prefix = vec![0.0];
        let mut sum = 0.0;
        for (k, ld) in lds.iter().enumerate() {
            sum += ld;
            chi_prefix.push(sum / (k + 1) as f64);
        }
        Ok(Orbit {
            z,
            log_abs_deriv: lds,
            chi_prefix,
            status: OrbitStatus::Complete,
        })
    }
}

/// Where the value of `M_f` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MfProvenance {
    Exact,
    /// Minimum over the cycles a finite search found; the true infimum
    /// over all cycles can only be smaller.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub n: usize,
    pub delta_n: f64,
    pub d_n: f64,
    pub m_f: f64,
    pub m_f_provenance: MfProvenance,
    pub s_f: Option<f64>,
    pub z0_abs: f64,
    pub rho_n: f64,
    pub rho_tilde_n: Option<f64>,
    pub m_max: f64,
    pub m_tilde_max: Option<f64>,
}

impl GeometryConstants {
    /// Builds the derived quantities from `delta_n`, `D_n`, `M_f`, `S_f`.
    pub fn from_parts(
        n: usize,
        delta_n: f64,
        d_n: f64,
        m_f: f64,
        s_f: Option<f64>,
        z0_abs: f64,
    ) -> Result<Self, OrbitError> {
        if !(delta_n > 0.0 && delta_n <= 0.5) {
            return Err(OrbitError::InvalidArgument(format!("delta_n = {delta_n} outside (0, 1/2]")));
        }
        if !(d_n >= 1.0) || !d_n.is_finite() {
            return Err(OrbitError::InvalidArgument(format!("D_n = {d_n} must be finite and >= 1")));
        }
        if !(m_f >= 1.0) || !m_f.is_finite() {
            return Err(OrbitError::InvalidArgument(format!("M_f = {m_f} must be finite and >= 1")));
        }
        if let Some(s) = s_f {
            if !(s >= 1.0) {
                return Err(OrbitError::InvalidArgument(format!("S_f = {s} must be >= 1")));
            }
        }
        let rho_n = 4.0 * (d_n + m_f) / delta_n;
        assert!(rho_n >= 16.0, "rho_n = {rho_n} < 16");
        let rho_tilde_n = s_f.map(|s| 4.0 * (s + m_f) / delta_n);
        if let Some(r) = rho_tilde_n {
            assert!(r >= 16.0, "rho_tilde_n = {r} < 16");
        }
        Ok(Self {
            n,
            delta_n,
            d_n,
            m_f,
            m_f_provenance: MfProvenance::UpperBound,
            s_f,
            z0_abs,
            rho_n,
            rho_tilde_n,
            m_max: 2.0 + rho_n.ln(),
            m_tilde_max: rho_tilde_n.map(|r| 2.0 + r.ln()),
        })
    }

    pub fn with_provenance(mut self, p: MfProvenance) -> Self {
        self.m_f_provenance = p;
        self
    }
}

/// Geometric constants of a complete orbit for a given `M_f`.
pub fn geometry_constants(map: &MapSpec, orbit: &Orbit, m_f: f64) -> Result<GeometryConstants, OrbitError> {
    match orbit.status {
        OrbitStatus::Complete => {}
        s => return Err(OrbitError::Incomplete(s)),
    }
    let sing = map.singular_set();
    let mut delta = 0.5f64;
    for (step, &z) in orbit.z.iter().enumerate() {
        let d = sing.distance(z);
        if d == 0.0 {
            return Err(OrbitError::DegenerateOrbit { step });
        }
        delta = delta.min(d);
    }
    let d_n = orbit.z.iter().map(|z| z.norm()).fold(0.0, f64::max) + 1.0;
    GeometryConstants::from_parts(orbit.n(), delta, d_n, m_f, sing.s_f, orbit.z[0].norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowDecayOutcome {
    pub holds: bool,
    /// `n` of the first entry violating the rate.
    pub first_violation: Option<usize>,
}

/// Checks `delta_n / D_n >= kappa n^{-beta}` (or `delta_n >= kappa n^{-beta}`
/// when `bounded_singular_set`) along a series of constants.
pub fn slow_decay_check(
    series: &[GeometryConstants],
    kappa: f64,
    beta: f64,
    bounded_singular_set: bool,
) -> Result<SlowDecayOutcome, OrbitError> {
    if !(kappa > 0.0) {
        return Err(OrbitError::InvalidArgument("kappa must be positive".into()));
    }
    if !(beta < 0.5) {
        return Err(OrbitError::InvalidArgument("beta must be below 1/2".into()));
    }
    let first_violation = series
        .iter()
        .find(|g| {
            let ratio = if bounded_singular_set { g.delta_n } else { g.delta_n / g.d_n };
            ratio < kappa * (g.n.max(1) as f64).powf(-beta)
        })
        .map(|g| g.n);
    Ok(SlowDecayOutcome {
        holds: first_violation.is_none(),
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad(c: Complex64) -> MapSpec {
        MapSpec::unicritical(2, c).unwrap()
    }

    #[test]
    fn fixed_point_orbit() {
        let o = iterate(&quad(c64(-2.0, 0.0)), c64(2.0, 0.0), 5, IterateOptions::default()).unwrap();
        assert_eq!(o.z, vec![c64(2.0, 0.0); 6]);
        assert_eq!(o.status, OrbitStatus::Complete);
        assert!((o.chi() - 4f64.ln()).abs() < 1e-15);
        assert!((o.chi() - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn two_cycle_orbit() {
        let o = iterate(&quad(c64(0.0, 1.0)), c64(0.0, -1.0), 4, IterateOptions::default()).unwrap();
        let a = c64(0.0, -1.0);
        let b = c64(-1.0, 1.0);
        assert_eq!(o.z, vec![a, b, a, b, a]);
    }

    #[test]
    fn attracted_orbit_exponent() {
        let o = iterate(&quad(c64(-0.5, 0.0)), c64(0.1, 0.0), 20_000, IterateOptions::default()).unwrap();
        let fixed = (1.0 - 3f64.sqrt()) / 2.0;
        assert!((o.z.last().unwrap() - c64(fixed, 0.0)).norm() < 1e-12);
        // multiplier 2 z*, transient contributes O(1/n)
        let limit = (2.0 * fixed).abs().ln();
        assert!((limit + 0.311905).abs() < 1e-6);
        assert!((o.chi() - limit).abs() < 1e-3);
        let o4 = o.prefix(10_000);
        assert!((o4.chi() - limit).abs() < 2e-3);
    }

    #[test]
    fn escape_recorded_and_singular_hits_degenerate() {
        let o = iterate(&quad(c64(0.0, 0.0)), c64(3.0, 0.0), 50, IterateOptions::default()).unwrap();
        assert!(matches!(o.status, OrbitStatus::Overflowed { .. }));
        assert_eq!(o.z.len(), o.log_abs_deriv.len() + 1);
        let o = iterate(&quad(c64(0.0, 1.0)), c64(0.0, 0.0), 5, IterateOptions::default()).unwrap();
        assert_eq!(o.status, OrbitStatus::Complete);
        assert_eq!(o.z[1], c64(0.0, 1.0));
        // the critical point itself has log|f'| = -inf
        assert_eq!(o.log_abs_deriv[0], f64::NEG_INFINITY);
        assert!(matches!(
            geometry_constants(&quad(c64(0.0, 1.0)), &o, 2.0),
            Err(OrbitError::DegenerateOrbit { step: 1 })
        ));
        assert!(iterate(&quad(c64(0.0, 1.0)), c64(0.0, 0.0), 0, IterateOptions::default()).is_err());
    }

    #[test]
    fn geometry_constants_examples() {
        let f = quad(c64(-2.0, 0.0));
        let o = iterate(&f, c64(2.0, 0.0), 10, IterateOptions::default()).unwrap();
        let g = geometry_constants(&f, &o, 2.0).unwrap();
        assert_eq!(g.delta_n, 0.5);
        assert_eq!(g.d_n, 3.0);
        assert_eq!(g.rho_n, 40.0);
        assert!((g.m_max - 5.68888).abs() < 1e-5);

        let f = quad(c64(0.0, 1.0));
        let o = iterate(&f, c64(0.0, -1.0), 10, IterateOptions::default()).unwrap();
        let g = geometry_constants(&f, &o, 1.6933).unwrap();
        assert_eq!(g.delta_n, 0.5);
        assert!((g.d_n - (2f64.sqrt() + 1.0)).abs() < 1e-15);
        assert_eq!(g.s_f, Some(2.0));
        assert!((g.rho_tilde_n.unwrap() - 4.0 * (2.0 + 1.6933) / 0.5).abs() < 1e-12);
        assert!(g.rho_tilde_n.unwrap() >= 16.0);
    }

    #[test]
    fn from_parts_rejects_bad_inputs() {
        assert!(GeometryConstants::from_parts(1, 0.0, 1.0, 1.0, None, 0.0).is_err());
        assert!(GeometryConstants::from_parts(1, 0.6, 1.0, 1.0, None, 0.0).is_err());
        assert!(GeometryConstants::from_parts(1, 0.5, 0.5, 1.0, None, 0.0).is_err());
        assert!(GeometryConstants::from_parts(1, 0.5, 1.0, 0.9, None, 0.0).is_err());
    }

    fn synthetic(n: usize, delta: f64, d_n: f64) -> GeometryConstants {
        GeometryConstants::from_parts(n, delta, d_n, 1.0, Some(1.0), 0.0).unwrap()
    }

    #[test]
    fn slow_decay_examples() {
        let series: Vec<_> = (1..200).map(|n| synthetic(n, 0.5, 3.0)).collect();
        assert!(slow_decay_check(&series, 0.1, 0.4, false).unwrap().holds);

        let series: Vec<_> = (2..200).map(|n| synthetic(n, 1.0 / n as f64, 1.0)).collect();
        let out = slow_decay_check(&series, 1.0, 0.4, true).unwrap();
        assert!(!out.holds);
        assert_eq!(out.first_violation, Some(2));

        let series: Vec<_> = (1..200)
            .map(|n| synthetic(n, 0.3 * (n as f64).powf(-0.3), 1.0))
            .collect();
        assert!(slow_decay_check(&series, 0.3, 0.3, true).unwrap().holds);

        assert!(slow_decay_check(&series, 0.3, 0.5, true).is_err());
        assert!(slow_decay_check(&series, 0.0, 0.3, true).is_err());
    }

    #[test]
    fn csv_round_trip_and_shape() {
        let f = quad(c64(-2.0, 0.0));
        let o = iterate(&f, c64(2.0, 0.0), 20, IterateOptions::default()).unwrap();
        let csv = o.to_csv(&f);
        assert_eq!(csv.lines().count(), 22);
        for line in csv.lines().skip(1) {
            let chi: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
            assert!((chi - 4f64.ln()).abs() < 1e-15);
        }
        let g = quad(c64(-0.12, 0.75));
        let o = iterate(&g, c64(0.3, 0.2), 30, IterateOptions::default()).unwrap();
        assert_eq!(o.status, OrbitStatus::Complete);
        let back = Orbit::from_csv(&o.to_csv(&g)).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn chi_window_min_tracks_tail() {
        let f = quad(c64(-0.5, 0.0));
        let o = iterate(&f, c64(0.1, 0.0), 1000, IterateOptions::default()).unwrap();
        let w = o.chi_window_min(None);
        let tail = &o.chi_prefix[901..=1000];
        assert_eq!(w, tail.iter().copied().fold(f64::INFINITY, f64::min));
        assert_eq!(o.chi_window_min(Some(1)), o.chi());
    }

    proptest! {
        #[test]
        fn orbit_invariants(re in -1.5f64..1.5, im in -1.5f64..1.5, cre in -1.0f64..0.3, cim in -0.8f64..0.8) {
            let f = quad(c64(cre, cim));
            let o = iterate(&f, c64(re, im), 60, IterateOptions::default()).unwrap();
            for i in 0..o.n() {
                prop_assert_eq!(o.z[i + 1], f.eval(o.z[i]).unwrap());
            }
            let mut sum = 0.0;
            for k in 1..=o.n() {
                sum += o.log_abs_deriv[k - 1];
                let lhs = o.chi_prefix[k] * k as f64;
                prop_assert!((lhs - sum).abs() <= 1e-12 * sum.abs().max(1e-300) + 1e-300);
            }
            let running = o.running_delta_d(&f);
            for w in running.windows(2) {
                prop_assert!(w[1].0 <= w[0].0);
                prop_assert!(w[1].1 >= w[0].1);
            }
            if o.status == OrbitStatus::Complete {
                if let Ok(g) = geometry_constants(&f, &o, 1.0) {
                    prop_assert!(g.rho_n >= 16.0);
                    prop_assert_eq!(g.delta_n, running.last().unwrap().0);
                }
            }
        }
    }
}
