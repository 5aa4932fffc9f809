//! Closed-form function-theoretic bounds: brackets for the Teichmüller
//! extremal modulus, the annulus separation factor, Koebe distortion, and
//! the derived quantities `alpha(m)`, `E(m)` and `D(m)` used by the
//! counting arguments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{name} = {value} is outside the domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

fn domain(name: &'static str, value: f64, expected: &'static str) -> GeometryError {
    GeometryError::Domain { name, value, expected }
}

const PI2: f64 = PI * PI;

/// Closed interval containing `Lambda(R)`, the largest modulus of a
/// doubly connected region separating `{0, -1}` from `{w, inf}` with
/// `|w| = R`. Obtained by inverting `R - 1 <= e^Lambda/16 - 1 <= R`.
pub fn lambda_brackets(r: f64) -> Result<(f64, f64), GeometryError> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(domain("R", r, "R > 1"));
    }
    Ok(((16.0 * r).ln(), (16.0 * (r + 1.0)).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationBranch {
    /// `e^m / 16 - 1`
    Exponential,
    /// `16 e^{-pi^2/m}`
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationBound {
    pub m: f64,
    pub exponential: f64,
    pub reciprocal: f64,
    pub factor: f64,
    pub active: SeparationBranch,
}

/// Lower bound for `|e3 - e1| / |e2 - e1|` when an annulus of modulus `m`
/// separates `{e1, e2}` from `{e3, inf}`.
pub fn separation_factor(m: f64) -> Result<SeparationBound, GeometryError> {
    if !(m > 0.0) {
        return Err(domain("m", m, "m > 0"));
    }
    let exponential = m.exp() / 16.0 - 1.0;
    let reciprocal = 16.0 * (-PI2 / m).exp();
    let (factor, active) = if exponential >= reciprocal {
        (exponential, SeparationBranch::Exponential)
    } else {
        (reciprocal, SeparationBranch::Reciprocal)
    };
    Ok(SeparationBound {
        m,
        exponential,
        reciprocal,
        factor,
        active,
    })
}

/// `(2/m + 1)^2`: inner-disk shrink factor for an annulus of modulus `m`.
pub fn alpha(m: f64) -> Result<f64, GeometryError> {
    if !(m > 0.0) {
        return Err(domain("m", m, "m > 0"));
    }
    let s = 2.0 / m + 1.0;
    Ok(s * s)
}

/// `floor(log(9 rho alpha(m)) / m)`, the index gap after which orbit
/// points in the level set of modulus `m` are guaranteed to be separated.
pub fn spacing_gap_e(m: f64, rho: f64) -> Result<u64, GeometryError> {
    if !(rho >= 16.0) {
        return Err(domain("rho", rho, "rho >= 16"));
    }
    let a = alpha(m)?;
    let e = ((9.0 * rho * a).ln() / m).floor();
    if m < 2.0 + rho.ln() {
        assert!(e >= 1.0, "E({m}) = {e} < 1 below the cutoff");
    }
    Ok(e as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitBound {
    /// `S_f + (M_f + S_f) e^{pi^2/m} / 16`, or `+inf` on overflow.
    pub value: f64,
    pub overflowed: bool,
}

/// Bound on `|z_{i+1}|` for indices whose annulus modulus is at least `m`.
pub fn orbit_bound_d(m: f64, m_f: f64, s_f: f64) -> Result<OrbitBound, GeometryError> {
    if !(m > 0.0) {
        return Err(domain("m", m, "m > 0"));
    }
    if !(m_f >= 1.0) {
        return Err(domain("M_f", m_f, "M_f >= 1"));
    }
    if !(s_f >= 1.0) {
        return Err(domain("S_f", s_f, "S_f >= 1"));
    }
    let e = (PI2 / m).exp();
    let value = s_f + (m_f + s_f) * e / 16.0;
    Ok(OrbitBound {
        value,
        overflowed: !value.is_finite(),
    })
}

/// Koebe distortion envelope `(|w|/(1+|w|)^2, |w|/(1-|w|)^2)` for
/// normalised univalent maps of the unit disk.
pub fn koebe_distortion_envelope(w_abs: f64) -> Result<(f64, f64), GeometryError> {
    if !(w_abs > 0.0 && w_abs < 1.0) {
        return Err(domain("|w|", w_abs, "0 < |w| < 1"));
    }
    Ok((w_abs / (1.0 + w_abs).powi(2), w_abs / (1.0 - w_abs).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_bracket_examples() {
        let (lo, hi) = lambda_brackets(100.0).unwrap();
        assert!((lo - 1600f64.ln()).abs() < 1e-15 && (lo - 7.3778).abs() < 1e-4);
        assert!((hi - 1616f64.ln()).abs() < 1e-15 && (hi - 7.3877).abs() < 1e-4);
        let eps = 1e-12;
        let (lo, hi) = lambda_brackets(1.0 + eps).unwrap();
        assert!((lo - 16f64.ln()).abs() < 1e-11);
        assert!((hi - 32f64.ln()).abs() < 1e-11);
        assert!(lo <= PI && PI <= hi);
        assert!(lambda_brackets(1.0).is_err());
        assert!(lambda_brackets(0.5).is_err());
    }

    #[test]
    fn lambda_functional_equation_consistency() {
        for k in 1..=1000 {
            let r = 1.0 + 0.01 * f64::from(k);
            let (lo, hi) = lambda_brackets(r).unwrap();
            assert!(lo * (PI2 / hi) <= PI2 && PI2 <= hi * (PI2 / lo));
            assert!(((hi - lo) - ((r + 1.0) / r).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn separation_examples() {
        let s = separation_factor(32f64.ln()).unwrap();
        assert!((s.exponential - 1.0).abs() < 1e-14);
        assert!((s.reciprocal - 0.9277).abs() < 1e-3);
        assert_eq!(s.factor, s.exponential);
        assert_eq!(s.active, SeparationBranch::Exponential);

        let s = separation_factor(1e-3).unwrap();
        assert!(s.exponential < 0.0 && (s.exponential + 15.0 / 16.0).abs() < 1e-3);
        assert_eq!(s.active, SeparationBranch::Reciprocal);
        assert!(s.factor >= 0.0 && s.factor < 1e-300);

        let s = separation_factor(10.0).unwrap();
        assert!((s.factor - (10f64.exp() / 16.0 - 1.0)).abs() < 1e-9);
        assert!((s.factor - 1375.6).abs() < 0.1);
        assert!(separation_factor(0.0).is_err());
    }

    #[test]
    fn separation_branches_cross_once() {
        let mut switches = 0;
        let mut prev = separation_factor(0.01).unwrap().active;
        for k in 1..=2000 {
            let s = separation_factor(0.01 + 0.01 * f64::from(k)).unwrap();
            if s.active != prev {
                switches += 1;
            }
            prev = s.active;
        }
        assert_eq!(switches, 1);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(2.0).unwrap(), 4.0);
        assert_eq!(alpha(1.0).unwrap(), 9.0);
        assert!((alpha(1e12).unwrap() - 1.0).abs() < 1e-11);
        assert!(alpha(0.0).is_err());
        assert!(alpha(-1.0).is_err());
    }

    #[test]
    fn spacing_gap_examples() {
        assert_eq!(spacing_gap_e(2.0, 40.0).unwrap(), 3);
        assert!(spacing_gap_e(5.6888, 40.0).unwrap() >= 1);
        assert_eq!(spacing_gap_e(0.1, 16.0).unwrap(), 110);
        assert!(spacing_gap_e(1.0, 15.0).is_err());
        assert!(spacing_gap_e(0.0, 40.0).is_err());
    }

    #[test]
    fn spacing_gap_at_least_one_below_cutoff() {
        for rho in [16.0, 40.0, 1e3, 1e8] {
            let m_max: f64 = 2.0 + f64::ln(rho);
            for k in 1..=500 {
                let m = m_max * f64::from(k) / 501.0;
                assert!(spacing_gap_e(m, rho).unwrap() >= 1);
            }
        }
    }

    #[test]
    fn orbit_bound_examples() {
        let d = orbit_bound_d(PI2, 2.0, 3.0).unwrap();
        assert!((d.value - (3.0 + 5.0 * 1f64.exp() / 16.0)).abs() < 1e-14);
        assert!((d.value - 3.8496).abs() < 1e-3);
        let d = orbit_bound_d(1e15, 2.0, 3.0).unwrap();
        assert!((d.value - (3.0 + 5.0 / 16.0)).abs() < 1e-12);
        let d = orbit_bound_d(1.0, 1.0, 1.0).unwrap();
        assert!((d.value - (1.0 + 2.0 * PI2.exp() / 16.0)).abs() < 1e-9);
        assert!((d.value - 2417.71).abs() < 0.01);
        let d = orbit_bound_d(1e-2, 1.0, 1.0).unwrap();
        assert!(d.overflowed && d.value.is_infinite());
        assert!(orbit_bound_d(1.0, 0.5, 1.0).is_err());
        assert!(orbit_bound_d(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn koebe_envelope_examples() {
        let (lo, hi) = koebe_distortion_envelope(0.5).unwrap();
        assert!((lo - 2.0 / 9.0).abs() < 1e-15);
        assert!((hi - 2.0).abs() < 1e-15);
        let w = 1e-9;
        let (lo, hi) = koebe_distortion_envelope(w).unwrap();
        assert!((lo / w - 1.0).abs() < 1e-8 && (hi / w - 1.0).abs() < 1e-8);
        assert!(koebe_distortion_envelope(0.0).is_err());
        assert!(koebe_distortion_envelope(1.0).is_err());
    }

    #[test]
    fn koebe_function_attains_upper_envelope() {
        // k(w) = w / (1 - w)^2 is univalent with k(0) = 0, k'(0) = 1
        for j in 1..=100 {
            let w = f64::from(j) / 101.0;
            let k = w / ((1.0 - w) * (1.0 - w));
            let (_, hi) = koebe_distortion_envelope(w).unwrap();
            assert!((k - hi).abs() <= 1e-12 * hi);
        }
    }

    #[test]
    fn monotonicity_properties() {
        let grid: Vec<f64> = (0..1000).map(|k| 0.01 + (20.0 - 0.01) * f64::from(k) / 999.0).collect();
        for w in grid.windows(2) {
            assert!(separation_factor(w[1]).unwrap().factor > separation_factor(w[0]).unwrap().factor);
            assert!(alpha(w[1]).unwrap() < alpha(w[0]).unwrap());
            assert!(alpha(w[0]).unwrap() >= 1.0);
        }
        for k in 1..1000 {
            let m = 2.0 * f64::from(k) / 1000.0;
            assert!(alpha(m).unwrap() <= 16.0 / (m * m));
        }
    }

    #[test]
    fn koebe_envelope_shape() {
        for j in 1..1000 {
            let w = f64::from(j) / 1000.0;
            let (lo, hi) = koebe_distortion_envelope(w).unwrap();
            assert!(lo < hi);
        }
        let (lo, hi) = koebe_distortion_envelope(1.0 - 1e-9).unwrap();
        assert!((lo - 0.25).abs() < 1e-8);
        assert!(hi > 1e17);
    }
}
