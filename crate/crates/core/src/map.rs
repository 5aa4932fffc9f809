//! Holomorphic map families and their inverse branches.
//!
//! Two entire families are supported: unicritical polynomials `z^d + c`
//! and exponentials `a e^z + c`. Both have exactly one singular value,
//! the point `c`, so every inverse branch extends over any simply
//! connected domain that avoids it.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{clog1p, complex_expm1, parse_complex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map parameters: {0}")]
    InvalidParameters(String),
    #[error("overflow evaluating the map at {re}+{im}i")]
    Overflow { re: f64, im: f64 },
    #[error("two inverse-branch candidates are equidistant from the reference point; refine the path")]
    AmbiguousBranch,
    #[error("pullback target coincides with the singular value")]
    SingularHit,
    #[error("cannot parse map spec `{0}`")]
    Parse(String),
}

/// Member of one of the implemented holomorphic families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    UnicriticalPoly { degree: u32, c: Complex64 },
    Exponential { a: Complex64, c: Complex64 },
}

/// Where the map is defined. Both families are entire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    EntirePlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    family: Family,
    domain_kind: DomainKind,
}

/// The singular set of a map, i.e. the closure of its critical and
/// asymptotic values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSet {
    pub points: Vec<Complex64>,
    pub bounded: bool,
    /// `sup |s| + 1`, present when the set is bounded.
    pub s_f: Option<f64>,
}

impl SingularSet {
    /// Euclidean distance from `z` to the nearest singular point.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .map(|s| (z - s).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Continued preimage produced by repeated [`MapSpec::pull_back_step`] calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseBranchState {
    pub current_point: Complex64,
    pub level: usize,
}

impl InverseBranchState {
    pub fn new(point: Complex64) -> Self {
        Self {
            current_point: point,
            level: 0,
        }
    }
}

/// Tolerances for branch continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationTol {
    /// Targets closer than this to the singular value are rejected.
    pub singular: f64,
    /// Relative gap between the two nearest candidates below which the
    /// choice is reported as ambiguous.
    pub ambiguity: f64,
}

impl Default for ContinuationTol {
    fn default() -> Self {
        Self {
            singular: 1e-12,
            ambiguity: 1e-9,
        }
    }
}

/// Preimage of a point in orbit-relative scaled coordinates, see
/// [`MapSpec::pull_back_offset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetPreimage {
    pub offset: Complex64,
    /// Distance (in output units) from the selected preimage to the
    /// nearest competing one. Infinite when no competitor is representable.
    pub separation: f64,
}

// Past this many e-foldings a competing branch is treated as infinitely far.
const FAR_LOG: f64 = 690.0;

impl MapSpec {
    pub fn unicritical(degree: u32, c: Complex64) -> Result<Self, MapError> {
        if degree < 2 {
            return Err(MapError::InvalidParameters(format!(
                "degree must be at least 2, got {degree}"
            )));
        }
        if !c.is_finite() {
            return Err(MapError::InvalidParameters("c must be finite".into()));
        }
        Ok(Self {
            family: Family::UnicriticalPoly { degree, c },
            domain_kind: DomainKind::EntirePlane,
        })
    }

    pub fn exponential(a: Complex64, c: Complex64) -> Result<Self, MapError> {
        if !(a.norm() > 0.0) || !a.is_finite() {
            return Err(MapError::InvalidParameters("a must be finite and nonzero".into()));
        }
        if !c.is_finite() {
            return Err(MapError::InvalidParameters("c must be finite".into()));
        }
        Ok(Self {
            family: Family::Exponential { a, c },
            domain_kind: DomainKind::EntirePlane,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn domain_kind(&self) -> DomainKind {
        self.domain_kind
    }

    /// The additive parameter `c`, which is also the unique singular value.
    pub fn c(&self) -> Complex64 {
        match self.family {
            Family::UnicriticalPoly { c, .. } | Family::Exponential { c, .. } => c,
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, MapError> {
        let w = match self.family {
            Family::UnicriticalPoly { degree, c } => z.powu(degree) + c,
            Family::Exponential { a, c } => a * z.exp() + c,
        };
        finite_or_overflow(w, z)
    }

    pub fn deriv(&self, z: Complex64) -> Result<Complex64, MapError> {
        let w = match self.family {
            Family::UnicriticalPoly { degree, .. } => f64::from(degree) * z.powu(degree - 1),
            Family::Exponential { a, .. } => a * z.exp(),
        };
        finite_or_overflow(w, z)
    }

    /// `log |f'(z)|`, computed without forming `f'(z)` so it neither
    /// overflows nor loses relative accuracy.
    pub fn log_abs_deriv(&self, z: Complex64) -> f64 {
        match self.family {
            Family::UnicriticalPoly { degree, .. } => {
                f64::from(degree).ln() + f64::from(degree - 1) * z.norm().ln()
            }
            Family::Exponential { a, .. } => a.norm().ln() + z.re,
        }
    }

    pub fn singular_set(&self) -> SingularSet {
        let c = self.c();
        SingularSet {
            points: vec![c],
            bounded: true,
            s_f: Some(c.norm() + 1.0),
        }
    }

    /// Continue `branch` one level back: return the preimage of `target`
    /// selected by continuity with `branch.current_point`.
    pub fn pull_back_step(
        &self,
        branch: InverseBranchState,
        target: Complex64,
        tol: ContinuationTol,
    ) -> Result<InverseBranchState, MapError> {
        let c = self.c();
        let shifted = target - c;
        if shifted.norm() <= tol.singular {
            return Err(MapError::SingularHit);
        }
        let reference = branch.current_point;
        let point = match self.family {
            Family::UnicriticalPoly { degree, .. } => {
                let d = f64::from(degree);
                let radius = shifted.norm().powf(1.0 / d);
                let arg = shifted.arg();
                let candidates = (0..degree).map(|k| {
                    Complex64::from_polar(radius, (arg + 2.0 * PI * f64::from(k)) / d)
                });
                nearest(candidates, reference, tol.ambiguity)?.0
            }
            Family::Exponential { a, .. } => {
                let principal = (shifted / a).ln();
                let turns = (reference.im - principal.im) / (2.0 * PI);
                let k = turns.round();
                if ((turns - turns.floor()) - 0.5).abs() < tol.ambiguity {
                    return Err(MapError::AmbiguousBranch);
                }
                principal + Complex64::new(0.0, 2.0 * PI * k)
            }
        };
        Ok(InverseBranchState {
            current_point: point,
            level: branch.level + 1,
        })
    }

    /// Pull back a point given relative to an orbit step.
    ///
    /// The image point is `image_base + e^{log_scale_in} * offset` where
    /// `image_base = f(pre_base)`. The returned offset is relative to
    /// `pre_base` in units of `e^{log_scale_out}`; among all preimages the
    /// one nearest to `reference` (same units) is selected. Working in
    /// these coordinates keeps full relative precision for regions far
    /// smaller than `|pre_base|` and never underflows.
    pub fn pull_back_offset(
        &self,
        pre_base: Complex64,
        image_base: Complex64,
        log_scale_in: f64,
        log_scale_out: f64,
        offset: Complex64,
        reference: Complex64,
        tol: ContinuationTol,
    ) -> Result<OffsetPreimage, MapError> {
        if offset == Complex64::new(0.0, 0.0) {
            // The orbit point itself.
            let sep = self.offset_separation(pre_base, log_scale_out);
            return Ok(OffsetPreimage {
                offset,
                separation: sep,
            });
        }
        let c = self.c();
        let base_shift = image_base - c; // equals f(pre_base) - c
        let log_base = base_shift.norm().ln();
        // u = e^{L_in} * offset / (image_base - c)
        let log_u = offset.norm().ln() + log_scale_in - log_base;
        let u = if log_u < -740.0 {
            Complex64::new(0.0, 0.0)
        } else {
            offset * (base_shift.conj() / base_shift.norm()) * (log_scale_in - log_base).exp()
        };
        if (u + 1.0).norm() <= tol.singular {
            return Err(MapError::SingularHit);
        }
        let deriv = self.deriv(pre_base)?;
        let ratio = (log_scale_in - log_scale_out).exp();
        match self.family {
            Family::UnicriticalPoly { degree, .. } => {
                let d = f64::from(degree);
                // Principal candidate: eta_0 = omega * G(u) / f'(z) with
                // G(u) = d * expm1(log1p(u)/d) / u.
                let g = if u.norm() < 1e-8 {
                    1.0 + (1.0 / d - 1.0) * u * 0.5
                } else {
                    complex_expm1(clog1p(u) / d) * d / u
                };
                let principal = offset * ratio * g / deriv;
                let log_far = pre_base.norm().ln() - log_scale_out;
                if log_far > FAR_LOG {
                    return Ok(OffsetPreimage {
                        offset: principal,
                        separation: f64::INFINITY,
                    });
                }
                let lifted = pre_base * (-log_scale_out).exp();
                let l1p = clog1p(u);
                let candidates = (0..degree).map(|k| {
                    if k == 0 {
                        principal
                    } else {
                        let w = ((l1p + Complex64::new(0.0, 2.0 * PI * f64::from(k))) / d).exp();
                        lifted * (w - 1.0)
                    }
                });
                let (offset, separation) = nearest(candidates, reference, tol.ambiguity)?;
                Ok(OffsetPreimage { offset, separation })
            }
            Family::Exponential { .. } => {
                // eta_k = log1p(u) + 2 pi i k
                let h = if u.norm() < 1e-8 {
                    1.0 - u * 0.5
                } else {
                    clog1p(u) / u
                };
                let principal = offset * ratio * h / deriv;
                if -log_scale_out > FAR_LOG {
                    return Ok(OffsetPreimage {
                        offset: principal,
                        separation: f64::INFINITY,
                    });
                }
                let period = 2.0 * PI * (-log_scale_out).exp();
                let turns = (reference.im - principal.im) / period;
                if ((turns - turns.floor()) - 0.5).abs() < tol.ambiguity {
                    return Err(MapError::AmbiguousBranch);
                }
                let k = turns.round();
                Ok(OffsetPreimage {
                    offset: principal + Complex64::new(0.0, period * k),
                    separation: period,
                })
            }
        }
    }

    fn offset_separation(&self, pre_base: Complex64, log_scale_out: f64) -> f64 {
        match self.family {
            Family::UnicriticalPoly { degree, .. } => {
                let log_far = pre_base.norm().ln() - log_scale_out;
                if log_far > FAR_LOG {
                    f64::INFINITY
                } else {
                    pre_base.norm()
                        * (-log_scale_out).exp()
                        * 2.0
                        * (PI / f64::from(degree)).sin()
                }
            }
            Family::Exponential { .. } => {
                if -log_scale_out > FAR_LOG {
                    f64::INFINITY
                } else {
                    2.0 * PI * (-log_scale_out).exp()
                }
            }
        }
    }
}

fn finite_or_overflow(w: Complex64, z: Complex64) -> Result<Complex64, MapError> {
    if w.is_finite() {
        Ok(w)
    } else {
        Err(MapError::Overflow { re: z.re, im: z.im })
    }
}

/// Nearest candidate to `reference`, with the distance to the runner-up.
fn nearest(
    candidates: impl Iterator<Item = Complex64>,
    reference: Complex64,
    ambiguity: f64,
) -> Result<(Complex64, f64), MapError> {
    let mut all: Vec<(f64, Complex64)> = candidates
        .filter(|w| w.is_finite())
        .map(|w| ((w - reference).norm(), w))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (d0, best) = all[0];
    let separation = all
        .iter()
        .skip(1)
        .map(|(_, w)| (w - best).norm())
        .fold(f64::INFINITY, f64::min);
    if let Some(&(d1, _)) = all.get(1) {
        if d1 - d0 <= ambiguity * d1.max(f64::MIN_POSITIVE) {
            return Err(MapError::AmbiguousBranch);
        }
    }
    Ok((best, separation))
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::numeric::format_complex;
        match self.family {
            Family::UnicriticalPoly { degree, c } => {
                write!(f, "poly:d={degree},c={}", format_complex(c))
            }
            Family::Exponential { a, c } => {
                write!(f, "exp:a={},c={}", format_complex(a), format_complex(c))
            }
        }
    }
}

impl FromStr for MapSpec {
    type Err = MapError;

    /// Parses `poly:d=<int>,c=<complex>` or `exp:a=<complex>,c=<complex>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MapError::Parse(s.to_string());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(err)?;
        let mut fields = Vec::new();
        for part in rest.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(err)?;
            fields.push((k.trim(), v.trim()));
        }
        let get = |key: &str| -> Result<&str, MapError> {
            let mut hits = fields.iter().filter(|(k, _)| *k == key);
            let v = hits.next().map(|(_, v)| *v).ok_or_else(err)?;
            if hits.next().is_some() {
                return Err(err());
            }
            Ok(v)
        };
        match kind.trim() {
            "poly" => {
                if fields.len() != 2 {
                    return Err(err());
                }
                let d: u32 = get("d")?.parse().map_err(|_| err())?;
                let c = parse_complex(get("c")?).ok_or_else(err)?;
                MapSpec::unicritical(d, c)
            }
            "exp" => {
                if fields.len() != 2 {
                    return Err(err());
                }
                let a = parse_complex(get("a")?).ok_or_else(err)?;
                let c = parse_complex(get("c")?).ok_or_else(err)?;
                MapSpec::exponential(a, c)
            }
            _ => Err(err()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad(c: Complex64) -> MapSpec {
        MapSpec::unicritical(2, c).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(quad(c64(-2.0, 0.0)).eval(c64(2.0, 0.0)).unwrap(), c64(2.0, 0.0));
        assert_eq!(quad(c64(0.0, 1.0)).eval(c64(-1.0, 1.0)).unwrap(), c64(0.0, -1.0));
        let e = MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
        assert_eq!(e.eval(c64(0.0, 0.0)).unwrap(), c64(1.0, 0.0));
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(quad(c64(-2.0, 0.0)).deriv(c64(2.0, 0.0)).unwrap(), c64(4.0, 0.0));
        assert_eq!(quad(c64(0.0, 1.0)).deriv(c64(0.0, -1.0)).unwrap(), c64(0.0, -2.0));
        let e = MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
        assert_eq!(e.deriv(c64(0.0, 0.0)).unwrap(), c64(1.0, 0.0));
    }

    #[test]
    fn overflow_is_an_error() {
        let e = MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
        assert!(matches!(e.eval(c64(800.0, 0.0)), Err(MapError::Overflow { .. })));
        assert!(matches!(e.deriv(c64(800.0, 0.0)), Err(MapError::Overflow { .. })));
        let p = MapSpec::unicritical(2, c64(0.0, 0.0)).unwrap();
        assert!(matches!(p.eval(c64(1e200, 0.0)), Err(MapError::Overflow { .. })));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MapSpec::unicritical(1, c64(0.0, 0.0)).is_err());
        assert!(MapSpec::exponential(c64(0.0, 0.0), c64(0.0, 0.0)).is_err());
    }

    #[test]
    fn singular_set_examples() {
        let s = quad(c64(-2.0, 0.0)).singular_set();
        assert_eq!(s.points, vec![c64(-2.0, 0.0)]);
        assert_eq!(s.s_f, Some(3.0));
        assert!(s.bounded);
        let s = MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap().singular_set();
        assert_eq!(s.points, vec![c64(0.0, 0.0)]);
        assert_eq!(s.s_f, Some(1.0));
        let s = MapSpec::unicritical(3, c64(0.0, 0.0)).unwrap().singular_set();
        assert_eq!(s.points, vec![c64(0.0, 0.0)]);
        assert_eq!(s.s_f, Some(1.0));
    }

    #[test]
    fn singular_set_is_c_for_every_degree() {
        for d in 2..9 {
            let c = c64(0.3 * f64::from(d), -0.1);
            let s = MapSpec::unicritical(d, c).unwrap().singular_set();
            assert_eq!(s.points, vec![c]);
        }
    }

    #[test]
    fn pull_back_examples() {
        let tol = ContinuationTol::default();
        let f = quad(c64(-2.0, 0.0));
        let b = InverseBranchState::new(c64(2.0, 0.0));
        let r = f.pull_back_step(b, c64(2.0, 0.0), tol).unwrap();
        assert_eq!(r.current_point, c64(2.0, 0.0));
        assert_eq!(r.level, 1);
        let r = f.pull_back_step(b, c64(2.25, 0.0), tol).unwrap();
        assert!((r.current_point - c64(4.25f64.sqrt(), 0.0)).norm() < 1e-15);

        let g = quad(c64(0.0, 1.0));
        let b = InverseBranchState::new(c64(0.0, -1.0));
        let r = g.pull_back_step(b, c64(-1.0, 1.0), tol).unwrap();
        assert!((r.current_point - c64(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn pull_back_errors() {
        let tol = ContinuationTol::default();
        let f = quad(c64(-2.0, 0.0));
        let b = InverseBranchState::new(c64(0.0, 1.0));
        assert_eq!(f.pull_back_step(b, c64(-2.0, 0.0), tol), Err(MapError::SingularHit));
        // reference on the imaginary axis is equidistant from +-sqrt(target + 2)
        let b = InverseBranchState::new(c64(0.0, 1.0));
        assert_eq!(f.pull_back_step(b, c64(2.0, 0.0), tol), Err(MapError::AmbiguousBranch));
        let e = MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap();
        let b = InverseBranchState::new(c64(0.0, PI));
        assert_eq!(e.pull_back_step(b, c64(1.0, 0.0), tol), Err(MapError::AmbiguousBranch));
    }

    #[test]
    fn exponential_branch_tracks_imaginary_part() {
        let tol = ContinuationTol::default();
        let e = MapSpec::exponential(c64(2.0, 0.5), c64(-1.0, 0.0)).unwrap();
        let z = c64(0.3, 2.0 * PI * 3.0 + 0.2);
        let w = e.eval(z).unwrap();
        let r = e
            .pull_back_step(InverseBranchState::new(z + c64(0.01, -0.02)), w, tol)
            .unwrap();
        assert!((r.current_point - z).norm() < 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let maps = [
            quad(c64(-2.0, 0.0)),
            MapSpec::unicritical(3, c64(0.2, 0.4)).unwrap(),
            MapSpec::exponential(c64(0.5, -0.3), c64(1.0, 1.0)).unwrap(),
        ];
        let h = 1e-5;
        for f in maps {
            for _ in 0..100 {
                let z = loop {
                    let z = c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                    if z.norm() <= 3.0 {
                        break z;
                    }
                };
                let fd = (f.eval(z + h).unwrap() - f.eval(z - h).unwrap()) / (2.0 * h);
                let exact = f.deriv(z).unwrap();
                // O(h^2) truncation plus cancellation noise
                assert!((fd - exact).norm() < 1e-6 * (1.0 + exact.norm()), "{f} at {z}");
                assert!((f.log_abs_deriv(z) - exact.norm().ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn offset_pullback_agrees_with_absolute_pullback() {
        let tol = ContinuationTol::default();
        let maps = [
            quad(c64(0.0, 1.0)),
            MapSpec::unicritical(3, c64(-0.5, 0.2)).unwrap(),
            MapSpec::exponential(c64(1.0, 0.0), c64(0.0, 0.0)).unwrap(),
        ];
        for f in maps {
            let z = c64(0.7, -0.4);
            let w = f.eval(z).unwrap();
            let l_in = (0.05f64).ln();
            let l_out = l_in - f.log_abs_deriv(z);
            for k in 0..16 {
                let zeta = Complex64::from_polar(1.0, f64::from(k) * PI / 8.0);
                let off = f
                    .pull_back_offset(z, w, l_in, l_out, zeta, zeta, tol)
                    .unwrap();
                let target = w + l_in.exp() * zeta;
                let abs = f
                    .pull_back_step(InverseBranchState::new(z), target, tol)
                    .unwrap()
                    .current_point;
                let via_offset = z + l_out.exp() * off.offset;
                assert!((abs - via_offset).norm() < 1e-13, "{f}: {abs} vs {via_offset}");
            }
        }
    }

    #[test]
    fn offset_pullback_keeps_precision_for_tiny_regions() {
        let tol = ContinuationTol::default();
        let f = quad(c64(-2.0, 0.0));
        let z = c64(2.0, 0.0);
        let l_in = -200.0;
        let l_out = l_in - f.log_abs_deriv(z);
        let zeta = c64(0.0, 1.0);
        let r = f.pull_back_offset(z, z, l_in, l_out, zeta, zeta, tol).unwrap();
        // linearisation is exact to first order: offset is unchanged in scaled units
        assert!((r.offset - zeta).norm() < 1e-14);
        // the other preimage -2 is ~e^200 scaled units away
        assert!(r.separation > 1e80);
    }

    #[test]
    fn parse_and_display_grammar() {
        let f: MapSpec = "poly:d=2,c=-2".parse().unwrap();
        assert_eq!(f, quad(c64(-2.0, 0.0)));
        let f: MapSpec = "poly:d=2,c=0+1i".parse().unwrap();
        assert_eq!(f, quad(c64(0.0, 1.0)));
        let f: MapSpec = "exp:a=1,c=0.5-0.25i".parse().unwrap();
        assert_eq!(
            f,
            MapSpec::exponential(c64(1.0, 0.0), c64(0.5, -0.25)).unwrap()
        );
        for bad in ["poly:d=2", "poly:d=1,c=0", "poly:d=x,c=0", "quad:d=2,c=0", "exp:a=0,c=1", "poly:d=2,c=1,c=2", ""] {
            assert!(bad.parse::<MapSpec>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(d in 2u32..8, re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let f = MapSpec::unicritical(d, c64(re, im)).unwrap();
            let back: MapSpec = f.to_string().parse().unwrap();
            prop_assert_eq!(back, f);
            let e = MapSpec::exponential(c64(im, re + 20.0), c64(re, im)).unwrap();
            let back: MapSpec = e.to_string().parse().unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn pull_back_round_trip(re in -2.0f64..2.0, im in -2.0f64..2.0, dre in -0.05f64..0.05, dim in -0.05f64..0.05) {
            let tol = ContinuationTol::default();
            for f in [quad(c64(0.0, 1.0)), MapSpec::exponential(c64(1.0, 0.5), c64(0.2, 0.0)).unwrap()] {
                let z = c64(re, im);
                let target = f.eval(z).unwrap() + c64(dre, dim);
                if (target - f.c()).norm() < 1e-3 { continue; }
                match f.pull_back_step(InverseBranchState::new(z), target, tol) {
                    Ok(r) => prop_assert!((f.eval(r.current_point).unwrap() - target).norm() < 1e-10 * (1.0 + target.norm())),
                    Err(MapError::AmbiguousBranch) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }
}
