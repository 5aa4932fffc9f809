//! Small numerical helpers: accurate complex `log1p`/`expm1`, complex
//! literal parsing, and closed-polyline geometry.

use num_complex::Complex64;

/// `log(1 + u)` with full relative accuracy for small `u`.
pub fn clog1p(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let re = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
        let im = u.im.atan2(1.0 + u.re);
        Complex64::new(re, im)
    } else {
        (u + 1.0).ln()
    }
}

/// `exp(w) - 1` with full relative accuracy for small `w`.
pub fn complex_expm1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let half = (0.5 * w.im).sin();
        let re = w.re.exp_m1() * w.im.cos() - 2.0 * half * half;
        let im = w.re.exp() * w.im.sin();
        Complex64::new(re, im)
    } else {
        w.exp() - 1.0
    }
}

/// Parses `<re>`, `<re>+<im>i`, `<re>-<im>i`, `<im>i` (and bare `i`).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(s).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, parse_imag(&body[k..])?),
        None => (0.0, parse_imag(body)?),
    };
    Some(Complex64::new(re, im))
}

fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_imag(s: &str) -> Option<f64> {
    match s.trim() {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        t => parse_real(t),
    }
}

/// Inverse of [`parse_complex`]; exact for every finite value.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Fixed 17-significant-digit rendering used by every CSV emitter.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Winding number of the closed polyline `poly` around `p`. The last
/// vertex is joined back to the first.
pub fn winding_number(p: Complex64, poly: &[Complex64]) -> i32 {
    if poly.len() < 3 {
        return 0;
    }
    let mut winding = 0;
    for (a, b) in edges(poly) {
        if a.im <= p.im {
            if b.im > p.im && cross(a - p, b - p) > 0.0 {
                winding += 1;
            }
        } else if b.im <= p.im && cross(a - p, b - p) < 0.0 {
            winding -= 1;
        }
    }
    winding
}

/// Euclidean distance from `p` to the closed polyline.
pub fn distance_to_polyline(p: Complex64, poly: &[Complex64]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => (p - poly[0]).norm(),
        _ => edges(poly)
            .map(|(a, b)| distance_to_segment(p, a, b))
            .fold(f64::INFINITY, f64::min),
    }
}

pub fn distance_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// True when any edge of closed polyline `a` properly crosses or touches
/// an edge of closed polyline `b`.
pub fn polylines_intersect(a: &[Complex64], b: &[Complex64]) -> bool {
    let eb: Vec<(Complex64, Complex64, [f64; 4])> = edges(b).map(|(p, q)| (p, q, bbox(p, q))).collect();
    edges(a).any(|(p, q)| {
        let ba = bbox(p, q);
        eb.iter().any(|&(r, s, bb)| {
            ba[0] <= bb[2] && bb[0] <= ba[2] && ba[1] <= bb[3] && bb[1] <= ba[3] && segments_intersect(p, q, r, s)
        })
    })
}

fn bbox(p: Complex64, q: Complex64) -> [f64; 4] {
    [p.re.min(q.re), p.im.min(q.im), p.re.max(q.re), p.im.max(q.im)]
}

fn segments_intersect(p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> bool {
    let d1 = cross(s - r, p - r);
    let d2 = cross(s - r, q - r);
    let d3 = cross(q - p, r - p);
    let d4 = cross(q - p, s - p);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(r, s, p))
        || (d2 == 0.0 && on_segment(r, s, q))
        || (d3 == 0.0 && on_segment(p, q, r))
        || (d4 == 0.0 && on_segment(p, q, s))
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn edges(poly: &[Complex64]) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
    let n = poly.len();
    (0..n).map(move |k| (poly[k], poly[(k + 1) % n]))
}
