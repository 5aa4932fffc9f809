//! Checkable forms of the derivative lower bound and its ingredients.
//!
//! Only inequalities without unknown constants decide pass/fail. Bounds
//! that carry the unspecified absolute constants are evaluated with the
//! supplied stand-ins and, more usefully, reported as the smallest
//! constant that would make them hold on the measured data.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::conformal::{alpha, orbit_bound_d, spacing_gap_e, GeometryError};
use crate::map::MapSpec;
use crate::orbit::{GeometryConstants, MfProvenance, Orbit};
use crate::telescope::{trace_at, TailDistribution, TelescopeError, TelescopeOptions, TelescopeResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("no index has m_i >= {m}; the check is vacuous")]
    EmptyIndexSet { m: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Telescope(#[from] TelescopeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnRule {
    /// `a_n = n^{-1/5}`
    PowerFifth,
    /// `a_n = 1 / log n`
    InverseLog,
    /// `a_n = c6 / log log n`, paired with the bounded-type constants.
    InverseLogLog,
}

impl std::str::FromStr for AnRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "power_fifth" | "PowerFifth" => Ok(Self::PowerFifth),
            "inverse_log" | "InverseLog" => Ok(Self::InverseLog),
            "inverse_log_log" | "InverseLogLog" => Ok(Self::InverseLogLog),
            _ => Err(format!("unknown a_n rule `{s}` (power_fifth, inverse_log, inverse_log_log)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub gamma: f64,
    pub c_abs: f64,
    /// `c1 ..= c6`.
    pub c: [f64; 6],
    pub a_n_rule: AnRule,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            c_abs: 1.0,
            c: [1.0; 6],
            a_n_rule: AnRule::PowerFifth,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<(), BoundError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(BoundError::Domain(format!("gamma = {} outside (0, 1)", self.gamma)));
        }
        if !(self.c_abs > 0.0) || !self.c_abs.is_finite() {
            return Err(BoundError::Domain(format!("C_abs = {} must be positive", self.c_abs)));
        }
        for (k, &c) in self.c.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(BoundError::Domain(format!("c{} = {c} must be positive", k + 1)));
            }
        }
        Ok(())
    }
}

/// One evaluated claim. `pass` is exactly `measured_margin >= 0`; vacuous
/// records have no margin and pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub inputs: Value,
    pub measured_margin: Option<f64>,
    pub pass: bool,
    pub vacuous: bool,
    /// Whether this record decides the overall verdict.
    pub gating: bool,
    #[serde(rename = "M_f_provenance")]
    pub m_f_provenance: MfProvenance,
    #[serde(skip_serializing_if = "Value::is_null", default)]
    pub detail: Value,
}

impl ClaimRecord {
    pub fn measured(id: &str, inputs: Value, margin: f64, prov: MfProvenance) -> Self {
        Self {
            claim_id: id.to_string(),
            inputs,
            measured_margin: Some(margin),
            pass: margin >= 0.0,
            vacuous: false,
            gating: true,
            m_f_provenance: prov,
            detail: Value::Null,
        }
    }

    pub fn vacuous(id: &str, inputs: Value, prov: MfProvenance) -> Self {
        Self {
            claim_id: id.to_string(),
            inputs,
            measured_margin: None,
            pass: true,
            vacuous: true,
            gating: true,
            m_f_provenance: prov,
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn advisory(mut self) -> Self {
        self.gating = false;
        self
    }

    /// A non-vacuous gating record whose inequality is violated.
    pub fn is_failure(&self) -> bool {
        self.gating && !self.vacuous && !self.pass
    }
}

/// `F(m) = 0` beyond the cutoff `m_max` (or `m~_max` for bounded type).
pub fn check_m_max_cutoff(tail: &TailDistribution, constants: &GeometryConstants, bounded_type: bool) -> ClaimRecord {
    let (id, cutoff) = match (bounded_type, constants.m_tilde_max) {
        (true, Some(m)) => ("m_tilde_max_cutoff", m),
        _ => ("m_max_cutoff", constants.m_max),
    };
    ClaimRecord::measured(
        id,
        json!({ "cutoff": cutoff, "max_m": tail.max_m() }),
        cutoff - tail.max_m(),
        constants.m_f_provenance,
    )
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// The default 200-point grid on `[1e-3, m_max]`.
pub fn default_m_grid(constants: &GeometryConstants) -> Vec<f64> {
    log_grid(1e-3, constants.m_max, 200)
}

/// `F(m) <= E(m) (rho_n alpha(m))^2` at every grid point.
pub fn check_packing_bound(
    tail: &TailDistribution,
    constants: &GeometryConstants,
    grid: &[f64],
) -> Result<ClaimRecord, BoundError> {
    let rho = constants.rho_n;
    let mut margin = f64::INFINITY;
    let mut worst_m = f64::NAN;
    for &m in grid {
        let e = spacing_gap_e(m, rho)? as f64;
        let rhs = e * (rho * alpha(m)?).powi(2);
        let slack = rhs - tail.eval(m) as f64;
        if slack < margin {
            margin = slack;
            worst_m = m;
        }
    }
    Ok(ClaimRecord::measured(
        "packing_bound",
        json!({ "rho_n": rho, "grid_points": grid.len(), "grid_min": grid.first(), "grid_max": grid.last() }),
        margin,
        constants.m_f_provenance,
    )
    .with_detail(json!({ "tightest_m": worst_m })))
}

/// Orbit points `z_{i+1}`, `i` in `I_m = {i : m_i >= m}`, whose positions in
/// the ordered index set differ by at least `E(m)` are `delta_n / (2 alpha(m))`
/// apart.
pub fn check_spacing(
    z: &[Complex64],
    moduli: &[f64],
    constants: &GeometryConstants,
    m: f64,
) -> Result<ClaimRecord, BoundError> {
    let index: Vec<usize> = (0..moduli.len()).filter(|&i| moduli[i] >= m).collect();
    if index.is_empty() {
        return Err(BoundError::EmptyIndexSet { m });
    }
    if z.len() < moduli.len() + 1 {
        return Err(BoundError::Domain("orbit shorter than the moduli list".into()));
    }
    let e = spacing_gap_e(m, constants.rho_n)? as usize;
    let bound = constants.delta_n / (2.0 * alpha(m)?);
    let inputs = json!({ "m": m, "E": e, "index_set_size": index.len(), "bound": bound });
    let mut margin = f64::INFINITY;
    let mut pairs = 0usize;
    for j in 0..index.len() {
        for k in j + e.max(1)..index.len() {
            let d = (z[index[j] + 1] - z[index[k] + 1]).norm();
            margin = margin.min(d - bound);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok(ClaimRecord::vacuous("spacing", inputs, constants.m_f_provenance));
    }
    Ok(ClaimRecord::measured("spacing", inputs, margin, constants.m_f_provenance).with_detail(json!({ "pairs": pairs })))
}

/// `B(z_{i+1}, delta_n / alpha(m_i)) ⊂ f(U_i)` for every `i` with `m_i > 0`,
/// measured on the traced boundary of `f(U_i)`.
pub fn check_inner_disk(
    map: &MapSpec,
    orbit: &Orbit,
    tele: &TelescopeResult,
    constants: &GeometryConstants,
    opts: TelescopeOptions,
) -> Result<ClaimRecord, BoundError> {
    let indices: Vec<usize> = (0..tele.n).filter(|&i| tele.m[i] > 0.0).collect();
    let prov = constants.m_f_provenance;
    if indices.is_empty() {
        return Ok(ClaimRecord::vacuous("inner_disk", json!({ "indices": 0 }), prov));
    }
    let slacks: Vec<(usize, f64)> = indices
        .par_iter()
        .map(|&i| {
            let region = trace_at(map, orbit, constants, tele.log_tau[i], i + 1, opts)?;
            let need = constants.delta_n / alpha(tele.m[i])?;
            Ok((i, region.inner_radius() - need))
        })
        .collect::<Result<_, BoundError>>()?;
    let (worst, margin) = slacks
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    Ok(ClaimRecord::measured(
        "inner_disk",
        json!({ "indices": indices.len(), "samples": opts.samples }),
        margin,
        prov,
    )
    .with_detail(json!({ "tightest_i": worst })))
}

/// `|z_{i+1}| <= D(m_i)` for every `i` with `m_i > 0`.
pub fn check_orbit_bound_dm(z: &[Complex64], moduli: &[f64], constants: &GeometryConstants) -> Result<ClaimRecord, BoundError> {
    let prov = constants.m_f_provenance;
    let s_f = constants
        .s_f
        .ok_or_else(|| BoundError::Domain("D(m) needs a bounded singular set".into()))?;
    let mut margin = f64::INFINITY;
    let mut count = 0;
    for (i, &m) in moduli.iter().enumerate() {
        if m > 0.0 {
            let d = orbit_bound_d(m, constants.m_f, s_f)?;
            margin = margin.min(d.value - z[i + 1].norm());
            count += 1;
        }
    }
    let inputs = json!({ "M_f": constants.m_f, "S_f": s_f, "indices": count });
    if count == 0 {
        return Ok(ClaimRecord::vacuous("orbit_bound_D", inputs, prov));
    }
    Ok(ClaimRecord::measured("orbit_bound_D", inputs, margin, prov))
}

/// Both sides of `log|(f^n)'(z_0)| >= -log rho_n - sum m_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseDerivative {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn base_derivative_bound(orbit: &Orbit, tele: &TelescopeResult, constants: &GeometryConstants) -> (BaseDerivative, ClaimRecord) {
    let lhs = orbit.log_deriv_sum();
    let rhs = -constants.rho_n.ln() - tele.m.iter().fold(0.0, |a, b| a + b);
    let record = ClaimRecord::measured(
        "base_derivative_bound",
        json!({ "log_abs_derivative": lhs, "rhs": rhs }),
        lhs - rhs,
        constants.m_f_provenance,
    );
    (BaseDerivative { lhs, rhs }, record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPart {
    pub lower: f64,
    pub upper: f64,
    pub empirical: f64,
    /// Cap evaluated with the supplied constants.
    pub cap: f64,
    /// Name and smallest value of the constant in the cap, when there is one.
    pub required_constant: Option<(String, f64)>,
}

impl SplitPart {
    pub fn constant_free(&self) -> bool {
        self.required_constant.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSplit {
    pub rule: AnRule,
    pub a_n: f64,
    pub cutoff: f64,
    /// `[cutoff, inf)`, `[2, cutoff)`, `[a_n, 2)`, `(0, a_n)`.
    pub parts: [SplitPart; 4],
}

impl IntegralSplit {
    pub fn total(&self) -> f64 {
        self.parts.iter().fold(0.0, |a, p| a + p.empirical)
    }
}

/// `a_n` for the rule, clamped to at most 2 (small `n` makes the
/// logarithmic rules blow up).
pub fn a_n(rule: AnRule, n: usize, c6: f64) -> f64 {
    let nf = n as f64;
    let raw = match rule {
        AnRule::PowerFifth => nf.powf(-0.2),
        AnRule::InverseLog => 1.0 / nf.ln(),
        AnRule::InverseLogLog => c6 / nf.ln().ln(),
    };
    if raw > 0.0 && raw.is_finite() {
        raw.min(2.0)
    } else {
        2.0
    }
}

/// The four exact sub-integrals of `F` and their analytic caps.
pub fn integral_split(
    tail: &TailDistribution,
    constants: &GeometryConstants,
    params: &BoundParams,
    n: usize,
) -> Result<IntegralSplit, BoundError> {
    params.validate()?;
    if n == 0 {
        return Err(BoundError::Domain("n must be positive".into()));
    }
    let rule = params.a_n_rule;
    let [c1, _, _, _, c5, c6] = params.c;
    let a = a_n(rule, n, c6);
    let nf = n as f64;
    let bounded = rule == AnRule::InverseLogLog;
    let (rho, cutoff) = if bounded {
        match (constants.rho_tilde_n, constants.m_tilde_max) {
            (Some(r), Some(m)) => (r, m),
            _ => return Err(BoundError::Domain("inverse_log_log needs a bounded singular set".into())),
        }
    } else {
        (constants.rho_n, constants.m_max)
    };
    let lr = rho.ln();
    let parts_emp = [
        tail.integral_over(cutoff, f64::INFINITY),
        tail.integral_over(2.0, cutoff),
        tail.integral_over(a, 2.0),
        tail.integral_over(0.0, a),
    ];
    let part = |k: usize, cap: f64, constant: Option<(&str, f64)>| SplitPart {
        lower: [cutoff, 2.0, a, 0.0][k],
        upper: [f64::INFINITY, cutoff, 2.0, a][k],
        empirical: parts_emp[k],
        cap,
        required_constant: constant.map(|(s, v)| (s.to_string(), v)),
    };
    let parts = match rule {
        AnRule::PowerFifth | AnRule::InverseLog => {
            let unit = if rule == AnRule::PowerFifth {
                2.0 * rho * rho * nf.powf(0.8) * (rho * nf.powf(0.2)).ln()
            } else {
                let ln_n = nf.ln().max(f64::MIN_POSITIVE);
                2.0 * rho * rho * ln_n.powi(4) * (rho * ln_n).ln()
            };
            [
                part(0, 0.0, None),
                part(1, 30.0 * (rho * lr).powi(2), None),
                part(2, c1 * unit, Some(("c1", parts_emp[2] / unit))),
                part(3, nf * a, None),
            ]
        }
        AnRule::InverseLogLog => {
            let unit1 = (rho * lr).powi(2);
            let unit2 = rho * rho * lr * nf.ln().max(f64::MIN_POSITIVE);
            [
                part(0, 0.0, None),
                part(1, c5 * unit1, Some(("c5", parts_emp[1] / unit1))),
                part(2, unit2 / c6, Some(("c6_inverse", parts_emp[2] / unit2))),
                part(3, nf * a, None),
            ]
        }
    };
    Ok(IntegralSplit {
        rule,
        a_n: a,
        cutoff,
        parts,
    })
}

/// Record for the constant-free parts of a split.
pub fn split_record(split: &IntegralSplit, prov: MfProvenance) -> ClaimRecord {
    let margin = split
        .parts
        .iter()
        .filter(|p| p.constant_free())
        .map(|p| p.cap - p.empirical)
        .fold(f64::INFINITY, f64::min);
    let constants: serde_json::Map<String, Value> = split
        .parts
        .iter()
        .filter_map(|p| p.required_constant.as_ref().map(|(k, v)| (format!("{k}_min"), json!(v))))
        .collect();
    ClaimRecord::measured(
        "integral_split",
        json!({ "rule": split.rule, "a_n": split.a_n, "cutoff": split.cutoff }),
        margin,
        prov,
    )
    .with_detail(json!({ "parts": split.parts, "minimal_constants": constants }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremVariant {
    /// Derivative bound through `rho_n`.
    Thm14,
    /// Bounded-type derivative bound through `rho~_n`.
    Thm31,
}

/// Log of the right-hand side of the final derivative bound. `n` is real
/// so the formula can be probed off the integers.
pub fn theorem_rhs(constants: &GeometryConstants, params: &BoundParams, n: f64, variant: TheoremVariant) -> Result<f64, BoundError> {
    let (penalty, prefactor) = theorem_terms(constants, params.gamma, n, variant)?;
    Ok(prefactor - params.c_abs * penalty)
}

/// `(K, P)` with the bound written as `P - C K`.
fn theorem_terms(constants: &GeometryConstants, gamma: f64, n: f64, variant: TheoremVariant) -> Result<(f64, f64), BoundError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(BoundError::Domain(format!("gamma = {gamma} outside (0, 1)")));
    }
    match variant {
        TheoremVariant::Thm14 => {
            if !(n >= 1.0) {
                return Err(BoundError::Domain(format!("n = {n} < 1")));
            }
            let rho = constants.rho_n;
            let k = rho.powf(2.0 + gamma) * n.powf((4.0 + gamma) / 5.0) / (gamma * gamma);
            Ok((k, -rho.ln()))
        }
        TheoremVariant::Thm31 => {
            let rho = constants
                .rho_tilde_n
                .ok_or_else(|| BoundError::Domain("Thm31 needs a bounded singular set".into()))?;
            if !(n >= 2.0) {
                return Err(BoundError::Domain(format!("n = {n} < 2")));
            }
            let k = (rho * rho.ln()).powi(2) * n / n.ln();
            let p = (constants.delta_n / (4.0 * (constants.m_f + constants.z0_abs))).ln();
            Ok((k, p))
        }
    }
}

/// Smallest `C` for which the theorem's bound lies below `target`
/// (0 if any `C >= 0` works).
pub fn minimal_c_abs(
    constants: &GeometryConstants,
    gamma: f64,
    n: f64,
    variant: TheoremVariant,
    target: f64,
) -> Result<f64, BoundError> {
    let (k, p) = theorem_terms(constants, gamma, n, variant)?;
    Ok(((p - target) / k).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeInput {
    pub n: usize,
    pub rho_n: f64,
    pub sum_m: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub n: usize,
    pub envelope: f64,
    pub chi: f64,
}

/// `-(log rho_n)/n - (1/n) sum m_i` next to the measured `chi_n`.
pub fn chi_lower_envelope(series: &[EnvelopeInput]) -> Vec<EnvelopePoint> {
    series
        .iter()
        .map(|s| {
            let nf = s.n as f64;
            EnvelopePoint {
                n: s.n,
                envelope: -s.rho_n.ln() / nf - s.sum_m / nf,
                chi: s.chi,
            }
        })
        .collect()
}

/// Exponent of `n` in the envelope when `rho_n` grows like `n^beta`.
pub fn rate_exponent(beta: f64, gamma: f64) -> f64 {
    -0.2 + 2.0 * beta + gamma * (beta + 0.2)
}

/// Supremum of admissible `gamma` for a given `beta < 1/10`.
pub fn max_gamma(beta: f64) -> f64 {
    (1.0 - 10.0 * beta) / (1.0 + 5.0 * beta)
}

/// Final bound values, all in log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalBounds {
    pub log_abs_derivative: f64,
    pub base_der_bound_rhs: f64,
    pub koebe_rhs: f64,
    pub thm14_rhs: f64,
    pub thm31_rhs: Option<f64>,
    pub c_abs_min_thm14: f64,
    pub c_abs_min_thm31: Option<f64>,
    pub sum_m: f64,
    pub chi: f64,
    pub chi_lower_envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claims: Vec<ClaimRecord>,
    #[serde(rename = "final")]
    pub final_bounds: FinalBounds,
}

impl BoundReport {
    pub fn failures(&self) -> Vec<&ClaimRecord> {
        self.claims.iter().filter(|c| c.is_failure()).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Runs every check on a finished telescope.
pub fn evaluate(
    map: &MapSpec,
    orbit: &Orbit,
    tele: &TelescopeResult,
    constants: &GeometryConstants,
    params: &BoundParams,
    opts: TelescopeOptions,
) -> Result<BoundReport, BoundError> {
    params.validate()?;
    let tail = TailDistribution::from_moduli(&tele.m);
    let prov = constants.m_f_provenance;
    let n = tele.n;
    let bounded = constants.s_f.is_some();
    let mut claims = Vec::new();

    let (base, base_record) = base_derivative_bound(orbit, tele, constants);
    claims.push(base_record);
    claims.push(check_m_max_cutoff(&tail, constants, false));
    if bounded {
        claims.push(check_m_max_cutoff(&tail, constants, true));
    }
    claims.push(check_packing_bound(&tail, constants, &default_m_grid(constants))?);
    claims.push(check_inner_disk(map, orbit, tele, constants, opts)?);
    if bounded {
        claims.push(check_orbit_bound_dm(&orbit.z, &tele.m, constants)?);
    }
    let spacing_m = 0.5 * tail.max_m();
    claims.push(if tail.is_empty() {
        ClaimRecord::vacuous("spacing", json!({ "m": null, "index_set_size": 0 }), prov)
    } else {
        check_spacing(&orbit.z, &tele.m, constants, spacing_m)?
    });
    let mut rules = vec![AnRule::PowerFifth, AnRule::InverseLog];
    if bounded {
        rules.push(AnRule::InverseLogLog);
    }
    for rule in rules {
        let p = BoundParams { a_n_rule: rule, ..*params };
        let split = integral_split(&tail, constants, &p, n)?;
        let mut record = split_record(&split, prov);
        if rule != params.a_n_rule {
            record = record.advisory();
        }
        record.claim_id = format!("integral_split.{}", rule_name(rule));
        claims.push(record);
    }

    let koebe_rhs = crate::telescope::koebe_log_lower_bound(tele, constants);
    claims.push(ClaimRecord::measured(
        "koebe_consistency",
        json!({ "log_tau_0": tele.log_tau[0] }),
        base.lhs - koebe_rhs,
        prov,
    ));

    let nf = n as f64;
    let thm14_rhs = theorem_rhs(constants, params, nf, TheoremVariant::Thm14)?;
    let c_abs_min_thm14 = minimal_c_abs(constants, params.gamma, nf, TheoremVariant::Thm14, base.rhs)?;
    claims.push(
        ClaimRecord::measured(
            "sandwich.thm14",
            json!({ "gamma": params.gamma, "C_abs": params.c_abs }),
            base.rhs - thm14_rhs,
            prov,
        )
        .advisory()
        .with_detail(json!({ "c_abs_min": c_abs_min_thm14 })),
    );
    let (thm31_rhs, c_abs_min_thm31) = if bounded && n >= 2 {
        let rhs = theorem_rhs(constants, params, nf, TheoremVariant::Thm31)?;
        let cmin = minimal_c_abs(constants, params.gamma, nf, TheoremVariant::Thm31, base.lhs)?;
        claims.push(
            ClaimRecord::measured("sandwich.thm31", json!({ "C_abs": params.c_abs }), base.lhs - rhs, prov)
                .advisory()
                .with_detail(json!({ "c_abs_min": cmin })),
        );
        (Some(rhs), Some(cmin))
    } else {
        (None, None)
    };

    let sum_m = tail.integral();
    let envelope = chi_lower_envelope(&[EnvelopeInput {
        n,
        rho_n: constants.rho_n,
        sum_m,
        chi: orbit.chi(),
    }])[0];
    Ok(BoundReport {
        claims,
        final_bounds: FinalBounds {
            log_abs_derivative: base.lhs,
            base_der_bound_rhs: base.rhs,
            koebe_rhs,
            thm14_rhs,
            thm31_rhs,
            c_abs_min_thm14,
            c_abs_min_thm31,
            sum_m,
            chi: orbit.chi(),
            chi_lower_envelope: envelope.envelope,
        },
    })
}

fn rule_name(rule: AnRule) -> &'static str {
    match rule {
        AnRule::PowerFifth => "power_fifth",
        AnRule::InverseLog => "inverse_log",
        AnRule::InverseLogLog => "inverse_log_log",
    }
}
