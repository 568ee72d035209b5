//! Single- and multi-attribute utility functions.
//!
//! A [`MultiUtility`] combines a utility of money `u1` and a utility of the
//! normalized ESG rating `u2` through
//!
//! ```text
//! u(x, s) = u1(x) + u2(s) + k·u1(x)·u2(s)
//! ```
//!
//! which for `k ≠ 0` is the multiplicative form
//! `1 + k·u = (1 + k·u1)(1 + k·u2)`. The capped variant sets `u = −∞`
//! outside the effective domain where either factor `1 + k·uᵢ` is negative,
//! which makes `u` non-decreasing in both arguments.
//!
//! Ratings live on the normalized scale `[0, 1]`.

use std::collections::BTreeMap;

use crate::error::{input, Error, Result};
use crate::extreal::ExtReal;

/// Closed interval of admissible arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const RATING: Domain = Domain { lo: 0.0, hi: 1.0 };

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Parametric single-attribute utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarUtility {
    /// `(1/γ)(1 − e^{−γx})` on ℝ.
    Exponential { gamma: f64 },
    /// `(c/γ)(1 − e^{−γ(s − s0)})` on the rating scale.
    ScaledShiftedExponential { gamma: f64, c: f64, s0: f64 },
    /// `0` for `s ≥ threshold`, `−penalty` below. `penalty` may be `+∞`.
    Step { threshold: f64, penalty: f64 },
    /// `(s − s0)^γ` above the reference point, `−λ(s0 − s)^γ` below.
    SShaped { s0: f64, gamma: f64, lambda: f64 },
    /// `x` on ℝ (risk-neutral).
    Linear,
    /// Identically zero on ℝ.
    Zero,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Input(msg()))
    }
}

impl ScalarUtility {
    pub fn exponential(gamma: f64) -> Result<Self> {
        let u = ScalarUtility::Exponential { gamma };
        u.validate()?;
        Ok(u)
    }

    pub fn scaled_exponential(gamma: f64, c: f64, s0: f64) -> Result<Self> {
        let u = ScalarUtility::ScaledShiftedExponential { gamma, c, s0 };
        u.validate()?;
        Ok(u)
    }

    pub fn step(threshold: f64, penalty: f64) -> Result<Self> {
        let u = ScalarUtility::Step { threshold, penalty };
        u.validate()?;
        Ok(u)
    }

    pub fn s_shaped(s0: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let u = ScalarUtility::SShaped { s0, gamma, lambda };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalarUtility::Exponential { gamma } => {
                check(gamma.is_finite() && gamma > 0.0, || {
                    format!("exponential utility needs gamma > 0, got {gamma}")
                })
            }
            ScalarUtility::ScaledShiftedExponential { gamma, c, s0 } => {
                check(gamma.is_finite() && gamma > 0.0, || {
                    format!("scaled exponential utility needs gamma > 0, got {gamma}")
                })?;
                // c = 0 switches the rating utility off entirely.
                check(c.is_finite() && c >= 0.0, || {
                    format!("scaled exponential utility needs c >= 0, got {c}")
                })?;
                check(Domain::RATING.contains(s0), || {
                    format!("baseline s0 must lie in [0, 1], got {s0}")
                })
            }
            ScalarUtility::Step { threshold, penalty } => {
                check(Domain::RATING.contains(threshold), || {
                    format!("step threshold must lie in [0, 1], got {threshold}")
                })?;
                check(penalty >= 0.0, || format!("step penalty must be in [0, inf], got {penalty}"))
            }
            ScalarUtility::SShaped { s0, gamma, lambda } => {
                check(Domain::RATING.contains(s0), || {
                    format!("reference point must lie in [0, 1], got {s0}")
                })?;
                check(gamma > 0.0 && gamma <= 1.0, || {
                    format!("S-shaped exponent must lie in (0, 1], got {gamma}")
                })?;
                check(lambda.is_finite() && lambda >= 0.0, || {
                    format!("loss aversion must be >= 0, got {lambda}")
                })
            }
            ScalarUtility::Linear | ScalarUtility::Zero => Ok(()),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            ScalarUtility::Exponential { .. } | ScalarUtility::Linear | ScalarUtility::Zero => Domain::REAL_LINE,
            _ => Domain::RATING,
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, x: f64) -> Result<ExtReal> {
        if x.is_nan() || !self.domain().contains(x) {
            let d = self.domain();
            return input(format!("argument {x} outside the utility domain [{}, {}]", d.lo, d.hi));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; callers guarantee `x` lies in [`Self::domain`].
    #[inline]
    pub fn value(&self, x: f64) -> ExtReal {
        match *self {
            ScalarUtility::Exponential { gamma } => ExtReal::new(-(-gamma * x).exp_m1() / gamma),
            ScalarUtility::ScaledShiftedExponential { gamma, c, s0 } => {
                if c == 0.0 {
                    return ExtReal::ZERO;
                }
                ExtReal::new(-c * (-gamma * (x - s0)).exp_m1() / gamma)
            }
            ScalarUtility::Step { threshold, penalty } => {
                if x >= threshold {
                    ExtReal::ZERO
                } else {
                    ExtReal::new(-penalty)
                }
            }
            ScalarUtility::SShaped { s0, gamma, lambda } => {
                if x >= s0 {
                    ExtReal::new((x - s0).powf(gamma))
                } else {
                    ExtReal::new(-lambda * (s0 - x).powf(gamma))
                }
            }
            ScalarUtility::Linear => ExtReal::new(x),
            ScalarUtility::Zero => ExtReal::ZERO,
        }
    }

    /// Derivative where it exists; the step utility reports its a.e. slope 0.
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            ScalarUtility::Exponential { gamma } => (-gamma * x).exp(),
            ScalarUtility::ScaledShiftedExponential { gamma, c, s0 } => c * (-gamma * (x - s0)).exp(),
            ScalarUtility::Step { .. } | ScalarUtility::Zero => 0.0,
            ScalarUtility::Linear => 1.0,
            ScalarUtility::SShaped { s0, gamma, lambda } => {
                let d = (x - s0).abs();
                let scale = if x >= s0 { 1.0 } else { lambda };
                if d == 0.0 && gamma < 1.0 {
                    f64::INFINITY
                } else {
                    scale * gamma * d.powf(gamma - 1.0)
                }
            }
        }
    }

    pub fn form_name(&self) -> &'static str {
        match self {
            ScalarUtility::Exponential { .. } => "exponential",
            ScalarUtility::ScaledShiftedExponential { .. } => "scaled_exponential",
            ScalarUtility::Step { .. } => "step",
            ScalarUtility::SShaped { .. } => "s_shaped",
            ScalarUtility::Linear => "linear",
            ScalarUtility::Zero => "zero",
        }
    }
}

/// Monotonicity diagnostics at one probe point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub point: f64,
    /// `1 + k·uᵢ(point)`.
    pub factor: ExtReal,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// For each rating probe `s`: is `x ↦ u(x, s)` non-decreasing.
    pub in_x: Vec<ProbePoint>,
    /// For each money probe `x`: is `s ↦ u(x, s)` non-decreasing.
    pub in_s: Vec<ProbePoint>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.in_x.iter().chain(&self.in_s).all(|p| p.monotone)
    }
}

/// `u(x, s) = u1(x) + u2(s) + k·u1(x)·u2(s)`, optionally capped to its
/// effective domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiUtility {
    pub u1: ScalarUtility,
    pub u2: ScalarUtility,
    pub k: f64,
    pub capped: bool,
}

impl MultiUtility {
    pub fn new(u1: ScalarUtility, u2: ScalarUtility, k: f64, capped: bool) -> Result<Self> {
        u1.validate()?;
        u2.validate()?;
        if u1.domain() != Domain::REAL_LINE {
            return Err(Error::Unsupported(format!(
                "financial utility must be defined on the real line, got `{}`",
                u1.form_name()
            )));
        }
        check(k.is_finite(), || format!("interaction coefficient k must be finite, got {k}"))?;
        Ok(MultiUtility { u1, u2, k, capped })
    }

    /// Purely financial utility: `u2 ≡ 0`, `k = 0`.
    pub fn financial(u1: ScalarUtility) -> Result<Self> {
        MultiUtility::new(u1, ScalarUtility::Zero, 0.0, false)
    }

    /// Exponential money utility combined with a scaled, shifted exponential
    /// rating utility.
    pub fn entropic(gamma1: f64, gamma2: f64, c: f64, s0: f64, k: f64, capped: bool) -> Result<Self> {
        MultiUtility::new(
            ScalarUtility::exponential(gamma1)?,
            ScalarUtility::scaled_exponential(gamma2, c, s0)?,
            k,
            capped,
        )
    }

    /// Reference parametrization: `γ1 = 1, γ2 = 0.75, c = 0.1, k = 1, s0 = 0.5982`, uncapped.
    pub fn reference() -> Self {
        MultiUtility::entropic(1.0, 0.75, 0.1, 0.5982, 1.0, false).expect("valid reference parameters")
    }

    #[inline]
    fn factor(&self, v: ExtReal) -> ExtReal {
        v * self.k + 1.0
    }

    #[inline]
    fn in_effective_domain(&self, v: ExtReal) -> bool {
        let f = self.factor(v);
        f.is_finite() && f.value() >= 0.0
    }

    /// Combines already evaluated `u1(x)` and `u2(s)`.
    #[inline]
    pub fn combine(&self, a: ExtReal, b: ExtReal) -> ExtReal {
        if self.capped && !(self.in_effective_domain(a) && self.in_effective_domain(b)) {
            return ExtReal::NEG_INF;
        }
        a + b + a * b * self.k
    }

    #[inline]
    pub fn eval(&self, x: f64, s: f64) -> ExtReal {
        self.combine(self.u1.value(x), self.u2.value(s))
    }

    /// Partial derivatives `(∂u/∂x, ∂u/∂s)` of the uncapped expression.
    pub fn gradient(&self, x: f64, s: f64) -> (f64, f64) {
        let a = self.u1.value(x).value();
        let b = self.u2.value(s).value();
        (self.u1.slope(x) * (1.0 + self.k * b), self.u2.slope(s) * (1.0 + self.k * a))
    }

    /// Thresholds `(x̲, s̲)` below which `1 + k·u1` resp. `1 + k·u2` turn
    /// negative, for exponential parts and `k > 0`.
    pub fn effective_domain_bounds(&self) -> Result<(f64, f64)> {
        let (g1, g2, c, s0) = match (self.u1, self.u2) {
            (ScalarUtility::Exponential { gamma: g1 }, ScalarUtility::ScaledShiftedExponential { gamma, c, s0 }) => {
                (g1, gamma, c, s0)
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "closed-form effective domain needs exponential/scaled_exponential parts, got {}/{}",
                    self.u1.form_name(),
                    self.u2.form_name()
                )))
            }
        };
        if self.k <= 0.0 {
            return Err(Error::Unsupported(format!(
                "closed-form effective domain needs k > 0, got {}",
                self.k
            )));
        }
        let x_lo = -(g1 / self.k).ln_1p() / g1;
        let s_lo = if c == 0.0 {
            f64::NEG_INFINITY
        } else {
            -(g2 / (c * self.k)).ln_1p() / g2 + s0
        };
        Ok((x_lo, s_lo))
    }

    /// Where `u` is non-decreasing in each argument: `x ↦ u(x, s)` is monotone
    /// iff `1 + k·u2(s) ∈ {−∞} ∪ [0, ∞]`, and symmetrically in `s`. The capped
    /// construction is monotone everywhere.
    pub fn monotonicity_report(&self, x_probe: &[f64], s_probe: &[f64]) -> MonotonicityReport {
        let probe = |point: f64, v: ExtReal| {
            let factor = self.factor(v);
            let monotone = self.capped || factor.is_neg_inf() || factor.value() >= 0.0;
            ProbePoint { point, factor, monotone }
        };
        MonotonicityReport {
            in_x: s_probe.iter().map(|&s| probe(s, self.u2.value(s))).collect(),
            in_s: x_probe.iter().map(|&x| probe(x, self.u1.value(x))).collect(),
        }
    }

    /// Flat key-value form (`u1.form`, `u1.gamma`, `u2.*`, `k`, `capped`).
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        push_scalar(&mut out, "u1", &self.u1);
        push_scalar(&mut out, "u2", &self.u2);
        out.push(("k".into(), self.k.to_string()));
        out.push(("capped".into(), self.capped.to_string()));
        out
    }

    /// Inverse of [`Self::to_kv`]. Missing keys fall back to the reference
    /// parametrization; keys outside the utility schema are ignored here and
    /// left to the caller.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        let reference = MultiUtility::reference();
        let u1 = scalar_from_kv(kv, "u1", &reference.u1)?;
        let u2 = scalar_from_kv(kv, "u2", &reference.u2)?;
        let k = get_f64(kv, "k")?.unwrap_or(reference.k);
        let capped = match kv.get("capped").map(|s| s.trim()) {
            None => reference.capped,
            Some("true") | Some("1") => true,
            Some("false") | Some("0") => false,
            Some(other) => return input(format!("key `capped`: expected true/false, got `{other}`")),
        };
        MultiUtility::new(u1, u2, k, capped)
    }
}

/// Keys understood by [`MultiUtility::from_kv`].
pub const UTILITY_KEYS: &[&str] = &[
    "u1.form",
    "u1.gamma",
    "u2.form",
    "u2.gamma",
    "u2.c",
    "u2.s0",
    "u2.threshold",
    "u2.penalty",
    "u2.lambda",
    "k",
    "capped",
];

fn push_scalar(out: &mut Vec<(String, String)>, prefix: &str, u: &ScalarUtility) {
    let mut kv = |key: &str, v: String| out.push((format!("{prefix}.{key}"), v));
    kv("form", u.form_name().to_string());
    match *u {
        ScalarUtility::Exponential { gamma } => kv("gamma", gamma.to_string()),
        ScalarUtility::ScaledShiftedExponential { gamma, c, s0 } => {
            kv("gamma", gamma.to_string());
            kv("c", c.to_string());
            kv("s0", s0.to_string());
        }
        ScalarUtility::Step { threshold, penalty } => {
            kv("threshold", threshold.to_string());
            kv("penalty", penalty.to_string());
        }
        ScalarUtility::SShaped { s0, gamma, lambda } => {
            kv("s0", s0.to_string());
            kv("gamma", gamma.to_string());
            kv("lambda", lambda.to_string());
        }
        ScalarUtility::Linear | ScalarUtility::Zero => {}
    }
}

fn get_f64(kv: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match kv.get(key) {
        None => Ok(None),
        Some(raw) => parse_f64(raw)
            .map(Some)
            .ok_or_else(|| Error::Input(format!("key `{key}`: expected a number, got `{raw}`"))),
    }
}

pub(crate) fn parse_f64(raw: &str) -> Option<f64> {
    match raw.trim() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        s => s.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}

fn scalar_from_kv(kv: &BTreeMap<String, String>, prefix: &str, fallback: &ScalarUtility) -> Result<ScalarUtility> {
    let key = |k: &str| format!("{prefix}.{k}");
    let form = kv.get(&key("form")).map(|s| s.trim().to_string());
    let form = form.as_deref().unwrap_or(fallback.form_name());
    // Parameters default to the fallback's when the form matches, else to the reference values.
    let fb = if form == fallback.form_name() { *fallback } else { ScalarUtility::Zero };
    let num = |k: &str, default: f64| -> Result<f64> { Ok(get_f64(kv, &key(k))?.unwrap_or(default)) };
    let u = match form {
        "exponential" => {
            let g = match fb {
                ScalarUtility::Exponential { gamma } => gamma,
                _ => 1.0,
            };
            ScalarUtility::exponential(num("gamma", g)?)?
        }
        "scaled_exponential" => {
            let (g, c, s0) = match fb {
                ScalarUtility::ScaledShiftedExponential { gamma, c, s0 } => (gamma, c, s0),
                _ => (0.75, 0.1, 0.5982),
            };
            ScalarUtility::scaled_exponential(num("gamma", g)?, num("c", c)?, num("s0", s0)?)?
        }
        "step" => ScalarUtility::step(num("threshold", 0.5)?, num("penalty", f64::INFINITY)?)?,
        "s_shaped" => ScalarUtility::s_shaped(num("s0", 0.5)?, num("gamma", 0.88)?, num("lambda", 2.25)?)?,
        "linear" => ScalarUtility::Linear,
        "zero" => ScalarUtility::Zero,
        other => return input(format!("key `{}`: unknown utility form `{other}`", key("form"))),
    };
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference_u2() -> ScalarUtility {
        ScalarUtility::scaled_exponential(0.75, 0.1, 0.5982).unwrap()
    }

    #[test]
    fn exponential_vanishes_at_zero() {
        let u = ScalarUtility::exponential(1.0).unwrap();
        assert_eq!(u.eval(0.0).unwrap().value(), 0.0);
    }

    #[test]
    fn reference_rating_utility_anchors() {
        let u2 = reference_u2();
        assert_abs_diff_eq!(u2.eval(0.0).unwrap().value(), -0.0755, epsilon = 5e-4);
        assert_abs_diff_eq!(u2.eval(1.0).unwrap().value(), 0.0347, epsilon = 5e-4);
        let u = MultiUtility::reference();
        assert_abs_diff_eq!(1.0 + u.k * u2.value(0.0).value(), 0.9245, epsilon = 5e-4);
        assert_abs_diff_eq!(1.0 + u.k * u2.value(1.0).value(), 1.0347, epsilon = 5e-4);
    }

    #[test]
    fn infinite_step_penalty_below_threshold() {
        let u = ScalarUtility::step(0.5, f64::INFINITY).unwrap();
        assert!(u.eval(0.4).unwrap().is_neg_inf());
        assert_eq!(u.eval(0.5).unwrap().value(), 0.0);
    }

    #[test]
    fn domain_violations_are_input_errors() {
        assert!(matches!(reference_u2().eval(1.2), Err(Error::Input(_))));
        assert!(matches!(reference_u2().eval(f64::NAN), Err(Error::Input(_))));
        assert!(ScalarUtility::exponential(0.0).is_err());
        assert!(ScalarUtility::step(1.5, 1.0).is_err());
        assert!(ScalarUtility::s_shaped(0.5, 1.5, 1.0).is_err());
        assert!(MultiUtility::new(reference_u2(), ScalarUtility::Zero, 0.0, false).is_err());
    }

    #[test]
    fn additive_utility_vanishes_at_baseline() {
        let u = MultiUtility::new(ScalarUtility::exponential(1.0).unwrap(), reference_u2(), 0.0, false).unwrap();
        assert_eq!(u.eval(0.0, 0.5982).value(), 0.0);
    }

    #[test]
    fn effective_domain_bounds_closed_form() {
        let u = MultiUtility::entropic(1.0, 0.75, 0.1, 0.5982, 1.0, true).unwrap();
        let (x_lo, s_lo) = u.effective_domain_bounds().unwrap();
        assert_abs_diff_eq!(x_lo, -std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s_lo, -(8.5f64).ln() / 0.75 + 0.5982, epsilon = 1e-12);
        assert_abs_diff_eq!(s_lo, -2.25522, epsilon = 1e-5);

        // Sign change of 1 + k·u_i located by bisection.
        let bisect = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            hi
        };
        let fx = |x: f64| 1.0 + (1.0 - (-x).exp());
        assert_abs_diff_eq!(bisect(&fx, -5.0, 0.0), x_lo, epsilon = 1e-12);
        let fs = |s: f64| 1.0 + (0.1 / 0.75) * (1.0 - (-0.75 * (s - 0.5982)).exp());
        assert_abs_diff_eq!(bisect(&fs, -10.0, 0.0), s_lo, epsilon = 1e-12);

        // Capped evaluation outside the rating part of the domain: u2 is only
        // defined on [0, 1], so probe through `combine` directly.
        let below = u.u2.value(s_lo - 0.1);
        assert!(1.0 + u.k * below.value() < 0.0);
        assert!(u.combine(u.u1.value(0.1), below).is_neg_inf());
        assert!(u.eval(x_lo - 0.01, 0.5).is_neg_inf());
        assert!(u.eval(x_lo + 0.01, 0.0).is_finite());
    }

    #[test]
    fn effective_domain_bounds_vanish_as_k_shrinks() {
        let u = MultiUtility::entropic(1.0, 0.75, 0.1, 0.5982, 1e-300, true).unwrap();
        let (x_lo, s_lo) = u.effective_domain_bounds().unwrap();
        assert!(x_lo < -600.0 && s_lo < -600.0);
        assert!(matches!(
            MultiUtility::reference().effective_domain_bounds().map(|_| ()),
            Ok(())
        ));
        let step = MultiUtility::new(ScalarUtility::exponential(1.0).unwrap(), ScalarUtility::step(0.5, 1.0).unwrap(), 1.0, true)
            .unwrap();
        assert!(matches!(step.effective_domain_bounds(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn monotonicity_report_cases() {
        let xs = [-3.0, -1.0, 0.0, 1.0];
        let additive = MultiUtility::new(ScalarUtility::exponential(1.0).unwrap(), reference_u2(), 0.0, false).unwrap();
        assert!(additive.monotonicity_report(&xs, &[0.0, 0.5, 1.0]).is_monotone());

        let u = MultiUtility::reference();
        let report = u.monotonicity_report(&[], &[0.0]);
        assert!(report.in_x[0].monotone);
        assert_abs_diff_eq!(report.in_x[0].factor.value(), 0.9245, epsilon = 5e-4);

        // Probe below s̲ directly through the factor (outside the rating scale).
        let (_, s_lo) = u.effective_domain_bounds().unwrap();
        let f = 1.0 + u.k * u.u2.value(s_lo - 0.1).value();
        assert!(f < 0.0);
        // u1(x) < −1 for x < −ln 2, so s ↦ u(x, s) is decreasing there.
        let report = u.monotonicity_report(&[-1.0, 0.0], &[]);
        assert!(!report.in_s[0].monotone);
        assert!(report.in_s[1].monotone);
        let capped = MultiUtility { capped: true, ..u };
        assert!(capped.monotonicity_report(&[-1.0, 0.0], &[0.0]).is_monotone());
    }

    #[test]
    fn kv_round_trip() {
        let u = MultiUtility::new(
            ScalarUtility::exponential(2.0).unwrap(),
            ScalarUtility::step(0.3, f64::INFINITY).unwrap(),
            0.0,
            true,
        )
        .unwrap();
        let kv: BTreeMap<String, String> = u.to_kv().into_iter().collect();
        assert_eq!(MultiUtility::from_kv(&kv).unwrap(), u);
        assert_eq!(MultiUtility::from_kv(&BTreeMap::new()).unwrap(), MultiUtility::reference());
        let bad: BTreeMap<String, String> = [("u2.form".to_string(), "cubic".to_string())].into();
        assert!(MultiUtility::from_kv(&bad).is_err());
    }

    #[test]
    fn s_shaped_loss_branch_uses_distance() {
        let u = ScalarUtility::s_shaped(0.5, 0.5, 2.0).unwrap();
        assert_eq!(u.eval(0.5).unwrap().value(), 0.0);
        assert_abs_diff_eq!(u.eval(0.25).unwrap().value(), -2.0 * 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(u.eval(0.75).unwrap().value(), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn multiplicative_identity(x in -3.0f64..3.0, s in 0.0f64..1.0, k in -2.0f64..2.0) {
            prop_assume!(k != 0.0);
            let u = MultiUtility::entropic(1.3, 0.75, 0.1, 0.5982, k, false).unwrap();
            let lhs = 1.0 + k * u.eval(x, s).value();
            let rhs = (1.0 + k * u.u1.value(x).value()) * (1.0 + k * u.u2.value(s).value());
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn capped_below_uncapped(x in -5.0f64..3.0, s in 0.0f64..1.0, k in 0.1f64..10.0) {
            let capped = MultiUtility::entropic(1.0, 0.75, 2.0, 0.5982, k, true).unwrap();
            let uncapped = MultiUtility { capped: false, ..capped };
            let (c, v) = (capped.eval(x, s), uncapped.eval(x, s));
            prop_assert!(c <= v);
            if c.is_finite() {
                prop_assert_eq!(c.value(), v.value());
            }
            let on_domain = 1.0 + k * capped.u1.value(x).value() >= 0.0 && 1.0 + k * capped.u2.value(s).value() >= 0.0;
            prop_assert_eq!(on_domain, c.is_finite());
        }

        #[test]
        fn rating_utility_sign(s in 0.0f64..1.0, s0 in 0.0f64..1.0) {
            let u = ScalarUtility::scaled_exponential(0.75, 0.1, s0).unwrap();
            prop_assert_eq!(u.value(s).value() >= 0.0, s >= s0);
        }

        #[test]
        fn exponential_concavity(x1 in -5.0f64..5.0, x2 in -5.0f64..5.0, lam in 0.0f64..1.0, g in 0.1f64..3.0) {
            let u = ScalarUtility::exponential(g).unwrap();
            let mid = u.value(lam * x1 + (1.0 - lam) * x2).value();
            let chord = lam * u.value(x1).value() + (1.0 - lam) * u.value(x2).value();
            prop_assert!(mid >= chord - 1e-12);
        }

        #[test]
        fn reference_points_vanish(s0 in 0.0f64..1.0, g in 0.05f64..1.0, lam in 0.0f64..5.0) {
            prop_assert_eq!(ScalarUtility::s_shaped(s0, g, lam).unwrap().value(s0).value(), 0.0);
            prop_assert_eq!(ScalarUtility::step(s0, lam).unwrap().value(s0).value(), 0.0);
        }
    }
}
