//! Shortfall risk on an empirical scenario set.
//!
//! `ρ[X, S] = inf{ m : E[u(X + m, S)] ≥ 0 }`, with the expectation taken
//! under the uniform measure on the samples. The infimum is located by
//! bracket doubling followed by bisection on `m ↦ E[u(X + m, S)]`.

use std::io::Write;

use crate::error::{input, Error, Result};
use crate::extreal::ExtReal;
use crate::scenarios::Position;
use crate::utility::{MultiUtility, ScalarUtility};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskConfig {
    /// Absolute tolerance on the cash amount.
    pub root_tol: f64,
    /// Initial bracket half-width.
    pub bracket_seed: f64,
    /// Brackets expanding past `±bracket_cap` report an infinite risk.
    pub bracket_cap: f64,
    pub max_iter: usize,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            root_tol: 1e-10,
            bracket_seed: 1.0,
            bracket_cap: 1e9,
            max_iter: 500,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0 && self.root_tol.is_finite()) {
            return input(format!("root_tol must be > 0, got {}", self.root_tol));
        }
        if !(self.bracket_seed > 0.0 && self.bracket_seed.is_finite()) {
            return input(format!("bracket_seed must be > 0, got {}", self.bracket_seed));
        }
        if !(self.bracket_cap > self.bracket_seed) {
            return input(format!("bracket_cap must exceed bracket_seed, got {}", self.bracket_cap));
        }
        if self.max_iter == 0 {
            return input("max_iter must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskResult {
    /// Risk in units of the notional. `+∞` when no cash amount makes the
    /// position acceptable, `−∞` when any amount does.
    pub value: ExtReal,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// Final bracket `[lo, hi]`: unacceptable at `lo`, acceptable at `hi`.
    pub bracket: (f64, f64),
    /// `E[u(X + value, S)]`.
    pub acceptance_utility: ExtReal,
}

/// `m ↦ E[u(X + m, S)]` with the rating part evaluated once.
pub(crate) struct Acceptance<'a> {
    utility: &'a MultiUtility,
    x: &'a [f64],
    u2: Vec<ExtReal>,
    /// Every sample has `1 + k·u2(s) ∈ {−∞} ∪ [0, ∞]`.
    monotone: bool,
}

impl<'a> Acceptance<'a> {
    pub(crate) fn new(utility: &'a MultiUtility, pos: Position<'a>) -> Result<Self> {
        if pos.is_empty() {
            return input("scenario set is empty");
        }
        let u2: Vec<ExtReal> = pos.s.iter().map(|&s| utility.u2.value(s)).collect();
        let monotone = utility.capped
            || u2.iter().all(|&v| {
                let f = v * utility.k + 1.0;
                f.is_neg_inf() || f.value() >= 0.0
            });
        Ok(Acceptance {
            utility,
            x: pos.x,
            u2,
            monotone,
        })
    }

    pub(crate) fn expected(&self, m: f64) -> ExtReal {
        let mut sum = 0.0;
        let mut pos_inf = false;
        for (&x, &b) in self.x.iter().zip(&self.u2) {
            let v = self.utility.combine(self.utility.u1.value(x + m), b);
            if v.is_neg_inf() {
                return ExtReal::NEG_INF;
            }
            if v.is_pos_inf() {
                pos_inf = true;
            } else {
                sum += v.value();
            }
        }
        if pos_inf {
            ExtReal::POS_INF
        } else {
            ExtReal::new(sum / self.x.len() as f64)
        }
    }

    /// `E[u(X + m, S)]` and its derivative in `m` (NaN where undefined).
    fn expected_with_slope(&self, m: f64) -> (ExtReal, f64) {
        let mut slope = 0.0;
        for (&x, &b) in self.x.iter().zip(&self.u2) {
            slope += if b.is_finite() { self.utility.u1.slope(x + m) * (1.0 + self.utility.k * b.value()) } else { f64::NAN };
        }
        (self.expected(m), slope / self.x.len() as f64)
    }

    /// Brackets the crossing starting around `guess`, then narrows the
    /// bracket to `root_tol`.
    pub(crate) fn solve(&self, cfg: &RiskConfig, guess: f64) -> Result<RiskResult> {
        cfg.validate()?;
        let accepts = |v: ExtReal| v.value() >= 0.0;
        let mut evals = 1;
        let start = if guess.is_finite() { guess.clamp(-cfg.bracket_cap, cfg.bracket_cap) } else { 0.0 };
        let v0 = self.expected(start);
        let (mut lo, mut hi);
        let mut step = cfg.bracket_seed;
        if accepts(v0) {
            hi = start;
            loop {
                let m = start - step;
                if m < -cfg.bracket_cap {
                    return Ok(RiskResult {
                        value: ExtReal::NEG_INF,
                        iterations: evals,
                        bracket: (f64::NEG_INFINITY, hi),
                        acceptance_utility: self.expected(hi),
                    });
                }
                evals += 1;
                if accepts(self.expected(m)) {
                    hi = m;
                    step *= 2.0;
                } else {
                    lo = m;
                    break;
                }
            }
        } else {
            lo = start;
            loop {
                let m = start + step;
                if m > cfg.bracket_cap {
                    if !self.monotone {
                        self.check_no_lower_acceptance(cfg, start, &mut evals)?;
                    }
                    return Ok(RiskResult {
                        value: ExtReal::POS_INF,
                        iterations: evals,
                        bracket: (lo, f64::INFINITY),
                        acceptance_utility: v0,
                    });
                }
                evals += 1;
                if accepts(self.expected(m)) {
                    hi = m;
                    break;
                } else {
                    lo = m;
                    step *= 2.0;
                }
            }
        }

        // Newton steps from the latest point, bisection whenever a step leaves
        // the bracket or fails to halve the previous step.
        evals += 1;
        let (mut pv, mut pd) = self.expected_with_slope(hi);
        let mut p = hi;
        let mut hi_value = accepts(pv).then_some(pv);
        let mut last_step = f64::INFINITY;
        let mut converged = false;
        for _ in 0..cfg.max_iter {
            let width = hi - lo;
            if width <= cfg.root_tol {
                converged = true;
                break;
            }
            let mid = lo + 0.5 * width;
            if mid <= lo || mid >= hi {
                converged = true;
                break;
            }
            let newton = if pv.is_finite() && pd.is_finite() && pd > 0.0 { p - pv.value() / pd } else { f64::NAN };
            let use_newton = newton > lo && newton < hi && (newton - p).abs() <= 0.5 * last_step;
            let mut c = if use_newton { newton } else { mid };
            let half_tol = 0.5 * cfg.root_tol;
            if (c - p).abs() < half_tol {
                c = if c >= p { p + half_tol } else { p - half_tol };
            }
            if c <= lo || c >= hi {
                c = mid;
            }
            evals += 1;
            let (v, d) = self.expected_with_slope(c);
            if accepts(v) {
                hi = c;
                hi_value = Some(v);
            } else {
                lo = c;
            }
            last_step = if use_newton { (c - p).abs() } else { f64::INFINITY };
            (p, pv, pd) = (c, v, d);
        }
        if !converged && hi - lo > cfg.root_tol {
            return Err(Error::NoSolution(format!(
                "root search did not reach tolerance {} within {} iterations (bracket [{lo}, {hi}])",
                cfg.root_tol, cfg.max_iter
            )));
        }
        let hi_value = hi_value.unwrap_or_else(|| self.expected(hi));

        if !self.monotone {
            self.check_no_lower_acceptance(cfg, lo, &mut evals)?;
        }

        Ok(RiskResult {
            value: ExtReal::new(hi),
            iterations: evals,
            bracket: (lo, hi),
            acceptance_utility: hi_value,
        })
    }

    /// Scans below the crossing for a second acceptable region.
    fn check_no_lower_acceptance(&self, cfg: &RiskConfig, lo: f64, evals: &mut usize) -> Result<()> {
        let mut step = cfg.bracket_seed;
        loop {
            let m = lo - step;
            if m < -cfg.bracket_cap {
                return Ok(());
            }
            *evals += 1;
            if self.expected(m).value() >= 0.0 {
                return Err(Error::NonMonotone {
                    acceptable_at: m,
                    unacceptable_at: lo,
                });
            }
            step *= 2.0;
        }
    }
}

/// Mean of `u(X + m, S)` over the samples; `−∞` if any sample is `−∞`.
pub fn expected_utility(utility: &MultiUtility, pos: Position<'_>, m: f64) -> Result<ExtReal> {
    Ok(Acceptance::new(utility, pos)?.expected(m))
}

/// `ρ[X, S]` for the multi-attribute utility.
pub fn shortfall_risk(utility: &MultiUtility, pos: Position<'_>, cfg: &RiskConfig) -> Result<RiskResult> {
    shortfall_risk_from(utility, pos, cfg, 0.0)
}

/// [`shortfall_risk`] with the bracket search started at `guess`.
pub fn shortfall_risk_from(utility: &MultiUtility, pos: Position<'_>, cfg: &RiskConfig, guess: f64) -> Result<RiskResult> {
    Acceptance::new(utility, pos)?.solve(cfg, guess)
}

/// Classical shortfall risk `ρ̂[X]` of the money utility alone.
pub fn financial_shortfall_risk(u1: &ScalarUtility, pos: Position<'_>, cfg: &RiskConfig) -> Result<RiskResult> {
    shortfall_risk(&MultiUtility::financial(*u1)?, pos, cfg)
}

/// Entropic risk `(1/γ)·log(mean(e^{−γX}))`, evaluated with a max shift.
pub fn entropic_closed_form(gamma: f64, pos: Position<'_>) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return input(format!("gamma must be > 0, got {gamma}"));
    }
    if pos.is_empty() {
        return input("scenario set is empty");
    }
    let shift = pos.x.iter().map(|&x| -gamma * x).fold(f64::NEG_INFINITY, f64::max);
    let mean = pos.x.iter().map(|&x| (-gamma * x - shift).exp()).sum::<f64>() / pos.len() as f64;
    Ok((shift + mean.ln()) / gamma)
}

/// Risks entering the ESG premium, computed on common samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Premium {
    pub esg: RiskResult,
    pub financial: RiskResult,
    /// `ρ[X, S] − ρ̂[X]`.
    pub premium: ExtReal,
}

pub fn esg_risk_premium(utility: &MultiUtility, pos: Position<'_>, cfg: &RiskConfig) -> Result<Premium> {
    let esg = shortfall_risk(utility, pos, cfg)?;
    let financial = financial_shortfall_risk(&utility.u1, pos, cfg)?;
    Ok(Premium {
        esg,
        financial,
        premium: premium_of(esg.value, financial.value),
    })
}

/// Difference of two risks; an infinite ESG risk dominates, otherwise an
/// infinite financial risk flips sign.
pub fn premium_of(esg: ExtReal, financial: ExtReal) -> ExtReal {
    if !esg.is_finite() {
        esg
    } else if !financial.is_finite() {
        -financial
    } else {
        ExtReal::new(esg.value() - financial.value())
    }
}

/// `mean(u2(Sᵢ))`: zero for indifference positions, positive for favorable
/// and negative for unfavorable exposures.
pub fn indifference_gap(u2: &ScalarUtility, pos: Position<'_>) -> Result<f64> {
    if pos.is_empty() {
        return input("scenario set is empty");
    }
    let sum: f64 = pos.s.iter().map(|&s| u2.value(s).value()).sum();
    if !sum.is_finite() {
        return input("rating utility is not finite on the sample support");
    }
    Ok(sum / pos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftPoint {
    pub shift: f64,
    pub rho: ExtReal,
    /// Finite-difference slope of the risk in the shift, where defined.
    pub marginal: Option<f64>,
}

/// `m ↦ ρ[X, clamp(S + m, 0, 1)]` over an increasing grid in `[−1, 1]`.
pub fn shift_curve(utility: &MultiUtility, pos: Position<'_>, shifts: &[f64], cfg: &RiskConfig) -> Result<Vec<ShiftPoint>> {
    if shifts.is_empty() {
        return input("shift grid is empty");
    }
    if let Some(bad) = shifts.iter().find(|m| !(-1.0..=1.0).contains(*m)) {
        return input(format!("shift {bad} outside [-1, 1]"));
    }
    if shifts.windows(2).any(|w| w[1] <= w[0]) {
        return input("shift grid must be strictly increasing");
    }
    let mut shifted = vec![0.0; pos.len()];
    let mut rhos = Vec::with_capacity(shifts.len());
    let mut guess = 0.0;
    for &m in shifts {
        for (t, &s) in shifted.iter_mut().zip(pos.s) {
            *t = (s + m).clamp(0.0, 1.0);
        }
        let r = shortfall_risk_from(utility, Position::new(pos.x, &shifted)?, cfg, guess)?;
        if let Some(v) = r.value.finite() {
            guess = v;
        }
        rhos.push(r.value);
    }
    let n = shifts.len();
    let slope = |i: usize, j: usize| -> Option<f64> {
        let (a, b) = (rhos[i].finite()?, rhos[j].finite()?);
        Some((b - a) / (shifts[j] - shifts[i]))
    };
    Ok((0..n)
        .map(|i| ShiftPoint {
            shift: shifts[i],
            rho: rhos[i],
            marginal: if n < 2 {
                None
            } else if i == 0 {
                slope(0, 1)
            } else if i == n - 1 {
                slope(n - 2, n - 1)
            } else {
                slope(i - 1, i + 1)
            },
        })
        .collect())
}

/// Writes `shift,rho,marginal_rho`; undefined slopes are left empty.
pub fn write_shift_curve<W: Write>(out: W, curve: &[ShiftPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shift", "rho", "marginal_rho"])?;
    for p in curve {
        w.write_record([
            p.shift.to_string(),
            p.rho.to_string(),
            p.marginal.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the per-asset risk table.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub asset: String,
    pub rho_financial: ExtReal,
    pub rho_esg: ExtReal,
    pub premium: ExtReal,
    pub esg_rating_now: f64,
}

/// Writes `asset,rho_financial,rho_esg,premium,esg_rating_now`.
pub fn write_risk_table<W: Write>(out: W, rows: &[RiskRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "rho_financial", "rho_esg", "premium", "esg_rating_now"])?;
    for r in rows {
        w.write_record([
            r.asset.clone(),
            r.rho_financial.to_string(),
            r.rho_esg.to_string(),
            r.premium.to_string(),
            r.esg_rating_now.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
