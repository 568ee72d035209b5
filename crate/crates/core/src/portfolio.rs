//! Minimum-risk portfolios over the capped simplex and a rolling-window
//! backtest.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::calibration::{estimate_basket, CorrelationConvention, HistoricalSeries};
use crate::error::{input, Error, Result};
use crate::extreal::ExtReal;
use crate::risk::{Acceptance, RiskConfig};
use crate::scenarios::{normalize_rating, sample_basket, Position, ScenarioSet};
use crate::utility::{MultiUtility, ScalarUtility};

/// Tolerance on the weight invariants.
pub const WEIGHT_TOL: f64 = 1e-12;

/// `{w : Σw = budget, lower ≤ wᵢ ≤ upper}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibleSet {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub budget: f64,
}

impl FeasibleSet {
    pub const DEFAULT_UPPER: f64 = 0.2;

    pub fn new(n: usize, lower: f64, upper: f64) -> Result<Self> {
        let fs = FeasibleSet {
            n,
            lower,
            upper,
            budget: 1.0,
        };
        fs.validate()?;
        Ok(fs)
    }

    /// Long-only with the default 20% cap.
    pub fn capped(n: usize) -> Result<Self> {
        FeasibleSet::new(n, 0.0, Self::DEFAULT_UPPER)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return input("feasible set needs at least one asset");
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower <= self.upper) {
            return input(format!("need finite lower <= upper, got [{}, {}]", self.lower, self.upper));
        }
        let n = self.n as f64;
        if n * self.upper < self.budget - WEIGHT_TOL || n * self.lower > self.budget + WEIGHT_TOL {
            return input(format!(
                "infeasible: {} assets with bounds [{}, {}] cannot sum to {}",
                self.n, self.lower, self.upper, self.budget
            ));
        }
        Ok(())
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.n
            && (w.iter().sum::<f64>() - self.budget).abs() <= WEIGHT_TOL * self.n.max(1) as f64
            && w.iter().all(|&x| x >= self.lower - WEIGHT_TOL && x <= self.upper + WEIGHT_TOL)
    }

    pub fn equal_weights(&self) -> Weights {
        Weights {
            w: vec![self.budget / self.n as f64; self.n],
        }
    }
}

/// A feasible weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    w: Vec<f64>,
}

impl Weights {
    pub fn new(w: Vec<f64>, fs: &FeasibleSet) -> Result<Self> {
        if !fs.contains(&w) {
            return input(format!("weights {w:?} violate the feasible set"));
        }
        Ok(Weights { w })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.w
    }
}

fn check_weights(w: &[f64], scen: &ScenarioSet) -> Result<()> {
    if w.len() != scen.n_assets() {
        return input(format!("{} weights for {} assets", w.len(), scen.n_assets()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return input("weights must be finite");
    }
    Ok(())
}

fn fill_exposure(w: &[f64], scen: &ScenarioSet, x: &mut [f64], s: &mut [f64]) {
    x.fill(0.0);
    s.fill(0.0);
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let p = scen.position(i);
        for k in 0..x.len() {
            x[k] += wi * p.x[k];
            s[k] += wi * p.s[k];
        }
    }
    s.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

/// `X^w = Σ wᵢ Xᵢ` and `S^w = Σ wᵢ Sᵢ` per sample.
pub fn portfolio_exposure(w: &[f64], scen: &ScenarioSet) -> Result<ScenarioSet> {
    check_weights(w, scen)?;
    let mut x = vec![0.0; scen.count()];
    let mut s = vec![0.0; scen.count()];
    fill_exposure(w, scen, &mut x, &mut s);
    ScenarioSet::from_columns(scen.horizon, scen.seed, 1, x, s)
}

/// Euclidean projection onto the feasible set.
pub fn project_feasible(v: &[f64], fs: &FeasibleSet) -> Result<Weights> {
    fs.validate()?;
    if v.len() != fs.n {
        return input(format!("{} values for {} assets", v.len(), fs.n));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return input("cannot project non-finite values");
    }
    let (lo, up, b) = (fs.lower, fs.upper, fs.budget);
    let total = |lambda: f64| v.iter().map(|&x| (x - lambda).clamp(lo, up)).sum::<f64>();
    // total() is non-increasing in λ; bracket the budget crossing.
    let mut l_lo = v.iter().copied().fold(f64::INFINITY, f64::min) - up;
    let mut l_hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo;
    for _ in 0..200 {
        let mid = 0.5 * (l_lo + l_hi);
        if mid <= l_lo || mid >= l_hi {
            break;
        }
        if total(mid) > b {
            l_lo = mid;
        } else {
            l_hi = mid;
        }
    }
    let mut lambda = 0.5 * (l_lo + l_hi);

    // Solve exactly on the active set found by bisection.
    let (mut fixed_sum, mut free_sum, mut free) = (0.0, 0.0, 0usize);
    for &x in v {
        let y = x - lambda;
        if y <= lo {
            fixed_sum += lo;
        } else if y >= up {
            fixed_sum += up;
        } else {
            free_sum += x;
            free += 1;
        }
    }
    if free > 0 {
        let exact = (free_sum - (b - fixed_sum)) / free as f64;
        let consistent = v.iter().all(|&x| {
            let (y0, y1) = (x - lambda, x - exact);
            (y0 <= lo) == (y1 <= lo) && (y0 >= up) == (y1 >= up)
        });
        if consistent {
            lambda = exact;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - lambda).clamp(lo, up)).collect();

    // Spread any rounding residue over coordinates with room.
    let residue = b - w.iter().sum::<f64>();
    if residue != 0.0 {
        let room: Vec<usize> = (0..w.len())
            .filter(|&i| if residue > 0.0 { w[i] < up } else { w[i] > lo })
            .collect();
        if !room.is_empty() {
            let share = residue / room.len() as f64;
            for i in room {
                w[i] = (w[i] + share).clamp(lo, up);
            }
        }
    }
    Weights::new(w, fs)
}

/// What `minimize_risk` minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Classical shortfall risk of `X^w` alone.
    Financial(ScalarUtility),
    /// Joint risk of `(X^w, S^w)`.
    Esg(MultiUtility),
}

impl Objective {
    pub fn utility(&self) -> Result<MultiUtility> {
        match *self {
            Objective::Financial(u1) => MultiUtility::financial(u1),
            Objective::Esg(u) => Ok(u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    /// Objective-value tolerance across multistarts.
    pub opt_tol: f64,
    /// Random starts in addition to equal weights.
    pub multistarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Step for the finite-difference gradient fallback.
    pub fd_step: f64,
    pub risk: RiskConfig,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            opt_tol: 1e-6,
            multistarts: 8,
            seed: 0,
            max_iter: 500,
            fd_step: 1e-6,
            risk: RiskConfig::default(),
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        self.risk.validate()?;
        if !(self.opt_tol > 0.0) {
            return input(format!("opt_tol must be > 0, got {}", self.opt_tol));
        }
        if !(self.fd_step > 0.0) {
            return input(format!("fd_step must be > 0, got {}", self.fd_step));
        }
        if self.max_iter == 0 {
            return input("max_iter must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub weights: Weights,
    pub risk: f64,
    /// Starts that produced a finite objective.
    pub finite_starts: usize,
    /// Risk solves performed.
    pub evaluations: usize,
}

/// Objective evaluation on reused exposure buffers.
struct Evaluator<'a> {
    utility: MultiUtility,
    scen: &'a ScenarioSet,
    cfg: &'a OptConfig,
    x: Vec<f64>,
    s: Vec<f64>,
    evaluations: usize,
}

impl<'a> Evaluator<'a> {
    fn new(utility: MultiUtility, scen: &'a ScenarioSet, cfg: &'a OptConfig) -> Self {
        Evaluator {
            utility,
            scen,
            cfg,
            x: vec![0.0; scen.count()],
            s: vec![0.0; scen.count()],
            evaluations: 0,
        }
    }

    fn value(&mut self, w: &[f64], guess: f64) -> Result<ExtReal> {
        fill_exposure(w, self.scen, &mut self.x, &mut self.s);
        self.evaluations += 1;
        let acc = Acceptance::new(&self.utility, Position::new(&self.x, &self.s)?)?;
        Ok(acc.solve(&self.cfg.risk, guess)?.value)
    }

    /// `∂ρ/∂wᵢ = −E[u_x·Xᵢ + u_s·Sᵢ] / E[u_x]` at the solved risk level,
    /// with central differences when the denominator degenerates.
    fn gradient(&mut self, w: &[f64], rho: f64) -> Result<Vec<f64>> {
        fill_exposure(w, self.scen, &mut self.x, &mut self.s);
        let m = self.x.len();
        let n = w.len();
        let mut num = vec![0.0; n];
        let mut den = 0.0;
        let (mut ux, mut us) = (vec![0.0; m], vec![0.0; m]);
        for k in 0..m {
            let (a, b) = self.utility.gradient(self.x[k] + rho, self.s[k]);
            ux[k] = a;
            us[k] = b;
            den += a;
        }
        for (i, g) in num.iter_mut().enumerate() {
            let p = self.scen.position(i);
            *g = (0..m).map(|k| ux[k] * p.x[k] + us[k] * p.s[k]).sum();
        }
        if den.is_finite() && den > 0.0 && num.iter().all(|g| g.is_finite()) {
            return Ok(num.into_iter().map(|g| -g / den).collect());
        }
        self.fd_gradient(w, rho)
    }

    fn fd_gradient(&mut self, w: &[f64], rho: f64) -> Result<Vec<f64>> {
        let h = self.cfg.fd_step;
        let mut g = vec![0.0; w.len()];
        let mut probe = w.to_vec();
        for i in 0..w.len() {
            probe[i] = w[i] + h;
            let up = self.value(&probe, rho)?;
            probe[i] = w[i] - h;
            let down = self.value(&probe, rho)?;
            probe[i] = w[i];
            g[i] = (up - down).value() / (2.0 * h);
            if !g[i].is_finite() {
                return Err(Error::Degenerate(format!("gradient undefined in weight {i}")));
            }
        }
        Ok(g)
    }

    /// Projected gradient descent with Barzilai–Borwein trial steps and
    /// Armijo backtracking. `None` if the start is not acceptable at any cash.
    fn descend(&mut self, start: Weights, fs: &FeasibleSet) -> Result<Option<(Vec<f64>, f64)>> {
        let mut w = start.into_inner();
        let f0 = self.value(&w, 0.0)?;
        if f0.is_pos_inf() {
            return Ok(None);
        }
        if f0.is_neg_inf() {
            return Err(Error::Degenerate("risk is -inf: the portfolio is acceptable at any cash level".into()));
        }
        let mut f = f0.value();
        let mut g = self.gradient(&w, f)?;
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax == 0.0 {
            return Ok(Some((w, f)));
        }
        let ftol = 1e-3 * self.cfg.opt_tol;
        let mut alpha = 0.1 / gmax;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut quiet = 0;
        for _ in 0..self.cfg.max_iter {
            if let Some((pw, pg)) = &prev {
                let (mut ss, mut sy) = (0.0, 0.0);
                for i in 0..w.len() {
                    let (si, yi) = (w[i] - pw[i], g[i] - pg[i]);
                    ss += si * si;
                    sy += si * yi;
                }
                if sy > 0.0 && ss > 0.0 {
                    alpha = ss / sy;
                }
            }
            alpha = alpha.clamp(1e-12, 1e12);
            let mut accepted = None;
            for _ in 0..50 {
                let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - alpha * gi).collect();
                let cand = project_feasible(&trial, fs)?.into_inner();
                let mut decrease = 0.0;
                let mut moved = 0.0f64;
                for i in 0..w.len() {
                    decrease += g[i] * (cand[i] - w[i]);
                    moved = moved.max((cand[i] - w[i]).abs());
                }
                if moved < 1e-13 {
                    break;
                }
                let fc = self.value(&cand, f)?;
                if fc.is_finite() && fc.value() <= f + 1e-4 * decrease {
                    accepted = Some((cand, fc.value()));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            let gain = f - fc;
            let gc = self.gradient(&cand, fc)?;
            prev = Some((std::mem::replace(&mut w, cand), std::mem::replace(&mut g, gc)));
            f = fc;
            if gain < ftol {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        Ok(Some((w, f)))
    }
}

fn random_start(rng: &mut ChaCha8Rng, fs: &FeasibleSet) -> Result<Weights> {
    let draws: Vec<f64> = (0..fs.n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    let v: Vec<f64> = draws.iter().map(|d| fs.lower + (fs.budget - fs.n as f64 * fs.lower) * d / total).collect();
    project_feasible(&v, fs)
}

/// Minimum-risk weights from an equal-weight start plus seeded random starts.
pub fn minimize_risk(objective: &Objective, scen: &ScenarioSet, fs: &FeasibleSet, cfg: &OptConfig) -> Result<OptResult> {
    cfg.validate()?;
    fs.validate()?;
    if scen.n_assets() != fs.n {
        return input(format!("scenario set has {} assets, feasible set {}", scen.n_assets(), fs.n));
    }
    let utility = objective.utility()?;
    let mut ev = Evaluator::new(utility, scen, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut finite_starts = 0;
    for start in 0..=cfg.multistarts {
        let w0 = if start == 0 { fs.equal_weights() } else { random_start(&mut rng, fs)? };
        if let Some((w, f)) = ev.descend(w0, fs)? {
            finite_starts += 1;
            if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
                best = Some((w, f));
            }
        }
    }
    let Some((w, risk)) = best else {
        return Err(Error::InfeasibleAcceptance);
    };
    Ok(OptResult {
        weights: Weights::new(w, fs)?,
        risk,
        finite_starts,
        evaluations: ev.evaluations,
    })
}

/// Risk of a fixed portfolio.
pub fn portfolio_risk(objective: &Objective, scen: &ScenarioSet, w: &[f64], cfg: &RiskConfig) -> Result<ExtReal> {
    check_weights(w, scen)?;
    let utility = objective.utility()?;
    let exp = portfolio_exposure(w, scen)?;
    Ok(Acceptance::new(&utility, exp.position(0))?.solve(cfg, 0.0)?.value)
}

/// Vendor risk bands, closed on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RiskCategory {
    Negligible,
    Low,
    Medium,
    High,
    Severe,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 5] = [
        RiskCategory::Negligible,
        RiskCategory::Low,
        RiskCategory::Medium,
        RiskCategory::High,
        RiskCategory::Severe,
    ];

    pub fn of_raw(raw: f64) -> RiskCategory {
        match raw {
            r if r < 10.0 => RiskCategory::Negligible,
            r if r < 20.0 => RiskCategory::Low,
            r if r < 30.0 => RiskCategory::Medium,
            r if r < 40.0 => RiskCategory::High,
            _ => RiskCategory::Severe,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RiskCategory::Negligible => "negligible",
            RiskCategory::Low => "low",
            RiskCategory::Medium => "medium",
            RiskCategory::High => "high",
            RiskCategory::Severe => "severe",
        }
    }
}

/// Portfolio weight per risk band, in `RiskCategory::ALL` order.
pub fn risk_category_breakdown(w: &[f64], ratings_raw: &[f64]) -> Result<[f64; 5]> {
    if w.len() != ratings_raw.len() {
        return input(format!("{} weights for {} ratings", w.len(), ratings_raw.len()));
    }
    let mut out = [0.0; 5];
    for (&wi, &r) in w.iter().zip(ratings_raw) {
        if !(0.0..=50.0).contains(&r) {
            return input(format!("raw rating {r} outside [0, 50]"));
        }
        out[RiskCategory::of_raw(r) as usize] += wi;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Minimum classical entropic risk.
    Entropic,
    /// Minimum entropic ESG risk.
    Esg,
    Equal,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Entropic => "entropic",
            Strategy::Esg => "esg",
            Strategy::Equal => "equal",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Strategy>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let st: Strategy = part.parse()?;
            if !out.contains(&st) {
                out.push(st);
            }
        }
        if out.is_empty() {
            return input("no strategies given");
        }
        Ok(out)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropic" => Ok(Strategy::Entropic),
            "esg" | "entropic-esg" => Ok(Strategy::Esg),
            "equal" => Ok(Strategy::Equal),
            other => input(format!("unknown strategy `{other}` (expected entropic, esg or equal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Monthly returns per estimation window.
    pub window: usize,
    pub samples: usize,
    pub horizon: f64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub lower: f64,
    pub upper: f64,
    /// ESG objective; its `u1` is the classical objective.
    pub utility: MultiUtility,
    pub convention: CorrelationConvention,
    pub opt: OptConfig,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            window: 20,
            samples: 10_000,
            horizon: 1.0 / 12.0,
            seed: 0,
            strategies: vec![Strategy::Entropic, Strategy::Esg, Strategy::Equal],
            lower: 0.0,
            upper: FeasibleSet::DEFAULT_UPPER,
            utility: MultiUtility::reference(),
            convention: CorrelationConvention::Conditional,
            opt: OptConfig::default(),
        }
    }
}

/// One strategy over one holding month.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    /// Date the weights were chosen.
    pub rebalance_date: NaiveDate,
    /// End of the holding month.
    pub date: NaiveDate,
    pub strategy: Strategy,
    pub weights: Vec<f64>,
    pub log_return: f64,
    /// `Σ wᵢ·S^norm` at the end of the holding month.
    pub esg_rating: f64,
    pub cum_log_return: f64,
    /// Raw ratings at the rebalance date, for the category breakdown.
    pub ratings_raw: Vec<f64>,
    /// Achieved objective, if optimized.
    pub risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestLedger {
    pub tickers: Vec<String>,
    pub strategies: Vec<Strategy>,
    /// Date-major, strategies in configured order.
    pub rows: Vec<LedgerRow>,
    pub warnings: Vec<String>,
}

impl BacktestLedger {
    pub fn rows_for(&self, strategy: Strategy) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn mean_rating(&self, strategy: Strategy) -> Option<f64> {
        let v: Vec<f64> = self.rows_for(strategy).map(|r| r.esg_rating).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn final_cum_log_return(&self, strategy: Strategy) -> Option<f64> {
        self.rows_for(strategy).last().map(|r| r.cum_log_return)
    }

    /// `date,strategy,cum_log_return,portfolio_esg_rating`
    pub fn write_ledger_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "strategy", "cum_log_return", "portfolio_esg_rating"])?;
        for r in &self.rows {
            w.write_record([
                r.date.format("%Y-%m-%d").to_string(),
                r.strategy.to_string(),
                r.cum_log_return.to_string(),
                r.esg_rating.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `date,strategy,asset,weight`, dated at the rebalance.
    pub fn write_weights_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "strategy", "asset", "weight"])?;
        for r in &self.rows {
            for (name, wi) in self.tickers.iter().zip(&r.weights) {
                w.write_record([
                    r.rebalance_date.format("%Y-%m-%d").to_string(),
                    r.strategy.to_string(),
                    name.clone(),
                    wi.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `date,strategy,category,weight`, dated at the rebalance.
    pub fn write_category_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "strategy", "category", "weight"])?;
        for r in &self.rows {
            let cats = risk_category_breakdown(&r.weights, &r.ratings_raw)?;
            for (c, wi) in RiskCategory::ALL.iter().zip(cats) {
                w.write_record([
                    r.rebalance_date.format("%Y-%m-%d").to_string(),
                    r.strategy.to_string(),
                    c.name().to_string(),
                    wi.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Log-return of holding `w` from observation `t` to `t + 1`.
pub fn realized_log_return(h: &HistoricalSeries, w: &[f64], t: usize) -> f64 {
    w.iter().enumerate().map(|(i, wi)| wi * h.prices[i][t + 1] / h.prices[i][t]).sum::<f64>().ln()
}

/// `Σ wᵢ·S^norm_{i,t}`.
pub fn realized_rating(h: &HistoricalSeries, w: &[f64], t: usize) -> Result<f64> {
    let mut s = 0.0;
    for (i, wi) in w.iter().enumerate() {
        s += wi * normalize_rating(h.ratings_raw[i][t])?;
    }
    Ok(s)
}

/// Monthly rolling re-estimation and re-optimization. Rebalances at every
/// observation `t` with `window` trailing returns and a following month.
pub fn run_backtest(h: &HistoricalSeries, cfg: &BacktestConfig) -> Result<BacktestLedger> {
    h.validate()?;
    cfg.opt.validate()?;
    if cfg.window < 3 {
        return input(format!("window must be >= 3 months, got {}", cfg.window));
    }
    if h.len() < cfg.window + 2 {
        return input(format!(
            "series has {} observations; window {} needs at least {}",
            h.len(),
            cfg.window,
            cfg.window + 2
        ));
    }
    if cfg.strategies.is_empty() {
        return input("no strategies given");
    }
    if cfg.samples == 0 {
        return input("samples must be >= 1");
    }
    let n = h.n_assets();
    let mut warnings = Vec::new();
    let upper = if n as f64 * cfg.upper < 1.0 {
        warnings.push(format!("cap {} infeasible for {n} assets; using {}", cfg.upper, 1.0 / n as f64));
        1.0 / n as f64
    } else {
        cfg.upper
    };
    let fs = FeasibleSet::new(n, cfg.lower, upper)?;
    let mut rows = Vec::new();
    let mut cum = vec![0.0; cfg.strategies.len()];
    for t in cfg.window..h.len() - 1 {
        let date = h.dates[t];
        let seed = cfg.seed.wrapping_add(t as u64);
        let scen = h
            .window(t - cfg.window, t + 1)
            .and_then(|sub| estimate_basket(&sub, cfg.convention))
            .and_then(|est| {
                warnings.extend(est.warnings.iter().map(|w| format!("{date}: {w}")));
                sample_basket(&est.basket, cfg.horizon, cfg.samples, seed)
            });
        let ratings_raw: Vec<f64> = (0..n).map(|i| h.ratings_raw[i][t]).collect();
        for (si, &strategy) in cfg.strategies.iter().enumerate() {
            let objective = match strategy {
                Strategy::Equal => None,
                Strategy::Entropic => Some(Objective::Financial(cfg.utility.u1)),
                Strategy::Esg => Some(Objective::Esg(cfg.utility)),
            };
            let (weights, risk) = match (objective, &scen) {
                (None, _) => (fs.equal_weights().into_inner(), None),
                (Some(obj), Ok(scen)) => {
                    let opt = OptConfig { seed, ..cfg.opt };
                    match minimize_risk(&obj, scen, &fs, &opt) {
                        Ok(r) => (r.weights.into_inner(), Some(r.risk)),
                        Err(e) => {
                            warnings.push(format!("{date}: {strategy}: {e}; holding equal weights"));
                            (fs.equal_weights().into_inner(), None)
                        }
                    }
                }
                (Some(_), Err(e)) => {
                    warnings.push(format!("{date}: {strategy}: {e}; holding equal weights"));
                    (fs.equal_weights().into_inner(), None)
                }
            };
            let log_return = realized_log_return(h, &weights, t);
            cum[si] += log_return;
            rows.push(LedgerRow {
                rebalance_date: date,
                date: h.dates[t + 1],
                strategy,
                esg_rating: realized_rating(h, &weights, t + 1)?,
                weights,
                log_return,
                cum_log_return: cum[si],
                ratings_raw: ratings_raw.clone(),
                risk,
            });
        }
    }
    Ok(BacktestLedger {
        tickers: h.tickers.clone(),
        strategies: cfg.strategies.clone(),
        rows,
        warnings,
    })
}
