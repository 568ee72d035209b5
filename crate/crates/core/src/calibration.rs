//! Estimation of asset dynamics from monthly history, and calibration of the
//! rating utility from indifference positions.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use nalgebra::DMatrix;

use crate::error::{input, Error, Result};
use crate::linalg::{mean, pearson, repair_correlation, std_dev};
use crate::scenarios::{
    denormalize_rating, draw_model, normalize_rating, rescale_rating, unrescale_rating, AssetDynamics, BasketDynamics,
};

/// Observations per year of a monthly series.
pub const PERIODS_PER_YEAR: f64 = 12.0;

/// Aligned monthly prices and raw ratings for several assets.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalSeries {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `prices[asset][t]`
    pub prices: Vec<Vec<f64>>,
    /// `ratings_raw[asset][t]`, on the vendor's `[0, 50]` scale.
    pub ratings_raw: Vec<Vec<f64>>,
}

impl HistoricalSeries {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Vec<Vec<f64>>, ratings_raw: Vec<Vec<f64>>) -> Result<Self> {
        let h = HistoricalSeries {
            dates,
            tickers,
            prices,
            ratings_raw,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.dates.len();
        if t < 2 {
            return input(format!("history needs at least 2 observations, got {t}"));
        }
        if self.tickers.is_empty() {
            return input("history has no assets");
        }
        if self.prices.len() != self.tickers.len() || self.ratings_raw.len() != self.tickers.len() {
            return input("history columns do not match the ticker list");
        }
        for d in &self.dates {
            if d.day() != 1 {
                return input(format!("date {d} is not a month start"));
            }
        }
        for w in self.dates.windows(2) {
            if w[0].checked_add_months(Months::new(1)) != Some(w[1]) {
                return input(format!("dates must be consecutive months, found {} then {}", w[0], w[1]));
            }
        }
        for (a, name) in self.tickers.iter().enumerate() {
            if self.prices[a].len() != t || self.ratings_raw[a].len() != t {
                return input(format!("asset {name}: series length differs from the date column"));
            }
            if let Some(p) = self.prices[a].iter().find(|p| !(p.is_finite() && **p > 0.0)) {
                return input(format!("asset {name}: price {p} must be positive"));
            }
            if let Some(r) = self.ratings_raw[a].iter().find(|r| !(0.0..=50.0).contains(*r)) {
                return input(format!("asset {name}: raw rating {r} outside [0, 50]"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Observations `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<HistoricalSeries> {
        if start >= end || end > self.len() {
            return input(format!("window {start}..{end} outside 0..{}", self.len()));
        }
        HistoricalSeries::new(
            self.dates[start..end].to_vec(),
            self.tickers.clone(),
            self.prices.iter().map(|p| p[start..end].to_vec()).collect(),
            self.ratings_raw.iter().map(|r| r[start..end].to_vec()).collect(),
        )
    }

    /// Reads `prices.csv` and `ratings.csv` (`date,TICKER1,TICKER2,…`).
    pub fn read_csv(prices: &Path, ratings: &Path) -> Result<HistoricalSeries> {
        let (dates, tickers, price_cols) = read_wide_csv(std::fs::File::open(prices)?, &prices.display().to_string())?;
        let (rdates, rtickers, rating_cols) = read_wide_csv(std::fs::File::open(ratings)?, &ratings.display().to_string())?;
        if tickers != rtickers {
            return Err(Error::Schema {
                path: ratings.display().to_string(),
                row: 1,
                column: "header".into(),
                message: format!("tickers {rtickers:?} do not match the price file's {tickers:?}"),
            });
        }
        if dates != rdates {
            return Err(Error::Schema {
                path: ratings.display().to_string(),
                row: 1,
                column: "date".into(),
                message: "date column differs from the price file".into(),
            });
        }
        HistoricalSeries::new(dates, tickers, price_cols, rating_cols)
    }

    pub fn write_csv<W: Write>(&self, prices: W, ratings: W) -> Result<()> {
        write_wide_csv(prices, &self.dates, &self.tickers, &self.prices)?;
        write_wide_csv(ratings, &self.dates, &self.tickers, &self.ratings_raw)
    }

    /// Synthetic history driven by the monthly model itself. Ratings are
    /// published to two decimals like vendor data; prices start at 100.
    pub fn simulate(basket: &BasketDynamics, tickers: Vec<String>, start: NaiveDate, months: usize, seed: u64) -> Result<HistoricalSeries> {
        let n = basket.assets.len();
        if tickers.len() != n {
            return input("one ticker per asset required");
        }
        if months < 2 {
            return input("need at least 2 observations");
        }
        let steps = months - 1;
        let draws = draw_model(basket, 1.0 / PERIODS_PER_YEAR, steps, seed)?;
        let mut dates = Vec::with_capacity(months);
        let mut d = start.with_day(1).ok_or_else(|| Error::Input("bad start date".into()))?;
        for _ in 0..months {
            dates.push(d);
            d = d + Months::new(1);
        }
        let mut prices = Vec::with_capacity(n);
        let mut ratings = Vec::with_capacity(n);
        for (i, a) in basket.assets.iter().enumerate() {
            let mut p = 100.0;
            let mut resc = a.s0_rescaled;
            let rate = |resc: f64| (denormalize_rating(unrescale_rating(resc)) * 100.0).round().clamp(0.0, 5000.0) / 100.0;
            let mut pcol = vec![p];
            let mut rcol = vec![rate(resc)];
            for k in 0..steps {
                p *= draws.return_x[i * steps + k].exp();
                resc *= draws.return_s[i * steps + k].exp();
                pcol.push(p);
                rcol.push(rate(resc));
            }
            prices.push(pcol);
            ratings.push(rcol);
        }
        HistoricalSeries::new(dates, tickers, prices, ratings)
    }
}

fn read_wide_csv<R: Read>(src: R, path: &str) -> Result<(Vec<NaiveDate>, Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
    let header = rdr.headers()?.clone();
    let schema = |row: usize, column: &str, message: String| Error::Schema {
        path: path.to_string(),
        row,
        column: column.to_string(),
        message,
    };
    if header.get(0) != Some("date") {
        return Err(schema(1, header.get(0).unwrap_or(""), "first column must be `date`".into()));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if tickers.is_empty() {
        return Err(schema(1, "header", "no ticker columns".into()));
    }
    let mut dates = Vec::new();
    let mut cols = vec![Vec::new(); tickers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != tickers.len() + 1 {
            return Err(schema(row, "", format!("expected {} fields, found {}", tickers.len() + 1, rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| schema(row, "date", format!("`{}` is not an ISO-8601 date: {e}", &rec[0])))?;
        if date.day() != 1 {
            return Err(schema(row, "date", format!("{date} is not a month start")));
        }
        if let Some(prev) = dates.last() {
            if *prev + Months::new(1) != date {
                return Err(schema(row, "date", format!("{date} does not follow {prev} by one month")));
            }
        }
        dates.push(date);
        for (j, col) in cols.iter_mut().enumerate() {
            let raw = &rec[j + 1];
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| schema(row, &tickers[j], format!("`{raw}` is not a number")))?;
            col.push(v);
        }
    }
    Ok((dates, tickers, cols))
}

fn write_wide_csv<W: Write>(out: W, dates: &[NaiveDate], tickers: &[String], cols: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(tickers.iter().cloned());
    w.write_record(&header)?;
    for (t, d) in dates.iter().enumerate() {
        let mut rec = vec![d.format("%Y-%m-%d").to_string()];
        rec.extend(cols.iter().map(|c| c[t].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Which months feed the return/rating correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationConvention {
    /// Only months with a rating change.
    #[default]
    Conditional,
    /// All months, counting unchanged ratings as a zero log-change.
    Unconditional,
}

/// Monthly increments of one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetHistory {
    /// Log price returns, one per month after the first.
    pub returns: Vec<f64>,
    /// Log-changes of the rescaled rating; zero where unchanged.
    pub rating_changes: Vec<f64>,
    pub changed: Vec<bool>,
    pub last_rescaled: f64,
}

fn rounded(raw: f64) -> i64 {
    (raw * 100.0).round() as i64
}

pub fn asset_history(h: &HistoricalSeries, asset: usize) -> Result<AssetHistory> {
    if asset >= h.n_assets() {
        return input(format!("asset index {asset} out of range"));
    }
    let name = &h.tickers[asset];
    let prices = &h.prices[asset];
    let raw = &h.ratings_raw[asset];
    let rescaled = |r: f64| -> Result<f64> {
        rescale_rating(normalize_rating(r)?).map_err(|_| {
            Error::Degenerate(format!("asset {name}: raw rating {r} sits at the end of the scale"))
        })
    };
    let mut returns = Vec::with_capacity(prices.len() - 1);
    let mut rating_changes = Vec::with_capacity(prices.len() - 1);
    let mut changed = Vec::with_capacity(prices.len() - 1);
    for t in 1..prices.len() {
        returns.push((prices[t] / prices[t - 1]).ln());
        let c = rounded(raw[t]) != rounded(raw[t - 1]);
        changed.push(c);
        if c {
            let l = (rescaled(raw[t])? / rescaled(raw[t - 1])?).ln();
            if !l.is_finite() {
                return Err(Error::Degenerate(format!(
                    "asset {name}: rating moved to or from the end of the scale"
                )));
            }
            rating_changes.push(l);
        } else {
            rating_changes.push(0.0);
        }
    }
    let last_rescaled = rescaled(*raw.last().expect("non-empty"))?;
    if last_rescaled <= 0.0 {
        return Err(Error::Degenerate(format!("asset {name}: current rating is the worst possible")));
    }
    Ok(AssetHistory {
        returns,
        rating_changes,
        changed,
        last_rescaled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsEstimate {
    pub dynamics: AssetDynamics,
    pub change_months: usize,
    pub warnings: Vec<String>,
}

/// Annualized moment estimates for one asset.
pub fn estimate_dynamics(h: &HistoricalSeries, asset: usize, convention: CorrelationConvention) -> Result<DynamicsEstimate> {
    if h.len() < 3 {
        return input(format!("estimation needs at least 3 observations, got {}", h.len()));
    }
    let name = &h.tickers[asset];
    let hist = asset_history(h, asset)?;
    let months = hist.returns.len() as f64;
    let sd_x = std_dev(&hist.returns);
    if !(sd_x > 0.0) {
        return Err(Error::Degenerate(format!("asset {name}: prices are constant")));
    }
    let mut warnings = Vec::new();
    let mu_x = PERIODS_PER_YEAR * mean(&hist.returns);
    let sigma_x = PERIODS_PER_YEAR.sqrt() * sd_x;

    let (rx, ls): (Vec<f64>, Vec<f64>) = hist
        .returns
        .iter()
        .zip(&hist.rating_changes)
        .zip(&hist.changed)
        .filter(|(_, &c)| c)
        .map(|((r, l), _)| (*r, *l))
        .unzip();
    let n_c = ls.len();
    let p = n_c as f64 / months;
    let (mu_s, sigma_s, rho) = if n_c == 0 {
        warnings.push(format!("asset {name}: rating never changes; p = 0"));
        (0.0, 0.0, 0.0)
    } else {
        let mu_s = PERIODS_PER_YEAR * mean(&ls);
        let sigma_s = if n_c >= 2 {
            PERIODS_PER_YEAR.sqrt() * std_dev(&ls)
        } else {
            warnings.push(format!("asset {name}: single rating change; sigma_s = 0"));
            0.0
        };
        let corr = match convention {
            CorrelationConvention::Conditional => pearson(&rx, &ls),
            CorrelationConvention::Unconditional => pearson(&hist.returns, &hist.rating_changes),
        };
        let rho = match corr {
            Some(r) if r.abs() > 1.0 => {
                warnings.push(format!("asset {name}: correlation {r} clamped to [-1, 1]"));
                r.clamp(-1.0, 1.0)
            }
            Some(r) => r,
            None => {
                if sigma_s > 0.0 {
                    warnings.push(format!("asset {name}: correlation undefined; rho = 0"));
                }
                0.0
            }
        };
        (mu_s, sigma_s, if sigma_s > 0.0 { rho } else { 0.0 })
    };
    let dynamics = AssetDynamics {
        mu_x,
        sigma_x,
        mu_s,
        sigma_s,
        rho,
        p,
        s0_rescaled: hist.last_rescaled,
        notional: 1.0,
    };
    dynamics.validate()?;
    Ok(DynamicsEstimate {
        dynamics,
        change_months: n_c,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasketEstimate {
    pub basket: BasketDynamics,
    pub estimates: Vec<DynamicsEstimate>,
    pub warnings: Vec<String>,
}

/// Pairwise Pearson over the months where `mask` holds.
fn masked_pearson(a: &[f64], b: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = (0..a.len()).filter(|&t| mask(t)).map(|t| (a[t], b[t])).unzip();
    if x.len() < 3 {
        return 0.0;
    }
    pearson(&x, &y).unwrap_or(0.0)
}

/// Per-asset dynamics plus cross-asset correlations, repaired to valid
/// correlation matrices. Each asset's `rho` is replaced by the repaired
/// value of its own block.
pub fn estimate_basket(h: &HistoricalSeries, convention: CorrelationConvention) -> Result<BasketEstimate> {
    let n = h.n_assets();
    let mut estimates = Vec::with_capacity(n);
    let mut histories = Vec::with_capacity(n);
    for a in 0..n {
        estimates.push(estimate_dynamics(h, a, convention)?);
        histories.push(asset_history(h, a)?);
    }
    let mut warnings: Vec<String> = estimates.iter().flat_map(|e| e.warnings.clone()).collect();
    let conditional = convention == CorrelationConvention::Conditional;
    let rating_var = |i: usize| estimates[i].dynamics.sigma_s > 0.0;

    let mut z = DMatrix::identity(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let (hi, hj) = (&histories[i], &histories[j]);
            if j < i {
                let v = masked_pearson(&hi.returns, &hj.returns, |_| true);
                z[(2 * i, 2 * j)] = v;
                z[(2 * j, 2 * i)] = v;
                let v = if rating_var(i) && rating_var(j) {
                    masked_pearson(&hi.rating_changes, &hj.rating_changes, |t| {
                        !conditional || (hi.changed[t] && hj.changed[t])
                    })
                } else {
                    0.0
                };
                z[(2 * i + 1, 2 * j + 1)] = v;
                z[(2 * j + 1, 2 * i + 1)] = v;
            }
            // return of i against rating change of j
            let v = if i == j {
                estimates[i].dynamics.rho
            } else if rating_var(j) {
                masked_pearson(&hi.returns, &hj.rating_changes, |t| !conditional || hj.changed[t])
            } else {
                0.0
            };
            z[(2 * i, 2 * j + 1)] = v;
            z[(2 * j + 1, 2 * i)] = v;
        }
    }
    let mut jumps = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let ind = |a: usize| -> Vec<f64> { histories[a].changed.iter().map(|&c| f64::from(u8::from(c))).collect() };
            let v = pearson(&ind(i), &ind(j)).unwrap_or(0.0);
            jumps[(i, j)] = v;
            jumps[(j, i)] = v;
        }
    }
    let z_rep = repair_correlation(&z);
    let j_rep = repair_correlation(&jumps);
    if (&z_rep - &z).abs().max() > 1e-8 {
        warnings.push("return/rating correlation matrix repaired to the nearest valid correlation".into());
    }
    if (&j_rep - &jumps).abs().max() > 1e-8 {
        warnings.push("jump correlation matrix repaired to the nearest valid correlation".into());
    }
    let mut assets: Vec<AssetDynamics> = estimates.iter().map(|e| e.dynamics).collect();
    for (i, a) in assets.iter_mut().enumerate() {
        a.rho = z_rep[(2 * i, 2 * i + 1)];
    }
    let basket = BasketDynamics::new(assets, z_rep, j_rep)?;
    Ok(BasketEstimate {
        basket,
        estimates,
        warnings,
    })
}

/// Sample median, averaging the middle pair for even counts.
pub fn baseline_from_median(ratings_norm: &[f64]) -> Result<f64> {
    if ratings_norm.is_empty() {
        return input("median of an empty cross-section");
    }
    if ratings_norm.iter().any(|v| v.is_nan()) {
        return input("ratings contain NaN");
    }
    let mut v = ratings_norm.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// A two-point rating lottery the decision-maker is indifferent to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndifferenceSpec {
    pub s_low: f64,
    pub s_high: f64,
    /// Probability of `s_low`.
    pub p_low: f64,
}

impl IndifferenceSpec {
    pub fn validate(&self, s0: f64) -> Result<()> {
        if !(self.s_low < s0 && s0 < self.s_high) {
            return input(format!(
                "indifference outcomes must straddle the baseline: {} < {s0} < {}",
                self.s_low, self.s_high
            ));
        }
        if !(self.p_low > 0.0 && self.p_low < 1.0) {
            return input(format!("p_low must lie in (0, 1), got {}", self.p_low));
        }
        Ok(())
    }

    /// The lottery on `{s_low, s_high}` that a rating utility with risk
    /// aversion `gamma2` and baseline `s0` is indifferent to.
    pub fn for_gamma2(gamma2: f64, s0: f64, s_low: f64, s_high: f64) -> Result<Self> {
        if !(gamma2 > 0.0) {
            return input(format!("gamma2 must be > 0, got {gamma2}"));
        }
        let a = (-gamma2 * (s_low - s0)).exp_m1();
        let b = (-gamma2 * (s_high - s0)).exp_m1();
        let spec = IndifferenceSpec {
            s_low,
            s_high,
            p_low: -b / (a - b),
        };
        spec.validate(s0)?;
        Ok(spec)
    }

    /// `E[e^{−γ(S − s0)}] − 1`; zero exactly at the indifference `γ`.
    pub fn residual(&self, gamma2: f64, s0: f64) -> f64 {
        self.p_low * (-gamma2 * (self.s_low - s0)).exp_m1() + (1.0 - self.p_low) * (-gamma2 * (self.s_high - s0)).exp_m1()
    }
}

/// Upper end of the risk-aversion search.
pub const GAMMA2_MAX: f64 = 1e6;

/// Solves `p·e^{−γ(s_low − s0)} + (1 − p)·e^{−γ(s_high − s0)} = 1` for `γ > 0`.
///
/// A positive root exists iff the lottery's mean exceeds `s0`; otherwise the
/// only non-negative root is the risk-neutral `γ = 0`.
pub fn calibrate_gamma2(spec: &IndifferenceSpec, s0: f64) -> Result<f64> {
    spec.validate(s0)?;
    let mean_gap = spec.p_low * (spec.s_low - s0) + (1.0 - spec.p_low) * (spec.s_high - s0);
    if mean_gap <= 1e-12 * (spec.s_high - spec.s_low) {
        return Err(Error::NoSolution(format!(
            "lottery mean minus baseline is {mean_gap:e}; the indifference equation has no root with gamma2 > 0 \
             (risk-neutral or risk-seeking preferences)"
        )));
    }
    let f = |g: f64| spec.residual(g, s0);
    let (mut lo, mut hi) = if f(1.0) < 0.0 {
        let (mut lo, mut hi) = (1.0, 2.0);
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > GAMMA2_MAX {
                return Err(Error::NoSolution(format!("gamma2 exceeds {GAMMA2_MAX:e}")));
            }
        }
        (lo, hi)
    } else {
        let (mut lo, mut hi) = (0.5, 1.0);
        while f(lo) >= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::NoSolution("root collapses onto gamma2 = 0".into()));
            }
        }
        (lo, hi)
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Writes `asset,mu_x,sigma_x,mu_s,sigma_s,rho,p,s0_rescaled`.
pub fn write_dynamics_csv<W: Write>(out: W, rows: &[(String, AssetDynamics)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "mu_x", "sigma_x", "mu_s", "sigma_s", "rho", "p", "s0_rescaled"])?;
    for (name, d) in rows {
        w.write_record([
            name.clone(),
            d.mu_x.to_string(),
            d.sigma_x.to_string(),
            d.mu_s.to_string(),
            d.sigma_s.to_string(),
            d.rho.to_string(),
            d.p.to_string(),
            d.s0_rescaled.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dynamics_csv<R: Read>(src: R, path: &str) -> Result<Vec<(String, AssetDynamics)>> {
    const COLUMNS: [&str; 8] = ["asset", "mu_x", "sigma_x", "mu_s", "sigma_s", "rho", "p", "s0_rescaled"];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(src);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(Error::Schema {
            path: path.into(),
            row: 1,
            column: "header".into(),
            message: format!("expected `{}`", COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let mut vals = [0.0; 7];
        for (j, v) in vals.iter_mut().enumerate() {
            let raw = rec.get(j + 1).unwrap_or("");
            *v = raw.parse().map_err(|_| Error::Schema {
                path: path.into(),
                row,
                column: COLUMNS[j + 1].into(),
                message: format!("`{raw}` is not a number"),
            })?;
        }
        let d = AssetDynamics {
            mu_x: vals[0],
            sigma_x: vals[1],
            mu_s: vals[2],
            sigma_s: vals[3],
            rho: vals[4],
            p: vals[5],
            s0_rescaled: vals[6],
            notional: 1.0,
        };
        d.validate().map_err(|e| Error::Schema {
            path: path.into(),
            row,
            column: "".into(),
            message: e.to_string(),
        })?;
        out.push((rec[0].to_string(), d));
    }
    if out.is_empty() {
        return Err(Error::Schema {
            path: path.into(),
            row: 2,
            column: "".into(),
            message: "no assets".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn d(y: i32, m: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, 1).unwrap()
    }

    fn months(n: usize) -> Vec<NaiveDate> {
        (0..n).map(|i| d(2021, 10) + Months::new(i as u32)).collect()
    }

    fn series(prices: Vec<f64>, ratings: Vec<f64>) -> HistoricalSeries {
        HistoricalSeries::new(months(prices.len()), vec!["AAA".into()], vec![prices], vec![ratings]).unwrap()
    }

    #[test]
    fn constant_rating_gives_zero_jump_probability() {
        let h = series(vec![100.0, 101.0, 99.0, 102.0], vec![20.0; 4]);
        let e = estimate_dynamics(&h, 0, CorrelationConvention::Conditional).unwrap();
        assert_eq!(e.dynamics.p, 0.0);
        assert_eq!((e.dynamics.mu_s, e.dynamics.sigma_s, e.dynamics.rho), (0.0, 0.0, 0.0));
        assert!(!e.warnings.is_empty());
    }

    #[test]
    fn rating_changing_every_month_gives_certain_jumps() {
        let h = series(vec![100.0, 101.0, 99.0, 102.0, 104.0], vec![20.0, 21.0, 20.0, 21.0, 20.0]);
        let e = estimate_dynamics(&h, 0, CorrelationConvention::Conditional).unwrap();
        assert_eq!(e.dynamics.p, 1.0);
        assert_eq!(e.change_months, 4);
    }

    #[test]
    fn sub_cent_rating_noise_is_not_a_change() {
        let h = series(vec![100.0, 101.0, 99.0], vec![20.0, 20.001, 19.998]);
        assert_eq!(estimate_dynamics(&h, 0, CorrelationConvention::Conditional).unwrap().dynamics.p, 0.0);
    }

    #[test]
    fn constant_prices_are_degenerate() {
        let h = series(vec![100.0; 4], vec![20.0; 4]);
        assert!(matches!(
            estimate_dynamics(&h, 0, CorrelationConvention::Conditional),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn hand_computed_moments() {
        let prices = vec![100.0, 110.0, 99.0, 108.9];
        let ratings = vec![20.0, 20.0, 25.0, 20.0];
        let h = series(prices.clone(), ratings.clone());
        let e = estimate_dynamics(&h, 0, CorrelationConvention::Conditional).unwrap().dynamics;
        let r: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        assert_abs_diff_eq!(e.mu_x, 12.0 * (r[0] + r[1] + r[2]) / 3.0, epsilon = 1e-12);
        let resc = |raw: f64| (std::f64::consts::FRAC_PI_2 * (50.0 - raw) / 50.0).tan();
        let l1 = (resc(25.0) / resc(20.0)).ln();
        let l2 = (resc(20.0) / resc(25.0)).ln();
        assert_abs_diff_eq!(e.mu_s, 12.0 * (l1 + l2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.p, 2.0 / 3.0, epsilon = 1e-15);
        // two points are perfectly (anti)correlated: r = (-0.105, +0.095) vs l = (-, +)
        assert_abs_diff_eq!(e.rho, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.s0_rescaled, resc(20.0), epsilon = 1e-12);
    }

    #[test]
    fn history_validation() {
        let bad_dates = HistoricalSeries::new(vec![d(2021, 1), d(2021, 3)], vec!["A".into()], vec![vec![1.0, 1.0]], vec![vec![1.0, 1.0]]);
        assert!(bad_dates.is_err());
        let bad_rating = HistoricalSeries::new(months(2), vec!["A".into()], vec![vec![1.0, 1.0]], vec![vec![1.0, 51.0]]);
        assert!(bad_rating.is_err());
        let bad_price = HistoricalSeries::new(months(2), vec!["A".into()], vec![vec![1.0, 0.0]], vec![vec![1.0, 1.0]]);
        assert!(bad_price.is_err());
    }

    #[test]
    fn median_baseline() {
        assert_eq!(baseline_from_median(&[0.5982]).unwrap(), 0.5982);
        assert_eq!(baseline_from_median(&[0.6, 0.4]).unwrap(), 0.5);
        let from_raw = normalize_rating(20.09).unwrap();
        assert_abs_diff_eq!(baseline_from_median(&[0.2, from_raw, 0.9]).unwrap(), 0.5982, epsilon = 1e-12);
        assert!(baseline_from_median(&[]).is_err());
    }

    #[test]
    fn gamma2_recovery_and_indifference() {
        let s0 = 0.5982;
        let spec = IndifferenceSpec::for_gamma2(0.75, s0, s0 - 0.2, s0 + 0.1).unwrap();
        let g = calibrate_gamma2(&spec, s0).unwrap();
        assert_abs_diff_eq!(g, 0.75, epsilon = 1e-8);
        let u2 = crate::utility::ScalarUtility::scaled_exponential(g, 0.1, s0).unwrap();
        let gap = spec.p_low * u2.value(spec.s_low).value() + (1.0 - spec.p_low) * u2.value(spec.s_high).value();
        assert!(gap.abs() < 1e-10);
    }

    #[test]
    fn symmetric_lottery_is_degenerate() {
        let spec = IndifferenceSpec {
            s_low: 0.4,
            s_high: 0.8,
            p_low: 0.5,
        };
        assert!(matches!(calibrate_gamma2(&spec, 0.6), Err(Error::NoSolution(_))));
        let bad = IndifferenceSpec { p_low: 1.0, ..spec };
        assert!(matches!(calibrate_gamma2(&bad, 0.6), Err(Error::Input(_))));
    }

    #[test]
    fn dynamics_csv_round_trip() {
        let a = AssetDynamics {
            mu_x: 0.062,
            sigma_x: 0.306,
            mu_s: -0.1,
            sigma_s: 0.2,
            rho: 0.1,
            p: 0.25,
            s0_rescaled: 1.3,
            notional: 1.0,
        };
        let mut buf = Vec::new();
        write_dynamics_csv(&mut buf, &[("AAA".into(), a)]).unwrap();
        let back = read_dynamics_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, vec![("AAA".to_string(), a)]);
        let bad = "asset,mu_x\nA,1\n";
        assert!(matches!(read_dynamics_csv(bad.as_bytes(), "mem"), Err(Error::Schema { .. })));
    }

    #[test]
    fn wide_csv_schema_errors_name_the_cell() {
        let text = "date,A,B\n2021-10-01,1,2\n2021-11-01,1,x\n";
        match read_wide_csv(text.as_bytes(), "prices.csv") {
            Err(Error::Schema { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "B");
            }
            other => panic!("{other:?}"),
        }
        let gap = "date,A\n2021-10-01,1\n2021-12-01,1\n";
        assert!(matches!(read_wide_csv(gap.as_bytes(), "p"), Err(Error::Schema { row: 3, .. })));
    }

    #[test]
    fn basket_estimate_is_valid_and_consistent() {
        let assets: Vec<AssetDynamics> = (0..4)
            .map(|i| AssetDynamics {
                mu_x: 0.05,
                sigma_x: 0.25,
                mu_s: 0.0,
                sigma_s: 0.3,
                rho: 0.2,
                p: 0.5,
                s0_rescaled: rescale_rating(0.3 + 0.1 * i as f64).unwrap(),
                notional: 1.0,
            })
            .collect();
        let basket = BasketDynamics::independent(assets).unwrap();
        let tickers = (0..4).map(|i| format!("T{i}")).collect();
        let h = HistoricalSeries::simulate(&basket, tickers, d(2021, 10), 21, 5).unwrap();
        let est = estimate_basket(&h, CorrelationConvention::Conditional).unwrap();
        est.basket.validate().unwrap();
        crate::linalg::psd_sqrt(&est.basket.z_correlation, "z").unwrap();
        crate::linalg::psd_sqrt(&est.basket.jump_correlation, "j").unwrap();
    }

    proptest! {
        #[test]
        fn gamma2_round_trip(g in 0.1f64..10.0, lo in 0.05f64..0.5, hi in 0.05f64..0.4) {
            let s0 = 0.5;
            let spec = IndifferenceSpec::for_gamma2(g, s0, s0 - lo, s0 + hi).unwrap();
            let back = calibrate_gamma2(&spec, s0).unwrap();
            prop_assert!((back - g).abs() <= 1e-6 * g, "{} vs {}", back, g);
        }

        #[test]
        fn price_scaling_leaves_estimates_unchanged(scale in 0.01f64..100.0, seed in 0u64..1000) {
            let a = AssetDynamics { mu_x: 0.06, sigma_x: 0.3, mu_s: 0.0, sigma_s: 0.3, rho: 0.3, p: 0.5, s0_rescaled: 1.0, notional: 1.0 };
            let b = BasketDynamics::independent(vec![a]).unwrap();
            let h = HistoricalSeries::simulate(&b, vec!["A".into()], d(2021, 10), 40, seed).unwrap();
            let mut scaled = h.clone();
            scaled.prices[0].iter_mut().for_each(|p| *p *= scale);
            let e1 = estimate_dynamics(&h, 0, CorrelationConvention::Conditional).unwrap().dynamics;
            let e2 = estimate_dynamics(&scaled, 0, CorrelationConvention::Conditional).unwrap().dynamics;
            prop_assert!((e1.mu_x - e2.mu_x).abs() < 1e-12);
            prop_assert!((e1.sigma_x - e2.sigma_x).abs() < 1e-12);
            prop_assert!((e1.rho - e2.rho).abs() < 1e-9);
            prop_assert_eq!(e1.p, e2.p);
            prop_assert!((0.0..=1.0).contains(&e1.p) && (-1.0..=1.0).contains(&e1.rho));
        }
    }
}
