//! `esgrisk` command-line interface.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::calibration::{
    baseline_from_median, estimate_basket, estimate_dynamics, read_dynamics_csv, write_dynamics_csv, CorrelationConvention,
    HistoricalSeries,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::portfolio::{minimize_risk, run_backtest, BacktestConfig, FeasibleSet, Objective, Strategy};
use crate::risk::{entropic_closed_form, esg_risk_premium, indifference_gap, shift_curve, write_risk_table, write_shift_curve, RiskRow};
use crate::scenarios::{normalize_rating, sample_basket, sample_single, AssetDynamics, BasketDynamics};
use crate::utility::{MultiUtility, ScalarUtility};

#[derive(Debug, Parser)]
#[command(name = "esgrisk", version, about = "Shortfall risk of joint financial and ESG-rating positions")]
pub struct Cli {
    /// Report errors as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat key=value run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scenarios per simulation.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Validate configuration and inputs, then stop.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HistoryArgs {
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Correlate returns and rating changes over all months.
    #[arg(long)]
    pub unconditional: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate per-asset dynamics and the rating baseline from history.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        history: HistoryArgs,
    },
    /// Draw joint scenarios for every asset in a dynamics file.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dynamics: Option<PathBuf>,
    },
    /// Per-asset financial and ESG shortfall risk.
    Risk {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dynamics: Option<PathBuf>,
    },
    /// Per-asset ESG risk premium and exposure class.
    Premium {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dynamics: Option<PathBuf>,
    },
    /// Risk under parallel shifts of the rating distribution.
    ShiftCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dynamics: Option<PathBuf>,
        #[arg(long)]
        asset: String,
        /// `lo:hi:count` or a comma-separated list within [-1, 1].
        #[arg(long, default_value = "-1:1:41", allow_hyphen_values = true)]
        grid: String,
        /// Also run with this rating-utility scale `c`.
        #[arg(long)]
        compare_c: Option<f64>,
    },
    /// Minimum-risk weights for each strategy.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dynamics: Option<PathBuf>,
        #[command(flatten)]
        history: HistoryArgs,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        strategies: Option<String>,
    },
    /// Rolling-window backtest of the strategies.
    Backtest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        history: HistoryArgs,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        rebalance: Option<String>,
        #[arg(long)]
        strategies: Option<String>,
    },
}

/// Exit code for an error: 2 for bad input, 3 for numerical or model failures.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn report(e: &Error, json: bool) {
    if json {
        let obj = serde_json::json!({
            "error": e.kind(),
            "message": e.to_string(),
            "exit_code": exit_code(e),
        });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {e}");
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json {
                let obj = serde_json::json!({"error": "usage", "message": e.to_string().trim(), "exit_code": 2});
                eprintln!("{obj}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, cli.json_errors);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(m) = common.samples {
        cfg.sim.samples = m;
    }
    if let Some(out) = &common.out {
        cfg.io.out_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.io.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn required(flag: Option<&PathBuf>, fallback: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or(fallback)
        .cloned()
        .ok_or_else(|| Error::Input(format!("missing {what}: pass --{what} or set io.{what}")))
}

fn load_history(cfg: &RunConfig, h: &HistoryArgs) -> Result<HistoricalSeries> {
    let prices = required(h.prices.as_ref(), cfg.io.prices.as_ref(), "prices")?;
    let ratings = required(h.ratings.as_ref(), cfg.io.ratings.as_ref(), "ratings")?;
    HistoricalSeries::read_csv(&prices, &ratings)
}

fn load_dynamics(cfg: &RunConfig, flag: Option<&PathBuf>) -> Result<Vec<(String, AssetDynamics)>> {
    let path = required(flag, cfg.io.dynamics.as_ref(), "dynamics")?;
    read_dynamics_csv(File::open(&path)?, &path.display().to_string())
}

fn convention(cfg: &RunConfig, h: &HistoryArgs) -> CorrelationConvention {
    if h.unconditional {
        CorrelationConvention::Unconditional
    } else {
        cfg.correlation
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Calibrate { common, history } => cmd_calibrate(&common, &history),
        Command::Simulate { common, dynamics } => cmd_simulate(&common, dynamics.as_ref()),
        Command::Risk { common, dynamics } => cmd_risk(&common, dynamics.as_ref()),
        Command::Premium { common, dynamics } => cmd_premium(&common, dynamics.as_ref()),
        Command::ShiftCurve {
            common,
            dynamics,
            asset,
            grid,
            compare_c,
        } => cmd_shift_curve(&common, dynamics.as_ref(), &asset, &grid, compare_c),
        Command::Optimize {
            common,
            dynamics,
            history,
            window,
            strategies,
        } => cmd_optimize(&common, dynamics.as_ref(), &history, window, strategies.as_deref()),
        Command::Backtest {
            common,
            history,
            window,
            rebalance,
            strategies,
        } => cmd_backtest(&common, &history, window, rebalance.as_deref(), strategies.as_deref()),
    }
}

/// The utility with its rating baseline moved to `s0`.
fn with_baseline(u: &MultiUtility, s0: f64) -> Result<MultiUtility> {
    let u2 = match u.u2 {
        ScalarUtility::ScaledShiftedExponential { gamma, c, .. } => ScalarUtility::scaled_exponential(gamma, c, s0)?,
        ScalarUtility::SShaped { gamma, lambda, .. } => ScalarUtility::s_shaped(s0, gamma, lambda)?,
        other => other,
    };
    MultiUtility::new(u.u1, u2, u.k, u.capped)
}

fn with_scale(u: &MultiUtility, c: f64) -> Result<MultiUtility> {
    let u2 = match u.u2 {
        ScalarUtility::ScaledShiftedExponential { gamma, s0, .. } => ScalarUtility::scaled_exponential(gamma, c, s0)?,
        other => {
            return Err(Error::Unsupported(format!(
                "--compare-c needs a scaled_exponential rating utility, got {}",
                other.form_name()
            )))
        }
    };
    MultiUtility::new(u.u1, u2, u.k, u.capped)
}

fn cmd_calibrate(common: &Common, history: &HistoryArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let h = load_history(&cfg, history)?;
    if common.dry_run {
        println!("dry run: configuration and {} assets x {} months valid", h.n_assets(), h.len());
        return Ok(());
    }
    let conv = convention(&cfg, history);
    let mut rows = Vec::with_capacity(h.n_assets());
    for a in 0..h.n_assets() {
        let est = estimate_dynamics(&h, a, conv)?;
        est.warnings.iter().for_each(|w| warn(w));
        rows.push((h.tickers[a].clone(), est.dynamics));
    }
    let last = h.len() - 1;
    let current: Vec<f64> = (0..h.n_assets())
        .map(|a| normalize_rating(h.ratings_raw[a][last]))
        .collect::<Result<_>>()?;
    let s0 = baseline_from_median(&current)?;
    let utility = with_baseline(&cfg.utility, s0)?;

    let dir = out_dir(&cfg)?;
    write_dynamics_csv(create(&dir, "dynamics.csv")?, &rows)?;
    let mut u = create(&dir, "utility.cfg")?;
    writeln!(u, "# rating baseline: median normalized rating on {}", h.dates[last])?;
    for (k, v) in utility.to_kv() {
        writeln!(u, "{k} = {v}")?;
    }
    u.flush()?;
    println!("calibrated {} assets over {} months; s0 = {s0}", h.n_assets(), h.len());
    Ok(())
}

fn cmd_simulate(common: &Common, dynamics: Option<&PathBuf>) -> Result<()> {
    let cfg = load_config(common)?;
    let rows = load_dynamics(&cfg, dynamics)?;
    if common.dry_run {
        println!("dry run: configuration and {} assets valid", rows.len());
        return Ok(());
    }
    let names: Vec<String> = rows.iter().map(|(n, _)| n.clone()).collect();
    let basket = BasketDynamics::independent(rows.into_iter().map(|(_, d)| d).collect())?;
    let set = sample_basket(&basket, cfg.sim.horizon, cfg.sim.samples, cfg.sim.seed)?;
    let dir = out_dir(&cfg)?;
    set.write_csv(create(&dir, "scenarios.csv")?, Some(&names))?;
    println!("wrote {} scenarios for {} assets", set.count(), set.n_assets());
    Ok(())
}

fn risk_rows(cfg: &RunConfig, rows: &[(String, AssetDynamics)]) -> Result<Vec<(RiskRow, Option<f64>, f64)>> {
    let mut out = Vec::with_capacity(rows.len());
    for (name, d) in rows {
        let set = sample_single(d, cfg.sim.horizon, cfg.sim.samples, cfg.sim.seed)?;
        let pos = set.position(0);
        let p = esg_risk_premium(&cfg.utility, pos, &cfg.risk)?;
        let closed = match cfg.utility.u1 {
            ScalarUtility::Exponential { gamma } => Some(entropic_closed_form(gamma, pos)?),
            _ => None,
        };
        let gap = indifference_gap(&cfg.utility.u2, pos)?;
        out.push((
            RiskRow {
                asset: name.clone(),
                rho_financial: p.financial.value,
                rho_esg: p.esg.value,
                premium: p.premium,
                esg_rating_now: d.rating_now(),
            },
            closed,
            gap,
        ));
    }
    Ok(out)
}

fn cmd_risk(common: &Common, dynamics: Option<&PathBuf>) -> Result<()> {
    let cfg = load_config(common)?;
    let rows = load_dynamics(&cfg, dynamics)?;
    if common.dry_run {
        println!("dry run: configuration and {} assets valid", rows.len());
        return Ok(());
    }
    let table = risk_rows(&cfg, &rows)?;
    let dir = out_dir(&cfg)?;
    let risk: Vec<RiskRow> = table.iter().map(|(r, _, _)| r.clone()).collect();
    write_risk_table(create(&dir, "risk_table.csv")?, &risk)?;
    let mut w = csv::Writer::from_writer(create(&dir, "risk_closed_form.csv")?);
    w.write_record(["asset", "rho_financial_closed_form", "rho_financial_mc"])?;
    for (r, closed, _) in &table {
        w.write_record([
            r.asset.clone(),
            closed.map(|v| v.to_string()).unwrap_or_default(),
            r.rho_financial.to_string(),
        ])?;
    }
    w.flush()?;
    println!("wrote risk table for {} assets", risk.len());
    Ok(())
}

fn cmd_premium(common: &Common, dynamics: Option<&PathBuf>) -> Result<()> {
    let cfg = load_config(common)?;
    let rows = load_dynamics(&cfg, dynamics)?;
    if common.dry_run {
        println!("dry run: configuration and {} assets valid", rows.len());
        return Ok(());
    }
    let table = risk_rows(&cfg, &rows)?;
    let dir = out_dir(&cfg)?;
    let mut w = csv::Writer::from_writer(create(&dir, "premium.csv")?);
    w.write_record(["asset", "esg_rating_now", "expected_u2", "premium", "exposure"])?;
    for (r, _, gap) in &table {
        let class = if *gap > 0.0 {
            "favorable"
        } else if *gap < 0.0 {
            "unfavorable"
        } else {
            "indifferent"
        };
        w.write_record([
            r.asset.clone(),
            r.esg_rating_now.to_string(),
            gap.to_string(),
            r.premium.to_string(),
            class.to_string(),
        ])?;
    }
    w.flush()?;
    println!("wrote premiums for {} assets", table.len());
    Ok(())
}

/// `lo:hi:count` or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Input(format!("grid `{spec}`: expected lo:hi:count or a comma-separated list"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n < 2 || !(lo < hi) {
            return Err(bad());
        }
        return Ok((0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect());
    }
    spec.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn cmd_shift_curve(common: &Common, dynamics: Option<&PathBuf>, asset: &str, grid: &str, compare_c: Option<f64>) -> Result<()> {
    let cfg = load_config(common)?;
    let rows = load_dynamics(&cfg, dynamics)?;
    let grid = parse_grid(grid)?;
    if let Some(bad) = grid.iter().find(|m| !(-1.0..=1.0).contains(*m)) {
        return Err(Error::Input(format!("shift {bad} outside [-1, 1]")));
    }
    let d = rows
        .iter()
        .find(|(n, _)| n == asset)
        .map(|(_, d)| *d)
        .ok_or_else(|| Error::Input(format!("asset `{asset}` not in the dynamics file")))?;
    let alt = compare_c.map(|c| with_scale(&cfg.utility, c)).transpose()?;
    if common.dry_run {
        println!("dry run: configuration, asset {asset} and {} grid points valid", grid.len());
        return Ok(());
    }
    let set = sample_single(&d, cfg.sim.horizon, cfg.sim.samples, cfg.sim.seed)?;
    let dir = out_dir(&cfg)?;
    let range = |c: &[crate::risk::ShiftPoint]| {
        let v: Vec<f64> = c.iter().filter_map(|p| p.rho.finite()).collect();
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let curve = shift_curve(&cfg.utility, set.position(0), &grid, &cfg.risk)?;
    write_shift_curve(create(&dir, "shift_curve.csv")?, &curve)?;
    println!("shift curve for {asset}: range {}", range(&curve));
    if let Some(u) = alt {
        let curve = shift_curve(&u, set.position(0), &grid, &cfg.risk)?;
        write_shift_curve(create(&dir, "shift_curve_compare.csv")?, &curve)?;
        println!("comparison curve (c = {}): range {}", compare_c.unwrap_or_default(), range(&curve));
    }
    Ok(())
}

fn strategies_of(cfg: &RunConfig, flag: Option<&str>) -> Result<Vec<Strategy>> {
    match flag {
        Some(s) => Strategy::parse_list(s),
        None => Ok(cfg.portfolio.strategies.clone()),
    }
}

fn feasible_set(cfg: &RunConfig, n: usize) -> Result<FeasibleSet> {
    let upper = if n as f64 * cfg.portfolio.upper < 1.0 {
        warn(&format!("cap {} infeasible for {n} assets; using {}", cfg.portfolio.upper, 1.0 / n as f64));
        1.0 / n as f64
    } else {
        cfg.portfolio.upper
    };
    FeasibleSet::new(n, cfg.portfolio.lower, upper)
}

fn cmd_optimize(
    common: &Common,
    dynamics: Option<&PathBuf>,
    history: &HistoryArgs,
    window: Option<usize>,
    strategies: Option<&str>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let strategies = strategies_of(&cfg, strategies)?;
    let from_history = dynamics.is_none() && (history.prices.is_some() || cfg.io.prices.is_some());
    let (names, basket) = if from_history {
        let h = load_history(&cfg, history)?;
        let window = window.unwrap_or(cfg.portfolio.window);
        let start = h.len().saturating_sub(window + 1);
        let sub = h.window(start, h.len())?;
        if common.dry_run {
            println!("dry run: configuration and {} assets x {} months valid", h.n_assets(), h.len());
            return Ok(());
        }
        let est = estimate_basket(&sub, convention(&cfg, history))?;
        est.warnings.iter().for_each(|w| warn(w));
        (h.tickers.clone(), est.basket)
    } else {
        let rows = load_dynamics(&cfg, dynamics)?;
        if common.dry_run {
            println!("dry run: configuration and {} assets valid", rows.len());
            return Ok(());
        }
        let names = rows.iter().map(|(n, _)| n.clone()).collect();
        (names, BasketDynamics::independent(rows.into_iter().map(|(_, d)| d).collect())?)
    };
    let n = names.len();
    let fs = feasible_set(&cfg, n)?;
    let scen = sample_basket(&basket, cfg.sim.horizon, cfg.sim.samples, cfg.sim.seed)?;
    let rating_now: Vec<f64> = basket.assets.iter().map(|a| a.rating_now()).collect();
    let dir = out_dir(&cfg)?;
    let mut wf = csv::Writer::from_writer(create(&dir, "optimal_weights.csv")?);
    wf.write_record(["strategy", "asset", "weight"])?;
    let mut sf = csv::Writer::from_writer(create(&dir, "optimize_summary.csv")?);
    sf.write_record(["strategy", "risk", "portfolio_esg_rating_now"])?;
    for st in strategies {
        let (w, risk) = match st {
            Strategy::Equal => (fs.equal_weights().into_inner(), None),
            Strategy::Entropic | Strategy::Esg => {
                let obj = if st == Strategy::Esg {
                    Objective::Esg(cfg.utility)
                } else {
                    Objective::Financial(cfg.utility.u1)
                };
                let r = minimize_risk(&obj, &scen, &fs, &cfg.opt_config(cfg.sim.seed))?;
                (r.weights.into_inner(), Some(r.risk))
            }
        };
        for (name, wi) in names.iter().zip(&w) {
            wf.write_record([st.to_string(), name.clone(), wi.to_string()])?;
        }
        let s_now: f64 = w.iter().zip(&rating_now).map(|(a, b)| a * b).sum();
        sf.write_record([st.to_string(), risk.map(|r| r.to_string()).unwrap_or_default(), s_now.to_string()])?;
        println!(
            "{st}: risk {} rating {s_now:.4}",
            risk.map(|r| format!("{r:.6}")).unwrap_or_else(|| "-".into())
        );
    }
    wf.flush()?;
    sf.flush()?;
    Ok(())
}

fn cmd_backtest(
    common: &Common,
    history: &HistoryArgs,
    window: Option<usize>,
    rebalance: Option<&str>,
    strategies: Option<&str>,
) -> Result<()> {
    let cfg = load_config(common)?;
    if let Some(r) = rebalance {
        if r != "monthly" {
            return Err(Error::Input(format!("--rebalance `{r}`: only `monthly` is supported")));
        }
    }
    let strategies = strategies_of(&cfg, strategies)?;
    let h = load_history(&cfg, history)?;
    let bt = BacktestConfig {
        window: window.unwrap_or(cfg.portfolio.window),
        samples: cfg.sim.samples,
        horizon: cfg.sim.horizon,
        seed: cfg.sim.seed,
        strategies,
        lower: cfg.portfolio.lower,
        upper: cfg.portfolio.upper,
        utility: cfg.utility,
        convention: convention(&cfg, history),
        opt: cfg.opt_config(cfg.sim.seed),
    };
    if h.len() < bt.window + 2 {
        return Err(Error::Input(format!(
            "series has {} months; window {} needs at least {}",
            h.len(),
            bt.window,
            bt.window + 2
        )));
    }
    if common.dry_run {
        println!(
            "dry run: configuration and {} assets x {} months valid ({} rebalances)",
            h.n_assets(),
            h.len(),
            h.len() - 1 - bt.window
        );
        return Ok(());
    }
    let ledger = run_backtest(&h, &bt)?;
    ledger.warnings.iter().for_each(|w| warn(w));
    let dir = out_dir(&cfg)?;
    ledger.write_ledger_csv(create(&dir, "ledger.csv")?)?;
    ledger.write_weights_csv(create(&dir, "weights.csv")?)?;
    ledger.write_category_csv(create(&dir, "category_breakdown.csv")?)?;
    for st in &ledger.strategies {
        println!(
            "{st}: final cumulative log-return {:.6}, mean portfolio rating {:.6}",
            ledger.final_cum_log_return(*st).unwrap_or(0.0),
            ledger.mean_rating(*st).unwrap_or(0.0)
        );
    }
    if let (Some(e), Some(c)) = (ledger.mean_rating(Strategy::Esg), ledger.mean_rating(Strategy::Entropic)) {
        println!("mean rating gap esg - entropic: {:.6}", e - c);
    }
    if let (Some(e), Some(q)) = (ledger.mean_rating(Strategy::Esg), ledger.mean_rating(Strategy::Equal)) {
        println!("mean rating gap esg - equal: {:.6}", e - q);
    }
    Ok(())
}
