//! Flat `key=value` run configuration.
//!
//! ```text
//! # reference utility, monthly horizon
//! u2.c = 0.1
//! sim.samples = 10000
//! portfolio.strategies = entropic,esg,equal
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::calibration::CorrelationConvention;
use crate::error::{Error, Result};
use crate::portfolio::{FeasibleSet, OptConfig, Strategy};
use crate::risk::RiskConfig;
use crate::utility::{MultiUtility, UTILITY_KEYS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Year fraction of one scenario step.
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 1.0 / 12.0,
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioConfig {
    pub lower: f64,
    pub upper: f64,
    pub window: usize,
    pub strategies: Vec<Strategy>,
    pub multistarts: usize,
    pub opt_tol: f64,
    pub max_iter: usize,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        let opt = OptConfig::default();
        PortfolioConfig {
            lower: 0.0,
            upper: FeasibleSet::DEFAULT_UPPER,
            window: 20,
            strategies: vec![Strategy::Entropic, Strategy::Esg, Strategy::Equal],
            multistarts: opt.multistarts,
            opt_tol: opt.opt_tol,
            max_iter: opt.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IoConfig {
    pub prices: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub dynamics: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub utility: MultiUtility,
    pub sim: SimConfig,
    pub risk: RiskConfig,
    pub portfolio: PortfolioConfig,
    pub correlation: CorrelationConvention,
    pub io: IoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            utility: MultiUtility::reference(),
            sim: SimConfig::default(),
            risk: RiskConfig::default(),
            portfolio: PortfolioConfig::default(),
            correlation: CorrelationConvention::Conditional,
            io: IoConfig::default(),
        }
    }
}

/// Non-utility keys, with their defaults in [`RunConfig::default`].
pub const RUN_KEYS: &[&str] = &[
    "sim.horizon",
    "sim.samples",
    "sim.seed",
    "risk.root_tol",
    "risk.bracket_seed",
    "risk.bracket_cap",
    "risk.max_iter",
    "portfolio.lower",
    "portfolio.upper",
    "portfolio.window",
    "portfolio.rebalance",
    "portfolio.strategies",
    "portfolio.multistarts",
    "portfolio.opt_tol",
    "portfolio.max_iter",
    "calibration.correlation",
    "io.prices",
    "io.ratings",
    "io.dynamics",
    "io.out_dir",
];

struct Entry {
    value: String,
    line: usize,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let schema = |line: usize, key: &str, message: String| Error::Schema {
            path: source.to_string(),
            row: line,
            column: key.to_string(),
            message,
        };
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| schema(line, "", format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !UTILITY_KEYS.contains(&key) && !RUN_KEYS.contains(&key) {
                return Err(schema(line, key, format!("unknown key `{key}`")));
            }
            if entries.contains_key(key) {
                return Err(schema(line, key, format!("duplicate key `{key}`")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }

        let mut cfg = RunConfig::default();
        let utility_kv: BTreeMap<String, String> = entries
            .iter()
            .filter(|(k, _)| UTILITY_KEYS.contains(&k.as_str()))
            .map(|(k, e)| (k.clone(), e.value.clone()))
            .collect();
        let first_line = entries
            .iter()
            .filter(|(k, _)| UTILITY_KEYS.contains(&k.as_str()))
            .map(|(_, e)| e.line)
            .min()
            .unwrap_or(0);
        cfg.utility = MultiUtility::from_kv(&utility_kv).map_err(|e| schema(first_line, "utility", e.to_string()))?;

        for (key, e) in entries.iter().filter(|(k, _)| RUN_KEYS.contains(&k.as_str())) {
            let bad = |what: &str| schema(e.line, key, format!("expected {what}, got `{}`", e.value));
            let f = || -> Result<f64> { crate::utility::parse_f64(&e.value).ok_or_else(|| bad("a number")) };
            let u = || -> Result<usize> { e.value.parse().map_err(|_| bad("a non-negative integer")) };
            match key.as_str() {
                "sim.horizon" => cfg.sim.horizon = f()?,
                "sim.samples" => cfg.sim.samples = u()?,
                "sim.seed" => cfg.sim.seed = e.value.parse().map_err(|_| bad("a u64 seed"))?,
                "risk.root_tol" => cfg.risk.root_tol = f()?,
                "risk.bracket_seed" => cfg.risk.bracket_seed = f()?,
                "risk.bracket_cap" => cfg.risk.bracket_cap = f()?,
                "risk.max_iter" => cfg.risk.max_iter = u()?,
                "portfolio.lower" => cfg.portfolio.lower = f()?,
                "portfolio.upper" => cfg.portfolio.upper = f()?,
                "portfolio.window" => cfg.portfolio.window = u()?,
                "portfolio.rebalance" => {
                    if e.value != "monthly" {
                        return Err(bad("`monthly`"));
                    }
                }
                "portfolio.strategies" => {
                    cfg.portfolio.strategies =
                        Strategy::parse_list(&e.value).map_err(|err| schema(e.line, key, err.to_string()))?
                }
                "portfolio.multistarts" => cfg.portfolio.multistarts = u()?,
                "portfolio.opt_tol" => cfg.portfolio.opt_tol = f()?,
                "portfolio.max_iter" => cfg.portfolio.max_iter = u()?,
                "calibration.correlation" => {
                    cfg.correlation = match e.value.as_str() {
                        "conditional" => CorrelationConvention::Conditional,
                        "unconditional" => CorrelationConvention::Unconditional,
                        _ => return Err(bad("`conditional` or `unconditional`")),
                    }
                }
                "io.prices" => cfg.io.prices = Some(PathBuf::from(&e.value)),
                "io.ratings" => cfg.io.ratings = Some(PathBuf::from(&e.value)),
                "io.dynamics" => cfg.io.dynamics = Some(PathBuf::from(&e.value)),
                "io.out_dir" => cfg.io.out_dir = Some(PathBuf::from(&e.value)),
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        cfg.validate().map_err(|err| match err {
            Error::Input(m) => schema(0, "", m),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.risk.validate()?;
        self.opt_config(0).validate()?;
        if !(self.sim.horizon.is_finite() && self.sim.horizon > 0.0) {
            return Err(Error::Input(format!("sim.horizon must be > 0, got {}", self.sim.horizon)));
        }
        if self.sim.samples == 0 {
            return Err(Error::Input("sim.samples must be >= 1".into()));
        }
        if !(self.portfolio.lower.is_finite() && self.portfolio.upper.is_finite() && self.portfolio.lower <= self.portfolio.upper)
        {
            return Err(Error::Input("portfolio bounds must satisfy lower <= upper".into()));
        }
        if self.portfolio.window < 3 {
            return Err(Error::Input("portfolio.window must be >= 3".into()));
        }
        Ok(())
    }

    pub fn opt_config(&self, seed: u64) -> OptConfig {
        OptConfig {
            opt_tol: self.portfolio.opt_tol,
            multistarts: self.portfolio.multistarts,
            seed,
            max_iter: self.portfolio.max_iter,
            risk: self.risk,
            ..OptConfig::default()
        }
    }

    /// Every key with its current value, in schema order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.utility.to_kv() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        let strategies: Vec<&str> = self.portfolio.strategies.iter().map(|s| s.name()).collect();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let rows: Vec<(&str, Option<String>)> = vec![
            ("sim.horizon", Some(self.sim.horizon.to_string())),
            ("sim.samples", Some(self.sim.samples.to_string())),
            ("sim.seed", Some(self.sim.seed.to_string())),
            ("risk.root_tol", Some(self.risk.root_tol.to_string())),
            ("risk.bracket_seed", Some(self.risk.bracket_seed.to_string())),
            ("risk.bracket_cap", Some(self.risk.bracket_cap.to_string())),
            ("risk.max_iter", Some(self.risk.max_iter.to_string())),
            ("portfolio.lower", Some(self.portfolio.lower.to_string())),
            ("portfolio.upper", Some(self.portfolio.upper.to_string())),
            ("portfolio.window", Some(self.portfolio.window.to_string())),
            ("portfolio.rebalance", Some("monthly".into())),
            ("portfolio.strategies", Some(strategies.join(","))),
            ("portfolio.multistarts", Some(self.portfolio.multistarts.to_string())),
            ("portfolio.opt_tol", Some(self.portfolio.opt_tol.to_string())),
            ("portfolio.max_iter", Some(self.portfolio.max_iter.to_string())),
            (
                "calibration.correlation",
                Some(
                    match self.correlation {
                        CorrelationConvention::Conditional => "conditional",
                        CorrelationConvention::Unconditional => "unconditional",
                    }
                    .into(),
                ),
            ),
            ("io.prices", path(&self.io.prices)),
            ("io.ratings", path(&self.io.ratings)),
            ("io.dynamics", path(&self.io.dynamics)),
            ("io.out_dir", path(&self.io.out_dir)),
        ];
        for (k, v) in rows {
            if let Some(v) = v {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}
