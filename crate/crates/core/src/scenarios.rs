//! Rating transforms and Monte Carlo scenarios for `(X, S_norm)`.
//!
//! Monthly model per asset:
//!
//! ```text
//! R_X = μ_X·Δ + √Δ·Z1
//! R_S = J·(μ_S·Δ + √Δ·Z2)
//! X   = N·(e^{R_X} − 1)
//! S   = (2/π)·atan(S0_rescaled·e^{R_S})
//! ```
//!
//! with `(Z1, Z2)` normal with covariance built from `σ_X, σ_S, ρ`, and the
//! jump gate `J ~ Bernoulli(p)` independent of `Z`. Across a basket the
//! normals share a `2n × 2n` correlation and the gates are coupled through a
//! Gaussian copula on an `n × n` latent correlation.
//!
//! Random stream layout, per sample: `2n` standard normals for the return
//! block, then `n` standard normals for the latent jump block. A one-asset
//! basket therefore consumes exactly the stream of [`sample_single`].

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{input, Error, Result};
use crate::linalg::{psd_sqrt, validate_correlation};

/// Upper end of the vendor's raw risk-score scale.
pub const RAW_RATING_MAX: f64 = 50.0;

/// `(50 − raw)/50`: maps the raw risk score (lower is better) onto `[0, 1]`
/// (higher is better).
pub fn normalize_rating(raw: f64) -> Result<f64> {
    if !(0.0..=RAW_RATING_MAX).contains(&raw) {
        return input(format!("raw rating {raw} outside [0, 50]"));
    }
    Ok((RAW_RATING_MAX - raw) / RAW_RATING_MAX)
}

/// Inverse of [`normalize_rating`].
pub fn denormalize_rating(norm: f64) -> f64 {
    RAW_RATING_MAX * (1.0 - norm)
}

/// `tan(π/2·s)`: maps `[0, 1)` onto `[0, ∞)`.
pub fn rescale_rating(norm: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&norm) {
        return input(format!("normalized rating {norm} outside [0, 1)"));
    }
    Ok((FRAC_PI_2 * norm).tan())
}

/// `(2/π)·atan(r)`, the inverse of [`rescale_rating`].
pub fn unrescale_rating(rescaled: f64) -> f64 {
    rescaled.atan() / FRAC_PI_2
}

/// Monthly-model parameters of one asset. Rates are annualized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssetDynamics {
    pub mu_x: f64,
    pub sigma_x: f64,
    pub mu_s: f64,
    pub sigma_s: f64,
    /// Correlation of the return and rating shocks, given a rating change.
    pub rho: f64,
    /// Probability of a rating change within one period.
    pub p: f64,
    pub s0_rescaled: f64,
    pub notional: f64,
}

impl Default for AssetDynamics {
    fn default() -> Self {
        AssetDynamics {
            mu_x: 0.0,
            sigma_x: 0.2,
            mu_s: 0.0,
            sigma_s: 0.0,
            rho: 0.0,
            p: 0.0,
            s0_rescaled: 1.0,
            notional: 1.0,
        }
    }
}

impl AssetDynamics {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Input(msg));
        if !(self.mu_x.is_finite() && self.mu_s.is_finite()) {
            return fail(format!("drifts must be finite (mu_x = {}, mu_s = {})", self.mu_x, self.mu_s));
        }
        if !(self.sigma_x.is_finite() && self.sigma_x > 0.0) {
            return fail(format!("sigma_x must be > 0, got {}", self.sigma_x));
        }
        if !(self.sigma_s.is_finite() && self.sigma_s >= 0.0) {
            return fail(format!("sigma_s must be >= 0, got {}", self.sigma_s));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return fail(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return fail(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(self.s0_rescaled.is_finite() && self.s0_rescaled > 0.0) {
            return fail(format!("s0_rescaled must be > 0, got {}", self.s0_rescaled));
        }
        if !(self.notional.is_finite() && self.notional > 0.0) {
            return fail(format!("notional must be > 0, got {}", self.notional));
        }
        Ok(())
    }

    /// Current normalized rating.
    pub fn rating_now(&self) -> f64 {
        unrescale_rating(self.s0_rescaled)
    }
}

/// Several assets with cross-asset dependence.
#[derive(Debug, Clone, PartialEq)]
pub struct BasketDynamics {
    pub assets: Vec<AssetDynamics>,
    /// Correlation of `(Z1¹, Z2¹, …, Z1ⁿ, Z2ⁿ)`.
    pub z_correlation: DMatrix<f64>,
    /// Latent Gaussian-copula correlation of the jump gates.
    pub jump_correlation: DMatrix<f64>,
}

impl BasketDynamics {
    pub fn new(assets: Vec<AssetDynamics>, z_correlation: DMatrix<f64>, jump_correlation: DMatrix<f64>) -> Result<Self> {
        let basket = BasketDynamics {
            assets,
            z_correlation,
            jump_correlation,
        };
        basket.validate()?;
        Ok(basket)
    }

    /// No cross-asset dependence: block-diagonal return correlation and
    /// independent jump gates.
    pub fn independent(assets: Vec<AssetDynamics>) -> Result<Self> {
        let n = assets.len();
        let mut z = DMatrix::identity(2 * n, 2 * n);
        for (i, a) in assets.iter().enumerate() {
            z[(2 * i, 2 * i + 1)] = a.rho;
            z[(2 * i + 1, 2 * i)] = a.rho;
        }
        BasketDynamics::new(assets, z, DMatrix::identity(n, n))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.assets.len();
        if n == 0 {
            return input("basket has no assets");
        }
        for (i, a) in self.assets.iter().enumerate() {
            a.validate().map_err(|e| Error::Input(format!("asset {i}: {e}")))?;
        }
        if self.z_correlation.shape() != (2 * n, 2 * n) {
            return input(format!("`z_correlation` must be {0}x{0}", 2 * n));
        }
        if self.jump_correlation.shape() != (n, n) {
            return input(format!("`jump_correlation` must be {n}x{n}"));
        }
        validate_correlation(&self.z_correlation, "z_correlation")?;
        validate_correlation(&self.jump_correlation, "jump_correlation")?;
        for (i, a) in self.assets.iter().enumerate() {
            let block = self.z_correlation[(2 * i, 2 * i + 1)];
            if (block - a.rho).abs() > 1e-10 {
                return input(format!(
                    "`z_correlation` block of asset {i} has off-diagonal {block}, asset rho is {}",
                    a.rho
                ));
            }
        }
        Ok(())
    }
}

/// One asset's view of a scenario set.
#[derive(Debug, Clone, Copy)]
pub struct Position<'a> {
    pub x: &'a [f64],
    pub s: &'a [f64],
}

impl<'a> Position<'a> {
    pub fn new(x: &'a [f64], s: &'a [f64]) -> Result<Self> {
        if x.len() != s.len() {
            return input(format!("position has {} exposures but {} ratings", x.len(), s.len()));
        }
        Ok(Position { x, s })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `count` joint samples of `(X, S_norm)` for each of `n_assets` assets.
///
/// Stored asset-major so each asset's samples are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub horizon: f64,
    pub seed: u64,
    n_assets: usize,
    count: usize,
    x: Vec<f64>,
    s: Vec<f64>,
}

impl ScenarioSet {
    /// Builds a set from asset-major columns.
    pub fn from_columns(horizon: f64, seed: u64, n_assets: usize, x: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if n_assets == 0 || x.len() != s.len() || x.len() % n_assets != 0 {
            return input("scenario columns do not match the asset count");
        }
        if let Some(bad) = s.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return input(format!("scenario rating {bad} outside [0, 1]"));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return input(format!("scenario exposure {bad} is not finite"));
        }
        let count = x.len() / n_assets;
        Ok(ScenarioSet {
            horizon,
            seed,
            n_assets,
            count,
            x,
            s,
        })
    }

    /// Single-asset set from explicit samples.
    pub fn from_samples(x: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        ScenarioSet::from_columns(f64::NAN, 0, 1, x, s)
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn position(&self, asset: usize) -> Position<'_> {
        let r = asset * self.count..(asset + 1) * self.count;
        Position {
            x: &self.x[r.clone()],
            s: &self.s[r],
        }
    }

    /// Writes `sample,asset,x,s_norm` rows. `names` label the assets,
    /// defaulting to their indices.
    pub fn write_csv<W: Write>(&self, out: W, names: Option<&[String]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample", "asset", "x", "s_norm"])?;
        for i in 0..self.count {
            for a in 0..self.n_assets {
                let label = names.and_then(|n| n.get(a)).cloned().unwrap_or_else(|| a.to_string());
                let j = a * self.count + i;
                w.write_record([i.to_string(), label, self.x[j].to_string(), self.s[j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw model draws: per-asset log-return, rating log-change and jump gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDraws {
    pub n_assets: usize,
    pub count: usize,
    /// Asset-major `R_X`.
    pub return_x: Vec<f64>,
    /// Asset-major `R_S` (zero when the gate is closed).
    pub return_s: Vec<f64>,
    pub jumps: Vec<bool>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn mat_vec(rows: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = rows[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

/// `Φ⁻¹(p)` with the endpoints mapped to `∓∞`.
fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(2.0 * p - 1.0)
    }
}

/// Draws `count` i.i.d. one-period log-changes for a basket.
pub fn draw_model(dynamics: &BasketDynamics, horizon: f64, count: usize, seed: u64) -> Result<ModelDraws> {
    dynamics.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return input(format!("horizon must be > 0, got {horizon}"));
    }
    if count == 0 {
        return input("scenario count must be >= 1");
    }
    let n = dynamics.assets.len();
    let z_root = matrix_rows(&psd_sqrt(&dynamics.z_correlation, "z_correlation")?);
    let j_root = matrix_rows(&psd_sqrt(&dynamics.jump_correlation, "jump_correlation")?);
    let thresholds: Vec<f64> = dynamics.assets.iter().map(|a| normal_quantile(a.p)).collect();
    let sqrt_h = horizon.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps = vec![0.0; 2 * n];
    let mut z = vec![0.0; 2 * n];
    let mut lat_eps = vec![0.0; n];
    let mut lat = vec![0.0; n];
    let mut return_x = vec![0.0; n * count];
    let mut return_s = vec![0.0; n * count];
    let mut jumps = vec![false; n * count];

    for k in 0..count {
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        for e in lat_eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        mat_vec(&z_root, &eps, &mut z);
        mat_vec(&j_root, &lat_eps, &mut lat);
        for (i, a) in dynamics.assets.iter().enumerate() {
            let idx = i * count + k;
            return_x[idx] = a.mu_x * horizon + sqrt_h * a.sigma_x * z[2 * i];
            let jump = lat[i] <= thresholds[i];
            jumps[idx] = jump;
            if jump {
                return_s[idx] = a.mu_s * horizon + sqrt_h * a.sigma_s * z[2 * i + 1];
            }
        }
    }
    Ok(ModelDraws {
        n_assets: n,
        count,
        return_x,
        return_s,
        jumps,
    })
}

/// Joint scenarios for a basket.
pub fn sample_basket(dynamics: &BasketDynamics, horizon: f64, count: usize, seed: u64) -> Result<ScenarioSet> {
    let draws = draw_model(dynamics, horizon, count, seed)?;
    let mut x = Vec::with_capacity(draws.return_x.len());
    let mut s = Vec::with_capacity(draws.return_s.len());
    for (i, a) in dynamics.assets.iter().enumerate() {
        let r = i * count..(i + 1) * count;
        x.extend(draws.return_x[r.clone()].iter().map(|rx| a.notional * rx.exp_m1()));
        s.extend(
            draws.return_s[r]
                .iter()
                .map(|rs| unrescale_rating(a.s0_rescaled * rs.exp()).clamp(0.0, 1.0)),
        );
    }
    Ok(ScenarioSet {
        horizon,
        seed,
        n_assets: dynamics.assets.len(),
        count,
        x,
        s,
    })
}

/// Scenarios for one asset; identical to a one-asset [`sample_basket`].
pub fn sample_single(dynamics: &AssetDynamics, horizon: f64, count: usize, seed: u64) -> Result<ScenarioSet> {
    sample_basket(&BasketDynamics::independent(vec![*dynamics])?, horizon, count, seed)
}
