//! Python bindings for the `esg_risk` crate.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use esg_risk::calibration::{calibrate_gamma2 as calibrate, IndifferenceSpec};
use esg_risk::portfolio::{self, FeasibleSet, Objective, OptConfig};
use esg_risk::risk::{self, RiskConfig};
use esg_risk::scenarios::{self, BasketDynamics, Position, ScenarioSet};
use esg_risk::utility::{MultiUtility, ScalarUtility};
use esg_risk::{Error, ExtReal};

fn to_py(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn position<'a>(x: &'a [f64], s: &'a [f64]) -> PyResult<Position<'a>> {
    Position::new(x, s).map_err(to_py)
}

fn risk_config(root_tol: Option<f64>) -> PyResult<RiskConfig> {
    let mut cfg = RiskConfig::default();
    if let Some(t) = root_tol {
        cfg.root_tol = t;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Joint utility `u1(x) + u2(s) + k u1(x) u2(s)`.
#[pyclass(name = "Utility", module = "esgrisk", frozen)]
struct PyUtility {
    inner: MultiUtility,
}

#[pymethods]
impl PyUtility {
    /// Builds a utility from `key -> value` strings (`u1.gamma`, `u2.c`, ...);
    /// missing keys take the reference values.
    #[new]
    #[pyo3(signature = (params = None))]
    fn new(params: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let inner = match params {
            Some(kv) => MultiUtility::from_kv(&kv).map_err(to_py)?,
            None => MultiUtility::reference(),
        };
        Ok(PyUtility { inner })
    }

    #[staticmethod]
    fn reference() -> Self {
        PyUtility {
            inner: MultiUtility::reference(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (gamma1, gamma2, c, s0, k = 1.0, capped = false))]
    fn entropic(gamma1: f64, gamma2: f64, c: f64, s0: f64, k: f64, capped: bool) -> PyResult<Self> {
        let inner = MultiUtility::entropic(gamma1, gamma2, c, s0, k, capped).map_err(to_py)?;
        Ok(PyUtility { inner })
    }

    /// Exponential `u1` only; the rating term is zero.
    #[staticmethod]
    fn financial(gamma: f64) -> PyResult<Self> {
        let u1 = ScalarUtility::exponential(gamma).map_err(to_py)?;
        Ok(PyUtility {
            inner: MultiUtility::financial(u1).map_err(to_py)?,
        })
    }

    fn __call__(&self, x: f64, s: f64) -> f64 {
        self.inner.eval(x, s).value()
    }

    fn u1(&self, x: f64) -> f64 {
        self.inner.u1.value(x).value()
    }

    fn u2(&self, s: f64) -> f64 {
        self.inner.u2.value(s).value()
    }

    /// `(x_lo, s_lo)` below which the capped utility is `-inf`.
    fn domain_bounds(&self) -> PyResult<(f64, f64)> {
        self.inner.effective_domain_bounds().map_err(to_py)
    }

    fn to_dict(&self) -> BTreeMap<String, String> {
        self.inner.to_kv().into_iter().collect()
    }

    fn __repr__(&self) -> String {
        format!("Utility({:?})", self.to_dict())
    }
}

/// Annualized single-asset dynamics.
#[pyclass(name = "AssetDynamics", module = "esgrisk", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PyAssetDynamics {
    mu_x: f64,
    sigma_x: f64,
    mu_s: f64,
    sigma_s: f64,
    rho: f64,
    p: f64,
    rating: f64,
}

#[pymethods]
impl PyAssetDynamics {
    /// `rating` is the current normalized rating in `[0, 1)`.
    #[new]
    #[pyo3(signature = (mu_x, sigma_x, mu_s, sigma_s, rho, p, rating))]
    fn new(mu_x: f64, sigma_x: f64, mu_s: f64, sigma_s: f64, rho: f64, p: f64, rating: f64) -> PyResult<Self> {
        let d = PyAssetDynamics {
            mu_x,
            sigma_x,
            mu_s,
            sigma_s,
            rho,
            p,
            rating,
        };
        d.to_core()?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "AssetDynamics(mu_x={}, sigma_x={}, mu_s={}, sigma_s={}, rho={}, p={}, rating={})",
            self.mu_x, self.sigma_x, self.mu_s, self.sigma_s, self.rho, self.p, self.rating
        )
    }
}

impl PyAssetDynamics {
    fn to_core(&self) -> PyResult<scenarios::AssetDynamics> {
        let d = scenarios::AssetDynamics {
            mu_x: self.mu_x,
            sigma_x: self.sigma_x,
            mu_s: self.mu_s,
            sigma_s: self.sigma_s,
            rho: self.rho,
            p: self.p,
            s0_rescaled: scenarios::rescale_rating(self.rating).map_err(to_py)?,
            notional: 1.0,
        };
        d.validate().map_err(to_py)?;
        Ok(d)
    }
}

/// Joint scenarios `(X_i, S_i)` for one or more assets.
#[pyclass(name = "Scenarios", module = "esgrisk", frozen)]
struct PyScenarios {
    inner: ScenarioSet,
}

#[pymethods]
impl PyScenarios {
    /// Single-asset scenarios from given samples.
    #[staticmethod]
    fn from_samples(x: Vec<f64>, s: Vec<f64>) -> PyResult<Self> {
        Ok(PyScenarios {
            inner: ScenarioSet::from_samples(x, s).map_err(to_py)?,
        })
    }

    /// Independent assets sampled from one seed.
    #[staticmethod]
    #[pyo3(signature = (dynamics, count, seed, horizon = 1.0 / 12.0))]
    fn sample(dynamics: Vec<PyAssetDynamics>, count: usize, seed: u64, horizon: f64) -> PyResult<Self> {
        let assets = dynamics.iter().map(|d| d.to_core()).collect::<PyResult<Vec<_>>>()?;
        let basket = BasketDynamics::independent(assets).map_err(to_py)?;
        Ok(PyScenarios {
            inner: scenarios::sample_basket(&basket, horizon, count, seed).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_assets(&self) -> usize {
        self.inner.n_assets()
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.count()
    }

    fn x(&self, asset: usize) -> PyResult<Vec<f64>> {
        self.check(asset)?;
        Ok(self.inner.position(asset).x.to_vec())
    }

    fn s(&self, asset: usize) -> PyResult<Vec<f64>> {
        self.check(asset)?;
        Ok(self.inner.position(asset).s.to_vec())
    }
}

impl PyScenarios {
    fn check(&self, asset: usize) -> PyResult<()> {
        if asset >= self.inner.n_assets() {
            return Err(PyValueError::new_err(format!("asset {asset} out of range")));
        }
        Ok(())
    }
}

#[pyfunction]
fn normalize_rating(raw: f64) -> PyResult<f64> {
    scenarios::normalize_rating(raw).map_err(to_py)
}

#[pyfunction]
fn rescale_rating(norm: f64) -> PyResult<f64> {
    scenarios::rescale_rating(norm).map_err(to_py)
}

#[pyfunction]
fn unrescale_rating(rescaled: f64) -> f64 {
    scenarios::unrescale_rating(rescaled)
}

/// Draws `count` scenarios of one asset: `(x, s)` lists.
#[pyfunction]
#[pyo3(signature = (dynamics, count, seed, horizon = 1.0 / 12.0))]
fn sample_single(dynamics: &PyAssetDynamics, count: usize, seed: u64, horizon: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let set = scenarios::sample_single(&dynamics.to_core()?, horizon, count, seed).map_err(to_py)?;
    let pos = set.position(0);
    Ok((pos.x.to_vec(), pos.s.to_vec()))
}

#[pyfunction]
fn expected_utility(utility: &PyUtility, x: Vec<f64>, s: Vec<f64>, m: f64) -> PyResult<f64> {
    Ok(risk::expected_utility(&utility.inner, position(&x, &s)?, m).map_err(to_py)?.value())
}

/// Shortfall risk of the joint position; may be `inf` or `-inf`.
#[pyfunction]
#[pyo3(signature = (utility, x, s, root_tol = None))]
fn shortfall_risk(utility: &PyUtility, x: Vec<f64>, s: Vec<f64>, root_tol: Option<f64>) -> PyResult<f64> {
    let cfg = risk_config(root_tol)?;
    Ok(risk::shortfall_risk(&utility.inner, position(&x, &s)?, &cfg).map_err(to_py)?.value.value())
}

/// `(1/gamma) ln E[exp(-gamma X)]`.
#[pyfunction]
fn entropic_closed_form(gamma: f64, x: Vec<f64>) -> PyResult<f64> {
    let s = vec![0.5; x.len()];
    risk::entropic_closed_form(gamma, position(&x, &s)?).map_err(to_py)
}

/// `(rho_esg, rho_financial, premium)`.
#[pyfunction]
#[pyo3(signature = (utility, x, s, root_tol = None))]
fn esg_risk_premium(utility: &PyUtility, x: Vec<f64>, s: Vec<f64>, root_tol: Option<f64>) -> PyResult<(f64, f64, f64)> {
    let cfg = risk_config(root_tol)?;
    let p = risk::esg_risk_premium(&utility.inner, position(&x, &s)?, &cfg).map_err(to_py)?;
    Ok((p.esg.value.value(), p.financial.value.value(), p.premium.value()))
}

/// `E[u2(S)]` on the samples: positive means a favorable rating outlook.
#[pyfunction]
fn indifference_gap(utility: &PyUtility, s: Vec<f64>) -> PyResult<f64> {
    let x = vec![0.0; s.len()];
    risk::indifference_gap(&utility.inner.u2, position(&x, &s)?).map_err(to_py)
}

/// `gamma2` making the two-point rating lottery indifferent to `s0`.
#[pyfunction]
fn calibrate_gamma2(s_low: f64, s_high: f64, p_low: f64, s0: f64) -> PyResult<f64> {
    calibrate(&IndifferenceSpec { s_low, s_high, p_low }, s0).map_err(to_py)
}

/// Euclidean projection onto `{w : sum w = 1, lower <= w <= upper}`.
#[pyfunction]
#[pyo3(signature = (v, lower = 0.0, upper = 1.0))]
fn project_feasible(v: Vec<f64>, lower: f64, upper: f64) -> PyResult<Vec<f64>> {
    let fs = FeasibleSet::new(v.len(), lower, upper).map_err(to_py)?;
    Ok(portfolio::project_feasible(&v, &fs).map_err(to_py)?.into_inner())
}

/// Minimum-risk weights: `(weights, risk)`. With `esg=False` only the
/// financial utility `u1` is used.
#[pyfunction]
#[pyo3(signature = (utility, scenarios, lower = 0.0, upper = 0.2, esg = true, seed = 0, multistarts = 8))]
fn minimize_risk(
    utility: &PyUtility,
    scenarios: &PyScenarios,
    lower: f64,
    upper: f64,
    esg: bool,
    seed: u64,
    multistarts: usize,
) -> PyResult<(Vec<f64>, f64)> {
    let fs = FeasibleSet::new(scenarios.inner.n_assets(), lower, upper).map_err(to_py)?;
    let objective = if esg {
        Objective::Esg(utility.inner)
    } else {
        Objective::Financial(utility.inner.u1)
    };
    let cfg = OptConfig {
        seed,
        multistarts,
        ..OptConfig::default()
    };
    let r = portfolio::minimize_risk(&objective, &scenarios.inner, &fs, &cfg).map_err(to_py)?;
    Ok((r.weights.into_inner(), r.risk))
}

/// Risk of fixed weights under the joint utility.
#[pyfunction]
#[pyo3(signature = (utility, scenarios, weights, esg = true))]
fn portfolio_risk(utility: &PyUtility, scenarios: &PyScenarios, weights: Vec<f64>, esg: bool) -> PyResult<f64> {
    let objective = if esg {
        Objective::Esg(utility.inner)
    } else {
        Objective::Financial(utility.inner.u1)
    };
    let r: ExtReal =
        portfolio::portfolio_risk(&objective, &scenarios.inner, &weights, &RiskConfig::default()).map_err(to_py)?;
    Ok(r.value())
}

#[pymodule]
fn esgrisk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUtility>()?;
    m.add_class::<PyAssetDynamics>()?;
    m.add_class::<PyScenarios>()?;
    m.add_function(wrap_pyfunction!(normalize_rating, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_rating, m)?)?;
    m.add_function(wrap_pyfunction!(unrescale_rating, m)?)?;
    m.add_function(wrap_pyfunction!(sample_single, m)?)?;
    m.add_function(wrap_pyfunction!(expected_utility, m)?)?;
    m.add_function(wrap_pyfunction!(shortfall_risk, m)?)?;
    m.add_function(wrap_pyfunction!(entropic_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(esg_risk_premium, m)?)?;
    m.add_function(wrap_pyfunction!(indifference_gap, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_gamma2, m)?)?;
    m.add_function(wrap_pyfunction!(project_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_risk, m)?)?;
    m.add_function(wrap_pyfunction!(portfolio_risk, m)?)?;
    Ok(())
}
