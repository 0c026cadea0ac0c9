//! Python bindings: tensor algebra, model representations, Fourier pricing
//! and swaps, Monte Carlo cross-checks.
//!
//! Build with `cargo build --release -p sigvol-py`; the resulting
//! `libsigvol_py.so` imports as `sigvol_py` once renamed or symlinked onto
//! the Python path (see `python/smoke_test.py`).

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sigvol::algebra::{TensorElement, Word};
use sigvol::config::ModelConfig;
use sigvol::fourier::{
    implied_vol, qvol_swap_strike, smile, variance_swap_strike, AsianContext, EuropeanContext,
    PricingConfig,
};
use sigvol::models::VolatilitySpec;
use sigvol::montecarlo::{mc_price, simulate_sigvol_terminals, McConfig, Payoff};
use sigvol::riccati::RiccatiConfig;
use sigvol::signature::{expected_signature, signature_of_path};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// An element of the truncated tensor algebra over the two-letter alphabet.
#[pyclass(name = "Tensor", from_py_object)]
#[derive(Clone)]
struct PyTensor {
    inner: TensorElement,
}

#[pymethods]
impl PyTensor {
    /// Build from `{word: coefficient}` with words as digit strings
    /// ("e" for the empty word).
    #[new]
    fn new(order: usize, coefficients: std::collections::HashMap<String, f64>) -> PyResult<Self> {
        let mut t = TensorElement::zero(2, order);
        for (w, c) in coefficients {
            let word = Word::parse(&w).map_err(err)?;
            if word.len() > order {
                return Err(PyValueError::new_err(format!(
                    "word '{w}' exceeds order {order}"
                )));
            }
            t.set_coeff(&word, Complex64::new(c, 0.0));
        }
        Ok(PyTensor { inner: t })
    }

    #[staticmethod]
    fn unit(order: usize) -> Self {
        PyTensor {
            inner: TensorElement::unit(2, order),
        }
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn coeff(&self, word: &str) -> PyResult<f64> {
        Ok(self.inner.coeff(&Word::parse(word).map_err(err)?).re)
    }

    fn shuffle(&self, other: &PyTensor, out_order: usize) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.shuffle(&other.inner, out_order).map_err(err)?,
        })
    }

    fn concat(&self, other: &PyTensor, out_order: usize) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.concat(&other.inner, out_order).map_err(err)?,
        })
    }

    fn project(&self, word: &str) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.project(&Word::parse(word).map_err(err)?),
        })
    }

    fn shuffle_exp(&self, out_order: usize) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.shuffle_exp(out_order).map_err(err)?,
        })
    }

    fn resolvent(&self, out_order: usize) -> PyResult<PyTensor> {
        Ok(PyTensor {
            inner: self.inner.resolvent(out_order).map_err(err)?,
        })
    }

    fn bracket(&self, other: &PyTensor) -> f64 {
        self.inner.bracket(&other.inner).re
    }

    /// Sparse view: list of (word, coefficient) pairs.
    fn terms(&self) -> Vec<(String, f64)> {
        self.inner
            .to_sparse()
            .into_iter()
            .map(|t| (t.word, t.re))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// A signature volatility model: coefficients σ, correlation ρ, order M.
#[pyclass(name = "Model", from_py_object)]
#[derive(Clone)]
struct PyModel {
    spec: VolatilitySpec,
}

fn pricing_config(quad: usize, ode_steps: usize, m_tilde: Option<usize>) -> PricingConfig {
    PricingConfig {
        quad_nodes: quad,
        riccati: RiccatiConfig {
            ode_steps,
            m_tilde,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[pymethods]
impl PyModel {
    /// Build from explicit coefficients.
    #[new]
    fn new(sigma: PyTensor, rho: f64) -> PyResult<Self> {
        Ok(PyModel {
            spec: VolatilitySpec::constant(sigma.inner, rho, "python").map_err(err)?,
        })
    }

    /// Load a TOML or JSON model configuration file.
    #[staticmethod]
    #[pyo3(signature = (path, horizon = 1.0))]
    fn from_config(path: &str, horizon: f64) -> PyResult<Self> {
        let cfg = ModelConfig::from_path(path).map_err(err)?;
        Ok(PyModel {
            spec: cfg.build(horizon).map_err(err)?,
        })
    }

    fn order(&self) -> usize {
        self.spec.order()
    }

    fn rho(&self) -> f64 {
        self.spec.rho()
    }

    fn sigma(&self) -> PyTensor {
        PyTensor {
            inner: self.spec.sigma_at(0.0).clone(),
        }
    }

    /// European option price; `call=False` prices the put by parity.
    #[pyo3(signature = (maturity, strike, call = true, quad = 64, ode_steps = 100, m_tilde = None))]
    fn price(
        &self,
        maturity: f64,
        strike: f64,
        call: bool,
        quad: usize,
        ode_steps: usize,
        m_tilde: Option<usize>,
    ) -> PyResult<f64> {
        let ctx = EuropeanContext::new(&self.spec, maturity, &pricing_config(quad, ode_steps, m_tilde))
            .map_err(err)?;
        let (p, _) = if call {
            ctx.call_price(strike).map_err(err)?
        } else {
            ctx.put_price(strike).map_err(err)?
        };
        Ok(p)
    }

    /// Implied-vol smile: list of (strike, price, implied_vol).
    #[pyo3(signature = (maturity, strikes, quad = 64, ode_steps = 100, m_tilde = None))]
    fn smile(
        &self,
        maturity: f64,
        strikes: Vec<f64>,
        quad: usize,
        ode_steps: usize,
        m_tilde: Option<usize>,
    ) -> PyResult<Vec<(f64, f64, f64)>> {
        let reports = smile(
            &self.spec,
            maturity,
            &strikes,
            &pricing_config(quad, ode_steps, m_tilde),
        )
        .map_err(err)?;
        Ok(reports
            .iter()
            .map(|r| (r.strike, r.price, r.implied_vol.unwrap_or(f64::NAN)))
            .collect())
    }

    /// Geometric-average Asian option price.
    #[pyo3(signature = (maturity, strike, call = true, quad = 64, ode_steps = 100))]
    fn asian_price(
        &self,
        maturity: f64,
        strike: f64,
        call: bool,
        quad: usize,
        ode_steps: usize,
    ) -> PyResult<f64> {
        let ctx = AsianContext::new(&self.spec, maturity, &pricing_config(quad, ode_steps, None))
            .map_err(err)?;
        let (p, _) = if call {
            ctx.call_price(strike).map_err(err)?
        } else {
            ctx.put_price(strike).map_err(err)?
        };
        Ok(p)
    }

    /// Fair variance-swap strike (Fawcett closed form).
    fn variance_swap(&self, maturity: f64) -> PyResult<f64> {
        variance_swap_strike(&self.spec, maturity).map_err(err)
    }

    /// Fair q-volatility swap strike by Laplace inversion.
    #[pyo3(signature = (maturity, q = 0.5, quad = 48))]
    fn qvol_swap(&self, maturity: f64, q: f64, quad: usize) -> PyResult<f64> {
        qvol_swap_strike(
            &self.spec,
            maturity,
            q,
            &pricing_config(quad, 100, None),
        )
        .map_err(err)
    }

    /// Monte Carlo price with standard error: (estimate, se).
    #[pyo3(signature = (maturity, strike, call = true, paths = 20000, steps = 64, seed = 0))]
    fn mc_price(
        &self,
        maturity: f64,
        strike: f64,
        call: bool,
        paths: usize,
        steps: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let cfg = McConfig::new(steps, paths, seed);
        let samples = simulate_sigvol_terminals(&self.spec, maturity, &cfg);
        let payoff = if call {
            Payoff::Call { strike }
        } else {
            Payoff::Put { strike }
        };
        mc_price(&samples, payoff).map_err(err)
    }
}

/// Expected signature of time-augmented Brownian motion at time `t`.
#[pyfunction(name = "expected_signature")]
fn py_expected_signature(t: f64, order: usize) -> PyTensor {
    PyTensor {
        inner: expected_signature(t, order),
    }
}

/// Truncated signature of a sampled path `(times, values)`; returns the
/// terminal signature.
#[pyfunction(name = "path_signature")]
fn py_path_signature(times: Vec<f64>, values: Vec<f64>, order: usize) -> PyResult<PyTensor> {
    let sp = signature_of_path(&times, &values, order).map_err(err)?;
    Ok(PyTensor {
        inner: sp.values().last().unwrap().clone(),
    })
}

/// Black-Scholes implied volatility of a call price.
#[pyfunction(name = "implied_vol")]
fn py_implied_vol(price: f64, spot: f64, strike: f64, maturity: f64) -> PyResult<f64> {
    implied_vol(price, spot, strike, maturity).map_err(err)
}

#[pymodule]
fn sigvol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTensor>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(py_expected_signature, m)?)?;
    m.add_function(wrap_pyfunction!(py_path_signature, m)?)?;
    m.add_function(wrap_pyfunction!(py_implied_vol, m)?)?;
    Ok(())
}
