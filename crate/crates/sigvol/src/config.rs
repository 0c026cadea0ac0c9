//! Model configuration files: JSON or TOML descriptions of a volatility
//! spec, one family per file.
//!
//! ```toml
//! family = "ou"
//! m = 4
//! rho = -0.5
//!
//! [params]
//! x = 0.25
//! kappa = 1.0
//! theta = 0.25
//! eta = 1.2
//! ```
//!
//! The `raw` family supplies explicit `{word, value}` coefficients.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{TensorElement, TimeDependentTensor, Word};
use crate::error::{Result, SigVolError};
use crate::models::{
    self, CirParams, DelayedParams, MgbmParams, OuParams, VolatilitySpec,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCoefficient {
    pub word: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelConfig {
    Ou {
        m: usize,
        rho: f64,
        params: OuParams,
        /// Use the time-dependent coefficient form.
        #[serde(default)]
        time_dependent: bool,
    },
    Mgbm {
        m: usize,
        rho: f64,
        params: MgbmParams,
        #[serde(default)]
        time_dependent: bool,
    },
    Cir {
        m: usize,
        rho: f64,
        params: CirParams,
    },
    Delayed {
        m: usize,
        rho: f64,
        params: DelayedParams,
    },
    Rlfbm {
        m: usize,
        rho: f64,
        h: f64,
    },
    Bergomi {
        m: usize,
        rho: f64,
        /// Flat forward-variance level ξ₀.
        xi0: f64,
        eta: f64,
    },
    Quintic {
        m: usize,
        rho: f64,
        alphas: Vec<f64>,
    },
    Raw {
        m: usize,
        rho: f64,
        coefficients: Vec<RawCoefficient>,
    },
}

impl ModelConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| SigVolError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .map_err(|e| SigVolError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn order(&self) -> usize {
        match self {
            ModelConfig::Ou { m, .. }
            | ModelConfig::Mgbm { m, .. }
            | ModelConfig::Cir { m, .. }
            | ModelConfig::Delayed { m, .. }
            | ModelConfig::Rlfbm { m, .. }
            | ModelConfig::Bergomi { m, .. }
            | ModelConfig::Quintic { m, .. }
            | ModelConfig::Raw { m, .. } => *m,
        }
    }

    /// Build the volatility spec. `horizon` bounds the time grid of the
    /// time-dependent families (grids hold 128 points).
    pub fn build(&self, horizon: f64) -> Result<VolatilitySpec> {
        let grid_points = 128usize;
        let grid: Vec<f64> = (0..=grid_points)
            .map(|j| horizon * j as f64 / grid_points as f64)
            .collect();
        match self {
            ModelConfig::Ou {
                m,
                rho,
                params,
                time_dependent,
            } => {
                if *time_dependent {
                    let values: Vec<TensorElement> = grid
                        .iter()
                        .map(|&t| models::ou_rep_time_dep(t, params, *m))
                        .collect();
                    VolatilitySpec::new(
                        TimeDependentTensor::new(grid, values)?,
                        *rho,
                        "ou-time-dep",
                    )
                } else {
                    VolatilitySpec::constant(models::ou_rep(params, *m), *rho, "ou")
                }
            }
            ModelConfig::Mgbm {
                m,
                rho,
                params,
                time_dependent,
            } => {
                if *time_dependent {
                    let values: Vec<TensorElement> = grid
                        .iter()
                        .map(|&t| models::mgbm_rep_time_dep(t, params, *m))
                        .collect();
                    VolatilitySpec::new(
                        TimeDependentTensor::new(grid, values)?,
                        *rho,
                        "mgbm-time-dep",
                    )
                } else {
                    VolatilitySpec::constant(models::mgbm_rep(params, *m), *rho, "mgbm")
                }
            }
            ModelConfig::Cir { m, rho, params } => {
                let (sigma_half, _) = models::cir_rep(params, *m)?;
                VolatilitySpec::constant(sigma_half, *rho, "cir")
            }
            ModelConfig::Delayed { m, rho, params } => {
                VolatilitySpec::constant(models::delayed_rep(params, *m), *rho, "delayed")
            }
            ModelConfig::Rlfbm { m, rho, h } => {
                let values: Vec<TensorElement> = grid
                    .iter()
                    .map(|&t| models::rl_fbm_rep(t.max(1e-8), *h, *m))
                    .collect::<Result<_>>()?;
                VolatilitySpec::new(TimeDependentTensor::new(grid, values)?, *rho, "rl-fbm")
            }
            ModelConfig::Bergomi { m, rho, xi0, eta } => {
                let sigma = models::bergomi_rep(|_| *xi0, *eta, &grid, *m)?;
                VolatilitySpec::new(sigma, *rho, "bergomi")
            }
            ModelConfig::Quintic { m, rho, alphas } => {
                let mut a = [0.0f64; 6];
                for (dst, src) in a.iter_mut().zip(alphas) {
                    *dst = *src;
                }
                VolatilitySpec::constant(models::quintic_rep(a, *m)?, *rho, "quintic")
            }
            ModelConfig::Raw {
                m,
                rho,
                coefficients,
            } => {
                let mut t = TensorElement::zero(2, *m);
                for c in coefficients {
                    let w = Word::parse(&c.word)?;
                    if w.len() > *m {
                        return Err(SigVolError::Config(format!(
                            "word '{}' exceeds order {m}",
                            c.word
                        )));
                    }
                    t.set_coeff(&w, num_complex::Complex64::new(c.value, 0.0));
                }
                VolatilitySpec::constant(t, *rho, "raw")
            }
        }
    }
}

/// The bundled random linear functional satisfying the leverage sign
/// condition (positive-constrained level coefficients), order 3.
pub fn ler_random_coefficients() -> Vec<RawCoefficient> {
    [
        ("e", 0.25),
        ("1", 0.102763),
        ("2", 0.274407),
        ("11", 0.044883),
        ("21", -0.076345),
        ("111", 0.145894),
        ("211", 0.391773),
        ("121", -0.062413),
        ("221", 0.463663),
        ("222", 0.357595),
    ]
    .iter()
    .map(|&(w, v)| RawCoefficient {
        word: w.into(),
        value: v,
    })
    .collect()
}
