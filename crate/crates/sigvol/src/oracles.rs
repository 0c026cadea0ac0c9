//! Explicit-model characteristic functions used as independent references:
//! Black-Scholes, Stein-Stein (Ornstein-Uhlenbeck volatility, Schobel-Zhu
//! form) and Heston.
//!
//! The Stein-Stein functional is evaluated by integrating its
//! three-dimensional scalar Riccati system with a fine fixed-step RK4, which
//! is exact to machine precision at the step counts used here and shares no
//! code with the tensor-valued solver. The Heston characteristic function is
//! closed form, with the branch-stable parameterization, and is cross-checked
//! against its own scalar ODE in the tests.

use num_complex::Complex64;

use crate::error::{Result, SigVolError};

fn ci(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

/// Black-Scholes characteristic function of `log(S_T/S_t)` under zero rates:
/// `exp(-σ²/2 (u² + iu) τ)`.
pub fn bs_charfun(u: Complex64, tau: f64, sigma: f64) -> Complex64 {
    (-0.5 * sigma * sigma * tau * (u * u + ci(1.0) * u)).exp()
}

/// Geometric-average Black-Scholes characteristic function of
/// `log(S̄_T/S̄_t)` with the running-average and spot terms stripped:
/// `exp(-σ²/2 (u² (T-t)³/(3T²) + iu (T-t)²/(2T)))`.
pub fn bs_charfun_geometric(u: Complex64, t: f64, maturity: f64, sigma: f64) -> Complex64 {
    let tau = maturity - t;
    let m3 = tau * tau * tau / (3.0 * maturity * maturity);
    let m2 = tau * tau / (2.0 * maturity);
    (-0.5 * sigma * sigma * (u * u * m3 + ci(1.0) * u * m2)).exp()
}

/// Stein-Stein / Schobel-Zhu model: `dΣ = κ(θ - Σ)dt + η dW`,
/// `dS/S = Σ dB`, `d⟨W, B⟩ = ρ dt`.
#[derive(Debug, Clone, Copy)]
pub struct SteinSteinOracle {
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
    pub rho: f64,
}

/// Coefficients of `log E[e^{iu log(S_T/S_t)} | Σ_t] = A + B Σ_t + C Σ_t²`.
#[derive(Debug, Clone, Copy)]
pub struct AffineCoeffs {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl SteinSteinOracle {
    /// Right-hand side of the backward system in time-to-maturity, for
    /// `s = iu`:
    ///
    /// ```text
    /// C' = (s² - s)/2 + 2(ρηs - κ)C + 2η²C²
    /// B' = 2κθC + (ρηs - κ + 2η²C)B
    /// A' = κθB + η²B²/2 + η²C
    /// ```
    fn rhs(&self, u: Complex64, y: [Complex64; 3]) -> [Complex64; 3] {
        let s = ci(1.0) * u;
        let [_, b, c] = y;
        let eta2 = self.eta * self.eta;
        let lin = self.rho * self.eta * s - self.kappa;
        let dc = 0.5 * (s * s - s) + 2.0 * lin * c + 2.0 * eta2 * c * c;
        let db = 2.0 * self.kappa * self.theta * c + (lin + 2.0 * eta2 * c) * b;
        let da = self.kappa * self.theta * b + 0.5 * eta2 * b * b + eta2 * c;
        [da, db, dc]
    }

    /// Integrate the affine coefficients out to time-to-maturity `tau`.
    pub fn coeffs(&self, u: Complex64, tau: f64, steps: usize) -> AffineCoeffs {
        let h = tau / steps as f64;
        let mut y = [Complex64::ZERO; 3];
        for _ in 0..steps {
            let k1 = self.rhs(u, y);
            let k2 = self.rhs(u, add(y, scale(k1, 0.5 * h)));
            let k3 = self.rhs(u, add(y, scale(k2, 0.5 * h)));
            let k4 = self.rhs(u, add(y, scale(k3, h)));
            for i in 0..3 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        AffineCoeffs {
            a: y[0],
            b: y[1],
            c: y[2],
        }
    }

    /// `E[e^{iu log(S_T/S_t)} | Σ_t = vol]`.
    pub fn charfun(&self, u: Complex64, vol: f64, tau: f64) -> Complex64 {
        let c = self.coeffs(u, tau, ode_steps(tau));
        (c.a + c.b * vol + c.c * vol * vol).exp()
    }

    /// Affine coefficient trajectories on a time grid `0 = t_0 < .. < t_J = T`
    /// (stored per grid time, time-to-maturity decreasing), for hedging.
    pub fn coeffs_on_grid(&self, u: Complex64, grid: &[f64]) -> Vec<AffineCoeffs> {
        let maturity = *grid.last().unwrap();
        grid.iter()
            .map(|&t| {
                let tau = maturity - t;
                self.coeffs(u, tau, ode_steps(tau).max(1))
            })
            .collect()
    }
}

fn ode_steps(tau: f64) -> usize {
    ((tau * 2000.0).ceil() as usize).clamp(200, 4000)
}

fn add(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [Complex64; 3], s: f64) -> [Complex64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Heston model: `dV = κ(θ - V)dt + η sqrt(V) dW`, `dS/S = sqrt(V) dB`.
#[derive(Debug, Clone, Copy)]
pub struct HestonOracle {
    pub v0: f64,
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
    pub rho: f64,
}

impl HestonOracle {
    /// Closed-form `E[e^{iu log(S_T/S_0)}]` under zero rates, in the
    /// branch-stable parameterization.
    pub fn charfun(&self, u: Complex64, tau: f64) -> Complex64 {
        let eta2 = self.eta * self.eta;
        let iu = ci(1.0) * u;
        let beta = self.kappa - self.rho * self.eta * iu;
        let d = (beta * beta + eta2 * (u * u + iu)).sqrt();
        let g = (beta - d) / (beta + d);
        let e = (-d * tau).exp();
        let log_frac = ((1.0 - g * e) / (1.0 - g)).ln();
        let big_c =
            self.kappa * self.theta / eta2 * ((beta - d) * tau - 2.0 * log_frac);
        let big_d = (beta - d) / eta2 * (1.0 - e) / (1.0 - g * e);
        (big_c + big_d * self.v0).exp()
    }

    /// Scalar-ODE evaluation of the same functional (verification route).
    pub fn charfun_ode(&self, u: Complex64, tau: f64, steps: usize) -> Complex64 {
        let s = ci(1.0) * u;
        let eta2 = self.eta * self.eta;
        let lin = self.rho * self.eta * s - self.kappa;
        let rhs = |y: [Complex64; 2]| -> [Complex64; 2] {
            let [_, d] = y;
            let dd = 0.5 * (s * s - s) + lin * d + 0.5 * eta2 * d * d;
            let dc = self.kappa * self.theta * d;
            [dc, dd]
        };
        let h = tau / steps as f64;
        let mut y = [Complex64::ZERO; 2];
        for _ in 0..steps {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        (y[0] + y[1] * self.v0).exp()
    }
}

/// Newton search for the step count making the two Heston routes agree;
/// exposed for sanity checks in higher-level tests.
pub fn heston_routes_agree(h: &HestonOracle, u: Complex64, tau: f64, tol: f64) -> Result<()> {
    let a = h.charfun(u, tau);
    let b = h.charfun_ode(u, tau, 4000);
    if (a - b).norm() > tol {
        return Err(SigVolError::InvalidParameter(format!(
            "Heston closed form vs ODE disagree: {a} vs {b}"
        )));
    }
    Ok(())
}
