//! Monte Carlo engines: the signature volatility model itself (log-Euler on
//! the price, Chen extension of the signature per step) and the classical
//! processes it represents, with shared per-path random streams so twin
//! simulations can be coupled pathwise.
//!
//! Per-path counter-style streams make every ensemble bit-identical for a
//! fixed seed regardless of scheduling; antithetic pairs share a stream
//! with flipped increments.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SigVolError};
use crate::models::{CirParams, DelayedParams, MgbmParams, OuParams, VolatilitySpec};
use crate::rng::{path_rng, standard_normal};
use crate::signature::RealSignature;

/// Ensemble controls.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McConfig {
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(steps: usize, n_paths: usize, seed: u64) -> Self {
        McConfig {
            steps,
            n_paths,
            seed,
            antithetic: false,
        }
    }

    /// 252 steps per year, floored at 16.
    pub fn daily(maturity: f64, n_paths: usize, seed: u64) -> Self {
        Self::new(((252.0 * maturity).ceil() as usize).max(16), n_paths, seed)
    }
}

/// Terminal state of one signature-volatility path.
#[derive(Debug, Clone, Copy)]
pub struct TerminalSample {
    pub log_s: f64,
    /// Integrated variance `∫_0^T Σ² ds` (trapezoid).
    pub v_bar: f64,
    /// Time average `(1/T) ∫_0^T log S_s ds` (trapezoid).
    pub avg_log_s: f64,
}

/// One fully stored path (diagnostics and small ensembles).
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    pub w_perp: Vec<f64>,
    pub sigma: Vec<f64>,
    pub log_s: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub stream: u64,
}

/// σ real coefficient tables per step (piecewise-constant lookup hoisted out
/// of the hot loop).
fn sigma_tables(spec: &VolatilitySpec, grid: &[f64]) -> Vec<Vec<f64>> {
    grid.iter()
        .map(|&t| spec.sigma_at(t).coeffs().iter().map(|c| c.re).collect())
        .collect()
}

#[inline]
fn signed(draw: f64, flip: bool) -> f64 {
    if flip {
        -draw
    } else {
        draw
    }
}

/// Drive one signature-volatility path, invoking `observe(j, t_j, Σ_j,
/// log S_j, V̄_j, sig)` after each grid point (including the initial one).
#[allow(clippy::too_many_arguments)]
fn drive_sigvol_path(
    spec: &VolatilitySpec,
    sigma_at: &[Vec<f64>],
    maturity: f64,
    steps: usize,
    sig_order: usize,
    stream: u64,
    seed: u64,
    flip: bool,
    observe: &mut impl FnMut(usize, f64, f64, f64, f64, &RealSignature),
) {
    let dt = maturity / steps as f64;
    let sqrt_dt = dt.sqrt();
    let rho = spec.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let mut rng = path_rng(seed, stream);
    let mut sig = RealSignature::new(sig_order);
    let mut log_s = 0.0;
    let mut v_bar = 0.0;
    let mut sigma = sig.bracket_slice(&sigma_at[0]);
    observe(0, 0.0, sigma, log_s, v_bar, &sig);
    for j in 0..steps {
        let dw = signed(standard_normal(&mut rng), flip) * sqrt_dt;
        let dw_perp = signed(standard_normal(&mut rng), flip) * sqrt_dt;
        let db = rho * dw + rho_perp * dw_perp;
        // left-point volatility drives the price over [t_j, t_{j+1}]
        log_s += -0.5 * sigma * sigma * dt + sigma * db;
        sig.extend(dt, dw);
        let sigma_next = sig.bracket_slice(&sigma_at[j + 1]);
        v_bar += 0.5 * (sigma * sigma + sigma_next * sigma_next) * dt;
        sigma = sigma_next;
        observe(j + 1, (j + 1) as f64 * dt, sigma, log_s, v_bar, &sig);
    }
}

/// Terminal samples of the signature volatility model.
pub fn simulate_sigvol_terminals(
    spec: &VolatilitySpec,
    maturity: f64,
    cfg: &McConfig,
) -> Vec<TerminalSample> {
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let sigma_at = sigma_tables(spec, &grid);
    let order = spec.order();
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, flip) = if cfg.antithetic {
                ((i / 2) as u64, i % 2 == 1)
            } else {
                (i as u64, false)
            };
            let mut terminal = TerminalSample {
                log_s: 0.0,
                v_bar: 0.0,
                avg_log_s: 0.0,
            };
            let mut avg = 0.0;
            let mut prev_log_s = 0.0;
            drive_sigvol_path(
                spec,
                &sigma_at,
                maturity,
                steps,
                order,
                stream,
                cfg.seed,
                flip,
                &mut |j, _t, _sigma, log_s, v_bar, _sig| {
                    if j > 0 {
                        avg += 0.5 * (prev_log_s + log_s) * dt;
                    }
                    prev_log_s = log_s;
                    if j == steps {
                        terminal.log_s = log_s;
                        terminal.v_bar = v_bar;
                        terminal.avg_log_s = avg / maturity;
                    }
                },
            );
            terminal
        })
        .collect()
}

/// Fully stored signature-volatility paths (keep `n_paths` modest).
pub fn simulate_sigvol_paths(
    spec: &VolatilitySpec,
    maturity: f64,
    cfg: &McConfig,
) -> Vec<PathBundle> {
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let sigma_at = sigma_tables(spec, &grid);
    let order = spec.order();
    let rho = spec.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, flip) = if cfg.antithetic {
                ((i / 2) as u64, i % 2 == 1)
            } else {
                (i as u64, false)
            };
            // reproduce the same draws to record W and W⊥
            let mut rng = path_rng(cfg.seed, stream);
            let mut w = vec![0.0; steps + 1];
            let mut w_perp = vec![0.0; steps + 1];
            for j in 0..steps {
                w[j + 1] = w[j] + signed(standard_normal(&mut rng), flip) * dt.sqrt();
                w_perp[j + 1] =
                    w_perp[j] + signed(standard_normal(&mut rng), flip) * dt.sqrt();
            }
            let mut bundle = PathBundle {
                grid: grid.clone(),
                w,
                w_perp,
                sigma: vec![0.0; steps + 1],
                log_s: vec![0.0; steps + 1],
                v_bar: vec![0.0; steps + 1],
                stream,
            };
            drive_sigvol_path(
                spec,
                &sigma_at,
                maturity,
                steps,
                order,
                stream,
                cfg.seed,
                flip,
                &mut |j, _t, sigma, log_s, v_bar, _sig| {
                    bundle.sigma[j] = sigma;
                    bundle.log_s[j] = log_s;
                    bundle.v_bar[j] = v_bar;
                },
            );
            let _ = rho_perp;
            bundle
        })
        .collect()
}

/// Payoffs evaluated on terminal samples (spot normalized to one).
#[derive(Debug, Clone, Copy)]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    /// Geometric-average Asian options on `exp(avg_log_s)`.
    AsianCall { strike: f64 },
    AsianPut { strike: f64 },
    /// Realized q-volatility `(V̄_T/T)^q`.
    QVol { q: f64, maturity: f64 },
    /// Realized variance `V̄_T/T`.
    RealizedVariance { maturity: f64 },
}

impl Payoff {
    #[inline]
    pub fn evaluate(&self, s: &TerminalSample) -> f64 {
        match *self {
            Payoff::Call { strike } => (s.log_s.exp() - strike).max(0.0),
            Payoff::Put { strike } => (strike - s.log_s.exp()).max(0.0),
            Payoff::AsianCall { strike } => (s.avg_log_s.exp() - strike).max(0.0),
            Payoff::AsianPut { strike } => (strike - s.avg_log_s.exp()).max(0.0),
            Payoff::QVol { q, maturity } => (s.v_bar / maturity).powf(q),
            Payoff::RealizedVariance { maturity } => s.v_bar / maturity,
        }
    }
}

/// Sample mean and standard error of a payoff over an ensemble.
pub fn mc_price(samples: &[TerminalSample], payoff: Payoff) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(SigVolError::EmptyEnsemble);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| payoff.evaluate(s)).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| {
            let d = payoff.evaluate(s) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok((mean, (var / n).sqrt()))
}

/// Mean and standard error of arbitrary per-sample values.
pub fn mean_se(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(SigVolError::EmptyEnsemble);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, (var / n).sqrt()))
}

/// Classical volatility processes driven by a supplied Brownian increment
/// sequence; used for twin comparisons against the tensor representations.
#[derive(Debug, Clone, Copy)]
pub enum ClassicalModel {
    Ou(OuParams),
    Cir(CirParams),
    Mgbm(MgbmParams),
    Delayed(DelayedParams),
}

impl ClassicalModel {
    /// Evolve the process on the grid given the W increments (`dws[j]` spans
    /// `[t_j, t_{j+1}]`). Exact transitions where available, otherwise the
    /// standard schemes: CIR full-truncation Euler, delayed equation Euler
    /// with exponential-kernel state augmentation, explicit mGBM.
    pub fn path(&self, grid: &[f64], dws: &[f64]) -> Vec<f64> {
        match *self {
            ClassicalModel::Ou(p) => {
                let mut out = Vec::with_capacity(grid.len());
                let mut x = p.x;
                out.push(x);
                for j in 0..dws.len() {
                    let dt = grid[j + 1] - grid[j];
                    let decay = (-p.kappa * dt).exp();
                    // exact-in-law noise scale, maximally coupled to dW
                    let scale = if p.kappa.abs() < 1e-12 {
                        1.0
                    } else {
                        ((1.0 - decay * decay) / (2.0 * p.kappa * dt)).sqrt()
                    };
                    x = p.theta + (x - p.theta) * decay + p.eta * scale * dws[j];
                    out.push(x);
                }
                out
            }
            ClassicalModel::Cir(p) => {
                let mut out = Vec::with_capacity(grid.len());
                let mut v = p.v;
                out.push(v);
                for j in 0..dws.len() {
                    let dt = grid[j + 1] - grid[j];
                    let vp = v.max(0.0);
                    v += p.kappa * (p.theta - vp) * dt + p.eta * vp.sqrt() * dws[j];
                    out.push(v);
                }
                out
            }
            ClassicalModel::Mgbm(p) => {
                // explicit solution with a trapezoid inner time integral:
                // Y_t = (y + η/α + κ(θ + η/α) ∫ e^{(κ+α²/2)s - αW_s} ds)
                //       · e^{-(κ+α²/2)t + αW_t} - η/α
                assert!(
                    p.alpha != 0.0,
                    "explicit mGBM needs α != 0; use the OU path instead"
                );
                let lam = p.kappa + 0.5 * p.alpha * p.alpha;
                let ratio = p.eta / p.alpha;
                let mut out = Vec::with_capacity(grid.len());
                let mut w = 0.0;
                let mut integral = 0.0;
                let mut prev_kernel = 1.0;
                out.push(p.y);
                for j in 0..dws.len() {
                    let dt = grid[j + 1] - grid[j];
                    w += dws[j];
                    let kernel = (lam * grid[j + 1] - p.alpha * w).exp();
                    integral += 0.5 * (prev_kernel + kernel) * dt;
                    prev_kernel = kernel;
                    let y = (p.y + ratio + p.kappa * (p.theta + ratio) * integral)
                        * (-lam * grid[j + 1] + p.alpha * w).exp()
                        - ratio;
                    out.push(y);
                }
                out
            }
            ClassicalModel::Delayed(p) => {
                // dU = (a₁ + b₁U + c₁I₁)dt + (a₂ + c₂I₂)dW,
                // I_k(t) = ∫ e^{λ_k(t-s)} U_s ds updated exactly in the
                // exponential kernel
                let mut out = Vec::with_capacity(grid.len());
                let mut u = p.u;
                let (mut i1, mut i2) = (0.0f64, 0.0f64);
                out.push(u);
                for j in 0..dws.len() {
                    let dt = grid[j + 1] - grid[j];
                    let drift = p.a1 + p.b1 * u + p.c1 * i1;
                    let diff = p.a2 + p.c2 * i2;
                    let exp_update = |i: f64, lambda: f64| -> f64 {
                        if lambda.abs() < 1e-12 {
                            i + u * dt
                        } else {
                            let e = (lambda * dt).exp();
                            e * i + u * (e - 1.0) / lambda
                        }
                    };
                    i1 = exp_update(i1, p.lambda1);
                    i2 = exp_update(i2, p.lambda2);
                    u += drift * dt + diff * dws[j];
                    out.push(u);
                }
                out
            }
        }
    }
}

/// Pathwise mean-squared error between a classical process and the bracket
/// of its tensor representation at the requested test times, under shared
/// randomness.
pub fn representation_mse(
    spec: &VolatilitySpec,
    model: &ClassicalModel,
    maturity: f64,
    cfg: &McConfig,
    test_times: &[f64],
) -> Vec<f64> {
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    // grid indices closest to the requested times
    let test_idx: Vec<usize> = test_times
        .iter()
        .map(|&t| ((t / dt).round() as usize).min(steps))
        .collect();
    let sigma_at = sigma_tables(spec, &grid);
    let order = spec.order();
    let acc: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i as u64);
            let mut dws = Vec::with_capacity(steps);
            for _ in 0..steps {
                // twin draws: consume (ξ, ξ⊥) exactly like the price engine
                let dw = standard_normal(&mut rng) * dt.sqrt();
                let _ = standard_normal(&mut rng);
                dws.push(dw);
            }
            let exact = model.path(&grid, &dws);
            let mut sig = RealSignature::new(order);
            let mut err = vec![0.0; test_idx.len()];
            let mut record = |j: usize, sig: &RealSignature| {
                for (k, &idx) in test_idx.iter().enumerate() {
                    if idx == j {
                        let rep = sig.bracket_slice(&sigma_at[j]);
                        let d = rep - exact[j];
                        err[k] += d * d;
                    }
                }
            };
            record(0, &sig);
            for (j, &dw) in dws.iter().enumerate() {
                sig.extend(dt, dw);
                record(j + 1, &sig);
            }
            err
        })
        .reduce(
            || vec![0.0; test_idx.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    acc.iter().map(|&e| e / cfg.n_paths as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ou_rep, OuParams};
    use approx::assert_abs_diff_eq;

    fn flat_spec(vol: f64, rho: f64) -> VolatilitySpec {
        VolatilitySpec::flat(vol, rho, 0)
    }

    #[test]
    fn zero_vol_spec_prices_deterministically() {
        let spec = flat_spec(0.0, 0.0);
        let cfg = McConfig::new(8, 64, 1);
        let samples = simulate_sigvol_terminals(&spec, 1.0, &cfg);
        let (price, se) = mc_price(&samples, Payoff::Call { strike: 0.8 }).unwrap();
        assert_abs_diff_eq!(price, 0.2, epsilon = 1e-14);
        assert!(se < 1e-12);
    }

    #[test]
    fn flat_spec_gives_exact_gbm_increments() {
        let c = 0.3;
        let spec = flat_spec(c, 1.0); // ρ = 1: B = W
        let cfg = McConfig::new(16, 4, 42);
        let maturity = 0.5;
        let paths = simulate_sigvol_paths(&spec, maturity, &cfg);
        for p in &paths {
            let w_t = *p.w.last().unwrap();
            let want = -0.5 * c * c * maturity + c * w_t;
            assert_abs_diff_eq!(*p.log_s.last().unwrap(), want, epsilon = 1e-12);
            assert_abs_diff_eq!(*p.v_bar.last().unwrap(), c * c * maturity, epsilon = 1e-12);
        }
    }

    #[test]
    fn martingale_property_of_terminal_price() {
        let p = OuParams {
            x: 0.25,
            kappa: 1.0,
            theta: 0.25,
            eta: 1.2,
        };
        let spec = VolatilitySpec::constant(ou_rep(&p, 3), -0.5, "ss").unwrap();
        let cfg = McConfig {
            steps: 64,
            n_paths: 20_000,
            seed: 7,
            antithetic: true,
        };
        let samples = simulate_sigvol_terminals(&spec, 0.25, &cfg);
        let s: Vec<f64> = samples.iter().map(|t| t.log_s.exp()).collect();
        let (mean, se) = mean_se(&s).unwrap();
        assert!(
            (mean - 1.0).abs() < 3.0 * se.max(1e-4),
            "mean {mean} se {se}"
        );
    }

    #[test]
    fn correlation_sign_at_rho_one() {
        let spec = flat_spec(0.2, -1.0);
        let cfg = McConfig::new(32, 8, 3);
        let paths = simulate_sigvol_paths(&spec, 1.0, &cfg);
        for p in &paths {
            // with ρ = -1 the log-price driver is -W
            let corr: f64 = p
                .w
                .windows(2)
                .zip(p.log_s.windows(2))
                .map(|(w, l)| (w[1] - w[0]) * (l[1] - l[0] + 0.5 * 0.04 / 32.0))
                .sum();
            assert!(corr < 0.0);
        }
    }

    #[test]
    fn ou_deterministic_and_cir_mean() {
        let grid: Vec<f64> = (0..=100).map(|j| j as f64 * 0.005).collect();
        let dws = vec![0.0; 100];
        let p = OuParams {
            x: 0.4,
            kappa: 2.0,
            theta: 0.25,
            eta: 0.0,
        };
        let path = ClassicalModel::Ou(p).path(&grid, &dws);
        for (j, &t) in grid.iter().enumerate() {
            let want = p.theta + (p.x - p.theta) * (-p.kappa * t).exp();
            assert_abs_diff_eq!(path[j], want, epsilon = 1e-12);
        }

        // CIR mean at T: θ + (v - θ)e^{-κT} within 3 SE
        let cp = CirParams {
            v: 0.16,
            kappa: 1.5,
            theta: 0.09,
            eta: 0.5,
        };
        let maturity = 0.5;
        let steps = 128;
        let n = 20_000;
        let dt = maturity / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = path_rng(11, i as u64);
                let dws: Vec<f64> =
                    (0..steps).map(|_| standard_normal(&mut rng) * dt.sqrt()).collect();
                *ClassicalModel::Cir(cp).path(&grid, &dws).last().unwrap()
            })
            .collect();
        let (mean, se) = mean_se(&vals).unwrap();
        let want = cp.theta + (cp.v - cp.theta) * (-cp.kappa * maturity).exp();
        assert!((mean - want).abs() < 3.0 * se.max(1e-5), "{mean} vs {want}");
    }

    #[test]
    fn mgbm_explicit_degenerations() {
        // η = 0, κ = 0: geometric Brownian motion — exact lognormal path
        let p = MgbmParams {
            y: 0.3,
            kappa: 0.0,
            theta: 0.0,
            eta: 0.0,
            alpha: 0.7,
            lambda: None,
        };
        let steps = 64;
        let dt = 0.01;
        let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
        let mut rng = path_rng(5, 0);
        let dws: Vec<f64> = (0..steps).map(|_| standard_normal(&mut rng) * dt.sqrt()).collect();
        let path = ClassicalModel::Mgbm(p).path(&grid, &dws);
        let mut w = 0.0;
        for j in 0..steps {
            w += dws[j];
            let t = grid[j + 1];
            let want = p.y * (-0.5 * p.alpha * p.alpha * t + p.alpha * w).exp();
            assert_abs_diff_eq!(path[j + 1], want, epsilon = 1e-12);
        }
        // t -> 0 starts at y
        assert_abs_diff_eq!(path[0], p.y, epsilon = 1e-15);
    }

    #[test]
    fn mgbm_mean_reversion_long_horizon() {
        let p = MgbmParams {
            y: 0.5,
            kappa: 4.0,
            theta: 0.25,
            eta: 0.05,
            alpha: 0.4,
            lambda: None,
        };
        let steps = 256;
        let maturity = 3.0;
        let dt = maturity / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
        let n = 4000;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = path_rng(9, i as u64);
                let dws: Vec<f64> =
                    (0..steps).map(|_| standard_normal(&mut rng) * dt.sqrt()).collect();
                *ClassicalModel::Mgbm(p).path(&grid, &dws).last().unwrap()
            })
            .collect();
        let (mean, se) = mean_se(&vals).unwrap();
        // E[Y_t] = θ + (y - θ)e^{-κt} -> θ
        assert!((mean - p.theta).abs() < 3.0 * se.max(1e-3), "{mean}");
    }

    #[test]
    fn delayed_linear_degeneration() {
        // c₁ = c₂ = 0: dU = (a₁ + b₁U)dt + a₂ dW; E[U_t] solves the linear ODE
        let p = DelayedParams {
            u: 0.2,
            a1: 0.5,
            b1: -1.0,
            c1: 0.0,
            lambda1: 0.0,
            a2: 0.3,
            c2: 0.0,
            lambda2: 0.0,
        };
        let steps = 256;
        let maturity = 1.0;
        let dt = maturity / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
        let n = 20_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = path_rng(13, i as u64);
                let dws: Vec<f64> =
                    (0..steps).map(|_| standard_normal(&mut rng) * dt.sqrt()).collect();
                *ClassicalModel::Delayed(p).path(&grid, &dws).last().unwrap()
            })
            .collect();
        let (mean, se) = mean_se(&vals).unwrap();
        // closed form: u e^{b₁t} + a₁(e^{b₁t} - 1)/b₁
        let want = p.u * (p.b1 * maturity).exp() + p.a1 * ((p.b1 * maturity).exp() - 1.0) / p.b1;
        assert!((mean - want).abs() < 3.0 * se.max(1e-4), "{mean} vs {want}");
    }

    #[test]
    fn antithetic_reduces_variance_on_vanilla() {
        let p = OuParams {
            x: 0.25,
            kappa: 1.0,
            theta: 0.25,
            eta: 1.2,
        };
        let spec = VolatilitySpec::constant(ou_rep(&p, 2), -0.5, "ss").unwrap();
        let payoff = Payoff::Call { strike: 1.0 };
        let plain = McConfig {
            steps: 32,
            n_paths: 8000,
            seed: 21,
            antithetic: false,
        };
        let anti = McConfig {
            antithetic: true,
            ..plain
        };
        let (_, se_plain) = mc_price(&simulate_sigvol_terminals(&spec, 0.25, &plain), payoff)
            .unwrap();
        let (_, se_anti) =
            mc_price(&simulate_sigvol_terminals(&spec, 0.25, &anti), payoff).unwrap();
        assert!(se_anti < se_plain, "{se_anti} vs {se_plain}");
    }

    #[test]
    fn twin_mse_shrinks_with_order() {
        let p = OuParams {
            x: 0.25,
            kappa: 4.0,
            theta: 0.25,
            eta: 2.0,
        };
        let model = ClassicalModel::Ou(p);
        let cfg = McConfig::new(63, 2000, 17);
        let horizon = 0.25;
        let mse_2 = representation_mse(
            &VolatilitySpec::constant(ou_rep(&p, 2), 0.0, "m2").unwrap(),
            &model,
            horizon,
            &cfg,
            &[horizon],
        )[0];
        let mse_4 = representation_mse(
            &VolatilitySpec::constant(ou_rep(&p, 4), 0.0, "m4").unwrap(),
            &model,
            horizon,
            &cfg,
            &[horizon],
        )[0];
        assert!(mse_4 < mse_2, "{mse_4} vs {mse_2}");
        assert!(mse_4 < 5e-4, "{mse_4}");

        // the time-dependent form carries the decay factor exactly and is
        // substantially tighter at the same order
        let dt = horizon / cfg.steps as f64;
        let grid: Vec<f64> = (0..=cfg.steps).map(|j| j as f64 * dt).collect();
        let values: Vec<_> = grid
            .iter()
            .map(|&t| crate::models::ou_rep_time_dep(t, &p, 4))
            .collect();
        let sigma = crate::algebra::TimeDependentTensor::new(grid, values).unwrap();
        let spec_td = VolatilitySpec::new(sigma, 0.0, "m4-td").unwrap();
        let mse_4_td = representation_mse(&spec_td, &model, horizon, &cfg, &[horizon])[0];
        assert!(mse_4_td < 1e-4, "{mse_4_td}");
        assert!(mse_4_td < mse_4, "{mse_4_td} vs {mse_4}");
    }

    #[test]
    fn reproducibility_under_fixed_seed() {
        let spec = flat_spec(0.2, -0.5);
        let cfg = McConfig::new(16, 32, 99);
        let a = simulate_sigvol_terminals(&spec, 0.5, &cfg);
        let b = simulate_sigvol_terminals(&spec, 0.5, &cfg);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.log_s, y.log_s);
            assert_eq!(x.v_bar, y.v_bar);
        }
        assert!(mc_price(&[], Payoff::Call { strike: 1.0 }).is_err());
    }
}
