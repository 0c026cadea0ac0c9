//! Quadratic hedging via martingale-representation weights.
//!
//! The conditional claim value is a Fourier integral over martingales
//! `M_t(ũ)`; applying Ito under the integral yields the representation
//! `dC = Z dW + Z⊥ dW⊥` with
//!
//! ```text
//! Z   = Σ S Δ_BS ρ  - Σ_i w_i Re[ w(u_i) ζ(ũ_i)  ],
//! Z⊥  = Σ S Δ_BS ρ⊥ - Σ_i w_i Re[ w(u_i) ζ⊥(ũ_i) ],
//! ζ   = iũ Σ (M - M_BS) ρ  + M ⟨ψ proj2, 𝕎̂⟩,
//! ζ⊥  = iũ Σ (M - M_BS) ρ⊥,
//! w(u) = (K/π) e^{-iũ log K} / (u² + ¼),    ρ⊥ = sqrt(1 - ρ²),
//! ```
//!
//! and the optimal strategy is `α* = ρZ + ρ⊥Z⊥` with initial wealth equal to
//! the Fourier price. The minus sign on the node sums mirrors the minus in
//! the control-variate Lewis formula. Geometric Asian claims carry the
//! damping factor `(T-t)/T` on the spot exposure and hedge the geometric
//! forward leg through the extra node `u = -i`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::word_count;
use crate::error::Result;
use crate::fourier::{
    bs_charfun, bs_delta, norm_cdf, AsianContext, EuropeanContext, PricingConfig,
};
use crate::models::VolatilitySpec;
use crate::montecarlo::ClassicalModel;
use crate::oracles::{AffineCoeffs, SteinSteinOracle};
use crate::rng::{path_rng, standard_normal};
use crate::signature::RealSignature;

fn ci(x: f64) -> Complex64 {
    Complex64::new(0.0, x)
}

/// Hedging strategies under comparison.
#[derive(Debug, Clone, Copy)]
pub enum HedgeStrategy {
    /// Fourier weights of the signature volatility model.
    SigVol,
    /// Plain Black-Scholes delta at a fixed reference volatility.
    BsDelta { sigma: f64 },
    /// Explicit Stein-Stein (Schobel-Zhu) Fourier weights; the oracle for
    /// Ornstein-Uhlenbeck volatility markets.
    SteinStein { params: SteinSteinOracle },
}

impl HedgeStrategy {
    fn name(&self) -> &'static str {
        match self {
            HedgeStrategy::SigVol => "sigvol",
            HedgeStrategy::BsDelta { .. } => "bs_delta",
            HedgeStrategy::SteinStein { .. } => "stein_stein_oracle",
        }
    }
}

/// What drives the simulated market volatility: the truncated signature
/// model itself, or the exact classical process it represents.
#[derive(Debug, Clone, Copy)]
pub enum HedgeMarket {
    SigVol,
    Classical(ClassicalModel),
}

#[derive(Debug, Clone, Copy)]
pub struct HedgeConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Rebalance (and simulation) steps on `[0, T]`.
    pub steps: usize,
    pub pricing: PricingConfig,
}

/// Per-strategy outcome of a rebalanced hedge simulation.
#[derive(Debug, Clone, Serialize)]
pub struct HedgeReport {
    pub strategy: String,
    pub product: String,
    pub strike: f64,
    pub maturity: f64,
    /// Initial wealth = the pricer's value of the claim.
    pub x0: f64,
    /// Mean squared terminal P&L.
    pub j_hat: f64,
    pub se_j: f64,
    pub mean_pnl: f64,
    pub n_paths: usize,
    pub steps: usize,
    pub skipped_rebalances: usize,
    #[serde(skip)]
    pub pnl: Vec<f64>,
}

/// ψ tables sampled at the rebalance times: `psi[node][step]` is the dense
/// coefficient vector, interpolated linearly between RK4 macro steps.
struct PsiTable {
    psi: Vec<Vec<Vec<Complex64>>>,
    proj_len: usize,
}

impl PsiTable {
    fn build(sol: &crate::riccati::RiccatiSolution, times: &[f64]) -> Self {
        let m_tilde = sol.m_tilde();
        let proj_len = if m_tilde >= 1 {
            word_count(2, m_tilde - 1)
        } else {
            0
        };
        let psi = (0..sol.u_nodes().len())
            .map(|node| {
                times
                    .iter()
                    .map(|&t| sol.psi_at(node, t).coeffs().to_vec())
                    .collect()
            })
            .collect();
        PsiTable { psi, proj_len }
    }

    /// `(⟨ψ, sig⟩, ⟨ψ proj2, sig⟩)` against a real signature.
    #[inline]
    fn brackets(&self, node: usize, step: usize, sig: &RealSignature) -> (Complex64, Complex64) {
        let psi = &self.psi[node][step];
        let s = sig.coeffs();
        let mut full = Complex64::ZERO;
        let n = psi.len().min(s.len());
        for v in 0..n {
            full += psi[v] * s[v];
        }
        let mut p2 = Complex64::ZERO;
        for v in 0..self.proj_len.min(s.len()) {
            p2 += psi[2 * v + 2] * s[v];
        }
        (full, p2)
    }
}

/// Lewis kernel weights `w(u_i) = (K/π) e^{-iũ_i log K}/(u_i² + ¼)` with the
/// quadrature weights folded in.
fn kernel_weights(rule: &crate::quadrature::QuadratureRule, strike: f64) -> Vec<Complex64> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| {
            let ut = Complex64::new(u, -0.5);
            (ci(-1.0) * ut * strike.ln()).exp() * (strike / std::f64::consts::PI * w
                / (u * u + 0.25))
        })
        .collect()
}

struct PathState {
    sig: RealSignature,
    log_s: f64,
    /// Running `(1/T)∫_0^t log S du` (trapezoid).
    avg_log_s: f64,
    /// Market instantaneous volatility.
    sigma: f64,
}

/// European hedge weights `(Z, Z⊥)` of a call from the signature model.
#[allow(clippy::too_many_arguments)]
fn european_call_weights_sigvol(
    psi: &PsiTable,
    kernel: &[Complex64],
    ctx: &EuropeanContext,
    step: usize,
    tau: f64,
    state: &PathState,
    strike: f64,
    rho: f64,
) -> (f64, f64) {
    let rho_perp = (1.0 - rho * rho).sqrt();
    let s = state.log_s.exp();
    let delta = bs_delta(s, strike, tau, ctx.sigma_bs);
    let mut z = state.sigma * s * delta * rho;
    let mut z_perp = state.sigma * s * delta * rho_perp;
    for (i, &u) in ctx.rule.nodes.iter().enumerate() {
        let ut = Complex64::new(u, -0.5);
        let (full, p2) = psi.brackets(i, step, &state.sig);
        let spot_phase = (ci(1.0) * ut * state.log_s).exp();
        let m = full.exp() * spot_phase;
        let m_bs = bs_charfun(ut, tau, ctx.sigma_bs) * spot_phase;
        let common = ci(1.0) * ut * state.sigma * (m - m_bs);
        let zeta = common * rho + m * p2;
        let zeta_perp = common * rho_perp;
        z -= (kernel[i] * zeta).re;
        z_perp -= (kernel[i] * zeta_perp).re;
    }
    (z, z_perp)
}

/// European hedge weights of a call from the explicit Stein-Stein oracle.
#[allow(clippy::too_many_arguments)]
fn european_call_weights_oracle(
    coeffs: &[Vec<AffineCoeffs>],
    kernel: &[Complex64],
    ctx: &EuropeanContext,
    oracle: &SteinSteinOracle,
    step: usize,
    tau: f64,
    state: &PathState,
    strike: f64,
) -> (f64, f64) {
    let rho = oracle.rho;
    let rho_perp = (1.0 - rho * rho).sqrt();
    let s = state.log_s.exp();
    let vol = state.sigma;
    let delta = bs_delta(s, strike, tau, ctx.sigma_bs);
    let mut z = vol * s * delta * rho;
    let mut z_perp = vol * s * delta * rho_perp;
    for (i, &u) in ctx.rule.nodes.iter().enumerate() {
        let ut = Complex64::new(u, -0.5);
        let c = coeffs[i][step];
        let spot_phase = (ci(1.0) * ut * state.log_s).exp();
        let m = (c.a + c.b * vol + c.c * vol * vol).exp() * spot_phase;
        let m_bs = bs_charfun(ut, tau, ctx.sigma_bs) * spot_phase;
        let common = ci(1.0) * ut * vol * (m - m_bs);
        // dM|dW = M (B + 2CΣ) η dW + M iũ Σ dB
        let zeta = common * rho + m * (c.b + 2.0 * c.c * vol) * oracle.eta;
        let zeta_perp = common * rho_perp;
        z -= (kernel[i] * zeta).re;
        z_perp -= (kernel[i] * zeta_perp).re;
    }
    (z, z_perp)
}

/// Simulate a discretely rebalanced hedge of a European option and report
/// the quadratic objective per strategy. All strategies share the same
/// market paths. Initial wealth is the signature-model Fourier price for
/// every strategy, so the reports compare hedging quality alone.
pub fn hedge_european(
    spec: &VolatilitySpec,
    market: HedgeMarket,
    strike: f64,
    maturity: f64,
    is_put: bool,
    strategies: &[HedgeStrategy],
    cfg: &HedgeConfig,
) -> Result<Vec<HedgeReport>> {
    let ctx = EuropeanContext::new(spec, maturity, &cfg.pricing)?;
    let (x0, _) = if is_put {
        ctx.put_price(strike)?
    } else {
        ctx.call_price(strike)?
    };
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let psi = PsiTable::build(&ctx.solution, &times);
    let kernel = kernel_weights(&ctx.rule, strike);
    let rho = spec.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let sigma_tables: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| spec.sigma_at(t).coeffs().iter().map(|c| c.re).collect())
        .collect();
    // oracle affine coefficient tables, one per (node, rebalance time)
    let oracle_tables: Vec<Option<Vec<Vec<AffineCoeffs>>>> = strategies
        .iter()
        .map(|s| match s {
            HedgeStrategy::SteinStein { params } => Some(
                ctx.rule
                    .nodes
                    .iter()
                    .map(|&u| params.coeffs_on_grid(Complex64::new(u, -0.5), &times))
                    .collect(),
            ),
            _ => None,
        })
        .collect();

    let n_strat = strategies.len();
    let results: Vec<(Vec<f64>, usize)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path as u64);
            let order = spec.order().max(ctx.solution.m_tilde());
            let mut state = PathState {
                sig: RealSignature::new(order),
                log_s: 0.0,
                avg_log_s: 0.0,
                sigma: 0.0,
            };
            // market volatility state for classical drivers
            let mut classical_vol = match market {
                HedgeMarket::Classical(m) => match m {
                    ClassicalModel::Ou(p) => p.x,
                    ClassicalModel::Cir(p) => p.v,
                    ClassicalModel::Mgbm(p) => p.y,
                    ClassicalModel::Delayed(p) => p.u,
                },
                HedgeMarket::SigVol => 0.0,
            };
            let mut classical_aux = (0.0f64, 0.0f64, 0.0f64, 1.0f64); // delayed/mgbm state
            state.sigma = match market {
                HedgeMarket::SigVol => state.sig.bracket_slice(&sigma_tables[0]),
                HedgeMarket::Classical(_) => classical_vol,
            };
            let mut wealth = vec![x0; n_strat];
            let mut shares = vec![0.0f64; n_strat];
            let mut skipped = 0usize;
            for j in 0..steps {
                let tau = maturity - times[j];
                let s = state.log_s.exp();
                // per-strategy target positions
                for (k, strat) in strategies.iter().enumerate() {
                    let alpha = match strat {
                        HedgeStrategy::SigVol => {
                            let (mut z, mut zp) = european_call_weights_sigvol(
                                &psi, &kernel, &ctx, j, tau, &state, strike, rho,
                            );
                            if is_put {
                                z -= s * state.sigma * rho;
                                zp -= s * state.sigma * rho_perp;
                            }
                            rho * z + rho_perp * zp
                        }
                        HedgeStrategy::BsDelta { sigma } => {
                            let d = bs_delta(s, strike, tau, *sigma)
                                - if is_put { 1.0 } else { 0.0 };
                            d * s * state.sigma
                        }
                        HedgeStrategy::SteinStein { params } => {
                            let tables = oracle_tables[k].as_ref().expect("built above");
                            let (mut z, mut zp) = european_call_weights_oracle(
                                tables, &kernel, &ctx, params, j, tau, &state, strike,
                            );
                            if is_put {
                                z -= s * state.sigma * params.rho;
                                zp -= s * state.sigma * (1.0 - params.rho * params.rho).sqrt();
                            }
                            params.rho * z + (1.0 - params.rho * params.rho).sqrt() * zp
                        }
                    };
                    if state.sigma.abs() > 1e-8 {
                        shares[k] = alpha / (s * state.sigma);
                    } else {
                        skipped += 1;
                    }
                }
                // advance the market over [t_j, t_{j+1}]
                let dw = standard_normal(&mut rng) * dt.sqrt();
                let dw_perp = standard_normal(&mut rng) * dt.sqrt();
                let db = rho * dw + rho_perp * dw_perp;
                let sigma_now = state.sigma;
                let new_log_s =
                    state.log_s - 0.5 * sigma_now * sigma_now * dt + sigma_now * db;
                let s_new = new_log_s.exp();
                for k in 0..n_strat {
                    wealth[k] += shares[k] * (s_new - s);
                }
                state.avg_log_s += 0.5 * (state.log_s + new_log_s) * dt / maturity;
                state.log_s = new_log_s;
                state.sig.extend(dt, dw);
                state.sigma = match market {
                    HedgeMarket::SigVol => state.sig.bracket_slice(&sigma_tables[j + 1]),
                    HedgeMarket::Classical(m) => {
                        classical_vol = advance_classical(
                            &m,
                            classical_vol,
                            &mut classical_aux,
                            times[j],
                            dt,
                            dw,
                        );
                        classical_vol
                    }
                };
            }
            let s_t = state.log_s.exp();
            let payoff = if is_put {
                (strike - s_t).max(0.0)
            } else {
                (s_t - strike).max(0.0)
            };
            let pnl: Vec<f64> = wealth.iter().map(|w| w - payoff).collect();
            (pnl, skipped)
        })
        .collect();

    let mut reports = Vec::with_capacity(n_strat);
    for (k, strat) in strategies.iter().enumerate() {
        let pnl: Vec<f64> = results.iter().map(|(p, _)| p[k]).collect();
        let sq: Vec<f64> = pnl.iter().map(|x| x * x).collect();
        let (j_hat, se_j) = crate::montecarlo::mean_se(&sq)?;
        let (mean_pnl, _) = crate::montecarlo::mean_se(&pnl)?;
        reports.push(HedgeReport {
            strategy: strat.name().into(),
            product: if is_put { "european_put" } else { "european_call" }.into(),
            strike,
            maturity,
            x0,
            j_hat,
            se_j,
            mean_pnl,
            n_paths: cfg.n_paths,
            steps,
            skipped_rebalances: results.iter().map(|(_, s)| s).sum(),
            pnl,
        });
    }
    Ok(reports)
}

/// One step of the classical volatility state (shares the schemes of
/// [`ClassicalModel::path`]).
fn advance_classical(
    m: &ClassicalModel,
    vol: f64,
    aux: &mut (f64, f64, f64, f64),
    t: f64,
    dt: f64,
    dw: f64,
) -> f64 {
    match *m {
        ClassicalModel::Ou(p) => {
            let decay = (-p.kappa * dt).exp();
            let scale = if p.kappa.abs() < 1e-12 {
                1.0
            } else {
                ((1.0 - decay * decay) / (2.0 * p.kappa * dt)).sqrt()
            };
            p.theta + (vol - p.theta) * decay + p.eta * scale * dw
        }
        ClassicalModel::Cir(p) => {
            let vp = vol.max(0.0);
            vol + p.kappa * (p.theta - vp) * dt + p.eta * vp.sqrt() * dw
        }
        ClassicalModel::Mgbm(p) => {
            // (w, integral, prev_kernel) live in aux.0..aux.3
            let lam = p.kappa + 0.5 * p.alpha * p.alpha;
            let ratio = p.eta / p.alpha;
            aux.0 += dw; // running W
            let kernel = (lam * (t + dt) - p.alpha * aux.0).exp();
            aux.1 += 0.5 * (aux.3 + kernel) * dt;
            aux.3 = kernel;
            (p.y + ratio + p.kappa * (p.theta + ratio) * aux.1)
                * (-lam * (t + dt) + p.alpha * aux.0).exp()
                - ratio
        }
        ClassicalModel::Delayed(p) => {
            let drift = p.a1 + p.b1 * vol + p.c1 * aux.0;
            let diff = p.a2 + p.c2 * aux.1;
            let upd = |i: f64, lambda: f64| {
                if lambda.abs() < 1e-12 {
                    i + vol * dt
                } else {
                    let e = (lambda * dt).exp();
                    e * i + vol * (e - 1.0) / lambda
                }
            };
            aux.0 = upd(aux.0, p.lambda1);
            aux.1 = upd(aux.1, p.lambda2);
            vol + drift * dt + diff * dw
        }
    }
}

/// Lognormal moments of `log S̄_T` given the running average and spot at
/// time `t` under flat volatility: mean `m` and variance `v`.
fn asian_moments(sigma: f64, t: f64, maturity: f64, avg_log_s: f64, log_s: f64) -> (f64, f64) {
    let tau = maturity - t;
    let m = avg_log_s + tau / maturity * log_s - sigma * sigma * tau * tau / (4.0 * maturity);
    let v = sigma * sigma * tau * tau * tau / (3.0 * maturity * maturity);
    (m, v)
}

/// Simulate a discretely rebalanced hedge of a geometric-average Asian
/// option (signature weights plus an optional Black-Scholes baseline).
pub fn hedge_asian(
    spec: &VolatilitySpec,
    market: HedgeMarket,
    strike: f64,
    maturity: f64,
    is_put: bool,
    strategies: &[HedgeStrategy],
    cfg: &HedgeConfig,
) -> Result<Vec<HedgeReport>> {
    let ctx = AsianContext::new(spec, maturity, &cfg.pricing)?;
    let (x0, _) = if is_put {
        ctx.put_price(strike)?
    } else {
        ctx.call_price(strike)?
    };
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let psi = PsiTable::build(&ctx.solution, &times);
    let kernel = kernel_weights(&ctx.rule, strike);
    let rho = spec.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let sigma_tables: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| spec.sigma_at(t).coeffs().iter().map(|c| c.re).collect())
        .collect();
    let forward_node = ctx.rule.len(); // u = -i lives at the end

    let n_strat = strategies.len();
    let results: Vec<(Vec<f64>, usize)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path as u64);
            let order = spec.order().max(ctx.solution.m_tilde());
            let mut state = PathState {
                sig: RealSignature::new(order),
                log_s: 0.0,
                avg_log_s: 0.0,
                sigma: 0.0,
            };
            let mut classical_vol = match market {
                HedgeMarket::Classical(m) => match m {
                    ClassicalModel::Ou(p) => p.x,
                    ClassicalModel::Cir(p) => p.v,
                    ClassicalModel::Mgbm(p) => p.y,
                    ClassicalModel::Delayed(p) => p.u,
                },
                HedgeMarket::SigVol => 0.0,
            };
            let mut classical_aux = (0.0f64, 0.0f64, 0.0f64, 1.0f64);
            state.sigma = match market {
                HedgeMarket::SigVol => state.sig.bracket_slice(&sigma_tables[0]),
                HedgeMarket::Classical(_) => classical_vol,
            };
            let mut wealth = vec![x0; n_strat];
            let mut shares = vec![0.0f64; n_strat];
            let mut skipped = 0usize;
            for j in 0..steps {
                let t = times[j];
                let tau = maturity - t;
                let damp = tau / maturity;
                let s = state.log_s.exp();
                for (k, strat) in strategies.iter().enumerate() {
                    let alpha = match strat {
                        HedgeStrategy::SigVol => {
                            // control-variate moments and spot loading
                            let (m_mean, m_var) = asian_moments(
                                ctx.sigma_bs,
                                t,
                                maturity,
                                state.avg_log_s,
                                state.log_s,
                            );
                            let sqv = m_var.sqrt().max(1e-12);
                            let d2 = (m_mean - strike.ln()) / sqv;
                            let d1 = d2 + sqv;
                            let load_call =
                                damp * (m_mean + 0.5 * m_var).exp() * norm_cdf(d1);
                            let mut z = load_call * state.sigma * rho;
                            let mut zp = load_call * state.sigma * rho_perp;
                            // phase common to M̄ and M̄_BS
                            let xbar = state.avg_log_s + damp * state.log_s;
                            for (i, &u) in ctx.rule.nodes.iter().enumerate() {
                                let ut = Complex64::new(u, -0.5);
                                let (full, p2) = psi.brackets(i, j, &state.sig);
                                let phase = (ci(1.0) * ut * xbar).exp();
                                let m = full.exp() * phase;
                                let m_bs = (ci(1.0) * ut * (-0.25 * ctx.sigma_bs
                                    * ctx.sigma_bs
                                    * tau
                                    * tau
                                    / maturity)
                                    - 0.5
                                        * ut
                                        * ut
                                        * (ctx.sigma_bs * ctx.sigma_bs * tau * tau * tau
                                            / (3.0 * maturity * maturity)))
                                .exp()
                                    * phase;
                                let common =
                                    ci(1.0) * ut * damp * state.sigma * (m - m_bs);
                                let zeta = common * rho + m * p2;
                                let zeta_perp = common * rho_perp;
                                z -= (kernel[i] * zeta).re;
                                zp -= (kernel[i] * zeta_perp).re;
                            }
                            if is_put {
                                // subtract the geometric-forward leg G = M̄(-i)
                                let (fullg, p2g) =
                                    psi.brackets(forward_node, j, &state.sig);
                                let g = (fullg + xbar).exp().re;
                                z -= g * (p2g.re + damp * state.sigma * rho);
                                zp -= g * damp * state.sigma * rho_perp;
                            }
                            rho * z + rho_perp * zp
                        }
                        HedgeStrategy::BsDelta { sigma } => {
                            let (m_mean, m_var) = asian_moments(
                                *sigma,
                                t,
                                maturity,
                                state.avg_log_s,
                                state.log_s,
                            );
                            let sqv = m_var.sqrt().max(1e-12);
                            let d2 = (m_mean - strike.ln()) / sqv;
                            let d1 = d2 + sqv;
                            let nd1 = if is_put {
                                norm_cdf(d1) - 1.0
                            } else {
                                norm_cdf(d1)
                            };
                            damp * (m_mean + 0.5 * m_var).exp() * nd1 * state.sigma
                        }
                        HedgeStrategy::SteinStein { .. } => {
                            unimplemented!("explicit oracle applies to European claims")
                        }
                    };
                    if state.sigma.abs() > 1e-8 {
                        shares[k] = alpha / (s * state.sigma);
                    } else {
                        skipped += 1;
                    }
                }
                let dw = standard_normal(&mut rng) * dt.sqrt();
                let dw_perp = standard_normal(&mut rng) * dt.sqrt();
                let db = rho * dw + rho_perp * dw_perp;
                let sigma_now = state.sigma;
                let new_log_s =
                    state.log_s - 0.5 * sigma_now * sigma_now * dt + sigma_now * db;
                let s_new = new_log_s.exp();
                for k in 0..n_strat {
                    wealth[k] += shares[k] * (s_new - s);
                }
                state.avg_log_s += 0.5 * (state.log_s + new_log_s) * dt / maturity;
                state.log_s = new_log_s;
                state.sig.extend(dt, dw);
                state.sigma = match market {
                    HedgeMarket::SigVol => state.sig.bracket_slice(&sigma_tables[j + 1]),
                    HedgeMarket::Classical(m) => {
                        classical_vol = advance_classical(
                            &m,
                            classical_vol,
                            &mut classical_aux,
                            times[j],
                            dt,
                            dw,
                        );
                        classical_vol
                    }
                };
            }
            let s_bar = state.avg_log_s.exp();
            let payoff = if is_put {
                (strike - s_bar).max(0.0)
            } else {
                (s_bar - strike).max(0.0)
            };
            let pnl: Vec<f64> = wealth.iter().map(|w| w - payoff).collect();
            (pnl, skipped)
        })
        .collect();

    let mut reports = Vec::with_capacity(n_strat);
    for (k, strat) in strategies.iter().enumerate() {
        let pnl: Vec<f64> = results.iter().map(|(p, _)| p[k]).collect();
        let sq: Vec<f64> = pnl.iter().map(|x| x * x).collect();
        let (j_hat, se_j) = crate::montecarlo::mean_se(&sq)?;
        let (mean_pnl, _) = crate::montecarlo::mean_se(&pnl)?;
        reports.push(HedgeReport {
            strategy: strat.name().into(),
            product: if is_put { "asian_put" } else { "asian_call" }.into(),
            strike,
            maturity,
            x0,
            j_hat,
            se_j,
            mean_pnl,
            n_paths: cfg.n_paths,
            steps,
            skipped_rebalances: results.iter().map(|(_, s)| s).sum(),
            pnl,
        });
    }
    Ok(reports)
}

/// Monte Carlo estimate of the quadratic-hedging value
/// `J* = E[∫ (Z² + Z⊥²) dt - ∫ (ρZ + ρ⊥Z⊥)² dt]` for a European claim
/// under the signature weights.
pub fn optimal_value_estimate(
    spec: &VolatilitySpec,
    strike: f64,
    maturity: f64,
    is_put: bool,
    cfg: &HedgeConfig,
) -> Result<(f64, f64)> {
    let ctx = EuropeanContext::new(spec, maturity, &cfg.pricing)?;
    let steps = cfg.steps;
    let dt = maturity / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    let psi = PsiTable::build(&ctx.solution, &times);
    let kernel = kernel_weights(&ctx.rule, strike);
    let rho = spec.rho();
    let rho_perp = (1.0 - rho * rho).sqrt();
    let sigma_tables: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| spec.sigma_at(t).coeffs().iter().map(|c| c.re).collect())
        .collect();
    let per_path: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = path_rng(cfg.seed, path as u64);
            let order = spec.order().max(ctx.solution.m_tilde());
            let mut state = PathState {
                sig: RealSignature::new(order),
                log_s: 0.0,
                avg_log_s: 0.0,
                sigma: 0.0,
            };
            state.sigma = state.sig.bracket_slice(&sigma_tables[0]);
            let mut acc = 0.0;
            for j in 0..steps {
                let tau = maturity - times[j];
                let s = state.log_s.exp();
                let (mut z, mut zp) = european_call_weights_sigvol(
                    &psi, &kernel, &ctx, j, tau, &state, strike, rho,
                );
                if is_put {
                    z -= s * state.sigma * rho;
                    zp -= s * state.sigma * rho_perp;
                }
                let alpha = rho * z + rho_perp * zp;
                acc += (z * z + zp * zp - alpha * alpha) * dt;
                let dw = standard_normal(&mut rng) * dt.sqrt();
                let dw_perp = standard_normal(&mut rng) * dt.sqrt();
                let db = rho * dw + rho_perp * dw_perp;
                let sigma_now = state.sigma;
                state.log_s += -0.5 * sigma_now * sigma_now * dt + sigma_now * db;
                state.sig.extend(dt, dw);
                state.sigma = state.sig.bracket_slice(&sigma_tables[j + 1]);
            }
            acc
        })
        .collect();
    crate::montecarlo::mean_se(&per_path)
}
