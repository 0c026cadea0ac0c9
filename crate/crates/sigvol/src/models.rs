//! Tensor representations of classical volatility dynamics.
//!
//! Each constructor returns the truncated coefficient element `σ` (or `ℓ`)
//! whose bracket against the signature of time-augmented Brownian motion
//! reproduces the classical process: Ornstein-Uhlenbeck, mean-reverting
//! geometric Brownian motion, the conjectured square-root (CIR)
//! representation, delayed equations, Riemann-Liouville fractional Brownian
//! motion, and analytic compositions thereof (Bergomi, Quintic). A
//! signature-regression fitter covers processes without a known exact form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{word_count, TensorElement, TimeDependentTensor, Word};
use crate::error::{Result, SigVolError};
use crate::rng::{path_rng, standard_normal};
use crate::signature::RealSignature;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Volatility dynamics of the model: `Σ_t = ⟨σ_t, 𝕎̂_t⟩`, price driven by
/// `B = ρW + sqrt(1-ρ²)W⊥`.
#[derive(Debug, Clone)]
pub struct VolatilitySpec {
    sigma: TimeDependentTensor,
    rho: f64,
    order: usize,
    label: String,
}

impl VolatilitySpec {
    pub fn new(sigma: TimeDependentTensor, rho: f64, label: impl Into<String>) -> Result<Self> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(SigVolError::InvalidParameter(format!(
                "rho must lie in [-1, 1], got {rho}"
            )));
        }
        let order = sigma.order();
        Ok(VolatilitySpec {
            sigma,
            rho,
            order,
            label: label.into(),
        })
    }

    pub fn constant(sigma: TensorElement, rho: f64, label: impl Into<String>) -> Result<Self> {
        Self::new(TimeDependentTensor::constant(sigma), rho, label)
    }

    /// Flat Black-Scholes volatility `σ = vol·ø`.
    pub fn flat(vol: f64, rho: f64, order: usize) -> Self {
        let mut t = TensorElement::zero(2, order);
        t.coeffs_mut()[0] = re(vol);
        Self::constant(t, rho, format!("flat({vol})")).expect("rho in range")
    }

    pub fn sigma(&self) -> &TimeDependentTensor {
        &self.sigma
    }

    pub fn sigma_at(&self, t: f64) -> &TensorElement {
        self.sigma.at(t)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }
}

/// Ornstein-Uhlenbeck parameters: `dX = κ(θ - X)dt + η dW`, `X_0 = x`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OuParams {
    pub x: f64,
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
}

/// Time-independent representation `(x·ø + κθ·1 + η·2) ⊗ e^⧢(-κ·1)`.
pub fn ou_rep(p: &OuParams, order: usize) -> TensorElement {
    let prefix = TensorElement::from_terms(
        2,
        1,
        &[("e", p.x), ("1", p.kappa * p.theta), ("2", p.eta)],
    )
    .expect("static words");
    let decay = TensorElement::from_terms(2, 1, &[("1", -p.kappa)])
        .expect("static words")
        .shuffle_exp(order)
        .expect("zero scalar term");
    prefix.concat(&decay, order).expect("same alphabet")
}

/// Time-dependent representation
/// `θ·ø + e^{-κt}((x - θ)·ø + η·e^⧢(κ·1) ⊗ 2)`.
pub fn ou_rep_time_dep(t: f64, p: &OuParams, order: usize) -> TensorElement {
    let grow = TensorElement::from_terms(2, 1, &[("1", p.kappa)])
        .expect("static words")
        .shuffle_exp(order.saturating_sub(1))
        .expect("zero scalar term");
    let noise = if order == 0 {
        TensorElement::zero(2, 0)
    } else {
        grow.concat_word(&Word::letter(2))
    };
    let mut inner = TensorElement::zero(2, order);
    inner.coeffs_mut()[0] = re(p.x - p.theta);
    let inner = inner.add(&noise.scale_real(p.eta)).expect("same alphabet");
    let mut out = inner.scale_real((-p.kappa * t).exp());
    out.coeffs_mut()[0] += re(p.theta);
    out
}

/// Mean-reverting geometric Brownian motion:
/// `dY = κ(θ - Y)dt + (η + αY)dW`, `Y_0 = y`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MgbmParams {
    pub y: f64,
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
    pub alpha: f64,
    /// Decay rate of the time-dependent form; defaults to `κ + α²/2`.
    pub lambda: Option<f64>,
}

impl MgbmParams {
    pub fn lambda(&self) -> f64 {
        self.lambda
            .unwrap_or(self.kappa + 0.5 * self.alpha * self.alpha)
    }
}

/// `(y·ø + (κθ - αη/2)·1 + η·2) ⊗ e^⧢(-(κ + α²/2)·1 + α·2)`.
pub fn mgbm_rep(p: &MgbmParams, order: usize) -> TensorElement {
    let mu = -(p.kappa + 0.5 * p.alpha * p.alpha);
    let prefix = TensorElement::from_terms(
        2,
        1,
        &[
            ("e", p.y),
            ("1", p.kappa * p.theta - 0.5 * p.alpha * p.eta),
            ("2", p.eta),
        ],
    )
    .expect("static words");
    let exp = TensorElement::from_terms(2, 1, &[("1", mu), ("2", p.alpha)])
        .expect("static words")
        .shuffle_exp(order)
        .expect("zero scalar term");
    prefix.concat(&exp, order).expect("same alphabet")
}

/// `θ·ø + e^{-λt}((ℓ^mGBM - θ·ø) ⧢ e^⧢(λ·1))`.
pub fn mgbm_rep_time_dep(t: f64, p: &MgbmParams, order: usize) -> TensorElement {
    let lambda = p.lambda();
    let mut centered = mgbm_rep(p, order);
    centered.coeffs_mut()[0] -= re(p.theta);
    let grow = TensorElement::from_terms(2, 1, &[("1", lambda)])
        .expect("static words")
        .shuffle_exp(order)
        .expect("zero scalar term");
    let mut out = centered
        .shuffle(&grow, order)
        .expect("same alphabet")
        .scale_real((-lambda * t).exp());
    out.coeffs_mut()[0] += re(p.theta);
    out
}

/// Square-root (CIR) parameters: `dV = κ(θ - V)dt + η sqrt(V) dW`, `V_0 = v > 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CirParams {
    pub v: f64,
    pub kappa: f64,
    pub theta: f64,
    pub eta: f64,
}

/// Conjectured square-root representation.
///
/// Returns `(σ, ℓ)` where `σ` solves the graded algebraic identity
///
/// ```text
/// σ^⧢2 = v·ø + ((κθ - η²/4)·ø - κ σ^⧢2)·1 + η·σ·2
/// ```
///
/// and `ℓ = σ^⧢2` so that `⟨ℓ, 𝕎̂⟩ = ⟨σ, 𝕎̂⟩²` up to truncation. Levels of
/// `σ` are read off one at a time: the right-hand side raises the level by
/// one, so the system is triangular and each new coefficient divides by
/// `2σ^ø = 2 sqrt(v)`.
pub fn cir_rep(p: &CirParams, order: usize) -> Result<(TensorElement, TensorElement)> {
    if p.v <= 0.0 {
        return Err(SigVolError::InvalidParameter(format!(
            "CIR requires v > 0, got {}",
            p.v
        )));
    }
    let sqrt_v = p.v.sqrt();
    let drift0 = p.kappa * p.theta - 0.25 * p.eta * p.eta;
    let mut sigma = TensorElement::zero(2, order);
    sigma.coeffs_mut()[0] = re(sqrt_v);
    for level in 1..=order {
        // shuffle square of the levels known so far; at `level` it contains
        // exactly the cross terms (the still-zero σ coefficients contribute
        // nothing)
        let partial_sq = sigma.shuffle(&sigma, level).expect("same alphabet");
        let lo = word_count(2, level - 1);
        let hi = word_count(2, level);
        for w_idx in lo..hi {
            let w = Word::from_index(2, w_idx);
            let letters = w.letters();
            let prefix = Word::new(&letters[..letters.len() - 1]);
            let last = letters[letters.len() - 1];
            let rhs = if last == 1 {
                // ((κθ - η²/4)·ø - κ σ^⧢2) ⊗ 1
                let sq_prefix = if prefix.is_empty() {
                    re(p.v)
                } else {
                    sigma
                        .shuffle(&sigma, level - 1)
                        .expect("same alphabet")
                        .coeff(&prefix)
                };
                (if prefix.is_empty() { re(drift0) } else { Complex64::ZERO })
                    - sq_prefix * p.kappa
            } else {
                sigma.coeff(&prefix) * p.eta
            };
            let val = (rhs - partial_sq.coeff(&w)) / (2.0 * sqrt_v);
            sigma.set_coeff(&w, val);
        }
    }
    let ell = sigma.shuffle_pow(2, order).expect("same alphabet");
    Ok((sigma, ell))
}

/// Delayed-equation parameters:
/// `dU = (a₁ + b₁U + c₁∫e^{λ₁(t-s)}U_s ds)dt + (a₂ + c₂∫e^{λ₂(t-s)}U_s ds)dW`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DelayedParams {
    pub u: f64,
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub lambda1: f64,
    pub a2: f64,
    pub c2: f64,
    pub lambda2: f64,
}

/// `(u·ø + a₁·1 + a₂·2) ⊗ resolvent(b₁·1 + 1⊗(c₁e^⧢(λ₁1)⊗1 + c₂e^⧢(λ₂1)⊗2))`.
pub fn delayed_rep(p: &DelayedParams, order: usize) -> TensorElement {
    let prefix =
        TensorElement::from_terms(2, 1, &[("e", p.u), ("1", p.a1), ("2", p.a2)]).expect("static");
    let sub = order.saturating_sub(1);
    let e1 = TensorElement::from_terms(2, 1, &[("1", p.lambda1)])
        .expect("static")
        .shuffle_exp(sub.saturating_sub(1))
        .expect("zero scalar");
    let e2 = TensorElement::from_terms(2, 1, &[("1", p.lambda2)])
        .expect("static")
        .shuffle_exp(sub.saturating_sub(1))
        .expect("zero scalar");
    let inner = e1
        .concat_word(&Word::letter(1))
        .scale_real(p.c1)
        .add(&e2.concat_word(&Word::letter(2)).scale_real(p.c2))
        .expect("same alphabet");
    let one = TensorElement::from_terms(2, 1, &[("1", 1.0)]).expect("static");
    let q = TensorElement::from_terms(2, 1, &[("1", p.b1)])
        .expect("static")
        .add(&one.concat(&inner, order).expect("same alphabet"))
        .expect("same alphabet");
    let r = q.resolvent(order).expect("zero scalar");
    prefix.concat(&r, order).expect("same alphabet")
}

/// Time-dependent Riemann-Liouville fractional Brownian motion coefficients:
/// `t^{H-1/2} Σ_{n=0}^{M-1} t^{-n} (H-1/2)^{falling n} 1^{⊗n} ⊗ 2`.
///
/// `t` is clamped below at 1e-8 to avoid the singularity at zero.
pub fn rl_fbm_rep(t: f64, h: f64, order: usize) -> Result<TensorElement> {
    if !(0.0..1.0).contains(&h) || h <= 0.0 {
        return Err(SigVolError::InvalidParameter(format!(
            "RL-fBM requires H in (0,1), got {h}"
        )));
    }
    if t <= 0.0 {
        return Err(SigVolError::InvalidParameter(format!(
            "RL-fBM representation needs t > 0, got {t}"
        )));
    }
    let t = t.max(1e-8);
    let mut out = TensorElement::zero(2, order);
    let mut falling = 1.0; // (H - 1/2)^{falling n}
    let mut t_pow = t.powf(h - 0.5);
    for n in 0..order {
        // word 1^n ⊗ 2
        let mut letters = vec![1u8; n];
        letters.push(2);
        let w = Word::new(letters);
        out.set_coeff(&w, re(t_pow * falling));
        falling *= h - 0.5 - n as f64;
        t_pow /= t;
    }
    Ok(out)
}

/// `Σ_k α_k · base^⧢k` truncated at `order` (time-independent composition).
pub fn analytic_composition(
    base: &TensorElement,
    alphas: &[f64],
    order: usize,
) -> Result<TensorElement> {
    let mut acc = TensorElement::zero(base.alphabet_size(), order);
    let mut power = TensorElement::unit(base.alphabet_size(), order);
    for (k, &a) in alphas.iter().enumerate() {
        if k > 0 {
            power = power.shuffle(base, order)?;
            if power.max_abs() == 0.0 && base.scalar().norm() == 0.0 {
                break;
            }
        }
        if a != 0.0 {
            acc = acc.add(&power.scale_real(a))?;
        }
    }
    Ok(acc)
}

/// Time grid of compositions `Σ_k α_k(t) · base^⧢k`.
pub fn analytic_composition_time_dep(
    base: &TensorElement,
    grid: &[f64],
    alpha: impl Fn(f64) -> Vec<f64>,
    order: usize,
) -> Result<TimeDependentTensor> {
    let values = grid
        .iter()
        .map(|&t| analytic_composition(base, &alpha(t), order))
        .collect::<Result<Vec<_>>>()?;
    TimeDependentTensor::new(grid.to_vec(), values)
}

/// Bergomi volatility `σ_t = ξ₀(t)·e^⧢(η·2)` on the given grid.
pub fn bergomi_rep(
    xi0: impl Fn(f64) -> f64,
    eta: f64,
    grid: &[f64],
    order: usize,
) -> Result<TimeDependentTensor> {
    let e = TensorElement::from_terms(2, 1, &[("2", eta)])?.shuffle_exp(order)?;
    let values = grid.iter().map(|&t| e.scale_real(xi0(t))).collect();
    TimeDependentTensor::new(grid.to_vec(), values)
}

/// Quintic volatility `σ = α₀·ø + α₁·2 + α₂·22 + ... + α₅·22222`, i.e.
/// coefficients placed directly on the pure letter-2 words so that
/// `⟨σ, 𝕎̂⟩ = Σ_k α_k W^k / k!`.
pub fn quintic_rep(alphas: [f64; 6], order: usize) -> Result<TensorElement> {
    let mut out = TensorElement::zero(2, order);
    for (k, &a) in alphas.iter().enumerate() {
        if a != 0.0 {
            if k > order {
                return Err(SigVolError::InvalidParameter(format!(
                    "quintic coefficient alpha_{k} needs order >= {k}"
                )));
            }
            out.set_coeff(&Word::new(vec![2u8; k]), re(a));
        }
    }
    Ok(out)
}

/// Elastic-net regression of a path functional on truncated signature
/// features (per-path mean squared error plus L1/L2 penalties).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionConfig {
    /// Number of time points per path.
    pub grid_points: usize,
    /// Number of Brownian paths.
    pub n_paths: usize,
    /// Truncation order of the fitted element.
    pub order: usize,
    /// Training horizon in years.
    pub horizon: f64,
    /// L1 penalty.
    pub beta1: f64,
    /// L2 penalty.
    pub beta2: f64,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            grid_points: 252,
            n_paths: 1000,
            order: 4,
            horizon: 1.0,
            beta1: 1e-6,
            beta2: 1e-8,
            seed: 0,
        }
    }
}

/// A target process evaluated along a Brownian path: given the time grid and
/// the W values, return the process values on the same grid.
pub type PathTarget<'a> = &'a (dyn Fn(&[f64], &[f64]) -> Vec<f64> + Sync);

/// Fit signature coefficients to a path functional by penalized least
/// squares.
///
/// Features are standardized (zero mean, unit variance over the sample,
/// constant ø column treated as the intercept) so the penalties act evenly
/// across words. The normal equations are accumulated once; a ridge solve
/// provides the starting point and coordinate descent handles the L1 part
/// (soft-thresholding), up to 10^4 sweeps or a 1e-8 sup-norm change.
pub fn fit_regression(target: PathTarget, cfg: &RegressionConfig) -> Result<TensorElement> {
    if cfg.n_paths == 0 || cfg.grid_points == 0 {
        return Err(SigVolError::InvalidParameter(
            "regression needs n_paths >= 1 and grid_points >= 1".into(),
        ));
    }
    let p = word_count(2, cfg.order);
    let dt = cfg.horizon / cfg.grid_points as f64;
    let mut gram = vec![0.0f64; p * p];
    let mut xty = vec![0.0f64; p];
    let mut feat_sum = vec![0.0f64; p];
    let mut y_sum = 0.0f64;
    let mut n_samples = 0usize;

    let mut times = Vec::with_capacity(cfg.grid_points + 1);
    for j in 0..=cfg.grid_points {
        times.push(j as f64 * dt);
    }

    for path in 0..cfg.n_paths {
        let mut rng = path_rng(cfg.seed, path as u64);
        let mut w = Vec::with_capacity(cfg.grid_points + 1);
        w.push(0.0);
        for _ in 0..cfg.grid_points {
            let dw = standard_normal(&mut rng) * dt.sqrt();
            w.push(w.last().unwrap() + dw);
        }
        let x = target(&times, &w);
        let mut sig = RealSignature::new(cfg.order);
        for j in 1..=cfg.grid_points {
            sig.extend(dt, w[j] - w[j - 1]);
            let feats = sig.coeffs();
            let y = x[j];
            y_sum += y;
            for a in 0..p {
                let fa = feats[a];
                feat_sum[a] += fa;
                xty[a] += fa * y;
                let row = a * p;
                for b in a..p {
                    gram[row + b] += fa * feats[b];
                }
            }
            n_samples += 1;
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
    }

    let inv_n = 1.0 / n_samples as f64;
    let y_mean = y_sum * inv_n;
    let mu: Vec<f64> = feat_sum.iter().map(|s| s * inv_n).collect();
    // population std per column; the constant ø column gets s = 0 and is
    // excluded from the penalized solve (it becomes the intercept)
    let scale: Vec<f64> = (0..p)
        .map(|a| (gram[a * p + a] * inv_n - mu[a] * mu[a]).max(0.0).sqrt())
        .collect();
    let active: Vec<usize> = (0..p).filter(|&a| scale[a] > 1e-12).collect();
    let q = active.len();

    // standardized Gram and cross moments:
    // G̃_ab = (G_ab/n - μ_a μ_b)/(s_a s_b), r̃_a = (Xᵗy/n - μ_a ȳ)/s_a
    let mut g_std = vec![0.0f64; q * q];
    let mut r_std = vec![0.0f64; q];
    for (ia, &a) in active.iter().enumerate() {
        r_std[ia] = (xty[a] * inv_n - mu[a] * y_mean) / scale[a];
        for (ib, &b) in active.iter().enumerate() {
            g_std[ia * q + ib] =
                (gram[a * p + b] * inv_n - mu[a] * mu[b]) / (scale[a] * scale[b]);
        }
    }

    // ridge warm start: (G̃ + β₂ I) c = r̃
    let mut a_mat = g_std.clone();
    for i in 0..q {
        a_mat[i * q + i] += cfg.beta2.max(1e-10);
    }
    let mut c = solve_spd(&a_mat, &r_std, q)?;

    // coordinate descent on ‖ỹ - Φ̃c‖²/n + β₁‖c‖₁ + β₂‖c‖²
    let max_sweeps = 10_000;
    let tol = 1e-8;
    for _ in 0..max_sweeps {
        let mut max_change = 0.0f64;
        for k in 0..q {
            let gkk = g_std[k * q + k];
            if gkk <= 0.0 {
                continue;
            }
            let mut r = r_std[k];
            for j in 0..q {
                if j != k {
                    r -= g_std[k * q + j] * c[j];
                }
            }
            let new = soft_threshold(2.0 * r, cfg.beta1) / (2.0 * gkk + 2.0 * cfg.beta2);
            let change = (new - c[k]).abs();
            if change > max_change {
                max_change = change;
            }
            c[k] = new;
        }
        if max_change < tol {
            break;
        }
    }

    // unstandardize: f_a = c_a / s_a, intercept soaks up the means
    let mut f = vec![0.0f64; p];
    let mut intercept = y_mean;
    for (ia, &a) in active.iter().enumerate() {
        f[a] = c[ia] / scale[a];
        intercept -= c[ia] * mu[a] / scale[a];
    }
    f[0] += intercept;

    let mut out = TensorElement::zero(2, cfg.order);
    for (dst, &src) in out.coeffs_mut().iter_mut().zip(&f) {
        *dst = re(src);
    }
    Ok(out)
}

fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// Cholesky solve for a symmetric positive-definite system.
fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(SigVolError::InvalidParameter(
                        "singular design matrix: add L2 regularization or more paths".into(),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

/// Monte Carlo estimate of the leverage sign condition
/// `⟨σ_t proj 2, 𝕎̂_t⟩ >= 0` along simulated paths.
#[derive(Debug, Clone, Serialize)]
pub struct LeverageReport {
    pub min_value: f64,
    pub violation_fraction: f64,
    pub samples: usize,
}

pub fn leverage_diagnostic(
    spec: &VolatilitySpec,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> LeverageReport {
    let order = spec.order();
    let two = Word::letter(2);
    // precompute σ_t proj 2 on the requested grid (piecewise-constant σ)
    let projected: Vec<TensorElement> = t_grid
        .iter()
        .map(|&t| spec.sigma_at(t).project(&two).resized(order))
        .collect();
    let mut min_value = f64::INFINITY;
    let mut violations = 0usize;
    let mut samples = 0usize;
    for path in 0..n_paths {
        let mut rng = path_rng(seed, path as u64);
        let mut sig = RealSignature::new(order);
        let mut prev_t = 0.0;
        for (j, &t) in t_grid.iter().enumerate() {
            let dt = t - prev_t;
            if dt > 0.0 {
                sig.extend(dt, standard_normal(&mut rng) * dt.sqrt());
            }
            prev_t = t;
            let v = sig.bracket(&projected[j]).re;
            min_value = min_value.min(v);
            if v < 0.0 {
                violations += 1;
            }
            samples += 1;
        }
    }
    LeverageReport {
        min_value,
        violation_fraction: violations as f64 / samples.max(1) as f64,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coeff(t: &TensorElement, w: &str) -> f64 {
        t.coeff(&Word::parse(w).unwrap()).re
    }

    #[test]
    fn ou_order_two_matrix() {
        let p = OuParams {
            x: 0.3,
            kappa: 1.5,
            theta: 0.25,
            eta: 1.1,
        };
        let l = ou_rep(&p, 2);
        assert_abs_diff_eq!(coeff(&l, "e"), p.x, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "1"), -p.kappa * (p.x - p.theta), epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "2"), p.eta, epsilon = 1e-14);
        assert_abs_diff_eq!(
            coeff(&l, "11"),
            p.kappa * p.kappa * (p.x - p.theta),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(coeff(&l, "21"), -p.kappa * p.eta, epsilon = 1e-14);
        assert_eq!(coeff(&l, "12"), 0.0);
        assert_eq!(coeff(&l, "22"), 0.0);
    }

    #[test]
    fn ou_kappa_zero_is_affine() {
        let p = OuParams {
            x: 0.2,
            kappa: 0.0,
            theta: 0.7,
            eta: 0.5,
        };
        let l = ou_rep(&p, 4);
        let expected =
            TensorElement::from_terms(2, 4, &[("e", p.x), ("2", p.eta)]).unwrap();
        assert_eq!(l, expected);
        // time-dependent variant is time-independent for κ = 0
        let a = ou_rep_time_dep(0.0, &p, 4);
        let b = ou_rep_time_dep(2.5, &p, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn ou_time_dep_re_expansion_matches_time_indep() {
        // θø + e^⧢(-κ1) ⧢ ((x-θ)ø + η e^⧢(κ1)⊗2) equals the
        // time-independent element exactly (the e^{-κt} prefactor re-expanded
        // into the algebra via the shuffle property)
        let p = OuParams {
            x: 0.4,
            kappa: 2.0,
            theta: 0.25,
            eta: 1.2,
        };
        let order = 5;
        let l = ou_rep(&p, order);
        let decay = TensorElement::from_terms(2, 1, &[("1", -p.kappa)])
            .unwrap()
            .shuffle_exp(order)
            .unwrap();
        let grow = TensorElement::from_terms(2, 1, &[("1", p.kappa)])
            .unwrap()
            .shuffle_exp(order - 1)
            .unwrap();
        let mut inner = grow.concat_word(&Word::letter(2)).scale_real(p.eta).resized(order);
        inner.coeffs_mut()[0] += re(p.x - p.theta);
        let mut rec = decay.shuffle(&inner, order).unwrap();
        rec.coeffs_mut()[0] += re(p.theta);
        for (a, b) in rec.coeffs().iter().zip(l.coeffs()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn mgbm_order_two_matrix() {
        let p = MgbmParams {
            y: 0.3,
            kappa: 1.0,
            theta: 0.25,
            eta: 0.5,
            alpha: 1.6,
            lambda: None,
        };
        let l = mgbm_rep(&p, 2);
        let mu = -(p.kappa + 0.5 * p.alpha * p.alpha);
        let beta = mu * p.y + (p.kappa * p.theta - 0.5 * p.alpha * p.eta);
        let gamma = p.alpha * p.y + p.eta;
        assert_abs_diff_eq!(coeff(&l, "e"), p.y, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "1"), beta, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "2"), gamma, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "11"), beta * mu, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "12"), beta * p.alpha, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "21"), gamma * mu, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "22"), gamma * p.alpha, epsilon = 1e-14);
    }

    #[test]
    fn mgbm_degenerates_to_ou() {
        let p = MgbmParams {
            y: 0.3,
            kappa: 1.4,
            theta: 0.2,
            eta: 0.8,
            alpha: 0.0,
            lambda: None,
        };
        let ou = ou_rep(
            &OuParams {
                x: p.y,
                kappa: p.kappa,
                theta: p.theta,
                eta: p.eta,
            },
            4,
        );
        let m = mgbm_rep(&p, 4);
        for (a, b) in m.coeffs().iter().zip(ou.coeffs()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
        }
    }

    #[test]
    fn cir_order_three_matrix() {
        let p = CirParams {
            v: 0.16,
            kappa: 1.3,
            theta: 0.25,
            eta: 0.7,
        };
        let (sigma, ell) = cir_rep(&p, 3).unwrap();
        let mu = -p.kappa;
        let beta = mu * p.v + (p.kappa * p.theta - 0.25 * p.eta * p.eta);
        let gamma = p.eta * p.v.sqrt();
        let alpha = p.eta / (2.0 * p.v.sqrt());
        assert_abs_diff_eq!(coeff(&ell, "e"), p.v, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "1"), beta, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "2"), gamma, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "11"), beta * mu, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "12"), beta * alpha, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "21"), gamma * mu, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "22"), gamma * alpha, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "111"), beta * mu * mu, epsilon = 1e-13);
        assert_abs_diff_eq!(
            coeff(&ell, "112"),
            beta * (mu - beta / (2.0 * p.v)) * alpha,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            coeff(&ell, "212"),
            gamma * (mu - beta / (2.0 * p.v)) * alpha,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(coeff(&ell, "121"), beta * mu * alpha, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "221"), gamma * mu * alpha, epsilon = 1e-13);
        assert_abs_diff_eq!(coeff(&ell, "122"), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coeff(&ell, "222"), 0.0, epsilon = 1e-15);
        // defining identity holds coefficient-wise
        let sq = sigma.shuffle_pow(2, 3).unwrap();
        for (a, b) in sq.coeffs().iter().zip(ell.coeffs()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
        }
        assert!(cir_rep(
            &CirParams {
                v: 0.0,
                ..p
            },
            2
        )
        .is_err());
    }

    #[test]
    fn cir_defining_identity_high_order() {
        let p = CirParams {
            v: 0.0625,
            kappa: 2.0,
            theta: 0.0625,
            eta: 0.7,
        };
        let order = 6;
        let (sigma, ell) = cir_rep(&p, order).unwrap();
        // σ^⧢2 = v·ø + ((κθ - η²/4)·ø - κσ^⧢2)·1 + η·σ·2 at every level
        let sq = sigma.shuffle_pow(2, order).unwrap();
        let one = Word::letter(1);
        let two = Word::letter(2);
        let mut rhs = TensorElement::from_terms(2, 0, &[("e", p.v)]).unwrap().resized(order);
        let mut drift = sq.scale_real(-p.kappa).resized(order - 1);
        drift.coeffs_mut()[0] += re(p.kappa * p.theta - 0.25 * p.eta * p.eta);
        rhs = rhs.add(&drift.concat_word(&one).resized(order)).unwrap();
        rhs = rhs
            .add(&sigma.resized(order - 1).concat_word(&two).scale_real(p.eta).resized(order))
            .unwrap();
        for (a, b) in sq.coeffs().iter().zip(rhs.coeffs()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
        }
        let _ = ell;
    }

    #[test]
    fn cir_deterministic_degeneration() {
        // η = 0: no letter-2 mass and the bracket solves v' = κ(θ - v)
        let p = CirParams {
            v: 0.16,
            kappa: 1.5,
            theta: 0.3,
            eta: 0.0,
        };
        let (_, ell) = cir_rep(&p, 8).unwrap();
        for (i, c) in ell.coeffs().iter().enumerate() {
            let w = Word::from_index(2, i);
            if w.letters().contains(&2) {
                assert!(c.re.abs() < 1e-14, "letter-2 word {w} should vanish");
            }
        }
        for t in [0.1, 0.3, 0.6] {
            let sig = crate::signature::segment_signature(t, 0.0, 8);
            let got = ell.bracket(&sig).re;
            let exact = p.theta + (p.v - p.theta) * (-p.kappa * t).exp();
            assert_abs_diff_eq!(got, exact, epsilon = 1e-6);
        }
    }

    #[test]
    fn delayed_order_two_matrix() {
        let p = DelayedParams {
            u: 0.25,
            a1: 1.0,
            b1: 1.0,
            c1: -2.0,
            lambda1: 1.0,
            a2: -0.5,
            c2: -2.0,
            lambda2: 1.5,
        };
        let l = delayed_rep(&p, 2);
        assert_abs_diff_eq!(coeff(&l, "e"), p.u, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "1"), p.a1 + p.b1 * p.u, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "2"), p.a2, epsilon = 1e-14);
        assert_abs_diff_eq!(
            coeff(&l, "11"),
            p.c1 * p.u + p.b1 * (p.a1 + p.b1 * p.u),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(coeff(&l, "12"), p.c2 * p.u, epsilon = 1e-14);
        assert_abs_diff_eq!(coeff(&l, "21"), p.a2 * p.b1, epsilon = 1e-14);
        assert_eq!(coeff(&l, "22"), 0.0);
    }

    #[test]
    fn delayed_degenerates_to_drift_diffusion() {
        let p = DelayedParams {
            u: 0.3,
            a1: 0.7,
            b1: 0.0,
            c1: 0.0,
            lambda1: 0.0,
            a2: -0.2,
            c2: 0.0,
            lambda2: 0.0,
        };
        let l = delayed_rep(&p, 3);
        let expected =
            TensorElement::from_terms(2, 3, &[("e", p.u), ("1", p.a1), ("2", p.a2)]).unwrap();
        assert_eq!(l, expected);
    }

    #[test]
    fn rl_fbm_examples() {
        // H = 1/2 collapses to the single letter 2
        let l = rl_fbm_rep(0.7, 0.5, 5).unwrap();
        let expected = TensorElement::from_terms(2, 5, &[("2", 1.0)]).unwrap();
        assert_eq!(l, expected);

        // n = 1 coefficient at word 12 is t^{H-3/2}(H - 1/2)
        let (t, h) = (0.5, 0.3);
        let l = rl_fbm_rep(t, h, 4).unwrap();
        assert_abs_diff_eq!(
            coeff(&l, "12"),
            t.powf(h - 1.5) * (h - 0.5),
            epsilon = 1e-12
        );
        assert!(rl_fbm_rep(0.0, 0.3, 3).is_err());
        assert!(rl_fbm_rep(0.5, 1.3, 3).is_err());
    }

    #[test]
    fn composition_identity_and_quintic() {
        let p = OuParams {
            x: 0.3,
            kappa: 1.0,
            theta: 0.25,
            eta: 1.2,
        };
        let base = ou_rep(&p, 3);
        let id = analytic_composition(&base, &[0.0, 1.0], 3).unwrap();
        assert_eq!(id, base);

        // quintic: ⟨σ proj 2, sig⟩ = α₁ + α₃ W²/2 + α₅ W⁴/4!
        let alphas = [0.1, 0.3, 0.0, 0.2, 0.0, 0.05];
        let q = quintic_rep(alphas, 5).unwrap();
        let p2 = q.project(&Word::letter(2));
        for steps in [1usize, 3] {
            for wv in [-1.5f64, 0.0, 0.8] {
                // W-only polyline reaching wv; the bracket depends on W_t only
                let mut sig = RealSignature::new(4);
                for _ in 0..steps {
                    sig.extend(1.0 / steps as f64, wv / steps as f64);
                }
                let got = sig.bracket(&p2).re;
                let expect =
                    alphas[1] + alphas[3] * wv * wv / 2.0 + alphas[5] * wv.powi(4) / 24.0;
                assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bergomi_projection_identity() {
        // σ_t proj 2 = η·σ_t
        let eta = 0.9;
        let grid = [0.0, 0.5, 1.0];
        let xi = |t: f64| 0.04 + 0.01 * t;
        let b = bergomi_rep(xi, eta, &grid, 4).unwrap();
        for v in b.values() {
            // projection drops the top level, so compare through order 3
            let p2 = v.project(&Word::letter(2));
            let scaled = v.scale_real(eta);
            for (a, b) in p2.coeffs().iter().zip(scaled.coeffs()) {
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn regression_recovers_constant_and_in_span_target() {
        // constant target with no penalty fits c·ø
        let c_target = 0.37;
        let cfg = RegressionConfig {
            grid_points: 16,
            n_paths: 40,
            order: 2,
            horizon: 0.5,
            beta1: 0.0,
            beta2: 0.0,
            seed: 7,
        };
        let target = move |ts: &[f64], _w: &[f64]| vec![c_target; ts.len()];
        let f = fit_regression(&target, &cfg).unwrap();
        assert_abs_diff_eq!(f.scalar().re, c_target, epsilon = 1e-6);
        for c in &f.coeffs()[1..] {
            assert!(c.re.abs() < 1e-6);
        }

        // a known linear functional is recovered exactly
        let l_star =
            TensorElement::from_terms(2, 2, &[("e", 0.25), ("1", -0.4), ("22", 0.6), ("2", 1.1)])
                .unwrap();
        let l_probe = l_star.clone();
        let target = move |ts: &[f64], w: &[f64]| {
            let mut sig = RealSignature::new(2);
            let mut out = vec![l_probe.scalar().re];
            for j in 1..ts.len() {
                sig.extend(ts[j] - ts[j - 1], w[j] - w[j - 1]);
                out.push(sig.bracket(&l_probe).re);
            }
            out
        };
        let cfg = RegressionConfig {
            grid_points: 24,
            n_paths: 60,
            order: 2,
            horizon: 1.0,
            beta1: 0.0,
            beta2: 0.0,
            seed: 11,
        };
        let f = fit_regression(&target, &cfg).unwrap();
        for (a, b) in f.coeffs().iter().zip(l_star.coeffs()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-6);
        }
    }

    #[test]
    fn leverage_diagnostic_examples() {
        // Stein-Stein: σ proj 2 = η·ø, never negative
        let p = OuParams {
            x: 0.25,
            kappa: 1.0,
            theta: 0.25,
            eta: 1.2,
        };
        let spec = VolatilitySpec::constant(ou_rep(&p, 4), -0.5, "ss").unwrap();
        let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 0.05).collect();
        let rep = leverage_diagnostic(&spec, &grid, 200, 3);
        assert_eq!(rep.violation_fraction, 0.0);
        assert_abs_diff_eq!(rep.min_value, p.eta, epsilon = 1e-10);

        // quintic with non-negative coefficients: no violations
        let q = quintic_rep([0.1, 0.3, 0.0, 0.2, 0.0, 0.05], 5).unwrap();
        let spec = VolatilitySpec::constant(q, -0.5, "quintic").unwrap();
        let rep = leverage_diagnostic(&spec, &grid, 200, 3);
        assert_eq!(rep.violation_fraction, 0.0);
        assert!(rep.min_value >= 0.0);
    }

    #[test]
    fn rho_bounds_enforced() {
        let t = TensorElement::unit(2, 1);
        assert!(VolatilitySpec::constant(t.clone(), 1.5, "bad").is_err());
        assert!(VolatilitySpec::constant(t, -0.5, "ok").is_ok());
    }
}
