//! Gaussian quadrature rules via Golub-Welsch.
//!
//! Nodes are the eigenvalues of the Jacobi matrix of the orthogonal
//! polynomial recurrence; weights come from the first components of the
//! eigenvectors. The symmetric tridiagonal eigenproblem is solved with the
//! implicit QL algorithm.

use crate::error::{Result, SigVolError};

/// A positive-axis quadrature rule: `∫ f ≈ Σ w_i f(u_i)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix,
/// accumulating the first row of the eigenvector matrix.
///
/// `diag` has length n, `off` length n-1. Returns (eigenvalues, first rows).
fn tridiag_eigen_first_row(diag: &mut [f64], off: &mut Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    off.push(0.0);
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(SigVolError::InvalidParameter(
                    "tridiagonal eigensolver failed to converge".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                // rotate the tracked eigenvector row
                f = first[i + 1];
                first[i + 1] = s * first[i] + c * f;
                first[i] = c * first[i] - s * f;
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap());
    let eig: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
    let row: Vec<f64> = idx.iter().map(|&i| first[i]).collect();
    Ok((eig, row))
}

fn golub_welsch(mut alpha: Vec<f64>, beta: Vec<f64>, mu0: f64) -> Result<QuadratureRule> {
    let mut off: Vec<f64> = beta.iter().map(|b| b.sqrt()).collect();
    let (nodes, row) = tridiag_eigen_first_row(&mut alpha, &mut off)?;
    let weights = row.iter().map(|v| mu0 * v * v).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Gauss-Laguerre rule for `∫_0^∞ f(u) du` with the `e^{+u}` unweighting
/// folded into the weights: `Σ w_i f(u_i)` integrates plain functions.
pub fn gauss_laguerre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(SigVolError::InvalidParameter("need n >= 1 nodes".into()));
    }
    // recurrence for Laguerre: alpha_k = 2k + 1, beta_k = k^2
    let alpha: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let beta: Vec<f64> = (1..n).map(|k| (k * k) as f64).collect();
    let mut rule = golub_welsch(alpha, beta, 1.0)?;
    for (w, &u) in rule.weights.iter_mut().zip(&rule.nodes) {
        *w *= u.exp();
    }
    Ok(rule)
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `x^gamma` (gamma > -1):
/// `∫_0^1 x^gamma f(x) dx ≈ Σ w_i f(x_i)` with the weight folded in.
pub fn gauss_jacobi01(n: usize, gamma: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(SigVolError::InvalidParameter("need n >= 1 nodes".into()));
    }
    if gamma <= -1.0 {
        return Err(SigVolError::InvalidParameter(format!(
            "Jacobi exponent must exceed -1, got {gamma}"
        )));
    }
    // Jacobi weight (1-x)^a (1+x)^b on [-1,1] with a = 0, b = gamma; the map
    // x -> (1+x)/2 sends it to t^gamma on [0,1] up to a constant.
    let (a, b) = (0.0f64, gamma);
    let ab = a + b;
    let mut alpha = vec![0.0f64; n];
    let mut beta = vec![0.0f64; n.saturating_sub(1)];
    alpha[0] = (b - a) / (ab + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let denom = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        alpha[k] = (b * b - a * a) / denom;
        let num = if k == 1 {
            4.0 * (1.0 + a) * (1.0 + b) / ((ab + 3.0) * (ab + 2.0) * (ab + 2.0))
        } else {
            4.0 * kf * (kf + a) * (kf + b) * (kf + ab)
                / ((2.0 * kf + ab - 1.0) * (2.0 * kf + ab).powi(2) * (2.0 * kf + ab + 1.0))
        };
        beta[k - 1] = num;
    }
    // mu0 = ∫_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
    let mu0 = 2f64.powf(ab + 1.0) * beta_fn(a + 1.0, b + 1.0);
    let mut rule = golub_welsch(alpha, beta, mu0)?;
    for x in rule.nodes.iter_mut() {
        *x = 0.5 * (*x + 1.0);
    }
    // dt = dx/2 and t^gamma = ((1+x)/2)^gamma soak up 2^{-gamma-1}
    let scale = 2f64.powf(-gamma - 1.0);
    for w in rule.weights.iter_mut() {
        *w *= scale;
    }
    Ok(rule)
}

fn beta_fn(a: f64, b: f64) -> f64 {
    (statrs::function::gamma::ln_gamma(a) + statrs::function::gamma::ln_gamma(b)
        - statrs::function::gamma::ln_gamma(a + b))
    .exp()
}
