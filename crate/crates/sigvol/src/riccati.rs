//! Backward tensor-valued Riccati equation for the joint characteristic
//! functional of log-price and integrated variance.
//!
//! For bounded `f, g: [0,T] -> C` the element-valued function `ψ_t` solves
//!
//! ```text
//! -ψ̇_t = ½(ψ_t proj2)^⧢2 + ρ f(t) (σ_t ⧢ ψ_t proj2) + ½ ψ_t proj22
//!         + ψ_t proj1 + ((f(t)² - f(t))/2 + g(t)) σ_t^⧢2,     ψ_T = 0,
//! ```
//!
//! and `exp(⟨ψ_t, 𝕎̂_t⟩ + ∫_0^t f d log S + ∫_0^t g dV̄)` is a (local)
//! martingale whose time-zero value `exp(ψ_0^ø)` is the characteristic
//! functional. All shuffles are truncated at the working order `M̃` (2M by
//! default); the right-hand side is evaluated with one table-driven shuffle
//! per call. Integration is classic RK4, backward from `ψ_T = 0`, each
//! quadrature node independent of the others.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{shuffle_table, word_count, ShuffleTable, TensorElement};
use crate::error::{Result, SigVolError};
use crate::models::VolatilitySpec;
use crate::signature::SignaturePath;

/// Payoff-dependent coefficient functions `f` and `g` of the exponent
/// `∫ f d log S + ∫ g dV̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayoffTransform {
    /// European payoffs on `S_T`: `f = iu`, `g = 0`.
    European,
    /// Geometric-average Asian payoffs: `f(t) = iu (T - t)/T`, `g = 0`.
    GeometricAsian { maturity: f64 },
    /// Laplace transform of the integrated variance: `f = 0`, `g = -u/T`.
    IntegratedVariance { maturity: f64 },
}

impl PayoffTransform {
    #[inline]
    pub fn f(&self, t: f64, u: Complex64) -> Complex64 {
        match self {
            PayoffTransform::European => Complex64::new(0.0, 1.0) * u,
            PayoffTransform::GeometricAsian { maturity } => {
                Complex64::new(0.0, 1.0) * u * ((maturity - t) / maturity)
            }
            PayoffTransform::IntegratedVariance { .. } => Complex64::ZERO,
        }
    }

    #[inline]
    pub fn g(&self, _t: f64, u: Complex64) -> Complex64 {
        match self {
            PayoffTransform::IntegratedVariance { maturity } => -u / maturity,
            _ => Complex64::ZERO,
        }
    }
}

/// Numerical knobs of the backward solve.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiConfig {
    /// Number of RK4 macro steps on `[0, T]` (the ψ storage grid).
    pub ode_steps: usize,
    /// Working truncation order of ψ; `None` selects `2M`.
    pub m_tilde: Option<usize>,
    /// Abort threshold on any coefficient magnitude.
    pub blow_up: f64,
    /// Stability constant for high-frequency nodes: each macro step is cut
    /// into `ceil(|u|² Δt / stiffness_scale)` RK4 micro steps. Explicit RK4
    /// is only conditionally stable here and the fastest transient modes
    /// scale like `|u|²`.
    pub stiffness_scale: f64,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        RiccatiConfig {
            ode_steps: 100,
            m_tilde: None,
            blow_up: 1e12,
            stiffness_scale: 12.0,
        }
    }
}

impl RiccatiConfig {
    pub fn m_tilde_for(&self, spec_order: usize) -> usize {
        self.m_tilde.unwrap_or(2 * spec_order)
    }
}

/// ψ trajectories per quadrature node on the backward time grid.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    u_nodes: Vec<Complex64>,
    t_grid: Vec<f64>,
    /// `psi[node][j]` is ψ at `t_grid[j]`.
    psi: Vec<Vec<TensorElement>>,
    m_tilde: usize,
    transform: PayoffTransform,
}

impl RiccatiSolution {
    pub fn u_nodes(&self) -> &[Complex64] {
        &self.u_nodes
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn m_tilde(&self) -> usize {
        self.m_tilde
    }

    pub fn transform(&self) -> PayoffTransform {
        self.transform
    }

    pub fn maturity(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    pub fn psi(&self, node: usize, time_index: usize) -> &TensorElement {
        &self.psi[node][time_index]
    }

    /// ψ at an off-grid time by linear interpolation between macro steps.
    pub fn psi_at(&self, node: usize, t: f64) -> TensorElement {
        let grid = &self.t_grid;
        if t <= grid[0] {
            return self.psi[node][0].clone();
        }
        if t >= *grid.last().unwrap() {
            return self.psi[node].last().unwrap().clone();
        }
        let hi = grid.partition_point(|&g| g < t);
        let lo = hi - 1;
        let w = (t - grid[lo]) / (grid[hi] - grid[lo]);
        let mut out = self.psi[node][lo].scale_real(1.0 - w);
        for (dst, src) in out
            .coeffs_mut()
            .iter_mut()
            .zip(self.psi[node][hi].coeffs())
        {
            *dst += src * w;
        }
        out
    }

    /// `exp(ψ_0^ø)`: at time zero the signature is `(1, 0, ..)` so the
    /// bracket collapses to the scalar coefficient.
    pub fn char_functional_at_zero(&self, node: usize) -> Complex64 {
        self.psi[node][0].scalar().exp()
    }

    /// All time-zero characteristic functional values.
    pub fn char_values_at_zero(&self) -> Vec<Complex64> {
        (0..self.u_nodes.len())
            .map(|n| self.char_functional_at_zero(n))
            .collect()
    }
}

/// σ and σ^⧢2 sampled at the times the RK4 stepper will query.
struct SigmaCache {
    /// Per distinct σ grid value: (σ coefficients, σ^⧢2 coefficients).
    prepared: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    /// Index into `prepared` for each query.
    lookup: Box<dyn Fn(f64) -> usize + Sync + Send>,
}

impl SigmaCache {
    fn build(spec: &VolatilitySpec, m_tilde: usize) -> Result<Self> {
        let values = spec.sigma().values();
        let mut prepared = Vec::with_capacity(values.len());
        for v in values {
            let sq = v.shuffle_pow(2, m_tilde.min(2 * v.order()))?;
            prepared.push((v.coeffs().to_vec(), sq.coeffs().to_vec()));
        }
        let grid = spec.sigma().grid().to_vec();
        let lookup = Box::new(move |t: f64| grid.partition_point(|&g| g <= t).saturating_sub(1));
        Ok(SigmaCache { prepared, lookup })
    }

    #[inline]
    fn at(&self, t: f64) -> (&[Complex64], &[Complex64]) {
        let idx = (self.lookup)(t);
        let (s, sq) = &self.prepared[idx];
        (s, sq)
    }
}

/// Right-hand side `F(t, ψ, u)` of the backward equation, written into
/// `out`. `scratch` must be two buffers of the ψ length.
#[allow(clippy::too_many_arguments)]
fn rhs_into(
    t: f64,
    psi: &[Complex64],
    u: Complex64,
    rho: f64,
    sigma: &SigmaCache,
    transform: &PayoffTransform,
    table: &ShuffleTable,
    m_tilde: usize,
    proj_len1: usize,
    proj_len2: usize,
    p2: &mut [Complex64],
    arg: &mut [Complex64],
    out: &mut [Complex64],
) {
    let f = transform.f(t, u);
    let g = transform.g(t, u);
    let (sig, sig_sq) = sigma.at(t);

    // ψ proj2 and the shuffle argument ½ψproj2 + fρσ
    p2.fill(Complex64::ZERO);
    for v in 0..proj_len1 {
        p2[v] = psi[2 * v + 2];
    }
    arg.fill(Complex64::ZERO);
    let f_rho = f * rho;
    for (dst, &src) in arg.iter_mut().zip(p2.iter()) {
        *dst = 0.5 * src;
    }
    for (dst, &src) in arg.iter_mut().zip(sig.iter()) {
        *dst += f_rho * src;
    }

    // single truncated shuffle per evaluation
    out.fill(Complex64::ZERO);
    table.apply_into(p2, arg, m_tilde, out);

    // + ½ ψ proj22 + ψ proj1
    for v in 0..proj_len2 {
        out[v] += 0.5 * psi[4 * v + 6];
    }
    for v in 0..proj_len1 {
        out[v] += psi[2 * v + 1];
    }

    // + ((f² - f)/2 + g)·σ^⧢2
    let c = 0.5 * (f * f - f) + g;
    if c != Complex64::ZERO {
        for (dst, &src) in out.iter_mut().zip(sig_sq.iter()) {
            *dst += c * src;
        }
    }
}

/// Public single-evaluation form of the right-hand side (diagnostics and
/// tests; the solver uses the buffered internal path).
pub fn riccati_rhs(
    t: f64,
    psi: &TensorElement,
    u: Complex64,
    spec: &VolatilitySpec,
    transform: &PayoffTransform,
    m_tilde: usize,
) -> Result<TensorElement> {
    if psi.order() != m_tilde {
        return Err(SigVolError::InvalidParameter(format!(
            "psi order {} does not match working order {m_tilde}",
            psi.order()
        )));
    }
    let cache = SigmaCache::build(spec, m_tilde)?;
    let table = shuffle_table(2, m_tilde);
    let n = word_count(2, m_tilde);
    let proj_len1 = if m_tilde >= 1 { word_count(2, m_tilde - 1) } else { 0 };
    let proj_len2 = if m_tilde >= 2 { word_count(2, m_tilde - 2) } else { 0 };
    let mut p2 = vec![Complex64::ZERO; n];
    let mut arg = vec![Complex64::ZERO; n];
    let mut out = TensorElement::zero(2, m_tilde);
    let mut buf = vec![Complex64::ZERO; n];
    rhs_into(
        t,
        psi.coeffs(),
        u,
        spec.rho(),
        &cache,
        transform,
        &table,
        m_tilde,
        proj_len1,
        proj_len2,
        &mut p2,
        &mut arg,
        &mut buf,
    );
    out.coeffs_mut().copy_from_slice(&buf);
    Ok(out)
}

/// Solve the backward equation for every node; per-node trajectories are
/// independent and run as a parallel map with deterministic output.
pub fn solve(
    spec: &VolatilitySpec,
    transform: PayoffTransform,
    maturity: f64,
    u_nodes: &[Complex64],
    config: &RiccatiConfig,
) -> Result<RiccatiSolution> {
    if config.ode_steps == 0 {
        return Err(SigVolError::InvalidParameter("need ode_steps >= 1".into()));
    }
    if maturity <= 0.0 {
        return Err(SigVolError::InvalidParameter(format!(
            "maturity must be positive, got {maturity}"
        )));
    }
    let m_tilde = config.m_tilde_for(spec.order());
    let table = shuffle_table(2, m_tilde);
    let cache = SigmaCache::build(spec, m_tilde)?;
    let steps = config.ode_steps;
    let t_grid: Vec<f64> = (0..=steps)
        .map(|j| maturity * j as f64 / steps as f64)
        .collect();
    let n = word_count(2, m_tilde);
    let proj_len1 = if m_tilde >= 1 { word_count(2, m_tilde - 1) } else { 0 };
    let proj_len2 = if m_tilde >= 2 { word_count(2, m_tilde - 2) } else { 0 };

    let psi: Vec<Result<Vec<TensorElement>>> = u_nodes
        .par_iter()
        .enumerate()
        .map(|(node, &u)| {
            let mut p2 = vec![Complex64::ZERO; n];
            let mut arg = vec![Complex64::ZERO; n];
            let mut k = vec![vec![Complex64::ZERO; n]; 4];
            let mut stage = vec![Complex64::ZERO; n];
            let mut cur = vec![Complex64::ZERO; n];
            let mut traj = vec![TensorElement::zero(2, m_tilde); steps + 1];
            let eval = |t: f64, state: &[Complex64], out: &mut [Complex64],
                            p2: &mut [Complex64], arg: &mut [Complex64]| {
                rhs_into(
                    t, state, u, spec.rho(), &cache, &transform, &table, m_tilde,
                    proj_len1, proj_len2, p2, arg, out,
                );
            };
            let macro_h = maturity / steps as f64;
            let substeps = ((u.norm_sqr() * macro_h / config.stiffness_scale).ceil()
                as usize)
                .clamp(1, 256);
            for j in (1..=steps).rev() {
                let h = (t_grid[j] - t_grid[j - 1]) / substeps as f64;
                for sub in 0..substeps {
                    let t_hi = t_grid[j] - sub as f64 * h;
                    // backward step of -ψ̇ = F: ψ(t - h) = ψ(t) + h·F̄
                    let (k1, rest) = k.split_at_mut(1);
                    let (k2, rest) = rest.split_at_mut(1);
                    let (k3, k4) = rest.split_at_mut(1);
                    eval(t_hi, &cur, &mut k1[0], &mut p2, &mut arg);
                    for (s, (&c, &k1v)) in stage.iter_mut().zip(cur.iter().zip(k1[0].iter()))
                    {
                        *s = c + 0.5 * h * k1v;
                    }
                    eval(t_hi - 0.5 * h, &stage, &mut k2[0], &mut p2, &mut arg);
                    for (s, (&c, &k2v)) in stage.iter_mut().zip(cur.iter().zip(k2[0].iter()))
                    {
                        *s = c + 0.5 * h * k2v;
                    }
                    eval(t_hi - 0.5 * h, &stage, &mut k3[0], &mut p2, &mut arg);
                    for (s, (&c, &k3v)) in stage.iter_mut().zip(cur.iter().zip(k3[0].iter()))
                    {
                        *s = c + h * k3v;
                    }
                    eval(t_hi - h, &stage, &mut k4[0], &mut p2, &mut arg);
                    let mut max_mag: f64 = 0.0;
                    for (i, c) in cur.iter_mut().enumerate() {
                        *c += h / 6.0
                            * (k1[0][i] + 2.0 * k2[0][i] + 2.0 * k3[0][i] + k4[0][i]);
                        max_mag = max_mag.max(c.norm_sqr());
                    }
                    if !max_mag.is_finite() || max_mag.sqrt() > config.blow_up {
                        return Err(SigVolError::BlowUp {
                            node,
                            u: format!("{u}"),
                            t: t_hi - h,
                            magnitude: max_mag.sqrt(),
                        });
                    }
                }
                traj[j - 1].coeffs_mut().copy_from_slice(&cur);
            }
            Ok(traj)
        })
        .collect();

    let psi = psi.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RiccatiSolution {
        u_nodes: u_nodes.to_vec(),
        t_grid,
        psi,
        m_tilde,
        transform,
    })
}

/// Martingale values `M_t(u) = exp(⟨ψ_t, 𝕎̂_t⟩ + ∫_0^t f d log S + ∫ g dV̄)`
/// along one sampled path, per node and grid time.
///
/// The signature path grid must be a subset of the solution grid; the
/// running integrals use left-point evaluation consistent with the Ito
/// integrals they discretize.
pub fn char_functional_along_path(
    sol: &RiccatiSolution,
    sig_path: &SignaturePath,
    log_s: &[f64],
    v_bar: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let grid = sig_path.grid();
    if grid.len() != log_s.len() || grid.len() != v_bar.len() {
        return Err(SigVolError::InvalidParameter(
            "path arrays must share the signature grid".into(),
        ));
    }
    let transform = sol.transform();
    let mut out = vec![vec![Complex64::ZERO; grid.len()]; sol.u_nodes.len()];
    for (node, &u) in sol.u_nodes.iter().enumerate() {
        let mut int_f = Complex64::ZERO;
        let mut int_g = Complex64::ZERO;
        for (j, &t) in grid.iter().enumerate() {
            if j > 0 {
                let t_prev = grid[j - 1];
                int_f += transform.f(t_prev, u) * (log_s[j] - log_s[j - 1]);
                int_g += transform.g(t_prev, u) * (v_bar[j] - v_bar[j - 1]);
            }
            let psi_t = sol.psi_at(node, t);
            let bracket = psi_t.bracket(sig_path.at(j));
            out[node][j] = (bracket + int_f + int_g).exp();
        }
    }
    Ok(out)
}
