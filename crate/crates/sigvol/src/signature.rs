//! Truncated signatures of time-augmented sampled paths.
//!
//! Sampled paths are interpolated piecewise-linearly, so each segment
//! contributes the tensor exponential of its increment `dt·1 + dw·2` and the
//! running signature is the Chen concatenation of segment exponentials.
//! Letter 1 is the time component, letter 2 the path component.

use num_complex::Complex64;

use crate::algebra::{level_start, word_count, TensorElement};
use crate::error::{Result, SigVolError};

/// Running real-coefficient signature of a time-augmented path, `d = 2`.
///
/// This is the hot-loop representation used by the Monte Carlo engines; the
/// level-0 coefficient is pinned to one and all coefficients are real.
#[derive(Debug, Clone)]
pub struct RealSignature {
    order: usize,
    coeffs: Vec<f64>,
    scratch: Vec<f64>,
    segment: Vec<f64>,
}

impl RealSignature {
    pub fn new(order: usize) -> Self {
        let n = word_count(2, order);
        let mut coeffs = vec![0.0; n];
        coeffs[0] = 1.0;
        RealSignature {
            order,
            coeffs: coeffs.clone(),
            scratch: vec![0.0; n],
            segment: vec![0.0; n],
        }
    }

    pub fn reset(&mut self) {
        self.coeffs.fill(0.0);
        self.coeffs[0] = 1.0;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Extend by a linear segment with increments `(dt, dw)` via Chen.
    pub fn extend(&mut self, dt: f64, dw: f64) {
        segment_exp_into(dt, dw, self.order, &mut self.segment);
        concat_real(
            &self.coeffs,
            &self.segment,
            self.order,
            &mut self.scratch,
        );
        std::mem::swap(&mut self.coeffs, &mut self.scratch);
    }

    /// Bracket against a complex element (signature is real).
    pub fn bracket(&self, l: &TensorElement) -> Complex64 {
        l.bracket_real(&self.coeffs)
    }

    /// Bracket against a real coefficient slice of any compatible length.
    pub fn bracket_slice(&self, l: &[f64]) -> f64 {
        self.coeffs.iter().zip(l).map(|(a, b)| a * b).sum()
    }

    pub fn to_tensor(&self) -> TensorElement {
        let mut t = TensorElement::zero(2, self.order);
        for (dst, &src) in t.coeffs_mut().iter_mut().zip(&self.coeffs) {
            *dst = Complex64::new(src, 0.0);
        }
        t
    }
}

/// `out = a ⊗ b` for dense real d=2 coefficient vectors.
#[allow(clippy::needless_range_loop)]
fn concat_real(a: &[f64], b: &[f64], order: usize, out: &mut [f64]) {
    out.fill(0.0);
    for la in 0..=order {
        let (a0, a1) = (level_start(2, la), level_start(2, la + 1));
        for lb in 0..=order - la {
            let (b0, b1) = (level_start(2, lb), level_start(2, lb + 1));
            let shift = 1usize << lb;
            for ai in a0..a1 {
                let ca = a[ai];
                if ca == 0.0 {
                    continue;
                }
                let base = ai * shift;
                for bi in b0..b1 {
                    out[base + bi] += ca * b[bi];
                }
            }
        }
    }
}

/// Tensor exponential of the segment increment `dt·1 + dw·2`, i.e.
/// `Σ_n (dt·1 + dw·2)^{⊗n} / n!`, written as real coefficients.
///
/// Built level by level with the graded Horner recursion
/// `level_n = level_{n-1} ⊗ Δ / n`.
fn segment_exp_into(dt: f64, dw: f64, order: usize, out: &mut [f64]) {
    out.fill(0.0);
    out[0] = 1.0;
    for n in 1..=order {
        let (p0, p1) = (level_start(2, n - 1), level_start(2, n));
        let inv = 1.0 / n as f64;
        for p in p0..p1 {
            let c = out[p] * inv;
            if c != 0.0 {
                out[2 * p + 1] += c * dt;
                out[2 * p + 2] += c * dw;
            }
        }
    }
}

/// Truncated signature of one piecewise-linear segment.
pub fn segment_signature(dt: f64, dw: f64, order: usize) -> TensorElement {
    let mut buf = vec![0.0; word_count(2, order)];
    segment_exp_into(dt, dw, order, &mut buf);
    let mut t = TensorElement::zero(2, order);
    for (dst, &src) in t.coeffs_mut().iter_mut().zip(&buf) {
        *dst = Complex64::new(src, 0.0);
    }
    t
}

/// Chen extension: `s ⊗ segment_signature(dt, dw)`.
pub fn chen_extend(s: &TensorElement, dt: f64, dw: f64) -> TensorElement {
    let order = s.order();
    s.concat(&segment_signature(dt, dw, order), order)
        .expect("same alphabet")
}

/// Truncated signature of a sampled path on its full time grid.
#[derive(Debug, Clone)]
pub struct SignaturePath {
    grid: Vec<f64>,
    values: Vec<TensorElement>,
    order: usize,
}

impl SignaturePath {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[TensorElement] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn at(&self, j: usize) -> &TensorElement {
        &self.values[j]
    }
}

/// Running Chen products of the time-augmented path `(t_j, w_j)`.
pub fn signature_of_path(times: &[f64], w_values: &[f64], order: usize) -> Result<SignaturePath> {
    if times.len() != w_values.len() || times.is_empty() {
        return Err(SigVolError::InvalidParameter(
            "times and path values must have equal nonzero length".into(),
        ));
    }
    if times.windows(2).any(|t| t[1] <= t[0]) {
        return Err(SigVolError::NonIncreasingGrid);
    }
    let mut sig = RealSignature::new(order);
    let mut values = Vec::with_capacity(times.len());
    values.push(sig.to_tensor());
    for j in 1..times.len() {
        sig.extend(times[j] - times[j - 1], w_values[j] - w_values[j - 1]);
        values.push(sig.to_tensor());
    }
    Ok(SignaturePath {
        grid: times.to_vec(),
        values,
        order,
    })
}

/// Expected signature of the time-augmented Brownian motion at time `t`:
/// `Σ_n t^n/n! (1 + ½·22)^{⊗n}` truncated at `order`.
pub fn expected_signature(t: f64, order: usize) -> TensorElement {
    let base = TensorElement::from_terms(2, 2, &[("1", 1.0), ("22", 0.5)]).expect("static");
    let mut acc = TensorElement::unit(2, order);
    let mut term = TensorElement::unit(2, order);
    for n in 1..=order {
        term = term
            .concat(&base, order)
            .expect("same alphabet")
            .scale_real(t / n as f64);
        if term.max_abs() == 0.0 {
            break;
        }
        acc = acc.add(&term).expect("same alphabet");
    }
    acc
}
