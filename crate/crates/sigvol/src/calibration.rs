//! Implied-volatility calibration: CSV market-data ingestion, per-slice
//! loss, and a deterministic differential-evolution optimizer.
//!
//! Each maturity is calibrated independently: the free coefficients of `σ`
//! (the scalar term stays pinned) plus the correlation ρ minimize the mean
//! squared implied-vol error over the slice's strikes. One Riccati solve per
//! objective evaluation.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{word_count, TensorElement, Word};
use crate::error::{Result, SigVolError};
use crate::fourier::{smile, PricingConfig};
use crate::models::VolatilitySpec;
use crate::rng::path_rng;

/// One maturity's worth of quotes, strikes normalized by spot.
#[derive(Debug, Clone, Serialize)]
pub struct MarketSlice {
    pub maturity_days: f64,
    /// Maturity in years (`days / 365`).
    pub maturity: f64,
    pub strikes: Vec<f64>,
    pub implied_vols: Vec<f64>,
    pub spot: f64,
}

/// Ingestion outcome: parsed slices plus per-line rejection notes.
#[derive(Debug)]
pub struct LoadReport {
    pub slices: Vec<MarketSlice>,
    pub warnings: Vec<String>,
}

/// Load quotes from a CSV with header `maturity_days,strike,implied_vol,spot`.
///
/// Rows are grouped by maturity (ascending); duplicated `(maturity, strike)`
/// pairs keep the last row; malformed rows are rejected with their line
/// numbers in the warnings.
pub fn load_slices(path: impl AsRef<Path>) -> Result<LoadReport> {
    let mut file = std::fs::File::open(path.as_ref())?;
    let mut text = String::new();
    file.read_to_string(&mut text)?;
    load_slices_from_str(&text)
}

pub fn load_slices_from_str(text: &str) -> Result<LoadReport> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| SigVolError::MarketData(format!("bad header: {e}")))?
        .clone();
    let mut idx = [usize::MAX; 4];
    for (want, slot) in ["maturity_days", "strike", "implied_vol", "spot"]
        .iter()
        .zip(idx.iter_mut())
    {
        *slot = headers
            .iter()
            .position(|h| h == *want)
            .ok_or_else(|| SigVolError::MarketData(format!("missing column '{want}'")))?;
    }
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut warnings = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let line_no = line + 2; // 1-based, after the header
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                warnings.push(format!("line {line_no}: unreadable row ({e})"));
                continue;
            }
        };
        let mut vals = [0.0f64; 4];
        let mut ok = true;
        for (slot, &col) in vals.iter_mut().zip(&idx) {
            match record.get(col).map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => *slot = v,
                _ => {
                    ok = false;
                }
            }
        }
        if !ok || vals[1] <= 0.0 || vals[2] <= 0.0 || vals[3] <= 0.0 || vals[0] <= 0.0 {
            warnings.push(format!("line {line_no}: rejected row {record:?}"));
            continue;
        }
        rows.push((vals[0], vals[1], vals[2], vals[3]));
    }

    // group by maturity, last row wins on duplicated (T, K)
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut slices: Vec<MarketSlice> = Vec::new();
    for (days, strike, iv, spot) in rows {
        if slices.last().map(|s| s.maturity_days) != Some(days) {
            slices.push(MarketSlice {
                maturity_days: days,
                maturity: days / 365.0,
                strikes: Vec::new(),
                implied_vols: Vec::new(),
                spot,
            });
        }
        let slice = slices.last_mut().unwrap();
        let k = strike / spot;
        if let Some(pos) = slice.strikes.iter().position(|&x| x == k) {
            warnings.push(format!(
                "duplicate quote at T={days}d K={strike}: last row wins"
            ));
            slice.implied_vols[pos] = iv;
        } else {
            slice.strikes.push(k);
            slice.implied_vols.push(iv);
        }
    }
    for s in &mut slices {
        let mut order: Vec<usize> = (0..s.strikes.len()).collect();
        order.sort_by(|&a, &b| s.strikes[a].partial_cmp(&s.strikes[b]).unwrap());
        s.strikes = order.iter().map(|&i| s.strikes[i]).collect();
        s.implied_vols = order.iter().map(|&i| s.implied_vols[i]).collect();
    }
    Ok(LoadReport { slices, warnings })
}

/// Mean squared implied-vol error of a spec against one slice; pricing
/// failures count as a unit penalty per strike.
pub fn slice_loss(spec: &VolatilitySpec, slice: &MarketSlice, pricing: &PricingConfig) -> f64 {
    let n = slice.strikes.len().max(1) as f64;
    match smile(spec, slice.maturity, &slice.strikes, pricing) {
        Ok(reports) => {
            let mut acc = 0.0;
            for (r, &iv_mkt) in reports.iter().zip(&slice.implied_vols) {
                match r.implied_vol {
                    Some(iv) => {
                        let d = iv - iv_mkt;
                        acc += d * d;
                    }
                    None => acc += 1.0,
                }
            }
            acc / n
        }
        Err(_) => 1.0,
    }
}

/// Differential-evolution controls (`DE/rand/1/bin`).
#[derive(Debug, Clone, Serialize)]
pub struct DeConfig {
    /// Population size; `None` selects `15 × dim`.
    pub population: Option<usize>,
    pub weight: f64,
    pub crossover: f64,
    pub max_generations: usize,
    /// Stop after this many generations without improvement.
    pub stagnation_limit: usize,
    /// Stop once the best loss drops below this level.
    pub target_loss: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: None,
            weight: 0.8,
            crossover: 0.9,
            max_generations: 300,
            stagnation_limit: 50,
            target_loss: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeResult {
    pub argmin: Vec<f64>,
    pub loss: f64,
    pub evaluations: usize,
    pub generations: usize,
    /// Best loss per generation.
    pub trace: Vec<f64>,
}

/// Global minimization by `DE/rand/1/bin` with elitist selection.
///
/// All randomness for a generation is drawn up front from a single stream,
/// then trial vectors are evaluated in parallel: results are deterministic
/// for a fixed seed regardless of thread count.
pub fn differential_evolution(
    objective: impl Fn(&[f64]) -> f64 + Sync,
    bounds: &[(f64, f64)],
    cfg: &DeConfig,
) -> Result<DeResult> {
    let dim = bounds.len();
    if dim == 0 {
        return Err(SigVolError::InvalidParameter("empty bounds".into()));
    }
    for (lo, hi) in bounds {
        if lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(SigVolError::InvalidParameter(format!(
                "bad bound ({lo}, {hi})"
            )));
        }
    }
    let np = cfg.population.unwrap_or(15 * dim).max(4);
    let mut rng = path_rng(cfg.seed, 0xDE);
    let uniform = {
        use rand::Rng;
        move |rng: &mut rand_chacha::ChaCha8Rng| rng.random::<f64>()
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * uniform(&mut rng))
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = pop.par_iter().map(|x| objective(x)).collect();
    let mut evaluations = np;
    let mut best = fitness
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &f)| (i, f))
        .unwrap();
    let mut trace = vec![best.1];
    let mut stagnant = 0usize;
    let mut generations = 0usize;

    for _gen in 0..cfg.max_generations {
        if best.1 <= cfg.target_loss {
            break;
        }
        generations += 1;
        // generation-synchronous randomness
        let mut plans: Vec<(usize, usize, usize, usize, Vec<f64>)> = Vec::with_capacity(np);
        for i in 0..np {
            let mut pick = || loop {
                let r = (uniform(&mut rng) * np as f64) as usize % np;
                if r != i {
                    return r;
                }
            };
            let (r1, r2, r3) = {
                let a = pick();
                let b = loop {
                    let x = pick();
                    if x != a {
                        break x;
                    }
                };
                let c = loop {
                    let x = pick();
                    if x != a && x != b {
                        break x;
                    }
                };
                (a, b, c)
            };
            let j_rand = (uniform(&mut rng) * dim as f64) as usize % dim;
            let draws: Vec<f64> = (0..dim).map(|_| uniform(&mut rng)).collect();
            plans.push((r1, r2, r3, j_rand, draws));
        }
        let trials: Vec<Vec<f64>> = plans
            .iter()
            .enumerate()
            .map(|(i, (r1, r2, r3, j_rand, draws))| {
                (0..dim)
                    .map(|j| {
                        let v = if draws[j] < cfg.crossover || j == *j_rand {
                            pop[*r1][j] + cfg.weight * (pop[*r2][j] - pop[*r3][j])
                        } else {
                            pop[i][j]
                        };
                        v.clamp(bounds[j].0, bounds[j].1)
                    })
                    .collect()
            })
            .collect();
        let trial_fit: Vec<f64> = trials.par_iter().map(|x| objective(x)).collect();
        evaluations += np;
        let mut improved = false;
        for i in 0..np {
            if trial_fit[i] <= fitness[i] {
                pop[i] = trials[i].clone();
                fitness[i] = trial_fit[i];
                if trial_fit[i] < best.1 {
                    best = (i, trial_fit[i]);
                    improved = true;
                }
            }
        }
        trace.push(best.1);
        stagnant = if improved { 0 } else { stagnant + 1 };
        if stagnant >= cfg.stagnation_limit {
            break;
        }
    }
    Ok(DeResult {
        argmin: pop[best.0].clone(),
        loss: best.1,
        evaluations,
        generations,
        trace,
    })
}

/// Per-slice calibration setup.
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    /// Truncation order of the calibrated element.
    pub order: usize,
    /// Words whose coefficients are optimized (the empty word is pinned).
    pub free_words: Vec<Word>,
    /// Pinned scalar coefficient `σ^ø`.
    pub sigma0: f64,
    pub coeff_bounds: (f64, f64),
    pub rho_bounds: (f64, f64),
    pub de: DeConfig,
    pub pricing: PricingConfig,
}

impl CalibrationConfig {
    /// All words of length `1..=order` free, defaults elsewhere.
    pub fn standard(order: usize, sigma0: f64, seed: u64) -> Self {
        let free_words = (1..word_count(2, order))
            .map(|i| Word::from_index(2, i))
            .collect();
        CalibrationConfig {
            order,
            free_words,
            sigma0,
            coeff_bounds: (-1.0, 1.0),
            rho_bounds: (-0.999, 0.999),
            de: DeConfig {
                seed,
                ..Default::default()
            },
            pricing: PricingConfig::default(),
        }
    }

    pub fn build_spec(&self, coeffs: &[f64], rho: f64) -> Result<VolatilitySpec> {
        let mut t = TensorElement::zero(2, self.order);
        t.coeffs_mut()[0] = num_complex::Complex64::new(self.sigma0, 0.0);
        for (w, &c) in self.free_words.iter().zip(coeffs) {
            t.set_coeff(w, num_complex::Complex64::new(c, 0.0));
        }
        VolatilitySpec::constant(t, rho, "calibrated")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationResult {
    pub maturity_days: f64,
    pub rho: f64,
    pub coefficients: Vec<(String, f64)>,
    pub loss: f64,
    pub evaluations: usize,
    pub generations: usize,
    pub seed: u64,
    #[serde(skip)]
    pub spec: VolatilitySpec,
    pub trace: Vec<f64>,
}

/// Calibrate the masked coefficients and ρ of one slice by differential
/// evolution; best-effort (the result carries the achieved loss and trace).
pub fn calibrate_slice(slice: &MarketSlice, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    let n_free = cfg.free_words.len();
    if n_free == 0 {
        let spec = cfg.build_spec(&[], 0.0)?;
        let loss = slice_loss(&spec, slice, &cfg.pricing);
        return Ok(CalibrationResult {
            maturity_days: slice.maturity_days,
            rho: 0.0,
            coefficients: vec![],
            loss,
            evaluations: 1,
            generations: 0,
            seed: cfg.de.seed,
            spec,
            trace: vec![loss],
        });
    }
    let mut bounds = vec![cfg.coeff_bounds; n_free];
    bounds.push(cfg.rho_bounds);
    let objective = |x: &[f64]| -> f64 {
        match cfg.build_spec(&x[..n_free], x[n_free]) {
            Ok(spec) => slice_loss(&spec, slice, &cfg.pricing),
            Err(_) => 1e6,
        }
    };
    let result = differential_evolution(objective, &bounds, &cfg.de)?;
    let rho = result.argmin[n_free];
    let spec = cfg.build_spec(&result.argmin[..n_free], rho)?;
    Ok(CalibrationResult {
        maturity_days: slice.maturity_days,
        rho,
        coefficients: cfg
            .free_words
            .iter()
            .zip(&result.argmin)
            .map(|(w, &c)| (w.to_string(), c))
            .collect(),
        loss: result.loss,
        evaluations: result.evaluations,
        generations: result.generations,
        seed: cfg.de.seed,
        spec,
        trace: result.trace,
    })
}
