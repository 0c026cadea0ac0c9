//! `sigvol` — price, hedge and calibrate signature volatility models.
//!
//! Exit codes: 0 on success, 1 on numeric failure (ODE blow-up, implied-vol
//! failure), 2 on usage or configuration errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sigvol::algebra::TimeDependentTensor;
use sigvol::calibration::{calibrate_slice, load_slices, CalibrationConfig, DeConfig};
use sigvol::config::ModelConfig;
use sigvol::fourier::{
    qvol_swap_strike, smile, variance_swap_strike, AsianContext, EuropeanContext, PricingConfig,
};
use sigvol::hedging::{hedge_asian, hedge_european, HedgeConfig, HedgeMarket, HedgeStrategy};
use sigvol::models::{
    fit_regression, ou_rep, ou_rep_time_dep, OuParams, RegressionConfig, VolatilitySpec,
};
use sigvol::montecarlo::{representation_mse, ClassicalModel, McConfig};
use sigvol::riccati::RiccatiConfig;
use sigvol::SigVolError;

#[derive(Parser)]
#[command(name = "sigvol", version, about = "Signature volatility models: Fourier pricing, hedging, calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct NumericsOpts {
    /// Model truncation order override.
    #[arg(long)]
    order: Option<usize>,
    /// Working order of the Riccati state (default 2M).
    #[arg(long = "tilde-order")]
    tilde_order: Option<usize>,
    /// Gauss-Laguerre quadrature nodes.
    #[arg(long = "quad", default_value_t = 64)]
    quad: usize,
    /// RK4 steps of the backward Riccati solve.
    #[arg(long = "ode-steps", default_value_t = 100)]
    ode_steps: usize,
}

impl NumericsOpts {
    fn pricing(&self) -> PricingConfig {
        PricingConfig {
            quad_nodes: self.quad,
            riccati: RiccatiConfig {
                ode_steps: self.ode_steps,
                m_tilde: self.tilde_order,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

#[derive(Args, Clone)]
struct OutputOpts {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Price one European option by Fourier inversion.
    Price {
        #[arg(long)]
        model: PathBuf,
        /// Maturity in years.
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        put: bool,
        #[command(flatten)]
        numerics: NumericsOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Implied-vol smile across a strike range (one Riccati solve).
    Smile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        maturity: f64,
        /// Strike range `lo:hi:n`.
        #[arg(long)]
        strikes: String,
        #[command(flatten)]
        numerics: NumericsOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// q-volatility or variance swap fair strike.
    Swap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        maturity: f64,
        /// Realized-volatility exponent in (0,1); omit for a variance swap.
        #[arg(long)]
        q: Option<f64>,
        #[command(flatten)]
        numerics: NumericsOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Price one geometric-average Asian option.
    Asian {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        put: bool,
        #[command(flatten)]
        numerics: NumericsOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Compare a classical process against its truncated representation on
    /// shared randomness: MSE table over orders and horizons.
    Represent {
        /// Ornstein-Uhlenbeck parameters as x,kappa,theta,eta.
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.25, 4.0, 0.25, 2.0])]
        ou: Vec<f64>,
        /// Truncation orders to scan.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 6])]
        orders: Vec<usize>,
        /// Test horizons in years.
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
        horizons: Vec<f64>,
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        /// Simulation steps per year.
        #[arg(long = "mc-steps", default_value_t = 252)]
        mc_steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Fit signature coefficients to a named target process by penalized
    /// regression.
    Regress {
        /// Target family: ou | icir | fbm.
        #[arg(long, default_value = "ou")]
        target: String,
        /// Target parameters (family-specific, comma-separated).
        #[arg(long, value_delimiter = ',')]
        params: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        #[arg(long = "mc-steps", default_value_t = 252)]
        mc_steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        beta1: f64,
        #[arg(long, default_value_t = 1e-8)]
        beta2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Simulate a rebalanced quadratic hedge and report mean squared P&L.
    Hedge {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        put: bool,
        /// Hedge a geometric Asian option instead of a European one.
        #[arg(long)]
        asian: bool,
        /// Strategies: sigvol | bs:<vol> | oracle (Stein-Stein explicit).
        #[arg(long, value_delimiter = ',', default_values_t = [String::from("sigvol")])]
        strategy: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Rebalance steps over the option life.
        #[arg(long = "mc-steps")]
        mc_steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        numerics: NumericsOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Calibrate per-maturity coefficients and rho to an implied-vol CSV.
    Calibrate {
        /// CSV file: maturity_days,strike,implied_vol,spot.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Pinned scalar coefficient.
        #[arg(long, default_value_t = 0.1204)]
        sigma0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        generations: usize,
        /// Gauss-Laguerre quadrature nodes per objective evaluation.
        #[arg(long = "quad", default_value_t = 32)]
        quad: usize,
        /// RK4 steps per objective evaluation.
        #[arg(long = "ode-steps", default_value_t = 50)]
        ode_steps: usize,
        #[command(flatten)]
        output: OutputOpts,
    },
}

fn parse_strike_range(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("strike range must be lo:hi:n, got '{s}'");
    }
    let lo: f64 = parts[0].parse().context("bad strike lo")?;
    let hi: f64 = parts[1].parse().context("bad strike hi")?;
    let n: usize = parts[2].parse().context("bad strike count")?;
    if n < 1 || hi < lo {
        bail!("need hi >= lo and n >= 1 in '{s}'");
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn emit(output: &OutputOpts, json: serde_json::Value, csv: Option<String>) -> anyhow::Result<()> {
    let body = match output.format {
        Format::Json => serde_json::to_string_pretty(&json)? + "\n",
        Format::Csv => csv.unwrap_or_else(|| {
            // fall back to single-line JSON when no tabular form exists
            serde_json::to_string(&json).unwrap_or_default() + "\n"
        }),
    };
    match &output.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(body.as_bytes())?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn load_spec(path: &PathBuf, horizon: f64, order: Option<usize>) -> anyhow::Result<VolatilitySpec> {
    let mut cfg = ModelConfig::from_path(path)
        .with_context(|| format!("cannot load model config {}", path.display()))?;
    if let Some(m) = order {
        // override the truncation order in place
        match &mut cfg {
            ModelConfig::Ou { m: mm, .. }
            | ModelConfig::Mgbm { m: mm, .. }
            | ModelConfig::Cir { m: mm, .. }
            | ModelConfig::Delayed { m: mm, .. }
            | ModelConfig::Rlfbm { m: mm, .. }
            | ModelConfig::Bergomi { m: mm, .. }
            | ModelConfig::Quintic { m: mm, .. }
            | ModelConfig::Raw { m: mm, .. } => *mm = m,
        }
    }
    Ok(cfg.build(horizon)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Price {
            model,
            maturity,
            strike,
            put,
            numerics,
            output,
        } => {
            let spec = load_spec(&model, maturity, numerics.order)?;
            let ctx = EuropeanContext::new(&spec, maturity, &numerics.pricing())?;
            let report = ctx.report(strike, !put)?;
            let csv = format!(
                "product,maturity,strike,price,implied_vol\n{},{},{},{},{}\n",
                report.product,
                report.maturity,
                report.strike,
                report.price,
                report.implied_vol.unwrap_or(f64::NAN)
            );
            emit(&output, serde_json::to_value(&report)?, Some(csv))
        }
        Command::Smile {
            model,
            maturity,
            strikes,
            numerics,
            output,
        } => {
            let grid = parse_strike_range(&strikes)?;
            let spec = load_spec(&model, maturity, numerics.order)?;
            let reports = smile(&spec, maturity, &grid, &numerics.pricing())?;
            let mut csv = String::from("strike,price,implied_vol\n");
            for r in &reports {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    r.strike,
                    r.price,
                    r.implied_vol.unwrap_or(f64::NAN)
                ));
            }
            emit(&output, serde_json::to_value(&reports)?, Some(csv))
        }
        Command::Swap {
            model,
            maturity,
            q,
            numerics,
            output,
        } => {
            let spec = load_spec(&model, maturity, numerics.order)?;
            let (kind, strike) = match q {
                Some(q) => (
                    format!("qvol_swap(q={q})"),
                    qvol_swap_strike(&spec, maturity, q, &numerics.pricing())?,
                ),
                None => (
                    "variance_swap".to_string(),
                    variance_swap_strike(&spec, maturity)?,
                ),
            };
            let json = serde_json::json!({
                "product": kind,
                "maturity": maturity,
                "strike": strike,
            });
            let csv = format!("product,maturity,strike\n{kind},{maturity},{strike}\n");
            emit(&output, json, Some(csv))
        }
        Command::Asian {
            model,
            maturity,
            strike,
            put,
            numerics,
            output,
        } => {
            let spec = load_spec(&model, maturity, numerics.order)?;
            let ctx = AsianContext::new(&spec, maturity, &numerics.pricing())?;
            let report = ctx.report(strike, !put)?;
            let csv = format!(
                "product,maturity,strike,price\n{},{},{},{}\n",
                report.product, report.maturity, report.strike, report.price
            );
            emit(&output, serde_json::to_value(&report)?, Some(csv))
        }
        Command::Represent {
            ou,
            orders,
            horizons,
            paths,
            mc_steps,
            seed,
            output,
        } => {
            let p = OuParams {
                x: ou[0],
                kappa: ou[1],
                theta: ou[2],
                eta: ou[3],
            };
            let model = ClassicalModel::Ou(p);

            // one sample trajectory pair per order (shared driving noise)
            // next to the requested report: <out>.traj.csv
            if let Some(out) = &output.out {
                let horizon = horizons.iter().cloned().fold(0.0, f64::max);
                let steps = ((mc_steps as f64 * horizon).round() as usize).max(8);
                let dt = horizon / steps as f64;
                let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
                let mut rng = sigvol::rng::path_rng(seed, 0);
                let dws: Vec<f64> = (0..steps)
                    .map(|_| sigvol::rng::standard_normal(&mut rng) * dt.sqrt())
                    .collect();
                let exact = model.path(&grid, &dws);
                let mut reps: Vec<Vec<f64>> = Vec::new();
                for &m in &orders {
                    let ell = ou_rep(&p, m);
                    let mut sig = sigvol::signature::RealSignature::new(m);
                    let mut col = vec![ell.scalar().re];
                    for &dw in &dws {
                        sig.extend(dt, dw);
                        col.push(sig.bracket(&ell).re);
                    }
                    reps.push(col);
                }
                let mut traj = String::from("t,exact");
                for &m in &orders {
                    traj.push_str(&format!(",rep_m{m}"));
                }
                traj.push('\n');
                for j in 0..=steps {
                    traj.push_str(&format!("{},{}", grid[j], exact[j]));
                    for col in &reps {
                        traj.push_str(&format!(",{}", col[j]));
                    }
                    traj.push('\n');
                }
                let mut traj_path = out.clone();
                traj_path.set_extension("traj.csv");
                std::fs::write(&traj_path, traj)?;
            }

            let mut rows = Vec::new();
            let mut csv = String::from("order,horizon,mse_exact,mse_exact_time_dep\n");
            for &m in &orders {
                for &h in &horizons {
                    let steps = ((mc_steps as f64 * h).round() as usize).max(8);
                    let cfg = McConfig::new(steps, paths, seed);
                    let spec_ti =
                        VolatilitySpec::constant(ou_rep(&p, m), 0.0, "exact")?;
                    let grid: Vec<f64> =
                        (0..=steps).map(|j| h * j as f64 / steps as f64).collect();
                    let values: Vec<_> =
                        grid.iter().map(|&t| ou_rep_time_dep(t, &p, m)).collect();
                    let spec_td = VolatilitySpec::new(
                        TimeDependentTensor::new(grid, values)?,
                        0.0,
                        "exact-td",
                    )?;
                    let mse_ti = representation_mse(&spec_ti, &model, h, &cfg, &[h])[0];
                    let mse_td = representation_mse(&spec_td, &model, h, &cfg, &[h])[0];
                    csv.push_str(&format!("{m},{h},{mse_ti:.6e},{mse_td:.6e}\n"));
                    rows.push(serde_json::json!({
                        "order": m,
                        "horizon": h,
                        "mse_exact": mse_ti,
                        "mse_exact_time_dep": mse_td,
                    }));
                }
            }
            emit(&output, serde_json::Value::Array(rows), Some(csv))
        }
        Command::Regress {
            target,
            params,
            order,
            horizon,
            paths,
            mc_steps,
            beta1,
            beta2,
            seed,
            output,
        } => {
            let cfg = RegressionConfig {
                grid_points: mc_steps,
                n_paths: paths,
                order,
                horizon,
                beta1,
                beta2,
                seed,
            };
            type TargetFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Sync>;
            let target_fn: TargetFn = match target.as_str() {
                    "ou" => {
                        let p = OuParams {
                            x: *params.first().unwrap_or(&0.25),
                            kappa: *params.get(1).unwrap_or(&4.0),
                            theta: *params.get(2).unwrap_or(&0.25),
                            eta: *params.get(3).unwrap_or(&2.0),
                        };
                        Box::new(move |ts: &[f64], w: &[f64]| {
                            let dws: Vec<f64> =
                                w.windows(2).map(|x| x[1] - x[0]).collect();
                            ClassicalModel::Ou(p).path(ts, &dws)
                        })
                    }
                    "icir" => {
                        // inverse CIR (3/2 model): dV = κV(θ - V)dt + ηV^{3/2}dW
                        let kappa = *params.first().unwrap_or(&1.0);
                        let theta = *params.get(1).unwrap_or(&0.5);
                        let eta = *params.get(2).unwrap_or(&1.0);
                        let v0 = *params.get(3).unwrap_or(&0.5);
                        Box::new(move |ts: &[f64], w: &[f64]| {
                            let mut v = v0;
                            let mut out = vec![v];
                            for j in 1..ts.len() {
                                let dt = ts[j] - ts[j - 1];
                                let dw = w[j] - w[j - 1];
                                let vp = v.max(1e-8);
                                v += kappa * vp * (theta - vp) * dt
                                    + eta * vp.powf(1.5) * dw;
                                out.push(v);
                            }
                            out
                        })
                    }
                    "fbm" => {
                        // Riemann-Liouville fBM by direct kernel convolution
                        let h = *params.first().unwrap_or(&0.3);
                        Box::new(move |ts: &[f64], w: &[f64]| {
                            let mut out = vec![0.0];
                            for j in 1..ts.len() {
                                let t = ts[j];
                                let mut acc = 0.0;
                                for k in 0..j {
                                    let mid = 0.5 * (ts[k] + ts[k + 1]);
                                    acc += (t - mid).powf(h - 0.5) * (w[k + 1] - w[k]);
                                }
                                out.push(acc);
                            }
                            out
                        })
                    }
                    other => bail!("unknown regression target '{other}'"),
                };
            let fitted = fit_regression(&*target_fn, &cfg)?;
            let coeffs = fitted.to_sparse();
            let mut csv = String::from("word,value\n");
            for c in &coeffs {
                csv.push_str(&format!("{},{}\n", c.word, c.re));
            }
            emit(&output, serde_json::to_value(&coeffs)?, Some(csv))
        }
        Command::Hedge {
            model,
            maturity,
            strike,
            put,
            asian,
            strategy,
            paths,
            mc_steps,
            seed,
            numerics,
            output,
        } => {
            let spec = load_spec(&model, maturity, numerics.order)?;
            let steps = mc_steps.unwrap_or(((252.0 * maturity).ceil() as usize).max(16));
            let mut strategies = Vec::new();
            for s in &strategy {
                if s == "sigvol" {
                    strategies.push(HedgeStrategy::SigVol);
                } else if let Some(vol) = s.strip_prefix("bs:") {
                    strategies.push(HedgeStrategy::BsDelta {
                        sigma: vol.parse().context("bad bs:<vol> strategy")?,
                    });
                } else if s == "oracle" {
                    // explicit Stein-Stein oracle read off the model config
                    let cfg = ModelConfig::from_path(&model)?;
                    match cfg {
                        ModelConfig::Ou { params, rho, .. } => {
                            strategies.push(HedgeStrategy::SteinStein {
                                params: sigvol::oracles::SteinSteinOracle {
                                    kappa: params.kappa,
                                    theta: params.theta,
                                    eta: params.eta,
                                    rho,
                                },
                            })
                        }
                        _ => bail!("the oracle strategy needs an 'ou' model config"),
                    }
                } else {
                    bail!("unknown strategy '{s}' (use sigvol | bs:<vol> | oracle)");
                }
            }
            let cfg = HedgeConfig {
                n_paths: paths,
                seed,
                steps,
                pricing: numerics.pricing(),
            };
            let reports = if asian {
                hedge_asian(
                    &spec,
                    HedgeMarket::SigVol,
                    strike,
                    maturity,
                    put,
                    &strategies,
                    &cfg,
                )?
            } else {
                hedge_european(
                    &spec,
                    HedgeMarket::SigVol,
                    strike,
                    maturity,
                    put,
                    &strategies,
                    &cfg,
                )?
            };
            // per-path P&L goes to <out>.pnl.csv when requested
            if let Some(out) = &output.out {
                let mut pnl_path = out.clone();
                pnl_path.set_extension("pnl.csv");
                let mut f = std::fs::File::create(&pnl_path)?;
                let names: Vec<&str> =
                    reports.iter().map(|r| r.strategy.as_str()).collect();
                writeln!(f, "{}", names.join(","))?;
                for i in 0..paths {
                    let row: Vec<String> =
                        reports.iter().map(|r| format!("{}", r.pnl[i])).collect();
                    writeln!(f, "{}", row.join(","))?;
                }
            }
            let mut csv = String::from("strategy,x0,j_hat,se_j,mean_pnl\n");
            for r in &reports {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.strategy, r.x0, r.j_hat, r.se_j, r.mean_pnl
                ));
            }
            emit(&output, serde_json::to_value(&reports)?, Some(csv))
        }
        Command::Calibrate {
            data,
            order,
            sigma0,
            seed,
            generations,
            quad,
            ode_steps,
            output,
        } => {
            let report = load_slices(&data)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.slices.is_empty() {
                bail!("no usable quotes in {}", data.display());
            }
            let mut results = Vec::new();
            let mut csv = String::from("maturity_days,rho,loss,evaluations\n");
            for slice in &report.slices {
                let pricing = PricingConfig {
                    quad_nodes: quad,
                    riccati: RiccatiConfig {
                        ode_steps,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                let cfg = CalibrationConfig {
                    de: DeConfig {
                        seed,
                        max_generations: generations,
                        target_loss: 1e-9,
                        ..Default::default()
                    },
                    pricing,
                    ..CalibrationConfig::standard(order, sigma0, seed)
                };
                let res = calibrate_slice(slice, &cfg)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    res.maturity_days, res.rho, res.loss, res.evaluations
                ));
                results.push(serde_json::to_value(&res)?);
            }
            emit(&output, serde_json::Value::Array(results), Some(csv))
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SIGVOL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // numeric failures exit 1, configuration and usage problems 2
            let numeric = err.downcast_ref::<SigVolError>().map(|e| {
                matches!(
                    e,
                    SigVolError::BlowUp { .. }
                        | SigVolError::NonFiniteCharFun(_)
                        | SigVolError::PriceOutsideBounds { .. }
                        | SigVolError::ImpliedVolFailure(_)
                )
            });
            if numeric == Some(true) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
