//! The `mlsm` command pipeline: fit-vix, fit-returns, calibrate, price, pwf
//! and simulate. Each command writes a [`ResultDocument`] and, optionally, a
//! CSV artifact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mlsm::calibration::{self, calibrate, default_free, price_residuals, rmse, OptionChain};
use mlsm::inference::{fit_ecf, fit_ig_mle, gof_report, gof_report_with, ig_cdf, default_starts, EcfGrid, GofReport};
use mlsm::io::{self, IgDoc, Parameters, ParamsDoc, ResultDocument, RunConfig};
use mlsm::model::ModelKind;
use mlsm::pwf::{implied_pwf, shape_report, uniform_grid};
use mlsm::reparam::{jittered_starts, Param, ParamSpace};
use mlsm::simulator::{sample_model, RngSeed};
use mlsm::transform::{model_call_prices, model_distribution, put_from_parity, GridSpec, Measure};
use mlsm::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "mlsm", version, about = "Mixed Levy subordinated market model pipeline")]
pub struct Cli {
    /// TOML run configuration; flags win over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inverse Gaussian MLE on a volatility-index series.
    FitVix(FitVixArgs),
    /// ECF fit of the return model to daily log returns.
    FitReturns(FitReturnsArgs),
    /// Risk-neutral calibration to an option chain.
    Calibrate(CalibrateArgs),
    /// Carr–Madan call and put prices.
    Price(PriceArgs),
    /// Implied probability weighting between spot and option laws.
    Pwf(PwfArgs),
    /// Draws log returns from the model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Result document path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV artifact path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitVixArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Multiplier from index points to subordinator units.
    #[arg(long)]
    pub scale: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FitReturnsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "blm")]
    pub model: ModelKind,
    /// `(h, l)` source for the MLSM: a fit-vix result or a parameter file.
    #[arg(long)]
    pub ig: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the fitted parameters as a flat parameter file.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub s0: Option<f64>,
    /// Annualized rate.
    #[arg(long)]
    pub r: Option<f64>,
    /// Starting parameters (parameter file or result document).
    #[arg(long)]
    pub start: PathBuf,
    /// Comma-separated free parameters; the model's default set when absent.
    #[arg(long, value_delimiter = ',')]
    pub free: Option<Vec<Param>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Maturity in trading days.
    #[arg(long)]
    pub expiry_days: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub strikes: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PwfArgs {
    #[arg(long)]
    pub spot_params: PathBuf,
    #[arg(long)]
    pub rn_params: PathBuf,
    /// Annualized rate of the risk-neutral law (0 when absent).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub horizon_days: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub horizon_days: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// result document already written to its destination.
pub fn run_command<I, T>(argv: I) -> Result<ResultDocument>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<ResultDocument> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let (doc, output) = match &cli.command {
        Command::FitVix(a) => (fit_vix(a, &cfg)?, &a.output),
        Command::FitReturns(a) => (fit_returns(a, &cfg)?, &a.output),
        Command::Calibrate(a) => (calibrate_cmd(a, &cfg)?, &a.output),
        Command::Price(a) => (price(a, &cfg)?, &a.output),
        Command::Pwf(a) => (pwf(a, &cfg)?, &a.output),
        Command::Simulate(a) => (simulate(a, &cfg)?, &a.output),
    };
    let text = doc.0.to_json()?;
    match &output.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let (Some(p), Some(csv)) = (&output.csv, doc.1) {
        fs::write(p, csv)?;
    }
    Ok(doc.0)
}

type Produced = (ResultDocument, Option<Vec<u8>>);

/// Output paths may not coincide with inputs or with each other.
fn check_paths(inputs: &[&Path], outputs: &[Option<&PathBuf>]) -> Result<()> {
    let outs: Vec<&PathBuf> = outputs.iter().flatten().copied().collect();
    let same = |a: &Path, b: &Path| match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    };
    for (i, o) in outs.iter().enumerate() {
        if let Some(inp) = inputs.iter().find(|p| same(p, o)) {
            return Err(Error::Config(format!("conflicting flags: output {} would overwrite input {}", o.display(), inp.display())));
        }
        if outs[..i].iter().any(|p| same(p, o)) {
            return Err(Error::Config(format!("conflicting flags: {} given for two outputs", o.display())));
        }
    }
    Ok(())
}

fn market(s0: Option<f64>, r: Option<f64>, cfg: &RunConfig) -> Result<(f64, f64)> {
    let s0 = s0.or(cfg.market.s0).ok_or_else(|| Error::Config("--s0 (or market.s0) is required".into()))?;
    let r = r.or(cfg.market.r).ok_or_else(|| Error::Config("--r (or market.r) is required".into()))?;
    if !(s0 > 0.0 && s0.is_finite()) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("need s0 > 0 and finite r, got {s0}, {r}")));
    }
    Ok((s0, r))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_csv(&mut buf, header, rows)?;
    Ok(buf)
}

fn gof_summary(g: &GofReport) -> serde_json::Value {
    json!({ "n": g.n, "ks_stat": g.ks_stat, "ks_pvalue": g.ks_pvalue, "pit_ks_pvalue": g.pit_ks_pvalue })
}

fn pp_csv(g: &GofReport) -> Result<Vec<u8>> {
    // pit values are in input order, pp points in sorted order
    let mut pit = g.pit_values.clone();
    pit.sort_by(f64::total_cmp);
    csv_bytes(
        &["empirical_cdf", "model_cdf", "sorted_pit"],
        g.pp_points.iter().zip(&pit).map(|((e, m), u)| vec![num(*e), num(*m), num(*u)]),
    )
}

fn fit_vix(a: &FitVixArgs, cfg: &RunConfig) -> Result<Produced> {
    check_paths(&[&a.input], &[a.output.out.as_ref(), a.output.csv.as_ref()])?;
    let scale = a.scale.unwrap_or(cfg.vix_scale);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("--scale must be > 0, got {scale}")));
    }
    let vix = io::load_vix(&a.input)?;
    let ig = fit_ig_mle(&vix, scale)?;
    let scaled: Vec<f64> = vix.levels.iter().map(|v| v * scale).collect();
    let g = gof_report_with(&scaled, |x| ig_cdf(x, ig.h, ig.l))?;
    let mut doc = ResultDocument::new("fit-vix");
    doc.add_input(&a.input)?;
    doc.parameters = Some(Parameters::Ig(IgDoc { h: ig.h, l: ig.l }));
    doc.diagnostics = json!({ "scale": scale, "gof": gof_summary(&g) });
    Ok((doc, Some(pp_csv(&g)?)))
}

fn fit_returns(a: &FitReturnsArgs, cfg: &RunConfig) -> Result<Produced> {
    let mut inputs = vec![a.input.as_path()];
    if let Some(p) = &a.ig {
        inputs.push(p);
    }
    check_paths(&inputs, &[a.output.out.as_ref(), a.output.csv.as_ref(), a.params_out.as_ref()])?;
    let ig = match (a.model, &a.ig) {
        (ModelKind::Mlsm, Some(p)) => Some(io::load_ig(p)?),
        (ModelKind::Mlsm, None) => return Err(Error::Config("--model mlsm needs --ig".into())),
        (ModelKind::Blm, Some(_)) => return Err(Error::Config("conflicting flags: --ig only applies to --model mlsm".into())),
        (ModelKind::Blm, None) => None,
    };
    let series = io::load_returns(&a.input)?;
    let mut opts = cfg.ecf_options();
    if let Some(s) = a.seed {
        opts.seed = s;
    }
    let data = &series.values;
    let radius = match cfg.ecf.radius {
        Some(r) => r,
        None => EcfGrid::adaptive(data)?.radius(),
    };
    let grid = EcfGrid::with_radius(radius, cfg.ecf.grid_points)?;
    let starts = default_starts(data, a.model, ig, &opts)?;
    let fit = fit_ecf(data, a.model, ig, &starts, Some(grid), &opts)?;
    let dist = model_distribution(&fit.params, 1.0, Measure::Physical, cfg.fft.density_n, cfg.fft.density_sds)?;
    let g = gof_report(data, &dist)?;
    let p = fit.params;
    let mut doc = ResultDocument::new("fit-returns");
    for i in &inputs {
        doc.add_input(i)?;
    }
    doc.parameters = Some(Parameters::Model(ParamsDoc::from(&p)));
    doc.diagnostics = json!({
        "model": a.model.to_string(),
        "seed": opts.seed,
        "ecf_objective": fit.objective,
        "log_likelihood": fit.log_likelihood,
        "grid_radius": fit.grid_radius,
        "starts": fit.candidates.len(),
        "converged_starts": fit.candidates.iter().filter(|c| c.converged).count(),
        "identified": {
            "alpha_over_sigma": p.nig().alpha / p.sigma(),
            "beta_over_sigma": p.nig().beta / p.sigma(),
            "d_times_sigma": p.nig().d * p.sigma(),
            "location": p.mu() + p.nig().m * p.sigma(),
        },
        "mean": p.mean(),
        "variance": p.variance(),
        "gof": gof_summary(&g),
    });
    if let Some(po) = &a.params_out {
        fs::write(po, io::params_to_json(&p)? + "\n")?;
    }
    Ok((doc, Some(pp_csv(&g)?)))
}

fn calibrate_cmd(a: &CalibrateArgs, cfg: &RunConfig) -> Result<Produced> {
    check_paths(&[&a.chain, &a.start], &[a.output.out.as_ref(), a.output.csv.as_ref(), a.params_out.as_ref()])?;
    let (s0, r) = market(a.s0, a.r, cfg)?;
    let start = io::load_params(&a.start)?;
    let chain = io::load_chain(&a.chain, s0, r)?;
    let (screened, dropped) = chain.screen();
    for d in &dropped {
        log::warn!("quote {} (K={}, expiry {}) dropped: {}", d.index, d.quote.strike, d.quote.expiry, d.reason);
    }
    let free: Vec<Param> = match &a.free {
        Some(f) => f.clone(),
        None => default_free(start.kind()).to_vec(),
    };
    if free.is_empty() {
        return Err(Error::Config("--free lists no parameters".into()));
    }
    let space = ParamSpace::new(start, &free, start.variance().sqrt().max(1e-12))?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let starts = jittered_starts(&space, &start, cfg.optimizer.calibration_starts, cfg.optimizer.calibration_jitter, seed);
    let opts = cfg.calibration_options();
    let res = calibrate(&screened, &starts, &free, &opts)?;
    let resid = price_residuals(&res.params, &screened, opts.damping, &opts.fft)?;
    let mut doc = ResultDocument::new("calibrate");
    doc.add_input(&a.chain)?;
    doc.add_input(&a.start)?;
    doc.parameters = Some(Parameters::Model(ParamsDoc::from(&res.params)));
    doc.diagnostics = json!({
        "s0": s0,
        "r": r,
        "free": free.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "seed": seed,
        "rmse": res.rmse,
        "rmse_check": rmse(&resid),
        "n_quotes_used": res.n_quotes_used,
        "dropped": dropped.iter().map(|d| json!({ "row": d.index, "strike": d.quote.strike, "reason": d.reason })).collect::<Vec<_>>(),
        "converged": res.converged,
        "start_rmse": res.start_rmse,
        "objective_trace": res.objective_trace,
    });
    if let Some(po) = &a.params_out {
        fs::write(po, io::params_to_json(&res.params)? + "\n")?;
    }
    let csv = residual_csv(&screened, &resid)?;
    Ok((doc, Some(csv)))
}

fn residual_csv(chain: &OptionChain, resid: &[f64]) -> Result<Vec<u8>> {
    csv_bytes(
        &["expiry_date", "strike", "mid", "model", "residual"],
        chain.quotes.iter().zip(resid).map(|(q, e)| {
            vec![q.expiry.to_string(), num(q.strike), num(q.mid), num(q.mid + e), num(*e)]
        }),
    )
}

fn price(a: &PriceArgs, cfg: &RunConfig) -> Result<Produced> {
    check_paths(&[&a.params], &[a.output.out.as_ref(), a.output.csv.as_ref()])?;
    let (s0, r_ann) = market(a.s0, a.r, cfg)?;
    if !(a.expiry_days > 0.0 && a.expiry_days.is_finite()) {
        return Err(Error::InvalidParameter(format!("--expiry-days must be > 0, got {}", a.expiry_days)));
    }
    if let Some(k) = a.strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidParameter(format!("strike must be > 0, got {k}")));
    }
    let model = io::load_params(&a.params)?;
    let r = calibration::daily_rate(r_ann);
    let spec = GridSpec { n: cfg.fft.n, eta: cfg.fft.eta, x_center: 0.0 };
    let calls = model_call_prices(&model, r, s0, a.expiry_days, &a.strikes, cfg.damping, &spec)?;
    let puts: Vec<f64> = a.strikes.iter().zip(&calls).map(|(k, c)| put_from_parity(*c, s0, *k, r, a.expiry_days)).collect();
    let mut doc = ResultDocument::new("price");
    doc.add_input(&a.params)?;
    doc.parameters = Some(Parameters::Model(ParamsDoc::from(&model)));
    doc.diagnostics = json!({
        "s0": s0, "r": r_ann, "expiry_days": a.expiry_days, "damping": cfg.damping,
        "strikes": a.strikes, "calls": calls, "puts": puts,
    });
    let csv = csv_bytes(
        &["strike", "call", "put"],
        a.strikes.iter().zip(calls.iter().zip(&puts)).map(|(k, (c, p))| vec![num(*k), num(*c), num(*p)]),
    )?;
    Ok((doc, Some(csv)))
}

fn pwf(a: &PwfArgs, cfg: &RunConfig) -> Result<Produced> {
    check_paths(&[&a.spot_params, &a.rn_params], &[a.output.out.as_ref(), a.output.csv.as_ref()])?;
    let t = a.horizon_days.unwrap_or(cfg.pwf.horizon_days);
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("--horizon-days must be > 0, got {t}")));
    }
    let r_ann = a.r.or(cfg.market.r).unwrap_or(0.0);
    let spot = io::load_params(&a.spot_params)?;
    let rn = io::load_params(&a.rn_params)?;
    let (n, sds) = (cfg.fft.density_n, cfg.fft.density_sds);
    let f_r = model_distribution(&spot, t, Measure::Physical, n, sds)?;
    let f_s = model_distribution(&rn, t, Measure::RiskNeutral { r: calibration::daily_rate(r_ann) }, n, sds)?;
    let curve = implied_pwf(&f_r, &f_s, &uniform_grid(cfg.pwf.grid_points))?;
    let shape = shape_report(&curve)?;
    let mut doc = ResultDocument::new("pwf");
    doc.add_input(&a.spot_params)?;
    doc.add_input(&a.rn_params)?;
    doc.diagnostics = json!({
        "horizon_days": t,
        "r": r_ann,
        "spot": ParamsDoc::from(&spot),
        "risk_neutral": ParamsDoc::from(&rn),
        "max_repair": curve.w.iter().zip(&curve.w_raw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        "inverse_s": shape.is_inverse_s(),
        "shape": shape,
    });
    let csv = csv_bytes(
        &["u", "w", "w_raw"],
        (0..curve.u.len()).map(|i| vec![num(curve.u[i]), num(curve.w[i]), num(curve.w_raw[i])]),
    )?;
    Ok((doc, Some(csv)))
}

fn simulate(a: &SimulateArgs, cfg: &RunConfig) -> Result<Produced> {
    check_paths(&[&a.params], &[a.output.out.as_ref(), a.output.csv.as_ref()])?;
    if a.n == 0 {
        return Err(Error::InvalidParameter("--n must be >= 1".into()));
    }
    let model = io::load_params(&a.params)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let batch = sample_model(&model, a.horizon_days, a.n, RngSeed(seed))?;
    let n = batch.values.len() as f64;
    let mean = batch.values.iter().sum::<f64>() / n;
    let var = batch.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let mut doc = ResultDocument::new("simulate");
    doc.add_input(&a.params)?;
    doc.parameters = Some(Parameters::Model(ParamsDoc::from(&model)));
    doc.diagnostics = json!({
        "seed": seed, "n": a.n, "horizon_days": a.horizon_days,
        "sample_mean": mean, "sample_variance": var,
        "model_mean": model.mean() * a.horizon_days, "model_variance": model.variance() * a.horizon_days,
    });
    let csv = csv_bytes(&["path", "log_return"], batch.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]))?;
    Ok((doc, Some(csv)))
}

/// Machine-readable error line printed on stderr.
pub fn error_json(e: &Error) -> String {
    json!({ "error": { "category": e.category(), "message": e.to_string() } }).to_string()
}
