//! The `pmm` command-line tool.
//!
//! Every subcommand writes its files atomically and prints a JSON summary to
//! stdout. On failure a JSON object `{"error": …, "kind": …}` is printed to
//! stderr and the exit status is nonzero.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::error_analysis::{mse_sweep, write_curves_csv, ModelLabel, MseCurve, SweepAxis};
use crate::filter::FilterState;
use crate::forecast::{forecast, forecast_path};
use crate::io::{format_number, read_paired_csv_file, write_atomic};
use crate::model::{PmmParams, ValidationReport};
use crate::oracle;
use crate::pipeline::{self, compare, empirical_params, FittedModel, DEFAULT_PERIODS};
use crate::simulate::{sample, RNG_ALGORITHM};

#[derive(Debug, Parser)]
#[command(name = "pmm", version, about = "Pairwise Markov model forecasting toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a trajectory and write it as CSV (t,x,y).
    Simulate(SimulateArgs),
    /// Theoretical MSE curves of the PMM and HMM forecasters.
    TheoreticalMse(TheoreticalArgs),
    /// Estimate a model from a CSV of paired series.
    Fit(FitArgs),
    /// Forecast the hidden series from the last n observations.
    Forecast(ForecastArgs),
    /// Standardized MSE table of the fitted PMM against its HMM restriction.
    Evaluate(EvaluateArgs),
    /// Brute-force conditional of X_{n+k} given Y_1:n (debugging aid).
    #[command(hide = true)]
    Oracle(OracleArgs),
}

/// Built-in parameter sets and grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// a=0.9, b=-0.2, c=ab², d=ab, e=ab-0.4; filtering sweep over n.
    Fig2,
    /// Fig2 parameters; horizon sweep for n = 1, 5, 10.
    Fig3,
    /// Fig2 with d=ab-0.2; filtering sweep over n.
    Fig4,
    /// Fig4 parameters; horizon sweep for n = 1, 5, 10.
    Fig5,
}

impl Preset {
    pub fn params(self) -> PmmParams {
        let (a, b) = (0.9, -0.2);
        let ab = a * b;
        match self {
            Preset::Fig2 | Preset::Fig3 => PmmParams::new(a, b, ab * b, ab, ab - 0.4),
            Preset::Fig4 | Preset::Fig5 => PmmParams::new(a, b, ab * b, ab - 0.2, ab - 0.4),
        }
    }

    pub fn hmm(self) -> PmmParams {
        PmmParams::hmm(0.9, -0.2).expect("preset HMM is admissible")
    }

    pub fn axis(self) -> SweepAxis {
        match self {
            Preset::Fig2 | Preset::Fig4 => SweepAxis::N,
            Preset::Fig3 | Preset::Fig5 => SweepAxis::K,
        }
    }

    pub fn n_grid(self) -> Vec<usize> {
        match self {
            Preset::Fig2 => (1..=100).collect(),
            Preset::Fig4 => (1..=200).collect(),
            Preset::Fig3 | Preset::Fig5 => vec![1, 5, 10],
        }
    }

    pub fn k_grid(self) -> Vec<usize> {
        match self {
            Preset::Fig2 | Preset::Fig4 => vec![0],
            Preset::Fig3 | Preset::Fig5 => (1..=30).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    N,
    K,
}

#[derive(Debug, Args)]
pub struct ParamSource {
    /// JSON file with {"a","b","c","d","e"} (or a fitted model file).
    #[arg(long, conflicts_with = "preset")]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ParamSource,
    /// Number of time steps.
    #[arg(long = "n", alias = "steps", default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TheoreticalArgs {
    #[command(flatten)]
    pub source: ParamSource,
    /// HMM forecaster parameters (defaults to the HMM with the true a, b).
    #[arg(long)]
    pub hmm_params: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sweep: Option<SweepArg>,
    /// Comma list or inclusive range `lo:hi`.
    #[arg(long)]
    pub n_grid: Option<String>,
    #[arg(long)]
    pub k_grid: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Remove the two-harmonic seasonal component from y before fitting.
    #[arg(long)]
    pub detrend: bool,
    /// Harmonic periods in samples, `p1,p2`.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PERIODS)]
    pub periods: Vec<f64>,
    /// Half-open 0-based row range `start:end` used for estimation.
    #[arg(long)]
    pub fit_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Emit every horizon 1..=k instead of only k.
    #[arg(long)]
    pub path: bool,
    /// Optional CSV (k,mean,variance,mean_original).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Half-open 0-based row range `start:end` of the test segment.
    #[arg(long)]
    pub test_range: Option<String>,
    #[arg(long, default_value = "5,20,50")]
    pub n_grid: String,
    #[arg(long, default_value = "10,24,48")]
    pub k_grid: String,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub source: ParamSource,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Observations y_1..y_n (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub observations: Vec<f64>,
}

/// Error carried to the process boundary, with an optional validation report.
#[derive(Debug)]
pub struct Failure {
    pub error: Error,
    pub report: Option<Box<ValidationReport>>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self {
            error,
            report: None,
        }
    }
}

impl Failure {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.error.to_string(), "kind": self.error.kind() });
        if let Some(r) = &self.report {
            v["report"] = serde_json::to_value(r).unwrap_or_default();
        }
        v
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `1,2,5` or an inclusive range `1:100`.
pub fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("invalid grid {s:?}"));
    let s = s.trim();
    let out: Vec<usize> = if let Some((lo, hi)) = s.split_once(':') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if out.is_empty() {
        return Err(Error::InvalidArgument("grid is empty".into()));
    }
    Ok(out)
}

fn parse_range(s: &str, len: usize) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("invalid range {s:?} (expected start:end)"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = if lo.trim().is_empty() { 0 } else { lo.trim().parse().map_err(|_| bad())? };
    let hi: usize = if hi.trim().is_empty() { len } else { hi.trim().parse().map_err(|_| bad())? };
    if lo >= hi || hi > len {
        return Err(Error::InvalidArgument(format!(
            "range {lo}:{hi} is not within 0:{len}"
        )));
    }
    Ok((lo, hi))
}

/// Reads either a bare parameter object or a fitted model's `params`.
pub fn read_params(path: &Path) -> Result<PmmParams> {
    let text = fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let inner = v.get("params").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner)?)
}

fn resolve_params(src: &ParamSource) -> CliResult<PmmParams> {
    let p = match (&src.params, src.preset) {
        (Some(path), _) => read_params(path)?,
        (None, Some(preset)) => preset.params(),
        (None, None) => {
            return Err(Error::InvalidArgument("either --params or --preset is required".into()).into())
        }
    };
    let report = p.validate();
    if !report.is_valid() {
        return Err(Failure {
            error: Error::InvalidParams(report.failures().join("; ")),
            report: Some(Box::new(report)),
        });
    }
    Ok(p)
}

fn read_model(path: &Path) -> Result<FittedModel> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn params_json(p: &PmmParams) -> serde_json::Value {
    json!({ "a": p.a, "b": p.b, "c": p.c, "d": p.d, "e": p.e })
}

pub fn run(cli: Cli) -> CliResult<serde_json::Value> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::TheoreticalMse(a) => cmd_theoretical_mse(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<serde_json::Value> {
    let p = resolve_params(&args.source)?;
    let traj = sample(&p, args.steps, args.seed)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    write_atomic(&args.output, &buf)?;
    log::info!("wrote {} steps to {}", traj.len(), args.output.display());
    let empirical = if traj.len() >= 2 {
        empirical_params(&traj.x, &traj.y).ok().map(|e| params_json(&e))
    } else {
        None
    };
    Ok(json!({
        "output": args.output,
        "steps": traj.len(),
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
        "params": params_json(&p),
        "empirical": empirical,
    }))
}

#[derive(Debug, Serialize)]
struct CurveSummary {
    sweep: String,
    max_ratio_hmm_over_pmm: f64,
    argmax: usize,
    max_relative_gain: f64,
}

fn summarize(curves: &[MseCurve]) -> Vec<CurveSummary> {
    curves
        .chunks(2)
        .filter(|c| c.len() == 2 && c[0].model_label == ModelLabel::Pmm)
        .map(|pair| {
            let mut best = (0usize, f64::NEG_INFINITY);
            let mut gain = f64::NEG_INFINITY;
            for (p, h) in pair[0].points.iter().zip(&pair[1].points) {
                let r = h.1 / p.1;
                if r > best.1 {
                    best = (p.0, r);
                }
                gain = gain.max((h.1 - p.1) / h.1);
            }
            CurveSummary {
                sweep: pair[0].sweep_label(),
                max_ratio_hmm_over_pmm: best.1,
                argmax: best.0,
                max_relative_gain: gain,
            }
        })
        .collect()
}

pub fn cmd_theoretical_mse(args: &TheoreticalArgs) -> CliResult<serde_json::Value> {
    let p_true = resolve_params(&args.source)?;
    let preset = args.source.preset.filter(|_| args.source.params.is_none());
    let p_hmm = match &args.hmm_params {
        Some(path) => read_params(path)?,
        None => p_true.hmm_restriction()?,
    };
    if !p_hmm.is_hmm(crate::model::HMM_TOL) {
        return Err(Error::NotHmm.into());
    }
    let axis = match (args.sweep, preset) {
        (Some(SweepArg::N), _) => SweepAxis::N,
        (Some(SweepArg::K), _) => SweepAxis::K,
        (None, Some(p)) => p.axis(),
        (None, None) => SweepAxis::N,
    };
    let n_grid = match (&args.n_grid, preset) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(p)) => p.n_grid(),
        (None, None) => (1..=100).collect(),
    };
    let k_grid = match (&args.k_grid, preset) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(p)) => p.k_grid(),
        (None, None) => vec![0],
    };
    let curves = mse_sweep(&p_true, &p_hmm, axis, &n_grid, &k_grid)?;
    let mut buf = Vec::new();
    write_curves_csv(&curves, &mut buf)?;
    write_atomic(&args.output, &buf)?;
    Ok(json!({
        "output": args.output,
        "params": params_json(&p_true),
        "hmm_params": params_json(&p_hmm),
        "curves": curves.len(),
        "summary": summarize(&curves),
    }))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<serde_json::Value> {
    let data = read_paired_csv_file(&args.input)?;
    let window = match &args.fit_range {
        Some(r) => parse_range(r, data.len())?,
        None => (0, data.len()),
    };
    if data.is_empty() {
        return Err(Error::InsufficientData("input has no rows".into()).into());
    }
    let periods = match args.periods.as_slice() {
        [p1, p2] => [*p1, *p2],
        _ => return Err(Error::InvalidArgument("--periods takes exactly two values".into()).into()),
    };
    let model = pipeline::fit_series(&data.x, &data.y, window, args.detrend.then_some(periods))?;
    let text = serde_json::to_string_pretty(&model).map_err(Error::from)?;
    write_atomic(&args.output, text.as_bytes())?;
    Ok(json!({
        "output": args.output,
        "params": params_json(&model.params),
        "repaired": model.repaired,
        "detrended": model.detrend.is_some(),
        "fit_window": model.fit_window,
    }))
}

pub fn cmd_forecast(args: &ForecastArgs) -> CliResult<serde_json::Value> {
    let model = read_model(&args.model)?;
    let data = read_paired_csv_file(&args.input)?;
    if args.n == 0 || args.n > data.len() {
        return Err(Error::InsufficientData(format!(
            "n = {} observations requested but the input has {}",
            args.n,
            data.len()
        ))
        .into());
    }
    let start = data.len() - args.n;
    let ys = model.prepare_y(&data.y[start..], start + 1);
    let tm = model.transition()?;
    let state = FilterState::run(&tm, &ys)?;
    let results = if args.path {
        forecast_path(&state, &tm, args.k)?
    } else {
        vec![forecast(&state, &tm, args.k)?]
    };
    if let Some(out) = &args.output {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "mean", "variance", "mean_original"]).map_err(Error::from)?;
        for r in &results {
            w.write_record([
                r.k.to_string(),
                format_number(r.mean),
                format_number(r.variance),
                format_number(model.x_standardize.invert(r.mean)),
            ])
            .map_err(Error::from)?;
        }
        let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_atomic(out, &buf)?;
    }
    let rows: Vec<_> = results
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "mean": format_number(r.mean),
                "variance": format_number(r.variance),
                "mean_original": format_number(model.x_standardize.invert(r.mean)),
            })
        })
        .collect();
    Ok(json!({
        "n": args.n,
        "filter_mean": format_number(state.mean),
        "filter_variance": format_number(state.variance),
        "forecasts": rows,
    }))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<serde_json::Value> {
    let model = read_model(&args.model)?;
    let data = read_paired_csv_file(&args.input)?;
    let (lo, hi) = match &args.test_range {
        Some(r) => parse_range(r, data.len())?,
        None => (0, data.len()),
    };
    let n_grid = parse_grid(&args.n_grid)?;
    let k_grid = parse_grid(&args.k_grid)?;
    let mut rows = Vec::new();
    for &n in &n_grid {
        for &k in &k_grid {
            rows.push(compare(&model, &data.x[lo..hi], &data.y[lo..hi], lo + 1, n, k)?);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "k", "mse_hmm", "mse_pmm"]).map_err(Error::from)?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            r.k.to_string(),
            format_number(r.mse_hmm),
            format_number(r.mse_pmm),
        ])
        .map_err(Error::from)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&args.output, &buf)?;
    Ok(json!({
        "output": args.output,
        "test_range": [lo, hi],
        "rows": rows,
    }))
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<serde_json::Value> {
    let p = resolve_params(&args.source)?;
    let c = oracle::forecast_conditional(&p, args.n, args.k)?;
    let mean = if args.observations.is_empty() {
        None
    } else if args.observations.len() == args.n {
        Some(c.weights.iter().zip(&args.observations).map(|(w, y)| w * y).sum::<f64>())
    } else {
        return Err(Error::InvalidArgument(format!(
            "expected {} observations, got {}",
            args.n,
            args.observations.len()
        ))
        .into());
    };
    Ok(json!({
        "n": args.n,
        "k": args.k,
        "weights": c.weights,
        "variance": c.variance,
        "mean": mean,
    }))
}

/// Process entry point; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if e.use_stderr() {
                let msg = json!({ "error": e.to_string(), "kind": "usage" });
                eprintln!("{msg}");
            } else {
                let _ = e.print();
            }
            return code;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            1
        }
    }
}
