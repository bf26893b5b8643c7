//! `sublab`: classify maps and Riemannian submersions as harmonic or
//! biharmonic, and run the geometry self-checks.
//!
//! Exit status: 0 when a verdict (or validation summary) was computed, 2 on a
//! config error, 3 when the model cannot be built, 1 on any other failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sublab::classify::{oracle_map, sample_points};
use sublab::config::RunConfig;
use sublab::report::{render, run_model, write_atomic, ReportFormat, SuiteResult, SuiteStatus};
use sublab::validate::{self_validate_with, ValidateOptions};
use sublab::zoo::{BuiltModel, ModelSpec, ParamValue};
use sublab::Error;

#[derive(Parser, Debug)]
#[command(name = "sublab", version, about = "Harmonic and biharmonic checks for maps and Riemannian submersions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a model and print its verdict and suite results.
    Check(RunArgs),
    /// Print the tension field at the sample points.
    Tension(RunArgs),
    /// Print the bitension field at the sample points.
    Bitension(RunArgs),
    /// Run the invariant suites over the model zoo.
    Validate(ValidateArgs),
    /// Classify a model and emit the full report.
    Report(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Zoo model id.
    #[arg(long, conflicts_with = "config")]
    model: Option<String>,
    /// Model parameter, repeatable.
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    params: Vec<(String, ParamValue)>,
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    points: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long = "tol-h")]
    tol_h: Option<f64>,
    #[arg(long = "tol-b")]
    tol_b: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Leave the timestamp out of the report.
    #[arg(long)]
    no_timestamp: bool,
    /// Write the output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_name = "N", default_value_t = 10)]
    points: usize,
    #[arg(long, value_name = "S", default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, ParamValue), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got `{s}`"))?;
    if k.trim().is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    Ok((k.trim().to_string(), ParamValue::from_cli(v)))
}

/// A failure with the exit status it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Failure { code: 2, error }
    }

    fn build(error: Error) -> Self {
        Failure { code: 3, error }
    }

    fn other(error: Error) -> Self {
        Failure { code: 1, error }
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match (&args.config, &args.model) {
        (Some(path), _) => RunConfig::from_path(path).map_err(Failure::config)?,
        (None, Some(id)) => RunConfig::for_model(ModelSpec { id: id.clone(), params: Default::default() }),
        (None, None) => return Err(Failure::config(Error::Config("give --model or --config".into()))),
    };
    if !args.params.is_empty() {
        let spec = cfg
            .model
            .as_mut()
            .ok_or_else(|| Failure::config(Error::Config("--param needs a zoo model".into())))?;
        spec.params.extend(args.params.iter().cloned());
    }
    if let Some(n) = args.points {
        cfg.sampling.points = n;
    }
    if let Some(s) = args.seed {
        cfg.sampling.seed = s;
    }
    if let Some(t) = args.tol_h {
        cfg.tolerances.tol_h = t;
    }
    if let Some(t) = args.tol_b {
        cfg.tolerances.tol_b = t;
    }
    if args.no_timestamp {
        cfg.output.timestamp = false;
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(path) => write_atomic(path, text).map_err(Failure::other),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::other(e.into()))
        }
    }
}

fn coord_names(model: &BuiltModel) -> Vec<String> {
    model.sample_chart().names().to_vec()
}

fn suite_line(s: &SuiteResult) -> String {
    let status = match s.status {
        SuiteStatus::Pass => "pass",
        SuiteStatus::Fail => "FAIL",
        SuiteStatus::Finding => "info",
    };
    let tol = s.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
    format!("  {status:<4} {:<28} {:.3e}{tol}  {}", s.name, s.worst, s.detail)
}

fn check(args: &RunArgs, full_report: bool) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let model = cfg.build().map_err(Failure::build)?;
    let report = run_model(&cfg, &model).map_err(Failure::other)?;
    let format: ReportFormat = args.format.into();
    let rendered = render(&report, format, &coord_names(&model)).map_err(Failure::other)?;
    if full_report {
        let configured = match format {
            ReportFormat::Json => cfg.output.json.as_ref(),
            ReportFormat::Csv => cfg.output.csv.as_ref(),
        };
        return emit(&rendered, args.output.as_ref().or(configured));
    }
    if let Some(path) = &cfg.output.json {
        write_atomic(path, &render(&report, ReportFormat::Json, &[]).map_err(Failure::other)?).map_err(Failure::other)?;
    }
    if let Some(path) = &cfg.output.csv {
        let csv = render(&report, ReportFormat::Csv, &coord_names(&model)).map_err(Failure::other)?;
        write_atomic(path, &csv).map_err(Failure::other)?;
    }
    if let Some(path) = &args.output {
        write_atomic(path, &rendered).map_err(Failure::other)?;
    }
    let verdict = report.verdict.map_or_else(|| "none".to_string(), |v| v.to_string());
    let mut text = format!(
        "model {} ({} points, seed {}): {verdict}\n  max ‖τ‖ {:.3e}, max ‖τ₂‖ {:.3e}, tol_h {:e}, tol_b {:e}\n",
        report.header.model,
        report.records.len(),
        report.header.seed,
        report.summary.max_tau,
        report.summary.max_tau2,
        report.header.tolerances.tol_h,
        report.header.tolerances.tol_b,
    );
    if let Some(v) = report.header.sign_variant {
        text.push_str(&format!("  reduced bitension sign variant: {v:?}\n"));
    }
    for s in &report.suites {
        text.push_str(&suite_line(s));
        text.push('\n');
    }
    emit(&text, None)
}

/// `tension` / `bitension`: the field and its norm at each sample point.
fn fields(args: &RunArgs, bitension: bool) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let model = cfg.build().map_err(Failure::build)?;
    let map = oracle_map(&model).map_err(Failure::build)?;
    let points = sample_points(&map, &cfg.sampler()).map_err(Failure::other)?;
    let mut rows = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let mp = map.at(p).map_err(Failure::other)?;
        let value: Vec<f64> = if bitension {
            mp.bitension().map_err(Failure::other)?.value
        } else {
            sublab::jet::values(&mp.tension().map_err(Failure::other)?.value)
        };
        let norm = mp.norm_f64(&value);
        rows.push((i, p.clone(), value, norm));
    }
    let field = if bitension { "bitension" } else { "tension" };
    let text = match args.format {
        Format::Json => {
            let list: Vec<serde_json::Value> = rows
                .iter()
                .map(|(i, p, v, n)| serde_json::json!({ "index": i, "point": p, field: v, "norm": n }))
                .collect();
            let doc = serde_json::json!({
                "model": cfg.model_label().0,
                "params": model.params,
                "seed": cfg.sampling.seed,
                "field": field,
                "points": list,
            });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::other(Error::Io(e.to_string())))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("index");
            for c in coord_names(&model) {
                s.push_str(&format!(",{c}"));
            }
            for c in map.codomain.chart.names() {
                s.push_str(&format!(",{field}_{c}"));
            }
            s.push_str(",norm\n");
            for (i, p, v, n) in &rows {
                s.push_str(&i.to_string());
                for x in p.iter().chain(v) {
                    s.push_str(&format!(",{x:.16e}"));
                }
                s.push_str(&format!(",{n:.16e}\n"));
            }
            s
        }
    };
    emit(&text, args.output.as_ref())
}

fn validate(args: &ValidateArgs) -> Result<bool, Failure> {
    let opts = ValidateOptions { points: args.points, seed: args.seed, corrupt_christoffel: false };
    let summary = self_validate_with(&opts).map_err(Failure::other)?;
    let text = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&summary).map_err(|e| Failure::other(Error::Io(e.to_string())))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("suite,status,worst,tolerance\n");
            for r in &summary.suites {
                let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let tol = r.tolerance.map(|t| format!("{t:.16e}")).unwrap_or_default();
                s.push_str(&format!("{},{status},{:.16e},{tol}\n", r.name, r.worst));
            }
            s
        }
    };
    emit(&text, args.output.as_ref())?;
    if args.output.is_some() {
        for s in &summary.suites {
            eprintln!("{}", suite_line(s));
        }
    }
    Ok(summary.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => check(a, false).map(|_| true),
        Command::Report(a) => check(a, true).map(|_| true),
        Command::Tension(a) => fields(a, false).map(|_| true),
        Command::Bitension(a) => fields(a, true).map(|_| true),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("sublab: some validation suites failed");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("sublab: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
