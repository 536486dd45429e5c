//! `relay-dde`: simulate, classify and analyse the relay delay equation.
//!
//! Exit status: 0 on success, 1 on a computational failure, 2 on invalid
//! input, 3 when `tables` reports a failing row.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use relay_dde::analysis::{self, AnalysisError, Range, ScanBox, Status};
use relay_dde::exact::ExactError;
use relay_dde::model::ModelError;
use relay_dde::numeric::{self, NumericError};
use relay_dde::{classify, propagate, ConstantHistory, Params, Profile, Smoothing};

/// Relative `--output` paths are resolved against this directory when set.
const OUTPUT_DIR_ENV: &str = "RELAY_DDE_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "relay-dde",
    version,
    about = "Periodic solutions of x'(t) = a(t) f(x(t - 1))"
)]
struct Cli {
    /// Flat TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    p2: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solution from a constant history: breakpoints of the exact solution
    /// when delta = 0, integrator samples otherwise.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Constant history on [-1, 0].
        #[arg(long, allow_negative_numbers = true)]
        h: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long)]
        profile: Option<Profile>,
        /// Final time; four coefficient periods by default.
        #[arg(long, allow_negative_numbers = true)]
        t_end: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        step: Option<f64>,
        /// Keep every n-th integrator sample.
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form verdicts checked against the exact propagator (JSON).
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Regression against the embedded parameter tables.
    Tables {
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classification over a grid of parameters.
    Scan {
        #[command(flatten)]
        params: ParamArgs,
        /// Relative half-width of the box around the given parameters.
        #[arg(long, default_value_t = 0.1)]
        rel: f64,
        /// Points per axis: one value for all axes or four comma-separated values.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        resolution: Vec<usize>,
        /// Explicit range LO:HI overriding the box for a1.
        #[arg(long)]
        a1_range: Option<String>,
        #[arg(long)]
        a2_range: Option<String>,
        #[arg(long)]
        p1_range: Option<String>,
        #[arg(long)]
        p2_range: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smoothed-versus-exact deviation for a decreasing list of deltas.
    Smooth {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_negative_numbers = true)]
        h: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.025,0.0125")]
        deltas: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Unstable Type I orbit paired with the stable orbit of the dual system.
    Coexist {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    a1: Option<f64>,
    a2: Option<f64>,
    p1: Option<f64>,
    p2: Option<f64>,
    h: Option<f64>,
    delta: Option<f64>,
    profile: Option<Profile>,
    t_end: Option<f64>,
    step: Option<f64>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Compute(String),
    RegressionFailed { failed: usize, total: usize },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::RegressionFailed { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::RegressionFailed { failed, total } => {
                write!(f, "{failed} of {total} table rows FAIL")
            }
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::ZeroHistory | ExactError::BadHorizon { .. } => {
                CliError::Invalid(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<NumericError> for CliError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::Model(m) => m.into(),
            NumericError::Exact(x) => x.into(),
            NumericError::StepTooLarge { .. }
            | NumericError::BadGrid { .. }
            | NumericError::NotUnstable(_)
            | NumericError::EpsOutOfRange(_) => CliError::Invalid(e.to_string()),
            NumericError::NonFiniteState(_) | NumericError::ShapeLost { .. } => {
                CliError::Compute(e.to_string())
            }
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(m) => m.into(),
            AnalysisError::Exact(x) => x.into(),
            AnalysisError::Numeric(n) => n.into(),
            AnalysisError::PairingFailed { ref report, .. } => {
                let detail = report
                    .as_ref()
                    .and_then(|r| serde_json::to_string(r).ok())
                    .map_or_else(String::new, |j| format!("\n{j}"));
                CliError::Compute(format!("{e}{detail}"))
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

struct Settings {
    file: FileConfig,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            None => FileConfig::default(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Invalid(format!("config {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Invalid(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Settings { file })
    }

    fn params(&self, args: &ParamArgs) -> Result<Params, CliError> {
        let f = &self.file;
        Ok(Params::new(
            required("a1", args.a1.or(f.a1))?,
            required("a2", args.a2.or(f.a2))?,
            required("p1", args.p1.or(f.p1))?,
            required("p2", args.p2.or(f.p2))?,
        )?)
    }

    fn format(
        &self,
        out: &OutputArgs,
        default: Format,
        allowed: &[Format],
    ) -> Result<Format, CliError> {
        let format = out.format.or(self.file.format).unwrap_or(default);
        if allowed.contains(&format) {
            Ok(format)
        } else {
            Err(CliError::Invalid(
                format!("--format {format:?} is not supported here").to_lowercase(),
            ))
        }
    }

    fn writer(&self, out: &OutputArgs) -> Result<Box<dyn Write>, CliError> {
        match out.output.as_ref().or(self.file.output.as_ref()) {
            None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
            Some(path) => {
                let path = resolve_output(path);
                let file = File::create(&path)
                    .map_err(|e| CliError::Invalid(format!("--output {}: {e}", path.display())))?;
                Ok(Box::new(BufWriter::new(file)))
            }
        }
    }
}

fn required(name: &str, value: Option<f64>) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Invalid(format!("missing --{name}")))
}

fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn parse_range(axis: &str, text: &str) -> Result<Range, CliError> {
    let bad = || CliError::Invalid(format!("--{axis}-range expects LO:HI, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok(Range::new(
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn write_json<T: Serialize>(mut w: Box<dyn Write>, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let file = &settings.file;
    match cli.command {
        Command::Simulate {
            params,
            h,
            delta,
            profile,
            t_end,
            step,
            thin,
            out,
        } => {
            let params = settings.params(&params)?;
            let h = required("h", h.or(file.h))?;
            let delta = delta.or(file.delta).unwrap_or(0.0);
            let profile = profile.or(file.profile).unwrap_or_default();
            let smoothing = Smoothing::new(delta, profile)?;
            let t_end = t_end.or(file.t_end).unwrap_or(4.0 * params.period());
            let format = settings.format(&out, Format::Csv, &[Format::Csv, Format::Json])?;
            if smoothing.is_discontinuous() {
                let path = propagate(&params, ConstantHistory::new(h)?, t_end)?;
                let mut w = settings.writer(&out)?;
                match format {
                    Format::Csv => {
                        path.write_csv(&mut w)?;
                        w.flush()?;
                    }
                    _ => write_json(w, &path.to_json())?,
                }
            } else {
                let step = step
                    .or(file.step)
                    .unwrap_or_else(|| numeric::default_step(delta));
                let sol = numeric::integrate(&params, &smoothing, h, t_end, step)?;
                let mut w = settings.writer(&out)?;
                match format {
                    Format::Csv => {
                        sol.write_csv(&mut w, thin)?;
                        w.flush()?;
                    }
                    _ => {
                        let samples: Vec<_> = sol.samples().iter().step_by(thin.max(1)).collect();
                        write_json(
                            w,
                            &json!({
                                "start_time": sol.start_time(),
                                "end_time": sol.end_time(),
                                "step": sol.step(),
                                "history": sol.history(),
                                "event_times": sol.event_times(),
                                "samples": samples,
                            }),
                        )?
                    }
                }
            }
        }
        Command::Classify { params, out } => {
            let params = settings.params(&params)?;
            settings.format(&out, Format::Json, &[Format::Json])?;
            write_json(settings.writer(&out)?, &classify(&params))?;
        }
        Command::Tables { out } => {
            let format = settings.format(
                &out,
                Format::Text,
                &[Format::Text, Format::Json, Format::Csv],
            )?;
            let outcomes = analysis::reproduce_tables();
            let mut w = settings.writer(&out)?;
            match format {
                Format::Text => {
                    w.write_all(analysis::format_table_report(&outcomes).as_bytes())?;
                    w.flush()?;
                }
                Format::Json => write_json(w, &outcomes)?,
                Format::Csv => {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record([
                        "table",
                        "row",
                        "a1",
                        "a2",
                        "p1",
                        "p2",
                        "printed",
                        "computed",
                        "period",
                        "value_ok",
                        "period_ok",
                        "validated",
                        "status",
                    ])?;
                    for o in &outcomes {
                        let p = &o.row.params;
                        c.write_record([
                            o.row.table.to_string(),
                            o.row.row.to_string(),
                            p.a1().to_string(),
                            p.a2().to_string(),
                            p.p1().to_string(),
                            p.p2().to_string(),
                            o.row.h_star_expected.to_string(),
                            o.h_star.map_or_else(String::new, |h| h.to_string()),
                            o.period.to_string(),
                            o.value_ok.to_string(),
                            o.period_ok.to_string(),
                            o.validated.to_string(),
                            o.status.to_string(),
                        ])?;
                    }
                    c.flush()?;
                }
            }
            let failed = outcomes.iter().filter(|o| o.status == Status::Fail).count();
            if failed > 0 {
                return Err(CliError::RegressionFailed {
                    failed,
                    total: outcomes.len(),
                });
            }
        }
        Command::Scan {
            params,
            rel,
            resolution,
            a1_range,
            a2_range,
            p1_range,
            p2_range,
            out,
        } => {
            let f = file;
            let centre =
                |name: &str, flag: Option<f64>, cfg: Option<f64>, range: &Option<String>| {
                    match range {
                        Some(text) => parse_range(name, text),
                        None => Ok(Range::around(required(name, flag.or(cfg))?, rel)),
                    }
                };
            let bounds = ScanBox {
                a1: centre("a1", params.a1, f.a1, &a1_range)?,
                a2: centre("a2", params.a2, f.a2, &a2_range)?,
                p1: centre("p1", params.p1, f.p1, &p1_range)?,
                p2: centre("p2", params.p2, f.p2, &p2_range)?,
            };
            let resolution: [usize; 4] = match resolution.as_slice() {
                [n] => [*n; 4],
                [a, b, c, d] => [*a, *b, *c, *d],
                _ => {
                    return Err(CliError::Invalid(
                        "--resolution takes one or four values".into(),
                    ))
                }
            };
            let format = settings.format(&out, Format::Csv, &[Format::Csv, Format::Json])?;
            let report = analysis::scan(&bounds, resolution)?;
            let mut w = settings.writer(&out)?;
            match format {
                Format::Csv => {
                    report.write_csv(&mut w)?;
                    w.flush()?;
                }
                _ => write_json(w, &report)?,
            }
        }
        Command::Smooth {
            params,
            h,
            deltas,
            out,
        } => {
            let params = settings.params(&params)?;
            let h = required("h", h.or(file.h))?;
            settings.format(&out, Format::Json, &[Format::Json])?;
            let report = analysis::smoothing_convergence(&params, h, &deltas)?;
            write_json(settings.writer(&out)?, &report)?;
        }
        Command::Coexist { params, out } => {
            let params = settings.params(&params)?;
            settings.format(&out, Format::Json, &[Format::Json])?;
            let report = analysis::coexistence_check(&params)?;
            write_json(settings.writer(&out)?, &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relay-dde: {e}");
            ExitCode::from(e.code())
        }
    }
}
