//! The `cpcox` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{parse_bandwidth, parse_starts, StudyPlan};
use super::data::{parse_csv, ColumnMapping};
use super::report::{
    rule_text, FitPayload, InputDigest, IntervalBlock, ParameterNames, Payload, ReportError,
    RunReport, SimulatePayload, Subgroup,
};
use crate::error::{Error, ErrorKind, Result};
use crate::inference::{confidence_intervals_named, predict_subgroup, xi_names};
use crate::optimizer::{matrix_rows, multistart_fit, FitOptions};
use crate::simulation::run_study;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_FIT: i32 = 3;

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "CPCOX_THREADS";

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Fit => EXIT_FIT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "cpcox", version, about = "Change-plane Cox regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model to a CSV file
    Fit(FitArgs),
    /// Run a Monte Carlo study
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Column mapping file (key = value)
    #[arg(long)]
    map: PathBuf,
    /// Kernel bandwidth: `auto` for (ln n)^2 / n, or a positive number
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Starting values for psi: grid:K[:LO:HI], random:N[:LO:HI] or explicit:a,b;c,d
    #[arg(long, default_value = "grid:5")]
    starts: String,
    /// Seed for random starts
    #[arg(long, default_value_t = 20220209)]
    seed: u64,
    /// Confidence level
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock time in the report
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Study configuration (key = value)
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to $CPCOX_THREADS, then to the number of CPUs
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    timing: bool,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `args` (without the program name), runs the command and writes
/// the report. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let echo: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let argv = std::iter::once(OsString::from("cpcox")).chain(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let started = Instant::now();
    let ((mut report, code), format, out, timing) = match cli.command {
        Command::Fit(a) => (cmd_fit(&a, echo), a.format, a.out, a.timing),
        Command::Simulate(a) => (cmd_simulate(&a, echo), a.format, a.out, a.timing),
    };
    if timing {
        report.timing_seconds = Some(started.elapsed().as_secs_f64());
    }
    if let Some(e) = &report.error {
        let _ = writeln!(stderr, "cpcox: {}", e.message);
    }
    let rendered = match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, rendered) {
                let _ = writeln!(stderr, "cpcox: cannot write {}: {e}", path.display());
                return EXIT_DATA;
            }
        }
        None => {
            let _ = stdout.write_all(rendered.as_bytes());
        }
    }
    code
}

fn fail(mut report: RunReport, e: &Error) -> (RunReport, i32) {
    report.error = Some(ReportError::from(e));
    (report, exit_code(e.kind()))
}

fn cmd_fit(args: &FitArgs, echo: Vec<String>) -> (RunReport, i32) {
    let mut report = RunReport::new(echo);
    let mut opts = FitOptions::default();
    match parse_bandwidth(&args.bandwidth) {
        Ok(b) => opts.bandwidth = b,
        Err(m) => return fail(report, &Error::InvalidArgument(format!("--bandwidth: {m}"))),
    }
    match parse_starts(&args.starts, args.seed) {
        Ok(s) => opts.psi_starts = s,
        Err(m) => return fail(report, &Error::InvalidArgument(format!("--starts: {m}"))),
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        let e = Error::InvalidArgument(format!("--level must lie in (0, 1), got {}", args.level));
        return fail(report, &e);
    }

    let map_bytes = match read_bytes(&args.map) {
        Ok(b) => b,
        Err(e) => return fail(report, &e),
    };
    report
        .inputs
        .push(InputDigest::of("map", &args.map.to_string_lossy(), &map_bytes));
    let mapping = match ColumnMapping::parse(&String::from_utf8_lossy(&map_bytes)) {
        Ok(m) => m,
        Err(e) => return fail(report, &e),
    };
    let data_bytes = match read_bytes(&args.data) {
        Ok(b) => b,
        Err(e) => return fail(report, &e),
    };
    report
        .inputs
        .push(InputDigest::of("data", &args.data.to_string_lossy(), &data_bytes));
    let ds = match parse_csv(data_bytes.as_slice(), &mapping) {
        Ok(ds) => ds,
        Err(e) => return fail(report, &e),
    };

    let kernel = match opts.kernel(ds.n()) {
        Ok(k) => k,
        Err(e) => return fail(report, &e),
    };
    let fit = match multistart_fit(&ds, &kernel, &opts) {
        Ok(f) => f,
        Err(e) => return fail(report, &e),
    };

    let dims = ds.dims();
    let x_names = mapping.x_names();
    let inside = predict_subgroup(&ds, &fit.theta_hat.psi)
        .map(|m| m.iter().filter(|&&b| b).count())
        .unwrap_or(0);
    let last = fit.trace.last().copied();
    let mut payload = FitPayload {
        n: ds.n(),
        n_events: ds.n_events(),
        dims,
        names: ParameterNames {
            beta: mapping.z_cols.clone(),
            gamma: mapping.u_cols.clone(),
            psi: x_names.clone(),
        },
        bandwidth: fit.bandwidth_used,
        theta_hat: fit.theta_hat.clone(),
        se: None,
        ci: None,
        covariance: None,
        loglik: fit.loglik,
        converged: fit.converged,
        outer_iterations: fit.outer_iterations(),
        n_starts: fit.n_starts,
        best_start: fit.best_start.clone(),
        psi_norm: fit.theta_hat.psi.iter().map(|p| p * p).sum::<f64>().sqrt(),
        score_xi_norm: last.map_or(0.0, |r| r.score_xi_norm),
        scaled_score_psi_norm: last.map_or(0.0, |r| r.score_psi_norm * fit.bandwidth_used),
        subgroup: Subgroup {
            rule: rule_text(&mapping.v_label(), &x_names, &fit.theta_hat.psi, mapping.intercept_in_x),
            inside,
            outside: ds.n() - inside,
        },
        starts: fit.start_summaries.clone(),
    };

    if !fit.converged {
        report.warnings.push(
            "the best start did not reach a stationary point; estimates may be unreliable".into(),
        );
    }
    let xi = fit.theta_hat.xi();
    let outcome = match &fit.covariance_xi {
        Some(cov) => {
            match confidence_intervals_named(&xi_names(dims), &xi, &cov.information_inverse, ds.n(), args.level) {
                Ok(cis) => {
                    let se: Vec<f64> = cis.iter().map(|c| c.std_error).collect();
                    let gamma_se = &se[dims.p1..];
                    if fit
                        .theta_hat
                        .gamma
                        .iter()
                        .zip(gamma_se)
                        .all(|(g, s)| g.abs() < 2.0 * s)
                    {
                        report.warnings.push(
                            "every |gamma| is below 2 standard errors: the subgroup effect is \
                             near zero and the classification rule is weakly identified"
                                .into(),
                        );
                    }
                    payload.ci = Some(IntervalBlock {
                        level: args.level,
                        lower: cis.iter().map(|c| c.lower).collect(),
                        upper: cis.iter().map(|c| c.upper).collect(),
                    });
                    payload.se = Some(se);
                    payload.covariance = Some(matrix_rows(&cov.covariance_of_estimate()));
                    Ok(())
                }
                Err(e) => Err(e),
            }
        }
        None => Err(Error::DegenerateFit(
            fit.covariance_error
                .clone()
                .unwrap_or_else(|| "covariance unavailable".into()),
        )),
    };
    report.payload = Some(Payload::Fit(payload));
    if let Err(e) = outcome {
        report.warnings.push("standard errors and intervals are unavailable".into());
        return fail(report, &e);
    }
    (report, EXIT_OK)
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = flag {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
        _ => Ok(None),
    }
}

fn cmd_simulate(args: &SimulateArgs, echo: Vec<String>) -> (RunReport, i32) {
    let mut report = RunReport::new(echo);
    let threads = match resolve_threads(args.threads) {
        Ok(t) => t,
        Err(e) => return fail(report, &e),
    };
    let bytes = match read_bytes(&args.config) {
        Ok(b) => b,
        Err(e) => return fail(report, &e),
    };
    report
        .inputs
        .push(InputDigest::of("config", &args.config.to_string_lossy(), &bytes));
    let plan = match StudyPlan::parse(&String::from_utf8_lossy(&bytes)) {
        Ok(p) => p,
        Err(e) => return fail(report, &e),
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return fail(report, &Error::InvalidArgument(format!("thread pool: {e}"))),
    };
    let studies: Result<Vec<_>> = pool.install(|| plan.scenarios().iter().map(run_study).collect());
    let scenarios = match studies {
        Ok(s) => s,
        Err(e) => return fail(report, &e),
    };
    for s in &scenarios {
        if s.failures > 0 {
            report.warnings.push(format!(
                "n = {}, gamma = {}: {} of {} replications produced no interval",
                s.config.n,
                s.config.gamma,
                s.failures,
                s.records.len()
            ));
        }
    }
    report.payload = Some(Payload::Simulate(SimulatePayload { scenarios }));
    (report, EXIT_OK)
}
