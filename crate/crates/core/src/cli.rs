//! `ladder compute | verify | asym`.
//!
//! Exit status: 0 all checks pass, 1 some identity fails, 2 bad
//! configuration, 3 numerical failure (quadrature stall, Cholesky breakdown
//! after retries, inconsistent grid).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::asymptotics::expansion_coefficients;
use crate::config::{Format, RunConfig, TGridSpec, TSpec};
use crate::error::{Error, Result};
use crate::output;
use crate::pipeline::{policy_for, run, Run};
use crate::precision::{format_real, parse_real};
use crate::residual::ResidualReport;
use crate::verify::{asym_entries, verify_point, Suite, VerifyOptions, ASYM_MIN_N, DEFAULT_SLOPE_BAND};
use crate::weight::Parameters;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_IDENTITY_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ladder", version)]
#[command(about = "Recurrence coefficients and ladder identities for the weight x^lambda exp(-x^2 - t/x)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write alpha, beta, h, p, R, r for every grid point
    Compute(ComputeArgs),
    /// Check the identities selected with --suite and write residual reports
    Verify(VerifyArgs),
    /// Fit the decay of the large-n expansion remainders
    Asym(AsymArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub lambda: String,
    /// Single value of t
    #[arg(long, conflicts_with = "t_grid", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// start:stop:count:spacing with spacing linear or log
    #[arg(long)]
    pub t_grid: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub nmax: usize,
    /// Significant digits of every reported value
    #[arg(long, default_value_t = 30)]
    pub digits: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the moment table as JSON
    #[arg(long)]
    pub moments: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Repeatable; defaults to every suite except asym
    #[arg(long = "suite", value_enum)]
    pub suites: Vec<Suite>,
    /// Finite-difference step in t (default 10^(-digits/3))
    #[arg(long)]
    pub h: Option<String>,
    /// Report t-derivative residuals after one Richardson step
    #[arg(long)]
    pub richardson: bool,
    /// Scale beta_n by (1 + 1e-6) before checking
    #[arg(long, hide = true)]
    pub inject_beta_fault: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AsymArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Half-width of the accepted band around the remainder exponent
    #[arg(long, default_value_t = DEFAULT_SLOPE_BAND)]
    pub band: f64,
}

impl CommonArgs {
    fn config(&self, suites: Vec<Suite>) -> Result<RunConfig> {
        let t = match (&self.t, &self.t_grid) {
            (Some(t), None) => TSpec::Single(t.clone()),
            (None, Some(g)) => TSpec::Grid(g.parse::<TGridSpec>()?),
            (None, None) => TSpec::Single("1".into()),
            (Some(_), Some(_)) => return Err(Error::InvalidParameter("give either --t or --t-grid".into())),
        };
        Ok(RunConfig {
            lambda: self.lambda.clone(),
            t,
            n_max: self.nmax,
            target_digits: self.digits,
            suites,
            format: self.format,
            out: self.out.clone(),
            h: None,
            richardson: false,
            write_moments: false,
            beta_fault: None,
        })
    }
}

/// Maps an error to the exit status contract.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numeric() || matches!(err, Error::GridMismatch(_) | Error::MissingMoment(_)) {
        EXIT_NUMERIC
    } else {
        EXIT_CONFIG
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Compute(args) => {
            let mut config = args.common.config(Vec::new())?;
            config.write_moments = args.moments;
            cmd_compute(&config)
        }
        Command::Verify(args) => {
            let suites = if args.suites.is_empty() {
                Suite::defaults()
            } else {
                args.suites.clone()
            };
            let mut config = args.common.config(suites)?;
            config.h = args.h.clone();
            config.richardson = args.richardson;
            config.beta_fault = args.inject_beta_fault;
            cmd_verify(&config)
        }
        Command::Asym(args) => {
            let config = args.common.config(vec![Suite::Asym])?;
            cmd_asym(&config, args.band)
        }
    }
}

fn point_params(config: &RunConfig) -> Result<Vec<Parameters>> {
    config.validate()?;
    let policy = policy_for(config.n_max, config.target_digits)?;
    config
        .t
        .values(config.target_digits)?
        .iter()
        .map(|t| Parameters::parse(&config.lambda, t, policy.clone()))
        .collect()
}

fn prepare_out(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out)?;
    fs::write(config.out.join("run_config.json"), config.to_json()?)?;
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn json_text(value: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_compute(config: &RunConfig) -> Result<u8> {
    let points = point_params(config)?;
    prepare_out(config)?;
    let runs: Vec<Run> = points
        .par_iter()
        .map(|p| run(p, config.n_max))
        .collect::<Result<_>>()?;
    for (i, r) in runs.iter().enumerate() {
        let name = format!("compute_{i:03}.{}", config.format.extension());
        let body = match config.format {
            Format::Csv => output::table_csv(r),
            Format::Json => json_text(&output::table_json(r))?,
        };
        write(&config.out.join(&name), &body)?;
        if config.write_moments {
            write(&config.out.join(format!("moments_{i:03}.json")), &json_text(&r.moments.to_json())?)?;
        }
        println!("t={}: wrote {} rows to {}", r.params.t_text, r.n_max + 1, name);
    }
    Ok(EXIT_PASS)
}

fn print_summary(report: &ResidualReport, t: &str) {
    println!("t={t}: {} checks, {} failed", report.entries.len(), report.failures().count());
    for s in report.summary() {
        let mark = if s.failures == 0 { "ok  " } else { "FAIL" };
        println!(
            "  {mark} {:<16} count={:<4} failures={:<4} max={} (n={})",
            s.identity,
            s.count,
            s.failures,
            format_real(&s.max_residual, 3),
            s.worst_n
        );
    }
}

pub fn cmd_verify(config: &RunConfig) -> Result<u8> {
    let points = point_params(config)?;
    prepare_out(config)?;
    let mut options = VerifyOptions {
        suites: config.suites.clone(),
        richardson: config.richardson,
        beta_fault: config.beta_fault,
        ..VerifyOptions::default()
    };
    if let Some(h) = &config.h {
        options.h = Some(parse_real(h, points[0].prec())?);
    }
    let results = points
        .par_iter()
        .map(|p| verify_point(p, config.n_max, &options))
        .collect::<Result<Vec<_>>>()?;
    let mut failed = false;
    for (i, v) in results.iter().enumerate() {
        let body = match config.format {
            Format::Csv => v.report.to_csv(),
            Format::Json => json_text(&v.report.to_json())?,
        };
        write(&config.out.join(format!("verify_{i:03}.{}", config.format.extension())), &body)?;
        print_summary(&v.report, &v.run.params.t_text);
        failed |= !v.report.passed();
    }
    Ok(if failed { EXIT_IDENTITY_FAILURE } else { EXIT_PASS })
}

pub fn cmd_asym(config: &RunConfig, band: f64) -> Result<u8> {
    if config.n_max < ASYM_MIN_N {
        return Err(Error::InvalidParameter(format!("asym needs --nmax >= {ASYM_MIN_N}")));
    }
    let points = point_params(config)?;
    prepare_out(config)?;
    let mut failed = false;
    for (i, p) in points.iter().enumerate() {
        let r = run(p, config.n_max)?;
        let (entries, fits) = asym_entries(&r, band)?;
        let model = expansion_coefficients(&r.params.lambda, &r.params.t)?;
        write(&config.out.join(format!("asym_fit_{i:03}.json")), &json_text(&output::asym_json(&r, &model, &fits, band))?)?;
        write(&config.out.join(format!("asym_residuals_{i:03}.csv")), &output::asym_csv(&r, &fits))?;
        println!("t={}:", r.params.t_text);
        for fit in &fits {
            for w in &fit.warnings {
                println!("  warning: {w}");
            }
            println!(
                "  {:<5} slope={:.4} expected={} in_band={}",
                fit.which.as_str(),
                fit.slope,
                fit.which.remainder_order(),
                fit.in_band(band)
            );
        }
        failed |= entries.iter().any(|e| !e.pass);
    }
    Ok(if failed { EXIT_IDENTITY_FAILURE } else { EXIT_PASS })
}
