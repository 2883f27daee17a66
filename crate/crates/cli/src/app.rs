use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jetham_core::Report;
use serde::Serialize;

use crate::commands::{self, Perturbation, Suite, VerifyOptions};
use crate::error::{exit, CliError, Result};
use crate::point::parse_point;
use crate::problem::Problem;

#[derive(Debug, Parser)]
#[command(name = "jetham", version, about = "Hamilton geometry on the dual 1-jet space: constructions and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: String,
    /// Write the machine-readable result here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Christoffel symbols of the time and space metrics.
    Christoffel(Common),
    /// Canonical semisprays and nonlinear connection.
    Canonical(Common),
    /// Run verification suites over every chart and sample point.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: dtensor, spray, connection, frames, all.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        suite: Vec<String>,
        /// Add a constant to one component of every transported connection,
        /// e.g. `n1.1=1` or `n2.1.2=-0.5`.
        #[arg(long)]
        perturb: Option<String>,
    },
    /// Print the components of one object at one point.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        object: String,
        /// `t,x1,…,xn,p1,…,pn`
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    }
    Ok(())
}

fn summarize(report: &Report, out: &mut dyn Write) -> std::io::Result<()> {
    let summary = report.summary();
    for (family, worst) in &summary.max_residual {
        let pass = report.records.iter().filter(|r| r.family() == family).all(|r| r.pass);
        writeln!(out, "{:<12} max residual {:.3e}  {}", family, worst, if pass { "PASS" } else { "FAIL" })?;
    }
    for r in report.failures().take(20) {
        writeln!(out, "FAIL {} chart={} point={:?} residual={:.3e}", r.check_id, r.chart, r.point, r.residual)?;
    }
    let failed = report.failures().count();
    if failed > 20 {
        writeln!(out, "... {} more failing records", failed - 20)?;
    }
    writeln!(out, "{} records, {}", report.records.len(), if summary.pass { "all pass" } else { "FAILED" })
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<bool> {
    let io = |e: std::io::Error| CliError::Io { path: "<stdout>".into(), source: e };
    let finish = |report: Report, json: &Option<PathBuf>, out: &mut dyn Write| -> Result<bool> {
        summarize(&report, out).map_err(io)?;
        write_json(json, &report)?;
        Ok(report.passed())
    };
    match cmd {
        Command::Christoffel(c) => {
            let (report, text) = commands::christoffel(&Problem::load(&c.problem)?)?;
            out.write_all(text.as_bytes()).map_err(io)?;
            finish(report, &c.json, out)
        }
        Command::Canonical(c) => {
            let (report, text) = commands::canonical(&Problem::load(&c.problem)?)?;
            out.write_all(text.as_bytes()).map_err(io)?;
            finish(report, &c.json, out)
        }
        Command::Verify { common, suite, perturb } => {
            let opts = VerifyOptions {
                suites: Suite::parse_list(&suite)?,
                perturb: perturb.as_deref().map(str::parse::<Perturbation>).transpose()?,
            };
            let report = commands::verify(&Problem::load(&common.problem)?, &opts)?;
            finish(report, &common.json, out)
        }
        Command::Eval { common, object, at } => {
            let problem = Problem::load(&common.problem)?;
            let q = parse_point(&at, problem.n)?;
            let value = commands::eval_object(&problem, &object, &q)?;
            out.write_all(value.render().as_bytes()).map_err(io)?;
            write_json(&common.json, &value)?;
            Ok(true)
        }
    }
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::PASS };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => exit::PASS,
        Ok(false) => exit::FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit::CONFIG
        }
    }
}
