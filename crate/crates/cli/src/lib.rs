//! `kvn`: verification suites and simulations over one JSON report shape.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 when
//! the run could not start (bad flags, bad config, unsupported input). A run
//! that cannot start writes no report.

pub mod commands;
pub mod config;
pub mod parse;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use kvn_core::propagator::{Integrator, Parallelism};

pub use commands::{execute, Outcome};
pub use config::{Command, ConfigError, RunConfig, Settings};
pub use report::{Check, Report, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// The report schema, shipped with the binary.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Parser)]
#[command(
    name = "kvn",
    version,
    about = "Superspace and Koopman-von Neumann verification workbench"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the report and any grid dumps.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dof: Option<usize>,
    /// e.g. "1/2*q_1^2 + 1/2*p_1^2"
    #[arg(long, allow_hyphen_values = true)]
    pub hamiltonian: Option<String>,
    /// Repeatable; replaces the config's observable list.
    #[arg(long = "observable", allow_hyphen_values = true)]
    pub observables: Vec<String>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// "q,p"
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: Option<[f64; 2]>,
    /// Second center for interference, "q,p".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center1: Option<[f64; 2]>,
    /// Grid points per axis.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// The grid covers [-h, h]^2.
    #[arg(long)]
    pub grid_half: Option<f64>,
    /// auto, leapfrog, exact-rotation or exact-shear.
    #[arg(long, value_parser = parse_integrator)]
    pub integrator: Option<Integrator>,
    /// Run grid sweeps on one thread.
    #[arg(long)]
    pub sequential: bool,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected q,p")?;
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([f(a)?, f(b)?])
}

fn parse_integrator(s: &str) -> Result<Integrator, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

impl Cli {
    /// Config file (if any) with the flags laid over it.
    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let grid = match (self.grid_half, self.grid_n) {
            (None, None) => None,
            (h, n) => {
                let g = base.grid.clone().unwrap_or_default();
                Some(config::GridConfig {
                    half: h.unwrap_or(g.half),
                    n: n.unwrap_or(g.n),
                })
            }
        };
        Ok(base.overridden_by(RunConfig {
            dof: self.dof,
            hamiltonian: self.hamiltonian.clone(),
            grid,
            dt: self.dt,
            t_final: self.t_final,
            integrator: self.integrator,
            parallelism: self.sequential.then_some(Parallelism::Sequential),
            center: self.center,
            center1: self.center1,
            sigma: self.sigma,
            observables: self.observables.clone(),
            out_dir: self.out.clone(),
        }))
    }
}

/// Parse `args`, run, print the report to `stdout` and diagnostics to
/// `stderr`, and return the exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return if code == 0 { EXIT_PASS } else { EXIT_CONFIG };
        }
    };
    let settings = match cli.run_config().and_then(|c| c.validate(cli.command)) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match execute(&settings) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let json = outcome.report.to_json();
    if let Some(dir) = &settings.out_dir {
        let written = std::fs::create_dir_all(dir).and_then(|_| {
            std::fs::write(dir.join(format!("{}.json", settings.command.name())), &json)?;
            for (name, bytes) in &outcome.artifacts {
                std::fs::write(dir.join(name), bytes)?;
            }
            Ok(())
        });
        if let Err(e) = written {
            let _ = writeln!(stderr, "error: cannot write to {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    }
    let _ = writeln!(stdout, "{json}");
    for c in outcome.report.checks.iter().filter(|c| !c.passed()) {
        let why = c
            .details
            .get("failing")
            .and_then(|v| v.as_str())
            .map(|t| format!(" (fails {t})"))
            .unwrap_or_default();
        let _ = writeln!(stderr, "FAIL {}{why}", c.name);
    }
    if outcome.report.all_passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
