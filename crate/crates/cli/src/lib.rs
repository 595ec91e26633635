//! Experiment driver for the adaptive wavelet boundary element solver.

pub mod commands;
pub mod plot;
pub mod run_spec;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_solve, cmd_study, cmd_verify, EXIT_OK, EXIT_USAGE};
use run_spec::{Settings, UsageError};

#[derive(Debug, Parser)]
#[command(name = "awbem", about = "Adaptive wavelet BEM for the double layer equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one adaptive or uniform solve.
    Solve(RunArgs),
    /// Run uniform and adaptive solves and compare their rates.
    Study(RunArgs),
    /// Run an invariant suite: quadrature, basis, appendix or oracle.
    Verify { suite: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fichera or cube.
    #[arg(long)]
    surface: Option<String>,
    /// point, cartoon or constant.
    #[arg(long)]
    rhs: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Value of the constant right-hand side.
    #[arg(long)]
    value: Option<String>,
    /// adaptive or uniform.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    max_level: Option<String>,
    #[arg(long)]
    resolve_level: Option<String>,
    #[arg(long)]
    quad_order: Option<String>,
    #[arg(long)]
    max_dofs: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    #[arg(long)]
    delta_init: Option<String>,
    #[arg(long)]
    gmres_tol: Option<String>,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    svg: Option<String>,
    #[arg(long)]
    dump_solution: Option<String>,
    #[arg(long)]
    cache: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Write zero wall times so that repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    /// Comma-separated guide slopes for the study plot.
    #[arg(long)]
    guides: Option<String>,
    /// Fit window `start:end` over history rows.
    #[arg(long)]
    window: Option<String>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, UsageError> {
        let mut s = match &self.config {
            Some(path) => Settings::read(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("surface", &self.surface),
            ("rhs", &self.rhs),
            ("alpha", &self.alpha),
            ("value", &self.value),
            ("mode", &self.mode),
            ("eps", &self.eps),
            ("omega", &self.omega),
            ("theta", &self.theta),
            ("max-level", &self.max_level),
            ("resolve-level", &self.resolve_level),
            ("quad-order", &self.quad_order),
            ("max-dofs", &self.max_dofs),
            ("max-iterations", &self.max_iterations),
            ("delta-init", &self.delta_init),
            ("gmres-tol", &self.gmres_tol),
            ("csv", &self.csv),
            ("svg", &self.svg),
            ("dump-solution", &self.dump_solution),
            ("cache", &self.cache),
            ("threads", &self.threads),
            ("guides", &self.guides),
            ("window", &self.window),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v.clone());
            }
        }
        if self.no_timing {
            flags.set("no-timing", "true");
        }
        s.merge(&flags);
        Ok(s)
    }
}

/// Runs the command line `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => a
            .settings()
            .and_then(|s| s.to_spec(false))
            .map_err(Into::into)
            .and_then(|spec| cmd_solve(&spec, out)),
        Command::Study(a) => a
            .settings()
            .and_then(|s| s.to_spec(false))
            .map_err(Into::into)
            .and_then(|spec| cmd_study(&spec, out)),
        Command::Verify { suite } => cmd_verify(suite, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            if e.exit_code() == EXIT_USAGE {
                let _ = writeln!(err, "run 'awbem --help' for usage");
            }
            e.exit_code()
        }
    }
}
