use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{self, CliError, Run, EXIT_ERROR};
use crate::config::{self, Format};
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Parser)]
#[command(name = "wormline", version, about = "Wormhole spacetimes on flux-biased dc-SQUID arrays")]
pub struct Cli {
    /// Run configuration (JSON). Without it the built-in reference preset is used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overrides output.directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table format, overrides output.format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Dotted override such as geometry.b0_m=0.5mm (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static flux profiles for every throat radius in geometry.b0_sweep_m.
    FluxProfile,
    /// Feasibility report; exit status 0 pass, 1 warn, 2 fail.
    Feasibility,
    /// Time-machine flux profiles, schedule and time-shift budget.
    TimeMachine,
    /// Pulse simulation, ray comparison, convergence table and elapsed curves.
    Propagate,
    /// Embedding surface (l, r, z).
    Embed,
    /// Ray traversal time between two lab coordinates.
    Traversal {
        /// Start coordinate, e.g. "10 cm" (default: first probe).
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        /// End coordinate (default: second probe).
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
    },
}

fn position(arg: &Option<String>, default: f64, flag: &str) -> Result<f64, CliError> {
    match arg {
        None => Ok(default),
        Some(text) => parse_quantity(text, Dimension::Length).map_err(|e| CliError::Usage(format!("--{flag}: {e}"))),
    }
}

/// Runs the parsed command, printing written files to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = config::load(cli.config.as_deref(), &cli.set)?;
    let format = cli.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let run = Run::new(cfg, cli.out.as_deref(), format)?;
    let outcome = match &cli.command {
        Command::FluxProfile => commands::flux_profile(&run)?,
        Command::Feasibility => commands::feasibility_cmd(&run)?,
        Command::TimeMachine => commands::time_machine(&run)?,
        Command::Propagate => commands::propagate(&run)?,
        Command::Embed => commands::embed(&run)?,
        Command::Traversal { from, to } => {
            let probes = run.cfg.experiment.probes_m;
            let from = position(from, probes[0], "from")?;
            let to = position(to, probes[1], "to")?;
            let (outcome, value) = commands::traversal(&run, from, to)?;
            let _ = writeln!(stdout, "{}", serde_json::to_string(&value).expect("json value"));
            outcome
        }
    };
    for f in &outcome.files {
        let _ = writeln!(stdout, "{}", f.display());
    }
    Ok(outcome.exit_code)
}

/// Full entry point: argument parsing, execution and exit status. Usage
/// errors and failures exit with 3; `--help` and `--version` with 0.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_ERROR;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}
