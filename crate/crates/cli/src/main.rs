//! `innsbruck`: command-line front end for the exact GHZ post-selection
//! pipeline.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "innsbruck",
    version,
    about = "Exact simulation and local-realism checks for the two-pair GHZ setup"
)]
pub struct Cli {
    /// Write the artifact to this file; stdout then carries a one-line summary.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand the two-pair emission, select on the trigger and run the circuit.
    Expand,
    /// Classify a detection pattern such as `aT_H,g_H,h_V,z_V` or `g_H=2,h_V`.
    Classify {
        pattern: String,
        /// Apply the veto-aware trigger.
        #[arg(long)]
        redefined_trigger: bool,
    },
    /// Print the composed mode substitution of the setup.
    DumpCircuit {
        /// List the elements one by one instead of the composed transform.
        #[arg(long)]
        elements: bool,
    },
    /// Exact outcome tables and correlations for all eight setting triples.
    Correlations {
        #[arg(long, default_value = "1")]
        visibility: String,
        #[command(flatten)]
        convention: ConventionFlag,
    },
    /// Seeded Monte Carlo event stream.
    Sample(SampleArgs),
    /// Decide whether a local model reproduces the noisy quantum tables.
    LhvFeasibility {
        #[arg(long)]
        visibility: String,
        /// Per-cell tolerance, penalized in the certificate.
        #[arg(long, default_value = "0")]
        slack: String,
    },
    /// Bisect the visibility for the local-model threshold.
    CriticalVisibility {
        #[arg(long, default_value_t = 16)]
        depth: u32,
    },
    /// Perfect-correlation contradiction over the right-sector strategies.
    GhzParadox {
        #[command(flatten)]
        convention: ConventionFlag,
    },
    /// Enumerate all joint strategies against the pairing of wrong events.
    LemmaCheck,
    /// Remove photons before the circuit and compare the two trigger rules.
    FilterLoss {
        #[arg(long, default_value_t = 0)]
        a_h: u32,
        #[arg(long, default_value_t = 0)]
        a_v: u32,
        #[arg(long, default_value_t = 0)]
        b_h: u32,
        #[arg(long, default_value_t = 0)]
        b_v: u32,
    },
}

#[derive(Args, Debug)]
pub struct ConventionFlag {
    /// Use the complex-conjugate circular basis.
    #[arg(long)]
    conjugate: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pulses: u64,
    #[arg(long, default_value_t = 1e-4)]
    pair_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    loss_prob: f64,
    #[arg(long)]
    redefined_trigger: bool,
    /// Analyzer settings such as `xyy`; omitted means H/V patterns.
    #[arg(long)]
    settings: Option<String>,
}

/// What a command produced: the artifact and a human summary.
pub struct Artifact {
    pub data: String,
    pub summary: String,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(innsbruck_core::Error),
    Io(String),
    UnsupportedFormat {
        command: &'static str,
        format: Format,
    },
}

impl From<innsbruck_core::Error> for CliError {
    fn from(e: innsbruck_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

fn core_kind(e: &innsbruck_core::Error) -> &'static str {
    use innsbruck_core::Error::*;
    match e {
        UnknownMode { .. } | ModeSyntax(_) => "mode",
        MixedOrder(_) => "mixed-order",
        Config(_) => "config",
        Modeling(_) => "modeling",
        NotIsometric(_) => "not-isometric",
        NoEmissionModes => "no-emission-modes",
        PairingViolation { .. } => "pairing-violation",
        EmptyState => "empty-state",
        NonRational(_) => "non-rational",
        UndefinedCorrelation => "undefined-correlation",
        VisibilityRange(_) => "visibility-range",
        Inadmissible(_) => "inadmissible",
        InvalidTargets(_) => "invalid-targets",
        Parse(_) => "parse",
    }
}

impl CliError {
    fn envelope(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Core(e) => (core_kind(e), e.to_string()),
            CliError::Io(m) => ("io", m.clone()),
            CliError::UnsupportedFormat { command, format } => (
                "unsupported-format",
                format!("{command} has no {format:?} output").to_lowercase(),
            ),
        };
        serde_json::to_string(&Envelope {
            error: ErrorBody { kind, message },
        })
        .expect("envelope serializes")
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::UnsupportedFormat { .. } => 2,
            _ => 1,
        }
    }
}

fn emit(cli: &Cli, artifact: Artifact) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => {
            std::fs::write(path, &artifact.data)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("{}", artifact.summary);
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(artifact.data.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").to_string();
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.envelope());
            return ExitCode::from(err.exit_code());
        }
    };
    match commands::run(&cli).and_then(|a| emit(&cli, a)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.envelope());
            ExitCode::from(err.exit_code())
        }
    }
}
