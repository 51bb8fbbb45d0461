//! `iongate`: simulate, sweep, truth-table and modes.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "iongate", version, about = "Trapped-ion two-qubit gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Population time series of the addressed ion and the bus mode.
    Simulate(Overrides),
    /// Average SWAP fidelity against the dressed Rabi frequency.
    Sweep(Overrides),
    /// C-NOT truth table on the computational states.
    TruthTable(Overrides),
    /// Normal-mode table with coupling limits and switching rates.
    Modes(Overrides),
}

/// Values given here override the config file.
#[derive(Args, Debug)]
struct Overrides {
    /// `key = value` file; unknown keys are rejected.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// lightshift, cz_travelling or cz_standing.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    /// Dressed Rabi frequency in units of nu_1, or `resonant`.
    #[arg(long)]
    omega_prime: Option<String>,
    /// travelling, standing_node or scheme.
    #[arg(long)]
    wave_type: Option<String>,
    #[arg(long)]
    n_ions: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    fock_cutoff: Option<String>,
    /// Integrator step, or `exact`.
    #[arg(long)]
    step: Option<String>,
    /// Output file; `-` is stdout.
    #[arg(short, long)]
    output: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// linear:lo:hi:n or log:lo:hi:n.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Fidelity level for threshold and region extraction.
    #[arg(long, alias = "threshold")]
    level: Option<String>,
    #[arg(long)]
    deterministic: Option<String>,
    /// idealized or full.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    simulate_rotations: Option<String>,
    /// Initial label such as +0, -1, e0.
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    #[arg(long)]
    t_final: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Coupling budget for the mode table.
    #[arg(long)]
    budget: Option<String>,
    /// Worker threads for sweeps; 0 uses every processor.
    #[arg(short = 'j', long)]
    threads: Option<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut rc = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            rc.apply_file(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        let flags = [
            ("scheme", &self.scheme),
            ("eta", &self.eta),
            ("omega_prime", &self.omega_prime),
            ("wave_type", &self.wave_type),
            ("n_ions", &self.n_ions),
            ("modes", &self.modes),
            ("fock_cutoff", &self.fock_cutoff),
            ("step", &self.step),
            ("output", &self.output),
            ("format", &self.format),
            ("grid", &self.grid),
            ("level", &self.level),
            ("deterministic", &self.deterministic),
            ("model", &self.model),
            ("simulate_rotations", &self.simulate_rotations),
            ("initial", &self.initial),
            ("t_final", &self.t_final),
            ("samples", &self.samples),
            ("budget", &self.budget),
            ("threads", &self.threads),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                rc.set(k, v)?;
            }
        }
        Ok(rc)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(o) => commands::simulate(&o.resolve()?),
        Command::Sweep(o) => commands::sweep_cmd(&o.resolve()?),
        Command::TruthTable(o) => commands::truth_table_cmd(&o.resolve()?),
        Command::Modes(o) => commands::modes(&o.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("iongate: {f}");
            ExitCode::from(f.code())
        }
    }
}
