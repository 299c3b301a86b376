use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use blockage_cli::commands::{self, RunOptions, Table};
use blockage_cli::config::ScenarioConfig;
use blockage_cli::CliError;
use blockage_core::multilink::QuadratureSpec;
use clap::{Args, Parser, Subcommand};

/// mmWave blockage probabilities and relay placement.
#[derive(Parser, Debug)]
#[command(name = "blockage", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Direct-link blockage vs distance, analytic and Monte Carlo.
    Single(Common),
    /// Cell-averaged direct-link blockage vs density and maximum height.
    Density(Common),
    /// Failure probability vs distance at fixed user azimuths.
    SectorProfile(Common),
    /// Relay radius/height sweep; the summary goes to stdout, or stderr when the table does.
    Optimize(Common),
    /// Compare analytic values with Monte Carlo; exits 3 on any deviation beyond 3 sigma.
    Validate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (JSON); reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Same Gauss–Legendre order for every blocker dimension (half for height pieces).
    #[arg(long)]
    quad_nodes: Option<usize>,
    /// Ignore link budgets.
    #[arg(long)]
    no_budget: bool,
    /// Also emit the independent-links baseline.
    #[arg(long)]
    independent: bool,
    #[arg(long, hide = true, default_value_t = 1.0)]
    debug_eta_scale: f64,
}

impl Common {
    fn load(&self) -> Result<(ScenarioConfig, RunOptions), CliError> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.monte_carlo.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.monte_carlo.trials = t;
        }
        if let Some(n) = self.quad_nodes {
            cfg.quadrature = QuadratureSpec::uniform(n);
        }
        if self.no_budget {
            cfg.budgets = None;
        }
        cfg.validate()?;
        let opts = RunOptions { independent: self.independent, eta_scale: self.debug_eta_scale };
        Ok((cfg, opts))
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn emit(&self, t: &Table) -> Result<(), CliError> {
        t.write_csv(self.sink()?)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Single(c) => {
            let (cfg, opts) = c.load()?;
            c.emit(&commands::single(&cfg, &opts)?)
        }
        Command::Density(c) => {
            let (cfg, opts) = c.load()?;
            c.emit(&commands::density(&cfg, &opts)?)
        }
        Command::SectorProfile(c) => {
            let (cfg, opts) = c.load()?;
            c.emit(&commands::sector_profile(&cfg, &opts)?)
        }
        Command::Optimize(c) => {
            let (cfg, opts) = c.load()?;
            let (table, summary) = commands::optimize(&cfg, &opts)?;
            c.emit(&table)?;
            let json = serde_json::to_string_pretty(&summary)?;
            if c.out.is_some() {
                println!("{json}");
            } else {
                eprintln!("{json}");
            }
            Ok(())
        }
        Command::Validate(c) => {
            let (cfg, opts) = c.load()?;
            let report = commands::validate(&cfg, &opts)?;
            let mut w = c.sink()?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            if report.passed {
                Ok(())
            } else {
                let bad = report.checks.iter().filter(|c| !c.pass).count();
                Err(CliError::Validation(format!("{bad} of {} checks beyond 3 sigma", report.checks.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
