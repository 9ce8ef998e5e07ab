//! Command-line front end.
//!
//! Option precedence: command-line flags override configuration-file values,
//! which override built-in defaults. Exit codes: 0 success, 2 input error,
//! 3 numerical/estimator failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fps_qkd::cli::{
    cmd_analyze, cmd_sidechannel, cmd_simulate, cmd_source, AnalyzeOptions, CliError,
    SimulateOptions, SourceOptions,
};
use fps_qkd::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fps-qkd",
    version,
    about = "Faint-pulse-source decoy-state BB84 simulator and side-channel analysis toolkit",
    long_about = "Models a 100 MHz amplitude- and polarization-modulated faint pulse source, \
                  its free-space link, and the decoy-state BB84 key rates it supports.\n\n\
                  Precedence: command-line flags override config-file values, which override \
                  built-in defaults. CSV goes to stdout (or --out); reports go to stderr.\n\
                  Exit codes: 0 success, 2 input error, 3 numerical/estimator failure."
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic decoy-state rates at one distance or over a sweep (CSV)
    Analyze {
        /// Shared key=value configuration file
        #[arg(long)]
        config: Option<PathBuf>,
        /// Link distance in km (overrides the config value)
        #[arg(long)]
        distance: Option<f64>,
        /// Distance sweep start:stop:step in km
        #[arg(long, conflicts_with = "distance")]
        sweep: Option<String>,
        /// Single-photon estimator: exact | decoy
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Write CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the merged configuration to this file and exit
        #[arg(long)]
        dump_config: Option<PathBuf>,
    },
    /// Pulse-level Monte Carlo run with empirical-vs-analytic comparison
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of pulses to simulate (overrides the config value)
        #[arg(long)]
        pulses: Option<u64>,
        /// Random seed (overrides the config value)
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; the results are identical for any count
        #[arg(long)]
        workers: Option<usize>,
        /// Link distance in km (overrides the config value)
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_config: Option<PathBuf>,
    },
    /// Pairwise overlap matrix of measured waveform CSVs
    Sidechannel {
        /// Waveform CSV files (header, then time_s,re,im or time_s,intensity)
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
        /// Comma-separated labels, one per file (defaults to file stems)
        #[arg(long)]
        labels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a pulse train (CSV) plus the transmitter budget report
    Source {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of pulses to emit
        #[arg(long, default_value_t = 32)]
        pulses: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-pulse choices: random | fixed:LEVEL/POL (e.g. fixed:High/P45)
        #[arg(long, default_value = "random")]
        protocol: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

/// Write the merged config and stop, when requested.
fn handle_dump(cfg: &RunConfig, dump: &Option<PathBuf>) -> Result<bool, CliError> {
    if let Some(path) = dump {
        std::fs::write(path, cfg.dump())?;
        return Ok(true);
    }
    Ok(false)
}

fn with_csv_writer(
    out: &Option<PathBuf>,
    f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = File::create(path)?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let stderr = std::io::stderr();
    match args.command {
        Command::Analyze {
            config,
            distance,
            sweep,
            mode,
            out,
            dump_config,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(km) = distance {
                cfg.distance_km = km;
            }
            cfg.validate()?;
            if handle_dump(&cfg, &dump_config)? {
                return Ok(());
            }
            let opts = AnalyzeOptions { sweep, mode };
            with_csv_writer(&out, |csv| {
                cmd_analyze(&cfg, &opts, csv, &mut stderr.lock())
            })
        }
        Command::Simulate {
            config,
            pulses,
            seed,
            workers,
            distance,
            out,
            dump_config,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(n) = pulses {
                cfg.n_pulses = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(km) = distance {
                cfg.distance_km = km;
            }
            cfg.validate()?;
            if handle_dump(&cfg, &dump_config)? {
                return Ok(());
            }
            let opts = SimulateOptions { workers };
            with_csv_writer(&out, |csv| {
                cmd_simulate(&cfg, &opts, csv, &mut stderr.lock())
            })
        }
        Command::Sidechannel { files, labels, out } => with_csv_writer(&out, |csv| {
            cmd_sidechannel(&files, labels.as_deref(), csv, &mut stderr.lock())
        }),
        Command::Source {
            config,
            pulses,
            seed,
            protocol,
            out,
            dump_config,
        } => {
            let cfg = load_config(&config)?;
            cfg.validate()?;
            if handle_dump(&cfg, &dump_config)? {
                return Ok(());
            }
            let opts = SourceOptions {
                pulses,
                seed,
                protocol,
            };
            with_csv_writer(&out, |csv| cmd_source(&cfg, &opts, csv, &mut stderr.lock()))
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) | Err(CliError::PipeClosed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
