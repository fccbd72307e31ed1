use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypodecay::goldstein_taylor::InitialDatum;
use hypodecay::io::{analyze_json, envelope_csv, gt_run, read_matrix, RunOptions};
use hypodecay::Result;

/// Decay certificates, sharp constants and norm envelopes for f' = -C f.
#[derive(Parser)]
#[command(name = "hypodecay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Common {
    /// Relative tolerance on Lyapunov residuals and optimizer acceptance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Number of rates in each bound family.
    #[arg(long, default_value_t = 64)]
    rates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-check exact solutions against RK4 integration.
    #[arg(long)]
    oracle: bool,
}

impl From<Common> for RunOptions {
    fn from(c: Common) -> Self {
        RunOptions {
            tol: c.tol,
            rates: c.rates,
            seed: c.seed,
            oracle: c.oracle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Stability data, optimal Lyapunov matrix and sharp constant as JSON.
    Analyze {
        matrix: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Norm envelopes and bound families of a 2x2 system as CSV.
    Envelope {
        matrix: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 501)]
        points: usize,
        /// Number of random unit trajectories to include.
        #[arg(long, default_value_t = 0)]
        trajectories: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Goldstein-Taylor decay against sqrt(3) exp(-t/2); verdict on stderr.
    Gt {
        /// steady, harmonic:K, random:SEED or sharp
        #[arg(long, default_value = "sharp")]
        init: String,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[arg(long, default_value_t = 64)]
        modes: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
}

fn run(cli: Cli) -> Result<(String, Option<(String, bool)>)> {
    match cli.command {
        Command::Analyze { matrix, common } => Ok((analyze_json(&read_matrix(&matrix)?, &common.into())?, None)),
        Command::Envelope {
            matrix,
            t_max,
            points,
            trajectories,
            common,
        } => Ok((
            envelope_csv(&read_matrix(&matrix)?, t_max, points, trajectories, &common.into())?,
            None,
        )),
        Command::Gt {
            init,
            t_max,
            points,
            modes,
            grid,
        } => {
            let datum: InitialDatum = init.parse()?;
            let run = gt_run(&datum, t_max, points, modes, grid)?;
            let verdict = run.verdict();
            Ok((run.csv, Some((verdict, run.report.bound_holds))))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((out, verdict)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            match verdict {
                Some((line, ok)) => {
                    eprintln!("{line}");
                    if ok {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(3)
                    }
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
