//! `dbx`: capacity, exponent and converse checks for degraded broadcast
//! channels. Reports go to stdout as JSON; tables go to the `--csv` file.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dbx_core::converse::Suite;

mod channel;
mod commands;
mod error;
mod report;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dbx", version, about = "Degraded broadcast channel toolkit")]
struct Cli {
    /// Read rates in bits instead of nats (converted on input; output is nats).
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
pub struct Rates {
    pub r1: f64,
    pub r2: f64,
}

fn parse_rates(s: &str) -> Result<Rates, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(format!("expected R1,R2, got `{s}`"));
    };
    let r1: f64 = a.parse().map_err(|_| format!("bad R1 `{a}`"))?;
    let r2: f64 = b.parse().map_err(|_| format!("bad R2 `{b}`"))?;
    if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(format!("rates must be finite and non-negative, got `{s}`"));
    }
    Ok(Rates { r1, r2 })
}

#[derive(Debug, Clone, Args)]
pub struct MuGrid {
    #[arg(long, default_value_t = 1e-3)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 61)]
    pub mu_points: usize,
    /// A single μ; overrides the grid.
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LambdaGrid {
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 61)]
    pub lambda_points: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Supporting hyperplanes C^(μ) of the capacity region.
    Capacity {
        /// JSON file with `w1` and `w2` row-stochastic matrices
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        mu: MuGrid,
        /// Optimizer seed.
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Write `mu,c_mu` here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Grid lower bound F(R1, R2) on the strong-converse exponent.
    Exponent {
        /// JSON file with `w1` and `w2` row-stochastic matrices
        #[arg(long)]
        channel: PathBuf,
        /// `R1,R2` in nats (or bits with --bits)
        #[arg(long, value_parser = parse_rates)]
        rates: Rates,
        #[command(flatten)]
        mu: MuGrid,
        #[command(flatten)]
        lambda: LambdaGrid,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Write the full `(mu, lambda, F)` grid here.
        #[arg(long)]
        grid_csv: Option<PathBuf>,
    },
    /// Whether a rate pair lies in the capacity region.
    Region {
        /// JSON file with `w1` and `w2` row-stochastic matrices
        #[arg(long)]
        channel: PathBuf,
        /// `R1,R2` in nats (or bits with --bits)
        #[arg(long, value_parser = parse_rates)]
        rates: Rates,
        /// Hyperplane violations up to this size still count as inside.
        #[arg(long, default_value_t = 1e-9)]
        slack: f64,
        #[command(flatten)]
        mu: MuGrid,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Randomized instances of a finite-blocklength inequality.
    Verify {
        /// lemma1, lemma2, prop1, lemma6, holder, prop2, percode or appendixC.
        suite: Suite,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Size of the input, output and degraded-output alphabets.
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
    },
    /// Monte Carlo correct-decoding probability of superposition codes.
    Simulate {
        /// JSON file with `w1` and `w2` row-stochastic matrices
        #[arg(long)]
        channel: PathBuf,
        /// `R1,R2` in nats (or bits with --bits)
        #[arg(long, value_parser = parse_rates)]
        rates: Rates,
        /// Comma-separated blocklengths
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Simulated transmissions per blocklength (one codebook per blocklength)
        #[arg(long)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        mu: MuGrid,
        #[command(flatten)]
        lambda: LambdaGrid,
        /// Write `n, pc_hat, ci, decay, floor` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DBX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("DBX_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let start = Instant::now();
    let scale = if cli.bits { std::f64::consts::LN_2 } else { 1.0 };
    let to_nats = |r: Rates| Rates {
        r1: r.r1 * scale,
        r2: r.r2 * scale,
    };
    let out = match cli.command {
        Command::Capacity { channel, mu, seed, csv } => {
            commands::capacity(&channel, &mu, seed, csv.as_deref())?
        }
        Command::Exponent {
            channel,
            rates,
            mu,
            lambda,
            seed,
            grid_csv,
        } => commands::exponent(&channel, to_nats(rates), &mu, &lambda, seed, grid_csv.as_deref())?,
        Command::Region {
            channel,
            rates,
            slack,
            mu,
            seed,
        } => commands::region(&channel, to_nats(rates), slack, &mu, seed)?,
        Command::Verify {
            suite,
            n,
            trials,
            seed,
            alphabet,
        } => commands::verify(suite, n, trials, seed, alphabet)?,
        Command::Simulate {
            channel,
            rates,
            n,
            samples,
            seed,
            mu,
            lambda,
            csv,
        } => commands::simulate(
            &channel,
            to_nats(rates),
            &n,
            samples,
            seed,
            &mu,
            &lambda,
            csv.as_deref(),
        )?,
    };
    let mut report = out.report;
    report.wall_time_s = start.elapsed().as_secs_f64();
    let text = serde_json::to_string(&report).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    match out.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dbx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
