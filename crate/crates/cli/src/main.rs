use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::Format;

/// Calibration tools for posterior predictive p-values.
#[derive(Debug, Parser)]
#[command(name = "ppcheck", version, about)]
struct Cli {
    /// Output format; curves default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conservative version min(1, 2p) of a single p-value.
    Calibrate {
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
    },
    /// Fisher's combination of p-values with conservative bounds.
    Fisher {
        /// CSV file with one p-value per line.
        #[arg(long)]
        pvals: PathBuf,
    },
    /// Minimum of m p-values with the conservative bound 1 − (1 − 2x)^m.
    Minp {
        #[arg(long, conflicts_with_all = ["min", "m"], required_unless_present = "min")]
        pvals: Option<PathBuf>,
        #[arg(long, requires = "m", allow_hyphen_values = true)]
        min: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Frequency simulation of a worst-case model.
    Simulate(commands::SimulateArgs),
    /// Builds a model whose p-value follows a target law, then simulates it.
    Construct {
        /// JSON description of the target law.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Curve data for plotting.
    Curves {
        #[arg(long, value_enum)]
        figure: Figure,
        /// α of the 𝒫_{2α} curve in the idf figure.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Number of combined p-values in the fisher figure.
        #[arg(long, default_value_t = 20)]
        m: usize,
        /// Grid size of the fisher figure.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Idf,
    Fisher,
}

fn configure_threads() {
    let Some(threads) = std::env::var("PPP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) else { return };
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: PPP_THREADS ignored: {e}");
        }
    }
}

/// Writes to stdout, treating a closed pipe (`ppcheck ... | head`) as success.
fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: cannot write output: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            emit(&e.to_string());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Bad flags are validation errors, not I/O failures.
            eprint!("{e}");
            emit(&output::usage_error(&e.kind().to_string()).render(Format::Json));
            return ExitCode::from(1);
        }
    };
    configure_threads();
    let default_format = match cli.command {
        Command::Curves { .. } => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.unwrap_or(default_format);
    let result = match cli.command {
        Command::Calibrate { p } => commands::calibrate(p),
        Command::Fisher { pvals } => commands::fisher(&pvals),
        Command::Minp { pvals, min, m } => commands::minp(pvals.as_deref(), min, m),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Construct { target, n, seed } => commands::construct(&target, n, seed),
        Command::Curves { figure: Figure::Idf, alpha, .. } => commands::idf_curves(alpha),
        Command::Curves { figure: Figure::Fisher, m, points, .. } => commands::fisher_curves(m, points),
    };
    match result {
        Ok(out) => {
            emit(&out.render(format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            emit(&output::error_output(&e).render(format));
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
