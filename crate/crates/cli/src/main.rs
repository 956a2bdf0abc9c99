//! `hres`: command-line access to the residue, heat and contact-geometry computations.

mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hres", version, about = "Noncommutative residues, heat invariants and contact volumes")]
struct Cli {
    /// Worker threads for parallel quadrature; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Gamma,
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum S3Check {
    All,
    Volume,
    Area,
    Heat,
    Weyl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Sampling {
    Circle,
    RealSegment,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// rho_n(mu) at one point, on a grid, or against the fixture file.
    Rho {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
        mu: Option<f64>,
        /// Number of equispaced points in (-n, n).
        #[arg(long)]
        grid: Option<usize>,
        /// Compare against a fixture file of reference values.
        #[arg(long, value_name = "FILE", num_args = 0..=1, default_missing_value = "fixtures/rho_fixtures.json")]
        verify_fixtures: Option<PathBuf>,
    },
    /// The finite rho sums gamma_{nk}, alpha_{n kappa p q} and beta_{n kappa p q}.
    Constants {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        kappa: Option<u32>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        q: Option<u32>,
        /// Verify the index symmetry of the family over the whole table.
        #[arg(long)]
        check_symmetry: bool,
        /// Print the table as CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Builds the homogeneous extension of a built-in symbol and checks its scaling law.
    ExtensionSuite {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,2,4")]
        lambda_list: Vec<f64>,
        /// Symbol family: koranyi-power, gauss-tapered or odd<j>.
        #[arg(long, default_value = "koranyi-power")]
        family: String,
    },
    /// Residue density and, with --gauged, the Laurent fit of the gauged trace functional.
    Residue {
        /// Built-in symbol, e.g. koranyi-power:-4.
        #[arg(long, allow_hyphen_values = true)]
        symbol: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        gauged: bool,
        #[arg(long, default_value_t = 0.4)]
        radius: f64,
        #[arg(long, value_enum, default_value_t = Sampling::Circle)]
        sampling: Sampling,
    },
    /// Closed-form checks on the standard 3-sphere.
    S3 {
        #[arg(long, value_enum, default_value_t = S3Check::All)]
        check: S3Check,
    },
    /// Weyl-law fit of an eigenvalue file (one value per line).
    Weyl {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        d: u32,
    },
    /// Heat-trace coefficients from a built-in model or a CSV of (t, trace) samples.
    Heat {
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        model: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long, default_value_t = hres_core::heat::DEFAULT_DEPTH)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        dim_ker: u64,
        #[arg(long)]
        log_terms: bool,
        /// Cross-check the leading pole against the Mellin transform.
        #[arg(long)]
        mellin: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("hres: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = commands::run(cli.command);
    eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(commands::Output::Json(report)) => {
            let failed = !report.failed_checks().is_empty();
            let text = serde_json::to_string_pretty(&report.into_json()).expect("report serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if failed { ExitCode::from(3) } else { ExitCode::SUCCESS }
        }
        Ok(commands::Output::Csv(text)) => {
            let _ = write!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hres: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
