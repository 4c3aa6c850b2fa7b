use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bellforge::cli::{self, Suite};

/// Construct, certify, prove, and quantum-test CH-type Bell inequalities.
#[derive(Parser)]
#[command(name = "bellforge", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the k-settings chain inequality as a catalog file.
    Gen {
        /// Settings per party (k >= 2).
        #[arg(long)]
        k: usize,
        /// Output catalog path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify an entry's local bound by exact vertex enumeration, or check
    /// a proof certificate against it.
    Verify {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        name: String,
        /// Certificate file to check instead of enumerating vertices.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Search for a decomposition proof and write the certificate.
    Prove {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        name: String,
        /// Output certificate path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximize violations for every entry and write a TSV report.
    Table {
        #[arg(long)]
        catalog: PathBuf,
        /// Optimizer config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output report path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a randomized property suite.
    Check {
        /// REARRANGE, LHV_CHAIN, or QUANTUM_SANITY.
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    // BELLFORGE_THREADS caps the worker pool used by the optimizer and the
    // grid oracle.
    if let Ok(v) = std::env::var("BELLFORGE_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }

    let args = Args::parse();
    let result = match args.command {
        Command::Gen { k, out } => {
            if k < 2 {
                eprintln!("error: k must be >= 2, got {k}");
                return ExitCode::from(cli::EXIT_USAGE as u8);
            }
            cli::cmd_gen(k, &out)
        }
        Command::Verify {
            catalog,
            name,
            cert,
        } => cli::cmd_verify(&catalog, &name, cert.as_deref()),
        Command::Prove { catalog, name, out } => cli::cmd_prove(&catalog, &name, &out),
        Command::Table {
            catalog,
            config,
            out,
        } => cli::cmd_table(&catalog, config.as_deref(), &out),
        Command::Check {
            suite,
            trials,
            seed,
        } => cli::cmd_check(suite, trials, seed),
    };

    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_USAGE as u8)
        }
    }
}
