use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhep_cli::bundled::BUNDLED;
use nhep_cli::run::{execute, RunOptions};
use nhep_cli::{load, output};

const OUTPUTS: &str = "\
Output files (CSV floats are shortest round-trip decimals):
  sweep.csv            branch,a,re_e,im_e,gamma,r,one_minus_r,hermitian_norm,b_1..b_N,flags
                       gamma = -2 Im E; flags: degenerate|ambiguous; degenerate rows leave
                       hermitian_norm and b empty
  sweep.json           suspects, ambiguous intervals, largest width differences
  ep.json              candidates with location, gap, rigidity, Puiseux exponent; clusters
  scan.csv             a,e,sigma for each scan parameter
  scan.json            poles and hump/dip energies per scan parameter
  contour.csv          a,e,sigma, energy fastest
  contour_matrix.csv   header a\\e,E_1..E_M, then one row per a
  diagnose.json        eigenvalues, rigidity, overlaps, mixing, source-term residuals
  *_no_coupling.*      the same with all couplings set to zero (compare_no_coupling)
  manifest.json        config sha256 and sha256/size of every file

Exit codes: 0 success, 2 configuration or output-directory error, 3 computation error.";

#[derive(Parser)]
#[command(name = "nhep", version, about = "Sweeps, exceptional point searches and resonance cross sections")]
#[command(after_long_help = OUTPUTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a bundled name
    Run {
        config: String,
        /// Output directory; overrides the config's [output] dir and $NHEP_OUTPUT_DIR
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Disable adaptive refinement of sweeps
        #[arg(long)]
        no_refine: bool,
    },
    /// List bundled experiments
    List,
    /// Check a config without running it
    Validate { config: String },
}

/// Used when neither the command line nor the config names a directory.
const DEFAULT_DIR_ENV: &str = "NHEP_OUTPUT_DIR";

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for b in BUNDLED {
                println!("{:<12} {}", b.name, b.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                let modes: Vec<_> = cfg.modes.iter().map(|m| m.name()).collect();
                println!("{}: ok ({}), sha256 {}", cfg.name, modes.join(", "), cfg.hash);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {config}: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            output_dir,
            threads,
            no_refine,
        } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {config}: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: --threads: {e}");
                    return ExitCode::from(2);
                }
            }
            let dir = output_dir
                .or_else(|| cfg.output_dir.clone())
                .or_else(|| std::env::var_os(DEFAULT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("nhep-out"));
            if let Err(e) = output::prepare_dir(&dir) {
                eprintln!("error: output directory {}: {e}", dir.display());
                return ExitCode::from(2);
            }
            let artifacts = match execute(&cfg, RunOptions { no_refine }) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {}: {e}", cfg.name);
                    return ExitCode::from(3);
                }
            };
            match output::write_all(&dir, &cfg, &artifacts) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: writing to {}: {e}", dir.display());
                    ExitCode::from(2)
                }
            }
        }
    }
}
