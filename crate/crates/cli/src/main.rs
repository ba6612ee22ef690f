use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hysterm_core::commands::{self, AnalyzeOptions, DEFAULT_RADII};
use hysterm_core::Error;

#[derive(Parser)]
#[command(
    name = "hysterm",
    version,
    about = "Heat equation with relay hysteresis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its run directory.
    Run { config: PathBuf },
    /// Classify the free boundary of a run and write `report/`.
    Analyze {
        run_dir: PathBuf,
        #[arg(long)]
        grad_tol: Option<f64>,
        #[arg(long)]
        level_tol: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Run and analyze one scenario per parameter value.
    Sweep {
        config: PathBuf,
        /// JSON pointer into the config, e.g. `/preset/gaussian_bump/amplitude`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Check the homogeneous switching period against `2 (beta - alpha)`.
    SelftestOscillator {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        dt: f64,
    },
}

fn configure_threads() {
    let Some(n) = std::env::var("HYSTERM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    else {
        return;
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
    {
        eprintln!("warning: HYSTERM_THREADS ignored: {e}");
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let dir = commands::cmd_run(&config)?;
            println!("{}", dir.display());
        }
        Command::Analyze {
            run_dir,
            grad_tol,
            level_tol,
            radii,
        } => {
            let opts = AnalyzeOptions {
                grad_tol,
                level_tol,
                radii: radii.unwrap_or_else(|| DEFAULT_RADII.to_vec()),
                ..AnalyzeOptions::default()
            };
            let (dir, summary) = commands::cmd_analyze(&run_dir, &opts)?;
            println!(
                "{}: gamma_alpha={} gamma_beta={} gamma_v={} gamma_0={} sign_violations={}",
                dir.display(),
                summary.gamma_alpha_count,
                summary.gamma_beta_count,
                summary.gamma_v_count,
                summary.gamma_0_count,
                summary.sign_violations
            );
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let values: Vec<String> = values
                .into_iter()
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            let (dir, rows) =
                commands::cmd_sweep(&config, &param, &values, &AnalyzeOptions::default())?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} ({} rows, {failed} failed)", dir.display(), rows.len());
        }
        Command::SelftestOscillator { alpha, beta, dt } => {
            let expected = 2.0 * (beta - alpha);
            match commands::cmd_oscillator_selftest(alpha, beta, dt) {
                Ok(r) => println!(
                    "PASS period measured={:.6} expected={:.6} tol={} cycles={}",
                    r.measured, r.expected, r.tol, r.cycles
                ),
                Err(e @ Error::Assertion(_)) => {
                    println!("FAIL expected={expected:.6} tol={}", 2.0 * dt);
                    return Err(e);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
