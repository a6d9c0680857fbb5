use std::path::PathBuf;
use std::process::ExitCode;

use bundle_accel_cli::commands::{self, CompareOutcome};
use bundle_accel_cli::output::RunStatus;
use bundle_accel_cli::{CliError, ConfigOverrides};
use clap::{Parser, Subcommand};

/// Proximal bundle method experiments.
#[derive(Parser)]
#[command(name = "bundle-accel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write a CSV trace plus JSON sidecar.
    Run {
        /// TOML file of `key = value` settings; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Run several solvers on one objective and summarize them.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Solver entries `name[@rho]`, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        solvers: Vec<String>,
        /// ρ values for bundle solvers given without `@rho`.
        #[arg(long, value_delimiter = ',')]
        rhos: Vec<f64>,
        #[arg(long, default_value = "compare-out")]
        output_dir: PathBuf,
    },
    /// Re-run the certificate checks on a recorded run (CSV or sidecar).
    Verify {
        path: PathBuf,
        /// Samples per model snapshot for the minorant check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = overrides.resolve(config.as_deref())?;
            let outcome = commands::run(&cfg)?;
            let s = &outcome.summary;
            println!(
                "{} on {}: {} iterations, f = {:e}, gap = {}",
                cfg.solver,
                cfg.objective,
                s.iterations_completed,
                s.final_f,
                s.final_gap
                    .map(|g| format!("{g:e}"))
                    .unwrap_or_else(|| "unknown".into())
            );
            for c in &s.certificates {
                println!("  {:<16} {}", c.name, c.status.label());
            }
            println!("wrote {} and {}", outcome.csv.display(), outcome.sidecar.display());
            if let RunStatus::InnerBudgetExhausted { message } = &outcome.status {
                eprintln!("error: {message}; partial record written");
            }
            Ok(outcome.exit_code())
        }
        Command::Compare {
            config,
            overrides,
            solvers,
            rhos,
            output_dir,
        } => {
            let base = overrides.resolve(config.as_deref())?;
            let entries = commands::parse_entries(&solvers, &rhos, base.rho)?;
            let outcome: CompareOutcome =
                commands::compare(&base, &entries, &output_dir, commands::threads_from_env())?;
            print!("{}", commands::compare_table(&outcome));
            println!("wrote {}", outcome.summary_path.display());
            Ok(outcome.exit_code())
        }
        Command::Verify { path, samples } => {
            let outcome = commands::verify(&path, samples)?;
            print!("{}", outcome.table());
            if let RunStatus::InnerBudgetExhausted { message } = &outcome.status {
                println!("note: partial record ({message})");
            }
            if outcome.passed() {
                println!("verify: all checks passed");
                Ok(0)
            } else {
                println!("verify: FAILED");
                Ok(1)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
