use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cclab::harness::{self, HarnessError, Scenario};
use cclab::network::ergodicity_bound;

#[derive(Parser)]
#[command(name = "cclab", version, about = "Constrained consensus and distributed optimization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write trace.csv, summary.csv and run.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Execute a scenario and every certificate that applies to it.
    Check {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the ergodicity bound on |[Phi(k,s)]^i_j - 1/m|.
    Bound {
        #[arg(long)]
        eta: f64,
        #[arg(long = "B")]
        b: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        gap: usize,
    },
}

fn load(path: &Path, seed: Option<u64>, horizon: Option<usize>, tol: Option<f64>) -> Result<Scenario, HarnessError> {
    let mut scenario = harness::load_scenario(path)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    if let Some(h) = horizon {
        scenario.horizon = h;
    }
    if let Some(t) = tol {
        scenario.tol = t;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn fail(err: HarnessError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_usage() { 2 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };

    if let Command::Bound { eta, b, m, gap } = cli.command {
        return match ergodicity_bound(eta, b, m, gap) {
            Ok(v) => {
                println!("{v}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }

    let pool = match harness::thread_pool() {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    pool.install(|| match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            horizon,
            tol,
        } => {
            let result = load(&scenario, seed, horizon, tol).and_then(|s| {
                let outcome = harness::execute(&s)?;
                harness::write_outputs(&s, &outcome, &out)?;
                Ok(outcome)
            });
            match result {
                Ok(outcome) if outcome.converged() => ExitCode::SUCCESS,
                Ok(_) => {
                    eprintln!("run did not converge within the horizon");
                    ExitCode::from(1)
                }
                Err(e) => fail(e),
            }
        }
        Command::Check { scenario } => {
            match load(&scenario, None, None, None).and_then(|s| harness::check_scenario(&s)) {
                Ok((_, report)) => {
                    print!("{report}");
                    if report.passes() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Bound { .. } => unreachable!("handled above"),
    })
}
