use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hsmax_cli::{exit, plan, run, CliError, RunConfig, RunOptions};

const OUT_ENV: &str = "HSMAX_OUT";

#[derive(Parser)]
#[command(name = "hsmax", version, about = "Maximal-operator verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output directory. Falls back to the config's `out`, then $HSMAX_OUT, then `hsmax-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every check tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Execute evaluations and checks, write artifacts.
    Run { config: PathBuf },
    /// Print the execution plan without computing anything.
    Describe { config: PathBuf },
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hsmax-out"))
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Describe { config } => {
            let cfg = RunConfig::load(config)?;
            print!("{}", plan::describe(&cfg));
            Ok(exit::OK)
        }
        Command::Run { config } => {
            let cfg = RunConfig::load(config)?;
            let opts = RunOptions {
                workers: cli.workers,
                out: out_dir(cli, &cfg),
                seed: cli.seed,
                tolerance_scale: cli.tolerance_scale,
            };
            let outcome = run::run(&cfg, &opts)?;
            print!("{}", run::table(&outcome));
            println!("artifacts in {}", opts.out.display());
            Ok(if outcome.all_pass() { exit::OK } else { exit::CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
