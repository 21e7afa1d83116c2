use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lighthall_cli::{cmd_fib_report, cmd_replay, cmd_run, ReplayVerdict, RunConfig};

#[derive(Parser)]
#[command(name = "icn-lighthall", version, about = "Named-data smart-lighting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "ICN_LIGHTHALL_OUT", default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a scenario field, e.g. `--set filtering=true`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write trace.txt for later replay.
        #[arg(long)]
        trace: bool,
    },
    /// Print exhibition router FIBs and face filters in both modes.
    FibReport {
        #[arg(short, long, default_value_t = 5)]
        m: usize,
        #[arg(short, long, default_value_t = 4)]
        n: usize,
    },
    /// Re-run a recorded trace and compare.
    Replay {
        trace: PathBuf,
        /// Scenario the trace is expected to have been recorded from.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            overrides,
            trace,
        } => {
            let config = RunConfig {
                scenario,
                out,
                seed,
                overrides,
                trace,
            };
            for path in cmd_run(&config)? {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::FibReport { m, n } => {
            print!("{}", cmd_fib_report(m, n)?);
            Ok(0)
        }
        Command::Replay {
            trace,
            scenario,
            overrides,
        } => {
            let verdict = cmd_replay(&trace, scenario.as_deref(), &overrides)?;
            match &verdict {
                ReplayVerdict::Match => println!("replay matches"),
                ReplayVerdict::Diverged {
                    index,
                    recorded,
                    replayed,
                } => {
                    eprintln!("diverged at line {index}");
                    eprintln!("  recorded: {}", recorded.as_deref().unwrap_or("<end of trace>"));
                    eprintln!("  replayed: {}", replayed.as_deref().unwrap_or("<end of run>"));
                }
                ReplayVerdict::ConfigMismatch(diff) => eprintln!("error: configuration differs from trace: {diff}"),
            }
            Ok(verdict.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
