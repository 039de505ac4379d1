use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aperture::experiment::{run_command, schema_description};
use aperture::operators::set_pucci_minus_fault;
use aperture::verify::{format_table, run_suite};

#[derive(Parser)]
#[command(name = "aperture", version, about = "Fully nonlinear parabolic solver and regularity estimators")]
struct Cli {
    /// Print the results.csv schema and exit.
    #[arg(long)]
    schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (or re-run the config stored in a manifest.json).
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep points solved in parallel; overrides `run.workers`.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run a property suite: operators, solver, regularity, goodsets or all.
    Verify {
        suite: String,
        /// Deliberately break the build to check that the suites notice.
        #[arg(long, hide = true, value_parser = ["pucci-minus-sign"])]
        fault: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.schema {
        print!("{}", schema_description());
        return ExitCode::SUCCESS;
    }
    match cli.command {
        Some(Command::Run { config, out, workers }) => {
            let code = run_command(&config, out.as_deref(), workers);
            ExitCode::from(code.clamp(0, 255) as u8)
        }
        Some(Command::Verify { suite, fault }) => {
            if fault.is_some() {
                set_pucci_minus_fault(true);
            }
            match run_suite(&suite) {
                Ok(checks) => {
                    print!("{}", format_table(&checks));
                    if checks.iter().all(|c| c.passed) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        None => {
            eprintln!("nothing to do; see --help");
            ExitCode::from(2)
        }
    }
}
