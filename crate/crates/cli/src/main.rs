use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ucont_cli::{parse_config, run, Kind, Status};

#[derive(Parser)]
#[command(name = "ucont", version, about = "Unique-continuation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report and data files.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Validate a config and print it with defaults filled in.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListKinds,
}

fn load(path: &PathBuf) -> Result<ucont_cli::ExperimentConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return Err(ExitCode::from(2));
        }
    };
    parse_config(&text).map_err(|errors| {
        for e in errors {
            eprintln!("error: {e}");
        }
        ExitCode::from(2)
    })
}

fn threads() {
    if let Some(n) = std::env::var("UCONT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListKinds => {
            for k in Kind::ALL {
                println!("{:<16} {}", k.name(), k.summary());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, output_dir } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            threads();
            match run(&cfg) {
                Ok(report) => {
                    for c in &report.checks {
                        let tag = match c.status {
                            Status::Pass => "pass",
                            Status::Fail => "FAIL",
                            Status::Exploratory => "info",
                        };
                        println!("[{tag}] {}: {:e} (tolerance {:e}) {}", c.name, c.value, c.tolerance, c.detail);
                    }
                    println!("report: {}", cfg.output_dir.join("report.json").display());
                    if report.failed() {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
