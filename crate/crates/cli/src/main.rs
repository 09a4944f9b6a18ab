use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gbsde::list_catalog;
use gbsde_cli::{exit, run, RunOptions, SCHEMA};

/// Reproducible experiments on geometric, log-quadratic and two-driver BSDEs.
#[derive(Parser)]
#[command(name = "gbsde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config and write CSV, JSON metadata and a manifest.
    ///
    /// Exit status: 0 on success, 1 on solver or I/O errors, 2 on an invalid config,
    /// 3 when audits fail under strict mode.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Write artifacts here instead of the configured directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Base directory for relative or missing `output_dir` entries.
        #[arg(long, env = "GBSDE_OUTPUT_ROOT", default_value = "gbsde-out")]
        output_root: PathBuf,
        /// Exit with status 3 when any audit or check fails.
        #[arg(long)]
        strict: bool,
        /// Do not print the report.
        #[arg(short, long)]
        quiet: bool,
    },
    /// List catalog drivers with their documented assumptions.
    Catalog {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print the JSON Schema of experiment configs.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, output, output_root, strict, quiet } => {
            let opts = RunOptions { output, output_root: Some(output_root), strict };
            match run(&config, &opts) {
                Ok(summary) => {
                    if !quiet {
                        print!("{}", summary.report);
                        println!("config sha256 {}", summary.config_sha256);
                        println!("wrote {} files to {}", summary.files.len(), summary.output_dir.display());
                    }
                    if summary.exit_code() == exit::STRICT {
                        eprintln!("error: {} audit(s) failed under strict mode", summary.failures);
                    }
                    summary.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Catalog { json } => {
            let listing = list_catalog();
            if json {
                println!("{}", serde_json::to_string_pretty(&listing).expect("catalog serializes"));
            } else {
                println!("{:<20} {:<10} documented assumptions", "name", "family");
                for l in &listing {
                    let ids: Vec<&str> = l.documented.iter().map(|a| a.label()).collect();
                    println!("{:<20} {:<10} {}", l.name, l.family.to_string(), if ids.is_empty() { "-".to_string() } else { ids.join(", ") });
                }
            }
            exit::OK
        }
        Command::Schema => {
            print!("{SCHEMA}");
            exit::OK
        }
    };
    ExitCode::from(code as u8)
}
