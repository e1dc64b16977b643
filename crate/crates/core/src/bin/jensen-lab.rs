use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jensen_lab::runner::{self, GridAxis};

#[derive(Parser)]
#[command(name = "jensen-lab", about = "Hyers-Ulam stability experiments for the generalized Jensen equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled check of a config and write its report.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the cartesian product of grid axes.
    Sweep {
        config: PathBuf,
        /// `axis=v1,v2,...` with axis one of r, s, t, eps, p, dim, seed.
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run cells one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Run the built-in invariant suite.
    Selftest,
    /// Print the tool version.
    Version,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed } => match runner::run(&config, seed) {
            Ok(out) => {
                print!("{}", runner::summarize(&out.record));
                println!("report: {}", out.path.display());
                code(out.exit_code())
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
        Command::Sweep {
            config,
            grid,
            seed,
            serial,
        } => {
            let axes = match grid.iter().map(|g| g.parse::<GridAxis>()).collect::<Result<Vec<_>, _>>() {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: invalid config: {e}");
                    return code(runner::EXIT_INVALID_CONFIG);
                }
            };
            match runner::sweep(&config, &axes, seed, !serial) {
                Ok(out) => {
                    for cell in &out.cells {
                        println!("cell {:04} [{}] {}", cell.index, cell.coords.join(", "), cell.verdict_str());
                    }
                    println!("summary: {}", out.csv_path.display());
                    code(out.exit_code())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
        Command::Selftest => {
            let lines = runner::selftest();
            for l in &lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            code(if lines.iter().all(|l| l.pass) { 0 } else { 1 })
        }
        Command::Version => {
            println!("jensen-lab {}", runner::tool_version());
            code(0)
        }
    }
}
