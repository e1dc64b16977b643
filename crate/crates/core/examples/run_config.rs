//! Run a TOML experiment config through the runner, as `jensen-lab run` does.
//!
//! cargo run --example run_config -- configs/jordan_hom.toml

use std::path::PathBuf;

use jensen_lab::runner::{self, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/classical.toml")));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.output.dir = std::env::temp_dir().join("jensen-lab-example").display().to_string();
    let out = runner::run_config(&cfg)?;
    print!("{}", runner::summarize(&out.record));
    println!("report written to {}", out.path.display());
    Ok(())
}
