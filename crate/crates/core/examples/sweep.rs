//! A two-axis parameter sweep, collected into a CSV summary.

use jensen_lab::runner::{self, CheckName, ExperimentConfig, GridAxis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/classical.toml").as_ref())?;
    cfg.checks = vec![CheckName::Jensen, CheckName::Bound];
    cfg.output.dir = std::env::temp_dir().join("jensen-lab-example").display().to_string();
    let axes: Vec<GridAxis> = vec!["p=0.25,0.5,0.75".parse()?, "r=2,3".parse()?];
    let out = runner::sweep_config(&cfg, &axes, true)?;
    print!("{}", out.csv);
    println!("written to {}", out.csv_path.display());
    Ok(())
}
