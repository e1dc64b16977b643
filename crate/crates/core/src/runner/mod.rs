//! Config-driven experiment runner: builds the algebra, parameters, control
//! and map from an [`ExperimentConfig`], runs the enabled checks and persists
//! a [`RunRecord`].
//!
//! Exit codes: `0` all enabled checks pass, `1` some check failed or was
//! refused, `2` invalid configuration, `3` divergent configuration, `4` I/O
//! failure.

mod config;
mod pipeline;
mod record;
mod selftest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{
    BaseKind, CheckName, ConfigError, ControlFamilyName, ControlSpec, DirectionSpec, ExperimentConfig, MapSpec, Mode,
    OutputFormat, OutputSpec, PerturbationFamily, PerturbationSpec, Sampling, Tolerances,
};
pub use pipeline::build_map;
pub use record::{median, CheckRecord, RunRecord, Verdict, WitnessRecord, SCHEMA_VERSION};
pub use selftest::{selftest, SelftestLine};

/// Overrides `output.dir` of every config.
pub const OUT_DIR_ENV: &str = "JENSEN_LAB_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_DIVERGENT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(ConfigError),
    /// Names the violated ratio condition.
    Divergent(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_INVALID_CONFIG,
            RunError::Divergent(_) => EXIT_DIVERGENT,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Divergent(m) => write!(f, "divergent configuration: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Runs every enabled check of `cfg` and returns the record without writing
/// it.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunRecord, RunError> {
    let start = Instant::now();
    cfg.validate()?;
    let mut record = pipeline::run_checks(cfg)?;
    record.wall_time_s = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Output directory: the environment override, else `output.dir`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

fn report_stem(cfg: &ExperimentConfig) -> String {
    cfg.output.name.clone().unwrap_or_else(|| "run".to_string())
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub path: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.record.passed() {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// An unreadable file is an I/O error, not an invalid config.
fn load(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_file_text(&text, path)?)
}

/// Loads, runs and persists one config. `seed` overrides the master seed.
pub fn run(config_path: &Path, seed: Option<u64>) -> Result<RunOutcome, RunError> {
    let mut cfg = load(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    run_config(&cfg)
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let record = execute(cfg)?;
    let path = output_dir(cfg).join(format!("{}.json", report_stem(cfg)));
    write_atomic(&path, record.to_json().as_bytes())?;
    Ok(RunOutcome { record, path })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for GridAxis {
    type Err = ConfigError;

    /// `axis=v1,v2,...`
    fn from_str(spec: &str) -> Result<Self, ConfigError> {
        let bad = |m: String| ConfigError {
            field: Some("grid".into()),
            line: None,
            message: m,
        };
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| bad(format!("`{spec}` is not of the form axis=v1,v2,...")))?;
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        if values.is_empty() {
            return Err(bad(format!("axis `{name}` has no values")));
        }
        Ok(GridAxis {
            name: name.trim().to_string(),
            values,
        })
    }
}

/// Result of one sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub coords: Vec<String>,
    pub seed: u64,
    pub outcome: Result<RunRecord, RunError>,
}

impl SweepCell {
    pub fn verdict_str(&self) -> &'static str {
        match &self.outcome {
            Ok(r) => r.verdict.as_str(),
            Err(RunError::Config(_)) => "invalid",
            Err(RunError::Divergent(_)) => "divergent",
            Err(RunError::Io(_)) => "io_error",
        }
    }

    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.passed())
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub dir: PathBuf,
    pub csv_path: PathBuf,
    pub csv: String,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.cells.iter().all(SweepCell::passed) {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Cartesian product in lexicographic order, first axis slowest.
fn cell_coords(axes: &[GridAxis]) -> Vec<Vec<String>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    cells
}

fn fmt_float(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

/// Runs every cell of the grid, writes one record per cell plus
/// `summary.csv`, and keeps going past failing cells.
pub fn sweep(
    config_path: &Path,
    axes: &[GridAxis],
    seed: Option<u64>,
    parallel: bool,
) -> Result<SweepOutcome, RunError> {
    let mut cfg = load(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    sweep_config(&cfg, axes, parallel)
}

pub fn sweep_config(cfg: &ExperimentConfig, axes: &[GridAxis], parallel: bool) -> Result<SweepOutcome, RunError> {
    if axes.is_empty() {
        return Err(RunError::Config(ConfigError {
            field: Some("grid".into()),
            line: None,
            message: "sweep needs at least one --grid axis".into(),
        }));
    }
    let mut names = std::collections::BTreeSet::new();
    for axis in axes {
        if axis.values.is_empty() {
            return Err(RunError::Config(ConfigError {
                field: Some(axis.name.clone()),
                line: None,
                message: "empty grid axis".into(),
            }));
        }
        if !names.insert(axis.name.as_str()) {
            return Err(RunError::Config(ConfigError {
                field: Some(axis.name.clone()),
                line: None,
                message: "axis given twice".into(),
            }));
        }
        // reject unknown axes and unparsable values before running anything
        for v in &axis.values {
            cfg.clone().set_axis(&axis.name, v)?;
        }
    }
    let dir = output_dir(cfg).join(format!("{}-sweep", report_stem(cfg)));
    let coords = cell_coords(axes);
    let run_cell = |(index, coords): (usize, &Vec<String>)| -> SweepCell {
        let mut c = cfg.clone();
        let mut outcome = Ok(());
        for (axis, v) in axes.iter().zip(coords) {
            if let Err(e) = c.set_axis(&axis.name, v) {
                outcome = Err(RunError::Config(e));
                break;
            }
        }
        c.output.name = Some(format!("cell-{index:04}"));
        let outcome = outcome.and_then(|()| execute(&c));
        SweepCell {
            index,
            coords: coords.clone(),
            seed: c.seed,
            outcome,
        }
    };
    let cells: Vec<SweepCell> = if parallel {
        coords.par_iter().enumerate().map(run_cell).collect()
    } else {
        coords.iter().enumerate().map(run_cell).collect()
    };
    for cell in &cells {
        if let Ok(record) = &cell.outcome {
            write_atomic(
                &dir.join(format!("cell-{:04}.json", cell.index)),
                record.to_json().as_bytes(),
            )?;
        }
    }
    let csv = summary_csv(cfg, axes, &cells)?;
    let csv_path = dir.join("summary.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    Ok(SweepOutcome {
        cells,
        dir,
        csv_path,
        csv,
    })
}

fn summary_csv(cfg: &ExperimentConfig, axes: &[GridAxis], cells: &[SweepCell]) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cell".to_string()];
    header.extend(axes.iter().map(|a| a.name.clone()));
    header.extend(
        ["seed", "verdict", "n_star", "max_fh_gap", "bound"]
            .iter()
            .map(|s| s.to_string()),
    );
    header.extend(cfg.checks.iter().map(|c| format!("{}_verdict", c.as_str())));
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for cell in cells {
        let mut row = vec![cell.index.to_string()];
        row.extend(cell.coords.iter().cloned());
        row.push(cell.seed.to_string());
        row.push(cell.verdict_str().to_string());
        match &cell.outcome {
            Ok(r) => {
                row.push(r.n_star.map(|n| n.to_string()).unwrap_or_default());
                row.push(fmt_float(r.max_fh_gap));
                row.push(fmt_float(r.bound));
                for c in &cfg.checks {
                    row.push(r.check(*c).map(|c| c.verdict.as_str()).unwrap_or("").to_string());
                }
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 3 + cfg.checks.len())),
        }
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// One line per check, for terminal output.
pub fn summarize(record: &RunRecord) -> String {
    let mut s = String::new();
    for c in &record.checks {
        let _ = write!(s, "{:<13} {:<8}", c.name.as_str(), c.verdict.as_str());
        if let Some(m) = c.max {
            let _ = write!(s, " max={m:.3e}");
        }
        if let Some(note) = &c.note {
            let _ = write!(s, " ({note})");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "overall       {}", record.verdict.as_str());
    s
}

/// Derived seeds, keyed by label, for the record's seed chain.
pub(crate) struct SeedChain {
    master: u64,
    used: BTreeMap<String, u64>,
}

impl SeedChain {
    pub(crate) fn new(master: u64) -> Self {
        SeedChain {
            master,
            used: BTreeMap::new(),
        }
    }

    pub(crate) fn get(&mut self, label: &str) -> u64 {
        let s = crate::seeded::derive_seed(self.master, label);
        self.used.insert(label.to_string(), s);
        s
    }

    pub(crate) fn into_map(mut self) -> BTreeMap<String, u64> {
        self.used.insert("master".into(), self.master);
        self.used
    }
}
