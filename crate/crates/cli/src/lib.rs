//! Scenario runner behind the `tendonsim` binary.

use std::fmt;
use std::path::{Path, PathBuf};

pub mod output;
pub mod run;
pub mod scenario;

pub use run::{run_scenario, RunOutput};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioKind};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad scenario file or parameters.
    Config(String),
    /// The model rejected the inputs or failed numerically.
    Model(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Model(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Model(m) => write!(f, "model error: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tendonsim_core::Error> for CliError {
    fn from(e: tendonsim_core::Error) -> Self {
        match e {
            tendonsim_core::Error::Configuration(_) => Self::Config(e.to_string()),
            _ => Self::Model(e.to_string()),
        }
    }
}

/// A path on disk if one exists, otherwise a bundled scenario name.
pub fn resolve(spec: &str) -> Result<Scenario, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        return load_scenario(path);
    }
    match scenario::bundled(spec) {
        Some(b) => parse_scenario(b.text),
        None => Err(CliError::Io(format!(
            "{spec}: no such file or bundled scenario (see `tendonsim list`)"
        ))),
    }
}

/// Runs a scenario and writes `<name>.csv` (and `<name>.svg`) under `out`.
/// Returns the paths written.
pub fn execute(
    scenario: &Scenario,
    out: &Path,
    svg: bool,
    seed: Option<u64>,
) -> Result<(RunOutput, Vec<PathBuf>), CliError> {
    let result = run_scenario(scenario, seed)?;
    // render before writing anything so a bad plot leaves no files behind
    let svg_text = if svg {
        Some(output::render_svg(&result.plot)?)
    } else {
        None
    };
    let csv_path = out.join(format!("{}.csv", scenario.name));
    output::emit_csv(&result.table, &csv_path)?;
    let mut written = vec![csv_path];
    if let Some(text) = svg_text {
        let svg_path = out.join(format!("{}.svg", scenario.name));
        output::write_atomic(&svg_path, &text)?;
        written.push(svg_path);
    }
    Ok((result, written))
}
