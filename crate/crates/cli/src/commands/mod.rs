pub mod check;
pub mod converge;
pub mod couple;
pub mod dominate;
pub mod invariant;
pub mod simulate;

use std::path::PathBuf;

use crate::config::Loaded;
use crate::error::CliError;

pub struct Context {
    pub loaded: Loaded,
    pub seed: u64,
    pub out: PathBuf,
}

/// Joins already-formatted cells into one CSV line.
pub(crate) fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Files planned but not written mean a command bug, not a user error.
pub(crate) fn report_missing(missing: Vec<String>) -> Result<(), CliError> {
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(format!("outputs listed but not written: {missing:?}")))
    }
}
