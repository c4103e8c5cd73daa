//! Subcommand implementations.

pub mod evaluate;
pub mod normalize;
pub mod protocol;
pub mod synth;

use std::path::{Path, PathBuf};

use fairscore_core::protocols::read_score_table;
use fairscore_core::{DemographicAxis, ScoreTable, TableKind};

use crate::CliError;

/// Read and validate a score table, classifying missing files as
/// configuration errors and malformed content as data errors.
pub fn read_table(
    path: &Path,
    kind: TableKind,
    axis: DemographicAxis,
) -> Result<ScoreTable, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "input {} does not exist",
            path.display()
        )));
    }
    read_score_table(path, kind, axis, None).map_err(CliError::from)
}

pub fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|err| CliError::Core(err.into()))
}
