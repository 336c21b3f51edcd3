//! JSON files: loading with validation, and deterministic pretty output.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::partition::Partition;
use crate::ppf::PiecewisePoly;

/// Reads and validates any of the crate's JSON documents.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Pretty JSON with a trailing newline. Field order is fixed by the types,
/// so equal values give identical bytes.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn load_ppf(path: &Path) -> Result<PiecewisePoly> {
    load_json(path)
}

pub fn load_partition(path: &Path) -> Result<Partition> {
    load_json(path)
}
