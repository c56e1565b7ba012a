use std::path::Path;

use serde::Serialize;

use crate::error::{io_error, CliResult};

/// Version of every CSV and JSON layout written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}
