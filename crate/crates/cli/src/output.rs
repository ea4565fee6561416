//! CSV and JSON summary writers.

use std::path::Path;

use crate::util::CliError;

/// Writes `lines` (header first) with trailing newlines. Output is exactly
/// the joined lines, so identical inputs produce byte-identical files.
pub fn write_csv(path: &Path, lines: &[String]) -> Result<(), CliError> {
    let mut body = lines.join("\n");
    body.push('\n');
    std::fs::write(path, body)
        .map_err(|e| CliError::Constraint(format!("I/O error writing {}: {e}", path.display())))
}

/// Writes the machine-readable summary when a path was requested.
pub fn write_summary(path: Option<&Path>, summary: &serde_json::Value) -> Result<(), CliError> {
    let Some(path) = path else {
        return Ok(());
    };
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Constraint(format!("cannot serialize summary: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Constraint(format!("I/O error writing {}: {e}", path.display())))
}

/// Compact float formatting for CSV cells: decimal where exact, `{:e}`-style
/// otherwise, stable across runs.
pub fn fmt_f64(value: f64) -> String {
    if value == value.trunc() && value.abs() < 1e15 {
        format!("{value:.1}")
    } else {
        format!("{value:.12e}")
    }
}
