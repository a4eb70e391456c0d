//! Single-column CSV ingestion.

use std::path::Path;

use dkalman::TimeSeries;

use crate::CliError;

/// Reads a single-column CSV of observations.
///
/// An optional one-line header is tolerated on the first non-blank
/// line; blank lines are ignored everywhere. Non-numeric or non-finite
/// rows are rejected with their 1-based line number, as are non-positive
/// values when `log_transform` is set (the series is then `ln`-ed).
pub fn ingest_csv(path: &Path, log_transform: bool) -> Result<TimeSeries<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;

    let mut values = Vec::new();
    let mut saw_data_line = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let field = raw.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => {
                if !v.is_finite() {
                    return Err(CliError::config(format!(
                        "{}: non-finite value on line {line_no}",
                        path.display()
                    )));
                }
                if log_transform {
                    if v <= 0.0 {
                        return Err(CliError::config(format!(
                            "{}: non-positive value {v} on line {line_no} cannot be log-transformed",
                            path.display()
                        )));
                    }
                    values.push(v.ln());
                } else {
                    values.push(v);
                }
                saw_data_line = true;
            }
            Err(_) => {
                if !saw_data_line && values.is_empty() {
                    // header line
                    saw_data_line = true;
                    continue;
                }
                return Err(CliError::config(format!(
                    "{}: non-numeric value {field:?} on line {line_no}",
                    path.display()
                )));
            }
        }
    }

    TimeSeries::new(values)
        .map_err(|_| CliError::config(format!("{}: no observations found", path.display())))
}
