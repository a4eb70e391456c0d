//! JSON report helpers.
//!
//! All floating-point values pass through a 12-significant-digit
//! rounding before serialization so reruns are byte-identical (except
//! the timestamp). Derived quantities that must satisfy printed
//! identities (AIC/GIC) are computed from the already-rounded inputs
//! and serialized without further rounding.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use crate::CliError;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("rounded float reparses")
}

/// JSON number rounded to 12 significant digits; `null` for non-finite.
pub fn num(x: f64) -> Value {
    let r = sig12(x);
    if r.is_finite() {
        json!(r)
    } else {
        Value::Null
    }
}

/// JSON number serialized at full precision; `null` for non-finite.
pub fn num_exact(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn vec_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn slice_json(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn mat_json(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

/// Common envelope: schema version and timestamp around the payload.
pub fn envelope(command: &str, payload: Map<String, Value>) -> Value {
    let mut map = Map::new();
    map.insert("schema_version".into(), json!(1));
    map.insert("command".into(), json!(command));
    map.insert(
        "timestamp".into(),
        json!(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true)),
    );
    for (k, v) in payload {
        map.insert(k, v);
    }
    Value::Object(map)
}

/// Writes pretty JSON to `out`, or to stdout when `out` is `None`.
pub fn write_report(out: Option<&Path>, report: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::config(format!("cannot serialize report: {e}")))?;
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)
                .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
            writeln!(f, "{text}")
                .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounds_to_twelve_digits() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(123456789012345.0), 123456789012000.0);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(-2.5e-300), -2.5e-300);
        assert!(sig12(f64::NAN).is_nan());
    }

    #[test]
    fn non_finite_serializes_as_null() {
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(num_exact(f64::NAN), Value::Null);
    }
}
