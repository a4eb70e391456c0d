//! Observed time series.

use crate::error::{Error, Result};
use crate::scalar::{is_finite, Scalar};

/// A univariate time series `y_1, ..., y_N`.
///
/// Guaranteed non-empty with every value finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Wraps a vector of observations, rejecting empty or non-finite input.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries(
                "series must contain at least one observation".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !is_finite(*v)) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { values })
    }

    /// Number of observations `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always `false`; present for API completeness.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observations in time order.
    pub fn values(&self) -> &[T] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_finite_series() {
        let y = TimeSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y.len(), 3);
        assert_eq!(y.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_empty() {
        assert!(TimeSeries::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn rejects_non_finite_with_index() {
        let err = TimeSeries::new(vec![1.0, f64::NAN]).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }
}
