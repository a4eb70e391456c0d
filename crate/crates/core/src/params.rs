//! Parameter vectors on the optimizer's working scale.
//!
//! Variances are optimized as log-variances so positivity never needs a
//! constraint; AR coefficients enter unchanged. [`ParameterVector`]
//! carries the working values together with per-component names and
//! transforms so the natural scale can always be recovered.

use crate::error::{Error, Result};
use crate::scalar::{is_finite, Scalar};

/// How a working-scale component maps to its natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamTransform {
    /// Natural value is `exp(theta)`; used for variances.
    Log,
    /// Natural value equals the working value; used for AR coefficients.
    Identity,
}

/// A parameter vector on the working scale (e.g. log-variances).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector<T: Scalar> {
    values: Vec<T>,
    names: Vec<String>,
    transforms: Vec<ParamTransform>,
}

impl<T: Scalar> ParameterVector<T> {
    /// Builds a parameter vector from working-scale values.
    pub fn new(
        values: Vec<T>,
        names: Vec<String>,
        transforms: Vec<ParamTransform>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameters(
                "parameter vector must have at least one component".into(),
            ));
        }
        if names.len() != values.len() || transforms.len() != values.len() {
            return Err(Error::InvalidParameters(format!(
                "metadata length mismatch: {} values, {} names, {} transforms",
                values.len(),
                names.len(),
                transforms.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !is_finite(*v)) {
            return Err(Error::InvalidParameters(format!(
                "non-finite working value for component {i}"
            )));
        }
        Ok(Self {
            values,
            names,
            transforms,
        })
    }

    /// Builds a parameter vector from natural-scale values, taking logs
    /// of the components marked [`ParamTransform::Log`].
    pub fn from_natural(
        natural: &[T],
        names: Vec<String>,
        transforms: Vec<ParamTransform>,
    ) -> Result<Self> {
        if natural.len() != transforms.len() {
            return Err(Error::InvalidParameters(format!(
                "metadata length mismatch: {} values, {} transforms",
                natural.len(),
                transforms.len()
            )));
        }
        let mut values = Vec::with_capacity(natural.len());
        for (i, (&v, tr)) in natural.iter().zip(&transforms).enumerate() {
            match tr {
                ParamTransform::Log => {
                    if v <= T::zero() {
                        return Err(Error::InvalidParameters(format!(
                            "component {i} must be positive on the natural scale"
                        )));
                    }
                    values.push(v.ln());
                }
                ParamTransform::Identity => values.push(v),
            }
        }
        Self::new(values, names, transforms)
    }

    /// Same metadata, new working-scale values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(values, self.names.clone(), self.transforms.clone())
    }

    /// Number of parameters `p`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always `false`; present for API completeness.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Working-scale values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Component names, e.g. `log_tau2`.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Working-to-natural transform per component.
    pub fn transforms(&self) -> &[ParamTransform] {
        &self.transforms
    }

    /// Natural-scale values (`exp` of the log-transformed components).
    pub fn natural_scale(&self) -> Vec<T> {
        self.values
            .iter()
            .zip(&self.transforms)
            .map(|(&v, tr)| match tr {
                ParamTransform::Log => v.exp(),
                ParamTransform::Identity => v,
            })
            .collect()
    }
}
