//! Finite-difference derivative oracle.
//!
//! The numerical-difference baseline the differential filter replaces;
//! kept as an independent check for tests and the `gradcheck` command.
//! Central differences with a relative step `C|theta_j|` and an absolute
//! floor for components near zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{cast, is_finite, Scalar};

/// Step-size rule for the central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig<T: Scalar> {
    /// Relative step `C`; the step for component `j` is `C |theta_j|`.
    pub rel_step: T,
    /// Absolute floor used when `|theta_j|` is tiny.
    pub abs_floor: T,
}

impl<T: Scalar> Default for FdConfig<T> {
    fn default() -> Self {
        Self {
            rel_step: cast(1e-4),
            abs_floor: cast(1e-8),
        }
    }
}

impl<T: Scalar> FdConfig<T> {
    fn step(&self, theta_j: T) -> T {
        (self.rel_step * theta_j.abs()).max(self.abs_floor)
    }
}

/// Central-difference gradient of a scalar function.
///
/// Performs exactly `2p` evaluations of `loglik_fn`.
pub fn fd_gradient<T, F>(
    mut loglik_fn: F,
    theta: &DVector<T>,
    cfg: &FdConfig<T>,
) -> Result<DVector<T>>
where
    T: Scalar,
    F: FnMut(&DVector<T>) -> Result<T>,
{
    let p = theta.len();
    let mut grad = DVector::zeros(p);
    let mut point = theta.clone();
    for j in 0..p {
        let dj = cfg.step(theta[j]);
        point[j] = theta[j] + dj;
        let plus = loglik_fn(&point).map_err(|_| Error::NonFiniteEvaluation { param: j })?;
        point[j] = theta[j] - dj;
        let minus = loglik_fn(&point).map_err(|_| Error::NonFiniteEvaluation { param: j })?;
        point[j] = theta[j];
        if !(is_finite(plus) && is_finite(minus)) {
            return Err(Error::NonFiniteEvaluation { param: j });
        }
        grad[j] = (plus - minus) / (cast::<T>(2.0) * dj);
    }
    Ok(grad)
}

/// Central-difference Jacobian of a gradient function, symmetrized by
/// averaging with its transpose.
pub fn fd_hessian<T, F>(mut grad_fn: F, theta: &DVector<T>, cfg: &FdConfig<T>) -> Result<DMatrix<T>>
where
    T: Scalar,
    F: FnMut(&DVector<T>) -> Result<DVector<T>>,
{
    let p = theta.len();
    let mut hess = DMatrix::zeros(p, p);
    let mut point = theta.clone();
    for j in 0..p {
        let dj = cfg.step(theta[j]);
        point[j] = theta[j] + dj;
        let plus = grad_fn(&point).map_err(|_| Error::NonFiniteEvaluation { param: j })?;
        point[j] = theta[j] - dj;
        let minus = grad_fn(&point).map_err(|_| Error::NonFiniteEvaluation { param: j })?;
        point[j] = theta[j];
        if plus.len() != p || minus.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "gradient function returned {} components, expected {p}",
                plus.len()
            )));
        }
        if !(plus.iter().all(|v| is_finite(*v)) && minus.iter().all(|v| is_finite(*v))) {
            return Err(Error::NonFiniteEvaluation { param: j });
        }
        let col = (plus - minus) / (cast::<T>(2.0) * dj);
        hess.set_column(j, &col);
    }
    let sym = (&hess + hess.transpose()) * cast::<T>(0.5);
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::cell::Cell;

    #[test]
    fn quadratic_gradient_is_exact() {
        // l(theta) = -theta' theta / 2 has gradient -theta.
        let f = |t: &DVector<f64>| Ok(-0.5 * t.dot(t));
        let theta = DVector::from_column_slice(&[1.0, 2.0]);
        let g = fd_gradient(f, &theta, &FdConfig::default()).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], -2.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let theta = DVector::from_column_slice(&[0.3, -0.7, 0.0]);
        let g = fd_gradient(|_| Ok(4.25), &theta, &FdConfig::default()).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(g[j], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn performs_exactly_2p_evaluations() {
        let count = Cell::new(0usize);
        let theta = DVector::from_column_slice(&[0.5, -1.0, 2.0]);
        fd_gradient(
            |t: &DVector<f64>| {
                count.set(count.get() + 1);
                Ok(-t.dot(t))
            },
            &theta,
            &FdConfig::default(),
        )
        .unwrap();
        assert_eq!(count.get(), 6);
    }

    #[test]
    fn zero_component_uses_absolute_floor() {
        let theta = DVector::from_column_slice(&[0.0]);
        let g = fd_gradient(
            |t: &DVector<f64>| Ok(t[0] * 3.0),
            &theta,
            &FdConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(g[0], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn non_finite_evaluation_names_component() {
        let theta = DVector::from_column_slice(&[1.0, 1.0]);
        let err = fd_gradient(
            |t: &DVector<f64>| {
                if t[1] > 1.0 {
                    Ok(f64::NAN)
                } else {
                    Ok(0.0)
                }
            },
            &theta,
            &FdConfig::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteEvaluation { param } => assert_eq!(param, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn quadratic_form_hessian() {
        // l(theta) = -theta' A theta / 2 has Hessian -A.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let grad = {
            let a = a.clone();
            move |t: &DVector<f64>| Ok(-(&a * t))
        };
        let theta = DVector::from_column_slice(&[0.4, -0.9]);
        let h = fd_hessian(grad, &theta, &FdConfig::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(h[(i, j)], -a[(i, j)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn separable_function_has_zero_cross_terms() {
        let grad =
            |t: &DVector<f64>| Ok(DVector::from_column_slice(&[t[0].powi(3), (-t[1]).exp()]));
        let theta = DVector::from_column_slice(&[0.8, 0.2]);
        let h = fd_hessian(grad, &theta, &FdConfig::default()).unwrap();
        assert!(h[(0, 1)].abs() < 1e-8);
        assert!(h[(1, 0)].abs() < 1e-8);
    }

    #[test]
    fn error_shrinks_quadratically_in_the_step() {
        // Cubic objective: central-difference error is O(step^2).
        let f = |t: &DVector<f64>| Ok(t[0].powi(3));
        let theta = DVector::from_column_slice(&[1.5]);
        let truth = 3.0 * 1.5f64.powi(2);
        let err_at = |c: f64| {
            let cfg = FdConfig {
                rel_step: c,
                abs_floor: 1e-12,
            };
            (fd_gradient(f, &theta, &cfg).unwrap()[0] - truth).abs()
        };
        let ratio = err_at(1e-2) / err_at(5e-3);
        assert!(
            (3.0..5.0).contains(&ratio),
            "expected ~4x error reduction, got {ratio}"
        );
    }
}
