//! Fisher-information and Hessian estimates and the information
//! criteria AIC and GIC/TIC.
//!
//! `I` is the average outer product of the per-observation scores and
//! `J` the negated average Hessian; the GIC bias correction is
//! `tr(I J^{-1})`, which reduces to the parameter count `p` (AIC) when
//! the model is correctly specified and `I = J`. Under maximum
//! likelihood estimation GIC coincides with TIC.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{cast, is_finite, Scalar};

/// Condition-number limit above which `J` is treated as numerically
/// singular and the bias correction is reported as undefined.
pub const J_CONDITION_LIMIT: f64 = 1e12;

/// Information-criteria summary for one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaReport<T: Scalar> {
    /// Log-likelihood at the estimate.
    pub loglik: T,
    /// Parameter count `p`.
    pub param_dim: usize,
    /// Observation count `N`.
    pub n_obs: usize,
    /// Fisher-information estimate `I` (average score outer product).
    pub i_hat: DMatrix<T>,
    /// Negated average Hessian `J`.
    pub j_hat: DMatrix<T>,
    /// Bias correction `tr(I J^{-1})`; `None` when `J` is numerically
    /// singular (condition estimate above [`J_CONDITION_LIMIT`]).
    pub b_gic: Option<T>,
    /// `GIC = -2 loglik + 2 b_gic`; `None` whenever `b_gic` is.
    pub gic: Option<T>,
    /// `AIC = -2 loglik + 2 p`.
    pub aic: T,
    /// Condition estimate of `J` (ratio of extreme eigenvalue moduli).
    pub j_condition: T,
}

/// One row of a model-comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow<T: Scalar> {
    /// Model label supplied by the caller.
    pub label: String,
    /// Log-likelihood at the estimate.
    pub loglik: T,
    /// Parameter count `p` (the AIC bias correction).
    pub param_dim: usize,
    /// GIC bias correction, when defined.
    pub b_gic: Option<T>,
    /// Akaike criterion.
    pub aic: T,
    /// Generalized criterion, when defined.
    pub gic: Option<T>,
}

/// Average outer product of the per-observation scores:
/// `(1/N) sum_n s_n s_n^T` over the rows of `scores`.
pub fn fisher_information<T: Scalar>(scores: &DMatrix<T>) -> Result<DMatrix<T>> {
    if scores.nrows() == 0 {
        return Err(Error::NonFiniteCriteriaInput("empty score matrix".into()));
    }
    if !scores.iter().all(|v| is_finite(*v)) {
        return Err(Error::NonFiniteCriteriaInput(
            "score matrix has non-finite entries".into(),
        ));
    }
    let n = cast::<T>(scores.nrows() as f64);
    Ok(scores.transpose() * scores / n)
}

/// Negated average Hessian: `J = -(1/N) hessian`, where `hessian` is the
/// total (already summed over observations).
pub fn neg_hessian_estimate<T: Scalar>(hessian: &DMatrix<T>, n_obs: usize) -> DMatrix<T> {
    -hessian / cast::<T>(n_obs.max(1) as f64)
}

/// Assembles the criteria report from `I`, `J`, and the log-likelihood.
///
/// A numerically singular `J` (condition above [`J_CONDITION_LIMIT`]) is
/// flagged by leaving `b_gic`/`gic` undefined rather than inverting
/// through the noise; AIC is always defined.
pub fn gic<T: Scalar>(
    loglik: T,
    i_hat: &DMatrix<T>,
    j_hat: &DMatrix<T>,
    n_obs: usize,
) -> Result<CriteriaReport<T>> {
    let p = i_hat.nrows();
    if i_hat.shape() != (p, p) || j_hat.shape() != (p, p) || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "I and J must be square of equal size, got {:?} and {:?}",
            i_hat.shape(),
            j_hat.shape()
        )));
    }
    if !(is_finite(loglik)
        && i_hat.iter().all(|v| is_finite(*v))
        && j_hat.iter().all(|v| is_finite(*v)))
    {
        return Err(Error::NonFiniteCriteriaInput(
            "I, J, and the log-likelihood must be finite".into(),
        ));
    }

    let two = cast::<T>(2.0);
    let aic = -two * loglik + two * cast::<T>(p as f64);

    let eig = j_hat.clone().symmetric_eigen();
    let mut max_abs = T::zero();
    let mut min_abs = cast::<T>(f64::INFINITY);
    for &l in eig.eigenvalues.iter() {
        max_abs = max_abs.max(l.abs());
        min_abs = min_abs.min(l.abs());
    }
    let j_condition = if min_abs > T::zero() {
        max_abs / min_abs
    } else {
        cast::<T>(f64::INFINITY)
    };

    let (b_gic, gic) = if is_finite(j_condition) && j_condition <= cast(J_CONDITION_LIMIT) {
        // J^{-1} = U diag(1/lambda) U^T; b = tr(I J^{-1}).
        let mut j_inv = DMatrix::zeros(p, p);
        for (idx, &l) in eig.eigenvalues.iter().enumerate() {
            let u = eig.eigenvectors.column(idx);
            j_inv += u * u.transpose() / l;
        }
        let mut b = T::zero();
        for a in 0..p {
            for c in 0..p {
                b += i_hat[(a, c)] * j_inv[(c, a)];
            }
        }
        (Some(b), Some(-two * loglik + two * b))
    } else {
        (None, None)
    };

    Ok(CriteriaReport {
        loglik,
        param_dim: p,
        n_obs,
        i_hat: i_hat.clone(),
        j_hat: j_hat.clone(),
        b_gic,
        gic,
        aic,
        j_condition,
    })
}

/// Ranks labelled reports ascending by GIC (undefined GIC sorts last),
/// breaking ties by AIC and then label.
pub fn compare_models<T: Scalar>(reports: &[(String, CriteriaReport<T>)]) -> Vec<ComparisonRow<T>> {
    let mut rows: Vec<ComparisonRow<T>> = reports
        .iter()
        .map(|(label, r)| ComparisonRow {
            label: label.clone(),
            loglik: r.loglik,
            param_dim: r.param_dim,
            b_gic: r.b_gic,
            aic: r.aic,
            gic: r.gic,
        })
        .collect();
    rows.sort_by(|a, b| {
        let gic_ord = match (a.gic, b.gic) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        gic_ord
            .then_with(|| {
                a.aic
                    .partial_cmp(&b.aic)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.label.cmp(&b.label))
    });
    rows
}
