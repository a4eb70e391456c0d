//! Kalman filter and the prediction-error-decomposition log-likelihood.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{FilterInit, ModelSpec};
use crate::scalar::{cast, is_finite, Scalar};
use crate::series::TimeSeries;

/// Longest series accepted by [`brute_force_loglik`] (dense N x N work).
pub const MAX_DENSE_N: usize = 50;

/// Kalman quantities for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep<T: Scalar> {
    /// One-step-ahead predicted state `x_{n|n-1}`.
    pub x_pred: DVector<T>,
    /// Predicted covariance `V_{n|n-1}`.
    pub v_pred: DMatrix<T>,
    /// Filtered state `x_{n|n}`.
    pub x_filt: DVector<T>,
    /// Filtered covariance `V_{n|n}`.
    pub v_filt: DMatrix<T>,
    /// Kalman gain `K_n`.
    pub gain: DVector<T>,
    /// One-step-ahead prediction error `eps_n = y_n - H x_{n|n-1}`.
    pub innovation: T,
    /// Prediction-error variance `r_n = H V_{n|n-1} H^T + R`.
    pub innovation_var: T,
}

/// Full Kalman filter pass over a series.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T: Scalar> {
    /// Per-step filter quantities, one entry per observation.
    pub steps: Vec<FilterStep<T>>,
    /// Total log-likelihood.
    pub loglik: T,
    /// Per-observation log-density `log g_n`; sums to `loglik`.
    pub per_step_loglik: Vec<T>,
}

/// Replaces `m` with `(m + m^T)/2` to control floating-point asymmetry
/// over long recursions.
pub(crate) fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let half = cast::<T>(0.5);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn check_inputs<T: Scalar>(spec: &ModelSpec<T>, init: &FilterInit<T>) -> Result<()> {
    let violations = crate::model::validate_model(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    if init.x0.len() != spec.state_dim || init.v0.shape() != (spec.state_dim, spec.state_dim) {
        return Err(Error::DimensionMismatch(format!(
            "filter initialization must have state dimension {}",
            spec.state_dim
        )));
    }
    Ok(())
}

/// Runs the Kalman filter and accumulates the log-likelihood.
///
/// Covariance updates use the literal `(I - K_n H) V_{n|n-1}` form with
/// explicit symmetrization: the derivative recursion differentiates this
/// exact form, so the two must not diverge.
pub fn filter<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
) -> Result<FilterOutput<T>> {
    check_inputs(spec, init)?;
    let half = cast::<T>(0.5);
    let ln_2pi = T::two_pi().ln();
    let gqg = &spec.g * &spec.q * spec.g.transpose();

    let mut x_filt = init.x0.clone();
    let mut v_filt = init.v0.clone();
    symmetrize(&mut v_filt);

    let n = y.len();
    let mut steps = Vec::with_capacity(n);
    let mut per_step_loglik = Vec::with_capacity(n);
    let mut loglik = T::zero();

    for (idx, &y_n) in y.values().iter().enumerate() {
        let x_pred = &spec.f * &x_filt;
        let mut v_pred = &spec.f * &v_filt * spec.f.transpose() + &gqg;
        symmetrize(&mut v_pred);

        let vh = &v_pred * &spec.h;
        let r = spec.h.dot(&vh) + spec.r;
        if !(is_finite(r) && r > T::zero()) {
            return Err(Error::FilterDivergence {
                step: idx + 1,
                detail: format!("innovation variance {:?}", r.to_f64()),
            });
        }
        let eps = y_n - spec.h.dot(&x_pred);
        let gain = &vh / r;

        x_filt = &x_pred + &gain * eps;
        v_filt = &v_pred - &gain * vh.transpose();
        symmetrize(&mut v_filt);

        let ll = -half * (ln_2pi + r.ln() + eps * eps / r);
        if !is_finite(ll) {
            return Err(Error::FilterDivergence {
                step: idx + 1,
                detail: "non-finite log-density".into(),
            });
        }
        loglik += ll;
        per_step_loglik.push(ll);
        steps.push(FilterStep {
            x_pred,
            v_pred,
            x_filt: x_filt.clone(),
            v_filt: v_filt.clone(),
            gain,
            innovation: eps,
            innovation_var: r,
        });
    }

    Ok(FilterOutput {
        steps,
        loglik,
        per_step_loglik,
    })
}

/// Evaluates the log-likelihood by building the joint `N x N` Gaussian
/// of the observations directly; independent oracle for [`filter`].
///
/// The joint covariance comes from propagating the state moments: with
/// `P_n = Cov(x_n)`, `Cov(y_{n+l}, y_n) = H F^l P_n H^T` for `l > 0` and
/// `Cov(y_n, y_n) = H P_n H^T + R`. Restricted to `N <=` [`MAX_DENSE_N`].
pub fn brute_force_loglik<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
) -> Result<T> {
    check_inputs(spec, init)?;
    let n = y.len();
    if n > MAX_DENSE_N {
        return Err(Error::SeriesTooLong {
            n,
            max: MAX_DENSE_N,
        });
    }

    let gqg = &spec.g * &spec.q * spec.g.transpose();
    let mut mean_x = Vec::with_capacity(n);
    let mut cov_x = Vec::with_capacity(n);
    let mut mu = init.x0.clone();
    let mut p = init.v0.clone();
    for _ in 0..n {
        mu = &spec.f * &mu;
        p = &spec.f * &p * spec.f.transpose() + &gqg;
        symmetrize(&mut p);
        mean_x.push(mu.clone());
        cov_x.push(p.clone());
    }

    let mut sigma = DMatrix::<T>::zeros(n, n);
    let mut mean_y = DVector::<T>::zeros(n);
    for a in 0..n {
        mean_y[a] = spec.h.dot(&mean_x[a]);
        let mut w = &cov_x[a] * &spec.h;
        sigma[(a, a)] = spec.h.dot(&w) + spec.r;
        for b in (a + 1)..n {
            w = &spec.f * &w;
            let c = spec.h.dot(&w);
            sigma[(b, a)] = c;
            sigma[(a, b)] = c;
        }
    }

    let chol = Cholesky::new(sigma).ok_or(Error::SingularCovariance)?;
    let z = DVector::from_iterator(
        n,
        y.values().iter().zip(mean_y.iter()).map(|(&v, &m)| v - m),
    );
    let solved = chol.solve(&z);
    let quad = z.dot(&solved);
    let mut logdet = T::zero();
    let l = chol.l();
    for i in 0..n {
        let d = l[(i, i)];
        if !(is_finite(d) && d > T::zero()) {
            return Err(Error::SingularCovariance);
        }
        logdet += d.ln() + d.ln();
    }

    let half = cast::<T>(0.5);
    Ok(-half * (cast::<T>(n as f64) * T::two_pi().ln() + logdet + quad))
}
