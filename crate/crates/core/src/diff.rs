//! First- and second-order differential Kalman filter.
//!
//! Propagates the parameter derivatives of every filter quantity
//! alongside the Kalman recursion, so one pass over the data yields the
//! exact gradient (and optionally the exact Hessian) of the
//! prediction-error log-likelihood. No numerical differencing: the
//! recursion differentiates the filter equations themselves.
//!
//! The in-scope model families keep `G` and `H` parameter-free and have
//! `d2F = 0`, which removes most coupling terms; the `dF`-bearing terms
//! are evaluated only when the transition matrix actually depends on a
//! parameter (seasonal+AR models).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kalman::{filter, symmetrize};
use crate::model::{FilterInit, ModelSpec};
use crate::pairs::SymmetricPairs;
use crate::scalar::{cast, is_finite, Scalar};
use crate::series::TimeSeries;

/// Parameter derivatives of the filter state, one snapshot per step.
///
/// First-order blocks are indexed by parameter (`dx_*` matrices hold one
/// column per parameter); second-order blocks live in [`SecondOrder`]
/// and are indexed by unordered parameter pair, mirrored on read.
#[derive(Debug, Clone)]
pub struct DerivativeState<T: Scalar> {
    /// Columns are `d x_{n|n-1} / d theta_j` (m x p).
    pub dx_pred: DMatrix<T>,
    /// `d V_{n|n-1} / d theta_j`, one m x m matrix per parameter.
    pub dv_pred: Vec<DMatrix<T>>,
    /// Columns are `d x_{n|n} / d theta_j` (m x p).
    pub dx_filt: DMatrix<T>,
    /// `d V_{n|n} / d theta_j`, one m x m matrix per parameter.
    pub dv_filt: Vec<DMatrix<T>>,
    /// Columns are `d K_n / d theta_j` (m x p).
    pub dk: DMatrix<T>,
    /// `d eps_n / d theta` (length p).
    pub d_eps: DVector<T>,
    /// `d r_n / d theta` (length p).
    pub d_r: DVector<T>,
    /// Second-order blocks; present only for the Hessian recursion.
    pub second: Option<SecondOrder<T>>,
}

/// Second-derivative blocks of the filter state, per parameter pair.
#[derive(Debug, Clone)]
pub struct SecondOrder<T: Scalar> {
    /// `d2 x_{n|n-1} / d theta_i d theta_j`.
    pub d2x_pred: SymmetricPairs<DVector<T>>,
    /// `d2 V_{n|n-1} / d theta_i d theta_j`.
    pub d2v_pred: SymmetricPairs<DMatrix<T>>,
    /// `d2 x_{n|n} / d theta_i d theta_j`.
    pub d2x_filt: SymmetricPairs<DVector<T>>,
    /// `d2 V_{n|n} / d theta_i d theta_j`.
    pub d2v_filt: SymmetricPairs<DMatrix<T>>,
    /// `d2 K_n / d theta_i d theta_j`.
    pub d2k: SymmetricPairs<DVector<T>>,
    /// `d2 eps_n / d theta_i d theta_j`.
    pub d2_eps: SymmetricPairs<T>,
    /// `d2 r_n / d theta_i d theta_j`.
    pub d2_r: SymmetricPairs<T>,
}

impl<T: Scalar> DerivativeState<T> {
    /// All-zero derivative state: the initialization `x_{0|0}`, `V_{0|0}`
    /// does not depend on the parameters.
    pub fn zeroed(state_dim: usize, param_dim: usize, with_second_order: bool) -> Self {
        let (m, p) = (state_dim, param_dim);
        let second = with_second_order.then(|| SecondOrder {
            d2x_pred: SymmetricPairs::from_fn(p, |_, _| DVector::zeros(m)),
            d2v_pred: SymmetricPairs::from_fn(p, |_, _| DMatrix::zeros(m, m)),
            d2x_filt: SymmetricPairs::from_fn(p, |_, _| DVector::zeros(m)),
            d2v_filt: SymmetricPairs::from_fn(p, |_, _| DMatrix::zeros(m, m)),
            d2k: SymmetricPairs::from_fn(p, |_, _| DVector::zeros(m)),
            d2_eps: SymmetricPairs::from_fn(p, |_, _| T::zero()),
            d2_r: SymmetricPairs::from_fn(p, |_, _| T::zero()),
        });
        Self {
            dx_pred: DMatrix::zeros(m, p),
            dv_pred: vec![DMatrix::zeros(m, m); p],
            dx_filt: DMatrix::zeros(m, p),
            dv_filt: vec![DMatrix::zeros(m, m); p],
            dk: DMatrix::zeros(m, p),
            d_eps: DVector::zeros(p),
            d_r: DVector::zeros(p),
            second,
        }
    }
}

/// Log-likelihood with its exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodEvaluation<T: Scalar> {
    /// Total log-likelihood.
    pub loglik: T,
    /// Exact gradient `d loglik / d theta`.
    pub gradient: DVector<T>,
    /// Exact Hessian; present only from [`hessian_filter`].
    pub hessian: Option<DMatrix<T>>,
    /// Per-observation scores `d log g_n / d theta` (N x p rows); they
    /// sum to `gradient` and feed the Fisher-information estimate.
    pub scores: DMatrix<T>,
}

/// Computes the log-likelihood and its exact gradient.
pub fn gradient_filter<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
) -> Result<LikelihoodEvaluation<T>> {
    run_differential_filter(spec, init, y, false)
}

/// Computes the log-likelihood, its exact gradient, and its exact Hessian.
///
/// Runs the same recursion as [`gradient_filter`] plus the second-order
/// blocks, so the log-likelihood and gradient are identical between the
/// two entry points.
pub fn hessian_filter<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
) -> Result<LikelihoodEvaluation<T>> {
    run_differential_filter(spec, init, y, true)
}

fn run_differential_filter<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
    with_hessian: bool,
) -> Result<LikelihoodEvaluation<T>> {
    let base = filter(spec, init, y)?;
    let (m, p) = (spec.state_dim, spec.param_dim);
    let n_obs = y.len();
    let half = cast::<T>(0.5);
    let two = cast::<T>(2.0);

    // dF is zero except for AR coefficients; dQ/d2Q enter only through
    // G dQ G^T, which is parameter-constant and precomputed.
    let df_nonzero: Vec<bool> = (0..p)
        .map(|j| !spec.f_is_constant && spec.df[j].iter().any(|v| !v.is_zero()))
        .collect();
    let d2f_nonzero = SymmetricPairs::from_fn(p, |i, j| {
        !spec.f_is_constant && spec.d2f.get(i, j).iter().any(|v| !v.is_zero())
    });
    let gdqg: Vec<DMatrix<T>> = (0..p)
        .map(|j| &spec.g * &spec.dq[j] * spec.g.transpose())
        .collect();
    let gd2qg =
        SymmetricPairs::from_fn(p, |i, j| &spec.g * spec.d2q.get(i, j) * spec.g.transpose());

    let mut state = DerivativeState::<T>::zeroed(m, p, with_hessian);
    let mut prev_x = init.x0.clone();
    let mut prev_v = init.v0.clone();
    symmetrize(&mut prev_v);

    let mut gradient = DVector::<T>::zeros(p);
    let mut scores = DMatrix::<T>::zeros(n_obs, p);
    let mut hessian_upper = with_hessian.then(|| DMatrix::<T>::zeros(p, p));
    // Scratch: H-projected derivative covariances, reused across phases.
    let mut uh: Vec<DVector<T>> = vec![DVector::zeros(m); p];
    let mut wh = with_hessian.then(|| SymmetricPairs::from_fn(p, |_, _| DVector::<T>::zeros(m)));

    for (n, step) in base.steps.iter().enumerate() {
        let eps = step.innovation;
        let r = step.innovation_var;
        let gain = &step.gain;

        // One-step-ahead prediction derivatives.
        for j in 0..p {
            let mut col = &spec.f * state.dx_filt.column(j);
            if df_nonzero[j] {
                col += &spec.df[j] * &prev_x;
            }
            state.dx_pred.set_column(j, &col);

            let mut dv = &spec.f * &state.dv_filt[j] * spec.f.transpose() + &gdqg[j];
            if df_nonzero[j] {
                let cross = &spec.df[j] * &prev_v * spec.f.transpose();
                dv += &cross + cross.transpose();
            }
            symmetrize(&mut dv);
            state.dv_pred[j] = dv;
        }

        if let Some(second) = state.second.as_mut() {
            for i in 0..p {
                for j in i..p {
                    let mut d2x = &spec.f * second.d2x_filt.get(i, j);
                    if df_nonzero[i] {
                        d2x += &spec.df[i] * state.dx_filt.column(j);
                    }
                    if df_nonzero[j] {
                        d2x += &spec.df[j] * state.dx_filt.column(i);
                    }
                    if *d2f_nonzero.get(i, j) {
                        d2x += spec.d2f.get(i, j) * &prev_x;
                    }
                    *second.d2x_pred.get_mut(i, j) = d2x;

                    let mut d2v =
                        &spec.f * second.d2v_filt.get(i, j) * spec.f.transpose() + gd2qg.get(i, j);
                    if df_nonzero[i] {
                        let a = &spec.df[i] * &state.dv_filt[j] * spec.f.transpose();
                        d2v += &a + a.transpose();
                    }
                    if df_nonzero[j] {
                        let a = &spec.df[j] * &state.dv_filt[i] * spec.f.transpose();
                        d2v += &a + a.transpose();
                    }
                    if df_nonzero[i] && df_nonzero[j] {
                        let a = &spec.df[i] * &prev_v * spec.df[j].transpose();
                        d2v += &a + a.transpose();
                    }
                    if *d2f_nonzero.get(i, j) {
                        let a = spec.d2f.get(i, j) * &prev_v * spec.f.transpose();
                        d2v += &a + a.transpose();
                    }
                    symmetrize(&mut d2v);
                    *second.d2v_pred.get_mut(i, j) = d2v;
                }
            }
        }

        // Innovation and gain derivatives.
        let vh = &step.v_pred * &spec.h;
        let r2 = r * r;
        for (j, uh_j) in uh.iter_mut().enumerate() {
            state.d_eps[j] = -spec.h.dot(&state.dx_pred.column(j));
            *uh_j = &state.dv_pred[j] * &spec.h;
            state.d_r[j] = spec.h.dot(uh_j) + spec.dr[j];
            if !(is_finite(state.d_eps[j]) && is_finite(state.d_r[j])) {
                return Err(Error::NonFiniteDerivative {
                    step: n + 1,
                    param: j,
                });
            }
            let dk = &*uh_j / r - &vh * (state.d_r[j] / r2);
            state.dk.set_column(j, &dk);
        }

        if let Some(second) = state.second.as_mut() {
            let wh = wh.as_mut().expect("hessian scratch allocated");
            let r3 = r2 * r;
            for i in 0..p {
                for j in i..p {
                    *second.d2_eps.get_mut(i, j) = -spec.h.dot(second.d2x_pred.get(i, j));
                    let w = second.d2v_pred.get(i, j) * &spec.h;
                    *second.d2_r.get_mut(i, j) = spec.h.dot(&w) + *spec.d2r.get(i, j);
                    *wh.get_mut(i, j) = w;
                    if !(is_finite(*second.d2_eps.get(i, j)) && is_finite(*second.d2_r.get(i, j))) {
                        return Err(Error::NonFiniteDerivative {
                            step: n + 1,
                            param: j,
                        });
                    }
                    let d2r_ij = *second.d2_r.get(i, j);
                    let d2k = wh.get(i, j) / r
                        - (&uh[i] * state.d_r[j] + &uh[j] * state.d_r[i] + &vh * d2r_ij) / r2
                        + &vh * (two * state.d_r[i] * state.d_r[j] / r3);
                    *second.d2k.get_mut(i, j) = d2k;
                }
            }
        }

        // Per-observation score and Hessian contribution.
        let e_over_r = eps / r;
        let e2_over_r2 = e_over_r * e_over_r;
        for j in 0..p {
            let s = -half
                * (state.d_r[j] / r + two * e_over_r * state.d_eps[j] - e2_over_r2 * state.d_r[j]);
            if !is_finite(s) {
                return Err(Error::NonFiniteDerivative {
                    step: n + 1,
                    param: j,
                });
            }
            scores[(n, j)] = s;
            gradient[j] += s;
        }
        if let Some(acc) = hessian_upper.as_mut() {
            let second = state.second.as_ref().expect("second-order state present");
            let e2 = eps * eps;
            let r3 = r2 * r;
            for i in 0..p {
                for j in i..p {
                    let d2r_ij = *second.d2_r.get(i, j);
                    let d2e_ij = *second.d2_eps.get(i, j);
                    let term1 =
                        (d2r_ij + two * state.d_eps[i] * state.d_eps[j] + two * eps * d2e_ij) / r;
                    let term2 = (state.d_r[i] * state.d_r[j]
                        + two
                            * eps
                            * (state.d_r[i] * state.d_eps[j] + state.d_eps[i] * state.d_r[j])
                        + e2 * d2r_ij)
                        / r2;
                    let term3 = two * e2 * state.d_r[i] * state.d_r[j] / r3;
                    acc[(i, j)] += -half * (term1 - term2 + term3);
                }
            }
        }

        // Filter-update derivatives.
        for (j, uh_j) in uh.iter().enumerate() {
            let col = state.dx_pred.column(j) + gain * state.d_eps[j] + state.dk.column(j) * eps;
            state.dx_filt.set_column(j, &col);

            let mut dv =
                &state.dv_pred[j] - state.dk.column(j) * vh.transpose() - gain * uh_j.transpose();
            symmetrize(&mut dv);
            state.dv_filt[j] = dv;
        }
        if let Some(second) = state.second.as_mut() {
            let wh = wh.as_ref().expect("hessian scratch allocated");
            for i in 0..p {
                for j in i..p {
                    let d2x = second.d2x_pred.get(i, j)
                        + state.dk.column(i) * state.d_eps[j]
                        + state.dk.column(j) * state.d_eps[i]
                        + gain * *second.d2_eps.get(i, j)
                        + second.d2k.get(i, j) * eps;
                    *second.d2x_filt.get_mut(i, j) = d2x;

                    let mut d2v = second.d2v_pred.get(i, j)
                        - second.d2k.get(i, j) * vh.transpose()
                        - state.dk.column(i) * uh[j].transpose()
                        - state.dk.column(j) * uh[i].transpose()
                        - gain * wh.get(i, j).transpose();
                    symmetrize(&mut d2v);
                    *second.d2v_filt.get_mut(i, j) = d2v;
                }
            }
        }

        prev_x = step.x_filt.clone();
        prev_v = step.v_filt.clone();
    }

    let hessian = hessian_upper.map(|upper| {
        let mut full = upper;
        for i in 0..p {
            for j in 0..i {
                full[(i, j)] = full[(j, i)];
            }
        }
        full
    });

    Ok(LikelihoodEvaluation {
        loglik: base.loglik,
        gradient,
        hessian,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, FilterInit, DEFAULT_KAPPA};
    use crate::models::{simulate, ModelBuilder, SeasonalArConfig, SeasonalConfig, TrendConfig};
    use crate::oracle::{fd_gradient, fd_hessian, FdConfig};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn diffuse<T: Scalar>(m: usize) -> FilterInit<T> {
        FilterInit::diffuse(m, cast(DEFAULT_KAPPA))
    }

    /// p=3 random-walk-plus-noise spec whose third parameter enters
    /// nothing: dF, dQ, dR all zero for it.
    fn spec_with_dead_parameter(theta: &[f64; 3]) -> ModelSpec<f64> {
        let base = TrendConfig { order: 1 }
            .build_working(&[theta[0], theta[1]])
            .unwrap();
        let mut dq = vec![DMatrix::zeros(1, 1); 3];
        dq[0][(0, 0)] = base.q[(0, 0)];
        let mut d2q = SymmetricPairs::from_fn(3, |_, _| DMatrix::zeros(1, 1));
        d2q.get_mut(0, 0)[(0, 0)] = base.q[(0, 0)];
        let mut d2r = SymmetricPairs::from_fn(3, |_, _| 0.0);
        *d2r.get_mut(1, 1) = base.r;
        ModelSpec {
            param_dim: 3,
            df: vec![DMatrix::zeros(1, 1); 3],
            dq,
            dr: vec![0.0, base.r, 0.0],
            d2f: SymmetricPairs::from_fn(3, |_, _| DMatrix::zeros(1, 1)),
            d2q,
            d2r,
            ..base
        }
    }

    #[test]
    fn dead_parameter_has_exactly_zero_gradient() {
        let spec = spec_with_dead_parameter(&[-1.0, -2.0, 5.0]);
        assert!(validate_model(&spec).is_empty());
        let y = TimeSeries::new(vec![0.4, -0.2, 0.9, 0.1, -0.5]).unwrap();
        let ev = gradient_filter(&spec, &diffuse(1), &y).unwrap();
        assert_eq!(ev.gradient[2], 0.0);
        let ev2 = hessian_filter(&spec, &diffuse(1), &y).unwrap();
        let h = ev2.hessian.unwrap();
        for i in 0..3 {
            assert_eq!(h[(2, i)], 0.0);
        }
    }

    #[test]
    fn gradient_matches_fd_seasonal_ar() {
        let cfg = SeasonalArConfig::new(SeasonalConfig::new(2, 4), 1);
        let theta = [-2.0, -2.5, -1.5, -1.0, 0.6];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            60,
            21,
        )
        .unwrap();
        let init = diffuse(spec.state_dim);
        let ev = gradient_filter(&spec, &init, &y).unwrap();
        let fd = fd_gradient(
            |t: &DVector<f64>| {
                let s = cfg.build_working(t.as_slice())?;
                Ok(crate::kalman::filter(&s, &init, &y)?.loglik)
            },
            &DVector::from_column_slice(&theta),
            &FdConfig::default(),
        )
        .unwrap();
        for j in 0..5 {
            let denom = fd[j].abs().max(1e-6);
            assert!(
                (ev.gradient[j] - fd[j]).abs() / denom < 1e-4,
                "component {j}: analytic {} vs fd {}",
                ev.gradient[j],
                fd[j]
            );
        }
    }

    #[test]
    fn hessian_p1_matches_second_difference() {
        // p=1 model: F=H=1, Q=exp(theta), R=1 fixed; y identically zero.
        let build = |theta: f64| -> ModelSpec<f64> {
            let base = TrendConfig { order: 1 }
                .build_working(&[theta, 0.0])
                .unwrap();
            ModelSpec {
                param_dim: 1,
                df: vec![DMatrix::zeros(1, 1)],
                dq: vec![DMatrix::from_element(1, 1, base.q[(0, 0)])],
                dr: vec![0.0],
                d2f: SymmetricPairs::from_fn(1, |_, _| DMatrix::zeros(1, 1)),
                d2q: SymmetricPairs::from_fn(1, |_, _| DMatrix::from_element(1, 1, base.q[(0, 0)])),
                d2r: SymmetricPairs::from_fn(1, |_, _| 0.0),
                ..base
            }
        };
        let y = TimeSeries::new(vec![0.0; 30]).unwrap();
        let theta = -0.7;
        let ev = hessian_filter(&build(theta), &diffuse(1), &y).unwrap();
        let h = ev.hessian.unwrap()[(0, 0)];

        let ll = |t: f64| {
            crate::kalman::filter(&build(t), &diffuse(1), &y)
                .unwrap()
                .loglik
        };
        let step = 1e-3;
        let fd = (ll(theta + step) - 2.0 * ll(theta) + ll(theta - step)) / (step * step);
        assert!((h - fd).abs() / fd.abs() < 1e-3, "analytic {h} vs fd {fd}");
    }

    #[test]
    fn hessian_cross_term_matches_fd() {
        // Disjoint noise channels, constant F: check an off-diagonal
        // entry against the four-point cross difference.
        let cfg = SeasonalConfig::new(2, 5);
        let theta = [-1.0, -2.0, -0.5];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            50,
            8,
        )
        .unwrap();
        let init = diffuse(spec.state_dim);
        let ev = hessian_filter(&spec, &init, &y).unwrap();
        let h = ev.hessian.unwrap();

        let ll = |a: f64, b: f64| {
            let s = cfg.build_working(&[a, b, theta[2]]).unwrap();
            crate::kalman::filter(&s, &init, &y).unwrap().loglik
        };
        let d = 1e-4;
        let fd = (ll(theta[0] + d, theta[1] + d)
            - ll(theta[0] + d, theta[1] - d)
            - ll(theta[0] - d, theta[1] + d)
            + ll(theta[0] - d, theta[1] - d))
            / (4.0 * d * d);
        assert!(
            (h[(0, 1)] - fd).abs() / fd.abs().max(1e-5) < 1e-3,
            "analytic {} vs fd {fd}",
            h[(0, 1)]
        );
    }

    #[test]
    fn hessian_matches_fd_of_gradient_with_f_dependence() {
        let cfg = SeasonalArConfig::new(SeasonalConfig::new(2, 4), 2);
        let theta = [-2.0, -2.5, -1.5, -1.0, 0.9, -0.3];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            60,
            31,
        )
        .unwrap();
        let init = diffuse(spec.state_dim);
        let ev = hessian_filter(&spec, &init, &y).unwrap();
        let h = ev.hessian.unwrap();

        let fd = fd_hessian(
            |t: &DVector<f64>| {
                let s = cfg.build_working(t.as_slice())?;
                Ok(gradient_filter(&s, &init, &y)?.gradient)
            },
            &DVector::from_column_slice(&theta),
            &FdConfig::default(),
        )
        .unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let denom = fd[(i, j)].abs().max(1e-5);
                assert!(
                    (h[(i, j)] - fd[(i, j)]).abs() / denom < 1e-3,
                    "({i},{j}): analytic {} vs fd {}",
                    h[(i, j)],
                    fd[(i, j)]
                );
            }
        }
    }

    #[test]
    fn gradient_and_hessian_filters_agree() {
        let cfg = SeasonalConfig::new(2, 6);
        let theta = [-3.0, -4.0, -2.0];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            40,
            14,
        )
        .unwrap();
        let init = diffuse(spec.state_dim);
        let a = gradient_filter(&spec, &init, &y).unwrap();
        let b = hessian_filter(&spec, &init, &y).unwrap();
        assert_abs_diff_eq!(a.loglik, b.loglik, epsilon = 1e-12);
        for j in 0..3 {
            assert_abs_diff_eq!(a.gradient[j], b.gradient[j], epsilon = 1e-12);
        }
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn scores_sum_to_gradient() {
        let cfg = SeasonalArConfig::new(SeasonalConfig::new(1, 4), 1);
        let theta = [-1.0, -2.0, -1.5, -0.5, 0.4];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            70,
            99,
        )
        .unwrap();
        let ev = gradient_filter(&spec, &diffuse(spec.state_dim), &y).unwrap();
        for j in 0..5 {
            let col_sum: f64 = ev.scores.column(j).iter().sum();
            assert_abs_diff_eq!(col_sum, ev.gradient[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn nonzero_d2f_enters_the_hessian() {
        // Custom p=1 model whose transition entry is theta^2, so dF and
        // d2F are both nonzero; checked against finite differences.
        let build = |theta: f64| -> ModelSpec<f64> {
            let base = TrendConfig { order: 1 }.build_working(&[0.0, 0.0]).unwrap();
            ModelSpec {
                param_dim: 1,
                f: DMatrix::from_element(1, 1, theta * theta),
                df: vec![DMatrix::from_element(1, 1, 2.0 * theta)],
                dq: vec![DMatrix::zeros(1, 1)],
                dr: vec![0.0],
                d2f: SymmetricPairs::from_fn(1, |_, _| DMatrix::from_element(1, 1, 2.0)),
                d2q: SymmetricPairs::from_fn(1, |_, _| DMatrix::zeros(1, 1)),
                d2r: SymmetricPairs::from_fn(1, |_, _| 0.0),
                f_is_constant: false,
                ..base
            }
        };
        let theta = 0.7;
        assert!(validate_model(&build(theta)).is_empty());
        let y = simulate(&build(theta), &FilterInit::fixed(DVector::zeros(1)), 50, 2).unwrap();
        let init = diffuse(1);
        let ev = hessian_filter(&build(theta), &init, &y).unwrap();
        let h = ev.hessian.unwrap()[(0, 0)];

        let ll = |t: f64| crate::kalman::filter(&build(t), &init, &y).unwrap().loglik;
        let step = 1e-4;
        let fd = (ll(theta + step) - 2.0 * ll(theta) + ll(theta - step)) / (step * step);
        assert!((h - fd).abs() / fd.abs() < 1e-3, "analytic {h} vs fd {fd}");
        // Dropping the d2F term must break the agreement; guards against
        // the term being silently dead.
        let mut without = build(theta);
        without.d2f = SymmetricPairs::from_fn(1, |_, _| DMatrix::zeros(1, 1));
        let ev2 = hessian_filter(&without, &init, &y).unwrap();
        let h2 = ev2.hessian.unwrap()[(0, 0)];
        assert!(
            (h2 - fd).abs() / fd.abs() > 1e-3,
            "d2F term had no effect: {h2} vs {fd}"
        );
    }

    #[test]
    fn hessian_is_symmetric() {
        let cfg = SeasonalArConfig::new(SeasonalConfig::new(2, 5), 2);
        let theta = [-2.0, -3.0, -1.0, -1.5, 0.8, -0.2];
        let spec = cfg.build_working(&theta).unwrap();
        let y = simulate(
            &spec,
            &FilterInit::fixed(DVector::zeros(spec.state_dim)),
            45,
            6,
        )
        .unwrap();
        let ev = hessian_filter(&spec, &diffuse(spec.state_dim), &y).unwrap();
        let h = ev.hessian.unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }
}
