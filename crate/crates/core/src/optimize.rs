//! Quasi-Newton maximization of the log-likelihood.
//!
//! BFGS on the working scale with the exact gradient from the
//! differential filter and a backtracking (Armijo) line search. At
//! convergence the Hessian recursion runs once to attach the
//! information-criteria report.

use nalgebra::{DMatrix, DVector};

use crate::criteria::{fisher_information, gic, neg_hessian_estimate, CriteriaReport};
use crate::diff::{gradient_filter, hessian_filter};
use crate::error::{Error, Result};
use crate::model::FilterInit;
use crate::models::ModelBuilder;
use crate::params::{ParamTransform, ParameterVector};
use crate::scalar::{cast, is_finite, Scalar};
use crate::series::TimeSeries;

/// Floor for log-transformed working components; `exp(-60) ~ 8.8e-27`
/// keeps collapsing variances representable without reaching zero.
pub const WORKING_FLOOR: f64 = -60.0;

/// Ceiling for log-transformed working components, the overflow-side
/// counterpart of [`WORKING_FLOOR`].
pub const WORKING_CEIL: f64 = 60.0;

const MAX_LINE_SEARCH_SHRINKS: usize = 60;

/// Quasi-Newton settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T: Scalar> {
    /// Iteration cap.
    pub max_iters: usize,
    /// Convergence threshold on the gradient infinity norm.
    pub grad_tol: T,
    /// Line-search backtracking factor in (0, 1).
    pub step_shrink: T,
    /// Armijo sufficient-increase constant in (0, 0.5].
    pub armijo_c: T,
    /// Cap on the working-scale infinity norm of one trial step. Early
    /// iterations from a poor start can have gradient norms in the 1e5
    /// range; an uncapped unit step would fling log-variances hundreds
    /// of units away before the line search measures anything.
    pub max_step: T,
    /// Starting inverse-Hessian approximation; identity when `None`.
    pub initial_inverse_hessian: Option<DMatrix<T>>,
}

impl<T: Scalar> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: cast(1e-8),
            step_shrink: cast(0.5),
            armijo_c: cast(1e-4),
            max_step: cast(10.0),
            initial_inverse_hessian: None,
        }
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct FitResult<T: Scalar> {
    /// Estimate on the working scale with the builder's metadata.
    pub theta_hat: ParameterVector<T>,
    /// Log-likelihood at the estimate.
    pub loglik: T,
    /// Gradient at the estimate.
    pub gradient: DVector<T>,
    /// Infinity norm of `gradient`.
    pub gradient_norm: T,
    /// Accepted iterations.
    pub iterations: usize,
    /// `true` iff `gradient_norm < grad_tol`.
    pub converged: bool,
    /// Accepted iterates `(theta, loglik)`, starting point included.
    pub trajectory: Vec<(DVector<T>, T)>,
    /// Information criteria evaluated at the estimate.
    pub criteria: CriteriaReport<T>,
}

fn inf_norm<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

fn clamp_working<T: Scalar>(theta: &mut DVector<T>, transforms: &[ParamTransform]) {
    let floor = cast::<T>(WORKING_FLOOR);
    let ceil = cast::<T>(WORKING_CEIL);
    for (v, tr) in theta.iter_mut().zip(transforms) {
        if *tr == ParamTransform::Log {
            *v = (*v).clamp(floor, ceil);
        }
    }
}

/// BFGS inverse-Hessian update for the minimization of `-loglik`:
/// `B <- (I - rho s y')B(I - rho y s') + rho s s'` with `rho = 1/(s'y)`.
///
/// Callers must ensure the curvature condition `s'y > 0`; the update
/// then preserves symmetry and positive definiteness.
fn bfgs_update<T: Scalar>(binv: &mut DMatrix<T>, s: &DVector<T>, y: &DVector<T>, sy: T) {
    let rho = T::one() / sy;
    let by = &*binv * y;
    let yby = y.dot(&by);
    let sst = s * s.transpose();
    let mixed = s * by.transpose() + &by * s.transpose();
    *binv -= mixed * rho;
    *binv += sst * (rho * rho * yby + rho);
    // keep it exactly symmetric against roundoff drift
    let sym = (&*binv + binv.transpose()) * cast::<T>(0.5);
    binv.copy_from(&sym);
}

/// Maximizes the log-likelihood over the working scale.
///
/// Each iterate rebuilds the model through `builder`, evaluates the
/// exact gradient, and takes a BFGS step with Armijo backtracking; the
/// accepted log-likelihood sequence is non-decreasing up to the
/// floating-point resolution of the log-likelihood. Log-transformed
/// components are floored at [`WORKING_FLOOR`]. On line-search failure
/// the best iterate so far is returned with `converged = false`.
pub fn fit<T, B>(
    builder: &B,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
    theta0: &ParameterVector<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<FitResult<T>>
where
    T: Scalar,
    B: ModelBuilder<T> + ?Sized,
{
    let p = builder.param_dim();
    if theta0.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "builder expects {p} parameters, starting point has {}",
            theta0.len()
        )));
    }
    let transforms = builder.param_transforms();

    let eval = |theta: &DVector<T>| -> Result<(T, DVector<T>)> {
        let spec = builder.build_working(theta.as_slice())?;
        let ev = gradient_filter(&spec, init, y)?;
        Ok((ev.loglik, ev.gradient))
    };

    let mut theta = DVector::from_column_slice(theta0.values());
    clamp_working(&mut theta, &transforms);
    let (mut loglik, mut grad) = eval(&theta)?;

    let mut binv = match &cfg.initial_inverse_hessian {
        Some(b) => {
            if b.shape() != (p, p) {
                return Err(Error::DimensionMismatch(
                    "initial inverse Hessian must be p x p".into(),
                ));
            }
            b.clone()
        }
        None => DMatrix::identity(p, p),
    };
    let mut rescale_pending = cfg.initial_inverse_hessian.is_none();

    let mut trajectory = vec![(theta.clone(), loglik)];
    let mut iterations = 0;
    let mut converged = inf_norm(&grad) < cfg.grad_tol;

    while !converged && iterations < cfg.max_iters {
        let direction = &binv * &grad;
        let grad_norm = inf_norm(&grad);
        let direction_norm = inf_norm(&direction);
        let mut lambda = if direction_norm > cfg.max_step {
            cfg.max_step / direction_norm
        } else {
            T::one()
        };
        let mut accepted = None;
        for _ in 0..=MAX_LINE_SEARCH_SHRINKS {
            let mut trial = &theta + &direction * lambda;
            clamp_working(&mut trial, &transforms);
            let s = &trial - &theta;
            let ascent = grad.dot(&s);
            if ascent > T::zero() {
                if let Ok((ll_t, grad_t)) = eval(&trial) {
                    // Armijo with a measurable increase. Near the
                    // optimum the true improvement drops below the
                    // floating-point resolution of the log-likelihood
                    // while the analytic gradient still carries signal,
                    // so a step that at least halves the gradient norm
                    // without measurably decreasing the log-likelihood
                    // (beyond its own roundoff floor) is also accepted.
                    let armijo = ll_t > loglik && ll_t >= loglik + cfg.armijo_c * ascent;
                    let noise_floor = cast::<T>(1e-12) * (T::one() + loglik.abs());
                    let endgame = ll_t >= loglik - noise_floor
                        && inf_norm(&grad_t) < grad_norm * cast::<T>(0.5);
                    if is_finite(ll_t) && (armijo || endgame) {
                        accepted = Some((trial, s, ll_t, grad_t));
                        break;
                    }
                }
            }
            lambda *= cfg.step_shrink;
        }
        let Some((trial, s, ll_new, grad_new)) = accepted else {
            break; // line search exhausted: return best-so-far
        };

        // Secant pair for the minimization of -loglik.
        let y_vec = &grad - &grad_new;
        let sy = s.dot(&y_vec);
        if sy > cast::<T>(1e-12) * s.norm() * y_vec.norm() {
            if rescale_pending {
                let scale = sy / y_vec.dot(&y_vec);
                if is_finite(scale) && scale > T::zero() {
                    binv = DMatrix::identity(p, p) * scale;
                }
                rescale_pending = false;
            }
            bfgs_update(&mut binv, &s, &y_vec, sy);
        }

        theta = trial;
        loglik = ll_new;
        grad = grad_new;
        iterations += 1;
        trajectory.push((theta.clone(), loglik));
        converged = inf_norm(&grad) < cfg.grad_tol;
    }

    let spec = builder.build_working(theta.as_slice())?;
    let ev = hessian_filter(&spec, init, y)?;
    let i_hat = fisher_information(&ev.scores)?;
    let hessian = ev
        .hessian
        .as_ref()
        .expect("hessian_filter returns a Hessian");
    let j_hat = neg_hessian_estimate(hessian, y.len());
    let criteria = gic(ev.loglik, &i_hat, &j_hat, y.len())?;

    let gradient_norm = inf_norm(&grad);
    Ok(FitResult {
        theta_hat: theta0.with_values(theta.iter().copied().collect())?,
        loglik,
        gradient: grad,
        gradient_norm,
        iterations,
        converged,
        trajectory,
        criteria,
    })
}

/// Runs [`fit`] from every start and ranks the results by final
/// log-likelihood, best first. Starts that fail outright are dropped;
/// if all fail, an aggregate error is returned.
pub fn multi_start_fit<T, B>(
    builder: &B,
    init: &FilterInit<T>,
    y: &TimeSeries<T>,
    starts: &[ParameterVector<T>],
    cfg: &OptimizerConfig<T>,
) -> Result<Vec<FitResult<T>>>
where
    T: Scalar,
    B: ModelBuilder<T> + ?Sized,
{
    if starts.is_empty() {
        return Err(Error::InvalidParameters(
            "multi-start fit needs at least one start".into(),
        ));
    }
    let mut results: Vec<FitResult<T>> = starts
        .iter()
        .filter_map(|theta0| fit(builder, init, y, theta0, cfg).ok())
        .collect();
    if results.is_empty() {
        return Err(Error::AllStartsFailed(starts.len()));
    }
    results.sort_by(|a, b| {
        b.loglik
            .partial_cmp(&a.loglik)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(results)
}
