//! Linear Gaussian state-space models fitted by maximum likelihood with
//! exact analytic derivatives.
//!
//! The log-likelihood comes from the Kalman filter through the
//! prediction-error decomposition. Instead of numerical differencing,
//! a differential filter propagates the parameter derivatives of every
//! filter quantity alongside the recursion, producing the exact
//! gradient and Hessian in one pass. Those derivatives drive a BFGS
//! optimizer ([`optimize::fit`]) and the information criteria AIC and
//! GIC/TIC ([`criteria`]): the Fisher information is the average outer
//! product of the per-observation scores and `J` the negated average
//! Hessian, both filter by-products.
//!
//! Model builders for three families live in [`models`]: polynomial
//! trend (order 1 or 2), trend + seasonal decomposition, and trend +
//! seasonal + stationary AR. All variances are optimized on the log
//! scale.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`);
//! `*F64` aliases for the common types are exported below.

pub mod criteria;
pub mod diff;
pub mod error;
pub mod kalman;
pub mod model;
pub mod models;
pub mod optimize;
pub mod oracle;
pub mod pairs;
pub mod params;
pub mod scalar;
pub mod series;

pub use crate::criteria::{
    compare_models, fisher_information, gic, neg_hessian_estimate, ComparisonRow, CriteriaReport,
};
pub use crate::diff::{
    gradient_filter, hessian_filter, DerivativeState, LikelihoodEvaluation, SecondOrder,
};
pub use crate::error::{Error, Result};
pub use crate::kalman::{brute_force_loglik, filter, FilterOutput, FilterStep, MAX_DENSE_N};
pub use crate::model::{validate_model, FilterInit, ModelSpec, DEFAULT_KAPPA};
pub use crate::models::{
    ar_root_moduli, build_seasonal, build_seasonal_ar, build_trend, simulate, ModelBuilder,
    SeasonalArConfig, SeasonalConfig, TrendConfig,
};
pub use crate::optimize::{fit, multi_start_fit, FitResult, OptimizerConfig};
pub use crate::oracle::{fd_gradient, fd_hessian, FdConfig};
pub use crate::pairs::SymmetricPairs;
pub use crate::params::{ParamTransform, ParameterVector};
pub use crate::scalar::Scalar;
pub use crate::series::TimeSeries;

/// `f64` time series.
pub type TimeSeriesF64 = TimeSeries<f64>;
/// `f64` parameter vector.
pub type ParameterVectorF64 = ParameterVector<f64>;
/// `f64` model specification.
pub type ModelSpecF64 = ModelSpec<f64>;
/// `f64` filter initialization.
pub type FilterInitF64 = FilterInit<f64>;
/// `f64` filter output.
pub type FilterOutputF64 = FilterOutput<f64>;
/// `f64` likelihood evaluation.
pub type LikelihoodEvaluationF64 = LikelihoodEvaluation<f64>;
/// `f64` criteria report.
pub type CriteriaReportF64 = CriteriaReport<f64>;
/// `f64` optimizer settings.
pub type OptimizerConfigF64 = OptimizerConfig<f64>;
/// `f64` fit result.
pub type FitResultF64 = FitResult<f64>;
/// `f64` finite-difference settings.
pub type FdConfigF64 = FdConfig<f64>;
