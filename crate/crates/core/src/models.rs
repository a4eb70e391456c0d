//! Builders for the trend and seasonal-adjustment model families.
//!
//! Each builder produces a full [`ModelSpec`]: the system matrices on
//! the log-variance working scale together with their first and second
//! parameter derivatives. The trend and seasonal families keep `F`
//! constant; only the seasonal+AR family has a parameter-dependent
//! transition matrix, and its `dF` matrices contain a single unit entry
//! in the AR block's first row.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{FilterInit, ModelSpec};
use crate::pairs::SymmetricPairs;
use crate::params::{ParamTransform, ParameterVector};
use crate::scalar::{cast, Scalar};
use crate::series::TimeSeries;

/// Builds a [`ModelSpec`] from a working-scale parameter vector.
pub trait ModelBuilder<T: Scalar> {
    /// Number of working-scale parameters.
    fn param_dim(&self) -> usize;

    /// State dimension of the built models.
    fn state_dim(&self) -> usize;

    /// Working-scale component names.
    fn param_names(&self) -> Vec<String>;

    /// Working-to-natural transform per component.
    fn param_transforms(&self) -> Vec<ParamTransform>;

    /// Builds the model at `theta`.
    fn build(&self, theta: &ParameterVector<T>) -> Result<ModelSpec<T>>;

    /// Wraps raw working-scale values with this builder's metadata.
    fn params(&self, working: &[T]) -> Result<ParameterVector<T>> {
        if working.len() != self.param_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} working-scale parameters, got {}",
                self.param_dim(),
                working.len()
            )));
        }
        ParameterVector::new(
            working.to_vec(),
            self.param_names(),
            self.param_transforms(),
        )
    }

    /// Builds directly from raw working-scale values.
    fn build_working(&self, working: &[T]) -> Result<ModelSpec<T>> {
        self.build(&self.params(working)?)
    }
}

/// Trend model `(1-B)^k T_n = v_n` observed with noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrendConfig {
    /// Differencing order `k`, 1 or 2.
    pub order: usize,
}

/// Trend + seasonal decomposition with period `s`.
///
/// The seasonal degree is fixed at one; the state dimension is
/// `trend_order + (period - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonalConfig {
    /// Trend order `m1`, 1 or 2.
    pub trend_order: usize,
    /// Seasonal period `s` (>= 2), e.g. 12 for monthly data.
    pub period: usize,
}

impl SeasonalConfig {
    /// Seasonal model with the given trend order and period.
    pub fn new(trend_order: usize, period: usize) -> Self {
        Self {
            trend_order,
            period,
        }
    }
}

impl Default for SeasonalConfig {
    fn default() -> Self {
        Self::new(2, 12)
    }
}

/// Seasonal adjustment model extended with a stationary AR component.
///
/// Parameters on the working scale are
/// `(log tau1^2, log tau2^2, log tau3^2, log sigma^2, a_1, ..., a_m3)`,
/// `4 + m3` in total; the state dimension is
/// `trend_order + (period - 1) + ar_order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonalArConfig {
    /// Trend and seasonal structure.
    pub seasonal: SeasonalConfig,
    /// AR order `m3` (>= 1).
    pub ar_order: usize,
}

impl SeasonalArConfig {
    /// Seasonal+AR model with the given structure.
    pub fn new(seasonal: SeasonalConfig, ar_order: usize) -> Self {
        Self { seasonal, ar_order }
    }
}

fn log_variance_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|n| format!("log_{n}")).collect()
}

fn check_theta_dim<T: Scalar>(theta: &ParameterVector<T>, expected: usize) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "expected {} parameters, got {}",
            expected,
            theta.len()
        )));
    }
    Ok(())
}

fn zero_mats<T: Scalar>(count: usize, rows: usize, cols: usize) -> Vec<DMatrix<T>> {
    (0..count).map(|_| DMatrix::zeros(rows, cols)).collect()
}

fn zero_pair_mats<T: Scalar>(p: usize, rows: usize, cols: usize) -> SymmetricPairs<DMatrix<T>> {
    SymmetricPairs::from_fn(p, |_, _| DMatrix::zeros(rows, cols))
}

/// Trend-block companion matrix for order 1 or 2.
fn trend_block<T: Scalar>(order: usize) -> DMatrix<T> {
    match order {
        1 => DMatrix::from_element(1, 1, T::one()),
        2 => {
            let two = cast::<T>(2.0);
            DMatrix::from_row_slice(2, 2, &[two, -T::one(), T::one(), T::zero()])
        }
        _ => unreachable!("trend order validated by caller"),
    }
}

/// Seasonal-block matrix of size `(s-1) x (s-1)`: first row all -1,
/// identity on the subdiagonal.
fn seasonal_block<T: Scalar>(period: usize) -> DMatrix<T> {
    let d = period - 1;
    let mut block = DMatrix::zeros(d, d);
    for j in 0..d {
        block[(0, j)] = -T::one();
    }
    for i in 1..d {
        block[(i, i - 1)] = T::one();
    }
    block
}

impl<T: Scalar> ModelBuilder<T> for TrendConfig {
    fn param_dim(&self) -> usize {
        2
    }

    fn state_dim(&self) -> usize {
        self.order
    }

    fn param_names(&self) -> Vec<String> {
        log_variance_names(&["tau2", "sigma2"])
    }

    fn param_transforms(&self) -> Vec<ParamTransform> {
        vec![ParamTransform::Log; 2]
    }

    fn build(&self, theta: &ParameterVector<T>) -> Result<ModelSpec<T>> {
        if !(self.order == 1 || self.order == 2) {
            return Err(Error::InvalidParameters(format!(
                "trend order must be 1 or 2, got {}",
                self.order
            )));
        }
        check_theta_dim(theta, 2)?;
        let natural = theta.natural_scale();
        let (tau2, sigma2) = (natural[0], natural[1]);
        let m = self.order;

        let f = trend_block(self.order);
        let mut g = DMatrix::zeros(m, 1);
        g[(0, 0)] = T::one();
        let mut h = DVector::zeros(m);
        h[0] = T::one();

        let q = DMatrix::from_element(1, 1, tau2);
        let mut dq = zero_mats(2, 1, 1);
        dq[0][(0, 0)] = tau2;
        let dr = vec![T::zero(), sigma2];

        let mut d2q = zero_pair_mats(2, 1, 1);
        d2q.get_mut(0, 0)[(0, 0)] = tau2;
        let mut d2r = SymmetricPairs::from_fn(2, |_, _| T::zero());
        *d2r.get_mut(1, 1) = sigma2;

        Ok(ModelSpec {
            state_dim: m,
            noise_dim: 1,
            param_dim: 2,
            f,
            g,
            h,
            q,
            r: sigma2,
            df: zero_mats(2, m, m),
            dq,
            dr,
            d2f: zero_pair_mats(2, m, m),
            d2q,
            d2r,
            f_is_constant: true,
            g_is_constant: true,
            h_is_constant: true,
        })
    }
}

impl<T: Scalar> ModelBuilder<T> for SeasonalConfig {
    fn param_dim(&self) -> usize {
        3
    }

    fn state_dim(&self) -> usize {
        self.trend_order + self.period - 1
    }

    fn param_names(&self) -> Vec<String> {
        log_variance_names(&["tau1_2", "tau2_2", "sigma2"])
    }

    fn param_transforms(&self) -> Vec<ParamTransform> {
        vec![ParamTransform::Log; 3]
    }

    fn build(&self, theta: &ParameterVector<T>) -> Result<ModelSpec<T>> {
        validate_seasonal_orders(self)?;
        check_theta_dim(theta, 3)?;
        let natural = theta.natural_scale();
        let (tau1_2, tau2_2, sigma2) = (natural[0], natural[1], natural[2]);
        let m1 = self.trend_order;
        let s = self.period;
        let m = m1 + (s - 1);

        let mut f = DMatrix::zeros(m, m);
        f.view_mut((0, 0), (m1, m1)).copy_from(&trend_block(m1));
        f.view_mut((m1, m1), (s - 1, s - 1))
            .copy_from(&seasonal_block(s));

        let mut g = DMatrix::zeros(m, 2);
        g[(0, 0)] = T::one();
        g[(m1, 1)] = T::one();
        let mut h = DVector::zeros(m);
        h[0] = T::one();
        h[m1] = T::one();

        let mut q = DMatrix::zeros(2, 2);
        q[(0, 0)] = tau1_2;
        q[(1, 1)] = tau2_2;
        let mut dq = zero_mats(3, 2, 2);
        dq[0][(0, 0)] = tau1_2;
        dq[1][(1, 1)] = tau2_2;
        let dr = vec![T::zero(), T::zero(), sigma2];

        let mut d2q = zero_pair_mats(3, 2, 2);
        d2q.get_mut(0, 0)[(0, 0)] = tau1_2;
        d2q.get_mut(1, 1)[(1, 1)] = tau2_2;
        let mut d2r = SymmetricPairs::from_fn(3, |_, _| T::zero());
        *d2r.get_mut(2, 2) = sigma2;

        Ok(ModelSpec {
            state_dim: m,
            noise_dim: 2,
            param_dim: 3,
            f,
            g,
            h,
            q,
            r: sigma2,
            df: zero_mats(3, m, m),
            dq,
            dr,
            d2f: zero_pair_mats(3, m, m),
            d2q,
            d2r,
            f_is_constant: true,
            g_is_constant: true,
            h_is_constant: true,
        })
    }
}

fn validate_seasonal_orders(cfg: &SeasonalConfig) -> Result<()> {
    if !(cfg.trend_order == 1 || cfg.trend_order == 2) {
        return Err(Error::InvalidParameters(format!(
            "trend order must be 1 or 2, got {}",
            cfg.trend_order
        )));
    }
    if cfg.period < 2 {
        return Err(Error::InvalidParameters(format!(
            "seasonal period must be at least 2, got {}",
            cfg.period
        )));
    }
    Ok(())
}

impl<T: Scalar> ModelBuilder<T> for SeasonalArConfig {
    fn param_dim(&self) -> usize {
        4 + self.ar_order
    }

    fn state_dim(&self) -> usize {
        self.seasonal.trend_order + self.seasonal.period - 1 + self.ar_order
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = log_variance_names(&["tau1_2", "tau2_2", "tau3_2", "sigma2"]);
        for i in 1..=self.ar_order {
            names.push(format!("a{i}"));
        }
        names
    }

    fn param_transforms(&self) -> Vec<ParamTransform> {
        let mut transforms = vec![ParamTransform::Log; 4];
        transforms.extend(std::iter::repeat_n(ParamTransform::Identity, self.ar_order));
        transforms
    }

    fn build(&self, theta: &ParameterVector<T>) -> Result<ModelSpec<T>> {
        validate_seasonal_orders(&self.seasonal)?;
        let m3 = self.ar_order;
        if m3 < 1 {
            return Err(Error::InvalidParameters(format!(
                "AR order must be at least 1, got {m3}"
            )));
        }
        let p = 4 + m3;
        check_theta_dim(theta, p)?;
        let natural = theta.natural_scale();
        let (tau1_2, tau2_2, tau3_2, sigma2) = (natural[0], natural[1], natural[2], natural[3]);
        let ar_coeffs = &natural[4..];
        let m1 = self.seasonal.trend_order;
        let s = self.seasonal.period;
        let ar_start = m1 + (s - 1);
        let m = ar_start + m3;

        let mut f = DMatrix::zeros(m, m);
        f.view_mut((0, 0), (m1, m1)).copy_from(&trend_block(m1));
        f.view_mut((m1, m1), (s - 1, s - 1))
            .copy_from(&seasonal_block(s));
        for (i, &a) in ar_coeffs.iter().enumerate() {
            f[(ar_start, ar_start + i)] = a;
        }
        for i in 1..m3 {
            f[(ar_start + i, ar_start + i - 1)] = T::one();
        }

        let mut g = DMatrix::zeros(m, 3);
        g[(0, 0)] = T::one();
        g[(m1, 1)] = T::one();
        g[(ar_start, 2)] = T::one();
        let mut h = DVector::zeros(m);
        h[0] = T::one();
        h[m1] = T::one();
        h[ar_start] = T::one();

        let mut q = DMatrix::zeros(3, 3);
        q[(0, 0)] = tau1_2;
        q[(1, 1)] = tau2_2;
        q[(2, 2)] = tau3_2;

        let mut df = zero_mats(p, m, m);
        for i in 0..m3 {
            df[4 + i][(ar_start, ar_start + i)] = T::one();
        }
        let mut dq = zero_mats(p, 3, 3);
        dq[0][(0, 0)] = tau1_2;
        dq[1][(1, 1)] = tau2_2;
        dq[2][(2, 2)] = tau3_2;
        let mut dr = vec![T::zero(); p];
        dr[3] = sigma2;

        let mut d2q = zero_pair_mats(p, 3, 3);
        d2q.get_mut(0, 0)[(0, 0)] = tau1_2;
        d2q.get_mut(1, 1)[(1, 1)] = tau2_2;
        d2q.get_mut(2, 2)[(2, 2)] = tau3_2;
        let mut d2r = SymmetricPairs::from_fn(p, |_, _| T::zero());
        *d2r.get_mut(3, 3) = sigma2;

        Ok(ModelSpec {
            state_dim: m,
            noise_dim: 3,
            param_dim: p,
            f,
            g,
            h,
            q,
            r: sigma2,
            df,
            dq,
            dr,
            d2f: zero_pair_mats(p, m, m),
            d2q,
            d2r,
            f_is_constant: false,
            g_is_constant: true,
            h_is_constant: true,
        })
    }
}

/// Builds the trend model; see [`TrendConfig`].
pub fn build_trend<T: Scalar>(
    cfg: &TrendConfig,
    theta: &ParameterVector<T>,
) -> Result<ModelSpec<T>> {
    cfg.build(theta)
}

/// Builds the standard seasonal adjustment model; see [`SeasonalConfig`].
pub fn build_seasonal<T: Scalar>(
    cfg: &SeasonalConfig,
    theta: &ParameterVector<T>,
) -> Result<ModelSpec<T>> {
    cfg.build(theta)
}

/// Builds the seasonal adjustment model with a stationary AR component;
/// see [`SeasonalArConfig`].
pub fn build_seasonal_ar<T: Scalar>(
    cfg: &SeasonalArConfig,
    theta: &ParameterVector<T>,
) -> Result<ModelSpec<T>> {
    cfg.build(theta)
}

/// Symmetric PSD square root via eigendecomposition.
///
/// Eigenvalues below `-tol` fail; small negative values from roundoff
/// are clamped to zero.
fn psd_factor<T: Scalar>(mat: &DMatrix<T>, name: &'static str) -> Result<DMatrix<T>> {
    let eig = mat.clone().symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, &l| acc.max(l.abs()));
    let tol = cast::<T>(1e-10) * (T::one() + scale);
    let mut factor = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -tol {
            return Err(Error::NotPositiveSemidefinite {
                name,
                eigenvalue: l.to_f64().unwrap_or(f64::NAN),
            });
        }
        let sqrt = l.max(T::zero()).sqrt();
        factor.column_mut(j).scale_mut(sqrt);
    }
    Ok(factor)
}

fn standard_normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    cast(<StandardNormal as Distribution<f64>>::sample(
        &StandardNormal,
        rng,
    ))
}

/// Simulates `n` observations from the model.
///
/// Draws `x_0 ~ N(x0, V0)` and iterates the transition and observation
/// equations with Gaussian noise. Deterministic for a given seed.
pub fn simulate<T: Scalar>(
    spec: &ModelSpec<T>,
    init: &FilterInit<T>,
    n: usize,
    seed: u64,
) -> Result<TimeSeries<T>> {
    if n == 0 {
        return Err(Error::InvalidSeries(
            "simulation length must be at least 1".into(),
        ));
    }
    if init.x0.len() != spec.state_dim || init.v0.shape() != (spec.state_dim, spec.state_dim) {
        return Err(Error::DimensionMismatch(format!(
            "initial state must have dimension {}",
            spec.state_dim
        )));
    }
    if spec.r < T::zero() {
        return Err(Error::NotPositiveSemidefinite {
            name: "R",
            eigenvalue: spec.r.to_f64().unwrap_or(f64::NAN),
        });
    }
    let q_factor = psd_factor(&spec.q, "Q")?;
    let v0_factor = psd_factor(&init.v0, "V0")?;
    let sigma = spec.r.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, dim: usize| {
        DVector::from_iterator(dim, (0..dim).map(|_| standard_normal::<T>(rng)))
    };

    let mut x = &init.x0 + &v0_factor * draw(&mut rng, spec.state_dim);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        x = &spec.f * &x + &spec.g * (&q_factor * draw(&mut rng, spec.noise_dim));
        let y = spec.h.dot(&x) + sigma * standard_normal::<T>(&mut rng);
        values.push(y);
    }
    TimeSeries::new(values)
}

/// Moduli of the characteristic roots of the AR polynomial
/// `z^m - a_1 z^{m-1} - ... - a_m`, sorted descending.
///
/// All moduli below one means the component is stationary. Reported as
/// a fit diagnostic; stationarity is never enforced.
pub fn ar_root_moduli<T: Scalar>(coeffs: &[T]) -> Vec<f64> {
    if coeffs.is_empty() {
        return Vec::new();
    }
    let m = coeffs.len();
    let mut companion = DMatrix::<f64>::zeros(m, m);
    for (i, &a) in coeffs.iter().enumerate() {
        companion[(0, i)] = a.to_f64().unwrap_or(f64::NAN);
    }
    for i in 1..m {
        companion[(i, i - 1)] = 1.0;
    }
    let mut moduli: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    moduli
}
