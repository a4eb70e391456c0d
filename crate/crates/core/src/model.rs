//! Model specification: system matrices plus their parameter derivatives.

use nalgebra::{DMatrix, DVector};

use crate::pairs::SymmetricPairs;
use crate::scalar::{cast, is_finite, Scalar};

/// Default diffuse prior variance for the initial state.
pub const DEFAULT_KAPPA: f64 = 1.0e4;

/// Linear Gaussian state-space model
///
/// ```text
/// x_n = F x_{n-1} + G v_n,   v_n ~ N(0, Q)
/// y_n = H x_n + w_n,         w_n ~ N(0, R)
/// ```
///
/// with an `m`-dimensional state, `k`-dimensional system noise, scalar
/// observations, and `p` working-scale parameters. `df[j]`, `dq[j]`,
/// `dr[j]` hold the derivatives of `F`, `Q`, `R` with respect to
/// parameter `j`; `d2f`, `d2q`, `d2r` the second derivatives per
/// parameter pair. `G` and `H` never depend on the parameters, so no
/// derivative families exist for them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T: Scalar> {
    /// State dimension `m`.
    pub state_dim: usize,
    /// System-noise dimension `k`.
    pub noise_dim: usize,
    /// Parameter dimension `p`.
    pub param_dim: usize,
    /// Transition matrix `F` (m x m).
    pub f: DMatrix<T>,
    /// Noise input matrix `G` (m x k).
    pub g: DMatrix<T>,
    /// Entries of the `1 x m` observation row `H`.
    pub h: DVector<T>,
    /// System-noise covariance `Q` (k x k, symmetric PSD).
    pub q: DMatrix<T>,
    /// Observation-noise variance `R` (scalar, nonnegative).
    pub r: T,
    /// `dF/dtheta_j`, one m x m matrix per parameter.
    pub df: Vec<DMatrix<T>>,
    /// `dQ/dtheta_j`, one k x k symmetric matrix per parameter.
    pub dq: Vec<DMatrix<T>>,
    /// `dR/dtheta_j` per parameter.
    pub dr: Vec<T>,
    /// `d2F/dtheta_i dtheta_j` per parameter pair.
    pub d2f: SymmetricPairs<DMatrix<T>>,
    /// `d2Q/dtheta_i dtheta_j` per parameter pair.
    pub d2q: SymmetricPairs<DMatrix<T>>,
    /// `d2R/dtheta_i dtheta_j` per parameter pair.
    pub d2r: SymmetricPairs<T>,
    /// `true` iff the `df`/`d2f` families are identically zero.
    pub f_is_constant: bool,
    /// Always `true` for representable models: `G` carries no derivatives.
    pub g_is_constant: bool,
    /// Always `true` for representable models: `H` carries no derivatives.
    pub h_is_constant: bool,
}

/// Initial state distribution `x_0 ~ N(x0, V0)` for the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterInit<T: Scalar> {
    /// Initial state mean (default zero).
    pub x0: DVector<T>,
    /// Initial state covariance (default `kappa * I`).
    pub v0: DMatrix<T>,
}

impl<T: Scalar> FilterInit<T> {
    /// Zero mean with the diffuse prior `V0 = kappa * I`.
    pub fn diffuse(state_dim: usize, kappa: T) -> Self {
        Self {
            x0: DVector::zeros(state_dim),
            v0: DMatrix::identity(state_dim, state_dim) * kappa,
        }
    }

    /// Zero mean with `V0 = DEFAULT_KAPPA * I`.
    pub fn default_diffuse(state_dim: usize) -> Self {
        Self::diffuse(state_dim, cast(DEFAULT_KAPPA))
    }

    /// Deterministic start at `x0` (zero covariance).
    pub fn fixed(x0: DVector<T>) -> Self {
        let m = x0.len();
        Self {
            x0,
            v0: DMatrix::zeros(m, m),
        }
    }

    /// Explicit mean and covariance.
    pub fn new(x0: DVector<T>, v0: DMatrix<T>) -> Self {
        Self { x0, v0 }
    }
}

fn is_symmetric<T: Scalar>(m: &DMatrix<T>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = T::one() + m.amax();
    let tol = cast::<T>(1e-10) * scale;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

fn is_zero<T: Scalar>(m: &DMatrix<T>) -> bool {
    m.iter().all(|v| v.is_zero())
}

fn all_finite<T: Scalar>(m: &DMatrix<T>) -> bool {
    m.iter().all(|v| is_finite(*v))
}

/// Checks every [`ModelSpec`] invariant and returns the violations.
///
/// An empty list means the specification is internally consistent:
/// dimensions agree, `Q` is symmetric PSD, `R >= 0`, the derivative
/// families are symmetric where required, and the constancy flags match
/// the families.
pub fn validate_model<T: Scalar>(spec: &ModelSpec<T>) -> Vec<String> {
    let mut out = Vec::new();
    let (m, k, p) = (spec.state_dim, spec.noise_dim, spec.param_dim);

    if m == 0 || k == 0 || p == 0 {
        out.push(format!("dimensions must be positive (m={m}, k={k}, p={p})"));
        return out;
    }
    if spec.f.shape() != (m, m) {
        out.push(format!("F must be {m}x{m}, got {:?}", spec.f.shape()));
    }
    if spec.g.shape() != (m, k) {
        out.push(format!("G must be {m}x{k}, got {:?}", spec.g.shape()));
    }
    if spec.h.len() != m {
        out.push(format!("H must have {m} entries, got {}", spec.h.len()));
    }
    if spec.q.shape() != (k, k) {
        out.push(format!("Q must be {k}x{k}, got {:?}", spec.q.shape()));
    }
    if !out.is_empty() {
        return out;
    }

    for (name, mat) in [("F", &spec.f), ("G", &spec.g), ("Q", &spec.q)] {
        if !all_finite(mat) {
            out.push(format!("{name} has non-finite entries"));
        }
    }
    if !spec.h.iter().all(|v| is_finite(*v)) {
        out.push("H has non-finite entries".into());
    }
    if !is_finite(spec.r) {
        out.push("R is non-finite".into());
    } else if spec.r < T::zero() {
        out.push("R must be nonnegative".into());
    }

    if !is_symmetric(&spec.q) {
        out.push("Q is not symmetric".into());
    } else if all_finite(&spec.q) {
        let min_eig = spec
            .q
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(T::zero(), |acc, &l| acc.min(l));
        let tol = cast::<T>(1e-10) * (T::one() + spec.q.amax());
        if min_eig < -tol {
            out.push(format!(
                "Q is not positive semidefinite (eigenvalue {:?})",
                min_eig
            ));
        }
    }

    if spec.df.len() != p {
        out.push(format!("dF must have {p} entries, got {}", spec.df.len()));
    }
    if spec.dq.len() != p {
        out.push(format!("dQ must have {p} entries, got {}", spec.dq.len()));
    }
    if spec.dr.len() != p {
        out.push(format!("dR must have {p} entries, got {}", spec.dr.len()));
    }
    for (tbl, name, rows, cols) in [(&spec.d2f, "d2F", m, m), (&spec.d2q, "d2Q", k, k)] {
        if tbl.dim() != p {
            out.push(format!("{name} must be indexed by {p} parameters"));
        } else {
            for (i, j, mat) in tbl.iter_upper() {
                if mat.shape() != (rows, cols) {
                    out.push(format!("{name}[{i}][{j}] has wrong shape"));
                } else if !all_finite(mat) {
                    out.push(format!("{name}[{i}][{j}] has non-finite entries"));
                }
            }
        }
    }
    if spec.d2r.dim() != p {
        out.push(format!("d2R must be indexed by {p} parameters"));
    }
    if !out.is_empty() {
        return out;
    }

    for (j, mat) in spec.df.iter().enumerate() {
        if mat.shape() != (m, m) {
            out.push(format!("dF[{j}] must be {m}x{m}"));
        } else if !all_finite(mat) {
            out.push(format!("dF[{j}] has non-finite entries"));
        }
    }
    for (j, mat) in spec.dq.iter().enumerate() {
        if mat.shape() != (k, k) {
            out.push(format!("dQ[{j}] must be {k}x{k}"));
        } else if !all_finite(mat) {
            out.push(format!("dQ[{j}] has non-finite entries"));
        } else if !is_symmetric(mat) {
            out.push(format!("dQ[{j}] is not symmetric"));
        }
    }
    for (j, v) in spec.dr.iter().enumerate() {
        if !is_finite(*v) {
            out.push(format!("dR[{j}] is non-finite"));
        }
    }
    for (i, j, mat) in spec.d2q.iter_upper() {
        if !is_symmetric(mat) {
            out.push(format!("d2Q[{i}][{j}] is not symmetric"));
        }
    }
    for (i, j, v) in spec.d2r.iter_upper() {
        if !is_finite(*v) {
            out.push(format!("d2R[{i}][{j}] is non-finite"));
        }
    }

    let df_zero = spec.df.iter().all(is_zero);
    let d2f_zero = spec.d2f.iter_upper().all(|(_, _, mat)| is_zero(mat));
    if spec.f_is_constant && !(df_zero && d2f_zero) {
        out.push("F_is_constant is set but dF/d2F are not identically zero".into());
    }
    if !spec.f_is_constant && df_zero && d2f_zero {
        out.push("F_is_constant is unset but dF/d2F are identically zero".into());
    }
    if !spec.g_is_constant {
        out.push("G_is_constant must hold: G carries no derivative family".into());
    }
    if !spec.h_is_constant {
        out.push("H_is_constant must hold: H carries no derivative family".into());
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_seasonal_ar, build_trend, ModelBuilder, SeasonalArConfig, SeasonalConfig, TrendConfig,
    };

    #[test]
    fn trend_k1_spec_validates_empty() {
        let cfg = TrendConfig { order: 1 };
        let spec = cfg.build_working(&[0.0, 0.0]).unwrap();
        assert_eq!(spec.state_dim, 1);
        assert!(validate_model(&spec).is_empty());
        let theta = cfg.params(&[-1.0, -2.0]).unwrap();
        assert!(validate_model(&build_trend(&cfg, &theta).unwrap()).is_empty());
    }

    #[test]
    fn asymmetric_dq_yields_one_violation_naming_dq0() {
        let cfg = SeasonalConfig::new(2, 4);
        let mut spec = cfg.build_working(&[-1.0, -2.0, -3.0]).unwrap();
        spec.dq[0][(0, 1)] = 0.25;
        let violations = validate_model(&spec);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert!(violations[0].contains("dQ[0]"), "{violations:?}");
    }

    #[test]
    fn seasonal_ar_m3_2_validates_empty() {
        let cfg = SeasonalArConfig::new(SeasonalConfig::new(2, 12), 2);
        let theta = cfg.params(&[-9.0, -10.0, -8.0, -8.5, 0.9, -0.2]).unwrap();
        let spec = build_seasonal_ar(&cfg, &theta).unwrap();
        assert!(validate_model(&spec).is_empty());
    }

    #[test]
    fn dimension_and_flag_violations_are_reported() {
        let cfg = TrendConfig { order: 1 };
        let mut spec = cfg.build_working(&[0.0, 0.0]).unwrap();
        spec.f_is_constant = false;
        let violations = validate_model(&spec);
        assert!(violations.iter().any(|v| v.contains("F_is_constant")));

        let mut spec = cfg.build_working(&[0.0, 0.0]).unwrap();
        spec.f = DMatrix::zeros(2, 2);
        assert!(!validate_model(&spec).is_empty());
    }
}
