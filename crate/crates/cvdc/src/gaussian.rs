//! Exact Gaussian-state engine.
//!
//! A state over `N` optical modes is a mean vector of length `2N` and a real
//! symmetric `2N x 2N` covariance matrix, both in the interleaved quadrature
//! ordering `(X1, Y1, X2, Y2, ..., XN, YN)`. The normalization is fixed so
//! that the vacuum covariance is the identity (variance 1 per quadrature);
//! every shot-noise-relative quantity in the rest of the crate relies on it.
//!
//! Optical elements act either as symplectic maps (two-mode squeezer,
//! beamsplitter, phase rotation) or as Gaussian attenuation channels (loss,
//! detector inefficiency). Mode indices are 0-based here; the netlist layer
//! in [`crate::circuit`] speaks 1-based ids and converts.
//!
//! Sign conventions, fixed once:
//! * `two_mode_squeeze(i, j, r)` on vacuum squeezes `X_i + X_j` and
//!   `Y_i - Y_j` to variance `2*exp(-2r)` each, and antisqueezes the
//!   orthogonal combinations to `2*exp(+2r)`.
//! * `beamsplitter(i, j, t)` mixes annihilation operators by
//!   `[[t, rho], [-rho, t]]` with `rho = +sqrt(1 - t^2)`.
//! * `phase_shift(i, phi)` rotates `(X_i, Y_i)` by `phi`, so `phi = pi/2`
//!   maps `X -> -Y`, `Y -> X`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("a state needs at least one mode")]
    EmptyState,
    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("two-mode element applied to mode {0} twice")]
    IdenticalModes(usize),
    #[error("parameter {name} = {value} outside its domain")]
    ParamOutOfDomain { name: &'static str, value: f64 },
    #[error("form has {form_len} coefficients, state expects {expected}")]
    DimensionMismatch { form_len: usize, expected: usize },
    #[error("covariance is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("mean/covariance sizes do not match {expected} quadratures")]
    BadShape { expected: usize },
}

/// Symplectic and channel matrices for the supported optical elements.
///
/// All builders take 0-based mode indices and panic on out-of-range input;
/// [`GaussianState`] validates before calling them.
pub mod symplectic {
    use nalgebra::DMatrix;

    /// The standard antisymmetric form, block-diagonal `[[0, 1], [-1, 0]]`
    /// per mode in the interleaved ordering.
    pub fn omega(n_modes: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
        for k in 0..n_modes {
            m[(2 * k, 2 * k + 1)] = 1.0;
            m[(2 * k + 1, 2 * k)] = -1.0;
        }
        m
    }

    /// Two-mode squeezer with parameter `r >= 0` acting on modes `i`, `j`.
    pub fn two_mode_squeezer(n_modes: usize, i: usize, j: usize, r: f64) -> DMatrix<f64> {
        assert!(i < n_modes && j < n_modes && i != j);
        let (c, s) = (r.cosh(), r.sinh());
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        m[(xi, xi)] = c;
        m[(xi, xj)] = -s;
        m[(yi, yi)] = c;
        m[(yi, yj)] = s;
        m[(xj, xi)] = -s;
        m[(xj, xj)] = c;
        m[(yj, yi)] = s;
        m[(yj, yj)] = c;
        m
    }

    /// Beamsplitter with amplitude transmission `t` on modes `i`, `j`.
    pub fn beamsplitter(n_modes: usize, i: usize, j: usize, t: f64) -> DMatrix<f64> {
        assert!(i < n_modes && j < n_modes && i != j);
        let rho = (1.0 - t * t).max(0.0).sqrt();
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        for q in 0..2 {
            let (a, b) = (2 * i + q, 2 * j + q);
            m[(a, a)] = t;
            m[(a, b)] = rho;
            m[(b, a)] = -rho;
            m[(b, b)] = t;
        }
        m
    }

    /// Rotation by `phi` in the `(X_i, Y_i)` plane.
    pub fn rotation(n_modes: usize, i: usize, phi: f64) -> DMatrix<f64> {
        assert!(i < n_modes);
        let (c, s) = (phi.cos(), phi.sin());
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (x, y) = (2 * i, 2 * i + 1);
        m[(x, x)] = c;
        m[(x, y)] = -s;
        m[(y, x)] = s;
        m[(y, y)] = c;
        m
    }
}

/// A real linear combination of mode quadratures; its variance on a state is
/// the corresponding photocurrent noise power before shot-noise scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureForm {
    coeffs: DVector<f64>,
}

impl QuadratureForm {
    /// All-zero form over `n_modes` modes.
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: DVector::zeros(2 * n_modes),
        }
    }

    /// Build from raw interleaved coefficients; rejects odd lengths and
    /// non-finite entries.
    pub fn from_coefficients(coeffs: Vec<f64>) -> Result<Self, GaussianError> {
        if coeffs.is_empty() || !coeffs.len().is_multiple_of(2) {
            return Err(GaussianError::BadShape {
                expected: coeffs.len() + coeffs.len() % 2,
            });
        }
        if let Some(&bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(GaussianError::ParamOutOfDomain {
                name: "coefficient",
                value: bad,
            });
        }
        Ok(Self {
            coeffs: DVector::from_vec(coeffs),
        })
    }

    /// Add `c` to the amplitude-quadrature coefficient of `mode` (0-based).
    pub fn with_x(mut self, mode: usize, c: f64) -> Self {
        self.coeffs[2 * mode] += c;
        self
    }

    /// Add `c` to the phase-quadrature coefficient of `mode` (0-based).
    pub fn with_y(mut self, mode: usize, c: f64) -> Self {
        self.coeffs[2 * mode + 1] += c;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coefficients(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    /// Variance of this form on vacuum: the squared Euclidean norm of the
    /// coefficients. This is the shot-noise reference level of the form.
    pub fn snl_reference(&self) -> f64 {
        self.coeffs.dot(&self.coeffs)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: &self.coeffs * factor,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GaussianError> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(GaussianError::DimensionMismatch {
                form_len: other.coeffs.len(),
                expected: self.coeffs.len(),
            });
        }
        Ok(Self {
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    pub(crate) fn vector(&self) -> &DVector<f64> {
        &self.coeffs
    }
}

/// Gaussian state: mean vector and covariance matrix over `2N` quadratures,
/// vacuum-normalized. Immutable; every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum state: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self, GaussianError> {
        if n_modes == 0 {
            return Err(GaussianError::EmptyState);
        }
        Ok(Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Construct from explicit moments, checking shape and symmetry.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussianError> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(GaussianError::EmptyState);
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(GaussianError::BadShape { expected: dim });
        }
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                asym = asym.max((cov[(i, j)] - cov[(j, i)]).abs());
            }
        }
        if asym > 1e-12 {
            return Err(GaussianError::NotSymmetric(asym));
        }
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_mode(&self, mode: usize) -> Result<(), GaussianError> {
        if mode >= self.n_modes {
            return Err(GaussianError::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), GaussianError> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(GaussianError::IdenticalModes(i));
        }
        Ok(())
    }

    fn apply_symplectic(&self, s: &DMatrix<f64>) -> Self {
        let mean = s * &self.mean;
        let cov = s * &self.cov * s.transpose();
        Self {
            n_modes: self.n_modes,
            mean,
            cov: symmetrized(cov),
        }
    }

    /// Two-mode squeezing of modes `i`, `j` with `r >= 0`. On vacuum,
    /// `var(X_i + X_j) = var(Y_i - Y_j) = 2*exp(-2r)`.
    pub fn two_mode_squeeze(&self, i: usize, j: usize, r: f64) -> Result<Self, GaussianError> {
        self.check_pair(i, j)?;
        if !r.is_finite() || r < 0.0 {
            return Err(GaussianError::ParamOutOfDomain {
                name: "r",
                value: r,
            });
        }
        Ok(self.apply_symplectic(&symplectic::two_mode_squeezer(self.n_modes, i, j, r)))
    }

    /// Beamsplitter on modes `i`, `j` with amplitude transmission `|t| <= 1`.
    pub fn beamsplitter(&self, i: usize, j: usize, t: f64) -> Result<Self, GaussianError> {
        self.check_pair(i, j)?;
        if !t.is_finite() || t.abs() > 1.0 {
            return Err(GaussianError::ParamOutOfDomain {
                name: "t",
                value: t,
            });
        }
        Ok(self.apply_symplectic(&symplectic::beamsplitter(self.n_modes, i, j, t)))
    }

    /// Rotation of mode `i` by `phi` radians in its quadrature plane.
    pub fn phase_shift(&self, i: usize, phi: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        Ok(self.apply_symplectic(&symplectic::rotation(self.n_modes, i, phi)))
    }

    /// Attenuation channel on mode `i` with amplitude transmissivity
    /// `0 <= xi <= 1`: the mean scales by `xi`, the mode covariance block by
    /// `xi^2` with `(1 - xi^2)` of vacuum mixed in, and cross blocks by `xi`.
    /// Models both optical loss and detector inefficiency; the ancilla vacuum
    /// is implicit, so the mode count stays fixed.
    pub fn loss(&self, i: usize, xi: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        if !(0.0..=1.0).contains(&xi) {
            return Err(GaussianError::ParamOutOfDomain {
                name: "xi",
                value: xi,
            });
        }
        let dim = 2 * self.n_modes;
        let mut k = DMatrix::identity(dim, dim);
        k[(2 * i, 2 * i)] = xi;
        k[(2 * i + 1, 2 * i + 1)] = xi;
        let mean = &k * &self.mean;
        let mut cov = &k * &self.cov * &k;
        let fill = 1.0 - xi * xi;
        cov[(2 * i, 2 * i)] += fill;
        cov[(2 * i + 1, 2 * i + 1)] += fill;
        Ok(Self {
            n_modes: self.n_modes,
            mean,
            cov: symmetrized(cov),
        })
    }

    /// Displace mode `i` by `(xs, ys)`; covariance untouched.
    pub fn displace(&self, i: usize, xs: f64, ys: f64) -> Result<Self, GaussianError> {
        self.check_mode(i)?;
        if !xs.is_finite() {
            return Err(GaussianError::ParamOutOfDomain {
                name: "xs",
                value: xs,
            });
        }
        if !ys.is_finite() {
            return Err(GaussianError::ParamOutOfDomain {
                name: "ys",
                value: ys,
            });
        }
        let mut out = self.clone();
        out.mean[2 * i] += xs;
        out.mean[2 * i + 1] += ys;
        Ok(out)
    }

    fn check_form(&self, form: &QuadratureForm) -> Result<(), GaussianError> {
        if form.vector().len() != 2 * self.n_modes {
            return Err(GaussianError::DimensionMismatch {
                form_len: form.vector().len(),
                expected: 2 * self.n_modes,
            });
        }
        Ok(())
    }

    /// Variance of a quadrature form: `c^T * cov * c`.
    pub fn variance_of(&self, form: &QuadratureForm) -> Result<f64, GaussianError> {
        self.check_form(form)?;
        let c = form.vector();
        Ok((c.transpose() * &self.cov * c)[(0, 0)])
    }

    /// Covariance between two quadrature forms: `a^T * cov * b`.
    pub fn covariance_of(
        &self,
        a: &QuadratureForm,
        b: &QuadratureForm,
    ) -> Result<f64, GaussianError> {
        self.check_form(a)?;
        self.check_form(b)?;
        Ok((a.vector().transpose() * &self.cov * b.vector())[(0, 0)])
    }

    /// Mean value of a quadrature form: `c . mean`.
    pub fn mean_of(&self, form: &QuadratureForm) -> Result<f64, GaussianError> {
        self.check_form(form)?;
        Ok(form.vector().dot(&self.mean))
    }

    /// Symplectic eigenvalues of the covariance matrix, ascending. A state is
    /// physical iff all of them are `>= 1` (up to roundoff); pure Gaussian
    /// states sit exactly at 1.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let m = symplectic::omega(self.n_modes) * &self.cov;
        let eig = m.complex_eigenvalues();
        let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        // Eigenvalues of Omega*cov come in +/- i*nu pairs; average each pair.
        moduli
            .chunks_exact(2)
            .map(|pair| 0.5 * (pair[0] + pair[1]))
            .collect()
    }
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const R_EXP: f64 = 0.674;

    fn x_sum_form(n: usize, modes: &[usize]) -> QuadratureForm {
        modes
            .iter()
            .fold(QuadratureForm::zeros(n), |f, &m| f.with_x(m, 1.0))
    }

    #[test]
    fn vacuum_is_identity_covariance() {
        let v = GaussianState::vacuum(1).unwrap();
        assert_eq!(v.cov(), &DMatrix::identity(2, 2));
        assert_eq!(v.mean(), &DVector::zeros(2));
    }

    #[test]
    fn vacuum_rejects_zero_modes() {
        assert_eq!(
            GaussianState::vacuum(0).unwrap_err(),
            GaussianError::EmptyState
        );
    }

    #[test]
    fn independent_vacua_add_variances() {
        let v = GaussianState::vacuum(3).unwrap();
        let form = x_sum_form(3, &[0, 1]);
        assert_relative_eq!(v.variance_of(&form).unwrap(), 2.0);
        let all = x_sum_form(3, &[0, 1, 2]);
        assert_relative_eq!(v.variance_of(&all).unwrap(), 3.0);
    }

    #[test]
    fn vacuum_symplectic_eigenvalues_are_unit() {
        let v = GaussianState::vacuum(2).unwrap();
        for nu in v.symplectic_eigenvalues() {
            assert_relative_eq!(nu, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn squeezer_at_zero_is_identity() {
        let v = GaussianState::vacuum(2).unwrap();
        let s = v.two_mode_squeeze(0, 1, 0.0).unwrap();
        assert_eq!(s, v);
    }

    #[test]
    fn squeezer_epr_variances_match_scalar_formula() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, R_EXP)
            .unwrap();
        let x_sum = x_sum_form(2, &[0, 1]);
        let x_diff = QuadratureForm::zeros(2).with_x(0, 1.0).with_x(1, -1.0);
        let y_sum = QuadratureForm::zeros(2).with_y(0, 1.0).with_y(1, 1.0);
        let y_diff = QuadratureForm::zeros(2).with_y(0, 1.0).with_y(1, -1.0);
        let sq = 2.0 * (-2.0 * R_EXP).exp(); // 0.5195...
        let anti = 2.0 * (2.0 * R_EXP).exp(); // 7.6994...
        assert_relative_eq!(s.variance_of(&x_sum).unwrap(), sq, epsilon = 1e-12);
        assert_relative_eq!(s.variance_of(&y_diff).unwrap(), sq, epsilon = 1e-12);
        assert_relative_eq!(s.variance_of(&x_diff).unwrap(), anti, epsilon = 1e-12);
        assert_relative_eq!(s.variance_of(&y_sum).unwrap(), anti, epsilon = 1e-12);
        assert!((sq - 0.5195).abs() < 5e-4);
        assert!((anti - 7.6996).abs() < 5e-4);
    }

    #[test]
    fn squeezer_rejects_bad_input() {
        let v = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            v.two_mode_squeeze(0, 1, -0.1),
            Err(GaussianError::ParamOutOfDomain { name: "r", .. })
        ));
        assert_eq!(
            v.two_mode_squeeze(1, 1, 0.3).unwrap_err(),
            GaussianError::IdenticalModes(1)
        );
        assert!(matches!(
            v.two_mode_squeeze(0, 2, 0.3),
            Err(GaussianError::ModeOutOfRange { mode: 2, .. })
        ));
    }

    #[test]
    fn beamsplitter_identity_and_vacuum_invariance() {
        let v = GaussianState::vacuum(2).unwrap();
        assert_eq!(v.beamsplitter(0, 1, 1.0).unwrap(), v);
        let mixed = v
            .beamsplitter(0, 1, std::f64::consts::FRAC_1_SQRT_2)
            .unwrap();
        assert_relative_eq!(
            (mixed.cov() - DMatrix::<f64>::identity(4, 4)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn balanced_splitter_routes_squeezed_combination_to_one_port() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, R_EXP)
            .unwrap()
            .beamsplitter(0, 1, std::f64::consts::FRAC_1_SQRT_2)
            .unwrap();
        // Port 0 now carries (X0 + X1)/sqrt(2): single-mode squeezed in X.
        let x0 = QuadratureForm::zeros(2).with_x(0, 1.0);
        assert_relative_eq!(
            s.variance_of(&x0).unwrap(),
            (-2.0 * R_EXP).exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn beamsplitter_rejects_overunity_transmission() {
        let v = GaussianState::vacuum(2).unwrap();
        assert!(matches!(
            v.beamsplitter(0, 1, 1.5),
            Err(GaussianError::ParamOutOfDomain { name: "t", .. })
        ));
    }

    #[test]
    fn phase_shift_quarter_turn_swaps_quadratures() {
        let s = GaussianState::vacuum(1)
            .unwrap()
            .displace(0, 2.0, 3.0)
            .unwrap()
            .phase_shift(0, std::f64::consts::FRAC_PI_2)
            .unwrap();
        assert_relative_eq!(s.mean()[0], -3.0, epsilon = 1e-12);
        assert_relative_eq!(s.mean()[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_shift_full_turn_is_identity() {
        let base = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, 0.9)
            .unwrap();
        let turned = base.phase_shift(0, 2.0 * std::f64::consts::PI).unwrap();
        assert_relative_eq!((turned.cov() - base.cov()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn loss_limits_are_identity_and_vacuum() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, 1.0)
            .unwrap()
            .displace(0, 1.0, -1.0)
            .unwrap();
        assert_eq!(s.loss(0, 1.0).unwrap(), s);
        let dark = s.loss(0, 0.0).unwrap();
        assert_relative_eq!(dark.cov()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(dark.cov()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(dark.cov()[(0, 2)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(dark.mean()[0], 0.0);
    }

    #[test]
    fn loss_on_one_epr_arm_matches_channel_algebra() {
        let xi = 0.987f64.sqrt();
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, R_EXP)
            .unwrap()
            .loss(0, xi)
            .unwrap();
        let form = x_sum_form(2, &[0, 1]);
        // Scalar channel algebra: var(X0) = var(X1) = cosh(2r) and
        // cov(X0, X1) = -sinh(2r); the lossy arm keeps amplitude xi and
        // mixes in (1 - xi^2) of vacuum, so
        // var(xi X0 + X1) + (1 - xi^2)
        //   = (1 + xi^2) cosh(2r) - 2 xi sinh(2r) + 1 - xi^2.
        let (c, sh) = ((2.0 * R_EXP).cosh(), (2.0 * R_EXP).sinh());
        let expected = (1.0 + xi * xi) * c - 2.0 * xi * sh + 1.0 - xi * xi;
        assert_relative_eq!(s.variance_of(&form).unwrap(), expected, epsilon = 1e-12);
        assert!((expected - 0.5292).abs() < 5e-4);
        // Attenuating the normalized sum current instead (both arms, one
        // detector) is the reading that gives xi^2 * 2 e^{-2r} + (1 - xi^2)
        // per unit of shot noise; that path lives in the detection layer.
    }

    #[test]
    fn loss_rejects_out_of_range_transmissivity() {
        let v = GaussianState::vacuum(1).unwrap();
        for bad in [-0.1, 1.1, f64::NAN] {
            assert!(matches!(
                v.loss(0, bad),
                Err(GaussianError::ParamOutOfDomain { name: "xi", .. })
            ));
        }
    }

    #[test]
    fn displace_shifts_mean_only_and_inverts() {
        let v = GaussianState::vacuum(2).unwrap();
        let d = v.displace(1, 1.0, 0.0).unwrap();
        assert_eq!(d.cov(), v.cov());
        assert_relative_eq!(d.mean()[2], 1.0);
        let back = d.displace(1, -1.0, 0.0).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn displace_rejects_non_finite() {
        let v = GaussianState::vacuum(1).unwrap();
        assert!(v.displace(0, f64::NAN, 0.0).is_err());
        assert!(v.displace(0, 0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn variance_rejects_dimension_mismatch() {
        let v = GaussianState::vacuum(2).unwrap();
        let form = QuadratureForm::zeros(3);
        assert!(matches!(
            v.variance_of(&form),
            Err(GaussianError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn form_rejects_non_finite_coefficients() {
        assert!(QuadratureForm::from_coefficients(vec![1.0, f64::NAN]).is_err());
        assert!(QuadratureForm::from_coefficients(vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn form_addition_requires_matching_dimensions() {
        let a = QuadratureForm::zeros(2).with_x(0, 1.0);
        let b = QuadratureForm::zeros(3).with_x(0, 1.0);
        assert!(matches!(
            a.add(&b),
            Err(GaussianError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_asymmetric_covariance() {
        let mean = DVector::zeros(2);
        let mut cov = DMatrix::identity(2, 2);
        cov[(0, 1)] = 1e-6;
        assert!(matches!(
            GaussianState::new(mean, cov),
            Err(GaussianError::NotSymmetric(_))
        ));
    }

    #[test]
    fn snl_reference_is_squared_coefficient_norm() {
        let form = QuadratureForm::zeros(2).with_x(0, 3.0).with_y(1, -4.0);
        assert_relative_eq!(form.snl_reference(), 25.0);
    }

    #[test]
    fn loss_composes_multiplicatively() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, 0.8)
            .unwrap();
        let a = s.loss(0, 0.9).unwrap().loss(0, 0.7).unwrap();
        let b = s.loss(0, 0.9 * 0.7).unwrap();
        assert_relative_eq!((a.cov() - b.cov()).norm(), 0.0, epsilon = 1e-12);
    }

    fn omega_defect(s: &DMatrix<f64>, n: usize) -> f64 {
        let omega = symplectic::omega(n);
        (s * &omega * s.transpose() - &omega).norm()
    }

    #[test]
    fn element_matrices_are_symplectic() {
        for &r in &[0.0, 0.3, 0.674, 2.0] {
            assert!(omega_defect(&symplectic::two_mode_squeezer(3, 0, 2, r), 3) < 1e-12);
        }
        for &t in &[
            -1.0,
            -0.3,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
            0.985599,
            1.0,
        ] {
            assert!(omega_defect(&symplectic::beamsplitter(3, 1, 2, t), 3) < 1e-12);
        }
        for &phi in &[0.0, 0.5, std::f64::consts::FRAC_PI_2, 6.0] {
            assert!(omega_defect(&symplectic::rotation(2, 1, phi), 2) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn passive_elements_preserve_photon_number(
            t in -1.0f64..1.0,
            phi in -6.3f64..6.3,
            r in 0.0f64..1.5,
        ) {
            let s = GaussianState::vacuum(2)
                .unwrap()
                .two_mode_squeeze(0, 1, r)
                .unwrap()
                .displace(0, 0.7, -0.2)
                .unwrap();
            let budget = |st: &GaussianState| st.cov().trace() + st.mean().norm_squared();
            let before = budget(&s);
            let after_bs = budget(&s.beamsplitter(0, 1, t).unwrap());
            let after_ps = budget(&s.phase_shift(1, phi).unwrap());
            prop_assert!((after_bs - before).abs() < 1e-10);
            prop_assert!((after_ps - before).abs() < 1e-10);
        }

        #[test]
        fn random_element_sequences_stay_physical(
            r1 in 0.0f64..1.5,
            t1 in -1.0f64..1.0,
            phi in -6.3f64..6.3,
            xi in 0.0f64..1.0,
            t2 in -1.0f64..1.0,
        ) {
            let s = GaussianState::vacuum(3)
                .unwrap()
                .two_mode_squeeze(0, 1, r1)
                .unwrap()
                .beamsplitter(1, 2, t1)
                .unwrap()
                .phase_shift(2, phi)
                .unwrap()
                .loss(0, xi)
                .unwrap()
                .beamsplitter(0, 2, t2)
                .unwrap();
            for nu in s.symplectic_eigenvalues() {
                prop_assert!(nu >= 1.0 - 1e-9);
            }
        }

        #[test]
        fn variance_is_quadratic_in_form_scale(alpha in -3.0f64..3.0, r in 0.0f64..1.2) {
            let s = GaussianState::vacuum(2)
                .unwrap()
                .two_mode_squeeze(0, 1, r)
                .unwrap();
            let form = QuadratureForm::zeros(2).with_x(0, 1.0).with_y(1, -0.5);
            let base = s.variance_of(&form).unwrap();
            let scaled = s.variance_of(&form.scaled(alpha)).unwrap();
            prop_assert!((scaled - alpha * alpha * base).abs() < 1e-9 * (1.0 + base));
        }
    }
}
