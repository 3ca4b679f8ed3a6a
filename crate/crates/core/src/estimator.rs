//! Filtered linear-regressor parameter estimator with finite-time convergence.
//!
//! The plant is rewritten as `ẋ − Ψ(x) = Φ(x, u) Θ` with `Θ = (1/m, 1/J)`.
//! Both sides pass through `1/(s + γ)` so that `ẋ` is never needed, the
//! filtered pair is accumulated into forgetting-factor data matrices
//! `(X̄, Φ̄)`, and `Θ̂` follows a two-power gradient flow on `Ξ = Φ̄Θ̂ − X̄`.

use nalgebra::{Matrix2, Matrix6x2, SVector, Vector2, Vector6};
use thiserror::Error;

use crate::model::{PlantInput, PlantState};

/// Number of scalar states held by [`EstimatorState`].
pub const ESTIMATOR_DIM: usize = 6 + 6 + 12 + 2 + 4 + 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid estimator setting: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub c1: f64,
    pub c2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Forgetting factor (1/s).
    pub lambda: f64,
    /// Regressor filter pole (1/s).
    pub gamma: f64,
    /// Dead zone on `‖Ξ‖` below which the estimate is frozen.
    pub eps: f64,
    /// Lower bound applied to `Θ̂` entries before inversion.
    pub theta_floor: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            c1: 6.0,
            c2: 3.0,
            alpha1: 0.2,
            alpha2: 1.2,
            lambda: 80.0,
            gamma: 10.0,
            eps: 1e-12,
            theta_floor: 1e-3,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        let positive = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("theta_floor", self.theta_floor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EstimatorError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.alpha1 > 0.0 && self.alpha1 < 1.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "alpha1 must lie in (0, 1), got {}",
                self.alpha1
            )));
        }
        if !(self.alpha2 > 1.0 && self.alpha2.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!("alpha2 must be > 1, got {}", self.alpha2)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!("eps must be >= 0, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Filter states, data matrices and the current estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    /// `x` filtered by `1/(s + γ)`.
    pub z1: Vector6<f64>,
    /// `Ψ(x)` filtered by `1/(s + γ)`.
    pub z2: Vector6<f64>,
    /// `Φ(x, u)` filtered by `1/(s + γ)`, i.e. `Φ_f`.
    pub zphi: Matrix6x2<f64>,
    pub xbar: Vector2<f64>,
    pub phibar: Matrix2<f64>,
    pub theta_hat: Vector2<f64>,
}

impl EstimatorState {
    /// Zero filters and data matrices with the given initial estimate.
    pub fn new(theta0: Vector2<f64>) -> Self {
        Self {
            z1: Vector6::zeros(),
            z2: Vector6::zeros(),
            zphi: Matrix6x2::zeros(),
            xbar: Vector2::zeros(),
            phibar: Matrix2::zeros(),
            theta_hat: theta0,
        }
    }

    pub fn to_vector(&self) -> SVector<f64, ESTIMATOR_DIM> {
        let mut v = SVector::<f64, ESTIMATOR_DIM>::zeros();
        let parts: [&[f64]; 6] = [
            self.z1.as_slice(),
            self.z2.as_slice(),
            self.zphi.as_slice(),
            self.xbar.as_slice(),
            self.phibar.as_slice(),
            self.theta_hat.as_slice(),
        ];
        let mut offset = 0;
        for part in parts {
            v.as_mut_slice()[offset..offset + part.len()].copy_from_slice(part);
            offset += part.len();
        }
        v
    }

    pub fn from_slice(s: &[f64]) -> Self {
        assert_eq!(s.len(), ESTIMATOR_DIM);
        Self {
            z1: Vector6::from_column_slice(&s[0..6]),
            z2: Vector6::from_column_slice(&s[6..12]),
            zphi: Matrix6x2::from_column_slice(&s[12..24]),
            xbar: Vector2::from_column_slice(&s[24..26]),
            phibar: Matrix2::from_column_slice(&s[26..30]),
            theta_hat: Vector2::from_column_slice(&s[30..32]),
        }
    }

    /// Filtered regressor pair `(x_f, Φ_f)` at the plant state `x`.
    pub fn filter_outputs(&self, x: &PlantState, gamma: f64) -> (Vector6<f64>, Matrix6x2<f64>) {
        (x - self.z1 * gamma - self.z2, self.zphi)
    }

    /// Time derivative of every estimator state.
    pub fn deriv(&self, x: &PlantState, u: &PlantInput, g: f64, cfg: &EstimatorConfig, adaptive: bool) -> Self {
        let (dz1, dz2, dzphi) = filter_deriv(self, x, u, cfg.gamma, g);
        let (x_f, phi_f) = self.filter_outputs(x, cfg.gamma);
        let (dxbar, dphibar) = data_matrix_deriv(self, &x_f, &phi_f, cfg.lambda);
        let dtheta = if adaptive {
            estimate_deriv(&self.theta_hat, &self.xbar, &self.phibar, cfg)
        } else {
            Vector2::zeros()
        };
        Self {
            z1: dz1,
            z2: dz2,
            zphi: dzphi,
            xbar: dxbar,
            phibar: dphibar,
            theta_hat: dtheta,
        }
    }
}

/// `(Ψ(x), Φ(x, u))` with `ẋ − Ψ = ΦΘ`.
pub fn regressor(x: &PlantState, u: &PlantInput, g: f64) -> (Vector6<f64>, Matrix6x2<f64>) {
    let (s, c) = x[2].sin_cos();
    let psi = Vector6::new(x[3], x[4], x[5], 0.0, -g, 0.0);
    let mut phi = Matrix6x2::zeros();
    phi[(3, 0)] = -s * u[0];
    phi[(4, 0)] = c * u[0];
    phi[(5, 1)] = u[1];
    (psi, phi)
}

/// First-order filter dynamics for `x`, `Ψ(x)` and `Φ(x, u)`.
///
/// The improper block `s/(s + γ)` acting on `x` is realized as `x − γ z1`, so
/// the filtered left-hand side is `x_f = x − γ z1 − z2`.
pub fn filter_deriv(
    st: &EstimatorState,
    x: &PlantState,
    u: &PlantInput,
    gamma: f64,
    g: f64,
) -> (Vector6<f64>, Vector6<f64>, Matrix6x2<f64>) {
    let (psi, phi) = regressor(x, u, g);
    (
        x - st.z1 * gamma,
        psi - st.z2 * gamma,
        phi - st.zphi * gamma,
    )
}

/// Forgetting-factor accumulation of the filtered regressor.
pub fn data_matrix_deriv(
    st: &EstimatorState,
    x_f: &Vector6<f64>,
    phi_f: &Matrix6x2<f64>,
    lambda: f64,
) -> (Vector2<f64>, Matrix2<f64>) {
    (
        phi_f.transpose() * x_f - st.xbar * lambda,
        phi_f.transpose() * phi_f - st.phibar * lambda,
    )
}

/// Two-power gradient flow `−c1 Ξ/‖Ξ‖^{1−α1} − c2 Ξ/‖Ξ‖^{1−α2}`.
pub fn estimate_deriv(
    theta_hat: &Vector2<f64>,
    xbar: &Vector2<f64>,
    phibar: &Matrix2<f64>,
    cfg: &EstimatorConfig,
) -> Vector2<f64> {
    let xi = phibar * theta_hat - xbar;
    let n = xi.norm();
    if n <= cfg.eps {
        return Vector2::zeros();
    }
    let gain = cfg.c1 * n.powf(cfg.alpha1 - 1.0) + cfg.c2 * n.powf(cfg.alpha2 - 1.0);
    -xi * gain
}

/// `(m̂, Ĵ)` from `Θ̂`, with each entry floored before inversion.
pub fn params_from_theta(theta_hat: &Vector2<f64>, floor: f64) -> (f64, f64) {
    (1.0 / theta_hat[0].max(floor), 1.0 / theta_hat[1].max(floor))
}
