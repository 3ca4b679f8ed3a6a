//! Planar bicopter rigid-body model and its dynamically extended form.
//!
//! State ordering follows the usual convention for this vehicle:
//! `x = (r1, r2, θ, ṙ1, ṙ2, θ̇)` with inputs `u = (f1 + f2, ℓ(f2 − f1))`.
//! The extended state appends the thrust and its rate, `χ = (x, u1, u̇1)`,
//! and is driven by `w = (ü1, u2)`.

use nalgebra::{SVector, Vector2, Vector6};
use thiserror::Error;

/// `(r1, r2, θ, ṙ1, ṙ2, θ̇)` in SI units, angles unwrapped.
pub type PlantState = Vector6<f64>;
/// `(u1, u2)`: total thrust (N) and differential torque (N·m).
pub type PlantInput = Vector2<f64>;
/// `(x1..x6, u1, u̇1)`.
pub type ExtendedState = SVector<f64, 8>;
/// `(ü1, u2)`.
pub type ExtendedInput = Vector2<f64>;

pub const DEFAULT_MASS: f64 = 1.0;
pub const DEFAULT_INERTIA: f64 = 0.05;
pub const DEFAULT_ARM: f64 = 0.5;
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("plant parameter `{name}` must be positive and finite, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

/// Physical constants of the simulated vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Mass (kg).
    pub m: f64,
    /// Rotational inertia about the roll axis (kg·m²).
    pub j: f64,
    /// Arm half-length (m).
    pub ell: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            m: DEFAULT_MASS,
            j: DEFAULT_INERTIA,
            ell: DEFAULT_ARM,
            g: DEFAULT_GRAVITY,
        }
    }
}

impl PlantParams {
    pub fn new(m: f64, j: f64, ell: f64, g: f64) -> Result<Self, ModelError> {
        let p = Self { m, j, ell, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("m", self.m), ("J", self.j), ("ell", self.ell), ("g", self.g)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// True parameter vector `(1/m, 1/J)` in the form the estimator learns.
    pub fn theta(&self) -> Vector2<f64> {
        Vector2::new(1.0 / self.m, 1.0 / self.j)
    }
}

/// Right-hand side of the rigid-body equations of motion.
pub fn plant_deriv(x: &PlantState, u: &PlantInput, p: &PlantParams) -> PlantState {
    let (s, c) = x[2].sin_cos();
    Vector6::new(
        x[3],
        x[4],
        x[5],
        -u[0] * s / p.m,
        -p.g + u[0] * c / p.m,
        u[1] / p.j,
    )
}

/// Drift of the extended system, `F(χ)`.
pub fn extended_drift(chi: &ExtendedState, p: &PlantParams) -> ExtendedState {
    let (s, c) = chi[2].sin_cos();
    ExtendedState::from([
        chi[3],
        chi[4],
        chi[5],
        -s * chi[6] / p.m,
        -p.g + c * chi[6] / p.m,
        0.0,
        chi[7],
        0.0,
    ])
}

/// Column `k` of the input map `G(χ)`. The map is state independent.
pub fn extended_input_column(k: usize, p: &PlantParams) -> ExtendedState {
    let mut col = ExtendedState::zeros();
    match k {
        0 => col[7] = 1.0,
        1 => col[5] = 1.0 / p.j,
        _ => panic!("input column index {k} out of range"),
    }
    col
}

/// `χ̇ = F(χ) + G(χ) w`.
pub fn extended_deriv(chi: &ExtendedState, w: &ExtendedInput, p: &PlantParams) -> ExtendedState {
    let mut d = extended_drift(chi, p);
    d[5] += w[1] / p.j;
    d[7] += w[0];
    d
}

/// Splits the commanded thrust and torque into the two rotor forces `(f1, f2)`.
pub fn motor_forces(u: &PlantInput, p: &PlantParams) -> (f64, f64) {
    let diff = u[1] / p.ell;
    (0.5 * (u[0] - diff), 0.5 * (u[0] + diff))
}

/// Plant portion `x` of an extended state.
pub fn plant_part(chi: &ExtendedState) -> PlantState {
    chi.fixed_rows::<6>(0).into_owned()
}

/// Actual plant input applied under the extended input `w`: `(χ7, w2)`.
pub fn applied_input(chi: &ExtendedState, w: &ExtendedInput) -> PlantInput {
    Vector2::new(chi[6], w[1])
}
