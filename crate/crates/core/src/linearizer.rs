//! Input-output linearizing law for the dynamically extended bicopter.
//!
//! The closed forms below are `α = L_F⁴H`, `β = L_G L_F³H` and the
//! integrator-chain coordinates `ξ = (H, L_F H, L_F² H, L_F³ H)` per output,
//! evaluated with estimated mass and inertia. [`lie_relative_degree_check`]
//! recomputes the same quantities from the raw vector fields by nested finite
//! differences and is independent of the closed forms.

use nalgebra::{Matrix2, SVector, Vector2};
use thiserror::Error;

use crate::model::{extended_drift, extended_input_column, ExtendedInput, ExtendedState, PlantParams};

/// Smallest thrust magnitude for which the decoupling matrix is inverted (N).
pub const DEFAULT_U_MIN: f64 = 0.1;

/// Default central-difference step of the Lie-derivative oracle.
pub const DEFAULT_LIE_STEP: f64 = 1e-2;

pub type TransformedState = SVector<f64, 8>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearizerError {
    #[error("thrust state χ7 = {thrust:e} N is inside the singular band |χ7| < {u_min} N")]
    SingularThrust { thrust: f64, u_min: f64 },
    #[error("finite-difference stencil produced a non-finite value at k = {order}")]
    IllConditioned { order: usize },
}

/// Estimated parameter vector `Θ̂ = (1/m̂, 1/Ĵ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamEstimate {
    pub theta: Vector2<f64>,
}

impl ParamEstimate {
    pub fn new(theta: Vector2<f64>) -> Self {
        Self { theta }
    }

    /// Estimate that coincides with the true plant.
    pub fn exact(p: &PlantParams) -> Self {
        Self { theta: p.theta() }
    }

    pub fn mass(&self) -> f64 {
        1.0 / self.theta[0]
    }

    pub fn inertia(&self) -> f64 {
        1.0 / self.theta[1]
    }
}

pub fn alpha(chi: &ExtendedState, est: &ParamEstimate) -> Vector2<f64> {
    let (s, c) = chi[2].sin_cos();
    let (w, thrust, rate) = (chi[5], chi[6], chi[7]);
    let inv_m = est.theta[0];
    Vector2::new(
        -w * (2.0 * rate * c - w * thrust * s) * inv_m,
        -w * (2.0 * rate * s + w * thrust * c) * inv_m,
    )
}

pub fn beta(chi: &ExtendedState, est: &ParamEstimate) -> Matrix2<f64> {
    let (s, c) = chi[2].sin_cos();
    let inv_m = est.theta[0];
    let k = chi[6] * inv_m * est.theta[1];
    Matrix2::new(-s * inv_m, -c * k, c * inv_m, -s * k)
}

/// Closed-form inverse of [`beta`], guarded against vanishing thrust.
pub fn beta_inv(chi: &ExtendedState, est: &ParamEstimate, u_min: f64) -> Result<Matrix2<f64>, LinearizerError> {
    let thrust = chi[6];
    if !(thrust.abs() >= u_min) {
        return Err(LinearizerError::SingularThrust { thrust, u_min });
    }
    let (s, c) = chi[2].sin_cos();
    let m = est.mass();
    let jm = est.inertia() * m / thrust;
    Ok(Matrix2::new(-m * s, m * c, -jm * c, -jm * s))
}

/// Linearizing law `w = −β⁻¹(α − v)`.
pub fn iol_w(
    chi: &ExtendedState,
    v: &Vector2<f64>,
    est: &ParamEstimate,
    u_min: f64,
) -> Result<ExtendedInput, LinearizerError> {
    let bi = beta_inv(chi, est, u_min)?;
    Ok(-(bi * (alpha(chi, est) - v)))
}

/// Integrator-chain coordinates of `χ`. Gravity is treated as known.
pub fn xi_of_chi(chi: &ExtendedState, est: &ParamEstimate, g: f64) -> TransformedState {
    let (s, c) = chi[2].sin_cos();
    let inv_m = est.theta[0];
    let (w, thrust, rate) = (chi[5], chi[6], chi[7]);
    TransformedState::from([
        chi[0],
        chi[3],
        -s * thrust * inv_m,
        -c * thrust * w * inv_m - s * rate * inv_m,
        chi[1],
        chi[4],
        -g + c * thrust * inv_m,
        -s * thrust * w * inv_m + c * rate * inv_m,
    ])
}

/// Numerically estimated Lie derivatives around one extended state.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeDegreeReport {
    /// `lower[k][(i, j)] = L_{G_j} L_F^k H_i` for `k = 0, 1, 2`.
    pub lower: [Matrix2<f64>; 3],
    /// Numeric decoupling matrix `L_G L_F³ H`.
    pub decoupling: Matrix2<f64>,
    /// Closed-form `β(χ)` with the true parameters.
    pub beta: Matrix2<f64>,
    pub max_lower: f64,
    pub scale: f64,
    pub beta_rel_err: f64,
    pub det: f64,
}

impl RelativeDegreeReport {
    pub const LOWER_TOL: f64 = 1e-6;
    pub const BETA_TOL: f64 = 1e-4;

    pub fn lower_ok(&self) -> bool {
        self.max_lower < Self::LOWER_TOL * self.scale
    }

    pub fn beta_ok(&self) -> bool {
        self.beta_rel_err < Self::BETA_TOL
    }

    pub fn passed(&self) -> bool {
        self.lower_ok() && self.beta_ok()
    }
}

type ScalarField<'a> = Box<dyn Fn(&ExtendedState) -> f64 + 'a>;

/// Directional derivative of `phi` along `field`, central differences with
/// one Richardson extrapolation step (fourth-order in `h`).
fn lie_fd<'a, V>(phi: ScalarField<'a>, field: V, h: f64) -> ScalarField<'a>
where
    V: Fn(&ExtendedState) -> ExtendedState + 'a,
{
    Box::new(move |chi: &ExtendedState| {
        let dir = field(chi);
        let central = |step: f64| (phi(&(chi + dir * step)) - phi(&(chi - dir * step))) / (2.0 * step);
        (4.0 * central(0.5 * h) - central(h)) / 3.0
    })
}

/// Finite-difference relative-degree check of the extended system at `chi`.
///
/// Builds `L_F^k H_i` by nested directional differences of the drift field
/// and differentiates each along both input columns. Relative degree four per
/// output holds when every `k < 3` entry vanishes and the `k = 3` matrix is
/// the (invertible) decoupling matrix.
pub fn lie_relative_degree_check(
    chi: &ExtendedState,
    p: &PlantParams,
    h: f64,
) -> Result<RelativeDegreeReport, LinearizerError> {
    let mut lower = [Matrix2::zeros(); 3];
    let mut decoupling = Matrix2::zeros();
    for i in 0..2 {
        let mut phi: ScalarField = Box::new(move |c: &ExtendedState| c[i]);
        for k in 0..4 {
            for j in 0..2 {
                let col = extended_input_column(j, p);
                let lg = lie_fd(Box::new(|c: &ExtendedState| phi(c)), move |_: &ExtendedState| col, h)(chi);
                if !lg.is_finite() {
                    return Err(LinearizerError::IllConditioned { order: k });
                }
                if k < 3 {
                    lower[k][(i, j)] = lg;
                } else {
                    decoupling[(i, j)] = lg;
                }
            }
            if k < 3 {
                phi = lie_fd(phi, move |c: &ExtendedState| extended_drift(c, p), h);
            }
        }
    }

    let beta = beta(chi, &ParamEstimate::exact(p));
    let max_lower = lower.iter().flat_map(|m| m.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = beta.amax().max(1.0);
    let beta_rel_err = (decoupling - beta).amax() / beta.amax().max(f64::MIN_POSITIVE);
    Ok(RelativeDegreeReport {
        lower,
        decoupling,
        beta,
        max_lower,
        scale,
        beta_rel_err,
        det: decoupling.determinant(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn est(m: f64, j: f64) -> ParamEstimate {
        ParamEstimate::new(Vector2::new(1.0 / m, 1.0 / j))
    }

    fn random_chi(rng: &mut ChaCha8Rng, thrust_range: (f64, f64)) -> ExtendedState {
        let mut chi = ExtendedState::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        chi[6] = sign * rng.random_range(thrust_range.0..thrust_range.1);
        chi
    }

    #[test]
    fn alpha_examples() {
        let mut chi = ExtendedState::from([1.0, 2.0, 0.3, 4.0, 5.0, 0.0, 7.0, 8.0]);
        assert_eq!(alpha(&chi, &est(1.0, 0.05)), Vector2::zeros());

        chi = ExtendedState::zeros();
        chi[5] = 1.0;
        chi[6] = 2.0;
        chi[7] = 3.0;
        assert_eq!(alpha(&chi, &est(1.0, 0.05)), Vector2::new(-6.0, -2.0));
        let doubled = alpha(&chi, &ParamEstimate::new(Vector2::new(2.0, 20.0)));
        assert_eq!(doubled, Vector2::new(-12.0, -4.0));
    }

    #[test]
    fn beta_examples() {
        let mut chi = ExtendedState::zeros();
        chi[6] = 9.81;
        let b = beta(&chi, &est(1.0, 0.05));
        assert_relative_eq!(b, Matrix2::new(0.0, -196.2, 1.0, 0.0), max_relative = 1e-14);

        chi[6] = 0.0;
        chi[2] = 0.4;
        assert_eq!(beta(&chi, &est(1.0, 0.05)).determinant(), 0.0);
    }

    #[test]
    fn beta_inv_examples() {
        let mut chi = ExtendedState::zeros();
        chi[6] = 9.81;
        let e = est(1.0, 0.05);
        let bi = beta_inv(&chi, &e, DEFAULT_U_MIN).unwrap();
        assert_relative_eq!(bi, Matrix2::new(0.0, 1.0, -0.05 / 9.81, 0.0), max_relative = 1e-14);
        let numeric = beta(&chi, &e).try_inverse().unwrap();
        assert_relative_eq!(bi, numeric, epsilon = 1e-14);

        chi[6] = 1e-9;
        assert!(matches!(
            beta_inv(&chi, &e, DEFAULT_U_MIN),
            Err(LinearizerError::SingularThrust { .. })
        ));
        chi[6] = f64::NAN;
        assert!(beta_inv(&chi, &e, DEFAULT_U_MIN).is_err());
    }

    #[test]
    fn iol_w_examples() {
        let e = est(1.0, 0.05);
        let chi = ExtendedState::from([0.1, -0.2, 0.5, 1.0, -1.0, 0.8, 6.0, 1.5]);
        let w = iol_w(&chi, &alpha(&chi, &e), &e, DEFAULT_U_MIN).unwrap();
        assert_eq!(w, Vector2::zeros());

        let mut chi = ExtendedState::zeros();
        chi[6] = 9.81;
        let w = iol_w(&chi, &Vector2::new(1.0, 0.0), &e, DEFAULT_U_MIN).unwrap();
        assert_eq!(w[0], 0.0);
        assert_relative_eq!(w[1], -0.05 / 9.81, max_relative = 1e-14);

        chi[6] = 0.0;
        assert!(iol_w(&chi, &Vector2::zeros(), &e, DEFAULT_U_MIN).is_err());
    }

    /// The closed-loop fourth derivative of the output equals `v` once `w`
    /// from the law is substituted into the extended dynamics.
    #[test]
    fn linearizing_law_cancels_nonlinearity() {
        let p = PlantParams::default();
        let e = ParamEstimate::exact(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let chi = random_chi(&mut rng, (1.0, 20.0));
            let v = Vector2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let w = iol_w(&chi, &v, &e, DEFAULT_U_MIN).unwrap();
            let y4 = alpha(&chi, &e) + beta(&chi, &e) * w;
            assert_relative_eq!(y4, v, epsilon = 1e-9);
        }
    }

    #[test]
    fn xi_examples() {
        let e = est(1.0, 0.05);
        let g = 9.81;
        let chi = ExtendedState::from([2.0, -3.0, 0.0, 0.0, 0.0, 0.0, g, 0.0]);
        assert_eq!(xi_of_chi(&chi, &e, g), TransformedState::from([2.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0]));

        let mut chi = ExtendedState::zeros();
        chi[2] = FRAC_PI_2;
        chi[5] = 1.0;
        chi[6] = 2.0;
        let xi = xi_of_chi(&chi, &e, g);
        assert_relative_eq!(xi[2], -2.0, epsilon = 1e-15);
        assert_relative_eq!(xi[3], 0.0, epsilon = 1e-15);
        assert_relative_eq!(xi[6], -g, epsilon = 1e-15);
        assert_relative_eq!(xi[7], -2.0, epsilon = 1e-15);
    }

    /// ξ entries against nested central differences of `H` along `F`.
    #[test]
    fn xi_matches_numeric_lie_derivatives() {
        let p = PlantParams::default();
        let e = ParamEstimate::exact(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let chi = random_chi(&mut rng, (1.0, 20.0));
            let xi = xi_of_chi(&chi, &e, p.g);
            for (i, base) in [(0usize, 0usize), (1, 4)] {
                let mut phi: ScalarField = Box::new(move |c: &ExtendedState| c[i]);
                for k in 0..4 {
                    let val = phi(&chi);
                    assert!((val - xi[base + k]).abs() < 1e-5 * (1.0 + xi[base + k].abs()), "k={k} i={i}");
                    phi = lie_fd(phi, move |c: &ExtendedState| extended_drift(c, &p), DEFAULT_LIE_STEP);
                }
            }
        }
    }

    #[test]
    fn relative_degree_is_four_per_output() {
        let p = PlantParams::default();
        let mut chi = ExtendedState::from([0.3, 1.2, 0.4, -0.5, 0.8, 0.9, 9.81, 1.7]);
        let r = lie_relative_degree_check(&chi, &p, DEFAULT_LIE_STEP).unwrap();
        assert!(r.lower_ok(), "{r:?}");
        assert!(r.beta_ok(), "{r:?}");

        chi[6] = 0.0;
        let r = lie_relative_degree_check(&chi, &p, DEFAULT_LIE_STEP).unwrap();
        assert!(r.det.abs() < 1e-6, "{}", r.det);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = lie_relative_degree_check(&random_chi(&mut rng, (1.0, 20.0)), &p, DEFAULT_LIE_STEP).unwrap();
        let b = lie_relative_degree_check(&random_chi(&mut rng, (1.0, 20.0)), &p, DEFAULT_LIE_STEP).unwrap();
        assert_eq!(a.passed(), b.passed());
        assert!(a.passed());
    }

    #[test]
    fn oracle_reports_overflow() {
        let p = PlantParams::default();
        let mut chi = ExtendedState::zeros();
        chi[6] = 1e308;
        chi[5] = 1e308;
        assert!(matches!(
            lie_relative_degree_check(&chi, &p, DEFAULT_LIE_STEP),
            Err(LinearizerError::IllConditioned { .. })
        ));
    }

    proptest! {
        #[test]
        fn beta_times_inverse_is_identity(
            chi in prop::array::uniform8(-5.0..5.0f64),
            thrust in 0.1..30.0f64,
            neg in any::<bool>(),
            m in 0.2..5.0f64,
            j in 0.01..1.0f64,
        ) {
            let mut chi = ExtendedState::from(chi);
            chi[6] = if neg { -thrust } else { thrust };
            let e = est(m, j);
            let prod = beta(&chi, &e) * beta_inv(&chi, &e, DEFAULT_U_MIN).unwrap();
            prop_assert!((prod - Matrix2::identity()).amax() < 1e-10);
            let det = beta(&chi, &e).determinant();
            let expected = chi[6] / (m * m * j);
            prop_assert!((det - expected).abs() <= 1e-12 * expected.abs());
        }

        #[test]
        fn thrust_magnitude_identity(chi in prop::array::uniform8(-20.0..20.0f64), m in 0.2..5.0f64) {
            let chi = ExtendedState::from(chi);
            let e = est(m, 0.05);
            let xi = xi_of_chi(&chi, &e, 9.81);
            let lhs = xi[2].powi(2) + (xi[6] + 9.81).powi(2);
            let rhs = (chi[6] / m).powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
        }

        #[test]
        fn periodic_in_roll(chi in prop::array::uniform8(-5.0..5.0f64)) {
            let chi = ExtendedState::from(chi);
            let mut shifted = chi;
            shifted[2] += TAU;
            let e = est(1.0, 0.05);
            prop_assert!((alpha(&chi, &e) - alpha(&shifted, &e)).amax() < 1e-12 * (1.0 + alpha(&chi, &e).amax()));
            prop_assert!((beta(&chi, &e) - beta(&shifted, &e)).amax() < 1e-12 * (1.0 + beta(&chi, &e).amax()));
        }
    }
}
