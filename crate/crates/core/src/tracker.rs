//! Brunovsky-form tracking law and companion-form pole placement.

use nalgebra::{SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64;
use thiserror::Error;

use crate::linearizer::TransformedState;

pub type BrunovskyA = SMatrix<f64, 8, 8>;
pub type BrunovskyB = SMatrix<f64, 8, 2>;

/// Closed-loop error-dynamics poles used for both experiments.
pub const DEFAULT_POLES: [f64; 4] = [-4.5, -4.0, -5.0, -5.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("pole {0} does not have a negative real part")]
    UnstablePoleRequest(Complex64),
    #[error("complex pole {0} has no conjugate partner")]
    UnpairedComplexPole(Complex64),
}

/// Two decoupled chains of four integrators.
pub fn brunovsky_matrices() -> (BrunovskyA, BrunovskyB) {
    let mut a = BrunovskyA::zeros();
    let mut b = BrunovskyB::zeros();
    for chain in 0..2 {
        let base = 4 * chain;
        for r in 0..3 {
            a[(base + r, base + r + 1)] = 1.0;
        }
        b[(base + 3, chain)] = 1.0;
    }
    (a, b)
}

/// Per-axis state-feedback gains applied identically to both chains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    /// Feedback row acting on `(e, ė, ë, e⁽³⁾)`; entries are negative for a
    /// Hurwitz closed loop.
    pub k_axis: Vector4<f64>,
    pub poles: [Complex64; 4],
}

impl GainSet {
    /// Gain magnitudes in the `(position, velocity, acceleration, jerk)` order.
    pub fn magnitudes(&self) -> [f64; 4] {
        [self.k_axis[0].abs(), self.k_axis[1].abs(), self.k_axis[2].abs(), self.k_axis[3].abs()]
    }

    /// Assembled `2×8` block-diagonal gain matrix.
    pub fn matrix(&self) -> SMatrix<f64, 2, 8> {
        let mut k = SMatrix::<f64, 2, 8>::zeros();
        for c in 0..4 {
            k[(0, c)] = self.k_axis[c];
            k[(1, 4 + c)] = self.k_axis[c];
        }
        k
    }

    /// `A_ξ + B_ξ K`.
    pub fn closed_loop(&self) -> BrunovskyA {
        let (a, b) = brunovsky_matrices();
        a + b * self.matrix()
    }

    /// Eigenvalues of [`GainSet::closed_loop`], sorted by real then imaginary part.
    pub fn closed_loop_eigenvalues(&self) -> Vec<Complex64> {
        let mut eig: Vec<Complex64> = self.closed_loop().complex_eigenvalues().iter().copied().collect();
        sort_complex(&mut eig);
        eig
    }
}

pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Monic characteristic polynomial coefficients `[a0, a1, a2, a3]` of
/// `Π(s − pᵢ)`, computed over the complex numbers and then projected onto the
/// reals (exact for conjugate-closed pole sets).
fn char_poly(poles: &[Complex64; 4]) -> [f64; 4] {
    // coeffs[i] multiplies s^i; starts as the constant polynomial 1
    let mut coeffs = [Complex64::new(0.0, 0.0); 5];
    coeffs[0] = Complex64::new(1.0, 0.0);
    for (deg, &p) in poles.iter().enumerate() {
        for i in (0..=deg + 1).rev() {
            let shifted = if i > 0 { coeffs[i - 1] } else { Complex64::new(0.0, 0.0) };
            coeffs[i] = shifted - p * coeffs[i];
        }
    }
    [coeffs[0].re, coeffs[1].re, coeffs[2].re, coeffs[3].re]
}

/// Companion-form pole placement for one four-integrator chain.
pub fn place_gains(poles: [Complex64; 4]) -> Result<GainSet, TrackerError> {
    for &p in &poles {
        if !(p.re < 0.0) || !p.im.is_finite() {
            return Err(TrackerError::UnstablePoleRequest(p));
        }
    }
    for &p in &poles {
        if p.im != 0.0 {
            let target = p.conj();
            let partners = poles.iter().filter(|&&q| q == target).count();
            let selves = poles.iter().filter(|&&q| q == p).count();
            if partners != selves {
                return Err(TrackerError::UnpairedComplexPole(p));
            }
        }
    }
    let a = char_poly(&poles);
    Ok(GainSet {
        k_axis: Vector4::new(-a[0], -a[1], -a[2], -a[3]),
        poles,
    })
}

/// Convenience wrapper for an all-real pole set.
pub fn place_real_gains(poles: [f64; 4]) -> Result<GainSet, TrackerError> {
    place_gains(poles.map(|p| Complex64::new(p, 0.0)))
}

/// Desired integrator-chain state plus the fourth-derivative feedforward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub xi_d: TransformedState,
    /// `(y_d1⁽⁴⁾, y_d2⁽⁴⁾)`; zero where the reference is not smooth.
    pub ff: Vector2<f64>,
}

/// Tracking law `v = K(ξ − ξ_d) + B_ξᵀ ξ̇_d`.
pub fn tracking_v(xi: &TransformedState, des: &DesiredState, gains: &GainSet) -> Vector2<f64> {
    let e: SVector<f64, 8> = xi - des.xi_d;
    let k = &gains.k_axis;
    Vector2::new(
        k.dot(&e.fixed_rows::<4>(0)) + des.ff[0],
        k.dot(&e.fixed_rows::<4>(4)) + des.ff[1],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn brunovsky_structure() {
        let (a, b) = brunovsky_matrices();
        assert_eq!(a.pow(4), BrunovskyA::zeros());
        assert_ne!(a.pow(3), BrunovskyA::zeros());
        let e1 = SVector::<f64, 8>::from_fn(|i, _| (i == 0) as u8 as f64);
        let e2 = SVector::<f64, 8>::from_fn(|i, _| (i == 1) as u8 as f64);
        assert_eq!(a * e1, SVector::<f64, 8>::zeros());
        assert_eq!(a * e2, e1);
        assert_eq!(b[(3, 0)], 1.0);
        assert_eq!(b[(7, 1)], 1.0);
        assert_eq!(b.sum(), 2.0);

        let mut ctrb = SMatrix::<f64, 8, 8>::zeros();
        let mut blk = b;
        for i in 0..4 {
            ctrb.fixed_columns_mut::<2>(2 * i).copy_from(&blk);
            blk = a * blk;
        }
        assert_eq!(ctrb.rank(1e-12), 8);
    }

    #[test]
    fn reproduces_reported_gains() {
        let g = place_real_gains(DEFAULT_POLES).unwrap();
        assert_eq!(g.magnitudes(), [495.0, 422.75, 134.75, 19.0]);
        assert!(g.k_axis.iter().all(|&k| k < 0.0));
    }

    #[test]
    fn binomial_gains() {
        let g = place_real_gains([-1.0; 4]).unwrap();
        assert_eq!(g.magnitudes(), [1.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn complex_pair_gains() {
        // (s² + 2s + 5)(s + 1)(s + 2) = s⁴ + 5s³ + 13s² + 19s + 10
        let g = place_gains([c(-1.0, 2.0), c(-1.0, -2.0), c(-1.0, 0.0), c(-2.0, 0.0)]).unwrap();
        assert_eq!(g.magnitudes(), [10.0, 19.0, 13.0, 5.0]);
        let eig = g.closed_loop_eigenvalues();
        assert!(eig.iter().filter(|z| (*z - c(-1.0, 2.0)).norm() < 1e-9).count() == 2);
    }

    #[test]
    fn rejects_unstable_or_unpaired() {
        assert!(matches!(
            place_real_gains([0.0, -1.0, -2.0, -3.0]),
            Err(TrackerError::UnstablePoleRequest(_))
        ));
        assert!(place_real_gains([1.0, -1.0, -2.0, -3.0]).is_err());
        assert!(place_real_gains([f64::NAN, -1.0, -2.0, -3.0]).is_err());
        assert!(matches!(
            place_gains([c(-1.0, 1.0), c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)]),
            Err(TrackerError::UnpairedComplexPole(_))
        ));
    }

    #[test]
    fn closed_loop_eigenvalues_match_poles() {
        let g = place_real_gains(DEFAULT_POLES).unwrap();
        let eig = g.closed_loop_eigenvalues();
        let expected = [-5.5, -5.5, -5.0, -5.0, -4.5, -4.5, -4.0, -4.0];
        assert_eq!(eig.len(), 8);
        for (z, e) in eig.iter().zip(expected) {
            assert!((z - c(e, 0.0)).norm() < 1e-9, "{z} vs {e}");
        }
    }

    #[test]
    fn tracking_examples() {
        let g = place_real_gains(DEFAULT_POLES).unwrap();
        let xi = TransformedState::from([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let mut des = DesiredState { xi_d: xi, ff: Vector2::zeros() };
        assert_eq!(tracking_v(&xi, &des, &g), Vector2::zeros());
        des.ff = Vector2::new(2.0, -1.0);
        assert_eq!(tracking_v(&xi, &des, &g), Vector2::new(2.0, -1.0));

        let des = DesiredState { xi_d: TransformedState::zeros(), ff: Vector2::zeros() };
        let mut e = TransformedState::zeros();
        e[0] = 1.0;
        assert_eq!(tracking_v(&e, &des, &g), Vector2::new(-495.0, 0.0));
    }

    /// RK4 rollout of the error dynamics from each unit vector; the position
    /// error settles to 2% within two seconds. Higher-derivative components
    /// are still decaying from their transient growth at that point.
    #[test]
    fn position_error_settles_within_two_seconds() {
        let acl = place_real_gains(DEFAULT_POLES).unwrap().closed_loop();
        let dt = 1e-3;
        for i in 0..8 {
            let mut e = SVector::<f64, 8>::from_fn(|r, _| (r == i) as u8 as f64);
            for _ in 0..2000 {
                let k1 = acl * e;
                let k2 = acl * (e + k1 * (dt / 2.0));
                let k3 = acl * (e + k2 * (dt / 2.0));
                let k4 = acl * (e + k3 * dt);
                e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            }
            assert!(e[0].abs() < 0.02 && e[4].abs() < 0.02, "unit {i}: {e}");
            assert!(e.norm() < 0.6);
        }
    }

    proptest! {
        #[test]
        fn tracking_is_affine(
            xi in prop::array::uniform8(-10.0..10.0f64),
            d in prop::array::uniform8(-1.0..1.0f64),
        ) {
            let g = place_real_gains(DEFAULT_POLES).unwrap();
            let des = DesiredState { xi_d: TransformedState::from([0.5; 8]), ff: Vector2::new(0.3, -0.2) };
            let xi = TransformedState::from(xi);
            let d = TransformedState::from(d);
            let lhs = tracking_v(&(xi + d), &des, &g) - tracking_v(&xi, &des, &g);
            let rhs = g.matrix() * d;
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }

        #[test]
        fn placed_poles_are_recovered(p in prop::array::uniform4(-8.0..-0.5f64)) {
            let mut p = p;
            // well-separated poles keep the companion eigenproblem well conditioned
            p.sort_by(f64::total_cmp);
            prop_assume!(p.windows(2).all(|w| w[1] - w[0] > 0.5));
            let g = place_real_gains(p).unwrap();
            let eig = g.closed_loop_eigenvalues();
            let mut expected: Vec<f64> = p.iter().chain(p.iter()).copied().collect();
            expected.sort_by(f64::total_cmp);
            for (z, e) in eig.iter().zip(expected) {
                prop_assert!((z - c(e, 0.0)).norm() < 1e-7);
            }
        }
    }
}
