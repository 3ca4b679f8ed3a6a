//! Numeric oracle suites shared by the `verify` command and the test targets.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linearizer::{beta, beta_inv, lie_relative_degree_check, LinearizerError, ParamEstimate};
use crate::model::{ExtendedState, PlantParams};
use crate::sim::{simulate, SimConfig, SimError, TimeSeries};

pub const LINEARIZATION_TOL: f64 = 1e-3;
pub const INVERSE_TOL: f64 = 1e-10;
pub const DET_TOL: f64 = 1e-12;

/// Random extended state with entries in `[-3, 3]` and thrust magnitude drawn
/// from `thrust`, with random sign.
pub fn random_extended_state(rng: &mut impl Rng, thrust: (f64, f64)) -> ExtendedState {
    let mut chi = ExtendedState::from_fn(|_, _| rng.random_range(-3.0..3.0));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    chi[6] = sign * rng.random_range(thrust.0..thrust.1);
    chi
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeDegreeSummary {
    pub samples: usize,
    pub passed: usize,
    /// Largest `max_lower / scale` over the samples.
    pub worst_lower: f64,
    pub worst_beta_rel: f64,
}

impl RelativeDegreeSummary {
    pub fn ok(&self) -> bool {
        self.passed == self.samples
    }
}

pub fn relative_degree_suite(
    p: &PlantParams,
    samples: usize,
    seed: u64,
    h: f64,
) -> Result<RelativeDegreeSummary, LinearizerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = RelativeDegreeSummary {
        samples,
        passed: 0,
        worst_lower: 0.0,
        worst_beta_rel: 0.0,
    };
    for _ in 0..samples {
        let chi = random_extended_state(&mut rng, (1.0, 20.0));
        let r = lie_relative_degree_check(&chi, p, h)?;
        summary.passed += r.passed() as usize;
        summary.worst_lower = summary.worst_lower.max(r.max_lower / r.scale);
        summary.worst_beta_rel = summary.worst_beta_rel.max(r.beta_rel_err);
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecouplingSummary {
    pub samples: usize,
    /// Largest `‖β β⁻¹ − I‖_max`.
    pub inverse_err: f64,
    /// Largest relative deviation of `det β` from `χ7/(m̂² Ĵ)`.
    pub det_rel_err: f64,
}

impl DecouplingSummary {
    pub fn ok(&self) -> bool {
        self.inverse_err < INVERSE_TOL && self.det_rel_err < DET_TOL
    }
}

/// `β β⁻¹ = I` and the closed-form determinant over random states and
/// random positive parameter estimates.
pub fn decoupling_suite(samples: usize, seed: u64, u_min: f64) -> Result<DecouplingSummary, LinearizerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DecouplingSummary {
        samples,
        inverse_err: 0.0,
        det_rel_err: 0.0,
    };
    for _ in 0..samples {
        let chi = random_extended_state(&mut rng, (u_min, 30.0));
        let m: f64 = rng.random_range(0.2..5.0);
        let j: f64 = rng.random_range(0.01..1.0);
        let est = ParamEstimate::new(Vector2::new(1.0 / m, 1.0 / j));
        let b = beta(&chi, &est);
        let prod = b * beta_inv(&chi, &est, u_min)?;
        out.inverse_err = out.inverse_err.max((prod - Matrix2::identity()).amax());
        let expected = chi[6] / (m * m * j);
        out.det_rel_err = out.det_rel_err.max((b.determinant() - expected).abs() / expected.abs());
    }
    Ok(out)
}

/// Seven-point central estimate of the fourth derivative at interior samples.
/// Entry `i` corresponds to sample `i + 3`.
pub fn fourth_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    const W: [f64; 7] = [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0];
    let scale = 6.0 * h.powi(4);
    samples
        .windows(7)
        .map(|win| win.iter().zip(W).map(|(y, w)| y * w).sum::<f64>() / scale)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationCheck {
    /// `max |y⁽⁴⁾_fd − v| / max |v|` over both outputs.
    pub rel_err: f64,
    pub compared: usize,
}

impl LinearizationCheck {
    pub fn ok(&self) -> bool {
        self.rel_err < LINEARIZATION_TOL
    }
}

/// Compares finite-difference fourth derivatives of the logged outputs with
/// the logged virtual input, skipping records before `transient`.
pub fn linearization_from_series(ts: &TimeSeries, transient: f64) -> LinearizationCheck {
    let recs = &ts.records;
    let h = recs[1].t - recs[0].t;
    let mut max_err: f64 = 0.0;
    let mut max_v: f64 = 0.0;
    let mut compared = 0;
    for axis in 0..2 {
        let y: Vec<f64> = recs.iter().map(|r| r.x[axis]).collect();
        for (i, d4) in fourth_derivative(&y, h).into_iter().enumerate() {
            let rec = &recs[i + 3];
            if rec.t < transient {
                continue;
            }
            max_err = max_err.max((d4 - rec.v[axis]).abs());
            max_v = max_v.max(rec.v[axis].abs());
            compared += 1;
        }
    }
    LinearizationCheck {
        rel_err: max_err / max_v.max(f64::MIN_POSITIVE),
        compared,
    }
}

/// Runs `cfg` with exact parameters and adaptation off, then checks
/// `y⁽⁴⁾ = v` along the logged trajectory.
pub fn linearization_check(cfg: &SimConfig, transient: f64) -> Result<LinearizationCheck, SimError> {
    let ts = simulate(&cfg.clone().known_parameters())?;
    Ok(linearization_from_series(&ts, transient))
}
