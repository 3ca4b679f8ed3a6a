//! Reference trajectories: a tilted ellipse and an order-2 Hilbert path.

use nalgebra::Vector2;
use thiserror::Error;

use crate::linearizer::TransformedState;
use crate::tracker::DesiredState;

/// Number of vertices of the order-2 Hilbert curve.
pub const HILBERT_POINTS: usize = 16;
const HILBERT_SIDE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("invalid trajectory setting: {0}")]
    Invalid(String),
}

/// `r(t) = a·u − a·u·cos ωt + b·u⊥·sin ωt` with `u = (cos φ, sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    /// Semi-axis along the tilt direction (m).
    pub a: f64,
    /// Semi-axis across the tilt direction (m).
    pub b: f64,
    /// Tilt (rad).
    pub phi: f64,
    /// Angular rate (rad/s).
    pub omega: f64,
}

impl Default for EllipseSpec {
    fn default() -> Self {
        Self {
            a: 5.0,
            b: 3.0,
            phi: 45f64.to_radians(),
            omega: 1.0,
        }
    }
}

impl EllipseSpec {
    pub fn center(&self) -> Vector2<f64> {
        let (s, c) = self.phi.sin_cos();
        Vector2::new(self.a * c, self.a * s)
    }

    /// `n`-th time derivative of the position, `n = 0..=4`.
    pub fn derivative(&self, t: f64, n: u32) -> Vector2<f64> {
        let (sp, cp) = self.phi.sin_cos();
        let along = Vector2::new(cp, sp);
        let across = Vector2::new(-sp, cp);
        let phase = self.omega * t + f64::from(n) * std::f64::consts::FRAC_PI_2;
        let scale = self.omega.powi(n as i32);
        let moving = (-self.a * phase.cos() * along + self.b * phase.sin() * across) * scale;
        if n == 0 {
            self.center() + moving
        } else {
            moving
        }
    }
}

pub fn ellipse_ref(t: f64, spec: &EllipseSpec) -> DesiredState {
    let d: Vec<Vector2<f64>> = (0..=4).map(|n| spec.derivative(t, n)).collect();
    let xi_d = TransformedState::from([
        d[0][0], d[1][0], d[2][0], d[3][0], d[0][1], d[1][1], d[2][1], d[3][1],
    ]);
    DesiredState { xi_d, ff: d[4] }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertSpec {
    /// Side length of the square the curve spans (m).
    pub size: f64,
    /// Travel time per grid segment (s).
    pub seg_time: f64,
    pub origin: Vector2<f64>,
}

impl Default for HilbertSpec {
    fn default() -> Self {
        Self {
            size: 3.0,
            seg_time: 2.0,
            origin: Vector2::zeros(),
        }
    }
}

impl HilbertSpec {
    pub fn spacing(&self) -> f64 {
        self.size / (HILBERT_SIDE - 1) as f64
    }

    pub fn segments(&self) -> usize {
        HILBERT_POINTS - 1
    }

    pub fn duration(&self) -> f64 {
        self.segments() as f64 * self.seg_time
    }

    /// Times at which each waypoint is reached.
    pub fn arrival_times(&self) -> Vec<f64> {
        (0..HILBERT_POINTS).map(|k| k as f64 * self.seg_time).collect()
    }
}

/// Grid cell of index `d` along the Hilbert curve on an `n × n` grid.
fn hilbert_d2xy(n: usize, d: usize) -> (usize, usize) {
    let (mut x, mut y) = (0, 0);
    let mut t = d;
    let mut s = 1;
    while s < n {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

pub fn hilbert_waypoints(spec: &HilbertSpec) -> Vec<Vector2<f64>> {
    let h = spec.spacing();
    (0..HILBERT_POINTS)
        .map(|d| {
            let (x, y) = hilbert_d2xy(HILBERT_SIDE, d);
            spec.origin + Vector2::new(x as f64 * h, y as f64 * h)
        })
        .collect()
}

/// Constant-speed traversal of the waypoint path. Acceleration, jerk and the
/// feedforward are zero everywhere; corners take the outgoing segment.
pub fn hilbert_ref(t: f64, spec: &HilbertSpec) -> DesiredState {
    let pts = hilbert_waypoints(spec);
    let (pos, vel) = if t >= spec.duration() {
        (pts[HILBERT_POINTS - 1], Vector2::zeros())
    } else {
        let t = t.max(0.0);
        let k = ((t / spec.seg_time).floor() as usize).min(spec.segments() - 1);
        let frac = (t - k as f64 * spec.seg_time) / spec.seg_time;
        let delta = pts[k + 1] - pts[k];
        (pts[k] + delta * frac, delta / spec.seg_time)
    };
    DesiredState {
        xi_d: TransformedState::from([pos[0], vel[0], 0.0, 0.0, pos[1], vel[1], 0.0, 0.0]),
        ff: Vector2::zeros(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectorySpec {
    Ellipse(EllipseSpec),
    Hilbert(HilbertSpec),
}

impl TrajectorySpec {
    pub fn reference(&self, t: f64) -> DesiredState {
        match self {
            Self::Ellipse(e) => ellipse_ref(t, e),
            Self::Hilbert(h) => hilbert_ref(t, h),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Ellipse(_) => "ellipse",
            Self::Hilbert(_) => "hilbert",
        }
    }

    pub fn start_position(&self) -> Vector2<f64> {
        let d = self.reference(0.0);
        Vector2::new(d.xi_d[0], d.xi_d[4])
    }

    /// Default experiment length for this trajectory (s).
    pub fn default_duration(&self) -> f64 {
        match self {
            Self::Ellipse(_) => 20.0,
            Self::Hilbert(_) => 30.0,
        }
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(TrajectoryError::Invalid(format!("{name} must be > 0, got {v}")))
            }
        };
        match self {
            Self::Ellipse(e) => {
                check("trajectory.a", e.a)?;
                check("trajectory.b", e.b)?;
                check("trajectory.omega", e.omega)?;
                if !e.phi.is_finite() {
                    return Err(TrajectoryError::Invalid("trajectory.phi_deg must be finite".into()));
                }
            }
            Self::Hilbert(h) => {
                check("trajectory.size", h.size)?;
                check("trajectory.seg_time", h.seg_time)?;
                if !(h.origin[0].is_finite() && h.origin[1].is_finite()) {
                    return Err(TrajectoryError::Invalid("trajectory.origin must be finite".into()));
                }
            }
        }
        Ok(())
    }
}
