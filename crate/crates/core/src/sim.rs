//! Fixed-step closed-loop simulation of plant, linearizing controller and
//! estimator, plus the logged record stream and its summary metrics.

use std::io::{Read, Write};

use nalgebra::{SVector, Vector2};
use num_complex::Complex64;
use thiserror::Error;

use crate::estimator::{params_from_theta, EstimatorConfig, EstimatorState, ESTIMATOR_DIM};
use crate::linearizer::{iol_w, xi_of_chi, LinearizerError, ParamEstimate, TransformedState, DEFAULT_U_MIN};
use crate::model::{
    applied_input, extended_deriv, plant_part, ExtendedInput, ExtendedState, PlantInput, PlantParams, PlantState,
};
use crate::tracker::{place_gains, tracking_v, DesiredState, GainSet, TrackerError, DEFAULT_POLES};
use crate::trajectory::{EllipseSpec, HilbertSpec, TrajectorySpec};

pub const COMPOSITE_DIM: usize = 8 + ESTIMATOR_DIM;
pub type CompositeVector = SVector<f64, COMPOSITE_DIM>;

/// Why a single integration step could not be completed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepFailure {
    #[error(transparent)]
    SingularThrust(#[from] LinearizerError),
    #[error("state became non-finite")]
    NonFiniteState,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation aborted at step {step} (t = {t} s): {reason}")]
    Aborted { step: usize, t: f64, reason: StepFailure },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Gains(#[from] TrackerError),
    #[error("time series is empty")]
    EmptySeries,
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// True plant used for integration.
    pub plant: PlantParams,
    pub poles: [Complex64; 4],
    pub est: EstimatorConfig,
    pub traj: TrajectorySpec,
    pub dt: f64,
    pub t_end: f64,
    /// Estimator drives `Θ̂` when set; otherwise `Θ̂` stays at `theta0`.
    pub adaptive: bool,
    pub theta0: Vector2<f64>,
    pub x0: PlantState,
    pub log_every: usize,
    /// Thrust guard for the decoupling-matrix inverse (N).
    pub u_min: f64,
}

impl SimConfig {
    /// Default-constant setup for the given trajectory: vehicle at rest at the
    /// trajectory start, `Θ̂(0) = (2, 10)`, adaptation on.
    pub fn with_trajectory(traj: TrajectorySpec) -> Self {
        let start = traj.start_position();
        Self {
            plant: PlantParams::default(),
            poles: DEFAULT_POLES.map(|p| Complex64::new(p, 0.0)),
            est: EstimatorConfig::default(),
            traj,
            dt: 1e-3,
            t_end: traj.default_duration(),
            adaptive: true,
            theta0: Vector2::new(2.0, 10.0),
            x0: PlantState::new(start[0], start[1], 0.0, 0.0, 0.0, 0.0),
            log_every: 10,
            u_min: DEFAULT_U_MIN,
        }
    }

    pub fn ellipse() -> Self {
        Self::with_trajectory(TrajectorySpec::Ellipse(EllipseSpec::default()))
    }

    pub fn hilbert() -> Self {
        Self::with_trajectory(TrajectorySpec::Hilbert(HilbertSpec::default()))
    }

    /// Same experiment with the controller given the true parameters and the
    /// estimator frozen.
    pub fn known_parameters(mut self) -> Self {
        self.adaptive = false;
        self.theta0 = self.plant.theta();
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        self.plant.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.est.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.traj.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        place_gains(self.poles)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid(format!("sim.dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return invalid(format!("sim.t_end must be >= dt, got {}", self.t_end));
        }
        if self.log_every == 0 {
            return invalid("sim.log_every must be >= 1".into());
        }
        if !(self.u_min.is_finite() && self.u_min > 0.0) {
            return invalid(format!("control.u_min must be > 0, got {}", self.u_min));
        }
        if !self.theta0.iter().all(|v| v.is_finite()) || !self.x0.iter().all(|v| v.is_finite()) {
            return invalid("initial state and estimate must be finite".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Extended plant state together with every estimator state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeState {
    pub chi: ExtendedState,
    pub est: EstimatorState,
}

impl CompositeState {
    /// Initial condition: thrust state at hover for the initial mass estimate,
    /// zero thrust rate, zero filters and data matrices.
    pub fn initial(cfg: &SimConfig) -> Self {
        let (m_hat, _) = params_from_theta(&cfg.theta0, cfg.est.theta_floor);
        let mut chi = ExtendedState::zeros();
        chi.fixed_rows_mut::<6>(0).copy_from(&cfg.x0);
        chi[6] = cfg.plant.g * m_hat;
        Self {
            chi,
            est: EstimatorState::new(cfg.theta0),
        }
    }

    pub fn to_vector(&self) -> CompositeVector {
        let mut v = CompositeVector::zeros();
        v.fixed_rows_mut::<8>(0).copy_from(&self.chi);
        v.fixed_rows_mut::<ESTIMATOR_DIM>(8).copy_from(&self.est.to_vector());
        v
    }

    pub fn from_vector(v: &CompositeVector) -> Self {
        Self {
            chi: v.fixed_rows::<8>(0).into_owned(),
            est: EstimatorState::from_slice(&v.as_slice()[8..]),
        }
    }
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(
    y: &SVector<f64, N>,
    t: f64,
    dt: f64,
    mut deriv: F,
) -> Result<SVector<f64, N>, StepFailure>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, StepFailure>,
{
    let half = 0.5 * dt;
    let k1 = deriv(t, y)?;
    let k2 = deriv(t + half, &(y + k1 * half))?;
    let k3 = deriv(t + half, &(y + k2 * half))?;
    let k4 = deriv(t + dt, &(y + k3 * dt))?;
    let next = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(StepFailure::NonFiniteState)
    }
}

/// Every signal the controller computes at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSignals {
    pub x: PlantState,
    pub u: PlantInput,
    pub w: ExtendedInput,
    pub xi: TransformedState,
    pub desired: DesiredState,
    pub v: Vector2<f64>,
}

/// Plant, adaptive controller and estimator wired together.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub cfg: SimConfig,
    pub gains: GainSet,
}

impl ClosedLoop {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let gains = place_gains(cfg.poles)?;
        Ok(Self { cfg, gains })
    }

    /// Controller evaluated with the floored estimate carried in `state`.
    pub fn signals(&self, state: &CompositeState, t: f64) -> Result<ControlSignals, StepFailure> {
        let cfg = &self.cfg;
        let (m_hat, j_hat) = params_from_theta(&state.est.theta_hat, cfg.est.theta_floor);
        let est = ParamEstimate::new(Vector2::new(1.0 / m_hat, 1.0 / j_hat));
        let xi = xi_of_chi(&state.chi, &est, cfg.plant.g);
        let desired = cfg.traj.reference(t);
        let v = tracking_v(&xi, &desired, &self.gains);
        let w = iol_w(&state.chi, &v, &est, cfg.u_min)?;
        Ok(ControlSignals {
            x: plant_part(&state.chi),
            u: applied_input(&state.chi, &w),
            w,
            xi,
            desired,
            v,
        })
    }

    pub fn total_deriv(&self, state: &CompositeState, t: f64) -> Result<CompositeState, StepFailure> {
        let s = self.signals(state, t)?;
        let cfg = &self.cfg;
        Ok(CompositeState {
            chi: extended_deriv(&state.chi, &s.w, &cfg.plant),
            est: state.est.deriv(&s.x, &s.u, cfg.plant.g, &cfg.est, cfg.adaptive),
        })
    }

    fn record(&self, state: &CompositeState, t: f64) -> Result<TimeSeriesRecord, StepFailure> {
        let s = self.signals(state, t)?;
        let theta_hat = state.est.theta_hat;
        Ok(TimeSeriesRecord {
            t,
            x: s.x,
            u: s.u,
            w: s.w,
            xi: s.xi,
            xi_d: s.desired.xi_d,
            v: s.v,
            theta_hat,
            theta_err_norm: (self.cfg.plant.theta() - theta_hat).norm(),
            pos_err: Vector2::new(s.x[0] - s.desired.xi_d[0], s.x[1] - s.desired.xi_d[4]),
        })
    }

    /// Integrates the full horizon, calling `observe` on every accepted state
    /// (including the initial one) with its step index.
    pub fn run<F>(&self, mut observe: F) -> Result<CompositeState, SimError>
    where
        F: FnMut(usize, f64, &CompositeState) -> Result<(), StepFailure>,
    {
        let dt = self.cfg.dt;
        let mut state = CompositeState::initial(&self.cfg);
        let abort = |step: usize, reason: StepFailure| SimError::Aborted { step, t: step as f64 * dt, reason };
        observe(0, 0.0, &state).map_err(|r| abort(0, r))?;
        let mut y = state.to_vector();
        for step in 0..self.cfg.steps() {
            let t = step as f64 * dt;
            y = rk4_step(&y, t, dt, |tt, yy| {
                self.total_deriv(&CompositeState::from_vector(yy), tt).map(|d| d.to_vector())
            })
            .map_err(|r| abort(step + 1, r))?;
            state = CompositeState::from_vector(&y);
            observe(step + 1, (step + 1) as f64 * dt, &state).map_err(|r| abort(step + 1, r))?;
        }
        Ok(state)
    }

    pub fn simulate(&self) -> Result<TimeSeries, SimError> {
        let mut records = Vec::with_capacity(self.cfg.steps() / self.cfg.log_every + 1);
        self.run(|step, t, state| {
            if step % self.cfg.log_every == 0 {
                records.push(self.record(state, t)?);
            }
            Ok(())
        })?;
        Ok(TimeSeries { records })
    }
}

/// Free-function form of [`ClosedLoop::total_deriv`].
pub fn total_deriv(state: &CompositeState, t: f64, sys: &ClosedLoop) -> Result<CompositeState, StepFailure> {
    sys.total_deriv(state, t)
}

pub fn simulate(cfg: &SimConfig) -> Result<TimeSeries, SimError> {
    ClosedLoop::new(cfg.clone())?.simulate()
}

/// Runs independent configurations on separate threads; results keep the
/// input order.
pub fn simulate_batch(cfgs: &[SimConfig]) -> Vec<Result<TimeSeries, SimError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs.iter().map(|cfg| scope.spawn(move || simulate(cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub x: PlantState,
    pub u: PlantInput,
    pub w: ExtendedInput,
    pub xi: TransformedState,
    pub xi_d: TransformedState,
    pub v: Vector2<f64>,
    pub theta_hat: Vector2<f64>,
    pub theta_err_norm: f64,
    pub pos_err: Vector2<f64>,
}

pub const CSV_COLUMNS: [&str; TimeSeriesRecord::WIDTH] = [
    "t", "r1", "r2", "theta", "r1_dot", "r2_dot", "theta_dot", "u1", "u2", "w1", "w2", "xi1", "xi2", "xi3",
    "xi4", "xi5", "xi6", "xi7", "xi8", "xi_d1", "xi_d2", "xi_d3", "xi_d4", "xi_d5", "xi_d6", "xi_d7", "xi_d8",
    "v1", "v2", "theta_hat1", "theta_hat2", "theta_err_norm", "pos_err1", "pos_err2",
];

impl TimeSeriesRecord {
    pub const WIDTH: usize = 34;

    pub fn values(&self) -> [f64; Self::WIDTH] {
        let mut out = [0.0; Self::WIDTH];
        let mut i = 0;
        let mut push = |vals: &[f64]| {
            out[i..i + vals.len()].copy_from_slice(vals);
            i += vals.len();
        };
        push(&[self.t]);
        push(self.x.as_slice());
        push(self.u.as_slice());
        push(self.w.as_slice());
        push(self.xi.as_slice());
        push(self.xi_d.as_slice());
        push(self.v.as_slice());
        push(self.theta_hat.as_slice());
        push(&[self.theta_err_norm]);
        push(self.pos_err.as_slice());
        out
    }

    pub fn from_values(v: &[f64]) -> Self {
        assert_eq!(v.len(), Self::WIDTH);
        Self {
            t: v[0],
            x: PlantState::from_column_slice(&v[1..7]),
            u: PlantInput::from_column_slice(&v[7..9]),
            w: ExtendedInput::from_column_slice(&v[9..11]),
            xi: TransformedState::from_column_slice(&v[11..19]),
            xi_d: TransformedState::from_column_slice(&v[19..27]),
            v: Vector2::from_column_slice(&v[27..29]),
            theta_hat: Vector2::from_column_slice(&v[29..31]),
            theta_err_norm: v[31],
            pos_err: Vector2::from_column_slice(&v[32..34]),
        }
    }
}

/// Column names in CSV order.
pub fn csv_header() -> &'static [&'static str] {
    &CSV_COLUMNS
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub records: Vec<TimeSeriesRecord>,
}

impl TimeSeries {
    /// Writes the header plus one row per record; every value is printed with
    /// 17 significant digits so that reading the file back is lossless.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut wtr = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| SimError::Csv(e.to_string());
        wtr.write_record(csv_header()).map_err(csv_err)?;
        for rec in &self.records {
            wtr.write_record(rec.values().iter().map(|v| format!("{v:.16e}")))
                .map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| SimError::Csv(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String, SimError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| SimError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, SimError> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(|e| SimError::Csv(e.to_string()))?;
        if headers.iter().ne(csv_header().iter().copied()) {
            return Err(SimError::Csv("header does not match the time-series columns".into()));
        }
        let mut records = Vec::new();
        for (row, result) in rdr.records().enumerate() {
            let rec = result.map_err(|e| SimError::Csv(e.to_string()))?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SimError::Csv(format!("row {}: {e}", row + 2)))?;
            if vals.len() != TimeSeriesRecord::WIDTH {
                return Err(SimError::Csv(format!("row {}: expected {} fields", row + 2, TimeSeriesRecord::WIDTH)));
            }
            records.push(TimeSeriesRecord::from_values(&vals));
        }
        Ok(Self { records })
    }
}

/// Thresholds used by [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsOptions {
    /// RMSE is taken over records with `t >= rmse_from`.
    pub rmse_from: f64,
    pub settle_tol: f64,
    pub theta_tol: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            rmse_from: 3.0,
            settle_tol: 0.05,
            theta_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub pos_rmse: f64,
    /// First time after which `‖pos_err‖` stays below the settle tolerance.
    pub settle_time: Option<f64>,
    /// First time after which `‖Θ − Θ̂‖` stays below the convergence tolerance.
    pub theta_converge_time: Option<f64>,
    pub max_thrust: f64,
    pub max_torque: f64,
}

impl Metrics {
    /// `key: value` lines, one per metric.
    pub fn to_lines(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "not_reached".to_string(), |t| format!("{t}"));
        format!(
            "pos_rmse: {}\nsettle_time: {}\ntheta_converge_time: {}\nmax_thrust: {}\nmax_torque: {}\n",
            self.pos_rmse,
            opt(self.settle_time),
            opt(self.theta_converge_time),
            self.max_thrust,
            self.max_torque
        )
    }
}

/// Time from which `ok` holds for every remaining record.
fn holds_from(records: &[TimeSeriesRecord], ok: impl Fn(&TimeSeriesRecord) -> bool) -> Option<f64> {
    let first_bad_from_end = records.iter().rposition(|r| !ok(r));
    match first_bad_from_end {
        None => Some(records[0].t),
        Some(i) if i + 1 < records.len() => Some(records[i + 1].t),
        Some(_) => None,
    }
}

/// Summary metrics; when no record falls inside the RMSE window, the RMSE is
/// taken over the whole series.
pub fn summarize(ts: &TimeSeries, opts: &MetricsOptions) -> Result<Metrics, SimError> {
    let recs = &ts.records;
    if recs.is_empty() {
        return Err(SimError::EmptySeries);
    }
    let window: Vec<&TimeSeriesRecord> = recs.iter().filter(|r| r.t >= opts.rmse_from).collect();
    let window = if window.is_empty() { recs.iter().collect() } else { window };
    let sq: f64 = window.iter().map(|r| r.pos_err.norm_squared()).sum();
    Ok(Metrics {
        pos_rmse: (sq / window.len() as f64).sqrt(),
        settle_time: holds_from(recs, |r| r.pos_err.norm() < opts.settle_tol),
        theta_converge_time: holds_from(recs, |r| r.theta_err_norm < opts.theta_tol),
        max_thrust: recs.iter().fold(0.0, |a, r| a.max(r.u[0].abs())),
        max_torque: recs.iter().fold(0.0, |a, r| a.max(r.u[1].abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn record(t: f64, err: f64, theta_err: f64) -> TimeSeriesRecord {
        TimeSeriesRecord {
            t,
            x: PlantState::zeros(),
            u: PlantInput::new(9.81, -0.01 * t),
            w: ExtendedInput::zeros(),
            xi: TransformedState::zeros(),
            xi_d: TransformedState::zeros(),
            v: Vector2::zeros(),
            theta_hat: Vector2::zeros(),
            theta_err_norm: theta_err,
            pos_err: Vector2::new(err, 0.0),
        }
    }

    #[test]
    fn rk4_examples() {
        let zero = |_: f64, _: &SVector<f64, 3>| Ok(SVector::<f64, 3>::zeros());
        let y = SVector::<f64, 3>::new(1.0, -2.0, 3.0);
        assert_eq!(rk4_step(&y, 0.0, 0.1, zero).unwrap(), y);

        let decay = |_: f64, y: &SVector<f64, 1>| Ok(-y);
        let y1 = rk4_step(&SVector::<f64, 1>::new(1.0), 0.0, 0.1, decay).unwrap();
        let h: f64 = -0.1;
        assert_relative_eq!(y1[0], 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0, epsilon = 1e-16);
        assert_relative_eq!(y1[0], 0.904_837_5, epsilon = 1e-7);

        let blowup = |_: f64, _: &SVector<f64, 1>| Ok(SVector::<f64, 1>::new(f64::INFINITY));
        assert_eq!(
            rk4_step(&SVector::<f64, 1>::new(0.0), 0.0, 0.1, blowup),
            Err(StepFailure::NonFiniteState)
        );
    }

    #[test]
    fn composite_packing_round_trip() {
        let cfg = SimConfig::ellipse();
        let mut s = CompositeState::initial(&cfg);
        s.est.zphi[(3, 0)] = 0.7;
        s.chi[7] = -1.5;
        assert_eq!(CompositeState::from_vector(&s.to_vector()), s);
        assert_relative_eq!(s.chi[6], 4.905);
    }

    #[test]
    fn hover_setpoint_is_an_equilibrium() {
        // a Hilbert path of zero extent is a constant setpoint at the origin
        let mut cfg = SimConfig::hilbert().known_parameters();
        cfg.traj = TrajectorySpec::Hilbert(HilbertSpec { size: 1e-300, ..Default::default() });
        let sys = ClosedLoop::new(cfg).unwrap();
        let s = CompositeState::initial(&sys.cfg);
        let d = sys.total_deriv(&s, 0.0).unwrap();
        assert!(d.chi.amax() < 1e-12, "{}", d.chi);
        assert_eq!(d.est.theta_hat, Vector2::zeros());
    }

    #[test]
    fn summarize_examples() {
        let zero = TimeSeries { records: (0..100).map(|i| record(i as f64 * 0.1, 0.0, 0.0)).collect() };
        let m = summarize(&zero, &MetricsOptions::default()).unwrap();
        assert_eq!(m.settle_time, Some(0.0));
        assert_eq!(m.pos_rmse, 0.0);

        let recs = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                record(t, 0.1, if i < 4 { 1.0 } else { 1e-9 })
            })
            .collect();
        let m = summarize(&TimeSeries { records: recs }, &MetricsOptions::default()).unwrap();
        assert_eq!(m.theta_converge_time, Some(0.4));
        assert_relative_eq!(m.pos_rmse, 0.1, epsilon = 1e-15);
        assert_eq!(m.settle_time, None);
        assert_eq!(m.max_thrust, 9.81);
        assert_relative_eq!(m.max_torque, 0.099, epsilon = 1e-15);

        assert_eq!(summarize(&TimeSeries::default(), &MetricsOptions::default()), Err(SimError::EmptySeries));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let recs = vec![record(0.0, 0.1, 1.0 / 3.0), record(0.01, std::f64::consts::PI, 1e-300)];
        let ts = TimeSeries { records: recs };
        let text = ts.to_csv_string().unwrap();
        assert!(text.starts_with("t,r1,r2,theta,"));
        let back = TimeSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SimConfig::ellipse();
        cfg.dt = 0.0;
        assert!(matches!(simulate(&cfg), Err(SimError::InvalidConfig(_))));
        let mut cfg = SimConfig::ellipse();
        cfg.log_every = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::ellipse();
        cfg.poles[0] = Complex64::new(0.5, 0.0);
        assert!(matches!(cfg.validate(), Err(SimError::Gains(_))));
    }

    #[test]
    fn thrust_guard_aborts_with_step_index() {
        let mut cfg = SimConfig::ellipse().known_parameters();
        cfg.x0[1] = 50.0;
        cfg.t_end = 2.0;
        match simulate(&cfg) {
            Err(SimError::Aborted { reason: StepFailure::SingularThrust(_), step, .. }) => assert!(step > 0),
            other => panic!("expected guard violation, got {other:?}"),
        }
    }
}
