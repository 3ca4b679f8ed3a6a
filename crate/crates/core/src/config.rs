//! Flat `section.key = value` configuration files.
//!
//! Every key is optional; omitted keys take the default experiment constants.
//! Lists are comma separated. `#` starts a comment anywhere on a line.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use num_complex::Complex64;
use thiserror::Error;

use crate::linearizer::DEFAULT_LIE_STEP;
use crate::model::PlantState;
use crate::sim::SimConfig;
use crate::trajectory::{EllipseSpec, HilbertSpec, TrajectorySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
}

/// Settings of the `verify` command's oracle suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub lie_step: f64,
    pub samples: usize,
    pub seed: u64,
    /// Records before this time are excluded from the `y⁽⁴⁾ = v` check (s).
    pub transient: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            lie_step: DEFAULT_LIE_STEP,
            samples: 20,
            seed: 0,
            transient: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sim: SimConfig,
    pub verify: VerifyOptions,
}

const COMMON_KEYS: &[&str] = &[
    "plant.m",
    "plant.J",
    "plant.ell",
    "plant.g",
    "control.poles",
    "control.u_min",
    "estimator.c1",
    "estimator.c2",
    "estimator.alpha1",
    "estimator.alpha2",
    "estimator.lambda",
    "estimator.gamma",
    "estimator.eps",
    "estimator.theta_floor",
    "estimator.adaptive",
    "estimator.theta0",
    "trajectory.kind",
    "sim.dt",
    "sim.t_end",
    "sim.log_every",
    "sim.x0",
    "verify.lie_step",
    "verify.samples",
    "verify.seed",
    "verify.transient",
];
const ELLIPSE_KEYS: &[&str] = &["trajectory.a", "trajectory.b", "trajectory.phi_deg", "trajectory.omega"];
const HILBERT_KEYS: &[&str] = &["trajectory.size", "trajectory.seg_time", "trajectory.origin"];

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).ok_or_else(|| ConfigError::Parse {
                line: e.line,
                message: format!("`{key}` expects {what}, got `{}`", e.value),
            }),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok(), "a number")
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok(), "a non-negative integer")
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok(), "`true` or `false`")
    }

    fn list<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>, ConfigError> {
        self.parse_with(
            key,
            |s| {
                let vals: Vec<f64> = s.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
                vals.try_into().ok()
            },
            &format!("{N} comma-separated numbers"),
        )
    }

    fn poles(&self, key: &str) -> Result<Option<[Complex64; 4]>, ConfigError> {
        self.parse_with(
            key,
            |s| {
                let vals: Vec<Complex64> = s.split(',').map(|p| parse_pole(p.trim())).collect::<Option<_>>()?;
                vals.try_into().ok()
            },
            "4 comma-separated poles",
        )
    }
}

/// Parses `-4.5`, `-1+2i` or `-1-2i`.
pub fn parse_pole(s: &str) -> Option<Complex64> {
    if let Ok(re) = s.parse::<f64>() {
        return Some(Complex64::new(re, 0.0));
    }
    s.parse::<Complex64>().ok()
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `section.key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !(COMMON_KEYS.contains(&key) || ELLIPSE_KEYS.contains(&key) || HILBERT_KEYS.contains(&key)) {
            return Err(ConfigError::Parse { line, message: format!("unknown key `{key}`") });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse { line, message: format!("`{key}` has no value") });
        }
        if map.insert(key.to_string(), Entry { line, value: value.to_string() }).is_some() {
            return Err(ConfigError::Parse { line, message: format!("duplicate key `{key}`") });
        }
    }
    let e = Entries(map);

    let kind = e.0.get("trajectory.kind").map_or("ellipse", |v| v.value.as_str());
    let (traj, foreign) = match kind {
        "ellipse" => {
            let mut s = EllipseSpec::default();
            set(&mut s.a, e.f64("trajectory.a")?);
            set(&mut s.b, e.f64("trajectory.b")?);
            set(&mut s.phi, e.f64("trajectory.phi_deg")?.map(f64::to_radians));
            set(&mut s.omega, e.f64("trajectory.omega")?);
            (TrajectorySpec::Ellipse(s), HILBERT_KEYS)
        }
        "hilbert" => {
            let mut s = HilbertSpec::default();
            set(&mut s.size, e.f64("trajectory.size")?);
            set(&mut s.seg_time, e.f64("trajectory.seg_time")?);
            set(&mut s.origin, e.list::<2>("trajectory.origin")?.map(Vector2::from));
            (TrajectorySpec::Hilbert(s), ELLIPSE_KEYS)
        }
        other => {
            return Err(ConfigError::Parse {
                line: e.0["trajectory.kind"].line,
                message: format!("trajectory.kind must be `ellipse` or `hilbert`, got `{other}`"),
            })
        }
    };
    if let Some(k) = foreign.iter().find(|k| e.0.contains_key(**k)) {
        return Err(ConfigError::Parse {
            line: e.0[*k].line,
            message: format!("`{k}` does not apply to trajectory.kind = {kind}"),
        });
    }

    let mut cfg = SimConfig::with_trajectory(traj);
    set(&mut cfg.plant.m, e.f64("plant.m")?);
    set(&mut cfg.plant.j, e.f64("plant.J")?);
    set(&mut cfg.plant.ell, e.f64("plant.ell")?);
    set(&mut cfg.plant.g, e.f64("plant.g")?);
    set(&mut cfg.poles, e.poles("control.poles")?);
    set(&mut cfg.u_min, e.f64("control.u_min")?);
    set(&mut cfg.est.c1, e.f64("estimator.c1")?);
    set(&mut cfg.est.c2, e.f64("estimator.c2")?);
    set(&mut cfg.est.alpha1, e.f64("estimator.alpha1")?);
    set(&mut cfg.est.alpha2, e.f64("estimator.alpha2")?);
    set(&mut cfg.est.lambda, e.f64("estimator.lambda")?);
    set(&mut cfg.est.gamma, e.f64("estimator.gamma")?);
    set(&mut cfg.est.eps, e.f64("estimator.eps")?);
    set(&mut cfg.est.theta_floor, e.f64("estimator.theta_floor")?);
    set(&mut cfg.adaptive, e.bool("estimator.adaptive")?);
    set(&mut cfg.theta0, e.list::<2>("estimator.theta0")?.map(Vector2::from));
    set(&mut cfg.dt, e.f64("sim.dt")?);
    set(&mut cfg.t_end, e.f64("sim.t_end")?);
    set(&mut cfg.log_every, e.usize("sim.log_every")?);
    set(&mut cfg.x0, e.list::<6>("sim.x0")?.map(PlantState::from));

    let mut verify = VerifyOptions::default();
    set(&mut verify.lie_step, e.f64("verify.lie_step")?);
    set(&mut verify.samples, e.usize("verify.samples")?);
    set(&mut verify.seed, e.parse_with("verify.seed", |s| s.parse().ok(), "a non-negative integer")?);
    set(&mut verify.transient, e.f64("verify.transient")?);

    cfg.validate().map_err(|err| ConfigError::Validation(err.to_string()))?;
    if !(verify.lie_step.is_finite() && verify.lie_step > 0.0) {
        return Err(ConfigError::Validation(format!("verify.lie_step must be > 0, got {}", verify.lie_step)));
    }
    if verify.samples == 0 {
        return Err(ConfigError::Validation("verify.samples must be >= 1".into()));
    }
    if !(verify.transient.is_finite() && verify.transient >= 0.0) {
        return Err(ConfigError::Validation(format!("verify.transient must be >= 0, got {}", verify.transient)));
    }
    Ok(Config { sim: cfg, verify })
}
