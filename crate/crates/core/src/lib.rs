//! Adaptive dynamic input-output linearizing control of a planar bicopter.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: rigid-body and dynamically extended dynamics;
//! - [`linearizer`]: the linearizing law, the integrator-chain coordinates and
//!   a finite-difference relative-degree oracle;
//! - [`tracker`]: Brunovsky matrices, pole placement and the tracking law;
//! - [`estimator`]: filtered regressor and finite-time parameter estimator;
//! - [`trajectory`]: ellipse and Hilbert references;
//! - [`sim`]: the closed loop, logging and metrics;
//! - [`config`] and [`cli`]: the flat config format and command-line entry points.

pub mod cli;
pub mod config;
pub mod estimator;
pub mod linearizer;
pub mod model;
pub mod sim;
pub mod tracker;
pub mod trajectory;
pub mod verify;
