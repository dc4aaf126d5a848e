//! Simulation, inverse dynamics and calibration for a Delta parallel robot
//! whose three biceps are driven by lozenge-shaped dielectric elastomer
//! actuators (LSDEA) through a four-bar stroke amplifier.
//!
//! The crate is organised along the modelling pipeline:
//!
//! - [`geometry`]: frame kinematics, the four-bar amplifier, the lozenge strain
//!   map and finite-difference Jacobians of the inverse kinematics.
//! - [`material`]: Gent hyperelasticity with a six-branch Bergström–Boyce
//!   viscoelastic network, pre-tension design relations and time integration
//!   of the dashpot stretches.
//! - [`dynamics`]: virtual-work inverse dynamics (trajectory → voltages) and
//!   tip-force prediction (trajectory + voltages → force), forearm spring-back
//!   and a uniaxial film-sample simulator.
//! - [`calibration`]: fitting film parameters and the forearm torque curve to
//!   recorded trajectory/voltage pairs.
//! - [`config`], [`csvio`], [`protocol`], [`metrics`]: configuration files,
//!   CSV series, trajectory generation and error metrics used by the CLI.
//!
//! All quantities are SI internally (m, rad, kg, s, V, N, Pa).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod csvio;
pub mod dynamics;
pub mod geometry;
pub mod material;
pub mod metrics;
mod numeric;
pub mod protocol;

pub use calibration::{calibrate_film, calibrate_forearm, CalibrationError, CalibrationProblem};
pub use config::EngineConfig;
pub use dynamics::{
    inverse_dynamics, predict_force, DynamicsError, ForceSeries, ForearmTorqueCurve, Model,
    Trajectory, VoltageSignal,
};
pub use geometry::{build_chain_frames, inverse_kinematics, ChainFrame, KinematicSnapshot, RobotGeometry};
pub use material::{FilmParams, FilmState, StretchPair};

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.806_65;
