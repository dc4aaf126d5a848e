//! Virtual-work inverse dynamics (trajectory to voltages), tip-force
//! prediction (trajectory and voltages to forces), forearm spring-back and a
//! uniaxial film-sample simulator.
//!
//! Each chain's balance is taken along its projection direction `P_k`, the
//! end-effector displacement that leaves the other two biceps at rest. All
//! terms are assembled in the chain's local frame.

mod balance;
mod series;
mod torque;
mod track;
mod uniaxial;

pub use balance::{
    balance_terms, electrostatics, forearm_springback, inverse_dynamics, inverse_dynamics_on, predict_force,
    predict_force_on, BalanceTerms, ElectrostaticIntermediates,
};
pub use series::{ForceSeries, Trajectory, VoltageSignal};
pub use torque::{anchor_grid, ForearmTorqueCurve, TorqueSample};
pub use track::{FilmHistory, KinematicTrack, TrackSample};
pub use uniaxial::{simulate_uniaxial_sample, SampleDims, UniaxialResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{build_chain_frames, ChainFrame, JacobianStep, KinematicsError, RobotGeometry};
use crate::material::{FilmParams, MaterialError};

/// How the film stress enters the elastic virtual work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticWork {
    /// `(σ_i / λ_i) δλ_i` per reference volume, consistent with the free energy.
    #[default]
    Nominal,
    /// `σ_i δλ_i` per reference volume.
    AsPrinted,
}

/// Numerical settings shared by the dynamics routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    /// RK4 substeps per trajectory interval; `None` picks `τ_min / 20`.
    pub substeps: Option<usize>,
    pub elastic_work: ElasticWork,
    pub jacobian: JacobianStep,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self { substeps: None, elastic_work: ElasticWork::Nominal, jacobian: JacobianStep::default() }
    }
}

/// Everything the balance needs: robot, film, spring-back curve, settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub geom: RobotGeometry,
    pub film: FilmParams,
    pub torque: ForearmTorqueCurve,
    pub settings: SimulationSettings,
    pub frames: [ChainFrame; 3],
}

impl Model {
    pub fn new(
        geom: RobotGeometry,
        film: FilmParams,
        torque: ForearmTorqueCurve,
        settings: SimulationSettings,
    ) -> Result<Self, DynamicsError> {
        geom.validate().map_err(DynamicsError::from)?;
        film.validate().map_err(DynamicsError::from)?;
        Ok(Self { frames: build_chain_frames(&geom), geom, film, torque, settings })
    }

    /// Prototype geometry, synthetic film, no spring-back.
    pub fn synthetic_default() -> Self {
        let geom = RobotGeometry::prototype();
        Self {
            frames: build_chain_frames(&geom),
            geom,
            film: FilmParams::synthetic_default(),
            torque: ForearmTorqueCurve::zero(),
            settings: SimulationSettings::default(),
        }
    }

    pub fn with_film(&self, film: FilmParams) -> Self {
        Self { film, ..self.clone() }
    }

    pub fn with_torque(&self, torque: ForearmTorqueCurve) -> Self {
        Self { torque, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("{source}{}", at(*.sample, *.time))]
    Kinematics { source: KinematicsError, sample: Option<usize>, time: Option<f64> },
    #[error("{source}{}", chain_at(*.chain))]
    Material { source: MaterialError, chain: Option<usize> },
    #[error("infeasible actuation in chain {chain}{}: phi^2 = {radicand:.6e} V^2", at(Some(*.sample), Some(*.time)))]
    InfeasibleActuation { chain: usize, sample: usize, time: f64, radicand: f64 },
    #[error("forearm parallel to gravity in chain {chain}{}", at(Some(*.sample), Some(*.time)))]
    DegenerateDirection { chain: usize, sample: usize, time: f64 },
    #[error("no quasi-static equilibrium{}: {msg}", at(Some(*.sample), Some(*.time)))]
    NoEquilibrium { sample: usize, time: f64, msg: String },
    #[error("mismatched time grids: {0}")]
    MismatchedGrids(String),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn at(sample: Option<usize>, time: Option<f64>) -> String {
    match (sample, time) {
        (Some(s), Some(t)) => format!(" at sample {s} (t = {t} s)"),
        (Some(s), None) => format!(" at sample {s}"),
        _ => String::new(),
    }
}

fn chain_at(chain: Option<usize>) -> String {
    chain.map(|k| format!(" in chain {k}")).unwrap_or_default()
}

impl From<KinematicsError> for DynamicsError {
    fn from(source: KinematicsError) -> Self {
        DynamicsError::Kinematics { source, sample: None, time: None }
    }
}

impl From<MaterialError> for DynamicsError {
    fn from(source: MaterialError) -> Self {
        DynamicsError::Material { source, chain: None }
    }
}

impl DynamicsError {
    /// Error kind as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsError::Kinematics { source, .. } => source.name(),
            DynamicsError::Material { source, .. } => source.name(),
            DynamicsError::InfeasibleActuation { .. } => "InfeasibleActuation",
            DynamicsError::DegenerateDirection { .. } => "DegenerateDirection",
            DynamicsError::NoEquilibrium { .. } => "NoEquilibrium",
            DynamicsError::MismatchedGrids(_) => "MismatchedGrids",
            DynamicsError::InvalidSeries(_) => "InvalidSeries",
            DynamicsError::InvalidParams(_) => "InvalidParams",
        }
    }

    pub fn chain(&self) -> Option<usize> {
        match self {
            DynamicsError::Kinematics { source, .. } => source.chain(),
            DynamicsError::Material { chain, .. } => *chain,
            DynamicsError::InfeasibleActuation { chain, .. } | DynamicsError::DegenerateDirection { chain, .. } => {
                Some(*chain)
            }
            _ => None,
        }
    }

    pub fn sample(&self) -> Option<usize> {
        match self {
            DynamicsError::Kinematics { sample, .. } => *sample,
            DynamicsError::InfeasibleActuation { sample, .. }
            | DynamicsError::DegenerateDirection { sample, .. }
            | DynamicsError::NoEquilibrium { sample, .. } => Some(*sample),
            _ => None,
        }
    }

    pub fn time(&self) -> Option<f64> {
        match self {
            DynamicsError::Kinematics { time, .. } => *time,
            DynamicsError::Material { source: MaterialError::GentLimit { time, .. }, .. } => *time,
            DynamicsError::Material { source: MaterialError::StepUnstable { time, .. }, .. } => Some(*time),
            DynamicsError::InfeasibleActuation { time, .. }
            | DynamicsError::DegenerateDirection { time, .. }
            | DynamicsError::NoEquilibrium { time, .. } => Some(*time),
            _ => None,
        }
    }
}
