//! Per-sample kinematics and per-chain film histories along a trajectory.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{DynamicsError, Model, SimulationSettings, Trajectory};
use crate::geometry::{inverse_kinematics, kinematics_jacobians, ChainJacobian, KinematicSnapshot};
use crate::material::{advance_state, FilmParams, FilmState, MaterialError};

/// Inverse kinematics and Jacobians at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample {
    pub snapshot: KinematicSnapshot,
    pub jacobians: [ChainJacobian; 3],
}

/// Kinematics of a whole trajectory. Independent of the film's material
/// constants, so it can be reused while those are fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTrack {
    pub t: Vec<f64>,
    pub samples: Vec<TrackSample>,
    /// World velocity and acceleration of the end effector.
    pub velocity: Vec<Vector3<f64>>,
    pub acceleration: Vec<Vector3<f64>>,
}

impl KinematicTrack {
    pub fn new(traj: &Trajectory, model: &Model) -> Result<Self, DynamicsError> {
        let results: Vec<Result<TrackSample, _>> = traj
            .u
            .par_iter()
            .map(|u| {
                let snapshot = inverse_kinematics(u, &model.frames, &model.geom, &model.film)?;
                let jacobians =
                    kinematics_jacobians(u, &model.frames, &model.geom, &model.film, &model.settings.jacobian)?;
                Ok(TrackSample { snapshot, jacobians })
            })
            .collect();
        let mut samples = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(s) => samples.push(s),
                Err(source) => {
                    return Err(DynamicsError::Kinematics { source, sample: Some(i), time: Some(traj.t[i]) })
                }
            }
        }
        Ok(Self { t: traj.t.clone(), samples, velocity: traj.velocity(), acceleration: traj.acceleration() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() < 2 {
            0.0
        } else {
            (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64
        }
    }
}

/// Film states of the three actuators at every sample. Starts fully relaxed.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmHistory {
    pub chains: [Vec<FilmState>; 3],
}

impl FilmHistory {
    pub fn integrate(
        track: &KinematicTrack,
        film: &FilmParams,
        settings: &SimulationSettings,
    ) -> Result<Self, DynamicsError> {
        let t0 = track.t.first().copied().unwrap_or(0.0);
        let dt = track.dt();
        let run = |k: usize| -> Result<Vec<FilmState>, DynamicsError> {
            let path: Vec<_> = track.samples.iter().map(|s| s.snapshot.chains[k].lambda).collect();
            let Some(&first) = path.first() else { return Ok(vec![]) };
            let start = FilmState::relaxed(first);
            if path.len() == 1 {
                return Ok(vec![start]);
            }
            advance_state(&start, &path, dt, settings.substeps, film).map_err(|e| DynamicsError::Material {
                source: shift_time(e, t0),
                chain: Some(k + 1),
            })
        };
        let mut out = (0..3).into_par_iter().map(run).collect::<Vec<_>>().into_iter();
        let c0 = out.next().unwrap()?;
        let c1 = out.next().unwrap()?;
        let c2 = out.next().unwrap()?;
        Ok(Self { chains: [c0, c1, c2] })
    }
}

fn shift_time(e: MaterialError, t0: f64) -> MaterialError {
    match e {
        MaterialError::GentLimit { branch, ratio, time } => {
            MaterialError::GentLimit { branch, ratio, time: time.map(|t| t + t0) }
        }
        MaterialError::StepUnstable { time, delta } => MaterialError::StepUnstable { time: time + t0, delta },
        other => other,
    }
}
