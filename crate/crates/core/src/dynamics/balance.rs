//! Per-chain virtual-work balance along the projection direction.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::series::same_grid;
use super::track::{FilmHistory, KinematicTrack, TrackSample};
use super::{DynamicsError, ElasticWork, ForceSeries, ForearmTorqueCurve, Model, Trajectory, VoltageSignal};
use crate::geometry::RobotGeometry;
use crate::material::{stress, FilmParams, FilmState, StretchPair};

/// Electric displacement, deformed electrode area and charge of one film.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrostaticIntermediates {
    pub d: f64,
    pub s: f64,
    pub q: f64,
}

pub fn electrostatics(phi: f64, lambda: StretchPair, film: &FilmParams) -> ElectrostaticIntermediates {
    let d = film.eps * phi * lambda.lambda1 * lambda.lambda2 / film.l3;
    let s = lambda.lambda1 * film.l1 * lambda.lambda2 * film.l2;
    ElectrostaticIntermediates { d, s, q: d * s }
}

/// Spring-back force of a forearm in its chain frame: `T/n0` along
/// `n × x / |n × x|`. Returns the force and whether the torque curve clamped.
pub fn forearm_springback(
    forearm: &Vector3<f64>,
    theta_fa: f64,
    curve: &ForearmTorqueCurve,
    geom: &RobotGeometry,
) -> Result<(Vector3<f64>, bool), ()> {
    let sample = curve.eval(theta_fa);
    if sample.torque == 0.0 {
        return Ok((Vector3::zeros(), sample.clamped));
    }
    let c = forearm.cross(&Vector3::x());
    let norm = c.norm();
    if !(norm > 1e-12 * forearm.norm()) {
        return Err(());
    }
    Ok((c * (sample.torque / geom.n0 / norm), sample.clamped))
}

/// Terms of one chain's balance, scaled by the virtual displacement along
/// `P_k`. `φ² = (G + H + R)/V` for the voltage; `G` splits into its parts so
/// that the tip force can be rebuilt without the payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceTerms {
    /// Payload work, `-F·P`.
    pub g_payload: f64,
    /// End-effector and bicep gravity, `-m g·P - m_bc g·(J_Q P)`.
    pub g_gravity: f64,
    /// Spring-back of all three forearms, `-Σo·P`.
    pub g_springback: f64,
    /// Inertia, `m ü·P + m_bc Q̈·(J_Q P)`.
    pub h: f64,
    /// Elastic work of the film.
    pub r: f64,
    /// Electrical coefficient of `φ²`.
    pub v: f64,
    /// `n_k·P_k`.
    pub n_dot_p: f64,
}

impl BalanceTerms {
    pub fn g(&self) -> f64 {
        self.g_payload + self.g_gravity + self.g_springback
    }

    pub fn radicand(&self) -> f64 {
        (self.g() + self.h + self.r) / self.v
    }
}

/// Balance terms for chain `k` (0-based) at one sample. Vectors in world.
#[allow(clippy::too_many_arguments)]
pub fn balance_terms(
    sample: &TrackSample,
    k: usize,
    state: &FilmState,
    payload: &Vector3<f64>,
    velocity: &Vector3<f64>,
    acceleration: &Vector3<f64>,
    springback_world: &Vector3<f64>,
    model: &Model,
) -> Result<BalanceTerms, DynamicsError> {
    let frame = &model.frames[k];
    let geom = &model.geom;
    let film = &model.film;
    let chain = &sample.snapshot.chains[k];
    let jac = &sample.jacobians[k];
    let p = chain.projection.into_inner();

    let g_vec = frame.gravity_local.into_inner() * geom.g;
    let f = frame.to_local_vector(payload);
    let v = frame.to_local_vector(velocity);
    let a = frame.to_local_vector(acceleration);
    let o = frame.to_local_vector(springback_world);

    let jp = jac.jac_q * p;
    let q_acc = jac.jac_q * a + jac.q_centripetal(&v);
    let gp = jac.grad_theta_dea.dot(&p);
    let slopes = jac.strain_slopes;
    let lam = chain.lambda;

    let sigma = stress(state, film).map_err(|e| DynamicsError::Material { source: e, chain: Some(k + 1) })?;
    let (w1, w2) = match model.settings.elastic_work {
        ElasticWork::Nominal => (sigma.lambda1 / lam.lambda1, sigma.lambda2 / lam.lambda2),
        ElasticWork::AsPrinted => (sigma.lambda1, sigma.lambda2),
    };
    let r = film.volume() * (w1 * slopes.lambda1 + w2 * slopes.lambda2) * gp;
    let v_el = film.eps * lam.lambda1 * lam.lambda2 * film.l1 * film.l2 / film.l3
        * (lam.lambda2 * slopes.lambda1 + lam.lambda1 * slopes.lambda2)
        * gp;

    Ok(BalanceTerms {
        g_payload: -f.dot(&p),
        g_gravity: -geom.m_ee * g_vec.dot(&p) - geom.m_bc * g_vec.dot(&jp),
        g_springback: -o.dot(&p),
        h: geom.m_ee * a.dot(&p) + geom.m_bc * q_acc.dot(&jp),
        r,
        v: v_el,
        n_dot_p: chain.forearm.dot(&p),
    })
}

/// Sum of the three forearm spring-back forces in world coordinates.
fn total_springback(sample: &TrackSample, model: &Model, index: usize, time: f64) -> Result<(Vector3<f64>, [Vector3<f64>; 3], bool), DynamicsError> {
    let mut sum = Vector3::zeros();
    let mut each = [Vector3::zeros(); 3];
    let mut clamped = false;
    for k in 0..3 {
        let c = &sample.snapshot.chains[k];
        let (o, cl) = forearm_springback(&c.forearm, c.theta_fa, &model.torque, &model.geom)
            .map_err(|_| DynamicsError::DegenerateDirection { chain: k + 1, sample: index, time })?;
        each[k] = model.frames[k].to_world_vector(&o);
        sum += each[k];
        clamped |= cl;
    }
    Ok((sum, each, clamped))
}

fn first_error<T>(results: Vec<Result<T, DynamicsError>>) -> Result<Vec<T>, DynamicsError> {
    results.into_iter().collect()
}

fn warn_clamped(n: usize) {
    if n > 0 {
        log::warn!("forearm angle outside the torque anchors at {n} samples; end values used");
    }
}

/// Drive voltages that make the robot follow `traj` under its payload.
pub fn inverse_dynamics(traj: &Trajectory, model: &Model) -> Result<VoltageSignal, DynamicsError> {
    let track = KinematicTrack::new(traj, model)?;
    let history = FilmHistory::integrate(&track, &model.film, &model.settings)?;
    inverse_dynamics_on(&track, &history, &traj.payload, model)
}

/// [`inverse_dynamics`] on precomputed kinematics and film histories.
pub fn inverse_dynamics_on(
    track: &KinematicTrack,
    history: &FilmHistory,
    payload: &[Vector3<f64>],
    model: &Model,
) -> Result<VoltageSignal, DynamicsError> {
    if payload.len() != track.len() {
        return Err(DynamicsError::MismatchedGrids("payload length differs from the track".into()));
    }
    let results: Vec<Result<([f64; 3], bool), DynamicsError>> = (0..track.len())
        .into_par_iter()
        .map(|i| {
            let s = &track.samples[i];
            let t = track.t[i];
            let (o, _, clamped) = total_springback(s, model, i, t)?;
            let mut phi = [0.0; 3];
            for k in 0..3 {
                let terms = balance_terms(
                    s,
                    k,
                    &history.chains[k][i],
                    &payload[i],
                    &track.velocity[i],
                    &track.acceleration[i],
                    &o,
                    model,
                )?;
                let rad = terms.radicand();
                if !(rad >= 0.0 && rad.is_finite()) {
                    return Err(DynamicsError::InfeasibleActuation { chain: k + 1, sample: i, time: t, radicand: rad });
                }
                phi[k] = rad.sqrt();
            }
            Ok((phi, clamped))
        })
        .collect();
    let out = first_error(results)?;
    warn_clamped(out.iter().filter(|(_, c)| *c).count());
    VoltageSignal::new(track.t.clone(), out.into_iter().map(|(p, _)| p).collect())
}

/// Tip forces and their resultant produced by `voltage` along `traj`. The
/// trajectory's payload column is not used.
pub fn predict_force(traj: &Trajectory, voltage: &VoltageSignal, model: &Model) -> Result<ForceSeries, DynamicsError> {
    same_grid(&traj.t, &voltage.t)?;
    let track = KinematicTrack::new(traj, model)?;
    let history = FilmHistory::integrate(&track, &model.film, &model.settings)?;
    predict_force_on(&track, &history, voltage, model)
}

/// [`predict_force`] on precomputed kinematics and film histories.
pub fn predict_force_on(
    track: &KinematicTrack,
    history: &FilmHistory,
    voltage: &VoltageSignal,
    model: &Model,
) -> Result<ForceSeries, DynamicsError> {
    same_grid(&track.t, &voltage.t)?;
    let zero = Vector3::zeros();
    let results: Vec<Result<(Vector3<f64>, [Vector3<f64>; 3], bool), DynamicsError>> = (0..track.len())
        .into_par_iter()
        .map(|i| {
            let s = &track.samples[i];
            let t = track.t[i];
            let (o_sum, o_each, clamped) = total_springback(s, model, i, t)?;
            let mut tips = [Vector3::zeros(); 3];
            for k in 0..3 {
                let terms = balance_terms(
                    s,
                    k,
                    &history.chains[k][i],
                    &zero,
                    &track.velocity[i],
                    &track.acceleration[i],
                    &o_sum,
                    model,
                )?;
                let phi = voltage.phi[i][k];
                let scale =
                    (terms.g_gravity + terms.h + terms.r - phi * phi * terms.v) / terms.n_dot_p;
                let para = model.frames[k].to_world_vector(&(s.snapshot.chains[k].forearm * scale));
                tips[k] = para - o_each[k];
            }
            Ok((tips[0] + tips[1] + tips[2], tips, clamped))
        })
        .collect();
    let out = first_error(results)?;
    warn_clamped(out.iter().filter(|(_, _, c)| *c).count());
    Ok(ForceSeries {
        t: track.t.clone(),
        total: out.iter().map(|(f, _, _)| *f).collect(),
        chains: out.iter().map(|(_, c, _)| *c).collect(),
    })
}
