//! Central-difference gradients of the per-chain inverse kinematics.
//!
//! Stencils run along the chain's local axes, so all gradients are expressed
//! in local coordinates of that chain.

use nalgebra::{Matrix3, Vector3};

use super::limb::LimbState;
use super::linkage::dea_strain_slopes;
use super::{ChainFrame, KinematicsError, RobotGeometry};
use crate::material::{FilmParams, StretchPair};

/// Finite-difference step control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianStep {
    /// Smallest gradient step, m.
    pub min_step: f64,
    /// Gradient step relative to `|u0|`.
    pub rel_step: f64,
    /// Step for the second derivatives of the bicep tip, m.
    pub hessian_step: f64,
}

impl Default for JacobianStep {
    fn default() -> Self {
        Self { min_step: 1e-6, rel_step: 1e-6, hessian_step: 1e-4 }
    }
}

impl JacobianStep {
    pub fn gradient_step(&self, u0: &Vector3<f64>) -> f64 {
        self.min_step.max(self.rel_step * u0.norm())
    }

    pub fn halved(&self) -> Self {
        Self {
            min_step: 0.5 * self.min_step,
            rel_step: 0.5 * self.rel_step,
            hessian_step: 0.5 * self.hessian_step,
        }
    }
}

/// Local-frame derivatives of one chain with respect to the end-effector
/// position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainJacobian {
    pub grad_theta_dea: Vector3<f64>,
    pub grad_lambda1: Vector3<f64>,
    pub grad_lambda2: Vector3<f64>,
    pub grad_theta_k1: Vector3<f64>,
    pub grad_theta_fa: Vector3<f64>,
    /// dλ/dθ_DEA at the pose.
    pub strain_slopes: StretchPair,
    /// Column `i` is ∂Q/∂u_i.
    pub jac_q: Matrix3<f64>,
    /// `hess_q[m][(i, j)]` is ∂²Q_m/∂u_i∂u_j.
    pub hess_q: [Matrix3<f64>; 3],
}

impl ChainJacobian {
    /// Second-order part of the bicep-tip acceleration, `Σ_m e_m (v' H_m v)`.
    pub fn q_centripetal(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|m, _| v.dot(&(self.hess_q[m] * v)))
    }
}

/// Jacobian of chain `k` (1-based) at end-effector position `u0` (world).
pub fn kinematics_jacobian(
    u0: &Vector3<f64>,
    k: usize,
    frames: &[ChainFrame; 3],
    geom: &RobotGeometry,
    film: &FilmParams,
    step: &JacobianStep,
) -> Result<ChainJacobian, KinematicsError> {
    let frame = &frames[k - 1];
    let joint = frame.joint_position(u0);
    let centre = LimbState::from_joint(joint, geom).map_err(|e| e.in_chain(k))?;
    let eval = |d: Vector3<f64>| {
        LimbState::from_joint(joint + d, geom).map_err(|_| KinematicsError::NearSingular { chain: Some(k) })
    };

    let h = step.gradient_step(u0);
    let mut grad_dea = Vector3::zeros();
    let mut grad_k1 = Vector3::zeros();
    let mut grad_fa = Vector3::zeros();
    for i in 0..3 {
        let e = Vector3::ith(i, h);
        let p = eval(e)?;
        let m = eval(-e)?;
        grad_dea[i] = (p.theta_dea - m.theta_dea) / (2.0 * h);
        grad_k1[i] = (p.theta_k1 - m.theta_k1) / (2.0 * h);
        grad_fa[i] = (p.theta_fa - m.theta_fa) / (2.0 * h);
    }

    let hh = step.hessian_step;
    let q0 = centre.bicep_tip;
    let mut q_plus = [Vector3::zeros(); 3];
    let mut q_minus = [Vector3::zeros(); 3];
    let mut jac_q = Matrix3::zeros();
    for i in 0..3 {
        let e = Vector3::ith(i, hh);
        q_plus[i] = eval(e)?.bicep_tip;
        q_minus[i] = eval(-e)?.bicep_tip;
    }
    // Q depends on u through θ_k1 only
    let dq_dtheta = Vector3::new(-q0.y, q0.x, 0.0);
    for i in 0..3 {
        jac_q.set_column(i, &(dq_dtheta * grad_k1[i]));
    }
    let mut hess_q = [Matrix3::zeros(); 3];
    for i in 0..3 {
        let d2 = (q_plus[i] - 2.0 * q0 + q_minus[i]) / (hh * hh);
        for m in 0..3 {
            hess_q[m][(i, i)] = d2[m];
        }
        for j in (i + 1)..3 {
            let ei = Vector3::ith(i, hh);
            let ej = Vector3::ith(j, hh);
            let pp = eval(ei + ej)?.bicep_tip;
            let pm = eval(ei - ej)?.bicep_tip;
            let mp = eval(-ei + ej)?.bicep_tip;
            let mm = eval(-ei - ej)?.bicep_tip;
            let d2 = (pp - pm - mp + mm) / (4.0 * hh * hh);
            for m in 0..3 {
                hess_q[m][(i, j)] = d2[m];
                hess_q[m][(j, i)] = d2[m];
            }
        }
    }

    let slopes = dea_strain_slopes(centre.theta_dea, geom, film);
    Ok(ChainJacobian {
        grad_theta_dea: grad_dea,
        grad_lambda1: grad_dea * slopes.lambda1,
        grad_lambda2: grad_dea * slopes.lambda2,
        grad_theta_k1: grad_k1,
        grad_theta_fa: grad_fa,
        strain_slopes: slopes,
        jac_q,
        hess_q,
    })
}

pub fn kinematics_jacobians(
    u0: &Vector3<f64>,
    frames: &[ChainFrame; 3],
    geom: &RobotGeometry,
    film: &FilmParams,
    step: &JacobianStep,
) -> Result<[ChainJacobian; 3], KinematicsError> {
    Ok([
        kinematics_jacobian(u0, 1, frames, geom, film, step)?,
        kinematics_jacobian(u0, 2, frames, geom, film, step)?,
        kinematics_jacobian(u0, 3, frames, geom, film, step)?,
    ])
}

/// Largest relative change of the first-order gradients when every step is
/// halved.
pub fn step_halving_error(
    u0: &Vector3<f64>,
    k: usize,
    frames: &[ChainFrame; 3],
    geom: &RobotGeometry,
    film: &FilmParams,
    step: &JacobianStep,
) -> Result<f64, KinematicsError> {
    let a = kinematics_jacobian(u0, k, frames, geom, film, step)?;
    let b = kinematics_jacobian(u0, k, frames, geom, film, &step.halved())?;
    let rel = |x: &Vector3<f64>, y: &Vector3<f64>| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    Ok([
        rel(&a.grad_theta_dea, &b.grad_theta_dea),
        rel(&a.grad_theta_k1, &b.grad_theta_k1),
        rel(&a.grad_theta_fa, &b.grad_theta_fa),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_chain_frames;

    fn setup() -> (RobotGeometry, [ChainFrame; 3], FilmParams) {
        let geom = RobotGeometry::prototype();
        (geom, build_chain_frames(&geom), FilmParams::synthetic_default())
    }

    #[test]
    fn orthogonal_translation_leaves_dea_angle_unchanged() {
        let (geom, frames, film) = setup();
        let u = Vector3::new(0.003, -0.002, -0.01);
        let jac = kinematics_jacobian(&u, 2, &frames, &geom, &film, &JacobianStep::default()).unwrap();
        let g = jac.grad_theta_dea;
        let dir_local = g.cross(&Vector3::new(0.3, -0.5, 0.8)).normalize();
        let dir_world = frames[1].to_world_vector(&dir_local);
        let s = 1e-5;
        let th = |v: Vector3<f64>| LimbState::from_joint(frames[1].joint_position(&v), &geom).unwrap().theta_dea;
        let dd = (th(u + dir_world * s) - th(u - dir_world * s)) / (2.0 * s);
        assert!(dd.abs() < 1e-6, "{dd}");
    }

    #[test]
    fn gradients_pass_step_halving() {
        let (geom, frames, film) = setup();
        for u in [Vector3::new(0.0, 0.0, -0.01), Vector3::new(0.005, 0.003, -0.015)] {
            for k in 1..=3 {
                let e = step_halving_error(&u, k, &frames, &geom, &film, &JacobianStep::default()).unwrap();
                assert!(e < 1e-6, "chain {k}: {e}");
            }
        }
    }

    #[test]
    fn jac_q_matches_full_difference_of_tip() {
        let (geom, frames, film) = setup();
        let u = Vector3::new(-0.004, 0.002, -0.008);
        let jac = kinematics_jacobian(&u, 3, &frames, &geom, &film, &JacobianStep::default()).unwrap();
        let f = &frames[2];
        let tip = |d: Vector3<f64>| LimbState::from_joint(f.joint_position(&u) + d, &geom).unwrap().bicep_tip;
        let h = 1e-6;
        for i in 0..3 {
            let col = (tip(Vector3::ith(i, h)) - tip(Vector3::ith(i, -h))) / (2.0 * h);
            assert!((col - jac.jac_q.column(i)).norm() < 1e-7 * col.norm().max(1.0));
        }
        for m in 0..3 {
            assert!((jac.hess_q[m] - jac.hess_q[m].transpose()).norm() == 0.0);
        }
    }

    #[test]
    fn central_axis_gradients_are_identical_in_local_frames() {
        let (geom, frames, film) = setup();
        let u = Vector3::new(0.0, 0.0, -0.012);
        let jacs = kinematics_jacobians(&u, &frames, &geom, &film, &JacobianStep::default()).unwrap();
        for j in &jacs[1..] {
            assert_eq!(j.grad_theta_dea, jacs[0].grad_theta_dea);
            assert_eq!(j.hess_q, jacs[0].hess_q);
        }
        // so the world gradients are 120° images of each other
        let g: Vec<_> = (0..3).map(|i| frames[i].to_world_vector(&jacs[i].grad_theta_dea)).collect();
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * std::f64::consts::PI / 3.0);
        assert!((rot * g[0] - g[1]).norm() < 1e-9 * g[0].norm());
        assert!((rot * g[1] - g[2]).norm() < 1e-9 * g[0].norm());
    }
}
