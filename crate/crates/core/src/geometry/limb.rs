//! Single-limb closed forms: bicep angle, bicep tip, forearm angle and the
//! projection direction built from the other two forearms.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Unit, Vector3};

use super::linkage::sam_inverse;
use super::{KinematicsError, RobotGeometry};
use crate::numeric::wrap_angle;

/// Bicep angle for joint N given in the chain's local frame.
pub fn bicep_angle(joint: &Vector3<f64>, geom: &RobotGeometry) -> Result<f64, KinematicsError> {
    let l = joint.x.hypot(joint.y);
    if !(l > 0.0) {
        return Err(KinematicsError::OutOfWorkspace {
            chain: None,
            reason: "joint projects onto the bicep pivot".into(),
        });
    }
    let np2 = geom.n0 * geom.n0 - joint.z * joint.z;
    if !(np2 >= 0.0) {
        return Err(KinematicsError::OutOfWorkspace {
            chain: None,
            reason: format!("|N_z| = {:.6e} m exceeds the forearm length", joint.z.abs()),
        });
    }
    let q = geom.q;
    let arg = (q * q + l * l - np2) / (2.0 * q * l);
    // tolerate rounding at the fully stretched / folded limb
    if !(arg.abs() <= 1.0 + 1e-12) {
        return Err(KinematicsError::OutOfWorkspace {
            chain: None,
            reason: format!("limb triangle cannot close (cos = {arg:.6})"),
        });
    }
    Ok(wrap_angle(PI - joint.y.atan2(-joint.x) + arg.clamp(-1.0, 1.0).acos() - geom.omega))
}

/// Bicep tip Q in the local frame.
pub fn bicep_tip(theta_k1: f64, geom: &RobotGeometry) -> Vector3<f64> {
    let (s, c) = (theta_k1 + geom.omega).sin_cos();
    Vector3::new(geom.q * c, geom.q * s, 0.0)
}

/// Forearm rotation angle from the forearm vector `n = Q - N` (local frame).
pub fn forearm_angle(forearm: &Vector3<f64>, geom: &RobotGeometry) -> f64 {
    (forearm.z / geom.n0).clamp(-1.0, 1.0).acos() - FRAC_PI_2
}

/// Unit normal of the plane spanned by the forearms of the two other chains,
/// both expressed in the frame of the chain being solved.
pub fn chain_projection(
    n_next: &Vector3<f64>,
    n_next2: &Vector3<f64>,
) -> Result<Unit<Vector3<f64>>, KinematicsError> {
    let c = n_next2.cross(n_next);
    let norm = c.norm();
    let scale = n_next.norm() * n_next2.norm();
    if !(norm >= 1e-12 * scale) || norm == 0.0 {
        return Err(KinematicsError::DegenerateProjection { chain: None });
    }
    Ok(Unit::new_unchecked(c / norm))
}

/// Everything one chain needs that depends on its own joint only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimbState {
    pub joint: Vector3<f64>,
    pub theta_k1: f64,
    pub bicep_tip: Vector3<f64>,
    pub forearm: Vector3<f64>,
    pub theta_fa: f64,
    pub theta_sam: f64,
    pub theta_dea: f64,
}

impl LimbState {
    pub fn from_joint(joint: Vector3<f64>, geom: &RobotGeometry) -> Result<Self, KinematicsError> {
        let theta_k1 = bicep_angle(&joint, geom)?;
        let theta_sam = sam_inverse(theta_k1, geom)?;
        let theta_dea = theta_sam + geom.sam_dea_offset();
        if !(theta_dea > 0.0 && theta_dea < PI) {
            return Err(KinematicsError::OutOfWorkspace {
                chain: None,
                reason: format!("lozenge angle {:.4} deg outside (0, 180)", theta_dea.to_degrees()),
            });
        }
        let q = bicep_tip(theta_k1, geom);
        let forearm = q - joint;
        Ok(Self {
            joint,
            theta_k1,
            bicep_tip: q,
            forearm,
            theta_fa: forearm_angle(&forearm, geom),
            theta_sam,
            theta_dea,
        })
    }
}
