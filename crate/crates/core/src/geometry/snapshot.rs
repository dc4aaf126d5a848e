use nalgebra::{Unit, Vector3};

use super::limb::{chain_projection, LimbState};
use super::linkage::dea_strains;
use super::{ChainFrame, KinematicsError, RobotGeometry};
use crate::material::{FilmParams, StretchPair};

/// Inverse-kinematic state of one chain, all vectors in the chain's local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSnapshot {
    pub joint: Vector3<f64>,
    pub theta_k1: f64,
    pub theta_sam: f64,
    pub theta_dea: f64,
    pub theta_fa: f64,
    pub lambda: StretchPair,
    pub projection: Unit<Vector3<f64>>,
    pub bicep_tip: Vector3<f64>,
    pub forearm: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSnapshot {
    pub chains: [ChainSnapshot; 3],
}

/// Solves the three limbs for end-effector position `u0` (world).
pub fn inverse_kinematics(
    u0: &Vector3<f64>,
    frames: &[ChainFrame; 3],
    geom: &RobotGeometry,
    film: &FilmParams,
) -> Result<KinematicSnapshot, KinematicsError> {
    let mut limbs = [None; 3];
    for (i, f) in frames.iter().enumerate() {
        limbs[i] = Some(LimbState::from_joint(f.joint_position(u0), geom).map_err(|e| e.in_chain(f.k))?);
    }
    let limbs = limbs.map(|l| l.unwrap());
    let forearms_world: [Vector3<f64>; 3] = std::array::from_fn(|i| frames[i].to_world_vector(&limbs[i].forearm));
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let f = &frames[i];
        let n1 = f.to_local_vector(&forearms_world[(i + 1) % 3]);
        let n2 = f.to_local_vector(&forearms_world[(i + 2) % 3]);
        let projection = chain_projection(&n1, &n2).map_err(|e| e.in_chain(f.k))?;
        let l = &limbs[i];
        out.push(ChainSnapshot {
            joint: l.joint,
            theta_k1: l.theta_k1,
            theta_sam: l.theta_sam,
            theta_dea: l.theta_dea,
            theta_fa: l.theta_fa,
            lambda: dea_strains(l.theta_dea, geom, film),
            projection,
            bicep_tip: l.bicep_tip,
            forearm: l.forearm,
        });
    }
    Ok(KinematicSnapshot { chains: [out[0], out[1], out[2]] })
}
