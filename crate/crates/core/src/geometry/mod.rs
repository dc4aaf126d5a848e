//! Closed-form kinematics of the Delta frame, the four-bar stroke amplifier
//! (SAM) and the lozenge strain map, plus finite-difference Jacobians.
//!
//! Frame conventions: the world origin sits at the neutral end-effector
//! position with world `z` pointing up. Each chain `k` has a local frame at
//! its bicep pivot whose `x` axis points along gravity, `y` points radially
//! inward and `z` is tangential. The bicep swings in the local `xy` plane.

mod frames;
mod jacobian;
mod limb;
mod linkage;
mod snapshot;

pub use frames::{build_chain_frames, ChainFrame};
pub use jacobian::{kinematics_jacobian, kinematics_jacobians, step_halving_error, ChainJacobian, JacobianStep};
pub use limb::{bicep_angle, bicep_tip, chain_projection, forearm_angle, LimbState};
pub use linkage::{dea_strain_slopes, dea_strains, sam_discriminant, sam_forward, sam_inverse, sam_operating_range};
pub use snapshot::{inverse_kinematics, ChainSnapshot, KinematicSnapshot};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the kinematic model. `chain` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("pose outside workspace{}: {reason}", chain_suffix(*.chain))]
    OutOfWorkspace { chain: Option<usize>, reason: String },
    #[error("four-bar linkage locked{} (discriminant {discriminant:.3e})", chain_suffix(*.chain))]
    LinkageLocked { chain: Option<usize>, discriminant: f64 },
    #[error("singular four-bar linkage{} (H = 0 on the selected branch)", chain_suffix(*.chain))]
    SingularLinkage { chain: Option<usize> },
    #[error("no bicep angle reproduces SAM angle {theta_sam:.6} rad")]
    NoSolution { theta_sam: f64 },
    #[error("degenerate projection{}: forearms of the other chains are parallel", chain_suffix(*.chain))]
    DegenerateProjection { chain: Option<usize> },
    #[error("finite-difference stencil left the workspace{}", chain_suffix(*.chain))]
    NearSingular { chain: Option<usize> },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

fn chain_suffix(chain: Option<usize>) -> String {
    match chain {
        Some(k) => format!(" in chain {k}"),
        None => String::new(),
    }
}

impl KinematicsError {
    /// Attaches a 1-based chain index when the error does not carry one yet.
    pub fn in_chain(self, k: usize) -> Self {
        use KinematicsError::*;
        match self {
            OutOfWorkspace { chain: None, reason } => OutOfWorkspace { chain: Some(k), reason },
            LinkageLocked { chain: None, discriminant } => LinkageLocked { chain: Some(k), discriminant },
            SingularLinkage { chain: None } => SingularLinkage { chain: Some(k) },
            DegenerateProjection { chain: None } => DegenerateProjection { chain: Some(k) },
            NearSingular { chain: None } => NearSingular { chain: Some(k) },
            other => other,
        }
    }

    pub fn chain(&self) -> Option<usize> {
        use KinematicsError::*;
        match self {
            OutOfWorkspace { chain, .. }
            | LinkageLocked { chain, .. }
            | SingularLinkage { chain }
            | DegenerateProjection { chain }
            | NearSingular { chain } => *chain,
            NoSolution { .. } | InvalidGeometry(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        use KinematicsError::*;
        match self {
            OutOfWorkspace { .. } => "OutOfWorkspace",
            LinkageLocked { .. } => "LinkageLocked",
            SingularLinkage { .. } => "SingularLinkage",
            NoSolution { .. } => "NoSolution",
            DegenerateProjection { .. } => "DegenerateProjection",
            NearSingular { .. } => "NearSingular",
            InvalidGeometry(_) => "InvalidGeometry",
        }
    }
}

/// Lengths, angles and masses of the Delta frame (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// Four-bar ground link.
    pub a: f64,
    /// Four-bar crank (bicep side).
    pub b: f64,
    /// Four-bar coupler.
    pub c: f64,
    /// Four-bar output link (DEA side).
    pub d: f64,
    /// Bicep length.
    pub q: f64,
    /// Forearm length.
    pub n0: f64,
    /// Lozenge link length.
    pub l_dea: f64,
    /// Radial offset of the bicep pivots from the central axis.
    pub l_ch: f64,
    /// Height of the neutral end effector above the pivot plane.
    pub l_cv: f64,
    /// Radius of the end-effector joints.
    pub l_end: f64,
    /// Fixed offset subtracted in the bicep-angle closed form.
    pub omega: f64,
    /// SAM mounting offset.
    pub alpha: f64,
    /// Preset lozenge angle used for film design.
    pub theta_pre: f64,
    /// Assembled neutral DEA angle.
    pub theta_dea_neutral: f64,
    /// End effector + mount mass.
    pub m_ee: f64,
    /// Bicep mass, lumped at the bicep tip.
    pub m_bc: f64,
    /// Gravity magnitude.
    pub g: f64,
}

impl RobotGeometry {
    /// The prototype geometry (millimetres, degrees and grams converted to SI).
    pub fn prototype() -> Self {
        let mm = 1e-3;
        Self {
            a: 55.0 * mm,
            b: 10.0 * mm,
            c: 11.5 * mm,
            d: 62.0 * mm,
            q: 50.0 * mm,
            n0: 50.0 * mm,
            l_dea: 50.0 * mm,
            l_ch: 30.0 * mm,
            l_cv: 82.39 * mm,
            l_end: 25.0 * mm,
            omega: 90f64.to_radians(),
            alpha: 3f64.to_radians(),
            theta_pre: 141.23f64.to_radians(),
            theta_dea_neutral: 111.8f64.to_radians(),
            m_ee: 6.0e-3,
            m_bc: 0.96e-3,
            g: crate::STANDARD_GRAVITY,
        }
    }

    /// Constant offset between the SAM output angle and the lozenge angle.
    pub fn sam_dea_offset(&self) -> f64 {
        self.omega + self.alpha
    }

    /// Checks positivity, angle ranges and that the linkage closes at the
    /// neutral pose.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let lengths = [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("q", self.q),
            ("n0", self.n0),
            ("l_dea", self.l_dea),
            ("l_ch", self.l_ch),
            ("l_cv", self.l_cv),
            ("l_end", self.l_end),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(KinematicsError::InvalidGeometry(format!("{name} must be > 0, got {v}")));
            }
        }
        use std::f64::consts::PI;
        for (name, v) in [("theta_pre", self.theta_pre), ("theta_dea_neutral", self.theta_dea_neutral)] {
            if !(v > 0.0 && v < PI) {
                return Err(KinematicsError::InvalidGeometry(format!("{name} must lie in (0, pi), got {v}")));
            }
        }
        for (name, v) in [("omega", self.omega), ("alpha", self.alpha)] {
            if !v.is_finite() {
                return Err(KinematicsError::InvalidGeometry(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("m_ee", self.m_ee), ("m_bc", self.m_bc), ("g", self.g)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(KinematicsError::InvalidGeometry(format!("{name} must be >= 0, got {v}")));
            }
        }
        let frames = build_chain_frames(self);
        let n = frames[0].joint_position(&nalgebra::Vector3::zeros());
        let theta_k1 = bicep_angle(&n, self)?;
        if sam_discriminant(theta_k1, self) < 0.0 {
            return Err(KinematicsError::InvalidGeometry(
                "four-bar linkage cannot close at the neutral pose".into(),
            ));
        }
        Ok(())
    }
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self::prototype()
    }
}
