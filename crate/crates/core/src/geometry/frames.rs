use nalgebra::{Isometry3, Rotation3, Translation3, Unit, Vector3};

use super::RobotGeometry;

/// Rigid frame of one kinematic chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainFrame {
    /// Chain index, 1..=3.
    pub k: usize,
    /// World-to-local rotation.
    pub rotation: Rotation3<f64>,
    /// Bicep pivot in world coordinates.
    pub origin: Vector3<f64>,
    /// Offset from the end-effector centre to joint N of this chain (world).
    pub ee_offset: Vector3<f64>,
    /// Joint N of the neutral pose in the local frame.
    pub joint_offset: Vector3<f64>,
    /// Gravity direction expressed in the local frame.
    pub gravity_local: Unit<Vector3<f64>>,
}

impl ChainFrame {
    /// World-to-local rigid transform.
    pub fn world_to_local(&self) -> Isometry3<f64> {
        let t = -(self.rotation * self.origin);
        Isometry3::from_parts(Translation3::from(t), self.rotation.into())
    }

    /// Yaw of the chain about the world vertical axis.
    pub fn yaw(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.k as f64 - 1.0) / 3.0
    }

    pub fn to_local_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.origin)
    }

    pub fn to_local_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn to_world_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * v
    }

    pub fn to_world_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * p + self.origin
    }

    /// Joint N of this chain in the local frame for end-effector position `u0`.
    pub fn joint_position(&self, u0: &Vector3<f64>) -> Vector3<f64> {
        // offset kept in local coordinates so that poses on the central axis
        // give bit-identical joints in all three chains
        self.rotation * u0 + self.joint_offset
    }

    /// World direction of local axis `i` (0 = x, 1 = y, 2 = z).
    pub fn local_axis_in_world(&self, i: usize) -> Vector3<f64> {
        self.rotation.matrix().row(i).transpose()
    }
}

/// Builds the three chain frames: 120° apart about the world vertical, pivots
/// at radius `l_ch` and depth `l_cv` below the neutral end effector, joints N
/// at radius `l_end` on the platform.
pub fn build_chain_frames(geom: &RobotGeometry) -> [ChainFrame; 3] {
    std::array::from_fn(|i| {
        let k = i + 1;
        let yaw = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
        let (s, c) = yaw.sin_cos();
        let radial = Vector3::new(c, s, 0.0);
        let tangential = Vector3::new(-s, c, 0.0);
        let x = -Vector3::z();
        let y = -radial;
        let z = tangential;
        let rotation = Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_rows(&[
            x.transpose(),
            y.transpose(),
            z.transpose(),
        ]));
        let origin = geom.l_ch * radial - geom.l_cv * Vector3::z();
        ChainFrame {
            k,
            rotation,
            origin,
            ee_offset: geom.l_end * radial,
            joint_offset: Vector3::new(-geom.l_cv, geom.l_ch - geom.l_end, 0.0),
            gravity_local: Unit::new_normalize(rotation * -Vector3::z()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rotations_are_proper_and_gravity_is_local_x() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        for f in &frames {
            let m = f.rotation.matrix();
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(m * m.transpose(), nalgebra::Matrix3::identity(), epsilon = 1e-14);
            assert_relative_eq!(f.gravity_local.into_inner(), Vector3::x(), epsilon = 1e-15);
        }
    }

    #[test]
    fn chain_yaws_are_0_120_240() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let base = frames[0].rotation;
        for (i, f) in frames.iter().enumerate() {
            let rel = f.rotation.inverse() * base;
            // rel maps chain-1 world directions to chain-k world directions
            let expected = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI * i as f64 / 3.0);
            assert_relative_eq!(rel.matrix(), expected.matrix(), epsilon = 1e-14);
            assert_relative_eq!(f.yaw(), 2.0 * PI * i as f64 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn composition_of_chain_two_and_one_is_vertical_rotation() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let rel = frames[1].world_to_local() * frames[0].world_to_local().inverse();
        let vertical_local = Vector3::x();
        let axis_angle = rel.rotation.scaled_axis();
        assert_relative_eq!(axis_angle.norm(), 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(axis_angle.normalize().dot(&vertical_local).abs(), 1.0, epsilon = 1e-12);
        // no net translation along the shared vertical
        assert!(rel.translation.vector.dot(&vertical_local).abs() < 1e-15);
    }

    #[test]
    fn joint_position_matches_composed_transforms() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let u = Vector3::new(0.004, -0.003, -0.012);
        for f in &frames {
            let direct = f.world_to_local().transform_point(&(u + f.ee_offset).into()).coords;
            assert!((f.joint_position(&u) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn vertical_shift_moves_joint_along_local_vertical() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let u = Vector3::new(0.002, 0.001, -0.01);
        let d = 1e-3;
        for f in &frames {
            let delta = f.joint_position(&(u + Vector3::z() * d)) - f.joint_position(&u);
            // local x points down
            assert!((delta - Vector3::new(-d, 0.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn central_axis_joints_are_identical() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let u = Vector3::new(0.0, 0.0, -0.0137);
        let n1 = frames[0].joint_position(&u);
        for f in &frames[1..] {
            assert_eq!(f.joint_position(&u), n1);
        }
    }

    #[test]
    fn transform_round_trip() {
        let frames = build_chain_frames(&RobotGeometry::prototype());
        let p = Vector3::new(0.013, -0.021, 0.0047);
        let iso = frames[0].world_to_local();
        let back = iso.inverse_transform_point(&iso.transform_point(&p.into()));
        assert!((back.coords - p).norm() < 1e-12);
        assert!((frames[0].to_world_point(&frames[0].to_local_point(&p)) - p).norm() < 1e-12);
    }
}
