//! Circular test-path generator.
//!
//! The end effector dwells at the neutral pose, descends to the test depth,
//! moves out to the right-hand start point `(cx + r, cy)`, runs the circle
//! counter-clockwise seen from above, then retraces to the neutral pose and
//! dwells again. Point-to-point moves use a cosine velocity profile.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::dynamics::{DynamicsError, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Dwell,
    Descend,
    ToStart,
    Circle,
    FromStart,
    Ascend,
    FinalDwell,
}

impl PhaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseKind::Dwell => "dwell",
            PhaseKind::Descend => "descend",
            PhaseKind::ToStart => "to_start",
            PhaseKind::Circle => "circle",
            PhaseKind::FromStart => "from_start",
            PhaseKind::Ascend => "ascend",
            PhaseKind::FinalDwell => "final_dwell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub kind: PhaseKind,
    pub start: f64,
    pub end: f64,
    from: Vector3<f64>,
    to: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleProtocol {
    /// m
    pub radius: f64,
    /// Hz
    pub frequency: f64,
    pub cycles: u32,
    /// Circle centre in the horizontal plane, m.
    pub center: [f64; 2],
    /// Descent below the neutral pose, m (positive is down).
    pub depth: f64,
    /// Dwell before and after the motion, s.
    pub dwell: f64,
    /// Duration of each point-to-point move, s.
    pub ramp: f64,
    /// Hz
    pub sample_rate: f64,
    /// Constant external force on the end effector, N.
    pub payload: Vector3<f64>,
}

impl Default for CircleProtocol {
    fn default() -> Self {
        Self {
            radius: 4.8e-3,
            frequency: 1.0 / 3.0,
            cycles: 5,
            center: [0.0, 0.0],
            depth: 0.01,
            dwell: 1.0,
            ramp: 2.0,
            sample_rate: 100.0,
            payload: Vector3::zeros(),
        }
    }
}

/// Generated path with its phase boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPath {
    pub trajectory: Trajectory,
    pub phases: Vec<Phase>,
}

impl ProtocolPath {
    pub fn phase(&self, kind: PhaseKind) -> Option<&Phase> {
        self.phases.iter().find(|p| p.kind == kind)
    }
}

fn smooth(s: f64) -> f64 {
    0.5 * (1.0 - (PI * s).cos())
}

impl CircleProtocol {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidParams(m.into()));
        let finite = [self.radius, self.frequency, self.depth, self.dwell, self.ramp, self.sample_rate]
            .iter()
            .chain(&self.center)
            .chain(self.payload.iter())
            .all(|v| v.is_finite());
        if !finite {
            return bad("protocol values must be finite");
        }
        if !(self.radius > 0.0) {
            return bad("radius must be positive");
        }
        if !(self.frequency > 0.0) {
            return bad("frequency must be positive");
        }
        if self.cycles == 0 {
            return bad("at least one cycle");
        }
        if !(self.sample_rate >= 20.0 * self.frequency) {
            return bad("sample rate must be at least 20 times the circle frequency");
        }
        if !(self.ramp > 0.0 && self.dwell >= 0.0 && self.depth >= 0.0) {
            return bad("ramp must be positive, dwell and depth non-negative");
        }
        Ok(())
    }

    pub fn circle_duration(&self) -> f64 {
        self.cycles as f64 / self.frequency
    }

    pub fn start_point(&self) -> Vector3<f64> {
        Vector3::new(self.center[0] + self.radius, self.center[1], -self.depth)
    }

    pub fn phases(&self) -> Vec<Phase> {
        let bottom = Vector3::new(0.0, 0.0, -self.depth);
        let start = self.start_point();
        let zero = Vector3::zeros();
        let mut t = 0.0;
        let mut out = vec![];
        for (kind, d, from, to) in [
            (PhaseKind::Dwell, self.dwell, zero, zero),
            (PhaseKind::Descend, self.ramp, zero, bottom),
            (PhaseKind::ToStart, self.ramp, bottom, start),
            (PhaseKind::Circle, self.circle_duration(), start, start),
            (PhaseKind::FromStart, self.ramp, start, bottom),
            (PhaseKind::Ascend, self.ramp, bottom, zero),
            (PhaseKind::FinalDwell, self.dwell, zero, zero),
        ] {
            out.push(Phase { kind, start: t, end: t + d, from, to });
            t += d;
        }
        out
    }

    pub fn duration(&self) -> f64 {
        self.phases().last().map_or(0.0, |p| p.end)
    }

    /// Exact position at time `t` (clamped to the protocol span).
    pub fn position(&self, t: f64) -> Vector3<f64> {
        let phases = self.phases();
        let p = phases.iter().find(|p| t < p.end).unwrap_or(phases.last().unwrap());
        let tau = (t - p.start).max(0.0);
        match p.kind {
            PhaseKind::Circle => {
                let a = 2.0 * PI * self.frequency * tau;
                Vector3::new(
                    self.center[0] + self.radius * a.cos(),
                    self.center[1] + self.radius * a.sin(),
                    -self.depth,
                )
            }
            _ if p.end > p.start => p.from.lerp(&p.to, smooth((tau / (p.end - p.start)).min(1.0))),
            _ => p.to,
        }
    }

    /// Samples the protocol at `sample_rate`.
    pub fn generate(&self) -> Result<ProtocolPath, DynamicsError> {
        self.validate()?;
        let dt = 1.0 / self.sample_rate;
        let n = (self.duration() * self.sample_rate).round() as usize + 1;
        let traj = Trajectory::from_fn(0.0, dt, n, |t| self.position(t), |_| self.payload)?;
        Ok(ProtocolPath { trajectory: traj, phases: self.phases() })
    }
}

/// Convenience wrapper with the remaining settings at their defaults.
pub fn gen_circular_trajectory(
    radius: f64,
    frequency: f64,
    cycles: u32,
    center: [f64; 2],
    depth: f64,
    dwell: f64,
    sample_rate: f64,
) -> Result<ProtocolPath, DynamicsError> {
    CircleProtocol { radius, frequency, cycles, center, depth, dwell, sample_rate, ..Default::default() }.generate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn third_hertz_five_cycles_has_fifteen_second_circle() {
        let p = CircleProtocol::default().generate().unwrap();
        let c = p.phase(PhaseKind::Circle).unwrap();
        assert_relative_eq!(c.end - c.start, 15.0, epsilon = 1e-12);
        assert_relative_eq!(p.trajectory.dt(), 0.01, epsilon = 1e-12);
        let total = 2.0 * 1.0 + 4.0 * 2.0 + 15.0;
        assert_eq!(p.trajectory.len(), (total * 100.0) as usize + 1);
    }

    #[test]
    fn circle_starts_right_and_turns_counter_clockwise() {
        let proto = CircleProtocol { center: [0.001, -0.002], ..Default::default() };
        let c = *proto.generate().unwrap().phase(PhaseKind::Circle).unwrap();
        let r = proto.radius;
        let s = proto.position(c.start);
        assert!((s - Vector3::new(0.001 + r, -0.002, -0.01)).norm() < 1e-15);
        let q = proto.position(c.start + 0.25 / proto.frequency);
        assert!((q - Vector3::new(0.001, -0.002 + r, -0.01)).norm() < 1e-12);
    }

    #[test]
    fn path_is_continuous_and_returns_to_neutral() {
        let proto = CircleProtocol::default();
        for ph in proto.phases() {
            let before = proto.position(ph.start - 1e-9);
            let after = proto.position(ph.start + 1e-9);
            assert!((before - after).norm() < 1e-9, "{:?}", ph.kind);
        }
        let traj = proto.generate().unwrap().trajectory;
        assert_eq!(traj.u[0], Vector3::zeros());
        assert!(traj.u.last().unwrap().norm() < 1e-15);
    }

    #[test]
    fn rejects_undersampled_circle() {
        let e = gen_circular_trajectory(0.005, 10.0, 1, [0.0, 0.0], 0.01, 0.0, 100.0).unwrap_err();
        assert!(matches!(e, DynamicsError::InvalidParams(_)));
    }
}
