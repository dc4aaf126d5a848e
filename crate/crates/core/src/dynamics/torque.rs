//! Forearm spring-back torque as a monotone piecewise-cubic curve.

use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// Torque `T(θ_FA)` through a set of anchors, N·m. Outside the anchor range
/// the end values are held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct ForearmTorqueCurve {
    angles: Vec<f64>,
    torques: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    angles: Vec<f64>,
    torques: Vec<f64>,
}

impl TryFrom<CurveRepr> for ForearmTorqueCurve {
    type Error = DynamicsError;
    fn try_from(r: CurveRepr) -> Result<Self, Self::Error> {
        Self::new(r.angles, r.torques)
    }
}

impl From<ForearmTorqueCurve> for CurveRepr {
    fn from(c: ForearmTorqueCurve) -> Self {
        CurveRepr { angles: c.angles, torques: c.torques }
    }
}

/// Result of evaluating the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueSample {
    pub torque: f64,
    /// The angle lay outside the anchor range and the end value was used.
    pub clamped: bool,
}

impl ForearmTorqueCurve {
    /// Anchors must be finite with strictly increasing angles.
    pub fn new(angles: Vec<f64>, torques: Vec<f64>) -> Result<Self, DynamicsError> {
        if angles.len() != torques.len() {
            return Err(DynamicsError::InvalidParams("anchor angle/torque counts differ".into()));
        }
        if angles.iter().chain(&torques).any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidParams("non-finite torque anchor".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DynamicsError::InvalidParams("anchor angles must increase strictly".into()));
        }
        let slopes = pchip_slopes(&angles, &torques);
        Ok(Self { angles, torques, slopes })
    }

    /// The null curve.
    pub fn zero() -> Self {
        Self { angles: vec![], torques: vec![], slopes: vec![] }
    }

    /// `n` anchors of `T = slope * θ` equally spaced over `[lo, hi]`.
    pub fn linear(slope: f64, lo: f64, hi: f64, n: usize) -> Result<Self, DynamicsError> {
        let angles = anchor_grid(lo, hi, n);
        let torques = angles.iter().map(|a| slope * a).collect();
        Self::new(angles, torques)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn is_zero(&self) -> bool {
        self.torques.iter().all(|&t| t == 0.0)
    }

    /// Same anchor angles, new torques.
    pub fn with_torques(&self, torques: Vec<f64>) -> Result<Self, DynamicsError> {
        Self::new(self.angles.clone(), torques)
    }

    pub fn eval(&self, theta: f64) -> TorqueSample {
        let n = self.angles.len();
        match n {
            0 => return TorqueSample { torque: 0.0, clamped: false },
            1 => return TorqueSample { torque: self.torques[0], clamped: theta != self.angles[0] },
            _ => {}
        }
        if theta < self.angles[0] {
            return TorqueSample { torque: self.torques[0], clamped: true };
        }
        if theta > self.angles[n - 1] {
            return TorqueSample { torque: self.torques[n - 1], clamped: true };
        }
        let i = match self.angles.partition_point(|&a| a <= theta) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let (x0, x1) = (self.angles[i], self.angles[i + 1]);
        let h = x1 - x0;
        let s = (theta - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let torque = h00 * self.torques[i]
            + h10 * h * self.slopes[i]
            + h01 * self.torques[i + 1]
            + h11 * h * self.slopes[i + 1];
        TorqueSample { torque, clamped: false }
    }
}

impl Default for ForearmTorqueCurve {
    fn default() -> Self {
        Self::zero()
    }
}

/// `n` equally spaced anchor angles over `[lo, hi]`.
pub fn anchor_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

// Fritsch-Carlson monotone slopes
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    if n == 2 {
        return vec![d[0]; 2];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m[0] = end_slope(x[1] - x[0], x[2] - x[1], d[0], d[1]);
    m[n - 1] = end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], d[n - 2], d[n - 3]);
    m
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn passes_through_anchors_and_clamps() {
        let c = ForearmTorqueCurve::new(vec![-0.2, 0.0, 0.1, 0.3], vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        for (a, t) in c.angles().iter().zip(c.torques()) {
            assert_eq!(c.eval(*a).torque, *t);
        }
        let lo = c.eval(-1.0);
        assert!(lo.clamped && lo.torque == 1.0);
        let hi = c.eval(1.0);
        assert!(hi.clamped && hi.torque == 5.0);
    }

    #[test]
    fn linear_data_is_reproduced() {
        let c = ForearmTorqueCurve::linear(0.4, -0.3, 0.3, 7).unwrap();
        for i in 0..=60 {
            let th = -0.3 + 0.01 * i as f64;
            assert!((c.eval(th).torque - 0.4 * th).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_curve() {
        assert_eq!(ForearmTorqueCurve::zero().eval(0.3).torque, 0.0);
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_curve(steps in prop::collection::vec(0.0f64..1.0, 3..8)) {
            let angles: Vec<f64> = (0..steps.len()).map(|i| i as f64 * 0.1).collect();
            let mut acc = 0.0;
            let torques: Vec<f64> = steps.iter().map(|s| { acc += s; acc }).collect();
            let c = ForearmTorqueCurve::new(angles.clone(), torques).unwrap();
            let mut prev = f64::NEG_INFINITY;
            let end = *angles.last().unwrap();
            for i in 0..=200 {
                let v = c.eval(end * i as f64 / 200.0).torque;
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
