//! Path-following error metrics.

use nalgebra::Vector3;
use serde::Serialize;

use crate::dynamics::{DynamicsError, ForceSeries, Trajectory};

/// Scales for the relative errors: x and y against the pattern diameter, z
/// against the vertical stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalizers {
    pub diameter: f64,
    pub vertical_stroke: f64,
}

impl Normalizers {
    /// Horizontal extent and vertical extent of a reference path.
    pub fn from_reference(traj: &Trajectory) -> Self {
        let span = |k: usize| {
            let (lo, hi) = traj.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u[k]), hi.max(u[k])));
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        };
        Self { diameter: span(0).max(span(1)), vertical_stroke: span(2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisError {
    /// Error of largest magnitude, with its sign (predicted − reference).
    pub max: f64,
    pub rmse: f64,
    pub rel_max: f64,
    pub rel_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub x: AxisError,
    pub y: AxisError,
    pub z: AxisError,
    pub normalizers: Normalizers,
    /// RMS magnitude of the force difference, N.
    pub force_rmse: Option<f64>,
}

fn check_grid(a: &[f64], b: &[f64]) -> Result<(), DynamicsError> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(y.abs()).max(1.0)) {
        return Err(DynamicsError::MismatchedGrids(format!("{} vs {} samples on different times", a.len(), b.len())));
    }
    Ok(())
}

fn axis(err: impl Iterator<Item = f64>, scale: f64) -> AxisError {
    let mut n = 0usize;
    let mut sum2 = 0.0;
    let mut max: f64 = 0.0;
    for e in err {
        n += 1;
        sum2 += e * e;
        if e.abs() > max.abs() {
            max = e;
        }
    }
    let rmse = if n > 0 { (sum2 / n as f64).sqrt() } else { 0.0 };
    // a zero error is zero relative to any scale, including a degenerate one
    let rel = |v: f64| if v == 0.0 { 0.0 } else { v / scale };
    AxisError { max, rmse, rel_max: rel(max), rel_rmse: rel(rmse) }
}

fn vector_rmse(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(p, r)| (p - r).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}

/// Per-axis position errors of `predicted` against `reference`, plus the RMS
/// payload difference when either series carries a payload.
pub fn error_report(
    predicted: &Trajectory,
    reference: &Trajectory,
    norms: &Normalizers,
) -> Result<MetricsReport, DynamicsError> {
    check_grid(&predicted.t, &reference.t)?;
    let err = |k: usize| predicted.u.iter().zip(&reference.u).map(move |(p, r)| p[k] - r[k]);
    let has_force = predicted.payload.iter().chain(&reference.payload).any(|f| f.norm() > 0.0);
    Ok(MetricsReport {
        samples: predicted.len(),
        x: axis(err(0), norms.diameter),
        y: axis(err(1), norms.diameter),
        z: axis(err(2), norms.vertical_stroke),
        normalizers: *norms,
        force_rmse: has_force.then(|| vector_rmse(&predicted.payload, &reference.payload)),
    })
}

/// RMS magnitude of the resultant-force difference, N.
pub fn force_rmse(predicted: &ForceSeries, reference: &ForceSeries) -> Result<f64, DynamicsError> {
    check_grid(&predicted.t, &reference.t)?;
    Ok(vector_rmse(&predicted.total, &reference.total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(phase: f64) -> Trajectory {
        Trajectory::from_fn(
            0.0,
            0.01,
            300,
            |t| {
                let a = 2.0 * PI * t / 3.0 + phase;
                Vector3::new(0.0048 * a.cos(), 0.0048 * a.sin(), -0.01)
            },
            |_| Vector3::zeros(),
        )
        .unwrap()
    }

    const NORMS: Normalizers = Normalizers { diameter: 0.0096, vertical_stroke: 0.034 };

    #[test]
    fn identical_series_give_zero() {
        let c = circle(0.0);
        let r = error_report(&c, &c, &NORMS).unwrap();
        for a in [r.x, r.y, r.z] {
            assert_eq!((a.max, a.rmse, a.rel_max, a.rel_rmse), (0.0, 0.0, 0.0, 0.0));
        }
        assert_eq!(r.force_rmse, None);
    }

    #[test]
    fn constant_offset() {
        let r = circle(0.0);
        let mut p = r.clone();
        for u in &mut p.u {
            u.x += 1e-3;
        }
        let m = error_report(&p, &r, &NORMS).unwrap();
        assert!((m.x.max - 1e-3).abs() < 1e-18);
        assert!((m.x.rmse - 1e-3).abs() < 1e-15);
        assert!((m.x.rel_max - 1e-3 / 0.0096).abs() < 1e-12);
    }

    #[test]
    fn rotated_circle_matches_two_pass_oracle() {
        let r = circle(0.0);
        let p = circle(0.05);
        let m = error_report(&p, &r, &NORMS).unwrap();
        for k in 0..3 {
            let e: Vec<f64> = p.u.iter().zip(&r.u).map(|(a, b)| a[k] - b[k]).collect();
            let mean_sq = e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64;
            let worst = e.iter().copied().fold(0.0f64, |a, b| a.max(b.abs()));
            let got = [m.x, m.y, m.z][k];
            assert!((got.rmse - mean_sq.sqrt()).abs() < 1e-12);
            assert!((got.max.abs() - worst).abs() < 1e-12);
            assert!(got.rmse <= got.max.abs());
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let r = circle(0.0);
        let mut p = r.clone();
        p.t.iter_mut().for_each(|t| *t += 0.5);
        assert!(matches!(error_report(&p, &r, &NORMS), Err(DynamicsError::MismatchedGrids(_))));
    }

    #[test]
    fn reference_normalizers() {
        let n = Normalizers::from_reference(&circle(0.0));
        assert!((n.diameter - 0.0096).abs() < 1e-6);
        assert_eq!(n.vertical_stroke, 0.0);
    }
}
