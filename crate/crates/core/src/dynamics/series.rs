//! Uniform-grid time series.

use nalgebra::Vector3;

use super::DynamicsError;

/// Relative tolerance on grid spacing when checking uniformity.
const GRID_TOL: f64 = 1e-9;

fn check_grid(t: &[f64]) -> Result<(), DynamicsError> {
    if t.is_empty() {
        return Err(DynamicsError::InvalidSeries("empty time grid".into()));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::InvalidSeries("non-finite time stamp".into()));
    }
    if t.len() < 2 {
        return Ok(());
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidSeries("time must increase".into()));
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > GRID_TOL * dt.max(w[1].abs()) {
            return Err(DynamicsError::InvalidSeries(format!(
                "non-uniform time grid at sample {}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn grid_step(t: &[f64]) -> f64 {
    if t.len() < 2 {
        0.0
    } else {
        (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64
    }
}

/// Checks that two grids coincide sample by sample.
pub(crate) fn same_grid(a: &[f64], b: &[f64]) -> Result<(), DynamicsError> {
    if a.len() != b.len() {
        return Err(DynamicsError::MismatchedGrids(format!("{} vs {} samples", a.len(), b.len())));
    }
    let dt = grid_step(a).max(f64::MIN_POSITIVE);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if (x - y).abs() > GRID_TOL * dt.max(x.abs()) {
            return Err(DynamicsError::MismatchedGrids(format!("time differs at sample {i}: {x} vs {y}")));
        }
    }
    Ok(())
}

/// End-effector positions and payload forces on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// World position, m.
    pub u: Vec<Vector3<f64>>,
    /// External force acting on the end effector, N (world).
    pub payload: Vec<Vector3<f64>>,
}

impl Trajectory {
    pub fn new(t: Vec<f64>, u: Vec<Vector3<f64>>, payload: Vec<Vector3<f64>>) -> Result<Self, DynamicsError> {
        check_grid(&t)?;
        if u.len() != t.len() || payload.len() != t.len() {
            return Err(DynamicsError::InvalidSeries("column lengths differ".into()));
        }
        if u.iter().chain(&payload).any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(DynamicsError::InvalidSeries("non-finite position or payload".into()));
        }
        Ok(Self { t, u, payload })
    }

    /// Samples `position` and `payload` at `n` points spaced `dt` from `t0`.
    pub fn from_fn(
        t0: f64,
        dt: f64,
        n: usize,
        position: impl Fn(f64) -> Vector3<f64>,
        payload: impl Fn(f64) -> Vector3<f64>,
    ) -> Result<Self, DynamicsError> {
        let t: Vec<f64> = (0..n).map(|i| t0 + dt * i as f64).collect();
        let u = t.iter().map(|&s| position(s)).collect();
        let p = t.iter().map(|&s| payload(s)).collect();
        Self::new(t, u, p)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        grid_step(&self.t)
    }

    /// Central differences inside, second-order one-sided at the ends.
    pub fn velocity(&self) -> Vec<Vector3<f64>> {
        let u = &self.u;
        let n = u.len();
        let h = self.dt();
        match n {
            0 => vec![],
            1 => vec![Vector3::zeros()],
            2 => vec![(u[1] - u[0]) / h; 2],
            _ => (0..n)
                .map(|i| {
                    if i == 0 {
                        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
                    } else if i == n - 1 {
                        (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h)
                    } else {
                        (u[i + 1] - u[i - 1]) / (2.0 * h)
                    }
                })
                .collect(),
        }
    }

    /// Central second differences inside, second-order one-sided at the ends.
    pub fn acceleration(&self) -> Vec<Vector3<f64>> {
        let u = &self.u;
        let n = u.len();
        let h2 = self.dt().powi(2);
        match n {
            0 => vec![],
            1 | 2 => vec![Vector3::zeros(); n],
            3 => vec![(u[0] - 2.0 * u[1] + u[2]) / h2; 3],
            _ => (0..n)
                .map(|i| {
                    if i == 0 {
                        (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2
                    } else if i == n - 1 {
                        (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2
                    } else {
                        (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2
                    }
                })
                .collect(),
        }
    }
}

/// Per-chain drive voltages on a uniform grid, V.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageSignal {
    pub t: Vec<f64>,
    pub phi: Vec<[f64; 3]>,
}

impl VoltageSignal {
    pub fn new(t: Vec<f64>, phi: Vec<[f64; 3]>) -> Result<Self, DynamicsError> {
        check_grid(&t)?;
        if phi.len() != t.len() {
            return Err(DynamicsError::InvalidSeries("column lengths differ".into()));
        }
        if phi.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DynamicsError::InvalidSeries("voltages must be finite and >= 0".into()));
        }
        Ok(Self { t, phi })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channel(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.phi.iter().map(move |p| p[k])
    }
}

/// Resultant end-effector force and per-chain tip forces, N (world).
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSeries {
    pub t: Vec<f64>,
    pub total: Vec<Vector3<f64>>,
    pub chains: Vec<[Vector3<f64>; 3]>,
}

impl ForceSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_cubic_are_exact_enough() {
        let dt = 0.01;
        let traj = Trajectory::from_fn(
            0.0,
            dt,
            40,
            |t| Vector3::new(t * t, 2.0 * t * t * t, -t),
            |_| Vector3::zeros(),
        )
        .unwrap();
        let v = traj.velocity();
        let a = traj.acceleration();
        for (i, &t) in traj.t.iter().enumerate() {
            assert!((v[i] - Vector3::new(2.0 * t, 6.0 * t * t, -1.0)).norm() < 1e-9 + 2.0 * dt * dt * 6.0);
            // one-sided end formula is exact for quadratics only
            let tol = if i == 0 || i == 39 { 0.2 } else { 1e-8 };
            assert!((a[i] - Vector3::new(2.0, 12.0 * t, 0.0)).norm() < tol, "{i}: {}", a[i]);
        }
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let err = Trajectory::new(vec![0.0, 0.1, 0.25], vec![Vector3::zeros(); 3], vec![Vector3::zeros(); 3]);
        assert!(matches!(err, Err(DynamicsError::InvalidSeries(_))));
    }

    #[test]
    fn acceleration_halves_error_with_step() {
        // interior error of the second difference is O(h²)
        let f = |t: f64| Vector3::new(t.sin(), 0.0, 0.0);
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize + 1;
            let tr = Trajectory::from_fn(0.0, dt, n, f, |_| Vector3::zeros()).unwrap();
            let a = tr.acceleration();
            let i = (n - 1) / 2;
            (a[i].x + tr.t[i].sin()).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }
}
