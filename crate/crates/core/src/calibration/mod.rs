//! Fitting film constants and the forearm torque curve so that the inverse
//! dynamics reproduces a recorded drive voltage.

mod fit;

pub use fit::{calibrate, calibrate_film, calibrate_forearm, voltage_loss};

use std::fmt;

use thiserror::Error;

use crate::dynamics::{anchor_grid, DynamicsError, KinematicTrack, Model, Trajectory, VoltageSignal};
use crate::material::FilmParams;
use crate::ForearmTorqueCurve;

/// A parameter the optimiser may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreeParam {
    /// Spring modulus, 0-based (`Mu(0)` is the equilibrium spring).
    Mu(usize),
    /// Sub-chain relaxation time, 0-based.
    Tau(usize),
    GentJ,
    Eps,
    /// Torque at a forearm-curve anchor, 0-based.
    Anchor(usize),
}

impl FreeParam {
    /// Positive parameters are searched in log space.
    pub fn is_log(&self) -> bool {
        !matches!(self, FreeParam::Anchor(_))
    }

    pub fn get(&self, model: &Model) -> f64 {
        match *self {
            FreeParam::Mu(i) => model.film.mu[i],
            FreeParam::Tau(i) => model.film.tau[i],
            FreeParam::GentJ => model.film.gent_j,
            FreeParam::Eps => model.film.eps,
            FreeParam::Anchor(i) => model.torque.torques()[i],
        }
    }

    fn set_film(&self, film: &mut FilmParams, v: f64) {
        match *self {
            FreeParam::Mu(i) => film.mu[i] = v,
            FreeParam::Tau(i) => film.tau[i] = v,
            FreeParam::GentJ => film.gent_j = v,
            FreeParam::Eps => film.eps = v,
            FreeParam::Anchor(_) => {}
        }
    }

    /// True when the film histories depend on this parameter.
    pub fn affects_history(&self) -> bool {
        matches!(self, FreeParam::Tau(_) | FreeParam::GentJ)
    }

    pub fn parse(s: &str) -> Option<Self> {
        let idx = |p: &str| s.strip_prefix(p).and_then(|r| r.parse::<usize>().ok()).filter(|i| *i >= 1);
        match s {
            "J" | "j" | "gent_j" => Some(FreeParam::GentJ),
            "eps" => Some(FreeParam::Eps),
            _ => {
                if let Some(i) = idx("mu").filter(|i| *i <= 7) {
                    Some(FreeParam::Mu(i - 1))
                } else if let Some(i) = idx("tau").filter(|i| *i <= 6) {
                    Some(FreeParam::Tau(i - 1))
                } else {
                    idx("anchor").map(|i| FreeParam::Anchor(i - 1))
                }
            }
        }
    }
}

impl fmt::Display for FreeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreeParam::Mu(i) => write!(f, "mu{}", i + 1),
            FreeParam::Tau(i) => write!(f, "tau{}", i + 1),
            FreeParam::GentJ => write!(f, "J"),
            FreeParam::Eps => write!(f, "eps"),
            FreeParam::Anchor(i) => write!(f, "anchor{}", i + 1),
        }
    }
}

/// A free parameter with its box bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub param: FreeParam,
    pub lower: f64,
    pub upper: f64,
}

impl ParamSpec {
    pub fn new(param: FreeParam, lower: f64, upper: f64) -> Self {
        Self { param, lower, upper }
    }

    /// Bounds a decade either side of the current value.
    pub fn decade(param: FreeParam, model: &Model) -> Self {
        let v = param.get(model);
        Self { param, lower: v / 10.0, upper: v * 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    /// Restarts after the first run; each one re-seeds the simplex around the
    /// best point so far.
    pub restarts: usize,
    pub max_iters: u64,
    pub seed: u64,
    /// Stop as soon as the loss falls below this value, V.
    pub loss_tolerance: f64,
    /// Fail with `NonConvergence` when the final loss is above this, V.
    pub target_loss: Option<f64>,
    /// Samples whose applied voltage is below this get `low_voltage_weight`.
    pub low_voltage_threshold: f64,
    pub low_voltage_weight: f64,
    /// Loss assigned to trial points where the inverse dynamics fails, V.
    pub penalty: f64,
    /// Initial simplex edge: log-step for positive parameters, fraction of the
    /// bound span for anchors.
    pub simplex_step: f64,
    /// Voltage channels entering the loss.
    pub channels: [bool; 3],
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_iters: 2000,
            seed: 7,
            loss_tolerance: 1e-9,
            target_loss: None,
            low_voltage_threshold: 1500.0,
            low_voltage_weight: 0.25,
            penalty: 1e12,
            simplex_step: 0.1,
            channels: [true; 3],
        }
    }
}

/// Recorded trajectory and voltages, the starting model and what to fit.
#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub trajectory: Trajectory,
    pub voltage: VoltageSignal,
    pub model: Model,
    pub free: Vec<ParamSpec>,
    pub options: CalibrationOptions,
}

impl CalibrationProblem {
    pub fn new(
        trajectory: Trajectory,
        voltage: VoltageSignal,
        model: Model,
        free: Vec<ParamSpec>,
    ) -> Result<Self, CalibrationError> {
        let p = Self { trajectory, voltage, model, free, options: CalibrationOptions::default() };
        p.validate()?;
        Ok(p)
    }

    /// Fit all anchors of a fresh torque curve with `n` anchors equally spaced
    /// over the forearm angles seen along the trajectory, starting from the
    /// current curve's values there.
    pub fn forearm(
        trajectory: Trajectory,
        voltage: VoltageSignal,
        model: Model,
        n: usize,
        bound: f64,
    ) -> Result<Self, CalibrationError> {
        let (lo, hi) = observed_forearm_range(&trajectory, &model)?;
        let angles = anchor_grid(lo, hi, n);
        let torques = angles.iter().map(|a| model.torque.eval(*a).torque).collect();
        let torque = ForearmTorqueCurve::new(angles, torques).map_err(CalibrationError::Dynamics)?;
        let model = model.with_torque(torque);
        let free = (0..n)
            .map(|i| {
                let v = model.torque.torques()[i];
                ParamSpec::new(FreeParam::Anchor(i), v - bound, v + bound)
            })
            .collect();
        Self::new(trajectory, voltage, model, free)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let bad = |m: String| Err(CalibrationError::InvalidProblem(m));
        if self.free.is_empty() {
            return bad("no free parameters".into());
        }
        for s in &self.free {
            if let FreeParam::Anchor(i) = s.param {
                if i >= self.model.torque.torques().len() {
                    return bad(format!("{} does not exist", s.param));
                }
            }
            if !(s.lower.is_finite() && s.upper.is_finite() && s.lower < s.upper) {
                return bad(format!("bounds of {} must be finite and ordered", s.param));
            }
            if s.param.is_log() && !(s.lower > 0.0) {
                return bad(format!("bounds of {} must be positive", s.param));
            }
            let v = s.param.get(&self.model);
            if !(v >= s.lower && v <= s.upper) {
                return bad(format!("initial {} = {v} outside [{}, {}]", s.param, s.lower, s.upper));
            }
        }
        if !self.options.channels.iter().any(|c| *c) {
            return bad("no voltage channel selected".into());
        }
        Ok(())
    }
}

/// Smallest and largest forearm angle of any chain along the trajectory.
pub fn observed_forearm_range(traj: &Trajectory, model: &Model) -> Result<(f64, f64), CalibrationError> {
    let track = KinematicTrack::new(traj, model).map_err(CalibrationError::Dynamics)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &track.samples {
        for c in &s.snapshot.chains {
            lo = lo.min(c.theta_fa);
            hi = hi.max(c.theta_fa);
        }
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationWarning {
    /// No observed forearm angle lies near this anchor; its torque was held.
    UnidentifiableAnchor { anchor: usize, angle: f64 },
}

impl fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationWarning::UnidentifiableAnchor { anchor, angle } => write!(
                f,
                "UnidentifiableAnchor: anchor {} at {:.4} rad is never approached; torque held",
                anchor + 1,
                angle
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub model: Model,
    pub loss: f64,
    /// Best loss after each objective evaluation (non-increasing).
    pub trace: Vec<f64>,
    /// Predicted minus applied voltage per sample and channel, V.
    pub residuals: Vec<[f64; 3]>,
    pub evaluations: usize,
    pub iterations: u64,
    pub warnings: Vec<CalibrationWarning>,
    /// Final value of every free parameter.
    pub fitted: Vec<(FreeParam, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid calibration problem: {0}")]
    InvalidProblem(String),
    #[error("initial guess is infeasible: {0}")]
    InfeasibleDuringFit(DynamicsError),
    #[error("no convergence: loss {loss:.6e} V above target {target:.6e} V")]
    NonConvergence { loss: f64, target: f64 },
    #[error(transparent)]
    Dynamics(DynamicsError),
    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

impl CalibrationError {
    pub fn name(&self) -> &'static str {
        match self {
            CalibrationError::InvalidProblem(_) => "InvalidProblem",
            CalibrationError::InfeasibleDuringFit(_) => "InfeasibleDuringFit",
            CalibrationError::NonConvergence { .. } => "NonConvergence",
            CalibrationError::Dynamics(e) => e.name(),
            CalibrationError::Optimizer(_) => "Optimizer",
        }
    }
}
