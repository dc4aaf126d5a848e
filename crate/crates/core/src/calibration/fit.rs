use std::sync::Mutex;

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CalibrationError, CalibrationProblem, CalibrationResult, CalibrationWarning, FreeParam, ParamSpec};
use crate::dynamics::{inverse_dynamics_on, DynamicsError, FilmHistory, KinematicTrack, Model, VoltageSignal};

/// Weighted RMS voltage error over the selected channels, V.
///
/// Samples whose applied voltage lies below `threshold` weigh `low_weight`.
pub fn voltage_loss(
    predicted: &VoltageSignal,
    applied: &VoltageSignal,
    channels: [bool; 3],
    threshold: f64,
    low_weight: f64,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, a) in predicted.phi.iter().zip(&applied.phi) {
        for k in (0..3).filter(|k| channels[*k]) {
            let w = if a[k] < threshold { low_weight } else { 1.0 };
            let e = p[k] - a[k];
            num += w * e * e;
            den += w;
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

struct Objective<'a> {
    problem: &'a CalibrationProblem,
    free: Vec<ParamSpec>,
    track: KinematicTrack,
    history: Option<FilmHistory>,
    best: Mutex<Best>,
}

struct Best {
    loss: f64,
    x: Vec<f64>,
    trace: Vec<f64>,
}

impl Objective<'_> {
    fn encode(&self, model: &Model) -> Vec<f64> {
        self.free
            .iter()
            .map(|s| {
                let v = s.param.get(model);
                if s.param.is_log() {
                    v.ln()
                } else {
                    v
                }
            })
            .collect()
    }

    fn decode_value(spec: &ParamSpec, x: f64) -> f64 {
        let v = if spec.param.is_log() { x.exp() } else { x };
        // exp(ln(b)) may land an ulp outside the box
        v.clamp(spec.lower, spec.upper)
    }

    /// Distance outside the box, in search coordinates.
    fn violation(&self, x: &[f64]) -> f64 {
        self.free
            .iter()
            .zip(x)
            .map(|(s, &xi)| {
                let (lo, hi) = if s.param.is_log() { (s.lower.ln(), s.upper.ln()) } else { (s.lower, s.upper) };
                (lo - xi).max(0.0) + (xi - hi).max(0.0)
            })
            .sum()
    }

    fn model_at(&self, x: &[f64]) -> Result<Model, DynamicsError> {
        let base = &self.problem.model;
        let mut film = base.film;
        let mut torques = base.torque.torques().to_vec();
        for (s, &xi) in self.free.iter().zip(x) {
            let v = Self::decode_value(s, xi);
            match s.param {
                FreeParam::Anchor(i) => torques[i] = v,
                p => p.set_film(&mut film, v),
            }
        }
        film.validate()?;
        let torque = base.torque.with_torques(torques)?;
        Ok(Model { film, torque, ..base.clone() })
    }

    fn predict(&self, model: &Model) -> Result<VoltageSignal, DynamicsError> {
        let owned;
        let history = match &self.history {
            Some(h) => h,
            None => {
                owned = FilmHistory::integrate(&self.track, &model.film, &model.settings)?;
                &owned
            }
        };
        inverse_dynamics_on(&self.track, history, &self.problem.trajectory.payload, model)
    }

    fn loss(&self, predicted: &VoltageSignal) -> f64 {
        let o = &self.problem.options;
        voltage_loss(predicted, &self.problem.voltage, o.channels, o.low_voltage_threshold, o.low_voltage_weight)
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let viol = self.violation(x);
        let loss = if viol > 0.0 || x.iter().any(|v| !v.is_finite()) {
            self.problem.options.penalty * (1.0 + viol)
        } else {
            match self.model_at(x).and_then(|m| self.predict(&m)) {
                Ok(v) => self.loss(&v),
                Err(_) => self.problem.options.penalty,
            }
        };
        let loss = if loss.is_finite() { loss } else { self.problem.options.penalty };
        let mut b = self.best.lock().unwrap();
        if loss < b.loss {
            b.loss = loss;
            b.x = x.to_vec();
        }
        let best = b.loss;
        b.trace.push(best);
        loss
    }
}

struct Cost<'a, 'b>(&'a Objective<'b>);

impl CostFunction for Cost<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> Result<f64, ArgminError> {
        Ok(self.0.evaluate(p))
    }
}

fn simplex(center: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![center.to_vec()];
    for (i, s) in steps.iter().enumerate() {
        let mut v = center.to_vec();
        v[i] += s;
        out.push(v);
    }
    out
}

fn base_steps(free: &[ParamSpec], scale: f64) -> Vec<f64> {
    free.iter()
        .map(|s| if s.param.is_log() { scale } else { scale * (s.upper - s.lower) })
        .collect()
}

/// Fits any mix of film constants and torque anchors.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult, CalibrationError> {
    run(problem, problem.free.clone(), vec![])
}

/// Fits film constants (moduli, relaxation times, Gent limit, permittivity).
pub fn calibrate_film(problem: &CalibrationProblem) -> Result<CalibrationResult, CalibrationError> {
    if let Some(s) = problem.free.iter().find(|s| !s.param.is_log()) {
        return Err(CalibrationError::InvalidProblem(format!("{} is not a film parameter", s.param)));
    }
    calibrate(problem)
}

/// Fits torque anchors of the forearm spring-back curve. Anchors that no
/// observed forearm angle comes near are held at their initial value.
pub fn calibrate_forearm(problem: &CalibrationProblem) -> Result<CalibrationResult, CalibrationError> {
    if let Some(s) = problem.free.iter().find(|s| s.param.is_log()) {
        return Err(CalibrationError::InvalidProblem(format!("{} is not a torque anchor", s.param)));
    }
    problem.validate()?;
    let track = KinematicTrack::new(&problem.trajectory, &problem.model).map_err(CalibrationError::InfeasibleDuringFit)?;
    let seen: Vec<f64> = track.samples.iter().flat_map(|s| s.snapshot.chains.map(|c| c.theta_fa)).collect();
    let angles = problem.model.torque.angles();
    let mut keep = vec![];
    let mut warnings = vec![];
    for s in &problem.free {
        let FreeParam::Anchor(i) = s.param else { unreachable!() };
        let lo = if i == 0 { f64::NEG_INFINITY } else { angles[i - 1] };
        let hi = angles.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if seen.iter().any(|&a| a >= lo && a <= hi) {
            keep.push(*s);
        } else {
            warnings.push(CalibrationWarning::UnidentifiableAnchor { anchor: i, angle: angles[i] });
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    if keep.is_empty() {
        return Err(CalibrationError::InvalidProblem("no torque anchor is identifiable".into()));
    }
    run(problem, keep, warnings)
}

fn run(
    problem: &CalibrationProblem,
    free: Vec<ParamSpec>,
    warnings: Vec<CalibrationWarning>,
) -> Result<CalibrationResult, CalibrationError> {
    problem.validate()?;
    let opts = &problem.options;
    let track = KinematicTrack::new(&problem.trajectory, &problem.model).map_err(CalibrationError::InfeasibleDuringFit)?;
    if track.t != problem.voltage.t {
        return Err(CalibrationError::Dynamics(DynamicsError::MismatchedGrids(
            "voltage and trajectory sample times differ".into(),
        )));
    }
    let history = if free.iter().any(|s| s.param.affects_history()) {
        None
    } else {
        Some(
            FilmHistory::integrate(&track, &problem.model.film, &problem.model.settings)
                .map_err(CalibrationError::InfeasibleDuringFit)?,
        )
    };
    let obj = Objective {
        problem,
        free,
        track,
        history,
        best: Mutex::new(Best { loss: f64::INFINITY, x: vec![], trace: vec![] }),
    };

    let x0 = obj.encode(&problem.model);
    let m0 = obj.model_at(&x0).map_err(CalibrationError::InfeasibleDuringFit)?;
    let v0 = obj.predict(&m0).map_err(CalibrationError::InfeasibleDuringFit)?;
    obj.evaluate(&x0);
    let mut iterations = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let steps = base_steps(&obj.free, opts.simplex_step);
    let loss0 = obj.loss(&v0);
    if loss0 > opts.loss_tolerance {
        for run in 0..=opts.restarts {
            let centre = obj.best.lock().unwrap().x.clone();
            let s: Vec<f64> = if run == 0 {
                steps.clone()
            } else {
                steps
                    .iter()
                    .map(|s| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * s * rng.random_range(0.5..1.5)
                    })
                    .collect()
            };
            let solver = NelderMead::new(simplex(&centre, &s))
                .with_sd_tolerance(1e-14)
                .map_err(|e| CalibrationError::Optimizer(e.to_string()))?;
            let res = Executor::new(Cost(&obj), solver)
                .configure(|st| st.max_iters(opts.max_iters).target_cost(opts.loss_tolerance))
                .run()
                .map_err(|e| CalibrationError::Optimizer(e.to_string()))?;
            iterations += res.state().get_iter();
            if obj.best.lock().unwrap().loss <= opts.loss_tolerance {
                break;
            }
        }
    }

    let best = obj.best.into_inner().unwrap();
    let objective = Objective { best: Mutex::new(Best { loss: 0.0, x: vec![], trace: vec![] }), ..obj };
    let model = objective.model_at(&best.x).map_err(CalibrationError::Dynamics)?;
    let predicted = objective.predict(&model).map_err(CalibrationError::Dynamics)?;
    let loss = objective.loss(&predicted);
    if let Some(target) = opts.target_loss {
        if !(loss <= target) {
            return Err(CalibrationError::NonConvergence { loss, target });
        }
    }
    let residuals = predicted
        .phi
        .iter()
        .zip(&problem.voltage.phi)
        .map(|(p, a)| [p[0] - a[0], p[1] - a[1], p[2] - a[2]])
        .collect();
    let fitted = objective.free.iter().map(|s| (s.param, s.param.get(&model))).collect();
    Ok(CalibrationResult {
        model,
        loss,
        evaluations: best.trace.len(),
        trace: best.trace,
        residuals,
        iterations,
        warnings,
        fitted,
    })
}
