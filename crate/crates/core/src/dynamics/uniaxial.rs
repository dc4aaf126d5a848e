//! Quasi-static simulator of a film strip hung under a dead weight and driven
//! by a voltage across its thickness.

use super::DynamicsError;
use crate::material::{advance_state, stress, FilmParams, FilmState, StretchPair};
use crate::numeric::brent;

/// Undeformed strip dimensions: length along the load, width, thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDims {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl SampleDims {
    pub fn of(film: &FilmParams) -> Self {
        Self { l1: film.l1, l2: film.l2, l3: film.l3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniaxialResult {
    pub t: Vec<f64>,
    pub lambda: Vec<StretchPair>,
    /// Elongation of the strip, m.
    pub displacement: Vec<f64>,
}

/// Root of `f` nearest `guess`, found by expanding a bracket around it.
fn local_root(f: &mut dyn FnMut(f64) -> f64, guess: f64, step: f64, lo: f64, hi: f64) -> Option<f64> {
    let f0 = f(guess);
    if f0 == 0.0 {
        return Some(guess);
    }
    if !f0.is_finite() {
        return None;
    }
    let mut d = step;
    let (mut left, mut fl) = (guess, f0);
    let (mut right, mut fr) = (guess, f0);
    let (mut left_open, mut right_open) = (true, true);
    while left_open || right_open {
        if right_open {
            let x = (guess + d).min(hi);
            let v = f(x);
            if v.is_finite() {
                if v.signum() != fr.signum() {
                    return brent(&mut *f, right, x, 1e-14);
                }
                right = x;
                fr = v;
            }
            right_open = v.is_finite() && x < hi;
        }
        if left_open {
            let x = (guess - d).max(lo);
            let v = f(x);
            if v.is_finite() {
                if v.signum() != fl.signum() {
                    return brent(&mut *f, x, left, 1e-14);
                }
                left = x;
                fl = v;
            }
            left_open = v.is_finite() && x > lo;
        }
        d *= 2.0;
    }
    None
}

struct Strip<'a> {
    film: &'a FilmParams,
    dims: SampleDims,
    weight: f64,
}

impl Strip<'_> {
    fn maxwell(&self, phi: f64, l1: f64, l2: f64) -> f64 {
        let e = phi * l1 * l2 / self.dims.l3;
        self.film.eps * e * e
    }

    fn state(&self, l1: f64, l2: f64, xi: Option<&FilmState>) -> FilmState {
        let lambda = StretchPair::new(l1, l2);
        match xi {
            Some(s) => FilmState { lambda, xi: s.xi },
            None => FilmState::relaxed(lambda),
        }
    }

    /// Width stretch leaving the free edges traction-free.
    fn width(&self, phi: f64, l1: f64, xi: Option<&FilmState>, guess: f64) -> Option<f64> {
        let mut g = |l2: f64| match stress(&self.state(l1, l2, xi), self.film) {
            Ok(s) if l2 > 0.0 => s.lambda2 - self.maxwell(phi, l1, l2),
            _ => f64::NAN,
        };
        local_root(&mut g, guess, 1e-3, 1e-3, 10.0)
    }

    /// Axial equilibrium with `xi` frozen (`None`: relaxed sub-chains).
    fn solve(&self, phi: f64, xi: Option<&FilmState>, guess: StretchPair) -> Option<StretchPair> {
        let mut last_l2 = guess.lambda2;
        let mut h = |l1: f64| {
            if l1 <= 0.0 {
                return f64::NAN;
            }
            let Some(l2) = self.width(phi, l1, xi, last_l2) else { return f64::NAN };
            last_l2 = l2;
            match stress(&self.state(l1, l2, xi), self.film) {
                Ok(s) => s.lambda1 - self.maxwell(phi, l1, l2) - self.weight * l1 / (self.dims.l2 * self.dims.l3),
                Err(_) => f64::NAN,
            }
        };
        let l1 = local_root(&mut h, guess.lambda1, 1e-3, 1e-3, 10.0)?;
        let l2 = self.width(phi, l1, xi, last_l2)?;
        Some(StretchPair::new(l1, l2))
    }
}

/// Elongation history of a strip of `dims` hung with `hung_mass` (kg) and
/// driven by `phi` (V) on the uniform grid `t`. The dashpots start relaxed at
/// the initial equilibrium; each step solves equilibrium with the dashpot
/// stretches of the previous step, then integrates them along the new
/// stretch.
pub fn simulate_uniaxial_sample(
    t: &[f64],
    phi: &[f64],
    hung_mass: f64,
    film: &FilmParams,
    dims: SampleDims,
    gravity: f64,
    substeps: Option<usize>,
) -> Result<UniaxialResult, DynamicsError> {
    if t.len() != phi.len() || t.is_empty() {
        return Err(DynamicsError::InvalidSeries("voltage and time lengths differ or are empty".into()));
    }
    if phi.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(hung_mass >= 0.0) {
        return Err(DynamicsError::InvalidParams("voltage and mass must be >= 0".into()));
    }
    film.validate()?;
    let strip = Strip { film, dims, weight: hung_mass * gravity };
    let no_eq = |i: usize, msg: &str| DynamicsError::NoEquilibrium { sample: i, time: t[i], msg: msg.into() };

    let l0 = strip.solve(phi[0], None, StretchPair::ONE).ok_or_else(|| no_eq(0, "initial state"))?;
    let mut state = FilmState::relaxed(l0);
    let mut lambda = vec![l0];
    for i in 1..t.len() {
        let dt = t[i] - t[i - 1];
        let next = strip.solve(phi[i], Some(&state), state.lambda).ok_or_else(|| no_eq(i, "pull-in or Gent limit"))?;
        let states = advance_state(&state, &[state.lambda, next], dt, substeps, film)?;
        state = states[1];
        lambda.push(next);
    }
    let displacement = lambda.iter().map(|l| dims.l1 * (l.lambda1 - 1.0)).collect();
    Ok(UniaxialResult { t: t.to_vec(), lambda, displacement })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_film() -> FilmParams {
        let mut f = FilmParams::synthetic_default();
        f.tau = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];
        f
    }

    #[test]
    fn unloaded_strip_stays_put() {
        let film = fast_film();
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let r = simulate_uniaxial_sample(&t, &[0.0; 20], 0.0, &film, SampleDims::of(&film), 9.81, None).unwrap();
        assert!(r.displacement.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn step_voltage_creeps_monotonically() {
        let film = fast_film();
        let dt = 0.02;
        let t: Vec<f64> = (0..600).map(|i| i as f64 * dt).collect();
        let phi: Vec<f64> = t.iter().map(|&s| if s < 1.0 { 0.0 } else { 4000.0 }).collect();
        let r = simulate_uniaxial_sample(&t, &phi, 0.02, &film, SampleDims::of(&film), 9.81, None).unwrap();
        let step = 50;
        assert!(r.displacement[step + 1] > r.displacement[step - 1]);
        for w in r.displacement[step + 1..].windows(2) {
            assert!(w[1] >= w[0] - 1e-15, "{} -> {}", w[0], w[1]);
        }
        // creep: well above the instantaneous response
        assert!(r.displacement[599] > r.displacement[step + 1] * 1.05);
    }

    fn cycle_amplitudes(film: &FilmParams, cycles: usize) -> Vec<f64> {
        let per = 150;
        let period = 3.0;
        let n = cycles * per + 1;
        let t: Vec<f64> = (0..n).map(|i| i as f64 * period / per as f64).collect();
        let phi: Vec<f64> = t.iter().map(|&s| 2500.0 - 2500.0 * (2.0 * std::f64::consts::PI * s / period).cos()).collect();
        let r = simulate_uniaxial_sample(&t, &phi, 0.01, film, SampleDims::of(film), 9.81, None).unwrap();
        r.displacement
            .chunks(per)
            .take(cycles)
            .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - c.iter().cloned().fold(f64::INFINITY, f64::min))
            .collect()
    }

    #[test]
    fn periodic_drive_settles_to_a_limit_cycle() {
        // ten cycles span ten times the slowest relaxation; a stiffer
        // equilibrium spring keeps the relaxed strip clear of pull-in at 5 kV
        let mut film = fast_film();
        film.mu[0] = 300e3;
        let a = cycle_amplitudes(&film, 11);
        let drift = (a[10] / a[9] - 1.0).abs();
        assert!(drift < 1e-3, "{drift}");
    }
}
