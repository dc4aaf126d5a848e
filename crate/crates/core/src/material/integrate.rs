use super::gent::log_rate;
use super::{FilmParams, FilmState, MaterialError, StretchPair, BRANCHES};

const MAX_LOG_STEP: f64 = 0.5;

/// Substeps per grid interval so that the substep is at most `τ_min / 20`.
pub fn default_substeps(dt: f64, film: &FilmParams) -> usize {
    ((dt / (film.min_tau() / 20.0)).ceil() as usize).max(1)
}

type LogXi = [[f64; 2]; BRANCHES];

fn to_state(lambda: StretchPair, y: &LogXi) -> FilmState {
    FilmState { lambda, xi: y.map(|[a, b]| StretchPair::new(a.exp(), b.exp())) }
}

fn rhs(lambda: StretchPair, y: &LogXi, film: &FilmParams) -> Result<LogXi, MaterialError> {
    Ok(log_rate(&to_state(lambda, y), film)?.map(|r| [r.lambda1, r.lambda2]))
}

fn axpy(y: &LogXi, a: f64, k: &LogXi) -> LogXi {
    std::array::from_fn(|n| [y[n][0] + a * k[n][0], y[n][1] + a * k[n][1]])
}

/// Integrates the dashpot stretches along a stretch path sampled every `dt`
/// seconds, with fixed-step RK4 on `ln ξ` and the stretch interpolated
/// linearly inside each interval.
///
/// `path[0]` replaces the stretch of `state`; the result holds one state per
/// path sample. `substeps` defaults to [`default_substeps`].
pub fn advance_state(
    state: &FilmState,
    path: &[StretchPair],
    dt: f64,
    substeps: Option<usize>,
    film: &FilmParams,
) -> Result<Vec<FilmState>, MaterialError> {
    if !(dt > 0.0) {
        return Err(MaterialError::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let Some(&first) = path.first() else {
        return Ok(Vec::new());
    };
    let m = substeps.unwrap_or_else(|| default_substeps(dt, film)).max(1);
    let h = dt / m as f64;
    let mut y: LogXi = state.xi.map(|x| [x.lambda1.ln(), x.lambda2.ln()]);
    let mut out = Vec::with_capacity(path.len());
    out.push(FilmState { lambda: first, xi: state.xi });
    for (i, w) in path.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        for s in 0..m {
            let t0 = i as f64 * dt + s as f64 * h;
            let lam = |frac: f64| a.lerp(b, (s as f64 + frac) / m as f64);
            let stage = |k: LogXi| {
                let step = k.iter().flatten().fold(0.0f64, |m, v| m.max((h * v).abs()));
                if step <= MAX_LOG_STEP {
                    Ok(k)
                } else {
                    Err(MaterialError::StepUnstable { time: t0, delta: step })
                }
            };
            let k1 = stage(rhs(lam(0.0), &y, film).map_err(|e| e.at_time(t0))?)?;
            let k2 = stage(rhs(lam(0.5), &axpy(&y, 0.5 * h, &k1), film).map_err(|e| e.at_time(t0))?)?;
            let k3 = stage(rhs(lam(0.5), &axpy(&y, 0.5 * h, &k2), film).map_err(|e| e.at_time(t0))?)?;
            let k4 = stage(rhs(lam(1.0), &axpy(&y, h, &k3), film).map_err(|e| e.at_time(t0))?)?;
            let mut delta = 0.0f64;
            for n in 0..BRANCHES {
                for c in 0..2 {
                    let d = h / 6.0 * (k1[n][c] + 2.0 * k2[n][c] + 2.0 * k3[n][c] + k4[n][c]);
                    delta = delta.max(d.abs());
                    y[n][c] += d;
                }
            }
            if !(delta <= MAX_LOG_STEP) {
                return Err(MaterialError::StepUnstable { time: t0, delta });
            }
        }
        out.push(to_state(b, &y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{equilibrium_stress, stress};

    #[test]
    fn unit_path_is_a_fixed_point() {
        let film = FilmParams::synthetic_default();
        let s0 = FilmState::relaxed(StretchPair::ONE);
        let out = advance_state(&s0, &[StretchPair::ONE; 50], 0.01, None, &film).unwrap();
        assert_eq!(out.len(), 50);
        assert!(out.iter().all(|s| *s == s0));
    }

    #[test]
    fn constant_hold_relaxes_to_the_stretch() {
        let mut film = FilmParams::synthetic_default();
        // shorter spectrum keeps the test fast; the acceptance suite runs the full one
        film.tau = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0];
        let lam = StretchPair::new(1.4, 1.1);
        let s0 = FilmState::relaxed(StretchPair::ONE);
        let dt = 0.05;
        let n = (10.0 * film.max_tau() / dt) as usize + 1;
        let mut path = vec![lam; n];
        path[0] = StretchPair::ONE;
        let end = *advance_state(&s0, &path, dt, None, &film).unwrap().last().unwrap();
        for x in end.xi {
            assert!((x.lambda1 / lam.lambda1 - 1.0).abs() < 1e-3);
            assert!((x.lambda2 / lam.lambda2 - 1.0).abs() < 1e-3);
        }
        let s = stress(&end, &film).unwrap();
        let eq = equilibrium_stress(lam, &film).unwrap();
        assert!((s.lambda1 - eq.lambda1).abs() < 1e-3 * eq.lambda1.abs());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let film = FilmParams::synthetic_default();
        let s0 = FilmState::relaxed(StretchPair::ONE);
        let err = advance_state(&s0, &[StretchPair::ONE, StretchPair::new(1.9, 0.9)], 0.5, Some(1), &film)
            .unwrap_err();
        assert!(matches!(err, MaterialError::StepUnstable { .. }), "{err:?}");
    }
}
