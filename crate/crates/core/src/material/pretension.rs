use super::{FilmParams, MaterialError};
use crate::numeric::{brent, scan_bracket};

/// Pre-tension residual of the free lateral edge, normalised by `μ1`.
/// `None` outside the Gent domain.
pub fn pretension_residual(lambda1: f64, lambda2: f64, film: &FilmParams) -> Option<f64> {
    let c = 1.0 / (lambda1 * lambda1 * lambda2 * lambda2);
    let den = 1.0 - (lambda1 * lambda1 + lambda2 * lambda2 + c - 3.0) / film.gent_j;
    (den > 0.0).then(|| (lambda2 * lambda2 - c) / den)
}

/// Lateral pre-stretch that leaves the free edge of a film stretched by
/// `lambda1_pre` stress-free.
pub fn solve_pretension(lambda1_pre: f64, film: &FilmParams) -> Result<f64, MaterialError> {
    if !(lambda1_pre >= 1.0 && lambda1_pre.is_finite()) {
        return Err(MaterialError::NoRoot(format!("lambda1_pre must be >= 1, got {lambda1_pre}")));
    }
    let f = |l2: f64| pretension_residual(lambda1_pre, l2, film).unwrap_or(f64::NAN);
    let (lo, hi) = (0.5 / lambda1_pre, 1.5);
    let (a, b) = if f(lo).is_finite() && f(hi).is_finite() {
        (lo, hi)
    } else {
        let mut touched = false;
        let g = |x: f64| {
            let v = f(x);
            touched |= !v.is_finite();
            v
        };
        match scan_bracket(g, lo, hi, 400) {
            Some(b) => b,
            None if touched => {
                return Err(MaterialError::GentLimit { branch: 0, ratio: f64::NAN, time: None });
            }
            None => return Err(MaterialError::NoRoot("no sign change".into())),
        }
    };
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, 1e-15).ok_or_else(|| MaterialError::NoRoot("root search failed".into()))
}

/// Undeformed film dimensions `(L1, L2)` that reach the pre-stretch
/// `(λ1, λ1^-1/2)` when mounted on a lozenge of link `l_dea` at `theta_pre`.
pub fn design_film_dims(theta_pre: f64, l_dea: f64, lambda1_pre: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta_pre).sin_cos();
    (2.0 * l_dea * s / lambda1_pre, 2.0 * l_dea * lambda1_pre.sqrt() * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretensionDesign {
    pub lambda1_pre: f64,
    pub lambda2_pre: f64,
    pub theta_pre: f64,
    pub l_dea: f64,
    pub l1: f64,
    pub l2: f64,
}

impl PretensionDesign {
    pub fn new(theta_pre: f64, l_dea: f64, lambda1_pre: f64, film: &FilmParams) -> Result<Self, MaterialError> {
        let lambda2_pre = solve_pretension(lambda1_pre, film)?;
        let (l1, l2) = design_film_dims(theta_pre, l_dea, lambda1_pre);
        Ok(Self { lambda1_pre, lambda2_pre, theta_pre, l_dea, l1, l2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pretension_of_one_and_one_and_a_half() {
        let film = FilmParams::synthetic_default();
        assert_relative_eq!(solve_pretension(1.0, &film).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(solve_pretension(1.5, &film).unwrap(), 0.816_496_580_927_726, epsilon = 1e-10);
    }

    #[test]
    fn residual_vanishes_across_the_sweep() {
        let film = FilmParams::synthetic_default();
        for i in 1..=50 {
            let l1 = 1.0 + i as f64 / 50.0;
            let l2 = solve_pretension(l1, &film).unwrap();
            assert!(pretension_residual(l1, l2, &film).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn gent_limit_during_search() {
        let mut film = FilmParams::synthetic_default();
        film.gent_j = 0.5;
        let err = solve_pretension(1.5, &film).unwrap_err();
        assert!(matches!(err, MaterialError::GentLimit { .. }), "{err:?}");
    }

    #[test]
    fn prototype_film_dims() {
        let (l1, l2) = design_film_dims(141.23f64.to_radians(), 50e-3, 1.5);
        assert!((l1 - 62.9e-3).abs() < 0.05e-3);
        // 2*50*sqrt(1.5)*cos(70.615°)
        assert_relative_eq!(l2, 2.0 * 50e-3 * 1.5f64.sqrt() * 70.615f64.to_radians().cos(), max_relative = 1e-12);
        let (_, flat) = design_film_dims(std::f64::consts::PI, 50e-3, 1.5);
        assert!(flat.abs() < 1e-17);
    }
}
