//! Four-bar stroke amplifier and lozenge strain map.

use std::f64::consts::PI;

use super::{KinematicsError, RobotGeometry};
use crate::material::{FilmParams, StretchPair};
use crate::numeric::{brent, wrap_angle};

struct SamTerms {
    g: f64,
    h: f64,
    r: f64,
}

fn sam_terms(theta_k1: f64, geom: &RobotGeometry) -> SamTerms {
    let RobotGeometry { a, b, c, d, .. } = *geom;
    let (s, co) = theta_k1.sin_cos();
    let base = a * a + b * b + d * d - c * c - 2.0 * a * b * co;
    SamTerms {
        g: -4.0 * b * d * s,
        h: base - 2.0 * a * d + 2.0 * b * d * co,
        r: base + 2.0 * a * d - 2.0 * b * d * co,
    }
}

/// `G² − 4HR` of the four-bar half-angle quadratic.
pub fn sam_discriminant(theta_k1: f64, geom: &RobotGeometry) -> f64 {
    let SamTerms { g, h, r } = sam_terms(theta_k1, geom);
    g * g - 4.0 * h * r
}

/// SAM input angle for a bicep angle `theta_k1`, taking the negative root of
/// the half-angle quadratic. Result wrapped to `(-π, π]`.
pub fn sam_inverse(theta_k1: f64, geom: &RobotGeometry) -> Result<f64, KinematicsError> {
    let SamTerms { g, h, r } = sam_terms(theta_k1, geom);
    let disc = g * g - 4.0 * h * r;
    if !(disc >= 0.0) {
        return Err(KinematicsError::LinkageLocked { chain: None, discriminant: disc });
    }
    let sq = disc.sqrt();
    // (-G - sqrt D) / 2H, rationalised when -G >= 0 so that H -> 0 stays finite
    let t = if g <= 0.0 {
        let den = -g + sq;
        if den == 0.0 {
            return Err(KinematicsError::SingularLinkage { chain: None });
        }
        2.0 * r / den
    } else {
        let scale = a_scale(geom);
        if h.abs() <= 1e-14 * scale {
            return Err(KinematicsError::SingularLinkage { chain: None });
        }
        (-g - sq) / (2.0 * h)
    };
    Ok(wrap_angle(PI - 2.0 * t.atan()))
}

fn a_scale(geom: &RobotGeometry) -> f64 {
    let m = geom.a.max(geom.b).max(geom.c).max(geom.d);
    m * m
}

/// Bicep-angle interval on which [`sam_inverse`] is strictly monotone and the
/// linkage closes: from the peak of the SAM angle up to the upper locking limit.
pub fn sam_operating_range(geom: &RobotGeometry) -> Result<(f64, f64), KinematicsError> {
    // scan a full turn for the feasible arc containing the peak
    let n = 3600;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n {
        let th = -PI + 2.0 * PI * i as f64 / n as f64;
        if let Ok(v) = sam_inverse(th, geom) {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((th, v));
            }
        }
    }
    let (peak_guess, _) = best.ok_or(KinematicsError::InvalidGeometry("four-bar never closes".into()))?;
    let h = 2.0 * PI / n as f64;
    // golden-section refinement of the peak
    let (mut lo, mut hi) = (peak_guess - h, peak_guess + h);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x: f64| sam_inverse(x, geom).unwrap_or(f64::NEG_INFINITY);
    for _ in 0..200 {
        let x1 = hi - gr * (hi - lo);
        let x2 = lo + gr * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let peak = 0.5 * (lo + hi);
    // walk up to the locking limit, then bisect it
    let mut upper = peak;
    let closes = |x: f64| sam_inverse(x, geom).is_ok();
    while upper < peak + 2.0 * PI - h && closes(upper + h) {
        upper += h;
    }
    let (mut a, mut b) = (upper, upper + h);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if closes(m) {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((peak, a))
}

/// Bicep angle producing SAM angle `theta_sam` on the operating branch.
pub fn sam_forward(theta_sam: f64, geom: &RobotGeometry) -> Result<f64, KinematicsError> {
    let (lo, hi) = sam_operating_range(geom)?;
    let target = wrap_angle(theta_sam);
    let f = |x: f64| match sam_inverse(x, geom) {
        Ok(v) => wrap_angle(v - target),
        Err(_) => f64::NAN,
    };
    brent(f, lo, hi, 1e-15).ok_or(KinematicsError::NoSolution { theta_sam })
}

/// Film stretches of the lozenge at DEA angle `theta_dea`.
pub fn dea_strains(theta_dea: f64, geom: &RobotGeometry, film: &FilmParams) -> StretchPair {
    let (s, c) = (0.5 * theta_dea).sin_cos();
    StretchPair::new(2.0 * geom.l_dea / film.l1 * s, 2.0 * geom.l_dea / film.l2 * c)
}

/// Derivatives of the lozenge stretches with respect to the DEA angle.
pub fn dea_strain_slopes(theta_dea: f64, geom: &RobotGeometry, film: &FilmParams) -> StretchPair {
    let (s, c) = (0.5 * theta_dea).sin_cos();
    StretchPair::new(geom.l_dea / film.l1 * c, -geom.l_dea / film.l2 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::design_film_dims;
    use approx::assert_relative_eq;

    #[test]
    fn flat_lozenge_strains() {
        let geom = RobotGeometry::prototype();
        let film = FilmParams::synthetic_default();
        let l = dea_strains(PI, &geom, &film);
        assert_relative_eq!(l.lambda1, 100.0 / 62.9, epsilon = 1e-12);
        assert!(l.lambda2.abs() < 1e-15);
    }

    #[test]
    fn neutral_strains_match_table_values() {
        let geom = RobotGeometry::prototype();
        let film = FilmParams::synthetic_default();
        let l = dea_strains(111.8f64.to_radians(), &geom, &film);
        // 2*50/62.9*sin(55.9°), 2*50/41.5*cos(55.9°) by hand
        assert_relative_eq!(l.lambda1, 1.316_476, epsilon = 1e-5);
        assert_relative_eq!(l.lambda2, 1.350_937, epsilon = 1e-5);
    }

    #[test]
    fn designed_dims_invert_the_strain_map_at_pre_tension() {
        let mut geom = RobotGeometry::prototype();
        geom.theta_pre = 141.23f64.to_radians();
        let (l1, l2) = design_film_dims(geom.theta_pre, geom.l_dea, 1.5);
        let film = FilmParams { l1, l2, ..FilmParams::synthetic_default() };
        let l = dea_strains(geom.theta_pre, &geom, &film);
        assert_relative_eq!(l.lambda1, 1.5, epsilon = 1e-12);
        assert_relative_eq!(l.lambda2, 1.5f64.powf(-0.5), epsilon = 1e-12);
    }

    #[test]
    fn strain_slopes_match_central_difference() {
        let geom = RobotGeometry::prototype();
        let film = FilmParams::synthetic_default();
        let th = 1.9;
        let h = 1e-6;
        let p = dea_strains(th + h, &geom, &film);
        let m = dea_strains(th - h, &geom, &film);
        let s = dea_strain_slopes(th, &geom, &film);
        assert_relative_eq!(s.lambda1, (p.lambda1 - m.lambda1) / (2.0 * h), epsilon = 1e-8);
        assert_relative_eq!(s.lambda2, (p.lambda2 - m.lambda2) / (2.0 * h), epsilon = 1e-8);
    }

    #[test]
    fn locked_linkage_is_reported() {
        let geom = RobotGeometry::prototype();
        // crank angle near 0: coupler cannot reach (feasible only above ~58.5°)
        let err = sam_inverse(0.2, &geom).unwrap_err();
        assert!(matches!(err, KinematicsError::LinkageLocked { .. }));
    }

    #[test]
    fn singular_branch_reported_when_h_vanishes_with_positive_g() {
        // rhombus: H == 0 for every angle; sin < 0 gives G > 0
        let mut geom = RobotGeometry::prototype();
        geom.a = 0.03;
        geom.b = 0.03;
        geom.c = 0.03;
        geom.d = 0.03;
        let err = sam_inverse(-PI / 2.0, &geom).unwrap_err();
        assert!(matches!(err, KinematicsError::SingularLinkage { .. }));
    }

    #[test]
    fn forward_outside_range_has_no_solution() {
        let geom = RobotGeometry::prototype();
        let err = sam_forward(1.2, &geom).unwrap_err();
        assert!(matches!(err, KinematicsError::NoSolution { .. }));
    }
}
