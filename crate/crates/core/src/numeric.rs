//! Small numeric helpers shared by the solvers.

use roots::{find_root_brent, SimpleConvergency};

/// Brent root of `f` on `[lo, hi]`. Returns `None` when the interval does not
/// bracket a sign change or the search does not converge.
pub(crate) fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut conv = SimpleConvergency { eps: tol, max_iter: 200 };
    find_root_brent(lo, hi, f, &mut conv).ok()
}

/// Scans `[lo, hi]` in `steps` uniform cells and returns the first cell whose
/// end points bracket a sign change of `f`. Non-finite samples are skipped.
pub(crate) fn scan_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Option<(f64, f64)> {
    let h = (hi - lo) / steps as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=steps {
        let x = lo + h * i as f64;
        let fx = f(x);
        if !fx.is_finite() {
            prev = None;
            continue;
        }
        if fx == 0.0 {
            return Some((x, x));
        }
        if let Some((xp, fp)) = prev {
            if fp.signum() != fx.signum() {
                return Some((xp, x));
            }
        }
        prev = Some((x, fx));
    }
    None
}

/// Wraps an angle into `(-π, π]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}
