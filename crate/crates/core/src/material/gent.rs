use super::{FilmParams, FilmState, MaterialError, StretchPair, BRANCHES};

const GENT_MARGIN: f64 = 1e-9;

/// Elastic stretches of a Gent branch and its denominator `1 - (I1 - 3)/J`.
struct Branch {
    /// `λ1²/ξ1² - c`, `λ2²/ξ2² - c`, with `c` the thickness-direction term.
    dev: StretchPair,
    den: f64,
}

fn branch(lambda: StretchPair, xi: StretchPair, gent_j: f64, index: usize) -> Result<Branch, MaterialError> {
    let e1 = (lambda.lambda1 / xi.lambda1).powi(2);
    let e2 = (lambda.lambda2 / xi.lambda2).powi(2);
    let e3 = 1.0 / (e1 * e2);
    let ratio = (e1 + e2 + e3 - 3.0) / gent_j;
    if !(ratio <= 1.0 - GENT_MARGIN) {
        return Err(MaterialError::GentLimit { branch: index, ratio, time: None });
    }
    Ok(Branch { dev: StretchPair::new(e1 - e3, e2 - e3), den: 1.0 - ratio })
}

fn check_positive(state: &FilmState) -> Result<(), MaterialError> {
    let ok = |p: &StretchPair| p.lambda1 > 0.0 && p.lambda2 > 0.0;
    if ok(&state.lambda) && state.xi.iter().all(ok) {
        Ok(())
    } else {
        Err(MaterialError::InvalidParams("stretches must be positive".into()))
    }
}

/// Free energy per unit reference volume, J/m³.
pub fn free_energy(state: &FilmState, film: &FilmParams) -> Result<f64, MaterialError> {
    check_positive(state)?;
    let j = film.gent_j;
    let eq = branch(state.lambda, StretchPair::ONE, j, 0)?;
    let mut w = -0.5 * film.mu[0] * j * eq.den.ln();
    for n in 0..BRANCHES {
        let b = branch(state.lambda, state.xi[n], j, n + 1)?;
        w -= 0.5 * film.mu[n + 1] * j * b.den.ln();
    }
    Ok(w)
}

/// True in-plane stresses, Pa.
pub fn stress(state: &FilmState, film: &FilmParams) -> Result<StretchPair, MaterialError> {
    check_positive(state)?;
    let mut s = equilibrium_stress(state.lambda, film)?;
    for n in 0..BRANCHES {
        let b = branch(state.lambda, state.xi[n], film.gent_j, n + 1)?;
        let m = film.mu[n + 1] / b.den;
        s.lambda1 += m * b.dev.lambda1;
        s.lambda2 += m * b.dev.lambda2;
    }
    Ok(s)
}

/// Stress carried by the equilibrium spring alone.
pub fn equilibrium_stress(lambda: StretchPair, film: &FilmParams) -> Result<StretchPair, MaterialError> {
    let b = branch(lambda, StretchPair::ONE, film.gent_j, 0)?;
    let m = film.mu[0] / b.den;
    Ok(StretchPair::new(m * b.dev.lambda1, m * b.dev.lambda2))
}

/// `d ln ξ / dt` of each sub-chain, 1/s. The sub-chain modulus cancels
/// against the dashpot viscosity `η = μ τ`.
pub fn log_rate(state: &FilmState, film: &FilmParams) -> Result<[StretchPair; BRANCHES], MaterialError> {
    let mut out = [StretchPair::default(); BRANCHES];
    for n in 0..BRANCHES {
        let b = branch(state.lambda, state.xi[n], film.gent_j, n + 1)?;
        let k = 1.0 / (3.0 * film.tau[n] * b.den);
        out[n] = StretchPair::new(
            k * (b.dev.lambda1 - 0.5 * b.dev.lambda2),
            k * (b.dev.lambda2 - 0.5 * b.dev.lambda1),
        );
    }
    Ok(out)
}

/// `dξ/dt` of each sub-chain, 1/s.
pub fn internal_state_rate(state: &FilmState, film: &FilmParams) -> Result<[StretchPair; BRANCHES], MaterialError> {
    check_positive(state)?;
    let r = log_rate(state, film)?;
    Ok(std::array::from_fn(|n| {
        StretchPair::new(r[n].lambda1 * state.xi[n].lambda1, r[n].lambda2 * state.xi[n].lambda2)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn single_spring(mu1: f64, j: f64) -> FilmParams {
        let mut f = FilmParams::synthetic_default();
        f.mu = [mu1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        f.gent_j = j;
        f
    }

    #[test]
    fn undeformed_film_is_stress_free() {
        let film = FilmParams::synthetic_default();
        let s = FilmState::relaxed(StretchPair::ONE);
        assert_eq!(free_energy(&s, &film).unwrap(), 0.0);
        assert_eq!(stress(&s, &film).unwrap(), StretchPair::new(0.0, 0.0));
        assert!(internal_state_rate(&s, &film).unwrap().iter().all(|r| *r == StretchPair::new(0.0, 0.0)));
    }

    #[test]
    fn relaxed_sub_chains_leave_only_the_equilibrium_term() {
        let film = FilmParams::synthetic_default();
        let s = FilmState::relaxed(StretchPair::new(1.2, 1.2));
        let w = free_energy(&s, &film).unwrap();
        let i1 = 2.0 * 1.44 + 1.2f64.powi(-4);
        let expected = -0.5 * film.mu[0] * film.gent_j * (1.0 - (i1 - 3.0) / film.gent_j).ln();
        assert_relative_eq!(w, expected, max_relative = 1e-14);
        for r in internal_state_rate(&s, &film).unwrap() {
            assert!(r.lambda1.abs() < 1e-15 && r.lambda2.abs() < 1e-15);
        }
    }

    #[test]
    fn equal_biaxial_single_spring() {
        let film = single_spring(50e3, 120.0);
        let l: f64 = 1.2;
        let s = stress(&FilmState::relaxed(StretchPair::new(l, l)), &film).unwrap();
        let expected = 50e3 * (l * l - l.powi(-4)) / (1.0 - (2.0 * l * l + l.powi(-4) - 3.0) / 120.0);
        assert_relative_eq!(s.lambda1, expected, max_relative = 1e-13);
        assert_relative_eq!(s.lambda2, expected, max_relative = 1e-13);
    }

    #[test]
    fn gent_limit_is_an_error() {
        let film = single_spring(50e3, 2.0);
        let s = FilmState::relaxed(StretchPair::new(2.5, 1.0));
        let err = stress(&s, &film).unwrap_err();
        assert!(matches!(err, MaterialError::GentLimit { branch: 0, .. }));
    }

    fn state_strategy() -> impl Strategy<Value = FilmState> {
        (0.8f64..2.0, 0.8f64..2.0, prop::array::uniform6((0.85f64..1.15, 0.85f64..1.15))).prop_map(|(l1, l2, r)| {
            let lambda = StretchPair::new(l1, l2);
            FilmState { lambda, xi: r.map(|(a, b)| StretchPair::new(l1 * a, l2 * b)) }
        })
    }

    proptest! {
        #[test]
        fn index_symmetry(s in state_strategy()) {
            let film = FilmParams::synthetic_default();
            let a = stress(&s, &film).unwrap();
            let b = stress(&s.swapped(), &film).unwrap();
            prop_assert_eq!(a.swapped(), b);
            let ra = internal_state_rate(&s, &film).unwrap();
            let rb = internal_state_rate(&s.swapped(), &film).unwrap();
            for n in 0..BRANCHES {
                prop_assert_eq!(ra[n].swapped(), rb[n]);
            }
        }

        #[test]
        fn degenerate_network_is_single_spring(s in state_strategy()) {
            let film = single_spring(80e3, 60.0);
            let relaxed = FilmState::relaxed(s.lambda);
            prop_assert_eq!(stress(&s, &film).unwrap(), stress(&relaxed, &film).unwrap());
            prop_assert_eq!(free_energy(&s, &film).unwrap(), free_energy(&relaxed, &film).unwrap());
        }

        #[test]
        fn energy_is_non_negative(s in state_strategy()) {
            let film = FilmParams::synthetic_default();
            prop_assert!(free_energy(&s, &film).unwrap() >= 0.0);
        }
    }
}
