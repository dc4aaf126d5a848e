//! Film constitutive model: Gent hyperelastic equilibrium spring in parallel
//! with six Gent spring-dashpot sub-chains, pre-tension design relations and
//! time integration of the dashpot stretches.

mod gent;
mod integrate;
mod pretension;

pub use gent::{equilibrium_stress, free_energy, internal_state_rate, log_rate, stress};
pub use integrate::{advance_state, default_substeps};
pub use pretension::{design_film_dims, pretension_residual, solve_pretension, PretensionDesign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of spring-dashpot sub-chains.
pub const BRANCHES: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaterialError {
    /// `branch` 0 is the equilibrium spring, 1..=6 the sub-chains.
    #[error("Gent limit reached in branch {branch} ((I1-3)/J = {ratio:.9}){}", time_suffix(*.time))]
    GentLimit { branch: usize, ratio: f64, time: Option<f64> },
    #[error("no pre-tension root: {0}")]
    NoRoot(String),
    #[error("integration step unstable at t = {time:.6} s (|d ln xi| = {delta:.3})")]
    StepUnstable { time: f64, delta: f64 },
    #[error("invalid film parameters: {0}")]
    InvalidParams(String),
}

fn time_suffix(t: Option<f64>) -> String {
    t.map(|t| format!(" at t = {t:.6} s")).unwrap_or_default()
}

impl MaterialError {
    pub fn name(&self) -> &'static str {
        match self {
            MaterialError::GentLimit { .. } => "GentLimit",
            MaterialError::NoRoot(_) => "NoRoot",
            MaterialError::StepUnstable { .. } => "StepUnstable",
            MaterialError::InvalidParams(_) => "InvalidParams",
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            MaterialError::GentLimit { branch, ratio, time: None } => {
                MaterialError::GentLimit { branch, ratio, time: Some(t) }
            }
            other => other,
        }
    }
}

/// In-plane principal stretches (or any pair indexed like them).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StretchPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl StretchPair {
    pub const ONE: Self = Self { lambda1: 1.0, lambda2: 1.0 };

    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn swapped(self) -> Self {
        Self::new(self.lambda2, self.lambda1)
    }

    pub fn lerp(self, other: Self, s: f64) -> Self {
        Self::new(
            self.lambda1 + s * (other.lambda1 - self.lambda1),
            self.lambda2 + s * (other.lambda2 - self.lambda2),
        )
    }
}

/// Dielectric film parameters. Lengths are the undeformed film dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Permittivity, F/m.
    pub eps: f64,
    /// Gent extensibility limit, shared by all branches.
    pub gent_j: f64,
    /// `mu[0]` is the equilibrium spring, `mu[1..]` the sub-chain springs, Pa.
    pub mu: [f64; 7],
    /// Relaxation time of each sub-chain, s.
    pub tau: [f64; BRANCHES],
}

impl FilmParams {
    /// Synthetic parameter set: film dimensions of the prototype, material
    /// constants invented to span six decades of relaxation time. Not fitted
    /// to any measurement.
    pub fn synthetic_default() -> Self {
        let mut mu = [0.0; 7];
        mu[0] = 150e3;
        for n in 1..7 {
            mu[n] = 60e3 * 0.6f64.powi(n as i32 - 1);
        }
        Self {
            l1: 62.9e-3,
            l2: 41.5e-3,
            l3: 0.085e-3,
            eps: 2.8 * crate::EPSILON_0,
            gent_j: 100.0,
            mu,
            tau: [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |what: &str, v: f64| Err(MaterialError::InvalidParams(format!("{what} = {v}")));
        for (n, v) in [("L1", self.l1), ("L2", self.l2), ("L3", self.l3), ("eps", self.eps), ("J", self.gent_j)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(n, v);
            }
        }
        for (i, &m) in self.mu.iter().enumerate() {
            if !(m.is_finite() && m >= 0.0) {
                return bad(&format!("mu{}", i + 1), m);
            }
        }
        for (i, &t) in self.tau.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return bad(&format!("tau{}", i + 1), t);
            }
        }
        Ok(())
    }

    /// Undeformed film volume.
    pub fn volume(&self) -> f64 {
        self.l1 * self.l2 * self.l3
    }

    pub fn min_tau(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_tau(&self) -> f64 {
        self.tau.iter().copied().fold(0.0, f64::max)
    }
}

impl Default for FilmParams {
    fn default() -> Self {
        Self::synthetic_default()
    }
}

/// Stretches of the film and dashpot stretches of the six sub-chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmState {
    pub lambda: StretchPair,
    pub xi: [StretchPair; BRANCHES],
}

impl FilmState {
    /// Fully relaxed state: every dashpot stretch equals the film stretch.
    pub fn relaxed(lambda: StretchPair) -> Self {
        Self { lambda, xi: [lambda; BRANCHES] }
    }

    /// Copy with lambda and xi components swapped.
    pub fn swapped(&self) -> Self {
        Self { lambda: self.lambda.swapped(), xi: self.xi.map(StretchPair::swapped) }
    }
}
