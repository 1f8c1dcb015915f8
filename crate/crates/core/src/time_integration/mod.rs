//! Time stepping for the semidiscrete problem: explicit Euler and IMEX on
//! the finite-difference grid, and RK4 on the spectral Galerkin system.

mod galerkin;
mod run;
mod stepper;

pub use galerkin::{galerkin_rhs, galerkin_run, GalerkinSystem, SpectralState};
pub use run::{evolve, run_to_time, uniform_sample_times, RecordOptions};
pub use stepper::{explicit_dt_limit, step_explicit, step_imex, ImexSolve};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Imex,
    Rk4Spectral,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit-euler",
            Scheme::Imex => "imex",
            Scheme::Rk4Spectral => "rk4-spectral",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "explicit-euler" => Some(Scheme::ExplicitEuler),
            "imex" => Some(Scheme::Imex),
            "rk4-spectral" => Some(Scheme::Rk4Spectral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Upper bound on the step; explicit runs may shrink it further.
    pub dt_initial: f64,
    /// Fraction of the explicit stability limit actually used, in (0, 1].
    pub dt_safety: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Optional flux regularization ε (0 = off).
    pub epsilon: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ExplicitEuler,
            dt_initial: 1e-3,
            dt_safety: 0.9,
            max_steps: 10_000_000,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            epsilon: 0.0,
        }
    }
}

impl StepperConfig {
    pub fn explicit(dt: f64) -> Self {
        Self {
            dt_initial: dt,
            ..Self::default()
        }
    }

    pub fn imex(dt: f64) -> Self {
        Self {
            scheme: Scheme::Imex,
            dt_initial: dt,
            ..Self::default()
        }
    }

    pub fn rk4(dt: f64) -> Self {
        Self {
            scheme: Scheme::Rk4Spectral,
            dt_initial: dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_initial.is_finite() && self.dt_initial > 0.0) {
            return Err(Error::invalid("dt", "dt must be finite and > 0"));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::invalid("safety", "safety must lie in (0, 1]"));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::invalid("newton_tol", "must be > 0"));
        }
        if self.newton_max_iter == 0 || self.max_steps == 0 {
            return Err(Error::invalid(
                "newton_max_iter",
                "iteration limits must be ≥ 1",
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "must be ≥ 0"));
        }
        Ok(())
    }
}
