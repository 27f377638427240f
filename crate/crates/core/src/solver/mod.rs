//! Explicit time integration of the ε/δ-regularized system on a walled box.
//!
//! The integrated tuple is `(ρ, m = ρu, e = (ρ+δ)Q(θ), H)`. Velocity and
//! magnetic field vanish on the walls, density and temperature carry
//! homogeneous Neumann data through even ghost values.

mod initial;
pub mod mms;
mod run;
mod scheme;

pub use initial::{mollify_initial_data, ClampBounds, ClampStats, MollifiedInitialData, RawInitialData};
pub use run::{run, CumulativeIntegrals, Frame, RunConfig, Trajectory};
pub use scheme::{
    BudgetRates, EntropyRates, Evaluation, Scheme, Source, StepReport, DEFAULT_SAFETY, ENTROPY_THETA_FLOOR,
};

use crate::constitutive::{ConstitutiveError, ConstitutiveLaw, Renormalizer};
use crate::fieldops::{FieldError, Grid, Parity, ScalarField, VectorField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid scheme parameter: {0}")]
    Parameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violated at t = {time}: {what}")]
    Invariant { time: f64, what: String },
    #[error("numerical failure at t = {time}: {what}")]
    Numerical { time: f64, what: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

impl SolverError {
    pub fn is_invariant(&self) -> bool {
        matches!(self, SolverError::Invariant { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Cfl { safety: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl { safety: DEFAULT_SAFETY }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    /// Exponent of the diagnostic renormalizer `(1+θ)^{-ω}`.
    pub omega: f64,
    pub dt: DtPolicy,
    pub t_end: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams { epsilon: 0.05, delta: 0.1, beta: 4.0, omega: 0.5, dt: DtPolicy::default(), t_end: 0.5 }
    }
}

impl SchemeParams {
    pub fn validate(&self, law: &ConstitutiveLaw) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Parameter(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} violates epsilon > 0", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} violates 0 < delta < 1", self.delta));
        }
        if !(self.beta > law.gamma && self.beta >= 4.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} violates beta > max(gamma, 4) with gamma = {}", self.beta, law.gamma));
        }
        Renormalizer::new(self.omega)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} violates t_end >= 0", self.t_end));
        }
        match self.dt {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => bad(format!("fixed dt = {dt} must be positive")),
            DtPolicy::Cfl { safety } if !(safety > 0.0 && safety <= 1.0) => {
                bad(format!("CFL safety = {safety} must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Primitive fields at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub time: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub theta: ScalarField,
    pub h: VectorField,
}

impl State {
    /// Stamps the boundary parities: even `ρ, θ`, odd `u, H`.
    pub fn new(time: f64, rho: ScalarField, u: VectorField, theta: ScalarField, h: VectorField) -> State {
        let mut s = State { time, rho, u, theta, h };
        s.stamp_parities();
        s
    }

    pub(crate) fn stamp_parities(&mut self) {
        self.rho.parity = [Parity::Even; 3];
        self.theta.parity = [Parity::Even; 3];
        for c in self.u.c.iter_mut().chain(self.h.c.iter_mut()) {
            c.parity = [Parity::Odd; 3];
        }
    }

    /// `(ρ̄, 0, θ̄, 0)`
    pub fn uniform(grid: &Grid, rho: f64, theta: f64) -> State {
        State::new(
            0.0,
            ScalarField::constant(grid, rho),
            VectorField::zeros(grid),
            ScalarField::constant(grid, theta),
            VectorField::zeros(grid),
        )
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<(), SolverError> {
        self.rho.check_grid(grid)?;
        self.u.check_grid(grid)?;
        self.theta.check_grid(grid)?;
        self.h.check_grid(grid)?;
        Ok(())
    }

    /// Names the first non-finite node, if any.
    pub fn first_non_finite(&self, grid: &Grid) -> Option<String> {
        let fields: [(&str, Option<usize>); 4] = [
            ("rho", self.rho.first_non_finite()),
            ("u", self.u.first_non_finite()),
            ("theta", self.theta.first_non_finite()),
            ("H", self.h.first_non_finite()),
        ];
        fields
            .into_iter()
            .find_map(|(name, idx)| idx.map(|i| format!("non-finite {name} at node {:?}", grid.position(i))))
    }

    pub fn momentum(&self) -> VectorField {
        self.u.scaled_by(&self.rho)
    }
}

/// The integrated tuple, also used for its time derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Conserved {
    pub rho: ScalarField,
    pub m: VectorField,
    pub e: ScalarField,
    pub h: VectorField,
}

pub type Rates = Conserved;

impl Conserved {
    pub fn zeros(grid: &Grid) -> Conserved {
        Conserved {
            rho: ScalarField::zeros(grid),
            m: VectorField::zeros(grid),
            e: ScalarField::zeros(grid),
            h: VectorField::zeros(grid),
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Conserved) {
        self.rho.axpy(a, &other.rho);
        self.m.axpy(a, &other.m);
        self.e.axpy(a, &other.e);
        self.h.axpy(a, &other.h);
    }

    pub fn scale(&self, a: f64) -> Conserved {
        Conserved { rho: self.rho.scale(a), m: self.m.scale(a), e: self.e.scale(a), h: self.h.scale(a) }
    }

    pub fn max_abs(&self) -> [f64; 4] {
        [self.rho.max_abs(), self.m.max_abs(), self.e.max_abs(), self.h.max_abs()]
    }
}
