//! Behaviors `p(a,b|x,y)`, the local polytope spanned by deterministic
//! strategies, trace distance to that polytope, and Bell functionals.

mod behavior;
mod distance;
mod functionals;
mod strategies;

use std::fmt;

use thiserror::Error;

use crate::lp::LpError;

pub use behavior::{Behavior, Party, SignallingViolation, NORMALIZATION_TOL};
pub use distance::{is_local, trace_distance_to_local, LocalityReport, DEFAULT_LOCALITY_TOL};
pub use functionals::{
    bell_value, cglmp3_functional, cglmp_optimal_settings, chsh_any_functional, chsh_functional,
    functional_by_name, i3322_cg_functional, i3322_functional, BellFunctional, FunctionalForm, FUNCTIONAL_NAMES,
};
pub use strategies::{enumerate_strategies, LocalPolytope, MAX_STRATEGIES};

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("scenario mismatch: expected {expected}, got {found}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },
    #[error("invalid behavior: {0}")]
    Behavior(String),
    #[error("{count} deterministic strategies exceed the limit of {limit}")]
    Capacity { count: u128, limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown Bell functional '{0}'")]
    UnknownFunctional(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("linear program ended with status {0:?}")]
    LpStatus(crate::lp::LpStatus),
}

/// Input and outcome counts of a bipartite Bell scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub n_x: usize,
    pub n_y: usize,
    pub n_a: usize,
    pub n_b: usize,
}

impl Scenario {
    pub fn new(n_x: usize, n_y: usize, n_a: usize, n_b: usize) -> Result<Self, PolytopeError> {
        if n_x < 1 || n_y < 1 {
            return Err(PolytopeError::Scenario("each party needs at least one input".into()));
        }
        if n_a < 2 || n_b < 2 {
            return Err(PolytopeError::Scenario("each measurement needs at least two outcomes".into()));
        }
        Ok(Self { n_x, n_y, n_a, n_b })
    }

    /// Same number of inputs and of outcomes for both parties.
    pub fn symmetric(inputs: usize, outcomes: usize) -> Result<Self, PolytopeError> {
        Self::new(inputs, inputs, outcomes, outcomes)
    }

    /// Number of entries `p(a,b|x,y)`.
    pub fn len(&self) -> usize {
        self.n_x * self.n_y * self.n_a * self.n_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contexts(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Flat position of `(x, y, a, b)`; `b` varies fastest.
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.n_y + y) * self.n_a + a) * self.n_b + b
    }

    /// `n_a^n_x * n_b^n_y`, or `None` on overflow.
    pub fn strategy_count(&self) -> Option<u128> {
        let alice = (self.n_a as u128).checked_pow(u32::try_from(self.n_x).ok()?)?;
        let bob = (self.n_b as u128).checked_pow(u32::try_from(self.n_y).ok()?)?;
        alice.checked_mul(bob)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x={}, y={}, a={}, b={})", self.n_x, self.n_y, self.n_a, self.n_b)
    }
}
