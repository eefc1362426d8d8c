//! Distributed successive concave approximation for the multi-cell
//! wideband problem: per-BS precoders, varactor capacitances and switch
//! matrices, coordinated through pricing.

mod algorithm;
mod pricing;
mod state;
mod update;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use algorithm::{run_algorithm1, SolverOutcome, TraceRow};
pub use pricing::{
    capacitance_gradients, pricing_precoder, surrogate_coeffs, switch_gradients, PricingBundle,
};
pub use state::{initial_state, Snapshot, SolverState};
pub use update::{
    step_size, update_capacitances, update_precoder, update_switch, PrecoderBlock,
    PrecoderSubproblem, PrecoderUpdate,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Proximal weight.
    pub tau: f64,
    /// Relative objective change that stops the iteration. `f64::INFINITY`
    /// stops after one update.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Step-size recursion constants `a(t) = a`, `b(t) = b t`.
    pub step_a: f64,
    pub step_b: f64,
    /// Exchange prices between cells.
    pub cooperative: bool,
    /// Optimise the switch matrices; when false every surface stays diagonal.
    pub beyond_diagonal: bool,
    pub bisection_tolerance: f64,
    /// Unit (farads) in which capacitances are optimised.
    pub capacitance_unit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau: 0.02,
            epsilon: 1e-4,
            max_iterations: 100,
            step_a: 0.9,
            step_b: 0.95,
            cooperative: true,
            beyond_diagonal: true,
            bisection_tolerance: 1e-9,
            capacitance_unit: 1e-12,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::config("solver.tau", "must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("solver.epsilon", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("solver.max_iterations", "must be positive"));
        }
        if !(self.step_a.is_finite() && self.step_a >= 0.0) {
            return Err(Error::config("solver.step_a", "must be non-negative"));
        }
        if !(self.step_b.is_finite() && self.step_b >= 0.0) {
            return Err(Error::config("solver.step_b", "must be non-negative"));
        }
        if !(self.bisection_tolerance > 0.0 && self.bisection_tolerance < 1.0) {
            return Err(Error::config(
                "solver.bisection_tolerance",
                "must lie in (0, 1)",
            ));
        }
        if !(self.capacitance_unit.is_finite() && self.capacitance_unit > 0.0) {
            return Err(Error::config("solver.capacitance_unit", "must be positive"));
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.cooperative = mode.cooperative;
        self.beyond_diagonal = mode.beyond_diagonal;
        self
    }
}

/// One of the four compared solver variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Mode {
    pub cooperative: bool,
    pub beyond_diagonal: bool,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::new(true, true),
        Mode::new(true, false),
        Mode::new(false, true),
        Mode::new(false, false),
    ];

    pub const fn new(cooperative: bool, beyond_diagonal: bool) -> Self {
        Self {
            cooperative,
            beyond_diagonal,
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.cooperative, self.beyond_diagonal) {
            (true, true) => "coop-bd",
            (true, false) => "coop-diag",
            (false, true) => "noncoop-bd",
            (false, false) => "noncoop-diag",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config("experiment.modes", format!("unknown mode `{s}`")))
    }
}

impl TryFrom<String> for Mode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Mode> for String {
    fn from(m: Mode) -> String {
        m.name().to_string()
    }
}
