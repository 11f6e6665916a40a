//! Weighted 2-capacity: closed-form test functions and bounds, a grid solver
//! and the pullback experiment for the exponential cusp.

pub mod experiment;
pub mod grid;
pub mod lemmas;

use serde::Serialize;

pub use experiment::{theorem1_experiment, Theorem1Config, Theorem1Row, Theorem1Table, WeightKind};
pub use grid::{annulus_capacity, grid_capacity, Grid, GridSolverConfig, Rect, SolverStats};
pub use lemmas::{
    capala_lower_bound, capala_lower_bound_log, diamarvio_bound, diamarvio_bound_log, lip_dirichlet_energy,
    lip_discrete_energy, lip_test_energy, lip_test_value, log_exp_reciprocal_integral, superpoly_decay_check,
    DecayReport, EnergyModel, LipTestFn, LogBound, DECAY_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CapacityMethod {
    ClosedForm,
    GridSolve,
}

/// Estimate of `cap_w(F, E; D)` with `p = 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    /// `exp(log_value)`; zero once it underflows.
    pub value: f64,
    pub log_value: f64,
    pub method: CapacityMethod,
    pub weight_desc: String,
    pub pair_desc: String,
    pub solver: Option<SolverStats>,
}

impl CapacityEstimate {
    pub fn described(mut self, weight: &str, pair: &str) -> Self {
        self.weight_desc = weight.to_string();
        self.pair_desc = pair.to_string();
        self
    }
}
