//! Shared fixtures for the criterion benches.

use tbopt::{InitialCase, ModelParams, SolverOptions, StateVec, TimeGrid};

/// Case 1 initial state, reference parameters and solver options on an
/// `n_steps` grid.
pub fn case1(n_steps: usize) -> (StateVec, ModelParams, SolverOptions) {
    let p = ModelParams::default();
    let opts = SolverOptions {
        grid: TimeGrid::new(0.0, p.horizon, n_steps).expect("valid grid"),
        ..SolverOptions::default()
    };
    (InitialCase::Case1.initial(p.n_total), p, opts)
}
