//! Optimal treatment control for a five-compartment tuberculosis model.
//!
//! The model tracks susceptible, early latent, infectious, persistent latent
//! and treated individuals under two bounded controls: effort keeping active
//! cases on treatment, and treatment of persistent latents. The solver
//! minimizes the time-integrated infectious plus persistent-latent load plus
//! quadratic control costs with the forward-backward sweep method, using
//! fixed-step RK4 for both the state and costate systems.
//!
//! ```no_run
//! use tbopt::{solve, InitialCase, ModelParams, SolverOptions, StrategyMask};
//!
//! let p = ModelParams::default();
//! let x0 = InitialCase::Case1.initial(p.n_total);
//! let report = solve(x0, &p, StrategyMask::STRATEGY_3, &SolverOptions::default())?;
//! println!("J = {:.1}, I(T)+L2(T) = {:.0}", report.objective, report.terminal_infected_plus_latent);
//! # Ok::<(), tbopt::Error>(())
//! ```

pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use integrator::{
    quadrature_cost, rk4_backward, rk4_forward, rk4_step, sample_piecewise_linear, trapezoid,
    TimeGrid, Trajectory,
};
pub use model::{
    adjoint_rhs, basic_reproduction_number, characterize_controls, hamiltonian,
    hamiltonian_control_gradient, running_cost, state_rhs, AdjointVec, ControlPair, ModelParams,
    StateVec, StrategyMask,
};
pub use output::{
    summary_csv, trajectory_csv, write_summary, write_trajectory_csv, SummaryLine, SUMMARY_HEADER,
    TRAJECTORY_HEADER,
};
pub use scenario::{load_scenario, save_scenario, InitialCase, Scenario};
pub use solver::{
    compare_strategies, compare_strategies_serial, has_converged, solve, sweep, update_controls,
    Diagnostics, SolveReport, SolverOptions, StrategyRow, Sweep, COMPARISON_ORDER,
};
