//! Forward-backward sweep iteration.
//!
//! Each iteration integrates the states forward under the current controls,
//! the costates backward from a zero terminal value, characterizes the
//! pointwise optimal controls, and relaxes toward them with a convex
//! combination. The iteration stops when controls and states both stop
//! moving.

use std::thread;

use crate::error::{Error, Result};
use crate::integrator::{quadrature_cost, rk4_backward, rk4_forward, TimeGrid, Trajectory};
use crate::model::{
    characterize_controls, AdjointVec, ControlPair, ModelParams, StateVec, StrategyMask,
};

pub const DEFAULT_N_STEPS: usize = 5000;
pub const DEFAULT_RELAXATION: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Weight on the previous controls in the convex update, in `[0, 1)`.
    pub relaxation: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub grid: TimeGrid,
}

impl SolverOptions {
    /// Defaults on a grid spanning `[0, horizon]`.
    pub fn with_horizon(horizon: f64) -> Result<Self> {
        Ok(SolverOptions {
            relaxation: DEFAULT_RELAXATION,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            grid: TimeGrid::new(0.0, horizon, DEFAULT_N_STEPS)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.relaxation) {
            return Err(Error::invalid(
                "relaxation",
                format!("must lie in [0, 1), got {}", self.relaxation),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(
                "tol",
                format!("must be > 0, got {}", self.tol),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be >= 1"));
        }
        self.grid.validate()
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions::with_horizon(ModelParams::default().horizon).expect("default grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Smallest compartment value seen on any node. Negative values flag
    /// integration trouble; they are never clamped.
    pub min_state: f64,
    /// Largest `|total - N| / N` over the nodes.
    pub conservation_drift: f64,
}

impl Diagnostics {
    pub fn of(states: &[StateVec], n_total: f64) -> Self {
        let min_state = states
            .iter()
            .map(StateVec::min_component)
            .fold(f64::INFINITY, f64::min);
        let conservation_drift = states
            .iter()
            .map(|x| (x.total() - n_total).abs() / n_total)
            .fold(0.0, f64::max);
        Diagnostics {
            min_state,
            conservation_drift,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub mask: StrategyMask,
    /// States, costates and controls at the final iterate.
    pub trajectory: Trajectory,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `I(T) + L2(T)`.
    pub terminal_infected_plus_latent: f64,
    pub diagnostics: Diagnostics,
}

/// Node-wise `relaxation * prev + (1 - relaxation) * characterized`.
pub fn update_controls(
    prev: &[ControlPair],
    characterized: &[ControlPair],
    relaxation: f64,
) -> Result<Vec<ControlPair>> {
    if prev.len() != characterized.len() {
        return Err(Error::Domain(format!(
            "control series lengths differ: {} vs {}",
            prev.len(),
            characterized.len()
        )));
    }
    if !(0.0..1.0).contains(&relaxation) {
        return Err(Error::Domain(format!(
            "relaxation must lie in [0, 1), got {relaxation}"
        )));
    }
    let keep = 1.0 - relaxation;
    Ok(prev
        .iter()
        .zip(characterized)
        .map(|(a, b)| ControlPair {
            u1: (relaxation * a.u1 + keep * b.u1).clamp(0.0, 1.0),
            u2: (relaxation * a.u2 + keep * b.u2).clamp(0.0, 1.0),
        })
        .collect())
}

// max |new - old| <= tol * max(1, max |new|), inclusive.
fn channel_converged<I>(pairs: I, tol: f64) -> bool
where
    I: Iterator<Item = (f64, f64)>,
{
    let (change, scale) = pairs.fold((0.0f64, 0.0f64), |(c, s), (old, new)| {
        (c.max((new - old).abs()), s.max(new.abs()))
    });
    change <= tol * scale.max(1.0)
}

/// Convergence test on every control and state channel separately.
pub fn has_converged(
    prev_controls: &[ControlPair],
    new_controls: &[ControlPair],
    prev_states: &[StateVec],
    new_states: &[StateVec],
    tol: f64,
) -> bool {
    if prev_controls.len() != new_controls.len() || prev_states.len() != new_states.len() {
        return false;
    }
    let controls_ok = (0..2).all(|c| {
        channel_converged(
            prev_controls
                .iter()
                .zip(new_controls)
                .map(|(a, b)| (a.to_array()[c], b.to_array()[c])),
            tol,
        )
    });
    controls_ok
        && (0..5).all(|c| {
            channel_converged(
                prev_states
                    .iter()
                    .zip(new_states)
                    .map(|(a, b)| (a.to_array()[c], b.to_array()[c])),
                tol,
            )
        })
}

/// Result of one forward sweep, backward sweep and characterization.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub states: Vec<StateVec>,
    pub adjoints: Vec<AdjointVec>,
    pub characterized: Vec<ControlPair>,
}

/// Runs one forward sweep, one backward sweep and the node-wise control
/// characterization for the given controls.
pub fn sweep(
    x0: StateVec,
    controls: &[ControlPair],
    p: &ModelParams,
    mask: StrategyMask,
    grid: &TimeGrid,
) -> Result<Sweep> {
    let states = rk4_forward(x0, controls, p, grid)?;
    let adjoints = rk4_backward(AdjointVec::ZERO, &states, controls, p, grid)?;
    let characterized = states
        .iter()
        .zip(&adjoints)
        .map(|(x, lam)| characterize_controls(x, lam, p, mask))
        .collect();
    Ok(Sweep {
        states,
        adjoints,
        characterized,
    })
}

fn validate_inputs(x0: &StateVec, p: &ModelParams, opts: &SolverOptions) -> Result<()> {
    p.validate()?;
    opts.validate()?;
    if x0.to_array().iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(
            "initial",
            format!("compartments must be finite and >= 0, got {x0:?}"),
        ));
    }
    if (x0.total() - p.n_total).abs() > 1e-9 * p.n_total {
        return Err(Error::invalid(
            "initial",
            format!(
                "compartments must sum to n_total = {} (conservation), got {}",
                p.n_total,
                x0.total()
            ),
        ));
    }
    if (opts.grid.t_final - opts.grid.t0 - p.horizon).abs() > 1e-12 * p.horizon {
        return Err(Error::invalid(
            "grid",
            format!(
                "grid spans [{}, {}] but horizon is {}",
                opts.grid.t0, opts.grid.t_final, p.horizon
            ),
        ));
    }
    Ok(())
}

/// Solves the optimal control problem for one strategy.
///
/// Starts from all-zero controls. On exit the reported controls are the
/// characterized controls at the last forward states and backward costates,
/// so they satisfy the pointwise optimality condition exactly for the
/// reported trajectory. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn solve(
    x0: StateVec,
    p: &ModelParams,
    mask: StrategyMask,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    validate_inputs(&x0, p, opts)?;
    let grid = opts.grid;
    let mut controls = vec![ControlPair::ZERO; grid.len()];

    if mask.is_uncontrolled() {
        let s = sweep(x0, &controls, p, mask, &grid)?;
        return finish(s, mask, p, grid, 1, true);
    }

    let mut prev_states: Option<Vec<StateVec>> = None;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let s = sweep(x0, &controls, p, mask, &grid)?;
        let updated = update_controls(&controls, &s.characterized, opts.relaxation)?;
        let converged = prev_states
            .as_deref()
            .is_some_and(|prev| has_converged(&controls, &updated, prev, &s.states, opts.tol));
        if converged || iterations >= opts.max_iters {
            return finish(s, mask, p, grid, iterations, converged);
        }
        controls = updated;
        prev_states = Some(s.states);
    }
}

fn finish(
    s: Sweep,
    mask: StrategyMask,
    p: &ModelParams,
    grid: TimeGrid,
    iterations: usize,
    converged: bool,
) -> Result<SolveReport> {
    let diagnostics = Diagnostics::of(&s.states, p.n_total);
    let trajectory = Trajectory {
        grid,
        states: s.states,
        adjoints: Some(s.adjoints),
        controls: s.characterized,
    };
    let objective = quadrature_cost(&trajectory, p)?;
    let end = trajectory.terminal_state();
    Ok(SolveReport {
        mask,
        objective,
        iterations,
        converged,
        terminal_infected_plus_latent: end.i + end.l2,
        diagnostics,
        trajectory,
    })
}

/// One row of a strategy comparison.
#[derive(Debug)]
pub struct StrategyRow {
    pub mask: StrategyMask,
    pub outcome: Result<SolveReport>,
}

impl StrategyRow {
    pub fn label(&self) -> &'static str {
        self.mask.label()
    }
}

/// Row order of the comparison table: strategies 1, 2, 3, then the
/// uncontrolled baseline.
pub const COMPARISON_ORDER: [StrategyMask; 4] = [
    StrategyMask::STRATEGY_1,
    StrategyMask::STRATEGY_2,
    StrategyMask::STRATEGY_3,
    StrategyMask::UNCONTROLLED,
];

/// Solves all four strategies on the same grid, in parallel. Row order is
/// fixed by [`COMPARISON_ORDER`] and results do not depend on scheduling.
pub fn compare_strategies(x0: StateVec, p: &ModelParams, opts: &SolverOptions) -> Vec<StrategyRow> {
    thread::scope(|scope| {
        let handles: Vec<_> = COMPARISON_ORDER
            .iter()
            .map(|&mask| (mask, scope.spawn(move || solve(x0, p, mask, opts))))
            .collect();
        handles
            .into_iter()
            .map(|(mask, handle)| StrategyRow {
                mask,
                outcome: handle
                    .join()
                    .unwrap_or_else(|_| Err(Error::Domain("solver thread panicked".into()))),
            })
            .collect()
    })
}

/// Same as [`compare_strategies`] but on the calling thread.
pub fn compare_strategies_serial(
    x0: StateVec,
    p: &ModelParams,
    opts: &SolverOptions,
) -> Vec<StrategyRow> {
    COMPARISON_ORDER
        .iter()
        .map(|&mask| StrategyRow {
            mask,
            outcome: solve(x0, p, mask, opts),
        })
        .collect()
}
