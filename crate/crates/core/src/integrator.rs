//! Fixed-step classical RK4 sweeps on a uniform grid.
//!
//! States are integrated forward from `t0`, costates backward from
//! `t_final`. Gridded inputs (controls, and stored states for the backward
//! sweep) are sampled at RK4 substage times by piecewise-linear
//! interpolation between nodes.

use crate::error::{Error, Result};
use crate::model::{
    adjoint_field, running_cost, state_field, AdjointVec, ControlPair, ModelParams, StateVec,
};

/// Uniform grid of `n_steps + 1` nodes on `[t0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_final: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_final: f64, n_steps: usize) -> Result<Self> {
        let grid = TimeGrid {
            t0,
            t_final,
            n_steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() || !self.t_final.is_finite() || self.t_final <= self.t0 {
            return Err(Error::invalid(
                "grid",
                format!("need t_final > t0, got [{}, {}]", self.t0, self.t_final),
            ));
        }
        if self.n_steps < 2 {
            return Err(Error::invalid(
                "n_steps",
                format!("need at least 2 intervals, got {}", self.n_steps),
            ));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.t_final - self.t0) / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of node `k`.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_final
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }
}

/// States, optional costates and controls on every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<StateVec>,
    pub adjoints: Option<Vec<AdjointVec>>,
    pub controls: Vec<ControlPair>,
}

impl Trajectory {
    pub fn check_lengths(&self) -> Result<()> {
        let n = self.grid.len();
        let adj = self.adjoints.as_ref().map_or(n, Vec::len);
        if self.states.len() != n || self.controls.len() != n || adj != n {
            return Err(Error::Domain(format!(
                "trajectory arrays must have {n} nodes, got states={} controls={} adjoints={adj}",
                self.states.len(),
                self.controls.len()
            )));
        }
        Ok(())
    }

    pub fn terminal_state(&self) -> StateVec {
        *self.states.last().expect("trajectory has at least 3 nodes")
    }
}

/// Linear interpolation of a node series at time `t`. Exact at nodes.
pub fn sample_piecewise_linear<const D: usize>(
    values: &[[f64; D]],
    grid: &TimeGrid,
    t: f64,
) -> Result<[f64; D]> {
    if values.len() != grid.len() {
        return Err(Error::Domain(format!(
            "series has {} nodes, grid has {}",
            values.len(),
            grid.len()
        )));
    }
    let span = grid.t_final - grid.t0;
    let slack = 1e-12 * span;
    if !(t >= grid.t0 - slack && t <= grid.t_final + slack) {
        return Err(Error::Domain(format!(
            "t = {t} outside grid [{}, {}]",
            grid.t0, grid.t_final
        )));
    }
    let pos = ((t - grid.t0) / grid.step()).clamp(0.0, grid.n_steps as f64);
    let nearest = pos.round();
    if (pos - nearest).abs() <= 1e-9 {
        return Ok(values[nearest as usize]);
    }
    let k = (pos.floor() as usize).min(grid.n_steps - 1);
    let w = pos - k as f64;
    let (a, b) = (&values[k], &values[k + 1]);
    Ok(std::array::from_fn(|d| a[d] + w * (b[d] - a[d])))
}

/// One classical RK4 step of `y' = f(t, y)` from `t` with step `h`
/// (negative `h` steps backward).
pub fn rk4_step<const D: usize, F>(mut f: F, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let axpy = |y: &[f64; D], a: f64, k: &[f64; D]| -> [f64; D] {
        std::array::from_fn(|d| y[d] + a * k[d])
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    std::array::from_fn(|d| y[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
}

fn check_controls(controls: &[ControlPair], grid: &TimeGrid) -> Result<Vec<[f64; 2]>> {
    if controls.len() != grid.len() {
        return Err(Error::Domain(format!(
            "control series has {} nodes, grid has {}",
            controls.len(),
            grid.len()
        )));
    }
    if let Some(k) = controls.iter().position(|u| !u.is_admissible()) {
        return Err(Error::Domain(format!(
            "control at node {k} outside [0, 1]: {:?}",
            controls[k]
        )));
    }
    Ok(controls.iter().map(|u| u.to_array()).collect())
}

/// Integrates the state system forward from `x0` under gridded controls.
pub fn rk4_forward(
    x0: StateVec,
    controls: &[ControlPair],
    p: &ModelParams,
    grid: &TimeGrid,
) -> Result<Vec<StateVec>> {
    grid.validate()?;
    if !x0.is_finite() {
        return Err(Error::Domain(format!("non-finite initial state {x0:?}")));
    }
    let u_series = check_controls(controls, grid)?;
    let h = grid.step();

    let mut out = Vec::with_capacity(grid.len());
    let mut x = x0.to_array();
    out.push(x0);
    for k in 0..grid.n_steps {
        let t = grid.node(k);
        let mut sample_err = None;
        x = rk4_step(
            |tau, y| match sample_piecewise_linear(&u_series, grid, tau) {
                Ok(u) => state_field(y, ControlPair::from_array(u), p),
                Err(e) => {
                    sample_err.get_or_insert(e);
                    [f64::NAN; 5]
                }
            },
            t,
            &x,
            h,
        );
        if let Some(e) = sample_err {
            return Err(e);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                sweep: "forward",
                node: k + 1,
                t: grid.node(k + 1),
            });
        }
        out.push(StateVec::from_array(x));
    }
    Ok(out)
}

/// Integrates the costate system backward from `lam_t` at `t_final`,
/// using the stored forward states and the gridded controls.
pub fn rk4_backward(
    lam_t: AdjointVec,
    states: &[StateVec],
    controls: &[ControlPair],
    p: &ModelParams,
    grid: &TimeGrid,
) -> Result<Vec<AdjointVec>> {
    grid.validate()?;
    if !lam_t.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite terminal costate {lam_t:?}"
        )));
    }
    if states.len() != grid.len() {
        return Err(Error::Domain(format!(
            "state series has {} nodes, grid has {}",
            states.len(),
            grid.len()
        )));
    }
    let u_series = check_controls(controls, grid)?;
    let x_series: Vec<[f64; 5]> = states.iter().map(|x| x.to_array()).collect();
    let h = grid.step();

    let mut out = vec![AdjointVec::ZERO; grid.len()];
    let mut lam = lam_t.to_array();
    out[grid.n_steps] = lam_t;
    for k in (1..=grid.n_steps).rev() {
        let t = grid.node(k);
        let mut sample_err = None;
        lam = rk4_step(
            |tau, y| {
                let sampled = sample_piecewise_linear(&u_series, grid, tau)
                    .and_then(|u| Ok((u, sample_piecewise_linear(&x_series, grid, tau)?)));
                match sampled {
                    Ok((u, x)) => adjoint_field(y, &x, ControlPair::from_array(u), p),
                    Err(e) => {
                        sample_err.get_or_insert(e);
                        [f64::NAN; 5]
                    }
                }
            },
            t,
            &lam,
            -h,
        );
        if let Some(e) = sample_err {
            return Err(e);
        }
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(Error::Blowup {
                sweep: "backward",
                node: k - 1,
                t: grid.node(k - 1),
            });
        }
        out[k - 1] = AdjointVec::from_array(lam);
    }
    Ok(out)
}

/// Composite trapezoidal rule for node values with uniform spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Objective value of a trajectory: trapezoid of the running cost over the grid.
pub fn quadrature_cost(traj: &Trajectory, p: &ModelParams) -> Result<f64> {
    if traj.states.len() != traj.grid.len() || traj.controls.len() != traj.grid.len() {
        return Err(Error::Domain(format!(
            "trajectory arrays must have {} nodes, got states={} controls={}",
            traj.grid.len(),
            traj.states.len(),
            traj.controls.len()
        )));
    }
    let costs: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.controls)
        .map(|(x, u)| running_cost(x, *u, p))
        .collect();
    Ok(trapezoid(&costs, traj.grid.step()))
}
