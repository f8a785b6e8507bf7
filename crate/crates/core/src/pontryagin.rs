//! Damped forward–backward sweep for the pathwise control problem.
//!
//! For a frozen noise path the dual problem is deterministic. The sweep
//! alternates a forward pass for the state, a backward pass for the adjoint
//! and a pointwise minimisation of the Hamiltonian, relaxing the control
//! update by a damping factor.

use std::str::FromStr;

use crate::hamiltonian::{NoiseGrid, PathwiseContext};
use crate::{Error, Result, Vector};

/// States with a larger sup norm are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e8;

/// Time stepping for the state and adjoint equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "rk4" => Ok(Self::Rk4),
            other => Err(Error::invalid("integrator", format!("expected euler or rk4, got `{other}`"))),
        }
    }
}

/// Quadrature rule for the running-cost integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// `Σ_{i=1}^{N} f(t_i) δt`.
    Right,
    /// `Σ_{i=0}^{N-1} f(t_i) δt`.
    Left,
    Trapezoid,
    /// The cost is integrated as an extra state by the same integrator as
    /// the dynamics (RK4 stages, or left endpoints under Euler).
    Integrator,
}

impl FromStr for Quadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Self::Right),
            "left" => Ok(Self::Left),
            "trapezoid" => Ok(Self::Trapezoid),
            "integrator" => Ok(Self::Integrator),
            other => Err(Error::invalid(
                "quadrature",
                format!("expected right, left, trapezoid or integrator, got `{other}`"),
            )),
        }
    }
}

impl Quadrature {
    /// Node weights `w_i` such that the rule is `Σ w_i f(t_i) δt`.
    /// [`Quadrature::Integrator`] also reports left-endpoint weights here,
    /// which is what it reduces to under Euler stepping.
    pub fn weights(self, n_steps: usize) -> Vec<f64> {
        let mut w = vec![1.0; n_steps + 1];
        match self {
            Quadrature::Right => w[0] = 0.0,
            Quadrature::Left | Quadrature::Integrator => w[n_steps] = 0.0,
            Quadrature::Trapezoid => {
                w[0] = 0.5;
                w[n_steps] = 0.5;
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub max_iter: usize,
    pub damping: f64,
    pub tol: f64,
    pub n_steps: usize,
    pub integrator: Integrator,
    pub quadrature: Quadrature,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            damping: 0.5,
            tol: 1e-6,
            n_steps: 200,
            integrator: Integrator::Euler,
            quadrature: Quadrature::Right,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("eps", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("N_iter", "must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("N_T", "must be positive"));
        }
        Ok(())
    }
}

/// State, adjoint and control on the uniform grid `t_i = i·T/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub horizon: f64,
    pub x: Vec<Vector>,
    pub p: Vec<Vector>,
    pub u: Vec<Vector>,
}

impl Trajectory {
    /// All points at zero except `x[0] = x0`.
    pub fn new(horizon: f64, n_steps: usize, x0: &Vector, control_dim: usize) -> Self {
        let d = x0.len();
        let mut x = vec![Vector::zeros(d); n_steps + 1];
        x[0] = x0.clone();
        Self {
            horizon,
            x,
            p: vec![Vector::zeros(d); n_steps + 1],
            u: vec![Vector::zeros(control_dim); n_steps + 1],
        }
    }

    pub fn n_steps(&self) -> usize {
        self.x.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps() {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }
}

fn check_finite(v: &Vector, iteration: usize, step: usize) -> Result<()> {
    if v.iter().all(|c| c.is_finite() && c.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(Error::DivergedPath { iteration, step })
    }
}

fn midpoint(a: &Vector, b: &Vector) -> Vector {
    (a + b) * 0.5
}

/// Recomputes `traj.x` from `x[0]` under the current controls.
///
/// Euler is the explicit scheme `x_{i+1} = x_i + b̃(t_i, x_i, u_i) δt`; RK4
/// interpolates the control linearly at half steps.
pub fn forward_sweep(ctx: &PathwiseContext, traj: &mut Trajectory, integrator: Integrator, iteration: usize) -> Result<()> {
    let grid = ctx.noise_grid(traj.n_steps())?;
    forward_on_grid(ctx, &grid, traj, integrator, iteration)
}

fn forward_on_grid(
    ctx: &PathwiseContext,
    grid: &NoiseGrid,
    traj: &mut Trajectory,
    integrator: Integrator,
    iteration: usize,
) -> Result<()> {
    let dt = traj.dt();
    for i in 0..traj.n_steps() {
        let x = &traj.x[i];
        let (w0, wm, w1) = (grid.node(i), grid.mid(i), grid.node(i + 1));
        let next = match integrator {
            Integrator::Euler => x + ctx.effective_drift_with(w0, x, &traj.u[i]) * dt,
            Integrator::Rk4 => {
                let um = midpoint(&traj.u[i], &traj.u[i + 1]);
                let k1 = ctx.effective_drift_with(w0, x, &traj.u[i]);
                let k2 = ctx.effective_drift_with(wm, &(x + &k1 * (0.5 * dt)), &um);
                let k3 = ctx.effective_drift_with(wm, &(x + &k2 * (0.5 * dt)), &um);
                let k4 = ctx.effective_drift_with(w1, &(x + &k3 * dt), &traj.u[i + 1]);
                x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            }
        };
        check_finite(&next, iteration, i + 1)?;
        traj.x[i + 1] = next;
    }
    Ok(())
}

/// Recomputes `traj.p` backwards from `p_N = ∇g(x_N)`, with `∂_x H` taken at
/// the stored controls.
pub fn backward_sweep(ctx: &PathwiseContext, traj: &mut Trajectory, integrator: Integrator, iteration: usize) -> Result<()> {
    let grid = ctx.noise_grid(traj.n_steps())?;
    backward_on_grid(ctx, &grid, traj, integrator, iteration)
}

fn backward_on_grid(
    ctx: &PathwiseContext,
    grid: &NoiseGrid,
    traj: &mut Trajectory,
    integrator: Integrator,
    iteration: usize,
) -> Result<()> {
    let n = traj.n_steps();
    let dt = traj.dt();
    let terminal = ctx.problem().terminal_grad(&traj.x[n]);
    check_finite(&terminal, iteration, n)?;
    traj.p[n] = terminal;
    for i in (0..n).rev() {
        let (t0, t1) = (traj.time(i), traj.time(i + 1));
        let p = &traj.p[i + 1];
        let (w0, wm, w1) = (grid.node(i), grid.mid(i), grid.node(i + 1));
        let k1 = ctx.hamiltonian_grad_x_with(t1, w1, &traj.x[i + 1], &traj.u[i + 1], p);
        let prev = match integrator {
            Integrator::Euler => p + k1 * dt,
            Integrator::Rk4 => {
                let tm = 0.5 * (t0 + t1);
                let xm = midpoint(&traj.x[i], &traj.x[i + 1]);
                let um = midpoint(&traj.u[i], &traj.u[i + 1]);
                let k2 = ctx.hamiltonian_grad_x_with(tm, wm, &xm, &um, &(p + &k1 * (0.5 * dt)));
                let k3 = ctx.hamiltonian_grad_x_with(tm, wm, &xm, &um, &(p + &k2 * (0.5 * dt)));
                let k4 = ctx.hamiltonian_grad_x_with(t0, w0, &traj.x[i], &traj.u[i], &(p + &k3 * dt));
                p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            }
        };
        check_finite(&prev, iteration, i)?;
        traj.p[i] = prev;
    }
    Ok(())
}

/// `∫ r̃ dt + g(x_N)` along the trajectory.
///
/// The node rules use `Σ w_i r̃(t_i, x_i, u_i) δt`. The integrator rule
/// re-runs the stages of `integrator` from each stored `x_i`, so under RK4 the
/// cost is accurate to the same order as the state.
pub fn pathwise_value(ctx: &PathwiseContext, traj: &Trajectory, quadrature: Quadrature, integrator: Integrator) -> Result<f64> {
    let grid = ctx.noise_grid(traj.n_steps())?;
    Ok(value_on_grid(ctx, &grid, traj, quadrature, integrator))
}

fn value_on_grid(ctx: &PathwiseContext, grid: &NoiseGrid, traj: &Trajectory, quadrature: Quadrature, integrator: Integrator) -> f64 {
    let n = traj.n_steps();
    let dt = traj.dt();
    let cost = |i: usize| ctx.effective_cost_with(traj.time(i), grid.node(i), &traj.x[i], &traj.u[i]);
    let mut integral = 0.0;
    if quadrature == Quadrature::Integrator && integrator == Integrator::Rk4 {
        for i in 0..n {
            let (t0, t1) = (traj.time(i), traj.time(i + 1));
            let tm = 0.5 * (t0 + t1);
            let x = &traj.x[i];
            let (w0, wm, w1) = (grid.node(i), grid.mid(i), grid.node(i + 1));
            let um = midpoint(&traj.u[i], &traj.u[i + 1]);
            let k1 = ctx.effective_drift_with(w0, x, &traj.u[i]);
            let x2 = x + &k1 * (0.5 * dt);
            let k2 = ctx.effective_drift_with(wm, &x2, &um);
            let x3 = x + &k2 * (0.5 * dt);
            let k3 = ctx.effective_drift_with(wm, &x3, &um);
            let x4 = x + &k3 * dt;
            let c = cost(i)
                + 2.0 * ctx.effective_cost_with(tm, wm, &x2, &um)
                + 2.0 * ctx.effective_cost_with(tm, wm, &x3, &um)
                + ctx.effective_cost_with(t1, w1, &x4, &traj.u[i + 1]);
            integral += c / 6.0;
        }
    } else {
        for (i, w) in quadrature.weights(n).into_iter().enumerate() {
            if w != 0.0 {
                integral += w * cost(i);
            }
        }
    }
    integral * dt + ctx.problem().terminal_cost(&traj.x[n])
}

#[derive(Debug, Clone)]
pub struct PathSolution {
    pub trajectory: Trajectory,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the damped sweep until `‖x^{new} − x^{old}‖_∞ ≤ ε` or `max_iter`.
///
/// Initialisation is `u ≡ 0` clamped to the control box, followed by one
/// forward and one backward pass. Each iteration then minimises the
/// Hamiltonian pointwise, damps the control, and redoes both passes, so the
/// stopping test always compares states produced by different controls.
pub fn solve_path(ctx: &PathwiseContext, cfg: &SweepConfig) -> Result<PathSolution> {
    cfg.validate()?;
    let problem = ctx.problem();
    let mut traj = Trajectory::new(problem.horizon(), cfg.n_steps, problem.initial_state(), problem.control_dim());
    let u0 = problem.default_control();
    for u in traj.u.iter_mut() {
        u.copy_from(&u0);
    }
    let grid = ctx.noise_grid(cfg.n_steps)?;
    forward_on_grid(ctx, &grid, &mut traj, cfg.integrator, 0)?;
    backward_on_grid(ctx, &grid, &mut traj, cfg.integrator, 0)?;

    let alpha = cfg.damping;
    let mut converged = false;
    let mut iterations = 0;
    let mut previous_x = traj.x.clone();
    while iterations < cfg.max_iter {
        iterations += 1;
        for i in 0..=cfg.n_steps {
            let (u_star, _) = problem.inner_minimizer(&traj.x[i], &traj.p[i]);
            traj.u[i] = &u_star * alpha + &traj.u[i] * (1.0 - alpha);
        }
        forward_on_grid(ctx, &grid, &mut traj, cfg.integrator, iterations)?;
        backward_on_grid(ctx, &grid, &mut traj, cfg.integrator, iterations)?;
        let change = traj
            .x
            .iter()
            .zip(previous_x.iter())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        if change <= cfg.tol {
            converged = true;
            break;
        }
        previous_x.clone_from(&traj.x);
    }
    let value = value_on_grid(ctx, &grid, &traj, cfg.quadrature, cfg.integrator);
    Ok(PathSolution {
        trajectory: traj,
        value,
        iterations,
        converged,
    })
}
