//! Generalized Hopf objective and its maximisation over the initial adjoint.
//!
//! Along the Hamiltonian flow `ẋ = ∂_p𝓗`, `ṗ = −∂_x𝓗` started at `(x₀, p₀)`,
//!
//! `𝒥(p₀) = ⟨x₀,p₀⟩ − g*(p(T)) + ∫ [𝓗 − ⟨x, ∂_x𝓗⟩] dt`
//!
//! and the pathwise value is `sup_{p₀} 𝒥(p₀)`. Any evaluated `p₀` therefore
//! certifies a lower bound, however crude the maximisation.
//!
//! Gradients come from the tangent-linear system of the discrete integrator:
//! the sensitivity `S = ∂(x,p)/∂p₀` is stepped alongside the state, with the
//! Jacobian–vector products of the flow taken by central differences. The
//! result is the exact derivative of the discrete objective up to the
//! differencing error.

use rand_distr::{Distribution, StandardNormal};

use crate::hamiltonian::{Flow, NoiseGrid, PathwiseContext};
use crate::pontryagin::{Integrator, Quadrature, Trajectory, DIVERGENCE_BOUND};
use crate::problem::{Conjugate, INDICATOR_TOL};
use crate::rng::{stream, Purpose};
use crate::{Error, Matrix, Result, Vector};

/// Standard deviation of the random restarts around `∇g(x₀)`.
pub const RESTART_SPREAD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct HopfConfig {
    pub opt_iters: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    /// Relative step for the flow's Jacobian–vector products.
    pub fd_step: f64,
    pub integrator: Integrator,
    pub n_steps: usize,
    pub quadrature: Quadrature,
    /// Ascent stops once `‖∇𝒥‖_∞` falls below this.
    pub grad_tol: f64,
    /// Ascent also stops once an accepted step gains less than
    /// `value_tol·(1 + |𝒥|)`.
    pub value_tol: f64,
    pub shooting_tol: f64,
    pub shooting_max_iter: usize,
    pub seed: u64,
}

impl Default for HopfConfig {
    fn default() -> Self {
        Self {
            opt_iters: 100,
            learning_rate: 0.1,
            restarts: 3,
            fd_step: 1e-6,
            integrator: Integrator::Rk4,
            n_steps: 200,
            quadrature: Quadrature::Right,
            grad_tol: 1e-6,
            value_tol: 1e-10,
            shooting_tol: INDICATOR_TOL,
            shooting_max_iter: 30,
            seed: 0,
        }
    }
}

impl HopfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("eta", format!("must be positive, got {}", self.learning_rate)));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts", "must be at least 1"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("N_T", "must be positive"));
        }
        if !(self.value_tol >= 0.0) {
            return Err(Error::invalid("value_tol", "must be non-negative"));
        }
        if !(self.shooting_tol > 0.0) {
            return Err(Error::invalid("shooting_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfResult {
    /// Best objective value found; `−∞` when no feasible `p₀` was found.
    pub value: f64,
    pub p0: Vector,
    /// Objective at every accepted iterate, across restarts.
    pub objective_trace: Vec<f64>,
    pub feasible: bool,
    pub iterations: usize,
}

/// Hamiltonian flow on the grid, optionally with sensitivities.
struct Ivp {
    x: Vec<Vector>,
    p: Vec<Vector>,
    flows: Vec<Flow>,
    /// `S_i = ∂(x_i, p_i)/∂p₀`, `2d×d`.
    sens: Vec<Matrix>,
    /// `DF(t_i, y_i)·S_i`, `2d×d`.
    tangent: Vec<Matrix>,
    /// Integral term accumulated over the integrator's stages, and its
    /// gradient when sensitivities are on.
    stage_integral: f64,
    stage_grad: Vector,
}

struct Evaluation {
    value: f64,
    /// The value before the constraint check.
    relaxed: f64,
    grad: Option<Vector>,
    /// `∂p(T)/∂p₀`.
    terminal_sens: Option<Matrix>,
    p_terminal: Vector,
    residual: f64,
}

fn stack(a: &Vector, b: &Vector) -> Vector {
    let d = a.len();
    Vector::from_fn(2 * d, |i, _| if i < d { a[i] } else { b[i - d] })
}

struct Flowing<'a> {
    ctx: &'a PathwiseContext,
    grid: NoiseGrid,
    cfg: &'a HopfConfig,
    d: usize,
}

impl<'a> Flowing<'a> {
    fn new(ctx: &'a PathwiseContext, cfg: &'a HopfConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid: ctx.noise_grid(cfg.n_steps)?,
            d: ctx.problem().state_dim(),
            ctx,
            cfg,
        })
    }

    fn dt(&self) -> f64 {
        self.ctx.problem().horizon() / self.cfg.n_steps as f64
    }

    fn time(&self, i: usize) -> f64 {
        if i == self.cfg.n_steps {
            self.ctx.problem().horizon()
        } else {
            i as f64 * self.dt()
        }
    }

    /// `F(t, y) = (∂_p𝓗, −∂_x𝓗)` together with the flow record.
    fn rhs(&self, t: f64, w: &Vector, y: &Vector) -> (Vector, Flow) {
        let d = self.d;
        let x = y.rows(0, d).into_owned();
        let p = y.rows(d, d).into_owned();
        let flow = self.ctx.flow(t, w, &x, &p);
        (stack(&flow.dp, &(-&flow.dx)), flow)
    }

    /// `DF(t, y)·S`, one central difference per column.
    fn jvp(&self, t: f64, w: &Vector, y: &Vector, s: &Matrix) -> Matrix {
        let scale = 1.0 + y.amax();
        let mut out = Matrix::zeros(s.nrows(), s.ncols());
        for c in 0..s.ncols() {
            let v = s.column(c);
            let norm = v.amax();
            if norm == 0.0 {
                continue;
            }
            let h = self.cfg.fd_step * scale / norm;
            let (plus, _) = self.rhs(t, w, &(y + v * h));
            let (minus, _) = self.rhs(t, w, &(y - v * h));
            out.set_column(c, &((plus - minus) / (2.0 * h)));
        }
        out
    }

    /// Integrand `𝓗 − ⟨x, ∂_x𝓗⟩` at a stage point.
    fn integrand(&self, y: &Vector, flow: &Flow) -> f64 {
        flow.h - y.rows(0, self.d).dot(&flow.dx)
    }

    /// Derivative of the integrand along the sensitivity `s` with tangent
    /// `ds = DF·s`: `⟨∂_p𝓗, s_p⟩ + ⟨x, ds_p⟩`, since `δ∂_x𝓗 = −ds_p`.
    fn integrand_grad(&self, y: &Vector, flow: &Flow, s: &Matrix, ds: &Matrix) -> Vector {
        let d = self.d;
        s.rows(d, d).tr_mul(&flow.dp) + ds.rows(d, d).tr_mul(&y.rows(0, d))
    }

    fn integrate(&self, p0: &Vector, with_sens: bool) -> Result<Ivp> {
        let d = self.d;
        let n = self.cfg.n_steps;
        let dt = self.dt();
        let x0 = self.ctx.problem().initial_state();
        let mut y = stack(x0, p0);
        let mut s = Matrix::zeros(2 * d, d);
        if with_sens {
            for c in 0..d {
                s[(d + c, c)] = 1.0;
            }
        }
        let mut ivp = Ivp {
            x: Vec::with_capacity(n + 1),
            p: Vec::with_capacity(n + 1),
            flows: Vec::with_capacity(n + 1),
            sens: Vec::new(),
            tangent: Vec::new(),
            stage_integral: 0.0,
            stage_grad: Vector::zeros(d),
        };
        for i in 0..=n {
            let t0 = self.time(i);
            let w0 = self.grid.node(i);
            let (k1, flow) = self.rhs(t0, w0, &y);
            let sk1 = if with_sens { Some(self.jvp(t0, w0, &y, &s)) } else { None };
            if i == n {
                ivp.x.push(y.rows(0, d).into_owned());
                ivp.p.push(y.rows(d, d).into_owned());
                ivp.flows.push(flow);
                if let Some(sk1) = sk1 {
                    ivp.sens.push(s.clone());
                    ivp.tangent.push(sk1);
                }
                break;
            }
            let (next_y, next_s) = match self.cfg.integrator {
                Integrator::Euler => {
                    ivp.stage_integral += self.integrand(&y, &flow) * dt;
                    if let Some(sk1) = &sk1 {
                        ivp.stage_grad += self.integrand_grad(&y, &flow, &s, sk1) * dt;
                    }
                    let ny = &y + &k1 * dt;
                    let ns = sk1.as_ref().map(|sk1| &s + sk1 * dt);
                    (ny, ns)
                }
                Integrator::Rk4 => {
                    let (tm, t1) = (t0 + 0.5 * dt, self.time(i + 1));
                    let (wm, w1) = (self.grid.mid(i), self.grid.node(i + 1));
                    let y2 = &y + &k1 * (0.5 * dt);
                    let (k2, f2) = self.rhs(tm, wm, &y2);
                    let y3 = &y + &k2 * (0.5 * dt);
                    let (k3, f3) = self.rhs(tm, wm, &y3);
                    let y4 = &y + &k3 * dt;
                    let (k4, f4) = self.rhs(t1, w1, &y4);
                    ivp.stage_integral += (self.integrand(&y, &flow)
                        + 2.0 * self.integrand(&y2, &f2)
                        + 2.0 * self.integrand(&y3, &f3)
                        + self.integrand(&y4, &f4))
                        * (dt / 6.0);
                    let ny = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
                    let ns = sk1.as_ref().map(|sk1| {
                        let s2 = &s + sk1 * (0.5 * dt);
                        let sk2 = self.jvp(tm, wm, &y2, &s2);
                        let s3 = &s + &sk2 * (0.5 * dt);
                        let sk3 = self.jvp(tm, wm, &y3, &s3);
                        let s4 = &s + &sk3 * dt;
                        let sk4 = self.jvp(t1, w1, &y4, &s4);
                        ivp.stage_grad += (self.integrand_grad(&y, &flow, &s, sk1)
                            + self.integrand_grad(&y2, &f2, &s2, &sk2) * 2.0
                            + self.integrand_grad(&y3, &f3, &s3, &sk3) * 2.0
                            + self.integrand_grad(&y4, &f4, &s4, &sk4))
                            * (dt / 6.0);
                        &s + (sk1 + sk2 * 2.0 + sk3 * 2.0 + sk4) * (dt / 6.0)
                    });
                    (ny, ns)
                }
            };
            ivp.x.push(y.rows(0, d).into_owned());
            ivp.p.push(y.rows(d, d).into_owned());
            ivp.flows.push(flow);
            if let Some(sk1) = sk1 {
                ivp.sens.push(s.clone());
                ivp.tangent.push(sk1);
            }
            if !next_y.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND) {
                return Err(Error::DivergedPath {
                    iteration: 0,
                    step: i + 1,
                });
            }
            y = next_y;
            if let Some(ns) = next_s {
                s = ns;
            }
        }
        Ok(ivp)
    }

    fn evaluate(&self, p0: &Vector, with_grad: bool) -> Result<Evaluation> {
        let d = self.d;
        let n = self.cfg.n_steps;
        let dt = self.dt();
        let ivp = self.integrate(p0, with_grad)?;
        let x0 = self.ctx.problem().initial_state();
        let weights = self.cfg.quadrature.weights(n);

        let staged = self.cfg.quadrature == Quadrature::Integrator;
        let mut integral = 0.0;
        if staged {
            integral = ivp.stage_integral / dt;
        } else {
            for (i, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    let f = &ivp.flows[i];
                    integral += w * (f.h - ivp.x[i].dot(&f.dx));
                }
            }
        }
        let p_terminal = ivp.p[n].clone();
        let conjugate = self.ctx.problem().conjugate();
        let residual = conjugate.constraint_residual(&p_terminal);
        let conj = conjugate.free_value_grad(&p_terminal);
        let relaxed = match &conj {
            Some((g, _)) => x0.dot(p0) - g + integral * dt,
            None => f64::NEG_INFINITY,
        };
        let value = if residual > self.cfg.shooting_tol || !relaxed.is_finite() {
            f64::NEG_INFINITY
        } else {
            relaxed
        };

        let (grad, terminal_sens) = if with_grad {
            let sp_n = ivp.sens[n].rows(d, d).into_owned();
            let grad = conj.as_ref().map(|(_, gg)| {
                let mut grad = x0 - sp_n.tr_mul(gg);
                if staged {
                    grad += &ivp.stage_grad;
                } else {
                    for (i, &w) in weights.iter().enumerate() {
                        if w != 0.0 {
                            let y = stack(&ivp.x[i], &ivp.p[i]);
                            grad += self.integrand_grad(&y, &ivp.flows[i], &ivp.sens[i], &ivp.tangent[i]) * (w * dt);
                        }
                    }
                }
                grad
            });
            (grad, Some(sp_n))
        } else {
            (None, None)
        };
        Ok(Evaluation {
            value,
            relaxed,
            grad,
            terminal_sens,
            p_terminal,
            residual,
        })
    }
}

/// Integrates the Hamiltonian flow from `(x₀, p₀)`.
pub fn hamiltonian_ivp(ctx: &PathwiseContext, p0: &Vector, cfg: &HopfConfig) -> Result<Trajectory> {
    check_p0(ctx, p0)?;
    let flowing = Flowing::new(ctx, cfg)?;
    let ivp = flowing.integrate(p0, false)?;
    Ok(Trajectory {
        horizon: ctx.problem().horizon(),
        x: ivp.x,
        p: ivp.p,
        u: ivp.flows.into_iter().map(|f| f.u).collect(),
    })
}

/// `𝒥(p₀)`; `−∞` when `p(T)` leaves the domain of `g*`.
pub fn hopf_objective(ctx: &PathwiseContext, p0: &Vector, cfg: &HopfConfig) -> Result<f64> {
    check_p0(ctx, p0)?;
    Ok(Flowing::new(ctx, cfg)?.evaluate(p0, false)?.value)
}

/// `𝒥(p₀)` with any indicator constraint on `p(T)` dropped; equals
/// [`hopf_objective`] for smooth conjugates and on the constraint set.
pub fn relaxed_objective(ctx: &PathwiseContext, p0: &Vector, cfg: &HopfConfig) -> Result<f64> {
    check_p0(ctx, p0)?;
    Ok(Flowing::new(ctx, cfg)?.evaluate(p0, false)?.relaxed)
}

/// `∇_{p₀}𝒥` of the discrete objective.
///
/// For indicator conjugates this is the gradient of the objective with the
/// indicator dropped, which is what the constrained ascent needs.
pub fn objective_gradient(ctx: &PathwiseContext, p0: &Vector, cfg: &HopfConfig) -> Result<Vector> {
    check_p0(ctx, p0)?;
    Flowing::new(ctx, cfg)?
        .evaluate(p0, true)?
        .grad
        .ok_or_else(|| Error::invalid("p0", "p(T) lies outside the domain of the conjugate"))
}

fn check_p0(ctx: &PathwiseContext, p0: &Vector) -> Result<()> {
    if p0.len() != ctx.problem().state_dim() {
        return Err(Error::Dimension(format!(
            "p0 has {} entries, problem has d = {}",
            p0.len(),
            ctx.problem().state_dim()
        )));
    }
    Ok(())
}

/// Maximises `𝒥` with restart stream 0.
pub fn solve_hopf(ctx: &PathwiseContext, cfg: &HopfConfig) -> Result<HopfResult> {
    solve_hopf_indexed(ctx, cfg, 0)
}

/// Maximises `𝒥`, drawing random restarts from the stream keyed by
/// `(cfg.seed, index)`.
///
/// Restart 0 starts at `∇g(x₀)`; later ones at `N(∇g(x₀), 0.25·I)`. A smooth
/// conjugate gets plain gradient ascent with step halving. An indicator
/// conjugate first shoots the constrained coordinates of `p(T)` onto their
/// targets and then ascends along the constraint manifold.
pub fn solve_hopf_indexed(ctx: &PathwiseContext, cfg: &HopfConfig, index: u64) -> Result<HopfResult> {
    let flowing = Flowing::new(ctx, cfg)?;
    let problem = ctx.problem();
    let d = problem.state_dim();
    let centre = problem.terminal_grad(problem.initial_state());
    let mut rng = stream(cfg.seed, Purpose::HopfInit, index);

    let mut best: Option<HopfResult> = None;
    let mut last_error = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    for restart in 0..cfg.restarts {
        let start = if restart == 0 {
            centre.clone()
        } else {
            Vector::from_fn(d, |i, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                centre[i] + RESTART_SPREAD * z
            })
        };
        let outcome = match problem.conjugate() {
            Conjugate::Smooth(_) => ascend_smooth(&flowing, start),
            Conjugate::AffineIndicator {
                target, constrained, ..
            } => ascend_constrained(&flowing, start, target, constrained),
        };
        match outcome {
            Ok(run) => {
                iterations += run.iterations;
                trace.extend_from_slice(&run.trace);
                if best.as_ref().is_none_or(|b| run.value > b.value) {
                    best = Some(HopfResult {
                        value: run.value,
                        p0: run.p0,
                        objective_trace: Vec::new(),
                        feasible: run.value.is_finite(),
                        iterations: 0,
                    });
                }
            }
            Err(e @ Error::DivergedPath { .. }) => {
                log::debug!("hopf restart {restart} diverged: {e}");
                last_error = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(mut result) => {
            result.objective_trace = trace;
            result.iterations = iterations;
            Ok(result)
        }
        None => Err(last_error.unwrap_or(Error::DivergedPath { iteration: 0, step: 0 })),
    }
}

struct Run {
    value: f64,
    p0: Vector,
    trace: Vec<f64>,
    iterations: usize,
}

/// Largest number of step halvings tried before the ascent gives up.
const MAX_HALVINGS: usize = 40;

fn ascend_smooth(flowing: &Flowing<'_>, start: Vector) -> Result<Run> {
    let cfg = flowing.cfg;
    let mut p0 = start;
    let mut current = flowing.evaluate(&p0, true)?;
    let mut trace = vec![current.value];
    let mut iterations = 0;
    let mut step = cfg.learning_rate;
    while iterations < cfg.opt_iters && current.value.is_finite() {
        let Some(grad) = current.grad.clone() else { break };
        if grad.amax() <= cfg.grad_tol {
            break;
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &p0 + &grad * step;
            match flowing.evaluate(&trial, true) {
                Ok(ev) if ev.value > current.value => {
                    accepted = Some((trial, ev));
                    break;
                }
                Ok(_) | Err(Error::DivergedPath { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((trial, ev)) = accepted else { break };
        let gain = ev.value - current.value;
        p0 = trial;
        current = ev;
        trace.push(current.value);
        if gain <= cfg.value_tol * (1.0 + current.value.abs()) {
            break;
        }
        step = (2.0 * step).min(cfg.learning_rate);
    }
    Ok(Run {
        value: current.value,
        p0,
        trace,
        iterations,
    })
}

/// Indices where `mask` equals `want`.
fn indices(mask: &[bool], want: bool) -> Vec<usize> {
    (0..mask.len()).filter(|&i| mask[i] == want).collect()
}

fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Newton iteration on the constrained coordinates of `p₀` so that the
/// constrained coordinates of `p(T)` hit `target`.
fn shoot(flowing: &Flowing<'_>, mut p0: Vector, target: &Vector, cons: &[usize]) -> Result<(Vector, Evaluation)> {
    let cfg = flowing.cfg;
    let residual_of = |ev: &Evaluation| cons.iter().map(|&i| (ev.p_terminal[i] - target[i]).abs()).fold(0.0, f64::max);
    let mut ev = flowing.evaluate(&p0, true)?;
    // Iterate well past the feasibility tolerance; Newton is cheap near the root.
    let tight = cfg.shooting_tol * 1e-4;
    for _ in 0..cfg.shooting_max_iter {
        let res = residual_of(&ev);
        if res <= tight {
            break;
        }
        let jac = submatrix(ev.terminal_sens.as_ref().unwrap(), cons, cons);
        let r = Vector::from_fn(cons.len(), |k, _| ev.p_terminal[cons[k]] - target[cons[k]]);
        let Some(delta) = jac.lu().solve(&r) else { break };
        let mut lambda = 1.0;
        let mut improved = None;
        for _ in 0..12 {
            let mut trial = p0.clone();
            for (k, &i) in cons.iter().enumerate() {
                trial[i] -= lambda * delta[k];
            }
            match flowing.evaluate(&trial, true) {
                Ok(tev) if residual_of(&tev) < res => {
                    improved = Some((trial, tev));
                    break;
                }
                Ok(_) | Err(Error::DivergedPath { .. }) => lambda *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((trial, tev)) = improved else { break };
        p0 = trial;
        ev = tev;
    }
    ev.residual = residual_of(&ev);
    if ev.residual > cfg.shooting_tol {
        ev.value = f64::NEG_INFINITY;
    }
    Ok((p0, ev))
}

fn ascend_constrained(flowing: &Flowing<'_>, start: Vector, target: &Vector, constrained: &[bool]) -> Result<Run> {
    let cfg = flowing.cfg;
    let cons = indices(constrained, true);
    let free = indices(constrained, false);
    let mut p0 = start;
    for &i in &cons {
        p0[i] = target[i];
    }
    let (mut p0, mut current) = shoot(flowing, p0, target, &cons)?;
    let mut trace = vec![current.value];
    let mut iterations = 0;
    let mut step = cfg.learning_rate;
    while !free.is_empty() && iterations < cfg.opt_iters && current.value.is_finite() {
        let Some(grad) = current.grad.clone() else { break };
        let sens = current.terminal_sens.as_ref().unwrap();
        let j_cc = submatrix(sens, &cons, &cons);
        let j_cf = submatrix(sens, &cons, &free);
        // Implicit function theorem on p(T)_C = target: dp₀_C/dp₀_F = −J_CC⁻¹ J_CF.
        let Some(tangent) = j_cc.lu().solve(&(-j_cf)) else { break };
        let g_free = Vector::from_fn(free.len(), |k, _| grad[free[k]]);
        let g_cons = Vector::from_fn(cons.len(), |k, _| grad[cons[k]]);
        let reduced = g_free + tangent.tr_mul(&g_cons);
        if reduced.amax() <= cfg.grad_tol {
            break;
        }
        iterations += 1;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let move_free = &reduced * step;
            let move_cons = &tangent * &move_free;
            let mut trial = p0.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] += move_free[k];
            }
            for (k, &i) in cons.iter().enumerate() {
                trial[i] += move_cons[k];
            }
            match shoot(flowing, trial, target, &cons) {
                Ok((tp, tev)) if tev.value > current.value => {
                    accepted = Some((tp, tev));
                    break;
                }
                Ok(_) | Err(Error::DivergedPath { .. }) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((tp, tev)) = accepted else { break };
        let gain = tev.value - current.value;
        p0 = tp;
        current = tev;
        trace.push(current.value);
        if gain <= cfg.value_tol * (1.0 + current.value.abs()) {
            break;
        }
        step = (2.0 * step).min(cfg.learning_rate);
    }
    Ok(Run {
        value: current.value,
        p0,
        trace,
        iterations,
    })
}
