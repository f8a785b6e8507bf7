//! Independent oracles: closed-form benchmark values, the tabulated growth
//! model values and a brute-force dynamic-programming solver for 1-d
//! pathwise problems.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::estimator::Z95;
use crate::hamiltonian::PathwiseContext;
use crate::numeric::{golden_min, pairwise_sum};
use crate::primal::{ou_lambda_a, ou_value};
use crate::problem::lq_weights;
use crate::rng::{stream, Purpose};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ClosedForm,
    MonteCarlo,
    DpGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub method: OracleMethod,
    /// Non-negative; for closed forms, the 95% half-width of the Monte Carlo
    /// cross-check that guards the formula.
    pub error_estimate: f64,
}

/// Draws in the LQ Monte Carlo cross-check.
pub const LQ_CHECK_DRAWS: usize = 1_000_000;
const LQ_CHECK_CHUNK: usize = 10_000;

/// `V(0,x₀) = ½ + ½ logdet(I + 2TA) + ½ x₀ᵀA(I + 2TA)⁻¹x₀` for the LQ
/// benchmark with the standard weights `A`.
pub fn lq_closed_form(a_diag: &Vector, x0: &Vector, horizon: f64) -> f64 {
    0.5 + a_diag
        .iter()
        .zip(x0.iter())
        .map(|(&a, &x)| {
            let s = 1.0 + 2.0 * horizon * a;
            0.5 * s.ln() + 0.5 * a * x * x / s
        })
        .sum::<f64>()
}

/// `−ln E[exp(−g(x₀ + √2 W_T))]` by Monte Carlo: `(estimate, standard error)`.
pub fn lq_monte_carlo(a_diag: &Vector, x0: &Vector, horizon: f64, draws: usize, seed: u64) -> (f64, f64) {
    let scale = (2.0 * horizon).sqrt();
    let chunks = draws.div_ceil(LQ_CHECK_CHUNK);
    let weights: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream(seed, Purpose::Oracle, c as u64);
            let len = LQ_CHECK_CHUNK.min(draws - c * LQ_CHECK_CHUNK);
            (0..len)
                .map(|_| {
                    let g: f64 = a_diag
                        .iter()
                        .zip(x0.iter())
                        .map(|(&a, &x)| {
                            let y = x + scale * rng.sample::<f64, _>(StandardNormal);
                            a * y * y
                        })
                        .sum();
                    (-0.5 * (g + 1.0)).exp()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = weights.len() as f64;
    let mean = pairwise_sum(&weights) / n;
    let sq: Vec<f64> = weights.iter().map(|w| (w - mean).powi(2)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    // Delta method for −ln(mean).
    (-mean.ln(), (var / n).sqrt() / mean)
}

/// LQ reference value, cross-checked against [`LQ_CHECK_DRAWS`] Monte Carlo
/// draws at construction.
pub fn lq_reference(d: usize, x0: &Vector, horizon: f64) -> Result<OracleValue> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    if x0.len() != d {
        return Err(Error::Dimension(format!("x0 has {} entries, d = {d}", x0.len())));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("T", "must be positive"));
    }
    let a = lq_weights(d);
    let exact = lq_closed_form(&a, x0, horizon);
    let (mc, se) = lq_monte_carlo(&a, x0, horizon, LQ_CHECK_DRAWS, 0);
    if (mc - exact).abs() > 3.0 * se {
        return Err(Error::OracleIntegrity(format!(
            "LQ closed form {exact} vs Monte Carlo {mc} ± {se} (more than 3 standard errors)"
        )));
    }
    Ok(OracleValue {
        value: exact,
        method: OracleMethod::ClosedForm,
        error_estimate: Z95 * se,
    })
}

/// OU reference `e^{λ_A}Σx₀ − dλ_B²(e^{2λ_A} − 1)/(4λ_A)` at `T = 1`.
pub fn ou_reference(d: usize, x0: &Vector) -> Result<OracleValue> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    if x0.len() != d {
        return Err(Error::Dimension(format!("x0 has {} entries, d = {d}", x0.len())));
    }
    debug_assert!(ou_lambda_a(d).is_finite());
    Ok(OracleValue {
        value: ou_value(d, 1.0, x0.sum()),
        method: OracleMethod::ClosedForm,
        error_estimate: 0.0,
    })
}

/// Tabulated growth-model values `(Z₀, A₀, V)`.
///
/// The value is exactly affine in `A` with slope −1: the terminal cost is
/// `ḡ(Z) − A` and `A` enters the dynamics only through `ṗ₂ = 0`, so the
/// optimal consumption is `u ≡ 1` whatever `A₀`. Rows are therefore stored
/// at the state whose value they carry.
const AIYAGARI_TABLE: [(f64, f64, f64); 6] = [
    (1.0, 0.5, -0.2557),
    (1.0, 1.0, -0.7557),
    (1.0, 1.5, -1.2557),
    (0.25, 1.0, -0.7897),
    (0.75, 1.0, -0.7676),
    (1.25, 1.0, -0.7432),
];

/// Half a unit in the last tabulated digit.
pub const AIYAGARI_TABLE_ERROR: f64 = 5e-5;

/// Table lookup for `V(0, Z₀, A₀)`, shifted along `A` by the exact slope −1
/// when `Z₀` is tabulated at a different `A`.
pub fn aiyagari_reference(z0: f64, a0: f64) -> Result<OracleValue> {
    let same_z: Vec<_> = AIYAGARI_TABLE.iter().filter(|(z, _, _)| (z - z0).abs() < 1e-9).collect();
    let Some(&&(_, a, v)) = same_z
        .iter()
        .min_by(|l, r| (l.1 - a0).abs().total_cmp(&(r.1 - a0).abs()))
    else {
        return Err(Error::NotAvailable(format!("no tabulated value for Z₀ = {z0}")));
    };
    Ok(OracleValue {
        value: v - (a0 - a),
        method: OracleMethod::ClosedForm,
        error_estimate: AIYAGARI_TABLE_ERROR,
    })
}

/// Uniform 1-d grid with `points ≥ 2` nodes on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid1d {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo < hi) || points < 2 {
            return Err(Error::invalid("grid", format!("need lo < hi and ≥ 2 points, got [{lo}, {hi}] × {points}")));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    /// The grid with every other node, keeping both ends.
    fn coarsened(&self) -> Self {
        Self {
            points: (self.points - 1) / 2 + 1,
            ..*self
        }
    }

    /// Linear interpolation of nodal `values`; `None` outside the grid.
    fn interpolate(&self, values: &[f64], x: f64) -> Option<f64> {
        let s = (x - self.lo) / self.spacing();
        if !(s >= 0.0 && s <= (self.points - 1) as f64) {
            return None;
        }
        let i = (s.floor() as usize).min(self.points - 2);
        let theta = s - i as f64;
        Some((1.0 - theta) * values[i] + theta * values[i + 1])
    }
}

/// Golden-section tolerance of the control refinement.
const DP_CONTROL_TOL: f64 = 1e-8;

/// Largest phase advance of the fastest noise mode per RK4 substep.
const DP_PHASE_STEP: f64 = 0.5;

/// Brute-force value of the pathwise problem for `state_dim = 1`.
///
/// Backward dynamic programming over `n_steps` time steps: the control is
/// constant on each step, the characteristic and its cost are integrated by
/// RK4 substeps fine enough for the fastest noise mode, the next value is
/// linearly interpolated, and the control is found by a search over `u_grid`
/// refined by golden section around the best node.
/// Landing outside `x_grid` is inadmissible. Interpolation error builds up
/// like `δx²/δt`, so coarse time steps on a fine state grid work best. The
/// error estimate is the change against a run with every other grid node
/// and half the steps.
pub fn dp_oracle_1d(ctx: &PathwiseContext, x_grid: Grid1d, u_grid: Grid1d, n_steps: usize) -> Result<OracleValue> {
    let problem = ctx.problem();
    if problem.state_dim() != 1 || problem.control_dim() != 1 {
        return Err(Error::Dimension("the DP oracle needs a scalar state and control".into()));
    }
    if n_steps < 2 || x_grid.points < 5 {
        return Err(Error::invalid("grid", "need at least 2 steps and 5 state nodes"));
    }
    let fine = dp_solve(ctx, x_grid, u_grid, n_steps)?;
    let coarse = dp_solve(ctx, x_grid.coarsened(), u_grid, n_steps / 2)?;
    Ok(OracleValue {
        value: fine,
        method: OracleMethod::DpGrid,
        error_estimate: (fine - coarse).abs(),
    })
}

fn dp_solve(ctx: &PathwiseContext, x_grid: Grid1d, u_grid: Grid1d, n_steps: usize) -> Result<f64> {
    let problem = ctx.problem();
    let horizon = problem.horizon();
    let dt = horizon / n_steps as f64;
    let (u_lo, u_hi) = match problem.control_box() {
        Some(b) => (u_grid.lo.max(b.lower[0]), u_grid.hi.min(b.upper[0])),
        None => (u_grid.lo, u_grid.hi),
    };
    let u_nodes = Grid1d::new(u_lo, u_hi, u_grid.points)?;

    // Enough RK4 substeps per step to resolve the fastest noise frequency.
    let path = ctx.path();
    let omega = (path.n_terms() as f64 - 0.5) * std::f64::consts::PI / path.horizon();
    let sub = ((dt * omega / DP_PHASE_STEP).ceil() as usize).max(1);
    let h = dt / sub as f64;
    let noise = ctx.noise_grid(n_steps * sub)?;

    // (x, cost) after step i from x under constant u.
    let step = |i: usize, x: f64, u: f64| -> (f64, f64) {
        let uv = Vector::from_element(1, u);
        let rhs = |s: f64, w: &Vector, x: f64| {
            let xv = Vector::from_element(1, x);
            (ctx.effective_drift_with(w, &xv, &uv)[0], ctx.effective_cost_with(s, w, &xv, &uv))
        };
        let (mut x, mut cost) = (x, 0.0);
        for k in i * sub..(i + 1) * sub {
            let t = k as f64 * h;
            let (w0, wm, w1) = (noise.node(k), noise.mid(k), noise.node(k + 1));
            let k1 = rhs(t, w0, x);
            let k2 = rhs(t + 0.5 * h, wm, x + 0.5 * h * k1.0);
            let k3 = rhs(t + 0.5 * h, wm, x + 0.5 * h * k2.0);
            let k4 = rhs(t + h, w1, x + h * k3.0);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            cost += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (x, cost)
    };

    let nodes: Vec<f64> = (0..x_grid.points).map(|j| x_grid.node(j)).collect();
    let mut value: Vec<f64> = nodes.iter().map(|&x| problem.terminal_cost(&Vector::from_element(1, x))).collect();
    let mut policy = vec![vec![0.0; x_grid.points]; n_steps];
    for i in (0..n_steps).rev() {
        let next = value.clone();
        let q = |x: f64, u: f64| {
            let (x1, cost) = step(i, x, u);
            x_grid.interpolate(&next, x1).map_or(f64::INFINITY, |v| cost + v)
        };
        let solved: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|&x| {
                let (k, _) = (0..u_nodes.points)
                    .map(|k| (k, q(x, u_nodes.node(k))))
                    .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
                let lo = u_nodes.node(k.saturating_sub(1));
                let hi = u_nodes.node((k + 1).min(u_nodes.points - 1));
                let (u, v) = golden_min(|u| q(x, u), lo, hi, DP_CONTROL_TOL * (1.0 + hi.abs()));
                let coarse = q(x, u_nodes.node(k));
                if coarse < v {
                    (u_nodes.node(k), coarse)
                } else {
                    (u, v)
                }
            })
            .collect();
        for (j, (u, v)) in solved.into_iter().enumerate() {
            policy[i][j] = u;
            value[j] = v;
        }
    }

    let x0 = problem.initial_state()[0];
    let v0 = x_grid
        .interpolate(&value, x0)
        .ok_or_else(|| Error::OracleGrid(format!("x₀ = {x0} lies outside [{}, {}]", x_grid.lo, x_grid.hi)))?;
    if !v0.is_finite() {
        return Err(Error::OracleGrid("no admissible control keeps x₀ on the grid; widen the state grid".into()));
    }
    // The optimal path must stay clear of the edges, where the grid acts as
    // a state constraint.
    let margin = x_grid.spacing();
    let mut x = x0;
    for (i, row) in policy.iter().enumerate() {
        let u = x_grid.interpolate(row, x).unwrap_or(0.0);
        x = step(i, x, u).0;
        if !(x > x_grid.lo + margin && x < x_grid.hi - margin) {
            return Err(Error::OracleGrid(format!(
                "optimal path reaches x = {x} at step {}; widen the state grid beyond [{}, {}]",
                i + 1,
                x_grid.lo,
                x_grid.hi
            )));
        }
    }
    Ok(v0)
}
