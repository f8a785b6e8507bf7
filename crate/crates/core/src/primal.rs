//! Upper bounds from simulated feedback controls, and martingale models.
//!
//! Any admissible feedback control gives an upper bound `J[û] ≥ V`. The
//! martingale models feeding the dual side are either closed-form (LQ and
//! OU) or fitted by least-squares regression on simulated paths.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::estimator::{run_indexed, summarise, BoundEstimate, Method};
use crate::hamiltonian::{MartingaleModel, ZeroModel};
use crate::numeric::fd_step;
use crate::problem::{Benchmark, ControlProblem, COEFF_FD_REL};
use crate::rng::{stream, Purpose};
use crate::{Error, Matrix, Result, Vector};

/// Largest tolerated fraction of diverged primal paths.
pub const MAX_PRIMAL_DIVERGED: f64 = 0.01;

type FeedbackFn = dyn Fn(f64, &Vector) -> Vector + Send + Sync;

/// A feedback law `u(t, x)`.
#[derive(Clone)]
pub struct FeedbackControl(Arc<FeedbackFn>);

impl FeedbackControl {
    pub fn new(f: impl Fn(f64, &Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, t: f64, x: &Vector) -> Vector {
        (self.0)(t, x)
    }
}

impl fmt::Debug for FeedbackControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FeedbackControl(..)")
    }
}

/// Settings of the Euler–Maruyama upper-bound simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalConfig {
    pub samples: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for PrimalConfig {
    fn default() -> Self {
        Self {
            samples: 1 << 17,
            n_steps: 400,
            seed: 0,
            workers: 0,
        }
    }
}

/// Cost of one Euler–Maruyama path under `control`, or `None` if it blew up.
fn primal_path(problem: &ControlProblem, control: &FeedbackControl, x0: &Vector, n_steps: usize, seed: u64, index: u64) -> Option<f64> {
    let mut rng = stream(seed, Purpose::Primal, index);
    let dt = problem.horizon() / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let mut x = x0.clone();
    let mut cost = 0.0;
    let mut dw = Vector::zeros(problem.noise_dim());
    for i in 0..n_steps {
        let t = i as f64 * dt;
        let u = problem.clamp_control(control.eval(t, &x));
        cost += problem.running_cost(&x, &u) * dt;
        for c in dw.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c = z * sqrt_dt;
        }
        x = &x + problem.drift(&x, &u) * dt + problem.diffusion(&x) * &dw;
        if !x.iter().all(|v| v.is_finite()) || !cost.is_finite() {
            return None;
        }
    }
    let total = cost + problem.terminal_cost(&x);
    total.is_finite().then_some(total)
}

/// Monte Carlo estimate of `J[û]` from `x0`, left-endpoint cost quadrature.
pub fn simulate_upper_bound(problem: &ControlProblem, control: &FeedbackControl, x0: &Vector, cfg: &PrimalConfig) -> Result<BoundEstimate> {
    if cfg.samples < 2 {
        return Err(Error::TooFewSamples(cfg.samples));
    }
    if cfg.n_steps == 0 {
        return Err(Error::invalid("N_T_up", "must be positive"));
    }
    if x0.len() != problem.state_dim() {
        return Err(Error::Dimension("x0 does not match the problem dimension".into()));
    }
    let started = Instant::now();
    let outcomes = run_indexed(cfg.samples, cfg.workers, |m| primal_path(problem, control, x0, cfg.n_steps, cfg.seed, m))?;
    summarise(&outcomes, Method::Primal, MAX_PRIMAL_DIVERGED, started)
}

/// Closed-form LQ value function and its martingale model.
#[derive(Debug, Clone)]
pub struct LqModel {
    a_diag: Vector,
    horizon: f64,
}

impl LqModel {
    pub fn new(a_diag: Vector, horizon: f64) -> Self {
        Self { a_diag, horizon }
    }

    /// `k_i(t) = a_i / (1 + 2(T−t)a_i)`, so that `∇V = k ∘ x`.
    fn gain(&self, t: f64) -> Vector {
        let tau = self.horizon - t;
        self.a_diag.map(|a| a / (1.0 + 2.0 * tau * a))
    }

    /// `½ + ½ Σ ln(1 + 2(T−t)a_i) + ½ Σ k_i(t) x_i²`.
    pub fn value(&self, t: f64, x: &Vector) -> f64 {
        let tau = self.horizon - t;
        let logdet: f64 = self.a_diag.iter().map(|a| (1.0 + 2.0 * tau * a).ln()).sum();
        0.5 + 0.5 * logdet + 0.5 * self.gain(t).component_mul(x).dot(x)
    }

    pub fn gradient(&self, t: f64, x: &Vector) -> Vector {
        self.gain(t).component_mul(x)
    }
}

impl MartingaleModel for LqModel {
    fn state_dim(&self) -> usize {
        self.a_diag.len()
    }
    fn noise_dim(&self) -> usize {
        self.a_diag.len()
    }
    fn z(&self, t: f64, x: &Vector) -> Vector {
        self.gradient(t, x) * std::f64::consts::SQRT_2
    }
    fn jacobian(&self, t: f64, _x: &Vector) -> Matrix {
        Matrix::from_diagonal(&(self.gain(t) * std::f64::consts::SQRT_2))
    }
    fn jacobian_derivatives(&self, _t: f64, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// Closed-form OU value function `V = e^{λ_A(T−t)}⟨𝟙,x⟩ − dλ_B²/(4λ_A)(e^{2λ_A(T−t)} − 1)`.
#[derive(Debug, Clone)]
pub struct OuModel {
    b: Matrix,
    dim: usize,
    lambda_a: f64,
    lambda_b: f64,
    horizon: f64,
}

impl OuModel {
    pub fn new(dim: usize, b: Matrix, horizon: f64) -> Self {
        Self {
            lambda_a: ou_lambda_a(dim),
            lambda_b: ou_lambda_b(dim),
            b,
            dim,
            horizon,
        }
    }

    pub fn value(&self, t: f64, x: &Vector) -> f64 {
        ou_value(self.dim, self.horizon - t, x.sum())
    }

    pub fn gradient(&self, t: f64, _x: &Vector) -> Vector {
        Vector::from_element(self.dim, (self.lambda_a * (self.horizon - t)).exp())
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda_a, self.lambda_b)
    }
}

pub fn ou_lambda_a(d: usize) -> f64 {
    crate::problem::OU_DRIFT_COUPLING * d as f64 - 1.0
}

pub fn ou_lambda_b(d: usize) -> f64 {
    1.0 + crate::problem::OU_NOISE_COUPLING * d as f64
}

/// OU value with `tau = T − t` remaining and `s = ⟨𝟙, x⟩`.
pub fn ou_value(d: usize, tau: f64, s: f64) -> f64 {
    let (la, lb) = (ou_lambda_a(d), ou_lambda_b(d));
    // (e^{2λτ} − 1)/(4λ) → τ/2 as λ → 0.
    let growth = if la.abs() < 1e-12 {
        0.5 * tau
    } else {
        (2.0 * la * tau).exp_m1() / (4.0 * la)
    };
    (la * tau).exp() * s - d as f64 * lb * lb * growth
}

impl MartingaleModel for OuModel {
    fn state_dim(&self) -> usize {
        self.dim
    }
    fn noise_dim(&self) -> usize {
        self.dim
    }
    fn z(&self, t: f64, x: &Vector) -> Vector {
        self.b.tr_mul(&self.gradient(t, x))
    }
    fn jacobian(&self, _t: f64, _x: &Vector) -> Matrix {
        Matrix::zeros(self.dim, self.dim)
    }
    fn jacobian_derivatives(&self, _t: f64, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// Closed-form martingale model and optimal feedback for LQ, OU and the
/// zero-coefficient problem.
pub fn analytic_model(problem: &ControlProblem) -> Result<(Arc<dyn MartingaleModel>, FeedbackControl)> {
    match problem.benchmark() {
        Benchmark::Lq { a_diag } => {
            let model = LqModel::new(a_diag.clone(), problem.horizon());
            let law = model.clone();
            Ok((Arc::new(model), FeedbackControl::new(move |t, x| -law.gradient(t, x))))
        }
        Benchmark::Ou { b, .. } => {
            let model = OuModel::new(problem.state_dim(), b.clone(), problem.horizon());
            let law = model.clone();
            let b = b.clone();
            Ok((Arc::new(model), FeedbackControl::new(move |t, x| -b.tr_mul(&law.gradient(t, x)))))
        }
        Benchmark::Zero { .. } => {
            let k = problem.control_dim();
            Ok((Arc::new(ZeroModel::for_problem(problem)), FeedbackControl::new(move |_, _| Vector::zeros(k))))
        }
        _ => Err(Error::Config(format!(
            "no analytic model for problem `{}`; use model=regression",
            problem.name()
        ))),
    }
}

/// Monomials of total degree at most `degree` in `dim` variables, in
/// graded lexicographic order.
pub fn monomial_exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn extend(prefix: &mut Vec<u32>, dim: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            extend(prefix, dim, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut all = Vec::new();
        extend(&mut Vec::new(), dim, total, &mut all);
        out.extend(all.into_iter().filter(|e| e.iter().sum::<u32>() == total));
    }
    out
}

/// Derivatives of a polynomial up to a requested order.
#[derive(Debug, Clone)]
struct Jet {
    value: f64,
    grad: Vector,
    /// Zero unless the order is at least 2.
    hess: Matrix,
    /// `third[l][(k, m)] = ∂³/∂k∂m∂l`; empty unless the order is 3.
    third: Vec<Matrix>,
}

impl Jet {
    fn zeros(d: usize, order: usize) -> Self {
        Self {
            value: 0.0,
            grad: Vector::zeros(d),
            hess: Matrix::zeros(d, d),
            third: if order >= 3 { vec![Matrix::zeros(d, d); d] } else { Vec::new() },
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.grad *= s;
        self.hess *= s;
        self.third.iter_mut().for_each(|t| *t *= s);
        self
    }

    fn add(mut self, other: &Self) -> Self {
        self.value += other.value;
        self.grad += &other.grad;
        self.hess += &other.hess;
        self.third.iter_mut().zip(&other.third).for_each(|(a, b)| *a += b);
        self
    }

    /// Chain rule for `ξ = (x − c)/s`, given `inv = 1/s`.
    fn unscaled(mut self, inv: &Vector) -> Self {
        let d = inv.len();
        self.grad.component_mul_assign(inv);
        self.hess = Matrix::from_fn(d, d, |a, b| self.hess[(a, b)] * inv[a] * inv[b]);
        for (l, t) in self.third.iter_mut().enumerate() {
            *t = Matrix::from_fn(d, d, |a, b| t[(a, b)] * inv[a] * inv[b] * inv[l]);
        }
        self
    }
}

/// Falling factorial `n(n−1)…(n−a+1)`.
fn falling(n: u32, a: u32) -> f64 {
    if a > n {
        0.0
    } else {
        (0..a).map(|i| (n - i) as f64).product()
    }
}

/// Derivatives of `Σ c_b ξ^b` at `ξ` up to `order` (at most 3).
fn poly_jet(exponents: &[Vec<u32>], coef: &Vector, xi: &Vector, order: usize) -> Jet {
    let d = xi.len();
    let deg = exponents.iter().flatten().copied().max().unwrap_or(0) as usize;
    // powers[k][e] = ξ_k^e
    let powers: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut p = vec![1.0; deg + 1];
            for e in 1..=deg {
                p[e] = p[e - 1] * xi[k];
            }
            p
        })
        .collect();
    let mut alpha = vec![0u32; d];
    // ∂^α ξ^b
    let deriv = |b: &[u32], alpha: &[u32]| -> f64 {
        let mut out = 1.0;
        for k in 0..d {
            if alpha[k] > b[k] {
                return 0.0;
            }
            out *= falling(b[k], alpha[k]) * powers[k][(b[k] - alpha[k]) as usize];
        }
        out
    };
    let mut jet = Jet::zeros(d, order);
    for (b, &c) in exponents.iter().zip(coef.iter()) {
        if c == 0.0 {
            continue;
        }
        jet.value += c * deriv(b, &alpha);
        for k in 0..d {
            alpha[k] += 1;
            jet.grad[k] += c * deriv(b, &alpha);
            if order >= 2 {
                for m in k..d {
                    alpha[m] += 1;
                    jet.hess[(k, m)] += c * deriv(b, &alpha);
                    if order >= 3 {
                        for l in m..d {
                            alpha[l] += 1;
                            jet.third[l][(k, m)] += c * deriv(b, &alpha);
                            alpha[l] -= 1;
                        }
                    }
                    alpha[m] -= 1;
                }
            }
            alpha[k] -= 1;
        }
    }
    // Fill the symmetric entries from the sorted ones.
    for k in 0..d {
        for m in 0..k {
            jet.hess[(k, m)] = jet.hess[(m, k)];
        }
    }
    if order >= 3 {
        for k in 0..d {
            for m in 0..d {
                for l in 0..d {
                    let mut idx = [k, m, l];
                    idx.sort_unstable();
                    jet.third[l][(k, m)] = jet.third[idx[2]][(idx[0], idx[1])];
                }
            }
        }
    }
    jet
}

/// Settings of the regression fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConfig {
    pub degree: u32,
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            paths: 20_000,
            steps: 50,
            seed: 0,
        }
    }
}

/// Ridge penalty used when the normal equations are numerically singular.
pub const RIDGE_PENALTY: f64 = 1e-8;

/// Piecewise-linear-in-time polynomial approximation `V̂(t, x)`.
///
/// Slice `i` is a polynomial in the normalised features `(x − c_i)/s_i`.
#[derive(Clone)]
pub struct RegressionModel {
    problem: ControlProblem,
    degree: u32,
    exponents: Vec<Vec<u32>>,
    centers: Vec<Vector>,
    scales: Vec<Vector>,
    coefs: Vec<Vector>,
}

impl fmt::Debug for RegressionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegressionModel")
            .field("degree", &self.degree)
            .field("steps", &self.steps())
            .field("basis", &self.exponents.len())
            .finish()
    }
}

impl RegressionModel {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn steps(&self) -> usize {
        self.coefs.len() - 1
    }

    pub fn basis_size(&self) -> usize {
        self.exponents.len()
    }

    fn dt(&self) -> f64 {
        self.problem.horizon() / self.steps() as f64
    }

    fn slice_eval(&self, i: usize, x: &Vector, order: usize) -> Jet {
        let xi = (x - &self.centers[i]).component_div(&self.scales[i]);
        let inv = self.scales[i].map(|s| 1.0 / s);
        poly_jet(&self.exponents, &self.coefs[i], &xi, order).unscaled(&inv)
    }

    /// Linear interpolation in time between the two neighbouring slices.
    fn eval(&self, t: f64, x: &Vector, order: usize) -> Jet {
        let n = self.steps();
        let s = (t / self.dt()).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let theta = s - i as f64;
        let lo = self.slice_eval(i, x, order);
        if theta == 0.0 {
            return lo;
        }
        let hi = self.slice_eval(i + 1, x, order);
        lo.scaled(1.0 - theta).add(&hi.scaled(theta))
    }

    /// `z = σᵀ∇V̂`, its Jacobian and, if asked, the Jacobian's derivatives
    /// `∂_l J_jk = Σ_i ∂_lσ_ij H_ik + σ_ij T_ikl + ∂_k∂_lσ_ij g_i + ∂_kσ_ij H_il`,
    /// with `∂_k∂_lσ` from differences of the analytic `∂σ`.
    fn expansion(&self, jet: &Jet, x: &Vector, with_derivatives: bool) -> (Vector, Matrix, Option<Vec<Matrix>>) {
        let sigma = self.problem.diffusion(x);
        let coeffs = self.problem.coefficients();
        let ds = coeffs.diffusion_derivatives(x);
        let z = sigma.tr_mul(&jet.grad);
        let mut jac = sigma.tr_mul(&jet.hess);
        if let Some(ds) = &ds {
            for (k, dk) in ds.iter().enumerate() {
                let mut c = jac.column_mut(k);
                c += dk.tr_mul(&jet.grad);
            }
        }
        if !with_derivatives {
            return (z, jac, None);
        }
        let mut probe = x.clone();
        let djac = (0..x.len())
            .map(|l| {
                let mut dj = sigma.tr_mul(&jet.third[l]);
                let Some(ds) = &ds else { return dj };
                dj += ds[l].tr_mul(&jet.hess);
                let h = fd_step(x[l], COEFF_FD_REL);
                probe[l] = x[l] + h;
                let plus = coeffs.diffusion_derivatives(&probe);
                probe[l] = x[l] - h;
                let minus = coeffs.diffusion_derivatives(&probe);
                probe[l] = x[l];
                let hess_col = jet.hess.column(l).into_owned();
                for (k, dk) in ds.iter().enumerate() {
                    let mut col = dk.tr_mul(&hess_col);
                    if let (Some(p), Some(m)) = (&plus, &minus) {
                        col += (&p[k] - &m[k]).tr_mul(&jet.grad) / (2.0 * h);
                    }
                    let mut c = dj.column_mut(k);
                    c += &col;
                }
                dj
            })
            .collect();
        (z, jac, Some(djac))
    }

    pub fn value(&self, t: f64, x: &Vector) -> f64 {
        self.eval(t, x, 0).value
    }

    pub fn gradient(&self, t: f64, x: &Vector) -> Vector {
        self.eval(t, x, 1).grad
    }

    /// Feedback `u = argmin_u ⟨∇V̂, b(x,u)⟩ + r(x,u)`.
    pub fn feedback(&self) -> FeedbackControl {
        let model = self.clone();
        FeedbackControl::new(move |t, x| model.problem.inner_minimizer(x, &model.gradient(t, x)).0)
    }

    /// Flat text table: header lines, then one `coef` line per slice and
    /// basis function.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let join = |v: &Vector| v.iter().map(|c| format!("{c:e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "degree {}", self.degree).unwrap();
        writeln!(out, "dim {}", self.problem.state_dim()).unwrap();
        writeln!(out, "horizon {:e}", self.problem.horizon()).unwrap();
        writeln!(out, "steps {}", self.steps()).unwrap();
        for i in 0..=self.steps() {
            writeln!(out, "center {i} {}", join(&self.centers[i])).unwrap();
            writeln!(out, "scale {i} {}", join(&self.scales[i])).unwrap();
        }
        for i in 0..=self.steps() {
            for (b, c) in self.exponents.iter().zip(self.coefs[i].iter()) {
                let e = b.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
                writeln!(out, "coef {i} {e} {c:e}").unwrap();
            }
        }
        out
    }

    /// Parses [`RegressionModel::to_table`] output for `problem`.
    pub fn from_table(text: &str, problem: &ControlProblem) -> Result<Self> {
        let d = problem.state_dim();
        let mut degree = None;
        let mut steps = None;
        let mut centers: Vec<Option<Vector>> = Vec::new();
        let mut scales: Vec<Option<Vector>> = Vec::new();
        let mut coef_lines = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let bad = |message: String| Error::Parse { line: n + 1, message };
            let words: Vec<&str> = line.split_whitespace().collect();
            let Some((&key, rest)) = words.split_first() else { continue };
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
            match key {
                "degree" => degree = Some(int(rest.first().ok_or_else(|| bad("missing degree".into()))?)? as u32),
                "dim" => {
                    let dim = int(rest.first().ok_or_else(|| bad("missing dim".into()))?)?;
                    if dim != d {
                        return Err(bad(format!("table has dim {dim}, problem has d = {d}")));
                    }
                }
                "horizon" => {
                    let h = num(rest.first().ok_or_else(|| bad("missing horizon".into()))?)?;
                    if (h - problem.horizon()).abs() > 1e-12 * problem.horizon() {
                        return Err(bad(format!("table horizon {h} differs from the problem's")));
                    }
                }
                "steps" => {
                    let s = int(rest.first().ok_or_else(|| bad("missing steps".into()))?)?;
                    steps = Some(s);
                    centers = vec![None; s + 1];
                    scales = vec![None; s + 1];
                }
                "center" | "scale" => {
                    if rest.len() != d + 1 {
                        return Err(bad(format!("expected step index and {d} values")));
                    }
                    let i = int(rest[0])?;
                    let vals = rest[1..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                    let slot = if key == "center" { &mut centers } else { &mut scales };
                    *slot.get_mut(i).ok_or_else(|| bad(format!("step {i} out of range")))? = Some(Vector::from_vec(vals));
                }
                "coef" => {
                    if rest.len() != d + 2 {
                        return Err(bad(format!("expected step index, {d} exponents and a value")));
                    }
                    let i = int(rest[0])?;
                    let e = rest[1..=d].iter().map(|s| int(s).map(|e| e as u32)).collect::<Result<Vec<_>>>()?;
                    coef_lines.push((n + 1, i, e, num(rest[d + 1])?));
                }
                other => return Err(bad(format!("unknown record `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            line: 0,
            message: format!("table is missing {what}"),
        };
        let degree = degree.ok_or_else(|| missing("degree"))?;
        let steps = steps.ok_or_else(|| missing("steps"))?;
        if steps == 0 {
            return Err(missing("time steps"));
        }
        let exponents = monomial_exponents(d, degree);
        let mut coefs = vec![Vector::zeros(exponents.len()); steps + 1];
        for (line, i, e, c) in coef_lines {
            let k = exponents.iter().position(|b| *b == e).ok_or_else(|| Error::Parse {
                line,
                message: "exponents outside the basis".into(),
            })?;
            coefs.get_mut(i).ok_or_else(|| Error::Parse {
                line,
                message: format!("step {i} out of range"),
            })?[k] = c;
        }
        let centers = centers.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| missing("a center"))?;
        let scales = scales.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| missing("a scale"))?;
        Ok(Self {
            problem: problem.clone(),
            degree,
            exponents,
            centers,
            scales,
            coefs,
        })
    }
}

impl MartingaleModel for RegressionModel {
    fn state_dim(&self) -> usize {
        self.problem.state_dim()
    }
    fn noise_dim(&self) -> usize {
        self.problem.noise_dim()
    }
    /// `z = σ(x)ᵀ∇V̂(t,x)`.
    fn z(&self, t: f64, x: &Vector) -> Vector {
        self.problem.diffusion(x).tr_mul(&self.gradient(t, x))
    }
    /// `J_jk = (σᵀ∇²V̂)_jk + Σ_i ∂_kσ_ij ∂_iV̂`.
    fn jacobian(&self, t: f64, x: &Vector) -> Matrix {
        self.expansion(&self.eval(t, x, 2), x, false).1
    }
    fn jacobian_derivatives(&self, t: f64, x: &Vector) -> Option<Vec<Matrix>> {
        self.expansion(&self.eval(t, x, 3), x, true).2
    }
    fn local_expansion(&self, t: f64, x: &Vector) -> (Vector, Matrix, Option<Vec<Matrix>>) {
        self.expansion(&self.eval(t, x, 3), x, true)
    }
}

/// Solves `min |Φc − y|²`, switching to a ridge penalty if `ΦᵀΦ` is singular.
fn least_squares(phi: &Matrix, y: &Vector) -> Vector {
    let gram = phi.tr_mul(phi);
    let rhs = phi.tr_mul(y);
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if lo > 1e-12 * hi {
        if let Some(chol) = gram.clone().cholesky() {
            return chol.solve(&rhs);
        }
    }
    log::warn!("rank-deficient regression (eigenvalue ratio {:.2e}); using ridge penalty {RIDGE_PENALTY:e}", lo / hi);
    let scale = phi.nrows() as f64;
    let ridged = gram + Matrix::identity(phi.ncols(), phi.ncols()) * (RIDGE_PENALTY * scale);
    ridged.lu().solve(&rhs).unwrap_or_else(|| Vector::zeros(phi.ncols()))
}

fn design(exponents: &[Vec<u32>], samples: &[Vector], center: &Vector, scale: &Vector) -> Matrix {
    let d = center.len();
    Matrix::from_fn(samples.len(), exponents.len(), |r, c| {
        let xi = (&samples[r] - center).component_div(scale);
        (0..d).map(|k| xi[k].powi(exponents[c][k] as i32)).product()
    })
}

/// Backward least-squares fit of `V̂` along uncontrolled paths `dX̃ = σ(X̃)dW`.
///
/// Paths start from `x₀ + σ(x₀)√T·Z` so that every time slice, including
/// `t = 0`, sees a spread of states. At slice `i` the regression target is
/// `V̂_{i+1}(X̃_{i+1}) + f(X̃_i, ∇V̂_{i+1}(X̃_i)) δt` with
/// `f(x,p) = inf_u ⟨p, b(x,u)⟩ + r(x,u)`; the last slice regresses `g`.
pub fn fit_regression_model(problem: &ControlProblem, x0: &Vector, cfg: &RegressionConfig) -> Result<RegressionModel> {
    let d = problem.state_dim();
    if x0.len() != d {
        return Err(Error::Dimension("x0 does not match the problem dimension".into()));
    }
    if cfg.degree < 1 {
        return Err(Error::invalid("degree", "must be at least 1"));
    }
    if cfg.steps == 0 {
        return Err(Error::invalid("N_reg", "must be positive"));
    }
    let exponents = monomial_exponents(d, cfg.degree);
    if cfg.paths < 10 * exponents.len() {
        return Err(Error::invalid(
            "M_reg",
            format!("needs at least {} paths for {} basis functions", 10 * exponents.len(), exponents.len()),
        ));
    }
    let n = cfg.steps;
    let dt = problem.horizon() / n as f64;
    let spread = problem.diffusion(x0) * problem.horizon().sqrt();

    // states[i][m] = X̃ at slice i for path m.
    let mut states: Vec<Vec<Vector>> = vec![Vec::with_capacity(cfg.paths); n + 1];
    for m in 0..cfg.paths {
        let mut rng = stream(cfg.seed, Purpose::Regression, m as u64);
        let mut normal = |len: usize| Vector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = x0 + &spread * normal(problem.noise_dim());
        states[0].push(x.clone());
        for slice in states.iter_mut().skip(1) {
            let dw = normal(problem.noise_dim()) * dt.sqrt();
            x = &x + problem.diffusion(&x) * dw;
            slice.push(x.clone());
        }
    }

    let mut centers = vec![Vector::zeros(d); n + 1];
    let mut scales = vec![Vector::zeros(d); n + 1];
    for i in 0..=n {
        let mean = states[i].iter().fold(Vector::zeros(d), |acc, x| acc + x) / cfg.paths as f64;
        let var = states[i]
            .iter()
            .fold(Vector::zeros(d), |acc, x| acc + (x - &mean).map(|c| c * c))
            / cfg.paths as f64;
        scales[i] = var.map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        centers[i] = mean;
    }

    let mut model = RegressionModel {
        problem: problem.clone(),
        degree: cfg.degree,
        exponents,
        centers,
        scales,
        coefs: vec![Vector::zeros(0); n + 1],
    };
    let mut targets: Vector = Vector::from_iterator(cfg.paths, states[n].iter().map(|x| problem.terminal_cost(x)));
    for i in (0..=n).rev() {
        let phi = design(&model.exponents, &states[i], &model.centers[i], &model.scales[i]);
        if i < n {
            // One-step continuation with the running nonlinearity at the fitted gradient.
            targets = Vector::from_fn(cfg.paths, |m, _| {
                let next = &states[i + 1][m];
                let x = &states[i][m];
                let v_next = model.slice_eval(i + 1, next, 0).value;
                let grad = model.slice_eval(i + 1, x, 1).grad;
                let (_, f) = problem.inner_minimizer(x, &grad);
                v_next + f * dt
            });
        }
        model.coefs[i] = least_squares(&phi, &targets);
    }
    Ok(model)
}

/// Number of sine bumps per output component of a perturbation.
const BUMPS: usize = 3;

/// `z′ = z + amplitude·s(x)` with a fixed smooth bump field `s`.
pub struct PerturbedModel {
    base: Arc<dyn MartingaleModel>,
    amplitude: f64,
    /// Per output `j` and bump `q`: weight, frequency vector and phase.
    bumps: Vec<Vec<(f64, Vector, f64)>>,
}

impl PerturbedModel {
    fn field(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.bumps.len(), |j, _| {
            self.bumps[j].iter().map(|(c, w, phi)| c * (w.dot(x) + phi).sin()).sum()
        })
    }

    fn field_jacobian(&self, x: &Vector) -> Matrix {
        let mut jac = Matrix::zeros(self.bumps.len(), x.len());
        for (j, bumps) in self.bumps.iter().enumerate() {
            for (c, w, phi) in bumps {
                let s = c * (w.dot(x) + phi).cos();
                for k in 0..x.len() {
                    jac[(j, k)] += s * w[k];
                }
            }
        }
        jac
    }
}

/// Adds a seeded smooth perturbation of size `amplitude` to `base`.
pub fn perturbed_model(base: Arc<dyn MartingaleModel>, amplitude: f64, seed: u64) -> Result<Arc<dyn MartingaleModel>> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::invalid("amplitude", format!("must be nonnegative, got {amplitude}")));
    }
    let mut rng = stream(seed, Purpose::Perturbation, 0);
    let d = base.state_dim();
    let bumps = (0..base.noise_dim())
        .map(|_| {
            (0..BUMPS)
                .map(|_| {
                    let c: f64 = rng.sample::<f64, _>(StandardNormal) / (BUMPS as f64).sqrt();
                    let w = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let phi = rng.random::<f64>() * std::f64::consts::TAU;
                    (c, w, phi)
                })
                .collect()
        })
        .collect();
    Ok(Arc::new(PerturbedModel { base, amplitude, bumps }))
}

impl MartingaleModel for PerturbedModel {
    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }
    fn noise_dim(&self) -> usize {
        self.base.noise_dim()
    }
    fn z(&self, t: f64, x: &Vector) -> Vector {
        if self.amplitude == 0.0 {
            return self.base.z(t, x);
        }
        self.base.z(t, x) + self.field(x) * self.amplitude
    }
    fn jacobian(&self, t: f64, x: &Vector) -> Matrix {
        if self.amplitude == 0.0 {
            return self.base.jacobian(t, x);
        }
        self.base.jacobian(t, x) + self.field_jacobian(x) * self.amplitude
    }
    fn jacobian_derivatives(&self, t: f64, x: &Vector) -> Option<Vec<Matrix>> {
        let base = self.base.jacobian_derivatives(t, x);
        if self.amplitude == 0.0 {
            return base;
        }
        let d = x.len();
        let mut out = base.unwrap_or_else(|| vec![Matrix::zeros(self.bumps.len(), d); d]);
        for (j, bumps) in self.bumps.iter().enumerate() {
            for (c, w, phi) in bumps {
                let s = -self.amplitude * c * (w.dot(x) + phi).sin();
                for (m, dm) in out.iter_mut().enumerate() {
                    for k in 0..d {
                        dm[(j, k)] += s * w[k] * w[m];
                    }
                }
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fd_gradient;
    use crate::problem::{make_aiyagari, make_lq, make_lq_with_weights, make_ou, make_zero};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn lq_value_examples() {
        let lq = make_lq(2).unwrap();
        let (model, _) = analytic_model(&lq).unwrap();
        let Benchmark::Lq { a_diag } = lq.benchmark() else { unreachable!() };
        let exact = LqModel::new(a_diag.clone(), 1.0);
        assert!((exact.value(0.0, &Vector::zeros(2)) - 1.18812).abs() < 1e-5);
        assert_eq!(model.jacobian_derivatives(0.2, &Vector::zeros(2)), None);
    }

    #[test]
    fn lq_value_solves_hjb() {
        // ∂_tV + ΔV − |∇V|² = 0.
        let exact = LqModel::new(crate::problem::lq_weights(3), 1.0);
        for (t, x) in [(0.1, v(&[0.3, -0.2, 0.5])), (0.7, v(&[-1.0, 0.4, 0.1]))] {
            let h = 1e-4;
            let dt = (exact.value(t + h, &x) - exact.value(t - h, &x)) / (2.0 * h);
            let mut lap = 0.0;
            for k in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                lap += (exact.value(t, &xp) - 2.0 * exact.value(t, &x) + exact.value(t, &xm)) / (h * h);
            }
            let g = exact.gradient(t, &x);
            let fd = fd_gradient(|y| exact.value(t, y), &x, 1e-6);
            assert!((&g - fd).amax() < 1e-6);
            assert!((dt + lap - g.norm_squared()).abs() < 1e-5);
        }
    }

    #[test]
    fn ou_value_example() {
        let (la, lb) = (ou_lambda_a(2), ou_lambda_b(2));
        let by_hand = la.exp() * 2.0 - 2.0 * lb * lb / (4.0 * la) * ((2.0 * la).exp() - 1.0);
        assert!((ou_value(2, 1.0, 2.0) - by_hand).abs() < 1e-14);
        assert!((ou_value(2, 1.0, 2.0) - 0.19516).abs() < 1e-5);
        assert!(analytic_model(&make_aiyagari().unwrap()).is_err());
        assert!(analytic_model(&make_ou(3).unwrap()).is_ok());
    }

    #[test]
    fn zero_problem_upper_bound_is_exact() {
        let problem = make_zero(2).unwrap();
        let (_, control) = analytic_model(&problem).unwrap();
        let x0 = v(&[0.5, -0.5]);
        let cfg = PrimalConfig {
            samples: 16,
            n_steps: 10,
            ..PrimalConfig::default()
        };
        let est = simulate_upper_bound(&problem, &control, &x0, &cfg).unwrap();
        assert_eq!(est.mean, problem.terminal_cost(&x0));
        assert_eq!(est.half_width, 0.0);
        assert_eq!(est.method, Method::Primal);
    }

    #[test]
    fn monomials_are_complete() {
        let e = monomial_exponents(2, 3);
        assert_eq!(e.len(), 10);
        assert_eq!(e[0], vec![0, 0]);
        assert_eq!(monomial_exponents(3, 2).len(), 10);
    }

    #[test]
    fn polynomial_derivatives_match_differences() {
        let e = monomial_exponents(2, 3);
        let coef = Vector::from_fn(e.len(), |i, _| 0.3 * i as f64 - 1.0);
        let xi = v(&[0.4, -0.7]);
        let jet = poly_jet(&e, &coef, &xi, 3);
        let fd = fd_gradient(|y| poly_jet(&e, &coef, y, 0).value, &xi, 1e-6);
        assert!((&jet.grad - fd).amax() < 1e-7);
        for k in 0..2 {
            let fdk = fd_gradient(|y| poly_jet(&e, &coef, y, 1).grad[k], &xi, 1e-6);
            for m in 0..2 {
                assert!((jet.hess[(k, m)] - fdk[m]).abs() < 1e-6);
                let fdkm = fd_gradient(|y| poly_jet(&e, &coef, y, 2).hess[(k, m)], &xi, 1e-6);
                for l in 0..2 {
                    assert!((jet.third[l][(k, m)] - fdkm[l]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn regression_recovers_one_dimensional_lq() {
        let problem = make_lq_with_weights(v(&[1.0])).unwrap();
        let cfg = RegressionConfig {
            degree: 2,
            paths: 10_000,
            steps: 20,
            seed: 4,
        };
        let model = fit_regression_model(&problem, &Vector::zeros(1), &cfg).unwrap();
        let exact = LqModel::new(v(&[1.0]), 1.0);
        let worst = (0..=20)
            .map(|k| {
                let x = v(&[-1.0 + 0.1 * k as f64]);
                (model.value(0.0, &x) - exact.value(0.0, &x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "max error {worst}");
    }

    #[test]
    fn regression_table_round_trips() {
        let problem = make_aiyagari().unwrap();
        let cfg = RegressionConfig {
            degree: 2,
            paths: 600,
            steps: 4,
            seed: 1,
        };
        let model = fit_regression_model(&problem, problem.initial_state(), &cfg).unwrap();
        let text = model.to_table();
        let back = RegressionModel::from_table(&text, &problem).unwrap();
        let x = v(&[1.05, 0.52]);
        assert_eq!(model.value(0.037, &x), back.value(0.037, &x));
        assert_eq!(model.z(0.05, &x), back.z(0.05, &x));
        assert!(RegressionModel::from_table("degree 2\nbogus 1\n", &problem).is_err());
        assert!(RegressionModel::from_table(&text, &make_lq(3).unwrap()).is_err());
    }

    #[test]
    fn regression_jacobian_matches_differences() {
        let problem = make_aiyagari().unwrap();
        let cfg = RegressionConfig {
            degree: 3,
            paths: 2000,
            steps: 5,
            seed: 2,
        };
        let model = fit_regression_model(&problem, problem.initial_state(), &cfg).unwrap();
        let x = v(&[0.9, 0.55]);
        let jac = model.jacobian(0.033, &x);
        for j in 0..2 {
            let g = fd_gradient(|y| model.z(0.033, y)[j], &x, 1e-6);
            for k in 0..2 {
                assert!((jac[(j, k)] - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()));
            }
        }
        let djac = model.jacobian_derivatives(0.033, &x).unwrap();
        for l in 0..2 {
            let mut probe = x.clone();
            let h = 1e-5;
            probe[l] += h;
            let plus = model.jacobian(0.033, &probe);
            probe[l] -= 2.0 * h;
            let minus = model.jacobian(0.033, &probe);
            let fd = (plus - minus) / (2.0 * h);
            assert!((&djac[l] - &fd).amax() < 1e-5 * (1.0 + fd.amax()));
        }
    }

    #[test]
    fn perturbation_of_zero_size_is_identity() {
        let problem = make_lq(2).unwrap();
        let (base, _) = analytic_model(&problem).unwrap();
        let same = perturbed_model(base.clone(), 0.0, 9).unwrap();
        let x = v(&[0.3, -1.2]);
        assert_eq!(same.z(0.4, &x), base.z(0.4, &x));
        assert_eq!(same.jacobian(0.4, &x), base.jacobian(0.4, &x));
        let bumped = perturbed_model(base, 0.7, 9).unwrap();
        let jac = bumped.jacobian(0.4, &x);
        for j in 0..2 {
            let g = fd_gradient(|y| bumped.z(0.4, y)[j], &x, 1e-6);
            for k in 0..2 {
                assert!((jac[(j, k)] - g[k]).abs() < 1e-6);
            }
        }
        let dj = bumped.jacobian_derivatives(0.4, &x).unwrap();
        for m in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[m] += 1e-5;
            xm[m] -= 1e-5;
            let fd = (bumped.jacobian(0.4, &xp) - bumped.jacobian(0.4, &xm)) / 2e-5;
            assert!((&dj[m] - fd).amax() < 1e-6);
        }
        assert!(perturbed_model(analytic_model(&problem).unwrap().0, -1.0, 0).is_err());
    }
}
