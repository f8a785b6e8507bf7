//! Control problem instances and the three benchmark constructors.
//!
//! A problem is `dX = b(X,u) dt + σ(X) dW`, cost `∫ r(X,u) dt + g(X_T)`,
//! together with the convex conjugate of `g` and an analytic minimiser of
//! `u ↦ ⟨p, b(x,u)⟩ + r(x,u)`.

use std::fmt;
use std::sync::Arc;

use crate::numeric::fd_step;
use crate::{Error, Matrix, Result, Vector};

/// Step for the finite-difference fallbacks of coefficient derivatives.
pub const COEFF_FD_REL: f64 = 1e-6;

/// Sup-norm tolerance for the affine-indicator constraint.
pub const INDICATOR_TOL: f64 = 1e-6;

/// Coordinate-wise clamp bounds for the control.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBox {
    pub lower: Vector,
    pub upper: Vector,
}

impl ControlBox {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("control box bounds differ in length".into()));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid("control_box", "lower bound above upper bound"));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(Vector::from_element(dim, lower), Vector::from_element(dim, upper))
    }

    pub fn clamp(&self, u: &mut Vector) {
        for k in 0..u.len() {
            u[k] = u[k].clamp(self.lower[k], self.upper[k]);
        }
    }

    pub fn contains(&self, u: &Vector) -> bool {
        (0..u.len()).all(|k| u[k] >= self.lower[k] && u[k] <= self.upper[k])
    }

    /// Distance of `u` from the nearest face of the box.
    pub fn boundary_distance(&self, u: &Vector) -> f64 {
        (0..u.len())
            .map(|k| (u[k] - self.lower[k]).abs().min((self.upper[k] - u[k]).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

fn clamp_opt(bounds: Option<&ControlBox>, mut u: Vector) -> Vector {
    if let Some(b) = bounds {
        b.clamp(&mut u);
    }
    u
}

/// Coefficient functions of a control problem.
///
/// Only the value-level maps are required. Derivatives fall back to central
/// differences with step `1e-6·(1+|x|)`; the benchmarks override them.
pub trait Coefficients: Send + Sync {
    fn drift(&self, x: &Vector, u: &Vector) -> Vector;
    fn diffusion(&self, x: &Vector) -> Matrix;
    fn running_cost(&self, x: &Vector, u: &Vector) -> f64;
    fn terminal_cost(&self, x: &Vector) -> f64;
    fn terminal_grad(&self, x: &Vector) -> Vector;

    /// Minimiser of `u ↦ ⟨p, b(x,u)⟩ + r(x,u)` over the box, with the minimum.
    fn inner_minimizer(&self, x: &Vector, p: &Vector, bounds: Option<&ControlBox>) -> (Vector, f64);

    /// `∂_x [⟨p, b(x,u)⟩ + r(x,u)]` at fixed `u`.
    fn drift_cost_grad_x(&self, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        let mut probe = x.clone();
        Vector::from_fn(x.len(), |k, _| {
            let h = fd_step(x[k], COEFF_FD_REL);
            probe[k] = x[k] + h;
            let plus = p.dot(&self.drift(&probe, u)) + self.running_cost(&probe, u);
            probe[k] = x[k] - h;
            let minus = p.dot(&self.drift(&probe, u)) + self.running_cost(&probe, u);
            probe[k] = x[k];
            (plus - minus) / (2.0 * h)
        })
    }

    /// `[∂σ/∂x_1, …, ∂σ/∂x_d]`, or `None` when σ does not depend on x.
    fn diffusion_derivatives(&self, x: &Vector) -> Option<Vec<Matrix>> {
        let mut probe = x.clone();
        Some(
            (0..x.len())
                .map(|k| {
                    let h = fd_step(x[k], COEFF_FD_REL);
                    probe[k] = x[k] + h;
                    let plus = self.diffusion(&probe);
                    probe[k] = x[k] - h;
                    let minus = self.diffusion(&probe);
                    probe[k] = x[k];
                    (plus - minus) / (2.0 * h)
                })
                .collect(),
        )
    }

    /// Stratonovich correction `(∇σ:σ)_i = Σ_j Σ_k (∂_{x_k} σ_ij) σ_kj`.
    fn strat_correction(&self, x: &Vector) -> Vector {
        let Some(ds) = self.diffusion_derivatives(x) else {
            return Vector::zeros(x.len());
        };
        let sigma = self.diffusion(x);
        Vector::from_fn(x.len(), |i, _| {
            let mut acc = 0.0;
            for j in 0..sigma.ncols() {
                for (k, dk) in ds.iter().enumerate() {
                    acc += dk[(i, j)] * sigma[(k, j)];
                }
            }
            acc
        })
    }

    /// `(∂c/∂x)ᵀ q` for the Stratonovich correction `c`.
    fn strat_correction_vjp(&self, x: &Vector, q: &Vector) -> Vector {
        if self.diffusion_derivatives(x).is_none() {
            return Vector::zeros(x.len());
        }
        let mut probe = x.clone();
        Vector::from_fn(x.len(), |k, _| {
            let h = fd_step(x[k], COEFF_FD_REL);
            probe[k] = x[k] + h;
            let plus = q.dot(&self.strat_correction(&probe));
            probe[k] = x[k] - h;
            let minus = q.dot(&self.strat_correction(&probe));
            probe[k] = x[k];
            (plus - minus) / (2.0 * h)
        })
    }
}

/// Conjugate value and gradient; `None` outside the effective domain.
pub type ConjugateFn = Arc<dyn Fn(&Vector) -> Option<(f64, Vector)> + Send + Sync>;

/// Convex conjugate `g*` of the terminal cost.
#[derive(Clone)]
pub enum Conjugate {
    Smooth(ConjugateFn),
    /// `g*(p) = free_part(p)` when `p_i = target_i` for all constrained `i`,
    /// `+∞` otherwise. `free_part` depends only on unconstrained coordinates.
    AffineIndicator {
        target: Vector,
        constrained: Vec<bool>,
        free_part: Option<ConjugateFn>,
    },
}

impl fmt::Debug for Conjugate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjugate::Smooth(_) => f.write_str("Smooth(..)"),
            Conjugate::AffineIndicator {
                target,
                constrained,
                free_part,
            } => f
                .debug_struct("AffineIndicator")
                .field("target", &target.as_slice())
                .field("constrained", constrained)
                .field("free_part", &free_part.is_some())
                .finish(),
        }
    }
}

impl Conjugate {
    /// `g*(p)`, possibly `+∞`.
    pub fn value(&self, p: &Vector) -> f64 {
        match self {
            Conjugate::Smooth(f) => f(p).map_or(f64::INFINITY, |(v, _)| v),
            Conjugate::AffineIndicator { .. } => {
                if self.constraint_residual(p) > INDICATOR_TOL {
                    f64::INFINITY
                } else {
                    self.free_value(p)
                }
            }
        }
    }

    /// The finite part of `g*`: the whole conjugate when smooth, the free
    /// part for an indicator (zero if there is none).
    pub(crate) fn free_value_grad(&self, p: &Vector) -> Option<(f64, Vector)> {
        match self {
            Conjugate::Smooth(f) => f(p),
            Conjugate::AffineIndicator { free_part, .. } => match free_part {
                Some(f) => f(p),
                None => Some((0.0, Vector::zeros(p.len()))),
            },
        }
    }

    fn free_value(&self, p: &Vector) -> f64 {
        self.free_value_grad(p).map_or(f64::INFINITY, |(v, _)| v)
    }

    /// Sup-norm violation of the constrained coordinates (0 when smooth).
    pub fn constraint_residual(&self, p: &Vector) -> f64 {
        match self {
            Conjugate::Smooth(_) => 0.0,
            Conjugate::AffineIndicator {
                target, constrained, ..
            } => (0..p.len())
                .filter(|&i| constrained[i])
                .map(|i| (p[i] - target[i]).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Conjugate::Smooth(_))
    }
}

/// Which closed-form structure a problem carries, for oracles and analytic models.
#[derive(Debug, Clone, PartialEq)]
pub enum Benchmark {
    Lq { a_diag: Vector },
    Ou { a: Matrix, b: Matrix, gamma: Vector },
    Aiyagari,
    Zero { a_diag: Vector },
    Custom,
}

/// A stochastic control problem instance. Immutable and cheap to clone.
#[derive(Clone)]
pub struct ControlProblem {
    name: String,
    benchmark: Benchmark,
    state_dim: usize,
    noise_dim: usize,
    control_dim: usize,
    horizon: f64,
    initial_state: Vector,
    control_box: Option<ControlBox>,
    conjugate: Conjugate,
    coeffs: Arc<dyn Coefficients>,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .field("control_dim", &self.control_dim)
            .field("horizon", &self.horizon)
            .field("initial_state", &self.initial_state.as_slice())
            .field("control_box", &self.control_box)
            .field("conjugate", &self.conjugate)
            .finish()
    }
}

impl ControlProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        benchmark: Benchmark,
        state_dim: usize,
        noise_dim: usize,
        control_dim: usize,
        horizon: f64,
        conjugate: Conjugate,
        coeffs: Arc<dyn Coefficients>,
    ) -> Result<Self> {
        if state_dim == 0 || noise_dim == 0 || control_dim == 0 {
            return Err(Error::invalid("dimension", "state, noise and control dimensions must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if let Conjugate::AffineIndicator {
            target, constrained, ..
        } = &conjugate
        {
            if target.len() != state_dim || constrained.len() != state_dim {
                return Err(Error::Dimension("indicator conjugate has wrong length".into()));
            }
        }
        Ok(Self {
            name: name.into(),
            benchmark,
            state_dim,
            noise_dim,
            control_dim,
            horizon,
            initial_state: Vector::zeros(state_dim),
            control_box: None,
            conjugate,
            coeffs,
        })
    }

    pub fn with_initial_state(mut self, x0: Vector) -> Result<Self> {
        if x0.len() != self.state_dim {
            return Err(Error::Dimension(format!(
                "initial state has {} entries, problem has d = {}",
                x0.len(),
                self.state_dim
            )));
        }
        self.initial_state = x0;
        Ok(self)
    }

    pub fn with_control_box(mut self, bounds: Option<ControlBox>) -> Result<Self> {
        if let Some(b) = &bounds {
            if b.lower.len() != self.control_dim {
                return Err(Error::Dimension("control box does not match control dimension".into()));
            }
        }
        self.control_box = bounds;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn benchmark(&self) -> &Benchmark {
        &self.benchmark
    }
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    pub fn control_dim(&self) -> usize {
        self.control_dim
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn initial_state(&self) -> &Vector {
        &self.initial_state
    }
    pub fn control_box(&self) -> Option<&ControlBox> {
        self.control_box.as_ref()
    }
    pub fn conjugate(&self) -> &Conjugate {
        &self.conjugate
    }
    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coeffs.as_ref()
    }

    pub fn drift(&self, x: &Vector, u: &Vector) -> Vector {
        self.coeffs.drift(x, u)
    }
    pub fn diffusion(&self, x: &Vector) -> Matrix {
        self.coeffs.diffusion(x)
    }
    pub fn running_cost(&self, x: &Vector, u: &Vector) -> f64 {
        self.coeffs.running_cost(x, u)
    }
    pub fn terminal_cost(&self, x: &Vector) -> f64 {
        self.coeffs.terminal_cost(x)
    }
    pub fn terminal_grad(&self, x: &Vector) -> Vector {
        self.coeffs.terminal_grad(x)
    }
    pub fn strat_correction(&self, x: &Vector) -> Vector {
        self.coeffs.strat_correction(x)
    }

    /// `(u*, min_u ⟨p, b(x,u)⟩ + r(x,u))` over this problem's control box.
    pub fn inner_minimizer(&self, x: &Vector, p: &Vector) -> (Vector, f64) {
        self.coeffs.inner_minimizer(x, p, self.control_box.as_ref())
    }

    /// The admissible control closest to zero.
    pub fn default_control(&self) -> Vector {
        clamp_opt(self.control_box.as_ref(), Vector::zeros(self.control_dim))
    }

    pub fn clamp_control(&self, u: Vector) -> Vector {
        clamp_opt(self.control_box.as_ref(), u)
    }
}

/// Diagonal of the LQ terminal weight: `diag(1, 4/25, 4, …, 4)`.
pub fn lq_weights(d: usize) -> Vector {
    Vector::from_fn(d, |i, _| match i {
        0 => 1.0,
        1 => 4.0 / 25.0,
        _ => 4.0,
    })
}

fn quadratic_conjugate(a_diag: &Vector) -> ConjugateFn {
    // A is diagonal, so A⁻¹ is exact.
    let inv = a_diag.map(|a| 1.0 / a);
    Arc::new(move |p: &Vector| {
        let grad = p.component_mul(&inv);
        Some((0.5 * p.dot(&grad) - 0.5, grad))
    })
}

#[derive(Debug)]
struct Lq {
    a_diag: Vector,
}

impl Coefficients for Lq {
    fn drift(&self, _x: &Vector, u: &Vector) -> Vector {
        u * 2.0
    }
    fn diffusion(&self, x: &Vector) -> Matrix {
        Matrix::identity(x.len(), x.len()) * std::f64::consts::SQRT_2
    }
    fn running_cost(&self, _x: &Vector, u: &Vector) -> f64 {
        u.norm_squared()
    }
    fn terminal_cost(&self, x: &Vector) -> f64 {
        0.5 * (x.component_mul(&self.a_diag).dot(x) + 1.0)
    }
    fn terminal_grad(&self, x: &Vector) -> Vector {
        x.component_mul(&self.a_diag)
    }
    fn inner_minimizer(&self, _x: &Vector, p: &Vector, bounds: Option<&ControlBox>) -> (Vector, f64) {
        // 2⟨p,u⟩ + |u|² is separable, so clamping the free minimiser is exact.
        let u = clamp_opt(bounds, -p);
        let value = 2.0 * p.dot(&u) + u.norm_squared();
        (u, value)
    }
    fn drift_cost_grad_x(&self, x: &Vector, _u: &Vector, _p: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn diffusion_derivatives(&self, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// Linear–quadratic benchmark: `b = 2u`, `σ = √2 I`, `r = |u|²`,
/// `g = ½(xᵀAx + 1)`, `T = 1`, `x₀ = 0`.
pub fn make_lq(d: usize) -> Result<ControlProblem> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    make_lq_with_weights(lq_weights(d))
}

/// LQ problem with an arbitrary positive diagonal terminal weight.
pub fn make_lq_with_weights(a_diag: Vector) -> Result<ControlProblem> {
    let d = a_diag.len();
    if d == 0 || a_diag.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::invalid("A", "diagonal weights must be positive"));
    }
    ControlProblem::new(
        "lq",
        Benchmark::Lq {
            a_diag: a_diag.clone(),
        },
        d,
        d,
        d,
        1.0,
        Conjugate::Smooth(quadratic_conjugate(&a_diag)),
        Arc::new(Lq { a_diag }),
    )
}

#[derive(Debug)]
struct Ou {
    a: Matrix,
    b: Matrix,
    gamma: Vector,
}

impl Coefficients for Ou {
    fn drift(&self, x: &Vector, u: &Vector) -> Vector {
        &self.a * x + &self.b * u
    }
    fn diffusion(&self, _x: &Vector) -> Matrix {
        self.b.clone()
    }
    fn running_cost(&self, _x: &Vector, u: &Vector) -> f64 {
        0.5 * u.norm_squared()
    }
    fn terminal_cost(&self, x: &Vector) -> f64 {
        self.gamma.dot(x)
    }
    fn terminal_grad(&self, _x: &Vector) -> Vector {
        self.gamma.clone()
    }
    fn inner_minimizer(&self, x: &Vector, p: &Vector, bounds: Option<&ControlBox>) -> (Vector, f64) {
        let btp = self.b.tr_mul(p);
        let u = clamp_opt(bounds, -&btp);
        let value = p.dot(&(&self.a * x)) + btp.dot(&u) + 0.5 * u.norm_squared();
        (u, value)
    }
    fn drift_cost_grad_x(&self, _x: &Vector, _u: &Vector, p: &Vector) -> Vector {
        self.a.tr_mul(p)
    }
    fn diffusion_derivatives(&self, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// Interaction constants of the Ornstein–Uhlenbeck benchmark.
pub const OU_DRIFT_COUPLING: f64 = 0.12;
pub const OU_NOISE_COUPLING: f64 = 0.1;

/// Controlled Ornstein–Uhlenbeck benchmark: `b = Ax + Bu`, `σ = B`,
/// `r = ½|u|²`, `g = γ·x`, with `A = −I + 0.12`, `B = I + 0.1` (entrywise
/// offsets), `γ = 𝟙`, `T = 1`, `x₀ = 𝟙`.
pub fn make_ou(d: usize) -> Result<ControlProblem> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    let a = Matrix::from_element(d, d, OU_DRIFT_COUPLING) - Matrix::identity(d, d);
    let b = Matrix::from_element(d, d, OU_NOISE_COUPLING) + Matrix::identity(d, d);
    let gamma = Vector::from_element(d, 1.0);
    ControlProblem::new(
        "ou",
        Benchmark::Ou {
            a: a.clone(),
            b: b.clone(),
            gamma: gamma.clone(),
        },
        d,
        d,
        d,
        1.0,
        Conjugate::AffineIndicator {
            target: gamma.clone(),
            constrained: vec![true; d],
            free_part: None,
        },
        Arc::new(Ou { a, b, gamma }),
    )?
    .with_initial_state(Vector::from_element(d, 1.0))
}

/// `r̄(z) = 0.04(z − 1.1)e^{0.2z} − 1 + 0.95z`.
pub fn aiyagari_rbar(z: f64) -> f64 {
    0.04 * (z - 1.1) * (0.2 * z).exp() - 1.0 + 0.95 * z
}

fn aiyagari_rbar_prime(z: f64) -> f64 {
    0.04 * (0.2 * z).exp() * (1.0 + 0.2 * (z - 1.1)) + 0.95
}

/// `ḡ(z) = 0.2 e^{0.2z}`.
pub fn aiyagari_gbar(z: f64) -> f64 {
    0.2 * (0.2 * z).exp()
}

/// Legendre transform of `ḡ`: `5p ln(25p) − 5p` for `p > 0`, `0` at `p = 0`,
/// `+∞` for `p < 0`.
pub fn aiyagari_gbar_conjugate(p: f64) -> f64 {
    if p > 0.0 {
        5.0 * p * (25.0 * p).ln() - 5.0 * p
    } else if p == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug)]
struct Aiyagari;

impl Coefficients for Aiyagari {
    fn drift(&self, x: &Vector, u: &Vector) -> Vector {
        Vector::from_vec(vec![1.0 - x[0], 0.95 * x[0] - u[0]])
    }
    fn diffusion(&self, x: &Vector) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.1 * x[1]]))
    }
    fn running_cost(&self, x: &Vector, u: &Vector) -> f64 {
        -u[0].ln() + aiyagari_rbar(x[0])
    }
    fn terminal_cost(&self, x: &Vector) -> f64 {
        aiyagari_gbar(x[0]) - x[1]
    }
    fn terminal_grad(&self, x: &Vector) -> Vector {
        Vector::from_vec(vec![0.04 * (0.2 * x[0]).exp(), -1.0])
    }
    fn inner_minimizer(&self, x: &Vector, p: &Vector, bounds: Option<&ControlBox>) -> (Vector, f64) {
        // u ↦ −p₂u − ln u is convex; for p₂ ≥ 0 it decreases without bound.
        let raw = if p[1] < 0.0 { -1.0 / p[1] } else { f64::INFINITY };
        let u = clamp_opt(bounds, Vector::from_element(1, raw));
        let value = p[0] * (1.0 - x[0]) + p[1] * (0.95 * x[0] - u[0]) - u[0].ln() + aiyagari_rbar(x[0]);
        (u, value)
    }
    fn drift_cost_grad_x(&self, x: &Vector, _u: &Vector, p: &Vector) -> Vector {
        Vector::from_vec(vec![-p[0] + 0.95 * p[1] + aiyagari_rbar_prime(x[0]), 0.0])
    }
    fn diffusion_derivatives(&self, _x: &Vector) -> Option<Vec<Matrix>> {
        Some(vec![
            Matrix::zeros(2, 2),
            Matrix::from_diagonal(&Vector::from_vec(vec![0.0, 0.1])),
        ])
    }
    fn strat_correction(&self, x: &Vector) -> Vector {
        Vector::from_vec(vec![0.0, 0.01 * x[1]])
    }
    fn strat_correction_vjp(&self, _x: &Vector, q: &Vector) -> Vector {
        Vector::from_vec(vec![0.0, 0.01 * q[1]])
    }
}

/// Default consumption bounds for the growth model.
pub const AIYAGARI_CONTROL_BOX: (f64, f64) = (1e-3, 1e3);

/// Aiyagari growth model in minimisation form, state `(Z, A)`, `T = 0.1`,
/// `x₀ = (1.0, 0.5)`, consumption clamped to `[1e-3, 1e3]`.
pub fn make_aiyagari() -> Result<ControlProblem> {
    let free: ConjugateFn = Arc::new(|p: &Vector| {
        if p[0] > 0.0 {
            let mut grad = Vector::zeros(2);
            grad[0] = 5.0 * (25.0 * p[0]).ln();
            Some((aiyagari_gbar_conjugate(p[0]), grad))
        } else {
            None
        }
    });
    ControlProblem::new(
        "aiyagari",
        Benchmark::Aiyagari,
        2,
        2,
        1,
        0.1,
        Conjugate::AffineIndicator {
            target: Vector::from_vec(vec![0.0, -1.0]),
            constrained: vec![false, true],
            free_part: Some(free),
        },
        Arc::new(Aiyagari),
    )?
    .with_initial_state(Vector::from_vec(vec![1.0, 0.5]))?
    .with_control_box(Some(ControlBox::uniform(
        1,
        AIYAGARI_CONTROL_BOX.0,
        AIYAGARI_CONTROL_BOX.1,
    )?))
}

#[derive(Debug)]
struct ZeroDynamics {
    a_diag: Vector,
}

impl Coefficients for ZeroDynamics {
    fn drift(&self, x: &Vector, _u: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn diffusion(&self, x: &Vector) -> Matrix {
        Matrix::zeros(x.len(), x.len())
    }
    fn running_cost(&self, _x: &Vector, _u: &Vector) -> f64 {
        0.0
    }
    fn terminal_cost(&self, x: &Vector) -> f64 {
        0.5 * (x.component_mul(&self.a_diag).dot(x) + 1.0)
    }
    fn terminal_grad(&self, x: &Vector) -> Vector {
        x.component_mul(&self.a_diag)
    }
    fn inner_minimizer(&self, x: &Vector, _p: &Vector, bounds: Option<&ControlBox>) -> (Vector, f64) {
        (clamp_opt(bounds, Vector::zeros(x.len())), 0.0)
    }
    fn drift_cost_grad_x(&self, x: &Vector, _u: &Vector, _p: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn diffusion_derivatives(&self, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// Zero-coefficient debug problem: `b = 0`, `σ = 0`, `r = 0`, with the LQ
/// terminal cost, so every method must return `g(x₀)`.
pub fn make_zero(d: usize) -> Result<ControlProblem> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    let a_diag = lq_weights(d);
    ControlProblem::new(
        "zero",
        Benchmark::Zero {
            a_diag: a_diag.clone(),
        },
        d,
        d,
        d,
        1.0,
        Conjugate::Smooth(quadratic_conjugate(&a_diag)),
        Arc::new(ZeroDynamics { a_diag }),
    )
}

/// Looks up a benchmark by its configuration name.
pub fn by_name(name: &str, d: usize) -> Result<ControlProblem> {
    match name {
        "lq" => make_lq(d),
        "ou" => make_ou(d),
        "aiyagari" => {
            if d != 2 {
                return Err(Error::Config(format!("aiyagari has d = 2, got d = {d}")));
            }
            make_aiyagari()
        }
        "zero" => make_zero(d),
        other => Err(Error::Config(format!("unknown problem `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn lq_terminal_cost_and_inner_minimum() {
        let lq = make_lq(2).unwrap();
        assert_eq!(lq.terminal_cost(&Vector::zeros(2)), 0.5);
        let (u, value) = lq.inner_minimizer(&Vector::zeros(2), &v(&[1.0, 0.0]));
        assert_eq!(u, v(&[-1.0, 0.0]));
        assert_eq!(value, -1.0);
        assert!((lq.conjugate().value(&Vector::zeros(2)) + 0.5).abs() < 1e-15);
        assert_eq!(lq.initial_state(), &Vector::zeros(2));
    }

    #[test]
    fn ou_matrices() {
        let ou = make_ou(2).unwrap();
        let Benchmark::Ou { a, b, .. } = ou.benchmark() else {
            panic!("not ou")
        };
        assert!((a[(0, 0)] + 0.88).abs() < 1e-15 && (a[(0, 1)] - 0.12).abs() < 1e-15);
        assert!((b[(0, 0)] - 1.1).abs() < 1e-15 && (b[(1, 0)] - 0.1).abs() < 1e-15);
        assert_eq!(ou.strat_correction(&v(&[0.3, -2.0])), Vector::zeros(2));
        let (_, value) = ou.inner_minimizer(&Vector::zeros(2), &v(&[1.0, 1.0]));
        assert!((value + 1.44).abs() < 1e-12);
        assert_eq!(ou.initial_state(), &v(&[1.0, 1.0]));
    }

    #[test]
    fn aiyagari_coefficients() {
        let ai = make_aiyagari().unwrap();
        let c = ai.strat_correction(&v(&[3.0, 1.0]));
        assert!(c[0].abs() < 1e-15 && (c[1] - 0.01).abs() < 1e-15);
        assert!((aiyagari_rbar(1.1) - 0.045).abs() < 1e-12);
        assert!((aiyagari_gbar_conjugate(0.04) + 0.2).abs() < 1e-12);
        assert_eq!(aiyagari_gbar_conjugate(0.0), 0.0);
        assert_eq!(aiyagari_gbar_conjugate(-0.1), f64::INFINITY);
        // p₂ ≥ 0 pushes consumption to the upper clamp.
        let (u, _) = ai.inner_minimizer(&v(&[1.0, 1.0]), &v(&[0.1, 0.5]));
        assert_eq!(u[0], AIYAGARI_CONTROL_BOX.1);
        let (u, _) = ai.inner_minimizer(&v(&[1.0, 1.0]), &v(&[0.1, -1e6]));
        assert_eq!(u[0], AIYAGARI_CONTROL_BOX.0);
        let (u, _) = ai.inner_minimizer(&v(&[1.0, 1.0]), &v(&[0.1, -0.5]));
        assert!((u[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_conjugate_values() {
        let ou = make_ou(3).unwrap();
        let g = ou.conjugate();
        assert_eq!(g.value(&Vector::from_element(3, 1.0)), 0.0);
        assert_eq!(g.value(&v(&[1.0, 1.0, 1.1])), f64::INFINITY);
        let ai = make_aiyagari().unwrap();
        assert!((ai.conjugate().value(&v(&[0.04, -1.0])) + 0.2).abs() < 1e-12);
        assert_eq!(ai.conjugate().value(&v(&[0.04, -0.9])), f64::INFINITY);
        assert_eq!(ai.conjugate().value(&v(&[-0.04, -1.0])), f64::INFINITY);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(make_lq(0).is_err());
        assert!(make_ou(0).is_err());
        assert!(make_lq(2).unwrap().with_initial_state(Vector::zeros(3)).is_err());
        assert!(by_name("aiyagari", 3).is_err());
        assert!(by_name("heston", 2).is_err());
    }

    #[test]
    fn zero_problem_is_inert() {
        let z = make_zero(3).unwrap();
        let x = v(&[0.2, -0.1, 0.4]);
        assert_eq!(z.drift(&x, &x), Vector::zeros(3));
        assert_eq!(z.diffusion(&x), Matrix::zeros(3, 3));
        assert_eq!(z.inner_minimizer(&x, &x).1, 0.0);
    }
}
