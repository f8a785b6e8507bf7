//! Pathwise effective coefficients and the control-minimised Hamiltonian.
//!
//! With the noise path frozen, the dual problem is deterministic with drift
//! `b̃ = b − ½(∇σ:σ) + σẇ` and cost `r̃ = r − ⟨z,ẇ⟩ + ½Tr(σ J_x z)`. Everything
//! the two pathwise solvers need is evaluated here.

use std::sync::Arc;

use crate::noise::NoisePath;
use crate::numeric::fd_step;
use crate::problem::ControlProblem;
use crate::{Error, Matrix, Result, Vector};

/// Step for the finite-difference Jacobian fallback of a martingale model.
pub const MODEL_FD_REL: f64 = 1e-6;
/// Coarser step for second derivatives taken by differencing a Jacobian.
pub const MODEL_FD2_REL: f64 = 1e-4;

/// A dual test function `z(t,x) ≈ ∇V(t,x)ᵀσ(x)`, with values in `ℝ^{d′}`.
pub trait MartingaleModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;

    fn z(&self, t: f64, x: &Vector) -> Vector;

    /// `J_x z`, a `d′×d` matrix whose row `j` is `∇_x z_j`.
    fn jacobian(&self, t: f64, x: &Vector) -> Matrix {
        let mut probe = x.clone();
        let mut jac = Matrix::zeros(self.noise_dim(), x.len());
        for k in 0..x.len() {
            let h = fd_step(x[k], MODEL_FD_REL);
            probe[k] = x[k] + h;
            let plus = self.z(t, &probe);
            probe[k] = x[k] - h;
            let minus = self.z(t, &probe);
            probe[k] = x[k];
            jac.set_column(k, &((plus - minus) / (2.0 * h)));
        }
        jac
    }

    /// `[∂J/∂x_1, …, ∂J/∂x_d]`, or `None` when `J` does not depend on x.
    fn jacobian_derivatives(&self, t: f64, x: &Vector) -> Option<Vec<Matrix>> {
        let mut probe = x.clone();
        Some(
            (0..x.len())
                .map(|k| {
                    let h = fd_step(x[k], MODEL_FD2_REL);
                    probe[k] = x[k] + h;
                    let plus = self.jacobian(t, &probe);
                    probe[k] = x[k] - h;
                    let minus = self.jacobian(t, &probe);
                    probe[k] = x[k];
                    (plus - minus) / (2.0 * h)
                })
                .collect(),
        )
    }

    /// `(z, J, ∂J)` together; override when the three share work.
    fn local_expansion(&self, t: f64, x: &Vector) -> (Vector, Matrix, Option<Vec<Matrix>>) {
        (self.z(t, x), self.jacobian(t, x), self.jacobian_derivatives(t, x))
    }
}

/// `z ≡ 0`: the dual problem without a martingale penalty.
#[derive(Debug, Clone, Copy)]
pub struct ZeroModel {
    state_dim: usize,
    noise_dim: usize,
}

impl ZeroModel {
    pub fn new(state_dim: usize, noise_dim: usize) -> Self {
        Self {
            state_dim,
            noise_dim,
        }
    }

    pub fn for_problem(problem: &ControlProblem) -> Self {
        Self::new(problem.state_dim(), problem.noise_dim())
    }
}

impl MartingaleModel for ZeroModel {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn z(&self, _t: f64, _x: &Vector) -> Vector {
        Vector::zeros(self.noise_dim)
    }
    fn jacobian(&self, _t: f64, x: &Vector) -> Matrix {
        Matrix::zeros(self.noise_dim, x.len())
    }
    fn jacobian_derivatives(&self, _t: f64, _x: &Vector) -> Option<Vec<Matrix>> {
        None
    }
}

/// A problem, a martingale model and one frozen noise path.
#[derive(Clone)]
pub struct PathwiseContext {
    problem: ControlProblem,
    model: Arc<dyn MartingaleModel>,
    path: NoisePath,
}

/// Quantities at `(t, x)` that do not depend on `u` or `p`.
struct Frame {
    wdot: Vector,
    sigma: Matrix,
    strat: Vector,
    z: Vector,
    jac: Matrix,
    /// Filled only for frames that need `∂_x𝓗`.
    djac: Option<Vec<Matrix>>,
}

impl PathwiseContext {
    pub fn new(problem: ControlProblem, model: Arc<dyn MartingaleModel>, path: NoisePath) -> Result<Self> {
        if path.noise_dim() != problem.noise_dim() {
            return Err(Error::Dimension(format!(
                "noise path has d′ = {}, problem has d′ = {}",
                path.noise_dim(),
                problem.noise_dim()
            )));
        }
        if model.state_dim() != problem.state_dim() || model.noise_dim() != problem.noise_dim() {
            return Err(Error::Dimension(format!(
                "martingale model is {}→{}, problem needs {}→{}",
                model.state_dim(),
                model.noise_dim(),
                problem.state_dim(),
                problem.noise_dim()
            )));
        }
        if (path.horizon() - problem.horizon()).abs() > 1e-12 * problem.horizon() {
            return Err(Error::invalid("horizon", "noise path and problem horizons differ"));
        }
        Ok(Self {
            problem,
            model,
            path,
        })
    }

    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }

    pub fn model(&self) -> &dyn MartingaleModel {
        self.model.as_ref()
    }

    pub fn path(&self) -> &NoisePath {
        &self.path
    }

    /// Same problem and model along another noise path.
    pub fn with_path(&self, path: NoisePath) -> Result<Self> {
        Self::new(self.problem.clone(), self.model.clone(), path)
    }

    fn frame(&self, t: f64, x: &Vector) -> Result<Frame> {
        Ok(self.frame_with(t, self.path.w_dot(t)?, x, false))
    }

    fn frame_with(&self, t: f64, wdot: Vector, x: &Vector, with_derivatives: bool) -> Frame {
        let (z, jac, djac) = if with_derivatives {
            self.model.local_expansion(t, x)
        } else {
            (self.model.z(t, x), self.model.jacobian(t, x), None)
        };
        Frame {
            sigma: self.problem.diffusion(x),
            strat: self.problem.strat_correction(x),
            z,
            jac,
            djac,
            wdot,
        }
    }

    /// Everything in `H` except `⟨p, b(x,u)⟩ + r(x,u)`.
    fn noise_terms(frame: &Frame, p: &Vector) -> f64 {
        let sw = &frame.sigma * &frame.wdot;
        p.dot(&(sw - &frame.strat * 0.5)) - frame.z.dot(&frame.wdot) + 0.5 * trace_sigma_jac(&frame.sigma, &frame.jac)
    }

    fn drift_in_frame(&self, frame: &Frame, x: &Vector, u: &Vector) -> Vector {
        self.problem.drift(x, u) - &frame.strat * 0.5 + &frame.sigma * &frame.wdot
    }

    /// `b̃(t,x,u) = b(x,u) − ½(∇σ:σ)(x) + σ(x)ẇ(t)`.
    pub fn effective_drift(&self, t: f64, x: &Vector, u: &Vector) -> Result<Vector> {
        Ok(self.effective_drift_with(&self.path.w_dot(t)?, x, u))
    }

    pub(crate) fn effective_drift_with(&self, wdot: &Vector, x: &Vector, u: &Vector) -> Vector {
        self.problem.drift(x, u) - self.problem.strat_correction(x) * 0.5 + self.problem.diffusion(x) * wdot
    }

    /// `r̃(t,x,u) = r(x,u) − ⟨z,ẇ⟩ + ½Tr(σ J_x z)`.
    pub fn effective_cost(&self, t: f64, x: &Vector, u: &Vector) -> Result<f64> {
        Ok(self.effective_cost_with(t, &self.path.w_dot(t)?, x, u))
    }

    pub(crate) fn effective_cost_with(&self, t: f64, wdot: &Vector, x: &Vector, u: &Vector) -> f64 {
        let sigma = self.problem.diffusion(x);
        let z = self.model.z(t, x);
        let jac = self.model.jacobian(t, x);
        self.problem.running_cost(x, u) - z.dot(wdot) + 0.5 * trace_sigma_jac(&sigma, &jac)
    }

    /// `H(t,x,u,p) = ⟨p, b̃⟩ + r̃`.
    pub fn hamiltonian(&self, t: f64, x: &Vector, u: &Vector, p: &Vector) -> Result<f64> {
        let frame = self.frame(t, x)?;
        Ok(p.dot(&self.problem.drift(x, u)) + self.problem.running_cost(x, u) + Self::noise_terms(&frame, p))
    }

    /// `𝓗(t,x,p) = inf_u H(t,x,u,p)` and the minimising control.
    pub fn min_hamiltonian(&self, t: f64, x: &Vector, p: &Vector) -> Result<(f64, Vector)> {
        let frame = self.frame(t, x)?;
        let (u, f) = self.problem.inner_minimizer(x, p);
        Ok((f + Self::noise_terms(&frame, p), u))
    }

    /// `(∂_x𝓗, ∂_p𝓗)`, both taken at the frozen minimiser.
    pub fn grad_min_hamiltonian(&self, t: f64, x: &Vector, p: &Vector) -> Result<(Vector, Vector)> {
        let flow = self.flow(t, &self.path.w_dot(t)?, x, p);
        Ok((flow.dx, flow.dp))
    }

    /// `∂_x H(t,x,u,p)` at fixed `u`.
    pub fn hamiltonian_grad_x(&self, t: f64, x: &Vector, u: &Vector, p: &Vector) -> Result<Vector> {
        Ok(self.hamiltonian_grad_x_with(t, &self.path.w_dot(t)?, x, u, p))
    }

    pub(crate) fn hamiltonian_grad_x_with(&self, t: f64, wdot: &Vector, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        let frame = self.frame_with(t, wdot.clone(), x, true);
        self.grad_x_in_frame(&frame, x, u, p)
    }

    fn grad_x_in_frame(&self, frame: &Frame, x: &Vector, u: &Vector, p: &Vector) -> Vector {
        let coeffs = self.problem.coefficients();
        let mut g = coeffs.drift_cost_grad_x(x, u, p);
        g -= coeffs.strat_correction_vjp(x, p) * 0.5;
        g -= frame.jac.tr_mul(&frame.wdot);
        if let Some(ds) = coeffs.diffusion_derivatives(x) {
            for (k, dk) in ds.iter().enumerate() {
                g[k] += p.dot(&(dk * &frame.wdot)) + 0.5 * trace_sigma_jac(dk, &frame.jac);
            }
        }
        if let Some(dj) = &frame.djac {
            for (k, djk) in dj.iter().enumerate() {
                g[k] += 0.5 * trace_sigma_jac(&frame.sigma, djk);
            }
        }
        g
    }

    /// Minimised Hamiltonian with both gradients, sharing one frame.
    pub(crate) fn flow(&self, t: f64, wdot: &Vector, x: &Vector, p: &Vector) -> Flow {
        let frame = self.frame_with(t, wdot.clone(), x, true);
        let (u, f) = self.problem.inner_minimizer(x, p);
        let h = f + Self::noise_terms(&frame, p);
        let dp = self.drift_in_frame(&frame, x, &u);
        let dx = self.grad_x_in_frame(&frame, x, &u, p);
        Flow { h, u, dx, dp }
    }

    /// `ẇ` on the nodes and midpoints of a uniform grid with `n_steps` steps.
    pub(crate) fn noise_grid(&self, n_steps: usize) -> Result<NoiseGrid> {
        let h = self.path.horizon() / (2 * n_steps) as f64;
        let half = (0..=2 * n_steps)
            .map(|j| {
                let t = if j == 2 * n_steps { self.path.horizon() } else { j as f64 * h };
                self.path.w_dot(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NoiseGrid { half })
    }
}

/// Cached `ẇ` values; `half[j] = ẇ(j·δt/2)`.
pub(crate) struct NoiseGrid {
    half: Vec<Vector>,
}

impl NoiseGrid {
    pub fn node(&self, i: usize) -> &Vector {
        &self.half[2 * i]
    }
    pub fn mid(&self, i: usize) -> &Vector {
        &self.half[2 * i + 1]
    }
}

/// `𝓗`, its minimiser and gradients at one point.
#[derive(Debug, Clone)]
pub(crate) struct Flow {
    pub h: f64,
    pub u: Vector,
    pub dx: Vector,
    pub dp: Vector,
}

/// `Tr(σJ) = Σ_{j,k} σ_kj J_jk` for `σ: d×d′`, `J: d′×d`.
pub fn trace_sigma_jac(sigma: &Matrix, jac: &Matrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..sigma.ncols() {
        for k in 0..sigma.nrows() {
            acc += sigma[(k, j)] * jac[(j, k)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_aiyagari, make_lq, make_ou, make_zero};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn quiet(problem: ControlProblem) -> PathwiseContext {
        let path = NoisePath::zero(4, problem.noise_dim(), problem.horizon()).unwrap();
        let model = Arc::new(ZeroModel::for_problem(&problem));
        PathwiseContext::new(problem, model, path).unwrap()
    }

    /// `z(t,x) = x`, so `J = I`.
    struct Identity(usize);

    impl MartingaleModel for Identity {
        fn state_dim(&self) -> usize {
            self.0
        }
        fn noise_dim(&self) -> usize {
            self.0
        }
        fn z(&self, _t: f64, x: &Vector) -> Vector {
            x.clone()
        }
    }

    /// `z(t,x) = (t x₁x₂, sin x₁)`, a nonlinear toy.
    struct Toy;

    impl MartingaleModel for Toy {
        fn state_dim(&self) -> usize {
            2
        }
        fn noise_dim(&self) -> usize {
            2
        }
        fn z(&self, t: f64, x: &Vector) -> Vector {
            v(&[t * x[0] * x[1], x[0].sin()])
        }
    }

    #[test]
    fn effective_drift_examples() {
        let lq = quiet(make_lq(1).unwrap());
        assert_eq!(lq.effective_drift(0.3, &v(&[0.7]), &v(&[1.0])).unwrap(), v(&[2.0]));
        let ai = quiet(make_aiyagari().unwrap());
        let b = ai.effective_drift(0.05, &v(&[1.0, 1.0]), &v(&[1.0])).unwrap();
        assert!(b[0].abs() < 1e-15 && (b[1] + 0.055).abs() < 1e-15);
    }

    #[test]
    fn effective_cost_trace_term() {
        let problem = make_lq(1).unwrap();
        let path = NoisePath::zero(4, 1, 1.0).unwrap();
        let ctx = PathwiseContext::new(problem, Arc::new(Identity(1)), path).unwrap();
        let c = ctx.effective_cost(0.5, &v(&[0.3]), &v(&[0.0])).unwrap();
        assert!((c - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-8);
    }

    #[test]
    fn effective_cost_matches_hand_evaluation() {
        // Constant ẇ from a single-term path at t = 0: ẇ = √2 ξ.
        let problem = make_lq(2).unwrap();
        let path = NoisePath::from_coeffs(Matrix::from_row_slice(1, 2, &[0.5, -1.0]), 1.0).unwrap();
        let ctx = PathwiseContext::new(problem, Arc::new(Toy), path).unwrap();
        let (t, x, u) = (0.0, v(&[0.4, -0.3]), v(&[0.2, 0.1]));
        let s2 = std::f64::consts::SQRT_2;
        let wdot = [s2 * 0.5, -s2];
        let z = [t * x[0] * x[1], x[0].sin()];
        // Tr(σJ) = √2 (∂₁z₁ + ∂₂z₂) = √2 (t x₂ + 0).
        let expected = u.norm_squared() - (z[0] * wdot[0] + z[1] * wdot[1]) + 0.5 * s2 * t * x[1];
        assert!((ctx.effective_cost(t, &x, &u).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn min_hamiltonian_examples() {
        let lq = quiet(make_lq(2).unwrap());
        let (h, u) = lq.min_hamiltonian(0.1, &Vector::zeros(2), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(h, -1.0);
        assert_eq!(u, v(&[-1.0, 0.0]));
        let (_, dp) = lq.grad_min_hamiltonian(0.1, &Vector::zeros(2), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(dp, v(&[-2.0, 0.0]));

        let ou = quiet(make_ou(2).unwrap());
        let (h, _) = ou.min_hamiltonian(0.0, &Vector::zeros(2), &v(&[1.0, 1.0])).unwrap();
        assert!((h + 1.44).abs() < 1e-12);

        let zero = quiet(make_zero(2).unwrap());
        let (h, _) = zero.min_hamiltonian(0.4, &v(&[3.0, -1.0]), &v(&[2.0, 5.0])).unwrap();
        assert_eq!(h, 0.0);
        let (dx, dp) = zero.grad_min_hamiltonian(0.4, &v(&[3.0, -1.0]), &v(&[2.0, 5.0])).unwrap();
        assert_eq!(dx, Vector::zeros(2));
        assert_eq!(dp, Vector::zeros(2));
    }

    #[test]
    fn rejects_mismatched_context() {
        let problem = make_lq(2).unwrap();
        let path = NoisePath::zero(4, 3, 1.0).unwrap();
        assert!(PathwiseContext::new(problem.clone(), Arc::new(ZeroModel::new(2, 2)), path).is_err());
        let path = NoisePath::zero(4, 2, 0.5).unwrap();
        assert!(PathwiseContext::new(problem.clone(), Arc::new(ZeroModel::new(2, 2)), path).is_err());
        let path = NoisePath::zero(4, 2, 1.0).unwrap();
        assert!(PathwiseContext::new(problem, Arc::new(ZeroModel::new(3, 3)), path).is_err());
    }

    #[test]
    fn fixed_u_gradient_matches_fd_with_nonlinear_model() {
        let problem = make_aiyagari().unwrap();
        let path = NoisePath::sample(8, 2, problem.horizon(), 3, 0).unwrap();
        let ctx = PathwiseContext::new(problem, Arc::new(Toy), path).unwrap();
        let (t, x, u, p) = (0.03, v(&[1.1, 0.7]), v(&[0.9]), v(&[0.3, -0.8]));
        let g = ctx.hamiltonian_grad_x(t, &x, &u, &p).unwrap();
        let fd = crate::numeric::fd_gradient(|y| ctx.hamiltonian(t, y, &u, &p).unwrap(), &x, 1e-5);
        for k in 0..2 {
            assert!((g[k] - fd[k]).abs() < 1e-5 * (1.0 + fd[k].abs()), "{g} vs {fd}");
        }
    }
}
