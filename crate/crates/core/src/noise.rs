//! Truncated Karhunen–Loève approximation of Brownian motion.
//!
//! On the unit interval each component is
//! `w(s) = Σ_{i<n} √2 ξ_i sin((i+½)πs) / ((i+½)π)` with i.i.d. standard normal
//! `ξ`. Other horizons use Brownian scaling `W_t = √T · B_{t/T}`.

use std::f64::consts::{PI, SQRT_2};

use rand_distr::{Distribution, StandardNormal};

use crate::rng::{self, Purpose};
use crate::{Error, Matrix, Result, Vector};

/// Default number of series terms.
pub const DEFAULT_TERMS: usize = 32;

/// One smooth noise path: an `n × d'` matrix of series coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    coeffs: Matrix,
    horizon: f64,
}

fn frequency(i: usize) -> f64 {
    (i as f64 + 0.5) * PI
}

impl NoisePath {
    /// Draws the coefficients for Monte Carlo sample `sample_index`.
    pub fn sample(
        n_terms: usize,
        noise_dim: usize,
        horizon: f64,
        seed: u64,
        sample_index: u64,
    ) -> Result<Self> {
        check_shape(n_terms, noise_dim, horizon)?;
        let mut rng = rng::stream(seed, Purpose::Noise, sample_index);
        let coeffs = Matrix::from_fn(n_terms, noise_dim, |_, _| StandardNormal.sample(&mut rng));
        Ok(Self { coeffs, horizon })
    }

    pub fn from_coeffs(coeffs: Matrix, horizon: f64) -> Result<Self> {
        check_shape(coeffs.nrows(), coeffs.ncols(), horizon)?;
        Ok(Self { coeffs, horizon })
    }

    /// The path with all coefficients zero (`w ≡ 0`).
    pub fn zero(n_terms: usize, noise_dim: usize, horizon: f64) -> Result<Self> {
        Self::from_coeffs(Matrix::zeros(n_terms, noise_dim), horizon)
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Returns a copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: &self.coeffs * factor,
            horizon: self.horizon,
        }
    }

    fn unit_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Domain {
                t,
                horizon: self.horizon,
            });
        }
        Ok((t / self.horizon).clamp(0.0, 1.0))
    }

    /// `w_n(t)`.
    pub fn w_value(&self, t: f64) -> Result<Vector> {
        let s = self.unit_time(t)?;
        let scale = self.horizon.sqrt();
        let mut out = Vector::zeros(self.noise_dim());
        for i in 0..self.n_terms() {
            let w = frequency(i);
            let basis = SQRT_2 * (w * s).sin() / w * scale;
            for j in 0..self.noise_dim() {
                out[j] += basis * self.coeffs[(i, j)];
            }
        }
        Ok(out)
    }

    /// `ẇ_n(t)`.
    pub fn w_dot(&self, t: f64) -> Result<Vector> {
        let mut out = Vector::zeros(self.noise_dim());
        self.w_dot_into(t, &mut out)?;
        Ok(out)
    }

    pub(crate) fn w_dot_into(&self, t: f64, out: &mut Vector) -> Result<()> {
        let s = self.unit_time(t)?;
        let scale = 1.0 / self.horizon.sqrt();
        out.fill(0.0);
        for i in 0..self.n_terms() {
            let basis = SQRT_2 * (frequency(i) * s).cos() * scale;
            for j in 0..self.noise_dim() {
                out[j] += basis * self.coeffs[(i, j)];
            }
        }
        Ok(())
    }
}

fn check_shape(n_terms: usize, noise_dim: usize, horizon: f64) -> Result<()> {
    if n_terms == 0 {
        return Err(Error::invalid("n", "need at least one series term"));
    }
    if noise_dim == 0 {
        return Err(Error::invalid("noise_dim", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    Ok(())
}

/// Variance of one component of the `n`-term series at time `t`:
/// `T Σ_{i<n} 2 sin²((i+½)π t/T) / ((i+½)π)²`.
pub fn truncated_variance(n_terms: usize, t: f64, horizon: f64) -> f64 {
    let s = t / horizon;
    horizon
        * (0..n_terms)
            .map(|i| {
                let w = frequency(i);
                2.0 * (w * s).sin().powi(2) / (w * w)
            })
            .sum::<f64>()
}

/// Covariance of one component of the series between times `s` and `t`.
pub fn truncated_covariance(n_terms: usize, s: f64, t: f64, horizon: f64) -> f64 {
    let (a, b) = (s / horizon, t / horizon);
    horizon
        * (0..n_terms)
            .map(|i| {
                let w = frequency(i);
                2.0 * (w * a).sin() * (w * b).sin() / (w * w)
            })
            .sum::<f64>()
}
