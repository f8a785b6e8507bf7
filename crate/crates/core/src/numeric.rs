//! Small numerical helpers shared by the solvers and the oracles.

use crate::Vector;

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so the result is independent of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Central finite-difference step for coordinate value `x`.
pub fn fd_step(x: f64, rel: f64) -> f64 {
    rel * (1.0 + x.abs())
}

/// Central-difference gradient of a scalar function of a vector.
pub fn fd_gradient<F>(f: F, x: &Vector, rel: f64) -> Vector
where
    F: Fn(&Vector) -> f64,
{
    let mut grad = Vector::zeros(x.len());
    let mut probe = x.clone();
    for k in 0..x.len() {
        let h = fd_step(x[k], rel);
        probe[k] = x[k] + h;
        let plus = f(&probe);
        probe[k] = x[k] - h;
        let minus = f(&probe);
        probe[k] = x[k];
        grad[k] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub fn golden_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_min<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (x, v) = golden_max(|s| -f(s), lo, hi, tol);
    (x, -v)
}

/// Relative error with an absolute floor, used by the gradient checks.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn sup_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_sum_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|s| -(s - 0.3) * (s - 0.3) + 2.0, -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn fd_gradient_of_quadratic() {
        let x = Vector::from_vec(vec![1.0, -2.0]);
        let g = fd_gradient(|y| y[0] * y[0] + 3.0 * y[0] * y[1], &x, 1e-6);
        assert!((g[0] - (2.0 - 6.0)).abs() < 1e-7);
        assert!((g[1] - 3.0).abs() < 1e-7);
    }
}
