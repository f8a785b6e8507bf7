//! Monte Carlo layers around the pathwise solvers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::hamiltonian::{MartingaleModel, PathwiseContext};
use crate::hopf::{solve_hopf_indexed, HopfConfig};
use crate::noise::{NoisePath, DEFAULT_TERMS};
use crate::numeric::pairwise_sum;
use crate::pontryagin::{solve_path, SweepConfig};
use crate::problem::ControlProblem;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Largest tolerated fraction of excluded dual paths.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Pontryagin,
    Hopf,
    Primal,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pontryagin => "pontryagin",
            Method::Hopf => "hopf",
            Method::Primal => "primal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pontryagin" => Ok(Method::Pontryagin),
            "hopf" => Ok(Method::Hopf),
            "primal" => Ok(Method::Primal),
            other => Err(Error::invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub mean: f64,
    /// 95% normal half-width.
    pub half_width: f64,
    /// Paths drawn, including excluded ones.
    pub samples: usize,
    pub excluded: usize,
    pub method: Method,
    pub wall_time_s: f64,
}

impl BoundEstimate {
    pub fn lower_end(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper_end(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Mean and `1.96·s/√M` with the Bessel-corrected `s`.
pub fn confidence_interval(samples: &[f64]) -> Result<(f64, f64)> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let mean = pairwise_sum(samples) / m as f64;
    let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&squares) / (m - 1) as f64;
    Ok((mean, Z95 * (var / m as f64).sqrt()))
}

/// Runs `f(0..count)` on a pool of `workers` threads (0 = all cores),
/// returning results in index order.
pub(crate) fn run_indexed<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count as u64).into_par_iter().map(&f).collect()))
}

/// Collapses per-path outcomes into an estimate, excluding `None`s.
pub(crate) fn summarise(
    outcomes: &[Option<f64>],
    method: Method,
    max_excluded: f64,
    started: Instant,
) -> Result<BoundEstimate> {
    let values: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let samples = outcomes.len();
    let excluded = samples - values.len();
    if excluded as f64 > max_excluded * samples as f64 {
        return Err(Error::EstimatorFailure {
            excluded,
            samples,
            reason: format!(
                "{method} excluded more than {:.0}% of paths",
                100.0 * max_excluded
            ),
        });
    }
    let (mean, half_width) = confidence_interval(&values)?;
    Ok(BoundEstimate {
        mean,
        half_width,
        samples,
        excluded,
        method,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Settings shared by both dual Monte Carlo estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct DualConfig {
    pub samples: usize,
    pub n_terms: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub sweep: SweepConfig,
    pub hopf: HopfConfig,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            n_terms: DEFAULT_TERMS,
            seed: 0,
            workers: 0,
            sweep: SweepConfig::default(),
            hopf: HopfConfig::default(),
        }
    }
}

/// One pathwise dual value per noise path; `None` marks an excluded path.
pub fn pathwise_dual_values(
    problem: &ControlProblem,
    model: Arc<dyn MartingaleModel>,
    method: Method,
    cfg: &DualConfig,
) -> Result<Vec<Option<f64>>> {
    if cfg.n_terms == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let base = PathwiseContext::new(
        problem.clone(),
        model,
        NoisePath::zero(cfg.n_terms, problem.noise_dim(), problem.horizon())?,
    )?;
    let hopf = HopfConfig {
        seed: cfg.seed,
        ..cfg.hopf.clone()
    };
    let outcomes = run_indexed(cfg.samples, cfg.workers, |m| -> Result<Option<f64>> {
        let path = NoisePath::sample(cfg.n_terms, problem.noise_dim(), problem.horizon(), cfg.seed, m)?;
        let ctx = base.with_path(path)?;
        let outcome = match method {
            Method::Pontryagin => solve_path(&ctx, &cfg.sweep).map(|s| {
                if !s.converged {
                    log::debug!("path {m}: sweep stopped after {} iterations", s.iterations);
                }
                s.value
            }),
            Method::Hopf => solve_hopf_indexed(&ctx, &hopf, m).map(|r| r.value),
            Method::Primal => return Err(Error::invalid("method", "primal is not a dual method")),
        };
        match outcome {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(_) => Ok(None),
            Err(Error::DivergedPath { iteration, step }) => {
                log::debug!("path {m} diverged at iteration {iteration}, step {step}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    })?;
    outcomes.into_iter().collect()
}

/// Monte Carlo estimate of `E[v(0, x₀)]` along `cfg.samples` noise paths.
pub fn dual_lower_bound(
    problem: &ControlProblem,
    model: Arc<dyn MartingaleModel>,
    method: Method,
    cfg: &DualConfig,
) -> Result<BoundEstimate> {
    if cfg.samples < 2 {
        return Err(Error::TooFewSamples(cfg.samples));
    }
    let started = Instant::now();
    let outcomes = pathwise_dual_values(problem, model, method, cfg)?;
    summarise(&outcomes, method, MAX_EXCLUDED_FRACTION, started)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub lower: BoundEstimate,
    pub upper: BoundEstimate,
    pub reference: Option<f64>,
    pub relative_gap: f64,
    /// `[lower.mean − lower.half_width, upper.mean + upper.half_width]`.
    pub combined: (f64, f64),
}

impl GapReport {
    pub fn contains_reference(&self) -> Option<bool> {
        self.reference.map(|r| self.combined.0 <= r && r <= self.combined.1)
    }
}

impl fmt::Display for GapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "lower ({}): {:.6} ± {:.6}  [{} paths, {} excluded]",
            self.lower.method, self.lower.mean, self.lower.half_width, self.lower.samples, self.lower.excluded
        )?;
        writeln!(
            f,
            "upper ({}): {:.6} ± {:.6}  [{} paths, {} excluded]",
            self.upper.method, self.upper.mean, self.upper.half_width, self.upper.samples, self.upper.excluded
        )?;
        writeln!(f, "combined interval: [{:.6}, {:.6}]", self.combined.0, self.combined.1)?;
        writeln!(f, "relative gap: {:.6}", self.relative_gap)?;
        match (self.reference, self.contains_reference()) {
            (Some(r), Some(inside)) => writeln!(
                f,
                "reference: {r:.6} ({})",
                if inside { "contained" } else { "NOT contained" }
            ),
            _ => writeln!(f, "reference: none"),
        }
    }
}

/// Relative gap `(upper − lower)/|reference|` (or `/|upper|` without one).
pub fn gap_report(lower: BoundEstimate, upper: BoundEstimate, reference: Option<f64>) -> GapReport {
    let denom = reference.unwrap_or(upper.mean).abs();
    let relative_gap = (upper.mean - lower.mean) / denom;
    let combined = (lower.lower_end(), upper.upper_end());
    GapReport {
        lower,
        upper,
        reference,
        relative_gap,
        combined,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ZeroModel;
    use crate::problem::{make_lq, make_zero};
    use crate::Vector;

    fn estimate(mean: f64, half_width: f64, method: Method) -> BoundEstimate {
        BoundEstimate {
            mean,
            half_width,
            samples: 500,
            excluded: 0,
            method,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn confidence_interval_examples() {
        assert_eq!(confidence_interval(&[2.5, 2.5, 2.5]).unwrap(), (2.5, 0.0));
        let (m, h) = confidence_interval(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((h - 1.96 / 3f64.sqrt()).abs() < 1e-12);
        let (m, h) = confidence_interval(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(m, 1.0);
        assert!((h - 1.96).abs() < 1e-12);
        assert!(matches!(confidence_interval(&[1.0]), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn gap_report_examples() {
        let same = estimate(1.0, 0.1, Method::Hopf);
        assert_eq!(gap_report(same.clone(), same, None).relative_gap, 0.0);

        let r = gap_report(estimate(0.1914, 0.0015, Method::Pontryagin), estimate(0.1899, 0.0066, Method::Primal), Some(0.1952));
        assert!((r.combined.0 - 0.1899).abs() < 1e-12 && (r.combined.1 - 0.1965).abs() < 1e-12);
        assert_eq!(r.contains_reference(), Some(true));

        let r = gap_report(estimate(-0.7561, 0.0011, Method::Hopf), estimate(-0.7555, 0.0006, Method::Primal), Some(-0.7557));
        assert_eq!(r.contains_reference(), Some(true));
        assert!(r.to_string().contains("contained"));
    }

    #[test]
    fn zero_problem_gives_terminal_cost() {
        let problem = make_zero(2).unwrap().with_initial_state(Vector::from_vec(vec![0.5, 1.0])).unwrap();
        let g = problem.terminal_cost(problem.initial_state());
        let cfg = DualConfig {
            samples: 8,
            n_terms: 4,
            sweep: SweepConfig { n_steps: 10, ..SweepConfig::default() },
            hopf: HopfConfig { n_steps: 10, ..HopfConfig::default() },
            ..DualConfig::default()
        };
        for method in [Method::Pontryagin, Method::Hopf] {
            let est = dual_lower_bound(&problem, Arc::new(ZeroModel::for_problem(&problem)), method, &cfg).unwrap();
            assert!((est.mean - g).abs() < 1e-12, "{method}: {}", est.mean);
            assert!(est.half_width < 1e-12);
        }
    }

    #[test]
    fn worker_count_does_not_change_estimate() {
        let problem = make_lq(2).unwrap();
        let model: Arc<dyn MartingaleModel> = Arc::new(ZeroModel::for_problem(&problem));
        let mut cfg = DualConfig {
            samples: 6,
            n_terms: 8,
            sweep: SweepConfig { n_steps: 20, ..SweepConfig::default() },
            ..DualConfig::default()
        };
        cfg.workers = 1;
        let a = dual_lower_bound(&problem, model.clone(), Method::Pontryagin, &cfg).unwrap();
        cfg.workers = 3;
        let b = dual_lower_bound(&problem, model, Method::Pontryagin, &cfg).unwrap();
        assert_eq!((a.mean, a.half_width), (b.mean, b.half_width));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Pontryagin, Method::Hopf, Method::Primal] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("lagrange".parse::<Method>().is_err());
    }
}
