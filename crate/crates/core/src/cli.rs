//! Batch front-end: flat `key=value` run configurations, the experiment
//! loop, and the CSV and text reports.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::estimator::{dual_lower_bound, gap_report, BoundEstimate, DualConfig, Method};
use crate::hamiltonian::{MartingaleModel, ZeroModel};
use crate::pontryagin::{Integrator, Quadrature};
use crate::primal::{
    analytic_model, fit_regression_model, perturbed_model, simulate_upper_bound, FeedbackControl, PrimalConfig,
    RegressionConfig,
};
use crate::problem::{by_name, Benchmark, ControlProblem};
use crate::reference::{aiyagari_reference, lq_reference, ou_reference};
use crate::{Error, Result, Vector};

/// Every accepted configuration key.
pub const KEYS: [&str; 26] = [
    "problem",
    "d",
    "x0",
    "method",
    "model",
    "M",
    "n",
    "N_T",
    "N_iter",
    "N_opt",
    "alpha",
    "eta",
    "eps",
    "seed",
    "M_up",
    "N_T_up",
    "output_dir",
    "workers",
    "restarts",
    "integrator",
    "quadrature",
    "degree",
    "M_reg",
    "N_reg",
    "fd_step",
    "grad_tol",
];

/// Prefix of the environment variables that override configuration keys.
pub const ENV_PREFIX: &str = "DUALBOUND_";

pub const CSV_HEADER: &str = "problem,d,x0,method,model,M,n,N_T,seed,mean,half_width,excluded,wall_time_s";

/// Source of the martingale model `z` (and of the primal feedback).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Analytic,
    Regression,
    Zero,
    Perturbed(f64),
}

impl ModelKind {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "regression" => Ok(Self::Regression),
            "zero" => Ok(Self::Zero),
            _ => {
                let amplitude = s
                    .strip_prefix("perturbed(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown model `{s}`"))?;
                let a: f64 = amplitude
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad perturbation amplitude `{amplitude}`"))?;
                Ok(Self::Perturbed(a))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Analytic => "analytic".into(),
            Self::Regression => "regression".into(),
            Self::Zero => "zero".into(),
            Self::Perturbed(a) => format!("perturbed({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub d: usize,
    /// One entry per initial state to run.
    pub x0: Vec<Vector>,
    pub methods: Vec<Method>,
    pub model: ModelKind,
    pub dual: DualConfig,
    pub primal: PrimalConfig,
    pub regression: RegressionConfig,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn base_problem(&self) -> Result<ControlProblem> {
        by_name(&self.problem, self.d)
    }
}

/// Parses a configuration without environment overrides.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, std::iter::empty())
}

/// Parses a configuration, then applies `DUALBOUND_<KEY>` overrides from
/// `env` (pairs of variable name and value).
pub fn parse_config_with(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<RunConfig> {
    // key → (line, value); line 0 marks an environment override.
    let mut entries: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected key=value, got `{content}`"),
        })?;
        let key = key.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown key `{key}`"),
        })?;
        if entries.insert(known, (line, value.trim().to_string())).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    for (var, value) in env {
        if let Some(name) = var.strip_prefix(ENV_PREFIX) {
            let key = KEYS.iter().find(|k| k.to_uppercase() == name).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("environment variable {var} names no configuration key"),
            })?;
            entries.insert(key, (0, value));
        }
    }
    build(&entries)
}

fn build(entries: &BTreeMap<&'static str, (usize, String)>) -> Result<RunConfig> {
    let fail = |key: &str, message: String| -> Error {
        match entries.get(key) {
            Some((0, _)) => Error::Parse {
                line: 0,
                message: format!("{ENV_PREFIX}{}: {message}", key.to_uppercase()),
            },
            Some((line, _)) => Error::Parse { line: *line, message },
            None => Error::Parse { line: 0, message },
        }
    };
    let raw = |key: &str| entries.get(key).map(|(_, v)| v.as_str());
    fn number<T: std::str::FromStr>(raw: Option<&str>, key: &str, default: T) -> std::result::Result<T, String> {
        match raw {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`")),
        }
    }
    macro_rules! get {
        ($key:literal, $default:expr) => {
            number(raw($key), $key, $default).map_err(|m| fail($key, m))?
        };
    }
    let positive = |key: &str, v: usize| -> Result<usize> {
        if v == 0 {
            Err(fail(key, format!("`{key}` must be positive")))
        } else {
            Ok(v)
        }
    };

    let problem = raw("problem").ok_or_else(|| fail("problem", "missing key `problem`".into()))?.to_string();
    let d = positive("d", get!("d", 2))?;
    let base = by_name(&problem, d).map_err(|e| fail(if raw("d").is_some() { "d" } else { "problem" }, e.to_string()))?;
    let x0 = match raw("x0") {
        None => vec![base.initial_state().clone()],
        Some(v) => parse_points(v, d).map_err(|m| fail("x0", m))?,
    };

    let methods = match raw("method").unwrap_or("all") {
        "all" => vec![Method::Pontryagin, Method::Hopf, Method::Primal],
        list => list
            .split(',')
            .map(|m| m.trim().parse::<Method>().map_err(|e| fail("method", e.to_string())))
            .collect::<Result<Vec<_>>>()?,
    };
    let has_analytic = matches!(base.benchmark(), Benchmark::Lq { .. } | Benchmark::Ou { .. } | Benchmark::Zero { .. });
    let model = match raw("model") {
        None if has_analytic => ModelKind::Analytic,
        None => ModelKind::Regression,
        Some(v) => ModelKind::parse(v).map_err(|m| fail("model", m))?,
    };
    if matches!(model, ModelKind::Analytic | ModelKind::Perturbed(_)) && !has_analytic {
        return Err(fail(
            "model",
            format!("invalid combination: no analytic model for problem `{problem}`"),
        ));
    }

    let mut dual = DualConfig {
        samples: get!("M", 500),
        n_terms: positive("n", get!("n", 32))?,
        seed: get!("seed", 0),
        workers: get!("workers", 0),
        ..DualConfig::default()
    };
    let n_steps = positive("N_T", get!("N_T", 200))?;
    dual.sweep.n_steps = n_steps;
    dual.sweep.max_iter = positive("N_iter", get!("N_iter", dual.sweep.max_iter))?;
    dual.sweep.damping = get!("alpha", 0.5);
    dual.sweep.tol = get!("eps", 1e-6);
    dual.hopf.n_steps = n_steps;
    dual.hopf.opt_iters = get!("N_opt", dual.hopf.opt_iters);
    dual.hopf.learning_rate = get!("eta", 0.1);
    dual.hopf.restarts = get!("restarts", dual.hopf.restarts);
    dual.hopf.fd_step = get!("fd_step", dual.hopf.fd_step);
    dual.hopf.grad_tol = get!("grad_tol", dual.hopf.grad_tol);
    if let Some(v) = raw("integrator") {
        let i: Integrator = v.parse().map_err(|e: Error| fail("integrator", e.to_string()))?;
        dual.sweep.integrator = i;
        dual.hopf.integrator = i;
    }
    if let Some(v) = raw("quadrature") {
        let q: Quadrature = v.parse().map_err(|e: Error| fail("quadrature", e.to_string()))?;
        dual.sweep.quadrature = q;
        dual.hopf.quadrature = q;
    }
    if dual.samples < 2 {
        return Err(fail("M", "`M` must be at least 2".into()));
    }
    dual.sweep.validate().map_err(|e| fail(param_key(&e).unwrap_or("alpha"), e.to_string()))?;
    dual.hopf.validate().map_err(|e| fail(param_key(&e).unwrap_or("eta"), e.to_string()))?;

    let primal = PrimalConfig {
        samples: get!("M_up", 1 << 17),
        n_steps: positive("N_T_up", get!("N_T_up", 400))?,
        seed: dual.seed,
        workers: dual.workers,
    };
    if primal.samples < 2 {
        return Err(fail("M_up", "`M_up` must be at least 2".into()));
    }
    let regression = RegressionConfig {
        degree: get!("degree", 3),
        paths: positive("M_reg", get!("M_reg", 20_000))?,
        steps: positive("N_reg", get!("N_reg", 50))?,
        seed: dual.seed,
    };
    if regression.degree == 0 {
        return Err(fail("degree", "`degree` must be at least 1".into()));
    }
    let output_dir = PathBuf::from(raw("output_dir").unwrap_or("results"));

    Ok(RunConfig {
        problem,
        d,
        x0,
        methods,
        model,
        dual,
        primal,
        regression,
        output_dir,
    })
}

/// Maps a validation error back to the configuration key it concerns.
fn param_key(e: &Error) -> Option<&'static str> {
    match e {
        Error::InvalidParameter { name, .. } => KEYS.iter().copied().find(|k| k == name),
        _ => None,
    }
}

/// `x0` forms: `a,b,…` (one point), a single number (broadcast), `zeros`,
/// `ones`, and `;`-separated lists of any of these.
fn parse_points(text: &str, d: usize) -> std::result::Result<Vec<Vector>, String> {
    text.split(';')
        .map(|p| {
            let p = p.trim();
            match p {
                "zeros" => Ok(Vector::zeros(d)),
                "ones" => Ok(Vector::from_element(d, 1.0)),
                _ => {
                    let values = p
                        .split(',')
                        .map(|c| c.trim().parse::<f64>().map_err(|_| format!("bad x0 component `{}`", c.trim())))
                        .collect::<std::result::Result<Vec<_>, _>>()?;
                    match values.len() {
                        1 => Ok(Vector::from_element(d, values[0])),
                        n if n == d => Ok(Vector::from_vec(values)),
                        n => Err(format!("x0 point `{p}` has {n} components, d = {d}")),
                    }
                }
            }
        })
        .collect()
}

/// Space-separated components, so the CSV field needs no quoting.
pub fn format_point(x: &Vector) -> String {
    x.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" ")
}

/// Reference value for `problem` at `x0`, when an oracle exists.
pub fn reference_value(problem: &ControlProblem, x0: &Vector) -> Result<Option<f64>> {
    let d = problem.state_dim();
    Ok(match problem.benchmark() {
        Benchmark::Lq { .. } => Some(lq_reference(d, x0, problem.horizon())?.value),
        Benchmark::Ou { .. } => Some(ou_reference(d, x0)?.value),
        Benchmark::Aiyagari => match aiyagari_reference(x0[0], x0[1]) {
            Ok(r) => Some(r.value),
            Err(Error::NotAvailable(_)) => None,
            Err(e) => return Err(e),
        },
        Benchmark::Zero { .. } => Some(problem.terminal_cost(x0)),
        Benchmark::Custom => None,
    })
}

/// The martingale model and primal feedback for one initial state.
pub fn build_model(cfg: &RunConfig, problem: &ControlProblem) -> Result<(Arc<dyn MartingaleModel>, FeedbackControl)> {
    let x0 = problem.initial_state();
    let regression = || -> Result<(Arc<dyn MartingaleModel>, FeedbackControl)> {
        let fitted = fit_regression_model(problem, x0, &cfg.regression)?;
        let control = fitted.feedback();
        Ok((Arc::new(fitted), control))
    };
    match cfg.model {
        ModelKind::Analytic => analytic_model(problem),
        ModelKind::Regression => regression(),
        ModelKind::Zero => {
            let control = match analytic_model(problem) {
                Ok((_, control)) => control,
                Err(_) => regression()?.1,
            };
            Ok((Arc::new(ZeroModel::for_problem(problem)), control))
        }
        ModelKind::Perturbed(a) => {
            let (base, control) = analytic_model(problem)?;
            Ok((perturbed_model(base, a, cfg.dual.seed)?, control))
        }
    }
}

/// One computed estimate with the state it belongs to.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub x0: Vector,
    pub estimate: BoundEstimate,
}

/// Outcome of [`run`]: the rows written and the path of each output file.
#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<RunRow>,
    pub csv: PathBuf,
    pub report: PathBuf,
}

/// CSV line for `row`, without the trailing newline.
pub fn csv_line(cfg: &RunConfig, row: &RunRow) -> String {
    let e = &row.estimate;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        cfg.problem,
        cfg.d,
        format_point(&row.x0),
        e.method,
        cfg.model.label(),
        e.samples,
        cfg.dual.n_terms,
        if e.method == Method::Primal { cfg.primal.n_steps } else { cfg.dual.sweep.n_steps },
        cfg.dual.seed,
        e.mean,
        e.half_width,
        e.excluded,
        e.wall_time_s
    )
}

/// Runs every (initial state, method) pair, appending CSV rows as they
/// finish, then writes the report. On an estimator failure the rows so far
/// and the report (with the error) are kept and the error is returned.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    fs::create_dir_all(&cfg.output_dir)?;
    let csv = cfg.output_dir.join("results.csv");
    let report_path = cfg.output_dir.join("report.txt");
    let mut out = File::create(&csv)?;
    writeln!(out, "{CSV_HEADER}")?;
    let mut rows: Vec<RunRow> = Vec::new();
    let mut report = String::new();
    report.push_str(&config_summary(cfg));
    let outcome = (|| -> Result<()> {
        for x0 in &cfg.x0 {
            let problem = cfg.base_problem()?.with_initial_state(x0.clone())?;
            let (model, control) = build_model(cfg, &problem)?;
            let mut here = Vec::new();
            for &method in &cfg.methods {
                log::info!("{} d={} x0=({}) {}", cfg.problem, cfg.d, format_point(x0), method);
                let estimate = match method {
                    Method::Primal => simulate_upper_bound(&problem, &control, x0, &cfg.primal)?,
                    dual => dual_lower_bound(&problem, model.clone(), dual, &cfg.dual)?,
                };
                let row = RunRow {
                    x0: x0.clone(),
                    estimate,
                };
                writeln!(out, "{}", csv_line(cfg, &row))?;
                out.flush()?;
                here.push(row.estimate.clone());
                rows.push(row);
            }
            report.push_str(&point_report(&problem, x0, &here)?);
        }
        Ok(())
    })();
    if let Err(e) = &outcome {
        report.push_str(&format!("\nrun stopped: {e}\n"));
    }
    fs::write(&report_path, &report)?;
    outcome.map(|()| RunOutput {
        rows,
        csv,
        report: report_path,
    })
}

fn config_summary(cfg: &RunConfig) -> String {
    let methods: Vec<_> = cfg.methods.iter().map(|m| m.as_str()).collect();
    format!(
        "problem {} d={} model={} methods={}\nM={} n={} N_T={} seed={} alpha={} eps={} eta={} restarts={} \
         integrator={:?}/{:?} quadrature={:?}/{:?} M_up={} N_T_up={}\n",
        cfg.problem,
        cfg.d,
        cfg.model.label(),
        methods.join(","),
        cfg.dual.samples,
        cfg.dual.n_terms,
        cfg.dual.sweep.n_steps,
        cfg.dual.seed,
        cfg.dual.sweep.damping,
        cfg.dual.sweep.tol,
        cfg.dual.hopf.learning_rate,
        cfg.dual.hopf.restarts,
        cfg.dual.sweep.integrator,
        cfg.dual.hopf.integrator,
        cfg.dual.sweep.quadrature,
        cfg.dual.hopf.quadrature,
        cfg.primal.samples,
        cfg.primal.n_steps,
    )
}

fn point_report(problem: &ControlProblem, x0: &Vector, estimates: &[BoundEstimate]) -> Result<String> {
    let reference = reference_value(problem, x0)?;
    let mut text = format!("\nx0 = ({})\n", format_point(x0));
    for e in estimates {
        text.push_str(&format!(
            "  {}: {:.6} ± {:.6}  [{} paths, {} excluded, {:.1} s]\n",
            e.method, e.mean, e.half_width, e.samples, e.excluded, e.wall_time_s
        ));
    }
    match reference {
        Some(r) => text.push_str(&format!("  reference: {r:.6}\n")),
        None => text.push_str("  reference: none\n"),
    }
    if let Some(upper) = estimates.iter().find(|e| e.method == Method::Primal) {
        for lower in estimates.iter().filter(|e| e.method != Method::Primal) {
            let gap = gap_report(lower.clone(), upper.clone(), reference);
            for line in gap.to_string().lines() {
                text.push_str("  ");
                text.push_str(line);
                text.push('\n');
            }
        }
    }
    Ok(text)
}

/// Reads and parses a configuration file, applying environment overrides.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config_with(&text, std::env::vars())
}
