//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Positional arguments select criteria by number, e.g.
//! `cargo test --release --test acceptance -- 4 6`.

use std::error::Error as StdError;
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use dualbound::cli::{parse_config_with, run, RunConfig, RunOutput, ENV_PREFIX};
use dualbound::estimator::pathwise_dual_values;
use dualbound::hopf::{hopf_objective, objective_gradient, relaxed_objective, solve_hopf};
use dualbound::noise::{truncated_variance, NoisePath};
use dualbound::numeric::{golden_max, sup_norm};
use dualbound::pontryagin::{Integrator, Quadrature};
use dualbound::primal::{analytic_model, fit_regression_model, perturbed_model, RegressionConfig};
use dualbound::problem::{aiyagari_gbar, aiyagari_gbar_conjugate, make_aiyagari, make_lq, make_lq_with_weights, make_ou};
use dualbound::reference::{aiyagari_reference, dp_oracle_1d, lq_reference, ou_reference, Grid1d};
use dualbound::{BoundEstimate, ControlProblem, HopfConfig, MartingaleModel, Method, PathwiseContext, Vector, ZeroModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome<T> = std::result::Result<T, Box<dyn StdError>>;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

type Criterion = fn(&Path) -> Outcome<Verdict>;

const CRITERIA: [(usize, &str, Criterion); 9] = [
    (1, "LQ bounds at d = 2, 3, 5", lq_bounds),
    (2, "OU combined intervals", ou_intervals),
    (3, "growth model lower bounds", growth_lower_bounds),
    (4, "Hopf objective below the DP value", hopf_below_dp),
    (5, "gradients match central differences", gradient_integrity),
    (6, "KL path statistics", kl_statistics),
    (7, "variance reduction with the optimal martingale", variance_reduction),
    (8, "determinism across runs and workers", determinism),
    (9, "conjugate identities", conjugate_identities),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut failures = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let dir = scratch.path().join(format!("c{id}"));
        let verdict = check(&dir).unwrap_or_else(|e| Verdict {
            pass: false,
            summary: format!("error: {e}"),
            details: Vec::new(),
        });
        for line in &verdict.details {
            println!("        {line}");
        }
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} [{id}] {name}: {} ({:.1} s)",
            verdict.summary,
            started.elapsed().as_secs_f64()
        );
        failures += usize::from(!verdict.pass);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

/// Checked-in config `name` with `KEY=value` overrides and output under `dir`.
fn load(name: &str, dir: &Path, overrides: &[(&str, &str)]) -> Outcome<RunConfig> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.cfg"));
    let text = std::fs::read_to_string(&path)?;
    let mut env: Vec<(String, String)> = overrides
        .iter()
        .map(|(k, v)| (format!("{ENV_PREFIX}{}", k.to_uppercase()), v.to_string()))
        .collect();
    env.push((format!("{ENV_PREFIX}OUTPUT_DIR"), dir.join(name).display().to_string()));
    Ok(parse_config_with(&text, env)?)
}

fn estimate(out: &RunOutput, method: Method) -> Outcome<BoundEstimate> {
    out.rows
        .iter()
        .find(|r| r.estimate.method == method)
        .map(|r| r.estimate.clone())
        .ok_or_else(|| format!("no {method} row").into())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn lq_bounds(dir: &Path) -> Outcome<Verdict> {
    const HOPF_COLUMN: [(usize, f64); 3] = [(2, 1.1889), (3, 2.2845), (5, 4.4513)];
    const BUDGET_S: f64 = 600.0;
    let mut pass = true;
    let mut details = Vec::new();
    for (d, column) in HOPF_COLUMN {
        let cfg = load(&format!("lq_d{d}"), dir, &[])?;
        let started = Instant::now();
        let out = run(&cfg)?;
        let secs = started.elapsed().as_secs_f64();
        let reference = lq_reference(d, &cfg.x0[0], 1.0)?;
        let hopf = estimate(&out, Method::Hopf)?;
        let pont = estimate(&out, Method::Pontryagin)?;
        let primal = estimate(&out, Method::Primal)?;
        let hopf_ok = (hopf.mean - column).abs() <= 0.01 * d as f64;
        let pont_ok = pont.mean <= reference.value + reference.error_estimate;
        let primal_ok = (primal.mean - reference.value).abs() <= primal.half_width;
        let time_ok = secs < BUDGET_S;
        pass &= hopf_ok && pont_ok && primal_ok && time_ok;
        details.push(format!(
            "d={d}: V={:.6} ±{:.1e} | hopf {:.6} vs {column} (tol {:.2}) {} | pontryagin {:.6} ±{:.1e}, V+CI margin {:.1e}, own-CI margin {:.1e} {} | primal {:.5} ±{:.5}, |primal−V|={:.5} {} | {secs:.0} s {}",
            reference.value,
            reference.error_estimate,
            hopf.mean,
            0.01 * d as f64,
            mark(hopf_ok),
            pont.mean,
            pont.half_width,
            reference.value + reference.error_estimate - pont.mean,
            reference.value - pont.lower_end(),
            mark(pont_ok),
            primal.mean,
            primal.half_width,
            (primal.mean - reference.value).abs(),
            mark(primal_ok),
            mark(time_ok),
        ));
    }
    Ok(Verdict {
        pass,
        summary: "hopf near the tabulated column, pontryagin ≤ V + CI, primal CI covers V, < 10 min each".into(),
        details,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

/// With the analytic martingale every OU pathwise value equals V up to
/// rounding, so the lower interval degenerates to a point at V.
const ROUNDING_SLACK: f64 = 1e-10;

fn ou_intervals(dir: &Path) -> Outcome<Verdict> {
    let mut pass = true;
    let mut details = Vec::new();
    for d in [2, 3, 5, 10] {
        let cfg = load(&format!("ou_d{d}"), dir, &[])?;
        let out = run(&cfg)?;
        let reference = ou_reference(d, &cfg.x0[0])?.value;
        let lower = estimate(&out, Method::Pontryagin)?;
        let upper = estimate(&out, Method::Primal)?;
        let (lo, hi) = (lower.lower_end(), upper.upper_end());
        let width = hi - lo;
        let slack = ROUNDING_SLACK * (1.0 + reference.abs());
        let ok = lo <= reference + slack && reference <= hi + slack && (d != 10 || width <= 1.2);
        pass &= ok;
        details.push(format!(
            "d={d}: V={reference:.6} in [{lo:.6}, {hi:.6}] (pontryagin {:.6} ±{:.1e}, lower end − V {:+.1e}, primal {:.5} ±{:.5}, width {width:.4}) {}",
            lower.mean,
            lower.half_width,
            lo - reference,
            upper.mean,
            upper.half_width,
            mark(ok)
        ));
    }
    Ok(Verdict {
        pass,
        summary: "[pontryagin lower end, primal upper end] contains V (up to rounding) for d = 2, 3, 5, 10; width ≤ 1.2 at d = 10".into(),
        details,
    })
}

fn growth_lower_bounds(dir: &Path) -> Outcome<Verdict> {
    // (samples, seed) per pass over the six initial states.
    const PASSES: [(&str, &str); 2] = [("60", "0"), ("20", "1")];
    let mut pass = true;
    let mut details = Vec::new();
    for (samples, seed) in PASSES {
        for row in 1..=6 {
            let name = format!("aiyagari_{row}");
            let cfg = load(&name, &dir.join(seed), &[("M", samples), ("seed", seed), ("method", "hopf")])?;
            let out = run(&cfg)?;
            let x0 = &cfg.x0[0];
            let reference = aiyagari_reference(x0[0], x0[1])?.value;
            let hopf = estimate(&out, Method::Hopf)?;
            let upper_ok = hopf.mean <= reference + 0.002;
            let lower_ok = hopf.mean >= reference - 0.02;
            pass &= upper_ok && lower_ok;
            details.push(format!(
                "seed {seed}, (Z0, A0) = ({}, {}): hopf {:.6} ±{:.6} [{} paths], reference {reference:.4}, mean − reference {:+.6} {}",
                x0[0],
                x0[1],
                hopf.mean,
                hopf.half_width,
                hopf.samples,
                hopf.mean - reference,
                mark(upper_ok && lower_ok)
            ));
        }
    }
    Ok(Verdict {
        pass,
        summary: "reference − 0.02 ≤ hopf mean ≤ reference + 0.002 at all six states, two seeds".into(),
        details,
    })
}

fn hopf_config(n_steps: usize) -> HopfConfig {
    HopfConfig {
        n_steps,
        integrator: Integrator::Rk4,
        quadrature: Quadrature::Integrator,
        restarts: 1,
        ..HopfConfig::default()
    }
}

fn hopf_below_dp(_dir: &Path) -> Outcome<Verdict> {
    const PATHS: u64 = 10;
    const STARTS: usize = 20;
    let problem = make_lq_with_weights(Vector::from_element(1, 1.0))?;
    let model: Arc<dyn MartingaleModel> = Arc::new(ZeroModel::for_problem(&problem));
    let base = PathwiseContext::new(problem.clone(), model, NoisePath::zero(32, 1, 1.0)?)?;
    let cfg = hopf_config(200);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut details = Vec::new();
    for m in 0..PATHS {
        let ctx = base.with_path(NoisePath::sample(32, 1, 1.0, 404, m)?)?;
        let dp = dp_oracle_1d(&ctx, Grid1d::new(-5.0, 5.0, 641)?, Grid1d::new(-6.0, 6.0, 13)?, 20)?;
        let best = solve_hopf(&ctx, &cfg)?;
        let mut path_worst = f64::NEG_INFINITY;
        for k in 0..STARTS {
            let p0 = if k < STARTS / 2 {
                Vector::from_element(1, best.p0[0] + 0.2 * normal(&mut rng))
            } else {
                Vector::from_element(1, 2.0 * normal(&mut rng))
            };
            let excess = hopf_objective(&ctx, &p0, &cfg)? - dp.value;
            violations += usize::from(excess > 1e-3);
            path_worst = path_worst.max(excess);
        }
        worst = worst.max(path_worst);
        details.push(format!(
            "path {m}: DP {:.6} ±{:.1e}, sup 𝒥 {:.6}, largest 𝒥 − DP over {STARTS} starts {path_worst:+.2e}",
            dp.value, dp.error_estimate, best.value
        ));
    }
    Ok(Verdict {
        pass: violations == 0,
        summary: format!(
            "{violations} of {} cases exceed DP + 1e-3; largest 𝒥 − DP = {worst:+.2e}",
            PATHS as usize * STARTS
        ),
        details,
    })
}

/// Sup-norm relative error with a unit floor on the scale.
fn vec_rel_err(a: &Vector, b: &Vector) -> f64 {
    sup_norm(&(a - b)) / sup_norm(a).max(sup_norm(b)).max(1.0)
}

fn central_gradient(f: impl Fn(&Vector) -> Outcome<f64>, x: &Vector) -> Outcome<Vector> {
    let mut grad = Vector::zeros(x.len());
    for i in 0..x.len() {
        let h = 1e-5 * (1.0 + x[i].abs());
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        grad[i] = (f(&up)? - f(&down)?) / (2.0 * h);
    }
    Ok(grad)
}

struct GradientCase {
    name: &'static str,
    problem: ControlProblem,
    model: Arc<dyn MartingaleModel>,
    state: fn(&mut ChaCha8Rng) -> Vector,
    adjoint: fn(&mut ChaCha8Rng) -> Vector,
    initial_adjoint: fn(&mut ChaCha8Rng) -> Vector,
}

fn gradient_integrity(_dir: &Path) -> Outcome<Verdict> {
    const POINTS: usize = 100;
    const TOL: f64 = 1e-3;
    let lq = make_lq(3)?;
    let lq_model = perturbed_model(analytic_model(&lq)?.0, 0.2, 11)?;
    let ou = make_ou(3)?;
    let ou_model = analytic_model(&ou)?.0;
    let growth = make_aiyagari()?;
    let growth_fit = fit_regression_model(
        &growth,
        growth.initial_state(),
        &RegressionConfig {
            paths: 4000,
            ..RegressionConfig::default()
        },
    )?;
    let growth_fit: Arc<dyn MartingaleModel> = Arc::new(growth_fit);
    let cases = [
        GradientCase {
            name: "lq d=3",
            problem: lq,
            model: lq_model,
            state: |r| Vector::from_fn(3, |_, _| normal(r)),
            adjoint: |r| Vector::from_fn(3, |_, _| normal(r)),
            initial_adjoint: |r| Vector::from_fn(3, |_, _| 0.5 * normal(r)),
        },
        GradientCase {
            name: "ou d=3",
            problem: ou,
            model: ou_model,
            state: |r| Vector::from_fn(3, |_, _| 1.0 + 0.5 * normal(r)),
            adjoint: |r| Vector::from_fn(3, |_, _| normal(r)),
            initial_adjoint: |r| Vector::from_fn(3, |_, _| 1.0 + 0.3 * normal(r)),
        },
        GradientCase {
            name: "growth",
            problem: growth,
            model: growth_fit,
            state: |r| Vector::from_vec(vec![r.random_range(0.25..1.5), r.random_range(0.2..2.0)]),
            adjoint: |r| Vector::from_vec(vec![0.05 + 0.1 * normal(r), -r.random_range(0.3..3.0)]),
            initial_adjoint: |r| Vector::from_vec(vec![0.0489 + 0.01 * normal(r), -1.0 + 0.05 * normal(r)]),
        },
    ];
    let cfg = hopf_config(100);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pass = true;
    let mut details = Vec::new();
    for case in cases {
        let problem = &case.problem;
        let noise = |m: u64| NoisePath::sample(32, problem.noise_dim(), problem.horizon(), 55, m);
        let base = PathwiseContext::new(problem.clone(), case.model.clone(), noise(0)?)?;

        let (mut h_worst, mut h_skipped, mut checked, mut draws) = (0.0_f64, 0, 0, 0u64);
        while checked < POINTS {
            draws += 1;
            let ctx = base.with_path(noise(draws)?)?;
            let t = rng.random_range(0.0..problem.horizon());
            let (x, p) = ((case.state)(&mut rng), (case.adjoint)(&mut rng));
            let (_, u) = ctx.min_hamiltonian(t, &x, &p)?;
            if problem.control_box().is_some_and(|b| b.boundary_distance(&u) < 1e-6) {
                h_skipped += 1;
                continue;
            }
            let (gx, gp) = ctx.grad_min_hamiltonian(t, &x, &p)?;
            let fx = central_gradient(|y| Ok(ctx.min_hamiltonian(t, y, &p)?.0), &x)?;
            let fp = central_gradient(|q| Ok(ctx.min_hamiltonian(t, &x, q)?.0), &p)?;
            h_worst = h_worst.max(vec_rel_err(&gx, &fx)).max(vec_rel_err(&gp, &fp));
            checked += 1;
        }

        let (mut j_worst, mut j_skipped, mut checked) = (0.0_f64, 0, 0);
        while checked < POINTS {
            draws += 1;
            let ctx = base.with_path(noise(draws)?)?;
            let p0 = (case.initial_adjoint)(&mut rng);
            if !relaxed_objective(&ctx, &p0, &cfg)?.is_finite() {
                j_skipped += 1;
                continue;
            }
            let grad = objective_gradient(&ctx, &p0, &cfg)?;
            let fd = central_gradient(|q| Ok(relaxed_objective(&ctx, q, &cfg)?), &p0)?;
            if !fd.iter().all(|v| v.is_finite()) {
                j_skipped += 1;
                continue;
            }
            j_worst = j_worst.max(vec_rel_err(&grad, &fd));
            checked += 1;
        }
        let ok = h_worst < TOL && j_worst < TOL;
        pass &= ok;
        details.push(format!(
            "{}: grad 𝓗 worst {h_worst:.2e} ({h_skipped} clamp-boundary points skipped), ∇𝒥 worst {j_worst:.2e} ({j_skipped} off-domain starts skipped) {}",
            case.name,
            mark(ok)
        ));
    }
    Ok(Verdict {
        pass,
        summary: format!("sup-norm relative error < {TOL:.0e} at {POINTS} points per benchmark"),
        details,
    })
}

fn kl_statistics(_dir: &Path) -> Outcome<Verdict> {
    const PATHS: usize = 10_000;
    let times = [0.25, 0.5, 1.0];
    let mut squares = vec![Vec::with_capacity(PATHS); times.len()];
    for m in 0..PATHS as u64 {
        let path = NoisePath::sample(32, 1, 1.0, 606, m)?;
        for (k, &t) in times.iter().enumerate() {
            squares[k].push(path.w_value(t)?[0].powi(2));
        }
    }
    let mut pass = true;
    let mut details = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let s = &squares[k];
        let n = s.len() as f64;
        let var = s.iter().sum::<f64>() / n;
        let se = (s.iter().map(|v| (v - var).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let exact = truncated_variance(32, t, 1.0);
        let ok = (var - exact).abs() <= 3.0 * se;
        pass &= ok;
        details.push(format!(
            "t={t}: empirical {var:.5}, series {exact:.5}, SE {se:.5}, |diff|/SE {:.2} {}",
            (var - exact).abs() / se,
            mark(ok)
        ));
    }
    let two_terms = truncated_variance(2, 1.0, 1.0);
    let closed = 80.0 / (9.0 * PI * PI);
    let ok = (two_terms - closed).abs() < 1e-12;
    pass &= ok;
    details.push(format!(
        "n=2, t=1: {two_terms:.9} against 80/(9π²) = {closed:.9} {}; the decimal 0.900634 differs from both by {:.2e}",
        mark(ok),
        (0.900634 - closed).abs()
    ));
    Ok(Verdict {
        pass,
        summary: "Var w₃₂(t) within 3 SE at t = 0.25, 0.5, 1; two-term variance equals 80/(9π²)".into(),
        details,
    })
}

fn std_dev(values: &[Option<f64>]) -> Outcome<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.len() < values.len() * 95 / 100 {
        return Err("too many excluded paths".into());
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Ok((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn variance_reduction(dir: &Path) -> Outcome<Verdict> {
    let cfg = load("lq_d2", dir, &[("M", "200")])?;
    let problem = cfg.base_problem()?.with_initial_state(cfg.x0[0].clone())?;
    let analytic = analytic_model(&problem)?.0;
    let zero: Arc<dyn MartingaleModel> = Arc::new(ZeroModel::for_problem(&problem));
    let with_z = std_dev(&pathwise_dual_values(&problem, analytic, Method::Pontryagin, &cfg.dual)?)?;
    let without = std_dev(&pathwise_dual_values(&problem, zero, Method::Pontryagin, &cfg.dual)?)?;
    let ratio = with_z / without;
    Ok(Verdict {
        pass: ratio <= 0.5,
        summary: format!(
            "std with analytic z {with_z:.3e}, with z ≡ 0 {without:.3e}, ratio {ratio:.2e} over {} shared paths",
            cfg.dual.samples
        ),
        details: Vec::new(),
    })
}

/// CSV rows without the wall-time column.
fn csv_without_timing(out: &RunOutput) -> Outcome<Vec<String>> {
    let text = std::fs::read_to_string(&out.csv)?;
    Ok(text
        .lines()
        .map(|line| line.rsplit_once(',').map_or(line, |(head, _)| head).to_string())
        .collect())
}

fn determinism(dir: &Path) -> Outcome<Verdict> {
    let runs: [(&str, &[(&str, &str)]); 2] = [
        ("lq_d2", &[("M", "40"), ("M_up", "8192")]),
        ("aiyagari_1", &[("M", "6"), ("M_reg", "2000"), ("M_up", "2000")]),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, overrides) in runs {
        let mut tables = Vec::new();
        for (tag, workers) in [("a", "1"), ("b", "1"), ("c", "8")] {
            let mut settings = overrides.to_vec();
            settings.push(("workers", workers));
            let cfg = load(name, &dir.join(tag), &settings)?;
            tables.push(csv_without_timing(&run(&cfg)?)?);
        }
        let ok = tables[0] == tables[1] && tables[0] == tables[2];
        pass &= ok;
        details.push(format!(
            "{name}: {} rows identical across two 1-worker runs and an 8-worker run {}",
            tables[0].len() - 1,
            mark(ok)
        ));
    }
    Ok(Verdict {
        pass,
        summary: "CSV output matches bit for bit apart from wall time".into(),
        details,
    })
}

/// `sup_p ⟨x,p⟩ − g*(p)` by cyclic golden-section search over coordinates.
fn numeric_biconjugate(problem: &ControlProblem, x: &Vector) -> f64 {
    let conj = problem.conjugate();
    let mut p = Vector::zeros(x.len());
    for _ in 0..4 {
        for i in 0..x.len() {
            let objective = |s: f64| {
                let mut q = p.clone();
                q[i] = s;
                x.dot(&q) - conj.value(&q)
            };
            p[i] = golden_max(objective, -60.0, 60.0, 1e-11).0;
        }
    }
    x.dot(&p) - conj.value(&p)
}

fn conjugate_identities(_dir: &Path) -> Outcome<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bi_worst = 0.0_f64;
    for d in 1..=3 {
        let problem = make_lq(d)?;
        for _ in 0..30 {
            let x = Vector::from_fn(d, |_, _| 2.0 * normal(&mut rng));
            bi_worst = bi_worst.max((numeric_biconjugate(&problem, &x) - problem.terminal_cost(&x)).abs());
        }
    }

    let mut fy_worst = 0.0_f64;
    let problems = [make_lq(1)?, make_lq(2)?, make_lq(3)?, make_ou(3)?, make_aiyagari()?];
    for problem in &problems {
        for _ in 0..30 {
            let x = Vector::from_fn(problem.state_dim(), |_, _| 1.0 + 0.5 * normal(&mut rng));
            let p = problem.terminal_grad(&x);
            let gap = problem.terminal_cost(&x) + problem.conjugate().value(&p) - x.dot(&p);
            fy_worst = fy_worst.max(gap.abs());
        }
    }

    let mut g1_worst = 0.0_f64;
    for p in [0.0, 1e-3, 0.01, 0.04, 0.1, 0.3, 1.0, 2.5] {
        let (_, sup) = golden_max(|z| p * z - aiyagari_gbar(z), -200.0, 60.0, 1e-11);
        g1_worst = g1_worst.max((sup - aiyagari_gbar_conjugate(p)).abs());
    }

    let pass = bi_worst <= 1e-6 && fy_worst <= 1e-8 && g1_worst <= 1e-6;
    Ok(Verdict {
        pass,
        summary: format!(
            "|g** − g| ≤ {bi_worst:.1e} (LQ d ≤ 3), Fenchel–Young gap ≤ {fy_worst:.1e}, |g₁* − numeric sup| ≤ {g1_worst:.1e}"
        ),
        details: Vec::new(),
    })
}
