//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use divform::assembly::assemble_robin_form;
use divform::cli::{random_spd, run, ParsedReport};
use divform::coeff::{scalar_fn, vector_fn, CoefficientField};
use divform::elliptic::{exponent_bootstrap, interpolation_exponents, parse_rational, rational_to_f64};
use divform::mesh::{build_rectangle_mesh, BoundaryChart, PiecewiseLinear};
use divform::parabolic::{
    check_linfty_contraction, check_positivity, evolution_mass, positivity_dt_threshold, random_initial_states,
    submarkovian_shift, BoundaryModel, EvolutionConfig,
};
use divform::reflect::{certify_extended_ellipticity, chart_jacobian, ExtendedProblem, ReflectionOperator};
use nalgebra::{Matrix2, Rotation2, Vector2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// One CLI invocation whose report is checked and compared across reruns.
struct Job {
    name: &'static str,
    args: Vec<String>,
}

impl Job {
    fn new(name: &'static str, problem: Option<&str>, args: &[&str]) -> Self {
        let mut all: Vec<String> = vec!["--quiet".into(), "--seed".into(), SEED.to_string()];
        if let Some(p) = problem {
            all.push("--problem".into());
            all.push(data(p).display().to_string());
        }
        all.extend(args.iter().map(|s| s.to_string()));
        Self { name, args: all }
    }

    fn report_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.name))
    }

    /// Runs the job in-process and returns its exit code and wall time.
    fn run(&self, dir: &Path) -> (i32, f64) {
        let mut argv = vec!["divform".to_string(), "--report".into(), self.report_path(dir).display().to_string()];
        argv.extend(self.args.iter().cloned());
        let start = Instant::now();
        let code = run(argv);
        (code, start.elapsed().as_secs_f64())
    }
}

fn jobs() -> Vec<Job> {
    vec![
        Job::new("manufactured_1d", Some("manufactured_1d.toml"), &["solve-elliptic", "--refinements", "5"]),
        Job::new("manufactured_2d", Some("manufactured_2d.toml"), &["solve-elliptic", "--refinements", "5"]),
        Job::new("checkerboard", Some("checkerboard.toml"), &["solve-elliptic", "--refinements", "4"]),
        Job::new("counterexample", None, &["verify-counterexample", "--omega", "1,10,100"]),
        Job::new("l2_wentzell", Some("wentzell_drift.toml"), &["check-contraction", "--norm", "l2", "--trials", "20"]),
        Job::new("l2_robin", Some("robin_heat.toml"), &["check-contraction", "--norm", "l2", "--trials", "20"]),
        Job::new("linf_wentzell", Some("wentzell_drift.toml"), &["check-contraction", "--norm", "linf"]),
        Job::new("heat", Some("robin_heat.toml"), &["evolve"]),
        Job::new("kernel", Some("robin_heat.toml"), &["probe-kernel", "--source", "0", "--times", "0.05,0.1,0.2"]),
        Job::new(
            "reflection",
            None,
            &["verify-reflection", "--chart", "left=-2,right=3", "--coeff", "random", "--samples", "1000"],
        ),
        Job::new("exponents", None, &["exponents", "--N", "5", "--q", "2.4", "--p", "6"]),
    ]
}

fn load(dir: &Path, name: &str) -> ParsedReport {
    let text = std::fs::read_to_string(dir.join(format!("{name}.csv"))).expect("report written");
    ParsedReport::parse(&text).expect("well-formed report")
}

/// Smaller eigenvalue of a symmetric 2×2 matrix from its trace and determinant.
fn lambda_min_closed_form(m: &Matrix2<f64>) -> f64 {
    let half = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - 0.25 * (m[(0, 1)] + m[(1, 0)]).powi(2);
    half - (half * half - det).max(0.0).sqrt()
}

fn random_chart(rng: &mut impl Rng) -> (BoundaryChart, f64, f64, Matrix2<f64>) {
    let left = rng.gen_range(-5.0..=5.0);
    let right = rng.gen_range(-5.0..=5.0);
    let rotation = Rotation2::new(rng.gen_range(0.0..std::f64::consts::TAU)).into_inner();
    let psi = PiecewiseLinear::new(vec![-1.0, 0.0, 1.0], vec![-left, 0.0, right]).unwrap();
    let chart = BoundaryChart::new([0.0, 0.0], rotation, 1.0, psi).unwrap();
    (chart, left, right, rotation)
}

fn reflection_ellipticity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut certified, mut worst_gap, mut smallest) = (0, 0.0f64, f64::INFINITY);
    const SAMPLES: usize = 1000;
    for _ in 0..SAMPLES {
        let a = random_spd(&mut rng);
        let (chart, left, right, rotation) = random_chart(&mut rng);
        let field = CoefficientField::constant(2, a);
        let ext = ExtendedProblem::new(ReflectionOperator::new(chart), &field, 2, 1).unwrap();
        let Ok(cert) = certify_extended_ellipticity(&ext, 1) else { continue };
        if cert.alpha > 0.0 {
            certified += 1;
        }
        let in_chart = rotation * a * rotation.transpose();
        let oracle = [left, right]
            .iter()
            .map(|&m| {
                let w = chart_jacobian(m);
                lambda_min_closed_form(&(w * in_chart * w.transpose()))
            })
            .fold(lambda_min_closed_form(&a), f64::min);
        worst_gap = worst_gap.max((cert.alpha - oracle).abs() / oracle);
        smallest = smallest.min(cert.alpha);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        certified == SAMPLES && worst_gap <= 1e-9 && secs < 10.0,
        format!(
            "{certified}/{SAMPLES} certified, min alpha_hat {smallest:.3e}, oracle gap {worst_gap:.1e}, {secs:.2} s"
        ),
    )
}

fn reflection_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut involution, mut det, mut inverse) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (chart, ..) = random_chart(&mut rng);
        let op = ReflectionOperator::new(chart);
        let x = op.chart().map_t(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).unwrap();
        let sx = op.reflect_point(x).unwrap();
        let back = op.reflect_point(sx).unwrap();
        involution = involution.max((back[0] - x[0]).hypot(back[1] - x[1]));
        let j = op.jacobian_s(x).unwrap().matrix;
        det = det.max((j.determinant() + 1.0).abs());
        let j_back = op.jacobian_s(sx).unwrap().matrix;
        inverse = inverse.max((j_back * j - Matrix2::identity()).abs().max());
    }
    outcome(
        involution <= 1e-12 && det <= 1e-12 && inverse <= 1e-12,
        format!("S(S(x)) {involution:.1e}, det {det:.1e}, DS(Sx)DS(x) {inverse:.1e} over 1000 points"),
    )
}

fn solver_convergence(dir: &Path, times: &[(String, f64)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["manufactured_1d", "manufactured_2d"] {
        let r = load(dir, name);
        let h = r.column("h").unwrap();
        let rl2: Vec<f64> = r.column("rate_L2").unwrap()[1..].to_vec();
        let rh1: Vec<f64> = r.column("rate_H1").unwrap()[1..].to_vec();
        let secs = times.iter().find(|(n, _)| n == name).map_or(f64::NAN, |t| t.1);
        pass &= rl2.len() == 4 && rl2.iter().all(|r| (r - 2.0).abs() <= 0.2);
        pass &= rh1.iter().all(|r| (r - 1.0).abs() <= 0.2);
        pass &= secs < 60.0;
        // h is the largest cell diameter, the diagonal for the square grid
        let diagonal = if name.ends_with("2d") { std::f64::consts::SQRT_2 } else { 1.0 };
        let finest = diagonal / h.last().unwrap();
        pass &= (finest - 128.0).abs() < 1e-9;
        parts.push(format!(
            "{}: L2 rates {:.3}..{:.3}, H1 rates {:.3}..{:.3}, {secs:.1} s",
            &name[13..],
            rl2.iter().copied().fold(f64::INFINITY, f64::min),
            rl2.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            rh1.iter().copied().fold(f64::INFINITY, f64::min),
            rh1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ));
    }
    outcome(pass, parts.join("; "))
}

fn holder_boundedness(dir: &Path) -> Outcome {
    let r = load(dir, "checkerboard");
    let gamma = r.column("holder_gamma").unwrap()[0];
    let semi = r.column("holder_seminorm").unwrap();
    let growth = semi[3] / semi[2];
    outcome(
        semi.len() == 4 && gamma >= 0.05 && growth <= 1.1,
        format!("gamma_hat {gamma}, seminorm growth {growth:.4} on the two finest levels"),
    )
}

fn exponent_calculus() -> Outcome {
    let rat = |s: &str| parse_rational(s).unwrap();
    let mut pass = true;
    let mut worst = BigRational::from_integer(BigInt::from(0));
    let mut chains = Vec::new();
    for (n, q) in [(3u32, "1.5"), (4, "2"), (5, "2.4")] {
        let q = rat(q);
        let chain = exponent_bootstrap(n, &q).unwrap();
        pass &= chain.satisfies_induction() && chain.chain.last() == Some(&q);
        chains.push(format!("N={n}: {chain}"));
        let nr = BigRational::from_integer(BigInt::from(n));
        let one = BigRational::from_integer(BigInt::from(1));
        let p = &nr + BigRational::new(BigInt::from(1), BigInt::from(1_000_000));
        let t = interpolation_exponents(n, &q, &p).unwrap();
        let expected = [q.clone(), &nr * &q / (&nr - &q), (&nr - &one) * &q / (&nr - &q)];
        for (g, e) in [&t.r, &t.s, &t.t].into_iter().zip(&expected) {
            let gap = (g - e).abs();
            if gap > worst {
                worst = gap;
            }
        }
    }
    pass &= worst <= BigRational::new(BigInt::from(1), BigInt::from(1_000_000));
    let worst = rational_to_f64(&worst);
    outcome(pass, format!("{}; limit deviation {worst:.2e}", chains.join("; ")))
}

fn positivity() -> Outcome {
    let mesh = Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 12, 12).unwrap());
    let field = CoefficientField::laplacian(2)
        .with_d(scalar_fn(|x| -1.0 - x[1]), 2.0)
        .with_beta(scalar_fn(|x| 0.5 + 0.5 * x[0]), 1.0);
    let form = assemble_robin_form(&mesh, &field);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [BoundaryModel::Robin, BoundaryModel::Wentzell] {
        let threshold = positivity_dt_threshold(&form.stiffness, &evolution_mass(&form, model, true));
        let Some(threshold) = threshold.filter(|t| t.is_finite()) else {
            return outcome(false, format!("{model:?}: no finite certified step size"));
        };
        let dt = 0.9 * threshold;
        let cfg = EvolutionConfig::new(dt, 100.0 * dt).with_model(model).with_lumped(true);
        let initial = random_initial_states(form.num_dofs(), 50, true, &mut rng);
        let r = check_positivity(&form, &cfg, &initial).unwrap();
        pass &= r.holds && cfg.num_steps() == 100;
        parts.push(format!("{model:?}: threshold {threshold:.3e}, min u/|u0| {:.2e}", r.min_relative));
    }
    outcome(pass, parts.join("; "))
}

fn quasi_submarkovian() -> Outcome {
    let mesh = Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 16, 16).unwrap());
    let field = CoefficientField::laplacian(2)
        .with_b(vector_fn(|x| Vector2::new(0.3 * x[0], 0.0)), 0.3, Some(0.3))
        .with_d(scalar_fn(|x| 0.5 * (3.0 * x[1]).sin()), 0.5)
        .with_beta(scalar_fn(|x| 0.5 * (2.0 * x[0]).cos()), 0.5);
    let form = assemble_robin_form(&mesh, &field);
    let dt = 0.01;
    let cfg = EvolutionConfig::new(dt, 0.5).with_model(BoundaryModel::Wentzell).with_lumped(true);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let initial = random_initial_states(form.num_dofs(), 20, false, &mut rng);
    let omega = submarkovian_shift(&field).unwrap();
    let r = check_linfty_contraction(&form, &field, &cfg, None, &initial).unwrap();
    let bound = 1.0 + 10.0 * dt;
    outcome(
        r.max_growth <= bound && r.omega == omega,
        format!("omega {omega}, max rescaled growth {:.4} against {bound}", r.max_growth),
    )
}

fn counterexample(dir: &Path, times: &[(String, f64)]) -> Outcome {
    let r = load(dir, "counterexample");
    let omega = r.column("omega").unwrap();
    let alpha = r.column("alpha_n").unwrap();
    let value = r.column("form_value").unwrap();
    let quad = r.column("quadrature_error").unwrap();
    let n = r.column("n").unwrap();
    let secs = times.iter().find(|(n, _)| n == "counterexample").map_or(f64::NAN, |t| t.1);
    let mut pass = omega == [1.0, 10.0, 100.0] && secs < 5.0;
    for k in 0..omega.len() {
        let slack = -2.0 + 4.0 * omega[k] * alpha[k];
        pass &= 4.0 * omega[k] * alpha[k] < 2.0 && value[k] <= slack + 1e-8 && value[k] < 0.0 && quad[k] <= 1e-10;
    }
    outcome(
        pass,
        format!(
            "n = {:?}, form values {:.4}, {:.4}, {:.4}, {secs:.2} s",
            n.iter().map(|v| *v as u64).collect::<Vec<_>>(),
            value[0],
            value[1],
            value[2]
        ),
    )
}

fn l2_dissipativity(dir: &Path) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["l2_wentzell", "l2_robin"] {
        let r = load(dir, name);
        let ratio = r.column("max_step_ratio").unwrap()[0];
        let monotone = r.column("monotone").unwrap()[0];
        pass &= monotone == 1.0 && ratio <= 1.0 + 1e-12;
        parts.push(format!("{}: omega {:.4}, max step ratio {ratio:.6}", &name[3..], r.column("omega").unwrap()[0]));
    }
    outcome(pass, parts.join("; "))
}

fn determinism(first: &Path, second: &Path, jobs: &[Job]) -> Outcome {
    let mut differing = Vec::new();
    for job in jobs {
        let (code, _) = job.run(second);
        let a = std::fs::read(job.report_path(first)).unwrap_or_default();
        let b = std::fs::read(job.report_path(second)).unwrap_or_default();
        if code != 0 || a.is_empty() || a != b {
            differing.push(job.name);
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} reports byte-identical across reruns", jobs.len())
        } else {
            format!("differing reports: {}", differing.join(", "))
        },
    )
}

fn main() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let jobs = jobs();
    let mut times = Vec::new();
    let mut failed_jobs = Vec::new();
    for job in &jobs {
        let (code, secs) = job.run(first.path());
        if code != 0 {
            failed_jobs.push(format!("{} (exit {code})", job.name));
        }
        times.push((job.name.to_string(), secs));
    }
    if !failed_jobs.is_empty() {
        println!("report jobs with nonzero exit: {}", failed_jobs.join(", "));
    }

    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("reflection ellipticity", Box::new(reflection_ellipticity)),
        ("reflection algebra", Box::new(reflection_algebra)),
        ("solver convergence", Box::new(|| solver_convergence(first.path(), &times))),
        ("Holder boundedness", Box::new(|| holder_boundedness(first.path()))),
        ("exponent calculus", Box::new(exponent_calculus)),
        ("positivity", Box::new(positivity)),
        ("quasi-submarkovian", Box::new(quasi_submarkovian)),
        ("counterexample", Box::new(|| counterexample(first.path(), &times))),
        ("L2 dissipativity", Box::new(|| l2_dissipativity(first.path()))),
        ("determinism", Box::new(|| determinism(first.path(), second.path(), &jobs))),
    ];
    let mut failures = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|_| Outcome {
            pass: false,
            detail: "panicked".into(),
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<24} {}  {}",
            k + 1,
            name,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failures, checks.len());
    if failures > 0 || !failed_jobs.is_empty() {
        std::process::exit(1);
    }
}
