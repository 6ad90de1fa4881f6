//! Command-line entry point: parses arguments, runs one experiment and writes
//! its CSV report.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! verified property fails.

mod config;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Matrix2, Rotation2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{
    BoundaryConfig, CoefficientConfig, CoefficientFamily, DomainConfig, DomainKind, EvolutionSection, InitialFamily,
    MeshConfig, ModelName, OmegaConfig, OmegaPolicy, ProblemConfig, RhsConfig, RhsFamily, SchemeName, DEFAULT_ETA,
};
pub use report::{config_hash, format_value, ParsedReport, Report, VERSION};

use crate::assembly::{
    assemble_rhs_with, assemble_robin_form, assemble_robin_form_with, dump_matrix, find_coercivity_shift,
    AssembledForm, CellQuadrature,
};
use crate::coeff::{certify_ellipticity, matrix_fn, CoefficientField};
use crate::elliptic::{
    estimate_holder_exponent_seeded, exponent_bootstrap, interpolation_exponents, parse_rational, solve_robin,
};
use crate::error::{Error, Result};
use crate::linalg::{is_positive_definite, norm_inf};
use crate::mesh::{read_mesh, write_mesh, BoundaryChart, Mesh, PiecewiseLinear, Point};
use crate::parabolic::{
    check_l2_dissipativity, check_linfty_contraction, check_lp_contraction, evolution_mass, positivity_dt_threshold,
    probe_kernel, random_initial_states, verify_counterexample, BoundaryModel, Evolution, EvolutionConfig, Scheme,
    Verdict,
};
use crate::reflect::{certify_extended_ellipticity, sample_reflection, ExtendedProblem, ReflectionOperator};

/// Defect allowed in the exact identities of the reflection.
pub const REFLECTION_ALGEBRA_TOL: f64 = 1e-12;
/// `1 + L∞_GROWTH_DT_FACTOR·dt` bounds the rescaled L∞ growth.
pub const LINF_GROWTH_DT_FACTOR: f64 = 10.0;
const PD_RTOL: f64 = 1e-13;

#[derive(Debug, Parser)]
#[command(name = "divform", version, about = "Finite element experiments for divergence-form operators")]
struct Cli {
    /// Problem description (TOML).
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Write the CSV report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Validate the configuration and arguments, then stop.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the elliptic Robin problem on successive refinements.
    SolveElliptic(SolveArgs),
    /// Time-step the parabolic problem.
    Evolve(EvolveArgs),
    /// Check ellipticity and algebra of the boundary reflection.
    VerifyReflection(ReflectionArgs),
    /// Evaluate the `b = c = sgn` counterexample for given shifts.
    VerifyCounterexample(CounterexampleArgs),
    /// Measure L∞, Lᵖ or L² growth of the semigroup.
    CheckContraction(ContractionArgs),
    /// Evolve a discrete delta and report kernel moduli.
    ProbeKernel(KernelArgs),
    /// Bootstrap chain and interpolated exponents in exact arithmetic.
    Exponents(ExponentArgs),
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Read the coarsest mesh from a file instead of the domain section.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write the finest mesh used.
    #[arg(long)]
    save_mesh: Option<PathBuf>,
    /// Write the system matrix in coordinate format.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuadratureName {
    Barycenter,
    Degree2,
}

impl From<QuadratureName> for CellQuadrature {
    fn from(q: QuadratureName) -> Self {
        match q {
            QuadratureName::Barycenter => CellQuadrature::Barycenter,
            QuadratureName::Degree2 => CellQuadrature::Degree2,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Number of mesh levels, each a uniform refinement of the previous one.
    #[arg(long, default_value_t = 4)]
    refinements: usize,
    #[arg(long, value_enum, default_value_t = QuadratureName::Barycenter)]
    quadrature: QuadratureName,
    #[command(flatten)]
    mesh: MeshArgs,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[command(flatten)]
    mesh: MeshArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoeffName {
    Identity,
    Checkerboard,
    Anisotropic,
    Random,
}

#[derive(Debug, Args)]
struct ReflectionArgs {
    /// Comma-separated `key=value` list: slope, left, right, radius, angle.
    #[arg(long, default_value = "slope=1")]
    chart: String,
    #[arg(long, value_enum, default_value_t = CoeffName::Identity)]
    coeff: CoeffName,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Grid cells per direction of the chart mesh.
    #[arg(long, default_value_t = 16)]
    resolution: usize,
}

#[derive(Debug, Args)]
struct CounterexampleArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    omega: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    quadrature_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormName {
    Linf,
    Lp,
    L2,
}

#[derive(Debug, Args)]
struct ContractionArgs {
    #[arg(long, value_enum, default_value_t = NormName::Linf)]
    norm: NormName,
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,3,4")]
    p: Vec<f64>,
    /// Shift used for rescaling; derived from the coefficients when absent.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Relative slack in the Lᵖ fit.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Factor applied to the fitted L² rate to form the Lᵖ envelope.
    #[arg(long, default_value_t = 2.0)]
    inflation: f64,
    #[command(flatten)]
    mesh: MeshArgs,
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Source vertex index.
    #[arg(long)]
    source: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    times: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    dt: Option<f64>,
    #[command(flatten)]
    mesh: MeshArgs,
}

#[derive(Debug, Args)]
struct ExponentArgs {
    /// Space dimension.
    #[arg(long = "N")]
    n: u32,
    /// Integrability of the data, as a decimal or fraction.
    #[arg(long)]
    q: String,
    /// Target exponent for the interpolated triple.
    #[arg(long)]
    p: Option<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveElliptic(_) => "solve-elliptic",
            Command::Evolve(_) => "evolve",
            Command::VerifyReflection(_) => "verify-reflection",
            Command::VerifyCounterexample(_) => "verify-counterexample",
            Command::CheckContraction(_) => "check-contraction",
            Command::ProbeKernel(_) => "probe-kernel",
            Command::Exponents(_) => "exponents",
        }
    }

    fn needs_problem(&self) -> bool {
        matches!(
            self,
            Command::SolveElliptic(_) | Command::Evolve(_) | Command::CheckContraction(_) | Command::ProbeKernel(_)
        )
    }

    fn mesh_args(&self) -> Option<&MeshArgs> {
        match self {
            Command::SolveElliptic(a) => Some(&a.mesh),
            Command::Evolve(a) => Some(&a.mesh),
            Command::CheckContraction(a) => Some(&a.mesh),
            Command::ProbeKernel(a) => Some(&a.mesh),
            _ => None,
        }
    }
}

/// Result of a finished command.
struct Outcome {
    report: Report,
    summary: Vec<String>,
    failure: Option<String>,
}

struct Context {
    command: &'static str,
    seed: u64,
    hash: String,
    problem: Option<(ProblemConfig, PathBuf)>,
    base_mesh: Option<Mesh>,
}

impl Context {
    fn problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .map(|(c, _)| c)
            .ok_or_else(|| Error::Config(format!("{} requires --problem", self.command)))
    }

    fn field(&self) -> Result<CoefficientField> {
        let (cfg, dir) = self
            .problem
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} requires --problem", self.command)))?;
        cfg.build_field(dir)
    }

    fn mesh(&self) -> Result<Mesh> {
        match &self.base_mesh {
            Some(m) => Ok(m.clone()),
            None => self.problem()?.build_mesh(),
        }
    }

    fn report(&self, columns: &[&str]) -> Report {
        Report::new(self.command, self.hash.clone(), self.seed, columns)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let ctx = match prepare(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if cli.dry_run {
        if let Err(e) = validate(&cli.command, &ctx) {
            eprintln!("error: {e}");
            return 1;
        }
        if !cli.quiet {
            println!("{}: configuration is valid (config={})", ctx.command, ctx.hash);
        }
        return 0;
    }
    let outcome = match execute(&cli.command, &ctx) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if !cli.quiet {
        for line in &outcome.summary {
            println!("{line}");
        }
    }
    if let Some(path) = &cli.report {
        if let Err(e) = outcome.report.write(path) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return 1;
        }
    }
    match outcome.failure {
        Some(msg) => {
            eprintln!("verification failed: {msg}");
            2
        }
        None => 0,
    }
}

/// Loads inputs and computes the config hash from the canonical config text,
/// the coarsest mesh file and the subcommand arguments.
fn prepare(cli: &Cli) -> Result<Context> {
    let command = cli.command.name();
    let problem = match &cli.problem {
        Some(path) if cli.command.needs_problem() => {
            let cfg = ProblemConfig::load(path)?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Some((cfg, dir))
        }
        Some(_) => return Err(Error::Config(format!("{command} does not take --problem"))),
        None if cli.command.needs_problem() => {
            return Err(Error::Config(format!("{command} requires --problem")));
        }
        None => None,
    };
    let mut material = String::new();
    if let Some((cfg, _)) = &problem {
        material.push_str(&cfg.to_toml());
    }
    let mut base_mesh = None;
    if let Some(path) = cli.command.mesh_args().and_then(|m| m.mesh.as_ref()) {
        let mesh = read_mesh(path)?;
        if let Some((cfg, _)) = &problem {
            if mesh.dim() != cfg.dim() {
                return Err(Error::Config(format!(
                    "mesh {} is {}-dimensional but the domain is {}-dimensional",
                    path.display(),
                    mesh.dim(),
                    cfg.dim()
                )));
            }
        }
        material.push_str(&crate::mesh::mesh_to_string(&mesh));
        base_mesh = Some(mesh);
    }
    material.push_str(&format!("{:?}", cli.command));
    Ok(Context {
        command,
        seed: cli.seed,
        hash: config_hash(&material),
        problem,
        base_mesh,
    })
}

/// Argument checks that need no computation.
fn validate(command: &Command, ctx: &Context) -> Result<()> {
    match command {
        Command::SolveElliptic(a) => {
            if a.refinements == 0 {
                return Err(Error::Config("--refinements must be at least 1".into()));
            }
            ctx.field()?;
        }
        Command::Evolve(a) => {
            evolution_config(ctx.problem()?, a.scheme, a.dt, a.t_end)?.validate()?;
            ctx.field()?;
        }
        Command::VerifyReflection(a) => {
            parse_chart(&a.chart)?;
            if a.samples == 0 || a.resolution == 0 {
                return Err(Error::Config("--samples and --resolution must be positive".into()));
            }
        }
        Command::VerifyCounterexample(a) => {
            if let Some(w) = a.omega.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
                return Err(Error::Config(format!("omega must be positive and finite, got {w}")));
            }
            if a.quadrature_n == 0 {
                return Err(Error::Config("--quadrature-n must be positive".into()));
            }
        }
        Command::CheckContraction(a) => {
            evolution_config(ctx.problem()?, a.scheme, a.dt, a.t_end)?.validate()?;
            if a.trials == Some(0) {
                return Err(Error::Config("--trials must be positive".into()));
            }
            if a.norm == NormName::Lp {
                if let Some(p) = a.p.iter().find(|p| !(**p > 1.0) || !p.is_finite()) {
                    return Err(Error::Config(format!("p must lie in (1, inf), got {p}")));
                }
            }
            ctx.field()?;
        }
        Command::ProbeKernel(a) => {
            if let Some(t) = a.times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
                return Err(Error::Config(format!("probe times must be positive, got {t}")));
            }
            if !(a.gamma > 0.0 && a.gamma <= 1.0) {
                return Err(Error::Config(format!("--gamma must lie in (0, 1], got {}", a.gamma)));
            }
            ctx.field()?;
        }
        Command::Exponents(a) => {
            parse_rational(&a.q)?;
            if let Some(p) = &a.p {
                parse_rational(p)?;
            }
        }
    }
    Ok(())
}

fn execute(command: &Command, ctx: &Context) -> Result<Outcome> {
    validate(command, ctx)?;
    match command {
        Command::SolveElliptic(a) => solve_elliptic(a, ctx),
        Command::Evolve(a) => evolve(a, ctx),
        Command::VerifyReflection(a) => verify_reflection(a, ctx),
        Command::VerifyCounterexample(a) => counterexample(a, ctx),
        Command::CheckContraction(a) => contraction(a, ctx),
        Command::ProbeKernel(a) => kernel(a, ctx),
        Command::Exponents(a) => exponents(a, ctx),
    }
}

fn bool_value(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn resolve_omega(cfg: &ProblemConfig, form: &AssembledForm) -> Result<f64> {
    match cfg.omega.policy {
        OmegaPolicy::Fixed => Ok(cfg.omega.value.unwrap_or(0.0)),
        OmegaPolicy::Auto => find_coercivity_shift(form, cfg.omega.eta.unwrap_or(DEFAULT_ETA)),
    }
}

fn save_outputs(args: &MeshArgs, mesh: &Mesh, matrix: Option<&crate::linalg::CsrMatrix>) -> Result<()> {
    if let Some(path) = &args.save_mesh {
        write_mesh(mesh, path)?;
    }
    if let (Some(path), Some(m)) = (&args.dump_matrix, matrix) {
        dump_matrix(m, path)?;
    }
    Ok(())
}

fn solve_elliptic(a: &SolveArgs, ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.problem()?;
    let field = ctx.field()?;
    let data = cfg.build_rhs();
    let quadrature = CellQuadrature::from(a.quadrature);
    let mut meshes = vec![Arc::new(ctx.mesh()?)];
    for _ in 1..a.refinements {
        let next = meshes.last().expect("at least one level").refine_uniform()?;
        meshes.push(Arc::new(next));
    }
    let forms: Vec<AssembledForm> = meshes
        .iter()
        .map(|m| assemble_robin_form_with(m, &field, quadrature))
        .collect();
    let mut omega = resolve_omega(cfg, &forms[0])?;
    if cfg.omega.policy == OmegaPolicy::Auto {
        let eta = cfg.omega.eta.unwrap_or(DEFAULT_ETA);
        for form in &forms[1..] {
            let base = form.stiffness.symmetric_part().add_scaled(&form.h1, -eta);
            if !is_positive_definite(&base.add_scaled(&form.mass, omega), PD_RTOL) {
                omega = omega.max(find_coercivity_shift(form, eta)?);
            }
        }
    }
    let exact = cfg.exact_solution();
    let mut solutions = Vec::with_capacity(forms.len());
    for (mesh, form) in meshes.iter().zip(&forms) {
        let rhs = assemble_rhs_with(mesh, &data, quadrature);
        solutions.push(solve_robin(form, &rhs, omega)?);
    }
    let holder = if solutions.len() >= 3 {
        Some(estimate_holder_exponent_seeded(&solutions, ctx.seed)?)
    } else {
        None
    };

    let mut report = ctx.report(&["h", "L2_err", "H1_err", "rate_L2", "rate_H1", "holder_gamma", "holder_seminorm"]);
    report.note("omega", format_value(omega));
    let mut summary = vec![format!("omega = {omega:.6e}")];
    let mut prev: Option<(f64, f64, f64)> = None;
    for (level, u) in solutions.iter().enumerate() {
        let h = u.mesh().max_diameter();
        let (l2, h1) = match &exact {
            Some((ue, grad)) => (u.l2_error(|x| ue(x)), u.h1_error(|x| ue(x), |x| grad(x))),
            None => (f64::NAN, f64::NAN),
        };
        let rate = |e0: f64, e1: f64, h0: f64| {
            if e0 > 0.0 && e1 > 0.0 {
                (e0 / e1).ln() / (h0 / h).ln()
            } else {
                f64::NAN
            }
        };
        let (r2, r1) = match prev {
            Some((h0, e2, e1)) => (rate(e2, l2, h0), rate(e1, h1, h0)),
            None => (f64::NAN, f64::NAN),
        };
        let (gamma, semi) = match &holder {
            Some(est) => (est.gamma_hat, est.seminorms[level]),
            None => (f64::NAN, f64::NAN),
        };
        report.push(vec![h, l2, h1, r2, r1, gamma, semi]);
        summary.push(format!(
            "h = {h:.4e}  L2 = {l2:.4e}  H1 = {h1:.4e}  rate_L2 = {r2:.3}  rate_H1 = {r1:.3}  seminorm = {semi:.4e}"
        ));
        prev = Some((h, l2, h1));
    }
    if let Some(est) = &holder {
        summary.push(format!("holder exponent estimate: {}", est.gamma_hat));
        if est.at_floor {
            eprintln!("warning: no grid exponent kept the seminorm bounded; reporting the floor value");
        }
    }
    let finest = solutions.last().expect("at least one level").mesh();
    let last_form = forms.last().expect("at least one level");
    save_outputs(&a.mesh, finest, Some(&last_form.shifted(omega)))?;
    Ok(Outcome {
        report,
        summary,
        failure: None,
    })
}

fn evolution_config(
    cfg: &ProblemConfig,
    scheme: Option<SchemeName>,
    dt: Option<f64>,
    t_end: Option<f64>,
) -> Result<EvolutionConfig> {
    let ev = &cfg.evolution;
    let scheme = scheme.or(ev.scheme).unwrap_or(SchemeName::Euler);
    let dt = dt.or(ev.dt).unwrap_or(0.01);
    let t_end = t_end.or(ev.t_end).unwrap_or(0.1);
    let out = EvolutionConfig::new(dt, t_end)
        .with_scheme(Scheme::from(scheme))
        .with_model(BoundaryModel::from(cfg.boundary.model))
        .with_lumped(ev.lumped.unwrap_or(false));
    out.validate()?;
    Ok(out)
}

fn initial_state(cfg: &ProblemConfig, mesh: &Mesh, rng: &mut impl Rng) -> Vec<f64> {
    let bbox = cfg.bounding_box();
    match cfg.evolution.initial.unwrap_or_default() {
        InitialFamily::Random => (0..mesh.num_vertices()).map(|_| rng.gen_range(0.0..1.0)).collect(),
        InitialFamily::Ones => vec![1.0; mesh.num_vertices()],
        InitialFamily::Bump => mesh
            .vertices()
            .iter()
            .map(|p| {
                let wave = |v: f64, lo: f64, hi: f64| {
                    if hi > lo {
                        (std::f64::consts::PI * (v - lo) / (hi - lo)).cos()
                    } else {
                        1.0
                    }
                };
                0.5 * (1.0 + wave(p[0], bbox[0], bbox[1]) * wave(p[1], bbox[2], bbox[3]))
            })
            .collect(),
    }
}

fn evolve(a: &EvolveArgs, ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.problem()?;
    let mesh = Arc::new(ctx.mesh()?);
    let form = assemble_robin_form(&mesh, &ctx.field()?);
    let ecfg = evolution_config(cfg, a.scheme, a.dt, a.t_end)?;
    let ev = Evolution::new(&form, ecfg)?;
    let u0 = initial_state(cfg, &mesh, &mut ctx.rng());
    let traj = ev.evolve(&u0)?;
    let mass = ev.mass();
    let ones = vec![1.0; u0.len()];

    let mut report = ctx.report(&["t", "l2_norm", "linf_norm", "min_value", "total_mass"]);
    let lumped = evolution_mass(&form, ecfg.boundary_model, true);
    let threshold = positivity_dt_threshold(&form.stiffness, &lumped);
    report.note("positivity_dt_threshold", threshold.map_or("none".into(), format_value));
    let row = |t: f64, u: &[f64]| {
        vec![
            t,
            mass.bilinear(u, u).max(0.0).sqrt(),
            norm_inf(u),
            u.iter().copied().fold(f64::INFINITY, f64::min),
            mass.bilinear(&ones, u),
        ]
    };
    report.push(row(0.0, &u0));
    for (t, u) in traj.times.iter().zip(&traj.states) {
        report.push(row(*t, u));
    }
    let last = report.rows.last().expect("initial row").clone();
    let summary = vec![
        format!("{} steps of dt = {}", traj.times.len(), ecfg.dt),
        format!(
            "t = {:.6}  L2 = {:.6e}  Linf = {:.6e}  min = {:.6e}  mass = {:.6e}",
            last[0], last[1], last[2], last[3], last[4]
        ),
    ];
    save_outputs(&a.mesh, &mesh, Some(&form.stiffness))?;
    Ok(Outcome {
        report,
        summary,
        failure: None,
    })
}

/// Chart parameters from `key=value` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ChartParams {
    left: f64,
    right: f64,
    radius: f64,
    angle: f64,
}

fn parse_chart(params: &str) -> Result<ChartParams> {
    let mut out = ChartParams {
        left: 0.0,
        right: 0.0,
        radius: 1.0,
        angle: 0.0,
    };
    for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("chart entry '{item}' is not key=value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("chart value '{value}' is not a number")))?;
        if !v.is_finite() {
            return Err(Error::Config(format!("chart value for {key} must be finite")));
        }
        match key.trim() {
            "slope" => {
                out.left = v;
                out.right = v;
            }
            "left" => out.left = v,
            "right" => out.right = v,
            "radius" => out.radius = v,
            "angle" => out.angle = v,
            other => return Err(Error::Config(format!("unknown chart key '{other}'"))),
        }
    }
    if !(out.radius > 0.0) {
        return Err(Error::Config("chart radius must be positive".into()));
    }
    Ok(out)
}

fn build_chart(params: ChartParams) -> Result<BoundaryChart> {
    let r = params.radius;
    let psi = PiecewiseLinear::new(vec![-r, 0.0, r], vec![-params.left * r, 0.0, params.right * r])?;
    let rotation: Matrix2<f64> = Rotation2::new(params.angle).into_inner();
    BoundaryChart::new([0.0, 0.0], rotation, r, psi)
}

/// Random symmetric matrix with eigenvalues in `[0.1, 10]`.
pub fn random_spd(rng: &mut impl Rng) -> Matrix2<f64> {
    let l1 = rng.gen_range(0.1..10.0);
    let l2 = rng.gen_range(0.1..10.0);
    let r = Rotation2::new(rng.gen_range(0.0..std::f64::consts::PI)).into_inner();
    r * Matrix2::new(l1, 0.0, 0.0, l2) * r.transpose()
}

fn reflection_field(name: CoeffName, radius: f64, rng: &mut impl Rng) -> Result<CoefficientField> {
    let base = CoefficientField::laplacian(2);
    Ok(match name {
        CoeffName::Identity => base,
        CoeffName::Checkerboard => CoefficientField::checkerboard(2, 10.0, 4)?,
        CoeffName::Anisotropic => {
            let a = |x: Point| {
                let r = Rotation2::new(2.0 * x[0] + x[1]).into_inner();
                r * Matrix2::new(10.0, 0.0, 0.0, 0.1) * r.transpose()
            };
            base.with_a(matrix_fn(a), 10.0).with_name("anisotropic")
        }
        CoeffName::Random => {
            const CELLS: usize = 8;
            let table: Vec<Matrix2<f64>> = (0..CELLS * CELLS).map(|_| random_spd(rng)).collect();
            let cell = move |v: f64| (((v + radius) / (2.0 * radius) * CELLS as f64).floor().max(0.0) as usize).min(CELLS - 1);
            let a = move |x: Point| table[cell(x[1]) * CELLS + cell(x[0])];
            base.with_a(matrix_fn(a), 10.0).with_name("random")
        }
    })
}

fn verify_reflection(a: &ReflectionArgs, ctx: &Context) -> Result<Outcome> {
    let params = parse_chart(&a.chart)?;
    let mut rng = ctx.rng();
    let field = reflection_field(a.coeff, params.radius, &mut rng)?;
    let op = ReflectionOperator::new(build_chart(params)?);
    let ext = ExtendedProblem::new(op, &field, a.resolution, a.resolution)?;
    let alpha = certify_ellipticity(&field, &ext.mesh_u, 4)?.alpha;
    let alpha_hat = certify_extended_ellipticity(&ext, 4)?.alpha;
    let samples = sample_reflection(&ext, a.samples, &mut rng)?;

    let mut report = ctx.report(&[
        "x",
        "y",
        "sx",
        "sy",
        "lambda_min_before",
        "lambda_min_after",
        "involution_defect",
        "det_defect",
        "jacobian_defect",
    ]);
    report.note("alpha", format_value(alpha));
    report.note("alpha_hat", format_value(alpha_hat));
    let mut worst: f64 = 0.0;
    for s in &samples {
        let back = ext.op.reflect_point(s.reflected)?;
        let involution = (back[0] - s.x[0]).hypot(back[1] - s.x[1]) / params.radius;
        let j = ext.op.jacobian_s(s.x)?.matrix;
        let j_back = ext.op.jacobian_s(s.reflected)?.matrix;
        let det = (j.determinant() + 1.0).abs();
        let inverse = (j_back * j - Matrix2::identity()).abs().max();
        worst = worst.max(involution).max(det).max(inverse);
        report.push(vec![
            s.x[0],
            s.x[1],
            s.reflected[0],
            s.reflected[1],
            s.lambda_before,
            s.lambda_after,
            involution,
            det,
            inverse,
        ]);
    }
    let summary = vec![
        format!("alpha = {alpha:.6e}  alpha_hat = {alpha_hat:.6e}"),
        format!("largest algebra defect over {} samples: {worst:.3e}", samples.len()),
    ];
    let failure = if !(alpha_hat > 0.0) {
        Some(format!("extended coefficients are not elliptic (alpha_hat = {alpha_hat})"))
    } else if worst > REFLECTION_ALGEBRA_TOL {
        Some(format!("reflection identities violated by {worst:e}"))
    } else {
        None
    };
    Ok(Outcome {
        report,
        summary,
        failure,
    })
}

fn counterexample(a: &CounterexampleArgs, ctx: &Context) -> Result<Outcome> {
    let rows = verify_counterexample(&a.omega, a.quadrature_n)?;
    let mut report = ctx.report(&["omega", "n", "alpha_n", "form_value", "bound", "quadrature_error", "violated"]);
    let mut summary = Vec::new();
    let mut compatible = Vec::new();
    for r in &rows {
        let violated = r.verdict == Verdict::Violated;
        report.push(vec![
            r.omega,
            r.n as f64,
            r.alpha_n,
            r.form_value,
            r.bound,
            r.quadrature_error,
            bool_value(violated),
        ]);
        summary.push(format!(
            "omega = {}  n = {}  alpha_n = {:.6e}  form_value = {:.6e}  bound = {:.6e}  {}",
            r.omega,
            r.n,
            r.alpha_n,
            r.form_value,
            r.bound,
            if violated { "violated" } else { "compatible" }
        ));
        if !violated {
            compatible.push(r.omega.to_string());
        }
    }
    let failure = (!compatible.is_empty()).then(|| format!("no violation found for omega = {}", compatible.join(", ")));
    Ok(Outcome {
        report,
        summary,
        failure,
    })
}

fn contraction(a: &ContractionArgs, ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.problem()?;
    let mesh = Arc::new(ctx.mesh()?);
    let field = ctx.field()?;
    let form = assemble_robin_form(&mesh, &field);
    let ecfg = evolution_config(cfg, a.scheme, a.dt, a.t_end)?;
    let trials = a.trials.or(cfg.evolution.trials).unwrap_or(20);
    let initial = random_initial_states(form.num_dofs(), trials, false, &mut ctx.rng());
    let mut summary = Vec::new();
    let (report, failure) = match a.norm {
        NormName::Linf => {
            let r = check_linfty_contraction(&form, &field, &ecfg, a.omega, &initial)?;
            let bound = 1.0 + LINF_GROWTH_DT_FACTOR * ecfg.dt;
            let pass = r.max_growth <= bound;
            let mut report = ctx.report(&["omega", "max_growth", "bound", "worst_trial", "worst_time", "pass"]);
            report.push(vec![r.omega, r.max_growth, bound, r.worst_trial as f64, r.worst_time, bool_value(pass)]);
            summary.push(format!(
                "omega = {:.6e}  max growth = {:.6e}  bound = {bound:.6e}",
                r.omega, r.max_growth
            ));
            let failure = (!pass).then(|| format!("rescaled sup norm grew to {:.6e} > {bound:.6e}", r.max_growth));
            (report, failure)
        }
        NormName::Lp => {
            let rows = check_lp_contraction(&form, &ecfg, &a.p, &initial, a.tol, a.inflation)?;
            let mut report = ctx.report(&["p", "omega_p", "envelope", "within_envelope"]);
            report.note("inflation", format_value(a.inflation));
            for r in &rows {
                report.push(vec![r.p, r.omega_p, r.envelope, bool_value(r.within_envelope)]);
                summary.push(format!(
                    "p = {}  omega_p = {:.6e}  envelope = {:.6e}{}",
                    r.p,
                    r.omega_p,
                    r.envelope,
                    if r.within_envelope { "" } else { "  (outside envelope)" }
                ));
            }
            (report, None)
        }
        NormName::L2 => {
            let omega = match a.omega {
                Some(w) => w,
                None => resolve_omega(cfg, &form)?,
            };
            let r = check_l2_dissipativity(&form, &ecfg.with_omega(omega), &initial)?;
            let mut report = ctx.report(&["omega", "max_step_ratio", "monotone"]);
            report.push(vec![r.omega, r.max_step_ratio, bool_value(r.monotone)]);
            summary.push(format!("omega = {:.6e}  largest step ratio = {:.12}", r.omega, r.max_step_ratio));
            let failure = (!r.monotone).then(|| format!("shifted L2 norm increased (ratio {:.12})", r.max_step_ratio));
            (report, failure)
        }
    };
    save_outputs(&a.mesh, &mesh, Some(&form.stiffness))?;
    Ok(Outcome {
        report,
        summary,
        failure,
    })
}

fn kernel(a: &KernelArgs, ctx: &Context) -> Result<Outcome> {
    let cfg = ctx.problem()?;
    let mesh = Arc::new(ctx.mesh()?);
    let form = assemble_robin_form(&mesh, &ctx.field()?);
    let t_max = a.times.iter().copied().fold(0.0, f64::max);
    let dt = a.dt.or(cfg.evolution.dt).unwrap_or(t_max / 100.0);
    let ecfg = evolution_config(cfg, a.scheme, Some(dt), Some(t_max.max(dt)))?;
    let probe = probe_kernel(&form, &ecfg, a.source, &a.times, a.gamma)?;
    let mut report = ctx.report(&["t", "holder_modulus", "mass", "min_value"]);
    report.note("source", a.source);
    report.note("gamma", format_value(a.gamma));
    let mut summary = Vec::new();
    for (k, &t) in probe.times.iter().enumerate() {
        let min_k = probe.kernel_columns[k].values().iter().copied().fold(f64::INFINITY, f64::min);
        report.push(vec![t, probe.holder_modulus[k], probe.masses[k], min_k]);
        summary.push(format!(
            "t = {t}  modulus = {:.6e}  mass = {:.6e}  min = {min_k:.6e}",
            probe.holder_modulus[k], probe.masses[k]
        ));
    }
    let failure = (!probe.modulus_bounded).then(|| "kernel Holder modulus grew by more than the allowed factor".to_string());
    save_outputs(&a.mesh, &mesh, Some(&form.stiffness))?;
    Ok(Outcome {
        report,
        summary,
        failure,
    })
}

fn exponents(a: &ExponentArgs, ctx: &Context) -> Result<Outcome> {
    let q = parse_rational(&a.q)?;
    let chain = exponent_bootstrap(a.n, &q)?;
    let mut report = ctx.report(&["index", "q_n"]);
    report.note("chain", chain.to_string().replace(", ", ";"));
    for (k, v) in chain.chain_f64().into_iter().enumerate() {
        report.push(vec![k as f64, v]);
    }
    let mut summary = vec![chain.to_string()];
    if let Some(p) = &a.p {
        let t = interpolation_exponents(a.n, &q, &parse_rational(p)?)?.to_f64();
        report.note("theta", format_value(t.0));
        report.note("r", format_value(t.1));
        report.note("s", format_value(t.2));
        report.note("t", format_value(t.3));
        summary.push(format!("theta = {}  r = {}  s = {}  t = {}", t.0, t.1, t.2, t.3));
    }
    let failure = (!chain.satisfies_induction()).then(|| "bootstrap chain breaks the induction relation".to_string());
    Ok(Outcome {
        report,
        summary,
        failure,
    })
}
