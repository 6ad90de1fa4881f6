//! θ-scheme evolution of the Robin and Wentzell-Robin problems, with
//! positivity, L∞, Lᵖ and L² checks, the non-contractivity counterexample and
//! kernel probes.

mod counterexample;
mod kernel;

use rand::Rng;

pub use counterexample::{
    alpha_n, counterexample_form_value, counterexample_growth, select_n, u_n, verify_counterexample,
    CounterexampleReport, Verdict, COUNTEREXAMPLE_N_CAP, COUNTEREXAMPLE_QUAD_TOL,
};
pub use kernel::{kernel_symmetry_defect, probe_kernel, KernelProbe, KERNEL_MODULUS_FACTOR};

use crate::assembly::AssembledForm;
use crate::coeff::CoefficientField;
use crate::elliptic::lp_norm_weighted;
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, BandLu, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryModel {
    /// Mass `M_Ω`.
    Robin,
    /// Mass `M_Ω + M_∂`.
    Wentzell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub boundary_model: BoundaryModel,
    /// Row-sum lumping of the mass matrix.
    pub lumped: bool,
    /// Shift used for `e^{−ωt}` rescaling in contraction checks.
    pub omega: f64,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            scheme: Scheme::ImplicitEuler,
            dt,
            t_end,
            boundary_model: BoundaryModel::Robin,
            lumped: false,
            omega: 0.0,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_model(mut self, model: BoundaryModel) -> Self {
        self.boundary_model = model;
        self
    }

    pub fn with_lumped(mut self, lumped: bool) -> Self {
        self.lumped = lumped;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// `round(t_end / dt)`
    pub fn num_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// The mass matrix selected by the boundary model, optionally lumped.
pub fn evolution_mass(form: &AssembledForm, model: BoundaryModel, lumped: bool) -> CsrMatrix {
    let m = match model {
        BoundaryModel::Robin => form.mass.clone(),
        BoundaryModel::Wentzell => form.mass.add_scaled(&form.boundary_mass, 1.0),
    };
    if lumped {
        m.lumped()
    } else {
        m
    }
}

/// A factorized θ-scheme stepper `(M + θ·dt·A)u⁺ = (M − (1−θ)·dt·A)u`.
#[derive(Debug, Clone)]
pub struct Evolution {
    config: EvolutionConfig,
    mass: CsrMatrix,
    explicit: CsrMatrix,
    lhs: BandLu,
}

impl Evolution {
    pub fn new(form: &AssembledForm, config: EvolutionConfig) -> Result<Self> {
        let mass = evolution_mass(form, config.boundary_model, config.lumped);
        Self::with_operator(&form.stiffness, mass, config)
    }

    /// Stepper for an arbitrary operator `A` and mass `M`.
    pub fn with_operator(a: &CsrMatrix, mass: CsrMatrix, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        if a.nrows() != mass.nrows() {
            return Err(Error::DimensionMismatch {
                expected: mass.nrows(),
                got: a.nrows(),
            });
        }
        let theta = config.scheme.theta();
        let lhs = BandLu::factor(&mass.add_scaled(a, theta * config.dt))?;
        let explicit = mass.add_scaled(a, -(1.0 - theta) * config.dt);
        Ok(Self {
            config,
            mass,
            explicit,
            lhs,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn step(&self, u: &[f64]) -> Vec<f64> {
        self.lhs.solve(&self.explicit.matvec(u))
    }

    /// States after `1, …, steps` steps.
    pub fn run(&self, u0: &[f64], steps: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(steps);
        let mut u = u0.to_vec();
        for _ in 0..steps {
            u = self.step(&u);
            out.push(u.clone());
        }
        out
    }

    pub fn evolve(&self, u0: &[f64]) -> Result<Trajectory> {
        if u0.len() != self.mass.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.mass.nrows(),
                got: u0.len(),
            });
        }
        let n = self.config.num_steps();
        let states = self.run(u0, n);
        let times = (1..=n).map(|k| k as f64 * self.config.dt).collect();
        Ok(Trajectory { times, states })
    }
}

/// States at `t = dt, 2dt, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// One θ-scheme step with a freshly factorized system.
pub fn step(form: &AssembledForm, mass: &CsrMatrix, u: &[f64], cfg: &EvolutionConfig) -> Result<Vec<f64>> {
    Ok(Evolution::with_operator(&form.stiffness, mass.clone(), *cfg)?.step(u))
}

pub fn evolve(form: &AssembledForm, cfg: &EvolutionConfig, u0: &[f64]) -> Result<Trajectory> {
    Evolution::new(form, *cfg)?.evolve(u0)
}

/// Random initial states with `‖u₀‖_∞ = 1`, drawn uniformly from `[0, 1]` or
/// `[−1, 1]` before normalization.
pub fn random_initial_states(n: usize, trials: usize, nonnegative: bool, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..trials)
        .map(|_| {
            let mut u: Vec<f64> = (0..n)
                .map(|_| if nonnegative { rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let m = norm_inf(&u);
            if m > 0.0 {
                u.iter_mut().for_each(|x| *x /= m);
            }
            u
        })
        .collect()
}

/// Largest `dt` for which `M_L + dt·A` is a row-diagonally-dominant
/// M-matrix: `None` if `A` has a positive off-diagonal entry, `∞` if every
/// row sum is nonnegative, otherwise `min M_ii / (−Σⱼ A_ij)` over rows with a
/// negative sum. Implicit Euler with lumped mass is positivity preserving for
/// every `dt` strictly below this value.
pub fn positivity_dt_threshold(a: &CsrMatrix, lumped_mass: &CsrMatrix) -> Option<f64> {
    if a.max_offdiagonal() > 0.0 {
        return None;
    }
    let m = lumped_mass.diagonal();
    let threshold = a
        .row_sums()
        .iter()
        .zip(&m)
        .filter(|(s, _)| **s < 0.0)
        .map(|(s, mi)| mi / -s)
        .fold(f64::INFINITY, f64::min);
    Some(threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub threshold: Option<f64>,
    pub dt: f64,
    /// `min_t min_x u(t, x) / ‖u₀‖_∞` over all trials.
    pub min_relative: f64,
    pub holds: bool,
}

/// Evolves nonnegative initial states and records the most negative value.
pub fn check_positivity(form: &AssembledForm, cfg: &EvolutionConfig, initial: &[Vec<f64>]) -> Result<PositivityReport> {
    let ev = Evolution::new(form, *cfg)?;
    let threshold = positivity_dt_threshold(&form.stiffness, &evolution_mass(form, cfg.boundary_model, true));
    let mut min_relative = f64::INFINITY;
    for u0 in initial {
        let scale = norm_inf(u0).max(f64::MIN_POSITIVE);
        for state in ev.evolve(u0)?.states {
            let m = state.iter().copied().fold(f64::INFINITY, f64::min);
            min_relative = min_relative.min(m / scale);
        }
    }
    Ok(PositivityReport {
        threshold,
        dt: cfg.dt,
        min_relative,
        holds: min_relative >= -1e-12,
    })
}

/// `ω = max{‖d‖_∞ + k, ‖β‖_∞ + k}` with `k` from [`CoefficientField::drift_bound`].
pub fn submarkovian_shift(field: &CoefficientField) -> Result<f64> {
    let k = field.drift_bound().ok_or(Error::MissingLipschitz)?;
    Ok((field.sup_bounds.d + k).max(field.sup_bounds.beta + k))
}

/// Nodal truncation pair `v = (1 ∧ |u|)·sgn(u)`, `w = (|u| − 1)⁺·sgn(u)`;
/// `u = v + w` at every vertex.
pub fn truncation_pair(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    u.iter()
        .map(|&x| {
            let v = x.abs().min(1.0).copysign(x);
            (v, x - v)
        })
        .unzip()
}

/// `a(v, w) + ω(v, w)_H` for the truncation pair of `u`, with `H` the mass of
/// `model`. The unit ball of L∞ is invariant only if this is nonnegative for
/// every `u`.
pub fn linfty_invariance_value(form: &AssembledForm, model: BoundaryModel, omega: f64, u: &[f64]) -> Result<f64> {
    if u.len() != form.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: form.num_dofs(),
            got: u.len(),
        });
    }
    let (v, w) = truncation_pair(u);
    let mass = evolution_mass(form, model, false);
    Ok(form.stiffness.bilinear(&w, &v) + omega * mass.bilinear(&w, &v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinftyReport {
    pub omega: f64,
    /// `max_t e^{−ωt}‖u(t)‖_∞ / ‖u₀‖_∞` over all trials.
    pub max_growth: f64,
    pub worst_trial: usize,
    pub worst_time: f64,
}

/// Measures the rescaled L∞ growth. Without an explicit `omega` the shift is
/// taken from [`submarkovian_shift`]; Wentzell mode always requires a
/// Lipschitz drift unless `omega` is given.
pub fn check_linfty_contraction(
    form: &AssembledForm,
    field: &CoefficientField,
    cfg: &EvolutionConfig,
    omega: Option<f64>,
    initial: &[Vec<f64>],
) -> Result<LinftyReport> {
    let omega = match omega {
        Some(w) => w,
        None => submarkovian_shift(field)?,
    };
    let ev = Evolution::new(form, *cfg)?;
    let mut report = LinftyReport {
        omega,
        max_growth: 0.0,
        worst_trial: 0,
        worst_time: 0.0,
    };
    for (trial, u0) in initial.iter().enumerate() {
        let scale = norm_inf(u0).max(f64::MIN_POSITIVE);
        let traj = ev.evolve(u0)?;
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let g = (-omega * t).exp() * norm_inf(state) / scale;
            if g > report.max_growth {
                report.max_growth = g;
                report.worst_trial = trial;
                report.worst_time = *t;
            }
        }
    }
    Ok(report)
}

fn norm_weights(form: &AssembledForm, model: BoundaryModel) -> Vec<f64> {
    evolution_mass(form, model, true).diagonal()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub p: f64,
    /// Smallest `ω` with `‖u(t)‖_p ≤ e^{ωt}(1 + tol)‖u₀‖_p` on every sample.
    pub omega_p: f64,
    /// `δ̂₀·max{p, p′}`
    pub envelope: f64,
    pub within_envelope: bool,
}

/// Fits `ω_p` for each `p` and compares it with `δ̂₀·max{p, p′}` where
/// `δ̂₀ = inflation·max(ω₂, 0)/2`.
pub fn check_lp_contraction(
    form: &AssembledForm,
    cfg: &EvolutionConfig,
    p_list: &[f64],
    initial: &[Vec<f64>],
    tol: f64,
    inflation: f64,
) -> Result<Vec<LpRow>> {
    if let Some(&p) = p_list.iter().find(|&&p| !(p > 1.0) || p.is_infinite()) {
        return Err(Error::InvalidArgument(format!("p must lie in (1, ∞), got {p}")));
    }
    let ev = Evolution::new(form, *cfg)?;
    let weights = norm_weights(form, cfg.boundary_model);
    let trajectories: Vec<Trajectory> = initial.iter().map(|u0| ev.evolve(u0)).collect::<Result<_>>()?;
    let fit = |p: f64| {
        let mut w = f64::NEG_INFINITY;
        for (u0, traj) in initial.iter().zip(&trajectories) {
            let n0 = lp_norm_weighted(u0, &weights, p);
            if n0 == 0.0 {
                continue;
            }
            for (t, state) in traj.times.iter().zip(&traj.states) {
                let ratio = lp_norm_weighted(state, &weights, p) / n0;
                w = w.max((ratio.ln() - tol.ln_1p()) / t);
            }
        }
        w
    };
    let omega_2 = fit(2.0);
    let delta0 = inflation * omega_2.max(0.0) / 2.0;
    Ok(p_list
        .iter()
        .map(|&p| {
            let omega_p = if p == 2.0 { omega_2 } else { fit(p) };
            let conj = p / (p - 1.0);
            let envelope = delta0 * p.max(conj);
            LpRow {
                p,
                omega_p,
                envelope,
                within_envelope: omega_p <= envelope + tol,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityReport {
    pub omega: f64,
    /// Largest `‖u_{k+1}‖ / ‖u_k‖` in the mass norm.
    pub max_step_ratio: f64,
    pub monotone: bool,
}

/// Evolves the shifted operator `A + ωM` and checks that the mass norm never
/// increases from one step to the next.
pub fn check_l2_dissipativity(
    form: &AssembledForm,
    cfg: &EvolutionConfig,
    initial: &[Vec<f64>],
) -> Result<DissipativityReport> {
    let mass = evolution_mass(form, cfg.boundary_model, cfg.lumped);
    let shifted = form.stiffness.add_scaled(&mass, cfg.omega);
    let ev = Evolution::with_operator(&shifted, mass.clone(), *cfg)?;
    let norm = |u: &[f64]| mass.bilinear(u, u).max(0.0).sqrt();
    let mut max_step_ratio: f64 = 0.0;
    for u0 in initial {
        let mut prev = norm(u0);
        for state in ev.evolve(u0)?.states {
            let cur = norm(&state);
            if prev > 0.0 {
                max_step_ratio = max_step_ratio.max(cur / prev);
            }
            prev = cur;
        }
    }
    Ok(DissipativityReport {
        omega: cfg.omega,
        max_step_ratio,
        monotone: max_step_ratio <= 1.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_robin_form, find_coercivity_shift};
    use crate::coeff::constant_scalar;
    use crate::mesh::{build_interval_mesh, build_rectangle_mesh};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn square(n: usize) -> Arc<crate::mesh::Mesh> {
        Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, n, n).unwrap())
    }

    #[test]
    fn constants_are_stationary() {
        let m = square(6);
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let ones = vec![1.0; m.num_vertices()];
        for model in [BoundaryModel::Robin, BoundaryModel::Wentzell] {
            for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
                let cfg = EvolutionConfig::new(0.01, 0.1).with_model(model).with_scheme(scheme);
                let traj = evolve(&form, &cfg, &ones).unwrap();
                assert_eq!(traj.states.len(), 10);
                for s in &traj.states {
                    assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn mass_is_conserved() {
        let m = square(6);
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u0 = &random_initial_states(m.num_vertices(), 1, false, &mut rng)[0];
        let cfg = EvolutionConfig::new(0.01, 0.05);
        let mass = evolution_mass(&form, cfg.boundary_model, false);
        let u1 = step(&form, &mass, u0, &cfg).unwrap();
        let ones = vec![1.0; u0.len()];
        assert!((mass.bilinear(&ones, u0) - mass.bilinear(&ones, &u1)).abs() < 1e-13);
    }

    #[test]
    fn eigenvector_decays_by_resolvent_factor() {
        let m = Arc::new(build_interval_mesh(0.0, 1.0, 20).unwrap());
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(1));
        let (a, mm) = (form.stiffness.to_dense(), form.mass.to_dense());
        let chol = mm.clone().cholesky().unwrap();
        let linv = chol.l().try_inverse().unwrap();
        let sym = &linv * &a * linv.transpose();
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let k = order[1];
        let lambda = eig.eigenvalues[k];
        let v = linv.transpose() * eig.eigenvectors.column(k);
        let u0: Vec<f64> = v.iter().copied().collect();
        let dt = 0.01;
        let u1 = step(&form, &form.mass, &u0, &EvolutionConfig::new(dt, dt)).unwrap();
        for (a, b) in u1.iter().zip(&u0) {
            assert!((a - b / (1.0 + dt * lambda)).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_property() {
        let m = square(5);
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0 = &random_initial_states(m.num_vertices(), 1, false, &mut rng)[0];
        let ev = Evolution::new(&form, EvolutionConfig::new(0.01, 0.05)).unwrap();
        let a = ev.run(u0, 5);
        let b = ev.run(&a[2], 2);
        for (x, y) in a[4].iter().zip(&b[1]) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn positivity_threshold_cases() {
        let m = square(4);
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        assert_eq!(positivity_dt_threshold(&form.stiffness, &form.mass.lumped()), Some(f64::INFINITY));
        let neg = CoefficientField::laplacian(2).with_beta(constant_scalar(-0.5), 0.5);
        let form = assemble_robin_form(&m, &neg);
        let t = positivity_dt_threshold(&form.stiffness, &form.mass.lumped()).unwrap();
        assert!(t.is_finite() && t > 0.0);
        let cfg = EvolutionConfig::new(0.5 * t, 50.0 * t).with_lumped(true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let init = random_initial_states(m.num_vertices(), 5, true, &mut rng);
        assert!(check_positivity(&form, &cfg, &init).unwrap().holds);
    }

    #[test]
    fn neumann_heat_is_linfty_contractive() {
        let m = square(8);
        let field = CoefficientField::laplacian(2);
        let form = assemble_robin_form(&m, &field);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let init = random_initial_states(m.num_vertices(), 5, false, &mut rng);
        let cfg = EvolutionConfig::new(0.005, 0.05).with_lumped(true);
        let r = check_linfty_contraction(&form, &field, &cfg, Some(0.0), &init).unwrap();
        assert!(r.max_growth <= 1.0 + 1e-8, "{r:?}");
    }

    #[test]
    fn wentzell_without_lipschitz_needs_explicit_shift() {
        let m = Arc::new(build_interval_mesh(-1.0, 1.0, 8).unwrap());
        let field = CoefficientField::sgn_drift(0.0);
        let form = assemble_robin_form(&m, &field);
        let cfg = EvolutionConfig::new(0.01, 0.02).with_model(BoundaryModel::Wentzell);
        let init = vec![vec![1.0; m.num_vertices()]];
        assert!(matches!(
            check_linfty_contraction(&form, &field, &cfg, None, &init),
            Err(Error::MissingLipschitz)
        ));
    }

    #[test]
    fn shifted_l2_norm_is_monotone() {
        let m = square(6);
        let neg = CoefficientField::laplacian(2).with_beta(constant_scalar(-1.0), 1.0);
        let form = assemble_robin_form(&m, &neg);
        let omega = find_coercivity_shift(&form, 0.1).unwrap();
        let cfg = EvolutionConfig::new(0.01, 0.2).with_omega(omega);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let init = random_initial_states(m.num_vertices(), 4, false, &mut rng);
        assert!(check_l2_dissipativity(&form, &cfg, &init).unwrap().monotone);
    }

    #[test]
    fn symmetric_submarkovian_lp() {
        let m = square(6);
        let form = assemble_robin_form(&m, &CoefficientField::laplacian(2).with_d(constant_scalar(0.5), 0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let init = random_initial_states(m.num_vertices(), 4, false, &mut rng);
        let cfg = EvolutionConfig::new(0.01, 0.1).with_lumped(true);
        let rows = check_lp_contraction(&form, &cfg, &[1.5, 2.0, 3.0, 4.0], &init, 1e-9, 1.5).unwrap();
        assert!(rows.iter().all(|r| r.omega_p <= 1e-9), "{rows:?}");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(EvolutionConfig::new(0.0, 1.0).validate().is_err());
        assert!(EvolutionConfig::new(0.1, 0.05).validate().is_err());
    }

    #[test]
    fn truncation_pair_splits_nodally() {
        let (v, w) = truncation_pair(&[-3.0, -0.5, 0.0, 1.0, 2.5]);
        assert_eq!(v, [-1.0, -0.5, 0.0, 1.0, 1.0]);
        assert_eq!(w, [-2.0, 0.0, 0.0, 0.0, 1.5]);
    }

    #[test]
    fn invariance_value_signs() {
        // −2 + ∫(u₃ − 1) over {u₃ ≥ 1}, evaluated by adaptive quadrature
        let expected = -1.4222878716102923;
        let mesh = Arc::new(build_interval_mesh(-1.0, 1.0, 4000).unwrap());
        let field = CoefficientField::sgn_drift(0.0);
        let form = assemble_robin_form(&mesh, &field);
        let u: Vec<f64> = mesh.vertices().iter().map(|p| u_n(3, p[0])).collect();
        let value = linfty_invariance_value(&form, BoundaryModel::Wentzell, 1.0, &u).unwrap();
        assert!((value - expected).abs() < 1e-2, "{value}");

        let m = square(8);
        let lap = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for u in random_initial_states(m.num_vertices(), 20, false, &mut rng) {
            let u: Vec<f64> = u.iter().map(|x| 3.0 * x).collect();
            assert!(linfty_invariance_value(&lap, BoundaryModel::Robin, 0.0, &u).unwrap() >= -1e-12);
        }
    }
}
