//! Robin problem solves, manufactured-solution convergence studies, discrete
//! norms and Hölder estimates, and the regularity exponent calculus.

mod exponents;
mod holder;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::Vector2;

pub use exponents::{
    exponent_bootstrap, interpolation_exponents, parse_rational, rational_to_f64, ExponentChain, InterpolatedExponents,
};
pub use holder::{
    estimate_holder_exponent, estimate_holder_exponent_seeded, holder_seminorm, holder_seminorm_seeded, holder_seminorms, HolderExponentEstimate,
    HolderSeminorm, GAMMA_GRID, HOLDER_EXHAUSTIVE_LIMIT, HOLDER_RATIO_LIMIT, HOLDER_SAMPLED_PAIRS,
};

use crate::assembly::{assemble_rhs, assemble_robin_form, map_point, AssembledForm, RhsData, RhsFunctional};
use crate::coeff::{scalar_fn, vector_fn, CoefficientField, ScalarFn, VectorFn};
use crate::error::{Error, Result};
use crate::linalg::{BandLu, CsrMatrix};
use crate::mesh::{build_interval_mesh, build_rectangle_mesh, Mesh, Point};
use crate::quadrature::gauss_legendre;

/// Relative residual accepted by [`solve_robin`].
pub const SOLVE_RESIDUAL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
struct NormCache {
    l2: OnceLock<f64>,
    h1_seminorm: OnceLock<f64>,
}

/// A P1 function given by its nodal values.
#[derive(Debug, Clone)]
pub struct FemFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    cache: NormCache,
}

impl FemFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        Ok(Self {
            mesh,
            values,
            cache: NormCache::default(),
        })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&p| f(p)).collect();
        Self {
            mesh,
            values,
            cache: NormCache::default(),
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value inside cell `k` at barycentric coordinates `lambda`.
    pub fn eval_in_cell(&self, k: usize, lambda: &[f64]) -> f64 {
        self.mesh.cells()[k].iter().zip(lambda).map(|(&v, l)| l * self.values[v]).sum()
    }

    /// Constant gradient on cell `k`.
    pub fn cell_gradient(&self, k: usize) -> Point {
        let g = self.mesh.geometry(k);
        let mut out = [0.0; 2];
        for (&v, grad) in self.mesh.cells()[k].iter().zip(&g.gradients) {
            out[0] += self.values[v] * grad[0];
            out[1] += self.values[v] * grad[1];
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        *self.cache.l2.get_or_init(|| {
            let dim = self.mesh.dim();
            let mut s = 0.0;
            for (k, cell) in self.mesh.cells().iter().enumerate() {
                let m = self.mesh.geometry(k).measure;
                let u: Vec<f64> = cell.iter().map(|&v| self.values[v]).collect();
                let sum: f64 = u.iter().sum();
                let sq: f64 = u.iter().map(|x| x * x).sum();
                // exact ∫u² for P1: m/((d+1)(d+2))·(Σu² + (Σu)²)
                s += m * (sq + sum * sum) / ((dim + 1) * (dim + 2)) as f64;
            }
            s.max(0.0).sqrt()
        })
    }

    pub fn h1_seminorm(&self) -> f64 {
        *self.cache.h1_seminorm.get_or_init(|| {
            (0..self.mesh.num_cells())
                .map(|k| {
                    let g = self.cell_gradient(k);
                    self.mesh.geometry(k).measure * (g[0] * g[0] + g[1] * g[1])
                })
                .sum::<f64>()
                .sqrt()
        })
    }

    pub fn h1_norm(&self) -> f64 {
        self.l2_norm().hypot(self.h1_seminorm())
    }

    /// Lumped-mass `Lᵖ(Ω)` norm; `p = ∞` gives the nodal maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_weighted(&self.values, &lumped_cell_weights(&self.mesh), p)
    }

    /// Lumped `Lᵖ(Ω) ⊕ Lᵖ(∂Ω)` norm of the state `(u, u|∂Ω)`.
    pub fn lp_norm_with_boundary(&self, p: f64) -> f64 {
        lp_norm_weighted(&self.values, &lumped_product_weights(&self.mesh), p)
    }

    /// `‖u_h − u‖_{L²}` by a high-order cell rule.
    pub fn l2_error(&self, exact: impl Fn(Point) -> f64) -> f64 {
        let rule = error_rule(self.mesh.dim());
        let mut s = 0.0;
        for (k, cell) in self.mesh.cells().iter().enumerate() {
            let m = self.mesh.geometry(k).measure;
            for (lambda, w) in &rule {
                let x = map_point(&self.mesh, cell, lambda);
                let e = self.eval_in_cell(k, lambda) - exact(x);
                s += w * m * e * e;
            }
        }
        s.sqrt()
    }

    /// `‖∇(u_h − u)‖_{L²}`
    pub fn h1_seminorm_error(&self, gradient: impl Fn(Point) -> Vector2<f64>) -> f64 {
        let rule = error_rule(self.mesh.dim());
        let mut s = 0.0;
        for (k, cell) in self.mesh.cells().iter().enumerate() {
            let m = self.mesh.geometry(k).measure;
            let gh = self.cell_gradient(k);
            for (lambda, w) in &rule {
                let g = gradient(map_point(&self.mesh, cell, lambda));
                let (ex, ey) = (gh[0] - g[0], if self.mesh.dim() == 2 { gh[1] - g[1] } else { 0.0 });
                s += w * m * (ex * ex + ey * ey);
            }
        }
        s.sqrt()
    }

    /// Full `H¹` error.
    pub fn h1_error(&self, exact: impl Fn(Point) -> f64, gradient: impl Fn(Point) -> Vector2<f64>) -> f64 {
        self.l2_error(exact).hypot(self.h1_seminorm_error(gradient))
    }
}

/// Barycentric rule exact for degree 4 in 2D (6 points) and degree 9 in 1D.
fn error_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 1 {
        let (x, w) = gauss_legendre(5);
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let t = 0.5 * (xi + 1.0);
                (vec![1.0 - t, t], 0.5 * wi)
            })
            .collect()
    } else {
        let groups = [
            (0.445_948_490_915_965, 0.223_381_589_678_011),
            (0.091_576_213_509_771, 0.109_951_743_655_322),
        ];
        let mut out = Vec::with_capacity(6);
        for (a, w) in groups {
            let b = 1.0 - 2.0 * a;
            out.push((vec![b, a, a], w));
            out.push((vec![a, b, a], w));
            out.push((vec![a, a, b], w));
        }
        out
    }
}

/// Lumped interior mass per vertex.
pub fn lumped_cell_weights(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (k, cell) in mesh.cells().iter().enumerate() {
        let share = mesh.geometry(k).measure / cell.len() as f64;
        for &v in cell {
            w[v] += share;
        }
    }
    w
}

/// Lumped boundary surface mass per vertex (zero at interior vertices).
pub fn lumped_boundary_weights(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for f in mesh.boundary_facets() {
        let share = f.measure / f.vertices.len() as f64;
        for &v in &f.vertices {
            w[v] += share;
        }
    }
    w
}

/// Interior plus boundary lumped mass.
pub fn lumped_product_weights(mesh: &Mesh) -> Vec<f64> {
    lumped_cell_weights(mesh)
        .into_iter()
        .zip(lumped_boundary_weights(mesh))
        .map(|(a, b)| a + b)
        .collect()
}

/// `(Σ wᵢ|uᵢ|ᵖ)^{1/p}`, or `max |uᵢ|` for infinite `p`.
pub fn lp_norm_weighted(u: &[f64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return crate::linalg::norm_inf(u);
    }
    let s: f64 = u.iter().zip(weights).map(|(x, w)| w * x.abs().powf(p)).sum();
    s.powf(1.0 / p)
}

/// Solves `(A + ωM_Ω)u = F`.
pub fn solve_robin(form: &AssembledForm, rhs: &RhsFunctional, omega: f64) -> Result<FemFunction> {
    let k = form.shifted(omega);
    let f = &rhs.assembled_vector;
    if f.len() != k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: f.len(),
        });
    }
    let lu = BandLu::factor(&k)?;
    let u = lu.solve(f);
    let rel = relative_residual(&k, &u, f);
    if !(rel <= SOLVE_RESIDUAL_RTOL) {
        return Err(Error::ResidualTooLarge(rel));
    }
    FemFunction::new(form.mesh().clone(), u)
}

/// `max|Ku − f| / max(Σⱼ|Kᵢⱼuⱼ| + |fᵢ|)`
pub fn relative_residual(k: &CsrMatrix, u: &[f64], f: &[f64]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..k.nrows() {
        let (mut r, mut s) = (-f[i], f[i].abs());
        for (j, v) in k.row(i) {
            r += v * u[j];
            s += (v * u[j]).abs();
        }
        num = num.max(r.abs());
        den = den.max(s);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// A problem with known exact solution, on the unit interval or square.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub dim: usize,
    pub exact: ScalarFn,
    pub gradient: VectorFn,
    pub field: CoefficientField,
    pub rhs: RhsData,
    pub omega: f64,
    /// Cells per direction at level 0.
    pub base_cells: usize,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("dim", &self.dim)
            .field("omega", &self.omega)
            .field("base_cells", &self.base_cells)
            .finish()
    }
}

impl ManufacturedProblem {
    /// `u = Π cos(πxᵢ)` for `−Δu + u = f₀` with homogeneous Neumann data.
    pub fn cos_neumann(dim: usize, base_cells: usize) -> Self {
        let d = dim as f64;
        let exact = move |x: Point| {
            if dim == 1 {
                (PI * x[0]).cos()
            } else {
                (PI * x[0]).cos() * (PI * x[1]).cos()
            }
        };
        let gradient = move |x: Point| {
            if dim == 1 {
                Vector2::new(-PI * (PI * x[0]).sin(), 0.0)
            } else {
                Vector2::new(
                    -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                    -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                )
            }
        };
        Self {
            dim,
            exact: scalar_fn(exact),
            gradient: vector_fn(gradient),
            field: CoefficientField::laplacian(dim),
            rhs: RhsData::default().with_f0(scalar_fn(move |x| (1.0 + d * PI * PI) * exact(x))),
            omega: 1.0,
            base_cells,
        }
    }

    /// `u ≡ value` for `−Δu + u = value`.
    pub fn constant(dim: usize, value: f64, base_cells: usize) -> Self {
        Self {
            dim,
            exact: scalar_fn(move |_| value),
            gradient: vector_fn(|_| Vector2::zeros()),
            field: CoefficientField::laplacian(dim),
            rhs: RhsData::default().with_f0(scalar_fn(move |_| value)),
            omega: 1.0,
            base_cells,
        }
    }

    pub fn cells_at(&self, level: usize) -> usize {
        self.base_cells << level
    }

    pub fn mesh_at(&self, level: usize) -> Result<Mesh> {
        let n = self.cells_at(level);
        if self.dim == 1 {
            build_interval_mesh(0.0, 1.0, n)
        } else {
            build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, n, n)
        }
    }

    pub fn solve_at(&self, level: usize) -> Result<FemFunction> {
        let mesh = Arc::new(self.mesh_at(level)?);
        let form = assemble_robin_form(&mesh, &self.field);
        let rhs = assemble_rhs(&mesh, &self.rhs);
        solve_robin(&form, &rhs, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub rate_l2: Option<f64>,
    pub rate_h1: Option<f64>,
}

/// Solves on `levels` dyadic refinements and reports errors and observed
/// rates `log₂(e_{k−1}/e_k)`.
pub fn manufactured_convergence(problem: &ManufacturedProblem, levels: usize) -> Result<Vec<ConvergenceRow>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("need at least one refinement level".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let u = problem.solve_at(level)?;
        let l2 = u.l2_error(|x| (problem.exact)(x));
        let h1 = u.h1_error(|x| (problem.exact)(x), |x| (problem.gradient)(x));
        let rate = |prev: f64, cur: f64| (prev > 0.0 && cur > 0.0).then(|| (prev / cur).log2());
        let (rate_l2, rate_h1) = match rows.last() {
            Some(p) => (rate(p.l2_error, l2), rate(p.h1_error, h1)),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            h: 1.0 / problem.cells_at(level) as f64,
            l2_error: l2,
            h1_error: h1,
            rate_l2,
            rate_h1,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::constant_scalar;

    #[test]
    fn one_dimensional_neumann_constant() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 8).unwrap());
        let form = assemble_robin_form(&mesh, &CoefficientField::laplacian(1));
        let rhs = assemble_rhs(&mesh, &RhsData::default().with_f0(constant_scalar(1.0)));
        let u = solve_robin(&form, &rhs, 1.0).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn robin_unit_data_gives_one() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 8).unwrap());
        let field = CoefficientField::laplacian(1).with_beta(constant_scalar(1.0), 1.0);
        let form = assemble_robin_form(&mesh, &field);
        let rhs = assemble_rhs(&mesh, &RhsData::default().with_g(constant_scalar(1.0)));
        let u = solve_robin(&form, &rhs, 0.0).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pure_neumann_at_zero_shift_is_singular() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 8).unwrap());
        let form = assemble_robin_form(&mesh, &CoefficientField::laplacian(1));
        let rhs = assemble_rhs(&mesh, &RhsData::default().with_f0(constant_scalar(1.0)));
        assert!(matches!(solve_robin(&form, &rhs, 0.0), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn norms_of_simple_functions() {
        let mesh = Arc::new(build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap());
        let one = FemFunction::interpolate(mesh.clone(), |_| 1.0);
        assert!((one.l2_norm() - 1.0).abs() < 1e-14);
        assert_eq!(one.h1_seminorm(), 0.0);
        assert!((one.lp_norm(3.0) - 1.0).abs() < 1e-14);
        assert!((one.lp_norm_with_boundary(2.0) - 5f64.sqrt()).abs() < 1e-13);
        let x = FemFunction::interpolate(mesh, |p| p[0]);
        assert!((x.l2_norm() - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((x.h1_seminorm() - 1.0).abs() < 1e-14);
        assert!(x.l2_error(|p| p[0]) < 1e-15);
    }

    #[test]
    fn constant_solution_is_reproduced() {
        for dim in [1, 2] {
            let rows = manufactured_convergence(&ManufacturedProblem::constant(dim, 2.5, 4), 3).unwrap();
            assert!(rows.iter().all(|r| r.l2_error <= 1e-10 && r.h1_error <= 1e-10));
        }
    }

    #[test]
    fn cosine_rates_in_one_dimension() {
        let rows = manufactured_convergence(&ManufacturedProblem::cos_neumann(1, 16), 4).unwrap();
        let last = rows.last().unwrap();
        assert!((last.rate_l2.unwrap() - 2.0).abs() < 0.2, "{rows:?}");
        assert!((last.rate_h1.unwrap() - 1.0).abs() < 0.2, "{rows:?}");
    }
}
