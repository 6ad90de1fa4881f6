//! P1 assembly of the Robin form, mass matrices, load functionals, the
//! Wentzell product-space mass, and coercivity shifts.
//!
//! Entry `(i, j)` of every bilinear-form matrix is `a(φ_j, φ_i)`: column is
//! trial, row is test. The form is
//!
//! ```text
//! a(u, v) = ∫ ∇uᵀ a ∇v + ∫ u b·∇v + ∫ (c·∇u) v + ∫ d u v + ∫_∂Ω β u v dσ
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};

use crate::coeff::{constant_scalar, constant_vector, CoefficientField, ScalarFn, VectorFn};
use crate::error::{Error, Result};
use crate::linalg::{is_positive_definite, CsrMatrix};
use crate::mesh::{format_f64, Mesh, Point};

/// Cell quadrature used for coefficient and load sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellQuadrature {
    /// One point per cell; reaction terms use the exact P1 mass scaled by the
    /// barycentric coefficient value.
    #[default]
    Barycenter,
    /// Exact for quadratics: the 3-point rule in 2D, 2-point Gauss in 1D.
    Degree2,
}

impl CellQuadrature {
    /// Barycentric coordinates and weights (summing to 1).
    pub fn points(self, dim: usize) -> Vec<(Vec<f64>, f64)> {
        match (self, dim) {
            (CellQuadrature::Barycenter, 1) => vec![(vec![0.5, 0.5], 1.0)],
            (CellQuadrature::Barycenter, _) => vec![(vec![1.0 / 3.0; 3], 1.0)],
            (CellQuadrature::Degree2, 1) => {
                let g = 0.5 / 3f64.sqrt();
                vec![(vec![0.5 + g, 0.5 - g], 0.5), (vec![0.5 - g, 0.5 + g], 0.5)]
            }
            (CellQuadrature::Degree2, _) => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                vec![
                    (vec![a, b, b], 1.0 / 3.0),
                    (vec![b, a, b], 1.0 / 3.0),
                    (vec![b, b, a], 1.0 / 3.0),
                ]
            }
        }
    }
}

pub(crate) fn map_point(mesh: &Mesh, cell: &[usize], lambda: &[f64]) -> Point {
    let mut x = [0.0; 2];
    for (&v, &l) in cell.iter().zip(lambda) {
        x[0] += l * mesh.vertices()[v][0];
        x[1] += l * mesh.vertices()[v][1];
    }
    x
}

fn dot2(p: Point, q: Point) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

/// Exact P1 mass matrix entry on a cell of measure `m`.
fn local_mass(dim: usize, m: f64, i: usize, j: usize) -> f64 {
    match (dim, i == j) {
        (1, true) => m / 3.0,
        (1, false) => m / 6.0,
        (_, true) => m / 6.0,
        (_, false) => m / 12.0,
    }
}

/// The separately assembled terms of `a_{L,β}`.
#[derive(Debug, Clone)]
pub struct FormParts {
    pub diffusion: CsrMatrix,
    pub drift_b: CsrMatrix,
    pub drift_c: CsrMatrix,
    pub reaction: CsrMatrix,
    pub boundary: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct AssembledForm {
    mesh: Arc<Mesh>,
    /// `A`, the sum of all parts.
    pub stiffness: CsrMatrix,
    pub parts: FormParts,
    /// `M_Ω`
    pub mass: CsrMatrix,
    /// `M_∂`, boundary surface mass on vertex dofs.
    pub boundary_mass: CsrMatrix,
    /// Discrete H¹ inner product `K + M_Ω` with `K` the Laplacian stiffness.
    pub h1: CsrMatrix,
    pub omega: f64,
    /// `dof_map[vertex] = dof`; P1 uses the identity.
    pub dof_map: Vec<usize>,
}

impl AssembledForm {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_map.len()
    }

    /// `A + ω·M_Ω`
    pub fn shifted(&self, omega: f64) -> CsrMatrix {
        self.stiffness.add_scaled(&self.mass, omega)
    }

    /// `a^ω(u, v) = vᵀ(A + ωM_Ω)u`
    pub fn eval(&self, omega: f64, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.bilinear(v, u) + omega * self.mass.bilinear(v, u)
    }
}

/// Assembles `a_{L,β}` with the default one-point quadrature.
pub fn assemble_robin_form(mesh: &Arc<Mesh>, field: &CoefficientField) -> AssembledForm {
    assemble_robin_form_with(mesh, field, CellQuadrature::Barycenter)
}

pub fn assemble_robin_form_with(
    mesh: &Arc<Mesh>,
    field: &CoefficientField,
    quadrature: CellQuadrature,
) -> AssembledForm {
    let dim = mesh.dim();
    let n = mesh.num_vertices();
    let rule = quadrature.points(dim);
    let mut diffusion = Vec::new();
    let mut drift_b = Vec::new();
    let mut drift_c = Vec::new();
    let mut reaction = Vec::new();
    let mut mass = Vec::new();
    let mut laplace = Vec::new();

    for (k, cell) in mesh.cells().iter().enumerate() {
        let geo = mesh.geometry(k);
        let grads = &geo.gradients;
        let nloc = cell.len();
        for (lambda, weight) in &rule {
            let x = map_point(mesh, cell, lambda);
            let w = weight * geo.measure;
            let a = (field.a)(x);
            let b = (field.b)(x);
            let c = (field.c)(x);
            let d = (field.d)(x);
            for i in 0..nloc {
                let gi = Vector2::new(grads[i][0], grads[i][1]);
                for j in 0..nloc {
                    let gj = Vector2::new(grads[j][0], grads[j][1]);
                    let (vi, vj) = (cell[i], cell[j]);
                    diffusion.push((vi, vj, w * gj.dot(&(a * gi))));
                    drift_b.push((vi, vj, w * lambda[j] * b.dot(&gi)));
                    drift_c.push((vi, vj, w * c.dot(&gj) * lambda[i]));
                    let r = match quadrature {
                        CellQuadrature::Barycenter => d * local_mass(dim, geo.measure, i, j),
                        CellQuadrature::Degree2 => w * d * lambda[i] * lambda[j],
                    };
                    reaction.push((vi, vj, r));
                }
            }
        }
        for i in 0..nloc {
            for j in 0..nloc {
                let (vi, vj) = (cell[i], cell[j]);
                mass.push((vi, vj, local_mass(dim, geo.measure, i, j)));
                laplace.push((vi, vj, geo.measure * dot2(grads[i], grads[j])));
            }
        }
    }

    let mut boundary = Vec::new();
    let mut boundary_mass = Vec::new();
    for f in mesh.boundary_facets() {
        let beta = (field.beta)(f.midpoint(mesh));
        if dim == 1 {
            let v = f.vertices[0];
            boundary.push((v, v, beta * f.measure));
            boundary_mass.push((v, v, f.measure));
        } else {
            for (i, &vi) in f.vertices.iter().enumerate() {
                for (j, &vj) in f.vertices.iter().enumerate() {
                    let m = f.measure * if i == j { 1.0 / 3.0 } else { 1.0 / 6.0 };
                    boundary.push((vi, vj, beta * m));
                    boundary_mass.push((vi, vj, m));
                }
            }
        }
    }

    let csr = |t: &[(usize, usize, f64)]| CsrMatrix::from_triplets(n, n, t);
    let parts = FormParts {
        diffusion: csr(&diffusion),
        drift_b: csr(&drift_b),
        drift_c: csr(&drift_c),
        reaction: csr(&reaction),
        boundary: csr(&boundary),
    };
    let stiffness = parts
        .diffusion
        .add_scaled(&parts.drift_b, 1.0)
        .add_scaled(&parts.drift_c, 1.0)
        .add_scaled(&parts.reaction, 1.0)
        .add_scaled(&parts.boundary, 1.0);
    let mass = csr(&mass);
    let h1 = csr(&laplace).add_scaled(&mass, 1.0);
    AssembledForm {
        mesh: mesh.clone(),
        stiffness,
        parts,
        mass,
        boundary_mass: csr(&boundary_mass),
        h1,
        omega: 0.0,
        dof_map: (0..n).collect(),
    }
}

/// Robin stiffness together with the product-space mass `M_Ω + M_∂`, which
/// realizes `L²(Ω) ⊕ L²(∂Ω)` on states whose boundary part is the trace.
pub fn assemble_wentzell_system(mesh: &Arc<Mesh>, field: &CoefficientField) -> (AssembledForm, CsrMatrix) {
    let form = assemble_robin_form(mesh, field);
    let combined = form.mass.add_scaled(&form.boundary_mass, 1.0);
    (form, combined)
}

/// Load data `(f₀, f₁..f_N, g)`.
#[derive(Clone)]
pub struct RhsData {
    pub f0: ScalarFn,
    pub f: VectorFn,
    pub g: ScalarFn,
}

impl Default for RhsData {
    fn default() -> Self {
        Self {
            f0: constant_scalar(0.0),
            f: constant_vector(Vector2::zeros()),
            g: constant_scalar(0.0),
        }
    }
}

impl std::fmt::Debug for RhsData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RhsData { .. }")
    }
}

impl RhsData {
    pub fn with_f0(mut self, f0: ScalarFn) -> Self {
        self.f0 = f0;
        self
    }

    pub fn with_f(mut self, f: VectorFn) -> Self {
        self.f = f;
        self
    }

    pub fn with_g(mut self, g: ScalarFn) -> Self {
        self.g = g;
        self
    }
}

/// Sampled load data and the dof vector of
/// `v ↦ ∫f₀v + Σ∫fⱼDⱼv + ∫_∂Ω gv`.
#[derive(Debug, Clone)]
pub struct RhsFunctional {
    /// One sample per cell quadrature point.
    pub f0_vec: Vec<f64>,
    pub fj_vecs: Vec<Vector2<f64>>,
    /// One sample per boundary facet (midpoint).
    pub g_vec: Vec<f64>,
    pub assembled_vector: Vec<f64>,
}

impl RhsFunctional {
    pub fn pair(&self, v: &[f64]) -> f64 {
        crate::linalg::dot(&self.assembled_vector, v)
    }
}

pub fn assemble_rhs(mesh: &Mesh, data: &RhsData) -> RhsFunctional {
    assemble_rhs_with(mesh, data, CellQuadrature::Barycenter)
}

pub fn assemble_rhs_with(mesh: &Mesh, data: &RhsData, quadrature: CellQuadrature) -> RhsFunctional {
    let dim = mesh.dim();
    let rule = quadrature.points(dim);
    let mut out = vec![0.0; mesh.num_vertices()];
    let mut f0_vec = Vec::with_capacity(mesh.num_cells() * rule.len());
    let mut fj_vecs = Vec::with_capacity(mesh.num_cells() * rule.len());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let geo = mesh.geometry(k);
        for (lambda, weight) in &rule {
            let x = map_point(mesh, cell, lambda);
            let w = weight * geo.measure;
            let f0 = (data.f0)(x);
            let f = (data.f)(x);
            f0_vec.push(f0);
            fj_vecs.push(f);
            for (i, &v) in cell.iter().enumerate() {
                let g = geo.gradients[i];
                out[v] += w * (f0 * lambda[i] + f[0] * g[0] + f[1] * g[1]);
            }
        }
    }
    let mut g_vec = Vec::with_capacity(mesh.boundary_facets().len());
    for facet in mesh.boundary_facets() {
        let g = (data.g)(facet.midpoint(mesh));
        g_vec.push(g);
        let share = facet.measure / facet.vertices.len() as f64;
        for &v in &facet.vertices {
            out[v] += g * share;
        }
    }
    RhsFunctional {
        f0_vec,
        fj_vecs,
        g_vec,
        assembled_vector: out,
    }
}

/// Relative bisection tolerance on ω.
pub const SHIFT_RTOL: f64 = 1e-6;
const SHIFT_CAP: f64 = 1e15;
const PD_RTOL: f64 = 1e-13;

/// Smallest ω (doubling from 0, then bisection) such that
/// `sym(A) + ω·M_Ω − η·H` is positive definite.
pub fn find_coercivity_shift(form: &AssembledForm, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let base = form.stiffness.symmetric_part().add_scaled(&form.h1, -eta);
    let coercive = |omega: f64| is_positive_definite(&base.add_scaled(&form.mass, omega), PD_RTOL);
    if coercive(0.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !coercive(hi) {
        hi *= 2.0;
        if hi > SHIFT_CAP {
            return Err(Error::ShiftSearchExhausted { cap: SHIFT_CAP });
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { 0.5 * hi };
    while hi - lo > SHIFT_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if coercive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Largest `C` with `‖u‖_{L²(∂Ω)} ≤ C‖u‖_{H¹}` over the P1 space, from the
/// generalized eigenproblem `M_∂ x = λ H x`. Dense; intended for small meshes.
pub fn discrete_trace_constant(form: &AssembledForm) -> f64 {
    let h = form.h1.to_dense();
    let mb = form.boundary_mass.to_dense();
    let chol = h.cholesky().expect("H1 matrix is positive definite");
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::identity(l.nrows(), l.ncols()));
    let sym = &linv * mb * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

/// Coordinate text dump, one `row col value` line per stored entry.
pub fn matrix_to_coordinate_text(m: &CsrMatrix) -> String {
    let mut s = String::new();
    for (i, j, v) in m.triplets() {
        writeln!(s, "{i} {j} {}", format_f64(v)).unwrap();
    }
    s
}

pub fn dump_matrix(m: &CsrMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, matrix_to_coordinate_text(m))?;
    Ok(())
}

/// An element of `L²(Ω) ⊕ L²(∂Ω)` on the P1 space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub interior: Vec<f64>,
    /// Values at [`Mesh::boundary_vertices`].
    pub boundary: Vec<f64>,
    pub consistent: bool,
}

impl ProductState {
    /// The state `(u, u|∂Ω)`.
    pub fn from_interior(mesh: &Mesh, u: Vec<f64>) -> Result<Self> {
        let boundary = crate::mesh::trace(mesh, &u)?;
        Ok(Self {
            interior: u,
            boundary,
            consistent: true,
        })
    }

    /// Re-evaluates whether the boundary part equals the trace.
    pub fn check_consistent(&mut self, mesh: &Mesh) -> bool {
        self.consistent = crate::mesh::trace(mesh, &self.interior)
            .map(|t| t == self.boundary)
            .unwrap_or(false);
        self.consistent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{scalar_fn, vector_fn};
    use crate::mesh::{build_interval_mesh, build_polygon_mesh};

    fn square(h: f64) -> Arc<Mesh> {
        Arc::new(build_polygon_mesh(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], h).unwrap())
    }

    #[test]
    fn neumann_laplacian_kills_constants() {
        let m = square(0.25);
        let f = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let ones = vec![1.0; m.num_vertices()];
        assert!(crate::linalg::norm_inf(&f.stiffness.matvec(&ones)) < 1e-12);
    }

    #[test]
    fn reaction_and_boundary_totals() {
        let m = square(0.25);
        let ones = vec![1.0; m.num_vertices()];
        let react = CoefficientField::laplacian(2).scale_a(0.0).with_d(constant_scalar(1.0), 1.0);
        let f = assemble_robin_form(&m, &react);
        assert!((f.stiffness.bilinear(&ones, &ones) - 1.0).abs() < 1e-12);
        let robin = CoefficientField::laplacian(2).scale_a(0.0).with_beta(constant_scalar(1.0), 1.0);
        let f = assemble_robin_form(&m, &robin);
        assert!((f.stiffness.bilinear(&ones, &ones) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rhs_pairings() {
        let m = square(0.25);
        let ones = vec![1.0; m.num_vertices()];
        let r = assemble_rhs(&m, &RhsData::default().with_f0(constant_scalar(1.0)));
        assert!((r.pair(&ones) - 1.0).abs() < 1e-12);
        let r = assemble_rhs(&m, &RhsData::default().with_g(constant_scalar(1.0)));
        assert!((r.pair(&ones) - 4.0).abs() < 1e-12);
        let x1: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let r = assemble_rhs(&m, &RhsData::default().with_f(constant_vector(Vector2::new(1.0, 0.0))));
        assert!((r.pair(&x1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wentzell_boundary_mass() {
        let m = Arc::new(build_interval_mesh(0.0, 1.0, 2).unwrap());
        let (f, combined) = assemble_wentzell_system(&m, &CoefficientField::laplacian(1));
        let d = f.boundary_mass.to_dense();
        assert_eq!(d[(0, 0)], 1.0);
        assert_eq!(d[(2, 2)], 1.0);
        assert_eq!(d.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(combined.get(0, 0), f.mass.get(0, 0) + 1.0);

        let sq = square(0.25);
        let (f, _) = assemble_wentzell_system(&sq, &CoefficientField::laplacian(2));
        let ones = vec![1.0; sq.num_vertices()];
        assert!((f.boundary_mass.bilinear(&ones, &ones) - 4.0).abs() < 1e-10);
        assert!(crate::linalg::norm_inf(&f.stiffness.matvec(&ones)) < 1e-12);
    }

    #[test]
    fn coercivity_shift_examples() {
        let m = square(0.25);
        let f = assemble_robin_form(&m, &CoefficientField::laplacian(2));
        let w = find_coercivity_shift(&f, 0.5).unwrap();
        assert!(w <= 1.0 && w >= 0.5, "omega = {w}");

        let line = Arc::new(build_interval_mesh(0.0, 1.0, 16).unwrap());
        let field = CoefficientField::laplacian(1).with_beta(constant_scalar(-1.0), 1.0);
        let f = assemble_robin_form(&line, &field);
        let w = find_coercivity_shift(&f, 0.1).unwrap();
        assert!(w > 0.0 && w.is_finite());

        let coercive = CoefficientField::laplacian(2).with_d(constant_scalar(1.0), 1.0);
        let f = assemble_robin_form(&m, &coercive);
        assert_eq!(find_coercivity_shift(&f, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_fields_assemble_symmetric() {
        let m = square(0.2);
        let bc = vector_fn(|x| Vector2::new(x[1], -x[0] * x[0]));
        let field = CoefficientField::laplacian(2)
            .with_a(crate::coeff::matrix_fn(|x| nalgebra::Matrix2::new(2.0, x[0], x[0], 3.0)), 4.0)
            .with_b(bc.clone(), 1.5, None)
            .with_c(bc, 1.5)
            .with_d(scalar_fn(|x| x[0] + 1.0), 2.0);
        let f = assemble_robin_form(&m, &field);
        let asym = f.stiffness.add_scaled(&f.stiffness.transpose(), -1.0);
        assert!(asym.max_abs() <= 1e-12);
    }
}
