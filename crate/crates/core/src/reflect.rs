//! Reflection across the boundary inside a chart, pushforward coefficients,
//! even extension of functions and the transformed load.
//!
//! With `T(y, s) = z + Oᵀ(y, ψ(y) + s)` the domain side is `U = {s > 0}`, its
//! mirror is `V = {s < 0}` and `S(T(y, s)) = T(y, −s)`. In chart coordinates
//! `S′ = [[1, 0], [2ψ′(y), −1]]`, which satisfies `S′S′ = I` and `det S′ = −1`.

use std::sync::Arc;

use nalgebra::Matrix2;
use rand::Rng;

use crate::assembly::{assemble_rhs, RhsData};
use crate::coeff::{certify_ellipticity, CoefficientField, EllipticityCertificate, SupBounds};
use crate::elliptic::FemFunction;
use crate::error::{Error, Result};
use crate::linalg::sym2_lambda_min;
use crate::mesh::{distance, BoundaryChart, JacobianEval, Mesh, Point};

/// Tolerance for matching a reflected vertex with its mirror partner.
pub const MIRROR_TOL: f64 = 1e-12;

/// `S′` in chart coordinates for boundary slope `m`.
pub fn chart_jacobian(m: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 2.0 * m, -1.0)
}

/// Largest singular value of `[[1, 0], [2m, −1]]`, namely `|m| + √(1 + m²)`.
pub fn jacobian_norm_bound(m: f64) -> f64 {
    m.abs() + m.hypot(1.0)
}

#[derive(Debug, Clone)]
pub struct ReflectionOperator {
    chart: Arc<BoundaryChart>,
}

impl ReflectionOperator {
    pub fn new(chart: BoundaryChart) -> Self {
        Self { chart: Arc::new(chart) }
    }

    pub fn chart(&self) -> &BoundaryChart {
        &self.chart
    }

    pub fn reflect_point(&self, x: Point) -> Result<Point> {
        let (y, s) = self.chart.inverse_t(x)?;
        self.chart.map_t(y, -s)
    }

    /// `Oᵀ S′_chart O`, the Jacobian of `S` in the domain frame.
    pub fn jacobian_s(&self, x: Point) -> Result<JacobianEval> {
        let (y, _) = self.chart.inverse_t(x)?;
        Ok(self.jacobian_at_abscissa(y))
    }

    fn jacobian_at_abscissa(&self, y: f64) -> JacobianEval {
        let (m, on_breakpoint) = self.chart.psi().slope(y);
        let o = self.chart.rotation();
        JacobianEval {
            matrix: o.transpose() * chart_jacobian(m) * o,
            on_breakpoint,
        }
    }

    /// For `x ∈ V` returns `(Sx, S′(x))`; `None` on the domain side or outside
    /// the chart.
    fn mirror_data(&self, x: Point) -> Option<(Point, Matrix2<f64>)> {
        match self.chart.inverse_t(x) {
            Ok((y, s)) if s < 0.0 => {
                let sx = self.chart.map_t_unchecked(y, -s);
                Some((sx, self.jacobian_at_abscissa(y).matrix))
            }
            _ => None,
        }
    }
}

/// `â = S′a*S′ᵀ`, `b̂ = S′b*`, `ĉ = S′c*`, `d̃ = d∘S` on `V`, unchanged elsewhere.
/// Here `g*` means `g∘S`.
pub fn pushforward_coefficients(op: &ReflectionOperator, field: &CoefficientField) -> Result<CoefficientField> {
    if field.dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: field.dim,
        });
    }
    let kappa = jacobian_norm_bound(op.chart().lipschitz_constant());
    let sup = field.sup_bounds;
    let (a, b, c, d) = (field.a.clone(), field.b.clone(), field.c.clone(), field.d.clone());
    let (o1, o2, o3, o4) = (op.clone(), op.clone(), op.clone(), op.clone());
    Ok(CoefficientField {
        dim: 2,
        a: Arc::new(move |x| match o1.mirror_data(x) {
            Some((sx, j)) => j * a(sx) * j.transpose(),
            None => a(x),
        }),
        b: Arc::new(move |x| match o2.mirror_data(x) {
            Some((sx, j)) => j * b(sx),
            None => b(x),
        }),
        c: Arc::new(move |x| match o3.mirror_data(x) {
            Some((sx, j)) => j * c(sx),
            None => c(x),
        }),
        d: Arc::new(move |x| match o4.mirror_data(x) {
            Some((sx, _)) => d(sx),
            None => d(x),
        }),
        beta: field.beta.clone(),
        sup_bounds: SupBounds {
            a: kappa * kappa * sup.a,
            b: kappa * sup.b,
            c: kappa * sup.c,
            d: sup.d,
            beta: sup.beta,
        },
        b_lipschitz: None,
        name: format!("{}-reflected", field.name),
    })
}

/// The transformed load on `G`: `(f̃₀, f̂)` as cell data and the interface
/// datum `g`, which enters with weight 2.
#[derive(Clone)]
pub struct RhsHat {
    pub data: RhsData,
    pub interface_g: crate::coeff::ScalarFn,
}

impl std::fmt::Debug for RhsHat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RhsHat { .. }")
    }
}

impl RhsHat {
    /// Dof vector of `v ↦ ∫_G f̃₀v + Σ∫_G f̂ⱼDⱼv + 2∫_Γ gv` on the mesh of `ext`.
    pub fn assemble(&self, ext: &ExtendedProblem) -> Vec<f64> {
        let mut out = assemble_rhs(&ext.mesh_g, &self.data).assembled_vector;
        let pts = ext.mesh_g.vertices();
        for &[p, q] in &ext.interface_edges {
            let mid = [0.5 * (pts[p][0] + pts[q][0]), 0.5 * (pts[p][1] + pts[q][1])];
            let share = (self.interface_g)(mid) * distance(pts[p], pts[q]);
            out[p] += share;
            out[q] += share;
        }
        out
    }
}

/// Doubled chart region `G = U ∪ V` with a mesh mirrored through `S`.
#[derive(Debug, Clone)]
pub struct ExtendedProblem {
    pub op: ReflectionOperator,
    /// Mesh of the domain side `U`.
    pub mesh_u: Arc<Mesh>,
    pub mesh_g: Arc<Mesh>,
    pub coeffs_hat: CoefficientField,
    /// `u_to_g[i]` is the `G` index of `U` vertex `i`.
    pub u_to_g: Vec<usize>,
    /// `g_to_u[g]` is the `U` index of `g` or of its mirror image.
    pub g_to_u: Vec<usize>,
    /// `mirror[g]` is the index of `S(x_g)`.
    pub mirror: Vec<usize>,
    /// Vertices on `∂Ω ∩ G`, sorted.
    pub interface_vertices: Vec<usize>,
    pub interface_edges: Vec<[usize; 2]>,
}

impl ExtendedProblem {
    /// Meshes `U` as a `ny × ns` grid in chart coordinates (with every
    /// breakpoint of `ψ` as a grid abscissa) and mirrors it onto `V`.
    pub fn new(op: ReflectionOperator, field: &CoefficientField, ny: usize, ns: usize) -> Result<Self> {
        if ny == 0 || ns == 0 {
            return Err(Error::InvalidArgument("chart grid needs at least one cell per direction".into()));
        }
        let chart = op.chart();
        let r = chart.radius();
        let mut ys: Vec<f64> = (0..=ny).map(|i| -r + 2.0 * r * i as f64 / ny as f64).collect();
        ys[ny] = r;
        ys.extend(chart.psi().breakpoints().iter().copied().filter(|&b| b.abs() < r));
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * r);
        let s_pos: Vec<f64> = (0..=ns).map(|k| if k == ns { r } else { r * k as f64 / ns as f64 }).collect();
        let ss: Vec<f64> = (0..=2 * ns)
            .map(|j| if j < ns { -s_pos[ns - j] } else { s_pos[j - ns] })
            .collect();
        let nyn = ys.len();
        let gid = |i: usize, j: usize| j * nyn + i;
        let mut g_vertices = Vec::with_capacity(nyn * ss.len());
        for &s in &ss {
            for &y in &ys {
                g_vertices.push(chart.map_t_unchecked(y, s));
            }
        }
        let mirror: Vec<usize> = (0..g_vertices.len())
            .map(|g| gid(g % nyn, 2 * ns - g / nyn))
            .collect();

        let mut u_cells_g = Vec::new();
        for j in ns..2 * ns {
            for i in 0..nyn - 1 {
                u_cells_g.push([gid(i, j), gid(i + 1, j), gid(i + 1, j + 1)]);
                u_cells_g.push([gid(i, j), gid(i + 1, j + 1), gid(i, j + 1)]);
            }
        }
        let mut g_cells = u_cells_g.clone();
        g_cells.extend(u_cells_g.iter().map(|c| c.map(|v| mirror[v])));

        let u_to_g: Vec<usize> = (ns * nyn..g_vertices.len()).collect();
        let g_to_u: Vec<usize> = (0..g_vertices.len())
            .map(|g| if g >= ns * nyn { g - ns * nyn } else { mirror[g] - ns * nyn })
            .collect();
        let u_vertices: Vec<Point> = u_to_g.iter().map(|&g| g_vertices[g]).collect();
        let u_cells: Vec<[usize; 3]> = u_cells_g.iter().map(|c| c.map(|g| g_to_u[g])).collect();

        let mesh_u = Arc::new(Mesh::from_triangles(u_vertices, u_cells)?);
        let mesh_g = Arc::new(Mesh::from_triangles(g_vertices, g_cells)?);
        let interface_vertices: Vec<usize> = (0..nyn).map(|i| gid(i, ns)).collect();
        let interface_edges = interface_vertices.windows(2).map(|w| [w[0], w[1]]).collect();
        let coeffs_hat = pushforward_coefficients(&op, field)?;
        let ext = Self {
            op,
            mesh_u,
            mesh_g,
            coeffs_hat,
            u_to_g,
            g_to_u,
            mirror,
            interface_vertices,
            interface_edges,
        };
        ext.verify_mirror()?;
        Ok(ext)
    }

    /// Checks that `S` maps every vertex of `G` onto its recorded partner.
    pub fn verify_mirror(&self) -> Result<()> {
        let pts = self.mesh_g.vertices();
        let tol = MIRROR_TOL * self.op.chart().radius().max(1.0);
        for (g, &m) in self.mirror.iter().enumerate() {
            let sx = self.op.reflect_point(pts[g])?;
            if distance(sx, pts[m]) > tol {
                return Err(Error::NonMirrorMesh(g));
            }
        }
        Ok(())
    }

    /// True when `g` lies on the mirror side `V`.
    pub fn is_mirror_vertex(&self, g: usize) -> bool {
        self.u_to_g[self.g_to_u[g]] != g
    }

    /// `w̃ = w` on `U`, `w̃ = w∘S` on `V`.
    pub fn extend_function(&self, u: &FemFunction) -> Result<FemFunction> {
        if u.values().len() != self.mesh_u.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: self.mesh_u.num_vertices(),
                got: u.values().len(),
            });
        }
        let vals = self.g_to_u.iter().map(|&i| u.values()[i]).collect();
        FemFunction::new(self.mesh_g.clone(), vals)
    }

    /// `f̃₀ = f₀∘S` and `f̂ = S′f*` on `V`; the boundary datum `g` is moved to
    /// the interface with weight 2.
    pub fn transform_rhs(&self, data: &RhsData) -> RhsHat {
        let (f0, f) = (data.f0.clone(), data.f.clone());
        let (o1, o2) = (self.op.clone(), self.op.clone());
        RhsHat {
            data: RhsData::default()
                .with_f0(Arc::new(move |x| match o1.mirror_data(x) {
                    Some((sx, _)) => f0(sx),
                    None => f0(x),
                }))
                .with_f(Arc::new(move |x| match o2.mirror_data(x) {
                    Some((sx, j)) => j * f(sx),
                    None => f(x),
                })),
            interface_g: data.g.clone(),
        }
    }

    /// Vertices of `G` not on `∂G`; test functions vanishing on `∂G` live here.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.mesh_g.num_vertices())
            .filter(|&v| !self.mesh_g.is_boundary_vertex(v))
            .collect()
    }
}

/// `α̂`: the sampled ellipticity constant of `â` over `G`.
pub fn certify_extended_ellipticity(ext: &ExtendedProblem, samples_per_cell: usize) -> Result<EllipticityCertificate> {
    certify_ellipticity(&ext.coeffs_hat, &ext.mesh_g, samples_per_cell)
}

/// `λ_min(sym(W a Wᵀ))` with `W = [[1, 0], [2m, −1]]`, the direct eigenvalue
/// oracle for pushforward ellipticity at one point.
pub fn pushforward_lambda_min(a: &Matrix2<f64>, slope: f64) -> f64 {
    let w = chart_jacobian(slope);
    sym2_lambda_min(&(w * a * w.transpose()))
}

/// One point of a before/after ellipticity comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSample {
    pub x: Point,
    pub reflected: Point,
    pub lambda_before: f64,
    pub lambda_after: f64,
}

/// Random points of `U` with `λ_min` of `a` at `x` and of `â` at `Sx`.
pub fn sample_reflection(ext: &ExtendedProblem, count: usize, rng: &mut impl Rng) -> Result<Vec<ReflectionSample>> {
    let chart = ext.op.chart();
    let r = chart.radius();
    (0..count)
        .map(|_| {
            let y = rng.gen_range(-r..r);
            let s = rng.gen_range(0.0..r);
            let x = chart.map_t(y, s)?;
            let reflected = chart.map_t(y, -s)?;
            Ok(ReflectionSample {
                x,
                reflected,
                lambda_before: ext.coeffs_hat.lambda_min_at(x),
                lambda_after: ext.coeffs_hat.lambda_min_at(reflected),
            })
        })
        .collect()
}
