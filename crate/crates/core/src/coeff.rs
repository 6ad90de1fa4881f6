//! Operator data `(a, b, c, d, β)` as point-evaluable fields.
//!
//! Fields are arbitrary closures and are only ever sampled at quadrature
//! points, so discontinuous ("measurable") coefficients need no special
//! treatment. In 1D only the `(0, 0)` entry of `a` and the first component of
//! `b` and `c` are used.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::linalg::sym2_lambda_min;
use crate::mesh::{Mesh, Point};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Vector2<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(Point) -> Matrix2<f64> + Send + Sync>;

pub fn scalar_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn vector_fn(f: impl Fn(Point) -> Vector2<f64> + Send + Sync + 'static) -> VectorFn {
    Arc::new(f)
}

pub fn matrix_fn(f: impl Fn(Point) -> Matrix2<f64> + Send + Sync + 'static) -> MatrixFn {
    Arc::new(f)
}

pub fn constant_scalar(v: f64) -> ScalarFn {
    Arc::new(move |_| v)
}

pub fn constant_vector(v: Vector2<f64>) -> VectorFn {
    Arc::new(move |_| v)
}

/// Recorded L∞ bounds of each coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBounds {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub beta: f64,
}

#[derive(Clone)]
pub struct CoefficientField {
    pub dim: usize,
    pub a: MatrixFn,
    pub b: VectorFn,
    pub c: VectorFn,
    pub d: ScalarFn,
    pub beta: ScalarFn,
    pub sup_bounds: SupBounds,
    /// Lipschitz constant of `b`, present only when `b ∈ W^{1,∞}` is claimed.
    pub b_lipschitz: Option<f64>,
    pub name: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("sup_bounds", &self.sup_bounds)
            .field("b_lipschitz", &self.b_lipschitz)
            .finish()
    }
}

/// Spectral norm of a 2×2 matrix.
fn norm2(m: &Matrix2<f64>) -> f64 {
    m.singular_values().max()
}

impl CoefficientField {
    /// Pure diffusion `−div(a∇u)` with constant `a`.
    pub fn constant(dim: usize, a: Matrix2<f64>) -> Self {
        let na = if dim == 1 { a[(0, 0)].abs() } else { norm2(&a) };
        Self {
            dim,
            a: Arc::new(move |_| a),
            b: constant_vector(Vector2::zeros()),
            c: constant_vector(Vector2::zeros()),
            d: constant_scalar(0.0),
            beta: constant_scalar(0.0),
            sup_bounds: SupBounds {
                a: na,
                b: 0.0,
                c: 0.0,
                d: 0.0,
                beta: 0.0,
            },
            b_lipschitz: Some(0.0),
            name: "constant".into(),
        }
    }

    /// The Laplacian, `a = I`.
    pub fn laplacian(dim: usize) -> Self {
        Self::constant(dim, Matrix2::identity())
    }

    /// `a(x) = λ(x)·I` with `λ` alternating between 1 and `contrast` on a
    /// `tiles × tiles` checkerboard of the unit square (or `tiles` intervals
    /// of the unit interval).
    pub fn checkerboard(dim: usize, contrast: f64, tiles: usize) -> Result<Self> {
        if !(contrast >= 1.0) {
            return Err(Error::InvalidArgument(format!("contrast must be >= 1, got {contrast}")));
        }
        if tiles == 0 {
            return Err(Error::InvalidArgument("tiles must be >= 1".into()));
        }
        let t = tiles as f64;
        let lambda = move |x: Point| {
            let i = (x[0] * t).floor() as i64;
            let j = if dim == 2 { (x[1] * t).floor() as i64 } else { 0 };
            if (i + j).rem_euclid(2) == 0 {
                1.0
            } else {
                contrast
            }
        };
        let mut field = Self::laplacian(dim);
        field.a = Arc::new(move |x| Matrix2::identity() * lambda(x));
        field.sup_bounds.a = if tiles == 1 && dim == 1 { 1.0 } else { contrast };
        field.name = "checkerboard".into();
        Ok(field)
    }

    /// The 1D field `a = 1, b = c = sgn, d = 0` with constant `β`.
    pub fn sgn_drift(beta: f64) -> Self {
        let sgn = |x: Point| {
            let s = if x[0] > 0.0 {
                1.0
            } else if x[0] < 0.0 {
                -1.0
            } else {
                0.0
            };
            Vector2::new(s, 0.0)
        };
        let mut field = Self::laplacian(1);
        field.b = Arc::new(sgn);
        field.c = Arc::new(sgn);
        field.beta = constant_scalar(beta);
        field.sup_bounds.b = 1.0;
        field.sup_bounds.c = 1.0;
        field.sup_bounds.beta = beta.abs();
        field.b_lipschitz = None;
        field.name = "sgn_drift".into();
        field
    }

    /// `a(x) = value·I` from a table on a uniform `nx × ny` grid over
    /// `[x0, x1] × [y0, y1]`; points outside are clamped to the nearest cell.
    pub fn from_table(dim: usize, grid: CellTable) -> Result<Self> {
        if grid.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("table values must be positive and finite".into()));
        }
        let sup = grid.values.iter().fold(0.0f64, |m, &v| m.max(v));
        let grid = Arc::new(grid);
        let mut field = Self::laplacian(dim);
        field.a = Arc::new(move |x| Matrix2::identity() * grid.lookup(x));
        field.sup_bounds.a = sup;
        field.name = "custom_table".into();
        Ok(field)
    }

    pub fn with_a(mut self, a: MatrixFn, sup: f64) -> Self {
        self.a = a;
        self.sup_bounds.a = sup;
        self
    }

    /// Sets `b`; `lipschitz` records a `W^{1,∞}` claim.
    pub fn with_b(mut self, b: VectorFn, sup: f64, lipschitz: Option<f64>) -> Self {
        self.b = b;
        self.sup_bounds.b = sup;
        self.b_lipschitz = lipschitz;
        self
    }

    pub fn with_c(mut self, c: VectorFn, sup: f64) -> Self {
        self.c = c;
        self.sup_bounds.c = sup;
        self
    }

    pub fn with_d(mut self, d: ScalarFn, sup: f64) -> Self {
        self.d = d;
        self.sup_bounds.d = sup;
        self
    }

    pub fn with_beta(mut self, beta: ScalarFn, sup: f64) -> Self {
        self.beta = beta;
        self.sup_bounds.beta = sup;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiplies `a` by `t`.
    pub fn scale_a(mut self, t: f64) -> Self {
        let a = self.a.clone();
        self.a = Arc::new(move |x| a(x) * t);
        self.sup_bounds.a *= t.abs();
        self
    }

    /// A constant `k` with `|b| ≤ k` and `div b ≤ k`, available when `b` is
    /// Lipschitz.
    pub fn drift_bound(&self) -> Option<f64> {
        self.b_lipschitz
            .map(|l| self.sup_bounds.b.max(self.dim as f64 * l))
    }

    /// Smallest eigenvalue of the symmetric part of `a(x)`, restricted to the
    /// active dimension.
    pub fn lambda_min_at(&self, x: Point) -> f64 {
        let a = (self.a)(x);
        if self.dim == 1 {
            a[(0, 0)]
        } else {
            sym2_lambda_min(&a)
        }
    }

    /// Spot-checks the recorded sup bounds at cell barycenters and facet midpoints.
    pub fn check_bounds(&self, mesh: &Mesh) -> bool {
        let tol = 1e-12;
        let vec_norm = |v: Vector2<f64>| if self.dim == 1 { v[0].abs() } else { v.norm() };
        let mat_norm = |m: Matrix2<f64>| if self.dim == 1 { m[(0, 0)].abs() } else { norm2(&m) };
        let cells_ok = (0..mesh.num_cells()).all(|k| {
            let x = mesh.geometry(k).barycenter;
            mat_norm((self.a)(x)) <= self.sup_bounds.a + tol
                && vec_norm((self.b)(x)) <= self.sup_bounds.b + tol
                && vec_norm((self.c)(x)) <= self.sup_bounds.c + tol
                && (self.d)(x).abs() <= self.sup_bounds.d + tol
        });
        let facets_ok = mesh
            .boundary_facets()
            .iter()
            .all(|f| (self.beta)(f.midpoint(mesh)).abs() <= self.sup_bounds.beta + tol);
        cells_ok && facets_ok
    }

    /// Largest difference quotient `|b(x) − b(y)|/|x − y|` over vertex/barycenter
    /// pairs within each cell; compared against `b_lipschitz` when present.
    pub fn check_b_lipschitz(&self, mesh: &Mesh) -> Option<bool> {
        let l = self.b_lipschitz?;
        let ok = (0..mesh.num_cells()).all(|k| {
            let g = mesh.geometry(k);
            mesh.cells()[k].iter().all(|&v| {
                let p = mesh.vertices()[v];
                let dist = crate::mesh::distance(p, g.barycenter);
                ((self.b)(p) - (self.b)(g.barycenter)).norm() <= l * dist * (1.0 + 1e-12) + 1e-14
            })
        });
        Some(ok)
    }
}

/// Uniform grid of positive values used by the `custom_table` family.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    /// Row-major, `ny` rows of `nx` values.
    pub values: Vec<f64>,
}

impl CellTable {
    /// Parses `nx ny x0 x1 y0 y1` followed by `nx·ny` values.
    pub fn parse(text: &str) -> Result<Self> {
        let nums: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .collect();
        if nums.len() < 6 {
            return Err(Error::Config("table header needs nx ny x0 x1 y0 y1".into()));
        }
        let nx: usize = nums[0].parse().map_err(|_| Error::Config("bad nx".into()))?;
        let ny: usize = nums[1].parse().map_err(|_| Error::Config("bad ny".into()))?;
        let mut bounds = [0.0; 4];
        for (i, b) in bounds.iter_mut().enumerate() {
            *b = nums[2 + i]
                .parse()
                .map_err(|_| Error::Config(format!("bad bound '{}'", nums[2 + i])))?;
        }
        let values = nums[6..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Config(format!("bad value '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(Error::Config(format!(
                "table declares {nx}x{ny} cells but holds {} values",
                values.len()
            )));
        }
        if !(bounds[0] < bounds[1]) || !(bounds[2] <= bounds[3]) {
            return Err(Error::Config("table bounds are degenerate".into()));
        }
        Ok(Self { nx, ny, bounds, values })
    }

    pub fn lookup(&self, x: Point) -> f64 {
        let idx = |v: f64, lo: f64, hi: f64, n: usize| -> usize {
            if hi <= lo {
                return 0;
            }
            let t = ((v - lo) / (hi - lo) * n as f64).floor();
            (t.max(0.0) as usize).min(n - 1)
        };
        let i = idx(x[0], self.bounds[0], self.bounds[1], self.nx);
        let j = idx(x[1], self.bounds[2], self.bounds[3], self.ny);
        self.values[j * self.nx + i]
    }
}

/// Lower ellipticity bound observed on samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityCertificate {
    pub alpha: f64,
    pub sample_count: usize,
    pub min_observed: f64,
}

/// Sample points inside cell `k`: the barycenter first, then points along a
/// fixed low-discrepancy sequence in barycentric coordinates.
pub fn cell_sample_points(mesh: &Mesh, k: usize, count: usize) -> Vec<Point> {
    let g = mesh.geometry(k);
    let verts: Vec<Point> = mesh.cells()[k].iter().map(|&v| mesh.vertices()[v]).collect();
    let mut out = vec![g.barycenter];
    let mut i = 1u32;
    while out.len() < count {
        let (u, w) = (radical_inverse(i, 2), radical_inverse(i, 3));
        i += 1;
        let p = if verts.len() == 2 {
            let t = u;
            [verts[0][0] + t * (verts[1][0] - verts[0][0]), 0.0]
        } else {
            // fold the unit square onto the reference triangle
            let (s, t) = if u + w > 1.0 { (1.0 - u, 1.0 - w) } else { (u, w) };
            [
                verts[0][0] + s * (verts[1][0] - verts[0][0]) + t * (verts[2][0] - verts[0][0]),
                verts[0][1] + s * (verts[1][1] - verts[0][1]) + t * (verts[2][1] - verts[0][1]),
            ]
        };
        out.push(p);
    }
    out
}

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// `α = min λ_min((a + aᵀ)/2)` over `samples_per_cell` points per cell.
pub fn certify_ellipticity(
    field: &CoefficientField,
    mesh: &Mesh,
    samples_per_cell: usize,
) -> Result<EllipticityCertificate> {
    if samples_per_cell == 0 {
        return Err(Error::InvalidArgument("samples_per_cell must be >= 1".into()));
    }
    let mut min_observed = f64::INFINITY;
    let mut count = 0;
    for k in 0..mesh.num_cells() {
        for x in cell_sample_points(mesh, k, samples_per_cell) {
            let lmin = field.lambda_min_at(x);
            count += 1;
            if !(lmin > 0.0) {
                return Err(Error::NonElliptic {
                    x: x[0],
                    y: x[1],
                    lambda_min: lmin,
                });
            }
            min_observed = min_observed.min(lmin);
        }
    }
    Ok(EllipticityCertificate {
        alpha: min_observed,
        sample_count: count,
        min_observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_polygon_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square(h: f64) -> Mesh {
        build_polygon_mesh(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], h).unwrap()
    }

    #[test]
    fn identity_alpha_is_one() {
        let c = certify_ellipticity(&CoefficientField::laplacian(2), &unit_square(0.25), 1).unwrap();
        assert_eq!(c.alpha, 1.0);
        assert!(c.alpha <= c.min_observed);
    }

    #[test]
    fn symmetric_matrix_alpha() {
        let f = CoefficientField::constant(2, Matrix2::new(1.0, 2.0, 2.0, 5.0));
        let c = certify_ellipticity(&f, &unit_square(0.5), 3).unwrap();
        assert!((c.alpha - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn skew_dominated_matrix_is_rejected() {
        let f = CoefficientField::constant(2, Matrix2::new(1.0, 3.0, 0.0, 1.0));
        match certify_ellipticity(&f, &unit_square(0.5), 1) {
            Err(Error::NonElliptic { lambda_min, .. }) => assert!((lambda_min + 0.5).abs() < 1e-14),
            other => panic!("expected NonElliptic, got {other:?}"),
        }
    }

    #[test]
    fn checkerboard_properties() {
        let mesh = unit_square(0.125);
        let flat = CoefficientField::checkerboard(2, 1.0, 4).unwrap();
        assert!((0..mesh.num_cells()).all(|k| (flat.a)(mesh.geometry(k).barycenter) == Matrix2::identity()));
        let f = CoefficientField::checkerboard(2, 100.0, 4).unwrap();
        assert_eq!(certify_ellipticity(&f, &mesh, 1).unwrap().alpha, 1.0);
        assert_eq!(f.sup_bounds.a, 100.0);
        assert!(f.check_bounds(&mesh));
        assert!(CoefficientField::checkerboard(2, 0.5, 4).is_err());
        assert!(CoefficientField::checkerboard(2, 2.0, 0).is_err());
    }

    #[test]
    fn certificate_bounds_random_quadratic_forms() {
        let mesh = unit_square(0.25);
        let a = matrix_fn(|x| Matrix2::new(2.0 + x[0], 0.5 * x[1], -0.3, 1.0 + x[0] * x[1]));
        let f = CoefficientField::laplacian(2).with_a(a, 4.0);
        let cert = certify_ellipticity(&f, &mesh, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let k = rng.gen_range(0..mesh.num_cells());
            let x = cell_sample_points(&mesh, k, 4)[rng.gen_range(0..4)];
            let xi = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let q = xi.dot(&((f.a)(x) * xi));
            assert!(q >= cert.alpha * xi.norm_squared() - 1e-12);
        }
    }

    #[test]
    fn scaling_a_scales_alpha() {
        let mesh = unit_square(0.25);
        let f = CoefficientField::checkerboard(2, 7.0, 3).unwrap();
        let base = certify_ellipticity(&f, &mesh, 2).unwrap().alpha;
        for t in [0.25, 3.0, 10.0] {
            let scaled = certify_ellipticity(&f.clone().scale_a(t), &mesh, 2).unwrap().alpha;
            assert_eq!(scaled, base * t);
        }
    }

    #[test]
    fn one_dimensional_checks_use_first_entry() {
        let mesh = build_interval_mesh(-1.0, 1.0, 8).unwrap();
        let f = CoefficientField::sgn_drift(0.0);
        assert_eq!(certify_ellipticity(&f, &mesh, 2).unwrap().alpha, 1.0);
        assert!(f.check_bounds(&mesh));
        assert_eq!(f.drift_bound(), None);
    }

    #[test]
    fn lipschitz_drift_check() {
        let mesh = unit_square(0.25);
        let f = CoefficientField::laplacian(2).with_b(vector_fn(|x| Vector2::new(0.3 * x[0], 0.0)), 0.3, Some(0.3));
        assert_eq!(f.check_b_lipschitz(&mesh), Some(true));
        assert_eq!(f.drift_bound(), Some(0.6));
        let lying = f.clone().with_b(vector_fn(|x| Vector2::new(3.0 * x[0], 0.0)), 3.0, Some(0.3));
        assert_eq!(lying.check_b_lipschitz(&mesh), Some(false));
    }

    #[test]
    fn table_lookup() {
        let t = CellTable::parse("2 1 0 1 0 1\n1.0 5.0\n").unwrap();
        assert_eq!(t.lookup([0.25, 0.5]), 1.0);
        assert_eq!(t.lookup([0.75, 0.5]), 5.0);
        assert_eq!(t.lookup([7.0, 0.5]), 5.0);
        assert!(CellTable::parse("2 2 0 1 0 1\n1 2 3\n").is_err());
        let f = CoefficientField::from_table(2, t).unwrap();
        assert_eq!(f.sup_bounds.a, 5.0);
    }
}
