//! Problem configuration files: TOML with one section per concern.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::assembly::RhsData;
use crate::coeff::{constant_scalar, constant_vector, scalar_fn, vector_fn, CellTable, CoefficientField, ScalarFn, VectorFn};
use crate::error::{Error, Result};
use crate::mesh::{build_interval_mesh, build_polygon_mesh, build_rectangle_mesh, check_simple_polygon, Mesh, Point};
use crate::parabolic::{BoundaryModel, Scheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub rhs: RhsConfig,
    #[serde(default)]
    pub omega: OmegaConfig,
    #[serde(default)]
    pub evolution: EvolutionSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// `[a, b]` for an interval, `[x0, x1, y0, y1]` for a rectangle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<f64>>,
    /// Counter-clockwise or clockwise vertex list of a simple polygon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Cells per direction on the coarsest level (interval and rectangle).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Target edge length on the coarsest level (polygon).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_h: Option<f64>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            cells: Some(8),
            target_h: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFamily {
    Constant,
    Checkerboard,
    SgnDrift,
    CustomTable,
}

/// `a` from the family, plus affine drifts `b(x) = b0 + B x`, `c(x) = c0 + C x`
/// and a constant reaction `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub family: CoefficientFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_grad: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grad: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            family: CoefficientFamily::Constant,
            a: None,
            contrast: None,
            tiles: None,
            table: None,
            b0: None,
            b_grad: None,
            c0: None,
            c_grad: None,
            d: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    Robin,
    Wentzell,
}

impl From<ModelName> for BoundaryModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Robin => BoundaryModel::Robin,
            ModelName::Wentzell => BoundaryModel::Wentzell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub model: ModelName,
    /// Constant Robin coefficient `β`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsFamily {
    #[default]
    Zero,
    Constant,
    ManufacturedCos,
    PointSingularity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig {
    #[serde(default)]
    pub family: RhsFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Singular point for `point_singularity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    /// `f₀ = scale·|x − center|^exponent` for `point_singularity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaPolicy {
    Fixed,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    #[serde(default)]
    pub policy: OmegaPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            policy: OmegaPolicy::Auto,
            value: None,
            eta: None,
        }
    }
}

pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Euler,
    Cn,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Euler => Scheme::ImplicitEuler,
            SchemeName::Cn => Scheme::CrankNicolson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFamily {
    /// Seeded random values in `[0, 1]`.
    #[default]
    Random,
    Ones,
    /// `cos(πx)·cos(πy)`-shaped bump shifted to be nonnegative.
    Bump,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lumped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{name} must be finite, got {v}")))
    }
}

/// Affine vector field `v0 + G x` with its sup over the domain box and its
/// Lipschitz constant `‖G‖₂`.
fn affine_field(v0: Option<[f64; 2]>, grad: Option<[[f64; 2]; 2]>, bbox: [f64; 4]) -> (VectorFn, f64, f64) {
    let v0 = Vector2::from(v0.unwrap_or([0.0, 0.0]));
    let g = grad.map(matrix).unwrap_or_else(Matrix2::zeros);
    let corners = [
        [bbox[0], bbox[2]],
        [bbox[1], bbox[2]],
        [bbox[0], bbox[3]],
        [bbox[1], bbox[3]],
    ];
    let sup = corners
        .iter()
        .map(|c| (v0 + g * Vector2::new(c[0], c[1])).norm())
        .fold(0.0, f64::max);
    let lip = g.singular_values().max();
    if g == Matrix2::zeros() {
        (constant_vector(v0), sup, 0.0)
    } else {
        (vector_fn(move |x: Point| v0 + g * Vector2::new(x[0], x[1])), sup, lip)
    }
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text; parsing it yields an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        match self.domain.kind {
            DomainKind::Interval => 1,
            _ => 2,
        }
    }

    /// Axis-aligned bounding box `[x0, x1, y0, y1]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        match self.domain.kind {
            DomainKind::Interval => {
                let b = self.domain.bounds.as_deref().unwrap_or(&[0.0, 1.0]);
                [b[0], b[1], 0.0, 0.0]
            }
            DomainKind::Rectangle => {
                let b = self.domain.bounds.as_deref().unwrap_or(&[0.0, 1.0, 0.0, 1.0]);
                [b[0], b[1], b[2], b[3]]
            }
            DomainKind::Polygon => {
                let v = self.domain.vertices.as_deref().unwrap_or(&[]);
                v.iter().fold(
                    [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
                    |b, p| [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])],
                )
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.domain.kind {
            DomainKind::Interval | DomainKind::Rectangle => {
                let want = if self.domain.kind == DomainKind::Interval { 2 } else { 4 };
                if self.domain.vertices.is_some() {
                    return Err(config_err("domain.vertices only applies to polygons"));
                }
                if let Some(b) = &self.domain.bounds {
                    if b.len() != want {
                        return Err(config_err(format!("domain.bounds needs {want} values, got {}", b.len())));
                    }
                    if b.iter().any(|v| !v.is_finite()) || b[0] >= b[1] || (want == 4 && b[2] >= b[3]) {
                        return Err(config_err("domain.bounds must be finite and increasing"));
                    }
                }
                if self.mesh.target_h.is_some() {
                    return Err(config_err("mesh.target_h only applies to polygons; use mesh.cells"));
                }
                if self.mesh.cells == Some(0) {
                    return Err(config_err("mesh.cells must be at least 1"));
                }
            }
            DomainKind::Polygon => {
                if self.domain.bounds.is_some() {
                    return Err(config_err("domain.bounds does not apply to polygons"));
                }
                let v = self
                    .domain
                    .vertices
                    .as_ref()
                    .ok_or_else(|| config_err("polygon domain needs domain.vertices"))?;
                check_simple_polygon(v)?;
                if self.mesh.cells.is_some() {
                    return Err(config_err("mesh.cells does not apply to polygons; use mesh.target_h"));
                }
                match self.mesh.target_h {
                    Some(h) if h > 0.0 && h.is_finite() => {}
                    _ => return Err(config_err("polygon domain needs a positive mesh.target_h")),
                }
            }
        }
        self.validate_coefficients()?;
        self.validate_rhs()?;
        if let Some(b) = self.boundary.beta {
            finite("boundary.beta", b)?;
        }
        match self.omega.policy {
            OmegaPolicy::Fixed => {
                let v = self.omega.value.ok_or_else(|| config_err("omega.policy = fixed needs omega.value"))?;
                finite("omega.value", v)?;
                if self.omega.eta.is_some() {
                    return Err(config_err("omega.eta only applies to policy = auto"));
                }
            }
            OmegaPolicy::Auto => {
                if self.omega.value.is_some() {
                    return Err(config_err("omega.value only applies to policy = fixed"));
                }
                if let Some(eta) = self.omega.eta {
                    if !(eta > 0.0 && eta <= 1.0) {
                        return Err(config_err(format!("omega.eta must lie in (0, 1], got {eta}")));
                    }
                }
            }
        }
        let ev = &self.evolution;
        for (name, v) in [("evolution.dt", ev.dt), ("evolution.t_end", ev.t_end)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config_err(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if ev.trials == Some(0) {
            return Err(config_err("evolution.trials must be at least 1"));
        }
        Ok(())
    }

    fn validate_coefficients(&self) -> Result<()> {
        let c = &self.coefficients;
        let only = |present: bool, key: &str, family: &str| -> Result<()> {
            if present {
                Err(config_err(format!("coefficients.{key} does not apply to family {family}")))
            } else {
                Ok(())
            }
        };
        match c.family {
            CoefficientFamily::Constant => {
                only(c.contrast.is_some(), "contrast", "constant")?;
                only(c.tiles.is_some(), "tiles", "constant")?;
                only(c.table.is_some(), "table", "constant")?;
                if let Some(a) = c.a {
                    let m = matrix(a);
                    if m.iter().any(|v| !v.is_finite()) {
                        return Err(config_err("coefficients.a must be finite"));
                    }
                    let lmin = crate::linalg::sym2_lambda_min(&m);
                    let lmin = if self.dim() == 1 { m[(0, 0)] } else { lmin };
                    if !(lmin > 0.0) {
                        return Err(config_err(format!("coefficients.a is not elliptic (lambda_min = {lmin})")));
                    }
                }
            }
            CoefficientFamily::Checkerboard => {
                only(c.a.is_some(), "a", "checkerboard")?;
                only(c.table.is_some(), "table", "checkerboard")?;
                match c.contrast {
                    Some(k) if k >= 1.0 && k.is_finite() => {}
                    _ => return Err(config_err("checkerboard needs coefficients.contrast >= 1")),
                }
                if !matches!(c.tiles, Some(t) if t >= 1) {
                    return Err(config_err("checkerboard needs coefficients.tiles >= 1"));
                }
            }
            CoefficientFamily::SgnDrift => {
                if self.dim() != 1 {
                    return Err(config_err("sgn_drift is a one-dimensional family"));
                }
                for (present, key) in [
                    (c.a.is_some(), "a"),
                    (c.contrast.is_some(), "contrast"),
                    (c.tiles.is_some(), "tiles"),
                    (c.table.is_some(), "table"),
                    (c.b0.is_some(), "b0"),
                    (c.b_grad.is_some(), "b_grad"),
                    (c.c0.is_some(), "c0"),
                    (c.c_grad.is_some(), "c_grad"),
                ] {
                    only(present, key, "sgn_drift")?;
                }
            }
            CoefficientFamily::CustomTable => {
                only(c.a.is_some(), "a", "custom_table")?;
                only(c.contrast.is_some(), "contrast", "custom_table")?;
                only(c.tiles.is_some(), "tiles", "custom_table")?;
                if c.table.is_none() {
                    return Err(config_err("custom_table needs coefficients.table"));
                }
            }
        }
        if let Some(d) = c.d {
            finite("coefficients.d", d)?;
        }
        Ok(())
    }

    fn validate_rhs(&self) -> Result<()> {
        let r = &self.rhs;
        let c = &self.coefficients;
        match r.family {
            RhsFamily::Zero => {
                if r.f0.is_some() || r.f.is_some() || r.g.is_some() || r.center.is_some() || r.exponent.is_some() {
                    return Err(config_err("rhs.family = zero takes no data"));
                }
            }
            RhsFamily::Constant => {
                if r.center.is_some() || r.exponent.is_some() {
                    return Err(config_err("rhs.center and rhs.exponent only apply to point_singularity"));
                }
            }
            RhsFamily::ManufacturedCos => {
                if r.f0.is_some() || r.f.is_some() || r.g.is_some() || r.center.is_some() || r.exponent.is_some() {
                    return Err(config_err("rhs.family = manufactured_cos takes no data"));
                }
                let unit = match self.domain.kind {
                    DomainKind::Interval => self.bounding_box()[..2] == [0.0, 1.0],
                    DomainKind::Rectangle => self.bounding_box() == [0.0, 1.0, 0.0, 1.0],
                    DomainKind::Polygon => false,
                };
                let identity = c.family == CoefficientFamily::Constant
                    && c.a.is_none_or(|a| matrix(a) == Matrix2::identity());
                let plain = c.b0.is_none() && c.b_grad.is_none() && c.c0.is_none() && c.c_grad.is_none();
                let neumann = self.boundary.beta.unwrap_or(0.0) == 0.0;
                if !(unit && identity && plain && neumann) {
                    return Err(config_err(
                        "manufactured_cos needs the unit interval or square, a = I, no drift and beta = 0",
                    ));
                }
                if self.omega.policy != OmegaPolicy::Fixed {
                    return Err(config_err("manufactured_cos needs omega.policy = fixed"));
                }
            }
            RhsFamily::PointSingularity => {
                if r.f0.is_none() || r.exponent.is_none() {
                    return Err(config_err("point_singularity needs rhs.f0 (scale) and rhs.exponent"));
                }
                let e = r.exponent.unwrap_or(0.0);
                // f₀ ∈ L^q requires q·exponent > −N
                if !(e.is_finite() && e > -(self.dim() as f64)) {
                    return Err(config_err(format!("rhs.exponent must exceed -{}, got {e}", self.dim())));
                }
            }
        }
        for v in [r.f0, r.g].into_iter().flatten() {
            finite("rhs data", v)?;
        }
        Ok(())
    }

    /// The coarsest mesh described by the domain and mesh sections.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let b = self.bounding_box();
        let n = self.mesh.cells.unwrap_or(8);
        match self.domain.kind {
            DomainKind::Interval => build_interval_mesh(b[0], b[1], n),
            DomainKind::Rectangle => build_rectangle_mesh(b[0], b[1], b[2], b[3], n, n),
            DomainKind::Polygon => {
                let v = self.domain.vertices.as_deref().unwrap_or(&[]);
                build_polygon_mesh(v, self.mesh.target_h.unwrap_or(0.1))
            }
        }
    }

    /// Coefficient field; `base_dir` resolves relative table paths.
    pub fn build_field(&self, base_dir: &Path) -> Result<CoefficientField> {
        let dim = self.dim();
        let c = &self.coefficients;
        let beta = self.boundary.beta.unwrap_or(0.0);
        let mut field = match c.family {
            CoefficientFamily::Constant => {
                CoefficientField::constant(dim, c.a.map(matrix).unwrap_or_else(Matrix2::identity))
            }
            CoefficientFamily::Checkerboard => {
                CoefficientField::checkerboard(dim, c.contrast.unwrap_or(1.0), c.tiles.unwrap_or(1))?
            }
            CoefficientFamily::SgnDrift => CoefficientField::sgn_drift(beta),
            CoefficientFamily::CustomTable => {
                let rel = c.table.as_deref().unwrap_or_default();
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                CoefficientField::from_table(dim, CellTable::parse(&text)?)?
            }
        };
        if c.family != CoefficientFamily::SgnDrift {
            let bbox = self.bounding_box();
            if c.b0.is_some() || c.b_grad.is_some() {
                let (b, sup, lip) = affine_field(c.b0, c.b_grad, bbox);
                field = field.with_b(b, sup, Some(lip));
            }
            if c.c0.is_some() || c.c_grad.is_some() {
                let (cf, sup, _) = affine_field(c.c0, c.c_grad, bbox);
                field = field.with_c(cf, sup);
            }
        }
        if let Some(d) = c.d {
            field = field.with_d(constant_scalar(d), d.abs());
        }
        if beta != 0.0 && c.family != CoefficientFamily::SgnDrift {
            field = field.with_beta(constant_scalar(beta), beta.abs());
        }
        Ok(field)
    }

    pub fn build_rhs(&self) -> RhsData {
        let r = &self.rhs;
        let dim = self.dim();
        match r.family {
            RhsFamily::Zero => RhsData::default(),
            RhsFamily::Constant => {
                let mut data = RhsData::default();
                if let Some(f0) = r.f0 {
                    data = data.with_f0(constant_scalar(f0));
                }
                if let Some(f) = r.f {
                    data = data.with_f(constant_vector(Vector2::from(f)));
                }
                if let Some(g) = r.g {
                    data = data.with_g(constant_scalar(g));
                }
                data
            }
            RhsFamily::ManufacturedCos => {
                let omega = self.omega.value.unwrap_or(0.0);
                let d = self.coefficients.d.unwrap_or(0.0);
                let factor = omega + d + dim as f64 * PI * PI;
                let exact = manufactured_exact(dim);
                RhsData::default().with_f0(scalar_fn(move |x| factor * exact(x)))
            }
            RhsFamily::PointSingularity => {
                let scale = r.f0.unwrap_or(1.0);
                let e = r.exponent.unwrap_or(0.0);
                let bbox = self.bounding_box();
                let center = r
                    .center
                    .unwrap_or([0.5 * (bbox[0] + bbox[1]), 0.5 * (bbox[2] + bbox[3])]);
                let f0: ScalarFn = Arc::new(move |x: Point| {
                    let dx = x[0] - center[0];
                    let dy = if dim == 2 { x[1] - center[1] } else { 0.0 };
                    scale * dx.hypot(dy).powf(e)
                });
                let mut data = RhsData::default().with_f0(f0);
                if let Some(g) = r.g {
                    data = data.with_g(constant_scalar(g));
                }
                data
            }
        }
    }

    /// Exact solution and gradient when the right-hand side family has one.
    pub fn exact_solution(&self) -> Option<(ScalarFn, VectorFn)> {
        (self.rhs.family == RhsFamily::ManufacturedCos).then(|| {
            let dim = self.dim();
            (scalar_fn(manufactured_exact(dim)), vector_fn(manufactured_gradient(dim)))
        })
    }
}

fn manufactured_exact(dim: usize) -> impl Fn(Point) -> f64 + Send + Sync + Copy + 'static {
    move |x: Point| {
        if dim == 1 {
            (PI * x[0]).cos()
        } else {
            (PI * x[0]).cos() * (PI * x[1]).cos()
        }
    }
}

fn manufactured_gradient(dim: usize) -> impl Fn(Point) -> Vector2<f64> + Send + Sync + Copy + 'static {
    move |x: Point| {
        if dim == 1 {
            Vector2::new(-PI * (PI * x[0]).sin(), 0.0)
        } else {
            Vector2::new(
                -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHECKERBOARD: &str = r#"
[domain]
kind = "rectangle"
bounds = [0.0, 1.0, 0.0, 1.0]

[mesh]
cells = 8

[coefficients]
family = "checkerboard"
contrast = 100.0
tiles = 4
d = 1.0

[rhs]
family = "point_singularity"
f0 = 1.0
exponent = -0.5
center = [0.5, 0.5]

[omega]
policy = "fixed"
value = 0.0
"#;

    #[test]
    fn round_trip() {
        let cfg = ProblemConfig::parse(CHECKERBOARD).unwrap();
        let text = cfg.to_toml();
        assert_eq!(ProblemConfig::parse(&text).unwrap(), cfg);
        assert_eq!(ProblemConfig::parse(&text).unwrap().to_toml(), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = CHECKERBOARD.replace("tiles = 4", "tiles = 4\ncolour = 3");
        assert!(matches!(ProblemConfig::parse(&bad), Err(Error::Config(_))));
        let bad = format!("{CHECKERBOARD}\n[extra]\nx = 1\n");
        assert!(ProblemConfig::parse(&bad).is_err());
    }

    #[test]
    fn inconsistent_keys_rejected() {
        let bad = CHECKERBOARD.replace("contrast = 100.0", "contrast = 0.5");
        assert!(ProblemConfig::parse(&bad).is_err());
        let bad = CHECKERBOARD.replace("value = 0.0", "");
        assert!(ProblemConfig::parse(&bad).is_err());
        let bad = "[domain]\nkind = \"polygon\"\nvertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]\n";
        assert!(ProblemConfig::parse(bad).is_err());
    }

    #[test]
    fn manufactured_rhs_matches_exact() {
        let text = "[domain]\nkind = \"interval\"\n[rhs]\nfamily = \"manufactured_cos\"\n[omega]\npolicy = \"fixed\"\nvalue = 1.0\n";
        let cfg = ProblemConfig::parse(text).unwrap();
        let (u, _) = cfg.exact_solution().unwrap();
        let f0 = cfg.build_rhs().f0;
        let x = [0.3, 0.0];
        assert!((f0(x) - (1.0 + PI * PI) * u(x)).abs() < 1e-14);
    }

    #[test]
    fn affine_drift_bounds() {
        let (b, sup, lip) = affine_field(None, Some([[0.3, 0.0], [0.0, 0.0]]), [0.0, 1.0, 0.0, 1.0]);
        assert!((sup - 0.3).abs() < 1e-15);
        assert!((lip - 0.3).abs() < 1e-15);
        assert_eq!(b([1.0, 0.5]), Vector2::new(0.3, 0.0));
    }
}
