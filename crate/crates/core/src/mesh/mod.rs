//! Simplicial meshes of intervals and polygons, boundary facets, traces and
//! boundary charts.

mod chart;
mod io;
mod polygon;

use std::collections::{HashMap, VecDeque};

pub use chart::{BoundaryChart, JacobianEval, PiecewiseLinear};
pub use io::{format_f64, mesh_to_string, parse_mesh, read_mesh, write_mesh};
pub use polygon::{build_polygon_mesh, check_simple_polygon, point_in_polygon, polygon_area, polygon_perimeter};

use crate::error::{Error, Result};

/// Coordinates in the plane; 1D meshes leave the second component at zero.
pub type Point = [f64; 2];

/// Tolerance on the Euclidean norm of facet normals.
pub const NORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    /// One vertex in 1D, two in 2D.
    pub vertices: Vec<usize>,
    pub normal: Point,
    /// Counting measure (1) in 1D, edge length in 2D.
    pub measure: f64,
}

impl BoundaryFacet {
    pub fn midpoint(&self, mesh: &Mesh) -> Point {
        let k = self.vertices.len() as f64;
        let mut m = [0.0; 2];
        for &v in &self.vertices {
            m[0] += mesh.vertices[v][0] / k;
            m[1] += mesh.vertices[v][1] / k;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub measure: f64,
    pub barycenter: Point,
    /// Gradients of the barycentric (P1) basis functions, one per vertex.
    pub gradients: Vec<Point>,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    boundary_facets: Vec<BoundaryFacet>,
    vertex_boundary_flag: Vec<bool>,
    geometry: Vec<CellGeometry>,
}

impl Mesh {
    /// Builds and validates a mesh. Negatively oriented triangles are flipped.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        mut cells: Vec<Vec<usize>>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("unsupported dimension {dim}")));
        }
        if cells.is_empty() {
            return Err(Error::InvalidMesh("no cells".into()));
        }
        for (k, cell) in cells.iter_mut().enumerate() {
            if cell.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!("cell {k} has {} vertices", cell.len())));
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("cell {k} references vertex {v}")));
            }
            if signed_measure(dim, &vertices, cell) < 0.0 {
                cell.swap(0, 1);
            }
        }
        let geometry = cells
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let g = cell_geometry(dim, &vertices, c);
                if g.measure > 0.0 {
                    Ok(g)
                } else {
                    Err(Error::InvalidMesh(format!("cell {k} has zero measure")))
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let mut vertex_boundary_flag = vec![false; vertices.len()];
        for f in &boundary_facets {
            for &v in &f.vertices {
                vertex_boundary_flag[v] = true;
            }
        }
        let mesh = Self {
            dim,
            vertices,
            cells,
            boundary_facets,
            vertex_boundary_flag,
            geometry,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a 2D mesh from cells alone, deriving boundary facets and
    /// outward normals from edges that belong to a single cell.
    pub fn from_triangles(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let mut cells: Vec<Vec<usize>> = cells.into_iter().map(|c| c.to_vec()).collect();
        for c in cells.iter_mut() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh("cell references missing vertex".into()));
            }
            if signed_measure(2, &vertices, c) < 0.0 {
                c.swap(0, 1);
            }
        }
        let facets = derive_boundary_facets(&vertices, &cells);
        Self::new(2, vertices, cells, facets)
    }

    fn validate(&self) -> Result<()> {
        let facet_key = |f: &[usize]| -> Vec<usize> {
            let mut k = f.to_vec();
            k.sort_unstable();
            k
        };
        let mut owners: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (k, cell) in self.cells.iter().enumerate() {
            for f in local_facets(cell) {
                owners.entry(facet_key(&f)).or_default().push(k);
            }
        }
        let mut boundary_keys = HashMap::new();
        for (i, f) in self.boundary_facets.iter().enumerate() {
            if f.vertices.len() != self.dim {
                return Err(Error::InvalidMesh(format!("boundary facet {i} has wrong arity")));
            }
            let norm = f.normal[0].hypot(f.normal[1]);
            if (norm - 1.0).abs() > NORMAL_TOL {
                return Err(Error::InvalidMesh(format!("boundary facet {i} normal has norm {norm}")));
            }
            let key = facet_key(&f.vertices);
            match owners.get(&key).map(Vec::len) {
                Some(1) => {}
                Some(n) => {
                    return Err(Error::InvalidMesh(format!("boundary facet {i} is shared by {n} cells")));
                }
                None => return Err(Error::InvalidMesh(format!("boundary facet {i} belongs to no cell"))),
            }
            let owner = owners[&key][0];
            let outward = self.outward_direction(owner, &f.vertices);
            if outward[0] * f.normal[0] + outward[1] * f.normal[1] <= 0.0 {
                return Err(Error::InvalidMesh(format!("boundary facet {i} normal points inward")));
            }
            if boundary_keys.insert(key, i).is_some() {
                return Err(Error::InvalidMesh(format!("boundary facet {i} is duplicated")));
            }
        }
        for (key, cells) in &owners {
            match cells.len() {
                1 if !boundary_keys.contains_key(key) => {
                    return Err(Error::InvalidMesh(format!("facet {key:?} has one cell but is not tagged")));
                }
                1 | 2 => {}
                n => return Err(Error::InvalidMesh(format!("facet {key:?} is shared by {n} cells"))),
            }
        }

        // connectivity through shared facets
        let mut adjacency = vec![Vec::new(); self.cells.len()];
        for cells in owners.values() {
            if let [a, b] = cells[..] {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for &d in &adjacency[c] {
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        if count != self.cells.len() {
            return Err(Error::InvalidMesh("cells are not connected".into()));
        }
        Ok(())
    }

    fn outward_direction(&self, cell: usize, facet: &[usize]) -> Point {
        let g = &self.geometry[cell];
        let mut mid = [0.0; 2];
        for &v in facet {
            mid[0] += self.vertices[v][0] / facet.len() as f64;
            mid[1] += self.vertices[v][1] / facet.len() as f64;
        }
        [mid[0] - g.barycenter[0], mid[1] - g.barycenter[1]]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary_flag[v]
    }

    /// Boundary vertex indices in ascending order.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertex_boundary_flag[v])
            .collect()
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.measure).sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary_facets.iter().map(|f| f.measure).sum()
    }

    pub fn max_diameter(&self) -> f64 {
        self.geometry.iter().fold(0.0, |m, g| m.max(g.diameter))
    }

    /// Uniform refinement: cells are bisected (1D) or split into four (2D)
    /// through edge midpoints. Boundary facets are split accordingly.
    pub fn refine_uniform(&self) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        match self.dim {
            1 => {
                let mut cells = Vec::with_capacity(2 * self.cells.len());
                for c in &self.cells {
                    let m = midpoint(c[0], c[1], &mut vertices);
                    cells.push(vec![c[0], m]);
                    cells.push(vec![m, c[1]]);
                }
                Self::new(1, vertices, cells, self.boundary_facets.clone())
            }
            _ => {
                let mut cells = Vec::with_capacity(4 * self.cells.len());
                for c in &self.cells {
                    let (a, b, cc) = (c[0], c[1], c[2]);
                    let ab = midpoint(a, b, &mut vertices);
                    let bc = midpoint(b, cc, &mut vertices);
                    let ca = midpoint(cc, a, &mut vertices);
                    cells.push(vec![a, ab, ca]);
                    cells.push(vec![ab, b, bc]);
                    cells.push(vec![ca, bc, cc]);
                    cells.push(vec![ab, bc, ca]);
                }
                let mut facets = Vec::with_capacity(2 * self.boundary_facets.len());
                for f in &self.boundary_facets {
                    let (a, b) = (f.vertices[0], f.vertices[1]);
                    let m = midpoint(a, b, &mut vertices);
                    for (p, q) in [(a, m), (m, b)] {
                        facets.push(BoundaryFacet {
                            vertices: vec![p, q],
                            normal: f.normal,
                            measure: distance(vertices[p], vertices[q]),
                        });
                    }
                }
                Self::new(2, vertices, cells, facets)
            }
        }
    }
}

/// Uniform mesh of `[a, b]` with `n_cells` cells. Boundary facets are the two
/// endpoints, each with counting measure 1.
pub fn build_interval_mesh(a: f64, b: f64, n_cells: usize) -> Result<Mesh> {
    if !(a < b) {
        return Err(Error::DegenerateInterval { a, b });
    }
    if n_cells == 0 {
        return Err(Error::InvalidArgument("n_cells must be at least 1".into()));
    }
    let h = (b - a) / n_cells as f64;
    let vertices: Vec<Point> = (0..=n_cells)
        .map(|i| {
            if i == n_cells {
                [b, 0.0]
            } else {
                [a + i as f64 * h, 0.0]
            }
        })
        .collect();
    let cells = (0..n_cells).map(|i| vec![i, i + 1]).collect();
    let facets = vec![
        BoundaryFacet {
            vertices: vec![0],
            normal: [-1.0, 0.0],
            measure: 1.0,
        },
        BoundaryFacet {
            vertices: vec![n_cells],
            normal: [1.0, 0.0],
            measure: 1.0,
        },
    ];
    Mesh::new(1, vertices, cells, facets)
}

/// Structured triangulation of `[x0, x1] × [y0, y1]` with `nx × ny` squares,
/// each cut along its lower-left to upper-right diagonal.
pub fn build_rectangle_mesh(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(x0 < x1) {
        return Err(Error::DegenerateInterval { a: x0, b: x1 });
    }
    if !(y0 < y1) {
        return Err(Error::DegenerateInterval { a: y0, b: y1 });
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("grid needs at least one cell per direction".into()));
    }
    let coord = |lo: f64, hi: f64, n: usize, i: usize| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([coord(x0, x1, nx, i), coord(y0, y1, ny, j)]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::from_triangles(vertices, cells)
}

/// Nodal values of `u` at the boundary vertices, in [`Mesh::boundary_vertices`] order.
pub fn trace(mesh: &Mesh, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != mesh.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_vertices(),
            got: u.len(),
        });
    }
    Ok(mesh.boundary_vertices().into_iter().map(|v| u[v]).collect())
}

pub fn distance(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

fn local_facets(cell: &[usize]) -> Vec<Vec<usize>> {
    match cell.len() {
        2 => vec![vec![cell[0]], vec![cell[1]]],
        _ => vec![
            vec![cell[0], cell[1]],
            vec![cell[1], cell[2]],
            vec![cell[2], cell[0]],
        ],
    }
}

fn signed_measure(dim: usize, v: &[Point], cell: &[usize]) -> f64 {
    if dim == 1 {
        v[cell[1]][0] - v[cell[0]][0]
    } else {
        let (p0, p1, p2) = (v[cell[0]], v[cell[1]], v[cell[2]]);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }
}

fn cell_geometry(dim: usize, v: &[Point], cell: &[usize]) -> CellGeometry {
    if dim == 1 {
        let (x0, x1) = (v[cell[0]][0], v[cell[1]][0]);
        let len = x1 - x0;
        return CellGeometry {
            measure: len,
            barycenter: [0.5 * (x0 + x1), 0.0],
            gradients: vec![[-1.0 / len, 0.0], [1.0 / len, 0.0]],
            diameter: len.abs(),
        };
    }
    let (p0, p1, p2) = (v[cell[0]], v[cell[1]], v[cell[2]]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let gradients = vec![
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    CellGeometry {
        measure: 0.5 * det,
        barycenter: [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0],
        gradients,
        diameter: distance(p0, p1).max(distance(p1, p2)).max(distance(p2, p0)),
    }
}

/// Edges used by exactly one (positively oriented) triangle, with outward normals.
fn derive_boundary_facets(vertices: &[Point], cells: &[Vec<usize>]) -> Vec<BoundaryFacet> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for c in cells {
        for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut facets = Vec::new();
    for c in cells {
        for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
            if count[&(a.min(b), a.max(b))] == 1 {
                // counterclockwise cell: the outward normal is the right-hand perpendicular
                let (p, q) = (vertices[a], vertices[b]);
                let len = distance(p, q);
                facets.push(BoundaryFacet {
                    vertices: vec![a, b],
                    normal: [(q[1] - p[1]) / len, -(q[0] - p[0]) / len],
                    measure: len,
                });
            }
        }
    }
    facets
}
