//! Line-oriented mesh text format:
//!
//! ```text
//! 2
//! v 0.0 0.0
//! c 0 1 2
//! bf 0 1 0.0 -1.0
//! ```
//!
//! Floats are written with 17 significant digits so that a write/read cycle
//! reproduces every coordinate bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{distance, BoundaryFacet, Mesh, Point};
use crate::error::{Error, Result};

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut out = String::new();
    let dim = mesh.dim();
    writeln!(out, "{dim}").unwrap();
    for p in mesh.vertices() {
        if dim == 1 {
            writeln!(out, "v {}", format_f64(p[0])).unwrap();
        } else {
            writeln!(out, "v {} {}", format_f64(p[0]), format_f64(p[1])).unwrap();
        }
    }
    for c in mesh.cells() {
        let idx: Vec<String> = c.iter().map(usize::to_string).collect();
        writeln!(out, "c {}", idx.join(" ")).unwrap();
    }
    for f in mesh.boundary_facets() {
        let idx: Vec<String> = f.vertices.iter().map(usize::to_string).collect();
        if dim == 1 {
            writeln!(out, "bf {} {}", idx.join(" "), format_f64(f.normal[0])).unwrap();
        } else {
            writeln!(out, "bf {} {} {}", idx.join(" "), format_f64(f.normal[0]), format_f64(f.normal[1])).unwrap();
        }
    }
    out
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
    let dim: usize = header.parse().map_err(|_| err(first, format!("bad dimension '{header}'")))?;
    if dim != 1 && dim != 2 {
        return Err(err(first, format!("unsupported dimension {dim}")));
    }

    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::new();
    let mut raw_facets: Vec<(usize, Vec<usize>, Point)> = Vec::new();
    for (n, line) in lines {
        let mut tok = line.split_whitespace();
        let tag = tok.next().unwrap_or_default();
        let rest: Vec<&str> = tok.collect();
        let floats = |s: &[&str]| -> Result<Vec<f64>> {
            s.iter()
                .map(|t| t.parse::<f64>().map_err(|_| err(n, format!("bad number '{t}'"))))
                .collect()
        };
        let ints = |s: &[&str]| -> Result<Vec<usize>> {
            s.iter()
                .map(|t| t.parse::<usize>().map_err(|_| err(n, format!("bad index '{t}'"))))
                .collect()
        };
        match tag {
            "v" if rest.len() == dim => {
                let x = floats(&rest)?;
                vertices.push([x[0], if dim == 2 { x[1] } else { 0.0 }]);
            }
            "c" if rest.len() == dim + 1 => cells.push(ints(&rest)?),
            "bf" if rest.len() == 2 * dim => {
                let idx = ints(&rest[..dim])?;
                let nrm = floats(&rest[dim..])?;
                raw_facets.push((n, idx, [nrm[0], if dim == 2 { nrm[1] } else { 0.0 }]));
            }
            _ => return Err(err(n, format!("unrecognized line '{line}'"))),
        }
    }
    let mut facets = Vec::with_capacity(raw_facets.len());
    for (n, idx, normal) in raw_facets {
        if let Some(&v) = idx.iter().find(|&&v| v >= vertices.len()) {
            return Err(err(n, format!("facet references vertex {v}")));
        }
        let measure = if dim == 1 {
            1.0
        } else {
            distance(vertices[idx[0]], vertices[idx[1]])
        };
        facets.push(BoundaryFacet {
            vertices: idx,
            normal,
            measure,
        });
    }
    Mesh::new(dim, vertices, cells, facets)
}
