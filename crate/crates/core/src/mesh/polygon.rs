use super::{distance, Mesh, Point};
use crate::error::{Error, Result};

pub fn polygon_area(polygon: &[Point]) -> f64 {
    signed_area(polygon).abs()
}

pub fn polygon_perimeter(polygon: &[Point]) -> f64 {
    (0..polygon.len())
        .map(|i| distance(polygon[i], polygon[(i + 1) % polygon.len()]))
        .sum()
}

fn signed_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (polygon[i], polygon[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Rejects polygons with fewer than three vertices, zero area, or any pair of
/// edges that touch other than at a shared endpoint.
pub fn check_simple_polygon(polygon: &[Point]) -> Result<()> {
    let n = polygon.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("polygon has {n} vertices")));
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (p1, p2) = (polygon[i], polygon[(i + 1) % n]);
            let (q1, q2) = (polygon[j], polygon[(j + 1) % n]);
            if adjacent {
                // adjacent edges may only share their common vertex
                let (shared, a, b) = if j == i + 1 { (p2, p1, q2) } else { (p1, p2, q1) };
                if cross(shared, a, b) == 0.0 && (a[0] - shared[0]) * (b[0] - shared[0]) + (a[1] - shared[1]) * (b[1] - shared[1]) > 0.0 {
                    return Err(Error::SelfIntersecting(i, j));
                }
            } else if segments_intersect(p1, p2, q1, q2) {
                return Err(Error::SelfIntersecting(i, j));
            }
        }
    }
    if polygon_area(polygon) <= 0.0 {
        return Err(Error::InvalidArgument("polygon has zero area".into()));
    }
    Ok(())
}

/// Even-odd point membership; points on the boundary are unspecified.
pub fn point_in_polygon(polygon: &[Point], p: Point) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn triangle_quality(a: Point, b: Point, c: Point) -> f64 {
    // 4√3·area / Σ edge², equals 1 for equilateral triangles
    let area = 0.5 * cross(a, b, c);
    let s = distance(a, b).powi(2) + distance(b, c).powi(2) + distance(c, a).powi(2);
    4.0 * 3f64.sqrt() * area / s
}

fn strictly_inside_triangle(a: Point, b: Point, c: Point, p: Point) -> bool {
    cross(a, b, p) > 0.0 && cross(b, c, p) > 0.0 && cross(c, a, p) > 0.0
}

fn on_triangle_boundary(a: Point, b: Point, c: Point, p: Point) -> bool {
    [(a, b), (b, c), (c, a)]
        .iter()
        .any(|&(s, t)| cross(s, t, p) == 0.0 && on_segment(s, t, p) && p != s && p != t)
}

/// Ear clipping of a simple counterclockwise polygon, picking the best-shaped
/// ear at every step.
fn ear_clip(polygon: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut remaining: Vec<usize> = (0..polygon.len()).collect();
    let mut triangles = Vec::with_capacity(polygon.len() - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..m {
            let (ia, ib, ic) = (remaining[(k + m - 1) % m], remaining[k], remaining[(k + 1) % m]);
            let (a, b, c) = (polygon[ia], polygon[ib], polygon[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = remaining.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let p = polygon[j];
                    strictly_inside_triangle(a, b, c, p) || on_triangle_boundary(a, b, c, p)
                }
            });
            if blocked {
                continue;
            }
            let q = triangle_quality(a, b, c);
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((k, q));
            }
        }
        let (k, _) = best.ok_or_else(|| Error::InvalidMesh("ear clipping found no ear".into()))?;
        triangles.push([remaining[(k + m - 1) % m], remaining[k], remaining[(k + 1) % m]]);
        remaining.remove(k);
    }
    triangles.push([remaining[0], remaining[1], remaining[2]]);
    Ok(triangles)
}

/// Conforming triangulation of a simple polygon with every cell diameter at
/// most `2·target_h`: ear clipping followed by uniform red refinement.
pub fn build_polygon_mesh(polygon: &[Point], target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0) {
        return Err(Error::InvalidArgument(format!("target_h must be positive, got {target_h}")));
    }
    check_simple_polygon(polygon)?;
    let mut loop_ccw = polygon.to_vec();
    if signed_area(&loop_ccw) < 0.0 {
        loop_ccw.reverse();
    }
    let triangles = ear_clip(&loop_ccw)?;
    let mut mesh = Mesh::from_triangles(loop_ccw, triangles)?;
    while mesh.max_diameter() > 2.0 * target_h {
        mesh = mesh.refine_uniform()?;
    }
    Ok(mesh)
}
