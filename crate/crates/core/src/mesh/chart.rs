use nalgebra::Matrix2;
use rand::Rng;

use super::Point;
use crate::error::{Error, Result};

/// Piecewise-linear function of one variable, extended linearly past its
/// first and last knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidArgument(
                "piecewise-linear table needs at least two (knot, value) pairs".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values })
    }

    /// The zero function on `[-r, r]`.
    pub fn zero(r: f64) -> Self {
        Self::new(vec![-r, r], vec![0.0, 0.0]).expect("valid table")
    }

    /// Linear function `slope·y`.
    pub fn linear(r: f64, slope: f64) -> Self {
        Self::new(vec![-r, r], vec![-slope * r, slope * r]).expect("valid table")
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior knots, where the derivative jumps.
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    fn segment_slope(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / (self.knots[k + 1] - self.knots[k])
    }

    /// Index of the segment used for `y`, taking the left segment at knots.
    fn segment(&self, y: f64) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.partition_point(|&k| k < y) {
            0 => 0,
            i => (i - 1).min(last),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let k = self.segment(y);
        self.values[k] + self.segment_slope(k) * (y - self.knots[k])
    }

    /// Derivative with the left-limit convention at breakpoints; the flag is
    /// set when `y` sits exactly on an interior knot.
    pub fn slope(&self, y: f64) -> (f64, bool) {
        let on_breakpoint = self.breakpoints().contains(&y);
        (self.segment_slope(self.segment(y)), on_breakpoint)
    }

    pub fn lipschitz_constant(&self) -> f64 {
        (0..self.knots.len() - 1).fold(0.0, |m, k| m.max(self.segment_slope(k).abs()))
    }
}

/// Derivative value together with the breakpoint flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianEval {
    pub matrix: Matrix2<f64>,
    pub on_breakpoint: bool,
}

/// Local description of the boundary near `anchor`: after rotating by
/// `rotation` and translating, the domain is the epigraph of `psi` inside the
/// cylinder `B(0,r) × (−r,r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChart {
    anchor: Point,
    rotation: Matrix2<f64>,
    radius: f64,
    psi: PiecewiseLinear,
    lipschitz_constant: f64,
}

impl BoundaryChart {
    pub fn new(anchor: Point, rotation: Matrix2<f64>, radius: f64, psi: PiecewiseLinear) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("chart radius must be positive, got {radius}")));
        }
        let defect = (rotation * rotation.transpose() - Matrix2::identity()).abs().max();
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        let lipschitz_constant = psi.lipschitz_constant();
        Ok(Self {
            anchor,
            rotation,
            radius,
            psi,
            lipschitz_constant,
        })
    }

    /// Chart with identity rotation anchored at the origin.
    pub fn standard(radius: f64, psi: PiecewiseLinear) -> Result<Self> {
        Self::new([0.0, 0.0], Matrix2::identity(), radius, psi)
    }

    /// Chart centred at vertex `k` of a simple polygon. The local first axis is
    /// the mean tangent at the vertex; `psi` is built from the two adjacent
    /// edges and is a graph as long as the interior angle is not degenerate.
    pub fn at_polygon_vertex(polygon: &[Point], k: usize, radius: f64) -> Result<Self> {
        let n = polygon.len();
        let mut poly = polygon.to_vec();
        let mut k = k;
        let area2: f64 = (0..n)
            .map(|i| {
                let (p, q) = (poly[i], poly[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        if area2 < 0.0 {
            poly.reverse();
            k = n - 1 - k;
        }
        let unit = |p: Point, q: Point| {
            let l = (q[0] - p[0]).hypot(q[1] - p[1]);
            [(q[0] - p[0]) / l, (q[1] - p[1]) / l]
        };
        let z = poly[k];
        let d_in = unit(poly[(k + n - 1) % n], z);
        let d_out = unit(z, poly[(k + 1) % n]);
        let t_raw = [d_in[0] + d_out[0], d_in[1] + d_out[1]];
        let tl = t_raw[0].hypot(t_raw[1]);
        if tl < 1e-12 {
            return Err(Error::InvalidArgument(format!("vertex {k} has a degenerate angle")));
        }
        let t = [t_raw[0] / tl, t_raw[1] / tl];
        let nrm = [-t[1], t[0]];
        let dot = |a: Point, b: Point| a[0] * b[0] + a[1] * b[1];
        let slope_in = dot(d_in, nrm) / dot(d_in, t);
        let slope_out = dot(d_out, nrm) / dot(d_out, t);
        let reach = 2.0 * radius * (1.0 + slope_in.abs().max(slope_out.abs()));
        let psi = PiecewiseLinear::new(vec![-reach, 0.0, reach], vec![-reach * slope_in, 0.0, reach * slope_out])?;
        let rotation = Matrix2::new(t[0], t[1], nrm[0], nrm[1]);
        Self::new(z, rotation, radius, psi)
    }

    pub fn anchor(&self) -> Point {
        self.anchor
    }

    pub fn rotation(&self) -> &Matrix2<f64> {
        &self.rotation
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn psi(&self) -> &PiecewiseLinear {
        &self.psi
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz_constant
    }

    fn in_cylinder(&self, y: f64, s: f64) -> bool {
        let slack = self.radius * (1.0 + 1e-12);
        y.abs() <= slack && s.abs() <= slack
    }

    /// `O(x − z)`
    pub fn to_local(&self, x: Point) -> Point {
        let d = nalgebra::Vector2::new(x[0] - self.anchor[0], x[1] - self.anchor[1]);
        let p = self.rotation * d;
        [p[0], p[1]]
    }

    /// `z + Oᵀp`
    pub fn to_global(&self, p: Point) -> Point {
        let x = self.rotation.transpose() * nalgebra::Vector2::new(p[0], p[1]);
        [x[0] + self.anchor[0], x[1] + self.anchor[1]]
    }

    /// `T(y, s) = (y, ψ(y) + s)` in chart coordinates, mapped to the domain frame.
    pub fn map_t(&self, y: f64, s: f64) -> Result<Point> {
        if !self.in_cylinder(y, s) {
            return Err(Error::OutsideChart { y, s, r: self.radius });
        }
        Ok(self.map_t_unchecked(y, s))
    }

    pub(crate) fn map_t_unchecked(&self, y: f64, s: f64) -> Point {
        self.to_global([y, self.psi.eval(y) + s])
    }

    /// `T⁻¹(x) = (y, s)`
    pub fn inverse_t(&self, x: Point) -> Result<(f64, f64)> {
        let p = self.to_local(x);
        let (y, s) = (p[0], p[1] - self.psi.eval(p[0]));
        if !self.in_cylinder(y, s) {
            return Err(Error::OutsideChart { y, s, r: self.radius });
        }
        Ok((y, s))
    }

    pub fn contains(&self, x: Point) -> bool {
        self.inverse_t(x).is_ok()
    }

    /// Checks `|ψ(y) − ψ(y′)| ≤ L·|y − y′|` on random pairs in `(−r, r)`.
    pub fn check_lipschitz(&self, pairs: usize, rng: &mut impl Rng) -> bool {
        let r = self.radius;
        let l = self.lipschitz_constant;
        (0..pairs).all(|_| {
            let (y, y2) = (rng.gen_range(-r..r), rng.gen_range(-r..r));
            (self.psi.eval(y) - self.psi.eval(y2)).abs() <= l * (y - y2).abs() * (1.0 + 1e-12) + 1e-15
        })
    }

    /// Samples the cylinder and counts points whose membership in the domain
    /// (as reported by `inside`) disagrees with `s > 0`. Points within
    /// `band·r` of the graph are skipped.
    pub fn count_membership_mismatches(
        &self,
        inside: impl Fn(Point) -> bool,
        samples: usize,
        band: f64,
        rng: &mut impl Rng,
    ) -> usize {
        let r = self.radius;
        let mut mismatches = 0;
        for _ in 0..samples {
            let y = rng.gen_range(-r..r);
            let s = rng.gen_range(-r..r);
            if s.abs() < band * r {
                continue;
            }
            if inside(self.map_t_unchecked(y, s)) != (s > 0.0) {
                mismatches += 1;
            }
        }
        mismatches
    }
}
