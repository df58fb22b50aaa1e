//! Planar geometry shared by the cell and background-charge integrals:
//! polygons, radial kernels, and exact-in-radius integration of radial
//! kernels over polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// A radially symmetric kernel F(|y - p|) with a closed-form radial moment
/// Φ(R) = ∫_0^R F(r) r dr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialKernel {
    /// r^{-s}, integrable in the plane for s < 2.
    Power(f64),
    /// -log r.
    NegLog,
    /// log r averaged over a uniform disk of the given radius centred at the
    /// origin: log r outside, log a - (a² - r²)/(2a²) inside.
    DiskAveragedLog(f64),
}

impl RadialKernel {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            RadialKernel::Power(s) => r.powf(-s),
            RadialKernel::NegLog => -r.ln(),
            RadialKernel::DiskAveragedLog(a) => {
                if r >= a {
                    r.ln()
                } else {
                    a.ln() - (a * a - r * r) / (2.0 * a * a)
                }
            }
        }
    }

    /// Φ(R) = ∫_0^R F(r) r dr.
    pub fn radial_moment(&self, big_r: f64) -> f64 {
        if big_r <= 0.0 {
            return 0.0;
        }
        match *self {
            RadialKernel::Power(s) => big_r.powf(2.0 - s) / (2.0 - s),
            RadialKernel::NegLog => -0.5 * big_r * big_r * big_r.ln() + 0.25 * big_r * big_r,
            RadialKernel::DiskAveragedLog(a) => {
                let inner = |r: f64| (a.ln() - 0.5) * 0.5 * r * r + r.powi(4) / (8.0 * a * a);
                if big_r <= a {
                    inner(big_r)
                } else {
                    let log_moment = |r: f64| 0.5 * r * r * r.ln() - 0.25 * r * r;
                    inner(a) + log_moment(big_r) - log_moment(a)
                }
            }
        }
    }

    fn breakpoint(&self) -> Option<f64> {
        match *self {
            RadialKernel::DiskAveragedLog(a) => Some(a),
            _ => None,
        }
    }
}

/// ∫ over ψ of Φ(h / sin ψ), ψ ∈ [lo, hi] ⊂ (0, π/2].
fn angular_piece(kernel: &RadialKernel, h: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let f = |psi: f64| kernel.radial_moment(h / psi.sin());
    let mut cuts = vec![lo, hi];
    if let Some(a) = kernel.breakpoint() {
        if a > h {
            let psi_a = (h / a).asin();
            if psi_a > lo && psi_a < hi {
                cuts.insert(1, psi_a);
            }
        }
    }
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quad::integrate(f, w[0], w[1], tol / (cuts.len() - 1) as f64)?.value;
    }
    Ok(total)
}

/// Signed integral of F(|y - p|) over the triangle (p, a, b); positive when
/// (p, a, b) is counter-clockwise.
pub fn triangle_radial_integral(kernel: &RadialKernel, p: Point2, a: Point2, b: Point2, tol: f64) -> Result<f64> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let u = d / len;
    let pa = a - p;
    let cross = pa.perp(&u);
    let h = cross.abs();
    let scale = len.max(pa.norm());
    if h <= 1e-15 * scale {
        return Ok(0.0);
    }
    let sign = cross.signum();
    let ta = pa.dot(&u);
    let tb = ta + len;
    let mut total = 0.0;
    // t >= 0 part: ψ = atan2(h, t) decreases from atan2(h, t_lo) to atan2(h, t_hi).
    if tb > 0.0 {
        let t_lo = ta.max(0.0);
        total += angular_piece(kernel, h, h.atan2(tb), h.atan2(t_lo), tol * 0.5)?;
    }
    if ta < 0.0 {
        let t_hi = (-ta).max(0.0);
        let t_lo = (-tb).max(0.0);
        total += angular_piece(kernel, h, h.atan2(t_hi), h.atan2(t_lo), tol * 0.5)?;
    }
    Ok(sign * total)
}

/// A simple polygon with vertices in counter-clockwise order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    /// Builds a polygon, reorienting clockwise input to counter-clockwise.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Invalid("a polygon needs at least three vertices".into()));
        }
        let area = signed_area(&vertices);
        if area == 0.0 || !area.is_finite() {
            return Err(Error::Invalid("degenerate polygon".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let mut c = Vec2::zeros();
        let mut a2 = 0.0;
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let cr = p.coords.perp(&q.coords);
            a2 += cr;
            c += (p.coords + q.coords) * cr;
        }
        Point2::from(c / (3.0 * a2))
    }

    pub fn translated(&self, t: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + t).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| Point2::from(v.coords * factor)).collect(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Point-in-polygon by winding number; boundary points may go either way.
    pub fn contains(&self, p: Point2) -> bool {
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            let side = (b - a).perp(&(p - a));
            if a.y <= p.y {
                if b.y > p.y && side > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && side < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Max distance from the origin to a vertex.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.coords.norm()).fold(0.0, f64::max)
    }

    /// Ear-clipping triangulation (fan for convex input).
    pub fn triangulate(&self) -> Vec<[Point2; 3]> {
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        let v = &self.vertices;
        let mut out = Vec::with_capacity(v.len() - 2);
        let mut guard = 0;
        while idx.len() > 3 && guard < 10_000 {
            guard += 1;
            let n = idx.len();
            let mut clipped = false;
            for i in 0..n {
                let (ia, ib, ic) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
                let (a, b, c) = (v[ia], v[ib], v[ic]);
                if (b - a).perp(&(c - b)) <= 0.0 {
                    continue;
                }
                let blocked = idx
                    .iter()
                    .any(|&j| j != ia && j != ib && j != ic && point_in_triangle(v[j], a, b, c));
                if !blocked {
                    out.push([a, b, c]);
                    idx.remove(i);
                    clipped = true;
                    break;
                }
            }
            if !clipped {
                break;
            }
        }
        if idx.len() == 3 {
            out.push([v[idx[0]], v[idx[1]], v[idx[2]]]);
        }
        out
    }

    /// Rotation about the origin by `angle` radians.
    pub fn rotated(&self, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| Point2::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y))
                .collect(),
        }
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b, c) = (self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]);
            (b - a).perp(&(c - b)) >= -1e-12 * (b - a).norm() * (c - b).norm()
        })
    }

    /// Distance from p to the boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Area of the intersection with another polygon; `clip` must be convex.
    pub fn intersection_area(&self, clip: &Polygon) -> f64 {
        let mut poly = self.vertices.clone();
        for (a, b) in clip.edges() {
            if poly.is_empty() {
                break;
            }
            poly = clip_to_left(&poly, a, b);
        }
        if poly.len() < 3 {
            0.0
        } else {
            signed_area(&poly)
        }
    }

    /// ∫_P F(|y - p|) dy.
    pub fn radial_integral(&self, kernel: &RadialKernel, p: Point2, tol: f64) -> Result<f64> {
        edges_radial_integral(self.edges(), self.vertices.len(), kernel, p, tol)
    }

    /// Second-moment tensor ∫_P y yᵀ dy about the origin.
    pub fn second_moment(&self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (a, b) in self.edges() {
            let cr = a.coords.perp(&b.coords);
            m[0][0] += cr * (a.x * a.x + a.x * b.x + b.x * b.x);
            m[1][1] += cr * (a.y * a.y + a.y * b.y + b.y * b.y);
            m[0][1] += cr * (2.0 * a.x * a.y + a.x * b.y + b.x * a.y + 2.0 * b.x * b.y);
        }
        m[0][0] /= 12.0;
        m[1][1] /= 12.0;
        m[0][1] /= 24.0;
        m[1][0] = m[0][1];
        m
    }
}

/// Σ over directed edges of the signed fan-triangle radial integral about `p`.
pub fn edges_radial_integral<I>(edges: I, count: usize, kernel: &RadialKernel, p: Point2, tol: f64) -> Result<f64>
where
    I: Iterator<Item = (Point2, Point2)>,
{
    let per_edge = tol / count.max(1) as f64;
    let mut total = 0.0;
    for (a, b) in edges {
        total += triangle_radial_integral(kernel, p, a, b, per_edge)?;
    }
    Ok(total)
}

/// Distance from p to the segment [a, b].
pub fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
    };
    (p - (a + d * t)).norm()
}

/// Sutherland–Hodgman step: keeps the part of `poly` left of the directed line a → b.
fn clip_to_left(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let d = b - a;
    let side = |p: Point2| d.perp(&(p - a));
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut a = 0.0;
    for i in 0..n {
        a += v[i].coords.perp(&v[(i + 1) % n].coords);
    }
    0.5 * a
}

fn point_in_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    let d1 = (b - a).perp(&(p - a));
    let d2 = (c - b).perp(&(p - b));
    let d3 = (a - c).perp(&(p - c));
    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
}
