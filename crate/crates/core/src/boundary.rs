//! Boundary-integral evaluation of region and region-pair integrals of
//! radial kernels over polygonal regions.

use crate::error::Result;
use crate::geometry::{Point2, Polygon, RadialKernel, Vec2};
use crate::quad;

/// Region integrals of a Riesz or logarithmic kernel reduced to the boundary. With ΔH = F and Δ²K = F,
///
/// ```text
/// ∫_Ω F(p - y) dy         = -∮ n·∇H(p - y) dσ
/// ∬_{Ω×Ω'} F(x + y - z)  = -∮∮ n_yᵀ ∇²K(x + y - z) n_z dσ_y dσ_z
/// ```
///
/// and both integrands are bounded for 0 <= s < 2.
pub(crate) struct BoundaryIntegrals {
    edges: Vec<Edge>,
    kernel: RadialKernel,
}

#[derive(Clone, Copy)]
pub(crate) struct Edge {
    a: Point2,
    d: Vec2,
    len: f64,
    normal: Vec2,
}

impl BoundaryIntegrals {
    pub(crate) fn from_polygon(polygon: &Polygon, kernel: RadialKernel) -> Self {
        Self::from_edges(polygon.edges(), kernel)
    }

    /// Directed boundary edges, counter-clockwise around the region.
    pub(crate) fn from_edges<I: IntoIterator<Item = (Point2, Point2)>>(edges: I, kernel: RadialKernel) -> Self {
        debug_assert!(!matches!(kernel, RadialKernel::DiskAveragedLog(_)));
        let edges = edges
            .into_iter()
            .map(|(a, b)| {
                let d = b - a;
                let len = d.norm();
                // counter-clockwise boundary: outward normal is the right-hand perpendicular
                Edge {
                    a,
                    d,
                    len,
                    normal: Vec2::new(d.y, -d.x) / len,
                }
            })
            .collect();
        Self { edges, kernel }
    }

    pub(crate) fn kernel(&self) -> RadialKernel {
        self.kernel
    }

    /// H'(r)/r.
    fn h_prime_over_r(&self, r: f64) -> f64 {
        match self.kernel {
            RadialKernel::Power(s) => r.powf(-s) / (2.0 - s),
            RadialKernel::NegLog => 0.25 * (1.0 - 2.0 * r.ln()),
            RadialKernel::DiskAveragedLog(_) => unreachable!("not a Riesz kernel"),
        }
    }

    /// n₁ᵀ ∇²K(w) n₂.
    fn hessian_form(&self, w: Vec2, n1: Vec2, n2: Vec2) -> f64 {
        let r2 = w.norm_squared();
        if r2 == 0.0 {
            return 0.0;
        }
        let (p1, p2, nn) = (n1.dot(&w), n2.dot(&w), n1.dot(&n2));
        match self.kernel {
            RadialKernel::Power(s) => {
                let c = 1.0 / ((4.0 - s) * (2.0 - s) * (2.0 - s));
                c * r2.powf(-0.5 * s) * ((2.0 - s) * p1 * p2 + r2 * nn)
            }
            RadialKernel::NegLog => {
                let lr = 0.5 * r2.ln();
                (0.09375 - 0.125 * lr) * p1 * p2 + r2 * (0.078125 - 0.0625 * lr) * nn
            }
            RadialKernel::DiskAveragedLog(_) => unreachable!("not a Riesz kernel"),
        }
    }

    /// ∫_Ω F(p - y) dy with an error estimate.
    pub(crate) fn single(&self, p: Point2, tol: f64) -> Result<(f64, f64)> {
        let per = tol / self.edges.len() as f64;
        let mut value = 0.0;
        let mut error = 0.0;
        for e in &self.edges {
            let h = e.normal.dot(&(p - e.a));
            if h.abs() <= 1e-300 {
                continue;
            }
            let foot = ((p - e.a).dot(&e.d) / (e.len * e.len)).clamp(0.0, 1.0);
            let f = |t: f64| {
                let r = (p - (e.a + e.d * t)).norm();
                self.h_prime_over_r(r)
            };
            let scale = e.len * h.abs();
            for (lo, hi) in split_at(0.0, 1.0, &[foot]) {
                let q = quad::integrate(f, lo, hi, per / scale)?;
                value -= h * e.len * q.value;
                error += scale * q.error;
            }
        }
        Ok((value, error))
    }

    /// ∬ F(x + y - z) dy dz over y in this region and z in `other`.
    pub(crate) fn double(&self, other: &BoundaryIntegrals, x: Point2, tol: f64) -> Result<(f64, f64)> {
        let per = tol / (self.edges.len() * other.edges.len()) as f64;
        let mut value = 0.0;
        let mut error = 0.0;
        for ei in &self.edges {
            for ej in &other.edges {
                let jac = ei.len * ej.len;
                let outer_tol = per / jac;
                let inner_tol = 0.1 * outer_tol;
                // w(t, u) = c + t d_i - u d_j
                let c = x.coords + ei.a.coords - ej.a.coords;
                let dj2 = ej.d.norm_squared();
                let mut failure = None;
                let inner = |t: f64| {
                    let base = c + ei.d * t;
                    let foot = (base.dot(&ej.d) / dj2).clamp(0.0, 1.0);
                    let g = |u: f64| self.hessian_form(base - ej.d * u, ei.normal, ej.normal);
                    let mut sum = 0.0;
                    for (lo, hi) in split_at(0.0, 1.0, &[foot]) {
                        match quad::integrate(g, lo, hi, inner_tol) {
                            Ok(q) => sum += q.value,
                            Err(err) => {
                                failure.get_or_insert(err);
                            }
                        }
                    }
                    sum
                };
                let breaks = outer_breakpoints(c, ei.d, ej.d);
                let mut inner = inner;
                for (lo, hi) in split_at(0.0, 1.0, &breaks) {
                    let q = quad::integrate(&mut inner, lo, hi, outer_tol)?;
                    value -= jac * q.value;
                    error += jac * (q.error + inner_tol * (hi - lo));
                }
                if let Some(err) = failure {
                    return Err(err);
                }
            }
        }
        Ok((value, error))
    }
}

/// Splits [lo, hi] at the interior points of `cuts`.
fn split_at(lo: f64, hi: f64, cuts: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > lo + 1e-12 && *c < hi - 1e-12).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut prev = lo;
    for p in pts {
        out.push((prev, p));
        prev = p;
    }
    out.push((prev, hi));
    out
}

/// Parameters t where the inner integrand of the double boundary integral
/// changes character: the zero of c + t dᵢ - u dⱼ and the t where the
/// closest u leaves [0, 1].
fn outer_breakpoints(c: Vec2, di: Vec2, dj: Vec2) -> Vec<f64> {
    let mut out = Vec::new();
    let det = -di.perp(&dj);
    let scale = di.norm() * dj.norm();
    if det.abs() > 1e-12 * scale {
        // t dᵢ - u dⱼ = -c
        out.push(c.perp(&dj) / det);
    }
    let dj2 = dj.norm_squared();
    let slope = di.dot(&dj) / dj2;
    if slope.abs() > 1e-12 {
        let u0 = c.dot(&dj) / dj2;
        out.push((0.0 - u0) / slope);
        out.push((1.0 - u0) / slope);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn triangle_fan_double(ints: &BoundaryIntegrals, cell: &Polygon, x: Point2, order: usize) -> f64 {
        // Independent oracle: product Gauss rule over fan triangles of Q × Q.
        let nodes: Vec<(Point2, f64)> = cell
            .edges()
            .flat_map(|(a, b)| quad::triangle_rule(Point2::origin(), a, b, order))
            .collect();
        let mut total = 0.0;
        for (y, wy) in &nodes {
            for (z, wz) in &nodes {
                total += wy * wz * ints.kernel.value((x.coords + y.coords - z.coords).norm());
            }
        }
        total
    }

    #[test]
    fn boundary_single_matches_exact_radial_integral() {
        let cell = Lattice::triangular().wigner_seitz().unwrap().polygon();
        for kernel in [RadialKernel::Power(0.5), RadialKernel::Power(1.7), RadialKernel::NegLog] {
            let ints = BoundaryIntegrals::from_polygon(&cell, kernel);
            for p in [
                Point2::new(0.0, 0.0),
                Point2::new(0.3, 0.1),
                Point2::new(0.9, -0.4),
                Point2::new(4.0, 2.0),
            ] {
                let (b, _) = ints.single(p, 1e-12).unwrap();
                let exact = cell.radial_integral(&kernel, p, 1e-13).unwrap();
                assert!((b - exact).abs() < 1e-10, "{kernel:?} {p}: {b} vs {exact}");
            }
        }
    }

    #[test]
    fn boundary_double_matches_product_rule_far_away() {
        let cell = Lattice::square(2).unwrap().wigner_seitz().unwrap().polygon();
        for kernel in [RadialKernel::Power(1.0), RadialKernel::NegLog] {
            let ints = BoundaryIntegrals::from_polygon(&cell, kernel);
            let x = Point2::new(5.0, 2.0);
            let (b, _) = ints.double(&ints, x, 1e-12).unwrap();
            let oracle = triangle_fan_double(&ints, &cell, x, 10);
            assert!((b - oracle).abs() < 1e-10, "{kernel:?}: {b} vs {oracle}");
        }
    }

    #[test]
    fn boundary_double_matches_adaptive_area_quadrature_nearby() {
        let cell = Lattice::triangular().wigner_seitz().unwrap().polygon();
        let ints = BoundaryIntegrals::from_polygon(&cell, RadialKernel::Power(0.5));
        let x = Point2::new(0.8, 0.5);
        let (b, _) = ints.double(&ints, x, 1e-11).unwrap();
        // ∫_Q I1(x + y) dy by adaptive area quadrature of the exact single integral
        let mut oracle = 0.0;
        for (a, c) in cell.edges() {
            oracle += quad::integrate_triangle(
                |y| cell.radial_integral(&ints.kernel, x + y.coords, 1e-13).unwrap(),
                [Point2::origin(), a, c],
                1e-8,
                6,
            )
            .unwrap()
            .value;
        }
        assert!((b - oracle).abs() < 1e-7, "{b} vs {oracle}");
    }
}
