//! Jellium in a bounded planar domain Ω:
//!
//! ```text
//! E(x₁, …, x_N) = -Σ_{j<k} log|x_j - x_k| + Σ_j ∫_Ω log|x_j - y| dy - ½ ∬_{Ω×Ω} log|x - y| dx dy
//! ```
//!
//! together with the Coulomb form D(μ, ν) = ½ ∬ -log|x - y| dμ dν on
//! point, disk and polygonal charges, and the smearing lower bound
//! E ≥ N (½ log a - 1/8 - π a²/4).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryIntegrals;
use crate::error::{Error, Result};
use crate::geometry::{edges_radial_integral, Point2, Polygon, RadialKernel, Vec2};
use crate::periodic::{EnergyMetadata, EnergyReport, EnergyTerm, MIN_SEPARATION};
use crate::quad;

/// Default tolerance for single (potential) integrals.
pub const SINGLE_TOL: f64 = 1e-8;
/// Default tolerance for double (self-energy) integrals.
pub const DOUBLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain("Disk::new", format!("radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// A uniformly charged disk carrying total charge `charge`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmearedCharge {
    pub center: Point2,
    pub radius: f64,
    pub charge: f64,
}

impl SmearedCharge {
    pub fn new(center: Point2, radius: f64, charge: f64) -> Result<Self> {
        Disk::new(center, radius)?;
        Ok(Self { center, radius, charge })
    }
}

/// A union of interior-disjoint polygons and disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonalDomain {
    pub polygons: Vec<Polygon>,
    #[serde(default)]
    pub disks: Vec<Disk>,
    pub total_area: f64,
}

impl PolygonalDomain {
    pub fn new(polygons: Vec<Polygon>, disks: Vec<Disk>) -> Result<Self> {
        if polygons.is_empty() && disks.is_empty() {
            return Err(Error::Invalid("empty domain".into()));
        }
        let triangles: Vec<(usize, Polygon)> = polygons
            .iter()
            .enumerate()
            .flat_map(|(i, p)| {
                p.triangulate()
                    .into_iter()
                    .filter_map(move |t| Polygon::new(t.to_vec()).ok().map(|t| (i, t)))
            })
            .collect();
        let scale = polygons.iter().map(Polygon::area).fold(0.0, f64::max);
        for (k, (i, t)) in triangles.iter().enumerate() {
            for (j, u) in &triangles[k + 1..] {
                if i == j || !bounding_boxes_overlap(t, u) {
                    continue;
                }
                if t.intersection_area(u) > 1e-10 * scale.max(1.0) {
                    return Err(Error::Invalid(format!("polygons {i} and {j} overlap")));
                }
            }
        }
        for (k, d) in disks.iter().enumerate() {
            for e in &disks[k + 1..] {
                if (d.center - e.center).norm() < d.radius + e.radius - 1e-12 {
                    return Err(Error::Invalid("disks overlap".into()));
                }
            }
            for (i, p) in polygons.iter().enumerate() {
                if p.contains(d.center) || p.boundary_distance(d.center) < d.radius - 1e-12 {
                    return Err(Error::Invalid(format!("disk {k} overlaps polygon {i}")));
                }
            }
        }
        let total_area = polygons.iter().map(Polygon::area).sum::<f64>() + disks.iter().map(Disk::area).sum::<f64>();
        Ok(Self {
            polygons,
            disks,
            total_area,
        })
    }

    pub fn disk(center: Point2, radius: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![Disk::new(center, radius)?])
    }

    pub fn translated(&self, t: Vec2) -> Self {
        Self {
            polygons: self.polygons.iter().map(|p| p.translated(t)).collect(),
            disks: self
                .disks
                .iter()
                .map(|d| Disk {
                    center: d.center + t,
                    radius: d.radius,
                })
                .collect(),
            total_area: self.total_area,
        }
    }

    /// Rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Self {
            polygons: self.polygons.iter().map(|p| p.rotated(angle)).collect(),
            disks: self
                .disks
                .iter()
                .map(|d| Disk {
                    center: Point2::new(cos * d.center.x - sin * d.center.y, sin * d.center.x + cos * d.center.y),
                    radius: d.radius,
                })
                .collect(),
            total_area: self.total_area,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            polygons: self.polygons.iter().map(|p| p.scaled(factor)).collect(),
            disks: self
                .disks
                .iter()
                .map(|d| Disk {
                    center: d.center * factor,
                    radius: d.radius * factor,
                })
                .collect(),
            total_area: self.total_area * factor * factor,
        }
    }

    /// Polygon edges with shared interior edges removed. Interior edges
    /// cancel in every boundary integral, so dropping them only saves work.
    pub fn boundary_edges(&self) -> Vec<(Point2, Point2)> {
        let all: Vec<(Point2, Point2)> = self.polygons.iter().flat_map(|p| p.edges().collect::<Vec<_>>()).collect();
        let scale = self.polygons.iter().map(Polygon::circumradius).fold(0.0, f64::max);
        let eps = 1e-9 * scale.max(1e-300);
        let mut removed = vec![false; all.len()];
        for i in 0..all.len() {
            if removed[i] {
                continue;
            }
            let (a, b) = all[i];
            for j in i + 1..all.len() {
                if !removed[j] && (all[j].0 - b).norm() < eps && (all[j].1 - a).norm() < eps {
                    removed[i] = true;
                    removed[j] = true;
                    break;
                }
            }
        }
        all.into_iter().zip(removed).filter(|(_, r)| !r).map(|(e, _)| e).collect()
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.polygons.iter().any(|q| q.contains(p)) || self.disks.iter().any(|d| (p - d.center).norm() <= d.radius)
    }
}

fn bounding_boxes_overlap(p: &Polygon, q: &Polygon) -> bool {
    let bb = |p: &Polygon| {
        p.vertices
            .iter()
            .fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, v| {
                [b[0].min(v.x), b[1].min(v.y), b[2].max(v.x), b[3].max(v.y)]
            })
    };
    let (a, b) = (bb(p), bb(q));
    a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3]
}

/// Triangular lattice points of unit density within `rings` hexagonal rings
/// of the origin, with the union of their hexagonal cells.
pub fn hexagonal_patch(rings: usize) -> Result<(PolygonalDomain, Vec<Point2>)> {
    let spacing = (2.0 / 3f64.sqrt()).sqrt();
    let e1 = Vec2::new(spacing, 0.0);
    let e2 = Vec2::new(0.5 * spacing, 0.5 * 3f64.sqrt() * spacing);
    let r = rings as i64;
    let cell_radius = spacing / 3f64.sqrt();
    let hexagon: Vec<Vec2> = (0..6)
        .map(|k| {
            let t = PI / 6.0 + k as f64 * PI / 3.0;
            Vec2::new(cell_radius * t.cos(), cell_radius * t.sin())
        })
        .collect();
    let mut points = Vec::new();
    let mut cells = Vec::new();
    for i in -r..=r {
        for j in -r..=r {
            if (i + j).abs() > r {
                continue;
            }
            let c = Point2::origin() + e1 * i as f64 + e2 * j as f64;
            points.push(c);
            cells.push(Polygon::new(hexagon.iter().map(|v| c + v).collect())?);
        }
    }
    Ok((PolygonalDomain::new(cells, Vec::new())?, points))
}

/// One piece of a charge distribution for [`d_interaction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChargeBlock {
    Point {
        center: Point2,
        charge: f64,
    },
    Disk(SmearedCharge),
    /// Uniform charge density over a domain.
    Region {
        domain: PolygonalDomain,
        density: f64,
    },
}

/// Elementary supports: ∬ log|x - y| between two of them has a direct formula.
enum Atom {
    Point(Point2, f64),
    Disk(Point2, f64, f64),
    Polygons(PolygonSet, f64),
}

struct PolygonSet {
    edges: Vec<(Point2, Point2)>,
    ints: BoundaryIntegrals,
}

impl PolygonSet {
    fn new(domain: &PolygonalDomain) -> Option<Self> {
        if domain.polygons.is_empty() {
            return None;
        }
        let edges = domain.boundary_edges();
        let ints = BoundaryIntegrals::from_edges(edges.iter().copied(), RadialKernel::NegLog);
        Some(Self { edges, ints })
    }

    /// ∫ log|p - y| dy.
    fn log_potential(&self, p: Point2, tol: f64) -> Result<f64> {
        let (v, err) = self.ints.single(p, tol)?;
        check(err, tol)?;
        Ok(-v)
    }

    /// ∫ of log|y - c| averaged over the disk B_a(c).
    fn disk_potential(&self, c: Point2, a: f64, tol: f64) -> Result<f64> {
        edges_radial_integral(
            self.edges.iter().copied(),
            self.edges.len(),
            &RadialKernel::DiskAveragedLog(a),
            c,
            tol,
        )
    }

    /// ∬ log|y - z| over y ∈ self, z ∈ other.
    fn log_pair(&self, other: &PolygonSet, tol: f64) -> Result<f64> {
        let (v, err) = self.ints.double(&other.ints, Point2::origin(), tol)?;
        check(err, tol)?;
        Ok(-v)
    }
}

fn check(err: f64, tol: f64) -> Result<()> {
    if err > tol {
        Err(Error::Accuracy {
            achieved: err,
            target: tol,
        })
    } else {
        Ok(())
    }
}

fn atoms_of(domain: &PolygonalDomain, density: f64) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = domain
        .disks
        .iter()
        .map(|d| Atom::Disk(d.center, d.radius, density * d.area()))
        .collect();
    if let Some(set) = PolygonSet::new(domain) {
        atoms.push(Atom::Polygons(set, density));
    }
    atoms
}

fn atoms_of_blocks(blocks: &[ChargeBlock]) -> Vec<Atom> {
    blocks
        .iter()
        .flat_map(|b| match b {
            ChargeBlock::Point { center, charge } => vec![Atom::Point(*center, *charge)],
            ChargeBlock::Disk(c) => vec![Atom::Disk(c.center, c.radius, c.charge)],
            ChargeBlock::Region { domain, density } => atoms_of(domain, *density),
        })
        .collect()
}

fn disk_log(a: f64) -> RadialKernel {
    RadialKernel::DiskAveragedLog(a)
}

/// Mean of log|x - y| for x, y uniform on B_a(c₁) and B_b(c₂).
pub fn disk_pair_mean_log(c1: Point2, a: f64, c2: Point2, b: f64, tol: f64) -> Result<f64> {
    let d = (c1 - c2).norm();
    if d >= a + b {
        return Ok(d.ln());
    }
    let g = disk_log(a);
    if d <= 1e-14 * (a + b) {
        return Ok(2.0 * g.radial_moment(b) / (b * b));
    }
    // Circle of radius r about c₁ meets B_b(c₂) in an arc of length L(r).
    let arc = |r: f64| {
        if r <= b - d {
            2.0 * PI * r
        } else {
            let c = ((r * r + d * d - b * b) / (2.0 * r * d)).clamp(-1.0, 1.0);
            2.0 * r * c.acos()
        }
    };
    let lo = (d - b).max(0.0);
    let hi = d + b;
    let mut cuts = vec![lo];
    for x in [(b - d).abs(), a] {
        if x > lo && x < hi {
            cuts.push(x);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let area = PI * b * b;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += quad::integrate(|r| g.value(r) * arc(r), w[0], w[1], tol * area / cuts.len() as f64)?.value;
        }
    }
    Ok(total / area)
}

/// ∬ log|x - y| dμ dν for two atoms carrying their charges.
fn atom_log_pair(x: &Atom, y: &Atom, tol: f64) -> Result<f64> {
    use Atom::*;
    Ok(match (x, y) {
        (Point(p, q), Point(r, s)) => {
            let d = (p - r).norm();
            if d < MIN_SEPARATION {
                return Err(Error::Singular("coincident point charges".into()));
            }
            q * s * d.ln()
        }
        (Point(p, q), Disk(c, a, s)) | (Disk(c, a, s), Point(p, q)) => q * s * disk_log(*a).value((p - c).norm()),
        (Point(p, q), Polygons(set, rho)) | (Polygons(set, rho), Point(p, q)) => q * rho * set.log_potential(*p, tol)?,
        (Disk(c1, a, q), Disk(c2, b, s)) => q * s * disk_pair_mean_log(*c1, *a, *c2, *b, tol)?,
        (Disk(c, a, q), Polygons(set, rho)) | (Polygons(set, rho), Disk(c, a, q)) => q * rho * set.disk_potential(*c, *a, tol)?,
        (Polygons(s1, r1), Polygons(s2, r2)) => r1 * r2 * s1.log_pair(s2, tol)?,
    })
}

fn atoms_log_energy(xs: &[Atom], ys: &[Atom], tol: f64) -> Result<f64> {
    let pairs = (xs.len() * ys.len()).max(1) as f64;
    let mut total = 0.0;
    for x in xs {
        for y in ys {
            total += atom_log_pair(x, y, tol / pairs)?;
        }
    }
    Ok(total)
}

/// D(f, g) = ½ ∬ -log|x - y| df(x) dg(y).
pub fn d_interaction(f: &[ChargeBlock], g: &[ChargeBlock], tol: f64) -> Result<f64> {
    Ok(-0.5 * atoms_log_energy(&atoms_of_blocks(f), &atoms_of_blocks(g), tol)?)
}

/// ∫_Ω log|x - y| dy.
pub fn background_potential(domain: &PolygonalDomain, x: Point2, tol: f64) -> Result<f64> {
    let probe = [Atom::Point(x, 1.0)];
    atoms_log_energy(&probe, &atoms_of(domain, 1.0), tol)
}

/// ½ ∬_{Ω×Ω} log|x - y| dx dy.
pub fn background_self(domain: &PolygonalDomain, tol: f64) -> Result<f64> {
    let atoms = atoms_of(domain, 1.0);
    Ok(0.5 * atoms_log_energy(&atoms, &atoms, 2.0 * tol)?)
}

/// Mean of log|x - y| over Ω × Ω.
pub fn mean_log_distance(domain: &PolygonalDomain, tol: f64) -> Result<f64> {
    let area = domain.total_area;
    Ok(2.0 * background_self(domain, 0.5 * tol * area * area)? / (area * area))
}

fn check_points(points: &[Point2]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Invalid("no points".into()));
    }
    for (j, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::Invalid(format!("point {j} is not finite")));
        }
        for (k, q) in points.iter().enumerate().skip(j + 1) {
            if (p - q).norm() < MIN_SEPARATION {
                return Err(Error::Singular(format!("points {j} and {k} coincide")));
            }
        }
    }
    Ok(())
}

fn point_pair_energy(points: &[Point2]) -> f64 {
    let mut e = 0.0;
    for (j, p) in points.iter().enumerate() {
        for q in &points[j + 1..] {
            e -= (p - q).norm().ln();
        }
    }
    e
}

/// Three-term Jellium energy of `points` in Ω; `tol` bounds the single
/// integrals, the background self-energy gets 100·tol.
pub fn jellium_energy(domain: &PolygonalDomain, points: &[Point2], tol: f64) -> Result<EnergyReport> {
    check_points(points)?;
    if !(tol > 0.0) {
        return Err(Error::Range(format!("tolerance must be positive, got {tol}")));
    }
    let n = points.len();
    let pp = point_pair_energy(points);
    let atoms = atoms_of(domain, 1.0);
    let mut pb = 0.0;
    for p in points {
        pb += atoms_log_energy(&[Atom::Point(*p, 1.0)], &atoms, tol / n as f64)?;
    }
    let self_tol = 100.0 * tol;
    let bb = -background_self(domain, self_tol)?;
    let mut notes = Vec::new();
    let canonical = (domain.total_area - n as f64).abs() < 1e-9 * n as f64;
    if !canonical {
        notes.push(format!("domain area {} differs from N = {n}", domain.total_area));
    }
    Ok(EnergyReport {
        total: pp + pb + bb,
        pairwise: pp,
        self_term: pb + bb,
        gradient_norm: None,
        terms: vec![
            EnergyTerm {
                term: "point_point".into(),
                value: pp,
                tol: 0.0,
            },
            EnergyTerm {
                term: "point_background".into(),
                value: pb,
                tol,
            },
            EnergyTerm {
                term: "background_background".into(),
                value: bb,
                tol: self_tol,
            },
        ],
        metadata: EnergyMetadata {
            backend: "boundary-quadrature".into(),
            tol: tol + self_tol,
            split: None,
            n,
            area: domain.total_area,
            canonical,
            notes,
        },
    })
}

/// ½ log a - 1/8 - π a²/4, the per-particle smearing bound at radius a.
pub fn lieb_narnhofer_bound(a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("lieb_narnhofer_bound", format!("radius must be positive, got {a}")));
    }
    Ok(0.5 * a.ln() - 0.125 - 0.25 * PI * a * a)
}

/// The optimal radius 1/√π and the bound -(3/8 + ¼ log π) it gives.
pub fn lieb_narnhofer_optimal() -> (f64, f64) {
    (1.0 / PI.sqrt(), -(0.375 + 0.25 * PI.ln()))
}

/// Terms of E = α + β + γ + δ obtained by smearing every point to a disk of radius a.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundDecomposition {
    pub a: f64,
    pub n: usize,
    pub energy: f64,
    /// D(Σ ν_j - 1_Ω), nonnegative for neutral systems.
    pub alpha: f64,
    /// Σ_j ∫_Ω (log|x_j - y| - (ν_j * log)(y)) dy.
    pub beta_exact: f64,
    /// -N π a²/4 ≤ beta_exact.
    pub beta_bound: f64,
    /// (N/2)(log a - 1/4).
    pub gamma: f64,
    /// Σ_{j<k} (D-corrected pair terms), zero when the disks are disjoint.
    pub delta: f64,
    pub delta_nonnegative: bool,
    /// energy - (alpha + beta_exact + gamma + delta).
    pub residual: f64,
    /// N (½ log a - 1/8 - π a²/4).
    pub bound: f64,
}

pub fn lower_bound_decomposition(domain: &PolygonalDomain, points: &[Point2], a: f64, tol: f64) -> Result<LowerBoundDecomposition> {
    let per_particle = lieb_narnhofer_bound(a)?;
    let n = points.len();
    let nf = n as f64;
    let energy = jellium_energy(domain, points, tol)?.total;

    let mut blocks: Vec<ChargeBlock> = points
        .iter()
        .map(|p| {
            ChargeBlock::Disk(SmearedCharge {
                center: *p,
                radius: a,
                charge: 1.0,
            })
        })
        .collect();
    blocks.push(ChargeBlock::Region {
        domain: domain.clone(),
        density: -1.0,
    });
    let alpha = d_interaction(&blocks, &blocks, 100.0 * tol)?;

    let set = PolygonSet::new(domain);
    let mut beta_exact = 0.0;
    for p in points {
        let mut diff = 0.0;
        if let Some(set) = &set {
            diff += set.log_potential(*p, tol / nf)? - set.disk_potential(*p, a, tol / nf)?;
        }
        for d in &domain.disks {
            let area = d.area();
            let r = (p - d.center).norm();
            diff += area * (disk_log(d.radius).value(r) - disk_pair_mean_log(*p, a, d.center, d.radius, tol / nf)?);
        }
        beta_exact += diff;
    }

    let mut delta = 0.0;
    for (j, p) in points.iter().enumerate() {
        for q in &points[j + 1..] {
            delta += disk_pair_mean_log(*p, a, *q, a, tol / nf)? - (p - q).norm().ln();
        }
    }
    let gamma = 0.5 * nf * (a.ln() - 0.25);
    Ok(LowerBoundDecomposition {
        a,
        n,
        energy,
        alpha,
        beta_exact,
        beta_bound: -0.25 * PI * a * a * nf,
        gamma,
        delta,
        delta_nonnegative: delta >= -tol,
        residual: energy - (alpha + beta_exact + gamma + delta),
        bound: per_particle * nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const UNIT_SQUARE_LOG_INTEGRAL: f64 = -0.805_086_721_950_087_2;

    fn square(center: Point2, side: f64) -> Polygon {
        let h = 0.5 * side;
        Polygon::new(vec![
            center + Vec2::new(-h, -h),
            center + Vec2::new(h, -h),
            center + Vec2::new(h, h),
            center + Vec2::new(-h, h),
        ])
        .unwrap()
    }

    fn square_domain(side: f64) -> PolygonalDomain {
        PolygonalDomain::new(vec![square(Point2::origin(), side)], Vec::new()).unwrap()
    }

    #[test]
    fn disk_potential_at_centre() {
        for a in [0.3, 1.0, 2.5] {
            let disk = PolygonalDomain::disk(Point2::new(0.4, -1.0), a).unwrap();
            let v = background_potential(&disk, Point2::new(0.4, -1.0), 1e-12).unwrap();
            assert_abs_diff_eq!(v, PI * a * a * (a.ln() - 0.5), epsilon = 1e-13);
            // polygonal approximation converges to the same value
            let m = 4000;
            let poly = Polygon::new(
                (0..m)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / m as f64;
                        Point2::new(0.4 + a * t.cos(), -1.0 + a * t.sin())
                    })
                    .collect(),
            )
            .unwrap();
            let dom = PolygonalDomain::new(vec![poly], Vec::new()).unwrap();
            let w = background_potential(&dom, Point2::new(0.4, -1.0), 1e-10).unwrap();
            assert!((w - v).abs() < 1e-5 * a * a * (1.0 + a.ln().abs()), "{w} {v}");
        }
    }

    #[test]
    fn square_potential_matches_triangle_quadrature() {
        let dom = square_domain(1.0);
        let sq = &dom.polygons[0];
        for p in [
            Point2::origin(),
            Point2::new(0.3, -0.1),
            Point2::new(0.5, 0.2),
            Point2::new(1.7, 0.9),
        ] {
            let v = background_potential(&dom, p, 1e-11).unwrap();
            let mut oracle = 0.0;
            for (a, b) in sq.edges() {
                // fan about p splits the log singularity onto a vertex
                if (b - a).perp(&(p - a)).abs() < 1e-15 {
                    continue;
                }
                oracle += quad::integrate_triangle(|y| (y - p).norm().ln(), [p, a, b], 1e-12, 8)
                    .unwrap()
                    .value
                    * (b - a).perp(&(p - a)).signum();
            }
            assert!((v - oracle).abs() < 1e-8, "{p:?}: {v} vs {oracle}");
        }
    }

    #[test]
    fn unit_square_self_energy() {
        let dom = square_domain(1.0);
        let mean = mean_log_distance(&dom, 1e-9).unwrap();
        assert_abs_diff_eq!(mean, UNIT_SQUARE_LOG_INTEGRAL, epsilon = 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 10_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let d = Vec2::new(rng.gen::<f64>() - rng.gen::<f64>(), rng.gen::<f64>() - rng.gen::<f64>());
            let v = d.norm().ln();
            s += v;
            s2 += v * v;
        }
        let m = s / samples as f64;
        let sigma = ((s2 / samples as f64 - m * m) / samples as f64).sqrt();
        assert!((mean - m).abs() < 3.0 * sigma, "{mean} vs MC {m} ± {sigma}");
    }

    #[test]
    fn disk_self_energy() {
        for a in [0.2, 1.0, 3.0] {
            let dom = PolygonalDomain::disk(Point2::new(1.0, 2.0), a).unwrap();
            let mean = mean_log_distance(&dom, 1e-12).unwrap();
            assert_abs_diff_eq!(mean, a.ln() - 0.25, epsilon = 1e-12);
        }
        // independent radial oracle: mean of log max(r, ρ) over two radii
        let a = 0.7f64;
        let oracle = quad::integrate(
            |r| {
                let below = r.ln() * r * r / (a * a);
                let above = quad::integrate(|t| t.ln() * 2.0 * t / (a * a), r, a, 1e-14).unwrap().value;
                let inner = below + above;
                inner * 2.0 * r / (a * a)
            },
            0.0,
            a,
            1e-13,
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(oracle, a.ln() - 0.25, epsilon = 1e-10);
    }

    #[test]
    fn log_homogeneity_under_scaling() {
        let (dom, _) = hexagonal_patch(1).unwrap();
        let base = mean_log_distance(&dom, 1e-9).unwrap();
        for lambda in [0.5, 3.0] {
            let m = mean_log_distance(&dom.scaled(lambda), 1e-9).unwrap();
            assert_abs_diff_eq!(m, base + f64::ln(lambda), epsilon = 1e-8);
        }
    }

    #[test]
    fn single_particle_in_optimal_disk() {
        let (a, bound) = lieb_narnhofer_optimal();
        let p = Point2::new(0.3, 0.2);
        let dom = PolygonalDomain::disk(p, a).unwrap();
        let e = jellium_energy(&dom, &[p], 1e-12).unwrap();
        assert_abs_diff_eq!(e.total, 0.5 * a.ln() - 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(e.total, bound, epsilon = 1e-12);
    }

    #[test]
    fn optimal_bound_values() {
        let (a, b) = lieb_narnhofer_optimal();
        assert_abs_diff_eq!(a, 0.564_189_583_547_756_3, epsilon = 1e-15);
        assert!((b + 0.66118).abs() < 1e-5);
        assert_abs_diff_eq!(lieb_narnhofer_bound(a).unwrap(), b, epsilon = 1e-14);
        assert_abs_diff_eq!(lieb_narnhofer_bound(1.0).unwrap(), -0.125 - PI / 4.0, epsilon = 1e-15);
        assert!(lieb_narnhofer_bound(a + 0.1).unwrap() < b);
        assert!(lieb_narnhofer_bound(a - 0.1).unwrap() < b);
        assert!(lieb_narnhofer_bound(0.0).is_err());
        assert!(lieb_narnhofer_bound(-1.0).is_err());
    }

    #[test]
    fn point_like_disks_interact_as_points() {
        let f = [ChargeBlock::Disk(SmearedCharge::new(Point2::origin(), 1e-3, 1.0).unwrap())];
        let g = [ChargeBlock::Disk(SmearedCharge::new(Point2::new(2.0, 0.0), 1e-3, 1.0).unwrap())];
        assert_abs_diff_eq!(d_interaction(&f, &g, 1e-12).unwrap(), -0.5 * 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn overlapping_disk_pair_is_symmetric_and_matches_concentric_limit() {
        let (c1, c2) = (Point2::new(0.0, 0.0), Point2::new(0.3, 0.1));
        let ab = disk_pair_mean_log(c1, 0.5, c2, 0.8, 1e-12).unwrap();
        let ba = disk_pair_mean_log(c2, 0.8, c1, 0.5, 1e-12).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-10);
        let near = disk_pair_mean_log(c1, 0.5, Point2::new(1e-7, 0.0), 0.8, 1e-12).unwrap();
        let at = disk_pair_mean_log(c1, 0.5, c1, 0.8, 1e-12).unwrap();
        assert_abs_diff_eq!(near, at, epsilon = 1e-8);
        // disk-through-polygon route for the same pair
        let m = 2000;
        let poly = Polygon::new(
            (0..m)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    c2 + Vec2::new(0.8 * t.cos(), 0.8 * t.sin())
                })
                .collect(),
        )
        .unwrap();
        let set = PolygonSet::new(&PolygonalDomain::new(vec![poly.clone()], Vec::new()).unwrap()).unwrap();
        let via_poly = set.disk_potential(c1, 0.5, 1e-11).unwrap() / poly.area();
        assert!((via_poly - ab).abs() < 1e-5, "{via_poly} {ab}");
    }

    #[test]
    fn neutral_disk_dipole_is_positive() {
        let f = [
            ChargeBlock::Disk(SmearedCharge::new(Point2::origin(), 0.5, 1.0).unwrap()),
            ChargeBlock::Disk(SmearedCharge::new(Point2::new(1.5, 0.0), 0.5, -1.0).unwrap()),
        ];
        assert!(d_interaction(&f, &f, 1e-10).unwrap() > 0.0);
    }

    fn random_neutral_system(rng: &mut ChaCha8Rng) -> Vec<ChargeBlock> {
        let n = rng.gen_range(2..6);
        let mut blocks = Vec::new();
        let mut total = 0.0;
        for i in 0..n {
            let c = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = rng.gen_range(0.05..0.8);
            let q = if i + 1 == n { -total } else { rng.gen_range(-1.5..1.5) };
            total += q;
            blocks.push(ChargeBlock::Disk(SmearedCharge::new(c, r, q).unwrap()));
        }
        if rng.gen_bool(0.5) {
            // a square region neutralised by a disk of opposite charge
            let side = rng.gen_range(0.3..1.5);
            let c = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let rho = rng.gen_range(-1.0..1.0);
            blocks.push(ChargeBlock::Region {
                domain: PolygonalDomain::new(vec![square(c, side)], Vec::new()).unwrap(),
                density: rho,
            });
            let c2 = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            blocks.push(ChargeBlock::Disk(SmearedCharge::new(c2, 0.4, -rho * side * side).unwrap()));
        }
        blocks
    }

    #[test]
    fn random_neutral_systems_have_nonnegative_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = random_neutral_system(&mut rng);
            let d = d_interaction(&f, &f, 1e-8).unwrap();
            assert!(d >= -1e-8, "{d}");
        }
    }

    #[test]
    fn interaction_is_symmetric_and_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let f = random_neutral_system(&mut rng);
            let g = random_neutral_system(&mut rng);
            let h = random_neutral_system(&mut rng);
            let fg = d_interaction(&f, &g, 1e-11).unwrap();
            assert_abs_diff_eq!(fg, d_interaction(&g, &f, 1e-11).unwrap(), epsilon = 1e-9);
            let mut gh = g.clone();
            gh.extend(h.iter().cloned());
            let lhs = d_interaction(&f, &gh, 1e-11).unwrap();
            let rhs = fg + d_interaction(&f, &h, 1e-11).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        }
    }

    #[test]
    fn newton_theorem_for_disjoint_disk() {
        let others = [
            ChargeBlock::Point {
                center: Point2::new(2.0, 1.0),
                charge: -0.7,
            },
            ChargeBlock::Region {
                domain: PolygonalDomain::new(vec![square(Point2::new(-2.0, 0.5), 1.0)], Vec::new()).unwrap(),
                density: 1.3,
            },
            ChargeBlock::Disk(SmearedCharge::new(Point2::new(0.0, -2.0), 0.6, 0.4).unwrap()),
        ];
        let p = Point2::new(0.1, 0.2);
        let point = [ChargeBlock::Point { center: p, charge: 1.0 }];
        let disk = [ChargeBlock::Disk(SmearedCharge::new(p, 0.9, 1.0).unwrap())];
        for o in &others {
            let o = std::slice::from_ref(o);
            assert_abs_diff_eq!(
                d_interaction(&point, o, 1e-12).unwrap(),
                d_interaction(&disk, o, 1e-12).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn coincident_points_are_rejected() {
        let dom = square_domain(2.0);
        let p = Point2::new(0.1, 0.1);
        assert!(matches!(jellium_energy(&dom, &[p, p], 1e-8), Err(Error::Singular(_))));
    }

    #[test]
    fn hexagonal_patch_sizes_and_area() {
        for (rings, n) in [(0, 1), (2, 19), (3, 37), (6, 127)] {
            let (dom, pts) = hexagonal_patch(rings).unwrap();
            assert_eq!(pts.len(), n);
            assert_abs_diff_eq!(dom.total_area, n as f64, epsilon = 1e-10);
            assert_eq!(dom.boundary_edges().len(), if rings == 0 { 6 } else { 6 * (2 * rings + 1) });
        }
    }

    #[test]
    fn overlapping_polygons_are_rejected() {
        let a = square(Point2::origin(), 1.0);
        let b = square(Point2::new(0.5, 0.0), 1.0);
        assert!(PolygonalDomain::new(vec![a.clone(), b], Vec::new()).is_err());
        let c = square(Point2::new(1.0, 0.0), 1.0);
        assert!(PolygonalDomain::new(vec![a, c], Vec::new()).is_ok());
    }

    #[test]
    fn rigid_motion_invariance() {
        let (dom, pts) = hexagonal_patch(1).unwrap();
        let e = jellium_energy(&dom, &pts, 1e-10).unwrap().total;
        let t = Vec2::new(0.37, -1.2);
        let angle = 0.81f64;
        let (sin, cos) = angle.sin_cos();
        let moved: Vec<Point2> = pts
            .iter()
            .map(|p| Point2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y) + t)
            .collect();
        let e2 = jellium_energy(&dom.rotated(angle).translated(t), &moved, 1e-10).unwrap().total;
        assert_abs_diff_eq!(e, e2, epsilon = 1e-9);
    }

    #[test]
    fn decomposition_of_19_point_patch() {
        let (dom, pts) = hexagonal_patch(2).unwrap();
        let dec = lower_bound_decomposition(&dom, &pts, 0.3, 1e-9).unwrap();
        assert!(dec.alpha >= -1e-8, "{dec:?}");
        assert!(dec.delta_nonnegative && dec.delta.abs() < 1e-12);
        assert!(dec.beta_exact >= dec.beta_bound - 1e-9);
        assert!(dec.residual.abs() < 1e-6, "{dec:?}");
        assert!(dec.bound <= dec.energy);
        let (_, opt) = lieb_narnhofer_optimal();
        assert!(dec.energy / 19.0 >= opt);
    }
}
