//! Bravais lattices: construction, unit-covolume normalization, duals, shell
//! enumeration and (in the plane) Wigner–Seitz cells.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon, Vec2};

/// Norms closer than this are grouped into one shell.
pub const SHELL_TOLERANCE: f64 = 1e-9;

/// A full-rank lattice in R^d; columns of `basis` are the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
}

/// A set of lattice vectors of equal norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub radius: f64,
    pub points: Vec<DVector<f64>>,
}

/// The Voronoi cell of the origin (planar lattices only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub vertices: Vec<Point2>,
    pub area: f64,
}

impl Cell {
    pub fn polygon(&self) -> Polygon {
        Polygon {
            vertices: self.vertices.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    dimension: usize,
    basis: Vec<f64>,
    covolume: f64,
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dimension();
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                basis.push(self.basis[(i, j)]);
            }
        }
        LatticeJson {
            dimension: d,
            basis,
            covolume: self.covolume(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = LatticeJson::deserialize(deserializer)?;
        if raw.basis.len() != raw.dimension * raw.dimension {
            return Err(serde::de::Error::custom("basis length must be dimension²"));
        }
        let m = DMatrix::from_row_slice(raw.dimension, raw.dimension, &raw.basis);
        Lattice::new(m).map_err(serde::de::Error::custom)
    }
}

impl Lattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(Error::Invalid("basis must be a non-empty square matrix".into()));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("basis has non-finite entries".into()));
        }
        let det = basis.determinant();
        let scale: f64 = basis.column_iter().map(|c| c.norm()).product();
        if det.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular("lattice basis is not full rank".into()));
        }
        Ok(Self { basis })
    }

    /// Planar lattice from two generators.
    pub fn from_generators_2d(b1: [f64; 2], b2: [f64; 2]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(2, 2, &[b1[0], b1[1], b2[0], b2[1]]))
    }

    /// Unit-covolume triangular lattice c(1,0)Z ⊕ c(1/2, √3/2)Z with c² = 2/√3.
    pub fn triangular() -> Self {
        let c = (2.0 / 3f64.sqrt()).sqrt();
        Self::from_generators_2d([c, 0.0], [0.5 * c, 0.5 * 3f64.sqrt() * c]).expect("triangular basis is regular")
    }

    /// Z^d.
    pub fn square(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        Self::new(DMatrix::identity(d, d))
    }

    /// The one-dimensional lattice Z.
    pub fn integers_1d() -> Self {
        Self::square(1).expect("d = 1 is valid")
    }

    pub fn dimension(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    pub fn is_normalized(&self) -> bool {
        (self.covolume() - 1.0).abs() <= 1e-12
    }

    /// Rescales to covolume 1.
    pub fn normalize(&self) -> Self {
        let d = self.dimension() as f64;
        self.scaled(self.covolume().powf(-1.0 / d))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: &self.basis * factor,
        }
    }

    /// Dual lattice: basis (B⁻¹)ᵀ, so that ⟨x, k⟩ ∈ Z.
    pub fn dual(&self) -> Result<Self> {
        let inv = self
            .basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("lattice basis is not invertible".into()))?;
        Self::new(inv.transpose())
    }

    /// B n for integer coefficients n.
    pub fn point(&self, coeffs: &[i64]) -> DVector<f64> {
        let n = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&c| c as f64));
        &self.basis * n
    }

    /// |B n|² evaluated as the quadratic form nᵀ (BᵀB) n.
    pub fn quadratic_form(&self, coeffs: &[i64]) -> f64 {
        let gram = self.basis.transpose() * &self.basis;
        let n = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&c| c as f64));
        (n.transpose() * gram * n)[(0, 0)]
    }

    /// Fractional coordinates B⁻¹ x.
    pub fn fractional(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.clone().try_inverse().expect("full rank") * x
    }

    /// All nonzero lattice vectors with |x| <= r_max, sorted by norm.
    pub fn vectors_within(&self, r_max: f64) -> Vec<(DVector<f64>, f64)> {
        let d = self.dimension();
        let inv = self.basis.clone().try_inverse().expect("full rank");
        // |n_i| = |(B⁻¹ x)_i| <= |row_i(B⁻¹)| · |x|
        let bounds: Vec<i64> = (0..d).map(|i| (inv.row(i).norm() * r_max).floor() as i64).collect();
        let mut coeffs: Vec<i64> = bounds.iter().map(|b| -b).collect();
        let limit = r_max * (1.0 + 1e-12);
        let mut out = Vec::new();
        loop {
            if coeffs.iter().any(|&c| c != 0) {
                let v = self.point(&coeffs);
                let r = v.norm();
                if r <= limit {
                    out.push((v, r));
                }
            }
            // odometer increment
            let mut k = 0;
            loop {
                if k == d {
                    out.sort_by(|a, b| a.1.total_cmp(&b.1));
                    return out;
                }
                if coeffs[k] < bounds[k] {
                    coeffs[k] += 1;
                    break;
                }
                coeffs[k] = -bounds[k];
                k += 1;
            }
        }
    }

    /// Nonzero lattice vectors with norm <= r_max grouped by norm.
    pub fn shells(&self, r_max: f64) -> Result<Vec<Shell>> {
        if !(r_max > 0.0) {
            return Err(Error::Invalid(format!("r_max must be positive, got {r_max}")));
        }
        let mut shells: Vec<Shell> = Vec::new();
        for (v, r) in self.vectors_within(r_max) {
            match shells.last_mut() {
                Some(s) if (r - s.radius).abs() <= SHELL_TOLERANCE => s.points.push(v),
                _ => shells.push(Shell {
                    radius: r,
                    points: vec![v],
                }),
            }
        }
        Ok(shells)
    }

    /// Length of the shortest nonzero vector.
    pub fn min_norm(&self) -> f64 {
        let r0 = self.basis.column_iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        self.vectors_within(r0).first().map(|v| v.1).unwrap_or(r0)
    }

    /// Wigner–Seitz cell by half-plane intersection. The neighbor radius is
    /// enlarged until it covers twice the cell's circumradius, which guarantees
    /// every Voronoi-relevant vector has been used.
    pub fn wigner_seitz(&self) -> Result<Cell> {
        if self.dimension() != 2 {
            return Err(Error::Unsupported(format!(
                "Wigner–Seitz cells are only built for d = 2, got d = {}",
                self.dimension()
            )));
        }
        let shells = self.shells(2.0 * self.min_norm() * (1.0 + 1e-9))?;
        let mut radius = shells.iter().take(2).next_back().map(|s| s.radius).unwrap_or(1.0) * (1.0 + 1e-9);
        loop {
            let vectors = self.vectors_within(radius);
            let big = 4.0 * radius.max(self.basis.column_iter().map(|c| c.norm()).sum::<f64>());
            let mut poly = vec![
                Point2::new(-big, -big),
                Point2::new(big, -big),
                Point2::new(big, big),
                Point2::new(-big, big),
            ];
            for (v, _) in &vectors {
                let n = Vec2::new(v[0], v[1]);
                poly = clip_half_plane(&poly, n, 0.5 * n.norm_squared());
            }
            let circ = poly.iter().map(|p| p.coords.norm()).fold(0.0, f64::max);
            if 2.0 * circ <= radius * (1.0 + 1e-12) {
                let poly = dedup_vertices(poly);
                let polygon = Polygon::new(poly)?;
                let area = polygon.area();
                return Ok(Cell {
                    vertices: polygon.vertices,
                    area,
                });
            }
            radius = 2.0 * circ * (1.0 + 1e-9);
        }
    }
}

fn clip_half_plane(poly: &[Point2], n: Vec2, offset: f64) -> Vec<Point2> {
    let inside = |p: &Point2| n.dot(&p.coords) <= offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (ci, ni) = (inside(&cur), inside(&next));
        if ci {
            out.push(cur);
        }
        if ci != ni {
            let dc = n.dot(&cur.coords) - offset;
            let dn = n.dot(&next.coords) - offset;
            let t = dc / (dc - dn);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

fn dedup_vertices(poly: Vec<Point2>) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|q: &Point2| (p - q).norm() > 1e-12) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= 1e-12 {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c_tri() -> f64 {
        (2.0 / 3f64.sqrt()).sqrt()
    }

    #[test]
    fn triangular_normalization() {
        let t = Lattice::triangular();
        assert!((t.covolume() - 1.0).abs() < 1e-14);
        assert!((t.min_norm() - c_tri()).abs() < 1e-14);
        assert!((t.min_norm() - 1.074_570_000).abs() < 1e-6);
        assert!((t.quadratic_form(&[1, 1]) - 3.0 * c_tri() * c_tri()).abs() < 1e-13);
        assert!((t.quadratic_form(&[1, 1]) - 3.4641).abs() < 1e-4);
    }

    #[test]
    fn square_and_integer_lattices() {
        let s = Lattice::square(2).unwrap();
        assert_eq!(s.basis(), &DMatrix::<f64>::identity(2, 2));
        assert_eq!(Lattice::integers_1d().dimension(), 1);
        let d = s.dual().unwrap();
        assert!((d.basis() - s.basis()).norm() < 1e-15);
        assert!(Lattice::square(0).is_err());
        assert!(Lattice::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])).is_err());
    }

    #[test]
    fn dual_involution_and_covolume() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = rng.gen_range(1..=4);
            let m = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.4..0.4));
            let l = Lattice::new(m).unwrap();
            let dd = l.dual().unwrap().dual().unwrap();
            assert!((dd.basis() - l.basis()).norm() < 1e-12);
            assert!((l.dual().unwrap().covolume() * l.covolume() - 1.0).abs() < 1e-12);
            let n = l.normalize();
            assert!((n.covolume() - 1.0).abs() < 1e-13);
            assert!((n.dual().unwrap().covolume() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn triangular_dual_has_same_shell_radii() {
        let t = Lattice::triangular();
        let d = t.dual().unwrap();
        let r1: Vec<(f64, usize)> = t.shells(6.0).unwrap().iter().map(|s| (s.radius, s.points.len())).collect();
        let r2: Vec<(f64, usize)> = d.shells(6.0).unwrap().iter().map(|s| (s.radius, s.points.len())).collect();
        assert_eq!(r1.len(), r2.len());
        for (a, b) in r1.iter().zip(&r2) {
            assert!((a.0 - b.0).abs() < 1e-12);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn shell_counts() {
        let s = Lattice::square(2).unwrap();
        let sh = s.shells(1.0).unwrap();
        assert_eq!(sh.len(), 1);
        assert_eq!(sh[0].points.len(), 4);
        let t = Lattice::triangular().shells(1.1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].points.len(), 6);
        assert!((t[0].radius - 1.074_57).abs() < 1e-5);
        // brute-force count of integer points with n² + m² <= 100, minus the origin
        let mut brute = 0;
        for n in -10i64..=10 {
            for m in -10i64..=10 {
                if n * n + m * m <= 100 && (n, m) != (0, 0) {
                    brute += 1;
                }
            }
        }
        let total: usize = s.shells(10.0).unwrap().iter().map(|s| s.points.len()).sum();
        assert_eq!(total, brute);
        assert_eq!(total, 316);
        for shell in s.shells(10.0).unwrap() {
            for p in &shell.points {
                assert!((p.norm() - shell.radius).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shells_are_monotone_in_radius() {
        let t = Lattice::triangular();
        let mut prev = 0;
        for k in 1..12 {
            let n: usize = t.shells(k as f64 * 0.5).unwrap().iter().map(|s| s.points.len()).sum();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn wigner_seitz_cells() {
        let sq = Lattice::square(2).unwrap().wigner_seitz().unwrap();
        assert_eq!(sq.vertices.len(), 4);
        assert!((sq.area - 1.0).abs() < 1e-12);
        for v in &sq.vertices {
            assert!((v.x.abs() - 0.5).abs() < 1e-12 && (v.y.abs() - 0.5).abs() < 1e-12);
        }
        let hex = Lattice::triangular().wigner_seitz().unwrap();
        assert_eq!(hex.vertices.len(), 6);
        assert!((hex.area - 1.0).abs() < 1e-12);
        for v in &hex.vertices {
            assert!((v.coords.norm() - c_tri() / 3f64.sqrt()).abs() < 1e-12);
        }
        assert!((hex.polygon().circumradius() - 0.6204).abs() < 1e-4);
        assert!(Lattice::square(3).unwrap().wigner_seitz().is_err());
        // Elongated rectangle whose relevant vectors are not in the first two shells.
        let rect = Lattice::from_generators_2d([1.0, 0.0], [0.0, 3.0]).unwrap().wigner_seitz().unwrap();
        assert!((rect.area - 3.0).abs() < 1e-12);
    }

    #[test]
    fn wigner_seitz_cell_tiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for lattice in [Lattice::square(2).unwrap(), Lattice::triangular()] {
            let cell = lattice.wigner_seitz().unwrap().polygon();
            let vecs = lattice.vectors_within(4.0);
            let r = cell.circumradius();
            let mut tested = 0;
            while tested < 100 {
                let p = Point2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
                if !cell.contains(p) {
                    continue;
                }
                tested += 1;
                let (v, _) = &vecs[rng.gen_range(0..vecs.len())];
                let q = p + Vec2::new(v[0], v[1]);
                assert!(!cell.contains(q));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let t = Lattice::triangular();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"dimension\":2"));
        let back: Lattice = serde_json::from_str(&s).unwrap();
        assert!((back.basis() - t.basis()).norm() < 1e-15);
    }
}
