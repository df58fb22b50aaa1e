//! Periodic Coulomb Green's function of a flat torus.
//!
//! G_T solves -ΔG = 2π(Σ_v δ_v - 1/|T|) with zero mean over T. With the
//! splitting parameter η (made dimensionless by |T|) it is evaluated as
//!
//! ```text
//! G(x) = ½ Σ_v E₁(πη|x - v|²/|T|) - 1/(2η)
//!      + 1/(2π|T|) Σ_{m≠0} e^{-π|T||m|²/η} cos(2π m·x) / |m|²
//! ```
//!
//! with v over the period lattice and m over its dual.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::epstein::{epstein_zeta_deriv0, EwaldParams};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lattice::Lattice;
use crate::specfun::{euler_gamma, upper_gamma_unchecked};

/// A flat torus R²/Λ given by its period lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    pub period_lattice: Lattice,
    pub area: f64,
}

impl Torus {
    pub fn new(period_lattice: Lattice) -> Result<Self> {
        if period_lattice.dimension() != 2 {
            return Err(Error::Unsupported("tori are two-dimensional".into()));
        }
        let area = period_lattice.covolume();
        Ok(Self { period_lattice, area })
    }

    /// The square torus [0, ℓ)².
    pub fn square(side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return Err(Error::Invalid(format!("torus side must be positive, got {side}")));
        }
        Self::new(Lattice::square(2)?.scaled(side))
    }

    /// The torus with period lattice k·L; it contains k² points of L.
    pub fn commensurate(lattice: &Lattice, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("commensurability factor must be at least 1".into()));
        }
        Self::new(lattice.scaled(k as f64))
    }

    /// The same torus scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.period_lattice.scaled(factor))
    }

    pub fn basis_vectors(&self) -> [Vec2; 2] {
        let b = self.period_lattice.basis();
        [Vec2::new(b[(0, 0)], b[(1, 0)]), Vec2::new(b[(0, 1)], b[(1, 1)])]
    }

    /// Representative of x mod the period lattice in the centred fundamental parallelogram.
    pub fn reduce_centered(&self, x: Vec2) -> Vec2 {
        let [b1, b2] = self.basis_vectors();
        let (f1, f2) = self.fractional(x);
        b1 * (f1 - f1.round()) + b2 * (f2 - f2.round())
    }

    /// Representative of x mod the period lattice in the parallelogram [0,1)b₁ + [0,1)b₂.
    pub fn wrap(&self, x: Vec2) -> Vec2 {
        let [b1, b2] = self.basis_vectors();
        let (f1, f2) = self.fractional(x);
        let (g1, g2) = (f1 - f1.floor(), f2 - f2.floor());
        // floor can round up to exactly 1 for tiny negative inputs
        let g1 = if g1 >= 1.0 { 0.0 } else { g1 };
        let g2 = if g2 >= 1.0 { 0.0 } else { g2 };
        b1 * g1 + b2 * g2
    }

    fn fractional(&self, x: Vec2) -> (f64, f64) {
        let [b1, b2] = self.basis_vectors();
        let det = b1.perp(&b2);
        (x.perp(&b2) / det, b1.perp(&x) / det)
    }
}

/// Precomputed Ewald data for repeated evaluation of G_T and its gradient.
#[derive(Debug, Clone)]
pub struct PeriodicGreen {
    torus: Torus,
    eta: f64,
    /// πη/|T|
    direct_scale: f64,
    direct: Vec<Vec2>,
    /// (m, e^{-π|T||m|²/η}/(2π|T||m|²))
    dual: Vec<(Vec2, f64)>,
    cutoff: f64,
}

impl PeriodicGreen {
    pub fn new(torus: &Torus, p: &EwaldParams) -> Result<Self> {
        p.validate()?;
        let area = torus.area;
        let eta = p.split;
        let cutoff = p.exponent_cutoff();
        let [b1, b2] = torus.basis_vectors();
        // reduced arguments lie within this distance of the origin
        let margin = 0.5 * (b1.norm() + b2.norm());
        let direct_r = p.shell_cutoff.unwrap_or_else(|| (cutoff * area / (PI * eta)).sqrt()) + margin;
        let mut direct: Vec<Vec2> = vec![Vec2::zeros()];
        direct.extend(
            torus
                .period_lattice
                .vectors_within(direct_r)
                .into_iter()
                .map(|(v, _)| Vec2::new(v[0], v[1])),
        );
        let dual_r = (cutoff * eta / (PI * area)).sqrt();
        let dual = torus
            .period_lattice
            .dual()?
            .vectors_within(dual_r)
            .into_iter()
            .rev()
            .map(|(m, r)| {
                let m2 = r * r;
                let w = (-PI * area * m2 / eta).exp() / (2.0 * PI * area * m2);
                (Vec2::new(m[0], m[1]), w)
            })
            .collect();
        Ok(Self {
            torus: torus.clone(),
            eta,
            direct_scale: PI * eta / area,
            direct,
            dual,
            cutoff,
        })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    fn singular(x: Vec2) -> Error {
        Error::Singular(format!(
            "periodic Green's function evaluated on the period lattice at ({}, {})",
            x.x, x.y
        ))
    }

    /// G_T(x).
    pub fn value(&self, x: Vec2) -> Result<f64> {
        let y = self.torus.reduce_centered(x);
        let mut direct = 0.0;
        for v in self.direct.iter().rev() {
            let z = self.direct_scale * (y - v).norm_squared();
            if z < 1e-300 {
                return Err(Self::singular(x));
            }
            if z < self.cutoff {
                direct += upper_gamma_unchecked(0.0, z);
            }
        }
        let mut dual = 0.0;
        for (m, w) in &self.dual {
            dual += w * (2.0 * PI * m.dot(&y)).cos();
        }
        Ok(0.5 * direct - 0.5 / self.eta + dual)
    }

    /// ∇G_T(x).
    pub fn gradient(&self, x: Vec2) -> Result<Vec2> {
        let y = self.torus.reduce_centered(x);
        let mut g = Vec2::zeros();
        for v in self.direct.iter().rev() {
            let d = y - v;
            let r2 = d.norm_squared();
            let z = self.direct_scale * r2;
            if z < 1e-300 {
                return Err(Self::singular(x));
            }
            if z < self.cutoff {
                g -= d * ((-z).exp() / r2);
            }
        }
        for (m, w) in &self.dual {
            g -= m * (2.0 * PI * w * (2.0 * PI * m.dot(&y)).sin());
        }
        Ok(g)
    }

    /// G_T(x) and ∇G_T(x) in one pass.
    pub fn value_and_gradient(&self, x: Vec2) -> Result<(f64, Vec2)> {
        let y = self.torus.reduce_centered(x);
        let mut direct = 0.0;
        let mut g = Vec2::zeros();
        for v in self.direct.iter().rev() {
            let d = y - v;
            let r2 = d.norm_squared();
            let z = self.direct_scale * r2;
            if z < 1e-300 {
                return Err(Self::singular(x));
            }
            if z < self.cutoff {
                direct += upper_gamma_unchecked(0.0, z);
                g -= d * ((-z).exp() / r2);
            }
        }
        let mut dual = 0.0;
        for (m, w) in &self.dual {
            let (sin, cos) = (2.0 * PI * m.dot(&y)).sin_cos();
            dual += w * cos;
            g -= m * (2.0 * PI * w * sin);
        }
        Ok((0.5 * direct - 0.5 / self.eta + dual, g))
    }

    /// c_T = lim_{x→0} (G_T(x) + log|x|).
    pub fn self_constant(&self) -> f64 {
        let mut direct = 0.0;
        for v in self.direct.iter().skip(1).rev() {
            let z = self.direct_scale * v.norm_squared();
            if z < self.cutoff {
                direct += upper_gamma_unchecked(0.0, z);
            }
        }
        let dual: f64 = self.dual.iter().map(|(_, w)| w).sum();
        -0.5 * euler_gamma() + 0.5 * (self.torus.area / (PI * self.eta)).ln() + 0.5 * direct - 0.5 / self.eta + dual
    }
}

/// G_T(x), the zero-mean periodic Coulomb potential.
pub fn g_periodic(torus: &Torus, x: Vec2, p: &EwaldParams) -> Result<f64> {
    PeriodicGreen::new(torus, p)?.value(x)
}

/// ∇G_T(x).
pub fn g_periodic_gradient(torus: &Torus, x: Vec2, p: &EwaldParams) -> Result<Vec2> {
    PeriodicGreen::new(torus, p)?.gradient(x)
}

/// c_T = lim_{x→0} (G_T(x) + log|x|).
pub fn self_constant(torus: &Torus, p: &EwaldParams) -> Result<f64> {
    Ok(PeriodicGreen::new(torus, p)?.self_constant())
}

/// The Madelung constant C_mad = c_T of the unit square torus.
pub fn madelung() -> f64 {
    let torus = Torus::square(1.0).expect("unit torus");
    self_constant(&torus, &EwaldParams::default()).expect("default parameters are valid")
}

/// 2ζ'_{Z²}(0), the Madelung constant through the Epstein zeta function.
pub fn madelung_from_zeta() -> f64 {
    let sq = Lattice::square(2).expect("square lattice");
    2.0 * epstein_zeta_deriv0(&sq, &EwaldParams::default()).expect("default parameters are valid")
}
