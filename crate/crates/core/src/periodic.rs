//! The periodic Jellium energy of n points on a torus,
//!
//! ```text
//! E_per(x₁, …, x_n) = Σ_{j<k} G_T(x_j - x_k) + (n/2) c_T,
//! ```
//!
//! with c_T the self constant of the torus (log ℓ + C_mad on the square torus
//! of side ℓ).

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epstein::EwaldParams;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::greens::{PeriodicGreen, Torus};
use crate::jellium_finite::SmearedCharge;
use crate::lattice::Lattice;

/// Points are treated as coincident below this separation.
pub const MIN_SEPARATION: f64 = 1e-9;

/// n points on a torus, stored reduced into the fundamental parallelogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub torus: Torus,
    pub points: Vec<Vec2>,
}

impl PointConfiguration {
    pub fn new(torus: Torus, points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("a configuration needs at least one point".into()));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Invalid("non-finite point coordinates".into()));
        }
        let points = points.into_iter().map(|p| torus.wrap(p)).collect();
        Ok(Self { torus, points })
    }

    /// The k² points of `lattice` on the torus with periods k·lattice.
    pub fn perfect_sublattice(lattice: &Lattice, k: usize) -> Result<Self> {
        let torus = Torus::commensurate(lattice, k)?;
        let b = lattice.basis();
        let (b1, b2) = (Vec2::new(b[(0, 0)], b[(1, 0)]), Vec2::new(b[(0, 1)], b[(1, 1)]));
        let mut points = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                points.push(b1 * i as f64 + b2 * j as f64);
            }
        }
        Self::new(torus, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points per unit area.
    pub fn density(&self) -> f64 {
        self.points.len() as f64 / self.torus.area
    }

    pub fn translated(&self, t: Vec2) -> Self {
        Self {
            torus: self.torus.clone(),
            points: self.points.iter().map(|p| self.torus.wrap(p + t)).collect(),
        }
    }

    /// The same configuration on the torus scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let torus = self.torus.scaled(factor)?;
        Self::new(torus, self.points.iter().map(|p| p * factor).collect())
    }

    /// The configuration repeated k × k times on the torus with k-fold periods.
    pub fn tiled(&self, k: usize) -> Result<Self> {
        let torus = self.torus.scaled(k as f64)?;
        let [b1, b2] = self.torus.basis_vectors();
        let mut points = Vec::with_capacity(self.points.len() * k * k);
        for i in 0..k {
            for j in 0..k {
                let shift = b1 * i as f64 + b2 * j as f64;
                points.extend(self.points.iter().map(|p| p + shift));
            }
        }
        Self::new(torus, points)
    }

    /// Smallest distance between two points on the torus.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (j, a) in self.points.iter().enumerate() {
            for b in &self.points[j + 1..] {
                best = best.min(self.torus_distance(*a, *b));
            }
        }
        best
    }

    fn torus_distance(&self, a: Vec2, b: Vec2) -> f64 {
        // The centred representative need not be the shortest one on skew tori.
        let d = self.torus.reduce_centered(a - b);
        let [b1, b2] = self.torus.basis_vectors();
        let mut best = d.norm();
        for i in -1..=1 {
            for j in -1..=1 {
                best = best.min((d + b1 * i as f64 + b2 * j as f64).norm());
            }
        }
        best
    }

    fn check_distinct(&self) -> Result<()> {
        for (j, a) in self.points.iter().enumerate() {
            for (k, b) in self.points.iter().enumerate().skip(j + 1) {
                if self.torus_distance(*a, *b) < MIN_SEPARATION {
                    return Err(Error::Singular(format!("points {j} and {k} coincide on the torus")));
                }
            }
        }
        Ok(())
    }
}

/// A named contribution to an energy with its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerm {
    pub term: String,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMetadata {
    pub backend: String,
    pub tol: f64,
    pub split: Option<f64>,
    pub n: usize,
    pub area: f64,
    /// False when the density differs from 1.
    pub canonical: bool,
    pub notes: Vec<String>,
}

/// Energy with its breakdown; total = pairwise + self_term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub pairwise: f64,
    pub self_term: f64,
    pub gradient_norm: Option<f64>,
    pub terms: Vec<EnergyTerm>,
    pub metadata: EnergyMetadata,
}

impl EnergyReport {
    pub fn per_point(&self) -> f64 {
        self.total / self.metadata.n as f64
    }

    /// CSV rows {term, value, tol}.
    pub fn terms_csv(&self) -> String {
        let mut out = String::from("term,value,tol\n");
        for t in &self.terms {
            let _ = writeln!(out, "{},{:.17e},{:.3e}", t.term, t.value, t.tol);
        }
        out
    }
}

fn periodic_metadata(cfg: &PointConfiguration, p: &EwaldParams) -> EnergyMetadata {
    let canonical = (cfg.density() - 1.0).abs() < 1e-12;
    let mut notes = vec!["self term uses the torus self constant c_T (log l + C_mad on square tori)".to_string()];
    if !canonical {
        notes.push(format!("density {} differs from 1", cfg.density()));
    }
    EnergyMetadata {
        backend: "ewald".into(),
        tol: p.tol,
        split: Some(p.split),
        n: cfg.len(),
        area: cfg.torus.area,
        canonical,
        notes,
    }
}

/// Energy of one row of the pair sum and its gradient contributions.
type Row = (f64, Vec<(usize, Vec2)>);

/// Pair energy and per-point gradients of Σ_{j<k} G(x_j - x_k).
fn pair_sum(green: &PeriodicGreen, points: &[Vec2], with_gradient: bool) -> Result<(f64, Vec<Vec2>)> {
    let n = points.len();
    let rows: Vec<Result<Row>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = 0.0;
            let mut grads = Vec::new();
            for k in j + 1..n {
                let d = points[j] - points[k];
                if with_gradient {
                    let (v, g) = green.value_and_gradient(d)?;
                    e += v;
                    grads.push((k, g));
                } else {
                    e += green.value(d)?;
                }
            }
            Ok((e, grads))
        })
        .collect();
    let mut energy = 0.0;
    let mut gradient = vec![Vec2::zeros(); if with_gradient { n } else { 0 }];
    for (j, row) in rows.into_iter().enumerate() {
        let (e, grads) = row?;
        energy += e;
        for (k, g) in grads {
            gradient[j] += g;
            gradient[k] -= g;
        }
    }
    Ok((energy, gradient))
}

fn report(cfg: &PointConfiguration, p: &EwaldParams, green: &PeriodicGreen, pairwise: f64, gradient_norm: Option<f64>) -> EnergyReport {
    let self_term = 0.5 * cfg.len() as f64 * green.self_constant();
    EnergyReport {
        total: pairwise + self_term,
        pairwise,
        self_term,
        gradient_norm,
        terms: vec![
            EnergyTerm {
                term: "pairwise".into(),
                value: pairwise,
                tol: p.tol,
            },
            EnergyTerm {
                term: "self".into(),
                value: self_term,
                tol: p.tol,
            },
        ],
        metadata: periodic_metadata(cfg, p),
    }
}

/// E_per of the configuration.
pub fn e_per(cfg: &PointConfiguration, p: &EwaldParams) -> Result<EnergyReport> {
    cfg.check_distinct()?;
    let green = PeriodicGreen::new(&cfg.torus, p)?;
    let (pairwise, _) = pair_sum(&green, &cfg.points, false)?;
    Ok(report(cfg, p, &green, pairwise, None))
}

/// ∂E_per/∂x_j for every point.
pub fn e_per_gradient(cfg: &PointConfiguration, p: &EwaldParams) -> Result<Vec<Vec2>> {
    Ok(e_per_with_gradient(cfg, p)?.1)
}

/// E_per together with its gradient; the report carries the gradient norm.
pub fn e_per_with_gradient(cfg: &PointConfiguration, p: &EwaldParams) -> Result<(EnergyReport, Vec<Vec2>)> {
    cfg.check_distinct()?;
    let green = PeriodicGreen::new(&cfg.torus, p)?;
    let (pairwise, gradient) = pair_sum(&green, &cfg.points, true)?;
    let norm = gradient_norm(&gradient);
    Ok((report(cfg, p, &green, pairwise, Some(norm)), gradient))
}

/// Total energy and gradient with a prebuilt Green's function, for repeated
/// evaluation on a fixed torus.
pub(crate) fn energy_and_gradient(green: &PeriodicGreen, points: &[Vec2]) -> Result<(f64, Vec<Vec2>)> {
    let (pairwise, gradient) = pair_sum(green, points, true)?;
    Ok((pairwise + 0.5 * points.len() as f64 * green.self_constant(), gradient))
}

/// Euclidean norm of the stacked gradient.
pub fn gradient_norm(gradient: &[Vec2]) -> f64 {
    gradient.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
}

/// Per-point gradients as CSV rows {index, x, y, gx, gy}.
pub fn gradient_csv(cfg: &PointConfiguration, gradient: &[Vec2]) -> String {
    let mut out = String::from("index,x,y,gx,gy\n");
    for (i, (x, g)) in cfg.points.iter().zip(gradient).enumerate() {
        let _ = writeln!(out, "{i},{:.17e},{:.17e},{:.17e},{:.17e}", x.x, x.y, g.x, g.y);
    }
    out
}

/// ½ ∬ G_T d f d f for f a neutral sum of uniformly charged disks of a common
/// radius whose periodic images do not overlap.
///
/// The disk averages of G differ from G at the centres by a constant that
/// cancels for neutral f, leaving
/// ½ Σ_{i≠j} q_i q_j G(c_i - c_j) + ½ Σ q_i² (c_T - log a + ¼).
pub fn smeared_periodic_energy(torus: &Torus, charges: &[SmearedCharge], p: &EwaldParams) -> Result<f64> {
    let Some(first) = charges.first() else {
        return Ok(0.0);
    };
    let a = first.radius;
    if charges.iter().any(|c| (c.radius - a).abs() > 1e-12 * a) {
        return Err(Error::Unsupported("smeared periodic energy needs a common radius".into()));
    }
    let total: f64 = charges.iter().map(|c| c.charge).sum();
    let scale: f64 = charges.iter().map(|c| c.charge.abs()).sum();
    if total.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::Invalid(format!("charge system is not neutral (net charge {total})")));
    }
    let cfg = PointConfiguration {
        torus: torus.clone(),
        points: charges.iter().map(|c| c.center.coords).collect(),
    };
    for (j, c) in charges.iter().enumerate() {
        for d in &charges[j + 1..] {
            if cfg.torus_distance(c.center.coords, d.center.coords) < 2.0 * a {
                return Err(Error::Unsupported("overlapping disks on the torus".into()));
            }
        }
    }
    let green = PeriodicGreen::new(torus, p)?;
    let mut pairs = 0.0;
    for (j, c) in charges.iter().enumerate() {
        for d in &charges[j + 1..] {
            pairs += c.charge * d.charge * green.value(c.center - d.center)?;
        }
    }
    let selfs: f64 = charges.iter().map(|c| c.charge * c.charge).sum::<f64>() * (green.self_constant() - a.ln() + 0.25);
    Ok(pairs + 0.5 * selfs)
}
