//! Epstein zeta functions of lattices and the lattice Jellium energy.
//!
//! The Epstein zeta function is normalized as ζ_L(s) = ½ Σ_{x∈L\0} |x|^{-s}
//! and continued to all s ≠ d through the incomplete-gamma (Ewald) splitting
//! of its completed form
//!
//! ```text
//! Λ(s) = π^{-s/2} Γ(s/2) Σ' |x|^{-s}
//!      = Σ'_x (π|x|²)^{-s/2} Γ(s/2, πη|x|²)
//!      + Σ'_k (π|k|²)^{-(d-s)/2} Γ((d-s)/2, π|k|²/η)
//!      - 2η^{s/2}/s - 2η^{(s-d)/2}/(d-s)
//! ```
//!
//! with k running over the dual lattice and η > 0 the split point. The result
//! is independent of η, which the tests check.

mod wsum;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::specfun::{self, euler_gamma, rgamma, upper_gamma_unchecked};

pub use wsum::{direct_w_sum, direct_w_sum_detailed, WShellRecord, WSumReport};

/// Parameters of the Ewald splitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwaldParams {
    /// Mellin split point η (dimensionless, > 0).
    pub split: f64,
    /// Direct and dual radius; derived from `tol` when absent.
    pub shell_cutoff: Option<f64>,
    pub tol: f64,
}

impl Default for EwaldParams {
    fn default() -> Self {
        Self {
            split: 1.0,
            shell_cutoff: None,
            tol: 1e-15,
        }
    }
}

impl EwaldParams {
    pub fn with_split(split: f64) -> Self {
        Self { split, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0) || !self.split.is_finite() {
            return Err(Error::Invalid(format!("Ewald split must be positive, got {}", self.split)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("Ewald tolerance must be positive, got {}", self.tol)));
        }
        if let Some(c) = self.shell_cutoff {
            if !(c > 0.0) {
                return Err(Error::Invalid(format!("shell cutoff must be positive, got {c}")));
            }
        }
        Ok(())
    }

    /// Smallest exponent argument kept in the Gaussian-type tails.
    pub(crate) fn exponent_cutoff(&self) -> f64 {
        // e^{-x} against tol with room for polynomial prefactors and shell multiplicity.
        (1.0 / self.tol).ln() + 12.0
    }

    /// Radius r with π·scale·r² = exponent cutoff, unless given explicitly.
    pub(crate) fn radius_for(&self, scale: f64) -> f64 {
        self.shell_cutoff.unwrap_or_else(|| (self.exponent_cutoff() / (PI * scale)).sqrt())
    }
}

/// Exponent of a Riesz interaction in ambient dimension d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszExponent {
    pub s: f64,
    pub d: usize,
}

impl RieszExponent {
    /// Checks the window d - 4 < s < d in which the lattice energy is defined.
    pub fn check_jellium_range(&self) -> Result<()> {
        let d = self.d as f64;
        if self.s > d - 4.0 && self.s < d {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "lattice Jellium energy requires d - 4 < s < d, got s = {} with d = {}",
                self.s, self.d
            )))
        }
    }
}

/// Riesz potential: |x|^{-s} for s > 0, -log|x| for s = 0, -|x|^{-s} for s < 0.
pub fn riesz_potential(s: f64, x: &[f64]) -> Result<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Singular("Riesz potential evaluated at the origin".into()));
    }
    Ok(if s > 0.0 {
        r.powf(-s)
    } else if s == 0.0 {
        -r.ln()
    } else {
        -r.powf(-s)
    })
}

fn check_lattice(lattice: &Lattice) -> Result<()> {
    if !lattice.is_normalized() {
        return Err(Error::Normalization(lattice.covolume()));
    }
    Ok(())
}

/// Squared norms of nonzero direct and dual vectors inside the Ewald cutoffs.
struct EwaldShells {
    direct: Vec<f64>,
    dual: Vec<f64>,
}

impl EwaldShells {
    fn new(lattice: &Lattice, p: &EwaldParams) -> Result<Self> {
        let direct_r = p.radius_for(p.split);
        let dual_r = p.radius_for(1.0 / p.split);
        let direct = lattice.vectors_within(direct_r).into_iter().map(|(_, r)| r * r).collect();
        let dual = lattice.dual()?.vectors_within(dual_r).into_iter().map(|(_, r)| r * r).collect();
        Ok(Self { direct, dual })
    }

    /// Regular part R(s) = Λ(s) + 2η^{s/2}/s.
    fn regular(&self, d: f64, s: f64, eta: f64) -> f64 {
        let a = 0.5 * s;
        let b = 0.5 * (d - s);
        let mut direct = 0.0;
        for &r2 in self.direct.iter().rev() {
            let x = PI * r2;
            direct += (-a * x.ln()).exp() * upper_gamma_unchecked(a, eta * x);
        }
        let mut dual = 0.0;
        for &k2 in self.dual.iter().rev() {
            let x = PI * k2;
            dual += (-b * x.ln()).exp() * upper_gamma_unchecked(b, x / eta);
        }
        direct + dual - 2.0 * eta.powf(-b) / (d - s)
    }
}

/// Completed function Λ(s) = π^{-s/2}Γ(s/2) Σ'|x|^{-s} = π^{-s/2}Γ(s/2)·2ζ_L(s).
pub fn completed_epstein(lattice: &Lattice, s: f64, p: &EwaldParams) -> Result<f64> {
    check_lattice(lattice)?;
    p.validate()?;
    let d = lattice.dimension() as f64;
    if s == 0.0 || s == d {
        return Err(Error::Pole {
            function: "completed_epstein",
            at: s,
        });
    }
    let shells = EwaldShells::new(lattice, p)?;
    Ok(shells.regular(d, s, p.split) - 2.0 * p.split.powf(0.5 * s) / s)
}

/// Analytic continuation of ζ_L(s) = ½ Σ_{x∈L\0} |x|^{-s}; pole at s = d.
pub fn epstein_zeta(lattice: &Lattice, s: f64, p: &EwaldParams) -> Result<f64> {
    check_lattice(lattice)?;
    p.validate()?;
    let d = lattice.dimension() as f64;
    if s == d {
        return Err(Error::Pole {
            function: "epstein_zeta",
            at: s,
        });
    }
    if s == 0.0 {
        return Ok(-0.5);
    }
    let shells = EwaldShells::new(lattice, p)?;
    let lambda = shells.regular(d, s, p.split) - 2.0 * p.split.powf(0.5 * s) / s;
    Ok(0.5 * PI.powf(0.5 * s) * rgamma(0.5 * s) * lambda)
}

/// ζ_L'(0), from the first-order expansion of π^{s/2}/Γ(s/2)·Λ(s) at s = 0:
/// ζ_L'(0) = (R(0) - ln η - γ - ln π) / 4.
pub fn epstein_zeta_deriv0(lattice: &Lattice, p: &EwaldParams) -> Result<f64> {
    check_lattice(lattice)?;
    p.validate()?;
    let d = lattice.dimension() as f64;
    let shells = EwaldShells::new(lattice, p)?;
    let r0 = shells.regular(d, 0.0, p.split);
    Ok(0.25 * (r0 - p.split.ln() - euler_gamma() - PI.ln()))
}

fn tri_c() -> f64 {
    (2.0 / 3f64.sqrt()).sqrt()
}

/// Closed form ζ_L(s) = 3 c^{-s} ζ(s/2) L₃(s/2) for the unit-covolume triangular lattice.
pub fn closed_form_triangular(s: f64) -> Result<f64> {
    if s == 2.0 {
        return Err(Error::Pole {
            function: "closed_form_triangular",
            at: 2.0,
        });
    }
    let z = specfun::riemann_zeta(0.5 * s)?;
    Ok(3.0 * tri_c().powf(-s) * z * specfun::dirichlet_l3(0.5 * s))
}

/// d/ds of the triangular closed form at s = 0 by the product rule; equals
/// (1/8) log(48π / Γ(1/6)⁶).
pub fn closed_form_triangular_deriv0() -> f64 {
    let z0 = -0.5;
    let dz0 = specfun::riemann_zeta_deriv(0.0).expect("s = 0 is regular");
    let l0 = specfun::dirichlet_l3(0.0);
    let dl0 = specfun::dirichlet_l3_deriv(0.0);
    3.0 * (-tri_c().ln() * z0 * l0 + 0.5 * dz0 * l0 + 0.5 * z0 * dl0)
}

/// (1/8) log(48π/Γ(1/6)⁶), the triangular value written through Γ(1/6).
pub fn triangular_gamma_form() -> f64 {
    let g = specfun::gamma(1.0 / 6.0).expect("1/6 is not a pole");
    (48.0 * PI / g.powi(6)).ln() / 8.0
}

/// Jellium energy per particle of a unit-covolume lattice configuration with
/// Riesz exponent s, d - 4 < s < d: ζ_L(s) for s > 0, ζ_L'(0) for s = 0 and
/// -ζ_L(s) for s < 0.
pub fn lattice_jellium_energy(lattice: &Lattice, s: f64, p: &EwaldParams) -> Result<f64> {
    RieszExponent { s, d: lattice.dimension() }.check_jellium_range()?;
    if s > 0.0 {
        epstein_zeta(lattice, s, p)
    } else if s == 0.0 {
        epstein_zeta_deriv0(lattice, p)
    } else {
        Ok(-epstein_zeta(lattice, s, p)?)
    }
}
