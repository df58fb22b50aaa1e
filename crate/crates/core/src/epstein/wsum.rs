//! Cell-charge representation of the Epstein zeta function.
//!
//! With Q the Wigner–Seitz cell and F the Riesz kernel, the neutral
//! point-minus-cell pair potential
//!
//! ```text
//! W̃(x) = F * (δ - 1_Q) * (δ - 1_Q) (x) = F(x) - 2 (F * 1_Q)(x) + (F * 1_Q * 1_Q)(x)
//! ```
//!
//! decays like |x|^{-s-4}, and for d - 4 < s < d
//!
//! ```text
//! ζ_L(s) = ½ Σ_{x≠0} W̃(x) - ∫_Q F + ½ ∬_{Q×Q} F(y - z) dy dz.
//! ```
//!
//! Both cell integrals are turned into boundary integrals (F = ΔH = Δ²K with
//! H, K radial), which leaves bounded integrands on the edges of Q even when
//! x + Q touches Q. Lattice points beyond the explicit radius are replaced by
//! the leading multipole term ¼ Σ M_ij M_kl ∂_ijkl F(x), with M the
//! second-moment tensor of Q.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryIntegrals;
use crate::error::{Error, Result};
use crate::geometry::{Point2, RadialKernel};
use crate::lattice::{Lattice, SHELL_TOLERANCE};

/// W̃ summed over one shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WShellRecord {
    pub radius: f64,
    pub count: usize,
    pub sum: f64,
    /// max over the shell of |W̃(x)|·|x|^{s+4}
    pub scaled_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WSumReport {
    pub value: f64,
    pub s: f64,
    /// Radius up to which W̃ was integrated explicitly.
    pub explicit_radius: f64,
    pub lattice_sum: f64,
    pub multipole_tail: f64,
    pub cell_single: f64,
    pub cell_double: f64,
    pub quadrature_error: f64,
    pub shells: Vec<WShellRecord>,
}

/// Derivatives h', h'', h''', h'''' of the kernel written as h(q), q = r².
fn kernel_q_derivatives(kernel: &RadialKernel, q: f64) -> [f64; 4] {
    match *kernel {
        RadialKernel::Power(s) => {
            let a = -0.5 * s;
            let c1 = a;
            let c2 = c1 * (a - 1.0);
            let c3 = c2 * (a - 2.0);
            let c4 = c3 * (a - 3.0);
            let base = q.powf(a);
            [
                c1 * base / q,
                c2 * base / (q * q),
                c3 * base / (q * q * q),
                c4 * base / (q * q * q * q),
            ]
        }
        RadialKernel::NegLog => [-0.5 / q, 0.5 / (q * q), -1.0 / (q * q * q), 3.0 / (q * q * q * q)],
        RadialKernel::DiskAveragedLog(_) => unreachable!("not a Riesz kernel"),
    }
}

/// ¼ Σ M_ij M_kl ∂_ijkl F(x).
fn multipole_lead(kernel: &RadialKernel, m: &[[f64; 2]; 2], x: [f64; 2]) -> f64 {
    let q = x[0] * x[0] + x[1] * x[1];
    let [_, h2, h3, h4] = kernel_q_derivatives(kernel, q);
    let mx = [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]];
    let xmx = x[0] * mx[0] + x[1] * mx[1];
    let xm2x = mx[0] * mx[0] + mx[1] * mx[1];
    let tr = m[0][0] + m[1][1];
    let tr2 = m[0][0] * m[0][0] + 2.0 * m[0][1] * m[1][0] + m[1][1] * m[1][1];
    let t = 16.0 * h4 * xmx * xmx + 8.0 * h3 * (2.0 * tr * xmx + 4.0 * xm2x) + 4.0 * h2 * (tr * tr + 2.0 * tr2);
    0.25 * t
}

/// ∫_{|x|>r} of the angular average of the multipole term (unit density).
fn multipole_continuum_tail(kernel: &RadialKernel, m: &[[f64; 2]; 2], r: f64) -> f64 {
    match *kernel {
        RadialKernel::Power(s) => {
            let tr = m[0][0] + m[1][1];
            let tr2 = m[0][0] * m[0][0] + 2.0 * m[0][1] * m[1][0] + m[1][1] * m[1][1];
            let big_a = tr * tr + 2.0 * tr2;
            let a = -0.5 * s;
            // T̄(r) = A · 2a²(a-1)² r^{2a-4}
            let coeff = big_a * 2.0 * a * a * (a - 1.0) * (a - 1.0);
            0.25 * coeff * 2.0 * PI * r.powf(2.0 * a - 2.0) / (2.0 - 2.0 * a)
        }
        // 2h''''q² + 8h'''q + 4h'' vanishes identically for -log.
        _ => 0.0,
    }
}

/// W̃(x) = F(x) - 2 ∫_Q F(x - y) dy + ∬_{Q×Q} F(x + y - z) dy dz.
fn w_tilde(ints: &BoundaryIntegrals, x: Point2, tol: f64) -> Result<(f64, f64)> {
    let (single, e1) = ints.single(x, 0.25 * tol)?;
    let (double, e2) = ints.double(ints, x, 0.5 * tol)?;
    Ok((ints.kernel().value(x.coords.norm()) - 2.0 * single + double, 2.0 * e1 + e2))
}

/// ζ_L(s) (or ζ_L'(0) when s = 0) from the cell-charge representation.
pub fn direct_w_sum(lattice: &Lattice, s: f64, quad_tol: f64) -> Result<f64> {
    Ok(direct_w_sum_detailed(lattice, s, quad_tol)?.value)
}

pub fn direct_w_sum_detailed(lattice: &Lattice, s: f64, quad_tol: f64) -> Result<WSumReport> {
    if lattice.dimension() != 2 {
        return Err(Error::Unsupported("the cell-charge backend is planar only".into()));
    }
    if !lattice.is_normalized() {
        return Err(Error::Normalization(lattice.covolume()));
    }
    if !(0.0..2.0).contains(&s) {
        return Err(Error::Range(format!("cell-charge backend requires 0 <= s < 2, got {s}")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::Invalid("quad_tol must be positive".into()));
    }
    let kernel = if s == 0.0 { RadialKernel::NegLog } else { RadialKernel::Power(s) };
    let cell = lattice.wigner_seitz()?.polygon();
    let moment = cell.second_moment();
    let ints = BoundaryIntegrals::from_polygon(&cell, kernel);

    // Explicit radius: the next multipole order decays like |x|^{-s-6}, its
    // tail beyond R like R^{-s-4}.
    let explicit_radius = quad_tol.powf(-1.0 / (s + 4.0)).clamp(6.0, 30.0);
    let points = lattice.vectors_within(explicit_radius);
    // Central symmetry: W̃(x) = W̃(-x), so only half the points are integrated.
    let half: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|(v, _)| v[1] > 0.0 || (v[1] == 0.0 && v[0] > 0.0))
        .map(|(v, r)| (v[0], v[1], *r))
        .collect();
    let term_tol = (quad_tol / (4.0 * (half.len() as f64 + 1.0))).min(1e-10);
    let evaluated: Vec<Result<(f64, f64, f64)>> = half
        .par_iter()
        .map(|&(x0, x1, r)| {
            let (w, err) = w_tilde(&ints, Point2::new(x0, x1), term_tol)?;
            Ok((r, w, err))
        })
        .collect();

    let mut shells: Vec<WShellRecord> = Vec::new();
    let mut lattice_sum = 0.0;
    let mut quadrature_error = 0.0;
    for item in evaluated {
        let (r, w, err) = item?;
        // each evaluated point stands for itself and its mirror image
        lattice_sum += 2.0 * w;
        quadrature_error += 2.0 * err;
        let scaled = w.abs() * r.powf(s + 4.0);
        match shells.last_mut() {
            Some(sh) if (sh.radius - r).abs() <= SHELL_TOLERANCE => {
                sh.count += 2;
                sh.sum += 2.0 * w;
                sh.scaled_max = sh.scaled_max.max(scaled);
            }
            _ => shells.push(WShellRecord {
                radius: r,
                count: 2,
                sum: 2.0 * w,
                scaled_max: scaled,
            }),
        }
    }

    // Multipole tail: explicit lattice sum to an outer radius, then a continuum integral.
    let outer = 20.0 * explicit_radius;
    let tail_points = lattice.vectors_within(outer);
    let mut multipole_tail = 0.0;
    for (v, r) in tail_points.iter().rev() {
        if *r > explicit_radius * (1.0 + 1e-12) {
            multipole_tail += multipole_lead(&kernel, &moment, [v[0], v[1]]);
        }
    }
    multipole_tail += multipole_continuum_tail(&kernel, &moment, outer);

    let (cell_single, err_single) = ints.single(Point2::origin(), term_tol)?;
    let (double_self, err_self) = ints.double(&ints, Point2::origin(), term_tol)?;
    let cell_double = 0.5 * double_self;
    quadrature_error += err_single + 0.5 * err_self;

    let value = 0.5 * (lattice_sum + multipole_tail) - cell_single + cell_double;
    if quadrature_error > quad_tol {
        return Err(Error::Accuracy {
            achieved: quadrature_error,
            target: quad_tol,
        });
    }
    Ok(WSumReport {
        value,
        s,
        explicit_radius,
        lattice_sum,
        multipole_tail,
        cell_single,
        cell_double,
        quadrature_error,
        shells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipole_lead_matches_bilaplacian_for_isotropic_cells() {
        // isotropic M = m I: lead = ¼ m² Δ² r^{-s} = ¼ m² s²(s+2)² r^{-s-4}
        let m = 1.0 / 12.0;
        let mm = [[m, 0.0], [0.0, m]];
        for &s in &[0.5, 1.0, 1.5] {
            let x = [3.0, 4.0];
            let r: f64 = 5.0;
            let expect = 0.25 * m * m * s * s * (s + 2.0) * (s + 2.0) * r.powf(-s - 4.0);
            let got = multipole_lead(&RadialKernel::Power(s), &mm, x);
            assert!((got - expect).abs() < 1e-15 * expect.abs().max(1.0), "{got} vs {expect}");
        }
        assert!(multipole_lead(&RadialKernel::NegLog, &mm, [3.0, 4.0]).abs() < 1e-18);
    }

    #[test]
    fn multipole_lead_matches_far_field_of_w() {
        let cell = Lattice::square(2).unwrap().wigner_seitz().unwrap().polygon();
        let ints = BoundaryIntegrals::from_polygon(&cell, RadialKernel::Power(1.0));
        let x = Point2::new(9.0, 4.0);
        let (w, _) = w_tilde(&ints, x, 1e-13).unwrap();
        let lead = multipole_lead(&ints.kernel(), &cell.second_moment(), [x.x, x.y]);
        assert!(((w - lead) / lead).abs() < 0.05, "{w} vs {lead}");
    }

    #[test]
    fn rejects_out_of_window() {
        let l = Lattice::square(2).unwrap();
        assert!(matches!(direct_w_sum(&l, 2.0, 1e-6), Err(Error::Range(_))));
        assert!(matches!(direct_w_sum(&l, -0.5, 1e-6), Err(Error::Range(_))));
        assert!(direct_w_sum(&Lattice::integers_1d(), 0.5, 1e-6).is_err());
    }

    #[test]
    fn agrees_with_ewald_and_closed_form() {
        use crate::epstein::{closed_form_triangular, epstein_zeta, epstein_zeta_deriv0, EwaldParams};
        let p = EwaldParams::default();
        let sq = Lattice::square(2).unwrap();
        let tri = Lattice::triangular();
        for (l, s) in [(&sq, 0.5), (&sq, 1.0), (&sq, 1.5), (&tri, 1.0)] {
            let v = direct_w_sum(l, s, 1e-6).unwrap();
            assert!((v - epstein_zeta(l, s, &p).unwrap()).abs() < 1e-6, "s = {s}");
        }
        let v = direct_w_sum(&tri, 1.0, 1e-6).unwrap();
        assert!((v - closed_form_triangular(1.0).unwrap()).abs() < 1e-6);
        // s = 0 with the logarithmic kernel gives the derivative at 0
        let v = direct_w_sum(&tri, 0.0, 1e-6).unwrap();
        assert!((v - epstein_zeta_deriv0(&tri, &p).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn w_decays_like_inverse_power_s_plus_4() {
        for (l, s) in [(Lattice::square(2).unwrap(), 0.5), (Lattice::triangular(), 1.0)] {
            let rep = direct_w_sum_detailed(&l, s, 1e-6).unwrap();
            let n = rep.shells.len();
            assert!(n > 20);
            let outer = rep.shells[n - 5..].iter().map(|sh| sh.scaled_max).fold(0.0, f64::max);
            let middle = rep.shells[n / 3..n - 5].iter().map(|sh| sh.scaled_max).fold(0.0, f64::max);
            assert!(outer.is_finite() && outer <= 1.5 * middle, "{outer} vs {middle}");
        }
    }
}
