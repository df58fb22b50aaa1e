//! Renormalized-energy conversions for periodic configurations and the
//! table of published constants they feed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::epstein::{closed_form_triangular_deriv0, EwaldParams};
use crate::error::{Error, Result};
use crate::jellium_finite::lieb_narnhofer_optimal;
use crate::periodic::{e_per, PointConfiguration};
use crate::specfun::{euler_gamma, gamma};

/// W of the periodic current generated by the configuration, per unit area:
/// (2π/|T|) E_per, which is (2π/n) E_per at density one.
pub fn w_periodic(cfg: &PointConfiguration, p: &EwaldParams) -> Result<f64> {
    Ok(2.0 * PI * e_per(cfg, p)?.total / cfg.torus.area)
}

/// m (w - ¼ log m), the scaling law for min W over currents of density m.
pub fn w_scale(w: f64, m: f64) -> Result<f64> {
    check_density(m)?;
    Ok(m * (w - 0.25 * m.ln()))
}

/// m (w - (π/2) log m): how [`w_periodic`] transforms when a density-one
/// configuration is shrunk to density m.
pub fn w_scale_periodic(w: f64, m: f64) -> Result<f64> {
    check_density(m)?;
    Ok(m * (w - 0.5 * PI * m.ln()))
}

fn check_density(m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain("w_scale", format!("density must be positive, got {m}")));
    }
    Ok(())
}

/// c_log = w/π + ½ log 4π.
pub fn c_log_from_w(w: f64) -> f64 {
    w / PI + 0.5 * (4.0 * PI).ln()
}

/// The constant c_{d,s} relating the Riesz renormalized energy to the
/// lattice Jellium energy, for max(0, d-2) ≤ s < d.
pub fn c_ds(d: usize, s: f64) -> Result<f64> {
    let df = d as f64;
    let lower = (df - 2.0).max(0.0);
    if d == 0 || !s.is_finite() || s < lower || s >= df {
        return Err(Error::Range(format!("c_ds needs max(0, d-2) <= s < d, got d = {d}, s = {s}")));
    }
    let sphere = 2.0 * PI.powf(0.5 * df);
    if s == 0.0 && d <= 2 {
        return Ok(2.0 * PI);
    }
    if s == df - 2.0 {
        return Ok((df - 2.0) * sphere / gamma(0.5 * df)?);
    }
    Ok(2.0 * s * sphere * gamma(0.5 * (s + 2.0 - df))? / gamma(0.5 * (s + 2.0))?)
}

/// One recomputed constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub value: f64,
    pub formula: String,
    pub source: String,
    /// Entries this one is computed from.
    pub relation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub entries: Vec<BoundEntry>,
}

impl BoundTable {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    /// steinerberger_W < min_W_lower <= min_W_upper.
    pub fn is_ordered(&self) -> bool {
        match (self.get("steinerberger_W"), self.get("min_W_lower"), self.get("min_W_upper")) {
            (Some(a), Some(b), Some(c)) => a < b && b <= c,
            _ => false,
        }
    }
}

fn entry(name: &str, value: f64, formula: &str, source: &str, relation: &[&str]) -> BoundEntry {
    BoundEntry {
        name: name.into(),
        value,
        formula: formula.into(),
        source: source.into(),
        relation: relation.iter().map(|s| s.to_string()).collect(),
    }
}

/// Bounds on min W and on c_log, each recomputed from its formula.
pub fn bound_table() -> BoundTable {
    let g = euler_gamma();
    let e_tri = closed_form_triangular_deriv0();
    let (_, e_low) = lieb_narnhofer_optimal();
    let w_up = 2.0 * PI * e_tri;
    let w_low = 2.0 * PI * e_low;
    let w_st = -0.5 * PI * (1.0 + g + PI.ln());
    BoundTable {
        entries: vec![
            entry("e_tri", e_tri, "(1/8) log(48π / Γ(1/6)^6)", "triangular lattice energy", &[]),
            entry("e_lower", e_low, "-(3/8 + (1/4) log π)", "smeared-charge lower bound", &[]),
            entry("min_W_upper", w_up, "2π e_tri", "triangular lattice energy", &["e_tri"]),
            entry(
                "min_W_lower",
                w_low,
                "-π (3/4 + (1/2) log π)",
                "smeared-charge lower bound",
                &["e_lower"],
            ),
            entry("steinerberger_W", w_st, "-(π/2)(1 + γ + log π)", "earlier lower bound", &[]),
            entry(
                "c_log_upper",
                c_log_from_w(w_up),
                "2 e_tri + (1/2) log 4π",
                "triangular lattice energy",
                &["min_W_upper"],
            ),
            entry(
                "c_log_lower",
                c_log_from_w(w_low),
                "log 2 - 3/4",
                "smeared-charge lower bound",
                &["min_W_lower"],
            ),
            entry(
                "steinerberger_c_log",
                0.5 * (4f64.ln() - 1.0 - g),
                "(log 4 - 1 - γ)/2",
                "earlier lower bound",
                &[],
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epstein::epstein_zeta_deriv0;
    use crate::greens::madelung;
    use crate::lattice::Lattice;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangular_sublattice_gives_upper_bound() {
        let cfg = PointConfiguration::perfect_sublattice(&Lattice::triangular(), 6).unwrap();
        let w = w_periodic(&cfg, &EwaldParams::default()).unwrap();
        assert!((w + 4.1504).abs() < 1e-4, "{w}");
        assert_abs_diff_eq!(w, 2.0 * PI * closed_form_triangular_deriv0(), epsilon = 1e-9);
    }

    #[test]
    fn single_point_and_square_sublattice() {
        let p = EwaldParams::default();
        let one = PointConfiguration::perfect_sublattice(&Lattice::square(2).unwrap(), 1).unwrap();
        assert_abs_diff_eq!(w_periodic(&one, &p).unwrap(), PI * madelung(), epsilon = 1e-10);
        let four = PointConfiguration::perfect_sublattice(&Lattice::square(2).unwrap(), 2).unwrap();
        let z = epstein_zeta_deriv0(&Lattice::square(2).unwrap(), &p).unwrap();
        assert_abs_diff_eq!(w_periodic(&four, &p).unwrap(), 2.0 * PI * z, epsilon = 1e-10);
    }

    #[test]
    fn invariant_under_relabeling_and_translation() {
        let cfg = PointConfiguration::new(
            crate::greens::Torus::square(2.0).unwrap(),
            vec![
                crate::geometry::Vec2::new(0.1, 0.2),
                crate::geometry::Vec2::new(1.3, 0.4),
                crate::geometry::Vec2::new(0.7, 1.5),
                crate::geometry::Vec2::new(1.8, 1.9),
            ],
        )
        .unwrap();
        let p = EwaldParams::default();
        let w = w_periodic(&cfg, &p).unwrap();
        let mut rev = cfg.clone();
        rev.points.reverse();
        assert_abs_diff_eq!(w, w_periodic(&rev, &p).unwrap(), epsilon = 1e-12);
        let moved = cfg.translated(crate::geometry::Vec2::new(0.77, -3.1));
        assert_abs_diff_eq!(w, w_periodic(&moved, &p).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn scaling_law() {
        assert_eq!(w_scale(-4.1504, 1.0).unwrap(), -4.1504);
        assert_abs_diff_eq!(w_scale(-4.1504, 4.0).unwrap(), 4.0 * (-4.1504 - 0.25 * 4f64.ln()), epsilon = 1e-12);
        assert!((w_scale(-4.1504, 4.0).unwrap() + 17.988).abs() < 1e-3);
        assert!(w_scale(1.0, 0.0).is_err());
        assert!(w_scale_periodic(1.0, -2.0).is_err());
    }

    #[test]
    fn rescaled_periodic_run_follows_periodic_scaling() {
        let p = EwaldParams::default();
        let cfg = PointConfiguration::perfect_sublattice(&Lattice::triangular(), 4).unwrap();
        let w1 = w_periodic(&cfg, &p).unwrap();
        for m in [0.5, 4.0] {
            let dense = cfg.scaled(1.0 / f64::sqrt(m)).unwrap();
            let wm = w_periodic(&dense, &p).unwrap();
            assert_abs_diff_eq!(wm, w_scale_periodic(w1, m).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn c_log_conversions() {
        assert!((c_log_from_w(2.0 * PI * -0.660559) + 0.05561).abs() < 1e-5);
        assert_abs_diff_eq!(
            c_log_from_w(2.0 * PI * lieb_narnhofer_optimal().1),
            2f64.ln() - 0.75,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(c_log_from_w(0.0), 1.265_512_123_484_645_4, epsilon = 1e-14);
    }

    #[test]
    fn c_ds_cases() {
        assert_abs_diff_eq!(c_ds(2, 0.0).unwrap(), 2.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(c_ds(1, 0.0).unwrap(), 2.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(c_ds(3, 1.0).unwrap(), 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(c_ds(2, 1.0).unwrap(), 8.0 * PI, epsilon = 1e-12);
        for (d, s) in [(3, 0.5), (2, 2.0), (2, -0.1), (4, 1.0), (0, 0.0)] {
            assert!(matches!(c_ds(d, s), Err(Error::Range(_))), "{d} {s}");
        }
    }

    #[test]
    fn table_values_and_chain() {
        let t = bound_table();
        let close = |name: &str, v: f64| assert!((t.get(name).unwrap() - v).abs() < 1e-4, "{name}");
        close("min_W_upper", -4.1504);
        close("min_W_lower", -4.1543);
        close("steinerberger_W", -4.2756);
        close("c_log_lower", -0.0569);
        close("c_log_upper", -0.0556);
        close("steinerberger_c_log", -0.0954);
        assert!(t.is_ordered());
        let lhs = t.get("c_log_upper").unwrap() - t.get("c_log_lower").unwrap();
        let rhs = 2.0 * (t.get("e_tri").unwrap() - t.get("e_lower").unwrap());
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"formula\""));
        assert_eq!(serde_json::from_str::<BoundTable>(&json).unwrap(), t);
    }
}
