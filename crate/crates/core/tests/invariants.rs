use jellium_core::epstein::epstein_zeta;
use jellium_core::jellium_finite::disk_pair_mean_log;
use jellium_core::optimize::{random_torus_points, sphere_energy, SphereConfiguration};
use jellium_core::periodic::{e_per, e_per_gradient};
use jellium_core::{EwaldParams, Lattice, Point2, PointConfiguration, Torus, Vec2};
use proptest::prelude::*;

fn config(n: usize, seed: u64, aspect: f64) -> PointConfiguration {
    let r = aspect.sqrt() * (n as f64).sqrt();
    let torus = Torus::new(Lattice::from_generators_2d([r, 0.0], [0.3 * r, (n as f64) / r]).unwrap()).unwrap();
    let pts = random_torus_points(&torus, n, seed);
    PointConfiguration::new(torus, pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodic_energy_is_translation_invariant(n in 2usize..7, seed in 0u64..1000, aspect in 0.5f64..2.0, tx in -3.0f64..3.0, ty in -3.0f64..3.0) {
        let p = EwaldParams::default();
        let cfg = config(n, seed, aspect);
        let e0 = e_per(&cfg, &p).unwrap().total;
        let e1 = e_per(&cfg.translated(Vec2::new(tx, ty)), &p).unwrap().total;
        prop_assert!((e0 - e1).abs() < 1e-10 * (1.0 + e0.abs()));
    }

    #[test]
    fn periodic_forces_sum_to_zero(n in 2usize..7, seed in 0u64..1000, aspect in 0.5f64..2.0) {
        let g = e_per_gradient(&config(n, seed, aspect), &EwaldParams::default()).unwrap();
        let total: Vec2 = g.iter().sum();
        prop_assert!(total.norm() < 1e-9);
    }

    #[test]
    fn zeta_is_rotation_invariant(aspect in 0.4f64..2.5, shear in -0.5f64..0.5, angle in 0.0f64..6.3, s in 2.2f64..6.0) {
        let r = aspect.sqrt();
        let (sn, cs) = angle.sin_cos();
        let rot = |v: [f64; 2]| [cs * v[0] - sn * v[1], sn * v[0] + cs * v[1]];
        let a = [r, 0.0];
        let b = [shear * r, 1.0 / r];
        let p = EwaldParams::default();
        let z0 = epstein_zeta(&Lattice::from_generators_2d(a, b).unwrap(), s, &p).unwrap();
        let z1 = epstein_zeta(&Lattice::from_generators_2d(rot(a), rot(b)).unwrap(), s, &p).unwrap();
        prop_assert!((z0 - z1).abs() < 1e-11 * z0.abs());
    }

    #[test]
    fn disk_mean_log_is_symmetric_and_bounded(x in -2.0f64..2.0, y in -2.0f64..2.0, a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let c1 = Point2::new(0.0, 0.0);
        let c2 = Point2::new(x, y);
        let m12 = disk_pair_mean_log(c1, a, c2, b, 1e-10).unwrap();
        let m21 = disk_pair_mean_log(c2, b, c1, a, 1e-10).unwrap();
        prop_assert!((m12 - m21).abs() < 1e-8);
        // no pair of points is farther apart than d + a + b
        let d = (x * x + y * y).sqrt();
        prop_assert!(m12 <= (d + a + b).ln() + 1e-9);
        if d >= a + b {
            prop_assert!((m12 - d.ln()).abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_energy_is_rotation_invariant(n in 2usize..20, seed in 0u64..1000, angle in 0.0f64..6.3) {
        let cfg = SphereConfiguration::random(n, seed).unwrap();
        let (sn, cs) = angle.sin_cos();
        let rotated: Vec<_> = cfg.points.iter().map(|v| {
            let mut w = *v;
            w.x = cs * v.x - sn * v.z;
            w.z = sn * v.x + cs * v.z;
            w
        }).collect();
        let e0 = sphere_energy(&cfg.points).unwrap();
        let e1 = sphere_energy(&rotated).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-10 * (1.0 + e0.abs()));
    }
}
