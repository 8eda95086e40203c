use nalgebra::Vector3;
use nvnmr_core::model::dipole_coefficients;
use nvnmr_core::signal::{t_detect_dd_published, t_detect_ent_published, t_detect_ratio};
use nvnmr_core::{EnsembleGeometry, GammaConvention, PhysicalScenario};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const EXACT: f64 = 1e-13;

fn scenario() -> PhysicalScenario {
    PhysicalScenario::proton_nv(GammaConvention::Cyclic)
}

fn geom(z: f64, rho: f64) -> EnsembleGeometry {
    EnsembleGeometry::from_dimensionless(z, 5.05, 4.96, rho).unwrap()
}

proptest! {
    #[test]
    fn separable_time_scaling(
        z in 1e-8f64..1e-5,
        rho in 1e22f64..1e25,
        m in 1e3f64..1e7,
        n_half in 0u32..200,
        k in 1.1f64..4.0,
    ) {
        let n = 2 * n_half + 1;
        let s = scenario();
        let t2 = 1e-4;
        let base = t_detect_dd_published(&s, &geom(z, rho), t2, m, n).unwrap().t_detect;
        let tz = t_detect_dd_published(&s, &geom(k * z, rho), t2, m, n).unwrap().t_detect;
        prop_assert!(rel(tz, base * k.powi(9)) < EXACT);
        let trho = t_detect_dd_published(&s, &geom(z, k * rho), t2, m, n).unwrap().t_detect;
        prop_assert!(rel(trho, base / k) < EXACT);
        let tm = t_detect_dd_published(&s, &geom(z, rho), t2, k * m, n).unwrap().t_detect;
        prop_assert!(rel(tm, base / (k * k)) < EXACT);
        let tn = t_detect_dd_published(&s, &geom(z, rho), t2, m, 3 * n).unwrap().t_detect;
        prop_assert!(rel(tn, base / 9.0) < EXACT);
    }

    #[test]
    fn entangled_time_scaling(
        z in 1e-8f64..1e-5,
        rho in 1e22f64..1e25,
        m in 1e3f64..1e7,
        k in 1.1f64..4.0,
    ) {
        let s = scenario();
        let t2 = 1e-4;
        let base = t_detect_ent_published(&s, &geom(z, rho), t2, m).unwrap().t_detect;
        let tz = t_detect_ent_published(&s, &geom(k * z, rho), t2, m).unwrap().t_detect;
        prop_assert!(rel(tz, base * k.powi(3)) < EXACT);
        let trho = t_detect_ent_published(&s, &geom(z, k * rho), t2, m).unwrap().t_detect;
        prop_assert!(rel(trho, base / k.powi(3)) < EXACT);
        let tm = t_detect_ent_published(&s, &geom(z, rho), t2, k * m).unwrap().t_detect;
        prop_assert!(rel(tm, base / (k * k)) < EXACT);
    }

    #[test]
    fn ratio_ignores_coupling_and_coherence(
        z in 1e-8f64..1e-5,
        rho in 1e22f64..1e25,
        t2 in 1e-6f64..1e-2,
        gamma_t in 1e6f64..1e8,
        n_half in 0u32..100,
    ) {
        let n = 2 * n_half + 1;
        let g = geom(z, rho);
        for conv in [GammaConvention::Cyclic, GammaConvention::Angular] {
            let s = PhysicalScenario::new(
                2.0 * std::f64::consts::PI * gamma_t,
                nvnmr_core::model::NV_GAMMA,
                conv,
                nvnmr_core::model::DEFAULT_OMEGA_TARGET,
            ).unwrap();
            let dd = t_detect_dd_published(&s, &g, t2, 1e6, n).unwrap().t_detect;
            let ent = t_detect_ent_published(&s, &g, t2, 1e6).unwrap().t_detect;
            prop_assert!(rel(dd / ent, t_detect_ratio(&g, n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn dipole_coefficients_scale_and_flip(
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
        z in 0.1f64..3.0,
        lambda in 0.1f64..10.0,
    ) {
        let v = Vector3::new(x, y, z);
        let d = dipole_coefficients(&v).unwrap();
        let s = dipole_coefficients(&(v * lambda)).unwrap();
        let l3 = lambda.powi(3);
        prop_assert!((s.a * l3 - d.a).abs() <= 1e-12 * d.a.abs().max(1e-300) + 1e-15);
        prop_assert!((s.b * l3 - d.b).abs() <= 1e-12 * d.b.abs().max(1e-300) + 1e-15);
        prop_assert!((s.c * l3 - d.c).abs() <= 1e-12 * d.c.abs().max(1e-300) + 1e-15);
        let p = dipole_coefficients(&(-v)).unwrap();
        prop_assert_eq!((p.a, p.b, p.c), (d.a, d.b, d.c));
    }
}
