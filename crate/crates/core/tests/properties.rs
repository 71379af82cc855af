//! Randomized property tests for the invariants that hold over whole
//! parameter domains rather than at fixed points.

use proptest::prelude::*;
use satemu_core::geometry::{slant_range, EARTH_RADIUS_M};
use satemu_core::losschannels::{geometric_transmittance, geometric_transmittance_centered};
use satemu_core::stats::{ks_p_value, Histogram};
use satemu_core::turbulence::{beam_wander_variance, fried_parameter};
use satemu_core::zernike::{decompose, synthesize, ZernikeVector, MODE_COUNT};

proptest! {
    #[test]
    fn slant_range_bounded_and_monotone(
        zenith in 0.0f64..1.55,
        alt in 2e5f64..2e6,
    ) {
        let z = slant_range(zenith, alt, EARTH_RADIUS_M).unwrap();
        prop_assert!(z >= alt * (1.0 - 1e-12));
        let z2 = slant_range((zenith + 0.01).min(1.56), alt, EARTH_RADIUS_M).unwrap();
        prop_assert!(z2 > z);
    }

    #[test]
    fn fried_parameter_scaling_law(
        i0 in 1e-16f64..1e-11,
        lam in 4e-7f64..2e-6,
        factor in 1.01f64..4.0,
    ) {
        let r1 = fried_parameter(i0, lam).unwrap();
        let r2 = fried_parameter(i0, lam * factor).unwrap();
        prop_assert!((r2 / r1 - factor.powf(1.2)).abs() < 1e-12 * factor.powf(1.2));
    }

    #[test]
    fn beam_wander_matches_direct_reevaluation(
        lam in 4e-7f64..2e-6,
        z in 1e3f64..2e6,
        w0 in 5e-3f64..0.2,
        r0 in 1e-2f64..100.0,
    ) {
        let got = beam_wander_variance(lam, z, w0, r0);
        let want = 0.1337 * lam * lam * z * z / (w0.powf(1.0 / 3.0) * r0.powf(5.0 / 3.0));
        prop_assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn ks_p_value_is_probability(d in 0.0f64..1.0, n in 100usize..100_000) {
        let p = ks_p_value(d, n);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn histogram_is_normalized(values in prop::collection::vec(-50.0f64..50.0, 10..400)) {
        let h = Histogram::new(&values, 24).unwrap();
        let total: f64 = h.probability.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // quadrature is costly; a handful of cases per run is plenty
    #[test]
    fn geometric_quadrature_agrees_with_annulus_closed_form(
        w in 0.3f64..10.0,
        ar in 0.1f64..1.5,
        ob in 0.0f64..0.8,
    ) {
        let quad = geometric_transmittance(w, ar, ob, 0.0).unwrap();
        let exact = geometric_transmittance_centered(w, ar, ob);
        prop_assert!((0.0..=1.0).contains(&quad));
        prop_assert!((quad - exact).abs() <= 1e-3 * exact.max(1e-12));
    }

    #[test]
    fn zernike_projection_roundtrip(coeffs in prop::collection::vec(-2.0f64..2.0, MODE_COUNT)) {
        let mut v = ZernikeVector::zeros(0.3);
        v.coefficients.copy_from_slice(&coeffs);
        let n = 96;
        let radius = 44.0;
        let grid = synthesize(&v, n, radius).unwrap();
        let d = decompose(&grid, n, radius, 0.3).unwrap();
        for j in 0..MODE_COUNT {
            prop_assert!(
                (d.vector.coefficients[j] - v.coefficients[j]).abs() < 1e-6,
                "mode {} mismatch", j + 1
            );
        }
    }
}
