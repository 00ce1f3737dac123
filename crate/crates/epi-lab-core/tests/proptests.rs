//! Property tests over randomized family parameters. Case counts are kept
//! small because several properties run quadrature per case.

use epi_lab_core::distributions::{DensityFamily, MixedDistribution};
use epi_lab_core::limits::{pyramid_j_closed_form, pyramid_j_quadrature};
use epi_lab_core::quadrature::{integrate, QuadratureConfig, SingularityPolicy};
use epi_lab_core::truncate_support;
use proptest::prelude::*;

fn family_strategy() -> impl Strategy<Value = DensityFamily> {
    prop_oneof![
        (-2.0..2.0f64, 0.1..4.0f64).prop_map(|(m, v)| DensityFamily::gaussian1(m, v)),
        (-2.0..2.0f64, 0.1..3.0f64).prop_map(|(lo, w)| DensityFamily::uniform1(lo, lo + w)),
        (0.1..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| DensityFamily::pyramid1(a, b)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // h(cX) = h(X) + ln|c| for every closed-form scalar family
    #[test]
    fn entropy_scaling_closed_forms(fam in family_strategy(), c in prop_oneof![0.05..20.0f64, -20.0..-0.05f64]) {
        let scaled = fam.scale(c).unwrap();
        let dh = scaled.entropy_closed().unwrap() - fam.entropy_closed().unwrap();
        prop_assert!((dh - c.abs().ln()).abs() < 1e-9);
    }

    // scaling then evaluating equals evaluating the original at x/c, times 1/|c|
    #[test]
    fn scale_density_identity(fam in family_strategy(), c in prop_oneof![0.2..5.0f64, -5.0..-0.2f64], x in -4.0..4.0f64) {
        let scaled = fam.scale(c).unwrap();
        let expect = fam.pdf(&[x / c]) / c.abs();
        prop_assert!((scaled.pdf(&[x]) - expect).abs() < 1e-12);
    }

    // translation leaves closed-form entropy untouched (up to rounding of
    // the shifted endpoints)
    #[test]
    fn translation_invariance(fam in family_strategy(), t in -5.0..5.0f64) {
        let moved = fam.translate(&[t]);
        let dh = moved.entropy_closed().unwrap() - fam.entropy_closed().unwrap();
        prop_assert!(dh.abs() < 1e-12);
        prop_assert!((moved.mean()[0] - fam.mean()[0] - t).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // quadrature of any scalar family over its truncated support is ~1
    #[test]
    fn normalization_by_quadrature(fam in family_strategy()) {
        let dist = MixedDistribution::from_density(fam.clone());
        let domain = truncate_support(&dist, 1e-9).unwrap();
        let cfg = QuadratureConfig {
            singularity_policy: SingularityPolicy::SplitPoints(vec![fam.axis_splits(0)]),
            ..QuadratureConfig::with_abs_tol(1e-10)
        };
        let mass = integrate(&|p: &[f64]| fam.pdf(p), &domain, &cfg).unwrap();
        prop_assert!((mass.value - 1.0).abs() < 1e-6);
    }

    // wherever the pyramidal closed form applies, quadrature agrees tightly
    #[test]
    fn pyramid_closed_form_agreement(
        x in -0.95..0.95f64,
        y in -0.45..0.45f64,
        gamma in 64.0..1024.0f64,
    ) {
        let (a, b) = ([0.5], [0.0]);
        if let Some(j) = pyramid_j_closed_form(&[x], &[y], gamma, &a, &b) {
            let jq = pyramid_j_quadrature(&[x], &[y], gamma, &a, &b,
                &QuadratureConfig::with_abs_tol(1e-12)).unwrap();
            prop_assert!((j - jq).abs() < 1e-8, "closed {} vs quad {}", j, jq);
        }
    }
}
