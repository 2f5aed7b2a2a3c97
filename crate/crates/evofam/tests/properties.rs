//! Property-based invariants: norm axioms on the weighted scales, canonical
//! configuration round-trips, and structural identities of the mode solver
//! that must hold for every admissible coefficient draw.

use evofam::coeffs::{AlphaFamily, BetaFamily, CoefficientFamily};
use evofam::config::{config_hash, parse_config, serialize_config};
use evofam::grid::TimeGrid;
use evofam::oscillator::{solve_mode_at, solve_mode_with_substeps};
use evofam::space::{ModeIndex, Space, SpectralVector};
use proptest::prelude::*;

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, 1..16)
}

// ═══════════════════════════════════════════════════════════════
// Norm axioms on the three weighted scales
// ═══════════════════════════════════════════════════════════════

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn test_properties_norm_homogeneity(coeffs in vec_strategy(), lambda in -8.0f64..8.0) {
        for space in [Space::X, Space::Z, Space::D] {
            let x = SpectralVector::from_slice(&coeffs, space);
            let scaled_coeffs: Vec<f64> = coeffs.iter().map(|v| lambda * v).collect();
            let lx = SpectralVector::from_slice(&scaled_coeffs, space);
            let want = lambda.abs() * x.norm(space);
            prop_assert!((lx.norm(space) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn test_properties_norm_triangle_inequality(a in vec_strategy(), b in vec_strategy()) {
        let n = a.len().min(b.len());
        for space in [Space::X, Space::Z, Space::D] {
            let sum: Vec<f64> = (0..n).map(|k| a[k] + b[k]).collect();
            let xa = SpectralVector::from_slice(&a[..n], space);
            let xb = SpectralVector::from_slice(&b[..n], space);
            let xs = SpectralVector::from_slice(&sum, space);
            prop_assert!(
                xs.norm(space) <= xa.norm(space) + xb.norm(space) + 1e-9,
                "triangle violated in {space:?}"
            );
        }
    }

    #[test]
    fn test_properties_norm_scale_embeddings_are_contractive(coeffs in vec_strategy()) {
        // the weights grow with regularity: plain ≤ (1+n²)-weighted ≤ (1+n⁴)-weighted
        let x = SpectralVector::from_slice(&coeffs, Space::D);
        prop_assert!(x.norm(Space::X) <= x.norm(Space::Z) + 1e-12);
        prop_assert!(x.norm(Space::Z) <= x.norm(Space::D) + 1e-12);
    }
}

// ═══════════════════════════════════════════════════════════════
// Configuration round-trips
// ═══════════════════════════════════════════════════════════════

fn alpha_doc() -> impl Strategy<Value = String> {
    prop_oneof![
        (1.0f64..3.0).prop_map(|c| format!(r#"{{"family":"constant","params":{{"c":{c:?}}}}}"#)),
        ((1.0f64..2.0), (0.0f64..2.0))
            .prop_map(|(a, b)| format!(r#"{{"family":"affine","params":{{"a":{a:?},"b":{b:?}}}}}"#)),
        ((1.5f64..2.0), (0.0f64..0.4), (0.5f64..4.0)).prop_map(|(a, b, omega)| {
            format!(r#"{{"family":"cosine","params":{{"a":{a:?},"b":{b:?},"omega":{omega:?}}}}}"#)
        }),
    ]
}

fn beta_doc() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(r#"{"family":"zero"}"#.to_string()),
        proptest::collection::vec(-0.5f64..0.5, 1..4).prop_map(|p| {
            format!(
                r#"{{"family":"separable","params":{{"g":{{"family":"constant","params":{{"c":1.0}}}},"p":{p:?}}}}}"#
            )
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn test_properties_config_parse_serialize_fixed_point(
        alpha in alpha_doc(),
        beta in beta_doc(),
        t_end in 0.5f64..3.0,
        n in 1usize..12,
        m in 10usize..60,
    ) {
        let doc = format!(
            r#"{{"T":{t_end:?},"N":{n},"M":{m},"alpha":{alpha},"beta":{beta}}}"#
        );
        let spec = parse_config(&doc).unwrap();
        let canon = serialize_config(&spec);
        // the canonical form is a fixed point of parse ∘ serialize
        let spec2 = parse_config(&canon).unwrap();
        prop_assert_eq!(&canon, &serialize_config(&spec2));
        prop_assert_eq!(config_hash(&spec), config_hash(&spec2));
    }
}

// ═══════════════════════════════════════════════════════════════
// Mode solver structure
// ═══════════════════════════════════════════════════════════════

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn test_properties_oscillator_wronskian_stays_unit(
        a in 1.0f64..2.0,
        b in 0.0f64..1.0,
        n in 1usize..12,
        base_frac in 0.0f64..0.9,
    ) {
        let m = 60usize;
        let cf = CoefficientFamily::new(
            AlphaFamily::Affine { a, b },
            BetaFamily::Zero,
            1.0,
            m,
        ).unwrap();
        let grid = TimeGrid::new(1.0, m).unwrap();
        let base = (base_frac * m as f64) as usize;
        let sol = solve_mode_at(ModeIndex::new(n).unwrap(), base, &cf, &grid).unwrap();
        for k in 0..sol.r_slice().len() {
            let w = sol.c_slice()[k] * sol.rdot_slice()[k]
                - sol.cdot_slice()[k] * sol.r_slice()[k];
            prop_assert!((w - 1.0).abs() < 5e-7, "node {k}: wronskian {w}");
        }
    }

    #[test]
    fn test_properties_constant_alpha_is_translation_invariant(
        c in 1.0f64..3.0,
        n in 1usize..10,
        base in 1usize..40,
    ) {
        // with α constant the flow depends only on elapsed time, and the
        // marching arithmetic is literally the same instruction sequence
        // from any base, so shifted tracks agree bitwise
        let m = 60usize;
        let cf = CoefficientFamily::new(
            AlphaFamily::Constant { c },
            BetaFamily::Zero,
            1.0,
            m,
        ).unwrap();
        let grid = TimeGrid::new(1.0, m).unwrap();
        let mode = ModeIndex::new(n).unwrap();
        let from_zero = solve_mode_with_substeps(mode, 0, &cf, &grid, 8).unwrap();
        let shifted = solve_mode_with_substeps(mode, base, &cf, &grid, 8).unwrap();
        for k in 0..shifted.r_slice().len() {
            prop_assert_eq!(from_zero.r_slice()[k], shifted.r_slice()[k]);
            prop_assert_eq!(from_zero.cdot_slice()[k], shifted.cdot_slice()[k]);
        }
    }
}
