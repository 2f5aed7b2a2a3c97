//! Configuration surface: canonical round-trips, frozen hash stability,
//! defaults, and rejection diagnostics that name the offending key.

use evofam::config::{
    config_hash, parse_config, serialize_config, DEFAULT_ODE_TOL, DEFAULT_PICARD_TOL,
    DEFAULT_RESIDUAL_TOL,
};

const FULL_DOC: &str = r#"{
  "T": 1.0,
  "N": 6,
  "M": 120,
  "alpha": {"family": "affine", "params": {"a": 1.0, "b": 0.5}},
  "beta": {"family": "separable", "params": {"g": {"family": "constant", "params": {"c": 1.0}}, "p": [0.0, 0.1]}},
  "initial": {"phi": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], "psi": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]}
}"#;

// Hash of the canonical serialization of FULL_DOC. Pinned: any change to
// the canonical byte format, the menu encoding, or the hashing breaks this
// test on purpose — downstream reports key their identity on this value.
const FROZEN_HASH: &str = "321632f20e6003a594fd8c896fd9a6be3654deb110dc48387be50e41491565ca";

#[test]
fn test_config_roundtrip_canonical_fixed_point_and_frozen_hash() {
    let spec = parse_config(FULL_DOC).unwrap();
    assert_eq!(config_hash(&spec), FROZEN_HASH);

    let canon = serialize_config(&spec);
    let spec2 = parse_config(&canon).unwrap();
    assert_eq!(canon, serialize_config(&spec2));
    assert_eq!(config_hash(&spec2), FROZEN_HASH);
}

#[test]
fn test_config_roundtrip_defaults_fill_optional_blocks() {
    let spec = parse_config(
        r#"{"T": 2.0, "N": 4, "M": 40,
            "alpha": {"family": "constant", "params": {"c": 1.5}},
            "beta": {"family": "zero"}}"#,
    )
    .unwrap();
    assert_eq!(spec.tolerances.residual, DEFAULT_RESIDUAL_TOL);
    assert_eq!(spec.tolerances.picard, DEFAULT_PICARD_TOL);
    assert_eq!(spec.tolerances.ode, DEFAULT_ODE_TOL);
    assert_eq!(spec.initial.phi, vec![0.0; 4]);
    assert_eq!(spec.initial.psi, vec![0.0; 4]);
    assert_eq!(spec.trunc.n(), 4);
    assert_eq!(spec.grid.m(), 40);
    assert_eq!(spec.grid.t_end(), 2.0);
}

#[test]
fn test_config_roundtrip_rejections_name_the_key() {
    let cases: &[(&str, &str)] = &[
        // missing required keys
        (r#"{"N": 4, "M": 10, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}}"#, "T"),
        (r#"{"T": 1.0, "M": 10, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}}"#, "N"),
        (r#"{"T": 1.0, "N": 4, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}}"#, "M"),
        (r#"{"T": 1.0, "N": 4, "M": 10, "beta": {"family": "zero"}}"#, "alpha"),
        // α dipping below the admissible floor
        (r#"{"T": 1.0, "N": 4, "M": 10, "alpha": {"family": "constant", "params": {"c": 0.5}}, "beta": {"family": "zero"}}"#, "alpha"),
        // unknown tolerance key
        (r#"{"T": 1.0, "N": 4, "M": 10, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}, "tolerances": {"typo": 1.0}}"#, "tolerances.typo"),
        // wrong-length initial data
        (r#"{"T": 1.0, "N": 4, "M": 10, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}, "initial": {"phi": [1.0]}}"#, "initial.phi"),
        // off-menu family name
        (r#"{"T": 1.0, "N": 4, "M": 10, "alpha": {"family": "quartic", "params": {}}, "beta": {"family": "zero"}}"#, "alpha"),
    ];
    for (doc, key) in cases {
        let err = parse_config(doc).expect_err(doc);
        let msg = err.to_string();
        assert!(
            msg.contains(key),
            "error for {doc:?} should mention {key:?}, got: {msg}"
        );
    }
}

#[test]
fn test_config_roundtrip_hash_separates_distinct_configs() {
    let base = parse_config(
        r#"{"T": 1.0, "N": 4, "M": 40, "alpha": {"family": "constant", "params": {"c": 1.0}}, "beta": {"family": "zero"}}"#,
    )
    .unwrap();
    let tweaked = parse_config(
        r#"{"T": 1.0, "N": 4, "M": 40, "alpha": {"family": "constant", "params": {"c": 1.0000000001}}, "beta": {"family": "zero"}}"#,
    )
    .unwrap();
    assert_ne!(config_hash(&base), config_hash(&tweaked));
}

#[test]
fn test_config_roundtrip_whitespace_and_key_order_do_not_change_hash() {
    let a = parse_config(
        r#"{"T": 1.0, "N": 4, "M": 40, "alpha": {"family": "constant", "params": {"c": 1.25}}, "beta": {"family": "zero"}}"#,
    )
    .unwrap();
    let b = parse_config(
        r#"{
            "beta":  {"family": "zero"},
            "alpha": {"params": {"c": 1.25}, "family": "constant"},
            "M": 40, "N": 4, "T": 1.0
        }"#,
    )
    .unwrap();
    assert_eq!(config_hash(&a), config_hash(&b));
}
