//! Residual checks of the assembled solution operators at realistic scale:
//! the second-order operator family on its defining properties and the
//! first-order propagator on the evolution-family laws.

use evofam::coeffs::{AlphaFamily, BetaFamily, CoefficientFamily};
use evofam::grid::TimeGrid;
use evofam::probes::DEFAULT_SEED;
use evofam::reduction::u_axiom_residuals;
use evofam::space::Truncation;
use evofam::FundamentalSolutionField;

fn assemble(alpha: AlphaFamily, t_end: f64, n: usize, m: usize) -> FundamentalSolutionField {
    let cf = CoefficientFamily::new(alpha, BetaFamily::Zero, t_end, m).unwrap();
    FundamentalSolutionField::assemble(&cf, Truncation::new(n).unwrap(), &TimeGrid::new(t_end, m).unwrap())
        .unwrap()
}

#[test]
fn test_field_axioms_affine_residuals_within_budgets() {
    let field = assemble(AlphaFamily::Affine { a: 1.0, b: 0.5 }, 1.0, 8, 200);

    let s = field.s_axiom_residuals(DEFAULT_SEED);
    assert!(s.s1 < 1e-12, "endpoint identities: {}", s.s1);
    assert!(s.s2c < 1e-12, "mixed endpoint: {}", s.s2c);
    assert!(s.s2a < 1e-4, "time equation: {}", s.s2a);
    assert!(s.s2b < 1e-3, "base equation: {}", s.s2b);
    assert!(s.s3a < 1e-3, "time equation derivative: {}", s.s3a);
    assert!(s.s3b < 1e-3, "base equation derivative: {}", s.s3b);
    assert!(s.s4 < 1e-4, "composition: {}", s.s4);

    let u = u_axiom_residuals(&field, DEFAULT_SEED).unwrap();
    assert!(u.identity < 1e-12, "identity: {}", u.identity);
    assert!(u.composition < 1e-4, "composition: {}", u.composition);
    assert!(u.generator_t < 1e-3, "time generator: {}", u.generator_t);
    assert!(u.generator_s < 1e-3, "base generator: {}", u.generator_s);
    // the modulus shrinks with dt and is far below 1 at this resolution
    assert!(u.continuity_modulus < 0.5, "continuity: {}", u.continuity_modulus);
}

#[test]
fn test_field_axioms_constant_alpha_composition_is_roundoff() {
    // closed-form tracks: both composition laws degrade only to roundoff
    let field = assemble(AlphaFamily::Constant { c: 2.0 }, 1.0, 8, 160);
    let s = field.s_axiom_residuals(DEFAULT_SEED);
    assert!(s.s1 == 0.0, "endpoints are placed, not computed: {}", s.s1);
    assert!(s.s4 < 1e-9, "composition: {}", s.s4);
    let u = u_axiom_residuals(&field, DEFAULT_SEED).unwrap();
    assert!(u.identity < 1e-13);
    assert!(u.composition < 1e-9, "composition: {}", u.composition);
}

#[test]
fn test_field_axioms_wronskian_and_amplitude_bounds() {
    let field = assemble(AlphaFamily::Affine { a: 1.0, b: 0.5 }, 1.0, 8, 200);
    assert!(
        field.wronskian_drift() < 50.0 * 1e-8,
        "wronskian drift: {}",
        field.wronskian_drift()
    );
    // α ≥ 1 keeps every |r_n| at or below 1 in the plain norm
    assert!(
        field.x_boundedness_sup() <= 1.0 + 1e-12,
        "amplitude sup: {}",
        field.x_boundedness_sup()
    );
}

#[test]
fn test_field_axioms_residuals_deterministic_per_seed() {
    let field = assemble(AlphaFamily::Affine { a: 1.0, b: 0.25 }, 1.0, 6, 120);
    let a = u_axiom_residuals(&field, DEFAULT_SEED).unwrap();
    let b = u_axiom_residuals(&field, DEFAULT_SEED).unwrap();
    assert_eq!(a, b, "same seed must reproduce identical residuals");
    let s1 = field.s_axiom_residuals(DEFAULT_SEED);
    let s2 = field.s_axiom_residuals(DEFAULT_SEED);
    assert_eq!(s1, s2);

    // a different seed samples different probes but stays within budget
    let c = u_axiom_residuals(&field, 7).unwrap();
    assert!(c.composition < 1e-4);
    assert!(c.generator_t < 1e-3);
}

#[test]
fn test_field_axioms_refinement_tightens_generator_residuals() {
    // the generator checks are O(dt²) finite differences: quadrupling is
    // expected on doubling, demand at least a factor 3
    let coarse = assemble(AlphaFamily::Affine { a: 1.0, b: 0.5 }, 1.0, 6, 100);
    let fine = assemble(AlphaFamily::Affine { a: 1.0, b: 0.5 }, 1.0, 6, 200);
    let uc = u_axiom_residuals(&coarse, DEFAULT_SEED).unwrap();
    let uf = u_axiom_residuals(&fine, DEFAULT_SEED).unwrap();
    assert!(
        uc.generator_t / uf.generator_t > 3.0,
        "time generator ratio: {} / {}",
        uc.generator_t,
        uf.generator_t
    );
    assert!(
        uc.generator_s / uf.generator_s > 3.0,
        "base generator ratio: {} / {}",
        uc.generator_s,
        uf.generator_s
    );
}
