//! Perturbation pipeline checks against oracles that live entirely in this
//! file: a brute-force dense quadrature for the multiplication matrix, and
//! refinement/scaling laws for the fixed-point propagator that follow from
//! the order of the underlying approximations rather than from the
//! implementation.

use evofam::coeffs::{AlphaFamily, BetaFamily, CoefficientFamily, Polynomial};
use evofam::grid::TimeGrid;
use evofam::perturbation::linearization_defect;
use evofam::space::Truncation;
use evofam::{
    assemble_b, direct_oracle, solve_volterra, FundamentalSolutionField,
};

// ═══════════════════════════════════════════ dense quadrature oracle

/// Entry (n, m) of the sine-basis multiplication matrix for a spatial
/// profile p: (2/π)·∫₀^π p(ξ)·sin(nξ)·sin(mξ) dξ, by brute-force composite
/// trapezoid over `panels` subintervals. Independent of the library's
/// quadrature: different rule, different resolution, no shared tables.
fn dense_entry(p: impl Fn(f64) -> f64, n: usize, m: usize, panels: usize) -> f64 {
    let h = std::f64::consts::PI / panels as f64;
    let f = |x: f64| p(x) * (n as f64 * x).sin() * (m as f64 * x).sin();
    let mut acc = 0.5 * (f(0.0) + f(std::f64::consts::PI));
    for k in 1..panels {
        acc += f(h * k as f64);
    }
    acc * h * 2.0 / std::f64::consts::PI
}

fn linear_beta(strength: f64) -> BetaFamily {
    BetaFamily::Separable {
        g: AlphaFamily::Constant { c: 1.0 },
        p: Polynomial::new(vec![0.0, strength]).unwrap(),
    }
}

fn family(alpha: AlphaFamily, beta: BetaFamily, t_end: f64, m: usize) -> CoefficientFamily {
    CoefficientFamily::new(alpha, beta, t_end, m).unwrap()
}

#[test]
fn test_perturbation_checks_matrix_matches_dense_quadrature() {
    let cf = family(AlphaFamily::Constant { c: 1.0 }, linear_beta(1.0), 1.0, 50);
    let trunc = Truncation::new(8).unwrap();
    let grid = TimeGrid::new(1.0, 50).unwrap();
    let b = assemble_b(&cf, trunc, &grid);
    let mat = b.matrix(0);
    for n in 1..=8usize {
        for m in 1..=8usize {
            let want = dense_entry(|x| x, n, m, 200_000);
            let got = mat[(n - 1, m - 1)];
            assert!(
                (got - want).abs() < 1e-9,
                "entry ({n},{m}): got {got}, dense quadrature {want}"
            );
        }
    }
}

#[test]
fn test_perturbation_checks_time_dependent_profile_scales_in_t() {
    // β(t, ξ) = (1 + t)·ξ factorizes, so B(t) = (1+t)·B(0) exactly
    let beta = BetaFamily::Separable {
        g: AlphaFamily::Affine { a: 1.0, b: 1.0 },
        p: Polynomial::new(vec![0.0, 1.0]).unwrap(),
    };
    let cf = family(AlphaFamily::Constant { c: 1.0 }, beta, 1.0, 40);
    let trunc = Truncation::new(6).unwrap();
    let grid = TimeGrid::new(1.0, 40).unwrap();
    let b = assemble_b(&cf, trunc, &grid);
    let base = b.matrix(0);
    for i in [10usize, 25, 40] {
        let factor = 1.0 + grid.node(i);
        let mat = b.matrix(i);
        for r in 0..6 {
            for c in 0..6 {
                assert!(
                    (mat[(r, c)] - factor * base[(r, c)]).abs() < 1e-12,
                    "node {i} entry ({r},{c})"
                );
            }
        }
    }
}

#[test]
fn test_perturbation_checks_quadratic_profile_against_dense_quadrature() {
    // ξ² exercises the even-profile branch where different parity entries
    // survive than for ξ
    let beta = BetaFamily::Separable {
        g: AlphaFamily::Constant { c: 1.0 },
        p: Polynomial::new(vec![0.0, 0.0, 1.0]).unwrap(),
    };
    let cf = family(AlphaFamily::Constant { c: 1.0 }, beta, 1.0, 30);
    let trunc = Truncation::new(5).unwrap();
    let grid = TimeGrid::new(1.0, 30).unwrap();
    let b = assemble_b(&cf, trunc, &grid);
    let mat = b.matrix(15);
    for n in 1..=5usize {
        for m in 1..=5usize {
            let want = dense_entry(|x| x * x, n, m, 200_000);
            assert!(
                (mat[(n - 1, m - 1)] - want).abs() < 1e-8,
                "entry ({n},{m}): got {}, want {want}",
                mat[(n - 1, m - 1)]
            );
        }
    }
}

// ═══════════════════════════════════════════ structural scaling laws

#[test]
fn test_perturbation_checks_linearization_defect_is_quadratic_in_eps() {
    // V_ε = U + ε·(first correction) + O(ε²): halving ε divides the defect
    // against the linearization by ≈ 4
    let cf = family(AlphaFamily::Affine { a: 1.0, b: 0.5 }, linear_beta(1.0), 1.0, 80);
    let trunc = Truncation::new(4).unwrap();
    let grid = TimeGrid::new(1.0, 80).unwrap();
    let field = FundamentalSolutionField::assemble(&cf, trunc, &grid).unwrap();
    let b_unit = assemble_b(&cf, trunc, &grid);
    let d1 = linearization_defect(&field, &b_unit, 0, 0.1, 1e-12).unwrap();
    let d2 = linearization_defect(&field, &b_unit, 0, 0.05, 1e-12).unwrap();
    let ratio = d1 / d2;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "defect ratio {ratio} (defects {d1}, {d2}) not in the quadratic window"
    );
}

#[test]
fn test_perturbation_checks_fixed_point_gap_shrinks_quadratically_with_dt() {
    // the product-quadrature error of the fixed point is O(dt²): doubling M
    // divides the gap to the independently integrated column by ≈ 4
    let gap_at = |m: usize| -> f64 {
        let cf = family(AlphaFamily::Affine { a: 1.0, b: 0.5 }, linear_beta(0.1), 1.0, m);
        let trunc = Truncation::new(6).unwrap();
        let grid = TimeGrid::new(1.0, m).unwrap();
        let field = FundamentalSolutionField::assemble(&cf, trunc, &grid).unwrap();
        let b = assemble_b(&cf, trunc, &grid);
        let vol = solve_volterra(&field, &b, 0, 1e-10).unwrap();
        let dir = direct_oracle(&cf, &b, 0, &grid).unwrap();
        evofam::perturbation::column_gap(&vol, &dir, trunc).unwrap()
    };
    let coarse = gap_at(120);
    let fine = gap_at(240);
    let ratio = coarse / fine;
    assert!(
        (3.0..=5.5).contains(&ratio),
        "gap ratio {ratio} (gaps {coarse}, {fine}) not in the second-order window"
    );
}

#[test]
fn test_perturbation_checks_columns_from_different_bases_compose() {
    // V(t, 0) = V(t, s)·V(s, 0) for the fixed point at matching layouts:
    // measured through the full-field api so the composition crosses columns
    let cf = family(AlphaFamily::Affine { a: 1.0, b: 0.5 }, linear_beta(0.1), 1.0, 60);
    let trunc = Truncation::new(4).unwrap();
    let grid = TimeGrid::new(1.0, 60).unwrap();
    let field = FundamentalSolutionField::assemble(&cf, trunc, &grid).unwrap();
    let b = assemble_b(&cf, trunc, &grid);
    let v = evofam::PerturbedPropagatorField::from_volterra(&field, &b, 1e-10).unwrap();
    let (i, s, r) = (60usize, 30usize, 0usize);
    let left = v.mat(i, s).unwrap() * v.mat(s, r).unwrap();
    let direct = v.mat(i, r).unwrap();
    let mut worst = 0.0f64;
    for a in 0..8 {
        for bcol in 0..8 {
            worst = worst.max((left[(a, bcol)] - direct[(a, bcol)]).abs());
        }
    }
    assert!(worst < 1e-4, "composition gap {worst}");
}
