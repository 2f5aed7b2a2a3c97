//! Time-dependent coefficient families α(t) and β(t,ξ).
//!
//! The wave operator realized here is a_tt = α(t)·∂ξξ + β(t,ξ)·(multiplication),
//! spectrally truncated in the sine basis. Coefficients come from a closed
//! parametric menu rather than arbitrary callables:
//!
//! * α: constant c | affine a+b·t | cosine a+b·cos(ωt) | sampled table with
//!   C¹ natural-cubic interpolation;
//! * β: zero | separable g(t)·p(ξ) with g from the α menu and p a polynomial
//!   of degree ≤ 4 | sampled (t,ξ) table interpolated bicubically by lines.
//!
//! The menu keeps every family continuously differentiable in t, which the
//! derivative-residual checks downstream rely on. Positivity of α is a hard
//! mathematical requirement (the per-mode oscillation frequency is n·√α);
//! the stricter α ≥ 1 condition used by the bound suite is enforced at the
//! configuration boundary, not here, so that bound studies can still probe
//! families that dip below 1.

use crate::error::{EvofamError, Result};
use crate::grid::TimeGrid;

/// How many times finer than the run grid the validation sampling is.
const VALIDATION_REFINEMENT: usize = 10;

// ─────────────────────────────────────────────────────────────── cubic spline

/// Natural cubic spline on uniformly spaced knots. C¹ (in fact C²) on the
/// sample interval; evaluation clamps to the boundary knots.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubic {
    x0: f64,
    dx: f64,
    ys: Vec<f64>,
    /// Second derivatives at the knots (natural: zero at both ends).
    m2: Vec<f64>,
}

impl NaturalCubic {
    /// Fit a natural cubic through `ys` sampled at x0 + k·dx.
    pub fn fit(x0: f64, dx: f64, ys: Vec<f64>) -> Result<Self> {
        if ys.len() < 2 || !(dx > 0.0) {
            return Err(EvofamError::InvalidGrid(format!(
                "cubic table needs >= 2 samples with positive spacing, got {} samples, dx={dx}",
                ys.len()
            )));
        }
        let n = ys.len();
        // Tridiagonal system for interior second derivatives (Thomas algorithm);
        // uniform spacing makes the matrix [1, 4, 1]·(dx/6)-scaled.
        let mut m2 = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![4.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                rhs[i] = 6.0 * (ys[i + 2] - 2.0 * ys[i + 1] + ys[i]) / (dx * dx);
            }
            for i in 1..k {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            m2[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m2[i + 1] = (rhs[i] - m2[i + 2]) / diag[i];
            }
        }
        Ok(NaturalCubic { x0, dx, ys, m2 })
    }

    /// Number of knots the spline was fitted through.
    pub fn sample_count(&self) -> usize {
        self.ys.len()
    }

    /// Evaluate at `x`, clamped to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.ys.len();
        let upper = self.x0 + self.dx * (n - 1) as f64;
        let xc = x.clamp(self.x0, upper);
        let raw = ((xc - self.x0) / self.dx).floor() as usize;
        let k = raw.min(n - 2);
        let a = self.x0 + self.dx * k as f64;
        let t = (xc - a) / self.dx;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.m2[k], self.m2[k + 1]);
        let h2 = self.dx * self.dx;
        let u = 1.0 - t;
        y0 * u + y1 * t + h2 / 6.0 * ((u * u * u - u) * m0 + (t * t * t - t) * m1)
    }
}

// ─────────────────────────────────────────────────────────────── α families

/// Parametric menu for the scalar wave-speed factor α(t) (also reused as the
/// time factor g(t) of separable β).
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaFamily {
    /// α(t) = c.
    Constant { c: f64 },
    /// α(t) = a + b·t.
    Affine { a: f64, b: f64 },
    /// α(t) = a + b·cos(ω·t).
    Cosine { a: f64, b: f64, omega: f64 },
    /// Sampled values on uniform knots over [0,T], natural-cubic interpolated.
    Table { spline: NaturalCubic },
}

impl AlphaFamily {
    /// Evaluate at time t.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            AlphaFamily::Constant { c } => *c,
            AlphaFamily::Affine { a, b } => a + b * t,
            AlphaFamily::Cosine { a, b, omega } => a + b * (omega * t).cos(),
            AlphaFamily::Table { spline } => spline.eval(t),
        }
    }

    /// The constant value when the family is literally the constant one.
    /// Only the explicit constant family short-circuits to closed forms;
    /// degenerate affine/cosine parameters are not special-cased so the
    /// integrator path stays exercised for them.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            AlphaFamily::Constant { c } => Some(*c),
            _ => None,
        }
    }
}

/// Polynomial in ξ of degree ≤ 4, stored as coefficients c₀..c₄.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Construct from low-to-high coefficients; at most 5 (degree ≤ 4).
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > 5 {
            return Err(EvofamError::Config {
                key: "beta.params.p".into(),
                reason: format!(
                    "spatial polynomial must have 1..=5 coefficients (degree <= 4), got {}",
                    coeffs.len()
                ),
            });
        }
        Ok(Polynomial { coeffs })
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Coefficient access (low to high).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

// ─────────────────────────────────────────────────────────────── β families

/// Parametric menu for the multiplicative potential β(t,ξ) on [0,T]×[0,π].
#[derive(Debug, Clone, PartialEq)]
pub enum BetaFamily {
    /// β ≡ 0: the unperturbed problem.
    Zero,
    /// β(t,ξ) = g(t)·p(ξ).
    Separable { g: AlphaFamily, p: Polynomial },
    /// Values on a uniform (t,ξ) lattice, interpolated cubically first in ξ
    /// (per t-row) and then in t across rows.
    Table {
        t0: f64,
        dt: f64,
        xi0: f64,
        dxi: f64,
        /// rows[k][q] = β(t0+k·dt, xi0+q·dxi)
        rows: Vec<Vec<f64>>,
    },
}

impl BetaFamily {
    /// Whether the perturbation is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, BetaFamily::Zero)
    }

    /// Evaluate at (t, ξ).
    pub fn eval(&self, t: f64, xi: f64) -> f64 {
        match self {
            BetaFamily::Zero => 0.0,
            BetaFamily::Separable { g, p } => g.eval(t) * p.eval(xi),
            BetaFamily::Table {
                t0,
                dt,
                xi0,
                dxi,
                rows,
            } => {
                // interpolate each row at ξ, then interpolate the results in t
                let col: Vec<f64> = rows
                    .iter()
                    .map(|row| {
                        NaturalCubic::fit(*xi0, *dxi, row.clone())
                            .expect("validated at construction")
                            .eval(xi)
                    })
                    .collect();
                NaturalCubic::fit(*t0, *dt, col)
                    .expect("validated at construction")
                    .eval(t)
            }
        }
    }

    /// Evaluate β(t, ·) on many ξ points at once. For the table family this
    /// builds the t-interpolated row once instead of per point.
    pub fn profile(&self, t: f64, xis: &[f64]) -> Vec<f64> {
        match self {
            BetaFamily::Zero => vec![0.0; xis.len()],
            BetaFamily::Separable { g, p } => {
                let gt = g.eval(t);
                xis.iter().map(|&xi| gt * p.eval(xi)).collect()
            }
            BetaFamily::Table {
                t0,
                dt,
                xi0,
                dxi,
                rows,
            } => {
                let ncols = rows[0].len();
                let mut row_at_t = vec![0.0; ncols];
                for q in 0..ncols {
                    let col: Vec<f64> = rows.iter().map(|row| row[q]).collect();
                    row_at_t[q] = NaturalCubic::fit(*t0, *dt, col)
                        .expect("validated at construction")
                        .eval(t);
                }
                let spline = NaturalCubic::fit(*xi0, *dxi, row_at_t).expect("validated");
                xis.iter().map(|&xi| spline.eval(xi)).collect()
            }
        }
    }

    /// The time factor and spatial polynomial of a separable family, if any.
    /// Lets the perturbation assembly reuse one spatial quadrature for all times.
    pub fn separable_parts(&self) -> Option<(&AlphaFamily, &Polynomial)> {
        match self {
            BetaFamily::Separable { g, p } => Some((g, p)),
            _ => None,
        }
    }
}

// ─────────────────────────────────────────────────── the combined family

/// The full coefficient data of one problem: α, β, and the horizon they are
/// defined on. Construction checks positivity of α by dense sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFamily {
    alpha: AlphaFamily,
    beta: BetaFamily,
    t_end: f64,
}

impl CoefficientFamily {
    /// Construct and validate: α must be strictly positive on a sampling 10×
    /// finer than `validation_m` intervals of [0, t_end].
    pub fn new(
        alpha: AlphaFamily,
        beta: BetaFamily,
        t_end: f64,
        validation_m: usize,
    ) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(EvofamError::InvalidGrid(format!(
                "horizon T must be positive and finite, got {t_end}"
            )));
        }
        let cf = CoefficientFamily {
            alpha,
            beta,
            t_end,
        };
        let (min, at) = cf.alpha_min_sampled(validation_m.max(1) * VALIDATION_REFINEMENT);
        if !(min > 0.0) {
            return Err(EvofamError::NonPositiveAlpha { min, at });
        }
        Ok(cf)
    }

    /// The horizon T.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// α(t).
    pub fn alpha(&self, t: f64) -> f64 {
        self.alpha.eval(t)
    }

    /// β(t, ξ).
    pub fn beta(&self, t: f64, xi: f64) -> f64 {
        self.beta.eval(t, xi)
    }

    /// The α family (for serialization and closed-form dispatch).
    pub fn alpha_family(&self) -> &AlphaFamily {
        &self.alpha
    }

    /// The β family.
    pub fn beta_family(&self) -> &BetaFamily {
        &self.beta
    }

    /// Closed-form dispatch: Some(c) exactly when α is the constant family.
    pub fn constant_alpha(&self) -> Option<f64> {
        self.alpha.as_constant()
    }

    fn alpha_min_sampled(&self, samples: usize) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut at = 0.0;
        for i in 0..=samples {
            let t = self.t_end * i as f64 / samples as f64;
            let a = self.alpha.eval(t);
            if a < min {
                min = a;
                at = t;
            }
        }
        (min, at)
    }

    fn alpha_max_sampled(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.alpha.eval(self.t_end * i as f64 / samples as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// sup α over [0,T], sampled on a grid 10× finer than `grid`. Drives the
    /// frequency-aware substep choice of the oscillator integrator.
    pub fn alpha_sup(&self, grid: &TimeGrid) -> f64 {
        self.alpha_max_sampled(grid.m() * VALIDATION_REFINEMENT)
    }

    /// inf α over [0,T], sampled the same way.
    pub fn alpha_inf(&self, grid: &TimeGrid) -> f64 {
        self.alpha_min_sampled(grid.m() * VALIDATION_REFINEMENT).0
    }

    /// Enforce the configuration-level requirement α(t) ≥ 1 on [0,T]
    /// (sampled 10× finer than `grid`).
    pub fn assert_alpha_ge_one(&self, grid: &TimeGrid) -> Result<()> {
        let (min, at) = self.alpha_min_sampled(grid.m() * VALIDATION_REFINEMENT);
        if min < 1.0 {
            Err(EvofamError::AlphaBelowOne { min, at })
        } else {
            Ok(())
        }
    }

    /// Equivalence constant between the time-indexed graph norms, realized as
    ///   C = max_t max(α(t),1) / min_t min(α(t),1)
    /// on the 10×-refined sampling. For families with α ≥ 1 this reduces to
    /// sup α. Total on every valid family.
    pub fn graph_norm_equivalence_constant(&self, grid: &TimeGrid) -> f64 {
        let samples = grid.m() * VALIDATION_REFINEMENT;
        let hi = self.alpha_max_sampled(samples).max(1.0);
        let lo = self.alpha_min_sampled(samples).0.min(1.0);
        hi / lo
    }

    /// Total variation of log α along the 10×-refined sampling of [s,t].
    /// This is the exponent of the rigorous energy growth certificate used by
    /// the bound suite: mode energies can grow by at most exp(V).
    pub fn log_alpha_variation(&self, grid: &TimeGrid, s: f64, t: f64) -> f64 {
        let samples = grid.m() * VALIDATION_REFINEMENT;
        let mut v = 0.0;
        let mut prev = self.alpha.eval(s).ln();
        for i in 0..=samples {
            let tau = s + (t - s) * i as f64 / samples as f64;
            let cur = self.alpha.eval(tau).ln();
            v += (cur - prev).abs();
            prev = cur;
        }
        v
    }
}

// ═══════════════════════════════════════════════════════════════════════════

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> TimeGrid {
        TimeGrid::new(1.0, m).unwrap()
    }

    #[test]
    fn test_coeffs_natural_cubic_reproduces_linear() {
        // a natural cubic through samples of a straight line is that line
        let ys: Vec<f64> = (0..=8).map(|k| 0.5 + 0.25 * k as f64).collect();
        let sp = NaturalCubic::fit(0.0, 0.125, ys).unwrap();
        for &x in &[0.0, 0.3, 0.77, 1.0] {
            assert!((sp.eval(x) - (0.5 + 2.0 * x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn test_coeffs_natural_cubic_close_to_smooth_sample() {
        let n = 64;
        let ys: Vec<f64> = (0..=n).map(|k| (k as f64 / n as f64).sin()).collect();
        let sp = NaturalCubic::fit(0.0, 1.0 / n as f64, ys).unwrap();
        // interior accuracy of a cubic on a smooth function at this spacing
        assert!((sp.eval(0.5) - 0.5_f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn test_coeffs_alpha_menu_values() {
        assert_eq!(AlphaFamily::Constant { c: 2.0 }.eval(3.0), 2.0);
        assert_eq!(AlphaFamily::Affine { a: 1.0, b: 0.5 }.eval(1.0), 1.5);
        let cosf = AlphaFamily::Cosine {
            a: 1.0,
            b: 0.5,
            omega: 2.0,
        };
        assert!((cosf.eval(0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn test_coeffs_polynomial_degree_cap() {
        assert!(Polynomial::new(vec![0.0; 6]).is_err());
        let p = Polynomial::new(vec![1.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.eval(2.0), 9.0);
    }

    #[test]
    fn test_coeffs_family_rejects_nonpositive_alpha() {
        let err = CoefficientFamily::new(
            AlphaFamily::Affine { a: 0.5, b: -1.0 },
            BetaFamily::Zero,
            1.0,
            100,
        );
        assert!(matches!(err, Err(EvofamError::NonPositiveAlpha { .. })));
    }

    #[test]
    fn test_coeffs_family_allows_below_one_but_flags_it() {
        // dips to 1 - 0.5·0.416… ≈ 0.79 on [0,1]: constructible, but the
        // config-level alpha >= 1 assertion must reject it
        let cf = CoefficientFamily::new(
            AlphaFamily::Cosine {
                a: 1.0,
                b: 0.5,
                omega: 2.0,
            },
            BetaFamily::Zero,
            1.0,
            100,
        )
        .unwrap();
        assert!(cf.assert_alpha_ge_one(&grid(100)).is_err());
    }

    #[test]
    fn test_coeffs_graph_norm_constant_examples() {
        let c1 = CoefficientFamily::new(
            AlphaFamily::Constant { c: 1.0 },
            BetaFamily::Zero,
            1.0,
            100,
        )
        .unwrap();
        assert_eq!(c1.graph_norm_equivalence_constant(&grid(100)), 1.0);

        let c2 = CoefficientFamily::new(
            AlphaFamily::Affine { a: 1.0, b: 0.5 },
            BetaFamily::Zero,
            1.0,
            100,
        )
        .unwrap();
        assert!((c2.graph_norm_equivalence_constant(&grid(100)) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn test_coeffs_beta_separable_profile_matches_pointwise() {
        let b = BetaFamily::Separable {
            g: AlphaFamily::Constant { c: 0.1 },
            p: Polynomial::new(vec![0.0, 1.0]).unwrap(),
        };
        let xis = [0.1, 0.5, 2.0];
        let prof = b.profile(0.3, &xis);
        for (q, &xi) in xis.iter().enumerate() {
            assert_eq!(prof[q], b.eval(0.3, xi));
        }
    }

    #[test]
    fn test_coeffs_beta_table_roundtrip_at_knots() {
        let rows = vec![vec![0.0, 1.0, 0.0], vec![0.0, 2.0, 0.0]];
        let b = BetaFamily::Table {
            t0: 0.0,
            dt: 1.0,
            xi0: 0.0,
            dxi: std::f64::consts::PI / 2.0,
            rows,
        };
        assert!((b.eval(0.0, std::f64::consts::PI / 2.0) - 1.0).abs() < 1e-12);
        assert!((b.eval(1.0, std::f64::consts::PI / 2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn test_coeffs_log_alpha_variation_monotone_family() {
        let cf = CoefficientFamily::new(
            AlphaFamily::Affine { a: 1.0, b: 0.5 },
            BetaFamily::Zero,
            1.0,
            100,
        )
        .unwrap();
        // monotone alpha: variation = ln(alpha(1)) - ln(alpha(0)) = ln 1.5
        let v = cf.log_alpha_variation(&grid(100), 0.0, 1.0);
        assert!((v - 1.5_f64.ln()).abs() < 1e-9);
    }
}
