//! Independent adaptive reference integrator for the mode problems.
//!
//! An embedded Dormand–Prince 5(4) pair with proportional step control,
//! integrating the same four-scalar mode system as the production solver but
//! sharing nothing with it beyond the right-hand side: different tableau,
//! different order, adaptive rather than fixed steps. Cross-checks between
//! the two paths are therefore meaningful — agreement is evidence, not
//! tautology. Run it tight (1e-12) and its output serves as ground truth for
//! convergence studies of the fixed-step path.

use crate::coeffs::CoefficientFamily;
use crate::error::{EvofamError, Result};
use crate::grid::TimeGrid;
use crate::oscillator::ModeSample;
use crate::space::ModeIndex;

// Dormand–Prince 5(4) tableau (FSAL: the 7th stage is the next step's 1st).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 4th-order weights for the error estimate
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

const SAFETY: f64 = 0.9;
const SHRINK_FLOOR: f64 = 0.2;
const GROW_CAP: f64 = 5.0;

type State = [f64; 4];

#[inline]
fn rhs(y: &State, a: f64, nn: f64) -> State {
    [y[1], -nn * a * y[0], y[3], -nn * a * y[2]]
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        for q in 0..4 {
            out[q] += h * w * k[q];
        }
    }
    out
}

struct Stepper<'a> {
    cf: &'a CoefficientFamily,
    nn: f64,
    tol: f64,
}

impl Stepper<'_> {
    /// One embedded step attempt from (t, y) with step h and cached slope k1.
    /// Returns (y_new, k7 = slope at the endpoint, scaled error estimate).
    fn attempt(&self, t: f64, y: &State, k1: &State, h: f64) -> (State, State, f64) {
        let f = |tt: f64, yy: &State| rhs(yy, self.cf.alpha(tt), self.nn);
        let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y5 = axpy(
            y,
            h,
            &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(t + h, &y5);
        let y4 = axpy(
            y,
            h,
            &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let mut err: f64 = 0.0;
        for q in 0..4 {
            let scale = self.tol + self.tol * y[q].abs().max(y5[q].abs());
            err = err.max((y5[q] - y4[q]).abs() / scale);
        }
        (y5, k7, err)
    }

    /// Advance from (t, y) to exactly t_target with accepted/rejected steps.
    fn march(&self, t0: f64, y0: State, t_target: f64, h_start: f64) -> Result<(State, f64)> {
        let mut t = t0;
        let mut y = y0;
        let mut h = h_start.min(t_target - t0).max(f64::MIN_POSITIVE);
        let mut k1 = rhs(&y, self.cf.alpha(t), self.nn);
        let h_floor = (t_target - t0).max(t0.abs()) * 1e-14;
        while t < t_target {
            let hs = h.min(t_target - t);
            let (y_new, k7, err) = self.attempt(t, &y, &k1, hs);
            if err <= 1.0 {
                t += hs;
                y = y_new;
                k1 = k7;
            } else if hs < h_floor {
                return Err(EvofamError::AdaptiveStepUnderflow { t, h: hs });
            }
            let factor = if err > 0.0 {
                (SAFETY * err.powf(-0.2)).clamp(SHRINK_FLOOR, GROW_CAP)
            } else {
                GROW_CAP
            };
            h = hs * factor;
        }
        Ok((y, h))
    }
}

/// Integrate both canonical problems for mode `n` from base node `base` and
/// report the reference values at every grid node ≥ base. `tol` is used as
/// both relative and absolute local error target.
pub fn reference_trajectory(
    n: ModeIndex,
    base: usize,
    cf: &CoefficientFamily,
    grid: &TimeGrid,
    tol: f64,
) -> Result<Vec<ModeSample>> {
    if base > grid.m() {
        return Err(EvofamError::InvalidGrid(format!(
            "base index {base} beyond final node {}",
            grid.m()
        )));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(EvofamError::InvalidGrid(format!(
            "oracle tolerance must be positive, got {tol}"
        )));
    }
    let stepper = Stepper {
        cf,
        nn: n.as_f64() * n.as_f64(),
        tol,
    };
    let mut out = Vec::with_capacity(grid.m() - base + 1);
    let mut y: State = [0.0, 1.0, 1.0, 0.0];
    out.push(sample_of(&y));
    // suggest an opening step that resolves the oscillation period
    let mut h = (0.1 / (n.as_f64() * cf.alpha_sup(grid).sqrt())).min(grid.dt());
    for i in base..grid.m() {
        let (y_new, h_next) = stepper.march(grid.node(i), y, grid.node(i + 1), h)?;
        y = y_new;
        h = h_next;
        out.push(sample_of(&y));
    }
    Ok(out)
}

/// Reference values at a single time `t` from base time `s` (no grid needed).
pub fn reference_at(
    n: ModeIndex,
    s: f64,
    t: f64,
    cf: &CoefficientFamily,
    tol: f64,
) -> Result<ModeSample> {
    if t < s {
        return Err(EvofamError::InvalidGrid(format!(
            "reference query needs t >= s, got t={t}, s={s}"
        )));
    }
    let stepper = Stepper {
        cf,
        nn: n.as_f64() * n.as_f64(),
        tol,
    };
    if t == s {
        return Ok(sample_of(&[0.0, 1.0, 1.0, 0.0]));
    }
    let h0 = ((t - s) / 100.0).min(0.1 / n.as_f64());
    let (y, _) = stepper.march(s, [0.0, 1.0, 1.0, 0.0], t, h0)?;
    Ok(sample_of(&y))
}

fn sample_of(y: &State) -> ModeSample {
    ModeSample {
        r: y[0],
        rdot: y[1],
        c: y[2],
        cdot: y[3],
    }
}

// ═══════════════════════════════════════════════════════════════════════════

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{AlphaFamily, BetaFamily};

    fn family(alpha: AlphaFamily, t_end: f64) -> CoefficientFamily {
        CoefficientFamily::new(alpha, BetaFamily::Zero, t_end, 100).unwrap()
    }

    #[test]
    fn test_oracle_matches_closed_form_constant_alpha() {
        let cf = family(AlphaFamily::Constant { c: 1.0 }, 1.0);
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let n = ModeIndex::new(5).unwrap();
        let traj = reference_trajectory(n, 0, &cf, &grid, 1e-12).unwrap();
        let mut worst: f64 = 0.0;
        for (k, s) in traj.iter().enumerate() {
            let t = grid.node(k);
            worst = worst
                .max((s.r - (5.0 * t).sin() / 5.0).abs())
                .max((s.rdot - (5.0 * t).cos()).abs())
                .max((s.c - (5.0 * t).cos()).abs())
                .max((s.cdot + 5.0 * (5.0 * t).sin()).abs() / 5.0);
        }
        assert!(worst < 1e-10, "oracle vs closed form gap {worst:.3e}");
    }

    #[test]
    fn test_oracle_wronskian_preserved_high_mode() {
        let cf = family(AlphaFamily::Affine { a: 1.0, b: 0.5 }, 1.0);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let traj =
            reference_trajectory(ModeIndex::new(40).unwrap(), 0, &cf, &grid, 1e-12).unwrap();
        for s in &traj {
            assert!((s.wronskian() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn test_oracle_reference_at_agrees_with_trajectory() {
        let cf = family(AlphaFamily::Affine { a: 1.0, b: 1.0 }, 1.0);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let n = ModeIndex::new(2).unwrap();
        let traj = reference_trajectory(n, 0, &cf, &grid, 1e-12).unwrap();
        let single = reference_at(n, 0.0, 1.0, &cf, 1e-12).unwrap();
        assert!((traj[10].r - single.r).abs() < 1e-11);
        assert!((traj[10].cdot - single.cdot).abs() < 1e-10);
    }

    #[test]
    fn test_oracle_rejects_reversed_interval() {
        let cf = family(AlphaFamily::Constant { c: 1.0 }, 1.0);
        assert!(reference_at(ModeIndex::new(1).unwrap(), 0.5, 0.2, &cf, 1e-10).is_err());
    }
}
