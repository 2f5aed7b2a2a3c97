//! Uniform time grids on [0, T].
//!
//! All propagator and solution values in this library are reported at the
//! nodes t_i = i·T/M. The ordered half Δ = {(t,s) : t ≥ s} is discretized as
//! index pairs (i, j) with i ≥ j. Node values are always computed as
//! `T·i/M` (not accumulated) so that the endpoint is exact and elapsed times
//! between nodes are reproducible.

use crate::error::{EvofamError, Result};

/// A uniform grid t_i = i·T/M, i = 0..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    m: usize,
}

impl TimeGrid {
    /// Construct a grid with horizon `t_end > 0` and `m >= 1` intervals.
    pub fn new(t_end: f64, m: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(EvofamError::InvalidGrid(format!(
                "horizon T must be positive and finite, got {t_end}"
            )));
        }
        if m < 1 {
            return Err(EvofamError::InvalidGrid(format!(
                "node count M must be >= 1, got {m}"
            )));
        }
        Ok(TimeGrid { t_end, m })
    }

    /// The horizon T.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Number of intervals M (there are M+1 nodes).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Grid spacing T/M.
    pub fn dt(&self) -> f64 {
        self.t_end / self.m as f64
    }

    /// The i-th node, computed as T·i/M for endpoint exactness.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.m);
        self.t_end * i as f64 / self.m as f64
    }

    /// Elapsed time between nodes j ≤ i as (i−j)·dt. For translation-invariant
    /// closed forms this guarantees the value depends only on the index gap.
    pub fn elapsed(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        (i - j) as f64 * self.dt()
    }

    /// All node indices 0..=M.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        0..=self.m
    }

    /// Map a time to its node index, requiring it to sit on the grid up to a
    /// relative tolerance of 1e−9·T. Rejects off-grid times.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let raw = t / self.dt();
        let rounded = raw.round();
        let idx = rounded as isize;
        if idx < 0 || idx as usize > self.m || (t - rounded * self.dt()).abs() > 1e-9 * self.t_end {
            return Err(EvofamError::NotAGridNode {
                t,
                nearest: self.node(idx.clamp(0, self.m as isize) as usize),
            });
        }
        Ok(idx as usize)
    }

    /// A grid with the same horizon and `factor`× as many intervals, used for
    /// validating coefficient positivity between nodes.
    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid {
            t_end: self.t_end,
            m: self.m * factor.max(1),
        }
    }
}

// ═══════════════════════════════════════════════════════════════════════════
