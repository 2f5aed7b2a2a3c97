//! Operator norms between weighted coefficient spaces.
//!
//! Every operator here is a finite matrix acting on coefficients, and every
//! space norm is a diagonal weighting of the Euclidean norm, so an operator
//! norm between weighted spaces is the largest singular value of the
//! conjugated matrix W_out·M·W_in⁻¹. Small matrices get an exact SVD; large
//! ones a deterministic power iteration on the Gram matrix.

use crate::error::{EvofamError, Result};
use nalgebra::{DMatrix, DVector};

/// Largest matrix dimension still sent to the dense SVD; beyond this, power
/// iteration is used. 128 covers every block matrix of the standard runs.
pub const SVD_DIM_LIMIT: usize = 128;

/// Relative settling tolerance of the power iteration.
const POWER_TOL: f64 = 1e-8;
/// Iteration cap of the power iteration.
const POWER_MAX_ITERS: usize = 500;

/// σ_max of `m` as a map between weighted spaces: rows are scaled by
/// `w_out`, columns divided by `w_in`. Weight vectors must match the matrix
/// shape and be strictly positive.
pub fn weighted_op_norm(
    m: &DMatrix<f64>,
    w_out: &DVector<f64>,
    w_in: &DVector<f64>,
) -> Result<f64> {
    if w_out.len() != m.nrows() {
        return Err(EvofamError::Dimension {
            expected: m.nrows(),
            got: w_out.len(),
        });
    }
    if w_in.len() != m.ncols() {
        return Err(EvofamError::Dimension {
            expected: m.ncols(),
            got: w_in.len(),
        });
    }
    let mut k = m.clone();
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            k[(i, j)] *= w_out[i] / w_in[j];
        }
    }
    op_norm(&k)
}

/// σ_max of a plain matrix (Euclidean operator norm).
pub fn op_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().max(m.ncols()) <= SVD_DIM_LIMIT {
        let sv = m.clone().singular_values();
        Ok(sv.max())
    } else {
        power_sigma_max(m)
    }
}

/// Power iteration for σ_max on the Gram operator v ↦ Mᵀ(Mv). The start
/// vector is a fixed full-support ramp, so results are reproducible and the
/// iterate is never orthogonal to the top singular subspace in practice.
fn power_sigma_max(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.ncols();
    let mut v = DVector::from_iterator(n, (0..n).map(|j| 1.0 + (j % 7) as f64 / 7.0));
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let u = m * &v;
        let w = m.transpose() * &u;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        let next = u.norm();
        v = w / wn;
        if (next - sigma).abs() <= POWER_TOL * next.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        sigma = next;
    }
    Err(EvofamError::OpNormDivergence {
        iterations: POWER_MAX_ITERS,
    })
}

// ═══════════════════════════════════════════════════════════════════════════

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_opnorm_diagonal_matrix_exact() {
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&[3.0, -7.0, 2.0]));
        assert!((op_norm(&m).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn test_opnorm_weighted_conjugation() {
        // M = e_12 as a map Z→X at N=2: ‖M‖ = 1/√(1+4) since the input weight
        // divides column 2
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        let w_in = DVector::from_row_slice(&[2.0_f64.sqrt(), 5.0_f64.sqrt()]);
        let w_out = DVector::from_row_slice(&[1.0, 1.0]);
        let got = weighted_op_norm(&m, &w_out, &w_in).unwrap();
        assert!((got - 1.0 / 5.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn test_opnorm_power_iteration_agrees_with_svd() {
        // deterministic full matrix larger than the SVD cutoff
        let dim = SVD_DIM_LIMIT + 17;
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5 + if i == j { 2.0 } else { 0.0 }
        });
        let by_power = power_sigma_max(&m).unwrap();
        let by_svd = m.clone().singular_values().max();
        assert!(
            (by_power - by_svd).abs() <= 1e-6 * by_svd,
            "power {by_power} vs svd {by_svd}"
        );
    }

    #[test]
    fn test_opnorm_dimension_mismatch_rejected() {
        let m = DMatrix::zeros(3, 2);
        let w3 = DVector::from_element(3, 1.0);
        let w2 = DVector::from_element(2, 1.0);
        assert!(weighted_op_norm(&m, &w3, &w2).is_ok());
        assert!(weighted_op_norm(&m, &w2, &w3).is_err());
    }
}
