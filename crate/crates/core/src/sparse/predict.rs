//! Sparse-dense multiplication time prediction.

use alloc::string::String;

use super::SparsityStats;
use crate::{Error, Result};

/// Calibrated unit costs of the blocked sparse kernel, in seconds.
///
/// `l_b` and `l_c` are stored normalized per unit of batch width; `l_a` is
/// charged once per non-zero independently of the batch. `l_c = 2 * l_b`
/// always: storing and re-loading an output group costs two B-style loads.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoeffs {
    /// Cost of loading one non-zero of A and applying its FMA updates.
    pub l_a: f64,
    /// Cost of loading one lane group of B, per unit batch width.
    pub l_b: f64,
    /// Cost of loading and storing one lane group of C, per unit batch width.
    pub l_c: f64,
    /// SIMD lane count the kernel was calibrated with.
    pub n_b: usize,
    /// Descriptor of the machine the coefficients were measured on.
    pub machine: String,
}

impl SparseCoeffs {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_a > 0.0 && self.l_b > 0.0 && self.l_c > 0.0) || self.n_b == 0 {
            return Err(Error::Validation(
                "sparse coefficients must be positive".into(),
            ));
        }
        if (self.l_c - 2.0 * self.l_b).abs() > 1e-9 * self.l_c.max(1e-30) {
            return Err(Error::Validation(
                "sparse coefficients must satisfy l_c = 2 * l_b".into(),
            ));
        }
        Ok(())
    }
}

/// Predicted seconds for one sparse-dense multiplication at batch width `n`:
/// `|a_r| * L_c * n + nnz * L_a + |a_c| * L_b * n`.
///
/// Calibration covers batch widths up to 64; beyond that the dense operand
/// no longer stays cache-resident and the prediction turns optimistic.
pub fn predict_sparse_time(stats: &SparsityStats, coeffs: &SparseCoeffs, n: usize) -> f64 {
    stats.active_rows as f64 * coeffs.l_c * n as f64
        + stats.nnz as f64 * coeffs.l_a
        + stats.active_cols as f64 * coeffs.l_b * n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn coeffs() -> SparseCoeffs {
        SparseCoeffs {
            l_a: 2e-9,
            l_b: 5e-11,
            l_c: 1e-10,
            n_b: 8,
            machine: "test".to_string(),
        }
    }

    #[test]
    fn empty_matrix_costs_nothing() {
        let stats = SparsityStats {
            nnz: 0,
            active_rows: 0,
            active_cols: 0,
        };
        assert_eq!(predict_sparse_time(&stats, &coeffs(), 64), 0.0);
    }

    #[test]
    fn monotone_in_each_term() {
        let base = SparsityStats {
            nnz: 100,
            active_rows: 10,
            active_cols: 20,
        };
        let t0 = predict_sparse_time(&base, &coeffs(), 64);
        for bumped in [
            SparsityStats { nnz: 101, ..base },
            SparsityStats { active_rows: 11, ..base },
            SparsityStats { active_cols: 21, ..base },
        ] {
            assert!(predict_sparse_time(&bumped, &coeffs(), 64) > t0);
        }
    }

    #[test]
    fn coeff_invariant_enforced() {
        let mut c = coeffs();
        c.validate().unwrap();
        c.l_c = 3.0 * c.l_b;
        assert!(c.validate().is_err());
    }
}
