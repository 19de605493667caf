//! Compressed-sparse-row matrices, sparse-dense multiplication kernels, and
//! the sparse scoring-time predictor with its calibration procedure.

mod calibrate;
mod kernel;
mod predict;

pub use calibrate::{
    calibrate_sparse_with, make_calibration_matrix, CalibrationKind, CALIBRATION_BATCHES,
    CALIBRATION_SHAPES,
};
pub use kernel::{sdmm_blocked, sdmm_blocked_counted, sdmm_reference, SdmmCounters, DEFAULT_LANES};
pub use predict::{predict_sparse_time, SparseCoeffs};

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// Sparse `m x k` matrix in CSR form: non-zero `values`, their `col_index`,
/// and `rows` offsets with `rows[i+1] - rows[i]` non-zeros in row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub m: usize,
    pub k: usize,
    pub values: Vec<f32>,
    pub col_index: Vec<u32>,
    pub rows: Vec<usize>,
}

/// Occupancy summary driving the sparse time predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityStats {
    pub nnz: usize,
    /// Rows containing at least one non-zero.
    pub active_rows: usize,
    /// Columns containing at least one non-zero.
    pub active_cols: usize,
}

impl CsrMatrix {
    /// Converts a dense matrix, dropping entries with `|w| <= tol`.
    pub fn from_dense(w: &DenseMatrix, tol: f32) -> Self {
        debug_assert!(tol >= 0.0);
        let mut values = Vec::new();
        let mut col_index = Vec::new();
        let mut rows = Vec::with_capacity(w.rows() + 1);
        rows.push(0);
        for i in 0..w.rows() {
            for (j, &v) in w.row(i).iter().enumerate() {
                if v.abs() > tol {
                    values.push(v);
                    col_index.push(j as u32);
                }
            }
            rows.push(values.len());
        }
        CsrMatrix {
            m: w.rows(),
            k: w.cols(),
            values,
            col_index,
            rows,
        }
    }

    pub fn from_parts(
        m: usize,
        k: usize,
        values: Vec<f32>,
        col_index: Vec<u32>,
        rows: Vec<usize>,
    ) -> Result<Self> {
        let csr = CsrMatrix {
            m,
            k,
            values,
            col_index,
            rows,
        };
        csr.validate()?;
        Ok(csr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.m + 1 {
            return Err(Error::Validation(alloc::format!(
                "rows array must have m+1 = {} offsets, got {}",
                self.m + 1,
                self.rows.len()
            )));
        }
        if self.rows[0] != 0 || self.rows[self.m] != self.values.len() {
            return Err(Error::Validation(
                "rows offsets must start at 0 and end at nnz".into(),
            ));
        }
        if self.values.len() != self.col_index.len() {
            return Err(Error::Validation(
                "values and col_index lengths differ".into(),
            ));
        }
        for w in self.rows.windows(2) {
            if w[0] > w[1] {
                return Err(Error::Validation("rows offsets must be non-decreasing".into()));
            }
        }
        for i in 0..self.m {
            let cols = &self.col_index[self.rows[i]..self.rows[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Validation(alloc::format!(
                        "column indices in row {i} must be strictly increasing"
                    )));
                }
            }
            if cols.last().is_some_and(|&c| c as usize >= self.k) {
                return Err(Error::Validation(alloc::format!(
                    "column index out of range in row {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of zero entries.
    pub fn sparsity(&self) -> f64 {
        if self.m * self.k == 0 {
            return 0.0;
        }
        1.0 - self.nnz() as f64 / (self.m * self.k) as f64
    }

    pub fn stats(&self) -> SparsityStats {
        let active_rows = (0..self.m)
            .filter(|&i| self.rows[i + 1] > self.rows[i])
            .count();
        let mut col_seen = vec![false; self.k];
        for &c in &self.col_index {
            col_seen[c as usize] = true;
        }
        SparsityStats {
            nnz: self.nnz(),
            active_rows,
            active_cols: col_seen.iter().filter(|&&s| s).count(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.m, self.k);
        for i in 0..self.m {
            for idx in self.rows[i]..self.rows[i + 1] {
                out.set(i, self.col_index[idx] as usize, self.values[idx]);
            }
        }
        out
    }
}

/// Splits A into `parts` row blocks of `ceil(m / parts)` rows (the last block
/// may be shorter). Stacking the block-wise products `A_i * B` vertically
/// reproduces `A * B`.
pub fn split_rows(a: &CsrMatrix, parts: usize) -> Result<Vec<CsrMatrix>> {
    if parts == 0 || parts > a.m {
        return Err(Error::Validation(alloc::format!(
            "parts must be in 1..={}, got {parts}",
            a.m
        )));
    }
    let block = a.m.div_ceil(parts);
    let mut out = Vec::with_capacity(parts);
    let mut row0 = 0;
    while row0 < a.m {
        let rows_here = block.min(a.m - row0);
        let lo = a.rows[row0];
        let hi = a.rows[row0 + rows_here];
        out.push(CsrMatrix {
            m: rows_here,
            k: a.k,
            values: a.values[lo..hi].to_vec(),
            col_index: a.col_index[lo..hi].to_vec(),
            rows: a.rows[row0..=row0 + rows_here].iter().map(|r| r - lo).collect(),
        });
        row0 += rows_here;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_csr_layout() {
        let csr = CsrMatrix::from_dense(&DenseMatrix::identity(3), 0.0);
        assert_eq!(csr.values, vec![1.0, 1.0, 1.0]);
        assert_eq!(csr.col_index, vec![0, 1, 2]);
        assert_eq!(csr.rows, vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_matrix_csr() {
        let csr = CsrMatrix::from_dense(&DenseMatrix::zeros(2, 4), 0.0);
        assert_eq!(csr.nnz(), 0);
        assert_eq!(csr.rows, vec![0, 0, 0]);
        assert_eq!(csr.stats().active_rows, 0);
        assert_eq!(csr.stats().active_cols, 0);
    }

    #[test]
    fn tolerance_drops_small_entries() {
        let w = DenseMatrix::from_vec(1, 4, vec![0.5, -0.01, 0.0, -2.0]).unwrap();
        let csr = CsrMatrix::from_dense(&w, 0.1);
        assert_eq!(csr.values, vec![0.5, -2.0]);
        assert_eq!(csr.col_index, vec![0, 3]);
    }

    #[test]
    fn split_rows_shapes() {
        let w = DenseMatrix::from_fn(10, 4, |i, j| (i * 4 + j) as f32);
        let csr = CsrMatrix::from_dense(&w, 0.0);
        let blocks = split_rows(&csr, 3).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[0].m, 4);
        assert_eq!(blocks[1].m, 4);
        assert_eq!(blocks[2].m, 2);
        for b in &blocks {
            b.validate().unwrap();
        }
        assert!(split_rows(&csr, 0).is_err());
        assert!(split_rows(&csr, 11).is_err());
        assert_eq!(split_rows(&csr, 1).unwrap()[0], csr);
    }

    #[test]
    fn validate_catches_corruption() {
        let mut csr = CsrMatrix::from_dense(&DenseMatrix::identity(3), 0.0);
        csr.col_index[1] = 9;
        assert!(csr.validate().is_err());
    }
}
