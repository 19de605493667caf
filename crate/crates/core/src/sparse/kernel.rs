//! Sparse-dense multiplication kernels.
//!
//! `sdmm_reference` is the plain CSR triple loop. `sdmm_blocked` mirrors the
//! broadcast/FMA register kernel used by high-performance sparse libraries:
//! the dense operand is viewed as `k x N_b x n_b` with `n_b` the SIMD lane
//! count, each non-zero of A is broadcast against the matching row of B, and
//! the output row is loaded into accumulators once and stored once.

use alloc::vec;

use super::CsrMatrix;
use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// SIMD lane count for 32-bit floats on 256-bit vector units.
pub const DEFAULT_LANES: usize = 8;

/// Memory-traffic counters for the blocked kernel, in units of `n_b`-wide
/// lane groups (one group = one vector load/store/FMA).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SdmmCounters {
    /// Rows of A with at least one non-zero (rows actually processed).
    pub rows_visited: usize,
    pub c_group_loads: usize,
    pub c_group_stores: usize,
    pub b_group_loads: usize,
    pub fma_groups: usize,
}

/// CSR x dense triple loop: rows of A, non-zeros per row, columns of B.
pub fn sdmm_reference(a: &CsrMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_shapes(a, b)?;
    let n = b.cols();
    let mut c = DenseMatrix::zeros(a.m, n);
    for i in 0..a.m {
        for idx in a.rows[i]..a.rows[i + 1] {
            let x = a.values[idx];
            let b_row = b.row(a.col_index[idx] as usize);
            let c_row = c.row_mut(i);
            for col in 0..n {
                c_row[col] += x * b_row[col];
            }
        }
    }
    Ok(c)
}

/// Row-wise broadcast/FMA kernel; `lanes` is the SIMD width to emulate.
///
/// Requires the batch width to be a multiple of `lanes`. Rows of A without
/// non-zeros are skipped entirely: the matching C row is neither loaded nor
/// stored.
pub fn sdmm_blocked(a: &CsrMatrix, b: &DenseMatrix, lanes: usize) -> Result<DenseMatrix> {
    sdmm_blocked_counted(a, b, lanes).map(|(c, _)| c)
}

/// [`sdmm_blocked`] variant that also reports traffic counters.
pub fn sdmm_blocked_counted(
    a: &CsrMatrix,
    b: &DenseMatrix,
    lanes: usize,
) -> Result<(DenseMatrix, SdmmCounters)> {
    check_shapes(a, b)?;
    if lanes == 0 {
        return Err(Error::Validation("lane count must be positive".into()));
    }
    let n = b.cols();
    if n % lanes != 0 {
        return Err(Error::Validation(alloc::format!(
            "batch width {n} is not a multiple of the lane count {lanes}"
        )));
    }
    let groups = n / lanes;
    let mut counters = SdmmCounters::default();
    let mut c = DenseMatrix::zeros(a.m, n);
    let mut acc = vec![0.0f32; n];

    for i in 0..a.m {
        let (lo, hi) = (a.rows[i], a.rows[i + 1]);
        if lo == hi {
            continue;
        }
        counters.rows_visited += 1;
        // C_i enters the accumulators once per row...
        acc.fill(0.0);
        counters.c_group_loads += groups;
        for idx in lo..hi {
            let x = a.values[idx];
            let b_row = b.row(a.col_index[idx] as usize);
            counters.b_group_loads += groups;
            counters.fma_groups += groups;
            for (acc_group, b_group) in acc.chunks_exact_mut(lanes).zip(b_row.chunks_exact(lanes)) {
                for l in 0..lanes {
                    acc_group[l] += x * b_group[l];
                }
            }
        }
        // ...and is stored once after the row's non-zeros are exhausted.
        c.row_mut(i).copy_from_slice(&acc);
        counters.c_group_stores += groups;
    }
    Ok((c, counters))
}

fn check_shapes(a: &CsrMatrix, b: &DenseMatrix) -> Result<()> {
    if a.k != b.rows() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "cannot multiply {}x{} CSR by {}x{} dense",
            a.m,
            a.k,
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_passthrough() {
        let a = CsrMatrix::from_dense(&DenseMatrix::identity(5), 0.0);
        let b = DenseMatrix::from_fn(5, 16, |i, j| (i + j) as f32);
        assert_eq!(sdmm_reference(&a, &b).unwrap(), b);
        assert_eq!(sdmm_blocked(&a, &b, 8).unwrap(), b);
    }

    #[test]
    fn single_entry_scales_one_row() {
        // a_{1,2} = 5 -> row 1 of C is 5 * row 2 of B, all other rows zero
        let mut w = DenseMatrix::zeros(3, 4);
        w.set(1, 2, 5.0);
        let a = CsrMatrix::from_dense(&w, 0.0);
        let b = DenseMatrix::from_fn(4, 8, |i, j| (i * 8 + j) as f32);
        let c = sdmm_reference(&a, &b).unwrap();
        for j in 0..8 {
            assert_eq!(c.get(0, j), 0.0);
            assert_eq!(c.get(1, j), 5.0 * b.get(2, j));
            assert_eq!(c.get(2, j), 0.0);
        }
    }

    #[test]
    fn empty_rows_issue_no_traffic() {
        let mut w = DenseMatrix::zeros(4, 4);
        w.set(2, 0, 1.0);
        w.set(2, 3, -2.0);
        let a = CsrMatrix::from_dense(&w, 0.0);
        let b = DenseMatrix::from_fn(4, 8, |i, j| (i + j) as f32);
        let (c, counters) = sdmm_blocked_counted(&a, &b, 8).unwrap();
        assert_eq!(counters.rows_visited, 1);
        assert_eq!(counters.c_group_loads, 1);
        assert_eq!(counters.c_group_stores, 1);
        assert_eq!(counters.b_group_loads, 2);
        for j in 0..8 {
            assert_eq!(c.get(0, j), 0.0);
            assert_eq!(c.get(1, j), 0.0);
            assert_eq!(c.get(3, j), 0.0);
        }
    }

    #[test]
    fn blocked_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = DenseMatrix::from_fn(80, 50, |_, _| {
            if rng.random_range(0.0f32..1.0) < 0.1 {
                rng.random_range(-1.0f32..1.0)
            } else {
                0.0
            }
        });
        let a = CsrMatrix::from_dense(&w, 0.0);
        let b = DenseMatrix::from_fn(50, 64, |_, _| rng.random_range(-1.0f32..1.0));
        let reference = sdmm_reference(&a, &b).unwrap();
        let blocked = sdmm_blocked(&a, &b, 8).unwrap();
        let scale = reference.max_abs().max(1e-30);
        for (x, y) in blocked.as_slice().iter().zip(reference.as_slice()) {
            assert!((x - y).abs() <= 1e-4 * scale);
        }
    }

    #[test]
    fn lane_divisibility_enforced() {
        let a = CsrMatrix::from_dense(&DenseMatrix::identity(4), 0.0);
        let b = DenseMatrix::zeros(4, 12);
        assert!(matches!(
            sdmm_blocked(&a, &b, 8),
            Err(Error::Validation(_))
        ));
        assert!(sdmm_blocked(&a, &b, 4).is_ok());
    }
}
