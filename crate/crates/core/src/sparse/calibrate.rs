//! Deriving the sparse-kernel cost coefficients from timed multiplications.
//!
//! The blocked kernel's cost decomposes into three unit prices: `L_c` to
//! load and store one lane group of C, `L_a` to load one non-zero of A and
//! apply its FMA updates, and `L_b` to load one lane group of B. None of
//! them can be timed in isolation, but multiplying specially shaped matrices
//! makes them separable by difference:
//!
//! * `A_c` — all non-zeros on one column: `T = nnz*L_c' + nnz*L_a + 1*L_b'`
//! * `A_rd` — a permutation pattern:      `T = m*L_c'   + m*L_a   + k*L_b'`
//! * `A_2c` — two full columns:           `T = m*L_c'   + 2m*L_a  + 2*L_b'`
//!
//! (primes denote the per-batch cost at the measured width `N`). With
//! `nnz = m = k`, `L_b' = (T(A_rd) - T(A_c)) / (k - 1)` and
//! `L_a = (T(A_2c) - T(A_c) - L_b') / nnz`, an exact inversion of the cost
//! model on these matrices. `L_c' = 2*L_b'` (a store-and-load pair costs two
//! loads), and the batch-dependent coefficients are normalized by `N`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, SparseCoeffs};
use crate::{Error, Result};

/// Shapes (`m = k`) measured during calibration.
pub const CALIBRATION_SHAPES: [usize; 4] = [200, 300, 400, 500];
/// Batch widths measured during calibration. Wider batches break the
/// assumption that B stays cache-resident for the whole multiplication.
pub const CALIBRATION_BATCHES: [usize; 3] = [16, 32, 64];

/// Synthetic occupancy patterns with known occupancy statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationKind {
    /// `nnz` entries stacked on a single column: one active column.
    SingleColumn,
    /// `nnz` entries on each of two columns: two active columns.
    TwoColumn,
    /// One entry per row and per column (a shuffled permutation pattern);
    /// requires `nnz = m = k`.
    DiagonalRandom,
}

/// Builds a calibration matrix; all stored values are 1.0 (timing does not
/// depend on the values, only on the occupancy pattern).
pub fn make_calibration_matrix(
    kind: CalibrationKind,
    m: usize,
    k: usize,
    nnz: usize,
) -> Result<CsrMatrix> {
    if m == 0 || k == 0 {
        return Err(Error::Validation("calibration matrix must be non-empty".into()));
    }
    match kind {
        CalibrationKind::SingleColumn => {
            if nnz > m {
                return Err(Error::Validation(alloc::format!(
                    "single-column pattern needs nnz <= m, got nnz={nnz} m={m}"
                )));
            }
            build(m, k, (0..nnz).map(|i| (i, alloc::vec![0u32])))
        }
        CalibrationKind::TwoColumn => {
            if nnz > m || k < 2 {
                return Err(Error::Validation(alloc::format!(
                    "two-column pattern needs nnz <= m and k >= 2, got nnz={nnz} m={m} k={k}"
                )));
            }
            build(m, k, (0..nnz).map(|i| (i, alloc::vec![0u32, 1u32])))
        }
        CalibrationKind::DiagonalRandom => {
            if nnz != m || m != k {
                return Err(Error::Validation(alloc::format!(
                    "permutation pattern needs nnz = m = k, got nnz={nnz} m={m} k={k}"
                )));
            }
            let mut perm: Vec<u32> = (0..k as u32).collect();
            // Fixed seed: the pattern must be reproducible for a given shape.
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed ^ m as u64));
            build(m, k, perm.into_iter().enumerate().map(|(i, c)| (i, alloc::vec![c])))
        }
    }
}

fn build(m: usize, k: usize, entries: impl Iterator<Item = (usize, Vec<u32>)>) -> Result<CsrMatrix> {
    let mut values = Vec::new();
    let mut col_index = Vec::new();
    let mut rows = alloc::vec![0usize; m + 1];
    let mut filled: Vec<Vec<u32>> = alloc::vec![Vec::new(); m];
    for (row, cols) in entries {
        filled[row] = cols;
    }
    for (i, cols) in filled.into_iter().enumerate() {
        for c in cols {
            values.push(1.0);
            col_index.push(c);
        }
        rows[i + 1] = values.len();
    }
    CsrMatrix::from_parts(m, k, values, col_index, rows)
}

/// Derives `(L_a, L_b, L_c)` from timed multiplications.
///
/// `timer(matrix, n)` must return the seconds one `matrix x (k x n)`
/// multiplication takes. Every `(shape, n)` pair yields one coefficient
/// estimate; the result is their mean. Fails if any difference comes out
/// non-positive, which means the timings are noise-dominated.
pub fn calibrate_sparse_with<F>(
    shapes: &[usize],
    n_values: &[usize],
    lanes: usize,
    machine: String,
    mut timer: F,
) -> Result<SparseCoeffs>
where
    F: FnMut(&CsrMatrix, usize) -> f64,
{
    if shapes.is_empty() || n_values.is_empty() {
        return Err(Error::Validation("calibration grids must be non-empty".into()));
    }
    if shapes.iter().any(|&s| s < 2) {
        return Err(Error::Validation("calibration shapes must be at least 2".into()));
    }
    if n_values.iter().any(|&n| n >= 128) {
        return Err(Error::Validation(
            "calibration batch widths must stay below 128 to keep B cache-resident".into(),
        ));
    }
    if lanes == 0 || n_values.iter().any(|&n| n % lanes != 0) {
        return Err(Error::Validation(
            "calibration batch widths must be multiples of the lane count".into(),
        ));
    }

    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut samples = 0.0;
    for &side in shapes {
        let (m, k, nnz) = (side, side, side);
        let a_c = make_calibration_matrix(CalibrationKind::SingleColumn, m, k, nnz)?;
        let a_rd = make_calibration_matrix(CalibrationKind::DiagonalRandom, m, k, nnz)?;
        let a_2c = make_calibration_matrix(CalibrationKind::TwoColumn, m, k, nnz)?;
        for &n in n_values {
            let t_c = timer(&a_c, n);
            let t_rd = timer(&a_rd, n);
            let t_2c = timer(&a_2c, n);
            let l_b_at_n = (t_rd - t_c) / (k - 1) as f64;
            if !(l_b_at_n > 0.0) {
                return Err(Error::CalibrationFailed(alloc::format!(
                    "T(A_rd) - T(A_c) = {:.3e}s at shape {side}, N={n}: \
                     timings are not separable on this machine",
                    t_rd - t_c
                )));
            }
            let l_a = (t_2c - t_c - l_b_at_n) / nnz as f64;
            if !(l_a > 0.0) {
                return Err(Error::CalibrationFailed(alloc::format!(
                    "derived L_a = {l_a:.3e}s at shape {side}, N={n}: \
                     timings are not separable on this machine"
                )));
            }
            sum_a += l_a;
            sum_b += l_b_at_n / n as f64;
            samples += 1.0;
        }
    }
    let l_b = sum_b / samples;
    Ok(SparseCoeffs {
        l_a: sum_a / samples,
        l_b,
        l_c: 2.0 * l_b,
        n_b: lanes,
        machine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::predict_sparse_time;
    use alloc::string::ToString;

    #[test]
    fn calibration_patterns_have_expected_stats() {
        let a_c = make_calibration_matrix(CalibrationKind::SingleColumn, 4, 4, 4).unwrap();
        let s = a_c.stats();
        assert_eq!((s.nnz, s.active_rows, s.active_cols), (4, 4, 1));

        let a_2c = make_calibration_matrix(CalibrationKind::TwoColumn, 4, 4, 4).unwrap();
        let s = a_2c.stats();
        assert_eq!((s.nnz, s.active_rows, s.active_cols), (8, 4, 2));

        let a_rd = make_calibration_matrix(CalibrationKind::DiagonalRandom, 4, 4, 4).unwrap();
        let s = a_rd.stats();
        assert_eq!((s.nnz, s.active_rows, s.active_cols), (4, 4, 4));
        a_rd.validate().unwrap();
    }

    #[test]
    fn infeasible_patterns_rejected() {
        assert!(make_calibration_matrix(CalibrationKind::SingleColumn, 4, 4, 5).is_err());
        assert!(make_calibration_matrix(CalibrationKind::DiagonalRandom, 4, 5, 4).is_err());
        assert!(make_calibration_matrix(CalibrationKind::TwoColumn, 4, 1, 2).is_err());
    }

    #[test]
    fn exact_model_timer_round_trips() {
        let (l_a, l_b) = (3.1e-9, 4.7e-11);
        let l_c = 2.0 * l_b;
        let coeffs = calibrate_sparse_with(
            &CALIBRATION_SHAPES,
            &CALIBRATION_BATCHES,
            8,
            "synthetic".to_string(),
            |m, n| {
                let s = m.stats();
                s.active_rows as f64 * l_c * n as f64
                    + s.nnz as f64 * l_a
                    + s.active_cols as f64 * l_b * n as f64
            },
        )
        .unwrap();
        assert!((coeffs.l_a - l_a).abs() / l_a < 1e-9);
        assert!((coeffs.l_b - l_b).abs() / l_b < 1e-9);
        assert!((coeffs.l_c - l_c).abs() / l_c < 1e-9);
        coeffs.validate().unwrap();

        // and the predictor reproduces the timer on a calibration matrix
        let m = make_calibration_matrix(CalibrationKind::TwoColumn, 300, 300, 300).unwrap();
        let t = predict_sparse_time(&m.stats(), &coeffs, 32);
        let expected = 300.0 * l_c * 32.0 + 600.0 * l_a + 2.0 * l_b * 32.0;
        assert!((t - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn degenerate_timings_fail() {
        // constant timer -> T(A_rd) == T(A_c) -> L_b = 0
        let err = calibrate_sparse_with(&[200], &[16], 8, "x".to_string(), |_, _| 1.0);
        assert!(matches!(err, Err(Error::CalibrationFailed(_))));
    }
}
