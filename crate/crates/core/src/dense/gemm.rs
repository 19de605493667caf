//! Five-loop blocked GEMM with packed panels and a register micro-kernel.
//!
//! Loop structure, outermost first: columns of B/C in `n_c` blocks, depth in
//! `k_c` blocks (B panel packed), rows of A/C in `m_c` blocks (A panel
//! packed), then the macro-kernel sweeps `m_r x n_r` micro-tiles, each
//! accumulating `k_c` rank-1 updates before touching C once.
//!
//! The micro-kernel is portable: plain indexed loops the compiler can
//! auto-vectorize, plus a fixed-size specialization for the default
//! 24x4 tile. Both run the same operations in the same order, so the
//! result does not depend on which one is dispatched.

use alloc::vec;
use alloc::vec::Vec;

use super::{effective_params, rnd_up_unchecked, KernelParams};
use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// Reference triple loop, `C[i][j] = sum_p A[i][p] * B[p][j]`.
pub fn gemm_naive(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_shapes(a, b)?;
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut c = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for p in 0..k {
            let av = a.get(i, p);
            let b_row = b.row(p);
            let c_row = c.row_mut(i);
            for j in 0..n {
                c_row[j] += av * b_row[j];
            }
        }
    }
    Ok(c)
}

/// Blocked multiplication `C = A * B`.
pub fn gemm_blocked(a: &DenseMatrix, b: &DenseMatrix, params: &KernelParams) -> Result<DenseMatrix> {
    check_shapes(a, b)?;
    params.validate()?;
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    if m == 0 || k == 0 || n == 0 {
        return Ok(DenseMatrix::zeros(m, n));
    }
    // Tiny left operand: packing costs more than it saves.
    if m * k <= params.pack_skip {
        return gemm_naive(a, b);
    }

    let eff = effective_params(m, n, k, params);
    let (m_c, n_c, k_c, m_r, n_r) = (eff.m_c, eff.n_c, eff.k_c, eff.m_r, eff.n_r);

    let mut c = DenseMatrix::zeros(m, n);
    let mut a_pack = vec![0.0f32; m_c * k_c];
    let mut b_pack = vec![0.0f32; k_c * rnd_up_unchecked(n_c, n_r)];
    let mut acc = vec![0.0f32; m_r * n_r];

    let mut jc = 0;
    while jc < n {
        let nb = n_c.min(n - jc);
        let mut pc = 0;
        while pc < k {
            let kb = k_c.min(k - pc);
            pack_b(b, pc, jc, kb, nb, n_r, &mut b_pack);
            let mut ic = 0;
            while ic < m {
                let mb = m_c.min(m - ic);
                pack_a(a, ic, pc, mb, kb, m_r, &mut a_pack);
                macro_kernel(
                    &a_pack, &b_pack, &mut c, &mut acc, ic, jc, mb, nb, kb, m_r, n_r,
                );
                ic += m_c;
            }
            pc += k_c;
        }
        jc += n_c;
    }
    Ok(c)
}

fn check_shapes(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Packs the `kb x nb` block of B at (`pc`, `jc`) into row-major micro-panels
/// of `n_r` columns. Ragged tail columns are zero-filled so the micro-kernel
/// never branches on width.
fn pack_b(b: &DenseMatrix, pc: usize, jc: usize, kb: usize, nb: usize, n_r: usize, out: &mut [f32]) {
    let panels = nb.div_ceil(n_r);
    for jp in 0..panels {
        let col0 = jc + jp * n_r;
        let width = n_r.min(jc + nb - col0);
        let panel = &mut out[jp * kb * n_r..(jp + 1) * kb * n_r];
        for p in 0..kb {
            let src = &b.row(pc + p)[col0..col0 + width];
            let dst = &mut panel[p * n_r..p * n_r + n_r];
            dst[..width].copy_from_slice(src);
            dst[width..].fill(0.0);
        }
    }
}

/// Packs the `mb x kb` block of A at (`ic`, `pc`) into column-major
/// micro-panels of `m_r` rows, zero-filling ragged tail rows.
fn pack_a(a: &DenseMatrix, ic: usize, pc: usize, mb: usize, kb: usize, m_r: usize, out: &mut [f32]) {
    let panels = mb.div_ceil(m_r);
    for ip in 0..panels {
        let row0 = ic + ip * m_r;
        let height = m_r.min(ic + mb - row0);
        let panel = &mut out[ip * kb * m_r..(ip + 1) * kb * m_r];
        for p in 0..kb {
            let dst = &mut panel[p * m_r..p * m_r + m_r];
            for r in 0..height {
                dst[r] = a.get(row0 + r, pc + p);
            }
            dst[height..].fill(0.0);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn macro_kernel(
    a_pack: &[f32],
    b_pack: &[f32],
    c: &mut DenseMatrix,
    acc: &mut [f32],
    ic: usize,
    jc: usize,
    mb: usize,
    nb: usize,
    kb: usize,
    m_r: usize,
    n_r: usize,
) {
    let col_panels = nb.div_ceil(n_r);
    let row_panels = mb.div_ceil(m_r);
    for jp in 0..col_panels {
        let b_panel = &b_pack[jp * kb * n_r..(jp + 1) * kb * n_r];
        for ip in 0..row_panels {
            let a_panel = &a_pack[ip * kb * m_r..(ip + 1) * kb * m_r];
            acc.fill(0.0);
            if m_r == 24 && n_r == 4 {
                micro_kernel_24x4(a_panel, b_panel, kb, acc);
            } else {
                micro_kernel(a_panel, b_panel, kb, m_r, n_r, acc);
            }
            // Write back only the in-bounds part of the tile.
            let rows = m_r.min(mb - ip * m_r);
            let cols = n_r.min(nb - jp * n_r);
            for i in 0..rows {
                let c_row = c.row_mut(ic + ip * m_r + i);
                let tile = &acc[i * n_r..i * n_r + cols];
                for (dst, v) in c_row[jc + jp * n_r..jc + jp * n_r + cols].iter_mut().zip(tile) {
                    *dst += v;
                }
            }
        }
    }
}

/// `kb` rank-1 updates into an `m_r x n_r` register tile.
fn micro_kernel(a_panel: &[f32], b_panel: &[f32], kb: usize, m_r: usize, n_r: usize, acc: &mut [f32]) {
    for p in 0..kb {
        let a_col = &a_panel[p * m_r..p * m_r + m_r];
        let b_row = &b_panel[p * n_r..p * n_r + n_r];
        for i in 0..m_r {
            let av = a_col[i];
            let dst = &mut acc[i * n_r..i * n_r + n_r];
            for j in 0..n_r {
                dst[j] += av * b_row[j];
            }
        }
    }
}

/// Fixed-size variant of [`micro_kernel`] for the default 24x4 tile; the
/// constant bounds let the compiler keep the tile in vector registers.
fn micro_kernel_24x4(a_panel: &[f32], b_panel: &[f32], kb: usize, acc: &mut [f32]) {
    const MR: usize = 24;
    const NR: usize = 4;
    let tile: &mut [f32; MR * NR] = (&mut acc[..MR * NR]).try_into().unwrap();
    for p in 0..kb {
        let a_col: &[f32; MR] = a_panel[p * MR..p * MR + MR].try_into().unwrap();
        let b_row: &[f32; NR] = b_panel[p * NR..p * NR + NR].try_into().unwrap();
        for i in 0..MR {
            let av = a_col[i];
            for j in 0..NR {
                tile[i * NR + j] += av * b_row[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0f32..1.0))
    }

    fn assert_close(c: &DenseMatrix, oracle: &DenseMatrix, tol: f32) {
        let scale = oracle.max_abs().max(1e-30);
        for (x, y) in c.as_slice().iter().zip(oracle.as_slice()) {
            assert!(
                (x - y).abs() <= tol * scale,
                "entry {x} vs {y} beyond tol {tol} at scale {scale}"
            );
        }
    }

    #[test]
    fn identity_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_matrix(&mut rng, 4, 9);
        let c = gemm_blocked(&DenseMatrix::identity(4), &b, &KernelParams::default()).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn one_by_one() {
        let a = DenseMatrix::from_vec(1, 1, vec![2.0]).unwrap();
        let b = DenseMatrix::from_vec(1, 1, vec![3.0]).unwrap();
        let c = gemm_blocked(&a, &b, &KernelParams::default()).unwrap();
        assert_eq!(c.get(0, 0), 6.0);
    }

    #[test]
    fn matches_naive_beyond_pack_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 130, 70);
        let b = random_matrix(&mut rng, 70, 90);
        let c = gemm_blocked(&a, &b, &KernelParams::default()).unwrap();
        assert_close(&c, &gemm_naive(&a, &b).unwrap(), 1e-4);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = DenseMatrix::zeros(3, 4);
        let b = DenseMatrix::zeros(5, 2);
        assert!(matches!(
            gemm_blocked(&a, &b, &KernelParams::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn odd_params_still_correct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 61, 37);
        let b = random_matrix(&mut rng, 37, 53);
        let oracle = gemm_naive(&a, &b).unwrap();
        for params in [
            KernelParams { m_r: 3, n_r: 5, m_c: 9, n_c: 10, k_c: 7, pack_skip: 0 },
            KernelParams { m_r: 1, n_r: 1, m_c: 2, n_c: 2, k_c: 1, pack_skip: 0 },
            KernelParams { pack_skip: 0, ..KernelParams::default() },
            KernelParams { pack_skip: usize::MAX, ..KernelParams::default() },
        ] {
            let c = gemm_blocked(&a, &b, &params).unwrap();
            assert_close(&c, &oracle, 1e-4);
        }
    }
}
