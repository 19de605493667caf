//! Blocked dense matrix multiplication and the dense scoring-time predictor.

mod gemm;
mod predict;

pub use gemm::{gemm_blocked, gemm_naive};
pub use predict::{predict_dense_time, DensePrediction, GflopsHeatmap};

use crate::{Error, Result};

/// Block and micro-tile sizes controlling how operands are decomposed.
///
/// Defaults follow the parameter set used by sequential AVX2 GEMM in
/// mainstream BLAS-style libraries: `m_c = 10000`, `n_c = 384`, `k_c = 192`,
/// `m_r = 24`, `n_r = 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelParams {
    /// Column block size of B/C (panel packed toward L3).
    pub n_c: usize,
    /// Row block size of A/C (panel packed toward L2).
    pub m_c: usize,
    /// Depth block size (rank-k update length).
    pub k_c: usize,
    /// Micro-tile rows held in registers.
    pub m_r: usize,
    /// Micro-tile columns held in registers.
    pub n_r: usize,
    /// Skip panel packing when `m * k` is at or below this element count;
    /// for tiny operands the copy costs more than it saves.
    pub pack_skip: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            n_c: 384,
            m_c: 10000,
            k_c: 192,
            m_r: 24,
            n_r: 4,
            pack_skip: 64 * 64,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 || self.m_c == 0 || self.k_c == 0 || self.m_r == 0 || self.n_r == 0 {
            return Err(Error::Validation(alloc::format!(
                "kernel parameters must be positive, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Smallest multiple of `b` that is greater than or equal to `a`.
pub fn rnd_up(a: usize, b: usize) -> Result<usize> {
    if b == 0 {
        return Err(Error::Validation("rnd_up divisor must be positive".into()));
    }
    Ok(a.div_ceil(b) * b)
}

pub(crate) fn rnd_up_unchecked(a: usize, b: usize) -> usize {
    debug_assert!(b > 0);
    a.div_ceil(b) * b
}

/// Block sizes actually used for a concrete `m x k * k x n` product.
///
/// The stock parameters target very large matrices; for the matrix shapes a
/// ranker meets, each block size is clamped to the problem dimension and
/// rounded up to the matching micro-tile multiple:
/// `m_c' = rnd_up(min(max(m, m_r), m_c), m_r)`, analogously for `n_c'`
/// against `n_r`, and `k_c' = min(max(k, 1), k_c)` (the depth axis has no
/// micro multiple to respect).
pub fn effective_params(m: usize, n: usize, k: usize, defaults: &KernelParams) -> KernelParams {
    let m_c = rnd_up_unchecked(m.max(defaults.m_r).min(defaults.m_c), defaults.m_r);
    let n_c = rnd_up_unchecked(n.max(defaults.n_r).min(defaults.n_c), defaults.n_r);
    let k_c = k.max(1).min(defaults.k_c);
    KernelParams {
        n_c,
        m_c,
        k_c,
        ..*defaults
    }
}

/// Ratio of floating-point operations to memory operations for one packed
/// `m_c x k_c` panel update, `2*m_c*k_c / (2*m_c + k_c)`.
///
/// The larger the panel product, the better the memory traffic amortizes;
/// the ratio grows monotonically in both block sizes.
pub fn flops_per_memop(m_c: usize, k_c: usize) -> f64 {
    let (m_c, k_c) = (m_c as f64, k_c as f64);
    2.0 * m_c * k_c / (2.0 * m_c + k_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rnd_up_matches_definition() {
        assert_eq!(rnd_up(10, 4).unwrap(), 12);
        assert_eq!(rnd_up(24, 24).unwrap(), 24);
        assert_eq!(rnd_up(1, 24).unwrap(), 24);
        assert_eq!(rnd_up(0, 7).unwrap(), 0);
        assert!(rnd_up(5, 0).is_err());
    }

    #[test]
    fn effective_params_clamp_and_round() {
        let d = KernelParams::default();
        assert_eq!(effective_params(100, 1000, 1000, &d).m_c, 120);
        assert_eq!(effective_params(20000, 1000, 1000, &d).m_c, 10008);
        assert_eq!(effective_params(8, 1000, 1000, &d).m_c, 24);
        // refined m_c stays a multiple of m_r
        for m in [1, 7, 24, 100, 383, 9999, 10001, 54321] {
            let e = effective_params(m, 64, 64, &d);
            assert_eq!(e.m_c % d.m_r, 0);
            assert_eq!(e.n_c % d.n_r, 0);
        }
        assert_eq!(effective_params(10, 2, 7, &d).n_c, 4);
        assert_eq!(effective_params(10, 2, 7, &d).k_c, 7);
        assert_eq!(effective_params(10, 2, 700, &d).k_c, d.k_c);
    }

    #[test]
    fn flop_memop_ratio_monotone() {
        let mut prev = 0.0;
        for mc in [24, 48, 96, 384, 10000] {
            let r = flops_per_memop(mc, 192);
            assert!(r > prev);
            prev = r;
        }
        let mut prev = 0.0;
        for kc in [8, 64, 192, 512] {
            let r = flops_per_memop(10000, kc);
            assert!(r > prev);
            prev = r;
        }
    }
}
