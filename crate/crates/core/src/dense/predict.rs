//! Forward-pass time prediction for dense layers.
//!
//! A layer of shape `l_i x l_{i-1}` scored over a batch of `n` documents is
//! one `(m, k) x (k, n)` multiplication costing `2*m*k*n` FLOPs. Measured
//! throughput varies strongly with shape, so instead of one peak number the
//! predictor reads a benchmarked GFLOPS lookup table and charges each layer
//! `flops / gflops(m, k, n)`. Bias and activation terms are dropped: the
//! multiplications dominate both in operation count and in cost per
//! operation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::nn::FfnArchitecture;
use crate::{Error, Result};

/// Measured GFLOPS over a grid of `(m, k)` layer shapes and batch sizes `n`.
///
/// `gflops` is indexed `[n][m][k]`, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GflopsHeatmap {
    pub machine: String,
    pub n_values: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub gflops: Vec<f64>,
}

impl GflopsHeatmap {
    pub fn new(
        machine: String,
        n_values: Vec<usize>,
        m_grid: Vec<usize>,
        k_grid: Vec<usize>,
        gflops: Vec<f64>,
    ) -> Result<Self> {
        let hm = GflopsHeatmap {
            machine,
            n_values,
            m_grid,
            k_grid,
            gflops,
        };
        hm.validate()?;
        Ok(hm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.m_grid.is_empty() || self.k_grid.is_empty() {
            return Err(Error::Validation("heatmap axes must be non-empty".into()));
        }
        for axis in [&self.n_values, &self.m_grid, &self.k_grid] {
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(
                    "heatmap axes must be strictly increasing".into(),
                ));
            }
            if axis[0] == 0 {
                return Err(Error::Validation("heatmap axes must be positive".into()));
            }
        }
        let cells = self.n_values.len() * self.m_grid.len() * self.k_grid.len();
        if self.gflops.len() != cells {
            return Err(Error::Validation(alloc::format!(
                "heatmap needs {cells} cells, got {}",
                self.gflops.len()
            )));
        }
        if self.gflops.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Validation("heatmap GFLOPS must be positive".into()));
        }
        Ok(())
    }

    /// Throughput for the grid cell nearest to `(m, k, n)`.
    ///
    /// Nearest is taken per axis in log space: throughput varies smoothly
    /// within a performance zone but zones are separated by multiplicative
    /// steps, so log distance picks the right zone for off-grid shapes.
    pub fn lookup(&self, m: usize, k: usize, n: usize) -> f64 {
        let ni = nearest_log(&self.n_values, n);
        let mi = nearest_log(&self.m_grid, m);
        let ki = nearest_log(&self.k_grid, k);
        self.gflops[(ni * self.m_grid.len() + mi) * self.k_grid.len() + ki]
    }
}

fn nearest_log(grid: &[usize], v: usize) -> usize {
    let target = libm::log(v.max(1) as f64);
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let d = (libm::log(g as f64) - target).abs();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

/// Predicted forward-pass cost of a dense network.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePrediction {
    /// Seconds per layer for the whole batch, output layer included.
    pub per_layer_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub per_doc_seconds: f64,
}

/// Predicts the batched forward time of `arch`, layer by layer.
///
/// Layer `i` contributes `2 * l_i * l_{i-1} * batch` FLOPs (with `l_0` the
/// input dimension and a final scalar output layer appended), divided by the
/// heatmap throughput for that shape. The total is the plain sum, so the
/// prediction is exactly additive over layers.
pub fn predict_dense_time(
    arch: &FfnArchitecture,
    batch: usize,
    heatmap: &GflopsHeatmap,
) -> Result<DensePrediction> {
    arch.validate()?;
    heatmap.validate()?;
    if batch == 0 {
        return Err(Error::Validation("batch size must be positive".into()));
    }
    let per_layer_seconds: Vec<f64> = arch
        .layer_shapes()
        .into_iter()
        .map(|(m, k)| {
            let flops = 2.0 * m as f64 * k as f64 * batch as f64;
            flops / (heatmap.lookup(m, k, batch) * 1e9)
        })
        .collect();
    let total_seconds = per_layer_seconds.iter().sum();
    Ok(DensePrediction {
        per_layer_seconds,
        total_seconds,
        per_doc_seconds: total_seconds / batch as f64,
    })
}
