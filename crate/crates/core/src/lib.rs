//! Core algorithms for designing, training, pruning, and scoring feed-forward
//! rankers distilled from tree ensembles.
//!
//! Everything in this crate is deterministic, allocation-backed compute:
//! blocked dense matrix multiplication, CSR sparse kernels, bitvector tree
//! traversal, ranking metrics, the distillation trainer, magnitude pruning,
//! and the analytic scoring-time predictors. Anything that touches the wall
//! clock, the filesystem, or a terminal lives in the companion `nnrank-cli`
//! crate; routines that need time measurements (kernel calibration, layer
//! timing) accept timer closures instead of calling a clock themselves.
//!
//! The crate is `no_std` compatible (`alloc` required).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod dense;
pub mod design;
mod error;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pruning;
pub mod sparse;
pub mod trees;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
