//! Quickest change detection for streams of quantum states.
//!
//! Copies are grouped into blocks of `ℓ` and measured with a projection-valued
//! measure built from the pre-change state alone. The resulting classical
//! outcomes feed a window-limited CUSUM that estimates the unknown post-change
//! distribution from recent data.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod detectors;
pub mod ensembles;
pub mod error;
pub mod linalg;
pub mod quantum;
pub mod rng;
pub mod schur;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
