//! Structural similarity loss for semantic segmentation.
//!
//! The crate provides, bottom up:
//!
//! - [`grid`]: dense label/probability/logit containers with validated
//!   construction, one-hot encoding, a numerically stable sigmoid, and
//!   deterministic argmax decoding.
//! - [`io`]: binary PGM label maps and the SEGT tensor container.
//! - [`stats`]: circular-symmetric Gaussian windows and separable
//!   reflect-padded local mean/variance/covariance fields.
//! - [`ssim`]: the simplified SSIM index and its two loss forms, with
//!   analytic gradients.
//! - [`ssl`]: the structural similarity loss — local standard
//!   normalization, structural error, hard-example mining against the
//!   theoretical error maximum, reweighted sigmoid cross entropy, the
//!   combined objective, and a softmax cross-entropy baseline.
//! - [`metrics`]: confusion matrix, per-class IoU, mIoU, pixel accuracy.
//! - [`harness`]: synthetic thin-structure scenes, a tiny FCN with
//!   hand-derived backprop, momentum-SGD training with the poly schedule,
//!   checkpoints, and ablation sweeps.

pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod report;
pub mod ssim;
pub mod ssl;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{argmax_labels, one_hot, sigmoid, LabelMap, LogitMap, Plane, ProbabilityMap, Tensor, VOID};
pub use metrics::ConfusionMatrix;
pub use report::LossReport;
pub use ssim::SsimParams;
pub use ssl::{SslParams, SslReport};
pub use stats::GaussianWindow;
