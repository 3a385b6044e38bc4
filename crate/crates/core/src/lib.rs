//! Fog physics toolkit.
//!
//! Koschmieder's law relates what a camera sees through homogeneous fog to
//! the fog-free radiance `J`, the scene depth `D`, the airlight `A` and the
//! extinction coefficient `β`:
//!
//! ```text
//! I = J·T + A·(1 − T),   T = exp(−β·D),   V = −ln(ε) / β
//! ```
//!
//! This crate holds the pure numerical side of the toolkit and builds
//! without `std` (it needs `alloc`):
//!
//! - [`field`]: scalar fields, RGB images, validity masks and the small
//!   domain newtypes ([`Airlight`], [`Epsilon`]).
//! - [`physics`]: transmission, fog synthesis, defogging, contrast and the
//!   per-pixel visibility formula.
//! - [`synth`] and [`scene`]: seeded fog augmentation, procedural scenes and
//!   the scene-disjoint 7:2:1 dataset split.
//! - [`estimate`]: pixel-wise and masked image-wise visibility, plus the
//!   five visibility classes.
//! - [`invert`]: variable-projection least squares recovering `A` and `β`.
//! - [`losses`] and [`ssim`]: the multi-task training losses together with
//!   analytic and finite-difference gradients.
//! - [`metrics`]: AbsRel, SqRel, RMSE, RMSElog and class accuracy.
//!
//! File formats, rendering and the command line live in the `fogbench`
//! companion crate.
#![no_std]
// Negated float comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod estimate;
pub mod field;
pub mod invert;
pub mod losses;
mod math;
pub mod metrics;
pub mod physics;
pub mod scene;
pub mod ssim;
pub mod synth;

pub use error::{Error, Result};
pub use estimate::{classify, image_visibility, pixel_visibility, EstimationConfig, VisibilityClass};
pub use field::{Airlight, Epsilon, Mask, MaskedField, RgbImage, ScalarField};
pub use invert::{fit_uniform_fog, FitOptions, FitResult};
pub use losses::{total_loss, LossTerms, LossWeights};
pub use metrics::{classification_accuracy, regression_metrics, MetricReport, RegressionMetrics};
pub use physics::{
    beta_from_visibility, contrast, defog, synthesize, transmission_from_depth, visibility_from_beta,
    visibility_map,
};
pub use synth::{FogSample, SampleKey, SplitManifest};
