//! Saliency-weighted quality assessment for stereoscopic video.
//!
//! Every metric here pools local quality values with a per-pixel saliency
//! weight through a single operator, [`saliency::weighted_spatial_mean`],
//! and reduces to its ordinary unweighted form when the weight is constant.
//!
//! * [`media`]: raw planar stereo sequences and PGM map series
//! * [`signal`]: filters, pyramids, DCTs, gradients, seeded noise
//! * [`saliency`]: pooling, normalization, pyramids and a baseline attention model
//! * [`disparity`]: block-matching disparity, relative depth, depth bracket
//! * [`fr`] / [`nr`]: full- and no-reference metrics
//! * [`distort`]: deterministic distortion generators
//! * [`stats`]: subject screening, MOS and correlation statistics

// `!(x >= 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disparity;
pub mod distort;
pub mod error;
pub mod fr;
pub mod media;
pub mod metric;
pub mod nr;
pub mod par;
pub mod plane;
pub mod report;
pub mod saliency;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
pub use metric::MetricId;
pub use plane::Plane;
pub use report::{MetricReport, Orientation};
