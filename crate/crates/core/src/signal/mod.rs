//! Numeric kernels shared by every metric: filtering, pyramids, block
//! transforms, gradients, windowed moments and the seeded generator.
//!
//! All filters replicate edge samples; no other border policy exists.

mod dct;
mod filter;
mod moments;
mod rng;

pub use dct::{dct2, dct3_stereo, idct2, BlockSize};
pub use filter::{
    box_kernel, convolve2d, downsample2, gaussian_kernel, gaussian_kernel_for_sigma, median3x3,
    pyramid, upsample_bilinear, Kernel2D,
};
pub use moments::{local_stats, sobel_gradient, Gradient, LocalStats};
pub use rng::SeededRng;
