use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Supported square block sizes for the orthonormal DCT-II.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSize {
    Four = 4,
    Eight = 8,
}

impl BlockSize {
    pub fn from_len(n: usize) -> Result<Self> {
        match n {
            4 => Ok(BlockSize::Four),
            8 => Ok(BlockSize::Eight),
            _ => Err(Error::Param(format!("unsupported DCT block size {n}"))),
        }
    }

    #[inline]
    pub fn n(self) -> usize {
        self as usize
    }

    /// Row-major basis `B[k][i] = c_k cos((2i+1)kπ / 2N)`.
    fn basis(self) -> &'static [f64] {
        static B4: OnceLock<Vec<f64>> = OnceLock::new();
        static B8: OnceLock<Vec<f64>> = OnceLock::new();
        let cell = match self {
            BlockSize::Four => &B4,
            BlockSize::Eight => &B8,
        };
        cell.get_or_init(|| {
            let n = self.n();
            let mut b = vec![0.0; n * n];
            for k in 0..n {
                let c = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                for i in 0..n {
                    b[k * n + i] = c * ((2 * i + 1) as f64 * k as f64 * PI / (2 * n) as f64).cos();
                }
            }
            b
        })
    }
}

fn check_block(block: &[f64]) -> Result<BlockSize> {
    let n = (block.len() as f64).sqrt().round() as usize;
    if n * n != block.len() {
        return Err(Error::Param(format!("block of {} samples is not square", block.len())));
    }
    BlockSize::from_len(n)
}

/// Orthonormal 2-D DCT-II of a row-major N×N block (N ∈ {4, 8}).
pub fn dct2(block: &[f64]) -> Result<Vec<f64>> {
    let size = check_block(block)?;
    Ok(transform(block, size, false))
}

/// Inverse of [`dct2`].
pub fn idct2(coeffs: &[f64]) -> Result<Vec<f64>> {
    let size = check_block(coeffs)?;
    Ok(transform(coeffs, size, true))
}

fn transform(input: &[f64], size: BlockSize, inverse: bool) -> Vec<f64> {
    let n = size.n();
    let b = size.basis();
    // forward: C = B X Bᵀ ; inverse: X = Bᵀ C B
    let at = |k: usize, i: usize| if inverse { b[i * n + k] } else { b[k * n + i] };
    let mut tmp = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            tmp[r * n + c] = (0..n).map(|j| input[r * n + j] * at(c, j)).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|j| at(r, j) * tmp[j * n + c]).sum();
        }
    }
    out
}

/// 3-D DCT of a stereo 4×4 block pair: 2-D DCT per view, then a 2-point
/// orthonormal DCT across views. Output is `[sum slab (16), difference slab (16)]`.
pub fn dct3_stereo(left: &[f64], right: &[f64]) -> Result<[f64; 32]> {
    if left.len() != 16 || right.len() != 16 {
        return Err(Error::Param("dct3_stereo needs two 4x4 blocks".into()));
    }
    let a = transform(left, BlockSize::Four, false);
    let b = transform(right, BlockSize::Four, false);
    let mut out = [0.0; 32];
    for i in 0..16 {
        out[i] = (a[i] + b[i]) * FRAC_1_SQRT_2;
        out[16 + i] = (a[i] - b[i]) * FRAC_1_SQRT_2;
    }
    Ok(out)
}
