//! Disparity-aware full-reference metrics.

use log::debug;

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::media::StereoFrame;
use crate::plane::Plane;
use crate::saliency::{block_weight, pool, WeightedSum};
use crate::signal::{dct2, dct3_stereo, idct2};

use super::core::{global_ssim, msssim_value, psnr_from_mse, ssim_maps, ssim_value, vif_value};
use super::{FrInputs, FrMetricConfig};

/// Single fused view of a stereo pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclopeanFrame {
    image: Plane,
}

impl CyclopeanFrame {
    pub fn image(&self) -> &Plane {
        &self.image
    }

    pub fn into_plane(self) -> Plane {
        self.image
    }
}

/// Disparity-compensated average `0.5·(L(x, y) + R(x − round d, y))`.
pub fn cyclopean_fuse(pair: &StereoFrame, d: &DisparityMap) -> Result<CyclopeanFrame> {
    Ok(CyclopeanFrame {
        image: fuse(&pair.left.luma, &pair.right.luma, d)?,
    })
}

fn fuse(left: &Plane, right: &Plane, d: &DisparityMap) -> Result<Plane> {
    left.ensure_same_dims(right, "cyclopean views")?;
    left.ensure_same_dims(d.values(), "cyclopean disparity")?;
    let dv = d.values();
    Ok(Plane::from_fn(left.width(), left.height(), |x, y| {
        let shift = dv.get(x, y).round() as isize;
        0.5 * (left.get(x, y) + right.get_clamped(x as isize - shift, y as isize))
    }))
}

/// `clamp01(1 − sqrt|d² − d'²| / 255)`.
pub fn disparity_factor(d: f64, d_prime: f64) -> f64 {
    (1.0 - (d * d - d_prime * d_prime).abs().sqrt() / 255.0).clamp(0.0, 1.0)
}

pub(super) fn ddl1_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let factor = d_ref.values().zip_map(d_dist.values(), disparity_factor);
    let r = &inputs.reference.frames()[t];
    let d = &inputs.distorted.frames()[t];
    let mut total = 0.0;
    for (rv, dv) in r.views().into_iter().zip(d.views()) {
        let q = ssim_maps(&rv.luma, &dv.luma, cfg)?.ssim.zip_map(&factor, |a, b| a * b);
        total += pool(&q, inputs.s(t))?;
    }
    Ok(total)
}

pub(super) fn oq_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let s = inputs.s(t);
    let iq = super::views_mean(inputs, t, |a, b, s| ssim_value(a, b, s, cfg))?;
    let dq = pool(&d_ref.values().zip_map(d_dist.values(), |a, b| (a - b).abs()), s)?;
    let k = &cfg.oq;
    Ok(k.a * iq.powf(k.d) + k.b * dq.powf(k.e) + k.c * iq.powf(k.d) * dq.powf(k.d))
}

fn cyclopean_pair(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
) -> Result<(Plane, Plane)> {
    let a = cyclopean_fuse(&inputs.reference.frames()[t], d_ref)?.into_plane();
    let b = cyclopean_fuse(&inputs.distorted.frames()[t], d_dist)?.into_plane();
    Ok((a, b))
}

pub(super) fn ciq_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let (a, b) = cyclopean_pair(inputs, t, d_ref, d_dist)?;
    ssim_value(&a, &b, inputs.s(t), cfg)
}

pub(super) fn mj3d_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let (a, b) = cyclopean_pair(inputs, t, d_ref, d_dist)?;
    msssim_value(&a, &b, inputs.s(t), cfg)
}

fn block_vec(p: &Plane, x0: isize, y0: isize, n: usize) -> Vec<f64> {
    p.crop_clamped(x0, y0, n, n).into_vec()
}

/// CSF-weighted mean squared difference between the 4×4×2 stereo DCT
/// volumes of a reference and distorted block. The right-view block is
/// taken at the reference disparity.
pub fn block_error_3d(
    reference: &StereoFrame,
    distorted: &StereoFrame,
    d_ref: &DisparityMap,
    x0: usize,
    y0: usize,
    csf: &[[f64; 4]; 4],
) -> Result<f64> {
    let shift = d_ref.block_shift(x0, y0, 4, 4);
    let (x, y) = (x0 as isize, y0 as isize);
    let volume = |f: &StereoFrame| {
        dct3_stereo(
            &block_vec(&f.left.luma, x, y, 4),
            &block_vec(&f.right.luma, x - shift, y, 4),
        )
    };
    let a = volume(reference)?;
    let b = volume(distorted)?;
    let mut e = 0.0;
    for (i, (p, q)) in a.iter().zip(&b).enumerate() {
        let k = i % 16;
        let v = (p - q) * csf[k / 4][k % 4];
        e += v * v;
    }
    Ok(e / 32.0)
}

fn block_grid(w: usize, h: usize, n: usize, what: &str) -> Result<(usize, usize)> {
    if w < n || h < n {
        return Err(Error::TooSmall(format!("{what} needs >= {n}x{n}, got {w}x{h}")));
    }
    if w % n != 0 || h % n != 0 {
        debug!("{what}: dropping partial blocks of {w}x{h} frame");
    }
    Ok((w / n, h / n))
}

pub(super) fn phvs3d_frame(inputs: &FrInputs, t: usize, d_ref: &DisparityMap, cfg: &FrMetricConfig) -> Result<f64> {
    let (r, d) = (&inputs.reference.frames()[t], &inputs.distorted.frames()[t]);
    let (bw, bh) = block_grid(r.left.width(), r.left.height(), 4, "phvs3d")?;
    let s = inputs.s(t);
    let mut acc = WeightedSum::default();
    for by in 0..bh {
        for bx in 0..bw {
            let (x0, y0) = (bx * 4, by * 4);
            let e = block_error_3d(r, d, d_ref, x0, y0, &cfg.csf)?;
            acc.add(e, block_weight(s, x0, y0, 4, 4));
        }
    }
    let mse = acc.mean().ok_or(Error::DegenerateSaliency)?;
    Ok(psnr_from_mse(mse, cfg.psnr_cap))
}

fn block_variance(p: &Plane, x0: usize, y0: usize, n: usize) -> f64 {
    let v = block_vec(p, x0 as isize, y0 as isize, n);
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64
}

pub(super) fn phsd_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let (r, d) = (&inputs.reference.frames()[t], &inputs.distorted.frames()[t]);
    let (bw, bh) = block_grid(r.left.width(), r.left.height(), 4, "phsd")?;
    let s = inputs.s(t);
    let mse_d = pool(&d_ref.values().zip_map(d_dist.values(), |a, b| (a - b) * (a - b)), s)?;
    let mut acc = WeightedSum::default();
    for by in 0..bh {
        for bx in 0..bw {
            let (x0, y0) = (bx * 4, by * 4);
            let e = block_error_3d(r, d, d_ref, x0, y0, &cfg.csf)?;
            let masked = e + cfg.phsd_alpha * block_variance(d_ref.values(), x0, y0, 4);
            let term = if masked > 0.0 { e * e / masked } else { 0.0 };
            acc.add(term, block_weight(s, x0, y0, 4, 4));
        }
    }
    let mse_i = acc.mean().ok_or(Error::DegenerateSaliency)?;
    let eps = cfg.phsd_epsilon;
    Ok(psnr_from_mse((1.0 - eps) * mse_i + eps * mse_d, cfg.psnr_cap))
}

/// Average of the left block and disparity-matched right block in the DCT
/// domain, returned in the pixel domain.
fn combined_block(f: &StereoFrame, d: &DisparityMap, x0: usize, y0: usize, n: usize) -> Result<Vec<f64>> {
    let shift = d.block_shift(x0, y0, n, n);
    let (x, y) = (x0 as isize, y0 as isize);
    let l = dct2(&block_vec(&f.left.luma, x, y, n))?;
    let r = dct2(&block_vec(&f.right.luma, x - shift, y, n))?;
    let xc: Vec<f64> = l.iter().zip(&r).map(|(a, b)| (a + b) / 2.0).collect();
    idct2(&xc)
}

pub(super) fn hv3d_frame(
    inputs: &FrInputs,
    t: usize,
    d_ref: &DisparityMap,
    d_dist: &DisparityMap,
    cfg: &FrMetricConfig,
) -> Result<f64> {
    let (r, d) = (&inputs.reference.frames()[t], &inputs.distorted.frames()[t]);
    let n = cfg.hv3d_block;
    let (bw, bh) = block_grid(r.left.width(), r.left.height(), n, "hv3d")?;
    let s = inputs.s(t);

    let mut term1 = WeightedSum::default();
    let mut variances = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let (x0, y0) = (bx * n, by * n);
            let a = combined_block(r, d_ref, x0, y0, n)?;
            let b = combined_block(d, d_dist, x0, y0, n)?;
            let w = block_weight(s, x0, y0, n, n);
            term1.add(global_ssim(&a, &b, cfg.ssim_c1, cfg.ssim_c2), w);
            variances.push((block_variance(d_ref.values(), x0, y0, n), w));
        }
    }
    let term1 = term1.mean().ok_or(Error::DegenerateSaliency)?;
    let term2 = vif_value(d_ref.values(), d_dist.values(), s, cfg)?;
    let max_var = variances.iter().map(|v| v.0).fold(0.0, f64::max);
    let term3 = if max_var > 0.0 {
        let num: f64 = variances.iter().map(|(v, w)| v * w).sum();
        let den: f64 = variances.iter().map(|(_, w)| w * max_var).sum();
        num / den
    } else {
        1.0
    };
    let [b1, b2, b3] = cfg.hv3d_beta;
    Ok(term1.max(0.0).powf(b1) * term2.max(0.0).powf(b2) * term3.powf(b3))
}
