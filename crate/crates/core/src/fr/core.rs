//! Single-image building blocks: local SSIM, MS-SSIM, pixel-domain VIF.

use log::debug;

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::saliency::{build_saliency_pyramid, pool, SaliencyMap};
use crate::signal::{convolve2d, downsample2, gaussian_kernel, local_stats, Kernel2D};

use super::FrMetricConfig;

pub const PEAK: f64 = 255.0;

/// `10·log10(255²/mse)`, saturating at `cap` for tiny errors.
pub fn psnr_from_mse(mse: f64, cap: f64) -> f64 {
    if mse < PEAK * PEAK * 10f64.powf(-cap / 10.0) {
        cap
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// SSIM window, shrunk to the largest odd size that fits the image.
pub(crate) fn ssim_window(cfg: &FrMetricConfig, w: usize, h: usize) -> Result<Kernel2D> {
    let fit = w.min(h);
    let fit = if fit % 2 == 0 { fit.saturating_sub(1) } else { fit };
    if fit == 0 {
        return Err(Error::TooSmall("empty image".into()));
    }
    let size = cfg.ssim_window.min(fit);
    if size < cfg.ssim_window {
        debug!("ssim window shrunk to {size} for {w}x{h} image");
    }
    gaussian_kernel(size, cfg.ssim_sigma)
}

pub struct SsimMaps {
    pub luminance: Plane,
    pub contrast_structure: Plane,
    pub ssim: Plane,
}

pub fn ssim_maps(x: &Plane, y: &Plane, cfg: &FrMetricConfig) -> Result<SsimMaps> {
    x.ensure_same_dims(y, "ssim")?;
    let window = ssim_window(cfg, x.width(), x.height())?;
    ssim_maps_with(x, y, &window, cfg.ssim_c1, cfg.ssim_c2)
}

pub(crate) fn ssim_maps_with(x: &Plane, y: &Plane, window: &Kernel2D, c1: f64, c2: f64) -> Result<SsimMaps> {
    let st = local_stats(x, y, window)?;
    let n = x.len();
    let mut lum = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    let mut ssim = Vec::with_capacity(n);
    for i in 0..n {
        let (mx, my) = (st.mu_x.data()[i], st.mu_y.data()[i]);
        let l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        let c = (2.0 * st.cov_xy.data()[i] + c2) / (st.var_x.data()[i] + st.var_y.data()[i] + c2);
        lum.push(l);
        cs.push(c);
        ssim.push(l * c);
    }
    let (w, h) = x.dims();
    Ok(SsimMaps {
        luminance: Plane::from_vec(w, h, lum)?,
        contrast_structure: Plane::from_vec(w, h, cs)?,
        ssim: Plane::from_vec(w, h, ssim)?,
    })
}

/// Pooled SSIM of one image pair.
pub fn ssim_value(x: &Plane, y: &Plane, s: Option<&SaliencyMap>, cfg: &FrMetricConfig) -> Result<f64> {
    pool(&ssim_maps(x, y, cfg)?.ssim, s)
}

/// SSIM of two blocks treated as single windows (uniform weights).
pub fn global_ssim(x: &[f64], y: &[f64], c1: f64, c2: f64) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    vx /= n;
    vy /= n;
    cxy /= n;
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Number of MS-SSIM scales whose images still hold a full window.
pub(crate) fn msssim_scales(cfg: &FrMetricConfig, w: usize, h: usize) -> usize {
    let mut m = 0;
    let mut side = w.min(h);
    while m < cfg.msssim_weights.len() && side >= cfg.ssim_window {
        m += 1;
        side /= 2;
    }
    m
}

/// Multi-scale SSIM with per-scale saliency pooling.
pub fn msssim_value(x: &Plane, y: &Plane, s: Option<&SaliencyMap>, cfg: &FrMetricConfig) -> Result<f64> {
    x.ensure_same_dims(y, "ms-ssim")?;
    let (w, h) = x.dims();
    let m = msssim_scales(cfg, w, h);
    if m < 2 {
        return Err(Error::TooSmall(format!("{w}x{h} supports fewer than two MS-SSIM scales")));
    }
    if m < cfg.msssim_weights.len() {
        debug!("ms-ssim reduced to {m} scales for {w}x{h}");
    }
    let raw = &cfg.msssim_weights[..m];
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|v| v / total).collect();

    let dims: Vec<(usize, usize)> = (0..m).map(|k| (w >> k, h >> k)).collect();
    let s_pyr = s.map(|s| build_saliency_pyramid(s, &dims)).transpose()?;
    let window = gaussian_kernel(cfg.ssim_window, cfg.ssim_sigma)?;

    let (mut xs, mut ys) = (x.clone(), y.clone());
    let mut product = 1.0;
    for k in 0..m {
        if k > 0 {
            xs = downsample2(&xs)?;
            ys = downsample2(&ys)?;
        }
        let maps = ssim_maps_with(&xs, &ys, &window, cfg.ssim_c1, cfg.ssim_c2)?;
        let sk = s_pyr.as_ref().map(|p| p.level(k));
        let cs = pool(&maps.contrast_structure, sk)?.max(0.0);
        product *= cs.powf(weights[k]);
        if k == m - 1 {
            let lum = pool(&maps.luminance, sk)?.max(0.0);
            product *= lum.powf(weights[k]);
        }
    }
    Ok(product)
}

const VIF_EPS: f64 = 1e-10;

/// Pixel-domain VIF over `cfg.vif_scales` scales with saliency weights
/// inside both information sums.
pub fn vif_value(x: &Plane, y: &Plane, s: Option<&SaliencyMap>, cfg: &FrMetricConfig) -> Result<f64> {
    x.ensure_same_dims(y, "vif")?;
    let (w, h) = x.dims();
    if w < 32 || h < 32 {
        return Err(Error::TooSmall(format!("vif needs >= 32x32, got {w}x{h}")));
    }
    let scales = cfg.vif_scales;
    let dims: Vec<(usize, usize)> = (0..scales).map(|k| (w >> k, h >> k)).collect();
    let s_pyr = s.map(|s| build_saliency_pyramid(s, &dims)).transpose()?;
    let sigma_n = cfg.vif_noise_var;

    let (mut xs, mut ys) = (x.clone(), y.clone());
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..scales {
        let n = (1usize << (scales - k)) + 1;
        let win = gaussian_kernel(n, n as f64 / 5.0)?;
        if k > 0 {
            xs = decimate(&convolve2d(&xs, &win)?);
            ys = decimate(&convolve2d(&ys, &win)?);
        }
        let st = local_stats(&xs, &ys, &win)?;
        let weights = s_pyr.as_ref().map(|p| p.level(k).values());
        for i in 0..xs.len() {
            // moments below the floor are rounding residue of flat windows
            let sx = floor_eps(st.var_x.data()[i]);
            let sy = floor_eps(st.var_y.data()[i]);
            let sxy = st.cov_xy.data()[i];
            let (mut g, mut sv) = if sx == 0.0 {
                (0.0, sy)
            } else {
                let g = sxy / sx;
                (g, sy - g * sxy)
            };
            if sy == 0.0 {
                g = 0.0;
                sv = 0.0;
            }
            if g < 0.0 {
                sv = sy;
                g = 0.0;
            }
            let sv = sv.max(0.0);
            let wgt = weights.map_or(1.0, |p| p.data()[i]);
            num += wgt * (1.0 + g * g * sx / (sv + sigma_n)).log10();
            den += wgt * (1.0 + sx / sigma_n).log10();
        }
    }
    if den <= 0.0 {
        return Ok(1.0);
    }
    Ok(num / den)
}

#[inline]
fn floor_eps(v: f64) -> f64 {
    if v < VIF_EPS {
        0.0
    } else {
        v
    }
}

fn decimate(p: &Plane) -> Plane {
    Plane::from_fn(p.width() / 2, p.height() / 2, |x, y| p.get(2 * x, 2 * y))
}
