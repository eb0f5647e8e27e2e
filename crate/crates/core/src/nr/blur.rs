//! Blur measures: NRPBM, Marziliano edge width and JNB-pooled Sadaka blur.

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::saliency::{weight_at, SaliencyMap, WeightedSum};
use crate::signal::sobel_gradient;

use super::NrMetricConfig;

/// Running mean over `len` samples along one axis, replicated borders.
fn box_blur_1d(img: &Plane, len: usize, horizontal: bool) -> Plane {
    let anchor = ((len - 1) / 2) as isize;
    let inv = 1.0 / len as f64;
    Plane::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for k in 0..len as isize {
            let off = k - anchor;
            acc += if horizontal {
                img.get_clamped(x as isize + off, y as isize)
            } else {
                img.get_clamped(x as isize, y as isize + off)
            };
        }
        acc * inv
    })
}

/// `Σ V·S / Σ DF·S` along one axis; `None` when the frame has no
/// variation in that direction.
fn kept_variation(img: &Plane, blurred: &Plane, s: Option<&SaliencyMap>, horizontal: bool) -> Option<f64> {
    let (w, h) = img.dims();
    let (mut kept, mut total) = (0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (px, py) = match (horizontal, x, y) {
                (true, 0, _) | (false, _, 0) => continue,
                (true, _, _) => (x - 1, y),
                (false, _, _) => (x, y - 1),
            };
            let df = (img.get(x, y) - img.get(px, py)).abs();
            let db = (blurred.get(x, y) - blurred.get(px, py)).abs();
            let wt = weight_at(s, x, y);
            kept += (df - db).max(0.0) * wt;
            total += df * wt;
        }
    }
    (total > 0.0).then(|| kept / total)
}

/// Re-blur perceptual blur: `1 − max` of the kept-variation ratios.
/// 0 is sharp, values toward 1 are blurrier.
pub fn nrpbm_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall(format!("nrpbm needs >= 2x2, got {w}x{h}")));
    }
    let ver = kept_variation(img, &box_blur_1d(img, cfg.nrpbm_probe, false), s, false);
    let hor = kept_variation(img, &box_blur_1d(img, cfg.nrpbm_probe, true), s, true);
    Ok(match [ver, hor].into_iter().flatten().reduce(f64::max) {
        Some(r) => 1.0 - r,
        None => 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeWidth {
    pub x: usize,
    pub y: usize,
    pub width: f64,
}

/// Edge pixels (Sobel magnitude above `threshold · max`) with the length of
/// the monotone luma run through each, measured along the dominant gradient
/// axis.
pub fn edge_widths(img: &Plane, threshold: f64) -> Result<Vec<EdgeWidth>> {
    let g = sobel_gradient(img)?;
    let peak = g.magnitude.max();
    if !(peak > 0.0) {
        return Err(Error::NoEdges);
    }
    let cut = threshold * peak;
    let (w, h) = img.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if g.magnitude.get(x, y) <= cut {
                continue;
            }
            let (gx, gy) = (g.gx.get(x, y), g.gy.get(x, y));
            let (dx, dy, rising) = if gx.abs() >= gy.abs() { (1, 0, gx > 0.0) } else { (0, 1, gy > 0.0) };
            let at = |k: isize| -> Option<f64> {
                let (xx, yy) = (x as isize + k * dx, y as isize + k * dy);
                (xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h).then(|| img.get(xx as usize, yy as usize))
            };
            let climbs = |a: f64, b: f64| if rising { b > a } else { b < a };
            let mut width = 0usize;
            let mut k = 0isize;
            while let (Some(a), Some(b)) = (at(k), at(k + 1)) {
                if !climbs(a, b) {
                    break;
                }
                width += 1;
                k += 1;
            }
            let mut k = 0isize;
            while let (Some(a), Some(b)) = (at(k - 1), at(k)) {
                if !climbs(a, b) {
                    break;
                }
                width += 1;
                k -= 1;
            }
            out.push(EdgeWidth {
                x,
                y,
                width: width as f64,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoEdges);
    }
    Ok(out)
}

/// Saliency-weighted mean edge width.
pub fn blur_farias_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    let mut acc = WeightedSum::default();
    for e in edge_widths(img, cfg.edge_threshold)? {
        acc.add(e.width, weight_at(s, e.x, e.y));
    }
    acc.mean().ok_or(Error::NoEdges)
}

/// JNB blur pooled over square regions:
/// `(Σ_R D_R · |Σ_R S / Σ S|^β)^(−1/β)`, larger is sharper.
pub fn sadaka_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    let edges = edge_widths(img, cfg.edge_threshold)?;
    let (w, h) = img.dims();
    let r = cfg.sadaka_region;
    let beta = cfg.sadaka_beta;
    let (rx, ry) = (w.div_ceil(r), h.div_ceil(r));

    let mut blur_sum = vec![0.0; rx * ry];
    let mut has_edges = vec![false; rx * ry];
    let mut lo = vec![f64::INFINITY; rx * ry];
    let mut hi = vec![f64::NEG_INFINITY; rx * ry];
    let mut mass = vec![0.0; rx * ry];
    for y in 0..h {
        for x in 0..w {
            let k = (y / r) * rx + x / r;
            let v = img.get(x, y);
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
            mass[k] += weight_at(s, x, y);
        }
    }
    let total_mass: f64 = mass.iter().sum();
    for e in &edges {
        let k = (e.y / r) * rx + e.x / r;
        let jnb = if hi[k] - lo[k] <= cfg.jnb_contrast_split {
            cfg.jnb_width_low_contrast
        } else {
            cfg.jnb_width_high_contrast
        };
        blur_sum[k] += (e.width / jnb).abs().powf(beta);
        has_edges[k] = true;
    }
    let mut pooled = 0.0;
    for k in 0..rx * ry {
        if has_edges[k] {
            let d_r = blur_sum[k].powf(1.0 / beta);
            pooled += d_r * (mass[k] / total_mass).abs().powf(beta);
        }
    }
    if !(pooled > 0.0) {
        return Err(Error::NoEdges);
    }
    Ok(pooled.powf(-1.0 / beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{convolve2d, gaussian_kernel_for_sigma};

    fn cfg() -> NrMetricConfig {
        NrMetricConfig::default()
    }

    fn step(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, _| if x < w / 2 { 40.0 } else { 200.0 })
    }

    fn stripes(w: usize, h: usize, period: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| if (x / period + y / period) % 2 == 0 { 50.0 } else { 200.0 })
    }

    #[test]
    fn ideal_step_has_unit_width() {
        assert_eq!(blur_farias_frame(&step(32, 16), None, &cfg()).unwrap(), 1.0);
    }

    #[test]
    fn blur_widens_edges() {
        let sharp = step(64, 16);
        let soft = convolve2d(&sharp, &gaussian_kernel_for_sigma(2.0).unwrap()).unwrap();
        let a = blur_farias_frame(&sharp, None, &cfg()).unwrap();
        let b = blur_farias_frame(&soft, None, &cfg()).unwrap();
        assert!(b > a, "{b} <= {a}");
    }

    #[test]
    fn flat_frame_has_no_edges() {
        let f = Plane::filled(16, 16, 3.0);
        assert!(matches!(blur_farias_frame(&f, None, &cfg()), Err(Error::NoEdges)));
        assert!(matches!(sadaka_frame(&f, None, &cfg()), Err(Error::NoEdges)));
        assert_eq!(nrpbm_frame(&f, None, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn nrpbm_orders_blur() {
        let sharp = stripes(64, 64, 4);
        let soft = convolve2d(&sharp, &gaussian_kernel_for_sigma(3.0).unwrap()).unwrap();
        let a = nrpbm_frame(&sharp, None, &cfg()).unwrap();
        let b = nrpbm_frame(&soft, None, &cfg()).unwrap();
        assert!(b > a, "{b} <= {a}");
        assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    }

    #[test]
    fn sadaka_single_region_closed_form() {
        let img = step(32, 32);
        let c = cfg();
        let edges = edge_widths(&img, c.edge_threshold).unwrap();
        let d_r = edges
            .iter()
            .map(|e| (e.width / 3.0).powf(3.6))
            .sum::<f64>()
            .powf(1.0 / 3.6);
        let got = sadaka_frame(&img, None, &c).unwrap();
        assert!((got - d_r.powf(-1.0 / 3.6)).abs() < 1e-12);
    }

    #[test]
    fn sadaka_prefers_sharp() {
        let sharp = stripes(128, 128, 16);
        let soft = convolve2d(&sharp, &gaussian_kernel_for_sigma(2.0).unwrap()).unwrap();
        let a = sadaka_frame(&sharp, None, &cfg()).unwrap();
        let b = sadaka_frame(&soft, None, &cfg()).unwrap();
        assert!(a > b, "{a} <= {b}");
    }

    #[test]
    fn uniform_saliency_reduces() {
        let img = convolve2d(&stripes(96, 80, 12), &gaussian_kernel_for_sigma(1.0).unwrap()).unwrap();
        let s = SaliencyMap::custom(Plane::filled(96, 80, 0.3)).unwrap();
        for f in [nrpbm_frame, blur_farias_frame, sadaka_frame] {
            let a = f(&img, None, &cfg()).unwrap();
            let b = f(&img, Some(&s), &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
        }
    }
}
