//! Sharpness/smoothness (VQSM) and directional-entropy anisotropy (AQI).

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::saliency::{pool, weight_at, SaliencyMap};
use crate::signal::{box_kernel, convolve2d, local_stats, sobel_gradient};

use super::NrMetricConfig;

/// `(Q_sh, Q_sm)`: pooled gradient magnitude and the 5×5 local deviation
/// pooled with 5×5-averaged saliency.
pub fn vqsm_terms(img: &Plane, s: Option<&SaliencyMap>) -> Result<(f64, f64)> {
    let (w, h) = img.dims();
    if w < 5 || h < 5 {
        return Err(Error::TooSmall(format!("vqsm needs >= 5x5, got {w}x{h}")));
    }
    let q_sh = pool(&sobel_gradient(img)?.magnitude, s)?;
    let win = box_kernel(5)?;
    let sigma = local_stats(img, img, &win)?.var_x.map(f64::sqrt);
    let q_sm = match s {
        None => sigma.mean(),
        Some(s) => {
            let s_bar = convolve2d(s.values(), &win)?;
            let num: f64 = sigma.data().iter().zip(s_bar.data()).map(|(a, b)| a * b).sum();
            num / s_bar.sum()
        }
    };
    Ok((q_sh, q_sm))
}

pub fn vqsm_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    let (sh, sm) = vqsm_terms(img, s)?;
    let [a1, a2, a3, a4, a5] = cfg.vqsm_alpha;
    Ok(a1 * sh * sh + a2 * sh + a3 * sm * sm + a4 * sm + a5)
}

/// Integer sample offsets of a `len`-tap line through the origin at
/// `degrees` (counter-clockwise, image y pointing down).
fn line_offsets(degrees: f64, len: usize) -> Vec<(isize, isize)> {
    let t = degrees.to_radians();
    let (c, s) = (t.cos(), -t.sin());
    let scale = c.abs().max(s.abs());
    let (sx, sy) = (c / scale, s / scale);
    let half = (len as isize - 1) / 2;
    (-half..len as isize - half)
        .map(|k| ((k as f64 * sx).round() as isize, (k as f64 * sy).round() as isize))
        .collect()
}

fn directional_mean(img: &Plane, offsets: &[(isize, isize)]) -> Plane {
    let inv = 1.0 / offsets.len() as f64;
    Plane::from_fn(img.width(), img.height(), |x, y| {
        offsets
            .iter()
            .map(|&(dx, dy)| img.get_clamped(x as isize + dx, y as isize + dy))
            .sum::<f64>()
            * inv
    })
}

/// Shannon entropy in nats of the saliency-weighted histogram of `img`
/// over `[0, 256)`.
fn weighted_entropy(img: &Plane, s: Option<&SaliencyMap>, bins: usize) -> f64 {
    let mut hist = vec![0.0; bins];
    let scale = bins as f64 / 256.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let b = ((img.get(x, y) * scale).floor().max(0.0) as usize).min(bins - 1);
            hist[b] += weight_at(s, x, y);
        }
    }
    let total: f64 = hist.iter().sum();
    hist.iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            -p * p.ln()
        })
        .sum()
}

/// Population standard deviation of the directional entropies.
pub fn aqi_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    let entropies: Vec<f64> = cfg
        .aqi_directions
        .iter()
        .map(|&deg| {
            let filtered = directional_mean(img, &line_offsets(deg, cfg.aqi_length));
            weighted_entropy(&filtered, s, cfg.aqi_bins)
        })
        .collect();
    let n = entropies.len() as f64;
    let mean = entropies.iter().sum::<f64>() / n;
    Ok((entropies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt())
}
