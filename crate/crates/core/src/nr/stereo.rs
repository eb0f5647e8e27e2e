//! Stereo no-reference metrics: temporal depth stability (QA3D) and the
//! parallax-compensated JPEG score (NOSPDM).

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::par;
use crate::plane::Plane;
use crate::saliency::pool;
use crate::signal::sobel_gradient;

use super::blockiness::qjpeg_frame;
use super::{NrInputs, NrMetricConfig};

/// Scores for frames `p..n` of `1 − (S_m + D_E) / 2`, where `S_m` compares
/// the pooled thresholded disparity with its last `p` values and `D_E` is
/// the pooled inter-view gradient mismatch.
pub fn qa3d_series(
    inputs: &NrInputs,
    disparity: &[DisparityMap],
    cfg: &NrMetricConfig,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = inputs.distorted.len();
    let p = cfg.qa3d_history;
    if n < p + 1 {
        return Err(Error::NeedsTemporalContext {
            metric: "qa3d_s",
            needed: p + 1,
            got: n,
        });
    }
    let tau = cfg.qa3d_threshold;
    let per_frame = par::try_map_range(n, |t| -> Result<(f64, f64)> {
        let s = inputs.s(t);
        let d = disparity[t].values().map(|v| if v < tau { 0.0 } else { v });
        let d_n = pool(&d, s)?;
        let f = &inputs.distorted.frames()[t];
        let gl = sobel_gradient(&f.left.luma)?.magnitude;
        let gr = sobel_gradient(&f.right.luma)?.magnitude;
        let d_e = pool(&gl.zip_map(&gr, |a, b| (a - b).abs() / 255.0), s)?;
        Ok((d_n, d_e))
    })?;
    let frames: Vec<usize> = (p..n).collect();
    let scores = frames
        .iter()
        .map(|&t| {
            let d_n = per_frame[t].0;
            let history: f64 = per_frame[t - p..t].iter().map(|v| v.0).sum();
            let s_m = 0.1 * (history - d_n * p as f64) * d_n;
            1.0 - (s_m + per_frame[t].1) / 2.0
        })
        .collect();
    Ok((frames, scores))
}

/// Angle between two images viewed as vectors; 0 when either is all zero.
fn vector_angle(a: &Plane, b: &Plane) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data()) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0).acos()
}

pub fn nospdm_pair(inputs: &NrInputs, t: usize, cfg: &NrMetricConfig) -> Result<f64> {
    let f = &inputs.distorted.frames()[t];
    let (sl, sr) = (inputs.s(t), inputs.s_right(t));
    let ql = qjpeg_frame(&f.left.luma, sl, cfg)?;
    let qr = qjpeg_frame(&f.right.luma, sr, cfg)?;
    let view_angle = vector_angle(&f.left.luma, &f.right.luma);
    let saliency_angle = match (sl, sr) {
        (Some(a), Some(b)) => vector_angle(a.values(), b.values()),
        _ => 0.0,
    };
    let mu = cfg.nospdm_mu;
    Ok((2.0 - mu) * ql + mu * qr - cfg.nospdm_lambda * ql.max(qr) + view_angle + cfg.nospdm_omega * saliency_angle)
}
