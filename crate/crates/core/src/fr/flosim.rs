//! Temporal flow-feature similarity with spatial and depth dissimilarity.

use crate::disparity::{disparity_to_depth, DisparityMap};
use crate::error::{Error, Result};
use crate::par;
use crate::plane::Plane;
use crate::signal::{sobel_gradient, Gradient};

use super::core::msssim_value;
use super::{FrInputs, FrMetricConfig};

/// `[mean, variance, smallest eigenvalue of the gradient covariance]` of the
/// `p × p` patch at `(x0, y0)`.
pub fn flow_features(image: &Plane, grad: &Gradient, x0: usize, y0: usize, p: usize) -> [f64; 3] {
    let n = (p * p) as f64;
    let (mut s, mut s2, mut jxx, mut jyy, mut jxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for y in y0..y0 + p {
        for x in x0..x0 + p {
            let v = image.get(x, y);
            let (gx, gy) = (grad.gx.get(x, y), grad.gy.get(x, y));
            s += v;
            s2 += v * v;
            jxx += gx * gx;
            jyy += gy * gy;
            jxy += gx * gy;
        }
    }
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let (a, c, b) = (jxx / n, jyy / n, jxy / n);
    let half_diff = (a - c) / 2.0;
    let min_eig = ((a + c) / 2.0 - (half_diff * half_diff + b * b).sqrt()).max(0.0);
    [mean, var, min_eig]
}

/// Mean L1 distance between per-patch feature triplets of two frame
/// differences. Partial patches at the right and bottom are skipped.
pub fn patch_feature_distance(reference: &Plane, distorted: &Plane, p: usize) -> Result<f64> {
    reference.ensure_same_dims(distorted, "flow features")?;
    let (w, h) = reference.dims();
    if w < p.max(3) || h < p.max(3) {
        return Err(Error::TooSmall(format!("{w}x{h} holds no {p}x{p} patch")));
    }
    let gr = sobel_gradient(reference)?;
    let gd = sobel_gradient(distorted)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for py in 0..h / p {
        for px in 0..w / p {
            let a = flow_features(reference, &gr, px * p, py * p, p);
            let b = flow_features(distorted, &gd, px * p, py * p, p);
            total += a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn frame_diff(cur: &Plane, prev: &Plane) -> Plane {
    cur.zip_map(prev, |a, b| a - b)
}

/// Per-frame scores for frames `1..n`; their mean is FLOSIM × Q_d.
pub(super) fn flosim3d(
    inputs: &FrInputs,
    d_ref: &[DisparityMap],
    d_dist: &[DisparityMap],
    cfg: &FrMetricConfig,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = inputs.reference.len();
    if n < 2 {
        return Err(Error::NeedsTemporalContext {
            metric: "flosim3d_s",
            needed: 2,
            got: n,
        });
    }
    let rf = inputs.reference.frames();
    let df = inputs.distorted.frames();
    let parts = par::try_map_range(n - 1, |k| -> Result<(f64, f64)> {
        let i = k + 1;
        let s = inputs.s(i);
        let mut flosim = 0.0;
        for view in 0..2 {
            let (r_cur, r_prev) = (&rf[i].views()[view].luma, &rf[i - 1].views()[view].luma);
            let (d_cur, d_prev) = (&df[i].views()[view].luma, &df[i - 1].views()[view].luma);
            let q_fl = patch_feature_distance(
                &frame_diff(r_cur, r_prev),
                &frame_diff(d_cur, d_prev),
                cfg.flosim_patch,
            )?;
            let q_s = 1.0 - msssim_value(r_cur, d_cur, s, cfg)?;
            flosim += q_s * q_fl / 2.0;
        }
        let depth_ref = disparity_to_depth(&d_ref[i]).map(|v| v * 255.0);
        let depth_dist = disparity_to_depth(&d_dist[i]).map(|v| v * 255.0);
        // one disparity map per pair, so both view depth terms coincide
        let q_d = 1.0 - msssim_value(&depth_ref, &depth_dist, s, cfg)?;
        Ok((flosim, q_d))
    })?;
    let q_d = parts.iter().map(|p| p.1).sum::<f64>() / parts.len() as f64;
    let scores = parts.iter().map(|p| p.0 * q_d).collect();
    Ok(((1..n).collect(), scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SeededRng;

    /// Independent feature computation with explicit Sobel sums.
    fn naive_features(img: &Plane, x0: usize, y0: usize, p: usize) -> [f64; 3] {
        let px = |x: isize, y: isize| img.get_clamped(x, y);
        let mut vals = Vec::new();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for y in y0..y0 + p {
            for x in x0..x0 + p {
                let (x, y) = (x as isize, y as isize);
                let gx = px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)
                    - px(x - 1, y - 1)
                    - 2.0 * px(x - 1, y)
                    - px(x - 1, y + 1);
                let gy = px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)
                    - px(x - 1, y - 1)
                    - 2.0 * px(x, y - 1)
                    - px(x + 1, y - 1);
                a += gx * gx;
                b += gx * gy;
                c += gy * gy;
                vals.push(px(x, y));
            }
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let (a, b, c) = (a / n, b / n, c / n);
        // eigenvalues of [[a, b], [b, c]] from the characteristic polynomial
        let tr = a + c;
        let det = a * c - b * b;
        let lam = (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0;
        [m, v, lam.max(0.0)]
    }

    #[test]
    fn feature_distance_matches_naive_oracle() {
        let mut rng = SeededRng::new(5);
        let base = Plane::from_fn(24, 16, |x, y| ((x * 5 + y * 9) % 31) as f64);
        let noisy = Plane::from_fn(24, 16, |x, y| base.get(x, y) + rng.normal(0.0, 6.0).unwrap());
        let zero = Plane::zeros(24, 16);
        let got = patch_feature_distance(&base, &noisy, 8).unwrap();
        let mut want = 0.0;
        for py in 0..2 {
            for px in 0..3 {
                let a = naive_features(&base, px * 8, py * 8, 8);
                let b = naive_features(&noisy, px * 8, py * 8, 8);
                want += a.iter().zip(&b).map(|(u, v)| (u - v).abs()).sum::<f64>();
            }
        }
        want /= 6.0;
        assert!(got > 0.0);
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
        assert_eq!(patch_feature_distance(&zero, &zero, 8).unwrap(), 0.0);
    }
}
