//! Block-grid artifacts: GBIM, Farias blockiness and the QJPEG score.

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::saliency::{weight_at, SaliencyMap, WeightedSum};
use crate::signal::{box_kernel, local_stats};

use super::{GbimMasking, NrMetricConfig};

fn require(img: &Plane, min: usize, what: &str) -> Result<()> {
    let (w, h) = img.dims();
    if w < min || h < min {
        return Err(Error::TooSmall(format!("{what} needs >= {min}x{min}, got {w}x{h}")));
    }
    Ok(())
}

/// Saliency weight of the pixel pair `(x0, y0)`–`(x1, y1)`.
#[inline]
fn pair_weight(s: Option<&SaliencyMap>, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    match s {
        None => 1.0,
        Some(_) => 0.5 * (weight_at(s, x0, y0) + weight_at(s, x1, y1)),
    }
}

fn luminance_mask(img: &Plane) -> Result<Plane> {
    let st = local_stats(img, img, &box_kernel(3)?)?;
    Ok(st.var_x.map(|v| 1.0 / (1.0 + v.sqrt() / 32.0)))
}

/// `(M_h + M_v) / 2E`: masked step size across the block grid over the
/// mean absolute neighbor difference of the whole frame.
pub fn gbim_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    require(img, 16, "gbim")?;
    let (w, h) = img.dims();
    let b = cfg.gbim_block;
    let mask = match cfg.gbim_masking {
        GbimMasking::Neutral => None,
        GbimMasking::Luminance => Some(luminance_mask(img)?),
    };
    let m = |x: usize, y: usize| mask.as_ref().map_or(1.0, |p| p.get(x, y));

    let mut mh = WeightedSum::default();
    for x in (b..w).step_by(b) {
        for y in 0..h {
            let d = (img.get(x, y) - img.get(x - 1, y)).abs();
            let wm = 0.5 * (m(x - 1, y) + m(x, y));
            mh.add(wm * d, pair_weight(s, x - 1, y, x, y));
        }
    }
    let mut mv = WeightedSum::default();
    for y in (b..h).step_by(b) {
        for x in 0..w {
            let d = (img.get(x, y) - img.get(x, y - 1)).abs();
            let wm = 0.5 * (m(x, y - 1) + m(x, y));
            mv.add(wm * d, pair_weight(s, x, y - 1, x, y));
        }
    }

    let mut e = 0.0;
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                e += (img.get(x + 1, y) - img.get(x, y)).abs();
            }
            if y + 1 < h {
                e += (img.get(x, y + 1) - img.get(x, y)).abs();
            }
        }
    }
    let e = e / ((w - 1) * h + w * (h - 1)) as f64;
    if e == 0.0 {
        return Ok(0.0);
    }
    Ok((mh.mean().unwrap_or(0.0) + mv.mean().unwrap_or(0.0)) / (2.0 * e))
}

/// Boundary and total saliency-weighted difference sums along one axis.
struct AxisSums {
    boundary: f64,
    total: f64,
}

impl AxisSums {
    fn ratio(&self) -> f64 {
        if self.total > 0.0 {
            self.boundary / self.total
        } else {
            0.0
        }
    }
}

fn axis_sums(img: &Plane, s: Option<&SaliencyMap>, b: usize, horizontal: bool) -> AxisSums {
    let (w, h) = img.dims();
    let mut out = AxisSums {
        boundary: 0.0,
        total: 0.0,
    };
    let (nx, ny) = if horizontal { (w - 1, h) } else { (w, h - 1) };
    for y in 0..ny {
        for x in 0..nx {
            let (x1, y1, pos) = if horizontal { (x + 1, y, x) } else { (x, y + 1, y) };
            let d = (img.get(x1, y1) - img.get(x, y)).abs() * pair_weight(s, x, y, x1, y1);
            out.total += d;
            if (pos + 1) % b == 0 {
                out.boundary += d;
            }
        }
    }
    out
}

/// Share of the frame's neighbor differences that falls on block borders,
/// summed over both axes and divided by the pixel count.
pub fn block_farias_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    require(img, 16, "block_farias")?;
    let b = cfg.gbim_block;
    let v = axis_sums(img, s, b, false).ratio();
    let hz = axis_sums(img, s, b, true).ratio();
    Ok((v + hz) / img.len() as f64)
}

/// Boundary step `B`, in-block activity `A` and zero-crossing rate `Z`
/// along one axis, each a saliency-weighted mean.
fn baz(img: &Plane, s: Option<&SaliencyMap>, b: usize, horizontal: bool) -> (f64, f64, f64) {
    let (w, h) = img.dims();
    let at = |i: usize, line: usize| if horizontal { (i, line) } else { (line, i) };
    let (len, lines) = if horizontal { (w, h) } else { (h, w) };
    let mut bs = WeightedSum::default();
    let mut as_ = WeightedSum::default();
    let mut zs = WeightedSum::default();
    for line in 0..lines {
        let diff = |i: usize| {
            let (x0, y0) = at(i, line);
            let (x1, y1) = at(i + 1, line);
            img.get(x1, y1) - img.get(x0, y0)
        };
        for i in 0..len - 1 {
            let (x0, y0) = at(i, line);
            let (x1, y1) = at(i + 1, line);
            let d = diff(i);
            let wt = pair_weight(s, x0, y0, x1, y1);
            if (i + 1) % b == 0 {
                bs.add(d.abs(), wt);
            } else {
                as_.add(d.abs(), wt);
            }
            if i + 2 < len {
                let z = if d * diff(i + 1) < 0.0 { 1.0 } else { 0.0 };
                zs.add(z, weight_at(s, x1, y1));
            }
        }
    }
    (
        bs.mean().unwrap_or(0.0),
        as_.mean().unwrap_or(0.0),
        zs.mean().unwrap_or(0.0),
    )
}

/// `α + β·B^γ1·A^γ2·Z^γ3` with the product taken as 0 when any factor is 0.
pub fn qjpeg_frame(img: &Plane, s: Option<&SaliencyMap>, cfg: &NrMetricConfig) -> Result<f64> {
    require(img, 16, "qjpeg")?;
    let b = cfg.gbim_block;
    let (bh, ah, zh) = baz(img, s, b, true);
    let (bv, av, zv) = baz(img, s, b, false);
    let (bb, aa, zz) = ((bh + bv) / 2.0, (ah + av) / 2.0, (zh + zv) / 2.0);
    let [g1, g2, g3] = cfg.qjpeg_gamma;
    let product = if bb > 0.0 && aa > 0.0 && zz > 0.0 {
        bb.powf(g1) * aa.powf(g2) * zz.powf(g3)
    } else {
        log::debug!("qjpeg: degenerate B={bb} A={aa} Z={zz}, product term set to 0");
        0.0
    };
    Ok(cfg.qjpeg_alpha + cfg.qjpeg_beta * product)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NrMetricConfig {
        NrMetricConfig::default()
    }

    #[test]
    fn flat_frames_score_zero() {
        let f = Plane::filled(32, 32, 77.0);
        assert_eq!(gbim_frame(&f, None, &cfg()).unwrap(), 0.0);
        assert_eq!(block_farias_frame(&f, None, &cfg()).unwrap(), 0.0);
        assert_eq!(qjpeg_frame(&f, None, &cfg()).unwrap(), cfg().qjpeg_alpha);
    }

    #[test]
    fn gbim_hand_sum() {
        // flat 8-wide columns stepping by 16
        let f = Plane::from_fn(32, 32, |x, _| 16.0 * (x / 8) as f64);
        // boundaries: 3 columns × 32 rows of 16; E: 1536 over 992 + 992 pairs
        let want = 16.0 / (2.0 * 1536.0 / 1984.0);
        assert!((gbim_frame(&f, None, &cfg()).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn gbim_weighted_boundaries() {
        let f = Plane::from_fn(32, 32, |x, y| 16.0 * (x / 8) as f64 + if y >= 16 { 8.0 * (x / 8) as f64 } else { 0.0 });
        let s = SaliencyMap::custom(Plane::from_fn(32, 32, |_, y| if y < 16 { 3.0 } else { 1.0 })).unwrap();
        // top rows step 16, bottom rows step 24; row weight 3 : 1
        let mh = (3.0 * 16.0 + 1.0 * 24.0) / 4.0;
        // vertical boundaries: row 8 and row 24 zero; row 16 carries 8·(x/8), weight (3+1)/2
        let mv = {
            let step16: f64 = (0..32).map(|x| 8.0 * (x / 8) as f64).sum::<f64>() * 2.0;
            let w_all = 32.0 * 3.0 + 32.0 * 2.0 + 32.0 * 1.0;
            step16 / w_all
        };
        let mut e = 0.0;
        for y in 0..32 {
            for x in 0..32 {
                if x + 1 < 32 {
                    e += (f.get(x + 1, y) - f.get(x, y)).abs();
                }
                if y + 1 < 32 {
                    e += (f.get(x, y + 1) - f.get(x, y)).abs();
                }
            }
        }
        let e = e / 1984.0;
        let got = gbim_frame(&f, Some(&s), &cfg()).unwrap();
        assert!((got - (mh + mv) / (2.0 * e)).abs() < 1e-9, "{got}");
    }

    #[test]
    fn uniform_saliency_reduces() {
        let f = Plane::from_fn(40, 24, |x, y| ((x * 13 + y * 7) % 41) as f64 * 3.0);
        let s = SaliencyMap::custom(Plane::filled(40, 24, 0.4)).unwrap();
        for func in [gbim_frame, block_farias_frame, qjpeg_frame] {
            let a = func(&f, None, &cfg()).unwrap();
            let b = func(&f, Some(&s), &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn block_farias_all_differences_on_grid() {
        let f = Plane::from_fn(16, 16, |x, y| 10.0 * (x / 8) as f64 + 5.0 * (y / 8) as f64);
        assert!((block_farias_frame(&f, None, &cfg()).unwrap() - 2.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn luminance_masking_changes_only_weights() {
        let f = Plane::from_fn(32, 32, |x, _| 16.0 * (x / 8) as f64);
        let c = NrMetricConfig {
            gbim_masking: GbimMasking::Luminance,
            ..cfg()
        };
        let masked = gbim_frame(&f, None, &c).unwrap();
        let plain = gbim_frame(&f, None, &cfg()).unwrap();
        assert!(masked > 0.0 && masked < plain);
    }
}
