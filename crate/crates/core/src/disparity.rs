//! Block-matching disparity, relative depth and the depth-bracket statistic.
//!
//! Convention: a value `d` at `(x, y)` pairs `left(x, y)` with
//! `right(x - d, y)`. Larger disparity means nearer to the camera.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{load_map_series, save_map_series, MapSeriesShape, StereoFrame, StereoSequence};
use crate::par;
use crate::plane::Plane;
use crate::saliency::SaliencyMap;
use crate::signal::median3x3;

#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    values: Plane,
}

impl DisparityMap {
    pub fn new(values: Plane) -> Result<Self> {
        if !values.all_finite() {
            return Err(Error::Numeric("disparity contains NaN or infinity".into()));
        }
        Ok(DisparityMap { values })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        DisparityMap {
            values: Plane::zeros(width, height),
        }
    }

    #[inline]
    pub fn values(&self) -> &Plane {
        &self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    /// Mean disparity over a rectangle, rounded to whole pixels.
    pub(crate) fn block_shift(&self, x0: usize, y0: usize, w: usize, h: usize) -> isize {
        let mut acc = 0.0;
        for y in y0..y0 + h {
            acc += self.values.row(y)[x0..x0 + w].iter().sum::<f64>();
        }
        (acc / (w * h) as f64).round() as isize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisparityConfig {
    pub block: usize,
    pub search_range: usize,
}

impl Default for DisparityConfig {
    fn default() -> Self {
        DisparityConfig {
            block: 8,
            search_range: 32,
        }
    }
}

/// SAD block matching on luma, left view as anchor, followed by a 3×3 median.
///
/// Candidates run over `0..=search_range`; a candidate that would read left
/// of column 0 is skipped. Ties go to the smaller disparity.
pub fn estimate_disparity(pair: &StereoFrame, cfg: &DisparityConfig) -> Result<DisparityMap> {
    if cfg.block < 4 || cfg.search_range < 1 {
        return Err(Error::Param("disparity needs block >= 4 and search_range >= 1".into()));
    }
    let left = &pair.left.luma;
    let right = &pair.right.luma;
    let (w, h) = left.dims();
    if w < cfg.search_range + cfg.block || h < cfg.block {
        return Err(Error::Param(format!(
            "{w}x{h} frame too small for block {} and search range {}",
            cfg.block, cfg.search_range
        )));
    }
    let mut raw = Plane::zeros(w, h);
    for by in (0..h).step_by(cfg.block) {
        let bh = cfg.block.min(h - by);
        for bx in (0..w).step_by(cfg.block) {
            let bw = cfg.block.min(w - bx);
            let mut best = (f64::INFINITY, 0usize);
            for d in 0..=cfg.search_range.min(bx) {
                let mut sad = 0.0;
                for y in by..by + bh {
                    let lrow = &left.row(y)[bx..bx + bw];
                    let rrow = &right.row(y)[bx - d..bx - d + bw];
                    sad += lrow.iter().zip(rrow).map(|(a, b)| (a - b).abs()).sum::<f64>();
                }
                if sad < best.0 {
                    best = (sad, d);
                }
            }
            for y in by..by + bh {
                for x in bx..bx + bw {
                    raw.set(x, y, best.1 as f64);
                }
            }
        }
    }
    DisparityMap::new(median3x3(&raw))
}

pub fn estimate_sequence(seq: &StereoSequence, cfg: &DisparityConfig) -> Result<Vec<DisparityMap>> {
    par::try_map_range(seq.len(), |t| estimate_disparity(&seq.frames()[t], cfg))
}

/// External disparity maps: PGM sample `v ∈ [0, 1]` becomes `v · search_range` pixels.
pub fn load_disparity_series(dir: &Path, seq: &StereoSequence, search_range: usize) -> Result<Vec<DisparityMap>> {
    let maps = load_map_series(
        dir,
        MapSeriesShape {
            width: seq.width(),
            height: seq.height(),
            count: seq.len(),
        },
    )?;
    let scale = search_range as f64;
    maps.iter().map(|m| DisparityMap::new(m.map(|v| v * scale))).collect()
}

pub fn save_disparity_series(maps: &[DisparityMap], dir: &Path, search_range: usize) -> Result<()> {
    let scale = search_range as f64;
    let planes: Vec<Plane> = maps
        .iter()
        .map(|d| d.values().map(|v| (v / scale).clamp(0.0, 1.0)))
        .collect();
    save_map_series(&planes, dir)
}

/// Relative depth `1 − minmax(D)`: nearest is 0, farthest 1. Flat maps give 0.5.
pub fn disparity_to_depth(d: &DisparityMap) -> Plane {
    let v = d.values();
    let (lo, hi) = (v.min(), v.max());
    if !(hi > lo) {
        return Plane::filled(v.width(), v.height(), 0.5);
    }
    v.map(|x| 1.0 - (x - lo) / (hi - lo))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthBracket {
    pub near: f64,
    pub far: f64,
    pub bracket: f64,
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 100]`.
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Spread of relative depth over the visually important pixels: those whose
/// saliency exceeds the frame's 75th saliency percentile. Returns the
/// `p`-th and `(100−p)`-th depth percentiles pooled over all frames.
pub fn depth_bracket(disparity: &[DisparityMap], saliency: &[SaliencyMap], p: f64) -> Result<DepthBracket> {
    if disparity.len() != saliency.len() || disparity.is_empty() {
        return Err(Error::SequenceLength {
            left: disparity.len(),
            right: saliency.len(),
        });
    }
    if !(0.0..=50.0).contains(&p) {
        return Err(Error::Param(format!("percentile {p} outside [0, 50]")));
    }
    let mut selected = Vec::new();
    let mut all = Vec::new();
    for (d, s) in disparity.iter().zip(saliency) {
        d.values().ensure_same_dims(s.values(), "disparity vs saliency")?;
        let depth = disparity_to_depth(d);
        let mut sv = s.values().data().to_vec();
        sv.sort_by(f64::total_cmp);
        let cut = percentile_sorted(&sv, 75.0);
        for (&z, &w) in depth.data().iter().zip(s.values().data()) {
            if w > cut {
                selected.push(z);
            }
            all.push(z);
        }
    }
    let mut pool = if selected.is_empty() { all } else { selected };
    pool.sort_by(f64::total_cmp);
    let near = percentile_sorted(&pool, p);
    let far = percentile_sorted(&pool, 100.0 - p);
    Ok(DepthBracket {
        near,
        far,
        bracket: (far - near).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Frame;
    use crate::signal::SeededRng;

    fn textured(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = SeededRng::new(seed);
        Plane::from_fn(w, h, |_, _| (rng.next_f64() * 255.0).floor())
    }

    fn pair(left: Plane, right: Plane) -> StereoFrame {
        StereoFrame::new(Frame::gray(left), Frame::gray(right), 0).unwrap()
    }

    #[test]
    fn identical_views_give_zero() {
        let img = textured(64, 32, 1);
        let d = estimate_disparity(&pair(img.clone(), img), &DisparityConfig::default()).unwrap();
        assert!(d.values().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constructed_shift_is_recovered() {
        let left = textured(80, 40, 2);
        // right(x) = left(x + 4), so left(x) matches right(x − 4)
        let right = Plane::from_fn(80, 40, |x, y| left.get_clamped(x as isize + 4, y as isize));
        let d = estimate_disparity(&pair(left, right), &DisparityConfig::default()).unwrap();
        for y in 8..32 {
            for x in 16..72 {
                assert_eq!(d.values().get(x, y), 4.0, "({x},{y})");
            }
        }
    }

    #[test]
    fn flat_ties_pick_smallest() {
        let left = Plane::filled(48, 16, 50.0);
        let right = Plane::filled(48, 16, 50.0);
        let cfg = DisparityConfig {
            block: 8,
            search_range: 3,
        };
        let d = estimate_disparity(&pair(left, right), &cfg).unwrap();
        assert!(d.values().data().iter().all(|&v| v == 0.0));

        // a pattern periodic with period 1 between d=2 and d=3: both SADs equal
        let stripes = Plane::from_fn(48, 16, |x, _| if x % 2 == 0 { 0.0 } else { 10.0 });
        let right = Plane::from_fn(48, 16, |x, y| stripes.get_clamped(x as isize + 2, y as isize) + 5.0);
        let d = estimate_disparity(&pair(stripes, right), &cfg).unwrap();
        // d=0 and d=2 tie at the lowest cost; 0 wins
        assert_eq!(d.values().get(24, 8), 0.0);
    }

    #[test]
    fn too_narrow_for_search() {
        let img = Plane::zeros(30, 30);
        assert!(matches!(
            estimate_disparity(&pair(img.clone(), img), &DisparityConfig::default()),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn depth_conversion() {
        let flat = DisparityMap::new(Plane::filled(3, 3, 7.0)).unwrap();
        assert!(disparity_to_depth(&flat).data().iter().all(|&v| v == 0.5));

        let two = DisparityMap::new(Plane::from_rows(&[[0.0, 10.0]]).unwrap()).unwrap();
        assert_eq!(disparity_to_depth(&two).data(), &[1.0, 0.0]);

        let three = DisparityMap::new(Plane::from_rows(&[[0.0, 5.0, 10.0]]).unwrap()).unwrap();
        assert_eq!(disparity_to_depth(&three).data(), &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn bracket_cases() {
        let d = DisparityMap::new(Plane::filled(8, 8, 3.0)).unwrap();
        let s = SaliencyMap::uniform(8, 8);
        let b = depth_bracket(&[d], &[s], 5.0).unwrap();
        assert_eq!(b.bracket, 0.0);

        // near plane (d=20) in the top-left 3x3 corner, far plane elsewhere
        let d = DisparityMap::new(Plane::from_fn(8, 8, |x, y| if x < 3 && y < 3 { 20.0 } else { 2.0 })).unwrap();
        let s = SaliencyMap::custom(Plane::from_fn(8, 8, |x, y| if x < 3 && y < 3 { 1.0 } else { 0.05 })).unwrap();
        let b = depth_bracket(std::slice::from_ref(&d), std::slice::from_ref(&s), 5.0).unwrap();
        assert_eq!(b.bracket, 0.0);
        assert_eq!(b.near, 0.0);

        // invariant to positive scaling of S
        let b2 = depth_bracket(&[d], &[s.scaled(7.0).unwrap()], 5.0).unwrap();
        assert_eq!(b, b2);
    }

    #[test]
    fn pgm_disparity_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let maps = vec![DisparityMap::new(Plane::from_fn(8, 8, |x, _| x as f64 * 4.0)).unwrap()];
        save_disparity_series(&maps, dir.path(), 32).unwrap();
        let seq = StereoSequence::from_luma_pairs("t", 25.0, [(Plane::zeros(8, 8), Plane::zeros(8, 8))]).unwrap();
        let back = load_disparity_series(dir.path(), &seq, 32).unwrap();
        for (a, b) in back[0].values().data().iter().zip(maps[0].values().data()) {
            assert!((a - b).abs() <= 0.5 * 32.0 / 255.0 + 1e-12);
        }
    }
}
