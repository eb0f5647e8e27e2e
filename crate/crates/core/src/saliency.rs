//! Saliency maps and the weighted pooling operator shared by every metric.
//!
//! Pooling is a weighted mean, `Σ f·S / Σ S`. With a constant map it is
//! exactly the plain mean, which is what makes every saliency-weighted
//! metric collapse to its base form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::media::{load_map_series, MapSeriesShape, StereoSequence};
use crate::par;
use crate::plane::Plane;
use crate::signal::{convolve2d, downsample2, gaussian_kernel, pyramid, upsample_bilinear};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencySource {
    Baseline,
    External,
    Uniform,
    Custom,
}

/// Non-negative per-pixel attention weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    values: Plane,
    source: SaliencySource,
}

impl SaliencyMap {
    pub fn new(values: Plane, source: SaliencySource) -> Result<Self> {
        if let Some(bad) = values.data().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numeric(format!("saliency sample {bad}")));
        }
        if !(values.sum() > 0.0) {
            return Err(Error::DegenerateSaliency);
        }
        Ok(SaliencyMap { values, source })
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        SaliencyMap {
            values: Plane::filled(width, height, 1.0),
            source: SaliencySource::Uniform,
        }
    }

    /// Map from raw values without the positivity check; for tests and fixtures.
    pub fn custom(values: Plane) -> Result<Self> {
        SaliencyMap::new(values, SaliencySource::Custom)
    }

    #[inline]
    pub fn values(&self) -> &Plane {
        &self.values
    }

    pub fn source(&self) -> SaliencySource {
        self.source
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    /// Multiplies every weight by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        SaliencyMap::new(self.values.map(|v| v * k), self.source)
    }
}

/// `Σ f·S / Σ S`.
pub fn weighted_spatial_mean(f: &Plane, s: &SaliencyMap) -> Result<f64> {
    weighted_mean(f, s.values())
}

pub(crate) fn weighted_mean(f: &Plane, w: &Plane) -> Result<f64> {
    f.ensure_same_dims(w, "weighted mean")?;
    let (num, den) = f
        .data()
        .iter()
        .zip(w.data())
        .fold((0.0, 0.0), |(n, d), (&v, &s)| (n + v * s, d + s));
    if !(den > 0.0) {
        return Err(Error::DegenerateSaliency);
    }
    Ok(num / den)
}

/// Spatial pooling: weighted mean under `s`, plain mean without a map.
pub fn pool(f: &Plane, s: Option<&SaliencyMap>) -> Result<f64> {
    match s {
        Some(s) => weighted_spatial_mean(f, s),
        None => Ok(f.mean()),
    }
}

/// Report label for a saliency series: `none` or the source of its maps.
pub fn mode_label(s: Option<&[SaliencyMap]>) -> String {
    match s.and_then(|s| s.first()) {
        None => "none".into(),
        Some(m) => match m.source {
            SaliencySource::Baseline => "baseline",
            SaliencySource::External => "external",
            SaliencySource::Uniform => "uniform",
            SaliencySource::Custom => "custom",
        }
        .into(),
    }
}

/// Running `Σ v·w` and `Σ w` for pooling over irregular sample sets
/// (block boundaries, edge pixels, blocks).
#[derive(Clone, Copy, Debug, Default)]
pub struct WeightedSum {
    pub num: f64,
    pub den: f64,
}

impl WeightedSum {
    #[inline]
    pub fn add(&mut self, value: f64, weight: f64) {
        self.num += value * weight;
        self.den += weight;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.den > 0.0).then(|| self.num / self.den)
    }
}

/// Weight of pixel `(x, y)`: the saliency value, or 1 without a map.
#[inline]
pub(crate) fn weight_at(s: Option<&SaliencyMap>, x: usize, y: usize) -> f64 {
    s.map_or(1.0, |s| s.values.get(x, y))
}

/// Mean weight over the rectangle `[x0, x0+w) × [y0, y0+h)`.
pub(crate) fn block_weight(s: Option<&SaliencyMap>, x0: usize, y0: usize, w: usize, h: usize) -> f64 {
    match s {
        None => 1.0,
        Some(s) => {
            let mut acc = 0.0;
            for y in y0..y0 + h {
                acc += s.values.row(y)[x0..x0 + w].iter().sum::<f64>();
            }
            acc / (w * h) as f64
        }
    }
}

/// Min-max normalization to `[0, 1]`; a flat input becomes all ones.
pub fn normalize_map(raw: &Plane) -> Result<SaliencyMap> {
    if !raw.all_finite() {
        return Err(Error::Numeric("saliency input contains NaN or infinity".into()));
    }
    let (lo, hi) = (raw.min(), raw.max());
    let values = if hi - lo < 1e-12 {
        Plane::filled(raw.width(), raw.height(), 1.0)
    } else {
        raw.map(|v| (v - lo) / (hi - lo))
    };
    Ok(SaliencyMap {
        values,
        source: SaliencySource::Custom,
    })
}

fn normalize_with_source(raw: &Plane, source: SaliencySource) -> Result<SaliencyMap> {
    let mut s = normalize_map(raw)?;
    s.source = source;
    Ok(s)
}

/// Per-scale saliency aligned with an image pyramid.
#[derive(Clone, Debug)]
pub struct SaliencyPyramid {
    pub levels: Vec<SaliencyMap>,
}

impl SaliencyPyramid {
    pub fn level(&self, m: usize) -> &SaliencyMap {
        &self.levels[m]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Level `m` is `s` halved `m` times, renormalized to `[0, 1]`.
pub fn build_saliency_pyramid(s: &SaliencyMap, target_dims: &[(usize, usize)]) -> Result<SaliencyPyramid> {
    let Some(&first) = target_dims.first() else {
        return Err(Error::PyramidMismatch("no levels requested".into()));
    };
    if first != s.dims() {
        return Err(Error::PyramidMismatch(format!(
            "level 0 is {:?}, map is {:?}",
            first,
            s.dims()
        )));
    }
    for pair in target_dims.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b != (a.0 / 2, a.1 / 2) {
            return Err(Error::PyramidMismatch(format!("{a:?} does not halve to {b:?}")));
        }
    }
    let mut levels = Vec::with_capacity(target_dims.len());
    let mut current = s.values.clone();
    for m in 0..target_dims.len() {
        if m > 0 {
            current = downsample2(&current)?;
        }
        levels.push(normalize_with_source(&current, s.source)?);
    }
    Ok(SaliencyPyramid { levels })
}

/// Channel weights and filter settings of the baseline attention model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VamConfig {
    pub w_intensity: f64,
    pub w_color: f64,
    pub w_motion: f64,
    pub w_depth: f64,
    pub motion_sigma: f64,
    /// `None` uses `min(width, height) / 32`.
    pub smoothing_sigma: Option<f64>,
    pub center_surround: Vec<(usize, usize)>,
}

impl Default for VamConfig {
    fn default() -> Self {
        VamConfig {
            w_intensity: 0.25,
            w_color: 0.25,
            w_motion: 0.25,
            w_depth: 0.25,
            motion_sigma: 2.0,
            smoothing_sigma: None,
            center_surround: vec![(2, 5), (3, 6)],
        }
    }
}

impl VamConfig {
    fn validate(&self) -> Result<()> {
        let w = [self.w_intensity, self.w_color, self.w_motion, self.w_depth];
        if w.iter().any(|v| !(*v >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
            return Err(Error::Param("VAM weights must be >= 0 with a positive sum".into()));
        }
        if !(self.motion_sigma > 0.0) {
            return Err(Error::Param("motion sigma must be > 0".into()));
        }
        Ok(())
    }
}

/// Gaussian blur whose support is clipped to fit the image.
pub(crate) fn gaussian_blur_fit(image: &Plane, sigma: f64) -> Result<Plane> {
    let limit = image.width().min(image.height());
    let limit = if limit % 2 == 0 { limit - 1 } else { limit };
    let size = (2 * (3.0 * sigma).ceil() as usize + 1).min(limit.max(1));
    convolve2d(image, &gaussian_kernel(size, sigma)?)
}

/// Min-max normalization where a flat channel contributes nothing.
fn channel_norm(f: &Plane) -> Plane {
    let (lo, hi) = (f.min(), f.max());
    if hi - lo < 1e-12 {
        Plane::zeros(f.width(), f.height())
    } else {
        f.map(|v| (v - lo) / (hi - lo))
    }
}

/// Sum of across-scale differences `|P_c − P_s|` at full resolution.
fn center_surround(plane: &Plane, pairs: &[(usize, usize)], out_w: usize, out_h: usize) -> Result<Plane> {
    let deepest = pairs.iter().map(|&(_, s)| s).max().unwrap_or(0);
    let mut levels = 1;
    let (mut w, mut h) = plane.dims();
    while levels <= deepest && w >= 2 && h >= 2 {
        levels += 1;
        w /= 2;
        h /= 2;
    }
    let pyr = pyramid(plane, levels)?;
    let mut acc = Plane::zeros(out_w, out_h);
    for &(c, s) in pairs {
        if s >= pyr.len() || c >= s {
            continue;
        }
        let center = &pyr[c];
        let surround = upsample_bilinear(&pyr[s], center.width(), center.height());
        let diff = center.zip_map(&surround, |a, b| (a - b).abs());
        let full = upsample_bilinear(&diff, out_w, out_h);
        acc = acc.zip_map(&full, |a, b| a + b);
    }
    Ok(acc)
}

/// Fixed-weight fusion of intensity, color-opponency, motion and depth
/// conspicuity. Maps are computed on the left view and shared by both views.
pub fn baseline_vam(
    seq: &StereoSequence,
    disparity: Option<&[DisparityMap]>,
    cfg: &VamConfig,
) -> Result<Vec<SaliencyMap>> {
    cfg.validate()?;
    if let Some(d) = disparity {
        if d.len() != seq.len() {
            return Err(Error::SequenceLength {
                left: seq.len(),
                right: d.len(),
            });
        }
    }
    let (w, h) = seq.dims();
    let smoothing = cfg
        .smoothing_sigma
        .unwrap_or(w.min(h) as f64 / 32.0);
    par::try_map_range(seq.len(), |t| {
        let frame = &seq.frames()[t].left;
        let intensity = center_surround(&frame.luma, &cfg.center_surround, w, h)?;
        let color = match &frame.chroma {
            Some((u, v)) => {
                let fu = center_surround(&u.map(|s| s - 128.0), &cfg.center_surround, w, h)?;
                let fv = center_surround(&v.map(|s| s - 128.0), &cfg.center_surround, w, h)?;
                fu.zip_map(&fv, |a, b| a + b)
            }
            None => Plane::zeros(w, h),
        };
        let motion = if t == 0 {
            Plane::zeros(w, h)
        } else {
            let prev = &seq.frames()[t - 1].left.luma;
            let diff = frame.luma.zip_map(prev, |a, b| (a - b).abs());
            gaussian_blur_fit(&diff, cfg.motion_sigma)?
        };
        let depth = match disparity {
            Some(d) => {
                d[t].values().ensure_same_dims(&frame.luma, "disparity vs frame")?;
                d[t].values().clone()
            }
            None => Plane::zeros(w, h),
        };
        let w_depth = if disparity.is_some() { cfg.w_depth } else { 0.0 };

        let channels = [
            (cfg.w_intensity, channel_norm(&intensity)),
            (cfg.w_color, channel_norm(&color)),
            (cfg.w_motion, channel_norm(&motion)),
            (w_depth, channel_norm(&depth)),
        ];
        let mut fused = Plane::zeros(w, h);
        for (weight, ch) in &channels {
            if *weight > 0.0 {
                fused = fused.zip_map(ch, |a, b| a + weight * b);
            }
        }
        let s = normalize_map(&fused)?;
        let smooth = if smoothing > 0.0 {
            gaussian_blur_fit(s.values(), smoothing)?
        } else {
            s.values().clone()
        };
        SaliencyMap::new(smooth, SaliencySource::Baseline)
    })
}

/// Loads a PGM map series matching `seq` and normalizes each map.
pub fn load_external_saliency(dir: &Path, seq: &StereoSequence) -> Result<Vec<SaliencyMap>> {
    let maps = load_map_series(
        dir,
        MapSeriesShape {
            width: seq.width(),
            height: seq.height(),
            count: seq.len(),
        },
    )?;
    maps.iter()
        .map(|m| normalize_with_source(m, SaliencySource::External))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{save_frame_pgm, map_file_name};

    fn plane(rows: &[&[f64]]) -> Plane {
        Plane::from_rows(rows).unwrap()
    }

    #[test]
    fn constant_weight_gives_plain_mean() {
        let f = Plane::from_fn(7, 5, |x, y| (x * x + 3 * y) as f64);
        let s = SaliencyMap::custom(Plane::filled(7, 5, 0.7)).unwrap();
        let got = weighted_spatial_mean(&f, &s).unwrap();
        assert!((got - f.mean()).abs() <= 1e-12 * f.mean().abs());
    }

    #[test]
    fn hand_weighted_sum() {
        let f = plane(&[&[100.0, 0.0], &[0.0, 0.0]]);
        let s = SaliencyMap::custom(plane(&[&[3.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(weighted_spatial_mean(&f, &s).unwrap(), 50.0);
    }

    #[test]
    fn constant_values_any_weights() {
        let f = Plane::filled(4, 4, 12.5);
        let s = SaliencyMap::custom(Plane::from_fn(4, 4, |x, y| (x + 2 * y + 1) as f64)).unwrap();
        assert!((weighted_spatial_mean(&f, &s).unwrap() - 12.5).abs() < 1e-12);
    }

    #[test]
    fn pooling_errors() {
        let f = Plane::zeros(2, 2);
        assert!(matches!(
            weighted_mean(&f, &Plane::zeros(2, 2)),
            Err(Error::DegenerateSaliency)
        ));
        assert!(matches!(
            weighted_mean(&f, &Plane::filled(3, 2, 1.0)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(SaliencyMap::custom(Plane::zeros(2, 2)).is_err());
        assert!(SaliencyMap::custom(Plane::filled(2, 2, -1.0)).is_err());
    }

    #[test]
    fn normalization_cases() {
        let s = normalize_map(&plane(&[&[2.0, 4.0], &[6.0, 8.0]])).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in s.values().data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let flat = normalize_map(&Plane::filled(3, 3, 4.0)).unwrap();
        assert!(flat.values().data().iter().all(|&v| v == 1.0));
        let unit = plane(&[&[0.0, 0.3], &[1.0, 0.6]]);
        assert_eq!(normalize_map(&unit).unwrap().values(), &unit);
        assert!(matches!(
            normalize_map(&plane(&[&[f64::NAN, 1.0]])),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn pyramid_shapes_and_uniformity() {
        let s = SaliencyMap::uniform(16, 16);
        let p = build_saliency_pyramid(&s, &[(16, 16), (8, 8), (4, 4)]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.level(2).dims(), (4, 4));
        for l in &p.levels {
            assert!(l.values().data().iter().all(|&v| v == 1.0));
        }
        assert!(matches!(
            build_saliency_pyramid(&s, &[(16, 16), (7, 8)]),
            Err(Error::PyramidMismatch(_))
        ));
    }

    #[test]
    fn pyramid_level_one_matches_filter_and_decimate() {
        let raw = Plane::from_fn(8, 8, |x, y| if x < 4 && y < 4 { 1.0 } else { 0.1 });
        let s = SaliencyMap::custom(raw.clone()).unwrap();
        let p = build_saliency_pyramid(&s, &[(8, 8), (4, 4)]).unwrap();
        // independent binomial filter + decimation, then min-max
        let b = [1.0, 4.0, 6.0, 4.0, 1.0];
        let lvl = Plane::from_fn(4, 4, |x, y| {
            let mut acc = 0.0;
            for j in 0..5 {
                for i in 0..5 {
                    acc += b[i] * b[j] / 256.0
                        * raw.get_clamped(2 * x as isize + i as isize - 2, 2 * y as isize + j as isize - 2);
                }
            }
            acc
        });
        let (lo, hi) = (lvl.min(), lvl.max());
        for (a, v) in p.level(1).values().data().iter().zip(lvl.data()) {
            assert!((a - (v - lo) / (hi - lo)).abs() < 1e-12);
        }
    }

    fn gray_seq(frames: Vec<Plane>) -> StereoSequence {
        StereoSequence::from_luma_pairs("t", 25.0, frames.into_iter().map(|f| (f.clone(), f))).unwrap()
    }

    #[test]
    fn vam_static_gray_is_uniform() {
        let seq = gray_seq(vec![Plane::filled(32, 32, 128.0); 3]);
        let maps = baseline_vam(&seq, None, &VamConfig::default()).unwrap();
        for m in &maps {
            assert!(m.values().data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn vam_tracks_moving_dot() {
        let frames: Vec<Plane> = (0..4)
            .map(|t| {
                let (cx, cy) = (20 + 3 * t, 30);
                Plane::from_fn(64, 64, |x, y| {
                    if x.abs_diff(cx) <= 1 && y.abs_diff(cy) <= 1 {
                        255.0
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        let seq = gray_seq(frames);
        let maps = baseline_vam(&seq, None, &VamConfig::default()).unwrap();
        for (t, m) in maps.iter().enumerate() {
            let v = m.values();
            let (mut bx, mut by, mut best) = (0, 0, f64::MIN);
            for y in 0..64 {
                for x in 0..64 {
                    if v.get(x, y) > best {
                        best = v.get(x, y);
                        bx = x;
                        by = y;
                    }
                }
            }
            let (cx, cy) = (20 + 3 * t, 30);
            assert!(bx.abs_diff(cx) <= 2 && by.abs_diff(cy) <= 2, "frame {t}: argmax ({bx},{by})");
        }
    }

    #[test]
    fn vam_prefers_near_plane() {
        let seq = gray_seq(vec![Plane::filled(32, 32, 100.0); 2]);
        let d = Plane::from_fn(32, 32, |x, _| if x < 16 { 12.0 } else { 2.0 });
        let disp = vec![DisparityMap::new(d.clone()).unwrap(); 2];
        let cfg = VamConfig {
            w_intensity: 0.0,
            w_color: 0.0,
            w_motion: 0.0,
            w_depth: 1.0,
            ..VamConfig::default()
        };
        let maps = baseline_vam(&seq, Some(&disp), &cfg).unwrap();
        let near = Plane::from_fn(32, 32, |x, _| if x < 16 { 1.0 } else { 0.0 });
        let far = near.map(|v| 1.0 - v);
        for m in &maps {
            let mn = weighted_mean(m.values(), &near).unwrap();
            let mf = weighted_mean(m.values(), &far).unwrap();
            assert!(mn > mf, "near {mn} far {mf}");
        }
    }

    #[test]
    fn external_maps_are_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let seq = gray_seq(vec![Plane::filled(8, 8, 10.0); 3]);
        for i in 0..3 {
            save_frame_pgm(&Plane::filled(8, 8, 0.4), &dir.path().join(map_file_name(i))).unwrap();
        }
        let maps = load_external_saliency(dir.path(), &seq).unwrap();
        assert_eq!(maps.len(), 3);
        assert!(maps.iter().all(|m| m.values().data().iter().all(|&v| v == 1.0)));
        assert_eq!(maps[0].source(), SaliencySource::External);

        let seq10 = gray_seq(vec![Plane::filled(8, 8, 10.0); 10]);
        for i in 3..9 {
            save_frame_pgm(&Plane::filled(8, 8, 0.4), &dir.path().join(map_file_name(i))).unwrap();
        }
        assert!(matches!(
            load_external_saliency(dir.path(), &seq10),
            Err(Error::MapSeriesGap(_))
        ));
    }

    #[test]
    fn sixteen_bit_maps_scale_before_normalizing() {
        let dir = tempfile::tempdir().unwrap();
        let mut bytes = b"P5\n2 1\n65535\n".to_vec();
        bytes.extend(16384u16.to_be_bytes());
        bytes.extend(49152u16.to_be_bytes());
        std::fs::write(dir.path().join(map_file_name(0)), bytes).unwrap();
        let raw = load_map_series(
            dir.path(),
            MapSeriesShape {
                width: 2,
                height: 1,
                count: 1,
            },
        )
        .unwrap();
        assert!((raw[0].get(0, 0) - 16384.0 / 65535.0).abs() < 1e-15);
        assert!((raw[0].get(1, 0) - 49152.0 / 65535.0).abs() < 1e-15);
        let seq = StereoSequence::from_luma_pairs(
            "t",
            25.0,
            [(Plane::zeros(2, 1), Plane::zeros(2, 1))],
        )
        .unwrap();
        let s = load_external_saliency(dir.path(), &seq).unwrap();
        assert_eq!(s[0].values().data(), &[0.0, 1.0]);
    }
}
