//! Full-reference metrics. Each takes optional per-frame saliency; without
//! it (or with a constant map) the base metric is returned.

mod core;
mod flosim;
mod stereo;

use serde::{Deserialize, Serialize};

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::media::StereoSequence;
use crate::metric::MetricId;
use crate::par;
use crate::plane::Plane;
use crate::report::{fingerprint, MetricReport};
use crate::saliency::{mode_label, pool, SaliencyMap};

pub use self::core::{global_ssim, msssim_value, psnr_from_mse, ssim_maps, ssim_value, vif_value, SsimMaps, PEAK};
pub use flosim::{flow_features, patch_feature_distance};
pub use stereo::{block_error_3d, cyclopean_fuse, disparity_factor, CyclopeanFrame};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OqConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl Default for OqConstants {
    fn default() -> Self {
        OqConstants {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            d: 1.0,
            e: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrMetricConfig {
    pub psnr_cap: f64,
    pub ssim_c1: f64,
    pub ssim_c2: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub msssim_weights: Vec<f64>,
    pub vif_scales: usize,
    pub vif_noise_var: f64,
    pub oq: OqConstants,
    pub phsd_epsilon: f64,
    pub phsd_alpha: f64,
    /// Contrast sensitivity mask indexed `[v][u]`.
    pub csf: [[f64; 4]; 4],
    pub hv3d_beta: [f64; 3],
    pub hv3d_block: usize,
    pub flosim_patch: usize,
}

impl Default for FrMetricConfig {
    fn default() -> Self {
        FrMetricConfig {
            psnr_cap: 100.0,
            ssim_c1: (0.01f64 * 255.0).powi(2),
            ssim_c2: (0.03f64 * 255.0).powi(2),
            ssim_window: 11,
            ssim_sigma: 1.5,
            msssim_weights: vec![0.0448, 0.2856, 0.3001, 0.2363, 0.1333],
            vif_scales: 4,
            vif_noise_var: 2.0,
            oq: OqConstants::default(),
            phsd_epsilon: 0.5,
            phsd_alpha: 1.0,
            csf: [[1.0; 4]; 4],
            hv3d_beta: [1.0; 3],
            hv3d_block: 8,
            flosim_patch: 8,
        }
    }
}

impl FrMetricConfig {
    pub fn validate(&self) -> Result<()> {
        let oq = &self.oq;
        let scalars = [
            self.psnr_cap,
            self.ssim_c1,
            self.ssim_c2,
            self.ssim_sigma,
            self.vif_noise_var,
            oq.a,
            oq.b,
            oq.c,
            oq.d,
            oq.e,
            self.phsd_epsilon,
            self.phsd_alpha,
        ];
        let all = scalars
            .iter()
            .chain(&self.msssim_weights)
            .chain(self.csf.iter().flatten())
            .chain(&self.hv3d_beta);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Param("metric constants must be finite".into()));
        }
        let sum: f64 = self.msssim_weights.iter().sum();
        if self.msssim_weights.is_empty() || (sum - 1.0).abs() > 1e-3 {
            return Err(Error::Param(format!("ms-ssim exponents sum to {sum}, expected 1")));
        }
        if self.ssim_window % 2 == 0 || !(self.ssim_sigma > 0.0) {
            return Err(Error::Param("ssim window must be odd with sigma > 0".into()));
        }
        if !(1..=4).contains(&self.vif_scales) || !(self.vif_noise_var > 0.0) {
            return Err(Error::Param("vif needs 1..=4 scales and positive noise variance".into()));
        }
        if !(0.0..=1.0).contains(&self.phsd_epsilon) || self.phsd_alpha < 0.0 {
            return Err(Error::Param("phsd epsilon must lie in [0,1] and alpha >= 0".into()));
        }
        if !matches!(self.hv3d_block, 4 | 8) {
            return Err(Error::Param("hv3d block must be 4 or 8".into()));
        }
        if self.flosim_patch < 2 {
            return Err(Error::Param("flosim patch must be >= 2".into()));
        }
        Ok(())
    }
}

/// Aligned reference/distorted sequences with optional side information.
#[derive(Clone, Copy, Debug)]
pub struct FrInputs<'a> {
    pub reference: &'a StereoSequence,
    pub distorted: &'a StereoSequence,
    /// One map per frame, computed from the reference pair.
    pub saliency: Option<&'a [SaliencyMap]>,
    pub disparity_ref: Option<&'a [DisparityMap]>,
    pub disparity_dist: Option<&'a [DisparityMap]>,
}

impl<'a> FrInputs<'a> {
    pub fn new(reference: &'a StereoSequence, distorted: &'a StereoSequence) -> Self {
        FrInputs {
            reference,
            distorted,
            saliency: None,
            disparity_ref: None,
            disparity_dist: None,
        }
    }

    pub fn with_saliency(mut self, s: Option<&'a [SaliencyMap]>) -> Self {
        self.saliency = s;
        self
    }

    pub fn with_disparity(mut self, d_ref: &'a [DisparityMap], d_dist: &'a [DisparityMap]) -> Self {
        self.disparity_ref = Some(d_ref);
        self.disparity_dist = Some(d_dist);
        self
    }

    fn validate(&self) -> Result<()> {
        self.reference.ensure_aligned(self.distorted)?;
        let n = self.reference.len();
        let dims = self.reference.dims();
        if let Some(s) = self.saliency {
            check_series(n, dims, s.iter().map(SaliencyMap::dims), "saliency")?;
        }
        for d in [self.disparity_ref, self.disparity_dist].into_iter().flatten() {
            check_series(n, dims, d.iter().map(DisparityMap::dims), "disparity")?;
        }
        Ok(())
    }

    pub(crate) fn s(&self, t: usize) -> Option<&'a SaliencyMap> {
        self.saliency.map(|s| &s[t])
    }

    fn disparity(&self, metric: MetricId) -> Result<(&'a [DisparityMap], &'a [DisparityMap])> {
        match (self.disparity_ref, self.disparity_dist) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::DisparityRequired(metric.as_str())),
        }
    }
}

pub(crate) fn check_series(
    n: usize,
    dims: (usize, usize),
    mut series: impl ExactSizeIterator<Item = (usize, usize)>,
    what: &str,
) -> Result<()> {
    if series.len() != n {
        return Err(Error::SequenceLength {
            left: n,
            right: series.len(),
        });
    }
    if let Some(bad) = series.find(|d| *d != dims) {
        return Err(Error::DimensionMismatch(format!("{what} map {bad:?} vs frames {dims:?}")));
    }
    Ok(())
}

/// Scores one full-reference metric over a sequence pair.
pub fn score_fr(metric: MetricId, inputs: &FrInputs, cfg: &FrMetricConfig) -> Result<MetricReport> {
    if !metric.is_full_reference() {
        return Err(Error::Param(format!("{metric} is not a full-reference metric")));
    }
    cfg.validate()?;
    inputs.validate()?;
    let n = inputs.reference.len();
    let per_frame = |f: &(dyn Fn(usize) -> Result<f64> + Sync)| -> Result<(Vec<usize>, Vec<f64>)> {
        let scores = par::try_map_range(n, f)?;
        Ok(((0..n).collect(), scores))
    };
    let (frames, scores) = match metric {
        MetricId::Psnr => per_frame(&|t| views_mean(inputs, t, |r, d, s| psnr_view(r, d, s, cfg)))?,
        MetricId::Ssim => per_frame(&|t| views_mean(inputs, t, |r, d, s| ssim_value(r, d, s, cfg)))?,
        MetricId::MsSsim => per_frame(&|t| views_mean(inputs, t, |r, d, s| msssim_value(r, d, s, cfg)))?,
        MetricId::Vif => per_frame(&|t| views_mean(inputs, t, |r, d, s| vif_value(r, d, s, cfg)))?,
        MetricId::Ddl1 => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::ddl1_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Oq => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::oq_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Ciq => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::ciq_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Phvs3d => {
            let (dr, _) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::phvs3d_frame(inputs, t, &dr[t], cfg))?
        }
        MetricId::Phsd => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::phsd_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Mj3d => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::mj3d_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Hv3d => {
            let (dr, dd) = inputs.disparity(metric)?;
            per_frame(&|t| stereo::hv3d_frame(inputs, t, &dr[t], &dd[t], cfg))?
        }
        MetricId::Flosim3d => {
            let (dr, dd) = inputs.disparity(metric)?;
            flosim::flosim3d(inputs, dr, dd, cfg)?
        }
        _ => unreachable!("checked above"),
    };
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{metric} produced {bad}")));
    }
    let mut report = MetricReport::new(metric, frames, scores, mode_label(inputs.saliency), fingerprint(cfg));
    report.item = Some(inputs.distorted.name().to_string());
    Ok(report)
}

/// Mean over the left and right views of a per-view score.
fn views_mean(
    inputs: &FrInputs,
    t: usize,
    f: impl Fn(&Plane, &Plane, Option<&SaliencyMap>) -> Result<f64>,
) -> Result<f64> {
    let r = &inputs.reference.frames()[t];
    let d = &inputs.distorted.frames()[t];
    let s = inputs.s(t);
    let left = f(&r.left.luma, &d.left.luma, s)?;
    let right = f(&r.right.luma, &d.right.luma, s)?;
    Ok((left + right) / 2.0)
}

fn psnr_view(r: &Plane, d: &Plane, s: Option<&SaliencyMap>, cfg: &FrMetricConfig) -> Result<f64> {
    r.ensure_same_dims(d, "psnr")?;
    let sq = r.zip_map(d, |a, b| (a - b) * (a - b));
    Ok(psnr_from_mse(pool(&sq, s)?, cfg.psnr_cap))
}
