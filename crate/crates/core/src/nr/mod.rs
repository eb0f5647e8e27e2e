//! No-reference metrics, scored from the distorted sequence alone with
//! saliency computed from that same sequence.

mod blockiness;
mod blur;
mod stereo;
mod texture;

use serde::{Deserialize, Serialize};

use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::fr::check_series;
use crate::media::StereoSequence;
use crate::metric::MetricId;
use crate::par;
use crate::plane::Plane;
use crate::report::{fingerprint, MetricReport};
use crate::saliency::{mode_label, SaliencyMap};

pub use blockiness::{block_farias_frame, gbim_frame, qjpeg_frame};
pub use blur::{blur_farias_frame, edge_widths, nrpbm_frame, sadaka_frame, EdgeWidth};
pub use stereo::{nospdm_pair, qa3d_series};
pub use texture::{aqi_frame, vqsm_frame, vqsm_terms};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbimMasking {
    /// `W = 1`.
    Neutral,
    /// `W = 1 / (1 + σ_local / 32)` with a 3×3 local deviation.
    Luminance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NrMetricConfig {
    pub gbim_block: usize,
    pub gbim_masking: GbimMasking,
    pub nrpbm_probe: usize,
    /// Edge threshold as a fraction of the frame's largest gradient.
    pub edge_threshold: f64,
    pub sadaka_region: usize,
    pub sadaka_beta: f64,
    pub jnb_contrast_split: f64,
    pub jnb_width_low_contrast: f64,
    pub jnb_width_high_contrast: f64,
    pub vqsm_alpha: [f64; 5],
    pub aqi_directions: Vec<f64>,
    pub aqi_length: usize,
    pub aqi_bins: usize,
    pub qa3d_threshold: f64,
    pub qa3d_history: usize,
    pub qjpeg_alpha: f64,
    pub qjpeg_beta: f64,
    pub qjpeg_gamma: [f64; 3],
    pub nospdm_mu: f64,
    pub nospdm_omega: f64,
    pub nospdm_lambda: f64,
}

impl Default for NrMetricConfig {
    fn default() -> Self {
        NrMetricConfig {
            gbim_block: 8,
            gbim_masking: GbimMasking::Neutral,
            nrpbm_probe: 9,
            edge_threshold: 0.1,
            sadaka_region: 64,
            sadaka_beta: 3.6,
            jnb_contrast_split: 50.0,
            jnb_width_low_contrast: 5.0,
            jnb_width_high_contrast: 3.0,
            vqsm_alpha: [0.0, 1.0, 0.0, -1.0, 0.0],
            aqi_directions: vec![0.0, 45.0, 90.0, 135.0],
            aqi_length: 7,
            aqi_bins: 64,
            qa3d_threshold: 1.0,
            qa3d_history: 10,
            qjpeg_alpha: -245.9,
            qjpeg_beta: 261.9,
            qjpeg_gamma: [-0.0240, 0.0160, 0.0064],
            nospdm_mu: 1.0,
            nospdm_omega: 1.0,
            nospdm_lambda: 0.5,
        }
    }
}

impl NrMetricConfig {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.edge_threshold,
            self.sadaka_beta,
            self.jnb_contrast_split,
            self.jnb_width_low_contrast,
            self.jnb_width_high_contrast,
            self.qa3d_threshold,
            self.qjpeg_alpha,
            self.qjpeg_beta,
            self.nospdm_mu,
            self.nospdm_omega,
            self.nospdm_lambda,
        ];
        let all = scalars
            .iter()
            .chain(&self.vqsm_alpha)
            .chain(&self.aqi_directions)
            .chain(&self.qjpeg_gamma);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Param("metric constants must be finite".into()));
        }
        if self.gbim_block < 2 || self.nrpbm_probe < 2 || self.sadaka_region < 1 {
            return Err(Error::Param("block, probe and region sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.edge_threshold) {
            return Err(Error::Param("edge threshold must lie in [0, 1)".into()));
        }
        if !(self.sadaka_beta > 0.0) || !(self.jnb_width_low_contrast > 0.0) || !(self.jnb_width_high_contrast > 0.0) {
            return Err(Error::Param("sadaka beta and JNB widths must be > 0".into()));
        }
        if self.aqi_directions.is_empty() || self.aqi_length == 0 || self.aqi_bins < 2 {
            return Err(Error::Param("aqi needs directions, a positive length and >= 2 bins".into()));
        }
        if self.qa3d_history < 1 || self.qa3d_threshold < 0.0 {
            return Err(Error::Param("qa3d needs history >= 1 and threshold >= 0".into()));
        }
        Ok(())
    }
}

/// Distorted sequence with optional per-frame side information.
#[derive(Clone, Copy, Debug)]
pub struct NrInputs<'a> {
    pub distorted: &'a StereoSequence,
    /// Left-anchored maps; also used for the right view unless
    /// `saliency_right` is given.
    pub saliency: Option<&'a [SaliencyMap]>,
    pub saliency_right: Option<&'a [SaliencyMap]>,
    pub disparity: Option<&'a [DisparityMap]>,
}

impl<'a> NrInputs<'a> {
    pub fn new(distorted: &'a StereoSequence) -> Self {
        NrInputs {
            distorted,
            saliency: None,
            saliency_right: None,
            disparity: None,
        }
    }

    pub fn with_saliency(mut self, s: Option<&'a [SaliencyMap]>) -> Self {
        self.saliency = s;
        self
    }

    pub fn with_disparity(mut self, d: &'a [DisparityMap]) -> Self {
        self.disparity = Some(d);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.distorted.len();
        let dims = self.distorted.dims();
        for s in [self.saliency, self.saliency_right].into_iter().flatten() {
            check_series(n, dims, s.iter().map(SaliencyMap::dims), "saliency")?;
        }
        if let Some(d) = self.disparity {
            check_series(n, dims, d.iter().map(DisparityMap::dims), "disparity")?;
        }
        Ok(())
    }

    pub(crate) fn s(&self, t: usize) -> Option<&'a SaliencyMap> {
        self.saliency.map(|s| &s[t])
    }

    pub(crate) fn s_right(&self, t: usize) -> Option<&'a SaliencyMap> {
        self.saliency_right.map(|s| &s[t]).or_else(|| self.s(t))
    }
}

/// Scores one no-reference metric over a sequence.
pub fn score_nr(metric: MetricId, inputs: &NrInputs, cfg: &NrMetricConfig) -> Result<MetricReport> {
    if metric.is_full_reference() {
        return Err(Error::Param(format!("{metric} is not a no-reference metric")));
    }
    cfg.validate()?;
    inputs.validate()?;
    let n = inputs.distorted.len();
    let per_view = |f: &(dyn Fn(&Plane, Option<&SaliencyMap>) -> Result<f64> + Sync)| -> Result<(Vec<usize>, Vec<f64>)> {
        let scores = par::try_map_range(n, |t| {
            let fr = &inputs.distorted.frames()[t];
            let left = f(&fr.left.luma, inputs.s(t))?;
            let right = f(&fr.right.luma, inputs.s_right(t))?;
            Ok::<_, Error>((left + right) / 2.0)
        })?;
        Ok(((0..n).collect(), scores))
    };
    let (frames, scores) = match metric {
        MetricId::Gbim => per_view(&|p, s| gbim_frame(p, s, cfg))?,
        MetricId::Nrpbm => per_view(&|p, s| nrpbm_frame(p, s, cfg))?,
        MetricId::BlurFarias => per_view(&|p, s| blur_farias_frame(p, s, cfg))?,
        MetricId::BlockFarias => per_view(&|p, s| block_farias_frame(p, s, cfg))?,
        MetricId::Sadaka => per_view(&|p, s| sadaka_frame(p, s, cfg))?,
        MetricId::Vqsm => per_view(&|p, s| vqsm_frame(p, s, cfg))?,
        MetricId::Aqi => per_view(&|p, s| aqi_frame(p, s, cfg))?,
        MetricId::Qa3d => {
            let d = inputs.disparity.ok_or(Error::DisparityRequired(metric.as_str()))?;
            qa3d_series(inputs, d, cfg)?
        }
        MetricId::Nospdm => {
            let scores = par::try_map_range(n, |t| nospdm_pair(inputs, t, cfg))?;
            ((0..n).collect(), scores)
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
