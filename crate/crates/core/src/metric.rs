//! Stable metric identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::report::Orientation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "psnr_s")]
    Psnr,
    #[serde(rename = "ssim_s")]
    Ssim,
    #[serde(rename = "msssim_s")]
    MsSsim,
    #[serde(rename = "vif_s")]
    Vif,
    #[serde(rename = "ddl1_s")]
    Ddl1,
    #[serde(rename = "oq_s")]
    Oq,
    #[serde(rename = "ciq_s")]
    Ciq,
    #[serde(rename = "phvs3d_s")]
    Phvs3d,
    #[serde(rename = "phsd_s")]
    Phsd,
    #[serde(rename = "mj3d_s")]
    Mj3d,
    #[serde(rename = "hv3d_s")]
    Hv3d,
    #[serde(rename = "flosim3d_s")]
    Flosim3d,
    #[serde(rename = "gbim_s")]
    Gbim,
    #[serde(rename = "nrpbm_s")]
    Nrpbm,
    #[serde(rename = "blur_farias_s")]
    BlurFarias,
    #[serde(rename = "block_farias_s")]
    BlockFarias,
    #[serde(rename = "sadaka_s")]
    Sadaka,
    #[serde(rename = "vqsm_s")]
    Vqsm,
    #[serde(rename = "aqi_s")]
    Aqi,
    #[serde(rename = "qa3d_s")]
    Qa3d,
    #[serde(rename = "nospdm_s")]
    Nospdm,
}

impl MetricId {
    pub const FULL_REFERENCE: [MetricId; 12] = [
        MetricId::Psnr,
        MetricId::Ssim,
        MetricId::MsSsim,
        MetricId::Vif,
        MetricId::Ddl1,
        MetricId::Oq,
        MetricId::Ciq,
        MetricId::Phvs3d,
        MetricId::Phsd,
        MetricId::Mj3d,
        MetricId::Hv3d,
        MetricId::Flosim3d,
    ];

    pub const NO_REFERENCE: [MetricId; 9] = [
        MetricId::Gbim,
        MetricId::Nrpbm,
        MetricId::BlurFarias,
        MetricId::BlockFarias,
        MetricId::Sadaka,
        MetricId::Vqsm,
        MetricId::Aqi,
        MetricId::Qa3d,
        MetricId::Nospdm,
    ];

    pub fn all() -> impl Iterator<Item = MetricId> {
        Self::FULL_REFERENCE.into_iter().chain(Self::NO_REFERENCE)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Psnr => "psnr_s",
            MetricId::Ssim => "ssim_s",
            MetricId::MsSsim => "msssim_s",
            MetricId::Vif => "vif_s",
            MetricId::Ddl1 => "ddl1_s",
            MetricId::Oq => "oq_s",
            MetricId::Ciq => "ciq_s",
            MetricId::Phvs3d => "phvs3d_s",
            MetricId::Phsd => "phsd_s",
            MetricId::Mj3d => "mj3d_s",
            MetricId::Hv3d => "hv3d_s",
            MetricId::Flosim3d => "flosim3d_s",
            MetricId::Gbim => "gbim_s",
            MetricId::Nrpbm => "nrpbm_s",
            MetricId::BlurFarias => "blur_farias_s",
            MetricId::BlockFarias => "block_farias_s",
            MetricId::Sadaka => "sadaka_s",
            MetricId::Vqsm => "vqsm_s",
            MetricId::Aqi => "aqi_s",
            MetricId::Qa3d => "qa3d_s",
            MetricId::Nospdm => "nospdm_s",
        }
    }

    pub fn is_full_reference(self) -> bool {
        Self::FULL_REFERENCE.contains(&self)
    }

    pub fn orientation(self) -> Orientation {
        use MetricId::*;
        match self {
            Oq => Orientation::Composite,
            Flosim3d | Gbim | Nrpbm | BlurFarias | BlockFarias => Orientation::LowerBetter,
            _ => Orientation::HigherBetter,
        }
    }

    /// Whether the metric consumes disparity maps.
    pub fn needs_disparity(self) -> bool {
        use MetricId::*;
        matches!(self, Ddl1 | Oq | Ciq | Phvs3d | Phsd | Mj3d | Hv3d | Flosim3d | Qa3d)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMetric(pub String);

impl fmt::Display for UnknownMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = MetricId::all().map(MetricId::as_str).collect();
        write!(f, "unknown metric '{}'; available: {}", self.0, ids.join(", "))
    }
}

impl std::error::Error for UnknownMetric {}

impl FromStr for MetricId {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::all()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in MetricId::all() {
            assert_eq!(m.as_str().parse::<MetricId>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
        assert_eq!(MetricId::all().count(), 21);
    }

    #[test]
    fn unknown_lists_available() {
        let err = "bogus".parse::<MetricId>().unwrap_err().to_string();
        assert!(err.contains("psnr_s") && err.contains("nospdm_s"));
    }
}
