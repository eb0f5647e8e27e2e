//! Per-sequence metric output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metric::MetricId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
    /// Mixed-sign combination whose direction depends on its constants.
    Composite,
}

impl Orientation {
    /// True when `a` denotes strictly worse quality than `b`.
    pub fn is_worse(self, a: f64, b: f64) -> Option<bool> {
        match self {
            Orientation::HigherBetter => Some(a < b),
            Orientation::LowerBetter => Some(a > b),
            Orientation::Composite => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: MetricId,
    /// Identifier of the scored (distorted) sequence.
    pub item: Option<String>,
    pub orientation: Orientation,
    pub saliency_mode: String,
    pub config_fingerprint: String,
    /// Temporal mean of `per_frame`.
    pub pooled: f64,
    /// Indices of the frames that carry a score.
    pub frames: Vec<usize>,
    pub per_frame: Vec<f64>,
}

impl MetricReport {
    pub fn new(
        metric: MetricId,
        frames: Vec<usize>,
        per_frame: Vec<f64>,
        saliency_mode: impl Into<String>,
        config_fingerprint: String,
    ) -> Self {
        debug_assert_eq!(frames.len(), per_frame.len());
        let pooled = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
        MetricReport {
            metric,
            item: None,
            orientation: metric.orientation(),
            saliency_mode: saliency_mode.into(),
            config_fingerprint,
            pooled,
            frames,
            per_frame,
        }
    }

    /// `frame,score` rows.
    pub fn frame_csv(&self) -> String {
        let mut out = String::from("frame,score\n");
        for (f, s) in self.frames.iter().zip(&self.per_frame) {
            let _ = writeln!(out, "{f},{s}");
        }
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// First 16 hex digits of the SHA-256 of the config's JSON encoding.
pub fn fingerprint<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
