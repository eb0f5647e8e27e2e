//! Seeded, deterministic distortion generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{StereoFrame, StereoSequence};
use crate::par;
use crate::plane::Plane;
use crate::signal::{convolve2d, dct2, gaussian_kernel, idct2, SeededRng};

fn default_blur_size() -> usize {
    4
}

fn default_blur_sigma() -> f64 {
    4.0
}

fn default_shift() -> f64 {
    20.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionKind {
    /// Gaussian noise with `variance` on the `[0, 1]` luma scale.
    Awgn { variance: f64 },
    GaussianBlur {
        #[serde(default = "default_blur_size")]
        size: usize,
        #[serde(default = "default_blur_sigma")]
        sigma: f64,
    },
    IntensityShift {
        #[serde(default = "default_shift")]
        delta: f64,
    },
    /// 8×8 DCT coefficients rounded to multiples of `step`.
    BlockQuantize { step: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    BothViews,
    LeftOnly,
    RightOnly,
}

impl Target {
    fn covers(self, view: usize) -> bool {
        match self {
            Target::BothViews => true,
            Target::LeftOnly => view == 0,
            Target::RightOnly => view == 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    #[serde(flatten)]
    pub kind: DistortionKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub target: Target,
    /// Restricts the change to this rectangle; pixels outside are untouched.
    #[serde(default)]
    pub region: Option<Region>,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind) -> Self {
        DistortionSpec {
            kind,
            seed: None,
            target: Target::BothViews,
            region: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    pub fn with_target(mut self, target: Target) -> Self {
        self.target = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DistortionKind::Awgn { variance } => {
                if !(variance >= 0.0) || !variance.is_finite() {
                    return Err(Error::Param(format!("awgn variance {variance} must be >= 0")));
                }
                if self.seed.is_none() {
                    return Err(Error::Param("awgn requires a seed".into()));
                }
            }
            DistortionKind::GaussianBlur { size, sigma } => {
                if size == 0 || !(sigma > 0.0) {
                    return Err(Error::Param("blur needs size >= 1 and sigma > 0".into()));
                }
            }
            DistortionKind::IntensityShift { delta } => {
                if !delta.is_finite() {
                    return Err(Error::Param("shift delta must be finite".into()));
                }
            }
            DistortionKind::BlockQuantize { step } => {
                if !(step > 0.0) || !step.is_finite() {
                    return Err(Error::Param(format!("quantizer step {step} must be > 0")));
                }
            }
        }
        Ok(())
    }
}

/// Applies `spec` to every frame. Chroma planes are left untouched.
pub fn apply(seq: &StereoSequence, spec: &DistortionSpec) -> Result<StereoSequence> {
    spec.validate()?;
    let frames = par::try_map_range(seq.len(), |t| -> Result<StereoFrame> {
        let src = &seq.frames()[t];
        let mut views = [src.left.clone(), src.right.clone()];
        for (v, frame) in views.iter_mut().enumerate() {
            if spec.target.covers(v) {
                let stream = (t * 2 + v) as u64;
                frame.luma = distort_plane(&frame.luma, spec, stream)?;
            }
        }
        let [left, right] = views;
        StereoFrame::new(left, right, t)
    })?;
    StereoSequence::new(seq.name(), seq.fps(), frames)
}

fn distort_plane(p: &Plane, spec: &DistortionSpec, stream: u64) -> Result<Plane> {
    let changed = match spec.kind {
        DistortionKind::Awgn { variance } => {
            let sigma = 255.0 * variance.sqrt();
            let mut rng = SeededRng::for_stream(spec.seed.expect("validated"), stream);
            let mut out = p.clone();
            for v in out.data_mut() {
                *v = (*v + rng.normal(0.0, sigma)?).clamp(0.0, 255.0);
            }
            out
        }
        DistortionKind::GaussianBlur { size, sigma } => convolve2d(p, &gaussian_kernel(size, sigma)?)?,
        DistortionKind::IntensityShift { delta } => p.map(|v| (v + delta).clamp(0.0, 255.0)),
        DistortionKind::BlockQuantize { step } => block_quantize(p, step)?,
    };
    Ok(match spec.region {
        None => changed,
        Some(r) => Plane::from_fn(p.width(), p.height(), |x, y| {
            if r.contains(x, y) {
                changed.get(x, y)
            } else {
                p.get(x, y)
            }
        }),
    })
}

/// Quantizes the DCT of every full 8×8 block; partial edge blocks pass through.
fn block_quantize(p: &Plane, step: f64) -> Result<Plane> {
    let mut out = p.clone();
    let (w, h) = p.dims();
    for by in 0..h / 8 {
        for bx in 0..w / 8 {
            let (x0, y0) = (bx * 8, by * 8);
            let block = p.crop_clamped(x0 as isize, y0 as isize, 8, 8).into_vec();
            // f64::round rounds half away from zero
            let coeffs: Vec<f64> = dct2(&block)?.iter().map(|c| (c / step).round() * step).collect();
            let pixels = idct2(&coeffs)?;
            for (i, v) in pixels.into_iter().enumerate() {
                out.set(x0 + i % 8, y0 + i / 8, v.clamp(0.0, 255.0));
            }
        }
    }
    Ok(out)
}

pub fn apply_awgn(seq: &StereoSequence, variance: f64, seed: u64) -> Result<StereoSequence> {
    apply(seq, &DistortionSpec::new(DistortionKind::Awgn { variance }).with_seed(seed))
}

pub fn apply_gaussian_blur(seq: &StereoSequence, size: usize, sigma: f64) -> Result<StereoSequence> {
    apply(seq, &DistortionSpec::new(DistortionKind::GaussianBlur { size, sigma }))
}

pub fn apply_intensity_shift(seq: &StereoSequence, delta: f64) -> Result<StereoSequence> {
    apply(seq, &DistortionSpec::new(DistortionKind::IntensityShift { delta }))
}

pub fn apply_block_quantize(seq: &StereoSequence, step: f64) -> Result<StereoSequence> {
    apply(seq, &DistortionSpec::new(DistortionKind::BlockQuantize { step }))
}
