//! Stereo sequence containers and the raw/PGM file formats.
//!
//! A view is stored as a headerless stream of 8-bit planar frames. Maps
//! (saliency, disparity) are stored one per frame as binary PGM files named
//! `000000.pgm`, `000001.pgm`, …

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;

/// One view of one time instant. Samples are real values in `[0, 255]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub luma: Plane,
    /// `(U, V)` planes, either subsampled 2:1 in both directions or full size.
    pub chroma: Option<(Plane, Plane)>,
}

impl Frame {
    pub fn gray(luma: Plane) -> Self {
        Frame { luma, chroma: None }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.luma.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.luma.height()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StereoFrame {
    pub left: Frame,
    pub right: Frame,
    pub index: usize,
}

impl StereoFrame {
    pub fn new(left: Frame, right: Frame, index: usize) -> Result<Self> {
        left.luma.ensure_same_dims(&right.luma, "stereo views")?;
        Ok(StereoFrame { left, right, index })
    }

    pub fn views(&self) -> [&Frame; 2] {
        [&self.left, &self.right]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StereoSequence {
    frames: Vec<StereoFrame>,
    fps: f64,
    name: String,
}

impl StereoSequence {
    /// Validates dimensions and renumbers frames from zero.
    pub fn new(name: impl Into<String>, fps: f64, frames: Vec<StereoFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptySequence);
        }
        if !(fps > 0.0) {
            return Err(Error::Param(format!("fps must be > 0, got {fps}")));
        }
        let dims = frames[0].left.luma.dims();
        let mut frames = frames;
        for (i, f) in frames.iter_mut().enumerate() {
            if f.left.luma.dims() != dims || f.right.luma.dims() != dims {
                return Err(Error::DimensionMismatch(format!("frame {i} differs from frame 0")));
            }
            f.index = i;
        }
        Ok(StereoSequence {
            frames,
            fps,
            name: name.into(),
        })
    }

    /// Gray sequence from `(left, right)` luma planes.
    pub fn from_luma_pairs(
        name: impl Into<String>,
        fps: f64,
        pairs: impl IntoIterator<Item = (Plane, Plane)>,
    ) -> Result<Self> {
        let frames = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (l, r))| StereoFrame::new(Frame::gray(l), Frame::gray(r), i))
            .collect::<Result<Vec<_>>>()?;
        StereoSequence::new(name, fps, frames)
    }

    pub fn frames(&self) -> &[StereoFrame] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [StereoFrame] {
        &mut self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn width(&self) -> usize {
        self.frames[0].left.width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].left.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    pub fn ensure_aligned(&self, other: &StereoSequence) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::SequenceLength {
                left: self.len(),
                right: other.len(),
            });
        }
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "sequences are {:?} and {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelFormat {
    Yuv420p8,
    Yuv444p8,
    Gray8,
}

impl PixelFormat {
    pub fn frame_bytes(self, width: usize, height: usize) -> usize {
        let luma = width * height;
        match self {
            PixelFormat::Gray8 => luma,
            PixelFormat::Yuv444p8 => 3 * luma,
            PixelFormat::Yuv420p8 => luma + 2 * width.div_ceil(2) * height.div_ceil(2),
        }
    }

    fn chroma_dims(self, width: usize, height: usize) -> Option<(usize, usize)> {
        match self {
            PixelFormat::Gray8 => None,
            PixelFormat::Yuv444p8 => Some((width, height)),
            PixelFormat::Yuv420p8 => Some((width.div_ceil(2), height.div_ceil(2))),
        }
    }
}

/// JSON descriptor of a raw stereo sequence.
///
/// `left`/`right` are resolved relative to the descriptor file's directory
/// when loaded through [`SequenceDescriptor::from_file`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceDescriptor {
    pub left: PathBuf,
    pub right: PathBuf,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frames: usize,
    pub format: PixelFormat,
}

impl SequenceDescriptor {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut desc: SequenceDescriptor = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        desc.left = base.join(&desc.left);
        desc.right = base.join(&desc.right);
        Ok(desc)
    }

    /// Writes the descriptor with view paths relative to its own directory
    /// when they live there.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let rel = |p: &Path| p.strip_prefix(base).map(Path::to_path_buf).unwrap_or(p.to_path_buf());
        let out = SequenceDescriptor {
            left: rel(&self.left),
            right: rel(&self.right),
            ..self.clone()
        };
        let text = serde_json::to_string_pretty(&out)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn frame_bytes(&self) -> usize {
        self.format.frame_bytes(self.width, self.height)
    }
}

pub fn load_sequence(desc: &SequenceDescriptor) -> Result<StereoSequence> {
    load_sequence_named(desc, "sequence")
}

pub fn load_sequence_named(desc: &SequenceDescriptor, name: &str) -> Result<StereoSequence> {
    if desc.frames == 0 {
        return Err(Error::EmptySequence);
    }
    if desc.width == 0 || desc.height == 0 {
        return Err(Error::DescriptorMismatch("zero width or height".into()));
    }
    let left = read_view(&desc.left, desc)?;
    let right = read_view(&desc.right, desc)?;
    let frames = left
        .into_iter()
        .zip(right)
        .enumerate()
        .map(|(i, (l, r))| StereoFrame::new(l, r, i))
        .collect::<Result<Vec<_>>>()?;
    StereoSequence::new(name, desc.fps, frames)
}

fn read_view(path: &Path, desc: &SequenceDescriptor) -> Result<Vec<Frame>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fb = desc.frame_bytes();
    let expected = fb * desc.frames;
    if bytes.len() != expected {
        return Err(Error::DescriptorMismatch(format!(
            "{}: {} bytes, descriptor implies {} frames x {} = {}",
            path.display(),
            bytes.len(),
            desc.frames,
            fb,
            expected
        )));
    }
    let (w, h) = (desc.width, desc.height);
    let to_plane = |b: &[u8], pw: usize, ph: usize| {
        Plane::from_vec(pw, ph, b.iter().map(|&v| f64::from(v)).collect()).expect("plane dims")
    };
    Ok(bytes
        .chunks_exact(fb)
        .map(|chunk| {
            let luma = to_plane(&chunk[..w * h], w, h);
            let chroma = desc.format.chroma_dims(w, h).map(|(cw, ch)| {
                let u0 = w * h;
                let v0 = u0 + cw * ch;
                (
                    to_plane(&chunk[u0..v0], cw, ch),
                    to_plane(&chunk[v0..v0 + cw * ch], cw, ch),
                )
            });
            Frame { luma, chroma }
        })
        .collect())
}

#[inline]
fn quantize8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Writes both views as raw planar streams at the descriptor's paths.
///
/// Samples are rounded half-up and clamped to 8 bits. Missing chroma is
/// written as neutral 128.
pub fn save_sequence(seq: &StereoSequence, desc: &SequenceDescriptor) -> Result<()> {
    if seq.dims() != (desc.width, desc.height) || seq.len() != desc.frames {
        return Err(Error::DescriptorMismatch(format!(
            "sequence is {}x{}x{}, descriptor {}x{}x{}",
            seq.width(),
            seq.height(),
            seq.len(),
            desc.width,
            desc.height,
            desc.frames
        )));
    }
    for (path, right) in [(&desc.left, false), (&desc.right, true)] {
        let mut out = Vec::with_capacity(desc.frame_bytes() * desc.frames);
        for f in seq.frames() {
            let view = if right { &f.right } else { &f.left };
            out.extend(view.luma.data().iter().map(|&v| quantize8(v)));
            if let Some((cw, ch)) = desc.format.chroma_dims(desc.width, desc.height) {
                match &view.chroma {
                    Some((u, v)) if u.dims() == (cw, ch) && v.dims() == (cw, ch) => {
                        out.extend(u.data().iter().map(|&s| quantize8(s)));
                        out.extend(v.data().iter().map(|&s| quantize8(s)));
                    }
                    _ => out.extend(std::iter::repeat_n(128u8, 2 * cw * ch)),
                }
            }
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, &out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads a binary (P5) PGM and scales samples to `[0, 1]` by `maxval`.
pub fn read_pgm(path: &Path) -> Result<Plane> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Plane, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5)".into());
    }
    let mut num = |what: &str| -> std::result::Result<usize, String> {
        token()?.parse().map_err(|_| format!("bad {what}"))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    // exactly one whitespace byte separates header and raster
    let start = pos + 1;
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bps;
    let raster = bytes
        .get(start..start + need)
        .ok_or_else(|| format!("raster needs {need} bytes"))?;
    let scale = maxval as f64;
    let data = if bps == 1 {
        raster.iter().map(|&b| f64::from(b) / scale).collect()
    } else {
        raster
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / scale)
            .collect()
    };
    Plane::from_vec(width, height, data).map_err(|e| e.to_string())
}

/// Writes a `[0, 1]` map as P5 maxval 255, rounding half up.
pub fn save_frame_pgm(map: &Plane, path: &Path) -> Result<()> {
    if let Some(bad) = map
        .data()
        .iter()
        .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
    {
        return Err(Error::Range(format!("map sample {bad} outside [0, 1]")));
    }
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(map.data().iter().map(|&v| (v * 255.0 + 0.5).floor() as u8));
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn map_file_name(index: usize) -> String {
    format!("{index:06}.pgm")
}

/// Expected shape of a map series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapSeriesShape {
    pub width: usize,
    pub height: usize,
    pub count: usize,
}

/// Loads `000000.pgm … (count-1).pgm` from `dir`.
pub fn load_map_series(dir: &Path, expected: MapSeriesShape) -> Result<Vec<Plane>> {
    let mut present = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".pgm") {
            if stem.len() == 6 && stem.bytes().all(|b| b.is_ascii_digit()) {
                present.push(stem.parse::<usize>().expect("six digits"));
            }
        }
    }
    present.sort_unstable();
    for i in 0..expected.count {
        if present.binary_search(&i).is_err() {
            return Err(Error::MapSeriesGap(format!(
                "{} has no {} ({} maps expected)",
                dir.display(),
                map_file_name(i),
                expected.count
            )));
        }
    }
    (0..expected.count)
        .map(|i| {
            let path = dir.join(map_file_name(i));
            let map = read_pgm(&path)?;
            if map.dims() != (expected.width, expected.height) {
                return Err(Error::MapShape(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    map.width(),
                    map.height(),
                    expected.width,
                    expected.height
                )));
            }
            Ok(map)
        })
        .collect()
}

/// Writes a map series into `dir` (created if needed).
pub fn save_map_series(maps: &[Plane], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in maps.iter().enumerate() {
        save_frame_pgm(m, &dir.join(map_file_name(i)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SeededRng;

    fn gray_desc(dir: &Path, w: usize, h: usize, frames: usize) -> SequenceDescriptor {
        SequenceDescriptor {
            left: dir.join("l.yuv"),
            right: dir.join("r.yuv"),
            width: w,
            height: h,
            fps: 25.0,
            frames,
            format: PixelFormat::Gray8,
        }
    }

    #[test]
    fn byte_values_map_to_reals() {
        let dir = tempfile::tempdir().unwrap();
        let desc = gray_desc(dir.path(), 2, 2, 1);
        fs::write(&desc.left, [0x00, 0xFF, 0x80, 0x40]).unwrap();
        fs::write(&desc.right, [0x00, 0xFF, 0x80, 0x40]).unwrap();
        let seq = load_sequence(&desc).unwrap();
        let expect = Plane::from_rows(&[[0.0, 255.0], [128.0, 64.0]]).unwrap();
        assert_eq!(seq.frames()[0].left.luma, expect);
        assert_eq!(seq.frames()[0].right.luma, expect);
    }

    #[test]
    fn frame_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let desc = gray_desc(dir.path(), 4, 4, 10);
        fs::write(&desc.left, vec![0u8; 16 * 9]).unwrap();
        fs::write(&desc.right, vec![0u8; 16 * 9]).unwrap();
        assert!(matches!(load_sequence(&desc), Err(Error::DescriptorMismatch(_))));
    }

    #[test]
    fn zero_frames_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let desc = gray_desc(dir.path(), 4, 4, 0);
        assert!(matches!(load_sequence(&desc), Err(Error::EmptySequence)));
        let desc = gray_desc(dir.path(), 4, 4, 1);
        assert!(matches!(load_sequence(&desc), Err(Error::Io { .. })));
    }

    #[test]
    fn yuv420_save_load_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut desc = gray_desc(dir.path(), 16, 16, 3);
        desc.format = PixelFormat::Yuv420p8;
        let mut rng = SeededRng::new(99);
        let bytes: Vec<u8> = (0..desc.frame_bytes() * 3).map(|_| rng.next_u64() as u8).collect();
        fs::write(&desc.left, &bytes).unwrap();
        let bytes_r: Vec<u8> = bytes.iter().rev().copied().collect();
        fs::write(&desc.right, &bytes_r).unwrap();

        let seq = load_sequence(&desc).unwrap();
        assert!(seq.frames()[0].left.chroma.is_some());
        let out = gray_desc(&dir.path().join("out"), 16, 16, 3);
        let out = SequenceDescriptor {
            format: PixelFormat::Yuv420p8,
            ..out
        };
        save_sequence(&seq, &out).unwrap();
        assert_eq!(fs::read(&out.left).unwrap(), bytes);
        assert_eq!(fs::read(&out.right).unwrap(), bytes_r);
    }

    #[test]
    fn descriptor_paths_are_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let desc = gray_desc(dir.path(), 8, 8, 1);
        let path = dir.path().join("seq.json");
        desc.write_file(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"left\": \"l.yuv\""));
        assert!(text.contains("\"format\": \"gray8\""));
        assert_eq!(SequenceDescriptor::from_file(&path).unwrap(), desc);
    }

    #[test]
    fn pgm_8bit_and_16bit() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join(map_file_name(0));
        let mut b = b"P5\n2 2\n255\n".to_vec();
        b.extend([0xFF, 0x00, 0x00, 0xFF]);
        fs::write(&p8, b).unwrap();
        assert_eq!(
            read_pgm(&p8).unwrap(),
            Plane::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap()
        );

        let p16 = dir.path().join("x.pgm");
        let mut b = b"P5\n# comment\n1 1\n65535\n".to_vec();
        b.extend(32768u16.to_be_bytes());
        fs::write(&p16, b).unwrap();
        let v = read_pgm(&p16).unwrap().get(0, 0);
        assert!((v - 32768.0 / 65535.0).abs() < 1e-15);
        assert!((v - 0.5000076).abs() < 1e-7);
    }

    #[test]
    fn save_pgm_rounding_and_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        save_frame_pgm(&Plane::from_rows(&[[0.0, 1.0], [0.5, 0.25]]).unwrap(), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0x00, 0xFF, 0x80, 0x40]);

        save_frame_pgm(&Plane::zeros(3, 2), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes[bytes.len() - 6..].iter().all(|&b| b == 0));

        let bad = Plane::filled(1, 1, 1.0001);
        assert!(matches!(save_frame_pgm(&bad, &p), Err(Error::Range(_))));
    }

    #[test]
    fn series_gap_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        let m = Plane::filled(4, 3, 0.5);
        save_frame_pgm(&m, &dir.path().join("000000.pgm")).unwrap();
        save_frame_pgm(&m, &dir.path().join("000002.pgm")).unwrap();
        let shape = MapSeriesShape {
            width: 4,
            height: 3,
            count: 3,
        };
        assert!(matches!(load_map_series(dir.path(), shape), Err(Error::MapSeriesGap(_))));
        let shape = MapSeriesShape {
            width: 5,
            height: 3,
            count: 1,
        };
        assert!(matches!(load_map_series(dir.path(), shape), Err(Error::MapShape(_))));
    }
}
