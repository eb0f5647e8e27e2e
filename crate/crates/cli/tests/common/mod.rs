#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use svqa_core::media::{save_sequence, PixelFormat, SequenceDescriptor, StereoSequence};
use svqa_core::signal::SeededRng;
use svqa_core::Plane;

pub fn svqa(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svqa"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("svqa runs")
}

/// Writes `seq` as gray8 raw views plus `<name>.json` in `dir`.
pub fn write_sequence(dir: &Path, name: &str, seq: &StereoSequence) -> PathBuf {
    let desc = SequenceDescriptor {
        left: dir.join(format!("{name}_l.yuv")),
        right: dir.join(format!("{name}_r.yuv")),
        width: seq.width(),
        height: seq.height(),
        fps: seq.fps(),
        frames: seq.len(),
        format: PixelFormat::Gray8,
    };
    save_sequence(seq, &desc).unwrap();
    let path = dir.join(format!("{name}.json"));
    desc.write_file(&path).unwrap();
    path
}

/// 8·(x+y) mod 256.
pub fn ramp(w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |x, y| ((8 * (x + y)) % 256) as f64)
}

/// Smooth sinusoidal pattern plus seeded grain, kept inside [20, 235].
pub fn texture(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = SeededRng::new(seed);
    let (fx, fy, ph) = (0.1 + 0.2 * rng.next_f64(), 0.1 + 0.2 * rng.next_f64(), 6.3 * rng.next_f64());
    let grain: Vec<f64> = (0..w * h).map(|_| rng.normal(0.0, 12.0).unwrap()).collect();
    Plane::from_fn(w, h, |x, y| {
        let v = 128.0 + 50.0 * (fx * x as f64 + ph).sin() + 40.0 * (fy * y as f64).cos() + grain[y * w + x];
        v.clamp(20.0, 235.0)
    })
}

/// Right view sampled from the left with a per-pixel disparity:
/// `R(x − d) = L(x)`.
pub fn right_from_left(left: &Plane, d: &Plane) -> Plane {
    Plane::from_fn(left.width(), left.height(), |x, y| {
        let dx = d.get(x, y).round() as isize;
        left.get_clamped(x as isize + dx, y as isize)
    })
}

/// Two depth planes: 2 px in the top half, 5 px in the bottom half.
pub fn two_plane(w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |_, y| if y < h / 2 { 2.0 } else { 5.0 })
}
