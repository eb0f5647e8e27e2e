use crate::error::{Error, Result};
use crate::plane::Plane;

/// Square filter kernel applied by correlation.
///
/// Tap `(i, j)` multiplies the sample at offset `(i - (K-1)/2, j - (K-1)/2)`
/// (integer division), so even sizes lean one sample to the right/bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<f64>,
    /// 1-D factor when the kernel is an outer product `f ⊗ f`.
    separable: Option<Vec<f64>>,
    normalized: bool,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || taps.len() != size * size {
            return Err(Error::Param(format!(
                "kernel of size {size} needs {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Param("non-finite kernel tap".into()));
        }
        let normalized = (taps.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        Ok(Kernel2D {
            size,
            taps,
            separable: None,
            normalized,
        })
    }

    /// Builds `f ⊗ f` from a 1-D factor and keeps the factor for fast filtering.
    pub fn from_separable(factor: Vec<f64>) -> Result<Self> {
        let size = factor.len();
        let mut taps = Vec::with_capacity(size * size);
        for &fy in &factor {
            for &fx in &factor {
                taps.push(fy * fx);
            }
        }
        let mut k = Kernel2D::new(size, taps)?;
        k.separable = Some(factor);
        Ok(k)
    }

    pub fn identity() -> Self {
        Kernel2D::from_separable(vec![1.0]).expect("identity kernel")
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, i: usize, j: usize) -> f64 {
        self.taps[j * self.size + i]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn separable_factor(&self) -> Option<&[f64]> {
        self.separable.as_deref()
    }

    #[inline]
    pub(crate) fn anchor(&self) -> usize {
        (self.size - 1) / 2
    }
}

/// Normalized Gaussian sampled on a `size × size` grid centered at
/// `(size-1)/2`, so even sizes use half-integer offsets (±0.5, ±1.5, …).
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel2D> {
    if size == 0 {
        return Err(Error::Param("kernel size must be >= 1".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("gaussian sigma must be > 0, got {sigma}")));
    }
    let center = (size as f64 - 1.0) / 2.0;
    let mut factor: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = factor.iter().sum();
    factor.iter_mut().for_each(|v| *v /= total);
    Kernel2D::from_separable(factor)
}

/// Gaussian with support `2·ceil(3σ) + 1`.
pub fn gaussian_kernel_for_sigma(sigma: f64) -> Result<Kernel2D> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("gaussian sigma must be > 0, got {sigma}")));
    }
    let size = 2 * (3.0 * sigma).ceil() as usize + 1;
    gaussian_kernel(size, sigma)
}

pub fn box_kernel(size: usize) -> Result<Kernel2D> {
    if size == 0 {
        return Err(Error::Param("kernel size must be >= 1".into()));
    }
    Kernel2D::from_separable(vec![1.0 / size as f64; size])
}

/// Correlates `image` with `kernel`, replicating edges; output has the input size.
pub fn convolve2d(image: &Plane, kernel: &Kernel2D) -> Result<Plane> {
    if image.is_empty() {
        return Err(Error::TooSmall("empty image".into()));
    }
    if kernel.size() > image.width() || kernel.size() > image.height() {
        return Err(Error::KernelTooLarge {
            kernel: kernel.size(),
            width: image.width(),
            height: image.height(),
        });
    }
    Ok(filter_unchecked(image, kernel))
}

pub(crate) fn filter_unchecked(image: &Plane, kernel: &Kernel2D) -> Plane {
    match kernel.separable_factor() {
        Some(f) => filter_separable(image, f, kernel.anchor()),
        None => filter_dense(image, kernel),
    }
}

fn filter_dense(image: &Plane, kernel: &Kernel2D) -> Plane {
    let k = kernel.size();
    let a = kernel.anchor() as isize;
    Plane::from_fn(image.width(), image.height(), |x, y| {
        let mut acc = 0.0;
        for j in 0..k {
            let sy = y as isize + j as isize - a;
            for i in 0..k {
                let sx = x as isize + i as isize - a;
                acc += kernel.tap(i, j) * image.get_clamped(sx, sy);
            }
        }
        acc
    })
}

/// Horizontal then vertical pass with a shared 1-D factor.
pub(crate) fn filter_separable(image: &Plane, factor: &[f64], anchor: usize) -> Plane {
    let (w, h) = image.dims();
    let k = factor.len();
    let lo = anchor;

    let mut tmp = vec![0.0; w * h];
    let mut padded = vec![0.0; w + k - 1];
    for y in 0..h {
        let row = image.row(y);
        for (p, slot) in padded.iter_mut().enumerate() {
            let sx = (p as isize - lo as isize).clamp(0, w as isize - 1) as usize;
            *slot = row[sx];
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = factor
                .iter()
                .zip(&padded[x..x + k])
                .map(|(f, v)| f * v)
                .sum();
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (t, &f) in factor.iter().enumerate() {
            let sy = (y as isize + t as isize - lo as isize).clamp(0, h as isize - 1) as usize;
            let src = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += f * s;
            }
        }
    }
    Plane::from_vec(w, h, out).expect("separable filter dims")
}

const BINOMIAL5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Binomial low-pass then keep every second sample from index 0.
pub fn downsample2(image: &Plane) -> Result<Plane> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(Error::TooSmall(format!("cannot halve a {w}x{h} image")));
    }
    let smooth = filter_separable(image, &BINOMIAL5, 2);
    Ok(Plane::from_fn(w / 2, h / 2, |x, y| smooth.get(2 * x, 2 * y)))
}

/// `levels` planes, level 0 being `image` itself.
pub fn pyramid(image: &Plane, levels: usize) -> Result<Vec<Plane>> {
    let mut out = Vec::with_capacity(levels);
    out.push(image.clone());
    for _ in 1..levels {
        let next = downsample2(out.last().expect("non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

/// Bilinear resampling to `width × height` with pixel-center alignment.
pub fn upsample_bilinear(image: &Plane, width: usize, height: usize) -> Plane {
    let (w, h) = image.dims();
    let sx = w as f64 / width as f64;
    let sy = h as f64 / height as f64;
    Plane::from_fn(width, height, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let ax = fx - x0 as f64;
        let ay = fy - y0 as f64;
        let top = image.get(x0, y0) * (1.0 - ax) + image.get(x1, y0) * ax;
        let bottom = image.get(x0, y1) * (1.0 - ax) + image.get(x1, y1) * ax;
        top * (1.0 - ay) + bottom * ay
    })
}

pub fn median3x3(image: &Plane) -> Plane {
    Plane::from_fn(image.width(), image.height(), |x, y| {
        let mut win = [0.0; 9];
        let mut n = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                win[n] = image.get_clamped(x as isize + dx, y as isize + dy);
                n += 1;
            }
        }
        win.sort_by(f64::total_cmp);
        win[4]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| (x * 7 + y * 3) as f64 % 23.0)
    }

    #[test]
    fn identity_kernel_is_noop() {
        let img = ramp(9, 6);
        assert_eq!(convolve2d(&img, &Kernel2D::identity()).unwrap(), img);
    }

    #[test]
    fn sum_to_one_preserves_constants() {
        let img = Plane::filled(12, 10, 5.0);
        for k in [box_kernel(3).unwrap(), gaussian_kernel(7, 1.3).unwrap()] {
            let out = convolve2d(&img, &k).unwrap();
            assert!(out.data().iter().all(|v| (v - 5.0).abs() < 1e-12));
        }
    }

    #[test]
    fn box_center_of_three_by_three() {
        let img = Plane::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
        let out = convolve2d(&img, &box_kernel(3).unwrap()).unwrap();
        assert!((out.get(1, 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn separable_and_dense_paths_agree() {
        let img = ramp(17, 13);
        let k = gaussian_kernel(5, 1.1).unwrap();
        let dense = Kernel2D::new(5, k.taps().to_vec()).unwrap();
        let a = convolve2d(&img, &k).unwrap();
        let b = convolve2d(&img, &dense).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_larger_than_image() {
        let img = Plane::zeros(4, 8);
        assert!(matches!(
            convolve2d(&img, &box_kernel(5).unwrap()),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn gaussian_k1_and_flat_limit() {
        let k = gaussian_kernel(1, 2.0).unwrap();
        assert_eq!(k.taps(), &[1.0]);
        let flat = gaussian_kernel(3, 1e6).unwrap();
        assert!(flat.taps().iter().all(|t| (t - 1.0 / 9.0).abs() < 1e-9));
    }

    #[test]
    fn gaussian_size_four_matches_symbolic_taps() {
        let k = gaussian_kernel(4, 4.0).unwrap();
        // offsets ±0.5 and ±1.5: weights e^{-d²/32}
        let inner = (-0.25f64 / 32.0).exp();
        let outer = (-2.25f64 / 32.0).exp();
        let z = 2.0 * (inner + outer);
        let f = [outer / z, inner / z, inner / z, outer / z];
        for j in 0..4 {
            for i in 0..4 {
                assert!((k.tap(i, j) - f[i] * f[j]).abs() < 1e-15);
            }
        }
        assert_eq!(k.tap(1, 1), k.tap(2, 2));
        assert_eq!(k.tap(1, 2), k.tap(2, 1));
        assert!((k.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_rejects_bad_sigma() {
        assert!(matches!(gaussian_kernel(3, 0.0), Err(Error::Param(_))));
        assert!(matches!(gaussian_kernel(3, -1.0), Err(Error::Param(_))));
    }

    #[test]
    fn downsample_constant_and_shapes() {
        let img = Plane::filled(16, 16, 3.25);
        let half = downsample2(&img).unwrap();
        assert_eq!(half.dims(), (8, 8));
        assert!(half.data().iter().all(|v| (v - 3.25).abs() < 1e-12));
        let quarter = downsample2(&half).unwrap();
        assert_eq!(quarter.dims(), (4, 4));
        assert_eq!(downsample2(&Plane::zeros(7, 5)).unwrap().dims(), (3, 2));
        assert!(matches!(downsample2(&Plane::zeros(1, 5)), Err(Error::TooSmall(_))));
    }

    #[test]
    fn downsample_corner_matches_direct_convolution() {
        let mut img = Plane::filled(4, 4, 10.0);
        img.set(0, 0, 90.0);
        let out = downsample2(&img).unwrap();
        // brute force: 5x5 binomial at (0,0) with replicated borders
        let b = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mut acc = 0.0;
        for j in 0..5 {
            for i in 0..5 {
                let sx = (i as isize - 2).clamp(0, 3);
                let sy = (j as isize - 2).clamp(0, 3);
                acc += b[i] * b[j] / 256.0 * img.get_clamped(sx, sy);
            }
        }
        assert!((out.get(0, 0) - acc).abs() < 1e-12);
    }

    #[test]
    fn median_removes_isolated_speckle() {
        let mut img = Plane::filled(5, 5, 2.0);
        img.set(2, 2, 40.0);
        assert!(median3x3(&img).data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn bilinear_keeps_constants() {
        let up = upsample_bilinear(&Plane::filled(3, 2, 7.0), 12, 8);
        assert!(up.data().iter().all(|&v| (v - 7.0).abs() < 1e-12));
    }
}
