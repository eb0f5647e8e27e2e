use crate::error::{Error, Result};
use crate::plane::Plane;

use super::filter::{convolve2d, Kernel2D};

/// Windowed first and second moments of a pair of images.
#[derive(Clone, Debug)]
pub struct LocalStats {
    pub mu_x: Plane,
    pub mu_y: Plane,
    pub var_x: Plane,
    pub var_y: Plane,
    pub cov_xy: Plane,
}

/// Weighted local means, variances (clamped at zero) and covariance.
pub fn local_stats(x: &Plane, y: &Plane, window: &Kernel2D) -> Result<LocalStats> {
    x.ensure_same_dims(y, "local_stats")?;
    if !window.is_normalized() {
        return Err(Error::Param("local_stats window must sum to one".into()));
    }
    let mu_x = convolve2d(x, window)?;
    let mu_y = convolve2d(y, window)?;
    let exx = convolve2d(&x.zip_map(x, |a, b| a * b), window)?;
    let eyy = convolve2d(&y.zip_map(y, |a, b| a * b), window)?;
    let exy = convolve2d(&x.zip_map(y, |a, b| a * b), window)?;

    let var_x = exx.zip_map(&mu_x, |e, m| (e - m * m).max(0.0));
    let var_y = eyy.zip_map(&mu_y, |e, m| (e - m * m).max(0.0));
    let mut cov_xy = exy.clone();
    for ((c, mx), my) in cov_xy
        .data_mut()
        .iter_mut()
        .zip(mu_x.data())
        .zip(mu_y.data())
    {
        *c -= mx * my;
    }
    Ok(LocalStats {
        mu_x,
        mu_y,
        var_x,
        var_y,
        cov_xy,
    })
}

#[derive(Clone, Debug)]
pub struct Gradient {
    pub gx: Plane,
    pub gy: Plane,
    pub magnitude: Plane,
}

/// 3×3 Sobel operator with replicated borders.
///
/// `gx` responds to intensity increasing to the right, `gy` downward.
pub fn sobel_gradient(image: &Plane) -> Result<Gradient> {
    let (w, h) = image.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!("sobel needs >= 3x3, got {w}x{h}")));
    }
    let mut gx = Plane::zeros(w, h);
    let mut gy = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| image.get_clamped(x as isize + dx, y as isize + dy);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx.set(x, y, sx);
            gy.set(x, y, sy);
        }
    }
    let magnitude = gx.zip_map(&gy, |a, b| a.hypot(b));
    Ok(Gradient { gx, gy, magnitude })
}
