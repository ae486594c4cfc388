use super::GrayImage;
use crate::error::{Error, Result};
use crate::Exec;

/// Edge-preserving smoothing with Gaussian space and range kernels.
///
/// Each output pixel is `Σ w·I / Σ w` over the `diameter × diameter` window
/// centred on it, with `w = exp(-d²/2σs²) · exp(-ΔI²/2σc²)`. Out-of-image
/// window cells are skipped and the weights renormalised over the rest.
/// The mean is rounded to the nearest intensity.
pub fn bilateral_filter(
    img: &GrayImage,
    diameter: usize,
    sigma_color: f64,
    sigma_space: f64,
) -> Result<GrayImage> {
    bilateral_filter_with(img, diameter, sigma_color, sigma_space, Exec::default())
}

pub fn bilateral_filter_with(
    img: &GrayImage,
    diameter: usize,
    sigma_color: f64,
    sigma_space: f64,
    exec: Exec,
) -> Result<GrayImage> {
    if diameter == 0 || diameter.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "bilateral diameter must be odd and positive, got {diameter}"
        )));
    }
    if !(sigma_color > 0.0 && sigma_space > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bilateral sigmas must be positive, got color={sigma_color} space={sigma_space}"
        )));
    }

    let radius = (diameter / 2) as isize;
    let side = diameter;
    let mut space = vec![0.0f64; side * side];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f64;
            space[((dy + radius) as usize) * side + (dx + radius) as usize] =
                (-d2 / (2.0 * sigma_space * sigma_space)).exp();
        }
    }
    let mut range = [0.0f64; 256];
    for (d, w) in range.iter_mut().enumerate() {
        let d2 = (d * d) as f64;
        *w = (-d2 / (2.0 * sigma_color * sigma_color)).exp();
    }

    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let mut out = vec![0u8; w * h];
    exec.for_each_chunk(&mut out, w, |y, row| {
        let y = y as isize;
        let y_lo = (y - radius).max(0);
        let y_hi = (y + radius).min(h as isize - 1);
        for (x, px) in row.iter_mut().enumerate() {
            let x = x as isize;
            let x_lo = (x - radius).max(0);
            let x_hi = (x + radius).min(w as isize - 1);
            let center = src[y as usize * w + x as usize];
            let mut num = 0.0;
            let mut den = 0.0;
            for yy in y_lo..=y_hi {
                let srow = &src[yy as usize * w..(yy as usize + 1) * w];
                let krow = &space[((yy - y + radius) as usize) * side..];
                for xx in x_lo..=x_hi {
                    let v = srow[xx as usize];
                    let wt = krow[(xx - x + radius) as usize] * range[center.abs_diff(v) as usize];
                    num += wt * f64::from(v);
                    den += wt;
                }
            }
            *px = (num / den).round().clamp(0.0, 255.0) as u8;
        }
    });
    GrayImage::new(w, h, out)
}
