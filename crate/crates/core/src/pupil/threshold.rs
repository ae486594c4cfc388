use serde::{Deserialize, Serialize};

use super::{Method, PupilDetection};
use crate::error::{Error, Result};
use crate::imaging::{
    bilateral_filter_with, centroid_of, erode_with, find_contours, threshold_binary, GrayImage,
};
use crate::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PupilConfig {
    pub bilateral_diameter: usize,
    pub bilateral_sigma_color: f64,
    pub bilateral_sigma_space: f64,
    pub erode_radius: usize,
    pub erode_iterations: usize,
    /// Inverted: pixels at or below this value are pupil candidates.
    pub threshold: u8,
    pub min_area_frac: f64,
    pub max_area_frac: f64,
}

impl Default for PupilConfig {
    fn default() -> Self {
        Self {
            bilateral_diameter: 7,
            bilateral_sigma_color: 40.0,
            bilateral_sigma_space: 3.0,
            erode_radius: 1,
            erode_iterations: 2,
            threshold: 40,
            min_area_frac: 0.01,
            max_area_frac: 0.5,
        }
    }
}

impl PupilConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bilateral_diameter == 0 || self.bilateral_diameter.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "pupil.bilateral_diameter must be odd".into(),
            ));
        }
        if !(self.bilateral_sigma_color > 0.0 && self.bilateral_sigma_space > 0.0) {
            return Err(Error::InvalidParameter("pupil bilateral sigmas must be > 0".into()));
        }
        if self.erode_radius < 1 || self.erode_iterations < 1 {
            return Err(Error::InvalidParameter(
                "pupil erode radius and iterations must be ≥ 1".into(),
            ));
        }
        if !(0.0 < self.min_area_frac
            && self.min_area_frac < self.max_area_frac
            && self.max_area_frac <= 1.0)
        {
            return Err(Error::InvalidParameter(
                "pupil area fractions need 0 < min < max ≤ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Filter-chain pupil detector. `None` when no dark blob of plausible size
/// survives (closed eye, or nothing below threshold).
pub fn detect_pupil_threshold(
    eye_img: &GrayImage,
    cfg: &PupilConfig,
) -> Result<Option<PupilDetection>> {
    detect_pupil_threshold_with(eye_img, cfg, Exec::default())
}

pub fn detect_pupil_threshold_with(
    eye_img: &GrayImage,
    cfg: &PupilConfig,
    exec: Exec,
) -> Result<Option<PupilDetection>> {
    cfg.validate()?;
    let smoothed = bilateral_filter_with(
        eye_img,
        cfg.bilateral_diameter,
        cfg.bilateral_sigma_color,
        cfg.bilateral_sigma_space,
        exec,
    )?;
    let eroded = erode_with(&smoothed, cfg.erode_radius, cfg.erode_iterations, exec);
    let mask = threshold_binary(&eroded, cfg.threshold, true);

    let total = (eye_img.width() * eye_img.height()) as f64;
    let best = find_contours(&mask)
        .into_iter()
        .filter(|c| {
            let frac = c.component_pixels as f64 / total;
            frac >= cfg.min_area_frac && frac <= cfg.max_area_frac
        })
        // First of equal-sized blobs wins, keeping the choice deterministic.
        .reduce(|a, b| if b.component_pixels > a.component_pixels { b } else { a });

    let Some(contour) = best else {
        return Ok(None);
    };
    let center = centroid_of(&mask, &contour)?;
    Ok(Some(PupilDetection {
        center,
        area: contour.component_pixels as f64,
        method: Method::Threshold,
        frame_index: 0,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bright_image_has_no_pupil() {
        let img = GrayImage::filled(40, 20, 200);
        assert!(detect_pupil_threshold(&img, &PupilConfig::default()).unwrap().is_none());
    }

    #[test]
    fn dark_disk_is_found() {
        let img = GrayImage::from_fn(60, 40, |x, y| {
            let (dx, dy) = (x as f64 - 31.0, y as f64 - 17.0);
            if dx * dx + dy * dy <= 25.0 {
                10
            } else {
                180
            }
        });
        let d = detect_pupil_threshold(&img, &PupilConfig::default()).unwrap().unwrap();
        assert!((d.center.cx - 31.0).abs() < 1e-9 && (d.center.cy - 17.0).abs() < 1e-9);
        assert_eq!(d.method, Method::Threshold);
    }

    #[test]
    fn oversized_blob_rejected() {
        let img = GrayImage::from_fn(20, 20, |x, _| if x < 15 { 5 } else { 200 });
        assert!(detect_pupil_threshold(&img, &PupilConfig::default()).unwrap().is_none());
    }

    #[test]
    fn invalid_config_rejected() {
        let img = GrayImage::filled(10, 10, 0);
        let cfg = PupilConfig {
            min_area_frac: 0.6,
            ..Default::default()
        };
        assert!(detect_pupil_threshold(&img, &cfg).is_err());
    }
}
