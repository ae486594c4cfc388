use serde::{Deserialize, Serialize};

use super::{Method, PupilDetection};
use crate::error::{Error, Result};
use crate::imaging::{Centroid, GrayImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughConfig {
    pub r_min: usize,
    pub r_max: usize,
    /// Minimum Sobel magnitude for a pixel to vote.
    pub gradient_threshold: f64,
    pub accumulator_min_votes: u32,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            r_min: 3,
            r_max: 7,
            gradient_threshold: 100.0,
            accumulator_min_votes: 10,
        }
    }
}

impl HoughConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 || self.r_min > self.r_max {
            return Err(Error::InvalidParameter("hough needs 1 ≤ r_min ≤ r_max".into()));
        }
        if !(self.gradient_threshold >= 0.0) {
            return Err(Error::InvalidParameter("hough.gradient_threshold must be ≥ 0".into()));
        }
        Ok(())
    }
}

fn sobel(img: &GrayImage, x: usize, y: usize) -> (f64, f64) {
    let p = |dx: isize, dy: isize| {
        f64::from(img.get((x as isize + dx) as usize, (y as isize + dy) as usize))
    };
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx, gy)
}

fn neighbourhood_sum(layer: &[u32], w: usize, h: usize, x: usize, y: usize) -> u32 {
    let mut sum = 0;
    for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            sum += layer[yy * w + xx];
        }
    }
    sum
}

/// Circular Hough transform driven by Sobel gradients.
///
/// Every edge pixel votes at distance `r` along both gradient directions for
/// each radius in `[r_min, r_max]`. Cells are ranked by votes per unit
/// radius, since a circle's edge supplies votes in proportion to its
/// circumference; the winner must hold `accumulator_min_votes` votes in its
/// 3×3 neighbourhood. The centre is refined to the vote-weighted mean of
/// that neighbourhood.
pub fn detect_pupil_hough(
    eye_img: &GrayImage,
    cfg: &HoughConfig,
) -> Result<Option<PupilDetection>> {
    cfg.validate()?;
    let (w, h) = (eye_img.width(), eye_img.height());
    let min_side = 2 * cfg.r_max + 1;
    if w < min_side || h < min_side {
        return Err(Error::InvalidParameter(format!(
            "hough needs an image of at least {min_side}x{min_side}, got {w}x{h}"
        )));
    }

    let radii = cfg.r_max - cfg.r_min + 1;
    let plane = w * h;
    let mut acc = vec![0u32; radii * plane];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = sobel(eye_img, x, y);
            let mag = gx.hypot(gy);
            if mag <= cfg.gradient_threshold {
                continue;
            }
            let (ux, uy) = (gx / mag, gy / mag);
            for (ri, r) in (cfg.r_min..=cfg.r_max).enumerate() {
                let r = r as f64;
                for sign in [-1.0, 1.0] {
                    let cx = (x as f64 + sign * r * ux).round();
                    let cy = (y as f64 + sign * r * uy).round();
                    if cx >= 0.0 && cy >= 0.0 && (cx as usize) < w && (cy as usize) < h {
                        acc[ri * plane + cy as usize * w + cx as usize] += 1;
                    }
                }
            }
        }
    }

    // Rounding spreads a circle's votes over neighbouring cells, so cells
    // compete on their 3×3 vote sums.
    let mut best: Option<(usize, usize, f64)> = None;
    for ri in 0..radii {
        let r = (cfg.r_min + ri) as f64;
        let layer = &acc[ri * plane..(ri + 1) * plane];
        for y in 0..h {
            for x in 0..w {
                let votes = neighbourhood_sum(layer, w, h, x, y);
                if votes < cfg.accumulator_min_votes {
                    continue;
                }
                let score = f64::from(votes) / r;
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((ri, y * w + x, score));
                }
            }
        }
    }
    let Some((ri, idx, _)) = best else {
        return Ok(None);
    };

    let (bx, by) = (idx % w, idx / w);
    let layer = &acc[ri * plane..(ri + 1) * plane];
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in by.saturating_sub(1)..=(by + 1).min(h - 1) {
        for x in bx.saturating_sub(1)..=(bx + 1).min(w - 1) {
            let v = f64::from(layer[y * w + x]);
            sx += v * x as f64;
            sy += v * y as f64;
            sw += v;
        }
    }
    let r = (cfg.r_min + ri) as f64;
    Ok(Some(PupilDetection {
        center: Centroid {
            cx: sx / sw,
            cy: sy / sw,
        },
        area: std::f64::consts::PI * r * r,
        method: Method::Hough,
        frame_index: 0,
    }))
}
