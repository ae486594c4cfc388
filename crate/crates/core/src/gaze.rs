//! Gaze ratios from pupil centres and eye landmarks, and the direction
//! classifier.
//!
//! `h` is the pupil's position along the corner axis (0 at `p1`, 1 at `p4`),
//! `v` its position across the lids (0 at the upper lid, 1 at the lower
//! lid, 0.5 on the lid midline), normalised by the aperture measured
//! between the lid midpoints. Both are dimensionless, so they are unaffected
//! by head distance and in-plane head roll.

use serde::{Deserialize, Serialize};

use crate::blink::Phase;
use crate::error::{Error, Result};
use crate::landmarks::{EyeLandmarks, EyeRegion};
use crate::pupil::PupilDetection;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeRatios {
    pub h: f64,
    pub v: f64,
    /// Per-eye `(h, v)`, image-left eye first.
    pub per_eye: [Option<(f64, f64)>; 2],
    pub frame_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeConfig {
    pub h_left: f64,
    pub h_right: f64,
    pub v_up: f64,
    pub v_down: f64,
}

impl Default for GazeConfig {
    fn default() -> Self {
        Self {
            h_left: 0.35,
            h_right: 0.65,
            v_up: 0.35,
            v_down: 0.65,
        }
    }
}

impl GazeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_left < self.h_right) {
            return Err(Error::InvalidParameter("gaze requires h_left < h_right".into()));
        }
        if !(self.v_up < self.v_down) {
            return Err(Error::InvalidParameter("gaze requires v_up < v_down".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Center,
    Left,
    Right,
    Up,
    Down,
    Invalid,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::Center,
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
        Direction::Invalid,
    ];
}

/// `(h, v)` of a frame-space point within one eye, unclamped.
pub fn eye_ratios(center: Point, eye: &EyeLandmarks) -> Result<(f64, f64)> {
    let axis = eye.p4.sub(eye.p1);
    let span = axis.norm();
    if span <= 0.0 {
        return Err(Error::DegenerateGeometry("eye corners coincide"));
    }
    let unit = axis.scale(1.0 / span);
    let normal = Point::new(-unit.y, unit.x);
    let upper = eye.p2.midpoint(eye.p3);
    let lower = eye.p6.midpoint(eye.p5);
    let aperture = upper.dist(lower);
    if aperture <= 0.0 {
        return Err(Error::DegenerateGeometry("eyelids closed: zero aperture"));
    }
    let midline = upper.midpoint(lower);
    let h = center.sub(eye.p1).dot(unit) / span;
    let v = 0.5 + center.sub(midline).dot(normal) / aperture;
    Ok((h, v))
}

/// Combines per-eye detections (eye-region coordinates) into gaze ratios.
/// `None` when neither eye has a detection.
pub fn gaze_ratios(
    detections: [Option<&PupilDetection>; 2],
    eyes: [&EyeLandmarks; 2],
    regions: [&EyeRegion; 2],
) -> Result<Option<GazeRatios>> {
    let mut per_eye = [None; 2];
    let mut frame_index = 0;
    for k in 0..2 {
        let Some(det) = detections[k] else { continue };
        frame_index = det.frame_index;
        let center = Point::new(
            det.center.cx + regions[k].x0 as f64,
            det.center.cy + regions[k].y0 as f64,
        );
        let (h, v) = eye_ratios(center, eyes[k])?;
        per_eye[k] = Some((h.clamp(0.0, 1.0), v.clamp(0.0, 1.0)));
    }
    let present: Vec<(f64, f64)> = per_eye.iter().flatten().copied().collect();
    if present.is_empty() {
        return Ok(None);
    }
    let n = present.len() as f64;
    Ok(Some(GazeRatios {
        h: present.iter().map(|r| r.0).sum::<f64>() / n,
        v: present.iter().map(|r| r.1).sum::<f64>() / n,
        per_eye,
        frame_index,
    }))
}

/// Thresholds the ratios; horizontal decisions take precedence over
/// vertical ones.
pub fn classify_direction(ratios: Option<&GazeRatios>, blink_phase: Phase, cfg: &GazeConfig) -> Direction {
    let Some(r) = ratios else {
        return Direction::Invalid;
    };
    if blink_phase == Phase::Closed {
        return Direction::Invalid;
    }
    if r.h < cfg.h_left {
        Direction::Left
    } else if r.h > cfg.h_right {
        Direction::Right
    } else if r.v < cfg.v_up {
        Direction::Up
    } else if r.v > cfg.v_down {
        Direction::Down
    } else {
        Direction::Center
    }
}
