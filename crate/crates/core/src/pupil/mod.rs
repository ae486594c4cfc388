//! Pupil localisation inside a cropped eye image.
//!
//! Two detectors share one output type: the threshold chain (bilateral →
//! erode → inverted threshold → contours → largest plausible blob →
//! centroid) and a gradient-voting circular Hough transform. A constant
//! velocity Kalman filter can smooth the resulting centre track.

mod hough;
mod kalman;
mod threshold;

use serde::{Deserialize, Serialize};

pub use hough::{detect_pupil_hough, HoughConfig};
pub use kalman::{kalman_predict_update, KalmanState};
pub use threshold::{detect_pupil_threshold, PupilConfig};

use crate::error::Result;
use crate::imaging::{Centroid, GrayImage};
use crate::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Threshold,
    Hough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupilDetection {
    /// Centre in eye-image coordinates.
    pub center: Centroid,
    /// Blob pixel count (threshold) or `πr²` of the winning circle (Hough).
    pub area: f64,
    pub method: Method,
    pub frame_index: u64,
}

impl PupilDetection {
    pub fn with_frame(mut self, frame_index: u64) -> Self {
        self.frame_index = frame_index;
        self
    }

    /// Radius of the disk with this detection's area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area / std::f64::consts::PI).sqrt()
    }
}

/// Which detector a batch run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Threshold(PupilConfig),
    Hough(HoughConfig),
}

impl Detector {
    pub fn detect(&self, eye: &GrayImage) -> Result<Option<PupilDetection>> {
        match self {
            Detector::Threshold(cfg) => detect_pupil_threshold_with(eye, cfg, Exec::Sequential),
            Detector::Hough(cfg) => detect_pupil_hough(eye, cfg),
        }
    }
}

/// Runs one detector over many eye images; results keep input order.
///
/// Parallelism is across images, so each image's filters run sequentially.
pub fn detect_batch(
    eyes: &[GrayImage],
    detector: &Detector,
    exec: Exec,
) -> Result<Vec<Option<PupilDetection>>> {
    exec.map_range(eyes.len(), |i| detector.detect(&eyes[i]))
        .into_iter()
        .collect()
}

pub use threshold::detect_pupil_threshold_with;
