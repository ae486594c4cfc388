//! Eye aspect ratio and the debounced blink state machine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{eye_landmarks, EyeLandmarks, LandmarkSet, Side};

/// `(‖p2−p6‖ + ‖p3−p5‖) / (2·‖p1−p4‖)`; falls to 0 as the lids close.
pub fn eye_aspect_ratio(eye: &EyeLandmarks) -> Result<f64> {
    let horizontal = eye.p1.dist(eye.p4);
    if horizontal <= 0.0 || !horizontal.is_finite() {
        return Err(Error::DegenerateGeometry("eye corners coincide"));
    }
    Ok((eye.p2.dist(eye.p6) + eye.p3.dist(eye.p5)) / (2.0 * horizontal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarSample {
    pub left: f64,
    pub right: f64,
    pub mean: f64,
    pub frame_index: u64,
}

impl EarSample {
    pub fn new(left: f64, right: f64, frame_index: u64) -> Self {
        Self {
            left,
            right,
            mean: (left + right) / 2.0,
            frame_index,
        }
    }
}

pub fn ear_sample(ls: &LandmarkSet, frame_index: u64) -> Result<EarSample> {
    let left = eye_aspect_ratio(&eye_landmarks(ls, Side::Left))?;
    let right = eye_aspect_ratio(&eye_landmarks(ls, Side::Right))?;
    Ok(EarSample::new(left, right, frame_index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlinkConfig {
    pub ear_threshold: f64,
    pub min_frames: u32,
    pub max_click_frames: u32,
}

impl Default for BlinkConfig {
    fn default() -> Self {
        Self {
            ear_threshold: 0.21,
            min_frames: 2,
            max_click_frames: 12,
        }
    }
}

impl BlinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ear_threshold.is_finite() && self.ear_threshold >= 0.0) {
            return Err(Error::InvalidParameter("blink.ear_threshold must be ≥ 0".into()));
        }
        if self.min_frames < 1 || self.min_frames > self.max_click_frames {
            return Err(Error::InvalidParameter(
                "blink requires 1 ≤ min_frames ≤ max_click_frames".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkState {
    pub phase: Phase,
    pub closed_run: u32,
    pub closed_since: u64,
    pub last_event_frame: Option<u64>,
    pub last_frame: Option<u64>,
}

impl Default for BlinkState {
    fn default() -> Self {
        Self {
            phase: Phase::Open,
            closed_run: 0,
            closed_since: 0,
            last_event_frame: None,
            last_frame: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BlinkKind {
    ShortBlink,
    LongClose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub start_frame: u64,
    pub end_frame: u64,
    pub duration_frames: u64,
    pub kind: BlinkKind,
}

/// Advances the blink machine by one sample.
///
/// A frame is closed when the mean EAR is below the threshold. Events fire
/// on reopening, only for runs of at least `min_frames`; runs of up to
/// `max_click_frames` are short blinks, longer ones are long closures.
pub fn update_blink(
    state: &BlinkState,
    sample: &EarSample,
    cfg: &BlinkConfig,
) -> Result<(BlinkState, Option<BlinkEvent>)> {
    let frame = sample.frame_index;
    if state.last_frame.is_some_and(|last| frame <= last) {
        return Err(Error::Contract(format!(
            "blink frame {frame} does not follow {}",
            state.last_frame.unwrap()
        )));
    }
    let mut next = state.clone();
    next.last_frame = Some(frame);
    let closed = sample.mean < cfg.ear_threshold;
    let mut event = None;
    match (state.phase, closed) {
        (Phase::Open, true) => {
            next.phase = Phase::Closed;
            next.closed_run = 1;
            next.closed_since = frame;
        }
        (Phase::Closed, true) => next.closed_run += 1,
        (Phase::Closed, false) => {
            if state.closed_run >= cfg.min_frames {
                let kind = if state.closed_run <= cfg.max_click_frames {
                    BlinkKind::ShortBlink
                } else {
                    BlinkKind::LongClose
                };
                event = Some(BlinkEvent {
                    start_frame: state.closed_since,
                    end_frame: frame,
                    duration_frames: frame - state.closed_since,
                    kind,
                });
                next.last_event_frame = Some(frame);
            }
            next.phase = Phase::Open;
            next.closed_run = 0;
        }
        (Phase::Open, false) => {}
    }
    Ok((next, event))
}
