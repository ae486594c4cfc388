//! Per-frame processing: landmarks → blink → crop → pupil → (Kalman) →
//! gaze → events.

use std::time::Instant;

use base64::Engine as _;
use gazemouse_core::blink::{ear_sample, update_blink, BlinkEvent, BlinkState, EarSample, Phase};
use gazemouse_core::events::{synthesize, CursorEvent, EventState};
use gazemouse_core::gaze::{classify_direction, gaze_ratios, Direction, GazeRatios};
use gazemouse_core::imaging::{pgm, Centroid};
use gazemouse_core::landmarks::{crop, eye_landmarks, eye_region, EyeLandmarks, EyeRegion, LandmarkSet, Side};
use gazemouse_core::pupil::{kalman_predict_update, KalmanState, PupilDetection};
use gazemouse_core::{Exec, GrayImage};
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;

/// Everything carried from one frame to the next.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineState {
    pub blink: BlinkState,
    pub events: EventState,
    pub tracks: [Option<Track>; 2],
    pub last_frame: Option<u64>,
}

/// Smoothed pupil track of one eye, in frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub kalman: KalmanState,
    pub last_update: u64,
    pub misses: u32,
}

/// Classification thresholds in force for a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ear_threshold: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub v_up: f64,
    pub v_down: f64,
}

impl Thresholds {
    fn of(cfg: &EngineConfig) -> Self {
        Self {
            ear_threshold: cfg.blink.ear_threshold,
            h_left: cfg.gaze.h_left,
            h_right: cfg.gaze.h_right,
            v_up: cfg.gaze.v_up,
            v_down: cfg.gaze.v_down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_index: u64,
    pub ear: Option<EarSample>,
    pub blink_phase: Phase,
    pub blink: Option<BlinkEvent>,
    /// Raw per-eye detections in eye-region coordinates, image-left eye first.
    pub pupil: [Option<PupilDetection>; 2],
    /// Detections after smoothing; equal to `pupil` when smoothing is off.
    pub pupil_used: [Option<PupilDetection>; 2],
    pub ratios: Option<GazeRatios>,
    pub direction: Direction,
    pub events: Vec<CursorEvent>,
    pub thresholds: Thresholds,
    pub processing_micros: u64,
    /// Base64 PGM of the downscaled left-eye crop.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thumbnail: Option<String>,
    /// Reports not delivered to this client since its previous report.
    #[serde(default)]
    pub dropped: u64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOptions {
    pub thumbnail: bool,
    pub exec: Exec,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            thumbnail: false,
            exec: Exec::Sequential,
        }
    }
}

struct Eye {
    landmarks: EyeLandmarks,
    region: EyeRegion,
    image: GrayImage,
}

/// Processes one frame. Module errors are recorded in
/// `FrameReport::diagnostics`; a report is always produced.
pub fn process_frame(
    frame_index: u64,
    frame: &GrayImage,
    landmarks: Option<&LandmarkSet>,
    state: &PipelineState,
    cfg: &EngineConfig,
    opts: FrameOptions,
) -> (PipelineState, FrameReport) {
    let started = Instant::now();
    let mut next = state.clone();
    let mut diagnostics = Vec::new();
    let mut report = FrameReport {
        frame_index,
        ear: None,
        blink_phase: state.blink.phase,
        blink: None,
        pupil: [None; 2],
        pupil_used: [None; 2],
        ratios: None,
        direction: Direction::Invalid,
        events: Vec::new(),
        thresholds: Thresholds::of(cfg),
        processing_micros: 0,
        thumbnail: None,
        dropped: 0,
        diagnostics: Vec::new(),
    };
    if state.last_frame.is_some_and(|last| frame_index <= last) {
        report.diagnostics.push(format!(
            "frame {frame_index} does not follow {}; skipped",
            state.last_frame.unwrap()
        ));
        report.processing_micros = started.elapsed().as_micros() as u64;
        return (next, report);
    }
    next.last_frame = Some(frame_index);

    let mut blink_event = None;
    if let Some(ls) = landmarks {
        match ear_sample(ls, frame_index).and_then(|s| Ok((s, update_blink(&state.blink, &s, &cfg.blink)?))) {
            Ok((sample, (bs, ev))) => {
                report.ear = Some(sample);
                next.blink = bs;
                blink_event = ev;
            }
            Err(e) => diagnostics.push(format!("blink: {e}")),
        }
        report.blink_phase = next.blink.phase;
        report.blink = blink_event;

        let eyes: Vec<Option<Eye>> = Side::BOTH
            .iter()
            .map(|&side| {
                let landmarks = eye_landmarks(ls, side);
                let eye = eye_region(&landmarks, cfg.eye_margin, frame.width(), frame.height())
                    .and_then(|region| Ok((crop(frame, &region)?, region)));
                match eye {
                    Ok((image, region)) => Some(Eye { landmarks, region, image }),
                    Err(e) => {
                        diagnostics.push(format!("crop {side:?}: {e}"));
                        None
                    }
                }
            })
            .collect();

        let detector = cfg.detector();
        let found = opts.exec.map_range(2, |k| {
            eyes[k].as_ref().map(|e| detector.detect(&e.image)).transpose()
        });
        for (k, r) in found.into_iter().enumerate() {
            match r {
                Ok(d) => report.pupil[k] = d.flatten().map(|d| d.with_frame(frame_index)),
                Err(e) => diagnostics.push(format!("pupil {:?}: {e}", Side::BOTH[k])),
            }
        }

        report.pupil_used = report.pupil;
        if cfg.smoothing_enabled {
            for k in 0..2 {
                let region = eyes[k].as_ref().map(|e| e.region);
                let (track, used) = smooth(&state.tracks[k], report.pupil[k], region, frame_index, cfg);
                match track {
                    Ok(t) => {
                        next.tracks[k] = t;
                        report.pupil_used[k] = used;
                    }
                    Err(e) => {
                        diagnostics.push(format!("kalman {:?}: {e}", Side::BOTH[k]));
                        next.tracks[k] = None;
                    }
                }
            }
        } else {
            next.tracks = [None, None];
        }

        if let [Some(l), Some(r)] = eyes.as_slice() {
            let dets = [report.pupil_used[0].as_ref(), report.pupil_used[1].as_ref()];
            match gaze_ratios(dets, [&l.landmarks, &r.landmarks], [&l.region, &r.region]) {
                Ok(g) => report.ratios = g.map(|g| GazeRatios { frame_index, ..g }),
                Err(e) => diagnostics.push(format!("gaze: {e}")),
            }
        } else if let Some((k, e)) = eyes.iter().enumerate().find_map(|(k, e)| e.as_ref().map(|e| (k, e))) {
            // One eye cropped: use it for both slots, the other detection is absent.
            let mut dets = [None, None];
            dets[k] = report.pupil_used[k].as_ref();
            match gaze_ratios(dets, [&e.landmarks; 2], [&e.region; 2]) {
                Ok(g) => report.ratios = g.map(|g| GazeRatios { frame_index, ..g }),
                Err(e) => diagnostics.push(format!("gaze: {e}")),
            }
        }
        report.direction = classify_direction(report.ratios.as_ref(), next.blink.phase, &cfg.gaze);

        if opts.thumbnail {
            if let Some(e) = eyes.iter().flatten().next() {
                let small = e.image.downscale(cfg.thumbnail_scale);
                report.thumbnail = Some(base64::engine::general_purpose::STANDARD.encode(pgm::encode(&small)));
            }
        }
    }

    match synthesize(&state.events, report.direction, blink_event.as_ref(), frame_index, &cfg.events) {
        Ok((es, events)) => {
            next.events = es;
            report.events = events;
        }
        Err(e) => diagnostics.push(format!("events: {e}")),
    }
    report.diagnostics = diagnostics;
    report.processing_micros = started.elapsed().as_micros() as u64;
    (next, report)
}

type Smoothed = (gazemouse_core::Result<Option<Track>>, Option<PupilDetection>);

fn smooth(
    track: &Option<Track>,
    raw: Option<PupilDetection>,
    region: Option<EyeRegion>,
    frame_index: u64,
    cfg: &EngineConfig,
) -> Smoothed {
    let k = &cfg.kalman;
    let Some(region) = region else {
        return (Ok(None), None);
    };
    let to_frame = |c: Centroid| Centroid {
        cx: c.cx + region.x0 as f64,
        cy: c.cy + region.y0 as f64,
    };
    let to_eye = |c: Centroid| Centroid {
        cx: c.cx - region.x0 as f64,
        cy: c.cy - region.y0 as f64,
    };
    let measurement = raw.map(|d| to_frame(d.center));
    let template = raw.or(track.as_ref().map(|_| PupilDetection {
        center: Centroid { cx: 0.0, cy: 0.0 },
        area: 0.0,
        method: match cfg.detector {
            crate::config::DetectorChoice::Threshold => gazemouse_core::pupil::Method::Threshold,
            crate::config::DetectorChoice::Hough => gazemouse_core::pupil::Method::Hough,
        },
        frame_index,
    }));
    let next = match (track, measurement) {
        (None, None) => return (Ok(None), None),
        (None, Some(z)) => Track {
            kalman: KalmanState::new(z, k.process_noise, k.measurement_noise, k.velocity_variance),
            last_update: frame_index,
            misses: 0,
        },
        (Some(t), z) => {
            if z.is_none() && t.misses >= k.hold_frames {
                return (Ok(None), None);
            }
            let dt = (frame_index - t.last_update) as f64;
            match kalman_predict_update(&t.kalman, z, dt) {
                Ok(kalman) => Track {
                    kalman,
                    last_update: frame_index,
                    misses: if z.is_some() { 0 } else { t.misses + 1 },
                },
                Err(e) => return (Err(e), raw),
            }
        }
    };
    let used = template.map(|d| PupilDetection {
        center: to_eye(next.kalman.position()),
        ..d
    });
    (Ok(Some(next)), used)
}

/// Owns the per-frame state and the live configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: EngineConfig,
    pub state: PipelineState,
    pub options: FrameOptions,
}

impl Pipeline {
    pub fn new(config: EngineConfig) -> Self {
        Self {
            config,
            state: PipelineState::default(),
            options: FrameOptions::default(),
        }
    }

    pub fn process(&mut self, frame_index: u64, frame: &GrayImage, landmarks: Option<&LandmarkSet>) -> FrameReport {
        let (state, report) = process_frame(frame_index, frame, landmarks, &self.state, &self.config, self.options);
        self.state = state;
        report
    }
}
