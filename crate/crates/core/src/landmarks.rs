//! 68-point facial landmarks, per-eye extraction, eye cropping and the
//! landmark trace file provider.
//!
//! Eye points follow the usual 68-point template: indices 36..=41 outline the
//! image-left eye and 42..=47 the image-right eye, each starting at the
//! image-left corner and running over the upper lid then back along the
//! lower lid.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::Point;

pub const LANDMARK_COUNT: usize = 68;
const LEFT_EYE_START: usize = 36;
const RIGHT_EYE_START: usize = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub frame_index: u64,
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(frame_index: u64, points: Vec<Point>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::Schema {
                line: 0,
                detail: format!("expected {LANDMARK_COUNT} points, got {}", points.len()),
            });
        }
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidParameter("non-finite landmark".into()));
        }
        Ok(Self {
            frame_index,
            points,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }
}

/// Image-coordinate side: `Left` is the eye with the smaller x in a
/// non-mirrored frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }
}

/// The six points of one eye. `p1`/`p4` are the corners, `p2`,`p3` the upper
/// lid and `p6`,`p5` the lower lid (`p6` below `p2`, `p5` below `p3`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeLandmarks {
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
    pub p4: Point,
    pub p5: Point,
    pub p6: Point,
    pub side: Side,
}

impl EyeLandmarks {
    pub fn points(&self) -> [Point; 6] {
        [self.p1, self.p2, self.p3, self.p4, self.p5, self.p6]
    }
}

pub fn eye_landmarks(ls: &LandmarkSet, side: Side) -> EyeLandmarks {
    let start = match side {
        Side::Left => LEFT_EYE_START,
        Side::Right => RIGHT_EYE_START,
    };
    let p = &ls.points[start..start + 6];
    EyeLandmarks {
        p1: p[0],
        p2: p[1],
        p3: p[2],
        p4: p[3],
        p5: p[4],
        p6: p[5],
        side,
    }
}

/// Half-open integer pixel box `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EyeRegion {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl EyeRegion {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }
}

/// Bounding box of the six eye points grown by `margin`.
///
/// Rounding is outward: `x0 = floor(min) - margin`, `x1 = ceil(max) + margin + 1`
/// (exclusive), likewise for y, then clipped to the frame.
pub fn eye_region(
    eye: &EyeLandmarks,
    margin: usize,
    frame_w: usize,
    frame_h: usize,
) -> Result<EyeRegion> {
    let pts = eye.points();
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let m = margin as f64;
    let clip = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as usize;
    let region = EyeRegion {
        x0: clip(min_x.floor() - m, frame_w),
        y0: clip(min_y.floor() - m, frame_h),
        x1: clip(max_x.ceil() + m + 1.0, frame_w),
        y1: clip(max_y.ceil() + m + 1.0, frame_h),
    };
    if region.x0 >= region.x1 || region.y0 >= region.y1 {
        return Err(Error::DegenerateGeometry("eye region has zero area"));
    }
    Ok(region)
}

pub fn crop(img: &GrayImage, region: &EyeRegion) -> Result<GrayImage> {
    if region.x0 >= region.x1
        || region.y0 >= region.y1
        || region.x1 > img.width()
        || region.y1 > img.height()
    {
        return Err(Error::OutOfBounds {
            region: (region.x0, region.y0, region.x1, region.y1),
            width: img.width(),
            height: img.height(),
        });
    }
    let mut data = Vec::with_capacity(region.area());
    for y in region.y0..region.y1 {
        data.extend_from_slice(&img.row(y)[region.x0..region.x1]);
    }
    GrayImage::new(region.width(), region.height(), data)
}

/// Per-frame landmark source. `None` means no face was found that frame,
/// which is an ordinary outcome rather than an error.
pub trait LandmarkProvider {
    fn next(&mut self, frame_index: u64) -> Option<LandmarkSet>;
}

/// Landmarks loaded from a JSON Lines trace:
/// `{"frame": n, "points": [[x, y], ...68 pairs]}` per line.
#[derive(Debug, Clone, Default)]
pub struct TraceProvider {
    frames: BTreeMap<u64, LandmarkSet>,
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    frame: u64,
    points: Vec<[f64; 2]>,
}

impl TraceProvider {
    pub fn from_sets(sets: impl IntoIterator<Item = LandmarkSet>) -> Self {
        Self {
            frames: sets.into_iter().map(|s| (s.frame_index, s)).collect(),
        }
    }

    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut frames = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                detail: e.to_string(),
            })?;
            if rec.points.len() != LANDMARK_COUNT {
                return Err(Error::Schema {
                    line: line_no,
                    detail: format!(
                        "expected {LANDMARK_COUNT} points, got {}",
                        rec.points.len()
                    ),
                });
            }
            let points = rec.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
            let set = LandmarkSet::new(rec.frame, points).map_err(|e| Error::Schema {
                line: line_no,
                detail: e.to_string(),
            })?;
            frames.insert(rec.frame, set);
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn sets(&self) -> impl Iterator<Item = &LandmarkSet> {
        self.frames.values()
    }
}

impl LandmarkProvider for TraceProvider {
    fn next(&mut self, frame_index: u64) -> Option<LandmarkSet> {
        self.frames.get(&frame_index).cloned()
    }
}

pub fn load_landmark_trace(path: impl AsRef<Path>) -> Result<TraceProvider> {
    let path = path.as_ref();
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    TraceProvider::parse(BufReader::new(f))
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Serialises sets as trace lines, coordinates rounded to 3 decimals.
pub fn write_landmark_trace<'a>(
    mut w: impl Write,
    sets: impl IntoIterator<Item = &'a LandmarkSet>,
) -> Result<()> {
    for s in sets {
        let rec = TraceLine {
            frame: s.frame_index,
            points: s.points.iter().map(|p| [round3(p.x), round3(p.y)]).collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
