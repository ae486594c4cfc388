//! Synthetic eye scenes with exact ground truth.
//!
//! A scene is a uniform skin background with two identical eyes. Each eye is
//! a lens-shaped opening bounded by two parabolic lids through the corners:
//! in eye coordinates `(t, b)`, where `t ∈ [-1, 1]` runs corner to corner and
//! `b` is the signed distance along the downward normal, the opening is
//! `|b| < A·(1 − t²)` with half-aperture `A = openness · aperture_max`. Inside
//! the opening the pupil and iris disks are drawn over the sclera; lids
//! occlude whatever falls outside.
//!
//! Noise is additive Gaussian, drawn in raster order from a splitmix64
//! stream (Box–Muller, one pair of uniforms per sample) seeded with
//! [`EyeSceneParams::seed`], then rounded and clamped to `[0, 255]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::landmarks::{LandmarkSet, LANDMARK_COUNT};
use crate::{Exec, Point};

/// Below this openness the eye renders as closed (no pupil visible).
pub const VISIBILITY_FLOOR: f64 = 0.05;

/// Parameters of one rendered frame. The second eye is a copy of the first
/// translated by `eye_gap` along x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EyeSceneParams {
    pub frame_w: usize,
    pub frame_h: usize,
    pub corner_left: Point,
    pub corner_right: Point,
    pub eye_gap: f64,
    pub openness: f64,
    pub aperture_max: f64,
    /// `(u, v)`: pupil displacement as fractions of the horizontal half-span
    /// and of the current vertical half-aperture.
    pub pupil_offset: [f64; 2],
    pub pupil_radius: f64,
    pub iris_radius: f64,
    pub intensity_sclera: f64,
    pub intensity_iris: f64,
    pub intensity_pupil: f64,
    pub intensity_skin: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for EyeSceneParams {
    fn default() -> Self {
        Self {
            frame_w: 320,
            frame_h: 240,
            corner_left: Point::new(70.0, 120.0),
            corner_right: Point::new(150.0, 120.0),
            eye_gap: 100.0,
            openness: 1.0,
            aperture_max: 20.0,
            pupil_offset: [0.0, 0.0],
            pupil_radius: 4.0,
            iris_radius: 9.0,
            intensity_sclera: 225.0,
            intensity_iris: 95.0,
            intensity_pupil: 15.0,
            intensity_skin: 160.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl EyeSceneParams {
    /// Default scene scaled to a `w × h` frame (eye geometry scales with the
    /// width relative to the 320-pixel default).
    pub fn for_frame(w: usize, h: usize) -> Self {
        let d = Self::default();
        let k = w as f64 / d.frame_w as f64;
        let cy = h as f64 / 2.0;
        let x0 = w as f64 / 2.0 - (d.eye_gap / 2.0 + 40.0) * k;
        Self {
            frame_w: w,
            frame_h: h,
            corner_left: Point::new(x0, cy),
            corner_right: Point::new(x0 + 80.0 * k, cy),
            eye_gap: d.eye_gap * k,
            aperture_max: d.aperture_max * k,
            pupil_radius: d.pupil_radius * k,
            iris_radius: d.iris_radius * k,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.frame_w == 0 || self.frame_h == 0 {
            return bad("empty frame".into());
        }
        if !(self.corner_left.x < self.corner_right.x) {
            return bad("corner_left must be left of corner_right".into());
        }
        if !(self.intensity_pupil < self.intensity_iris && self.intensity_iris < self.intensity_sclera) {
            return bad("intensities must satisfy pupil < iris < sclera".into());
        }
        if !(0.0..=1.0).contains(&self.openness) {
            return bad(format!("openness {} outside [0, 1]", self.openness));
        }
        if self.pupil_offset.iter().any(|o| !(-1.0..=1.0).contains(o)) {
            return bad(format!("pupil offset {:?} outside [-1, 1]", self.pupil_offset));
        }
        if !(self.pupil_radius > 0.0 && self.iris_radius >= self.pupil_radius && self.aperture_max > 0.0) {
            return bad("radii and aperture must be positive, iris ≥ pupil".into());
        }
        if self.noise_sigma < 0.0 {
            return bad("negative noise".into());
        }
        Ok(())
    }

    /// Field-wise linear interpolation of numeric parameters; integer fields
    /// (frame size, seed) are taken from `self`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let f = |a: f64, b: f64| a + (b - a) * t;
        Self {
            frame_w: self.frame_w,
            frame_h: self.frame_h,
            corner_left: self.corner_left.lerp(other.corner_left, t),
            corner_right: self.corner_right.lerp(other.corner_right, t),
            eye_gap: f(self.eye_gap, other.eye_gap),
            openness: f(self.openness, other.openness),
            aperture_max: f(self.aperture_max, other.aperture_max),
            pupil_offset: [
                f(self.pupil_offset[0], other.pupil_offset[0]),
                f(self.pupil_offset[1], other.pupil_offset[1]),
            ],
            pupil_radius: f(self.pupil_radius, other.pupil_radius),
            iris_radius: f(self.iris_radius, other.iris_radius),
            intensity_sclera: f(self.intensity_sclera, other.intensity_sclera),
            intensity_iris: f(self.intensity_iris, other.intensity_iris),
            intensity_pupil: f(self.intensity_pupil, other.intensity_pupil),
            intensity_skin: f(self.intensity_skin, other.intensity_skin),
            noise_sigma: f(self.noise_sigma, other.noise_sigma),
            seed: self.seed,
        }
    }

    fn eyes(&self) -> [EyeGeometry; 2] {
        let shift = Point::new(self.eye_gap, 0.0);
        [
            EyeGeometry::new(self, self.corner_left, self.corner_right),
            EyeGeometry::new(self, self.corner_left.add(shift), self.corner_right.add(shift)),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
struct EyeGeometry {
    p1: Point,
    p4: Point,
    center: Point,
    axis: Point,
    normal: Point,
    half_span: f64,
    half_aperture: f64,
    pupil: Point,
}

impl EyeGeometry {
    fn new(params: &EyeSceneParams, p1: Point, p4: Point) -> Self {
        let center = p1.midpoint(p4);
        let half_span = p1.dist(p4) / 2.0;
        let axis = p4.sub(p1).scale(1.0 / (2.0 * half_span));
        let normal = Point::new(-axis.y, axis.x);
        let half_aperture = params.openness * params.aperture_max;
        let [u, v] = params.pupil_offset;
        let pupil = center
            .add(axis.scale(u * half_span))
            .add(normal.scale(v * half_aperture));
        Self {
            p1,
            p4,
            center,
            axis,
            normal,
            half_span,
            half_aperture,
            pupil,
        }
    }

    fn local(&self, q: Point) -> (f64, f64) {
        let d = q.sub(self.center);
        (d.dot(self.axis) / self.half_span, d.dot(self.normal))
    }

    fn inside_opening(&self, q: Point) -> bool {
        let (t, b) = self.local(q);
        t.abs() < 1.0 && b.abs() < self.half_aperture * (1.0 - t * t)
    }

    fn lid_point(&self, t: f64, upper: bool) -> Point {
        let b = self.half_aperture * (1.0 - t * t);
        let b = if upper { -b } else { b };
        self.center
            .add(self.axis.scale(t * self.half_span))
            .add(self.normal.scale(b))
    }

    /// p1..p6: corners, upper lid at t = ∓1/3, lower lid at t = ±1/3.
    fn landmarks(&self) -> [Point; 6] {
        let third = 1.0 / 3.0;
        [
            self.p1,
            self.lid_point(-third, true),
            self.lid_point(third, true),
            self.p4,
            self.lid_point(third, false),
            self.lid_point(-third, false),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Pupil centre of the image-left eye.
    pub pupil_center: Point,
    pub pupil_center_right: Point,
    pub landmarks: LandmarkSet,
    pub is_open: bool,
    pub openness: f64,
    pub pupil_offset: [f64; 2],
}

/// splitmix64 stream with Box–Muller normals.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    state: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1].
    pub fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64
    }

    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Full 68-point set for the scene: eye points are exact, the remaining
/// points form a coarse face outline scaled to the eye layout.
pub fn scene_landmarks(params: &EyeSceneParams, frame_index: u64) -> LandmarkSet {
    let eyes = params.eyes();
    let left = eyes[0].landmarks();
    let right = eyes[1].landmarks();

    let origin = eyes[0].center.midpoint(eyes[1].center);
    let across = eyes[1].center.sub(eyes[0].center);
    let scale = across.norm().max(1.0);
    let ex = across.scale(1.0 / scale);
    let ey = Point::new(-ex.y, ex.x);
    let place = |u: f64, v: f64| origin.add(ex.scale(u * scale)).add(ey.scale(v * scale));

    let mut pts = vec![Point::default(); LANDMARK_COUNT];
    // Jaw 0..=16: lower half-ellipse from the left temple to the right one.
    for (i, p) in pts.iter_mut().enumerate().take(17) {
        let a = std::f64::consts::PI * (1.0 - i as f64 / 16.0);
        *p = place(1.0 * a.cos(), 0.1 + 1.2 * a.sin().abs());
    }
    // Brows 17..=26.
    for i in 0..10 {
        let u = -0.85 + 1.7 * i as f64 / 9.0 + if i >= 5 { 0.1 } else { -0.1 };
        pts[17 + i] = place(u, -0.35 - 0.05 * (1.0 - (u.abs() - 0.5).abs() * 2.0));
    }
    // Nose bridge 27..=30 and base 31..=35.
    for i in 0..4 {
        pts[27 + i] = place(0.0, 0.1 * (i as f64 + 1.0));
    }
    for i in 0..5 {
        pts[31 + i] = place(-0.2 + 0.1 * i as f64, 0.5);
    }
    pts[36..42].copy_from_slice(&left);
    pts[42..48].copy_from_slice(&right);
    // Mouth 48..=59 outer ring, 60..=67 inner ring.
    for i in 0..12 {
        let a = std::f64::consts::TAU * i as f64 / 12.0;
        pts[48 + i] = place(-0.4 * a.cos(), 0.85 + 0.15 * a.sin());
    }
    for i in 0..8 {
        let a = std::f64::consts::TAU * i as f64 / 8.0;
        pts[60 + i] = place(-0.3 * a.cos(), 0.85 + 0.06 * a.sin());
    }
    LandmarkSet::new(frame_index, pts).expect("68 finite points")
}

/// Renders one frame and its ground truth.
pub fn render_eye(params: &EyeSceneParams) -> Result<(GrayImage, GroundTruth)> {
    render_frame(params, 0)
}

fn render_frame(params: &EyeSceneParams, frame_index: u64) -> Result<(GrayImage, GroundTruth)> {
    params.validate()?;
    let eyes = params.eyes();
    let visible = params.openness > VISIBILITY_FLOOR;
    let (w, h) = (params.frame_w, params.frame_h);
    let mut img = vec![0.0f64; w * h];
    let mut pupil_pixels = [0usize; 2];

    for (y, row) in img.chunks_mut(w).enumerate() {
        for (x, px) in row.iter_mut().enumerate() {
            let q = Point::new(x as f64, y as f64);
            *px = params.intensity_skin;
            if !visible {
                continue;
            }
            for (k, eye) in eyes.iter().enumerate() {
                if eye.inside_opening(q) {
                    let r = q.dist(eye.pupil);
                    *px = if r <= params.pupil_radius {
                        pupil_pixels[k] += 1;
                        params.intensity_pupil
                    } else if r <= params.iris_radius {
                        params.intensity_iris
                    } else {
                        params.intensity_sclera
                    };
                    break;
                }
            }
        }
    }
    if visible && pupil_pixels.contains(&0) {
        return Err(Error::InvalidScene(
            "pupil lies entirely outside the eye opening".into(),
        ));
    }

    let mut noise = NoiseStream::new(params.seed);
    let data = img
        .into_iter()
        .map(|v| {
            let v = if params.noise_sigma > 0.0 {
                v + params.noise_sigma * noise.next_gaussian()
            } else {
                v
            };
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();

    let truth = GroundTruth {
        pupil_center: eyes[0].pupil,
        pupil_center_right: eyes[1].pupil,
        landmarks: scene_landmarks(params, frame_index),
        is_open: visible && eyes.iter().all(|e| e.inside_opening(e.pupil)),
        openness: params.openness,
        pupil_offset: params.pupil_offset,
    };
    Ok((GrayImage::new(w, h, data)?, truth))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub frames: usize,
    pub params: EyeSceneParams,
}

/// Piecewise-linear parameter script. Frame `j` of segment `i` (of `n_i`
/// frames) uses `lerp(P_i, P_{i+1}, j / n_i)`; the last segment holds its
/// parameters constant. A zero-frame segment renders nothing and only
/// serves as the target of the previous ramp, which makes steps possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceScript {
    pub segments: Vec<Segment>,
    /// Mix the frame index into the noise seed so frames get fresh noise.
    #[serde(default)]
    pub reseed_per_frame: bool,
}

impl TraceScript {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self {
            segments,
            reseed_per_frame: false,
        }
    }

    pub fn total_frames(&self) -> usize {
        self.segments.iter().map(|s| s.frames).sum()
    }

    /// Resolved parameters for every frame.
    pub fn frame_params(&self) -> Result<Vec<EyeSceneParams>> {
        if self.total_frames() == 0 {
            return Err(Error::InvalidScene("script has no frames".into()));
        }
        let mut out = Vec::with_capacity(self.total_frames());
        for (i, seg) in self.segments.iter().enumerate() {
            let next = self.segments.get(i + 1).map(|s| &s.params);
            for j in 0..seg.frames {
                let mut p = match next {
                    Some(n) => seg.params.lerp(n, j as f64 / seg.frames as f64),
                    None => seg.params.clone(),
                };
                if self.reseed_per_frame {
                    p.seed = NoiseStream::new(p.seed ^ out.len() as u64).next_u64();
                }
                out.push(p);
            }
        }
        Ok(out)
    }
}

pub fn render_trace(script: &TraceScript) -> Result<Vec<(GrayImage, GroundTruth)>> {
    render_trace_with(script, Exec::default())
}

pub fn render_trace_with(
    script: &TraceScript,
    exec: Exec,
) -> Result<Vec<(GrayImage, GroundTruth)>> {
    let params = script.frame_params()?;
    exec.map_range(params.len(), |i| render_frame(&params[i], i as u64))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::{eye_landmarks, Side};

    #[test]
    fn closed_eye_lids_coincide() {
        let p = EyeSceneParams {
            openness: 0.0,
            ..Default::default()
        };
        let (img, gt) = render_eye(&p).unwrap();
        assert!(!gt.is_open);
        assert!(img.data().iter().all(|&v| v == 160));
        for side in Side::BOTH {
            let e = eye_landmarks(&gt.landmarks, side);
            assert_eq!(e.p2, e.p6);
            assert_eq!(e.p3, e.p5);
        }
    }

    #[test]
    fn darkest_pixel_is_in_pupil() {
        let (img, gt) = render_eye(&EyeSceneParams::default()).unwrap();
        let (i, _) = img
            .data()
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .unwrap();
        let q = Point::new((i % img.width()) as f64, (i / img.width()) as f64);
        assert!(q.dist(gt.pupil_center) <= 4.0);
        assert!(gt.is_open);
    }

    #[test]
    fn rendering_is_deterministic() {
        let p = EyeSceneParams {
            noise_sigma: 6.0,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(render_eye(&p).unwrap().0, render_eye(&p).unwrap().0);
        let other = EyeSceneParams { seed: 43, ..p.clone() };
        assert_ne!(render_eye(&p).unwrap().0, render_eye(&other).unwrap().0);
    }

    #[test]
    fn corners_match_landmarks() {
        let p = EyeSceneParams::default();
        let (_, gt) = render_eye(&p).unwrap();
        let l = eye_landmarks(&gt.landmarks, Side::Left);
        assert_eq!((l.p1, l.p4), (p.corner_left, p.corner_right));
        let r = eye_landmarks(&gt.landmarks, Side::Right);
        assert_eq!(r.p1.x, p.corner_left.x + p.eye_gap);
    }

    #[test]
    fn invalid_scenes_rejected() {
        let p = EyeSceneParams {
            intensity_pupil: 120.0,
            ..Default::default()
        };
        assert!(matches!(render_eye(&p), Err(Error::InvalidScene(_))));
        // The lens is only 2px tall near a corner; a small pupil pushed far
        // down there cannot be seen.
        let p = EyeSceneParams {
            pupil_offset: [0.95, 1.0],
            pupil_radius: 1.0,
            iris_radius: 1.0,
            aperture_max: 10.0,
            ..Default::default()
        };
        assert!(matches!(render_eye(&p), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn trace_constant_segment() {
        let script = TraceScript::new(vec![Segment {
            frames: 5,
            params: EyeSceneParams {
                noise_sigma: 3.0,
                ..Default::default()
            },
        }]);
        let frames = render_trace(&script).unwrap();
        assert_eq!(frames.len(), 5);
        assert!(frames.windows(2).all(|w| w[0].0 == w[1].0));
        assert_eq!(frames[4].1.landmarks.frame_index, 4);
    }

    #[test]
    fn trace_interpolates_linearly() {
        let open = EyeSceneParams::default();
        let closed = EyeSceneParams {
            openness: 0.0,
            ..Default::default()
        };
        let script = TraceScript::new(vec![
            Segment { frames: 10, params: open },
            Segment { frames: 1, params: closed },
        ]);
        let frames = render_trace(&script).unwrap();
        assert_eq!(frames.len(), 11);
        assert!((frames[5].1.openness - 0.5).abs() < 1e-12);
        assert_eq!(frames[10].1.openness, 0.0);
    }

    #[test]
    fn offset_sweep_moves_pupil_right() {
        let at = |u: f64| EyeSceneParams {
            pupil_offset: [u, 0.0],
            ..Default::default()
        };
        let script = TraceScript::new(vec![
            Segment { frames: 16, params: at(-0.8) },
            Segment { frames: 1, params: at(0.8) },
        ]);
        let xs: Vec<f64> = render_trace(&script)
            .unwrap()
            .iter()
            .map(|(_, gt)| gt.pupil_center.x)
            .collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_script_rejected() {
        assert!(render_trace(&TraceScript::new(vec![])).is_err());
    }

    #[test]
    fn scaled_scene_is_valid() {
        let p = EyeSceneParams::for_frame(640, 480);
        let (img, gt) = render_eye(&p).unwrap();
        assert_eq!((img.width(), img.height()), (640, 480));
        assert!(gt.is_open);
        assert!(gt.pupil_center_right.x < 640.0);
    }
}
