//! Core of an eye-gaze cursor controller.
//!
//! The per-frame chain is: facial landmarks give the two eyes ([`landmarks`]),
//! the eyelid geometry gives an eye aspect ratio for blink detection
//! ([`blink`]), the cropped eye goes through a bilateral / erode / threshold /
//! contour chain to find the pupil ([`pupil`], built on [`imaging`]), the
//! pupil position inside the eye becomes a gaze direction ([`gaze`]), and
//! directions plus blinks drive a cursor event state machine ([`events`]).
//!
//! [`synth`] renders synthetic eye scenes with known ground truth and is
//! used as the test oracle for the whole chain.
//!
//! Data-parallel loops (filter rows, batch detection, trace rendering) run on
//! rayon when the `parallel` feature is enabled (the default). Every such
//! entry point takes an [`Exec`] so both paths stay callable and comparable.

pub mod blink;
pub mod error;
pub mod events;
mod exec;
pub mod gaze;
pub mod geometry;
pub mod imaging;
pub mod landmarks;
pub mod pupil;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::Point;
pub use imaging::{BinaryImage, GrayImage};
