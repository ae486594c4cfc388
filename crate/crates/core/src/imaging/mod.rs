//! Grayscale rasters and the pupil filter chain primitives.
//!
//! All windowed filters clip their window at the image border and use only
//! in-bounds pixels; nothing is padded.

mod bilateral;
mod contours;
mod image;
mod morphology;
pub mod pgm;
mod threshold;

pub use bilateral::{bilateral_filter, bilateral_filter_with};
pub use contours::{centroid_of, find_contours, Centroid, Contour};
pub use image::{BinaryImage, GrayImage};
pub use morphology::{erode, erode_with};
pub use threshold::threshold_binary;
