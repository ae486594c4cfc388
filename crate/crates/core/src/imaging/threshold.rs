use super::{BinaryImage, GrayImage};

/// Binary threshold. Foreground is `pixel > t`, or `pixel <= t` when
/// `invert` is set (dark-blob extraction).
pub fn threshold_binary(img: &GrayImage, t: u8, invert: bool) -> BinaryImage {
    let data = img
        .data()
        .iter()
        .map(|&p| if invert { p <= t } else { p > t })
        .collect();
    BinaryImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}
