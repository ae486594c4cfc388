use super::GrayImage;
use crate::Exec;

/// Grayscale erosion: minimum over the `(2r+1)²` square window, border
/// window clipped to the image, repeated `iterations` times.
///
/// The clipped square is a product of two intervals, so the minimum is
/// computed separably (rows, then columns).
pub fn erode(img: &GrayImage, radius: usize, iterations: usize) -> GrayImage {
    erode_with(img, radius, iterations, Exec::default())
}

pub fn erode_with(img: &GrayImage, radius: usize, iterations: usize, exec: Exec) -> GrayImage {
    let mut cur = img.clone();
    for _ in 0..iterations {
        cur = erode_once(&cur, radius, exec);
    }
    cur
}

fn erode_once(img: &GrayImage, radius: usize, exec: Exec) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    if radius == 0 {
        return img.clone();
    }
    let src = img.data();

    let mut horiz = vec![0u8; w * h];
    exec.for_each_chunk(&mut horiz, w, |y, row| {
        let s = &src[y * w..(y + 1) * w];
        for (x, px) in row.iter_mut().enumerate() {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(w - 1);
            *px = *s[lo..=hi].iter().min().unwrap();
        }
    });

    let mut out = vec![0u8; w * h];
    exec.for_each_chunk(&mut out, w, |y, row| {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(h - 1);
        row.copy_from_slice(&horiz[lo * w..(lo + 1) * w]);
        for yy in lo + 1..=hi {
            let other = &horiz[yy * w..(yy + 1) * w];
            for (a, &b) in row.iter_mut().zip(other) {
                *a = (*a).min(b);
            }
        }
    });
    GrayImage::new(w, h, out).expect("dimensions preserved")
}
