use serde::{Deserialize, Serialize};

use super::BinaryImage;
use crate::error::{Error, Result};

/// Outer boundary of one 8-connected foreground component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    /// Boundary pixels `(x, y)` in tracing order, starting at the
    /// component's raster-first pixel. Consecutive points are 8-neighbours
    /// and the last point neighbours the first.
    pub points: Vec<(usize, usize)>,
    /// Number of pixels in the enclosed component (holes included as
    /// foreground only where the mask is set).
    pub component_pixels: usize,
}

/// Sub-pixel centre of mass of a component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub cx: f64,
    pub cy: f64,
}

// Clockwise in image coordinates (y down), starting east.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const WEST: usize = 4;

fn dir_index(from: (i64, i64), to: (i64, i64)) -> usize {
    let d = (to.0 - from.0, to.1 - from.1);
    DIRS.iter().position(|&x| x == d).expect("points are 8-neighbours")
}

/// Extracts the outer contour of every 8-connected foreground component.
///
/// Components are returned in raster order of their first pixel.
pub fn find_contours(bin: &BinaryImage) -> Vec<Contour> {
    let (w, h) = (bin.width(), bin.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !bin.data()[idx] || seen[idx] {
                continue;
            }
            let mut count = 0usize;
            seen[idx] = true;
            stack.push((x, y));
            while let Some((px, py)) = stack.pop() {
                count += 1;
                for &(dx, dy) in &DIRS {
                    let (nx, ny) = (px as i64 + dx, py as i64 + dy);
                    if bin.is_fg(nx, ny) {
                        let n = ny as usize * w + nx as usize;
                        if !seen[n] {
                            seen[n] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            out.push(Contour {
                points: trace_outer(bin, (x, y)),
                component_pixels: count,
            });
        }
    }
    out
}

/// Border following from a raster-first pixel, whose west neighbour is
/// background by construction.
fn trace_outer(bin: &BinaryImage, start: (usize, usize)) -> Vec<(usize, usize)> {
    let p0 = (start.0 as i64, start.1 as i64);
    let fg = |p: (i64, i64)| bin.is_fg(p.0, p.1);
    let step = |p: (i64, i64), d: usize| (p.0 + DIRS[d].0, p.1 + DIRS[d].1);

    // First foreground neighbour clockwise from west.
    let first = (0..8)
        .map(|k| step(p0, (WEST + k) % 8))
        .find(|&q| fg(q));
    let Some(p1) = first else {
        return vec![start];
    };

    let mut points = Vec::new();
    let mut prev = p1;
    let mut cur = p0;
    loop {
        // Counter-clockwise sweep around `cur`, starting just past `prev`.
        let back = dir_index(cur, prev);
        let next = (1..=8)
            .map(|k| step(cur, (back + 8 - k) % 8))
            .find(|&q| fg(q))
            .expect("component has at least two pixels");
        points.push((cur.0 as usize, cur.1 as usize));
        if next == p0 && cur == p1 {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}

/// Centre of mass of the component enclosed by `contour`: `(Σx/N, Σy/N)`.
pub fn centroid_of(bin: &BinaryImage, contour: &Contour) -> Result<Centroid> {
    let &(sx, sy) = contour
        .points
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty contour".into()))?;
    if sx >= bin.width() || sy >= bin.height() || !bin.get(sx, sy) {
        return Err(Error::InvalidParameter(
            "contour does not belong to this mask".into(),
        ));
    }
    let w = bin.width();
    let mut seen = vec![false; w * bin.height()];
    let mut stack = vec![(sx, sy)];
    seen[sy * w + sx] = true;
    let (mut n, mut sum_x, mut sum_y) = (0u64, 0u64, 0u64);
    while let Some((x, y)) = stack.pop() {
        n += 1;
        sum_x += x as u64;
        sum_y += y as u64;
        for &(dx, dy) in &DIRS {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if bin.is_fg(nx, ny) {
                let i = ny as usize * w + nx as usize;
                if !seen[i] {
                    seen[i] = true;
                    stack.push((nx as usize, ny as usize));
                }
            }
        }
    }
    Ok(Centroid {
        cx: sum_x as f64 / n as f64,
        cy: sum_y as f64 / n as f64,
    })
}
