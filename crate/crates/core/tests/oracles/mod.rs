//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code paths it checks: each oracle is the
//! plainest direct transcription of the rule it encodes.
#![allow(dead_code)]

use gazemouse_core::events::EventConfig;
use gazemouse_core::gaze::Direction;
use gazemouse_core::{BinaryImage, GrayImage};

/// Bilateral filter evaluated term by term.
pub fn bilateral(img: &GrayImage, diameter: usize, sc: f64, ss: f64) -> GrayImage {
    let r = (diameter / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let c = f64::from(img.get(x as usize, y as usize));
            let (mut num, mut den) = (0.0, 0.0);
            for yy in y - r..=y + r {
                for xx in x - r..=x + r {
                    if xx < 0 || yy < 0 || xx >= w || yy >= h {
                        continue;
                    }
                    let v = f64::from(img.get(xx as usize, yy as usize));
                    let d2 = ((xx - x).pow(2) + (yy - y).pow(2)) as f64;
                    let wt = (-d2 / (2.0 * ss * ss)).exp() * (-(v - c).powi(2) / (2.0 * sc * sc)).exp();
                    num += wt * v;
                    den += wt;
                }
            }
            out.push((num / den).round() as u8);
        }
    }
    GrayImage::new(img.width(), img.height(), out).unwrap()
}

/// Window bounds `[min, max]` of the clipped `diameter²` window per pixel.
pub fn window_extrema(img: &GrayImage, radius: usize) -> Vec<(u8, u8)> {
    let r = radius as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (mut lo, mut hi) = (255u8, 0u8);
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                    let v = img.get(xx as usize, yy as usize);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            out.push((lo, hi));
        }
    }
    out
}

/// Erosion by direct 2-D window minimum.
pub fn erode(img: &GrayImage, radius: usize, iterations: usize) -> GrayImage {
    let mut cur = img.clone();
    for _ in 0..iterations {
        let mins: Vec<u8> = window_extrema(&cur, radius).into_iter().map(|(lo, _)| lo).collect();
        cur = GrayImage::new(cur.width(), cur.height(), mins).unwrap();
    }
    cur
}

pub fn threshold(img: &GrayImage, t: u8, invert: bool) -> Vec<bool> {
    img.data()
        .iter()
        .map(|&p| if invert { p <= t } else { p > t })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Classic two-pass 8-connected labelling with union-find.
/// Returns components in raster order of their first pixel, each as its
/// list of pixels.
pub fn components(bin: &BinaryImage) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (bin.width(), bin.height());
    let mut uf = UnionFind {
        parent: (0..w * h).collect(),
    };
    for y in 0..h {
        for x in 0..w {
            if !bin.get(x, y) {
                continue;
            }
            let i = y * w + x;
            let prior = [(-1i64, 0i64), (-1, -1), (0, -1), (1, -1)];
            for (dx, dy) in prior {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && bin.get(nx as usize, ny as usize) {
                    uf.union(i, ny as usize * w + nx as usize);
                }
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut groups: std::collections::HashMap<usize, Vec<(usize, usize)>> = Default::default();
    for y in 0..h {
        for x in 0..w {
            if bin.get(x, y) {
                let root = uf.find(y * w + x);
                let g = groups.entry(root).or_default();
                if g.is_empty() {
                    order.push(root);
                }
                g.push((x, y));
            }
        }
    }
    order.into_iter().map(|r| groups.remove(&r).unwrap()).collect()
}

pub fn centroid(pixels: &[(usize, usize)]) -> (f64, f64) {
    let n = pixels.len() as f64;
    let sx: f64 = pixels.iter().map(|p| p.0 as f64).sum();
    let sy: f64 = pixels.iter().map(|p| p.1 as f64).sum();
    (sx / n, sy / n)
}

/// Textbook constant-velocity Kalman recursion on plain arrays, standard
/// (non-Joseph) covariance update.
#[derive(Clone, Debug)]
pub struct TextbookKalman {
    pub x: [f64; 4],
    pub p: [[f64; 4]; 4],
    pub q: f64,
    pub r: f64,
    pub miss_inflation: f64,
}

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn transpose(a: &M4) -> M4 {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

impl TextbookKalman {
    pub fn new(x: f64, y: f64, q: f64, r: f64, vel_var: f64) -> Self {
        let mut p = [[0.0; 4]; 4];
        p[0][0] = r;
        p[1][1] = r;
        p[2][2] = vel_var;
        p[3][3] = vel_var;
        Self {
            x: [x, y, 0.0, 0.0],
            p,
            q,
            r,
            miss_inflation: 1.5,
        }
    }

    pub fn step(&mut self, z: Option<(f64, f64)>, dt: f64) {
        let f: M4 = [
            [1.0, 0.0, dt, 0.0],
            [0.0, 1.0, 0.0, dt],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let x = self.x;
        self.x = [x[0] + dt * x[2], x[1] + dt * x[3], x[2], x[3]];
        let mut p = mul(&mul(&f, &self.p), &transpose(&f));
        let (a, b, c) = (dt.powi(4) / 4.0 * self.q, dt.powi(3) / 2.0 * self.q, dt * dt * self.q);
        for axis in 0..2 {
            p[axis][axis] += a;
            p[axis][axis + 2] += b;
            p[axis + 2][axis] += b;
            p[axis + 2][axis + 2] += c;
        }
        match z {
            Some((zx, zy)) => {
                // S = P[0..2][0..2] + rI, inverted in closed form.
                let s = [[p[0][0] + self.r, p[0][1]], [p[1][0], p[1][1] + self.r]];
                let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let si = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
                // K = P Hᵀ S⁻¹ ; P Hᵀ is the first two columns of P.
                let mut k = [[0.0; 2]; 4];
                for i in 0..4 {
                    for j in 0..2 {
                        k[i][j] = p[i][0] * si[0][j] + p[i][1] * si[1][j];
                    }
                }
                let innov = [zx - self.x[0], zy - self.x[1]];
                for i in 0..4 {
                    self.x[i] += k[i][0] * innov[0] + k[i][1] * innov[1];
                }
                // P = (I − K H) P
                let mut np = [[0.0; 4]; 4];
                for i in 0..4 {
                    for j in 0..4 {
                        np[i][j] = p[i][j] - (k[i][0] * p[0][j] + k[i][1] * p[1][j]);
                    }
                }
                self.p = np;
            }
            None => {
                for row in p.iter_mut() {
                    for v in row.iter_mut() {
                        *v *= self.miss_inflation;
                    }
                }
                self.p = p;
            }
        }
    }
}

/// Cursor moves expected at each frame of a direction stream, derived by
/// looking back over the stream rather than by carrying state.
pub fn expected_moves(dirs: &[Direction], cfg: &EventConfig) -> Vec<(u64, i32, i32)> {
    let step = cfg.move_step;
    let delta = |d: Direction| match d {
        Direction::Left => Some((-step, 0)),
        Direction::Right => Some((step, 0)),
        Direction::Up => Some((0, -step)),
        Direction::Down => Some((0, step)),
        _ => None,
    };
    // Start index of the INVALID streak ending at `m`.
    let streak_start = |m: usize| {
        let mut s = m;
        while s > 0 && dirs[s - 1] == Direction::Invalid {
            s -= 1;
        }
        s
    };
    // Frames of direction dirs[k] in its run ending at k, bridging short
    // INVALID gaps between frames of the same direction.
    let run_len = |k: usize| -> u32 {
        let d = dirs[k];
        let mut count = 0;
        let mut m = k as i64;
        loop {
            while m >= 0 && dirs[m as usize] == d {
                count += 1;
                m -= 1;
            }
            if m < 0 || dirs[m as usize] != Direction::Invalid {
                break;
            }
            let s = streak_start(m as usize);
            let len = m as usize - s + 1;
            if len as u32 <= cfg.hold_frames && s >= 1 && dirs[s - 1] == d {
                m = s as i64 - 1;
            } else {
                break;
            }
        }
        count
    };

    let mut out = Vec::new();
    for (i, &d) in dirs.iter().enumerate() {
        let mv = match d {
            Direction::Center => None,
            Direction::Invalid => {
                let s = streak_start(i);
                let gap = (i - s + 1) as u32;
                if gap > cfg.hold_frames || s == 0 {
                    None
                } else {
                    let prev = dirs[s - 1];
                    match delta(prev) {
                        Some(dxy) if run_len(s - 1) >= cfg.dwell_frames => Some(dxy),
                        _ => None,
                    }
                }
            }
            d => delta(d).filter(|_| run_len(i) >= cfg.dwell_frames),
        };
        if let Some((dx, dy)) = mv {
            out.push((i as u64, dx, dy));
        }
    }
    out
}
