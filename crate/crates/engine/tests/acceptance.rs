//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;
mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gazemouse_core::blink::{BlinkConfig, BlinkKind, BlinkState, update_blink, ear_sample};
use gazemouse_core::events::{synthesize, EventConfig, EventKind, EventState};
use gazemouse_core::gaze::Direction;
use gazemouse_core::imaging::{bilateral_filter, centroid_of, erode, find_contours, threshold_binary};
use gazemouse_core::landmarks::{crop, eye_landmarks, eye_region, Side};
use gazemouse_core::pupil::{detect_batch, Detector, HoughConfig, PupilConfig};
use gazemouse_core::synth::{render_eye, scene_landmarks, EyeSceneParams, NoiseStream, Segment, TraceScript};
use gazemouse_core::{Exec, GrayImage, Point};
use gazemouse_engine::{EngineConfig, Pipeline};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

// ---------------------------------------------------------------------------

fn random_image(rng: &mut NoiseStream) -> GrayImage {
    let w = 1 + (rng.next_u64() % 16) as usize;
    let h = 1 + (rng.next_u64() % 16) as usize;
    // Mix flat patches and noise so thresholds split real blobs.
    let levels = 1 + rng.next_u64() % 6;
    GrayImage::from_fn(w, h, |_, _| {
        if rng.next_u64().is_multiple_of(4) {
            (rng.next_u64() % 256) as u8
        } else {
            ((rng.next_u64() % levels) * (255 / levels)) as u8
        }
    })
}

fn filter_chain() -> Result<String, String> {
    let started = Instant::now();
    let mut rng = NoiseStream::new(0x5eed);
    let n = 1500;
    let mut blobs = 0usize;
    for case in 0..n {
        let img = random_image(&mut rng);
        let half = (rng.next_u64() % 4) as usize;
        let sc = 5.0 + (rng.next_u64() % 60) as f64;
        let ss = 0.5 + (rng.next_u64() % 40) as f64 / 10.0;
        let got = bilateral_filter(&img, 2 * half + 1, sc, ss).map_err(|e| e.to_string())?;
        let want = oracles::bilateral(&img, 2 * half + 1, sc, ss);
        ensure(got.data().iter().zip(want.data()).all(|(a, b)| a.abs_diff(*b) <= 1), || {
            format!("bilateral differs by > 1 on case {case}")
        })?;

        let radius = 1 + (rng.next_u64() % 3) as usize;
        let iters = 1 + (rng.next_u64() % 3) as usize;
        ensure(erode(&img, radius, iters) == oracles::erode(&img, radius, iters), || {
            format!("erode differs on case {case}")
        })?;

        let t = (rng.next_u64() % 256) as u8;
        let invert = rng.next_u64().is_multiple_of(2);
        let bin = threshold_binary(&img, t, invert);
        ensure(bin.data() == oracles::threshold(&img, t, invert).as_slice(), || {
            format!("threshold differs on case {case}")
        })?;

        let contours = find_contours(&bin);
        let comps = oracles::components(&bin);
        ensure(contours.len() == comps.len(), || format!("contour count differs on case {case}"))?;
        for (c, comp) in contours.iter().zip(&comps) {
            ensure(c.component_pixels == comp.len() && c.points[0] == comp[0], || {
                format!("contour/component mismatch on case {case}")
            })?;
            let got = centroid_of(&bin, c).map_err(|e| e.to_string())?;
            let (cx, cy) = oracles::centroid(comp);
            ensure(got.cx == cx && got.cy == cy, || format!("centroid differs on case {case}"))?;
            blobs += 1;
        }
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{n} images, {blobs} components, {:.1?}", started.elapsed()))
}

// ---------------------------------------------------------------------------

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let k = ((sorted.len() as f64 * q).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[k]
}

fn pupil_localization() -> Result<String, String> {
    let started = Instant::now();
    let mut scenes = Vec::new();
    for (i, &u) in linspace(-0.5, 0.5, 9).iter().enumerate() {
        for (j, &v) in linspace(-0.4, 0.4, 9).iter().enumerate() {
            for openness in [0.6, 0.8, 1.0] {
                for noise in [0.0, 4.0, 8.0] {
                    scenes.push(EyeSceneParams {
                        pupil_offset: [u, v],
                        openness,
                        noise_sigma: noise,
                        seed: (i * 9 + j) as u64,
                        ..Default::default()
                    });
                }
            }
        }
    }
    let rendered: Vec<(GrayImage, Point, bool)> = Exec::Parallel
        .map_range(scenes.len(), |k| {
            let (img, gt) = render_eye(&scenes[k]).unwrap();
            let eye = eye_landmarks(&gt.landmarks, Side::Left);
            let r = eye_region(&eye, 5, img.width(), img.height()).unwrap();
            let truth = Point::new(gt.pupil_center.x - r.x0 as f64, gt.pupil_center.y - r.y0 as f64);
            (crop(&img, &r).unwrap(), truth, scenes[k].noise_sigma == 0.0)
        });
    let eyes: Vec<GrayImage> = rendered.iter().map(|r| r.0.clone()).collect();
    let run = |d: &Detector| detect_batch(&eyes, d, Exec::Parallel).map_err(|e| e.to_string());
    let thr = run(&Detector::Threshold(PupilConfig::default()))?;
    let hough = run(&Detector::Hough(HoughConfig::default()))?;

    let errors = |dets: &[Option<gazemouse_core::pupil::PupilDetection>]| {
        let mut e: Vec<f64> = dets
            .iter()
            .zip(&rendered)
            .map(|(d, r)| d.map_or(f64::INFINITY, |d| Point::new(d.center.cx, d.center.cy).dist(r.1)))
            .collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let te = errors(&thr);
    let he = errors(&hough);
    let (t_med, t_p95, h_med) = (percentile(&te, 0.5), percentile(&te, 0.95), percentile(&he, 0.5));
    let mut worst_agree = 0.0f64;
    for ((a, b), r) in thr.iter().zip(&hough).zip(&rendered) {
        if r.2 {
            let d = match (a, b) {
                (Some(a), Some(b)) => ((a.center.cx - b.center.cx).powi(2) + (a.center.cy - b.center.cy).powi(2)).sqrt(),
                _ => f64::INFINITY,
            };
            worst_agree = worst_agree.max(d);
        }
    }
    let detail = format!(
        "{} frames: threshold median {t_med:.3} px p95 {t_p95:.3} px, hough median {h_med:.3} px, noiseless agreement ≤ {worst_agree:.3} px, {:.1?}",
        rendered.len(),
        started.elapsed()
    );
    ensure(t_med <= 1.0 && t_p95 <= 2.0 && h_med <= 1.5 && worst_agree <= 2.0, || detail.clone())?;
    within(started.elapsed(), Duration::from_secs(120))?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn ear_of(openness: f64, jitter: &mut NoiseStream, frame: u64) -> f64 {
    let p = EyeSceneParams { openness, ..Default::default() };
    let mut ls = scene_landmarks(&p, frame);
    for pt in ls.points_mut() {
        pt.x += 0.2 * jitter.next_gaussian();
        pt.y += 0.2 * jitter.next_gaussian();
    }
    ear_sample(&ls, frame).unwrap().mean
}

fn blink_events(ears: &[f64], cfg: &BlinkConfig) -> Vec<(u64, u64, BlinkKind)> {
    let mut st = BlinkState::default();
    let mut out = Vec::new();
    for (i, &e) in ears.iter().enumerate() {
        let (s, ev) = update_blink(&st, &gazemouse_core::blink::EarSample::new(e, e, i as u64), cfg).unwrap();
        st = s;
        out.extend(ev.map(|b| (b.start_frame, b.duration_frames, b.kind)));
    }
    out
}

fn blink_detection() -> Result<String, String> {
    const OPEN: f64 = 1.0;
    const CLOSED: f64 = 0.1;
    let mut rng = NoiseStream::new(7);
    // 20 blinks of 2..=10 frames separated by open stretches totalling 2000.
    let durations: Vec<u64> = (0..20).map(|k| 2 + (k * 7 % 9) as u64).collect();
    let mut openness = Vec::new();
    let mut truth = Vec::new();
    let gaps = 2000 / 21;
    for &d in &durations {
        openness.extend(std::iter::repeat_n(OPEN, gaps));
        truth.push((openness.len() as u64, d));
        openness.extend(std::iter::repeat_n(CLOSED, d as usize));
    }
    openness.extend(std::iter::repeat_n(OPEN, 2000 - 20 * gaps));
    let ears: Vec<f64> = openness.iter().enumerate().map(|(i, &o)| ear_of(o, &mut rng, i as u64)).collect();

    let open_ear = ear_of(OPEN, &mut NoiseStream::new(0), 0);
    let closed_ear = ear_of(CLOSED, &mut NoiseStream::new(0), 0);
    let cfg = BlinkConfig {
        ear_threshold: (open_ear + closed_ear) / 2.0,
        ..Default::default()
    };
    let found = blink_events(&ears, &cfg);
    let expected: Vec<(u64, u64, BlinkKind)> = truth.iter().map(|&(s, d)| (s, d, BlinkKind::ShortBlink)).collect();
    let tp = found.iter().filter(|f| expected.contains(f)).count();
    let precision = tp as f64 / found.len().max(1) as f64;
    let recall = tp as f64 / expected.len() as f64;

    // Single-frame dips.
    let mut dips = vec![OPEN; 2000];
    for k in 0..20 {
        dips[50 + k * 97] = CLOSED;
    }
    let dip_ears: Vec<f64> = dips.iter().enumerate().map(|(i, &o)| ear_of(o, &mut rng, i as u64)).collect();
    let dip_events = blink_events(&dip_ears, &cfg).len();

    let detail = format!(
        "threshold {:.3}, precision {precision:.2} recall {recall:.2}, single-frame dips → {dip_events} events",
        cfg.ear_threshold
    );
    ensure(precision == 1.0 && recall == 1.0 && found.len() == 20 && dip_events == 0, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn truth_direction(u: f64, v: f64, cfg: &gazemouse_core::gaze::GazeConfig) -> Direction {
    // Ideal ratios of the default scene geometry.
    let h = 0.5 + u / 2.0;
    let vr = 0.5 + 9.0 * v / 16.0;
    if h < cfg.h_left {
        Direction::Left
    } else if h > cfg.h_right {
        Direction::Right
    } else if vr < cfg.v_up {
        Direction::Up
    } else if vr > cfg.v_down {
        Direction::Down
    } else {
        Direction::Center
    }
}

fn direction_classification() -> Result<String, String> {
    let cfg = EngineConfig::default();
    let g = cfg.gaze.clone();
    // Offsets whose ideal ratio sits within 0.05 of a threshold are skipped.
    let clear = |x: f64, lo: f64, hi: f64| (x - lo).abs() > 0.05 && (x - hi).abs() > 0.05;
    let mut checked = 0;
    let mut seen = std::collections::BTreeSet::new();
    for &u in &linspace(-0.5, 0.5, 21) {
        for &v in &linspace(-0.45, 0.45, 19) {
            if !clear(0.5 + u / 2.0, g.h_left, g.h_right) || !clear(0.5 + 9.0 * v / 16.0, g.v_up, g.v_down) {
                continue;
            }
            let (img, gt) = render_eye(&EyeSceneParams { pupil_offset: [u, v], ..Default::default() }).unwrap();
            let mut p = Pipeline::new(cfg.clone());
            let r = p.process(0, &img, Some(&gt.landmarks));
            let want = truth_direction(u, v, &g);
            ensure(r.direction == want, || format!("offset ({u:.2},{v:.2}): got {:?}, want {want:?}", r.direction))?;
            seen.insert(format!("{want:?}"));
            checked += 1;
        }
    }
    ensure(seen.len() == 5, || format!("sweep covered only {seen:?}"))?;

    let hs: Vec<f64> = linspace(-0.6, 0.6, 21)
        .iter()
        .map(|&u| {
            let (img, gt) = render_eye(&EyeSceneParams { pupil_offset: [u, 0.0], ..Default::default() }).unwrap();
            let r = Pipeline::new(cfg.clone()).process(0, &img, Some(&gt.landmarks));
            r.ratios.map_or(f64::NAN, |g| g.h)
        })
        .collect();
    ensure(hs.windows(2).all(|w| w[1] > w[0]), || format!("h not strictly increasing: {hs:?}"))?;
    Ok(format!("{checked} offsets classified, h rises {:.3} → {:.3} over 21 steps", hs[0], hs[20]))
}

// ---------------------------------------------------------------------------

fn gazemouse(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_gazemouse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("gazemouse {args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn end_to_end_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let frames = dir.path().join("frames");
    gazemouse(&["synth", "--script", p(&common::data("golden_script.json")), "--out", p(&frames)])?;
    let lm = frames.join("landmarks.jsonl");
    let mut traces = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let t = dir.path().join(name);
        gazemouse(&["run", "--frames", p(&frames), "--landmarks", p(&lm), "--out-trace", p(&t)])?;
        traces.push(std::fs::read(&t).map_err(|e| e.to_string())?);
    }
    let golden = std::fs::read(common::data("golden_events.jsonl")).map_err(|e| e.to_string())?;
    ensure(traces[0] == traces[1], || "runs differ".into())?;
    ensure(traces[0] == golden, || {
        format!("trace differs from golden:\n{}", String::from_utf8_lossy(&traces[0]))
    })?;
    Ok(format!("2 runs identical, {} events match the golden trace", golden.iter().filter(|&&b| b == b'\n').count()))
}

// ---------------------------------------------------------------------------

fn event_exhaustive() -> Result<String, String> {
    let configs = [
        EventConfig::default(),
        EventConfig { dwell_frames: 1, hold_frames: 0, ..Default::default() },
        EventConfig { dwell_frames: 2, hold_frames: 1, ..Default::default() },
        EventConfig { dwell_frames: 4, hold_frames: 2, move_step: 5, ..Default::default() },
    ];
    let mut streams = 0usize;
    for cfg in &configs {
        let mut prefix = Vec::with_capacity(8);
        let mut moves = Vec::new();
        walk(&mut prefix, &EventState::default(), &mut moves, cfg, &mut streams)?;
    }
    Ok(format!("{streams} streams of length 1..=8 over {} configs", configs.len()))
}

fn walk(
    prefix: &mut Vec<Direction>,
    state: &EventState,
    moves: &mut Vec<(u64, i32, i32)>,
    cfg: &EventConfig,
    count: &mut usize,
) -> Result<(), String> {
    if prefix.len() == 8 {
        return Ok(());
    }
    for d in Direction::ALL {
        let frame = prefix.len() as u64;
        let (next, events) = synthesize(state, d, None, frame, cfg).map_err(|e| e.to_string())?;
        prefix.push(d);
        let before = moves.len();
        for e in &events {
            if let EventKind::MoveBy { dx, dy } = e.kind {
                moves.push((e.frame_index, dx, dy));
            }
        }
        let want = oracles::expected_moves(prefix, cfg);
        ensure(*moves == want, || format!("stream {prefix:?} with {cfg:?}"))?;
        *count += 1;
        walk(prefix, &next, moves, cfg, count)?;
        moves.truncate(before);
        prefix.pop();
    }
    Ok(())
}

// ---------------------------------------------------------------------------

fn throughput() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = EyeSceneParams {
        noise_sigma: 4.0,
        ..EyeSceneParams::for_frame(640, 480)
    };
    let at = |u: f64, v: f64| EyeSceneParams { pupil_offset: [u, v], ..base.clone() };
    let script = TraceScript {
        segments: vec![
            Segment { frames: 40, params: at(-0.5, 0.0) },
            Segment { frames: 40, params: at(0.5, 0.3) },
            Segment { frames: 40, params: at(0.0, -0.3) },
            Segment { frames: 0, params: at(-0.5, 0.0) },
        ],
        reseed_per_frame: true,
    };
    let script_path = dir.path().join("script.json");
    std::fs::write(&script_path, serde_json::to_string(&script).unwrap()).map_err(|e| e.to_string())?;
    let frames = dir.path().join("frames");
    gazemouse(&["synth", "--script", p(&script_path), "--out", p(&frames)])?;
    let out = gazemouse(&[
        "bench",
        "--frames",
        p(&frames),
        "--landmarks",
        p(&frames.join("landmarks.jsonl")),
        "--repeat",
        "3",
    ])?;
    let field = |name: &str| -> Result<f64, String> {
        let rest = out.split(name).nth(1).ok_or_else(|| format!("no `{name}` in {out}"))?;
        rest.split_whitespace().next().unwrap().parse().map_err(|e| format!("{e}"))
    };
    let fps = field("mean fps")?;
    let mean = field("mean latency")?;
    let p99 = field("p99 latency")?;
    let detail = format!("640×480 threshold detector: {fps:.0} fps, mean {mean:.0} µs, p99 {p99:.0} µs");
    ensure(fps >= 30.0, || detail.clone())?;
    Ok(detail)
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("filter-chain correctness", filter_chain),
        ("pupil localization", pupil_localization),
        ("blink detection", blink_detection),
        ("direction classification", direction_classification),
        ("end-to-end determinism", end_to_end_determinism),
        ("event-machine exhaustive check", event_exhaustive),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
