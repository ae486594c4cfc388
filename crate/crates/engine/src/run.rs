//! The frame loop.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crossbeam_channel::Receiver;
use gazemouse_core::events::EventSink;
use gazemouse_core::landmarks::LandmarkProvider;
use serde::Serialize;

use crate::error::Result;
use crate::pipeline::{FrameReport, Pipeline};
use crate::protocol::{apply_control, ControlMessage};
use crate::source::FrameSource;
use crate::telemetry::{ControlRequest, TelemetryServer};

pub trait ReportSink {
    fn report(&mut self, report: &FrameReport) -> Result<()>;
}

impl ReportSink for Vec<FrameReport> {
    fn report(&mut self, report: &FrameReport) -> Result<()> {
        self.push(report.clone());
        Ok(())
    }
}

impl ReportSink for &TelemetryServer {
    fn report(&mut self, report: &FrameReport) -> Result<()> {
        self.broadcast(report);
        Ok(())
    }
}

/// Writes reports as JSON lines.
pub struct ReportWriter<W: std::io::Write>(pub W);

impl<W: std::io::Write> ReportSink for ReportWriter<W> {
    fn report(&mut self, report: &FrameReport) -> Result<()> {
        let line = serde_json::to_string(report).expect("report serializes");
        writeln!(self.0, "{line}").map_err(gazemouse_core::Error::from)?;
        Ok(())
    }
}

#[derive(Default)]
pub struct RunContext<'a> {
    pub trace: Option<&'a mut dyn EventSink>,
    pub reports: Vec<&'a mut dyn ReportSink>,
    pub controls: Option<&'a Receiver<ControlRequest>>,
    pub stop: Option<&'a AtomicBool>,
    /// Target frame rate; `None` runs as fast as possible.
    pub pace_fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub frames: u64,
    pub events: u64,
    pub elapsed_secs: f64,
    pub mean_fps: f64,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "frames {} events {} mean fps {:.1}",
            self.frames, self.events, self.mean_fps
        )
    }
}

/// Applies queued control messages; returns how many were handled.
pub fn drain_controls(pipeline: &mut Pipeline, controls: &Receiver<ControlRequest>) -> usize {
    let mut n = 0;
    for req in controls.try_iter() {
        match req.message {
            ControlMessage::SnapshotOn => pipeline.options.thumbnail = true,
            ControlMessage::SnapshotOff => pipeline.options.thumbnail = false,
            _ => {}
        }
        let (cfg, reply) = apply_control(&pipeline.config, &req.message);
        pipeline.config = cfg;
        req.respond(&reply);
        n += 1;
    }
    n
}

/// Processes frames until the source is exhausted or `stop` is raised.
/// Source errors abort the run; per-frame module errors do not.
pub fn run(
    pipeline: &mut Pipeline,
    source: &mut dyn FrameSource,
    landmarks: &mut dyn LandmarkProvider,
    mut ctx: RunContext<'_>,
) -> Result<RunSummary> {
    let started = Instant::now();
    let period = ctx.pace_fps.filter(|f| *f > 0.0).map(|f| Duration::from_secs_f64(1.0 / f));
    let mut frames = 0u64;
    let mut events = 0u64;
    while let Some(item) = source.next_frame() {
        if ctx.stop.is_some_and(|s| s.load(Ordering::SeqCst)) {
            break;
        }
        if let Some(c) = ctx.controls {
            drain_controls(pipeline, c);
        }
        let (index, frame) = item?;
        let ls = landmarks.next(index);
        let report = pipeline.process(index, &frame, ls.as_ref());
        if let Some(t) = ctx.trace.as_deref_mut() {
            for e in &report.events {
                t.emit(e)?;
            }
        }
        for sink in ctx.reports.iter_mut() {
            sink.report(&report)?;
        }
        frames += 1;
        events += report.events.len() as u64;
        if let Some(p) = period {
            let due = started + p * frames as u32;
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
    }
    if let Some(t) = ctx.trace.as_deref_mut() {
        t.flush()?;
    }
    let elapsed = started.elapsed().as_secs_f64();
    Ok(RunSummary {
        frames,
        events,
        elapsed_secs: elapsed,
        mean_fps: if elapsed > 0.0 { frames as f64 / elapsed } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub frames: u64,
    pub mean_fps: f64,
    pub mean_latency_micros: f64,
    pub p99_latency_micros: f64,
}

impl std::fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "frames {} mean fps {:.1} mean latency {:.0} us p99 latency {:.0} us",
            self.frames, self.mean_fps, self.mean_latency_micros, self.p99_latency_micros
        )
    }
}

/// Times `process` over in-memory frames `repeat` times, each pass with
/// fresh pipeline state.
pub fn bench(
    config: &crate::config::EngineConfig,
    frames: &[(u64, gazemouse_core::GrayImage)],
    landmarks: &dyn Fn(u64) -> Option<gazemouse_core::landmarks::LandmarkSet>,
    repeat: usize,
) -> BenchSummary {
    let lookups: Vec<_> = frames.iter().map(|(i, _)| landmarks(*i)).collect();
    let mut latencies = Vec::with_capacity(frames.len() * repeat);
    for _ in 0..repeat {
        let mut p = Pipeline::new(config.clone());
        for ((index, frame), ls) in frames.iter().zip(&lookups) {
            let t = Instant::now();
            std::hint::black_box(p.process(*index, frame, ls.as_ref()));
            latencies.push(t.elapsed().as_secs_f64() * 1e6);
        }
    }
    let n = latencies.len();
    let total: f64 = latencies.iter().sum();
    let mut sorted = latencies;
    sorted.sort_by(f64::total_cmp);
    let p99 = if n == 0 { 0.0 } else { sorted[((n as f64 * 0.99).ceil() as usize).clamp(1, n) - 1] };
    BenchSummary {
        frames: n as u64,
        mean_fps: if total > 0.0 { n as f64 / (total / 1e6) } else { 0.0 },
        mean_latency_micros: if n == 0 { 0.0 } else { total / n as f64 },
        p99_latency_micros: p99,
    }
}
