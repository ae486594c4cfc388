//! Command-line front end for the `gazemouse` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand};
use gazemouse_core::events::{replay_trace, TraceRecorder};
use gazemouse_core::imaging::pgm;
use gazemouse_core::landmarks::{load_landmark_trace, write_landmark_trace, LandmarkProvider};
use gazemouse_core::synth::{render_trace, TraceScript};
use serde::Serialize;

use crate::config::EngineConfig;
use crate::error::{io, EngineError, Result};
use crate::pipeline::Pipeline;
use crate::run::{bench, run, ReportSink, ReportWriter, RunContext};
use crate::source::{DirectorySource, FrameSource};
use crate::telemetry::{TelemetryServer, DEFAULT_QUEUE};

#[derive(Debug, Parser)]
#[command(name = "gazemouse", version, about = "Eye-gaze cursor engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Process a directory of PGM frames with a landmark trace.
    Run(RunArgs),
    /// Render a scripted synthetic trace to frames, landmarks and ground truth.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a recorded event trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Measure per-frame latency over in-memory frames.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub landmarks: PathBuf,
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. `--set blink.ear_threshold=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the event trace (JSON lines) here.
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    /// Write every frame report (JSON lines) here.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Serve telemetry on this port (127.0.0.1).
    #[arg(long)]
    pub serve: Option<u16>,
    /// Pace processing to this frame rate.
    #[arg(long)]
    pub fps: Option<f64>,
}

impl InputArgs {
    fn config(&self) -> Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(p) => EngineConfig::load(p)?,
            None => EngineConfig::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| EngineError::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
            cfg.set_str(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gazemouse: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Synth { script, out } => cmd_synth(&script, &out),
        Command::Replay { trace } => {
            let events = replay_trace(&trace)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for e in &events {
                let line = serde_json::to_string(e).expect("event serializes");
                writeln!(out, "{line}").map_err(|e| io("<stdout>", e))?;
            }
            eprintln!("events {}", events.len());
            Ok(())
        }
        Command::Bench { input, repeat } => {
            let cfg = input.config()?;
            let frames: Vec<_> = DirectorySource::open(&input.frames)?.collect::<Result<_>>()?;
            let mut marks = load_landmarks(&input.landmarks)?;
            let lookup: Vec<_> = frames.iter().map(|(i, _)| (*i, marks.next(*i))).collect();
            let lookup: std::collections::HashMap<_, _> = lookup.into_iter().collect();
            let summary = bench(&cfg, &frames, &|i| lookup.get(&i).cloned().flatten(), repeat.max(1));
            println!("{summary}");
            Ok(())
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = a.input.config()?;
    if let Some(port) = a.serve {
        cfg.telemetry_port = Some(port);
    }
    let mut source = DirectorySource::open(&a.input.frames)?;
    let mut marks = load_landmarks(&a.input.landmarks)?;
    let server = match cfg.telemetry_port {
        Some(port) => {
            let s = TelemetryServer::bind(("127.0.0.1", port), DEFAULT_QUEUE)?;
            eprintln!("telemetry on ws://{}", s.local_addr());
            Some(s)
        }
        None => None,
    };
    let mut trace = match &a.out_trace {
        Some(p) => Some(TraceRecorder::create(p)?),
        None => None,
    };
    let mut report_file = match &a.reports {
        Some(p) => Some(ReportWriter(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| io(p, e))?,
        ))),
        None => None,
    };
    let mut server_sink = server.as_ref();
    let mut reports: Vec<&mut dyn ReportSink> = Vec::new();
    if let Some(w) = report_file.as_mut() {
        reports.push(w);
    }
    if let Some(s) = server_sink.as_mut() {
        reports.push(s);
    }
    let stop = AtomicBool::new(false);
    let mut pipeline = Pipeline::new(cfg);
    let summary = run(
        &mut pipeline,
        &mut source as &mut dyn FrameSource,
        &mut marks,
        RunContext {
            trace: trace.as_mut().map(|t| t as _),
            reports,
            controls: server.as_ref().map(|s| s.controls()),
            stop: Some(&stop),
            pace_fps: a.fps,
        },
    )?;
    if let Some(ReportWriter(mut w)) = report_file {
        w.flush().map_err(|e| io(a.reports.as_deref().unwrap_or(Path::new("")), e))?;
    }
    println!("{summary}");
    Ok(())
}

fn load_landmarks(path: &Path) -> Result<gazemouse_core::landmarks::TraceProvider> {
    load_landmark_trace(path).map_err(|source| match source {
        gazemouse_core::Error::Io { .. } => source.into(),
        source => EngineError::Input {
            path: path.into(),
            source,
        },
    })
}

#[derive(Serialize)]
struct GroundTruthLine {
    frame: u64,
    pupil_x: f64,
    pupil_y: f64,
    open: bool,
}

pub fn cmd_synth(script: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(script).map_err(|e| io(script, e))?;
    let script: TraceScript = serde_json::from_str(&text).map_err(|e| gazemouse_core::Error::Parse {
        line: e.line(),
        detail: e.to_string(),
    })?;
    let rendered = render_trace(&script)?;
    std::fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let mut truth = String::new();
    for (i, (img, gt)) in rendered.iter().enumerate() {
        pgm::write(out.join(format!("frame_{i:06}.pgm")), img)?;
        let line = GroundTruthLine {
            frame: i as u64,
            pupil_x: gt.pupil_center.x,
            pupil_y: gt.pupil_center.y,
            open: gt.is_open,
        };
        truth.push_str(&serde_json::to_string(&line).expect("ground truth serializes"));
        truth.push('\n');
    }
    let gt_path = out.join("ground_truth.jsonl");
    std::fs::write(&gt_path, truth).map_err(|e| io(&gt_path, e))?;
    let lm_path = out.join("landmarks.jsonl");
    let f = std::fs::File::create(&lm_path).map_err(|e| io(&lm_path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_landmark_trace(&mut w, rendered.iter().map(|(_, gt)| &gt.landmarks))?;
    w.flush().map_err(|e| io(&lm_path, e))?;
    eprintln!("wrote {} frames to {}", rendered.len(), out.display());
    Ok(())
}
