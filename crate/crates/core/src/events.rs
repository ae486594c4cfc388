//! Cursor event synthesis from gaze directions and blinks, plus the event
//! trace format used in place of OS cursor injection.
//!
//! Trace files are JSON Lines, one event per line:
//! `{"frame":12,"kind":"move_by","dx":-12,"dy":0}` or
//! `{"frame":30,"kind":"click_left"}`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blink::{BlinkEvent, BlinkKind};
use crate::error::{Error, Result};
use crate::gaze::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventConfig {
    /// Frames a direction must persist before the cursor starts moving.
    pub dwell_frames: u32,
    pub move_step: i32,
    pub click_refractory_frames: u64,
    /// INVALID frames tolerated before a sustained direction is dropped.
    pub hold_frames: u32,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            dwell_frames: 3,
            move_step: 12,
            click_refractory_frames: 15,
            hold_frames: 5,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dwell_frames < 1 {
            return Err(Error::InvalidParameter("events.dwell_frames must be ≥ 1".into()));
        }
        if self.move_step < 0 {
            return Err(Error::InvalidParameter("events.move_step must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    MoveBy { dx: i32, dy: i32 },
    ClickLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CursorEvent {
    #[serde(rename = "frame")]
    pub frame_index: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventState {
    /// Direction of the current run, if any.
    pub current_direction: Option<Direction>,
    pub direction_run: u32,
    pub invalid_run: u32,
    pub refractory_until: u64,
    pub last_frame: Option<u64>,
}

fn step_for(direction: Direction, step: i32) -> Option<(i32, i32)> {
    match direction {
        Direction::Left => Some((-step, 0)),
        Direction::Right => Some((step, 0)),
        Direction::Up => Some((0, -step)),
        Direction::Down => Some((0, step)),
        _ => None,
    }
}

/// Advances the event machine by one frame.
///
/// * A movement direction held for `dwell_frames` frames moves the cursor by
///   `move_step` every frame from then on.
/// * INVALID frames (face lost, eyes shut) keep a sustained movement going
///   for up to `hold_frames` frames; a longer gap ends the run.
/// * CENTER ends the run.
/// * A short blink clicks unless a click happened within the last
///   `click_refractory_frames` frames; a long closure does nothing.
pub fn synthesize(
    state: &EventState,
    direction: Direction,
    blink: Option<&BlinkEvent>,
    frame: u64,
    cfg: &EventConfig,
) -> Result<(EventState, Vec<CursorEvent>)> {
    if state.last_frame.is_some_and(|last| frame <= last) {
        return Err(Error::Contract(format!(
            "event frame {frame} does not follow {}",
            state.last_frame.unwrap()
        )));
    }
    let mut next = state.clone();
    next.last_frame = Some(frame);
    let mut out = Vec::new();

    let moving = match direction {
        Direction::Center => {
            next.current_direction = None;
            next.direction_run = 0;
            next.invalid_run = 0;
            None
        }
        Direction::Invalid => {
            next.invalid_run += 1;
            if next.invalid_run > cfg.hold_frames {
                next.current_direction = None;
                next.direction_run = 0;
                None
            } else if next.direction_run >= cfg.dwell_frames {
                next.current_direction
            } else {
                None
            }
        }
        d => {
            if next.current_direction == Some(d) {
                next.direction_run += 1;
            } else {
                next.current_direction = Some(d);
                next.direction_run = 1;
            }
            next.invalid_run = 0;
            (next.direction_run >= cfg.dwell_frames).then_some(d)
        }
    };
    if let Some((dx, dy)) = moving.and_then(|d| step_for(d, cfg.move_step)) {
        out.push(CursorEvent {
            frame_index: frame,
            kind: EventKind::MoveBy { dx, dy },
        });
    }

    if let Some(b) = blink {
        if b.kind == BlinkKind::ShortBlink && frame >= state.refractory_until {
            out.push(CursorEvent {
                frame_index: frame,
                kind: EventKind::ClickLeft,
            });
            next.refractory_until = frame + cfg.click_refractory_frames;
        }
    }
    Ok((next, out))
}

/// Destination for synthesized events. The core ships trace recorders; OS
/// cursor injection lives behind this trait elsewhere.
pub trait EventSink {
    fn emit(&mut self, event: &CursorEvent) -> Result<()>;

    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Writes events as trace lines.
pub struct TraceRecorder<W: Write> {
    out: BufWriter<W>,
}

impl<W: Write> TraceRecorder<W> {
    pub fn new(out: W) -> Self {
        Self {
            out: BufWriter::new(out),
        }
    }

    pub fn into_inner(self) -> Result<W> {
        self.out
            .into_inner()
            .map_err(|e| Error::Stream(e.into_error()))
    }
}

impl TraceRecorder<fs::File> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Self::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
    }
}

impl<W: Write> EventSink for TraceRecorder<W> {
    fn emit(&mut self, event: &CursorEvent) -> Result<()> {
        serde_json::to_writer(&mut self.out, event).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

impl EventSink for Vec<CursorEvent> {
    fn emit(&mut self, event: &CursorEvent) -> Result<()> {
        self.push(*event);
        Ok(())
    }
}

/// Records `events` to `sink` and flushes it.
pub fn record_trace<'a>(
    sink: &mut dyn EventSink,
    events: impl IntoIterator<Item = &'a CursorEvent>,
) -> Result<()> {
    for e in events {
        sink.emit(e)?;
    }
    sink.flush()
}

pub fn parse_trace(reader: impl BufRead) -> Result<Vec<CursorEvent>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            detail: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn replay_trace(path: impl AsRef<Path>) -> Result<Vec<CursorEvent>> {
    let path = path.as_ref();
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(BufReader::new(f))
}
