//! Engine configuration: nested module configs addressed by dotted keys.
//!
//! The same key space serves the `key = value` config file, `--set` CLI
//! overrides and live `set` messages from telemetry clients.

use gazemouse_core::blink::BlinkConfig;
use gazemouse_core::events::EventConfig;
use gazemouse_core::gaze::GazeConfig;
use gazemouse_core::pupil::{Detector, HoughConfig, PupilConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{EngineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorChoice {
    Threshold,
    Hough,
}

/// Kalman smoothing of the per-eye pupil track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingConfig {
    pub process_noise: f64,
    pub measurement_noise: f64,
    pub velocity_variance: f64,
    /// Frames a track coasts on prediction alone before it is dropped.
    pub hold_frames: u32,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            process_noise: 0.5,
            measurement_noise: 1.0,
            velocity_variance: 4.0,
            hold_frames: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub detector: DetectorChoice,
    pub smoothing_enabled: bool,
    /// Pixels added around the landmark bounding box of each eye.
    pub eye_margin: usize,
    /// `None` disables the telemetry server.
    pub telemetry_port: Option<u16>,
    /// Downscale factor of the eye thumbnail attached to reports.
    pub thumbnail_scale: usize,
    pub blink: BlinkConfig,
    pub pupil: PupilConfig,
    pub hough: HoughConfig,
    pub gaze: GazeConfig,
    pub events: EventConfig,
    pub kalman: SmoothingConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorChoice::Threshold,
            smoothing_enabled: false,
            eye_margin: 5,
            telemetry_port: None,
            thumbnail_scale: 2,
            blink: BlinkConfig::default(),
            pupil: PupilConfig::default(),
            hough: HoughConfig::default(),
            gaze: GazeConfig::default(),
            events: EventConfig::default(),
            kalman: SmoothingConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.blink.validate()?;
        self.pupil.validate()?;
        self.hough.validate()?;
        self.gaze.validate()?;
        self.events.validate()?;
        let k = &self.kalman;
        if !(k.process_noise >= 0.0 && k.measurement_noise > 0.0 && k.velocity_variance >= 0.0)
            || !(k.process_noise.is_finite() && k.measurement_noise.is_finite() && k.velocity_variance.is_finite())
        {
            return Err(EngineError::BadValue {
                key: "kalman".into(),
                detail: "noise terms must be finite, measurement_noise > 0".into(),
            });
        }
        if self.thumbnail_scale == 0 {
            return Err(EngineError::BadValue {
                key: "thumbnail_scale".into(),
                detail: "must be ≥ 1".into(),
            });
        }
        Ok(())
    }

    pub fn detector(&self) -> Detector {
        match self.detector {
            DetectorChoice::Threshold => Detector::Threshold(self.pupil.clone()),
            DetectorChoice::Hough => Detector::Hough(self.hough.clone()),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Sets one field. Strings are parsed as JSON when the field is not a
    /// string, so `"0.25"` and `0.25` are equivalent; `off` or `none`
    /// clears an optional field. On any error `self` is left untouched.
    pub fn set(&mut self, key: &str, value: &Value) -> Result<()> {
        let mut tree = self.to_json();
        let slot = lookup_mut(&mut tree, key).ok_or_else(|| EngineError::UnknownKey(key.into()))?;
        if slot.is_object() {
            return Err(EngineError::UnknownKey(key.into()));
        }
        *slot = coerce(slot, value);
        let bad = |detail: String| EngineError::BadValue {
            key: key.into(),
            detail,
        };
        let next: EngineConfig = serde_json::from_value(tree).map_err(|e| bad(e.to_string()))?;
        next.validate().map_err(|e| bad(e.to_string()))?;
        *self = next;
        Ok(())
    }

    pub fn set_str(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key, &Value::String(value.into()))
    }

    /// Reads a `key = value` file body on top of the defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        let mut next = self.clone();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |detail: String| EngineError::ConfigSyntax { line: i + 1, detail };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            next.set_str(k.trim(), v.trim()).map_err(|e| syntax(e.to_string()))?;
        }
        *self = next;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::io(path, e))?;
        Self::parse_kv(&text)
    }

    /// Every leaf as a `key = value` line, in serialization order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        flatten("", &self.to_json(), &mut out);
        out
    }
}

fn lookup_mut<'a>(tree: &'a mut Value, key: &str) -> Option<&'a mut Value> {
    key.split('.').try_fold(tree, |node, part| node.as_object_mut()?.get_mut(part))
}

fn coerce(slot: &Value, value: &Value) -> Value {
    match value {
        Value::String(s) if matches!(s.trim(), "off" | "none") && !slot.is_string() => Value::Null,
        Value::String(s) if !slot.is_string() => {
            serde_json::from_str(s.trim()).unwrap_or_else(|_| value.clone())
        }
        _ => value.clone(),
    }
}

fn flatten(prefix: &str, node: &Value, out: &mut String) {
    match node {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix} = {s}\n")),
        Value::Null => out.push_str(&format!("{prefix} = off\n")),
        v => out.push_str(&format!("{prefix} = {v}\n")),
    }
}
