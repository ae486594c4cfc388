//! Telemetry wire format: WebSocket text frames, one JSON object each.
//!
//! Client → server: `{"type":"set","key":..,"value":..}`, `{"type":"get"}`,
//! `{"type":"snapshot","on":bool}`.
//! Server → client: `{"type":"report",..}`, `{"type":"config",..}` and
//! `{"type":"ack"|"err","key":..,"detail":..}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::EngineConfig;
use crate::error::EngineError;
use crate::pipeline::FrameReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Set { key: String, value: Value },
    Get,
    Snapshot { on: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlMessage {
    Set { key: String, value: Value },
    Get,
    SnapshotOn,
    SnapshotOff,
}

impl From<ClientMessage> for ControlMessage {
    fn from(m: ClientMessage) -> Self {
        match m {
            ClientMessage::Set { key, value } => ControlMessage::Set { key, value },
            ClientMessage::Get => ControlMessage::Get,
            ClientMessage::Snapshot { on: true } => ControlMessage::SnapshotOn,
            ClientMessage::Snapshot { on: false } => ControlMessage::SnapshotOff,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Ack { key: String, detail: String },
    Err { key: Option<String>, detail: String },
    Config(Value),
}

impl Reply {
    pub fn to_json(&self) -> Value {
        match self {
            Reply::Ack { key, detail } => json!({"type": "ack", "key": key, "detail": detail}),
            Reply::Err { key, detail } => json!({"type": "err", "key": key, "detail": detail}),
            Reply::Config(cfg) => tagged("config", cfg.clone()),
        }
    }

    pub fn is_err(&self) -> bool {
        matches!(self, Reply::Err { .. })
    }
}

/// Applies one control message to `cfg`; snapshot toggles are acknowledged
/// here and acted on by the caller. An invalid SET returns the config
/// unchanged with an `err` reply.
pub fn apply_control(cfg: &EngineConfig, msg: &ControlMessage) -> (EngineConfig, Reply) {
    match msg {
        ControlMessage::Set { key, value } => {
            let mut next = cfg.clone();
            match next.set(key, value) {
                Ok(()) => {
                    let detail = format!("{key} = {}", value_at(&next.to_json(), key));
                    (next, Reply::Ack { key: key.clone(), detail })
                }
                Err(e) => {
                    let detail = match &e {
                        EngineError::UnknownKey(_) => format!("unknown key: {key}"),
                        other => other.to_string(),
                    };
                    (cfg.clone(), Reply::Err { key: Some(key.clone()), detail })
                }
            }
        }
        ControlMessage::Get => (cfg.clone(), Reply::Config(cfg.to_json())),
        ControlMessage::SnapshotOn | ControlMessage::SnapshotOff => {
            let on = *msg == ControlMessage::SnapshotOn;
            (cfg.clone(), Reply::Ack { key: "snapshot".into(), detail: on.to_string() })
        }
    }
}

fn value_at(tree: &Value, key: &str) -> Value {
    key.split('.')
        .try_fold(tree, |node, part| node.get(part))
        .cloned()
        .unwrap_or(Value::Null)
}

pub fn report_message(report: &FrameReport) -> Value {
    tagged("report", serde_json::to_value(report).expect("report serializes"))
}

fn tagged(kind: &str, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("type".into(), Value::String(kind.into()));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map)
}

pub fn parse_client_message(text: &str) -> Result<ControlMessage, Reply> {
    serde_json::from_str::<ClientMessage>(text)
        .map(Into::into)
        .map_err(|e| Reply::Err {
            key: None,
            detail: format!("bad message: {e}"),
        })
}
