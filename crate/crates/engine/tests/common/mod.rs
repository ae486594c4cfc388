#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gazemouse_core::landmarks::TraceProvider;
use gazemouse_core::synth::{render_trace, TraceScript};
use gazemouse_core::GrayImage;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn golden_script() -> TraceScript {
    serde_json::from_str(&std::fs::read_to_string(data("golden_script.json")).unwrap()).unwrap()
}

pub fn render(script: &TraceScript) -> (Vec<GrayImage>, TraceProvider) {
    let frames = render_trace(script).unwrap();
    let provider = TraceProvider::from_sets(frames.iter().map(|(_, gt)| gt.landmarks.clone()));
    (frames.into_iter().map(|(img, _)| img).collect(), provider)
}
