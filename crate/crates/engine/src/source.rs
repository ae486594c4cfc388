//! Frame sources. Live camera capture is left to platform adapters that
//! implement [`FrameSource`].

use std::path::{Path, PathBuf};

use gazemouse_core::imaging::pgm;
use gazemouse_core::GrayImage;

use crate::error::{io, Result};

pub trait FrameSource {
    /// Next `(frame_index, image)`, or `None` when exhausted.
    fn next_frame(&mut self) -> Option<Result<(u64, GrayImage)>>;
}

/// PGM files of a directory in file-name order; the i-th file is frame i.
#[derive(Debug)]
pub struct DirectorySource {
    files: Vec<PathBuf>,
    pos: usize,
}

impl DirectorySource {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
            let path = entry.map_err(|e| io(dir, e))?.path();
            if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")) {
                files.push(path);
            }
        }
        files.sort();
        Ok(Self { files, pos: 0 })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Decodes every remaining frame up front.
    pub fn load_all(self) -> Result<MemorySource> {
        let frames = self.collect::<Result<Vec<_>>>()?;
        Ok(MemorySource::indexed(frames))
    }
}

impl Iterator for DirectorySource {
    type Item = Result<(u64, GrayImage)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame()
    }
}

impl FrameSource for DirectorySource {
    fn next_frame(&mut self) -> Option<Result<(u64, GrayImage)>> {
        let path = self.files.get(self.pos)?;
        let index = self.pos as u64;
        self.pos += 1;
        Some(pgm::read(path).map(|img| (index, img)).map_err(Into::into))
    }
}

#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    frames: std::collections::VecDeque<(u64, GrayImage)>,
}

impl MemorySource {
    /// Frames numbered from 0.
    pub fn new(frames: impl IntoIterator<Item = GrayImage>) -> Self {
        Self::indexed(frames.into_iter().enumerate().map(|(i, f)| (i as u64, f)))
    }

    pub fn indexed(frames: impl IntoIterator<Item = (u64, GrayImage)>) -> Self {
        Self {
            frames: frames.into_iter().collect(),
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = &(u64, GrayImage)> {
        self.frames.iter()
    }
}

impl FrameSource for MemorySource {
    fn next_frame(&mut self) -> Option<Result<(u64, GrayImage)>> {
        self.frames.pop_front().map(Ok)
    }
}
