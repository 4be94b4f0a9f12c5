//! Tile alphabet, segment and level grids, corpus ingestion and element
//! census.

mod census;
mod grid;
mod tile;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use census::{census, write_census_csv, ElementCensus};
pub use grid::{slice_segments, Level, Segment, TileGrid, SEGMENT_SIZE};
pub use tile::{Role, Tile, TileAlphabet};

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("unknown glyph {glyph:?} at row {row}, column {col}")]
    UnknownGlyph { glyph: char, row: usize, col: usize },
    #[error("line {line} has {found} columns, expected {expected}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("level has {found} rows, expected {expected}")]
    WrongHeight { expected: usize, found: usize },
    #[error("empty grid")]
    EmptyGrid,
    #[error("window of width {width} at column {start} exceeds grid width {grid_width}")]
    WindowOutOfBounds { start: usize, width: usize, grid_width: usize },
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("dimension mismatch: expected {expected:?} (rows, columns), found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("alphabet: {0}")]
    Alphabet(String),
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Box<LevelError> },
}

impl LevelError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        LevelError::Io { path: path.to_path_buf(), source }
    }
}

/// Level types recognized in corpus file names.
pub const LEVEL_TYPES: [&str; 3] = ["overworld", "underground", "athletic"];

/// A corpus level plus the type tag taken from its file name.
#[derive(Debug, Clone)]
pub struct CorpusLevel {
    pub name: String,
    pub kind: String,
    pub level: Level,
}

/// Picks the level type from a file name: the first `_`/`-`/`.`-separated
/// token that names a known type, otherwise `"unknown"`.
pub fn type_tag(file_name: &str) -> String {
    file_name
        .split(|c: char| !c.is_ascii_alphanumeric())
        .map(str::to_ascii_lowercase)
        .find(|t| LEVEL_TYPES.contains(&t.as_str()))
        .unwrap_or_else(|| "unknown".to_string())
}

/// Loads every `*.txt` file in `dir` (sorted by name) as a level.
pub fn load_corpus(dir: &Path, alphabet: &TileAlphabet) -> Result<Vec<CorpusLevel>, LevelError> {
    let entries = std::fs::read_dir(dir).map_err(|e| LevelError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| LevelError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(LevelError::Corpus(format!("no .txt levels in {}", dir.display())));
    }
    paths
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| LevelError::io(path, e))?;
            let level = Level::parse(&text, alphabet).map_err(|e| LevelError::File {
                path: path.clone(),
                source: Box::new(e),
            })?;
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            Ok(CorpusLevel { kind: type_tag(&name), name, level })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_tags() {
        assert_eq!(type_tag("overworld_1-1.txt"), "overworld");
        assert_eq!(type_tag("mario-1-2-Underground.txt"), "underground");
        assert_eq!(type_tag("athletic.txt"), "athletic");
        assert_eq!(type_tag("mario-1-1.txt"), "unknown");
    }
}
