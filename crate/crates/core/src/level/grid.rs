use std::fmt;

use super::tile::{Tile, TileAlphabet};
use super::LevelError;

/// Default segment edge length in tiles.
pub const SEGMENT_SIZE: usize = 14;

/// A rectangular tile grid stored column-major, so appending columns and
/// cutting column windows are cheap. Row 0 is the top.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TileGrid {
    height: usize,
    width: usize,
    cells: Vec<Tile>,
}

impl TileGrid {
    pub fn filled(height: usize, width: usize, tile: Tile) -> Self {
        Self { height, width, cells: vec![tile; height * width] }
    }

    /// Builds a grid from rows (row 0 first).
    pub fn from_rows(rows: &[Vec<Tile>]) -> Result<Self, LevelError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(height * width);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(LevelError::Ragged { line: r, expected: width, found: row.len() });
            }
        }
        for c in 0..width {
            for row in rows {
                cells.push(row[c]);
            }
        }
        Ok(Self { height, width, cells })
    }

    /// Parses a character grid. Every line must have the same length.
    pub fn parse(text: &str, alphabet: &TileAlphabet) -> Result<Self, LevelError> {
        let mut rows = Vec::new();
        for (r, line) in split_lines(text).enumerate() {
            let mut row = Vec::with_capacity(line.len());
            for (c, glyph) in line.chars().enumerate() {
                let tile = alphabet
                    .tile(glyph)
                    .ok_or(LevelError::UnknownGlyph { glyph, row: r, col: c })?;
                row.push(tile);
            }
            if let Some(first) = rows.first().map(Vec::len) {
                if row.len() != first {
                    return Err(LevelError::Ragged { line: r, expected: first, found: row.len() });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LevelError::EmptyGrid);
        }
        Self::from_rows(&rows)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Tile {
        debug_assert!(row < self.height && col < self.width);
        self.cells[col * self.height + row]
    }

    /// Bounds-checked lookup taking signed coordinates.
    #[inline]
    pub fn try_get(&self, row: isize, col: isize) -> Option<Tile> {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, tile: Tile) {
        self.cells[col * self.height + row] = tile;
    }

    pub fn column(&self, col: usize) -> &[Tile] {
        &self.cells[col * self.height..(col + 1) * self.height]
    }

    /// Copy of the columns `[start, start + width)`.
    pub fn window(&self, start: usize, width: usize) -> Result<TileGrid, LevelError> {
        if start + width > self.width {
            return Err(LevelError::WindowOutOfBounds { start, width, grid_width: self.width });
        }
        Ok(Self {
            height: self.height,
            width,
            cells: self.cells[start * self.height..(start + width) * self.height].to_vec(),
        })
    }

    /// Appends the columns of `other` on the right.
    pub fn append(&mut self, other: &TileGrid) -> Result<(), LevelError> {
        if self.width > 0 && other.height != self.height {
            return Err(LevelError::DimensionMismatch {
                expected: (self.height, other.width),
                found: (other.height, other.width),
            });
        }
        if self.width == 0 {
            self.height = other.height;
        }
        self.cells.extend_from_slice(&other.cells);
        self.width += other.width;
        Ok(())
    }

    pub fn rows(&self) -> impl Iterator<Item = impl Iterator<Item = Tile> + '_> + '_ {
        (0..self.height).map(move |r| (0..self.width).map(move |c| self.get(r, c)))
    }

    pub fn tiles(&self) -> impl Iterator<Item = Tile> + '_ {
        self.cells.iter().copied()
    }

    /// Rows joined with `\n`, each row terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.rows() {
            out.extend(row.map(Tile::glyph));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn split_lines(text: &str) -> impl Iterator<Item = &str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l))
}

/// One fixed-size slice of a level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment(TileGrid);

impl Segment {
    pub fn new(grid: TileGrid) -> Self {
        Self(grid)
    }

    pub fn parse(text: &str, alphabet: &TileAlphabet) -> Result<Self, LevelError> {
        TileGrid::parse(text, alphabet).map(Self)
    }

    pub fn grid(&self) -> &TileGrid {
        &self.0
    }

    pub fn grid_mut(&mut self) -> &mut TileGrid {
        &mut self.0
    }

    pub fn into_grid(self) -> TileGrid {
        self.0
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn get(&self, row: usize, col: usize) -> Tile {
        self.0.get(row, col)
    }

    pub fn to_text(&self) -> String {
        self.0.to_text()
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Line-ending details of a parsed file, kept so serialization reproduces
/// the input byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TextLayout {
    trailing_newline: bool,
    crlf: bool,
}

impl Default for TextLayout {
    fn default() -> Self {
        Self { trailing_newline: true, crlf: false }
    }
}

/// A level: segments concatenated left to right into one grid.
///
/// Corpus levels need not be a whole number of segments wide; generated
/// levels always are.
#[derive(Debug, Clone)]
pub struct Level {
    grid: TileGrid,
    segment_width: usize,
    layout: TextLayout,
}

impl PartialEq for Level {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.segment_width == other.segment_width
    }
}

impl Eq for Level {}

impl Level {
    pub fn empty(height: usize, segment_width: usize) -> Self {
        Self {
            grid: TileGrid { height, width: 0, cells: Vec::new() },
            segment_width,
            layout: TextLayout::default(),
        }
    }

    pub fn from_grid(grid: TileGrid, segment_width: usize) -> Self {
        Self { grid, segment_width, layout: TextLayout::default() }
    }

    /// Parses a VGLC text level whose height must equal `height`.
    pub fn parse_with_height(
        text: &str,
        alphabet: &TileAlphabet,
        height: usize,
    ) -> Result<Self, LevelError> {
        let grid = TileGrid::parse(text, alphabet)?;
        if grid.height != height {
            return Err(LevelError::WrongHeight { expected: height, found: grid.height });
        }
        let layout = TextLayout {
            trailing_newline: text.ends_with('\n'),
            crlf: text.contains("\r\n"),
        };
        Ok(Self { grid, segment_width: SEGMENT_SIZE, layout })
    }

    pub fn parse(text: &str, alphabet: &TileAlphabet) -> Result<Self, LevelError> {
        Self::parse_with_height(text, alphabet, SEGMENT_SIZE)
    }

    pub fn serialize(&self) -> String {
        let eol = if self.layout.crlf { "\r\n" } else { "\n" };
        let mut out = String::with_capacity((self.grid.width + 2) * self.grid.height);
        for (r, row) in self.grid.rows().enumerate() {
            if r > 0 {
                out.push_str(eol);
            }
            out.extend(row.map(Tile::glyph));
        }
        if self.layout.trailing_newline {
            out.push_str(eol);
        }
        out
    }

    pub fn grid(&self) -> &TileGrid {
        &self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn segment_width(&self) -> usize {
        self.segment_width
    }

    /// Number of whole segments in the level.
    pub fn segment_count(&self) -> usize {
        self.grid.width / self.segment_width
    }

    pub fn segment(&self, index: usize) -> Option<Segment> {
        self.grid
            .window(index * self.segment_width, self.segment_width)
            .ok()
            .map(Segment)
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.segment_count()).filter_map(|i| self.segment(i))
    }

    /// Appends a segment on the right.
    pub fn concat(&mut self, segment: &Segment) -> Result<(), LevelError> {
        if segment.height() != self.grid.height || segment.width() != self.segment_width {
            return Err(LevelError::DimensionMismatch {
                expected: (self.grid.height, self.segment_width),
                found: (segment.height(), segment.width()),
            });
        }
        self.grid.append(&segment.0)
    }

    pub fn with(mut self, segment: &Segment) -> Result<Self, LevelError> {
        self.concat(segment)?;
        Ok(self)
    }
}

/// Cuts `width`-column windows at offsets `0, stride, 2*stride, ...` while
/// the window fits.
pub fn slice_segments(
    grid: &TileGrid,
    width: usize,
    stride: usize,
) -> Result<Vec<Segment>, LevelError> {
    if stride == 0 {
        return Err(LevelError::ZeroStride);
    }
    if width == 0 || width > grid.width {
        return Err(LevelError::WindowOutOfBounds { start: 0, width, grid_width: grid.width });
    }
    Ok((0..=grid.width - width)
        .step_by(stride)
        .map(|off| Segment(grid.window(off, width).expect("offset in range")))
        .collect())
}
