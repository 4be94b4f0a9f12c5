use std::io::Write;

use serde::Serialize;

use super::grid::Segment;
use super::tile::Role;

/// Counts of the level elements reported per segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ElementCensus {
    pub gaps: u32,
    pub pipes: u32,
    pub enemies: u32,
    pub bullets: u32,
    pub coins: u32,
    pub question_marks: u32,
}

impl ElementCensus {
    pub fn add(&mut self, other: &ElementCensus) {
        self.gaps += other.gaps;
        self.pipes += other.pipes;
        self.enemies += other.enemies;
        self.bullets += other.bullets;
        self.coins += other.coins;
        self.question_marks += other.question_marks;
    }

    pub fn as_array(&self) -> [u32; 6] {
        [self.gaps, self.pipes, self.enemies, self.bullets, self.coins, self.question_marks]
    }

    pub const FIELDS: [&'static str; 6] =
        ["gaps", "pipes", "enemies", "bullets", "coins", "question_marks"];
}

/// Counts elements in a segment. A gap is a maximal run of columns whose
/// bottom tile is not solid.
pub fn census(segment: &Segment) -> ElementCensus {
    let grid = segment.grid();
    let mut out = ElementCensus::default();
    let bottom = grid.height().saturating_sub(1);
    let mut in_gap = false;
    for c in 0..grid.width() {
        let open = grid.height() == 0 || !grid.get(bottom, c).is_solid();
        if open && !in_gap {
            out.gaps += 1;
        }
        in_gap = open;
        for tile in grid.column(c) {
            match tile.role() {
                Role::PipeTopLeft => out.pipes += 1,
                Role::Enemy => out.enemies += 1,
                Role::CannonHead => out.bullets += 1,
                Role::Coin => out.coins += 1,
                Role::Question => out.question_marks += 1,
                _ => {}
            }
        }
    }
    out
}

/// Writes one CSV row per segment: `level,segment,gaps,pipes,...`.
pub fn write_census_csv<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a str, usize, ElementCensus)>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["level", "segment"];
    header.extend(ElementCensus::FIELDS);
    w.write_record(&header)?;
    for (level, segment, census) in rows {
        let mut record = vec![level.to_string(), segment.to_string()];
        record.extend(census.as_array().iter().map(u32::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
