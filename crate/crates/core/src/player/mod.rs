//! Playability testing: exhaustive reachability search for a one-tile agent
//! under a discrete tick model.
//!
//! Each tick the agent is in one of three phases:
//!
//! * **grounded** on a solid tile: walk one column (stepping off a ledge
//!   starts a fall) or start a jump;
//! * **rising** for up to `max_jump_rise` ticks: one row up per tick while
//!   the cell above is free, otherwise it starts falling;
//! * **falling**: `gravity` rows down per tick until it lands on a solid
//!   tile. Falling below the bottom row is death.
//!
//! While airborne the agent may also shift up to `horizontal_air_control`
//! columns per tick, but only during its first `max_air_steps` airborne
//! ticks. Enemies and collectibles are passable.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::{Level, Segment, TileGrid};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlayerError {
    #[error("column {0} has no solid tile to spawn on")]
    NoSpawn(usize),
    #[error("column {col} is outside the strip of width {width}")]
    ColumnOutOfRange { col: usize, width: usize },
    #[error("invalid start state {0:?}")]
    InvalidStart(AgentState),
    #[error("invalid physics: {0}")]
    Physics(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsParams {
    pub max_jump_rise: usize,
    pub max_air_steps: usize,
    pub horizontal_air_control: usize,
    pub gravity: usize,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { max_jump_rise: 4, max_air_steps: 10, horizontal_air_control: 1, gravity: 1 }
    }
}

impl PhysicsParams {
    pub fn validate(&self, segment_height: usize) -> Result<(), PlayerError> {
        if self.max_jump_rise == 0
            || self.max_air_steps == 0
            || self.horizontal_air_control == 0
            || self.gravity == 0
        {
            return Err(PlayerError::Physics("all parameters must be positive".into()));
        }
        if self.max_jump_rise + 1 > segment_height {
            return Err(PlayerError::Physics(format!(
                "max_jump_rise {} exceeds segment height - 1",
                self.max_jump_rise
            )));
        }
        Ok(())
    }

    fn phase_count(&self) -> usize {
        1 + self.max_jump_rise + self.max_air_steps + 1
    }
}

/// Movement phase. Ordering is grounded < rising < falling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Grounded,
    /// Ticks spent rising so far (1..=max_jump_rise).
    Rising(u8),
    /// Airborne ticks so far, saturating at `max_air_steps`.
    Falling(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentState {
    pub col: usize,
    pub row: usize,
    pub phase: Phase,
}

impl AgentState {
    pub fn grounded(col: usize, row: usize) -> Self {
        Self { col, row, phase: Phase::Grounded }
    }

    /// The same state shifted `offset` columns to the left.
    pub fn shifted_left(self, offset: usize) -> Option<Self> {
        self.col.checked_sub(offset).map(|col| Self { col, ..self })
    }

    pub fn shifted_right(self, offset: usize) -> Self {
        Self { col: self.col + offset, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayResult {
    pub playable: bool,
    /// Where the agent stands when it reaches the right-most column: the
    /// reached state there with the smallest `(row, phase)`.
    pub end_state: Option<AgentState>,
    pub visited_states: usize,
}

/// Grounded spawn atop the highest solid tile of a column.
pub fn spawn_state(strip: &TileGrid, col: usize) -> Result<AgentState, PlayerError> {
    if col >= strip.width() {
        return Err(PlayerError::ColumnOutOfRange { col, width: strip.width() });
    }
    (0..strip.height().saturating_sub(1))
        .find(|&r| !strip.get(r, col).is_solid() && strip.get(r + 1, col).is_solid())
        .map(|r| AgentState::grounded(col, r))
        .ok_or(PlayerError::NoSpawn(col))
}

struct Space<'a> {
    grid: &'a TileGrid,
    phys: PhysicsParams,
    phases: usize,
}

impl Space<'_> {
    fn free(&self, row: isize, col: isize) -> bool {
        self.grid.try_get(row, col).is_some_and(|t| !t.is_solid())
    }

    fn supported(&self, row: usize, col: usize) -> bool {
        row + 1 < self.grid.height() && self.grid.get(row + 1, col).is_solid()
    }

    fn index(&self, s: &AgentState) -> usize {
        let phase = match s.phase {
            Phase::Grounded => 0,
            Phase::Rising(t) => t as usize,
            Phase::Falling(a) => 1 + self.phys.max_jump_rise + a as usize,
        };
        (s.col * self.grid.height() + s.row) * self.phases + phase
    }

    fn len(&self) -> usize {
        self.grid.width() * self.grid.height() * self.phases
    }

    fn valid(&self, s: &AgentState) -> bool {
        if s.col >= self.grid.width() || s.row >= self.grid.height() {
            return false;
        }
        if self.grid.get(s.row, s.col).is_solid() {
            return false;
        }
        match s.phase {
            Phase::Grounded => self.supported(s.row, s.col),
            Phase::Rising(t) => t >= 1 && (t as usize) <= self.phys.max_jump_rise,
            Phase::Falling(a) => (a as usize) <= self.phys.max_air_steps,
        }
    }

    /// Cells passed when shifting `dc` columns along `row` from `col`.
    fn lateral_clear(&self, row: isize, col: isize, dc: isize) -> bool {
        let step = dc.signum();
        (1..=dc.abs()).all(|k| self.free(row, col + k * step))
    }

    fn successors(&self, s: AgentState, out: &mut Vec<AgentState>) {
        let (r, c) = (s.row as isize, s.col as isize);
        match s.phase {
            Phase::Grounded => {
                for dc in [-1isize, 1] {
                    if self.free(r, c + dc) {
                        let nc = (c + dc) as usize;
                        let phase = if self.supported(s.row, nc) { Phase::Grounded } else { Phase::Falling(0) };
                        out.push(AgentState { col: nc, row: s.row, phase });
                    }
                }
                if self.free(r - 1, c) {
                    self.rise(r - 1, c, 1, out);
                }
            }
            Phase::Rising(t) => {
                if (t as usize) < self.phys.max_jump_rise && self.free(r - 1, c) {
                    self.rise(r - 1, c, t + 1, out);
                } else {
                    self.fall(s, t, out);
                }
            }
            Phase::Falling(a) => self.fall(s, a, out),
        }
    }

    /// Moves up into row `row` (already known free at `col`) with optional drift.
    fn rise(&self, row: isize, col: isize, ticks: u8, out: &mut Vec<AgentState>) {
        let drift = if (ticks as usize) <= self.phys.max_air_steps {
            self.phys.horizontal_air_control as isize
        } else {
            0
        };
        for dc in -drift..=drift {
            if self.lateral_clear(row, col, dc) {
                out.push(AgentState {
                    col: (col + dc) as usize,
                    row: row as usize,
                    phase: Phase::Rising(ticks),
                });
            }
        }
    }

    fn fall(&self, s: AgentState, air: u8, out: &mut Vec<AgentState>) {
        if self.supported(s.row, s.col) {
            out.push(AgentState::grounded(s.col, s.row));
            return;
        }
        // Drop up to `gravity` rows, stopping early on landing.
        let mut row = s.row;
        for _ in 0..self.phys.gravity {
            if row + 1 >= self.grid.height() {
                return;
            }
            row += 1;
            if self.supported(row, s.col) {
                break;
            }
        }
        let drift = if (air as usize) < self.phys.max_air_steps {
            self.phys.horizontal_air_control as isize
        } else {
            0
        };
        let next_air = (air as usize + 1).min(self.phys.max_air_steps) as u8;
        for dc in -drift..=drift {
            if self.lateral_clear(row as isize, s.col as isize, dc) {
                out.push(AgentState {
                    col: (s.col as isize + dc) as usize,
                    row,
                    phase: Phase::Falling(next_air),
                });
            }
        }
    }
}

struct SearchOutcome {
    result: PlayResult,
    parents: Vec<u32>,
    states: Vec<AgentState>,
}

fn search(strip: &TileGrid, start: AgentState, phys: &PhysicsParams) -> Result<SearchOutcome, PlayerError> {
    phys.validate(strip.height())?;
    let space = Space { grid: strip, phys: *phys, phases: phys.phase_count() };
    if !space.valid(&start) {
        return Err(PlayerError::InvalidStart(start));
    }
    let target = strip.width() - 1;
    let mut seen = vec![false; space.len()];
    // BFS order, with the parent of each state for path reconstruction.
    let mut states = vec![start];
    let mut parents = vec![u32::MAX];
    seen[space.index(&start)] = true;
    let mut queue = VecDeque::from([0usize]);
    let mut end: Option<AgentState> = None;
    let mut next = Vec::with_capacity(8);
    while let Some(i) = queue.pop_front() {
        let s = states[i];
        if s.col == target {
            end = Some(end.map_or(s, |e| e.min(s)));
        }
        next.clear();
        space.successors(s, &mut next);
        for &n in &next {
            let idx = space.index(&n);
            if !seen[idx] {
                seen[idx] = true;
                states.push(n);
                parents.push(i as u32);
                queue.push_back(states.len() - 1);
            }
        }
    }
    Ok(SearchOutcome {
        result: PlayResult { playable: end.is_some(), end_state: end, visited_states: states.len() },
        parents,
        states,
    })
}

/// Searches every state reachable from `start` and reports whether the
/// right-most column of `strip` can be reached.
pub fn test_playability(
    strip: &TileGrid,
    start: AgentState,
    phys: &PhysicsParams,
) -> Result<PlayResult, PlayerError> {
    search(strip, start, phys).map(|o| o.result)
}

/// The state sequence from `start` to the end state, if the strip is playable.
pub fn find_path(
    strip: &TileGrid,
    start: AgentState,
    phys: &PhysicsParams,
) -> Result<Option<Vec<AgentState>>, PlayerError> {
    let outcome = search(strip, start, phys)?;
    let Some(end) = outcome.result.end_state else {
        return Ok(None);
    };
    let mut i = outcome.states.iter().position(|s| *s == end).expect("end state was visited");
    let mut path = vec![outcome.states[i]];
    while outcome.parents[i] != u32::MAX {
        i = outcome.parents[i] as usize;
        path.push(outcome.states[i]);
    }
    path.reverse();
    Ok(Some(path))
}

/// One line per state: `tick col row phase`.
pub fn format_trace(path: &[AgentState]) -> String {
    let mut out = String::from("tick col row phase\n");
    for (t, s) in path.iter().enumerate() {
        let phase = match s.phase {
            Phase::Grounded => "grounded".to_string(),
            Phase::Rising(k) => format!("rising({k})"),
            Phase::Falling(a) => format!("falling({a})"),
        };
        let _ = writeln!(out, "{t} {} {} {phase}", s.col, s.row);
    }
    out
}

/// Completed-segment count used as the episode-level playability metric.
pub fn playability_reward(segments_completed: usize) -> f64 {
    segments_completed as f64
}

/// Tests a new segment appended after the last `window - 1` segments of
/// `level`, starting from `previous_end` (level coordinates). For an empty
/// level the agent spawns in the segment's first column.
#[derive(Debug, Clone)]
pub struct Playtester {
    pub physics: PhysicsParams,
    /// Segments per tested strip, including the new one.
    pub window: usize,
}

/// Outcome of testing one appended segment, with the end state already
/// converted to level coordinates (as if the segment were appended).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlay {
    pub playable: bool,
    pub end_state: Option<AgentState>,
    pub visited_states: usize,
}

impl Default for Playtester {
    fn default() -> Self {
        Self { physics: PhysicsParams::default(), window: 4 }
    }
}

impl Playtester {
    pub fn new(physics: PhysicsParams) -> Self {
        Self { physics, ..Default::default() }
    }

    pub fn test_segment(
        &self,
        level: &Level,
        previous_end: Option<AgentState>,
        segment: &Segment,
    ) -> Result<SegmentPlay, PlayerError> {
        let w = level.segment_width();
        let kept = level.segment_count().min(self.window.saturating_sub(1));
        let strip_start = level.width() - kept * w;
        let mut strip = level.grid().window(strip_start, kept * w).expect("window inside level");
        strip.append(segment.grid()).map_err(|_| PlayerError::Physics("segment height mismatch".into()))?;
        let start = match previous_end.and_then(|s| s.shifted_left(strip_start)) {
            Some(s) if kept > 0 => s,
            _ => match spawn_state(&strip, kept * w) {
                Ok(s) => s,
                Err(PlayerError::NoSpawn(_)) => {
                    return Ok(SegmentPlay { playable: false, end_state: None, visited_states: 0 })
                }
                Err(e) => return Err(e),
            },
        };
        let result = test_playability(&strip, start, &self.physics)?;
        Ok(SegmentPlay {
            playable: result.playable,
            end_state: result.end_state.map(|s| s.shifted_right(strip_start)),
            visited_states: result.visited_states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::TileAlphabet;

    fn grid(rows: &[String]) -> TileGrid {
        TileGrid::parse(&rows.join("\n"), &TileAlphabet::vglc()).unwrap()
    }

    fn column_grid(heights: &[usize]) -> TileGrid {
        let rows: Vec<String> = (0..14)
            .map(|r| heights.iter().map(|&h| if r >= 14 - h { 'X' } else { '-' }).collect())
            .collect();
        grid(&rows)
    }

    #[test]
    fn spawn_positions() {
        let flat = column_grid(&[2; 3]);
        assert_eq!(spawn_state(&flat, 0).unwrap(), AgentState::grounded(0, 11));
        let mut rows: Vec<String> = (0..14).map(|r| if r == 13 { "X".into() } else { "-".into() }).collect();
        rows[5] = "X".into();
        assert_eq!(spawn_state(&grid(&rows), 0).unwrap().row, 4);
        let empty = column_grid(&[0; 2]);
        assert_eq!(spawn_state(&empty, 0), Err(PlayerError::NoSpawn(0)));
        assert!(matches!(spawn_state(&empty, 5), Err(PlayerError::ColumnOutOfRange { .. })));
    }

    #[test]
    fn flat_is_playable() {
        let g = column_grid(&[2; 56]);
        let r = test_playability(&g, spawn_state(&g, 0).unwrap(), &PhysicsParams::default()).unwrap();
        assert!(r.playable);
        let end = r.end_state.unwrap();
        assert_eq!(end.col, 55);
        // highest reachable point in the last column is the jump apex
        assert_eq!(end.row, 11 - 4);
    }

    #[test]
    fn wall_heights() {
        let phys = PhysicsParams::default();
        for (wall, playable) in [(4, true), (5, false)] {
            let mut h = vec![2; 20];
            h[10] = 2 + wall;
            let g = column_grid(&h);
            let r = test_playability(&g, spawn_state(&g, 0).unwrap(), &phys).unwrap();
            assert_eq!(r.playable, playable, "wall {wall}");
        }
    }

    #[test]
    fn widest_gap() {
        let phys = PhysicsParams::default();
        for (gap, playable) in [(7, true), (8, false), (12, false)] {
            let mut h = vec![2; 30];
            for c in 5..5 + gap {
                h[c] = 0;
            }
            let g = column_grid(&h);
            let r = test_playability(&g, spawn_state(&g, 0).unwrap(), &phys).unwrap();
            assert_eq!(r.playable, playable, "gap {gap}");
        }
    }

    #[test]
    fn invalid_start() {
        let g = column_grid(&[2; 5]);
        let phys = PhysicsParams::default();
        assert!(test_playability(&g, AgentState::grounded(0, 13), &phys).is_err());
        assert!(test_playability(&g, AgentState::grounded(0, 5), &phys).is_err());
        assert!(test_playability(&g, AgentState::grounded(9, 11), &phys).is_err());
    }

    #[test]
    fn path_trace() {
        let mut h = vec![2; 10];
        h[5] = 5;
        let g = column_grid(&h);
        let path = find_path(&g, spawn_state(&g, 0).unwrap(), &PhysicsParams::default())
            .unwrap()
            .unwrap();
        assert_eq!(path[0], AgentState::grounded(0, 11));
        assert_eq!(path.last().unwrap().col, 9);
        let text = format_trace(&path);
        assert!(text.starts_with("tick col row phase\n0 0 11 grounded\n"));
    }

    #[test]
    fn reward_is_count() {
        assert_eq!(playability_reward(0), 0.0);
        assert_eq!(playability_reward(97), 97.0);
        assert_eq!(playability_reward(100), 100.0);
    }
}
