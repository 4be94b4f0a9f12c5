use crate::level::{Role, Segment, TileAlphabet, TileGrid};

/// A pipe or cannon tile that breaks an adjacency rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FaultyTile {
    pub row: usize,
    pub col: usize,
    pub glyph: char,
}

/// Lists pipe and cannon tiles that violate the structural rules:
///
/// * a pipe top or body tile needs its partner on the other side;
/// * a pipe body tile needs a pipe tile of the same side above it;
/// * every pipe tile rests on a solid tile or the bottom row;
/// * a cannon body sits under a cannon head or another cannon body.
///
/// Tiles are reported in column-major order.
pub fn detect_faulty_tiles(segment: &Segment) -> Vec<FaultyTile> {
    detect_in(segment.grid())
}

fn detect_in(grid: &TileGrid) -> Vec<FaultyTile> {
    let role_at = |r: isize, c: isize| grid.try_get(r, c).map(|t| t.role());
    let mut out = Vec::new();
    for c in 0..grid.width() {
        for r in 0..grid.height() {
            let tile = grid.get(r, c);
            let role = tile.role();
            if !(role.is_pipe() || role == Role::CannonBody) {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let above = role_at(ri - 1, ci);
            let partner_ok = match role {
                Role::PipeTopLeft => role_at(ri, ci + 1) == Some(Role::PipeTopRight),
                Role::PipeTopRight => role_at(ri, ci - 1) == Some(Role::PipeTopLeft),
                Role::PipeBodyLeft => {
                    role_at(ri, ci + 1) == Some(Role::PipeBodyRight)
                        && matches!(above, Some(Role::PipeTopLeft | Role::PipeBodyLeft))
                }
                Role::PipeBodyRight => {
                    role_at(ri, ci - 1) == Some(Role::PipeBodyLeft)
                        && matches!(above, Some(Role::PipeTopRight | Role::PipeBodyRight))
                }
                Role::CannonBody => matches!(above, Some(Role::CannonHead | Role::CannonBody)),
                _ => true,
            };
            let supported = !role.is_pipe()
                || r + 1 == grid.height()
                || grid.get(r + 1, c).is_solid();
            if !(partner_ok && supported) {
                out.push(FaultyTile { row: r, col: c, glyph: tile.glyph() });
            }
        }
    }
    out
}

/// Rule-based pipe and cannon repairer.
#[derive(Debug, Clone, Default)]
pub struct Repairer {
    alphabet: TileAlphabet,
}

impl Repairer {
    pub fn new(alphabet: TileAlphabet) -> Self {
        Self { alphabet }
    }

    /// Applies, in order: (1) complete a broken pipe top pair by writing the
    /// missing half into an empty cell; (2) extend every pipe column downward
    /// through empty cells until solid support or the bottom; (3) delete
    /// whatever pipe or cannon tiles are still faulty, repeating until none
    /// remain. Other tiles are only touched by (1) and (2), and only when
    /// empty.
    pub fn repair(&self, segment: &Segment) -> Segment {
        let mut out = segment.clone();
        let grid = out.grid_mut();
        let (h, w) = (grid.height(), grid.width());
        let a = &self.alphabet;

        for c in 0..w {
            for r in 0..h {
                match grid.get(r, c).role() {
                    Role::PipeTopLeft if c + 1 < w && grid.get(r, c + 1).role() == Role::Empty => {
                        grid.set(r, c + 1, a.of(Role::PipeTopRight));
                    }
                    Role::PipeTopRight if c > 0 && grid.get(r, c - 1).role() == Role::Empty => {
                        grid.set(r, c - 1, a.of(Role::PipeTopLeft));
                    }
                    _ => {}
                }
            }
        }

        for c in 0..w {
            for r in 0..h.saturating_sub(1) {
                let body = match grid.get(r, c).role() {
                    Role::PipeTopLeft | Role::PipeBodyLeft => Role::PipeBodyLeft,
                    Role::PipeTopRight | Role::PipeBodyRight => Role::PipeBodyRight,
                    _ => continue,
                };
                if grid.get(r + 1, c).role() == Role::Empty {
                    grid.set(r + 1, c, a.of(body));
                }
            }
        }

        loop {
            let faulty = detect_in(grid);
            if faulty.is_empty() {
                break;
            }
            for f in faulty {
                grid.set(f.row, f.col, a.empty());
            }
        }
        out
    }
}
