use crate::level::{Role, Segment, TileAlphabet, TileGrid, SEGMENT_SIZE};

use super::latent::LatentVector;

/// Largest height difference between neighbouring ground columns.
pub const MAX_GROUND_STEP: i64 = 2;

/// Hand-written latent decoder. Each latent dimension drives one feature:
///
/// | dims  | feature                                                           |
/// |-------|-------------------------------------------------------------------|
/// | 0-13  | ground height of column i: `round(4 + 3 z)`, smoothed to steps <= 2 |
/// | 14-17 | 2-wide gap at `round(6.5 (z + 1))` when `z > 0.5`                |
/// | 18-21 | pipe of height `2 + round(z + 1)` at `round(6 (z + 1))` when `z > 0.3` |
/// | 22-25 | enemy on the ground at `round(6.5 (z + 1))` when `z > 0.4`       |
/// | 26-29 | question block (z > 0) or coin (z < 0) 4 above ground at `round(6.5 (z + 1))` when `abs(z) > 0.5` |
/// | 30-31 | 3-wide breakable platform 3 above ground at `round(5 (z + 1))` when `z > 0.6` |
///
/// Features that would leave the 14x14 segment are shifted back inside it.
#[derive(Debug, Clone, Default)]
pub struct ProceduralDecoder {
    alphabet: TileAlphabet,
}

impl ProceduralDecoder {
    pub fn new(alphabet: TileAlphabet) -> Self {
        Self { alphabet }
    }

    pub fn decode(&self, z: &LatentVector) -> Segment {
        const H: usize = SEGMENT_SIZE;
        const W: usize = SEGMENT_SIZE;
        let a = &self.alphabet;
        let mut grid = TileGrid::filled(H, W, a.empty());

        let mut ground = [0i64; W];
        for (c, g) in ground.iter_mut().enumerate() {
            *g = (4.0 + 3.0 * z[c]).round() as i64;
        }
        for c in 1..W {
            let prev = ground[c - 1];
            ground[c] = ground[c].clamp(prev - MAX_GROUND_STEP, prev + MAX_GROUND_STEP);
        }
        for dim in 14..18 {
            if z[dim] > 0.5 {
                let start = place(6.5 * (z[dim] + 1.0), 2, W);
                ground[start] = 0;
                ground[start + 1] = 0;
            }
        }
        for (c, &g) in ground.iter().enumerate() {
            for r in H - g.clamp(0, H as i64) as usize..H {
                grid.set(r, c, a.of(Role::Solid));
            }
        }

        for dim in 18..22 {
            if z[dim] > 0.3 {
                let height = 2 + (z[dim] + 1.0).round() as usize;
                let c = place(6.0 * (z[dim] + 1.0), 2, W);
                let top = surface(&grid, c).min(surface(&grid, c + 1)).saturating_sub(height);
                grid.set(top, c, a.of(Role::PipeTopLeft));
                grid.set(top, c + 1, a.of(Role::PipeTopRight));
                for (col, body) in [(c, Role::PipeBodyLeft), (c + 1, Role::PipeBodyRight)] {
                    let mut r = top + 1;
                    while r < H && !grid.get(r, col).is_solid() {
                        grid.set(r, col, a.of(body));
                        r += 1;
                    }
                }
            }
        }

        for dim in 30..32 {
            if z[dim] > 0.6 {
                let c = place(5.0 * (z[dim] + 1.0), 3, W);
                if let Some(row) = surface(&grid, c).checked_sub(3) {
                    for col in c..c + 3 {
                        put_if_empty(&mut grid, row, col, a.of(Role::Breakable));
                    }
                }
            }
        }

        for dim in 26..30 {
            if z[dim].abs() > 0.5 {
                let c = place(6.5 * (z[dim] + 1.0), 1, W);
                let role = if z[dim] > 0.0 { Role::Question } else { Role::Coin };
                if let Some(row) = surface(&grid, c).checked_sub(4) {
                    put_if_empty(&mut grid, row, c, a.of(role));
                }
            }
        }

        for dim in 22..26 {
            if z[dim] > 0.4 {
                let c = place(6.5 * (z[dim] + 1.0), 1, W);
                let s = surface(&grid, c);
                if s < H && s > 0 {
                    put_if_empty(&mut grid, s - 1, c, a.of(Role::Enemy));
                }
            }
        }

        Segment::new(grid)
    }
}

/// Start column of a `span`-wide feature, clamped so the feature fits.
fn place(x: f64, span: usize, width: usize) -> usize {
    (x.round().max(0.0) as usize).min(width - span)
}

/// Row of the highest solid tile in a column (`height` if none).
fn surface(grid: &TileGrid, col: usize) -> usize {
    grid.column(col).iter().position(|t| t.is_solid()).unwrap_or(grid.height())
}

fn put_if_empty(grid: &mut TileGrid, row: usize, col: usize, tile: crate::level::Tile) {
    if grid.get(row, col).role() == Role::Empty {
        grid.set(row, col, tile);
    }
}
