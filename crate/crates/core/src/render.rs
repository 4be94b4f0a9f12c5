//! Level rendering as text or as a PNG with one flat color per tile role.

use std::path::Path;
use std::str::FromStr;

use image::{Rgb, RgbImage};

use crate::level::{Level, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    Ascii,
    Image,
}

impl FromStr for RenderStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ascii" => Ok(Self::Ascii),
            "image" | "png" => Ok(Self::Image),
            _ => Err(format!("unknown render style {s:?} (expected ascii or image)")),
        }
    }
}

pub fn role_color(role: Role) -> [u8; 3] {
    match role {
        Role::Empty => [146, 144, 255],
        Role::Solid => [181, 49, 32],
        Role::Breakable => [200, 76, 12],
        Role::Question => [252, 188, 60],
        Role::Coin => [248, 216, 32],
        Role::Enemy => [120, 60, 20],
        Role::PipeTopLeft | Role::PipeTopRight => [0, 168, 0],
        Role::PipeBodyLeft | Role::PipeBodyRight => [0, 120, 0],
        Role::CannonHead => [40, 40, 40],
        Role::CannonBody => [90, 90, 90],
    }
}

/// The level in its text form, glyph for glyph.
pub fn render_ascii(level: &Level) -> String {
    level.serialize()
}

/// One `tile_px` square per tile, colored by role.
pub fn render_image(level: &Level, tile_px: u32) -> RgbImage {
    let grid = level.grid();
    let mut img = RgbImage::new(grid.width() as u32 * tile_px, grid.height() as u32 * tile_px);
    for (x, y, px) in img.enumerate_pixels_mut() {
        let tile = grid.get((y / tile_px) as usize, (x / tile_px) as usize);
        *px = Rgb(role_color(tile.role()));
    }
    img
}

pub fn save_image(level: &Level, tile_px: u32, path: &Path) -> image::ImageResult<()> {
    render_image(level, tile_px).save(path)
}
