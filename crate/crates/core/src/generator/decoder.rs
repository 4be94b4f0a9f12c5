use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::latent::{LatentVector, LATENT_DIM};
use super::GeneratorError;
use crate::level::{Segment, Tile, TileAlphabet, TileGrid};

const DECODER_MAGIC: &[u8; 4] = b"EDDC";
const DECODER_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs x inputs`.
    weights: Vec<f32>,
    bias: Vec<f32>,
}

/// A feed-forward latent decoder loaded from a weights file, for plugging in
/// an externally trained generator.
///
/// File layout (little-endian): magic `EDDC`, version byte, segment height
/// and width (u32), glyph count `G` (u32) and the `G` glyph bytes, layer
/// count `L` (u32), the `L + 1` layer sizes (u32, first = 32, last =
/// `height * width * G`), then per layer the row-major weight matrix and
/// bias vector as f32. Hidden layers use tanh; the output holds `G` logits
/// per tile, tiles row by row, and each tile takes the glyph with the
/// largest logit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalDecoder {
    height: usize,
    width: usize,
    glyphs: Vec<Tile>,
    layers: Vec<Layer>,
}

impl ExternalDecoder {
    /// `sizes` lists every layer width; `params` holds each layer's weights
    /// then bias, concatenated.
    pub fn new(
        height: usize,
        width: usize,
        glyphs: &[char],
        sizes: &[usize],
        params: &[f32],
        alphabet: &TileAlphabet,
    ) -> Result<Self, GeneratorError> {
        let tiles = glyphs
            .iter()
            .map(|&g| {
                alphabet
                    .tile(g)
                    .ok_or_else(|| GeneratorError::Format(format!("glyph {g:?} not in alphabet")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if tiles.is_empty() {
            return Err(GeneratorError::Format("decoder has no glyphs".into()));
        }
        if sizes.len() < 2 || sizes[0] != LATENT_DIM || sizes[sizes.len() - 1] != height * width * tiles.len() {
            return Err(GeneratorError::Format(format!(
                "layer sizes {sizes:?} must run from {LATENT_DIM} to {}",
                height * width * tiles.len()
            )));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for pair in sizes.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let n = inputs * outputs;
            if params.len() < offset + n + outputs {
                return Err(GeneratorError::Format("too few decoder parameters".into()));
            }
            layers.push(Layer {
                inputs,
                outputs,
                weights: params[offset..offset + n].to_vec(),
                bias: params[offset + n..offset + n + outputs].to_vec(),
            });
            offset += n + outputs;
        }
        if offset != params.len() {
            return Err(GeneratorError::Format("too many decoder parameters".into()));
        }
        Ok(Self { height, width, glyphs: tiles, layers })
    }

    pub fn decode(&self, z: &LatentVector) -> Segment {
        let mut x: Vec<f32> = z.as_slice().iter().map(|&v| v as f32).collect();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.bias.clone();
            for (o, out) in y.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                *out += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f32>();
            }
            if i < last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            x = y;
        }
        let g = self.glyphs.len();
        let rows: Vec<Vec<Tile>> = (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| {
                        let logits = &x[(r * self.width + c) * g..(r * self.width + c + 1) * g];
                        let mut best = 0;
                        for k in 1..g {
                            if logits[k] > logits[best] {
                                best = k;
                            }
                        }
                        self.glyphs[best]
                    })
                    .collect()
            })
            .collect();
        Segment::new(TileGrid::from_rows(&rows).expect("rows have equal width"))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), GeneratorError> {
        w.write_all(DECODER_MAGIC)?;
        w.write_u8(DECODER_VERSION)?;
        w.write_u32::<LittleEndian>(self.height as u32)?;
        w.write_u32::<LittleEndian>(self.width as u32)?;
        w.write_u32::<LittleEndian>(self.glyphs.len() as u32)?;
        for t in &self.glyphs {
            w.write_u8(t.glyph_byte())?;
        }
        w.write_u32::<LittleEndian>(self.layers.len() as u32)?;
        w.write_u32::<LittleEndian>(self.layers[0].inputs as u32)?;
        for l in &self.layers {
            w.write_u32::<LittleEndian>(l.outputs as u32)?;
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                w.write_f32::<LittleEndian>(*v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R, alphabet: &TileAlphabet) -> Result<Self, GeneratorError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DECODER_MAGIC {
            return Err(GeneratorError::Format("not a decoder weights file".into()));
        }
        let version = r.read_u8()?;
        if version != DECODER_VERSION {
            return Err(GeneratorError::Format(format!("unsupported decoder version {version}")));
        }
        let height = r.read_u32::<LittleEndian>()? as usize;
        let width = r.read_u32::<LittleEndian>()? as usize;
        let g = r.read_u32::<LittleEndian>()? as usize;
        let mut glyphs = vec![0u8; g];
        r.read_exact(&mut glyphs)?;
        let glyphs: Vec<char> = glyphs.into_iter().map(char::from).collect();
        let n_layers = r.read_u32::<LittleEndian>()? as usize;
        let sizes = (0..=n_layers)
            .map(|_| r.read_u32::<LittleEndian>().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let count: usize = sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        let mut params = vec![0f32; count];
        r.read_f32_into::<LittleEndian>(&mut params)?;
        Self::new(height, width, &glyphs, &sizes, &params, alphabet)
    }
}
