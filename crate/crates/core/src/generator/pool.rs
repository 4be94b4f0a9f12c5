use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::latent::{LatentVector, LATENT_DIM};
use super::repair::Repairer;
use super::GeneratorError;
use crate::level::{slice_segments, Level, Segment, TileAlphabet, TileGrid};

const POOL_MAGIC: &[u8; 4] = b"EDPL";
const POOL_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub segment: Segment,
    pub code: LatentVector,
}

/// Where a pool's segments came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDescriptor {
    pub levels: u32,
    /// SHA-256 over the serialized corpus levels, in order.
    pub hash: [u8; 32],
}

/// Corpus segments, each assigned a random latent code. Generation returns
/// the segment whose code is nearest to the query.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPool {
    entries: Vec<PoolEntry>,
    seed: u64,
    source: CorpusDescriptor,
}

impl SegmentPool {
    /// Slices every level, repairs each slice and draws one code per slice
    /// from a uniform distribution seeded by `seed`.
    pub fn build(
        corpus: &[Level],
        width: usize,
        stride: usize,
        seed: u64,
        repairer: &Repairer,
    ) -> Result<Self, GeneratorError> {
        if corpus.is_empty() {
            return Err(GeneratorError::EmptyCorpus);
        }
        let mut hasher = Sha256::new();
        let mut segments = Vec::new();
        let height = corpus[0].height();
        for level in corpus {
            if level.height() != height {
                return Err(GeneratorError::Format("corpus levels differ in height".into()));
            }
            hasher.update(level.serialize().as_bytes());
            for s in slice_segments(level.grid(), width, stride)? {
                segments.push(repairer.repair(&s));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = segments
            .into_iter()
            .map(|segment| PoolEntry { segment, code: LatentVector::uniform(&mut rng) })
            .collect();
        Ok(Self {
            entries,
            seed,
            source: CorpusDescriptor { levels: corpus.len() as u32, hash: hasher.finalize().into() },
        })
    }

    pub fn from_entries(
        entries: Vec<PoolEntry>,
        seed: u64,
        source: CorpusDescriptor,
    ) -> Result<Self, GeneratorError> {
        let Some(first) = entries.first() else {
            return Err(GeneratorError::EmptyPool);
        };
        let dims = (first.segment.height(), first.segment.width());
        if entries.iter().any(|e| (e.segment.height(), e.segment.width()) != dims) {
            return Err(GeneratorError::Format("pool segments differ in size".into()));
        }
        Ok(Self { entries, seed, source })
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> &CorpusDescriptor {
        &self.source
    }

    /// Index of the entry whose code is nearest to `z`; ties go to the lowest index.
    pub fn nearest(&self, z: &LatentVector) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, e) in self.entries.iter().enumerate() {
            let d = e.code.squared_distance(z);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn generate(&self, z: &LatentVector) -> &Segment {
        &self.entries[self.nearest(z)].segment
    }

    /// Binary checkpoint: magic `EDPL`, version byte, seed, corpus level
    /// count and hash, alphabet table, segment shape, then per entry the 32
    /// code components (f64 LE) followed by the glyphs row by row.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), GeneratorError> {
        let alphabet = TileAlphabet::vglc();
        let table = alphabet.encode();
        for e in &self.entries {
            for t in e.segment.grid().tiles() {
                if alphabet.tile(t.glyph()).map(|a| a.role()) != Some(t.role()) {
                    return Err(GeneratorError::Format(format!(
                        "glyph {:?} is not in the VGLC alphabet",
                        t.glyph()
                    )));
                }
            }
        }
        w.write_all(POOL_MAGIC)?;
        w.write_u8(POOL_VERSION)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u32::<LittleEndian>(self.source.levels)?;
        w.write_all(&self.source.hash)?;
        w.write_u32::<LittleEndian>(table.len() as u32)?;
        for (g, r) in table {
            w.write_u8(g)?;
            w.write_u8(r)?;
        }
        let (h, wd) = self
            .entries
            .first()
            .map_or((0, 0), |e| (e.segment.height(), e.segment.width()));
        w.write_u32::<LittleEndian>(h as u32)?;
        w.write_u32::<LittleEndian>(wd as u32)?;
        w.write_u32::<LittleEndian>(self.entries.len() as u32)?;
        for e in &self.entries {
            for v in e.code.values() {
                w.write_f64::<LittleEndian>(*v)?;
            }
            for row in e.segment.grid().rows() {
                for t in row {
                    w.write_u8(t.glyph_byte())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, GeneratorError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != POOL_MAGIC {
            return Err(GeneratorError::Format("not a pool checkpoint".into()));
        }
        let version = r.read_u8()?;
        if version != POOL_VERSION {
            return Err(GeneratorError::Format(format!("unsupported pool version {version}")));
        }
        let seed = r.read_u64::<LittleEndian>()?;
        let levels = r.read_u32::<LittleEndian>()?;
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)?;
        let n_glyphs = r.read_u32::<LittleEndian>()? as usize;
        let mut table = Vec::with_capacity(n_glyphs);
        for _ in 0..n_glyphs {
            table.push((r.read_u8()?, r.read_u8()?));
        }
        let alphabet = TileAlphabet::decode(&table)?;
        let h = r.read_u32::<LittleEndian>()? as usize;
        let wd = r.read_u32::<LittleEndian>()? as usize;
        let n = r.read_u32::<LittleEndian>()? as usize;
        let mut entries = Vec::with_capacity(n);
        let mut glyphs = vec![0u8; h * wd];
        for _ in 0..n {
            let mut code = [0.0; LATENT_DIM];
            for v in &mut code {
                *v = r.read_f64::<LittleEndian>()?;
            }
            r.read_exact(&mut glyphs)?;
            let rows = glyphs
                .chunks(wd)
                .map(|row| {
                    row.iter()
                        .map(|&g| {
                            alphabet.tile(g as char).ok_or_else(|| {
                                GeneratorError::Format(format!("glyph {:?} not in table", g as char))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            entries.push(PoolEntry {
                segment: Segment::new(TileGrid::from_rows(&rows)?),
                code: LatentVector::new(code),
            });
        }
        Self::from_entries(entries, seed, CorpusDescriptor { levels, hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(width: usize) -> Level {
        let mut text = String::new();
        for r in 0..14 {
            for c in 0..width {
                text.push(if r >= 12 || (r == 8 && c % 5 == 0) { 'X' } else { '-' });
            }
            text.push('\n');
        }
        Level::parse(&text, &TileAlphabet::vglc()).unwrap()
    }

    #[test]
    fn deterministic_codes() {
        let rep = Repairer::default();
        let a = SegmentPool::build(&[level(28)], 14, 14, 7, &rep).unwrap();
        let b = SegmentPool::build(&[level(28)], 14, 14, 7, &rep).unwrap();
        let c = SegmentPool::build(&[level(28)], 14, 14, 8, &rep).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a, b);
        assert_ne!(a.entries()[0].code, c.entries()[0].code);
        assert_eq!(a.entries()[0].segment, c.entries()[0].segment);
    }

    #[test]
    fn nearest_lookup() {
        let rep = Repairer::default();
        let pool = SegmentPool::build(&[level(70)], 14, 7, 3, &rep).unwrap();
        for e in pool.entries() {
            assert_eq!(pool.generate(&e.code), &e.segment);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let rep = Repairer::default();
        let pool = SegmentPool::build(&[level(42), level(30)], 14, 7, 11, &rep).unwrap();
        let mut buf = Vec::new();
        pool.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"EDPL");
        assert_eq!(buf[4], 1);
        let back = SegmentPool::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, pool);
        assert!(SegmentPool::read_from(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(
            SegmentPool::build(&[], 14, 14, 0, &Repairer::default()),
            Err(GeneratorError::EmptyCorpus)
        ));
    }
}
