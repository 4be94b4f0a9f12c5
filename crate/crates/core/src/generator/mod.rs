//! Latent-to-segment generation and pipe/cannon repair.
//!
//! Three backends share one contract: a pure, deterministic map from
//! `[-1, 1]^32` to a segment.

mod decoder;
mod latent;
mod pool;
mod procedural;
mod repair;

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::level::{LevelError, Segment, TileAlphabet};

pub use decoder::ExternalDecoder;
pub use latent::{LatentVector, LATENT_DIM};
pub use pool::{CorpusDescriptor, PoolEntry, SegmentPool};
pub use procedural::{ProceduralDecoder, MAX_GROUND_STEP};
pub use repair::{detect_faulty_tiles, FaultyTile, Repairer};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("segment pool has no entries")]
    EmptyPool,
    #[error("bad checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Pool,
    Procedural,
    ExternalDecoder,
}

/// A latent-to-segment generator. Cloning shares the underlying model.
#[derive(Debug, Clone)]
pub enum Backend {
    Pool(Arc<SegmentPool>),
    Procedural(ProceduralDecoder),
    External(Arc<ExternalDecoder>),
}

impl Backend {
    pub fn procedural() -> Self {
        Backend::Procedural(ProceduralDecoder::default())
    }

    pub fn pool(pool: SegmentPool) -> Self {
        Backend::Pool(Arc::new(pool))
    }

    pub fn load_pool(path: &Path) -> Result<Self, GeneratorError> {
        let file = std::fs::File::open(path)?;
        Ok(Self::pool(SegmentPool::read_from(std::io::BufReader::new(file))?))
    }

    pub fn load_decoder(path: &Path, alphabet: &TileAlphabet) -> Result<Self, GeneratorError> {
        let file = std::fs::File::open(path)?;
        let decoder = ExternalDecoder::read_from(std::io::BufReader::new(file), alphabet)?;
        Ok(Backend::External(Arc::new(decoder)))
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Pool(_) => BackendKind::Pool,
            Backend::Procedural(_) => BackendKind::Procedural,
            Backend::External(_) => BackendKind::ExternalDecoder,
        }
    }

    pub fn generate(&self, z: &LatentVector) -> Segment {
        match self {
            Backend::Pool(pool) => pool.generate(z).clone(),
            Backend::Procedural(decoder) => decoder.decode(z),
            Backend::External(decoder) => decoder.decode(z),
        }
    }
}
