use std::ops::Index;

use rand::Rng;

/// Dimension of the latent space.
pub const LATENT_DIM: usize = 32;

/// A point in `[-1, 1]^32`: both the design state and the design action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentVector([f64; LATENT_DIM]);

impl LatentVector {
    /// Clips every component into `[-1, 1]`. NaN components become 0.
    pub fn new(values: [f64; LATENT_DIM]) -> Self {
        Self(values.map(|v| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) }))
    }

    pub fn zeros() -> Self {
        Self([0.0; LATENT_DIM])
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        <[f64; LATENT_DIM]>::try_from(values).ok().map(Self::new)
    }

    /// Uniform sample over the latent cube.
    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self(std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
    }

    pub fn values(&self) -> &[f64; LATENT_DIM] {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn squared_distance(&self, other: &LatentVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn with(mut self, dim: usize, value: f64) -> Self {
        self.0[dim] = if value.is_nan() { 0.0 } else { value.clamp(-1.0, 1.0) };
        self
    }
}

impl Default for LatentVector {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Index<usize> for LatentVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
