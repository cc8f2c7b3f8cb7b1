//! Seeded random streams.
//!
//! Every trial owns one [`RngStream`] identified by `(seed, stream_id)`. The
//! same pair always replays the same draws; distinct stream ids select
//! independent ChaCha keystreams.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One N(0, 1) draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// `n` independent N(0, 1) draws.
    pub fn standard_normals(&mut self, n: usize) -> Result<DVector<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "number of normal draws must be at least 1".into(),
            ));
        }
        Ok(DVector::from_fn(n, |_, _| self.standard_normal()))
    }

    /// Uniformly distributed direction on the unit sphere in `n` dimensions.
    pub fn unit_vector(&mut self, n: usize) -> Result<DVector<f64>> {
        loop {
            let v = self.standard_normals(n)?;
            let norm = v.norm();
            if norm > 1e-12 {
                return Ok(v / norm);
            }
        }
    }
}

/// Free-function form of [`RngStream::standard_normals`].
pub fn draw_standard_normal(rng: &mut RngStream, n: usize) -> Result<DVector<f64>> {
    rng.standard_normals(n)
}
