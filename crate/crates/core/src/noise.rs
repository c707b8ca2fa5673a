//! Seeded randomness for a training run.
//!
//! Device (polarization) noise and measurement (background) noise draw from two
//! independent ChaCha streams derived from one seed. Keeping them apart lets the
//! apparatus replay reproduce stored weights from the device stream alone.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEVICE_STREAM: u64 = 1;
const MEASUREMENT_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct NoiseSource {
    device: ChaCha8Rng,
    measurement: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            device: Self::device_stream(seed),
            measurement: stream(seed, MEASUREMENT_STREAM),
        }
    }

    /// A fresh copy of the device stream for `seed`, as consumed by training.
    pub fn device_stream(seed: u64) -> ChaCha8Rng {
        stream(seed, DEVICE_STREAM)
    }

    pub fn device(&mut self) -> &mut dyn RngCore {
        &mut self.device
    }

    pub fn measurement(&mut self) -> &mut dyn RngCore {
        &mut self.measurement
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
