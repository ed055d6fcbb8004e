//! Seeded fan-in uniform initialisation.
//!
//! Each tensor draws from its own SplitMix64 stream keyed by the seed and the
//! tensor name, so values do not depend on how many tensors precede it.

use fnv::FnvHasher;
use rand_core::{RngCore, SeedableRng};
use std::hash::Hasher;

pub use rand_xoshiro::SplitMix64;

use super::{WeightStore, WeightTensor};
use crate::model::ModelSpec;

fn stream(seed: u64, name: &str) -> SplitMix64 {
    let mut h = FnvHasher::default();
    h.write(name.as_bytes());
    SplitMix64::seed_from_u64(seed ^ h.finish())
}

/// Uniform in `[0, 1)` with 24 bits of mantissa.
fn unit(rng: &mut SplitMix64) -> f32 {
    (rng.next_u64() >> 40) as f32 * (1.0 / (1u64 << 24) as f32)
}

/// Every tensor of `model`, drawn uniformly from `±1/sqrt(fan_in)`.
pub fn init_deterministic(model: &ModelSpec, seed: u64) -> WeightStore {
    let mut store = WeightStore::new();
    store.metadata.variant = Some(model.variant.to_string());
    for (_, block) in model.blocks() {
        for slot in block.param_slots() {
            let limit = 1.0 / (slot.fan_in as f32).sqrt();
            let mut rng = stream(seed, &slot.name);
            let data = (0..slot.numel())
                .map(|_| (2.0 * unit(&mut rng) - 1.0) * limit)
                .collect();
            let t = WeightTensor::new(slot.dims, data).expect("slot dims match data length");
            store
                .insert(slot.name, t)
                .expect("model validation rejects duplicate block names");
        }
    }
    store
}
