//! Counter-keyed Gaussian noise and seed derivation.
//!
//! Every perturbation is drawn from its own ChaCha stream selected by
//! `(domain, instance, frame)`, so results do not depend on evaluation order
//! or thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Independent random domains sharing one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Posecode = 1,
    VelocityEdges = 2,
    Aggregation = 3,
    Rendering = 4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Standard deviation added to measured angles, in degrees.
    pub angle_sigma: f64,
    /// Standard deviation added to distances and displacements, in meters.
    pub distance_sigma: f64,
    /// Relative standard deviation of velocity class edges.
    pub velocity_sigma: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            enabled: true,
            angle_sigma: 2.0,
            distance_sigma: 0.01,
            velocity_sigma: 0.1,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn off() -> Self {
        NoiseConfig {
            enabled: false,
            ..NoiseConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("angle_sigma", self.angle_sigma),
            ("distance_sigma", self.distance_sigma),
            ("velocity_sigma", self.velocity_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("noise.{name} must be a non-negative number"));
            }
        }
        Ok(())
    }

    /// Standard-normal draw for `(domain, key, counter)`; zero when disabled.
    pub fn standard_normal(&self, domain: Domain, key: usize, counter: usize) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        keyed_rng(self.seed, domain, key, counter).sample(StandardNormal)
    }
}

/// A generator positioned on the stream reserved for `(domain, key, counter)`.
pub fn keyed_rng(seed: u64, domain: Domain, key: usize, counter: usize) -> ChaCha8Rng {
    debug_assert!(key < 1 << 24, "stream key out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | ((key as u64 & 0xff_ffff) << 32) | (counter as u64 & 0xffff_ffff));
    rng
}

/// A generator for a whole domain (aggregation draws, template choices).
pub fn domain_rng(seed: u64, domain: Domain) -> ChaCha8Rng {
    keyed_rng(seed, domain, 0, 0)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `caption`-th caption of the `input`-th motion of a batch.
pub fn derive_caption_seed(seed: u64, input: u64, caption: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ input) ^ caption)
}
