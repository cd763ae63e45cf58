//! Named random streams.
//!
//! Every random object in the crate draws from its own ChaCha8 stream whose
//! seed is a SplitMix64 hash of `(master seed, role, replicate)`. Standard
//! normals are produced from that stream by the ziggurat sampler of
//! `rand_distr::StandardNormal`, so a stream key fully determines the values
//! regardless of how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminants are part of the seed
/// derivation and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// The Wigner matrix `W_N`.
    Wigner = 1,
    /// The independent copy `Y_N`.
    Independent = 2,
    /// Spectral-synthesis coefficients of a Gaussian field.
    Field = 3,
    /// Monte Carlo integration of partition integrals.
    MonteCarlo = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master: u64,
    pub role: Role,
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(master: u64, role: Role, replicate: u64) -> Self {
        Self {
            master,
            role,
            replicate,
        }
    }

    pub fn seed(&self) -> u64 {
        let mut h = splitmix64(self.master);
        h = splitmix64(h ^ (self.role as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        splitmix64(h ^ splitmix64(self.replicate))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Points of the two-dimensional R2 low-discrepancy sequence, strictly inside
/// the open unit square.
pub fn r2_points(count: usize) -> Vec<(f64, f64)> {
    // plastic number
    let g = 1.324_717_957_244_746_f64;
    let a1 = 1.0 / g;
    let a2 = 1.0 / (g * g);
    (1..=count)
        .map(|n| {
            let x = (0.5 + a1 * n as f64).fract();
            let y = (0.5 + a2 * n as f64).fract();
            (x.clamp(1e-9, 1.0 - 1e-9), y.clamp(1e-9, 1.0 - 1e-9))
        })
        .collect()
}
