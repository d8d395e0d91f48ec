//! Deterministic seeded streams for stationary random fields.
//!
//! Point processes are generated one unit cell `[k, k+1)` at a time from a
//! ChaCha8 stream keyed by (seed, stream tag, cell index). Evaluating a field
//! anywhere on the line therefore needs no global state and is bit-identical
//! across runs for a fixed dependency set: ChaCha is a fixed algorithm, and
//! the mapping from raw u64 draws to uniforms and Poisson counts is spelled
//! out here rather than delegated to a distribution crate.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer; used to spread (seed, stream, cell) into key words.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream of draws attached to one unit cell of one field.
pub struct CellRng {
    inner: ChaCha8Rng,
}

impl CellRng {
    pub fn new(seed: u64, stream: u64, cell: i64) -> Self {
        let mut key = [0u8; 32];
        let a = splitmix(seed ^ 0x243f_6a88_85a3_08d3);
        let b = splitmix(a ^ stream);
        let c = splitmix(b ^ (cell as u64));
        let d = splitmix(c ^ 0x1319_8a2e_0370_7344);
        key[..8].copy_from_slice(&a.to_le_bytes());
        key[8..16].copy_from_slice(&b.to_le_bytes());
        key[16..24].copy_from_slice(&c.to_le_bytes());
        key[24..].copy_from_slice(&d.to_le_bytes());
        CellRng {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Uniform draw in [0, 1) with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Poisson count by inverse-CDF walk; exact for the intensities used by
    /// the built-in families (O(1) per cell, numerically safe for mean <~ 30).
    pub fn poisson(&mut self, mean: f64) -> u32 {
        assert!(mean >= 0.0 && mean < 64.0, "cell intensity out of range");
        let u = self.next_f64();
        let mut term = (-mean).exp();
        let mut cdf = term;
        let mut k = 0u32;
        while u > cdf && k < 1024 {
            k += 1;
            term *= mean / k as f64;
            cdf += term;
        }
        k
    }
}

/// Points of a homogeneous Poisson process inside cell `[cell, cell+1)`,
/// sorted ascending. Deterministic in (seed, stream, cell).
pub fn poisson_points(seed: u64, stream: u64, cell: i64, intensity: f64) -> Vec<f64> {
    let mut rng = CellRng::new(seed, stream, cell);
    let n = rng.poisson(intensity);
    let mut pts: Vec<f64> = (0..n).map(|_| cell as f64 + rng.next_f64()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts
}
