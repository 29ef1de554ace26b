use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per generator stream.
pub const ORTHANT_CHUNK: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthantEstimate {
    pub r: usize,
    pub d: usize,
    pub samples: usize,
    pub hits: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p̂ (1 − p̂) / n)`.
    pub std_error: f64,
    /// `2^{−rd}`.
    pub expected: f64,
    pub seed: u64,
}

impl OrthantEstimate {
    /// `|p̂ − 2^{−rd}| ≤ k · std_error`.
    pub fn within(&self, k: f64) -> bool {
        (self.estimate - self.expected).abs() <= k * self.std_error
    }
}

/// Fraction of i.i.d. standard-normal `r × d` matrices whose entries are all
/// strictly negative.
///
/// Samples are split into chunks of [`ORTHANT_CHUNK`]; chunk `c` draws from a
/// ChaCha8 generator seeded with `seed` on stream `c`, filling each matrix in
/// column-major order. Hit counts are integers, so the result is identical
/// for any thread schedule and platform.
pub fn orthant_probability(r: usize, d: usize, n_samples: usize, seed: u64) -> Result<OrthantEstimate> {
    if n_samples < 1000 {
        return Err(Error::Contract(format!("need at least 1000 samples, got {n_samples}")));
    }
    if r == 0 || d == 0 {
        return Err(Error::Contract(format!("dimensions must be positive, got r={r}, d={d}")));
    }
    let entries = r * d;
    let chunks = n_samples.div_ceil(ORTHANT_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = ORTHANT_CHUNK.min(n_samples - c * ORTHANT_CHUNK);
            let mut local = 0u64;
            for _ in 0..count {
                let mut all_negative = true;
                for _ in 0..entries {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    all_negative &= z < 0.0;
                }
                local += all_negative as u64;
            }
            local
        })
        .sum();
    let n = n_samples as f64;
    let estimate = hits as f64 / n;
    Ok(OrthantEstimate {
        r,
        d,
        samples: n_samples,
        hits,
        estimate,
        std_error: (estimate * (1.0 - estimate) / n).sqrt(),
        expected: 0.5f64.powi(entries as i32),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_is_a_coin_flip() {
        let est = orthant_probability(1, 1, 20_000, 3).unwrap();
        assert!(est.within(4.0), "{est:?}");
        assert_eq!(est.expected, 0.5);
    }

    #[test]
    fn same_seed_same_answer() {
        let a = orthant_probability(2, 1, 5_000, 99).unwrap();
        let b = orthant_probability(2, 1, 5_000, 99).unwrap();
        assert_eq!(a, b);
        let c = orthant_probability(2, 1, 5_000, 100).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(orthant_probability(1, 1, 999, 0).is_err());
        assert!(orthant_probability(0, 1, 1000, 0).is_err());
    }
}
