//! Deterministic pseudo-random numbers for the synthetic harness.
//!
//! Experiment reports must be reproducible bit-for-bit across runs and
//! platforms, so the generator is pinned to xoshiro256** with its published
//! constants instead of delegating to a crate whose stream may change
//! between versions. Seeding expands a single u64 through SplitMix64, the
//! initializer recommended by the xoshiro authors; independent streams are
//! derived by mixing a stream index into the seed before expansion.

/// Advances a SplitMix64 state and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for an independent stream. The base is diffused
/// through SplitMix64, the stream index folded in, and the result
/// diffused again: derivations therefore nest (a derived seed can seed
/// further streams) without the self-cancellation a plain XOR would
/// allow, and consecutive indices give unrelated seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut s = base;
    let mut mixed = splitmix64(&mut s) ^ stream;
    splitmix64(&mut mixed)
}

/// xoshiro256** generator.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Seeds the four state words with consecutive SplitMix64 outputs.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    /// Generator for stream `stream` of a base seed; see [`derive_seed`].
    pub fn for_stream(base: u64, stream: u64) -> Self {
        Rng::new(derive_seed(base, stream))
    }

    /// Exact state constructor, used to check the published test vectors.
    pub fn from_state(s: [u64; 4]) -> Self {
        Rng { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Uses rejection-free modular reduction via
    /// 128-bit multiply, which is exact and branch-stable.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Samples an index proportionally to a nonnegative weight vector by
    /// CDF inversion. Weights need not be normalized; at least one must be
    /// positive. Scanning order is fixed, so draws are deterministic.
    pub fn sample_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0, "sample_index needs a positive total weight");
        let target = self.next_f64() * total;
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
                cum += w;
                if target < cum {
                    return i;
                }
            }
        }
        // Floating-point shortfall at the top of the CDF.
        last_positive
    }

    /// Standard normal draw via Box-Muller (one value per pair; the sine
    /// branch is discarded for simplicity).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
