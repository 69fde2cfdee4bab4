//! Reproducible random numbers: xoshiro256** seeded through splitmix64,
//! with Box–Muller standard normals.
//!
//! Every randomized operation in the crate takes an explicit [`RngState`];
//! nothing reads an ambient entropy source. The transcendental functions in
//! the Box–Muller transform come from `libm` (a pure-Rust port of musl), not
//! the platform C library, so streams are bit-identical across targets.
//!
//! Constants:
//!
//! * splitmix64: increment `0x9E3779B97F4A7C15`, multipliers
//!   `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`, shifts 30/27/31.
//! * xoshiro256**: output `rotl(s1 * 5, 7) * 9`, state shift 17, rotation 45.
//! * uniform: `((x >> 11) + 1) · 2^-53`, which lies in `(0, 1]`.
//! * normal pair: `√(−2 ln u1) · (cos 2πu2, sin 2πu2)`, cosine branch first.

use std::f64::consts::PI;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Name recorded in reports next to the seed.
pub const ALGORITHM: &str = "xoshiro256**/splitmix64/box-muller";

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RngState {
    seed: u64,
    words: [u64; 4],
    spare_normal: Option<f64>,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let words = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        RngState {
            seed,
            words,
            spare_normal: None,
        }
    }

    /// Independent stream `index` derived from a base seed. Used to give each
    /// parallel trial its own generator without depending on scheduling order.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut sm = seed ^ index.wrapping_mul(SPLITMIX_GAMMA).rotate_left(17);
        RngState::new(splitmix64(&mut sm))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    pub fn state_words(&self) -> [u64; 4] {
        self.words
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.words;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * libm::log(u1)).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare_normal = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }

    /// `count` standard normal draws.
    pub fn gaussian_stream(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.standard_normal()).collect()
    }
}
