//! Deterministic random number generation.
//!
//! Everything seeded in this crate (noise simulation, synthetic cubes, the
//! power-iteration start vector) draws from one fixed, fully specified
//! generator so that streams can be reproduced bit-exactly from a 64-bit seed
//! in any language. The contract:
//!
//! * Generator: SplitMix64. State `s` starts at the seed; each draw performs
//!   `s += 0x9E3779B97F4A7C15`, then returns `mix(s)` where
//!   `mix(z) = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, `z ^ (z >> 31)`.
//! * Uniform doubles: `next_f64 = (next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! * Bounded integers: `next_below(n) = next_u64 mod n` (the modulo bias is
//!   accepted and part of the contract).
//! * Gaussians: Box-Muller on consecutive uniform pairs `(a, b)`:
//!   `r = sqrt(-2 ln(1 - a))`, first output `r cos(2 pi b)`, second output
//!   `r sin(2 pi b)`.
//!
//! Any change to these rules is a file-format-level break for seeded outputs.

/// SplitMix64 stream.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` via `next_u64 mod n`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        self.next_u64() % n
    }

    /// One Box-Muller pair of independent standard normals.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let a = self.next_f64();
        let b = self.next_f64();
        let r = (-2.0 * (1.0 - a).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * b;
        (r * theta.cos(), r * theta.sin())
    }

    /// Fills `out` with independent `N(0, sigma^2)` draws. Consumes pairs in
    /// order; an odd length discards the trailing second member.
    pub fn fill_gaussian(&mut self, sigma: f64, out: &mut [f64]) {
        let mut idx = 0;
        while idx < out.len() {
            let (z0, z1) = self.next_gaussian_pair();
            out[idx] = sigma * z0;
            idx += 1;
            if idx < out.len() {
                out[idx] = sigma * z1;
                idx += 1;
            }
        }
    }

    /// Chooses `count` distinct indices from `[0, n)` by a partial
    /// Fisher-Yates shuffle: for `t` in `0..count`, swap slot `t` with slot
    /// `t + next_below(n - t)`. Returns the first `count` slots in draw order.
    pub fn choose_without_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot choose {count} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for t in 0..count {
            let r = t + self.next_below((n - t) as u64) as usize;
            pool.swap(t, r);
        }
        pool.truncate(count);
        pool
    }
}
