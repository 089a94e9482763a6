//! Reproducible random number streams.
//!
//! Every Monte Carlo routine in this crate draws from an [`RngStream`], a
//! counter-based generator keyed by `(seed, stream_id)`. Trial `t` of an
//! experiment with master seed `s` always uses `RngStream::new(s, t)`, so
//! results are bit-identical across runs and thread schedules.
//!
//! Algorithm: ChaCha12 (via `rand_chacha`), with the 64-bit stream counter
//! carrying the stream id. ChaCha's keystream is a fixed published function
//! of (key, stream, position), so the sequences are stable across versions.
//! Derived draws (bounded integers, normals, Poisson) are implemented here
//! rather than delegated, to keep the byte-for-byte output under the crate's
//! own control:
//!
//! - bounded integers: rejection sampling on 64-bit words (no modulo bias),
//! - standard normals: Box-Muller with a cached spare,
//! - Poisson: exact inversion for small means, exact transformed rejection
//!   (PTRS) for moderate means, rounded-normal approximation (flagged) for
//!   means above [`POISSON_EXACT_MAX`].

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Largest mean for which `poisson` samples exactly; above this it switches
/// to the rounded-normal approximation and sets the `approximate` flag.
pub const POISSON_EXACT_MAX: f64 = 1e6;

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    /// Creates the stream for trial `stream_id` of the experiment seeded by `seed`.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and a different stream id. Handy for
    /// deriving per-trial streams from a configuration-level stream.
    pub fn substream(&self, stream_id: u64) -> RngStream {
        RngStream::new(self.seed, stream_id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, bound)` by rejection; no modulo bias.
    pub fn bounded_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bounded_u64 requires bound > 0");
        // Zone is the largest multiple of `bound` that fits in u64.
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    pub fn bounded_usize(&mut self, bound: usize) -> usize {
        self.bounded_u64(bound as u64) as usize
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `(0, 1]`; used where a logarithm follows.
    fn uniform_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; generates pairs and caches the spare.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_f64_open();
        let u2 = self.uniform_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// One Poisson(lambda) draw. Exact for `lambda <= POISSON_EXACT_MAX`.
    pub fn poisson(&mut self, lambda: f64) -> PoissonDraw {
        assert!(
            lambda.is_finite() && lambda >= 0.0,
            "poisson requires a finite nonnegative mean"
        );
        if lambda == 0.0 {
            return PoissonDraw {
                value: 0.0,
                approximate: false,
            };
        }
        if lambda < 10.0 {
            PoissonDraw {
                value: self.poisson_inversion(lambda),
                approximate: false,
            }
        } else if lambda <= POISSON_EXACT_MAX {
            PoissonDraw {
                value: self.poisson_ptrs(lambda),
                approximate: false,
            }
        } else {
            let v = (lambda + lambda.sqrt() * self.normal()).round().max(0.0);
            PoissonDraw {
                value: v,
                approximate: true,
            }
        }
    }

    /// Sequential inversion: walk the CDF. O(lambda) per draw.
    fn poisson_inversion(&mut self, lambda: f64) -> f64 {
        let u = self.uniform_f64();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u64;
        while u > cdf {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            // Float tail guard: the remaining mass is below resolution.
            if p < 1e-300 && k as f64 > lambda {
                break;
            }
        }
        k as f64
    }

    /// Transformed rejection with squeeze (Hormann's PTRS), exact for
    /// lambda >= 10.
    fn poisson_ptrs(&mut self, lambda: f64) -> f64 {
        let slam = lambda.sqrt();
        let loglam = lambda.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform_f64() - 0.5;
            let v = self.uniform_f64_open();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
            let rhs = -lambda + k * loglam - ln_factorial(k as u64);
            if lhs <= rhs {
                return k;
            }
        }
    }
}

/// A Poisson draw together with a flag recording whether the rounded-normal
/// large-mean approximation was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDraw {
    /// The sampled count (integer-valued, stored as f64 so that huge means fit).
    pub value: f64,
    /// True when the draw came from the rounded-normal approximation.
    pub approximate: bool,
}

/// ln(k!) — table for small k, Stirling series beyond.
pub fn ln_factorial(k: u64) -> f64 {
    const TABLE_LEN: usize = 256;
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; TABLE_LEN];
        for i in 2..TABLE_LEN {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    if (k as usize) < TABLE_LEN {
        return table[k as usize];
    }
    // Stirling with the first correction terms; relative error < 1e-13 here.
    let x = k as f64;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
}
