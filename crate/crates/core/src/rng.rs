//! Counter-based, splittable random streams.
//!
//! Every random quantity in a run is a pure function of a 64-bit stream key
//! and a counter, so work items can be executed in any order or on any number
//! of threads without changing a single draw. The contract is small enough to
//! reimplement in any language:
//!
//! * `mix64(z)` is the SplitMix64 finalizer:
//!   `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`
//!   (all arithmetic wrapping modulo 2^64).
//! * The root key of a seed `s` is `mix64(s)`.
//! * The child of key `k` at coordinate `x` is `mix64(k ^ mix64((x + 1) * GOLDEN))`
//!   with `GOLDEN = 0x9E3779B97F4A7C15`.
//! * A run stream is `root(seed).child(batch).child(run).child(tag)`, where
//!   `tag` is one of the [`tag`] constants; per-prompt streams add one more
//!   `child(prompt_index)`.
//! * The `i`-th (0-based) 64-bit output of a stream with key `k` is
//!   `mix64(k + (i + 1) * GOLDEN)`.
//!
//! Derived variates:
//!
//! * uniform `[0, 1)`: `(u >> 11) * 2^-53`;
//! * index below `n`: `(u * n) >> 64` in 128-bit arithmetic;
//! * standard normal: Doornik's 128-layer ziggurat (ZIGNOR), one output per
//!   attempt with the layer in the low 7 bits and the uniform in the top 53;
//! * standard exponential: `-ln(1 - U)`.

use std::sync::OnceLock;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Purpose tags for the last coordinate of a run stream.
pub mod tag {
    pub const BATCHES: u64 = 1;
    pub const MATRIX: u64 = 2;
    /// Policy streams use `POLICY + policy_index`.
    pub const POLICY: u64 = 16;
    pub const SWEEP: u64 = 0xA11C;
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one independent stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(mix64(seed))
    }

    pub fn child(self, coordinate: u64) -> Self {
        StreamKey(mix64(
            self.0 ^ mix64(coordinate.wrapping_add(1).wrapping_mul(GOLDEN)),
        ))
    }

    /// Stream for `(batch, run, tag)` below this root.
    pub fn run_stream(self, batch: u64, run: u64, purpose: u64) -> Self {
        self.child(batch).child(run).child(purpose)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn stream(self) -> RandomStream {
        RandomStream::new(self)
    }
}

/// A position in a counter-based stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(key: StreamKey) -> Self {
        RandomStream {
            key: key.0,
            counter: 0,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(StreamKey::root(seed))
    }

    pub fn key(&self) -> StreamKey {
        StreamKey(self.key)
    }

    /// Number of 64-bit outputs consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform index in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.next_f64()).ln()
    }

    /// Standard normal variate.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let zig = ziggurat();
        loop {
            let bits = self.next_u64();
            let layer = (bits & 0x7F) as usize;
            let u = 2.0 * ((bits >> 11) as f64 * TWO_POW_M53) - 1.0;
            if u.abs() < zig.ratio[layer] {
                return u * zig.x[layer];
            }
            if layer == 0 {
                return self.normal_tail(u < 0.0);
            }
            let x = u * zig.x[layer];
            let f0 = (-0.5 * (zig.x[layer] * zig.x[layer] - x * x)).exp();
            let f1 = (-0.5 * (zig.x[layer + 1] * zig.x[layer + 1] - x * x)).exp();
            if f1 + self.next_f64() * (f0 - f1) < 1.0 {
                return x;
            }
        }
    }

    fn normal_tail(&mut self, negative: bool) -> f64 {
        loop {
            let x = (1.0 - self.next_f64()).ln() / ZIG_R;
            let y = (1.0 - self.next_f64()).ln();
            if -2.0 * y >= x * x {
                return if negative { x - ZIG_R } else { ZIG_R - x };
            }
        }
    }
}

const ZIG_LAYERS: usize = 128;
const ZIG_R: f64 = 3.442_619_855_899;
const ZIG_AREA: f64 = 9.912_563_035_262_17e-3;

struct Ziggurat {
    x: [f64; ZIG_LAYERS + 1],
    ratio: [f64; ZIG_LAYERS],
}

fn ziggurat() -> &'static Ziggurat {
    static TABLE: OnceLock<Ziggurat> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut x = [0.0; ZIG_LAYERS + 1];
        let mut f = (-0.5 * ZIG_R * ZIG_R).exp();
        x[0] = ZIG_AREA / f;
        x[1] = ZIG_R;
        x[ZIG_LAYERS] = 0.0;
        for i in 2..ZIG_LAYERS {
            x[i] = (-2.0 * (ZIG_AREA / x[i - 1] + f).ln()).sqrt();
            f = (-0.5 * x[i] * x[i]).exp();
        }
        let mut ratio = [0.0; ZIG_LAYERS];
        for i in 0..ZIG_LAYERS {
            ratio[i] = x[i + 1] / x[i];
        }
        Ziggurat { x, ratio }
    })
}
