//! Small numeric helpers shared across the crate.
//!
//! These are deliberately hand-rolled and frozen: the fixture pack's reference
//! values are produced by an out-of-tree script that re-implements exactly the
//! same rounding and shuffling, so the definitions here must never drift.

/// Round to the nearest integer, ties away from zero.
///
/// Implemented via trunc/fract comparison rather than `f64::round` so the
/// behaviour is specified independently of any library convention (the
/// fractional part of a float below 2^52 is exact, so the comparison is too).
pub fn round_half_away(x: f64) -> i64 {
    let t = x.trunc();
    let f = x - t;
    if f >= 0.5 {
        t as i64 + 1
    } else if f <= -0.5 {
        t as i64 - 1
    } else {
        t as i64
    }
}

/// SplitMix64 PRNG. Used for dataset shuffling where the exact stream must be
/// reproducible from the seed alone, on any platform, forever.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in `[0, n)` by modulo. The tiny modulo bias is
    /// irrelevant here; determinism is what matters.
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// In-place seeded Fisher–Yates shuffle (descending index, `j = next % (i+1)`).
pub fn fisher_yates<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Number of bits needed to represent `n` distinct values (at least 1).
pub fn bits_for(n: usize) -> u32 {
    debug_assert!(n >= 1);
    (usize::BITS - (n - 1).leading_zeros()).max(1)
}

/// ceil(log2(n)) for n >= 1.
pub fn ceil_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    (n as u64).next_power_of_two().trailing_zeros()
}

/// Pearson correlation of two equally long samples. Returns NaN on degenerate
/// input (fewer than two points or zero variance).
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
