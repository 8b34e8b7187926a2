//! Bespoke circuit generation.
//!
//! Everything a trained, quantized model needs to become gates: constant-
//! coefficient multipliers built from the canonical signed-digit form of each
//! coefficient ([`mult`]), weighted-sum blocks with balanced adder trees
//! ([`wsum`]), argmax/vote networks ([`argmax`]), and full model datapaths
//! ([`circuit`]). The area of a bespoke multiplier, `area_bm`, is the proxy
//! metric that drives coefficient approximation; it is memoized on disk by
//! [`mult::AreaCache`] so that full coefficient-range sweeps stay cheap.

pub mod argmax;
mod arith;
pub mod circuit;
pub mod mult;
pub mod wsum;

pub use argmax::gen_argmax;
pub use circuit::gen_model_circuit;
pub use mult::{area_bm, gen_mult_const, gen_mult_conventional, AreaCache};
pub use wsum::{gen_weighted_sum, WeightedSumSpec};

/// Canonical signed-digit (non-adjacent form) decomposition, LSB first:
/// `w = sum(digit[k] * 2^k)` with digits in {-1, 0, +1} and no two adjacent
/// non-zero digits. This minimizes the number of add/subtract terms in a
/// shift-add constant multiplier.
pub fn csd_digits(w: i64) -> Vec<i8> {
    let mut digits = Vec::new();
    let mut w = w;
    while w != 0 {
        if w & 1 != 0 {
            let d = 2 - w.rem_euclid(4) as i8; // odd: residue 1 -> +1, 3 -> -1
            digits.push(d);
            w -= d as i64;
        } else {
            digits.push(0);
        }
        w /= 2;
    }
    digits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csd_reconstructs_the_value() {
        for w in -300i64..=300 {
            let v: i64 = csd_digits(w)
                .iter()
                .enumerate()
                .map(|(k, &d)| d as i64 * (1i64 << k))
                .sum();
            assert_eq!(v, w, "w={w}");
        }
    }

    #[test]
    fn csd_is_non_adjacent() {
        for w in -4096i64..=4096 {
            let d = csd_digits(w);
            for pair in d.windows(2) {
                assert!(
                    pair[0] == 0 || pair[1] == 0,
                    "adjacent non-zero digits for w={w}: {d:?}"
                );
            }
        }
    }

    #[test]
    fn csd_known_forms() {
        assert!(csd_digits(0).is_empty());
        assert_eq!(csd_digits(1), vec![1]);
        assert_eq!(csd_digits(-1), vec![-1]);
        // 3 = 4 - 1
        assert_eq!(csd_digits(3), vec![-1, 0, 1]);
        // 7 = 8 - 1
        assert_eq!(csd_digits(7), vec![-1, 0, 0, 1]);
        // -128 = -(2^7)
        assert_eq!(csd_digits(-128), vec![0, 0, 0, 0, 0, 0, 0, -1]);
    }

    #[test]
    fn csd_nonzero_count_at_most_half_plus_one() {
        for w in -128i64..=127 {
            let nz = csd_digits(w).iter().filter(|&&d| d != 0).count();
            assert!(nz <= 5, "w={w} has {nz} non-zero digits"); // ceil(9/2)
        }
    }
}
