//! Deterministic seed derivation.
//!
//! Every repeated-randomness surface in this crate (Monte Carlo replicates,
//! bootstrap replicates) derives one child seed per unit of work from a root
//! seed and the unit's coordinates, through SplitMix64. The derivation is a
//! pure integer function, so results are identical across platforms and
//! independent of execution order or parallelism.

/// One SplitMix64 step (Steele, Lea & Flood's published constants).
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut x = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Child seed for work unit `(a, b)` under `root`. Feeding each coordinate
/// through its own SplitMix64 step before mixing keeps nearby coordinates
/// (`n = 1000` vs `n = 10000`, rep 3 vs rep 4) from producing related seeds.
#[inline]
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(a)) ^ splitmix64(b).rotate_left(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable() {
        // Frozen values: changing these breaks reproducibility of every
        // documented study output.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(derive_seed(42, 1000, 7), derive_seed(42, 1000, 7));
        assert_ne!(derive_seed(42, 1000, 7), derive_seed(42, 1000, 8));
        assert_ne!(derive_seed(42, 1000, 7), derive_seed(42, 1001, 7));
        assert_ne!(derive_seed(42, 1000, 7), derive_seed(43, 1000, 7));
    }

    #[test]
    fn coordinates_do_not_commute() {
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
    }
}
