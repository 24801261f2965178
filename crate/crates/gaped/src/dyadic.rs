//! Dyadic (power-of-two) arithmetic helpers.
//!
//! Scales are represented by exponents: the scale index `i` stands for the
//! dyadic rational `2^{-i}`. Exponents may go negative (values above 1), and
//! products with widths saturate rather than overflow, because quality
//! parameters grow triply exponentially in the level count and routinely
//! exceed `u64` at theoretical settings.

/// `⌊2^{-e} · x⌋`, saturating at `u64::MAX` for large negative `e`.
pub fn eps_times(e: i64, x: u64) -> u64 {
    if x == 0 {
        return 0;
    }
    if e >= 0 {
        if e >= 64 {
            0
        } else {
            x >> e
        }
    } else {
        let shift = (-e) as u32;
        if shift >= 64 {
            return u64::MAX;
        }
        let wide = (x as u128) << shift;
        u128::min(wide, u64::MAX as u128) as u64
    }
}

/// The alignment grain `max(2^{-e} · w, 1)` used by δ-aligned families.
pub fn grain(e: i64, w: u64) -> u64 {
    eps_times(e, w).max(1)
}

/// Largest power of two `≤ v`; `v` must be positive.
pub fn floor_pow2(v: u64) -> u64 {
    debug_assert!(v > 0);
    1 << (63 - v.leading_zeros())
}

/// `log₂ v` for an exact power of two.
pub fn log2_exact(v: u64) -> u32 {
    debug_assert!(v.is_power_of_two());
    v.trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_times_basic() {
        assert_eq!(eps_times(0, 8), 8);
        assert_eq!(eps_times(2, 8), 2);
        assert_eq!(eps_times(3, 8), 1);
        assert_eq!(eps_times(4, 8), 0);
        assert_eq!(eps_times(-1, 8), 16);
        assert_eq!(eps_times(-70, 8), u64::MAX);
        assert_eq!(eps_times(70, 8), 0);
        assert_eq!(eps_times(5, 0), 0);
    }

    #[test]
    fn grain_floors_at_one() {
        assert_eq!(grain(10, 4), 1);
        assert_eq!(grain(1, 4), 2);
        assert_eq!(grain(0, 4), 4);
    }

    #[test]
    fn pow2_helpers() {
        assert_eq!(floor_pow2(1), 1);
        assert_eq!(floor_pow2(5), 4);
        assert_eq!(floor_pow2(1024), 1024);
        assert_eq!(log2_exact(1), 0);
        assert_eq!(log2_exact(4096), 12);
    }
}
