//! Aligned interval families, rounding, zoom-in, induced boxes, and stacks —
//! the combinatorial primitives underneath the gap engine.
//!
//! All scales are dyadic and passed as exponents: scale `e` means `2^{-e}`.
//! An interval of width `w` is *`e`-aligned* when its minimum is a multiple
//! of the grain `max(2^{-e}·w, 1)`.

use std::collections::HashMap;

use crate::dyadic::{eps_times, grain};
use crate::strings::{GridBox, Interval};

/// A box with a cost budget. `cost` stores the integer `κ·μ(h)` (weights are
/// dyadic with denominator ≤ μ(h), so the product is always an integer); the
/// box is *certified* when its true traversal cost is at most `cost`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WeightedBox {
    pub b: GridBox,
    pub cost: u64,
}

impl WeightedBox {
    pub fn new(b: GridBox, cost: u64) -> Self {
        WeightedBox { b, cost }
    }
}

/// A set of boxes sharing one horizontal projection, queried as a batch.
#[derive(Clone, Debug)]
pub struct Stack {
    pub h: Interval,
    pub vs: Vec<Interval>,
}

/// All `delta_exp`-aligned intervals of width `w` inside `span`, sorted by
/// minimum. For `delta_exp = 0` this is the disjoint decomposition of `span`.
pub fn aligned_family(w: u64, delta_exp: i64, span: Interval) -> Vec<Interval> {
    debug_assert!(w.is_power_of_two());
    let g = grain(delta_exp, w);
    let mut out = Vec::new();
    if span.width() < w {
        return out;
    }
    let first = span.lo.div_ceil(g) * g;
    let mut lo = first;
    while lo + w <= span.hi {
        out.push(Interval::new(lo, lo + w));
        lo += g;
    }
    out
}

/// Rounds `j` down to the nearest `eps_exp`-aligned interval of equal width.
/// The shift is at most `2^{-eps_exp}·μ(j) − 1`.
pub fn round_interval(j: Interval, eps_exp: i64) -> Interval {
    let g = grain(eps_exp, j.width());
    let lo = (j.lo / g) * g;
    Interval::new(lo, lo + j.width())
}

/// The admissible range of minima for `zoom_in` outputs: `(first, last, step)`
/// with minima `first, first+step, ..., last`, or `None` when empty.
pub fn zoom_in_range(b: GridBox, i: u32, iprime: Interval, ip: u32) -> Option<(u64, u64, u64)> {
    debug_assert!(b.h.contains(iprime));
    let w = b.h.width();
    let wp = iprime.width();
    let g = grain(ip as i64 + 3, wp);
    // Displacement bound 2·ε_i·μ(I), i.e. 2^{-(i−1)}·w.
    let bound = eps_times(i as i64 - 1, w);
    let target = b.v.lo + (iprime.lo - b.h.lo);
    let lo_min = b.v.lo.max(target.saturating_sub(bound));
    let hi_min = (b.v.hi.checked_sub(wp)?).min(target + bound);
    if lo_min > hi_min {
        return None;
    }
    let first = lo_min.div_ceil(g) * g;
    if first > hi_min {
        return None;
    }
    let last = (hi_min / g) * g;
    Some((first, last, g))
}

/// All `(i′+3)`-aligned intervals `J′ ⊆ b.v` of width `μ(I′)` whose
/// displacement from `b` is at most `2·2^{-i}·μ(b.h)`, sorted by minimum.
pub fn zoom_in(b: GridBox, i: u32, iprime: Interval, ip: u32) -> Vec<Interval> {
    let wp = iprime.width();
    match zoom_in_range(b, i, iprime, ip) {
        None => Vec::new(),
        Some((first, last, step)) => (first..=last)
            .step_by(step as usize)
            .map(|lo| Interval::new(lo, lo + wp))
            .collect(),
    }
}

/// Shrinks each box vertically at every dyadic depth, paying the symmetric-
/// difference cost: `(I×J, c)` also yields `(I × [min(J)+t, max(J)−t], c+2t)`
/// for `t = 1, 2, 4, ..., μ(J)/2`. Duplicates keep the minimal cost.
pub fn induced(boxes: &[WeightedBox]) -> Vec<WeightedBox> {
    let mut best: HashMap<GridBox, u64> = HashMap::new();
    let mut order: Vec<GridBox> = Vec::new();
    let mut add = |b: GridBox, cost: u64| match best.get_mut(&b) {
        Some(c) => *c = (*c).min(cost),
        None => {
            best.insert(b, cost);
            order.push(b);
        }
    };
    for wb in boxes {
        add(wb.b, wb.cost);
        let mv = wb.b.v.width();
        let mut t = 1;
        while 2 * t <= mv {
            let v = Interval::new(wb.b.v.lo + t, wb.b.v.hi - t);
            add(GridBox::new(wb.b.h, v), wb.cost.saturating_add(2 * t));
            t *= 2;
        }
    }
    order
        .into_iter()
        .map(|b| WeightedBox::new(b, best[&b]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::box_cost;
    use proptest::prelude::*;

    fn iv(lo: u64, hi: u64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn aligned_family_examples() {
        assert_eq!(aligned_family(4, 0, iv(0, 8)), vec![iv(0, 4), iv(4, 8)]);
        assert_eq!(aligned_family(4, 1, iv(0, 8)), vec![iv(0, 4), iv(2, 6), iv(4, 8)]);
        assert_eq!(aligned_family(8, 2, iv(0, 4)), Vec::<Interval>::new());
    }

    #[test]
    fn round_interval_examples() {
        assert_eq!(round_interval(iv(4, 12), 2), iv(4, 12));
        assert_eq!(round_interval(iv(5, 13), 2), iv(4, 12));
        assert_eq!(round_interval(iv(7, 15), 1), iv(4, 12));
    }

    #[test]
    fn zoom_in_direct_enumeration() {
        // Width-4 sub-interval of a 16-wide box at scale i=1: grain 1,
        // displacement bound 16 → minima 16..=28, 13 intervals.
        let b = GridBox::new(iv(0, 16), iv(16, 32));
        let out = zoom_in(b, 1, iv(0, 4), 1);
        assert_eq!(out.len(), 13);
        assert_eq!(out.first(), Some(&iv(16, 20)));
        assert_eq!(out.last(), Some(&iv(28, 32)));
    }

    #[test]
    fn zoom_in_contains_rounded_projection() {
        // Degenerate zoom: I′ = I, i′ = i; the zero-displacement member is
        // the rounded vertical projection itself.
        let b = GridBox::new(iv(0, 8), iv(16, 24));
        let out = zoom_in(b, 2, iv(0, 8), 2);
        assert!(out.contains(&round_interval(b.v, 5)));
        assert!(out.contains(&b.v));
    }

    #[test]
    fn induced_width_two() {
        let b = GridBox::new(iv(0, 2), iv(4, 6));
        let out = induced(&[WeightedBox::new(b, 1)]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], WeightedBox::new(b, 1));
        assert_eq!(out[1], WeightedBox::new(GridBox::new(iv(0, 2), iv(5, 5)), 3));
    }

    #[test]
    fn induced_width_eight_costs() {
        // κ = 1/8 on width 8 (cost 1); depth t=2 adds 2^2 → cost 5 (κ 5/8).
        let b = GridBox::new(iv(0, 8), iv(8, 16));
        let out = induced(&[WeightedBox::new(b, 1)]);
        assert_eq!(out.len(), 4); // t ∈ {1, 2, 4}
        let narrowed = out
            .iter()
            .find(|wb| wb.b.v == iv(10, 14))
            .expect("depth-2 box present");
        assert_eq!(narrowed.cost, 5);
    }

    proptest! {
        #[test]
        fn aligned_family_partitions(wlog in 0u32..4, span_mul in 1u64..9) {
            let w = 1u64 << wlog;
            let span = iv(0, span_mul * w);
            let fam = aligned_family(w, 0, span);
            prop_assert_eq!(fam.len() as u64, span_mul);
            for (a, b) in fam.iter().zip(fam.iter().skip(1)) {
                prop_assert_eq!(a.hi, b.lo);
            }
        }

        #[test]
        fn round_interval_aligned_below(lo in 0u64..64, wlog in 0u32..5, e in 0i64..6) {
            let w = 1u64 << wlog;
            let j = iv(lo, lo + w);
            let r = round_interval(j, e);
            let g = grain(e, w);
            prop_assert_eq!(r.lo % g, 0);
            prop_assert!(r.lo <= j.lo);
            prop_assert!(j.lo - r.lo <= g - 1);
            prop_assert_eq!(r.width(), w);
        }

        #[test]
        fn zoom_in_members_valid(
            vlo_step in 0u64..8,
            i in 0u32..4,
            ip_off in 0u32..3,
            plo_step in 0u64..3,
        ) {
            let b = GridBox::new(iv(0, 16), iv(16 + vlo_step, 32 + vlo_step));
            let ip = i.saturating_sub(ip_off);
            let ipv = iv(plo_step * 4, plo_step * 4 + 4);
            for j in zoom_in(b, i, ipv, ip) {
                prop_assert!(b.v.contains(j));
                prop_assert_eq!(j.width(), ipv.width());
                let d = crate::strings::displacement(GridBox::new(ipv, j), b);
                prop_assert!(d <= eps_times(i as i64 - 1, 16));
            }
        }

        #[test]
        fn induced_preserves_certification(
            z in prop::collection::vec(0u16..3, 32),
            hlo in 0u64..3,
            vlo in 0u64..3,
        ) {
            let b = GridBox::new(iv(hlo * 8, hlo * 8 + 8), iv(16 + vlo * 4, 24 + vlo * 4));
            let true_cost = box_cost(&z, b);
            let input = WeightedBox::new(b, true_cost);
            for wb in induced(&[input]) {
                prop_assert!(box_cost(&z, wb.b) <= wb.cost);
            }
        }
    }
}
