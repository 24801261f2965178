//! Shortcut graphs over certified boxes, the exact DAG cost oracle, and the
//! batched gap-threshold query (APM) implemented as a sweep over a max tree.
//!
//! The shortcut graph `G̃(R)` lives on the grid: horizontal and vertical unit
//! edges cost 1 everywhere, and each weighted box contributes one diagonal
//! shortcut edge from `(min(h), min(v))` to `(max(h), max(v))` of cost equal
//! to the box's integer cost budget.

use std::collections::HashMap;

use thiserror::Error;

use crate::intervals::WeightedBox;
use crate::strings::{GridBox, Interval};

/// Refuse to materialize oracle grids above this many cells.
const ORACLE_CELL_LIMIT: u64 = 1 << 26;

#[derive(Debug, Error)]
pub enum ShortcutError {
    #[error("oracle grid of {0} cells exceeds the test-scale limit")]
    OracleTooLarge(u64),
    #[error("box {0:?} straddles the partition family")]
    StraddlingBox(GridBox),
}

/// A directed edge of the shortcut graph (grid edges stay implicit).
#[derive(Clone, Copy, Debug)]
struct Edge {
    tail: (u64, u64),
    head: (u64, u64),
    cost: u64,
}

/// Exact minimum traversal cost of the rectangle `span_h × span_v` in the
/// shortcut graph of `boxes`, by explicit dynamic programming over the grid.
/// `aux_targets` optionally adds cost-0 edges `(min(h), min(v)) →
/// (min(h), m)` for each target `m` (the augmented graph `R⁺`).
///
/// Test-scale only: errors out on grids above a fixed cell budget.
pub fn cost_via_shortcuts_oracle(
    boxes: &[WeightedBox],
    span_h: Interval,
    span_v: Interval,
    aux_targets: Option<&[u64]>,
) -> Result<u64, ShortcutError> {
    let w = span_h.width();
    let m = span_v.width();
    let cells = (w + 1) * (m + 1);
    if cells > ORACLE_CELL_LIMIT {
        return Err(ShortcutError::OracleTooLarge(cells));
    }

    let mut edges: Vec<Edge> = boxes
        .iter()
        .filter(|wb| span_h.contains(wb.b.h) && span_v.contains(wb.b.v))
        .map(|wb| Edge {
            tail: (wb.b.h.lo, wb.b.v.lo),
            head: (wb.b.h.hi, wb.b.v.hi),
            cost: wb.cost,
        })
        .collect();
    if let Some(targets) = aux_targets {
        for &t in targets {
            if t > span_v.lo && t <= span_v.hi {
                edges.push(Edge {
                    tail: (span_h.lo, span_v.lo),
                    head: (span_h.lo, t),
                    cost: 0,
                });
            }
        }
    }
    let mut incoming: HashMap<(u64, u64), Vec<(usize, u64)>> = HashMap::new();
    let mut tails: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (idx, e) in edges.iter().enumerate() {
        incoming.entry(e.head).or_default().push((idx, e.cost));
        tails.entry(e.tail).or_default().push(idx);
    }

    let (wu, mu) = (w as usize, m as usize);
    let mut dist = vec![u64::MAX; (wu + 1) * (mu + 1)];
    let at = |x: usize, y: usize| x * (mu + 1) + y;
    let mut tail_dist = vec![u64::MAX; edges.len()];
    for x in 0..=wu {
        for y in 0..=mu {
            let mut best = if x == 0 && y == 0 { 0 } else { u64::MAX };
            if x > 0 && dist[at(x - 1, y)] != u64::MAX {
                best = best.min(dist[at(x - 1, y)] + 1);
            }
            if y > 0 && dist[at(x, y - 1)] != u64::MAX {
                best = best.min(dist[at(x, y - 1)] + 1);
            }
            let key = (span_h.lo + x as u64, span_v.lo + y as u64);
            if let Some(ins) = incoming.get(&key) {
                for &(idx, cost) in ins {
                    if tail_dist[idx] != u64::MAX {
                        best = best.min(tail_dist[idx].saturating_add(cost));
                    }
                }
            }
            dist[at(x, y)] = best;
            if let Some(ts) = tails.get(&key) {
                for &idx in ts {
                    tail_dist[idx] = best;
                }
            }
        }
    }
    Ok(dist[at(wu, mu)])
}

/// Result of a batched gap-threshold query.
#[derive(Clone, Debug)]
pub struct ApmOutcome {
    /// Accepted vertical intervals, in input order.
    pub accepted: Vec<Interval>,
    /// Sweep events processed (instruction-count proxy for budgeting).
    pub events: u64,
}

/// Max tree over re-based horizontal coordinates with prefix-maximum queries.
struct SweepTree {
    size: usize,
    a: Vec<i128>,
}

const NEG: i128 = i128::MIN / 4;

impl SweepTree {
    fn new(leaves: usize) -> Self {
        let size = leaves.next_power_of_two();
        SweepTree { size, a: vec![NEG; 2 * size] }
    }

    fn update(&mut self, leaf: usize, value: i128) {
        let mut idx = self.size + leaf;
        if self.a[idx] >= value {
            return;
        }
        self.a[idx] = value;
        idx /= 2;
        while idx >= 1 {
            let merged = self.a[2 * idx].max(self.a[2 * idx + 1]);
            if self.a[idx] == merged {
                break;
            }
            self.a[idx] = merged;
            idx /= 2;
        }
    }

    /// Maximum over leaves `0..=leaf`.
    fn prefix_max(&self, leaf: usize) -> i128 {
        let mut lo = self.size;
        let mut hi = self.size + leaf;
        let mut best = NEG;
        while lo <= hi {
            if lo % 2 == 1 {
                best = best.max(self.a[lo]);
                lo += 1;
            }
            if hi % 2 == 0 {
                best = best.max(self.a[hi]);
                if hi == 0 {
                    break;
                }
                hi -= 1;
            }
            lo /= 2;
            hi /= 2;
        }
        best
    }

    fn root_max(&self) -> i128 {
        self.a[1]
    }
}

/// Batched gap-threshold query: returns the stack members `J` with
/// `cost_{R⁺}(I×J⁰) ≤ cost_limit`, where `J⁰ = {0..max(J)}` and `R⁺` is
/// `boxes` augmented with cost-0 edges from `(min(h), 0)` to `(min(h), m)`
/// for every distinct `m ∈ min(vs)`.
///
/// Guarantees, for certified boxes and `cost_limit = κ·μ(h)`: every `J` with
/// `cost_R(I×J) ≤ κμ(h)` is accepted, and no `J` with true box cost
/// `> 2κμ(h)` is accepted.
///
/// Implementation: each edge is scored by its benefit `Δx + Δy − cost`; a
/// single upward sweep over distinct vertical event coordinates maintains,
/// per horizontal position, the best benefit of any path ending at a
/// shortcut head there. Pure grid paths have benefit 0, which is the
/// implicit base case.
pub fn apm(h: Interval, vs: &[Interval], cost_limit: u64, boxes: &[WeightedBox]) -> ApmOutcome {
    let w = h.width();

    // Materialize edges: shortcut edges from boxes, plus the auxiliary
    // vertical drops serving each distinct stack minimum.
    let mut edges: Vec<Edge> = Vec::with_capacity(boxes.len() + vs.len());
    for wb in boxes {
        debug_assert!(h.contains(wb.b.h), "box outside the stack's horizontal span");
        edges.push(Edge {
            tail: (wb.b.h.lo, wb.b.v.lo),
            head: (wb.b.h.hi, wb.b.v.hi),
            cost: wb.cost,
        });
    }
    let mut mins: Vec<u64> = vs.iter().map(|j| j.lo).filter(|&m| m > 0).collect();
    mins.sort_unstable();
    mins.dedup();
    for m in mins {
        edges.push(Edge { tail: (h.lo, 0), head: (h.lo, m), cost: 0 });
    }
    // Deterministic processing order within an event.
    edges.sort_by_key(|e| (e.tail.1, e.tail.0, e.head.1, e.head.0, e.cost));

    let mut event_ys: Vec<u64> = edges
        .iter()
        .flat_map(|e| [e.tail.1, e.head.1])
        .collect();
    event_ys.sort_unstable();
    event_ys.dedup();

    let mut tails_at: HashMap<u64, Vec<usize>> = HashMap::new();
    for (idx, e) in edges.iter().enumerate() {
        tails_at.entry(e.tail.1).or_default().push(idx);
    }

    let mut tree = SweepTree::new(w as usize + 1);
    // Head updates scheduled for a later event: (event y, leaf, value).
    let mut pending: HashMap<u64, Vec<(usize, i128)>> = HashMap::new();
    // Root snapshots after each event, for the per-J answers.
    let mut snapshots: Vec<(u64, i128)> = Vec::with_capacity(event_ys.len());
    let mut events = 0u64;

    for &y in &event_ys {
        events += 1;
        if let Some(updates) = pending.remove(&y) {
            for (leaf, value) in updates {
                tree.update(leaf, value);
            }
        }
        let mut same_event: Vec<(usize, i128)> = Vec::new();
        if let Some(tails) = tails_at.get(&y) {
            for &idx in tails {
                events += 1;
                let e = edges[idx];
                let benefit = (e.head.0 - e.tail.0) as i128 + (e.head.1 - e.tail.1) as i128
                    - e.cost as i128;
                let tail_leaf = (e.tail.0 - h.lo) as usize;
                let q = tree.prefix_max(tail_leaf).max(0) + benefit;
                let head_leaf = (e.head.0 - h.lo) as usize;
                if e.head.1 == y {
                    same_event.push((head_leaf, q));
                } else {
                    pending.entry(e.head.1).or_default().push((head_leaf, q));
                }
            }
        }
        for (leaf, value) in same_event {
            tree.update(leaf, value);
        }
        snapshots.push((y, tree.root_max().max(0)));
    }

    let accepted = vs
        .iter()
        .filter(|j| {
            events += 1;
            // Best benefit using heads at height ≤ max(J).
            let best = match snapshots.partition_point(|&(y, _)| y <= j.hi) {
                0 => 0,
                p => snapshots[p - 1].1,
            };
            let cost = w as i128 + j.hi as i128 - best;
            debug_assert!(cost >= 0);
            cost <= cost_limit as i128
        })
        .copied()
        .collect();

    ApmOutcome { accepted, events }
}

/// Splits boxes by the unique family member containing their horizontal
/// projection. The family must be a sorted disjoint decomposition; a box
/// straddling two members signals corrupted level state.
pub fn partition_by_horizontal(
    boxes: &[WeightedBox],
    family: &[Interval],
) -> Result<HashMap<Interval, Vec<WeightedBox>>, ShortcutError> {
    let mut out: HashMap<Interval, Vec<WeightedBox>> = HashMap::new();
    for iv in family {
        out.insert(*iv, Vec::new());
    }
    for wb in boxes {
        let p = family.partition_point(|iv| iv.lo <= wb.b.h.lo);
        let member = family
            .get(p.wrapping_sub(1))
            .filter(|iv| iv.contains(wb.b.h))
            .ok_or(ShortcutError::StraddlingBox(wb.b))?;
        out.get_mut(member).unwrap().push(*wb);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: u64, hi: u64) -> Interval {
        Interval::new(lo, hi)
    }

    fn wb(hlo: u64, hhi: u64, vlo: u64, vhi: u64, cost: u64) -> WeightedBox {
        WeightedBox::new(GridBox::new(iv(hlo, hhi), iv(vlo, vhi)), cost)
    }

    #[test]
    fn oracle_no_shortcuts_is_perimeter() {
        let c = cost_via_shortcuts_oracle(&[], iv(0, 8), iv(8, 16), None).unwrap();
        assert_eq!(c, 16);
    }

    #[test]
    fn oracle_free_shortcut() {
        let boxes = [wb(0, 8, 8, 16, 0)];
        let c = cost_via_shortcuts_oracle(&boxes, iv(0, 8), iv(8, 16), None).unwrap();
        assert_eq!(c, 0);
    }

    #[test]
    fn oracle_half_shortcut_then_grid() {
        // Weight-1/4 box over the left half (cost 1 = 4·1/4), then 4 right
        // and 4 up: 1 + 4 + 4 = 9.
        let boxes = [wb(0, 4, 0, 4, 1)];
        let c = cost_via_shortcuts_oracle(&boxes, iv(0, 8), iv(0, 8), None).unwrap();
        assert_eq!(c, 9);
    }

    #[test]
    fn oracle_aux_edge_skips_vertical_prefix() {
        // Cost-0 drop to y=8 replaces 8 vertical steps.
        let c = cost_via_shortcuts_oracle(&[], iv(0, 4), iv(0, 12), Some(&[8])).unwrap();
        assert_eq!(c, 8);
    }

    #[test]
    fn apm_zero_cost_box_accepted() {
        let boxes = [wb(0, 8, 8, 16, 0)];
        let out = apm(iv(0, 8), &[iv(8, 16)], 0, &boxes);
        assert_eq!(out.accepted, vec![iv(8, 16)]);
    }

    #[test]
    fn apm_empty_graph_rejects_far() {
        // Without shortcuts cost_{R⁺}(I×J⁰) = μ(I) + (max J − min J) ≥ μ(I),
        // so κ < 1 rejects everything.
        let out = apm(iv(0, 8), &[iv(8, 16), iv(10, 18)], 7, &[]);
        assert!(out.accepted.is_empty());
    }

    #[test]
    fn apm_matches_oracle_on_aux_graph() {
        let h = iv(0, 8);
        let vs = [iv(8, 16), iv(12, 20), iv(16, 24)];
        let boxes = [wb(0, 4, 12, 16, 1), wb(4, 8, 16, 20, 2)];
        let mins: Vec<u64> = vs.iter().map(|j| j.lo).collect();
        for limit in 0..20 {
            let out = apm(h, &vs, limit, &boxes);
            for j in &vs {
                let oracle =
                    cost_via_shortcuts_oracle(&boxes, h, iv(0, j.hi), Some(&mins)).unwrap();
                assert_eq!(out.accepted.contains(j), oracle <= limit, "limit {limit} J {j:?}");
            }
        }
    }

    #[test]
    fn partition_assigns_by_containment() {
        let family = [iv(0, 8), iv(8, 16)];
        let boxes = [wb(0, 4, 0, 4, 1), wb(4, 8, 0, 4, 1), wb(8, 16, 4, 12, 2)];
        let parts = partition_by_horizontal(&boxes, &family).unwrap();
        assert_eq!(parts[&iv(0, 8)].len(), 2);
        assert_eq!(parts[&iv(8, 16)].len(), 1);
    }

    #[test]
    fn partition_rejects_straddler() {
        let family = [iv(0, 8), iv(8, 16)];
        let boxes = [wb(4, 12, 0, 8, 1)];
        assert!(partition_by_horizontal(&boxes, &family).is_err());
    }

    fn arb_box(w: u64, vspan: u64) -> impl Strategy<Value = WeightedBox> {
        (0..w, 0..w, 0..vspan, 0..vspan, 0u64..20).prop_map(move |(a, b, c, d, cost)| {
            let (hlo, hhi) = if a <= b { (a, b + 1) } else { (b, a + 1) };
            let (vlo, vhi) = if c <= d { (c, d + 1) } else { (d, c + 1) };
            wb(hlo, hhi, vlo, vhi, cost)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn apm_equals_oracle_threshold(
            boxes in prop::collection::vec(arb_box(16, 40), 0..12),
            vlos in prop::collection::vec(0u64..24, 1..6),
            limit in 0u64..40,
        ) {
            let h = iv(0, 16);
            let vs: Vec<Interval> = vlos.iter().map(|&lo| iv(lo, lo + 16)).collect();
            let mins: Vec<u64> = vs.iter().map(|j| j.lo).collect();
            let out = apm(h, &vs, limit, &boxes);
            for j in &vs {
                let oracle =
                    cost_via_shortcuts_oracle(&boxes, h, iv(0, j.hi), Some(&mins)).unwrap();
                prop_assert_eq!(out.accepted.contains(j), oracle <= limit);
            }
        }
    }
}
