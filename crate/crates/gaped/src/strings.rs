//! Strings, the concatenation `z = xy`, exact and banded edit-distance
//! oracles, box costs, and geometric helpers.
//!
//! Grid conventions: for two halves of length `n`, the grid is
//! `{0..n} × {0..2n}`. An interval `{a..b}` indexes the characters
//! `a+1 ..= b` of `z` (1-based), i.e. the slice `z[a..b]` (0-based).

use thiserror::Error;

/// A string symbol. Input bytes occupy `0..=255`; [`SENTINEL`] is reserved
/// for padding and never appears in user-supplied input.
pub type Symbol = u16;

/// The padding symbol, outside the byte alphabet.
pub const SENTINEL: Symbol = 256;

/// Outcome of a gap decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        matches!(self, Decision::Accept)
    }
}

/// An index range with inclusive grid endpoints `lo ≤ hi` in `{0..2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    /// Width `μ = hi − lo`.
    pub fn width(self) -> u64 {
        self.hi - self.lo
    }

    pub fn contains(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// A box `I×J`: a pair of horizontal and vertical intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridBox {
    pub h: Interval,
    pub v: Interval,
}

impl GridBox {
    pub fn new(h: Interval, v: Interval) -> Self {
        GridBox { h, v }
    }
}

/// Error raised when ingesting text that contains the reserved sentinel.
#[derive(Debug, Error)]
#[error("input symbol {0} collides with the reserved sentinel")]
pub struct SentinelError(pub Symbol);

/// The concatenation `z = xy` of two equal, power-of-two-length halves.
#[derive(Clone, Debug)]
pub struct Text {
    z: Vec<Symbol>,
    n: u64,
}

impl Text {
    /// Builds a text from two halves of equal power-of-two length.
    pub fn new(x: &[Symbol], y: &[Symbol]) -> Self {
        assert_eq!(x.len(), y.len(), "halves must have equal length");
        assert!(x.len().is_power_of_two(), "half length must be a power of two");
        let mut z = Vec::with_capacity(2 * x.len());
        z.extend_from_slice(x);
        z.extend_from_slice(y);
        Text { z, n: x.len() as u64 }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[Symbol] {
        &self.z
    }

    /// The slice of `z` indexed by an interval.
    pub fn slice(&self, iv: Interval) -> &[Symbol] {
        &self.z[iv.lo as usize..iv.hi as usize]
    }
}

/// Converts raw bytes to symbols (bytes can never collide with the sentinel).
pub fn to_symbols(bytes: &[u8]) -> Vec<Symbol> {
    bytes.iter().map(|&b| b as Symbol).collect()
}

/// Exact edit distance (insertions + deletions + substitutions) by the
/// two-row quadratic dynamic program.
pub fn exact_edit_distance(a: &[Symbol], b: &[Symbol]) -> u64 {
    if a.is_empty() {
        return b.len() as u64;
    }
    if b.is_empty() {
        return a.len() as u64;
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let m = short.len();
    let mut prev: Vec<u64> = (0..=m as u64).collect();
    let mut cur = vec![0u64; m + 1];
    for (i, &cl) in long.iter().enumerate() {
        cur[0] = i as u64 + 1;
        for (j, &cs) in short.iter().enumerate() {
            let sub = prev[j] + u64::from(cl != cs);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Sentinel distance value for cells outside the band.
const FAR: u64 = u64::MAX / 4;

/// Edit distance restricted to diagonals within `halfwidth` of the main
/// diagonal. The result equals the true distance whenever the true distance
/// is at most `halfwidth`; otherwise it is an overestimate (possibly [`FAR`]).
pub fn banded_edit_distance(a: &[Symbol], b: &[Symbol], halfwidth: u64) -> u64 {
    let (na, nb) = (a.len() as i64, b.len() as i64);
    let h = halfwidth as i64;
    if (na - nb).abs() > h {
        return FAR;
    }
    // Row i covers columns j with |j − i| ≤ h, clipped to [0, nb].
    let width = (2 * h + 1) as usize;
    let mut prev = vec![FAR; width];
    let mut cur = vec![FAR; width];
    // prev holds row i−1; index k maps to column j = (i−1) − h + k.
    for k in 0..width {
        let j = -1 - h + k as i64 + 1; // row 0: j = k − h
        if (0..=nb).contains(&j) {
            prev[k] = j as u64;
        }
    }
    for i in 1..=na {
        for k in 0..width {
            let j = i - h + k as i64;
            if j < 0 || j > nb {
                cur[k] = FAR;
                continue;
            }
            let mut best = FAR;
            if j == 0 {
                best = i as u64;
            }
            if j > 0 {
                // Diagonal: (i−1, j−1) is prev index k (same offset).
                if prev[k] != FAR {
                    let c = u64::from(a[(i - 1) as usize] != b[(j - 1) as usize]);
                    best = best.min(prev[k] + c);
                }
                // Left: (i, j−1) is cur index k−1.
                if k > 0 && cur[k - 1] != FAR {
                    best = best.min(cur[k - 1] + 1);
                }
            }
            // Up: (i−1, j) is prev index k+1.
            if k + 1 < width && prev[k + 1] != FAR {
                best = best.min(prev[k + 1] + 1);
            }
            cur[k] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let k = (nb - na + h) as usize;
    prev[k]
}

/// Base gap decision at threshold `θ = 2^{-theta_exp}`: ACCEPT iff
/// `editd(a,b) ≤ θ·n′`. Deterministic and exact (quality 1); runs a banded
/// computation over `2θn′+1` diagonals, which suffices because any path
/// leaving the band costs more than the threshold.
pub fn base_gap_decide(a: &[Symbol], b: &[Symbol], theta_exp: u32) -> Decision {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as u64;
    let t = if theta_exp >= 64 { 0 } else { n >> theta_exp };
    if banded_edit_distance(a, b, t) <= t {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Exact traversal cost of a box: the edit distance of the two indexed
/// substrings of `z`.
pub fn box_cost(z: &[Symbol], b: GridBox) -> u64 {
    let h = &z[b.h.lo as usize..b.h.hi as usize];
    let v = &z[b.v.lo as usize..b.v.hi as usize];
    exact_edit_distance(h, v)
}

/// Vertical shift needed to put `inner`'s diagonal on `outer`'s diagonal:
/// `|(min(inner.v) − min(outer.v)) − (min(inner.h) − min(outer.h))|`.
pub fn displacement(inner: GridBox, outer: GridBox) -> u64 {
    let dv = inner.v.lo as i64 - outer.v.lo as i64;
    let dh = inner.h.lo as i64 - outer.h.lo as i64;
    (dv - dh).unsigned_abs()
}
