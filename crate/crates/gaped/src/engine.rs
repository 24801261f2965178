//! The core speed-up engine: the level-by-level construction of certified
//! boxes, the batched close/far classifier, and the dense-interval pivoting
//! that keeps the number of sub-oracle calls small.
//!
//! The engine works on `z = xy` over the grid `{0..n} × {0..2n}`. Level `j`
//! covers aligned width-`w_j` substring pairs; a *candidate* `(i, I×J)` asks
//! whether `ncost(I×J) ≤ ε_i = 2^{-i}`. Levels are built in order; once a
//! level is built its state is immutable and is the only input to the next
//! level, so per-`(I, i)` work inside a level runs data-parallel.
//!
//! Randomness derives from one seed through named per-`(j, I, i)` streams,
//! and every sub-oracle answer is memoized by its arguments, so repeated
//! queries are consistent and whole runs replay exactly.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dyadic::{eps_times, log2_exact};
use crate::intervals::{aligned_family, induced, round_interval, zoom_in_range, WeightedBox};
use crate::par::map_collect;
use crate::params::{LevelParams, QualityMode};
use crate::shortcut::{apm, partition_by_horizontal};
use crate::strings::{Decision, GridBox, Interval, Symbol};

/// A gap decider usable as the engine's base case. Soundness must hold with
/// probability 1 (`editd > Q′θn′` forces REJECT); completeness with high
/// probability (`editd ≤ θn′` accepts).
pub trait GapOracle: Sync {
    /// Decide at threshold `θ = 2^{-theta_exp}` on equal-length power-of-two
    /// slices. `seed` lets randomized oracles derive their own streams.
    fn decide(&self, a: &[Symbol], b: &[Symbol], theta_exp: u32, seed: u64) -> Decision;
    /// `log₂ Q′` of the oracle's gap quality.
    fn quality_exp(&self) -> i64;
}

impl<T: GapOracle + Send + ?Sized> GapOracle for std::sync::Arc<T> {
    fn decide(&self, a: &[Symbol], b: &[Symbol], theta_exp: u32, seed: u64) -> Decision {
        (**self).decide(a, b, theta_exp, seed)
    }

    fn quality_exp(&self) -> i64 {
        (**self).quality_exp()
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("step budget exhausted after {0} steps")]
    Budget(u64),
}

/// Tuning knobs for one engine run.
#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Record every CLOSE classification (for the soundness audits).
    pub record_close: bool,
    /// Abort with [`EngineError::Budget`] past this many steps (one unit per
    /// oracle call, sweep event, stack element, or materialized box).
    pub budget: Option<u64>,
    /// Expand each level's boxes with their induced narrowed variants. On by
    /// default; large runs may disable it to bound memory (the outer driver
    /// marks such runs as degraded).
    pub induced: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { record_close: true, budget: None, induced: true }
    }
}

/// One CLOSE classification, kept for the audit harnesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CloseRecord {
    pub j: usize,
    pub i: u32,
    pub b: GridBox,
}

/// Per-level counters for the debug/inspect report.
#[derive(Clone, Debug, Default)]
pub struct LevelSummary {
    pub j: usize,
    pub bbelow_members: u64,
    pub sample_sets: u64,
    pub sparse_per_scale: Vec<u64>,
    pub boxes: u64,
}

/// Immutable-once-built state of one level.
#[derive(Default)]
struct LevelState {
    /// `(min(I), i)` → sorted accepted verticals from the level below.
    bbelow: HashMap<(u64, u32), Vec<Interval>>,
    /// `(min(I), i)` → multiset sample of sparse sub-intervals of `I`.
    sample: HashMap<(u64, u32), Vec<Interval>>,
    /// Per scale `i`: minima of the intervals declared sparse.
    sparse: Vec<HashSet<u64>>,
    /// The level's certified boxes `R(j)`.
    boxes: Vec<WeightedBox>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a root seed and a path of tags.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix(seed);
    for &p in parts {
        h = splitmix(h ^ splitmix(p));
    }
    h
}

const TAG_SAMPLE: u64 = 1;
const TAG_PIVOT: u64 = 2;
const TAG_ORACLE: u64 = 3;

/// Predicted number of boxes an engine run will materialize from the
/// trivially-approved scales (the dominant memory cost), used by the driver
/// to pick an affordable threshold before running.
pub fn estimate_boxes(params: &LevelParams, theta_exp: u32, with_induced: bool) -> u128 {
    let n = params.n;
    let mut total: u128 = 0;
    for j in 1..=params.k {
        let w = params.width(j);
        let finest = (0..=params.max_scale(theta_exp)).filter(|&i| params.trivial(j, i)).max();
        let Some(i) = finest else { continue };
        let nh = (n / w) as u128;
        let g = crate::dyadic::grain(i as i64 + 3, w);
        let nv = ((2 * n - w) / g + 1) as u128;
        let factor = if with_induced { 1 + log2_exact(w) as u128 } else { 1 };
        total += nh * nv * factor;
    }
    total
}

/// One gap-decision run over `z = xy`.
pub struct Engine<'a> {
    z: &'a [Symbol],
    n: u64,
    theta_exp: u32,
    params: &'a LevelParams,
    oracle: &'a dyn GapOracle,
    seed: u64,
    opts: EngineOptions,
    cache: DashMap<(u64, u64, u64, u32), Decision>,
    steps: AtomicU64,
    close: Mutex<Vec<CloseRecord>>,
    levels: Vec<LevelState>,
}

impl<'a> Engine<'a> {
    pub fn new(
        text: &'a crate::strings::Text,
        theta_exp: u32,
        params: &'a LevelParams,
        oracle: &'a dyn GapOracle,
        seed: u64,
        opts: EngineOptions,
    ) -> Engine<'a> {
        assert_eq!(text.n(), params.n, "schedule derived for a different n");
        Engine {
            z: text.z(),
            n: text.n(),
            theta_exp,
            params,
            oracle,
            seed,
            opts,
            cache: DashMap::new(),
            steps: AtomicU64::new(0),
            close: Mutex::new(Vec::new()),
            levels: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    /// CLOSE classifications recorded so far (empty unless enabled).
    pub fn close_records(&self) -> Vec<CloseRecord> {
        self.close.lock().unwrap().clone()
    }

    /// The certified boxes `R(j)` of a built level (1-based `j`).
    pub fn level_boxes(&self, j: usize) -> &[WeightedBox] {
        &self.levels[j - 1].boxes
    }

    pub fn summaries(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .enumerate()
            .map(|(idx, st)| LevelSummary {
                j: idx + 1,
                bbelow_members: st.bbelow.values().map(|v| v.len() as u64).sum(),
                sample_sets: st.sample.len() as u64,
                sparse_per_scale: st.sparse.iter().map(|s| s.len() as u64).collect(),
                boxes: st.boxes.len() as u64,
            })
            .collect()
    }

    fn step(&self, add: u64) -> Result<(), EngineError> {
        let now = self.steps.fetch_add(add, Ordering::Relaxed) + add;
        match self.opts.budget {
            Some(b) if now > b => Err(EngineError::Budget(now)),
            _ => Ok(()),
        }
    }

    fn intervals_h(&self, j: usize) -> Vec<Interval> {
        aligned_family(self.params.width(j), 0, Interval::new(0, self.n))
    }

    fn intervals_v(&self, j: usize, i: u32) -> Vec<Interval> {
        aligned_family(self.params.width(j), i as i64 + 3, Interval::new(0, 2 * self.n))
    }

    /// Memoized sub-oracle call; repeated queries with identical arguments
    /// always agree, which is what makes `enumerate` answers consistent
    /// across overlapping stacks.
    fn decide_close(&self, h: Interval, v: Interval, i: u32) -> Result<bool, EngineError> {
        self.step(1)?;
        let key = (h.lo, v.lo, v.width(), i);
        if let Some(d) = self.cache.get(&key) {
            return Ok(d.is_accept());
        }
        let a = &self.z[h.lo as usize..h.hi as usize];
        let b = &self.z[v.lo as usize..v.hi as usize];
        let sub_seed = derive_seed(self.seed, &[TAG_ORACLE, key.0, key.1, key.2, key.3 as u64]);
        let d = self.oracle.decide(a, b, i, sub_seed);
        self.cache.insert(key, d);
        Ok(d.is_accept())
    }

    fn record_close(&self, j: usize, i: u32, h: Interval, v: Interval) {
        if self.opts.record_close {
            self.close.lock().unwrap().push(CloseRecord { j, i, b: GridBox::new(h, v) });
        }
    }

    /// Builds `Bbelow(j,I,i)` (neighborhood queries against the level-`j−1`
    /// boxes) and `SparseSample(j,I,i)` (uniform draws from the sparse
    /// sub-intervals of `I`).
    fn preprocess(&mut self, j: usize) -> Result<(), EngineError> {
        let scales = self.params.max_scale(self.theta_exp);
        let mut state = LevelState {
            sparse: vec![HashSet::new(); scales as usize + 1],
            ..LevelState::default()
        };
        if j > 1 {
            let w = self.params.width(j);
            let wp = self.params.width(j - 1);
            let family = self.intervals_h(j);
            let parts = partition_by_horizontal(&self.levels[j - 2].boxes, &family)
                .expect("level boxes respect the level-j decomposition");
            let prev = &self.levels[j - 2];

            let mut items: Vec<(Interval, u32)> = Vec::new();
            for &hiv in &family {
                for i in 0..=scales {
                    items.push((hiv, i));
                }
            }
            let results = map_collect(items, |(hiv, i)| {
                let vs = self.intervals_v(j, i);
                let limit = eps_times(self.params.bbelow_exp(j, i), w);
                let out = apm(hiv, &vs, limit, &parts[&hiv]);

                let pool: Vec<Interval> = prev.sparse[i as usize]
                    .iter()
                    .filter(|&&lo| lo >= hiv.lo && lo + wp <= hiv.hi)
                    .map(|&lo| Interval::new(lo, lo + wp))
                    .collect();
                let sample = if pool.is_empty() {
                    Vec::new()
                } else {
                    let mut sorted = pool;
                    sorted.sort_unstable();
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        self.seed,
                        &[TAG_SAMPLE, j as u64, hiv.lo, i as u64],
                    ));
                    (0..self.params.sample_count)
                        .map(|_| sorted[rng.gen_range(0..sorted.len())])
                        .collect()
                };
                (hiv, i, out.accepted, out.events, sample)
            });
            let mut events = 0;
            for (hiv, i, accepted, ev, sample) in results {
                events += ev;
                state.bbelow.insert((hiv.lo, i), accepted);
                if !sample.is_empty() {
                    state.sample.insert((hiv.lo, i), sample);
                }
            }
            self.step(events)?;
        }
        self.levels.push(state);
        Ok(())
    }

    /// The CLOSE members of the stack `I × vs` at scale `i`. Level 1 asks the
    /// sub-oracle per member; higher levels seed from `Bbelow`, then identify
    /// a small candidate set `K` through sparse markers one level down, and
    /// only test `K` with the oracle.
    fn enumerate(
        &self,
        j: usize,
        h: Interval,
        vs: &[Interval],
        i: u32,
    ) -> Result<Vec<Interval>, EngineError> {
        self.step(vs.len() as u64)?;
        if j == 1 {
            let verdicts = map_collect(vs.to_vec(), |v| self.decide_close(h, v, i));
            let mut out = Vec::new();
            for (v, verdict) in vs.iter().zip(verdicts) {
                if verdict? {
                    self.record_close(j, i, h, *v);
                    out.push(*v);
                }
            }
            return Ok(out);
        }

        let state = &self.levels[j - 1];
        let empty: Vec<Interval> = Vec::new();
        let below = state.bbelow.get(&(h.lo, i)).unwrap_or(&empty);
        let mut close: Vec<Interval> = Vec::new();
        let mut rem: Vec<Interval> = Vec::new();
        for &v in vs {
            if below.binary_search(&v).is_ok() {
                self.record_close(j, i, h, v);
                close.push(v);
            } else {
                rem.push(v);
            }
        }

        let mut k_set: BTreeSet<Interval> = BTreeSet::new();
        for ip in 0..=i {
            let Some(samples) = state.sample.get(&(h.lo, ip)) else { continue };
            let mut distinct: Vec<Interval> = samples.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for hp in distinct {
                // Union of the zoomed-in verticals over the unresolved stack.
                let mut lows: BTreeSet<u64> = BTreeSet::new();
                let wp = hp.width();
                for &v in &rem {
                    self.step(1)?;
                    if let Some((first, last, g)) = zoom_in_range(GridBox::new(h, v), i, hp, ip) {
                        let mut lo = first;
                        while lo <= last {
                            lows.insert(lo);
                            lo += g;
                        }
                    }
                }
                if lows.is_empty() {
                    continue;
                }
                let sub: Vec<Interval> =
                    lows.iter().map(|&lo| Interval::new(lo, lo + wp)).collect();
                let found = self.enumerate(j - 1, hp, &sub, ip)?;
                if found.is_empty() {
                    continue;
                }
                for &v in &rem {
                    if k_set.contains(&v) {
                        continue;
                    }
                    if let Some((first, last, _)) = zoom_in_range(GridBox::new(h, v), i, hp, ip) {
                        let p = found.partition_point(|f| f.lo < first);
                        if p < found.len() && found[p].lo <= last {
                            k_set.insert(v);
                        }
                    }
                }
            }
        }
        for v in k_set {
            if self.decide_close(h, v, i)? {
                self.record_close(j, i, h, v);
                close.push(v);
            }
        }
        close.sort_unstable();
        Ok(close)
    }

    /// Classifies each level-`j` interval per scale as sparse or dense,
    /// batch-approves neighborhoods through pivots, and converts the approved
    /// stacks into the certified boxes `R(j)`.
    fn process_dense(&mut self, j: usize) -> Result<(), EngineError> {
        let w = self.params.width(j);
        let family = self.intervals_h(j);
        let scales = self.params.max_scale(self.theta_exp);
        let mut sparse: Vec<HashSet<u64>> = vec![HashSet::new(); scales as usize + 1];
        let mut weights: HashMap<GridBox, u64> = HashMap::new();
        let add = |b: GridBox, cost: u64, weights: &mut HashMap<GridBox, u64>| {
            weights
                .entry(b)
                .and_modify(|c| *c = (*c).min(cost))
                .or_insert(cost);
        };

        // The trivially-approved scales all assign the capped weight; their
        // vertical families are nested (finer grain at higher i), so
        // materializing the finest trivial scale yields the same box set as
        // materializing every trivial scale and deduplicating.
        let finest_trivial = (0..=scales).filter(|&i| self.params.trivial(j, i)).max();
        if let Some(i) = finest_trivial {
            debug_assert_eq!(self.params.weight_exp(j, i), 0);
            let vs = self.intervals_v(j, i);
            self.step((family.len() * vs.len()) as u64)?;
            for &hiv in &family {
                for &v in &vs {
                    add(GridBox::new(hiv, v), w, &mut weights);
                }
            }
        }

        for i in 0..=scales {
            if self.params.trivial(j, i) {
                continue;
            }
            let vs = self.intervals_v(j, i);
            let d_j = self.params.d[j];
            let p_num = (self.params.c0 * u64::from(self.params.log2n)).min(d_j);
            // Theoretical offsets make the weight ε_{i−q_j} provable
            // outright; practical ones are too tight for the pivot triangle,
            // so cap the claim at the exponent the triangle actually yields.
            let cost_exp = match self.params.mode {
                QualityMode::Theoretical => self.params.weight_exp(j, i),
                QualityMode::Practical(_) => self
                    .params
                    .weight_exp(j, i)
                    .min(self.params.pivot_cert_exp(j, i)),
            };
            let cost = eps_times(cost_exp, w);
            let mut t: BTreeSet<u64> = family.iter().map(|f| f.lo).collect();
            while let Some(&ilo) = t.iter().next() {
                let hiv = Interval::new(ilo, ilo + w);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    self.seed,
                    &[TAG_PIVOT, j as u64, ilo, i as u64],
                ));
                let s: Vec<Interval> = vs
                    .iter()
                    .filter(|_| rng.gen_range(0..d_j) < p_num)
                    .copied()
                    .collect();
                let found = self.enumerate(j, hiv, &s, i)?;
                if (found.len() as u64) < p_num {
                    sparse[i as usize].insert(ilo);
                    t.remove(&ilo);
                    continue;
                }
                // Dense: use I as a pivot to approve a whole cluster.
                let (h1, h2) = self.params.pivot_scales(j, i);
                let cluster = self.enumerate(j, hiv, &family, h1)?;
                let hood = self.enumerate(j, hiv, &self.intervals_v(j, h2), h2)?;
                let hood_set: HashSet<Interval> = hood.into_iter().collect();
                let approved: Vec<Interval> = vs
                    .iter()
                    .filter(|&&v| hood_set.contains(&round_interval(v, h2 as i64 + 3)))
                    .copied()
                    .collect();
                self.step((cluster.len() * approved.len()) as u64)?;
                for &hp in &cluster {
                    for &v in &approved {
                        add(GridBox::new(hp, v), cost, &mut weights);
                    }
                }
                t.remove(&ilo);
                for hp in &cluster {
                    t.remove(&hp.lo);
                }
            }
        }

        let mut approved: Vec<WeightedBox> = weights
            .into_iter()
            .map(|(b, cost)| WeightedBox::new(b, cost))
            .collect();
        approved.sort_unstable_by_key(|wb| (wb.b.h.lo, wb.b.v.lo, wb.b.v.hi, wb.cost));
        let boxes = if self.opts.induced { induced(&approved) } else { approved };
        self.step(boxes.len() as u64)?;
        let state = self.levels.last_mut().unwrap();
        state.sparse = sparse;
        state.boxes = boxes;
        Ok(())
    }

    /// Runs the full level construction and the final acceptance query.
    pub fn run(&mut self) -> Result<Decision, EngineError> {
        self.step(1)?;
        for j in 1..=self.params.k {
            self.preprocess(j)?;
            self.process_dense(j)?;
        }
        let k = self.params.k;
        let limit = eps_times(self.params.final_exp(self.theta_exp), self.n);
        let h = Interval::new(0, self.n);
        let target = Interval::new(self.n, 2 * self.n);
        let out = apm(h, &[target], limit, &self.levels[k - 1].boxes);
        self.step(out.events)?;
        Ok(if out.accepted.is_empty() { Decision::Reject } else { Decision::Accept })
    }
}
