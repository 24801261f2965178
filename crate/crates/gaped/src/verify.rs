//! Reusable invariant checks shared by the CLI `verify` subcommand and the
//! acceptance suite. Every checker returns the number of individual checks
//! performed, or a counterexample description on the first violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::collections::HashMap;

use crate::dyadic::eps_times;
use crate::engine::{Engine, EngineOptions, GapOracle};
use crate::intervals::{aligned_family, zoom_in, WeightedBox};
use crate::params::{LevelParams, QualityMode, Rat};
use crate::shortcut::{apm, cost_via_shortcuts_oracle};
use crate::strings::{
    box_cost, exact_edit_distance, GridBox, Interval, Symbol, Text,
};

/// Exact-threshold oracle used for audited engine runs.
struct ExactBase;

impl GapOracle for ExactBase {
    fn decide(
        &self,
        a: &[Symbol],
        b: &[Symbol],
        theta_exp: u32,
        _seed: u64,
    ) -> crate::strings::Decision {
        crate::strings::base_gap_decide(a, b, theta_exp)
    }

    fn quality_exp(&self) -> i64 {
        0
    }
}

fn random_boxes(rng: &mut impl Rng, w: u64, vmax: u64, count: usize) -> Vec<WeightedBox> {
    (0..count)
        .map(|_| {
            let bw = 1 << rng.gen_range(0..=4u32.min(w.trailing_zeros().max(1)));
            let bw = bw.min(w);
            let hlo = rng.gen_range(0..=w - bw);
            let vlo = rng.gen_range(0..=vmax.saturating_sub(bw));
            WeightedBox::new(
                GridBox::new(Interval::new(hlo, hlo + bw), Interval::new(vlo, vlo + bw)),
                rng.gen_range(0..=2 * bw),
            )
        })
        .collect()
}

/// Random-instance equivalence of the sweep against the DAG oracle:
/// `J` accepted iff `cost_{R⁺}(I×J⁰) ≤ limit`.
pub fn verify_apm_equivalence(trials: u64, seed: u64) -> Result<u64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = 0;
    for t in 0..trials {
        let w = 1u64 << rng.gen_range(2..=6u32);
        let h = Interval::new(0, w);
        let vmax = 2 * w + rng.gen_range(0..w);
        let count = rng.gen_range(0..=50);
        let boxes = random_boxes(&mut rng, w, vmax, count);
        let nv = rng.gen_range(1..=32usize);
        let vs: Vec<Interval> = (0..nv)
            .map(|_| {
                let jw = rng.gen_range(1..=w);
                let lo = rng.gen_range(0..=vmax - jw);
                Interval::new(lo, lo + jw)
            })
            .collect();
        let mins: Vec<u64> = vs.iter().map(|j| j.lo).collect();
        let limit = rng.gen_range(0..=3 * w);
        let out = apm(h, &vs, limit, &boxes);
        for j in &vs {
            let oracle = cost_via_shortcuts_oracle(&boxes, h, Interval::new(0, j.hi), Some(&mins))
                .map_err(|e| format!("oracle failed: {e}"))?;
            let swept = out.accepted.contains(j);
            if swept != (oracle <= limit) {
                return Err(format!(
                    "trial {t}: J={j:?} sweep={swept} oracle_cost={oracle} limit={limit}"
                ));
            }
            checks += 1;
        }
    }
    Ok(checks)
}

/// Both augmentation inequalities on random certified instances:
/// `cost_{R⁺}(I×J⁰) ≤ cost_R(I×J)` and `cost(I×J) ≤ 2·cost_{R⁺}(I×J⁰)`.
pub fn verify_apm_augmentation(trials: u64, seed: u64) -> Result<u64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = 0;
    for t in 0..trials {
        let w = 1u64 << rng.gen_range(2..=5u32);
        let vspan = 2 * w;
        // Text laid out so horizontal coordinates [0,w) and vertical
        // coordinates [0,vspan) both index into z directly.
        let z: Vec<Symbol> = (0..vspan).map(|_| rng.gen_range(0..3u16)).collect();
        let h = Interval::new(0, w);
        // Certified boxes: square sub-boxes with the exact cost.
        let boxes: Vec<WeightedBox> = (0..rng.gen_range(1..=20usize))
            .map(|_| {
                let bw = 1u64 << rng.gen_range(0..=w.trailing_zeros());
                let hlo = rng.gen_range(0..=w - bw);
                let vlo = rng.gen_range(0..=vspan - bw);
                let b = GridBox::new(Interval::new(hlo, hlo + bw), Interval::new(vlo, vlo + bw));
                WeightedBox::new(b, box_cost(&z, b))
            })
            .collect();
        // Stack elements share the width of I, as in the engine; the
        // factor-two augmentation bound needs μ(J) = μ(I).
        let vs: Vec<Interval> = (0..rng.gen_range(1..=8usize))
            .map(|_| {
                let lo = rng.gen_range(0..=vspan - w);
                Interval::new(lo, lo + w)
            })
            .collect();
        let mins: Vec<u64> = vs.iter().map(|j| j.lo).collect();
        for j in &vs {
            let plus = cost_via_shortcuts_oracle(&boxes, h, Interval::new(0, j.hi), Some(&mins))
                .map_err(|e| format!("oracle failed: {e}"))?;
            let plain = cost_via_shortcuts_oracle(&boxes, h, *j, None)
                .map_err(|e| format!("oracle failed: {e}"))?;
            if plus > plain {
                return Err(format!("trial {t}: cost_plus {plus} > cost_plain {plain} at {j:?}"));
            }
            let truth = box_cost(&z, GridBox::new(h, *j));
            if truth > 2 * plus {
                return Err(format!("trial {t}: true cost {truth} > 2·{plus} at {j:?}"));
            }
            checks += 2;
        }
    }
    Ok(checks)
}

/// Result of one audited engine run.
pub struct AuditStats {
    pub boxes_checked: u64,
    pub close_checked: u64,
    pub decision: crate::strings::Decision,
}

/// Runs the engine on `(x, y)` and audits (a) every certified box of every
/// level against its true cost and (b) every CLOSE classification against
/// the scale bound `ε_{close}·μ(I)`.
pub fn audit_engine_run(
    x: &[Symbol],
    y: &[Symbol],
    theta_exp: u32,
    mode: QualityMode,
    seed: u64,
) -> Result<AuditStats, String> {
    let n = x.len() as u64;
    let q0 = match mode {
        QualityMode::Theoretical => 0,
        QualityMode::Practical(qh) => qh.max(0),
    };
    let params = LevelParams::desk(n, theta_exp, q0, mode, 2)
        .ok_or_else(|| format!("no schedule for n={n} theta_exp={theta_exp}"))?;
    let text = Text::new(x, y);
    let oracle = ExactBase;
    let mut eng = Engine::new(&text, theta_exp, &params, &oracle, seed, EngineOptions::default());
    let decision = eng.run().map_err(|e| format!("engine error: {e}"))?;

    let mut boxes_checked = 0;
    for j in 1..=params.k {
        for wb in eng.level_boxes(j) {
            let truth = box_cost(text.z(), wb.b);
            if truth > wb.cost {
                return Err(format!(
                    "level {j}: box {:?} certified at {} but true cost {truth}",
                    wb.b, wb.cost
                ));
            }
            boxes_checked += 1;
        }
    }

    let mut close_checked = 0;
    for rec in eng.close_records() {
        let w = rec.b.h.width();
        let bound = eps_times(params.close_exp(rec.j, rec.i), w);
        let truth = box_cost(text.z(), rec.b);
        if truth > bound {
            return Err(format!(
                "CLOSE at j={} i={} box {:?}: true cost {truth} > bound {bound}",
                rec.j, rec.i, rec.b
            ));
        }
        close_checked += 1;
    }
    Ok(AuditStats { boxes_checked, close_checked, decision })
}

/// Exhaustive zoom-in cardinality bounds for horizontal widths up to
/// `max_w`: forward count ≤ 1 + 32·ε_{i−i′}·w/w′ and each target interval
/// arises from at most 33 zoom members in the reverse direction.
pub fn verify_zoom_bounds(max_w: u64) -> Result<u64, String> {
    let mut checks = 0;
    let mut wp_values = Vec::new();
    let mut w = 2u64;
    while w <= max_w {
        wp_values.clear();
        let mut wp = 1u64;
        while wp < w {
            wp_values.push(wp);
            wp *= 2;
        }
        for &wp in &wp_values {
            for i in 1..=8u32 {
                for ip in 0..=i {
                    for hplo in (0..w).step_by(wp as usize) {
                        let b = GridBox::new(Interval::new(0, w), Interval::new(0, 2 * w));
                        let iprime = Interval::new(hplo, hplo + wp);
                        let members = zoom_in(b, i, iprime, ip);
                        // 1 + 32·ε_{i−i′}·w/w′, floored only at the end so
                        // the comparison is exact for integer counts.
                        let bound = 1 + (32 * w) / ((1u64 << (i - ip)) * wp);
                        if members.len() as u64 > bound {
                            return Err(format!(
                                "zoom(w={w}, w'={wp}, i={i}, i'={ip}, I'={iprime:?}): \
                                 {} members > bound {bound}",
                                members.len()
                            ));
                        }
                        checks += 1;
                        // Reverse direction: for this fixed I', each zoomed
                        // interval arises from at most 33 stack elements J of
                        // the ε_{i+3}-aligned outer family.
                        let outer = aligned_family(w, i as i64 + 3, Interval::new(0, 2 * w));
                        let mut seen: HashMap<Interval, u64> = HashMap::new();
                        for &j0 in &outer {
                            let bj = GridBox::new(Interval::new(0, w), j0);
                            for m in zoom_in(bj, i, iprime, ip) {
                                *seen.entry(m).or_insert(0) += 1;
                            }
                        }
                        for (m, producers) in seen {
                            if producers > 33 {
                                return Err(format!(
                                    "interval {m:?} produced by {producers} > 33 stack \
                                     elements (w={w}, w'={wp}, i={i}, i'={ip})"
                                ));
                            }
                            checks += 1;
                        }
                    }
                }
            }
        }
        w *= 2;
    }
    Ok(checks)
}

/// Padding sandwich on random unequal-length pairs.
pub fn verify_padding(trials: u64, seed: u64) -> Result<u64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let la = rng.gen_range(0..60usize);
        let lb = rng.gen_range(0..60usize);
        let a: Vec<Symbol> = (0..la).map(|_| rng.gen_range(0..4u16)).collect();
        let b: Vec<Symbol> = (0..lb).map(|_| rng.gen_range(0..4u16)).collect();
        let d0 = exact_edit_distance(&a, &b);
        let text = crate::driver::pad_to_power_of_two(&a, &b);
        let n = text.n();
        let d1 = exact_edit_distance(
            text.slice(Interval::new(0, n)),
            text.slice(Interval::new(n, 2 * n)),
        );
        if !(d0 <= d1 && d1 <= 2 * d0) && !(d0 == 0 && d1 == 0) {
            return Err(format!("trial {t}: padded {d1} vs original {d0}"));
        }
    }
    Ok(trials)
}

/// Parameter identities (exact rational arithmetic) and the two schedule
/// constraints for every admissible threshold at the given sizes.
pub fn verify_parameters(sizes: &[u64]) -> Result<u64, String> {
    use crate::params::Exponents;
    let mut checks = 0;
    let e = Exponents::derive(Rat::new(1, 1));
    let half = Rat::new(1, 2);
    let expect = [
        (e.k == 4, "k=4"),
        (e.b == Rat::new(8, 15), "B=8/15"),
        (e.gamma[1] == half, "gamma_1=1/2"),
        (e.delta[0] == half, "delta_0=1/2"),
        (e.delta[4] == Rat::new(0, 1), "delta_4=0"),
        (e.gamma[2] == Rat::new(19, 30), "gamma_2=19/30"),
        (e.delta[2] == Rat::new(1, 10), "delta_2=1/10"),
    ];
    for (ok, label) in expect {
        if !ok {
            return Err(format!("identity {label} failed"));
        }
        checks += 1;
    }
    for &n in sizes {
        let params = match LevelParams::rounded(&e, n, 0, None) {
            Ok(p) => p,
            Err(err) => return Err(format!("n={n}: {err}")),
        };
        let log2n = params.log2n;
        for te in 1..=log2n {
            if !params.admits(te) {
                continue;
            }
            for j in 1..=params.k {
                // Eq. (1): enough disjoint level-j windows for the density
                // target; Eq. (2): windows grow fast enough for the zoom.
                if params.n / params.width(j) < params.d[j] {
                    return Err(format!("n={n} te={te}: Eq(1) fails at level {j}"));
                }
                if params.width(j) * (1u64 << (te + 1)) > params.width(j + 1) {
                    return Err(format!("n={n} te={te}: Eq(2) fails at level {j}"));
                }
                checks += 2;
            }
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apm_equivalence_smoke() {
        assert!(verify_apm_equivalence(50, 1).unwrap() > 0);
    }

    #[test]
    fn apm_augmentation_smoke() {
        assert!(verify_apm_augmentation(50, 2).unwrap() > 0);
    }

    #[test]
    fn audit_smoke() {
        let x: Vec<Symbol> = (0..256).map(|v| (v % 5) as Symbol).collect();
        let stats = audit_engine_run(&x, &x, 1, QualityMode::Theoretical, 3).unwrap();
        assert!(stats.boxes_checked > 0);
        assert!(stats.decision.is_accept());
    }

    #[test]
    fn zoom_bounds_smoke() {
        assert!(verify_zoom_bounds(16).unwrap() > 0);
    }

    #[test]
    fn padding_smoke() {
        assert_eq!(verify_padding(50, 4).unwrap(), 50);
    }

    #[test]
    fn parameters_smoke() {
        assert!(verify_parameters(&[1 << 10, 1 << 12]).unwrap() > 0);
    }
}
