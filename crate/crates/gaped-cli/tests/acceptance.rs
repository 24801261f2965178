//! Acceptance gate: one test per numbered criterion, each printing a single
//! summary line. Tests share a global lock so wall-clock measurements are
//! taken without contention from sibling tests.

use std::process::Command;
use std::sync::{Mutex, MutexGuard, PoisonError};
use std::time::Instant;

use gaped::corpus::generate_pair;
use gaped::driver::{amplify, build_tower, faed, FaedConfig, TowerConfig};
use gaped::engine::{derive_seed, GapOracle};
use gaped::params::QualityMode;
use gaped::strings::{banded_edit_distance, exact_edit_distance, to_symbols, Symbol};
use gaped::verify;

static GATE: Mutex<()> = Mutex::new(());

fn serialize() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(PoisonError::into_inner)
}

/// Exact distance via doubling-band DP.
fn exact_fast(a: &[Symbol], b: &[Symbol]) -> u64 {
    let n = a.len().max(b.len()) as u64;
    let mut h = (a.len() as u64).abs_diff(b.len() as u64).max(1);
    loop {
        let d = banded_edit_distance(a, b, h);
        if d <= h {
            return d;
        }
        if h >= n {
            return exact_edit_distance(a, b);
        }
        h *= 2;
    }
}

fn planted(n: usize, e: usize, alphabet: u16, seed: u64) -> (Vec<Symbol>, Vec<Symbol>) {
    let (x, y) = generate_pair(n, e, alphabet, seed);
    (to_symbols(&x), to_symbols(&y))
}

/// Least-squares slope of log₂(time) against log₂(n).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx: f64 = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my: f64 = points.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

/// Minimum over repetitions: the usual noise-robust estimator for a
/// deterministic workload (all noise sources only add time).
fn best_secs(xs: Vec<f64>) -> f64 {
    xs.into_iter().fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_01_upper_bound_soundness() {
    let _g = serialize();
    let mut trials = 0u64;
    for nexp in [8u32, 10, 12] {
        let n = 1usize << nexp;
        for alphabet in [2u16, 4, 26] {
            for e in [0usize, n / 64, n / 8, n / 2] {
                for s in 0..6u64 {
                    let seed = derive_seed(0xACC1, &[nexp as u64, alphabet as u64, e as u64, s]);
                    let (x, y) = planted(n, e, alphabet, seed);
                    let cfg = FaedConfig {
                        tower: TowerConfig { seed, ..TowerConfig::default() },
                        max_theta_exp: None,
                    };
                    let out = faed(&x, &y, &cfg).expect("faed");
                    let exact = exact_fast(&x, &y) as u128;
                    assert!(
                        out.u >= exact,
                        "criterion 1: FAIL — U={} < exact={exact} (n={n} alphabet={alphabet} \
                         e={e} seed={seed})",
                        out.u
                    );
                    trials += 1;
                }
            }
        }
    }
    assert!(trials >= 200, "criterion 1: FAIL — only {trials} trials");
    println!("criterion 1: PASS — U >= exact in {trials}/{trials} faed trials");
}

#[test]
fn criterion_02_gap_completeness() {
    let _g = serialize();
    let n = 1usize << 10;
    let tower = build_tower(&TowerConfig::default()).expect("tower");
    let oracle = amplify(tower, 0.01);
    let mut accepted = 0u32;
    let mut total = 0u32;
    for theta_exp in [1u32, 2] {
        for trial in 0..50u64 {
            let seed = derive_seed(0xACC2, &[theta_exp as u64, trial]);
            // Substitution-only edits keep lengths equal, editd <= θn.
            let e = n >> theta_exp;
            let (x, mut y) = planted(n, 0, 4, seed);
            for idx in 0..e {
                y[(idx * n / e) % n] = 100 + (idx % 4) as Symbol;
            }
            debug_assert!(exact_fast(&x, &y) as usize <= e);
            if oracle.decide(&x, &y, theta_exp, seed).is_accept() {
                accepted += 1;
            }
            total += 1;
        }
    }
    let rate = f64::from(accepted) / f64::from(total);
    assert!(
        rate >= 0.99,
        "criterion 2: FAIL — accept rate {rate:.3} ({accepted}/{total})"
    );
    println!("criterion 2: PASS — amplified gap accepted {accepted}/{total} close pairs");
}

#[test]
fn criterion_03_apm_oracle_equivalence() {
    let _g = serialize();
    let eq = verify::verify_apm_equivalence(1000, 0xACC3).unwrap_or_else(|e| {
        panic!("criterion 3: FAIL — {e}");
    });
    let aug = verify::verify_apm_augmentation(1000, 0xACC3 ^ 1).unwrap_or_else(|e| {
        panic!("criterion 3: FAIL — {e}");
    });
    println!(
        "criterion 3: PASS — {eq} sweep-vs-oracle checks, {aug} augmentation inequality checks"
    );
}

fn audit_many(mode: QualityMode, theta_exp: u32) -> (u64, u64) {
    let mut boxes = 0;
    let mut close = 0;
    for nexp in [8u32, 9, 10] {
        let n = 1usize << nexp;
        for (t, e) in [(0u64, n / 64), (1, n / 8), (2, n / 2)] {
            let seed = derive_seed(0xACC4, &[nexp as u64, t]);
            let (x, y) = planted(n, e, 4, seed);
            let mut x = x;
            let mut y = y;
            x.resize(n, 0);
            y.resize(n, 0);
            let stats = verify::audit_engine_run(&x, &y, theta_exp, mode, seed)
                .unwrap_or_else(|e| panic!("audit FAIL ({mode:?}): {e}"));
            boxes += stats.boxes_checked;
            close += stats.close_checked;
        }
    }
    (boxes, close)
}

#[test]
fn criterion_04_certified_box_audit() {
    let _g = serialize();
    let (bt, _) = audit_many(QualityMode::Theoretical, 1);
    let (bp, _) = audit_many(QualityMode::Practical(1), 3);
    assert!(bt > 0 && bp > 0);
    println!(
        "criterion 4: PASS — {} theoretical + {} practical boxes certified",
        bt, bp
    );
}

#[test]
fn criterion_05_enumerate_soundness_audit() {
    let _g = serialize();
    // Theoretical desk schedules are all-trivial (no CLOSE tests fire), so
    // the non-vacuous audit runs in practical mode at a threshold with
    // non-trivial scales.
    let (_, ct) = audit_many(QualityMode::Theoretical, 1);
    let (_, cp) = audit_many(QualityMode::Practical(1), 3);
    assert!(
        cp > 0,
        "criterion 5: FAIL — no CLOSE classification was exercised"
    );
    println!(
        "criterion 5: PASS — {} CLOSE classifications within bound ({} theoretical)",
        cp, ct
    );
}

#[test]
fn criterion_06_parameter_identities() {
    let _g = serialize();
    let sizes: Vec<u64> = (10..=20).map(|e| 1u64 << e).collect();
    match verify::verify_parameters(&sizes) {
        Ok(checks) => println!("criterion 6: PASS — {checks} identity/constraint checks"),
        Err(e) => panic!("criterion 6: FAIL — {e}"),
    }
}

#[test]
fn criterion_07_padding_sandwich() {
    let _g = serialize();
    match verify::verify_padding(500, 0xACC7) {
        Ok(n) => println!("criterion 7: PASS — sandwich held on {n} random pairs"),
        Err(e) => panic!("criterion 7: FAIL — {e}"),
    }
}

#[test]
fn criterion_08_zoom_bounds() {
    let _g = serialize();
    match verify::verify_zoom_bounds(64) {
        Ok(n) => println!("criterion 8: PASS — {n} exhaustive cardinality checks"),
        Err(e) => panic!("criterion 8: FAIL — {e}"),
    }
}

#[test]
fn criterion_09_runtime_scaling() {
    let _g = serialize();
    // Fixed probe and no induced expansion keep the faed workload shape
    // identical across sizes; the slope then reflects the core's scaling.
    let mut faed_pts = Vec::new();
    for (nexp, reps) in [(12u32, 3usize), (14, 3), (16, 1)] {
        let n = 1usize << nexp;
        let (x, y) = planted(n, n / 64, 4, derive_seed(0xACC9, &[nexp as u64]));
        let cfg = FaedConfig {
            tower: TowerConfig { seed: 9, force_no_induced: true, ..TowerConfig::default() },
            max_theta_exp: Some(1),
        };
        let mut times = Vec::new();
        for rep in 0..=reps {
            let t0 = Instant::now();
            let out = faed(&x, &y, &cfg).expect("faed");
            assert!(!out.fallback, "engine must run at n={n}");
            if rep > 0 {
                // First run is an untimed warmup.
                times.push(t0.elapsed().as_secs_f64());
            }
        }
        faed_pts.push((f64::from(nexp), best_secs(times).log2()));
    }
    let faed_slope = loglog_slope(&faed_pts);

    let mut dp_pts = Vec::new();
    for nexp in [10u32, 11, 12] {
        let n = 1usize << nexp;
        let (x, y) = planted(n, n / 64, 4, derive_seed(0xACC9, &[99, nexp as u64]));
        let mut times = Vec::new();
        for rep in 0..=9 {
            let t0 = Instant::now();
            std::hint::black_box(exact_edit_distance(&x, &y));
            if rep > 0 {
                times.push(t0.elapsed().as_secs_f64());
            }
        }
        dp_pts.push((f64::from(nexp), best_secs(times).log2()));
    }
    let dp_slope = loglog_slope(&dp_pts);

    assert!(
        faed_slope <= 1.9,
        "criterion 9: FAIL — faed slope {faed_slope:.2} > 1.9 (dp slope {dp_slope:.2})"
    );
    assert!(
        (dp_slope - 2.0).abs() <= 0.15,
        "criterion 9: FAIL — dp slope {dp_slope:.2} outside 2.0±0.15"
    );
    println!(
        "criterion 9: PASS — faed slope {faed_slope:.2} <= 1.9, dp slope {dp_slope:.2} ~ 2.0"
    );
}

#[test]
fn criterion_10_bench_determinism() {
    let _g = serialize();
    let bin = env!("CARGO_BIN_EXE_gaped");
    let run = || {
        Command::new(bin)
            .args([
                "bench",
                "--sizes",
                "1024",
                "2048",
                "--alphabets",
                "2",
                "--edit-fracs",
                "8",
                "--seed",
                "7",
            ])
            .output()
            .expect("bench run")
    };
    let (a, b) = (run(), run());
    assert!(a.status.success() && b.status.success(), "bench exited nonzero");
    assert_eq!(
        a.stdout, b.stdout,
        "criterion 10: FAIL — bench output differs between runs"
    );
    assert!(!a.stdout.is_empty());
    println!(
        "criterion 10: PASS — two bench runs byte-identical ({} bytes)",
        a.stdout.len()
    );
}
