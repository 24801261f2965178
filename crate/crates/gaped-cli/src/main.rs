//! Command-line surface for the `gaped` library: exact distances, gap
//! decisions, upper-bound approximation, corpus generation, schedule
//! inspection, invariant verification, and benchmark sweeps. All structured
//! output is line-delimited `key=value` records with a stable field order.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;

use gaped::corpus::generate_pair;
use gaped::driver::{self, FaedConfig, TowerConfig};
use gaped::engine::derive_seed;
use gaped::params::{LevelParams, QualityMode};
use gaped::strings::{banded_edit_distance, exact_edit_distance, to_symbols, Decision, Symbol};
use gaped::verify;

type Rat = Ratio<i64>;

#[derive(Parser)]
#[command(name = "gaped", about = "Gap and approximation algorithms for edit distance")]
struct Cli {
    /// Root seed for all randomness.
    #[arg(long, global = true, env = "GAPED_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModeArgs {
    /// Speed parameter T of the oracle tower (1, 7/6, 8/6, ...).
    #[arg(long, default_value = "7/6")]
    t: String,
    /// Quality mode: `theoretical` or `practical:<q>`.
    #[arg(long, default_value = "theoretical")]
    quality_mode: String,
}

impl ModeArgs {
    fn tower(&self, seed: u64) -> Result<TowerConfig> {
        Ok(TowerConfig {
            t: parse_speed(&self.t)?,
            mode: parse_mode(&self.quality_mode)?,
            seed,
            ..TowerConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact edit distance of two raw-byte files.
    Exact { x: PathBuf, y: PathBuf },
    /// Gap decision at threshold θ = 2^(-theta-exp) after padding.
    Gap {
        x: PathBuf,
        y: PathBuf,
        #[arg(long)]
        theta_exp: u32,
        #[command(flatten)]
        mode: ModeArgs,
        /// Step budget as a multiplier of the schedule's analytic bound.
        #[arg(long)]
        budget_mult: Option<f64>,
        /// Include wall-clock fields (breaks byte-for-byte determinism).
        #[arg(long)]
        timing: bool,
    },
    /// Upper-bound approximation of the edit distance.
    Approx {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        /// Cap on the probed threshold exponents.
        #[arg(long)]
        max_theta_exp: Option<u32>,
        /// Skip the induced box expansion everywhere.
        #[arg(long)]
        no_induced: bool,
        /// Also compute the exact distance and the ratio U/exact.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        timing: bool,
    },
    /// Generate a seeded pair with a planted edit-distance bound.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        e: usize,
        #[arg(long, default_value_t = 26)]
        alphabet: u16,
        #[arg(long)]
        out_x: PathBuf,
        #[arg(long)]
        out_y: PathBuf,
    },
    /// Print the engine schedule for a given size and threshold.
    Params {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        theta_exp: u32,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Run the invariant suites; exits 1 on any violation.
    Verify {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: u64,
    },
    /// Sweep sizes/alphabets/planted distances and emit one record per trial.
    Bench {
        /// Input lengths.
        #[arg(long, num_args = 1.., default_values_t = [1024u64, 4096, 16384, 65536])]
        sizes: Vec<u64>,
        /// Alphabet sizes.
        #[arg(long, num_args = 1.., default_values_t = [2u16, 26])]
        alphabets: Vec<u16>,
        /// Planted distance denominators (e = n / frac).
        #[arg(long, num_args = 1.., default_values_t = [64u64, 8])]
        edit_fracs: Vec<u64>,
        #[command(flatten)]
        mode: ModeArgs,
        /// Largest n for which the exact distance is also computed.
        #[arg(long, default_value_t = 4096)]
        exact_max: u64,
        #[arg(long)]
        max_theta_exp: Option<u32>,
        #[arg(long)]
        no_induced: bool,
        #[arg(long)]
        timing: bool,
    },
}

fn parse_speed(s: &str) -> Result<Rat> {
    let t: Rat = s.parse().map_err(|e| anyhow::anyhow!("bad speed {s:?}: {e}"))?;
    driver::tower_height(t).map_err(|e| anyhow::anyhow!(e))?;
    Ok(t)
}

fn parse_mode(s: &str) -> Result<QualityMode> {
    if s == "theoretical" {
        return Ok(QualityMode::Theoretical);
    }
    if let Some(q) = s.strip_prefix("practical:") {
        let q: i64 = q.parse().context("practical quality exponent")?;
        if q < 0 {
            bail!("practical quality exponent must be nonnegative");
        }
        return Ok(QualityMode::Practical(q));
    }
    bail!("quality mode must be `theoretical` or `practical:<q>`, got {s:?}")
}

fn read_symbols(path: &PathBuf) -> Result<Vec<Symbol>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(to_symbols(&bytes))
}

fn decision_str(d: Decision) -> &'static str {
    if d.is_accept() {
        "ACCEPT"
    } else {
        "REJECT"
    }
}

/// Exact distance via banded DP with doubling width (fast when the
/// distance is small relative to n).
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

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Exact { x, y } => {
            let (x, y) = (read_symbols(&x)?, read_symbols(&y)?);
            println!("distance={}", exact_fast(&x, &y));
        }
        Cmd::Gap { x, y, theta_exp, mode, budget_mult, timing } => {
            let (x, y) = (read_symbols(&x)?, read_symbols(&y)?);
            let cfg = mode.tower(cli.seed)?;
            let text = driver::pad_to_power_of_two(&x, &y);
            let budget = match budget_mult {
                Some(mult) => {
                    let q0 = 0;
                    let params = LevelParams::desk(text.n(), theta_exp, q0, cfg.mode, 2)
                        .context("no schedule admits this size/threshold")?;
                    let bound = driver::step_bound(&params, theta_exp, Rat::new(1, 1));
                    Some((bound * mult).max(1.0) as u64)
                }
                None => None,
            };
            let start = Instant::now();
            let out = driver::gap_decide(&text, theta_exp, &cfg, budget)
                .map_err(|e| anyhow::anyhow!(e))?;
            let mut line = format!(
                "n={} theta_exp={} decision={} engine={} degraded={} quality_exp={} steps={}",
                text.n(),
                theta_exp,
                decision_str(out.decision),
                out.engine,
                out.degraded,
                out.quality_exp,
                out.steps,
            );
            if timing {
                write!(line, " wall_ms={}", start.elapsed().as_millis())?;
            }
            println!("{line}");
        }
        Cmd::Approx { x, y, mode, max_theta_exp, no_induced, exact, timing } => {
            let (x, y) = (read_symbols(&x)?, read_symbols(&y)?);
            let mut cfg = FaedConfig {
                tower: mode.tower(cli.seed)?,
                max_theta_exp,
            };
            cfg.tower.force_no_induced = no_induced;
            let start = Instant::now();
            let out = driver::faed(&x, &y, &cfg).map_err(|e| anyhow::anyhow!(e))?;
            let mut line = format!(
                "x_len={} y_len={} n={} t={} mode={} seed={} i_max={} i_star={} \
                 quality_exp={} u={} fallback={} degraded={} runs={} steps={}",
                x.len(),
                y.len(),
                out.n,
                mode.t,
                mode.quality_mode,
                cli.seed,
                out.i_max,
                out.i_star,
                out.quality_exp,
                out.u,
                out.fallback,
                out.degraded,
                out.runs_per_probe,
                out.steps,
            );
            if exact {
                let d = exact_fast(&x, &y) as u128;
                write!(line, " exact={d}")?;
                if d > 0 {
                    write!(line, " ratio={:.3}", out.u as f64 / d as f64)?;
                }
                if out.u < d {
                    write!(line, " VIOLATION=upper_bound")?;
                }
            }
            if timing {
                write!(line, " wall_ms={}", start.elapsed().as_millis())?;
            }
            println!("{line}");
        }
        Cmd::Gen { n, e, alphabet, out_x, out_y } => {
            if e > n {
                bail!("e must be at most n");
            }
            let (x, y) = generate_pair(n, e, alphabet, cli.seed);
            std::fs::write(&out_x, &x)?;
            std::fs::write(&out_y, &y)?;
            println!(
                "n={n} e={e} alphabet={alphabet} seed={} out_x={} out_y={}",
                cli.seed,
                out_x.display(),
                out_y.display()
            );
        }
        Cmd::Params { n, theta_exp, mode } => {
            let m = parse_mode(&mode.quality_mode)?;
            parse_speed(&mode.t)?;
            let q0 = match m {
                QualityMode::Theoretical => 0,
                QualityMode::Practical(q) => q,
            };
            let params = LevelParams::desk(n, theta_exp, q0, m, 2)
                .context("no schedule admits this size/threshold")?;
            print!("{}", params.report());
        }
        Cmd::Verify { n, trials } => {
            return run_verify(n, trials, cli.seed);
        }
        Cmd::Bench {
            sizes,
            alphabets,
            edit_fracs,
            mode,
            exact_max,
            max_theta_exp,
            no_induced,
            timing,
        } => {
            let tower = mode.tower(cli.seed)?;
            for &n in &sizes {
                for &alphabet in &alphabets {
                    for &frac in &edit_fracs {
                        let e = (n / frac.max(1)) as usize;
                        let pair_seed =
                            derive_seed(cli.seed, &[n, u64::from(alphabet), frac]);
                        let (xb, yb) = generate_pair(n as usize, e, alphabet, pair_seed);
                        let (x, y) = (to_symbols(&xb), to_symbols(&yb));
                        let mut cfg = FaedConfig { tower: tower.clone(), max_theta_exp };
                        cfg.tower.seed = pair_seed;
                        cfg.tower.force_no_induced = no_induced;
                        let start = Instant::now();
                        let out = driver::faed(&x, &y, &cfg).map_err(|e| anyhow::anyhow!(e))?;
                        let mut line = format!(
                            "n={n} alphabet={alphabet} e={e} seed={pair_seed} t={} mode={} \
                             i_max={} i_star={} quality_exp={} u={} fallback={} degraded={} \
                             steps={}",
                            mode.t,
                            mode.quality_mode,
                            out.i_max,
                            out.i_star,
                            out.quality_exp,
                            out.u,
                            out.fallback,
                            out.degraded,
                            out.steps,
                        );
                        if n <= exact_max {
                            let d = exact_fast(&x, &y) as u128;
                            write!(line, " exact={d}")?;
                            if d > 0 {
                                write!(line, " ratio={:.3}", out.u as f64 / d as f64)?;
                            }
                            if out.u < d {
                                write!(line, " VIOLATION=upper_bound")?;
                            }
                        }
                        if timing {
                            write!(line, " wall_ms={}", start.elapsed().as_millis())?;
                        }
                        println!("{line}");
                    }
                }
            }
        }
    }
    Ok(0)
}

fn run_verify(n: usize, trials: u64, seed: u64) -> Result<u8> {
    fn report_line(suite: &str, result: Result<u64, String>) -> bool {
        match result {
            Ok(checks) => {
                println!("suite={suite} checks={checks} status=ok");
                true
            }
            Err(detail) => {
                println!("suite={suite} checks=0 status=fail detail=\"{detail}\"");
                false
            }
        }
    }
    let mut failed = false;
    failed |= !report_line("parameters", verify::verify_parameters(&[1 << 10, 1 << 12, 1 << 14]));
    failed |= !report_line("apm_equivalence", verify::verify_apm_equivalence(trials * 5, seed));
    failed |=
        !report_line("apm_augmentation", verify::verify_apm_augmentation(trials * 5, seed ^ 1));
    failed |= !report_line("zoom_bounds", verify::verify_zoom_bounds(32));
    failed |= !report_line("padding", verify::verify_padding(trials * 10, seed ^ 2));

    let audits: Vec<(& str, usize, u32, QualityMode)> = vec![
        ("engine_audit_theoretical", n, 1, QualityMode::Theoretical),
        ("engine_audit_practical", n, 3, QualityMode::Practical(1)),
    ];
    for (suite, an, te, m) in audits {
        for trial in 0..trials.min(5) {
            let pair_seed = derive_seed(seed, &[3, trial]);
            let e = if trial % 2 == 0 { an / 64 } else { an / 4 };
            let (xb, yb) = generate_pair(an, e, 4, pair_seed);
            let mut x = to_symbols(&xb);
            let mut y = to_symbols(&yb);
            x.resize(an, 0);
            y.resize(an, 0);
            let result = verify::audit_engine_run(&x, &y, te, m, pair_seed)
                .map(|s| s.boxes_checked + s.close_checked);
            if !report_line(suite, result) {
                failed = true;
                break;
            }
        }
    }
    Ok(if failed { 1 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
