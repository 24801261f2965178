//! Derivation of the multi-level parameter schedule: level count `k`,
//! exponents `γ_i`/`δ_i`, widths `w_j`, densities `d_j`, quality parameters
//! `q_j`, the final quality `Q = 2^{q_k+6}`, and the admissible-threshold
//! bound `ζ`.
//!
//! Exponent arithmetic is exact (`Ratio<i64>`); widths and densities are
//! rounded to powers of two with a monotonicity repair, since the closed
//! forms are asymptotic and can collide at small `n`.

use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::dyadic::log2_exact;

pub type Rat = Ratio<i64>;

/// Default sampling constant (both the pivot test and the sparse sample).
pub const C0: u64 = 30;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("n = {0} is too small for a multi-level schedule")]
    TooSmall(u64),
    #[error("no admissible threshold exists at n = {n} (ζ·log₂n = {zeta_log} < 1)")]
    NoAdmissibleTheta { n: u64, zeta_log: f64 },
}

/// Quality knob: the theoretical recurrence, or a small user constant for
/// empirical ratio studies (the theoretical `Q` is astronomically large and
/// meaningless at desk scale).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QualityMode {
    Theoretical,
    /// Override every `q_j` (j ≥ 1) with this constant.
    Practical(i64),
}

/// The exact-rational exponent schedule for speed parameter `T′`.
#[derive(Clone, Debug)]
pub struct Exponents {
    pub tprime: Rat,
    pub k: usize,
    pub b: Rat,
    /// `γ_1..γ_{k+1}` (index 0 unused, `γ_{k+1} = 1`).
    pub gamma: Vec<Rat>,
    /// `δ_0..δ_k`.
    pub delta: Vec<Rat>,
    pub tau_cap: Rat,
    /// `min_j (γ_{j+1} − γ_j)` over `j = 1..k`.
    pub m: Rat,
}

fn rat_pow(base: Rat, exp: usize) -> Rat {
    let mut out = Rat::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

impl Exponents {
    /// Derives the schedule exponents: `k = ⌈(T′+1)(1+ln(T′+1))⌉`,
    /// `B = (T′+1)^k / (2((T′+1)^k − T′^k))`, `γ_i = 1/2 + B·T′/(T′+1) −
    /// B(T′/(T′+1))^i`, `δ_i = 1/2 − B + B(T′/(T′+1))^i`.
    pub fn derive(tprime: Rat) -> Exponents {
        assert!(tprime >= Rat::one());
        let tp1 = tprime + Rat::one();
        let f = *tp1.numer() as f64 / *tp1.denom() as f64;
        let k = (f * (1.0 + f.ln())).ceil() as usize;

        let r = tprime / tp1;
        // B = 1/(2(1 − r^k)), the overflow-safe form of the closed formula.
        let b = Rat::one() / ((Rat::one() - rat_pow(r, k)) * Rat::from_integer(2));

        let half = Rat::new(1, 2);
        let mut gamma = vec![Rat::zero(); k + 2];
        let mut delta = vec![Rat::zero(); k + 1];
        for i in 1..=k {
            gamma[i] = half + b * (r - rat_pow(r, i));
        }
        gamma[k + 1] = Rat::one();
        for (i, d) in delta.iter_mut().enumerate() {
            *d = half - b + b * rat_pow(r, i);
        }

        let m = (1..=k).map(|j| gamma[j + 1] - gamma[j]).min().unwrap();

        // τ ≤ (3T′−2) / (6(6T′³+7T′²+T′)).
        let three = Rat::from_integer(3);
        let tau_cap = (three * tprime - Rat::from_integer(2))
            / (Rat::from_integer(6)
                * (Rat::from_integer(6) * rat_pow(tprime, 3)
                    + Rat::from_integer(7) * rat_pow(tprime, 2)
                    + tprime));

        Exponents { tprime, k, b, gamma, delta, tau_cap, m }
    }

    /// The admissible-threshold bound `ζ = min(ζ′, M/2, τ_cap)`, where `ζ′`
    /// is the sub-oracle's bound (`None` for the unrestricted exact base).
    pub fn zeta(&self, zeta_prime: Option<Rat>) -> Rat {
        let mut z = (self.m / Rat::from_integer(2)).min(self.tau_cap);
        if let Some(zp) = zeta_prime {
            z = z.min(zp);
        }
        z
    }
}

/// The quality recurrence `q_0 = log₂ Q′`, `q_j = 3q_{j−1} + 21`.
pub fn quality_sequence(q0: i64, k: usize) -> Vec<i64> {
    let mut q = Vec::with_capacity(k + 1);
    q.push(q0);
    for _ in 0..k {
        let prev = *q.last().unwrap();
        q.push(3 * prev + 21);
    }
    q
}

/// A concrete level schedule for one input size.
#[derive(Clone, Debug)]
pub struct LevelParams {
    pub n: u64,
    pub log2n: u32,
    pub k: usize,
    /// `w_1..w_{k+1}` with `w_{k+1} = n` (index `j-1` holds `w_j`).
    pub w: Vec<u64>,
    /// `d_0..d_k`.
    pub d: Vec<u64>,
    /// Effective `q_0..q_k` under the quality mode.
    pub q: Vec<i64>,
    pub mode: QualityMode,
    /// Admissible thresholds satisfy `θ ≥ n^{−ζ}`.
    pub zeta: Rat,
    pub c0: u64,
    pub sample_count: u64,
}

impl LevelParams {
    fn assemble(
        n: u64,
        k: usize,
        mut w: Vec<u64>,
        mut d: Vec<u64>,
        mode: QualityMode,
        q0: i64,
        zeta: Rat,
    ) -> LevelParams {
        let log2n = log2_exact(n);
        // Monotonicity repair: widths strictly increase (by a factor ≥ 2),
        // densities never increase, and Eq. (1) `n/w_j ≥ d_j` holds.
        for j in 1..k {
            w[j] = w[j].max(2 * w[j - 1]);
        }
        w.push(n);
        for j in 1..=k {
            let cap = n / w[j - 1];
            d[j] = d[j].min(d[j - 1]).min(cap).max(1);
        }
        d[k] = 1;
        let q = match mode {
            QualityMode::Theoretical => quality_sequence(q0, k),
            QualityMode::Practical(qh) => {
                let mut q = vec![qh; k + 1];
                q[0] = q0;
                q
            }
        };
        let sample_count = C0 * u64::from(log2n);
        LevelParams { n, log2n, k, w, d, q, mode, zeta, c0: C0, sample_count }
    }

    /// Rounds the theoretical exponent schedule to powers of two; always
    /// succeeds structurally (callers check threshold admissibility).
    pub fn rounded(exps: &Exponents, n: u64, q0: i64, zeta_prime: Option<Rat>) -> Result<LevelParams, ScheduleError> {
        let log2n = log2_exact(n) as i64;
        if log2n < 4 {
            return Err(ScheduleError::TooSmall(n));
        }
        let k = exps.k;
        let pow_of = |e: Rat| -> u64 {
            let bits = (e * Rat::from_integer(log2n)).floor().to_integer();
            1u64 << bits.clamp(0, log2n)
        };
        let w: Vec<u64> = (1..=k).map(|i| pow_of(exps.gamma[i])).collect();
        let d: Vec<u64> = (0..=k).map(|i| pow_of(exps.delta[i])).collect();
        if w[k - 1].saturating_mul(2) > n {
            return Err(ScheduleError::TooSmall(n));
        }
        // ζ uses M re-derived from the rounded widths.
        let mut sched = LevelParams::assemble(n, k, w, d, QualityMode::Theoretical, q0, Rat::zero());
        let m_rounded = (0..k)
            .map(|j| {
                Rat::new(
                    (log2_exact(sched.w[j + 1]) - log2_exact(sched.w[j])) as i64,
                    log2n,
                )
            })
            .min()
            .unwrap();
        sched.zeta = Exponents {
            m: m_rounded,
            ..exps.clone()
        }
        .zeta(zeta_prime);
        Ok(sched)
    }

    /// Full theoretical derivation; errors when no admissible threshold
    /// exists at this `n` (the driver then falls back).
    pub fn derive_schedule(
        tprime: Rat,
        n: u64,
        q0: i64,
        zeta_prime: Option<Rat>,
    ) -> Result<LevelParams, ScheduleError> {
        let exps = Exponents::derive(tprime);
        let sched = LevelParams::rounded(&exps, n, q0, zeta_prime)?;
        let zl = sched.zeta * Rat::from_integer(sched.log2n as i64);
        if zl < Rat::one() {
            return Err(ScheduleError::NoAdmissibleTheta {
                n,
                zeta_log: *zl.numer() as f64 / *zl.denom() as f64,
            });
        }
        Ok(sched)
    }

    /// A geometric schedule usable at desk-scale `n`, where the theoretical
    /// exponents admit no threshold: widths grow by the exact factor
    /// `2^{theta_exp+1}` demanded by Eq. (2), capped at `max_k` levels.
    /// Returns `None` when even one level does not fit.
    pub fn desk(
        n: u64,
        theta_exp: u32,
        q0: i64,
        mode: QualityMode,
        max_k: usize,
    ) -> Option<LevelParams> {
        if !n.is_power_of_two() {
            return None;
        }
        let log2n = log2_exact(n);
        if log2n < 4 {
            return None;
        }
        let w1_bits = log2n / 2;
        let rb = theta_exp + 1;
        let mut w = Vec::new();
        let mut bits = w1_bits;
        while w.len() < max_k && bits + rb <= log2n {
            w.push(1u64 << bits);
            bits += rb;
        }
        let k = w.len();
        if k == 0 {
            return None;
        }
        // Densities interpolate geometrically from d_0 = w_1 down to 1.
        let d: Vec<u64> = (0..=k)
            .map(|j| 1u64 << (w1_bits as usize * (k - j) / k))
            .collect();
        let zeta = Rat::new(theta_exp as i64, log2n as i64);
        Some(LevelParams::assemble(n, k, w, d, mode, q0, zeta))
    }

    /// `w_j` (1-based level index, `j ≤ k+1`).
    pub fn width(&self, j: usize) -> u64 {
        self.w[j - 1]
    }

    /// Whether Eq. (1) and Eq. (2) hold at threshold `2^{-theta_exp}` and the
    /// threshold is within the admissible range.
    pub fn admits(&self, theta_exp: u32) -> bool {
        let in_range = Rat::from_integer(theta_exp as i64)
            <= self.zeta * Rat::from_integer(self.log2n as i64);
        let eq1 = (1..=self.k).all(|j| self.n / self.width(j) >= self.d[j]);
        let eq2 = (1..=self.k).all(|j| {
            self.width(j)
                .checked_shl(theta_exp + 1)
                .is_some_and(|lhs| lhs <= self.width(j + 1))
        });
        in_range && eq1 && eq2
    }

    /// Scale indices run over `0..=max_scale` for threshold `2^{-theta_exp}`.
    pub fn max_scale(&self, theta_exp: u32) -> u32 {
        theta_exp
    }

    /// `true` when every level-`j` candidate at scale `i` is approved without
    /// testing (the trivially-dense branch).
    pub fn trivial(&self, j: usize, i: u32) -> bool {
        i as i64 <= self.q[j]
    }

    /// Exponent of the weight `min(1, ε_{i−q_j})` assigned to approved boxes.
    pub fn weight_exp(&self, j: usize, i: u32) -> i64 {
        (i as i64 - self.q[j]).max(0)
    }

    /// Exponent of the neighborhood-query threshold used when assembling
    /// `Bbelow` at level `j` from the level-`j−1` boxes.
    pub fn bbelow_exp(&self, j: usize, i: u32) -> i64 {
        match self.mode {
            QualityMode::Theoretical => i as i64 - self.q[j - 1] - 5,
            QualityMode::Practical(_) => i as i64 - self.q[j - 1] - 1,
        }
    }

    /// Exponent of the normalized-cost bound every CLOSE classification at
    /// `(j, i)` must satisfy (the audit contract).
    pub fn close_exp(&self, j: usize, i: u32) -> i64 {
        self.bbelow_exp(j, i) - 1
    }

    /// Scales for the pivot's cluster and neighborhood enumerations.
    pub fn pivot_scales(&self, j: usize, i: u32) -> (u32, u32) {
        let (h1, h2) = match self.mode {
            QualityMode::Theoretical => {
                (i as i64 - self.q[j - 1] - 7, i as i64 - 2 * self.q[j - 1] - 14)
            }
            QualityMode::Practical(_) => {
                (i as i64 - self.q[j - 1] - 1, i as i64 - 2 * self.q[j - 1] - 2)
            }
        };
        (h1.max(0) as u32, h2.max(0) as u32)
    }

    /// Provable certification exponent for pivot-approved boxes at `(j, i)`:
    /// the triangle through the pivot bounds the normalized cost by
    /// `ε_{se(h1)} + ε_{se(h2)} + ε_{h2+2}`, with `se` the soundness exponent
    /// of the enumeration at that scale. Practical-mode weights are capped at
    /// this bound so every emitted box stays certified.
    pub fn pivot_cert_exp(&self, j: usize, i: u32) -> i64 {
        let (h1, h2) = self.pivot_scales(j, i);
        let se = |s: u32| -> i64 {
            let oracle = s as i64 - self.q[j - 1];
            if j == 1 {
                oracle
            } else {
                oracle.min(self.close_exp(j, s))
            }
        };
        se(h1).min(se(h2)).min(h2 as i64 + 2) - 2
    }

    /// Exponent of the final acceptance threshold `θ·2^{q_k+5}` (theoretical)
    /// at threshold `2^{-theta_exp}`.
    pub fn final_exp(&self, theta_exp: u32) -> i64 {
        match self.mode {
            QualityMode::Theoretical => theta_exp as i64 - self.q[self.k] - 5,
            QualityMode::Practical(_) => theta_exp as i64 - self.q[self.k],
        }
    }

    /// `log₂ Q` of the gap guarantee this schedule provides.
    pub fn quality_exp(&self) -> i64 {
        match self.mode {
            QualityMode::Theoretical => self.q[self.k] + 6,
            QualityMode::Practical(qh) => qh,
        }
    }

    /// Human-readable schedule report, one `key=value` line per field.
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("n={}\nk={}\n", self.n, self.k));
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        out.push_str(&format!("w={}\n", join(&self.w)));
        out.push_str(&format!("d={}\n", join(&self.d)));
        out.push_str(&format!(
            "q={}\n",
            self.q.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
        ));
        out.push_str(&format!("Q=2^{}\n", self.quality_exp()));
        out.push_str(&format!("zeta={}/{}\n", self.zeta.numer(), self.zeta.denom()));
        out.push_str(&format!(
            "mode={}\n",
            match self.mode {
                QualityMode::Theoretical => "theoretical".to_string(),
                QualityMode::Practical(qh) => format!("practical:{qh}"),
            }
        ));
        out.push_str(&format!("c0={}\nsample_count={}\n", self.c0, self.sample_count));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_for_unit_speed() {
        let e = Exponents::derive(Rat::one());
        assert_eq!(e.k, 4);
        assert_eq!(e.b, Rat::new(8, 15));
        assert_eq!(e.gamma[1], Rat::new(1, 2));
        assert_eq!(e.delta[0], Rat::new(1, 2));
        assert_eq!(e.delta[4], Rat::zero());
        assert_eq!(e.gamma[2], Rat::new(19, 30));
        assert_eq!(e.delta[2], Rat::new(1, 10));
        // B ≤ (3T′+1)/(6T′).
        assert!(e.b <= Rat::new(4, 6));
        // τ cap for T′ = 1: 1/84.
        assert_eq!(e.tau_cap, Rat::new(1, 84));
    }

    #[test]
    fn exponent_identities_along_grid() {
        // α_j = 1 − γ_j − δ_j is j-independent and ν_i = δ_{i−1} +
        // ((T′+1)/T′)γ_i is i-independent, for several speeds.
        for denom in [(1, 1), (7, 6), (4, 3), (2, 1)] {
            let tp = Rat::new(denom.0, denom.1);
            let e = Exponents::derive(tp);
            let alpha: Vec<Rat> =
                (1..=e.k).map(|j| Rat::one() - e.gamma[j] - e.delta[j]).collect();
            assert!(alpha.windows(2).all(|p| p[0] == p[1]), "α varies for T′={tp}");
            let ratio = (tp + Rat::one()) / tp;
            let nu: Vec<Rat> = (1..=e.k).map(|i| e.delta[i - 1] + ratio * e.gamma[i]).collect();
            assert!(nu.windows(2).all(|p| p[0] == p[1]), "ν varies for T′={tp}");
            assert_eq!(nu[0], Rat::one() + Rat::one() / (Rat::from_integer(2) * tp));
        }
    }

    #[test]
    fn exponent_bound_under_tau_cap() {
        // 1/(2T′) + B/(T′+1) + 2τ ≤ 1/(T′+1/6) at τ = τ_cap.
        for denom in [(1, 1), (7, 6), (4, 3), (3, 2), (2, 1)] {
            let tp = Rat::new(denom.0, denom.1);
            let e = Exponents::derive(tp);
            let lhs = Rat::one() / (Rat::from_integer(2) * tp)
                + e.b / (tp + Rat::one())
                + Rat::from_integer(2) * e.tau_cap;
            let rhs = Rat::one() / (tp + Rat::new(1, 6));
            assert!(lhs <= rhs, "exponent bound fails for T′={tp}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn quality_sequence_examples() {
        assert_eq!(quality_sequence(0, 1), vec![0, 21]);
        assert_eq!(quality_sequence(0, 4), vec![0, 21, 84, 273, 840]);
        assert_eq!(quality_sequence(1, 1), vec![1, 24]);
    }

    #[test]
    fn rounded_schedule_invariants() {
        let e = Exponents::derive(Rat::one());
        for log2n in 10..=20u32 {
            let n = 1u64 << log2n;
            let s = LevelParams::rounded(&e, n, 0, None).unwrap();
            assert_eq!(s.width(1), 1 << (log2n / 2), "w_1 = ⌊√n⌋_pwr");
            assert_eq!(s.d[0], s.width(1), "d_0 = w_1");
            assert_eq!(*s.d.last().unwrap(), 1);
            assert_eq!(*s.w.last().unwrap(), n);
            assert!(s.w.windows(2).all(|p| p[0] < p[1]));
            assert!(s.d.windows(2).all(|p| p[0] >= p[1]));
            // Eq. (1)/(2) for every admissible θ.
            let zl = s.zeta * Rat::from_integer(log2n as i64);
            let te_max = zl.floor().to_integer().max(0) as u32;
            for te in 0..=te_max {
                assert!(s.admits(te), "Eq. (1)/(2) fail at n=2^{log2n}, θ=2^-{te}");
            }
        }
    }

    #[test]
    fn theoretical_schedule_needs_astronomical_n() {
        assert!(matches!(
            LevelParams::derive_schedule(Rat::one(), 1 << 20, 0, None),
            Err(ScheduleError::NoAdmissibleTheta { .. })
        ));
    }

    #[test]
    fn desk_schedule_shape() {
        let s = LevelParams::desk(1 << 10, 1, 0, QualityMode::Theoretical, 2).unwrap();
        assert_eq!(s.k, 2);
        assert_eq!(s.w, vec![32, 128, 1024]);
        assert_eq!(s.d[0], 32);
        assert_eq!(*s.d.last().unwrap(), 1);
        assert!(s.admits(1));
        assert_eq!(s.q, vec![0, 21, 84]);
        assert_eq!(s.quality_exp(), 90);
    }

    #[test]
    fn desk_schedule_practical_mode() {
        let s = LevelParams::desk(1 << 10, 1, 0, QualityMode::Practical(2), 2).unwrap();
        assert_eq!(s.q, vec![0, 2, 2]);
        assert_eq!(s.quality_exp(), 2);
        assert!(!s.trivial(1, 3));
        assert!(s.trivial(1, 2));
    }

    #[test]
    fn desk_schedule_rejects_tiny_n() {
        assert!(LevelParams::desk(8, 1, 0, QualityMode::Theoretical, 2).is_none());
        assert!(LevelParams::desk(1 << 10, 20, 0, QualityMode::Theoretical, 2).is_none());
    }
}
