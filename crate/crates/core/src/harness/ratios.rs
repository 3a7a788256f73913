//! Empirical check of the density-ratio caps that hold with probability
//! `1 − δ` for the add-γᵢ iterates.
//!
//! For each category `i` and each `t ∈ [m+1, n+1]`, with `m = ⌊n/2⌋`,
//! `ξ = 1 + Σγ/n` and
//! `ζᵢ = 3·(1 + 2(3n_{i,m} + 27 ln(4K/δ)) / max{γᵢ, n_{i,m}/2 − 9 ln(4K/δ)})`:
//!
//! | ratio                                 | cap        |
//! |---------------------------------------|------------|
//! | `p*(i)/p_t(i)`                        | `ζᵢ·ξ`     |
//! | `p_t(i)/p⁺(i)`                        | `ζᵢ`       |
//! | `p⁺(i)/p_t(i)`                        | `1 + ζᵢ·ξ` |
//! | `p*(i)/p⁺(i)`                         | `ξ`        |
//! | `(n_{i,n} + γᵢ)/(n_{i,m} + γᵢ)`       | `6 + ζᵢ`   |

use serde::Serialize;

use crate::dist::{ProbVec, Sampler, SampleSeq, Seed};
use crate::estimators::{adaptive_gammas, check_delta, p_plus};
use crate::exec::{map_trials, Execution};
use crate::{Error, Result};

pub const RATIO_LABELS: [&str; 5] = [
    "pstar/p_t",
    "p_t/p_plus",
    "p_plus/p_t",
    "pstar/p_plus",
    "count_growth",
];

/// `a / b` with `0 / x = 0` for any `x`, and `+∞` for a positive numerator over 0.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Ratios and caps of a single sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTrial {
    /// Per category, the largest value of each ratio over `t`.
    pub observed: Vec<[f64; 5]>,
    /// Per category, the cap of each ratio.
    pub caps: Vec<[f64; 5]>,
    pub zeta: Vec<f64>,
    pub xi: f64,
    pub violated: bool,
}

/// Evaluates all five ratios for one sample.
pub fn ratio_check_trial(p_star: &ProbVec, seq: &SampleSeq, delta: f64) -> Result<RatioTrial> {
    check_delta(delta)?;
    let n = seq.len();
    if n < 4 {
        return Err(Error::SampleSizeTooSmall { n, min: 4 });
    }
    if seq.k() != p_star.k() {
        return Err(Error::DimensionMismatch {
            left: seq.k(),
            right: p_star.k(),
        });
    }
    let k = p_star.k();
    let m = n / 2;
    let first = seq.prefix_counts(m)?;
    let total = seq.counts();
    let profile = adaptive_gammas(&first, k, n as u64, delta)?;
    let plus = p_plus(p_star, &profile, n as u64)?;
    let gammas = profile.gammas();
    let s = profile.total();
    let log_term = (4.0 * k as f64 / delta).ln();
    let xi = 1.0 + s / n as f64;
    let zeta: Vec<f64> = (0..k)
        .map(|i| {
            let c = first[i] as f64;
            let denom = f64::max(gammas[i], 0.5 * c - 9.0 * log_term);
            3.0 * (1.0 + ratio(2.0 * (3.0 * c + 27.0 * log_term), denom))
        })
        .collect();

    let ps = p_star.as_slice();
    let pp = plus.as_slice();
    let mut observed: Vec<[f64; 5]> = (0..k)
        .map(|i| {
            [
                0.0,
                0.0,
                0.0,
                ratio(ps[i], pp[i]),
                ratio(total[i] as f64 + gammas[i], first[i] as f64 + gammas[i]),
            ]
        })
        .collect();
    let mut counts = first.clone();
    let items = seq.labels().map(|c| c - 1).collect::<Vec<_>>();
    for t in (m + 1)..=(n + 1) {
        // counts holds n_{i,t-1}
        let denom = (t - 1) as f64 + s;
        for i in 0..k {
            let pt = (counts[i] as f64 + gammas[i]) / denom;
            let o = &mut observed[i];
            o[0] = o[0].max(ratio(ps[i], pt));
            o[1] = o[1].max(ratio(pt, pp[i]));
            o[2] = o[2].max(ratio(pp[i], pt));
        }
        if t <= n {
            counts[items[t - 1]] += 1;
        }
    }
    let caps: Vec<[f64; 5]> = zeta
        .iter()
        .map(|&z| [z * xi, z, 1.0 + z * xi, xi, 6.0 + z])
        .collect();
    let violated = observed
        .iter()
        .zip(&caps)
        .any(|(o, c)| o.iter().zip(c).any(|(x, cap)| x > cap));
    Ok(RatioTrial {
        observed,
        caps,
        zeta,
        xi,
        violated,
    })
}

/// Aggregate of [`ratio_check_trial`] over many seeded samples.
#[derive(Debug, Clone, Serialize)]
pub struct RatioDiagnostics {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Per category, the worst observed value of each ratio.
    pub worst_ratio: Vec<[f64; 5]>,
    /// Per category, the worst observed ratio divided by its cap in the same trial.
    pub worst_utilisation: Vec<[f64; 5]>,
    pub violations: u64,
    pub violation_fraction: f64,
}

impl RatioDiagnostics {
    /// `δ + 3·sqrt(δ/trials)`.
    pub fn allowed_fraction(&self) -> f64 {
        self.delta + 3.0 * (self.delta / self.trials as f64).sqrt()
    }
}

pub fn ratio_diagnostics(p_star: &ProbVec, n: usize, delta: f64, trials: u64, seed: u64) -> Result<RatioDiagnostics> {
    check_delta(delta)?;
    if n < 4 {
        return Err(Error::SampleSizeTooSmall { n, min: 4 });
    }
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let sampler = Sampler::new(p_star);
    let results = map_trials(Execution::default(), trials, |t| {
        let seq = sampler.sample(n, Seed::new(seed, t));
        ratio_check_trial(p_star, &seq, delta)
    });
    let k = p_star.k();
    let mut worst_ratio = vec![[0.0; 5]; k];
    let mut worst_utilisation = vec![[0.0; 5]; k];
    let mut violations = 0;
    for r in results {
        let r = r?;
        violations += r.violated as u64;
        for i in 0..k {
            for j in 0..5 {
                worst_ratio[i][j] = f64::max(worst_ratio[i][j], r.observed[i][j]);
                worst_utilisation[i][j] =
                    f64::max(worst_utilisation[i][j], ratio(r.observed[i][j], r.caps[i][j]));
            }
        }
    }
    Ok(RatioDiagnostics {
        k,
        n,
        delta,
        trials,
        seed,
        worst_ratio,
        worst_utilisation,
        violations,
        violation_fraction: violations as f64 / trials as f64,
    })
}
