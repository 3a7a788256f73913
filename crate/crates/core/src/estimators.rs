//! Estimators of a distribution on `[K]` from counts or from an ordered sample.
//!
//! - [`mle`]: empirical frequencies.
//! - [`add_constant`]: add-γ smoothing (γ = 1 Laplace, γ = ½ Krichevsky–Trofimov).
//! - [`adaptive_gammas`] + [`add_gamma_vec`]: per-category biases chosen from
//!   the first half of the sample.
//! - [`otb_estimate`]: the average of the add-γᵢ iterates over the second half
//!   of the sample (online-to-batch conversion with suffix averaging).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{ProbVec, SampleSeq};
use crate::{Error, Result};

/// Multiplier of the `ln(4K/δ)` count threshold below which a category is "small".
pub const SMALL_COUNT_FACTOR: f64 = 32.0;

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::DeltaOutOfRange(delta))
    }
}

fn check_counts(counts: &[u64], n: u64) -> Result<()> {
    let got: u64 = counts.iter().sum();
    if got != n {
        return Err(Error::CountSumMismatch { expected: n, got });
    }
    if counts.len() < 2 {
        return Err(Error::InvalidProbVec(format!(
            "alphabet size must be at least 2, got {}",
            counts.len()
        )));
    }
    Ok(())
}

/// Empirical frequencies `counts(i) / n`.
pub fn mle(counts: &[u64], n: u64) -> Result<ProbVec> {
    check_counts(counts, n)?;
    if n == 0 {
        return Err(Error::SampleSizeTooSmall { n: 0, min: 1 });
    }
    let nf = n as f64;
    Ok(ProbVec::from_simplex(
        counts.iter().map(|&c| c as f64 / nf).collect(),
    ))
}

/// Add-γ estimator `(counts(i) + γ) / (n + γK)`.
///
/// With `n = 0` and `γ > 0` this is the uniform distribution.
pub fn add_constant(counts: &[u64], n: u64, gamma: f64) -> Result<ProbVec> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    check_counts(counts, n)?;
    if gamma == 0.0 {
        return mle(counts, n);
    }
    let denom = n as f64 + gamma * counts.len() as f64;
    Ok(ProbVec::from_simplex(
        counts.iter().map(|&c| (c as f64 + gamma) / denom).collect(),
    ))
}

/// Per-category biases γᵢ derived from first-half counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaProfile {
    gammas: Vec<f64>,
    /// 0-based members of the small-count set.
    small_set: Vec<usize>,
    j: usize,
    threshold: f64,
    delta: f64,
}

impl GammaProfile {
    /// A profile with explicit biases, outside the adaptive rule.
    ///
    /// The small set is `{i : γᵢ > 0}`; `threshold` is NaN.
    pub fn from_gammas(gammas: Vec<f64>) -> Result<Self> {
        if let Some(&g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::InvalidGamma(g));
        }
        let small_set: Vec<usize> = (0..gammas.len()).filter(|&i| gammas[i] > 0.0).collect();
        Ok(Self {
            j: small_set.len().max(3),
            gammas,
            small_set,
            threshold: f64::NAN,
            delta: f64::NAN,
        })
    }

    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Small-count categories, 1-based.
    pub fn small_set(&self) -> Vec<usize> {
        self.small_set.iter().map(|i| i + 1).collect()
    }

    pub fn small_set_len(&self) -> usize {
        self.small_set.len()
    }

    /// `max{3, |small set|}`.
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Σγᵢ.
    pub fn total(&self) -> f64 {
        self.gammas.iter().sum()
    }
}

/// Chooses γᵢ from the counts of the first `⌊n/2⌋` items.
///
/// A category is small when its first-half count is below `32 ln(4K/δ)`; small
/// categories get `γᵢ = max{1, ln(K/δ)/J}` with `J = max{3, #small}`, the
/// others get 0.
pub fn adaptive_gammas(first_half_counts: &[u64], k: usize, n: u64, delta: f64) -> Result<GammaProfile> {
    check_delta(delta)?;
    if first_half_counts.len() != k {
        return Err(Error::DimensionMismatch {
            left: first_half_counts.len(),
            right: k,
        });
    }
    check_counts(first_half_counts, n / 2)?;
    let kf = k as f64;
    let threshold = SMALL_COUNT_FACTOR * (4.0 * kf / delta).ln();
    let small_set: Vec<usize> = (0..k)
        .filter(|&i| (first_half_counts[i] as f64) < threshold)
        .collect();
    let j = small_set.len().max(3);
    let bias = f64::max(1.0, (kf / delta).ln() / j as f64);
    let mut gammas = vec![0.0; k];
    for &i in &small_set {
        gammas[i] = bias;
    }
    Ok(GammaProfile {
        gammas,
        small_set,
        j,
        threshold,
        delta,
    })
}

/// Add-γᵢ estimator `(counts(i) + γᵢ) / (n + Σγᵢ)`.
pub fn add_gamma_vec(counts: &[u64], n: u64, profile: &GammaProfile) -> Result<ProbVec> {
    if counts.len() != profile.k() {
        return Err(Error::DimensionMismatch {
            left: counts.len(),
            right: profile.k(),
        });
    }
    // a constant profile is exactly the add-γ estimator, bit for bit
    if let Some(&g) = profile.gammas().first() {
        if profile.gammas().iter().all(|&x| x == g) {
            return add_constant(counts, n, g);
        }
    }
    check_counts(counts, n)?;
    let denom = n as f64 + profile.total();
    if denom == 0.0 {
        return Err(Error::SampleSizeTooSmall { n: 0, min: 1 });
    }
    Ok(ProbVec::from_simplex(
        counts
            .iter()
            .zip(profile.gammas())
            .map(|(&c, &g)| (c as f64 + g) / denom)
            .collect(),
    ))
}

/// How [`otb_estimate_with`] sums the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OtbPath {
    /// O(n + K) via per-category suffix harmonic sums.
    #[default]
    Fast,
    /// O(nK) direct averaging of every iterate; kept as a verification oracle.
    Naive,
}

/// Online-to-batch estimate with suffix averaging.
///
/// With `m = ⌊n/2⌋` and γᵢ from the first `m` items, returns
/// `(1/(n−m)) Σ_{t=m+1}^{n} p_t` where `p_t(i) = (n_{i,t−1} + γᵢ)/(t − 1 + Σγ)`.
pub fn otb_estimate(seq: &SampleSeq, delta: f64) -> Result<ProbVec> {
    otb_estimate_with(seq, delta, OtbPath::Fast)
}

pub fn otb_estimate_with(seq: &SampleSeq, delta: f64, path: OtbPath) -> Result<ProbVec> {
    check_delta(delta)?;
    let n = seq.len();
    if n < 2 {
        return Err(Error::SampleSizeTooSmall { n, min: 2 });
    }
    let m = n / 2;
    let first = seq.prefix_counts(m)?;
    let profile = adaptive_gammas(&first, seq.k(), n as u64, delta)?;
    Ok(match path {
        OtbPath::Fast => otb_fast(seq, &first, &profile),
        OtbPath::Naive => otb_naive(seq, &first, &profile),
    })
}

fn otb_fast(seq: &SampleSeq, first: &[u64], profile: &GammaProfile) -> ProbVec {
    let n = seq.len();
    let m = n / 2;
    let s = profile.total();
    // harmonic[u - m] = Σ_{v=u}^{n-1} 1/(v + S) for u in m..=n
    let mut harmonic = vec![0.0; n - m + 1];
    for u in (m..n).rev() {
        harmonic[u - m] = harmonic[u - m + 1] + 1.0 / (u as f64 + s);
    }
    let h_m = harmonic[0];
    let mut acc: Vec<f64> = first
        .iter()
        .zip(profile.gammas())
        .map(|(&c, &g)| (c as f64 + g) * h_m)
        .collect();
    // an occurrence at (1-based) time s > m raises n_{i,u} for every u >= s
    for (pos, &i) in seq.indices().iter().enumerate().skip(m) {
        acc[i as usize] += harmonic[pos + 1 - m];
    }
    let scale = 1.0 / (n - m) as f64;
    ProbVec::from_simplex(acc.into_iter().map(|a| a * scale).collect())
}

fn otb_naive(seq: &SampleSeq, first: &[u64], profile: &GammaProfile) -> ProbVec {
    let n = seq.len();
    let m = n / 2;
    let s = profile.total();
    let k = seq.k();
    let mut counts = first.to_vec();
    let mut acc = vec![0.0; k];
    for t in (m + 1)..=n {
        // counts holds n_{i,t-1}
        let denom = (t - 1) as f64 + s;
        for i in 0..k {
            acc[i] += (counts[i] as f64 + profile.gammas()[i]) / denom;
        }
        counts[seq.indices()[t - 1] as usize] += 1;
    }
    let scale = 1.0 / (n - m) as f64;
    ProbVec::from_simplex(acc.into_iter().map(|a| a * scale).collect())
}

/// Population analogue of the small set: `{i : n·p*(i) < 32 ln(K/δ)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueSmallSet {
    /// 1-based members.
    pub tilde_set: Vec<usize>,
    pub tilde_j: usize,
    pub threshold: f64,
}

pub fn true_small_set(p_star: &ProbVec, n: u64, delta: f64) -> Result<TrueSmallSet> {
    check_delta(delta)?;
    let threshold = SMALL_COUNT_FACTOR * (p_star.k() as f64 / delta).ln();
    let nf = n as f64;
    let tilde_set: Vec<usize> = p_star
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &p)| nf * p < threshold)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(TrueSmallSet {
        tilde_j: tilde_set.len().max(3),
        tilde_set,
        threshold,
    })
}

/// Bias-shifted target `p⁺(i) = (p*(i)·n + γᵢ)/(n + Σγ)`.
pub fn p_plus(p_star: &ProbVec, profile: &GammaProfile, n: u64) -> Result<ProbVec> {
    if p_star.k() != profile.k() {
        return Err(Error::DimensionMismatch {
            left: p_star.k(),
            right: profile.k(),
        });
    }
    let nf = n as f64;
    let denom = nf + profile.total();
    if denom == 0.0 {
        return Err(Error::SampleSizeTooSmall { n: 0, min: 1 });
    }
    Ok(ProbVec::from_simplex(
        p_star
            .as_slice()
            .iter()
            .zip(profile.gammas())
            .map(|(&p, &g)| (p * nf + g) / denom)
            .collect(),
    ))
}

/// Which estimator to fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Mle,
    AddConstant(f64),
    AddAdaptive { delta: f64 },
    Otb { delta: f64 },
}

/// What an estimator needs to see of the sample, which also fixes how it
/// can be enumerated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sufficiency {
    /// Total counts only.
    Counts,
    /// First-half counts and second-half counts separately.
    HalfCounts,
    /// The full ordered sequence.
    Sequence,
}

impl EstimatorSpec {
    pub const LAPLACE: EstimatorSpec = EstimatorSpec::AddConstant(1.0);
    pub const KT: EstimatorSpec = EstimatorSpec::AddConstant(0.5);

    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorSpec::Mle => Ok(()),
            EstimatorSpec::AddConstant(g) if g.is_finite() && g >= 0.0 => Ok(()),
            EstimatorSpec::AddConstant(g) => Err(Error::InvalidGamma(g)),
            EstimatorSpec::AddAdaptive { delta } | EstimatorSpec::Otb { delta } => {
                check_delta(delta)
            }
        }
    }

    pub fn sufficiency(&self) -> Sufficiency {
        match self {
            EstimatorSpec::Mle | EstimatorSpec::AddConstant(_) => Sufficiency::Counts,
            EstimatorSpec::AddAdaptive { .. } => Sufficiency::HalfCounts,
            EstimatorSpec::Otb { .. } => Sufficiency::Sequence,
        }
    }

    /// Fits the estimator to an ordered sample.
    pub fn fit(&self, seq: &SampleSeq) -> Result<ProbVec> {
        let n = seq.len() as u64;
        match *self {
            EstimatorSpec::Mle => mle(&seq.counts(), n),
            EstimatorSpec::AddConstant(g) => add_constant(&seq.counts(), n, g),
            EstimatorSpec::AddAdaptive { delta } => {
                let first = seq.prefix_counts(seq.len() / 2)?;
                let profile = adaptive_gammas(&first, seq.k(), n, delta)?;
                add_gamma_vec(&seq.counts(), n, &profile)
            }
            EstimatorSpec::Otb { delta } => otb_estimate(seq, delta),
        }
    }

    /// Fits a count-based estimator from first-half and second-half counts.
    ///
    /// Fails for [`EstimatorSpec::Otb`], which depends on the order of the
    /// second half.
    pub fn fit_halves(&self, first: &[u64], second: &[u64]) -> Result<ProbVec> {
        if first.len() != second.len() {
            return Err(Error::DimensionMismatch {
                left: first.len(),
                right: second.len(),
            });
        }
        let total: Vec<u64> = first.iter().zip(second).map(|(a, b)| a + b).collect();
        let n: u64 = total.iter().sum();
        match *self {
            EstimatorSpec::Mle => mle(&total, n),
            EstimatorSpec::AddConstant(g) => add_constant(&total, n, g),
            EstimatorSpec::AddAdaptive { delta } => {
                let m: u64 = first.iter().sum();
                if m != n / 2 {
                    return Err(Error::CountSumMismatch {
                        expected: n / 2,
                        got: m,
                    });
                }
                let profile = adaptive_gammas(first, first.len(), n, delta)?;
                add_gamma_vec(&total, n, &profile)
            }
            EstimatorSpec::Otb { .. } => Err(Error::Config(
                "the online-to-batch estimator depends on sample order".into(),
            )),
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EstimatorSpec::Mle => f.write_str("mle"),
            EstimatorSpec::AddConstant(1.0) => f.write_str("laplace"),
            EstimatorSpec::AddConstant(0.5) => f.write_str("kt"),
            EstimatorSpec::AddConstant(g) => write!(f, "addgamma:{g}"),
            EstimatorSpec::AddAdaptive { delta } => write!(f, "adaptive:{delta}"),
            EstimatorSpec::Otb { delta } => write!(f, "otb:{delta}"),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    /// Parses `mle`, `laplace`, `kt`, `addgamma:G`, `adaptive:DELTA` or `otb:DELTA`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::Parse(format!("{s:?} needs a numeric argument")))?;
            a.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        };
        let spec = match (head, arg) {
            ("mle", None) => EstimatorSpec::Mle,
            ("laplace", None) => EstimatorSpec::LAPLACE,
            ("kt", None) => EstimatorSpec::KT,
            ("addgamma", a) => EstimatorSpec::AddConstant(num(a)?),
            ("adaptive", a) => EstimatorSpec::AddAdaptive { delta: num(a)? },
            ("otb", a) => EstimatorSpec::Otb { delta: num(a)? },
            _ => return Err(Error::Parse(format!("unknown estimator {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for EstimatorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
