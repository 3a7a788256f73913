//! Probability vectors on a finite alphabet, seeded i.i.d. sampling, and
//! prefix-count bookkeeping.
//!
//! Categories are 1-based at every public boundary (constructors taking
//! labels, file formats, reports) and 0-based in storage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Entries above this negative value are treated as rounding noise and clamped to 0.
pub const CLAMP_TOL: f64 = 1e-15;
/// Admissible deviation of the raw sum from 1 before renormalising.
pub const SUM_TOL: f64 = 1e-9;

/// A point of the probability simplex over `[K]`, `K >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVec {
    probs: Vec<f64>,
}

impl ProbVec {
    /// Validates raw input, clamping tiny negatives and renormalising near-valid sums.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidProbVec(format!(
                "alphabet size must be at least 2, got {}",
                raw.len()
            )));
        }
        let mut probs = raw;
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidProbVec(format!(
                    "entry {} is not finite",
                    i + 1
                )));
            }
            if *p < -CLAMP_TOL {
                return Err(Error::InvalidProbVec(format!(
                    "entry {} is negative ({p})",
                    i + 1
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbVec(format!("entries sum to {sum}")));
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    /// Wraps a vector already known to lie on the simplex.
    ///
    /// Estimator outputs go through here; they are normalised by construction.
    pub(crate) fn from_simplex(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        debug_assert!(probs.iter().all(|&p| p >= 0.0));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { probs }
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidProbVec(format!(
                "alphabet size must be at least 2, got {k}"
            )));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    /// All mass on `category` (1-based).
    pub fn point_mass(k: usize, category: usize) -> Result<Self> {
        if category == 0 || category > k {
            return Err(Error::CategoryOutOfRange { category, k });
        }
        let mut probs = vec![0.0; k];
        probs[category - 1] = 1.0;
        Self::new(probs)
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    /// Probability of `category` (1-based).
    pub fn prob(&self, category: usize) -> f64 {
        self.probs[category - 1]
    }

    /// Relabels categories: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            probs: perm.iter().map(|&j| self.probs[j]).collect(),
        }
    }
}

impl<'de> Deserialize<'de> for ProbVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        ProbVec::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Parses the distribution file format: a JSON array of reals, or one real per line.
pub fn parse_prob_vec(text: &str) -> Result<ProbVec> {
    let trimmed = text.trim();
    let raw: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{l:?}: {e}")))
            })
            .collect::<Result<_>>()?
    };
    ProbVec::new(raw)
}

/// Renders a distribution in the one-real-per-line file format.
pub fn write_prob_vec(p: &ProbVec) -> String {
    let mut out = String::new();
    for &x in p.as_slice() {
        // Shortest round-trip representation.
        out.push_str(&format!("{x:?}\n"));
    }
    out
}

/// An ordered sample `x_1..x_n` over `[K]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSeq {
    k: usize,
    items: Vec<u32>,
}

impl SampleSeq {
    /// Builds a sequence from 1-based category labels.
    pub fn from_labels(k: usize, labels: &[usize]) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidProbVec(format!(
                "alphabet size must be at least 2, got {k}"
            )));
        }
        let items = labels
            .iter()
            .map(|&c| {
                if c == 0 || c > k {
                    Err(Error::CategoryOutOfRange { category: c, k })
                } else {
                    Ok((c - 1) as u32)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { k, items })
    }

    pub(crate) fn from_indices(k: usize, items: Vec<u32>) -> Self {
        debug_assert!(items.iter().all(|&i| (i as usize) < k));
        Self { k, items }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 1-based labels.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&i| i as usize + 1)
    }

    /// 0-based indices, the storage order.
    pub(crate) fn indices(&self) -> &[u32] {
        &self.items
    }

    /// Counts `n_{i,t}` over the first `t` items.
    pub fn prefix_counts(&self, t: usize) -> Result<Vec<u64>> {
        if t > self.items.len() {
            return Err(Error::PrefixOutOfRange {
                t,
                n: self.items.len(),
            });
        }
        let mut counts = vec![0u64; self.k];
        for &i in &self.items[..t] {
            counts[i as usize] += 1;
        }
        Ok(counts)
    }

    /// Counts over the whole sequence.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k];
        for &i in &self.items {
            counts[i as usize] += 1;
        }
        counts
    }
}

/// Parses a data file with one 1-based category label per line.
///
/// When `k` is `None` the alphabet size is the largest label seen.
pub fn parse_labels(text: &str, k: Option<usize>) -> Result<SampleSeq> {
    let labels: Vec<usize> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<usize>()
                .map_err(|e| Error::Parse(format!("{l:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let k = match k {
        Some(k) => k,
        None => labels.iter().copied().max().unwrap_or(0).max(2),
    };
    SampleSeq::from_labels(k, &labels)
}

/// Reproducible random stream identifier: a master seed and a trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// A ChaCha8 generator keyed by `master` and positioned on stream `stream`.
    ///
    /// ChaCha is counter based, so distinct streams are independent and can be
    /// generated in any order.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Inverse-CDF sampler over a fixed [`ProbVec`].
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
    last_support: u32,
}

impl Sampler {
    pub fn new(p: &ProbVec) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .as_slice()
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        let last_support = p
            .as_slice()
            .iter()
            .rposition(|&x| x > 0.0)
            .expect("a probability vector has positive mass somewhere") as u32;
        Self { cdf, last_support }
    }

    pub fn k(&self) -> usize {
        self.cdf.len()
    }

    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        // first index with cdf > u; zero-mass categories have cdf equal to
        // their predecessor and are never selected
        let idx = self.cdf.partition_point(|&c| c <= u) as u32;
        idx.min(self.last_support)
    }

    pub fn sample(&self, n: usize, seed: Seed) -> SampleSeq {
        let mut rng = seed.rng();
        let items = (0..n).map(|_| self.draw(&mut rng)).collect();
        SampleSeq::from_indices(self.k(), items)
    }
}

/// Draws `n` i.i.d. items from `p`, deterministically in `seed`.
pub fn sample_iid(p: &ProbVec, n: usize, seed: Seed) -> Result<SampleSeq> {
    if n == 0 {
        return Err(Error::SampleSizeTooSmall { n, min: 1 });
    }
    Ok(Sampler::new(p).sample(n, seed))
}
