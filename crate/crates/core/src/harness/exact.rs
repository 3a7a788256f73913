//! Exact KL risk distributions for small instances, by full enumeration.
//!
//! The enumeration unit follows what the estimator looks at:
//! count compositions for MLE and add-γ, pairs of half-sample compositions
//! for the adaptive add-γᵢ estimator, and every ordered sequence for the
//! online-to-batch estimator.

use serde::Serialize;

use crate::dist::{ProbVec, SampleSeq};
use crate::divergence::{kl_slices, ExtReal};
use crate::estimators::{check_delta, EstimatorSpec, Sufficiency};
use crate::harness::trials::Metric;
use crate::{Error, Result};

/// Largest number of outcomes [`exact_risk_enumeration`] will visit.
pub const MAX_OUTCOMES: f64 = 1e6;

/// The law of KL(p*‖p̂) over all samples of size `n`.
#[derive(Debug, Clone, Serialize)]
pub struct ExactRisk {
    /// Distinct KL values in increasing order with their probabilities.
    pub distribution: Vec<(ExtReal, f64)>,
    /// Smallest value whose CDF reaches `1 − δ`.
    pub quantile: ExtReal,
    pub delta: f64,
    pub outcomes: usize,
}

impl ExactRisk {
    /// `inf {v : P(KL <= v) >= level}`.
    pub fn quantile_at(&self, level: f64) -> ExtReal {
        let mut cum = 0.0;
        for &(v, p) in &self.distribution {
            cum += p;
            if cum + 1e-12 >= level {
                return v;
            }
        }
        self.distribution
            .last()
            .map(|&(v, _)| v)
            .unwrap_or(ExtReal::ZERO)
    }

    /// `P(KL <= v)`.
    pub fn cdf(&self, v: ExtReal) -> f64 {
        self.distribution
            .iter()
            .take_while(|(x, _)| *x <= v)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn prob_infinite(&self) -> f64 {
        self.distribution
            .iter()
            .filter(|(x, _)| x.is_infinite())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn mean(&self) -> ExtReal {
        self.distribution
            .iter()
            .fold(ExtReal::ZERO, |acc, &(v, p)| acc + v.scale(p))
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for j in 1..=n {
        acc += (j as f64).ln();
        out.push(acc);
    }
    out
}

/// `C(n + K − 1, K − 1)`, as a float to avoid overflow.
fn composition_count(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for j in 1..k {
        c *= (n + j) as f64 / j as f64;
    }
    c
}

/// Calls `f` on every vector of `k` non-negative integers summing to `n`.
fn for_each_composition(n: u64, k: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(rest: u64, pos: usize, buf: &mut [u64], f: &mut impl FnMut(&[u64])) {
        if pos + 1 == buf.len() {
            buf[pos] = rest;
            f(buf);
            return;
        }
        for c in 0..=rest {
            buf[pos] = c;
            rec(rest - c, pos + 1, buf, f);
        }
    }
    let mut buf = vec![0u64; k];
    rec(n, 0, &mut buf, f);
}

/// Multinomial probability of `counts` under `p`, or 0 if a count hits a zero-mass category.
fn multinomial_prob(counts: &[u64], ln_p: &[f64], ln_fact: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut lp = ln_fact[n as usize];
    for (&c, &l) in counts.iter().zip(ln_p) {
        if c == 0 {
            continue;
        }
        if l == f64::NEG_INFINITY {
            return 0.0;
        }
        lp += c as f64 * l - ln_fact[c as usize];
    }
    lp.exp()
}

/// Exact distribution and (1−δ)-quantile of the KL risk of `spec` at `p_star`.
pub fn exact_risk_enumeration(spec: &EstimatorSpec, p_star: &ProbVec, n: usize, delta: f64) -> Result<ExactRisk> {
    exact_risk_enumeration_with(spec, p_star, n, delta, Metric::Forward)
}

pub fn exact_risk_enumeration_with(
    spec: &EstimatorSpec,
    p_star: &ProbVec,
    n: usize,
    delta: f64,
    metric: Metric,
) -> Result<ExactRisk> {
    check_delta(delta)?;
    spec.validate()?;
    let min_n = if spec.sufficiency() == Sufficiency::Sequence { 2 } else { 1 };
    if n < min_n {
        return Err(Error::SampleSizeTooSmall { n, min: min_n });
    }
    let k = p_star.k();
    let m = n / 2;
    let size = match spec.sufficiency() {
        Sufficiency::Counts => composition_count(n, k),
        Sufficiency::HalfCounts => composition_count(m, k) * composition_count(n - m, k),
        Sufficiency::Sequence => (k as f64).powi(n as i32),
    };
    if size > MAX_OUTCOMES {
        return Err(Error::InstanceTooLarge {
            outcomes: size,
            limit: MAX_OUTCOMES,
        });
    }

    let ps = p_star.as_slice();
    let ln_p: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let ln_fact = ln_factorials(n);
    let risk = |est: &ProbVec| match metric {
        Metric::Forward => kl_slices(ps, est.as_slice()),
        Metric::Reverse => kl_slices(est.as_slice(), ps),
    };

    let mut outcomes: Vec<(ExtReal, f64)> = Vec::new();
    let mut visited = 0usize;
    let mut failure: Option<Error> = None;
    match spec.sufficiency() {
        Sufficiency::Counts => {
            let zeros = vec![0u64; k];
            for_each_composition(n as u64, k, &mut |c| {
                visited += 1;
                let prob = multinomial_prob(c, &ln_p, &ln_fact);
                if prob == 0.0 || failure.is_some() {
                    return;
                }
                match spec.fit_halves(&zeros, c) {
                    Ok(est) => outcomes.push((risk(&est), prob)),
                    Err(e) => failure = Some(e),
                }
            });
        }
        Sufficiency::HalfCounts => {
            let mut seconds: Vec<(Vec<u64>, f64)> = Vec::new();
            for_each_composition((n - m) as u64, k, &mut |c| {
                seconds.push((c.to_vec(), multinomial_prob(c, &ln_p, &ln_fact)));
            });
            for_each_composition(m as u64, k, &mut |first| {
                let p_first = multinomial_prob(first, &ln_p, &ln_fact);
                for (second, p_second) in &seconds {
                    visited += 1;
                    let prob = p_first * p_second;
                    if prob == 0.0 || failure.is_some() {
                        continue;
                    }
                    match spec.fit_halves(first, second) {
                        Ok(est) => outcomes.push((risk(&est), prob)),
                        Err(e) => failure = Some(e),
                    }
                }
            });
        }
        Sufficiency::Sequence => {
            let total = size as usize;
            let mut items = vec![0u32; n];
            for code in 0..total {
                visited += 1;
                let mut rest = code;
                let mut lp = 0.0;
                for slot in items.iter_mut() {
                    let i = rest % k;
                    rest /= k;
                    *slot = i as u32;
                    lp += ln_p[i];
                }
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let seq = SampleSeq::from_indices(k, items.clone());
                let est = spec.fit(&seq)?;
                outcomes.push((risk(&est), lp.exp()));
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }

    outcomes.sort_by_key(|a| a.0);
    let mut distribution: Vec<(ExtReal, f64)> = Vec::new();
    for (v, p) in outcomes {
        match distribution.last_mut() {
            Some((last, acc)) if *last == v => *acc += p,
            _ => distribution.push((v, p)),
        }
    }
    let mut risk = ExactRisk {
        distribution,
        quantile: ExtReal::ZERO,
        delta,
        outcomes: visited,
    };
    risk.quantile = risk.quantile_at(1.0 - delta);
    Ok(risk)
}
