//! Divergences between probability vectors, valued in `[0, +∞]`.
//!
//! Conventions: natural logarithms throughout; `0 · ln 0 = 0`; χ²(p‖q) puts
//! the second argument in the denominator and a `0/0` term contributes 0.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dist::ProbVec;
use crate::{Error, Result};

/// Absolute slack allowed in every inequality check.
pub const INEQ_TOL: f64 = 1e-12;

/// A non-negative real or `+∞`.
///
/// `+∞` is a distinct variant rather than an `f64` sentinel, so ordering and
/// addition are exact. It serialises as the string `"inf"`.
#[derive(Debug, Clone, Copy)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    /// The value as `f64`, mapping `+∞` to `f64::INFINITY`. For plotting and
    /// ratios only; comparisons go through `Ord`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, c: f64) -> ExtReal {
        debug_assert!(c >= 0.0);
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * c),
            ExtReal::Infinite if c == 0.0 => ExtReal::ZERO,
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.total_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Ordering::Less,
            (ExtReal::Infinite, ExtReal::Finite(_)) => Ordering::Greater,
            (ExtReal::Infinite, ExtReal::Infinite) => Ordering::Equal,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => f.write_str(&crate::format::sig(*x)),
            ExtReal::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(ExtReal::Finite(x)),
            Repr::Str(s) if s == "inf" => Ok(ExtReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

fn same_k(p: &ProbVec, q: &ProbVec) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::DimensionMismatch {
            left: p.k(),
            right: q.k(),
        });
    }
    Ok(())
}

/// KL(p‖q) = Σ_{p(i)>0} p(i) ln(p(i)/q(i)).
pub fn kl(p: &ProbVec, q: &ProbVec) -> Result<ExtReal> {
    same_k(p, q)?;
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> ExtReal {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return ExtReal::Infinite;
            }
            acc += a * (a / b).ln();
        }
    }
    // cancellation can leave a tiny negative residue near p = q
    ExtReal::Finite(acc.max(0.0))
}

/// χ²(p‖q) = Σ (p(i) − q(i))² / q(i).
pub fn chi2(p: &ProbVec, q: &ProbVec) -> Result<ExtReal> {
    same_k(p, q)?;
    let mut acc = 0.0;
    for (&a, &b) in p.as_slice().iter().zip(q.as_slice()) {
        let d = a - b;
        if d == 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Ok(ExtReal::Infinite);
        }
        acc += d * d / b;
    }
    Ok(ExtReal::Finite(acc))
}

/// Squared Hellinger distance Σ (√p(i) − √q(i))², in `[0, 2]`.
pub fn hellinger_sq(p: &ProbVec, q: &ProbVec) -> Result<ExtReal> {
    same_k(p, q)?;
    let h: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok(ExtReal::Finite(h.min(2.0)))
}

/// ℓ1 distance Σ |p(i) − q(i)|, in `[0, 2]`.
pub fn l1(p: &ProbVec, q: &ProbVec) -> Result<ExtReal> {
    same_k(p, q)?;
    let d: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(ExtReal::Finite(d.min(2.0)))
}

/// KL(p‖q) − ½ ℓ1(p, q)², non-negative by Pinsker's inequality.
///
/// Returned as `f64` because the gap may be a tiny negative rounding residue;
/// `f64::INFINITY` when KL(p‖q) is infinite.
pub fn pinsker_gap(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    let k = kl(p, q)?;
    let v = l1(p, q)?.to_f64();
    Ok(match k {
        ExtReal::Infinite => f64::INFINITY,
        ExtReal::Finite(k) => k - 0.5 * v * v,
    })
}

/// Maximum density ratio in either direction allowed by [`chain_report`].
pub const CHAIN_MAX_RATIO: f64 = 2.0;

/// The seven quantities of the divergence-equivalence chain, in order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    /// χ²(p‖q)/6, χ²(q‖p)/4, KL(p‖q), 5H²(p‖q)/2, 5KL(q‖p)/2, 5χ²(q‖p)/2, 5χ²(p‖q).
    pub values: [f64; 7],
    /// Whether `values` is non-decreasing within [`INEQ_TOL`].
    pub holds: bool,
}

impl ChainReport {
    /// Index `j` such that `values[j] > values[j + 1] + INEQ_TOL`, if any.
    pub fn first_violation(&self) -> Option<usize> {
        self.values
            .windows(2)
            .position(|w| w[0] > w[1] + INEQ_TOL)
    }
}

pub const CHAIN_LABELS: [&str; 7] = [
    "chi2(p||q)/6",
    "chi2(q||p)/4",
    "kl(p||q)",
    "5/2 hellinger2(p||q)",
    "5/2 kl(q||p)",
    "5/2 chi2(q||p)",
    "5 chi2(p||q)",
];

/// Evaluates the divergence-equivalence chain for a pair with bounded density ratio.
///
/// Requires every entry of both vectors positive and `1/2 <= p(i)/q(i) <= 2`.
pub fn chain_report(p: &ProbVec, q: &ProbVec) -> Result<ChainReport> {
    chain_report_with_ratio(p, q, CHAIN_MAX_RATIO)
}

/// [`chain_report`] with a caller-chosen bound on the density ratio.
pub fn chain_report_with_ratio(p: &ProbVec, q: &ProbVec, max_ratio: f64) -> Result<ChainReport> {
    same_k(p, q)?;
    for (i, (&a, &b)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::RatioPrecondition {
                index: i + 1,
                ratio: if b > 0.0 { a / b } else { f64::INFINITY },
            });
        }
        let r = a / b;
        if r > max_ratio || r < 1.0 / max_ratio {
            return Err(Error::RatioPrecondition {
                index: i + 1,
                ratio: if r >= 1.0 { r } else { 1.0 / r },
            });
        }
    }
    // all entries positive, so every divergence is finite
    let f = |x: ExtReal| x.to_f64();
    let chi_pq = f(chi2(p, q)?);
    let chi_qp = f(chi2(q, p)?);
    let values = [
        chi_pq / 6.0,
        chi_qp / 4.0,
        f(kl(p, q)?),
        2.5 * f(hellinger_sq(p, q)?),
        2.5 * f(kl(q, p)?),
        2.5 * chi_qp,
        5.0 * chi_pq,
    ];
    let holds = values.windows(2).all(|w| w[0] <= w[1] + INEQ_TOL);
    Ok(ChainReport { values, holds })
}

/// Slack of the generalised Yang–Barron inequality:
///
/// `(2 + ln V)·(Σ p ln(r/q) + Σ p q/r − 1) − Σ p (ln(r/q))²`,
///
/// non-negative whenever `r(i)/q(i) <= V` for all `i`.
pub fn yang_barron_gap(p: &ProbVec, q: &ProbVec, r: &ProbVec, v: f64) -> Result<f64> {
    same_k(p, q)?;
    same_k(p, r)?;
    let mut mean_log = 0.0;
    let mut mean_inv = 0.0;
    let mut mean_sq = 0.0;
    for (i, ((&pi, &qi), &ri)) in p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .zip(r.as_slice())
        .enumerate()
    {
        if qi <= 0.0 || ri <= 0.0 {
            return Err(Error::RatioPrecondition {
                index: i + 1,
                ratio: if qi > 0.0 { ri / qi } else { f64::INFINITY },
            });
        }
        let ratio = ri / qi;
        if ratio > v {
            return Err(Error::RatioPrecondition { index: i + 1, ratio });
        }
        let l = ratio.ln();
        mean_log += pi * l;
        mean_inv += pi / ratio;
        mean_sq += pi * l * l;
    }
    Ok((2.0 + v.ln()) * (mean_log + mean_inv - 1.0) - mean_sq)
}

/// The named measures accepted by the `divergence` CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Kl,
    ReverseKl,
    Chi2,
    ReverseChi2,
    Hellinger2,
    L1,
    Chain,
}

impl std::str::FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kl" => Measure::Kl,
            "rkl" => Measure::ReverseKl,
            "chi2" => Measure::Chi2,
            "rchi2" => Measure::ReverseChi2,
            "hellinger2" => Measure::Hellinger2,
            "l1" => Measure::L1,
            "chain" => Measure::Chain,
            other => return Err(Error::Parse(format!("unknown measure {other:?}"))),
        })
    }
}

/// Evaluates a scalar measure; `Chain` is handled by [`chain_report`].
pub fn measure(m: Measure, p: &ProbVec, q: &ProbVec) -> Result<ExtReal> {
    match m {
        Measure::Kl => kl(p, q),
        Measure::ReverseKl => kl(q, p),
        Measure::Chi2 => chi2(p, q),
        Measure::ReverseChi2 => chi2(q, p),
        Measure::Hellinger2 => hellinger_sq(p, q),
        Measure::L1 => l1(p, q),
        Measure::Chain => Err(Error::Config(
            "chain yields seven values; use chain_report".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(x: &[f64]) -> ProbVec {
        ProbVec::new(x.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let h = pv(&[0.5, 0.5]);
        assert_eq!(kl(&h, &h).unwrap(), ExtReal::ZERO);
        assert!(kl(&h, &pv(&[1.0, 0.0])).unwrap().is_infinite());
        let v = kl(&h, &pv(&[0.25, 0.75])).unwrap().to_f64();
        assert_abs_diff_eq!(v, 0.5 * (4.0f64 / 3.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.143841036225890, epsilon = 1e-12);
        // zero mass in p is skipped even where q vanishes
        assert_eq!(kl(&pv(&[1.0, 0.0]), &pv(&[1.0, 0.0])).unwrap(), ExtReal::ZERO);
    }

    #[test]
    fn chi2_examples() {
        let h = pv(&[0.5, 0.5]);
        assert_eq!(chi2(&h, &h).unwrap(), ExtReal::ZERO);
        let v = chi2(&h, &pv(&[0.25, 0.75])).unwrap().to_f64();
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        assert!(chi2(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap().is_infinite());
        // 0/0 contributes nothing
        assert_eq!(
            chi2(&pv(&[1.0, 0.0]), &pv(&[1.0, 0.0])).unwrap(),
            ExtReal::ZERO
        );
    }

    #[test]
    fn hellinger_examples() {
        let h = pv(&[0.5, 0.5]);
        assert_eq!(hellinger_sq(&h, &h).unwrap(), ExtReal::ZERO);
        assert_abs_diff_eq!(
            hellinger_sq(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap().to_f64(),
            2.0
        );
        // mpmath, 30 digits: (sqrt(.5)-sqrt(.25))^2 + (sqrt(.5)-sqrt(.75))^2
        assert_abs_diff_eq!(
            hellinger_sq(&h, &pv(&[0.25, 0.75])).unwrap().to_f64(),
            0.0681483474218634,
            epsilon = 1e-13
        );
    }

    #[test]
    fn l1_examples() {
        let h = pv(&[0.5, 0.5]);
        assert_eq!(l1(&h, &h).unwrap(), ExtReal::ZERO);
        assert_abs_diff_eq!(l1(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap().to_f64(), 2.0);
        assert_abs_diff_eq!(l1(&h, &pv(&[0.25, 0.75])).unwrap().to_f64(), 0.5);
    }

    #[test]
    fn pinsker_examples() {
        let h = pv(&[0.5, 0.5]);
        assert_eq!(pinsker_gap(&h, &h).unwrap(), 0.0);
        assert_abs_diff_eq!(
            pinsker_gap(&h, &pv(&[0.25, 0.75])).unwrap(),
            0.018841036225890,
            epsilon = 1e-12
        );
        assert_eq!(pinsker_gap(&h, &pv(&[1.0, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn dimension_mismatch() {
        let a = pv(&[0.5, 0.5]);
        let b = ProbVec::uniform(3).unwrap();
        assert!(matches!(kl(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(chi2(&a, &b).is_err());
        assert!(hellinger_sq(&a, &b).is_err());
        assert!(l1(&a, &b).is_err());
        assert!(chain_report(&a, &b).is_err());
    }

    #[test]
    fn chain_examples() {
        let h = pv(&[0.5, 0.5]);
        let r = chain_report(&h, &h).unwrap();
        assert!(r.holds);
        assert!(r.values.iter().all(|&v| v == 0.0));

        // independent evaluation of the seven terms
        let (p, q): ([f64; 2], [f64; 2]) = ([0.6, 0.4], [0.4, 0.6]);
        let chi_pq: f64 = (0..2).map(|i| (p[i] - q[i]).powi(2) / q[i]).sum();
        let chi_qp: f64 = (0..2).map(|i| (p[i] - q[i]).powi(2) / p[i]).sum();
        let kl_pq: f64 = (0..2).map(|i| p[i] * (p[i] / q[i]).ln()).sum();
        let kl_qp: f64 = (0..2).map(|i| q[i] * (q[i] / p[i]).ln()).sum();
        let h2: f64 = (0..2).map(|i| (p[i].sqrt() - q[i].sqrt()).powi(2)).sum();
        let expected = [
            chi_pq / 6.0,
            chi_qp / 4.0,
            kl_pq,
            2.5 * h2,
            2.5 * kl_qp,
            2.5 * chi_qp,
            5.0 * chi_pq,
        ];
        assert!(expected.windows(2).all(|w| w[0] <= w[1]));
        let r = chain_report(&pv(&p), &pv(&q)).unwrap();
        assert!(r.holds);
        for (a, b) in r.values.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }

        match chain_report(&pv(&[0.9, 0.1]), &pv(&[0.3, 0.7])) {
            Err(Error::RatioPrecondition { index, ratio }) => {
                assert_eq!(index, 1);
                assert_abs_diff_eq!(ratio, 3.0, epsilon = 1e-12);
            }
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn chain_first_link_fails_near_ratio_two() {
        // p = 2q on a small atom satisfies the ratio-2 precondition, yet
        // χ²(p‖q)/6 ≈ a/6 exceeds χ²(q‖p)/4 ≈ a/8.
        let a = 0.01;
        let p = pv(&[2.0 * a, 1.0 - 2.0 * a]);
        let q = pv(&[a, 1.0 - a]);
        let r = chain_report(&p, &q).unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_violation(), Some(0));
        // inside ratio 3/2 the same construction satisfies the chain
        let p = pv(&[1.5 * a, 1.0 - 1.5 * a]);
        assert!(chain_report_with_ratio(&p, &q, 1.5).unwrap().holds);
    }

    #[test]
    fn yang_barron_examples() {
        let u = ProbVec::uniform(3).unwrap();
        assert_eq!(yang_barron_gap(&u, &u, &u, 1.0).unwrap(), 0.0);

        let q = pv(&[0.5, 0.5]);
        let r = pv(&[0.75, 0.25]);
        let g = yang_barron_gap(&q, &q, &r, 1.5).unwrap();
        // mpmath, 30 digits
        assert_abs_diff_eq!(g, 0.133389625041536, epsilon = 1e-12);
        assert!(g >= -INEQ_TOL);

        assert!(matches!(
            yang_barron_gap(&q, &q, &r, 1.2),
            Err(Error::RatioPrecondition { index: 1, .. })
        ));
    }

    #[test]
    fn ext_real_order_and_add() {
        let a = ExtReal::Finite(1.0);
        assert!(a < ExtReal::Infinite);
        assert_eq!(ExtReal::Infinite, ExtReal::Infinite);
        assert!((a + ExtReal::Infinite).is_infinite());
        assert_eq!(a + a, ExtReal::Finite(2.0));
        assert_eq!(ExtReal::Infinite.to_string(), "inf");
        assert_eq!(serde_json::to_string(&ExtReal::Infinite).unwrap(), "\"inf\"");
        let back: ExtReal = serde_json::from_str("\"inf\"").unwrap();
        assert!(back.is_infinite());
        let back: ExtReal = serde_json::from_str("0.25").unwrap();
        assert_eq!(back, ExtReal::Finite(0.25));
    }

    #[test]
    fn measure_parse() {
        assert_eq!("rkl".parse::<Measure>().unwrap(), Measure::ReverseKl);
        assert!("tv".parse::<Measure>().is_err());
    }
}
