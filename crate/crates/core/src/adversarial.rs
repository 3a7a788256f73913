//! Lower-bound instances.
//!
//! Two constructions put mass `α/n`, `α = (2/3)·ln(1/δ)`, on a rare category
//! so that with probability above δ the sample never shows it:
//!
//! - the estimator-dependent attack probes what an estimator outputs on an
//!   all-`K` sample and hides the rare mass where that output is smallest;
//! - the hard family `P_2..P_K` places the rare mass on each category `j` in
//!   turn, with the common atom on category 1.

use serde::Serialize;

use crate::dist::{ProbVec, SampleSeq};
use crate::divergence::ExtReal;
use crate::estimators::{check_delta, EstimatorSpec};
use crate::{Error, Result};

/// `α = (2/3)·ln(1/δ)`.
pub fn attack_alpha(delta: f64) -> f64 {
    2.0 / 3.0 * (1.0 / delta).ln()
}

/// Output of `spec` on the sample consisting of `n` copies of category `K`.
pub fn probe_zero_counts(spec: &EstimatorSpec, k: usize, n: usize) -> Result<ProbVec> {
    if n == 0 {
        return Err(Error::SampleSizeTooSmall { n, min: 1 });
    }
    let seq = SampleSeq::from_labels(k, &vec![k; n])?;
    spec.fit(&seq)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdversarialInstance {
    pub p_star: ProbVec,
    pub alpha: f64,
    /// 1-based category in `[K−1]` carrying mass `α/n`.
    pub attacked_index: usize,
    /// Lower bound on KL(p*‖p̂) holding with probability above δ.
    pub bound: ExtReal,
    pub delta: f64,
    pub n: usize,
    /// Σ_{i<K} p̂⁰(i).
    pub probe_mass: f64,
}

/// Builds the attack instance against an estimator whose all-`K` output is `p_hat0`.
///
/// Requires `n > (4/3)·ln(1/δ)`. The bound is
/// `(2 ln(1/δ)/(3n))·(ln(2 ln(1/δ)(K−1)/(3n·s)) − 1) + s` with
/// `s = Σ_{i<K} p̂⁰(i)`, and `+∞` when `s = 0`.
pub fn build_attack(p_hat0: &ProbVec, k: usize, n: usize, delta: f64) -> Result<AdversarialInstance> {
    check_delta(delta)?;
    if p_hat0.k() != k {
        return Err(Error::DimensionMismatch {
            left: p_hat0.k(),
            right: k,
        });
    }
    let alpha = attack_alpha(delta);
    let nf = n as f64;
    if nf <= 2.0 * alpha {
        return Err(Error::Construction(format!(
            "need n > (4/3) ln(1/delta) = {:.6}, got n = {n}",
            2.0 * alpha
        )));
    }
    let head = &p_hat0.as_slice()[..k - 1];
    // lowest index wins ties
    let attacked = head
        .iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x < head[best] { i } else { best });
    let s: f64 = head.iter().sum();
    let rare = alpha / nf;
    let mut p = vec![0.0; k];
    p[attacked] = rare;
    p[k - 1] = 1.0 - rare;
    let bound = if s == 0.0 {
        ExtReal::Infinite
    } else {
        let v = rare * (((k - 1) as f64 * rare / s).ln() - 1.0) + s;
        // the expression is minimised at s = α/n where it equals (α/n)·ln(K−1) >= 0
        ExtReal::Finite(v.max(0.0))
    };
    Ok(AdversarialInstance {
        p_star: ProbVec::new(p)?,
        alpha,
        attacked_index: attacked + 1,
        bound,
        delta,
        n,
        probe_mass: s,
    })
}

/// Convenience: probe `spec` and build the matching attack.
pub fn attack_for(spec: &EstimatorSpec, k: usize, n: usize, delta: f64) -> Result<AdversarialInstance> {
    let p0 = probe_zero_counts(spec, k, n)?;
    build_attack(&p0, k, n, delta)
}

/// `(1 − α/n)^n`, the probability that `n` draws all avoid an atom of mass `α/n`.
pub fn attack_event_probability(alpha: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if alpha.is_nan() || alpha < 0.0 || nf <= 2.0 * alpha {
        return Err(Error::Construction(format!(
            "need n > 2 alpha, got n = {n}, alpha = {alpha}"
        )));
    }
    Ok((nf * (-alpha / nf).ln_1p()).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct HardFamily {
    /// `P_2, …, P_K` in order.
    pub members: Vec<ProbVec>,
    pub alpha: f64,
    /// KL(P_j ‖ P̄) for the uniform mixture P̄, equal to `(α/n)·ln(K−1)`.
    pub separation: f64,
    /// KL(P_j ‖ (P_j + P_k)/2) for `j ≠ k`, equal to `(α/n)·ln 2`.
    pub pairwise_separation: f64,
}

impl HardFamily {
    /// `P_j` for `j` in `2..=K`.
    pub fn member(&self, j: usize) -> Option<&ProbVec> {
        j.checked_sub(2).and_then(|i| self.members.get(i))
    }

    /// Uniform mixture of the members.
    pub fn mixture(&self) -> ProbVec {
        let k = self.members[0].k();
        let w = 1.0 / self.members.len() as f64;
        let mut acc = vec![0.0; k];
        for m in &self.members {
            for (a, &x) in acc.iter_mut().zip(m.as_slice()) {
                *a += w * x;
            }
        }
        ProbVec::from_simplex(acc)
    }
}

/// Builds `P_j(1) = 1 − α/n`, `P_j(j) = α/n` for `j = 2..K`.
pub fn hard_family(k: usize, n: usize, delta: f64) -> Result<HardFamily> {
    check_delta(delta)?;
    if k < 2 {
        return Err(Error::Construction(format!("need K >= 2, got {k}")));
    }
    let alpha = attack_alpha(delta);
    let nf = n as f64;
    if alpha > nf / 2.0 {
        return Err(Error::Construction(format!(
            "need alpha <= n/2, got alpha = {alpha}, n = {n}"
        )));
    }
    let rare = alpha / nf;
    let members = (2..=k)
        .map(|j| {
            let mut p = vec![0.0; k];
            p[0] = 1.0 - rare;
            p[j - 1] = rare;
            ProbVec::new(p)
        })
        .collect::<Result<_>>()?;
    Ok(HardFamily {
        members,
        alpha,
        separation: rare * ((k - 1) as f64).ln(),
        pairwise_separation: rare * std::f64::consts::LN_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::kl;
    use approx::assert_abs_diff_eq;

    #[test]
    fn probe_examples() {
        let p = probe_zero_counts(&EstimatorSpec::LAPLACE, 10, 100).unwrap();
        for i in 1..10 {
            assert_abs_diff_eq!(p.prob(i), 1.0 / 110.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.prob(10), 101.0 / 110.0, epsilon = 1e-15);

        let p = probe_zero_counts(&EstimatorSpec::Mle, 7, 13).unwrap();
        assert_eq!(p, ProbVec::point_mass(7, 7).unwrap());

        let p = probe_zero_counts(&EstimatorSpec::KT, 3, 10).unwrap();
        for (x, want) in p.as_slice().iter().zip([0.5 / 11.5, 0.5 / 11.5, 10.5 / 11.5]) {
            assert_abs_diff_eq!(*x, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn laplace_attack_bound() {
        let p0 = probe_zero_counts(&EstimatorSpec::LAPLACE, 10, 100).unwrap();
        let inst = build_attack(&p0, 10, 100, 0.1).unwrap();
        assert_eq!(inst.attacked_index, 1);
        assert_abs_diff_eq!(inst.probe_mass, 9.0 / 110.0, epsilon = 1e-15);
        // mpmath, 30 digits
        assert_abs_diff_eq!(inst.bound.to_f64(), 0.0745094316053566, epsilon = 1e-14);
        assert_abs_diff_eq!(inst.p_star.prob(1), inst.alpha / 100.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inst.p_star.prob(10), 1.0 - inst.alpha / 100.0, epsilon = 1e-15);
        // under the all-K event the realised KL sits above the bound
        let realised = kl(&inst.p_star, &p0).unwrap();
        assert!(realised >= inst.bound);
    }

    #[test]
    fn mle_attack_is_infinite() {
        let p0 = probe_zero_counts(&EstimatorSpec::Mle, 5, 50).unwrap();
        let inst = build_attack(&p0, 5, 50, 0.1).unwrap();
        assert!(inst.bound.is_infinite());
        assert_eq!(inst.attacked_index, 1);
    }

    #[test]
    fn argmin_picks_lowest_index() {
        let p0 = ProbVec::new(vec![0.2, 0.1, 0.1, 0.6]).unwrap();
        assert_eq!(build_attack(&p0, 4, 100, 0.1).unwrap().attacked_index, 2);
        // the last category is never attacked
        let p0 = ProbVec::new(vec![0.3, 0.7, 0.0]).unwrap();
        assert_eq!(build_attack(&p0, 3, 100, 0.1).unwrap().attacked_index, 1);
    }

    #[test]
    fn attack_hypothesis() {
        let p0 = ProbVec::uniform(3).unwrap();
        // (4/3) ln(1/0.01) ≈ 6.14
        assert!(build_attack(&p0, 3, 6, 0.01).is_err());
        assert!(build_attack(&p0, 3, 7, 0.01).is_ok());
        assert!(build_attack(&p0, 4, 7, 0.01).is_err());
    }

    #[test]
    fn event_probability() {
        assert_eq!(attack_event_probability(0.0, 10).unwrap(), 1.0);
        let alpha = attack_alpha(0.1);
        let p = attack_event_probability(alpha, 100).unwrap();
        assert_abs_diff_eq!(p, 0.212894039660592, epsilon = 1e-12);
        assert!(p > 0.1);
        let n = 400;
        let alpha = n as f64 / 2.0 - 1.0;
        let p = attack_event_probability(alpha, n).unwrap();
        // ((n/2 + 1)/n)^n; compare logs against −n·ln 2
        assert!((p.ln() + n as f64 * std::f64::consts::LN_2).abs() < 3.0);
        assert!(attack_event_probability(50.0, 100).is_err());
    }

    #[test]
    fn hard_family_examples() {
        let f = hard_family(2, 100, 0.1).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.separation, 0.0);

        let f = hard_family(10, 100, 0.1).unwrap();
        assert_abs_diff_eq!(f.separation, 0.0337286437182301, epsilon = 1e-15);
        let mix = f.mixture();
        for j in 2..=10 {
            let pj = f.member(j).unwrap();
            assert_abs_diff_eq!(pj.prob(j), f.alpha / 100.0);
            let d = kl(pj, &mix).unwrap().to_f64();
            assert_abs_diff_eq!(d, f.separation, epsilon = 1e-12);
        }
        let pair = ProbVec::new(
            f.member(2)
                .unwrap()
                .as_slice()
                .iter()
                .zip(f.member(3).unwrap().as_slice())
                .map(|(a, b)| (a + b) / 2.0)
                .collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            kl(f.member(2).unwrap(), &pair).unwrap().to_f64(),
            f.pairwise_separation,
            epsilon = 1e-12
        );
        assert!(f.member(1).is_none());
        assert!(f.member(11).is_none());
        assert!(hard_family(10, 2, 0.01).is_err());
    }
}
