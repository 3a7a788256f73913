use serde::Serialize;

use crate::dist::{ProbVec, Sampler, Seed};
use crate::divergence::{kl_slices, ExtReal};
use crate::estimators::{check_delta, EstimatorSpec};
use crate::exec::{map_trials, Execution};
use crate::{Error, Result};

/// One Monte Carlo cell: estimator, true distribution, sample size, confidence.
#[derive(Debug, Clone, Serialize)]
pub struct TrialConfig {
    pub estimator: EstimatorSpec,
    pub p_star: ProbVec,
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        self.estimator.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let min_n = match self.estimator {
            EstimatorSpec::Otb { .. } => 2,
            _ => 1,
        };
        if self.n < min_n {
            return Err(Error::SampleSizeTooSmall { n: self.n, min: min_n });
        }
        Ok(())
    }
}

/// Which divergence a trial records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// KL(p*‖p̂).
    #[default]
    Forward,
    /// KL(p̂‖p*).
    Reverse,
}

/// Summary of the KL risk over all trials of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub estimator: EstimatorSpec,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// The ⌈(1−δ)·trials⌉-th smallest KL value.
    pub quantile: ExtReal,
    /// Arithmetic mean; `+∞` if any trial is infinite.
    pub mean_kl: ExtReal,
    pub frac_infinite: f64,
}

/// 1-based rank `⌈(1−δ)·N⌉`, clamped to `[1, N]`.
pub fn order_statistic_rank(trials: usize, delta: f64) -> usize {
    let x = (1.0 - delta) * trials as f64;
    // (1 − δ)·N can land a rounding error above an integer
    let rank = (x - 1e-9 * x.max(1.0)).ceil() as usize;
    rank.clamp(1, trials.max(1))
}

/// Upper (1−δ) empirical quantile: the ⌈(1−δ)·N⌉-th order statistic with `+∞` last.
pub fn empirical_quantile(values: &[ExtReal], delta: f64) -> ExtReal {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted_quantile(&sorted, delta)
}

fn sorted_quantile(sorted: &[ExtReal], delta: f64) -> ExtReal {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    sorted[order_statistic_rank(sorted.len(), delta) - 1]
}

/// KL values of every trial, in trial order.
pub fn kl_samples(config: &TrialConfig, metric: Metric, exec: Execution) -> Result<Vec<ExtReal>> {
    config.validate()?;
    let sampler = Sampler::new(&config.p_star);
    let p_star = config.p_star.as_slice();
    let out = map_trials(exec, config.trials, |t| -> Result<ExtReal> {
        let seq = sampler.sample(config.n, Seed::new(config.seed, t));
        let est = config.estimator.fit(&seq)?;
        Ok(match metric {
            Metric::Forward => kl_slices(p_star, est.as_slice()),
            Metric::Reverse => kl_slices(est.as_slice(), p_star),
        })
    });
    out.into_iter().collect()
}

fn summarise(config: &TrialConfig, values: Vec<ExtReal>) -> RiskReport {
    let trials = values.len();
    // trial order, so the floating-point sum is reproducible
    let mean_kl = values
        .iter()
        .fold(ExtReal::ZERO, |acc, &v| acc + v)
        .scale(1.0 / trials as f64);
    let infinite = values.iter().filter(|v| v.is_infinite()).count();
    let mut sorted = values;
    sorted.sort_unstable();
    RiskReport {
        estimator: config.estimator,
        k: config.p_star.k(),
        n: config.n,
        delta: config.delta,
        trials: config.trials,
        seed: config.seed,
        quantile: sorted_quantile(&sorted, config.delta),
        mean_kl,
        frac_infinite: infinite as f64 / trials as f64,
    }
}

/// Runs every trial of `config` and summarises KL(p*‖p̂).
///
/// Trial `t` draws its sample from stream `t` of the master seed, so the
/// report does not depend on the execution strategy.
pub fn run_trials(config: &TrialConfig) -> Result<RiskReport> {
    run_trials_with(config, Metric::Forward, Execution::default())
}

pub fn run_trials_with(config: &TrialConfig, metric: Metric, exec: Execution) -> Result<RiskReport> {
    let values = kl_samples(config, metric, exec)?;
    Ok(summarise(config, values))
}

/// Reverse-KL check of the empirical distribution against `(7K + 6 ln(1/δ))/n`.
#[derive(Debug, Clone, Serialize)]
pub struct MeanKlCheck {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub trials: u64,
    /// Empirical (1−δ)-quantile of KL(p̄ₙ‖p*).
    pub quantile: ExtReal,
    pub mean: ExtReal,
    pub bound: f64,
    pub passed: bool,
}

/// `(7K + 6 ln(1/δ))/n`.
pub fn reverse_kl_bound(k: usize, n: usize, delta: f64) -> f64 {
    (7.0 * k as f64 + 6.0 * (1.0 / delta).ln()) / n as f64
}

pub fn mean_kl_check(p_star: &ProbVec, n: usize, delta: f64, trials: u64, seed: u64) -> Result<MeanKlCheck> {
    let config = TrialConfig {
        estimator: EstimatorSpec::Mle,
        p_star: p_star.clone(),
        n,
        delta,
        trials,
        seed,
    };
    let report = run_trials_with(&config, Metric::Reverse, Execution::default())?;
    let bound = reverse_kl_bound(p_star.k(), n, delta);
    Ok(MeanKlCheck {
        k: p_star.k(),
        n,
        delta,
        trials,
        quantile: report.quantile,
        mean: report.mean_kl,
        bound,
        passed: report.quantile <= ExtReal::Finite(bound),
    })
}
