//! Monte Carlo risk measurement and the oracles that validate it.

pub mod exact;
pub mod ratios;
pub mod sweep;
mod trials;

pub use exact::{exact_risk_enumeration, ExactRisk};
pub use ratios::{ratio_check_trial, ratio_diagnostics, RatioDiagnostics, RatioTrial};
pub use sweep::{gate_checks, run_grid, to_csv, GridConfig, PStarSpec, SweepRow, CSV_HEADER};
pub use trials::{
    empirical_quantile, kl_samples, mean_kl_check, order_statistic_rank, reverse_kl_bound, run_trials,
    run_trials_with,
    MeanKlCheck, Metric, RiskReport, TrialConfig,
};
