//! Parameter grids, their JSON configuration, and CSV reporting.
//!
//! A grid is the cartesian product of estimators × true distributions × K ×
//! n × δ. Each cell is an independent [`TrialConfig`] sharing the master seed.
//!
//! Configuration keys: `estimator`/`estimators`, `K`, `n`/`ns`,
//! `delta`/`deltas`, `trials`, `seed`, `pstar`. List-valued keys accept a
//! scalar or an array. `pstar` is one of `"uniform"`, `"attack"`,
//! `"heavy-atom"`, `"half-support"` or `"file:PATH"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversarial::attack_for;
use crate::dist::{parse_prob_vec, ProbVec};
use crate::divergence::ExtReal;
use crate::estimators::EstimatorSpec;
use crate::format::sig;
use crate::harness::trials::{mean_kl_check, run_trials, MeanKlCheck, RiskReport, TrialConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

fn default_pstar() -> OneOrMany<String> {
    OneOrMany::One("uniform".to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(alias = "estimators")]
    estimator: OneOrMany<String>,
    #[serde(rename = "K", default)]
    k: Option<OneOrMany<usize>>,
    #[serde(alias = "ns")]
    n: OneOrMany<usize>,
    #[serde(alias = "deltas")]
    delta: OneOrMany<f64>,
    trials: u64,
    seed: u64,
    #[serde(default = "default_pstar")]
    pstar: OneOrMany<String>,
}

/// How the true distribution of a cell is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PStarSpec {
    Uniform,
    /// The attack instance built against the cell's estimator.
    Attack,
    /// Mass 0.9 on category 1, the rest spread evenly.
    HeavyAtom,
    /// Uniform on the first ⌈K/2⌉ categories.
    HalfSupport,
    File(PathBuf),
}

impl PStarSpec {
    fn parse(s: &str, base: &Path) -> Result<Self> {
        Ok(match s {
            "uniform" => PStarSpec::Uniform,
            "attack" => PStarSpec::Attack,
            "heavy-atom" => PStarSpec::HeavyAtom,
            "half-support" => PStarSpec::HalfSupport,
            other => match other.strip_prefix("file:") {
                Some(path) => PStarSpec::File(base.join(path)),
                None => return Err(Error::Config(format!("unknown pstar {other:?}"))),
            },
        })
    }

    fn build(&self, estimator: &EstimatorSpec, k: usize, n: usize, delta: f64) -> Result<ProbVec> {
        match self {
            PStarSpec::Uniform => ProbVec::uniform(k),
            PStarSpec::Attack => Ok(attack_for(estimator, k, n, delta)?.p_star),
            PStarSpec::HeavyAtom => {
                if k < 2 {
                    return ProbVec::uniform(k);
                }
                let mut p = vec![0.1 / (k - 1) as f64; k];
                p[0] = 0.9;
                ProbVec::new(p)
            }
            PStarSpec::HalfSupport => {
                let half = k.div_ceil(2);
                let mut p = vec![0.0; k];
                for x in &mut p[..half] {
                    *x = 1.0 / half as f64;
                }
                ProbVec::new(p)
            }
            PStarSpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                parse_prob_vec(&text)
            }
        }
    }
}

/// A parsed grid, ready to expand into cells.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub estimators: Vec<EstimatorSpec>,
    pub pstars: Vec<PStarSpec>,
    /// Alphabet sizes; `None` means "take K from the distribution file".
    pub ks: Option<Vec<usize>>,
    pub ns: Vec<usize>,
    pub deltas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl GridConfig {
    /// Parses a JSON configuration; `file:` paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let raw: RawGrid = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let estimators = raw
            .estimator
            .into_vec()
            .iter()
            .map(|s| s.parse::<EstimatorSpec>())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Config(e.to_string()))?;
        let pstars = raw
            .pstar
            .into_vec()
            .iter()
            .map(|s| PStarSpec::parse(s, base))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            estimators,
            pstars,
            ks: raw.k.map(OneOrMany::into_vec),
            ns: raw.n.into_vec(),
            deltas: raw.delta.into_vec(),
            trials: raw.trials,
            seed: raw.seed,
        })
    }

    /// Expands the grid and validates every cell before anything runs.
    pub fn cells(&self) -> Result<Vec<TrialConfig>> {
        let mut cells = Vec::new();
        for est in &self.estimators {
            for pstar in &self.pstars {
                let ks: Vec<Option<usize>> = match (&self.ks, pstar) {
                    (Some(ks), _) => ks.iter().copied().map(Some).collect(),
                    (None, PStarSpec::File(_)) => vec![None],
                    (None, _) => {
                        return Err(Error::Config(
                            "K is required unless pstar is a file".into(),
                        ))
                    }
                };
                for k in ks {
                    for &n in &self.ns {
                        for &delta in &self.deltas {
                            let p_star = pstar
                                .build(est, k.unwrap_or(2), n, delta)
                                .map_err(|e| Error::Config(format!("pstar: {e}")))?;
                            if let Some(k) = k {
                                if p_star.k() != k {
                                    return Err(Error::Config(format!(
                                        "distribution has K = {}, grid asks for K = {k}",
                                        p_star.k()
                                    )));
                                }
                            }
                            let cell = TrialConfig {
                                estimator: *est,
                                p_star,
                                n,
                                delta,
                                trials: self.trials,
                                seed: self.seed,
                            };
                            cell.validate()
                                .map_err(|e| Error::Config(format!("cell {est} n={n} delta={delta}: {e}")))?;
                            cells.push(cell);
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub report: RiskReport,
    pub rate_k_over_n: f64,
    pub rate_log_k_log_inv_delta_over_n: f64,
    /// `(K + ln K · ln(1/δ))/n`, reported in JSON but not in the CSV.
    pub rate_combined_over_n: f64,
}

impl SweepRow {
    pub fn from_report(report: RiskReport) -> Self {
        let (k, n) = (report.k as f64, report.n as f64);
        let log_term = k.ln() * (1.0 / report.delta).ln();
        Self {
            rate_k_over_n: k / n,
            rate_log_k_log_inv_delta_over_n: log_term / n,
            rate_combined_over_n: (k + log_term) / n,
            report,
        }
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "estimator",
    "K",
    "n",
    "delta",
    "trials",
    "seed",
    "quantile",
    "mean_kl",
    "frac_infinite",
    "rate_K_over_n",
    "rate_logKlog1d_over_n",
];

fn ext(x: ExtReal) -> String {
    x.to_string()
}

/// Renders rows as CSV with a header line; numbers at 12 significant digits.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("writing to memory");
    for row in rows {
        let r = &row.report;
        w.write_record([
            r.estimator.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            sig(r.delta),
            r.trials.to_string(),
            r.seed.to_string(),
            ext(r.quantile),
            ext(r.mean_kl),
            sig(r.frac_infinite),
            sig(row.rate_k_over_n),
            sig(row.rate_log_k_log_inv_delta_over_n),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV output is UTF-8")
}

/// Runs every cell of the grid, in grid order.
pub fn run_grid(grid: &GridConfig) -> Result<Vec<SweepRow>> {
    if grid.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let cells = grid.cells()?;
    cells
        .iter()
        .map(|c| run_trials(c).map(SweepRow::from_report))
        .collect()
}

/// The explicit-constant reverse-KL check on every distinct (p*, n, δ) of the grid.
pub fn gate_checks(grid: &GridConfig) -> Result<Vec<MeanKlCheck>> {
    let mut seen: Vec<(Vec<u64>, usize, u64)> = Vec::new();
    let mut out = Vec::new();
    for cell in grid.cells()? {
        let key = (
            cell.p_star.as_slice().iter().map(|x| x.to_bits()).collect(),
            cell.n,
            cell.delta.to_bits(),
        );
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        out.push(mean_kl_check(&cell.p_star, cell.n, cell.delta, cell.trials, cell.seed)?);
    }
    Ok(out)
}
