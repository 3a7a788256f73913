use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use klest::adversarial::attack_for;
use klest::dist::{parse_labels, parse_prob_vec, write_prob_vec};
use klest::divergence::{chain_report, measure, Measure, CHAIN_LABELS};
use klest::format::sig;
use klest::harness::{
    exact_risk_enumeration, gate_checks, kl_samples, ratio_diagnostics, run_grid, to_csv, GridConfig, Metric,
    TrialConfig,
};
use klest::{EstimatorSpec, ExtReal, ProbVec};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GATE: u8 = 3;

#[derive(Parser)]
#[command(name = "klest", version, about = "Discrete distribution estimation under KL divergence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a divergence between two distribution files.
    Divergence {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// kl | rkl | chi2 | rchi2 | hellinger2 | l1 | chain
        #[arg(long, default_value = "kl")]
        measure: String,
    },
    /// Fit an estimator to a file of 1-based category labels.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// mle | laplace | kt | addgamma:G | adaptive:DELTA | otb:DELTA
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        out: PathBuf,
        /// Alphabet size; inferred from the largest label when omitted.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Build the attack instance against an estimator, optionally measuring it.
    Attack {
        #[arg(long)]
        estimator: String,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a trial configuration or grid and print the CSV table.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also run the explicit-constant reverse-KL check; exit 3 if it fails.
        #[arg(long)]
        gate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid and write the CSV table to a file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the density-ratio caps of the adaptive iterates by simulation.
    DiagnoseRatios {
        #[arg(long)]
        pstar: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact KL risk distribution by enumerating every outcome.
    Exact {
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        pstar: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
    },
}

/// An error tagged with the exit code it should produce.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<klest::Error> for Failure {
    fn from(e: klest::Error) -> Self {
        use klest::Error::*;
        let code = match e {
            Config(_) | Parse(_) | InvalidProbVec(_) | InvalidGamma(_) | DeltaOutOfRange(_)
            | SampleSizeTooSmall { .. } | CategoryOutOfRange { .. } | DimensionMismatch { .. }
            | RatioPrecondition { .. } | InstanceTooLarge { .. } | Construction(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            error,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn config_error(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(config_error)
}

fn write_output(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn read_dist(path: &Path) -> CliResult<ProbVec> {
    let text = read_input(path)?;
    parse_prob_vec(&text).map_err(|e| config_error(anyhow::Error::new(e).context(path.display().to_string())))
}

fn parse_spec(s: &str) -> CliResult<EstimatorSpec> {
    Ok(s.parse::<EstimatorSpec>()?)
}

fn print_json(value: &serde_json::Value) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value).context("serialising output")?);
    Ok(())
}

fn load_grid(path: &Path) -> CliResult<GridConfig> {
    let text = read_input(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(GridConfig::from_json(&text, base)?)
}

fn divergence(p: &Path, q: &Path, which: &str) -> CliResult<()> {
    let p = read_dist(p)?;
    let q = read_dist(q)?;
    let m: Measure = which.parse()?;
    if m == Measure::Chain {
        let report = chain_report(&p, &q)?;
        for v in report.values {
            println!("{}", sig(v));
        }
        if let Some(j) = report.first_violation() {
            eprintln!(
                "warning: ordering fails between {} and {}",
                CHAIN_LABELS[j],
                CHAIN_LABELS[j + 1]
            );
        }
        return Ok(());
    }
    println!("{}", measure(m, &p, &q)?);
    Ok(())
}

fn estimate(data: &Path, spec: &str, out: &Path, k: Option<usize>) -> CliResult<()> {
    let spec = parse_spec(spec)?;
    let seq = parse_labels(&read_input(data)?, k)?;
    let p = spec.fit(&seq)?;
    write_output(out, &write_prob_vec(&p))
}

fn attack(spec: &str, k: usize, n: usize, delta: f64, trials: Option<u64>, seed: u64) -> CliResult<()> {
    let spec = parse_spec(spec)?;
    let inst = attack_for(&spec, k, n, delta)?;
    let mut out = json!({
        "estimator": spec,
        "instance": inst,
    });
    if let Some(trials) = trials {
        let config = TrialConfig {
            estimator: spec,
            p_star: inst.p_star.clone(),
            n,
            delta,
            trials,
            seed,
        };
        let values = kl_samples(&config, Metric::Forward, Default::default())?;
        let count = |f: &dyn Fn(&ExtReal) -> bool| values.iter().filter(|v| f(v)).count() as f64 / trials as f64;
        out["trials"] = json!(trials);
        out["seed"] = json!(seed);
        out["exceedance_frequency"] = json!(count(&|v| *v >= inst.bound));
        out["infinite_frequency"] = json!(count(&|v| v.is_infinite()));
    }
    print_json(&out)
}

fn simulate(config: &Path, gate: bool, out: Option<&Path>) -> CliResult<bool> {
    let grid = load_grid(config)?;
    let csv = to_csv(&run_grid(&grid)?);
    match out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    if !gate {
        return Ok(true);
    }
    let checks = gate_checks(&grid)?;
    let mut passed = true;
    for c in &checks {
        eprintln!(
            "gate K={} n={} delta={}: reverse-KL quantile {} vs bound {} -> {}",
            c.k,
            c.n,
            sig(c.delta),
            c.quantile,
            sig(c.bound),
            if c.passed { "pass" } else { "FAIL" }
        );
        passed &= c.passed;
    }
    Ok(passed)
}

fn diagnose(pstar: &Path, n: usize, delta: f64, trials: u64, seed: u64) -> CliResult<()> {
    let p = read_dist(pstar)?;
    let d = ratio_diagnostics(&p, n, delta, trials, seed)?;
    let allowed = d.allowed_fraction();
    let mut out = serde_json::to_value(&d).context("serialising diagnostics")?;
    out["allowed_fraction"] = json!(allowed);
    out["passed"] = json!(d.violation_fraction <= allowed);
    print_json(&out)
}

fn exact(spec: &str, pstar: &Path, n: usize, delta: f64) -> CliResult<()> {
    let spec = parse_spec(spec)?;
    let p = read_dist(pstar)?;
    let risk = exact_risk_enumeration(&spec, &p, n, delta)?;
    let distribution: Vec<_> = risk
        .distribution
        .iter()
        .map(|(v, prob)| json!({ "kl": v, "prob": prob }))
        .collect();
    print_json(&json!({
        "estimator": spec,
        "K": p.k(),
        "n": n,
        "delta": delta,
        "outcomes": risk.outcomes,
        "quantile": risk.quantile,
        "mean_kl": risk.mean(),
        "prob_infinite": risk.prob_infinite(),
        "distribution": distribution,
    }))
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Divergence { p, q, measure } => divergence(&p, &q, &measure)?,
        Command::Estimate { data, estimator, out, k } => estimate(&data, &estimator, &out, k)?,
        Command::Attack {
            estimator,
            k,
            n,
            delta,
            trials,
            seed,
        } => attack(&estimator, k, n, delta, trials, seed)?,
        Command::Simulate { config, gate, out } => {
            if !simulate(&config, gate, out.as_deref())? {
                return Ok(ExitCode::from(EXIT_GATE));
            }
        }
        Command::Sweep { config, out } => {
            let grid = load_grid(&config)?;
            write_output(&out, &to_csv(&run_grid(&grid)?))?;
        }
        Command::DiagnoseRatios {
            pstar,
            n,
            delta,
            trials,
            seed,
        } => diagnose(&pstar, n, delta, trials, seed)?,
        Command::Exact {
            estimator,
            pstar,
            n,
            delta,
        } => exact(&estimator, &pstar, n, delta)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
