use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trials::{run_trials, CalibrationSource, TrialConfig, TrialResult, CALIBRATION_SAMPLES};
use crate::domain::{Domain, LabelStore, Region};
use crate::error::{invalid, Result};
use crate::estimators::{EstimatorOptions, Method};

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "method",
    "n",
    "mean_error",
    "error_se",
    "mean_ci_width",
    "coverage",
    "mean_distinct",
    "effort_pct",
];

/// A grid of methods and budgets sharing one master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub options: EstimatorOptions,
    pub cost_factor: Option<f64>,
    pub calibration_samples: usize,
}

impl SimulationConfig {
    pub fn new(methods: Vec<Method>, n_grid: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            methods,
            n_grid,
            trials,
            seed,
            options: EstimatorOptions::default(),
            cost_factor: None,
            calibration_samples: CALIBRATION_SAMPLES,
        }
    }
}

/// Runs every `(method, n)` cell. All cells reuse streams `0..trials`, so
/// methods are compared on common random numbers.
pub fn run_simulation(
    domain: &Domain,
    oracle: &LabelStore,
    regions: &[Region],
    config: &SimulationConfig,
    calibration: Option<CalibrationSource<'_>>,
) -> Result<Vec<TrialResult>> {
    if config.methods.is_empty() || config.n_grid.is_empty() {
        return Err(invalid("simulation needs at least one method and one n"));
    }
    let mut out = Vec::with_capacity(config.methods.len() * config.n_grid.len());
    for &method in &config.methods {
        for &n in &config.n_grid {
            let cell = TrialConfig {
                options: config.options,
                cost_factor: config.cost_factor,
                calibration_samples: config.calibration_samples,
                ..TrialConfig::new(method, n, config.trials, config.seed)
            };
            out.push(run_trials(domain, oracle, regions, &cell, calibration)?);
        }
    }
    Ok(out)
}

/// One JSON object per trial.
pub fn write_trials_jsonl<W: Write>(mut writer: W, results: &[TrialResult]) -> Result<()> {
    for record in results.iter().flat_map(|r| &r.records) {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// One row per `(method, n)`. Undefined widths and coverages are left blank.
pub fn write_summary_csv<W: Write>(writer: W, results: &[TrialResult]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SUMMARY_COLUMNS)
        .map_err(std::io::Error::from)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in results {
        let s = &r.summary;
        wtr.write_record([
            r.config.method.tag().to_string(),
            r.config.n.to_string(),
            s.mean_error.to_string(),
            s.error_se.to_string(),
            opt(s.mean_ci_width),
            opt(s.coverage),
            s.mean_distinct.to_string(),
            s.effort_pct.to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `trials.jsonl` and `summary.csv` into `dir`, creating it if needed.
pub fn write_outputs(dir: impl AsRef<Path>, results: &[TrialResult]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let trials = std::fs::File::create(dir.join("trials.jsonl"))?;
    write_trials_jsonl(std::io::BufWriter::new(trials), results)?;
    let summary = std::fs::File::create(dir.join("summary.csv"))?;
    write_summary_csv(std::io::BufWriter::new(summary), results)
}
