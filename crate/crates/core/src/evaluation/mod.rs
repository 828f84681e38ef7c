//! Experiment harness: synthetic domains, region builders, metrics and
//! seeded trial runs, plus the `simulate` output files.

mod metrics;
mod regions;
mod simulate;
mod synthetic;
mod trials;

pub use metrics::{ci_width_normalized, coverage, fractional_error, labeling_effort, C_DIS};
pub use regions::{even_partition, make_regions};
pub use simulate::{
    run_simulation, write_outputs, write_summary_csv, write_trials_jsonl, SimulationConfig,
    SUMMARY_COLUMNS,
};
pub use synthetic::{generate_synthetic, DetectorNoise, Shape, SyntheticSpec};
pub use trials::{
    run_trials, CalibrationSource, Summary, TrialConfig, TrialRecord, TrialResult,
    CALIBRATION_SAMPLES,
};
