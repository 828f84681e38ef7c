//! Compare estimators over repeated seeded trials and write trials.jsonl and
//! summary.csv.
//!
//! ```text
//! cargo run --release --example benchmark -- [out_dir] [trials]
//! ```

use discount::domain::RegionSpec;
use discount::estimators::Method;
use discount::evaluation::{
    generate_synthetic, make_regions, run_simulation, write_outputs, CalibrationSource,
    SimulationConfig, SyntheticSpec,
};

fn main() -> discount::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "benchmark-out".into());
    let trials = args.next().and_then(|t| t.parse().ok()).unwrap_or(300);

    let spec = SyntheticSpec::default();
    let data = generate_synthetic(&spec)?;
    let last_year = generate_synthetic(&spec.with_seed(spec.seed + 1))?;
    let oracle = data.oracle.as_ref().unwrap();
    let calibration = CalibrationSource {
        domain: &last_year.domain,
        labels: last_year.oracle.as_ref().unwrap(),
    };
    let regions = make_regions(&data.domain, &RegionSpec::partition(vec![91, 91, 91, 92]))?;
    let config = SimulationConfig::new(Method::ALL.to_vec(), vec![20, 40, 80, 160], trials, 2024);
    let results = run_simulation(&data.domain, oracle, &regions, &config, Some(calibration))?;

    println!(
        "{:<7} {:>5} {:>10} {:>10} {:>9} {:>9}",
        "method", "n", "error", "±1.96se", "coverage", "effort%"
    );
    for r in &results {
        let s = &r.summary;
        let coverage = s.coverage.map_or("-".into(), |c| format!("{c:.3}"));
        println!(
            "{:<7} {:>5} {:>10.5} {:>10.5} {:>9} {:>9.2}",
            r.config.method,
            r.config.n,
            s.mean_error,
            s.error_band(),
            coverage,
            s.effort_pct
        );
    }
    write_outputs(&out, &results)?;
    println!("\nwrote {out}/trials.jsonl and {out}/summary.csv");
    Ok(())
}
