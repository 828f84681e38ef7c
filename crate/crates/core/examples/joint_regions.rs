//! Estimate many regions from one sample drawn over the whole domain.
//!
//! Nested prefixes ("first k days of the season") share draws, so every
//! region gets an estimate from a single labeling pass.

use discount::domain::RegionSpec;
use discount::estimators::{estimate_kdiscount, EstimatorOptions};
use discount::evaluation::{generate_synthetic, make_regions, SyntheticSpec};
use discount::sampler::{sample_proportional, RandomStream, Scope};

fn main() -> discount::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default())?;
    let (domain, oracle) = (&data.domain, data.oracle.as_ref().unwrap());
    let regions = make_regions(
        domain,
        &RegionSpec::prefix(vec![60, 120, 180, 240, 300, 365]),
    )?;

    let mut stream = RandomStream::new(7, 0);
    let draw = sample_proportional(domain, Scope::Domain, 100, &mut stream)?;
    println!(
        "{} draws, {} distinct units to label\n",
        draw.n(),
        draw.distinct().len()
    );

    let estimates =
        estimate_kdiscount(domain, &regions, &draw, oracle, EstimatorOptions::default())?;
    println!(
        "{:<8} {:>5} {:>10} {:>10} {:>22}",
        "region", "n(S)", "truth", "estimate", "95% CI"
    );
    for (region, e) in regions.iter().zip(&estimates) {
        let truth = oracle.region_total(domain, region)?;
        let ci = match (e.ci_low, e.ci_high) {
            (Some(lo), Some(hi)) => format!("[{lo:.0}, {hi:.0}]"),
            _ => "no draws".to_string(),
        };
        println!(
            "{:<8} {:>5} {:>10.0} {:>10.0} {:>22}",
            e.region, e.n_region, truth, e.value, ci
        );
    }
    Ok(())
}
