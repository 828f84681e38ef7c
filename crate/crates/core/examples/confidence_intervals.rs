//! Check interval coverage by simulation, and compare per-region and pooled
//! variance on a small region.

use discount::domain::{Domain, LabelStore, Region, Unit};
use discount::estimators::{estimate_kdiscount, EstimatorOptions, VarianceSelection};
use discount::sampler::{sample_proportional, RandomStream, Scope};

fn main() -> discount::Result<()> {
    // f/g between 0.5 and 2 on every unit.
    let mut rng = RandomStream::new(5, 99);
    let units: Vec<Unit> = (0..365)
        .map(|i| {
            let g = 10.0 + 90.0 * rng.next_f64();
            let ratio = 0.5 + 1.5 * rng.next_f64();
            Unit::new(format!("d{i}"), g).with_oracle(g * ratio)
        })
        .collect();
    let domain = Domain::new(units)?;
    let oracle: LabelStore = domain.oracle_labels().unwrap();
    let small = Region::from_indices("small", (0..12).collect(), &domain)?;
    let p = domain.region_mass(&small)?.probability;
    let truth = oracle.region_total(&domain, &small)?;
    let regions = [small];

    let n = (10.0 / p).round() as usize;
    println!("p(S) = {p:.4}; n = {n} gives about 10 draws in the region\n");
    for variance in [VarianceSelection::PerRegion, VarianceSelection::Pooled] {
        let opts = EstimatorOptions::with_variance(variance);
        let (mut hit, mut defined) = (0, 0);
        for trial in 0..2000 {
            let mut stream = RandomStream::new(1, trial);
            let draw = sample_proportional(&domain, Scope::Domain, n, &mut stream)?;
            if let Some(c) =
                estimate_kdiscount(&domain, &regions, &draw, &oracle, opts)?[0].covers(truth)
            {
                defined += 1;
                hit += c as usize;
            }
        }
        println!(
            "{variance:?}: coverage {:.3} over {defined} intervals",
            hit as f64 / defined as f64
        );
    }
    Ok(())
}
