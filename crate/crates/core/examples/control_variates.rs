//! Narrow intervals with a calibrated-detector control variate.
//!
//! Each repetition fits a calibration curve on 15 labeled units from last
//! season and uses it as `h(s)`. The joint estimator then only has to
//! estimate `Σ (f − h)`, whose weights vary less than `f / g`.

use discount::calibration::{build_control_variate, fit_isotonic};
use discount::domain::Region;
use discount::estimators::{estimate_kdiscount, estimate_kdiscount_cv, EstimatorOptions};
use discount::evaluation::{generate_synthetic, SyntheticSpec};
use discount::sampler::{sample_proportional, sample_uniform, RandomStream, Scope};

fn main() -> discount::Result<()> {
    let spec = SyntheticSpec::default();
    let this_year = generate_synthetic(&spec)?;
    let last_year = generate_synthetic(&spec.with_seed(spec.seed + 1))?;
    let (domain, oracle) = (&this_year.domain, this_year.oracle.as_ref().unwrap());
    let prev = last_year.oracle.as_ref().unwrap();
    let regions = vec![Region::all("season", domain)?];
    let truth = oracle.region_total(domain, &regions[0])?;

    let opts = EstimatorOptions::default();
    let reps = 500;
    let (mut plain, mut with_cv) = (Vec::new(), Vec::new());
    for rep in 0..reps {
        let mut stream = RandomStream::new(11, rep);
        let picks = sample_uniform(&last_year.domain, Scope::Domain, 15, &mut stream)?;
        let pairs: Vec<(f64, f64)> = picks
            .distinct()
            .iter()
            .map(|&i| (last_year.domain.unit(i).raw_g, prev.get(i).unwrap()))
            .collect();
        let cv = build_control_variate(&fit_isotonic(&pairs)?, domain, &regions)?;

        let draw = sample_proportional(domain, Scope::Domain, 50, &mut stream)?;
        plain.push(estimate_kdiscount(domain, &regions, &draw, oracle, opts)?.remove(0));
        with_cv.push(estimate_kdiscount_cv(domain, &regions, &draw, oracle, &cv, opts)?.remove(0));
    }

    println!("true total {truth:.0}; {reps} samples of 50 draws\n");
    println!("{:<7} {:>12} {:>10}", "", "mean width", "coverage");
    for (name, runs) in [("kDIS", &plain), ("kDIScv", &with_cv)] {
        let width: f64 = runs.iter().map(|e| e.ci_width().unwrap()).sum::<f64>() / reps as f64;
        let covered = runs
            .iter()
            .filter(|e| e.covers(truth) == Some(true))
            .count();
        println!(
            "{name:<7} {width:>12.0} {:>10.3}",
            covered as f64 / reps as f64
        );
    }
    Ok(())
}
