//! Estimate one region's total with uniform sampling, a covariate proposal
//! and detector-guided sampling, at the same labeling budget.

use discount::domain::Region;
use discount::estimators::{estimate_discount, estimate_is, estimate_mc};
use discount::evaluation::{generate_synthetic, SyntheticSpec};
use discount::sampler::{Proposal, RandomStream, Scope};

fn main() -> discount::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default())?;
    let (domain, oracle) = (&data.domain, data.oracle.as_ref().unwrap());
    let season = Region::all("season", domain)?;
    let truth = oracle.region_total(domain, &season)?;
    println!(
        "true total {truth:.0}, detector total {:.0}\n",
        domain.total_g()
    );

    let covariate = domain.covariates().unwrap();
    let uniform = Proposal::uniform(domain, Scope::Region(&season))?;
    let by_covariate = Proposal::from_weights(domain, Scope::Region(&season), &covariate)?;
    let by_detector = Proposal::detector(domain, Scope::Region(&season))?;

    let mut stream = RandomStream::new(42, 0);
    let n = 50;
    let mc = estimate_mc(
        domain,
        &season,
        &uniform.sample(n, &mut stream)?,
        oracle,
        0.05,
    )?;
    let draw = by_covariate.sample(n, &mut stream)?;
    let is = estimate_is(domain, &season, &draw, &by_covariate, oracle, 0.05)?;
    let dis = estimate_discount(
        domain,
        &season,
        &by_detector.sample(n, &mut stream)?,
        oracle,
        0.05,
    )?;

    for e in [mc, is, dis] {
        println!(
            "{:>4}  {:>9.0}  95% CI [{:>9.0}, {:>9.0}]  error {:>5.1}%",
            e.method,
            e.value,
            e.ci_low.unwrap(),
            e.ci_high.unwrap(),
            100.0 * (e.value - truth).abs() / truth
        );
    }
    Ok(())
}
