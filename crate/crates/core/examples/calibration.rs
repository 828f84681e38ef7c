//! Fit an isotonic calibration curve and use it as a baseline estimator.

use discount::calibration::{estimate_calibrated, fit_isotonic};
use discount::domain::Region;
use discount::evaluation::{generate_synthetic, SyntheticSpec};

fn main() -> discount::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default())?;
    let (domain, oracle) = (&data.domain, data.oracle.as_ref().unwrap());
    let pairs: Vec<(f64, f64)> = (0..domain.len())
        .step_by(25)
        .map(|i| (domain.unit(i).raw_g, oracle.get(i).unwrap()))
        .collect();
    let model = fit_isotonic(&pairs)?;
    println!("{:>10} {:>10}", "g", "fitted f");
    for (g, f) in model.breakpoints() {
        println!("{g:>10.1} {f:>10.1}");
    }
    let all = Region::all("season", domain)?;
    let e = estimate_calibrated(&all, &model, domain);
    println!(
        "\ncalibrated total {:.0}, detector total {:.0}, true total {:.0}",
        e.value,
        domain.total_g(),
        oracle.region_total(domain, &all)?
    );
    Ok(())
}
