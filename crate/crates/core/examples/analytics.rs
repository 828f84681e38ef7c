//! Exact bias and variance of the joint estimator, the excess variance it
//! pays for sharing draws, and bias correction.

use discount::estimators::{
    binomial_inverse_moment, exact_bias, exact_variance, excess_variance_ratio,
};

fn main() -> discount::Result<()> {
    let (f, p, n) = (5.0, 0.5, 2);
    println!("F(S) = {f}, p = {p}, n = {n}");
    println!("  bias  {}", exact_bias(f, p, n)?);
    println!("  mean  {}", f + exact_bias(f, p, n)?);
    println!(
        "  E[1/n(S) | n(S) > 0] = {:.4}",
        binomial_inverse_moment(n, p)?
    );
    println!(
        "  variance with G = 10, σ² = 0.25: {:.4}\n",
        exact_variance(10.0, 0.25, f, p, n)?
    );

    println!("excess variance over a fixed-size sample (p = 0.1):");
    println!("{:>6} {:>8}", "n·p", "ratio");
    for np in [1, 2, 3, 4, 5, 8, 12, 20, 50, 200] {
        let n = (np as f64 / 0.1).round() as u64;
        println!("{np:>6} {:>8.4}", excess_variance_ratio(n, 0.1)?);
    }
    Ok(())
}
