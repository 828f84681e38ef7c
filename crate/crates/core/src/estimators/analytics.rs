//! Closed-form bias and variance of the joint estimator.
//!
//! With `n` draws from the whole domain, the number of draws landing in `S` is
//! `n(S) ~ Binomial(n, p)` with `p = G(S)/G(Ω)`. Conditioned on `n(S) = m > 0`
//! the estimate is an ordinary detector-weighted mean of `m` draws, which gives
//! the formulas below.

use crate::domain::{Domain, LabelStore, Region};
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};

use super::Estimate;

fn check_probability(p: f64, allow_one: bool) -> Result<()> {
    let ok = p > 0.0 && (p < 1.0 || (allow_one && p == 1.0));
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("region probability out of range: {p}")))
    }
}

fn check_draws(n: u64) -> Result<()> {
    if n == 0 {
        Err(invalid("number of draws must be at least 1"))
    } else {
        Ok(())
    }
}

/// `E[F̂(S)] − F(S) = −F(S) · (1 − p)^n`.
pub fn exact_bias(region_total: f64, p: f64, n: u64) -> Result<f64> {
    check_probability(p, true)?;
    check_draws(n)?;
    Ok(-region_total * miss_probability(p, n))
}

/// `(1 − p)^n`, the probability that no draw lands in the region.
fn miss_probability(p: f64, n: u64) -> f64 {
    if p == 1.0 {
        0.0
    } else {
        (n as f64 * (-p).ln_1p()).exp()
    }
}

/// `Σ_{j=1..n} (1/j) · Binomial(j; n, p)`, which equals
/// `Pr[n(S) > 0] · E[1/n(S) | n(S) > 0]`.
///
/// Terms are evaluated in log space so large `n` does not overflow.
pub fn binomial_inverse_moment(n: u64, p: f64) -> Result<f64> {
    check_probability(p, true)?;
    check_draws(n)?;
    if p == 1.0 {
        return Ok(1.0 / n as f64);
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut ln_choose = 0.0;
    let mut acc = CompensatedSum::new();
    for j in 1..=n {
        ln_choose += ((n - j + 1) as f64).ln() - (j as f64).ln();
        let ln_term = ln_choose + j as f64 * ln_p + (n - j) as f64 * ln_q;
        acc.add(ln_term.exp() / j as f64);
    }
    Ok(acc.value())
}

/// `G² σ² · binomial_inverse_moment(n, p) + F² · rⁿ (1 − rⁿ)` with `r = 1 − p`.
pub fn exact_variance(
    region_mass: f64,
    weight_variance: f64,
    region_total: f64,
    p: f64,
    n: u64,
) -> Result<f64> {
    if !(weight_variance >= 0.0) {
        return Err(invalid(format!(
            "weight variance must be nonnegative, got {weight_variance}"
        )));
    }
    let moment = binomial_inverse_moment(n, p)?;
    let miss = miss_probability(p, n);
    Ok(region_mass * region_mass * weight_variance * moment
        + region_total * region_total * miss * (1.0 - miss))
}

/// Ratio of the joint estimator's first variance term to that of a
/// single-region estimator given exactly `n·p` draws:
/// `binomial_inverse_moment(n, p) / (1 / (n p))`.
pub fn excess_variance_ratio(n: u64, p: f64) -> Result<f64> {
    check_probability(p, false)?;
    Ok(binomial_inverse_moment(n, p)? * n as f64 * p)
}

/// `σ²(S)`: variance of `f/g` under draws proportional to `g` within `S`.
pub fn population_weight_variance(
    domain: &Domain,
    region: &Region,
    labels: &LabelStore,
) -> Result<f64> {
    let mass = domain.region_mass(region)?.mass;
    let total = labels.region_total(domain, region)?;
    let mean = total / mass;
    let g = domain.g();
    Ok(numeric::sum(region.members().iter().map(|&i| {
        let w = labels.get(i).unwrap_or(0.0) / g[i];
        g[i] / mass * (w - mean) * (w - mean)
    })))
}

/// Divides an estimate (and its interval) by `u = 1 − (1 − p)^n`.
///
/// This removes the unconditional bias at the cost of inflating the
/// conditional variance by `1/u²`.
pub fn debias(estimate: &Estimate, p: f64, n: u64) -> Result<Estimate> {
    if estimate.n_region == 0 {
        return Err(Error::UndefinedInterval);
    }
    check_probability(p, true)?;
    check_draws(n)?;
    let u = 1.0 - miss_probability(p, n);
    let mut out = estimate.clone();
    out.value /= u;
    out.ci_low = estimate.ci_low.map(|x| x / u);
    out.ci_high = estimate.ci_high.map(|x| x / u);
    out.sigma_hat /= u;
    out.debiased = true;
    Ok(out)
}
