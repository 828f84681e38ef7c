//! Accuracy and cost metrics for count estimates.

use crate::error::{invalid, Error, Result};
use crate::estimators::Estimate;
use crate::numeric;

/// Screening seconds per image when verifying detector output, over the
/// seconds per image when counting from scratch.
pub const C_DIS: f64 = 9.0 / (25.5 + 9.0);

/// `(1/k) Σ |F(S_i) − F̂(S_i)| / F(Ω)`.
pub fn fractional_error(estimates: &[Estimate], truth: &[f64], f_omega: f64) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(invalid("need one truth value per estimate"));
    }
    if !(f_omega > 0.0) {
        return Err(invalid("fractional error is undefined when F(Ω) = 0"));
    }
    let total = numeric::sum(
        estimates
            .iter()
            .zip(truth)
            .map(|(e, &t)| (t - e.value).abs() / f_omega),
    );
    Ok(total / estimates.len() as f64)
}

/// Mean of `(high − low) / F(Ω)` over regions that received draws.
///
/// Fails with [`Error::UndefinedInterval`] when no region has an interval.
pub fn ci_width_normalized(estimates: &[Estimate], f_omega: f64) -> Result<f64> {
    if !(f_omega > 0.0) {
        return Err(invalid("normalized width is undefined when F(Ω) = 0"));
    }
    let widths: Vec<f64> = estimates
        .iter()
        .filter(|e| e.n_region > 0)
        .filter_map(|e| e.ci_width())
        .map(|w| w / f_omega)
        .collect();
    if widths.is_empty() {
        return Err(Error::UndefinedInterval);
    }
    Ok(numeric::sum(widths.iter().copied()) / widths.len() as f64)
}

/// Fraction of defined intervals that contain the truth; `None` if there are none.
pub fn coverage<'a, I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = (&'a Estimate, f64)>,
{
    let (hit, total) = pairs
        .into_iter()
        .filter_map(|(e, t)| e.covers(t))
        .fold((0usize, 0usize), |(h, n), c| (h + c as usize, n + 1));
    (total > 0).then(|| hit as f64 / total as f64)
}

/// Labeling effort in percent: `100 · c · n / |Ω|`.
pub fn labeling_effort(n_distinct: f64, c: f64, omega_size: usize) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid(format!("cost factor must be in (0, 1], got {c}")));
    }
    if omega_size == 0 {
        return Err(Error::EmptyScope);
    }
    Ok(100.0 * c * n_distinct / omega_size as f64)
}
