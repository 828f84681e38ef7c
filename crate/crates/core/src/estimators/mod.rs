//! Count estimators, intervals and the closed-form analytics of the joint estimator.
//!
//! Every sampling estimator here has the same shape: a scale `M` (the total
//! proposal mass of the scope), per-draw weights `w_i = f(s_i) / m(s_i)` and an
//! optional additive offset `H`. The estimate is `M · mean(w) + H`, and the
//! interval half-width is `z · M · σ̂ / √n` where `σ̂²` is the divisor-`n`
//! variance of the weights.

mod allocation;
mod analytics;
mod interval;
mod joint;
mod single;

pub use allocation::{allocation_objective, optimal_allocation, Allocation};
pub use analytics::{
    binomial_inverse_moment, debias, exact_bias, exact_variance, excess_variance_ratio,
    population_weight_variance,
};
pub use interval::{confidence_interval, normal_quantile, sigma_hat};
pub use joint::{estimate_kdiscount, estimate_kdiscount_cv, ControlVariate};
pub use single::{estimate_discount, estimate_is, estimate_mc};

use serde::{Deserialize, Serialize};

use crate::numeric;

/// Below this many in-region draws, [`VarianceSelection::Auto`] pools the
/// weight variance over the whole domain.
pub const POOLED_THRESHOLD: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "DIS")]
    Dis,
    #[serde(rename = "kDIS")]
    KDis,
    #[serde(rename = "kDIScv")]
    KDisCv,
    #[serde(rename = "CAL")]
    Cal,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Mc,
        Method::Is,
        Method::Dis,
        Method::KDis,
        Method::KDisCv,
        Method::Cal,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Mc => "MC",
            Method::Is => "IS",
            Method::Dis => "DIS",
            Method::KDis => "kDIS",
            Method::KDisCv => "kDIScv",
            Method::Cal => "CAL",
        }
    }

    /// Whether a screener only verifies detector output for this method.
    pub fn is_detector_based(&self) -> bool {
        matches!(self, Method::Dis | Method::KDis | Method::KDisCv)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| crate::error::invalid(format!("unknown method {s:?}")))
    }
}

/// Which weight variance feeds an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// `σ̂(S)` from the draws inside the region.
    PerRegion,
    /// `σ̂(Ω)` from every draw.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSelection {
    PerRegion,
    Pooled,
    /// Pooled when `n(S) < POOLED_THRESHOLD`, per-region otherwise.
    #[default]
    Auto,
}

impl VarianceSelection {
    pub fn resolve(self, n_region: usize) -> VarianceMode {
        match self {
            VarianceSelection::PerRegion => VarianceMode::PerRegion,
            VarianceSelection::Pooled => VarianceMode::Pooled,
            VarianceSelection::Auto if n_region < POOLED_THRESHOLD => VarianceMode::Pooled,
            VarianceSelection::Auto => VarianceMode::PerRegion,
        }
    }
}

impl std::str::FromStr for VarianceSelection {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "region" | "per_region" | "per-region" => Ok(VarianceSelection::PerRegion),
            "pooled" | "domain" => Ok(VarianceSelection::Pooled),
            "auto" => Ok(VarianceSelection::Auto),
            _ => Err(crate::error::invalid(format!(
                "unknown variance mode {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub alpha: f64,
    pub variance: VarianceSelection,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            variance: VarianceSelection::Auto,
        }
    }
}

impl EstimatorOptions {
    pub fn with_variance(variance: VarianceSelection) -> Self {
        Self {
            variance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub region: String,
    pub value: f64,
    /// `n(S)`: draws that landed in the region.
    pub n_region: usize,
    /// The weight standard deviation used for the interval.
    pub sigma_hat: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub alpha: f64,
    pub method: Method,
    pub empty_region: bool,
    pub variance_mode: VarianceMode,
    #[serde(default)]
    pub debiased: bool,
}

impl Estimate {
    /// The defined value for a region no draw landed in.
    pub(crate) fn empty(region: &str, method: Method, alpha: f64, mode: VarianceMode) -> Self {
        Self {
            region: region.to_string(),
            value: 0.0,
            n_region: 0,
            sigma_hat: 0.0,
            ci_low: None,
            ci_high: None,
            alpha,
            method,
            empty_region: true,
            variance_mode: mode,
            debiased: false,
        }
    }

    /// Deterministic estimate without sampling error (calibration baseline).
    pub(crate) fn point(region: &str, method: Method, value: f64) -> Self {
        Self {
            region: region.to_string(),
            value,
            n_region: 0,
            sigma_hat: 0.0,
            ci_low: None,
            ci_high: None,
            alpha: 0.0,
            method,
            empty_region: false,
            variance_mode: VarianceMode::PerRegion,
            debiased: false,
        }
    }

    pub fn ci_width(&self) -> Option<f64> {
        Some(self.ci_high? - self.ci_low?)
    }

    pub fn covers(&self, truth: f64) -> Option<bool> {
        Some(self.ci_low? <= truth && truth <= self.ci_high?)
    }
}

/// `scale · mean(weights) + offset`, with its interval.
///
/// `sigma` overrides the per-region weight deviation (pooled mode).
pub(crate) fn weighted_estimate(
    region: &str,
    method: Method,
    scale: f64,
    weights: &[f64],
    offset: f64,
    alpha: f64,
    sigma: Option<(f64, VarianceMode)>,
) -> crate::Result<Estimate> {
    let n = weights.len();
    if n == 0 {
        let mode = sigma.map(|(_, m)| m).unwrap_or(VarianceMode::PerRegion);
        return Ok(Estimate::empty(region, method, alpha, mode));
    }
    let mean = numeric::sum(weights.iter().copied()) / n as f64;
    let value = scale * mean + offset;
    let (sigma, mode) = match sigma {
        Some(s) => s,
        None => (
            sigma_hat(weights, value - offset, scale)?,
            VarianceMode::PerRegion,
        ),
    };
    let (lo, hi) = confidence_interval(value, alpha, scale, sigma, n)?;
    Ok(Estimate {
        region: region.to_string(),
        value,
        n_region: n,
        sigma_hat: sigma,
        ci_low: Some(lo),
        ci_high: Some(hi),
        alpha,
        method,
        empty_region: false,
        variance_mode: mode,
        debiased: false,
    })
}
