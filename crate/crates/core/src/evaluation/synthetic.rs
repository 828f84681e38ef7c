//! Synthetic counting domains with a known ground truth.
//!
//! True counts follow a smooth intensity curve (a seasonal bump over the row
//! order, or an exponential decay away from an epicenter) multiplied by
//! mean-one log-normal day-to-day variation. The detector sees the true count
//! through multiplicative Gaussian noise, occasional complete misses and
//! occasional false positives. The covariate column is the intensity curve
//! itself, optionally with its own log-normal noise: it knows the shape of the
//! season but nothing about individual units.
//!
//! The detector's response is sublinear (`A·(f/A)^γ` before noise), so it
//! undercounts dense units in a way a calibration curve can learn.

use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Domain, Unit};
use crate::error::{invalid, Result};
use crate::sampler::RandomStream;

const SYNTHETIC_STREAM: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    /// `floor + exp(−½((t − center)/width)²)` with `t ∈ [0, 1)` the row position.
    Seasonal { center: f64, width: f64, floor: f64 },
    /// `exp(−decay · t)`, rows ordered by distance from the epicenter.
    Annulus { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorNoise {
    /// Exponent of the detector's response curve `A·(f/A)^γ`; below one the
    /// detector undercounts dense units.
    pub response: f64,
    /// Standard deviation of the multiplicative factor `1 + σ·ε`.
    pub multiplicative: f64,
    pub false_positive_rate: f64,
    /// False positives add up to this fraction of the amplitude.
    pub false_positive_scale: f64,
    /// Probability that a unit's objects are missed entirely.
    pub miss_rate: f64,
}

impl DetectorNoise {
    pub fn none() -> Self {
        Self {
            response: 1.0,
            multiplicative: 0.0,
            false_positive_rate: 0.0,
            false_positive_scale: 0.0,
            miss_rate: 0.0,
        }
    }
}

/// Missing fields in JSON take their [`Default`] values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub units: usize,
    pub shape: Shape,
    pub amplitude: f64,
    /// Log-normal σ of true counts around the intensity curve.
    pub dispersion: f64,
    pub detector: DetectorNoise,
    /// Log-normal σ of the covariate around the intensity curve.
    pub covariate_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// One roosting season: a mid-season bump over 365 days, 20% detector noise,
    /// response exponent 0.65.
    fn default() -> Self {
        Self {
            units: 365,
            shape: Shape::Seasonal {
                center: 0.55,
                width: 0.12,
                floor: 0.02,
            },
            amplitude: 1000.0,
            dispersion: 0.5,
            detector: DetectorNoise {
                response: 0.65,
                multiplicative: 0.2,
                false_positive_rate: 0.1,
                false_positive_scale: 0.05,
                miss_rate: 0.0,
            },
            covariate_noise: 0.0,
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        let rate = |x: f64| (0.0..=1.0).contains(&x);
        let d = &self.detector;
        let shape_ok = match self.shape {
            Shape::Seasonal {
                center,
                width,
                floor,
            } => center.is_finite() && width > 0.0 && width.is_finite() && nonneg(floor),
            Shape::Annulus { decay } => nonneg(decay),
        };
        if self.units == 0
            || !shape_ok
            || !nonneg(self.amplitude)
            || !nonneg(self.dispersion)
            || !nonneg(self.covariate_noise)
            || !(d.response > 0.0 && d.response.is_finite())
            || !nonneg(d.multiplicative)
            || !nonneg(d.false_positive_scale)
            || !rate(d.false_positive_rate)
            || !rate(d.miss_rate)
        {
            return Err(invalid(format!("invalid synthetic spec: {self:?}")));
        }
        Ok(())
    }

    fn intensity(&self, i: usize) -> f64 {
        let t = i as f64 / self.units as f64;
        let shape = match self.shape {
            Shape::Seasonal {
                center,
                width,
                floor,
            } => {
                let z = (t - center) / width;
                floor + (-0.5 * z * z).exp()
            }
            Shape::Annulus { decay } => (-decay * t).exp(),
        };
        self.amplitude * shape
    }
}

fn mean_one_lognormal(sigma: f64) -> LogNormal<f64> {
    LogNormal::new(-0.5 * sigma * sigma, sigma).expect("finite sigma")
}

/// Generates a domain whose units carry oracle counts and a covariate.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut stream = RandomStream::new(spec.seed, SYNTHETIC_STREAM);
    let process = mean_one_lognormal(spec.dispersion);
    let cov_noise = mean_one_lognormal(spec.covariate_noise);
    let det = spec.detector;
    let width = spec.units.to_string().len();

    let units = (0..spec.units)
        .map(|i| {
            let rng = stream.rng_mut();
            // Fixed number of variates per unit keeps streams aligned across specs.
            let z: f64 = process.sample(rng);
            let eps: f64 = StandardNormal.sample(rng);
            let miss_u = stream.next_f64();
            let fp_u = stream.next_f64();
            let fp_mag = stream.next_f64();
            let cov_z: f64 = cov_noise.sample(stream.rng_mut());

            let lambda = spec.intensity(i);
            let f = lambda * z;
            let seen = if f > 0.0 && det.response != 1.0 {
                spec.amplitude * (f / spec.amplitude).powf(det.response)
            } else {
                f
            };
            let mut g = seen * (1.0 + det.multiplicative * eps).max(0.0);
            if miss_u < det.miss_rate {
                g = 0.0;
            }
            if fp_u < det.false_positive_rate {
                g += det.false_positive_scale * spec.amplitude * fp_mag;
            }
            Unit::new(format!("u{i:0width$}"), g)
                .with_oracle(f)
                .with_covariate(lambda * cov_z)
        })
        .collect();
    let domain = Domain::new(units)?;
    let oracle = domain.oracle_labels();
    Ok(Dataset { domain, oracle })
}
