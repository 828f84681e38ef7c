//! Repeated seeded trials of one estimator and their aggregates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{self, C_DIS};
use crate::calibration::{build_control_variate, estimate_calibrated, fit_isotonic};
use crate::domain::{Domain, LabelStore, Region};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    estimate_discount, estimate_is, estimate_kdiscount, estimate_kdiscount_cv, estimate_mc,
    Estimate, EstimatorOptions, Method,
};
use crate::numeric;
use crate::sampler::{Proposal, RandomStream, Scope, RNG_ALGORITHM};

/// Labeled units drawn uniformly from the calibration source each trial.
pub const CALIBRATION_SAMPLES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub method: Method,
    /// Total draws per trial. Single-region methods split it evenly over regions.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trial `t` uses stream `stream_offset + t`.
    pub stream_offset: u64,
    pub options: EstimatorOptions,
    /// Labeling cost factor `c`. Defaults to [`C_DIS`] for detector-based methods.
    pub cost_factor: Option<f64>,
    pub calibration_samples: usize,
}

impl TrialConfig {
    pub fn new(method: Method, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            method,
            n,
            trials,
            seed,
            stream_offset: 0,
            options: EstimatorOptions::default(),
            cost_factor: None,
            calibration_samples: CALIBRATION_SAMPLES,
        }
    }

    pub fn cost(&self) -> f64 {
        self.cost_factor
            .unwrap_or(if self.method.is_detector_based() {
                C_DIS
            } else {
                1.0
            })
    }
}

/// Labeled data the calibration model is fit on.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationSource<'a> {
    pub domain: &'a Domain,
    pub labels: &'a LabelStore,
}

/// One trial as persisted in `trials.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub rng: String,
    pub error: f64,
    /// Normalized mean CI width; absent when no region received draws.
    pub ci_width: Option<f64>,
    pub covered: usize,
    pub intervals: usize,
    /// Distinct units of the evaluated domain that needed a label.
    pub distinct: usize,
    pub estimates: Vec<Estimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_error: f64,
    /// `std(error) / √trials`.
    pub error_se: f64,
    pub mean_ci_width: Option<f64>,
    pub ci_width_se: Option<f64>,
    pub coverage: Option<f64>,
    pub mean_distinct: f64,
    pub effort_pct: f64,
}

impl Summary {
    /// Aggregates records in order; the result depends only on the records.
    pub fn from_records(records: &[TrialRecord], cost: f64, omega_size: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid("no trials to summarize"));
        }
        let errors: Vec<f64> = records.iter().map(|r| r.error).collect();
        let (mean_error, error_se) = mean_and_se(&errors);
        let widths: Vec<f64> = records.iter().filter_map(|r| r.ci_width).collect();
        let (mean_ci_width, ci_width_se) = if widths.is_empty() {
            (None, None)
        } else {
            let (m, se) = mean_and_se(&widths);
            (Some(m), Some(se))
        };
        let intervals: usize = records.iter().map(|r| r.intervals).sum();
        let covered: usize = records.iter().map(|r| r.covered).sum();
        let coverage = (intervals > 0).then(|| covered as f64 / intervals as f64);
        let mean_distinct =
            numeric::sum(records.iter().map(|r| r.distinct as f64)) / records.len() as f64;
        Ok(Self {
            mean_error,
            error_se,
            mean_ci_width,
            ci_width_se,
            coverage,
            mean_distinct,
            effort_pct: metrics::labeling_effort(mean_distinct, cost, omega_size)?,
        })
    }

    /// Half-width of the ±1.96·SE band around the mean error.
    pub fn error_band(&self) -> f64 {
        1.96 * self.error_se
    }
}

/// Mean and standard error with the `trials − 1` divisor.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = numeric::sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = numeric::sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config: TrialConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

/// Precomputed per-configuration state shared by all trials.
struct Harness<'a> {
    domain: &'a Domain,
    oracle: &'a LabelStore,
    regions: &'a [Region],
    config: &'a TrialConfig,
    calibration: CalibrationSource<'a>,
    proposals: Vec<Proposal>,
    truth: Vec<f64>,
    f_omega: f64,
    budgets: Vec<usize>,
}

impl<'a> Harness<'a> {
    fn new(
        domain: &'a Domain,
        oracle: &'a LabelStore,
        regions: &'a [Region],
        config: &'a TrialConfig,
        calibration: Option<CalibrationSource<'a>>,
    ) -> Result<Self> {
        if regions.is_empty() {
            return Err(invalid("at least one region is required"));
        }
        if config.trials == 0 || config.n == 0 {
            return Err(invalid("trials and n must be positive"));
        }
        if oracle.len() != domain.len() || oracle.capacity() != domain.len() {
            let missing = (0..domain.len())
                .find(|&i| !oracle.contains(i))
                .unwrap_or(0);
            return Err(Error::Unlabeled(domain.unit(missing).id.clone()));
        }
        let truth = regions
            .iter()
            .map(|r| oracle.region_total(domain, r))
            .collect::<Result<Vec<_>>>()?;
        let f_omega = numeric::sum((0..domain.len()).filter_map(|i| oracle.get(i)));

        let k = regions.len();
        let split = matches!(config.method, Method::Mc | Method::Is | Method::Dis);
        if split && config.n < k {
            return Err(invalid(format!(
                "n = {} cannot be split over {k} regions",
                config.n
            )));
        }
        let budgets = (0..k)
            .map(|i| config.n / k + usize::from(i < config.n % k))
            .collect();

        let proposals = match config.method {
            Method::Mc => regions
                .iter()
                .map(|r| Proposal::uniform(domain, Scope::Region(r)))
                .collect::<Result<_>>()?,
            Method::Dis => regions
                .iter()
                .map(|r| Proposal::detector(domain, Scope::Region(r)))
                .collect::<Result<_>>()?,
            Method::Is => {
                let cov = domain
                    .covariates()
                    .ok_or_else(|| invalid("IS needs a covariate for every unit"))?;
                // Same smoothing as the detector so no unit has zero mass.
                let eps = domain.smoothing();
                let cov: Vec<f64> = cov.iter().map(|c| c.max(0.0) + eps).collect();
                regions
                    .iter()
                    .map(|r| Proposal::from_weights(domain, Scope::Region(r), &cov))
                    .collect::<Result<_>>()?
            }
            Method::KDis | Method::KDisCv => vec![Proposal::detector(domain, Scope::Domain)?],
            Method::Cal => Vec::new(),
        };

        let calibration = calibration.unwrap_or(CalibrationSource {
            domain,
            labels: oracle,
        });
        if matches!(config.method, Method::KDisCv | Method::Cal) {
            if config.calibration_samples == 0 {
                return Err(invalid("calibration needs at least one sample"));
            }
            if calibration.labels.len() != calibration.domain.len() {
                return Err(invalid("calibration source must be fully labeled"));
            }
        }
        Ok(Self {
            domain,
            oracle,
            regions,
            config,
            calibration,
            proposals,
            truth,
            f_omega,
            budgets,
        })
    }

    fn calibration_shares_domain(&self) -> bool {
        std::ptr::eq(self.calibration.domain, self.domain)
    }

    /// Fits the isotonic model on distinct uniformly chosen calibration units.
    fn fit_model(
        &self,
        stream: &mut RandomStream,
    ) -> Result<(crate::calibration::IsotonicModel, Vec<usize>)> {
        let src = self.calibration;
        let m = self.config.calibration_samples.min(src.domain.len());
        // Partial Fisher-Yates.
        let mut idx: Vec<usize> = (0..src.domain.len()).collect();
        for i in 0..m {
            let j = i + stream.next_below((idx.len() - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(m);
        let pairs: Vec<(f64, f64)> = idx
            .iter()
            .map(|&i| (src.domain.unit(i).raw_g, src.labels.get(i).unwrap_or(0.0)))
            .collect();
        Ok((fit_isotonic(&pairs)?, idx))
    }

    fn run_one(&self, trial: usize) -> Result<TrialRecord> {
        let cfg = self.config;
        let stream_id = cfg.stream_offset + trial as u64;
        let mut stream = RandomStream::new(cfg.seed, stream_id);
        let (d, labels, alpha) = (self.domain, self.oracle, cfg.options.alpha);
        let mut labeled: Vec<usize> = Vec::new();

        let estimates = match cfg.method {
            Method::Mc | Method::Is | Method::Dis => self
                .regions
                .iter()
                .zip(&self.proposals)
                .zip(&self.budgets)
                .map(|((region, proposal), &n)| {
                    let draw = proposal.sample(n, &mut stream)?;
                    labeled.extend_from_slice(draw.distinct());
                    match cfg.method {
                        Method::Mc => estimate_mc(d, region, &draw, labels, alpha),
                        Method::Is => estimate_is(d, region, &draw, proposal, labels, alpha),
                        _ => estimate_discount(d, region, &draw, labels, alpha),
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            Method::KDis => {
                let draw = self.proposals[0].sample(cfg.n, &mut stream)?;
                labeled.extend_from_slice(draw.distinct());
                estimate_kdiscount(d, self.regions, &draw, labels, cfg.options)?
            }
            Method::KDisCv => {
                let (model, calib) = self.fit_model(&mut stream)?;
                if self.calibration_shares_domain() {
                    labeled.extend(calib);
                }
                let cv = build_control_variate(&model, d, self.regions)?;
                let draw = self.proposals[0].sample(cfg.n, &mut stream)?;
                labeled.extend_from_slice(draw.distinct());
                estimate_kdiscount_cv(d, self.regions, &draw, labels, &cv, cfg.options)?
            }
            Method::Cal => {
                let (model, calib) = self.fit_model(&mut stream)?;
                if self.calibration_shares_domain() {
                    labeled.extend(calib);
                }
                self.regions
                    .iter()
                    .map(|r| estimate_calibrated(r, &model, d))
                    .collect()
            }
        };
        labeled.sort_unstable();
        labeled.dedup();

        let error = metrics::fractional_error(&estimates, &self.truth, self.f_omega)?;
        let ci_width = match metrics::ci_width_normalized(&estimates, self.f_omega) {
            Ok(w) => Some(w),
            Err(Error::UndefinedInterval) => None,
            Err(e) => return Err(e),
        };
        let outcomes: Vec<bool> = estimates
            .iter()
            .zip(&self.truth)
            .filter_map(|(e, &t)| e.covers(t))
            .collect();
        Ok(TrialRecord {
            method: cfg.method,
            n: cfg.n,
            trial,
            seed: cfg.seed,
            stream_id,
            rng: RNG_ALGORITHM.to_string(),
            error,
            ci_width,
            covered: outcomes.iter().filter(|&&c| c).count(),
            intervals: outcomes.len(),
            distinct: labeled.len(),
            estimates,
        })
    }
}

/// Runs `config.trials` independent trials in parallel.
///
/// Trial `t` draws from `RandomStream::new(seed, stream_offset + t)`, so the
/// result is the same regardless of thread count. Calibration-based methods
/// fit their model each trial on labeled units sampled from `calibration`,
/// or from the evaluated domain itself when it is `None`.
pub fn run_trials(
    domain: &Domain,
    oracle: &LabelStore,
    regions: &[Region],
    config: &TrialConfig,
    calibration: Option<CalibrationSource<'_>>,
) -> Result<TrialResult> {
    let harness = Harness::new(domain, oracle, regions, config, calibration)?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| harness.run_one(t))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::from_records(&records, config.cost(), domain.len())?;
    Ok(TrialResult {
        config: *config,
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RegionSpec;
    use crate::domain::Unit;
    use crate::evaluation::{generate_synthetic, make_regions, SyntheticSpec};

    fn exact_domain() -> (Domain, LabelStore) {
        let units = (0..20)
            .map(|i| Unit::new(format!("u{i}"), (i % 5 + 1) as f64).with_oracle((i % 5 + 1) as f64))
            .collect();
        let d = Domain::with_smoothing(units, 1e-12).unwrap();
        let o = d.oracle_labels().unwrap();
        (d, o)
    }

    #[test]
    fn dis_on_perfect_detector_is_exact() {
        let (d, o) = exact_domain();
        let regions = make_regions(&d, &RegionSpec::partition(vec![10, 10])).unwrap();
        for method in [Method::Dis, Method::KDis] {
            let r =
                run_trials(&d, &o, &regions, &TrialConfig::new(method, 40, 20, 3), None).unwrap();
            assert!(r.records.iter().all(|t| t.error < 1e-12), "{method}");
        }
    }

    #[test]
    fn deterministic_and_recomputable() {
        let ds = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let o = ds.oracle.unwrap();
        let regions = make_regions(&ds.domain, &RegionSpec::prefix(vec![100, 365])).unwrap();
        for method in Method::ALL {
            let cfg = TrialConfig::new(method, 20, 30, 9);
            let a = run_trials(&ds.domain, &o, &regions, &cfg, None).unwrap();
            let b = run_trials(&ds.domain, &o, &regions, &cfg, None).unwrap();
            assert_eq!(a, b);
            let again = Summary::from_records(&a.records, cfg.cost(), ds.domain.len()).unwrap();
            assert_eq!(again, a.summary);
        }
    }

    #[test]
    fn missing_oracle_is_an_error() {
        let d = Domain::new(vec![Unit::new("a", 1.0), Unit::new("b", 1.0)]).unwrap();
        let mut o = LabelStore::new(2);
        o.insert(&d, 0, 1.0).unwrap();
        let regions = vec![Region::all("all", &d).unwrap()];
        let cfg = TrialConfig::new(Method::Dis, 4, 2, 1);
        assert!(matches!(
            run_trials(&d, &o, &regions, &cfg, None),
            Err(Error::Unlabeled(_))
        ));
    }

    #[test]
    fn standard_error_uses_sample_deviation() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }
}
