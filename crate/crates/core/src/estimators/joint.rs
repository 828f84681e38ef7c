//! Joint estimation of many regions from one detector-proportional sample
//! over the whole domain (post-stratification), with optional control variates.

use std::collections::BTreeMap;

use crate::domain::{Domain, LabelStore, Region};
use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::sampler::{SampleDraw, SamplingLaw, DOMAIN_SCOPE};

use super::single::label_of;
use super::{sigma_hat, weighted_estimate, Estimate, EstimatorOptions, Method, VarianceMode};

/// A function `h` on units with exactly known region sums `H(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVariate {
    h: Vec<Option<f64>>,
    totals: BTreeMap<String, f64>,
}

impl ControlVariate {
    /// Computes `H(S)` for every region from `h` (indexed by unit).
    pub fn new(domain: &Domain, h: Vec<Option<f64>>, regions: &[Region]) -> Result<Self> {
        if h.len() != domain.len() {
            return Err(invalid("control variate must be indexed by domain unit"));
        }
        if h.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("control variate values must be finite"));
        }
        let mut totals = BTreeMap::new();
        for region in regions {
            let values = region
                .members()
                .iter()
                .map(|&i| {
                    h[i].ok_or_else(|| Error::MissingControlVariate(domain.unit(i).id.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            totals.insert(region.name().to_string(), numeric::sum(values));
        }
        Ok(Self { h, totals })
    }

    /// Like [`ControlVariate::new`] but with caller-supplied totals, which must
    /// agree with the sums of `h` to 1e-10 relative.
    pub fn with_totals(
        domain: &Domain,
        h: Vec<Option<f64>>,
        regions: &[Region],
        totals: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let cv = Self::new(domain, h, regions)?;
        for (name, &computed) in &cv.totals {
            let given = *totals
                .get(name)
                .ok_or_else(|| Error::UnknownRegion(name.clone()))?;
            let tol = 1e-10 * computed.abs().max(given.abs()).max(1.0);
            if (given - computed).abs() > tol {
                return Err(invalid(format!(
                    "H({name}) = {given} disagrees with the sum of h ({computed})"
                )));
            }
        }
        Ok(cv)
    }

    pub fn h(&self, idx: usize) -> Option<f64> {
        self.h.get(idx).copied().flatten()
    }

    pub fn total(&self, region: &str) -> Option<f64> {
        self.totals.get(region).copied()
    }

    pub fn totals(&self) -> &BTreeMap<String, f64> {
        &self.totals
    }
}

/// Per-region `G(S) · w̄(S)`, or 0 when no draw lands in `S`.
///
/// `draw` must come from the whole domain proportional to `g`. A draw counts
/// toward every region containing it.
pub fn estimate_kdiscount(
    domain: &Domain,
    regions: &[Region],
    draw: &SampleDraw,
    labels: &LabelStore,
    options: EstimatorOptions,
) -> Result<Vec<Estimate>> {
    joint(domain, regions, draw, labels, None, options)
}

/// Per-region `G(S) · w̄_h(S) + H(S)` with `w_h = (f − h) / g`, or 0 when
/// no draw lands in `S`.
pub fn estimate_kdiscount_cv(
    domain: &Domain,
    regions: &[Region],
    draw: &SampleDraw,
    labels: &LabelStore,
    cv: &ControlVariate,
    options: EstimatorOptions,
) -> Result<Vec<Estimate>> {
    joint(domain, regions, draw, labels, Some(cv), options)
}

fn joint(
    domain: &Domain,
    regions: &[Region],
    draw: &SampleDraw,
    labels: &LabelStore,
    cv: Option<&ControlVariate>,
    options: EstimatorOptions,
) -> Result<Vec<Estimate>> {
    if draw.source.scope != DOMAIN_SCOPE || draw.source.law != SamplingLaw::Detector {
        return Err(Error::SourceMismatch {
            expected: format!("Detector draws over {DOMAIN_SCOPE}"),
            found: draw.source.to_string(),
        });
    }
    let method = if cv.is_some() {
        Method::KDisCv
    } else {
        Method::KDis
    };
    let g = domain.g();
    let weights = draw
        .draws
        .iter()
        .map(|&i| {
            let f = label_of(domain, labels, i)?;
            let h = match cv {
                Some(cv) => cv
                    .h(i)
                    .ok_or_else(|| Error::MissingControlVariate(domain.unit(i).id.clone()))?,
                None => 0.0,
            };
            Ok((f - h) / g[i])
        })
        .collect::<Result<Vec<f64>>>()?;

    // σ̂(Ω), centered on the whole-domain weight mean.
    let pooled_sigma = if weights.is_empty() {
        0.0
    } else {
        let center = numeric::sum(weights.iter().copied()) / weights.len() as f64;
        sigma_hat(&weights, center, 1.0)?
    };

    regions
        .iter()
        .map(|region| {
            let mask = region.mask(domain.len());
            let in_region: Vec<f64> = draw
                .draws
                .iter()
                .zip(&weights)
                .filter(|(&i, _)| mask[i])
                .map(|(_, &w)| w)
                .collect();
            let mass = domain.region_mass(region)?.mass;
            let offset = match cv {
                Some(cv) => cv
                    .total(region.name())
                    .ok_or_else(|| Error::UnknownRegion(region.name().to_string()))?,
                None => 0.0,
            };
            let mode = options.variance.resolve(in_region.len());
            let sigma = match mode {
                VarianceMode::Pooled => Some((pooled_sigma, VarianceMode::Pooled)),
                VarianceMode::PerRegion => None,
            };
            if in_region.is_empty() {
                return Ok(Estimate::empty(region.name(), method, options.alpha, mode));
            }
            weighted_estimate(
                region.name(),
                method,
                mass,
                &in_region,
                offset,
                options.alpha,
                sigma,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Unit;
    use crate::estimators::VarianceSelection;
    use crate::sampler::{sample_proportional, DrawSource, RandomStream, Scope};

    fn setup(g: &[f64], f: &[f64]) -> (Domain, LabelStore) {
        let units = g
            .iter()
            .enumerate()
            .map(|(i, &g)| Unit::new(format!("u{i}"), g))
            .collect();
        let d = Domain::with_smoothing(units, 1e-300).unwrap();
        let mut labels = LabelStore::new(d.len());
        for (i, &f) in f.iter().enumerate() {
            labels.insert(&d, i, f).unwrap();
        }
        (d, labels)
    }

    fn whole(draws: &[usize]) -> SampleDraw {
        SampleDraw::new(
            draws.to_vec(),
            DrawSource {
                scope: DOMAIN_SCOPE.into(),
                law: SamplingLaw::Detector,
            },
        )
    }

    #[test]
    fn empty_region_is_zero() {
        let (d, labels) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let s = Region::from_indices("a", vec![0], &d).unwrap();
        let est = estimate_kdiscount(
            &d,
            &[s],
            &whole(&[1, 1]),
            &labels,
            EstimatorOptions::default(),
        )
        .unwrap();
        assert!(est[0].empty_region);
        assert_eq!(est[0].value, 0.0);
        assert_eq!(est[0].ci_low, None);
    }

    #[test]
    fn two_unit_enumeration() {
        let (d, labels) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let s = Region::from_indices("a", vec![0], &d).unwrap();
        let mut mean = 0.0;
        let mut cond = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let e = &estimate_kdiscount(
                    &d,
                    std::slice::from_ref(&s),
                    &whole(&[a, b]),
                    &labels,
                    EstimatorOptions::default(),
                )
                .unwrap()[0];
                mean += 0.25 * e.value;
                if e.n_region > 0 {
                    cond += e.value / 3.0;
                }
            }
        }
        assert!((mean - 3.75).abs() < 1e-12);
        assert!((cond - 5.0).abs() < 1e-12);
    }

    #[test]
    fn partition_with_perfect_detector() {
        let g = [2.0, 1.0, 4.0, 0.5, 3.0];
        let (d, labels) = setup(&g, &g);
        let regions = vec![
            Region::from_indices("p1", vec![0, 1], &d).unwrap(),
            Region::from_indices("p2", vec![2, 3, 4], &d).unwrap(),
        ];
        let draw =
            sample_proportional(&d, Scope::Domain, 20, &mut RandomStream::new(2, 2)).unwrap();
        for e in
            estimate_kdiscount(&d, &regions, &draw, &labels, EstimatorOptions::default()).unwrap()
        {
            let r = regions.iter().find(|r| r.name() == e.region).unwrap();
            assert_eq!(e.value, d.region_mass(r).unwrap().mass);
        }
    }

    #[test]
    fn cv_cases() {
        let (d, labels) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let all = vec![Region::all("all", &d).unwrap()];
        let cv = ControlVariate::new(&d, vec![Some(4.0), Some(4.0)], &all).unwrap();
        let opts = EstimatorOptions::default();
        let va =
            estimate_kdiscount_cv(&d, &all, &whole(&[0]), &labels, &cv, opts).unwrap()[0].value;
        let vb =
            estimate_kdiscount_cv(&d, &all, &whole(&[1]), &labels, &cv, opts).unwrap()[0].value;
        assert_eq!((va, vb), (10.0, 6.0));
        assert_eq!(0.5 * va + 0.5 * vb, 8.0);

        let perfect = ControlVariate::new(&d, vec![Some(5.0), Some(3.0)], &all).unwrap();
        let e = &estimate_kdiscount_cv(&d, &all, &whole(&[1, 1, 0]), &labels, &perfect, opts)
            .unwrap()[0];
        assert_eq!(e.value, 8.0);
        assert_eq!(e.sigma_hat, 0.0);
    }

    #[test]
    fn zero_cv_reduces_to_plain() {
        let (d, labels) = setup(&[1.0, 3.0, 2.0, 0.7], &[2.0, 1.0, 5.0, 0.0]);
        let regions = vec![
            Region::from_indices("x", vec![0, 2], &d).unwrap(),
            Region::from_indices("y", vec![1, 2, 3], &d).unwrap(),
        ];
        let cv = ControlVariate::new(&d, vec![Some(0.0); 4], &regions).unwrap();
        let draw =
            sample_proportional(&d, Scope::Domain, 40, &mut RandomStream::new(6, 1)).unwrap();
        for variance in [VarianceSelection::PerRegion, VarianceSelection::Pooled] {
            let opts = EstimatorOptions::with_variance(variance);
            let a = estimate_kdiscount(&d, &regions, &draw, &labels, opts).unwrap();
            let b = estimate_kdiscount_cv(&d, &regions, &draw, &labels, &cv, opts).unwrap();
            for (a, b) in a.iter().zip(&b) {
                assert_eq!(a.value.to_bits(), b.value.to_bits());
                assert_eq!(a.ci_low, b.ci_low);
            }
        }
    }

    #[test]
    fn cv_missing_unit() {
        let (d, labels) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let a = vec![Region::from_indices("a", vec![0], &d).unwrap()];
        let cv = ControlVariate::new(&d, vec![Some(1.0), None], &a).unwrap();
        let err = estimate_kdiscount_cv(
            &d,
            &a,
            &whole(&[1]),
            &labels,
            &cv,
            EstimatorOptions::default(),
        );
        assert!(matches!(err, Err(Error::MissingControlVariate(_))));
    }

    #[test]
    fn cv_totals_checked() {
        let (d, _) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let all = vec![Region::all("all", &d).unwrap()];
        let mut totals = BTreeMap::new();
        totals.insert("all".to_string(), 3.0);
        assert!(ControlVariate::with_totals(&d, vec![Some(1.0), Some(2.0)], &all, &totals).is_ok());
        totals.insert("all".to_string(), 3.1);
        assert!(
            ControlVariate::with_totals(&d, vec![Some(1.0), Some(2.0)], &all, &totals).is_err()
        );
    }

    #[test]
    fn pooled_sigma_uses_all_draws() {
        let (d, labels) = setup(&[1.0, 1.0, 1.0], &[1.0, 3.0, 2.0]);
        let regions = vec![Region::from_indices("a", vec![0], &d).unwrap()];
        let draw = whole(&[0, 1, 2, 0]);
        let per = estimate_kdiscount(
            &d,
            &regions,
            &draw,
            &labels,
            EstimatorOptions::with_variance(VarianceSelection::PerRegion),
        )
        .unwrap();
        assert_eq!(per[0].sigma_hat, 0.0);
        let pooled = estimate_kdiscount(
            &d,
            &regions,
            &draw,
            &labels,
            EstimatorOptions::with_variance(VarianceSelection::Pooled),
        )
        .unwrap();
        // weights (1,3,2,1): mean 7/4, variance 11/16
        assert!((pooled[0].sigma_hat - (11.0f64 / 16.0).sqrt()).abs() < 1e-14);
        assert_eq!(pooled[0].variance_mode, VarianceMode::Pooled);
    }

    #[test]
    fn rejects_region_scoped_draws() {
        let (d, labels) = setup(&[1.0, 1.0], &[5.0, 3.0]);
        let all = Region::all("all", &d).unwrap();
        let draw =
            sample_proportional(&d, Scope::Region(&all), 3, &mut RandomStream::new(0, 0)).unwrap();
        assert!(matches!(
            estimate_kdiscount(&d, &[all], &draw, &labels, EstimatorOptions::default()),
            Err(Error::SourceMismatch { .. })
        ));
    }
}
