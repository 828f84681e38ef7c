//! Single-region estimators: simple Monte Carlo, importance sampling and
//! detector-based importance sampling.

use crate::domain::{Domain, LabelStore, Region};
use crate::error::{Error, Result};
use crate::sampler::{Proposal, SampleDraw, SamplingLaw};

use super::{weighted_estimate, Estimate, Method};

fn check_source(draw: &SampleDraw, region: &Region, law: Option<SamplingLaw>) -> Result<()> {
    let scope_ok = draw.source.scope == region.name();
    let law_ok = law.is_none_or(|l| l == draw.source.law);
    if scope_ok && law_ok {
        Ok(())
    } else {
        let expected = match law {
            Some(l) => format!("{l:?} draws over {}", region.name()),
            None => format!("draws over {}", region.name()),
        };
        Err(Error::SourceMismatch {
            expected,
            found: draw.source.to_string(),
        })
    }
}

pub(crate) fn label_of(domain: &Domain, labels: &LabelStore, idx: usize) -> Result<f64> {
    labels
        .get(idx)
        .ok_or_else(|| Error::Unlabeled(domain.unit(idx).id.clone()))
}

/// `|S| · mean f(s_i)` for uniform draws over `region`.
pub fn estimate_mc(
    domain: &Domain,
    region: &Region,
    draw: &SampleDraw,
    labels: &LabelStore,
    alpha: f64,
) -> Result<Estimate> {
    check_source(draw, region, Some(SamplingLaw::Uniform))?;
    let weights = draw
        .draws
        .iter()
        .map(|&i| label_of(domain, labels, i))
        .collect::<Result<Vec<_>>>()?;
    weighted_estimate(
        region.name(),
        Method::Mc,
        region.len() as f64,
        &weights,
        0.0,
        alpha,
        None,
    )
}

/// `mean f(s_i) / q(s_i)` for draws from `proposal` over `region`.
///
/// The caller asserts that `draw` was produced by `proposal`; only the scope
/// is checked. Units with `q(s) = 0` and `f(s) = 0` contribute zero.
pub fn estimate_is(
    domain: &Domain,
    region: &Region,
    draw: &SampleDraw,
    proposal: &Proposal,
    labels: &LabelStore,
    alpha: f64,
) -> Result<Estimate> {
    check_source(draw, region, None)?;
    if proposal.scope() != region.name() {
        return Err(Error::SourceMismatch {
            expected: format!("proposal over {}", region.name()),
            found: format!("proposal over {}", proposal.scope()),
        });
    }
    let weights = draw
        .draws
        .iter()
        .map(|&i| {
            let f = label_of(domain, labels, i)?;
            let m = proposal.mass_of(i).ok_or_else(|| Error::SourceMismatch {
                expected: format!("draws over {}", region.name()),
                found: format!("unit {:?} outside the proposal", domain.unit(i).id),
            })?;
            if m > 0.0 {
                Ok(f / m)
            } else if f == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::InvalidProposal(format!(
                    "zero proposal mass at unit {:?} with positive count",
                    domain.unit(i).id
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    weighted_estimate(
        region.name(),
        Method::Is,
        proposal.total_mass(),
        &weights,
        0.0,
        alpha,
        None,
    )
}

/// `G(S) · mean f(s_i) / g(s_i)` for draws proportional to `g` over `region`.
pub fn estimate_discount(
    domain: &Domain,
    region: &Region,
    draw: &SampleDraw,
    labels: &LabelStore,
    alpha: f64,
) -> Result<Estimate> {
    check_source(draw, region, Some(SamplingLaw::Detector))?;
    let mass = domain.region_mass(region)?.mass;
    let g = domain.g();
    let weights = draw
        .draws
        .iter()
        .map(|&i| Ok(label_of(domain, labels, i)? / g[i]))
        .collect::<Result<Vec<_>>>()?;
    weighted_estimate(region.name(), Method::Dis, mass, &weights, 0.0, alpha, None)
}
