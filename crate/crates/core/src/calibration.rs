//! Isotonic calibration of detector counts.
//!
//! Fits a nondecreasing map from detector count to true count by
//! pool-adjacent-violators. The fitted model serves as a deterministic
//! baseline estimator and as a control variate for the joint estimator.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Region};
use crate::error::{invalid, Result};
use crate::estimators::{ControlVariate, Estimate, Method};
use crate::numeric;

/// Ascending `(g, fitted)` breakpoints with nondecreasing fitted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct IsotonicModel {
    breakpoints: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct RawModel {
    breakpoints: Vec<(f64, f64)>,
}

impl TryFrom<RawModel> for IsotonicModel {
    type Error = crate::Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        Self::from_breakpoints(raw.breakpoints)
    }
}

impl IsotonicModel {
    /// Validates externally supplied breakpoints.
    pub fn from_breakpoints(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(invalid("isotonic model needs at least one breakpoint"));
        }
        if breakpoints
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(invalid("breakpoints must be finite"));
        }
        for w in breakpoints.windows(2) {
            if !(w[0].0 < w[1].0) || w[0].1 > w[1].1 {
                return Err(invalid("breakpoints must be ascending and nondecreasing"));
            }
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Linear interpolation between breakpoints, clamped outside them.
    pub fn predict(&self, g: f64) -> f64 {
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = bp[bp.len() - 1];
        if g <= first.0 {
            return first.1;
        }
        if g >= last.0 {
            return last.1;
        }
        let hi = bp.partition_point(|&(x, _)| x <= g);
        let (x0, y0) = bp[hi - 1];
        if x0 == g {
            return y0;
        }
        let (x1, y1) = bp[hi];
        let t = (g - x0) / (x1 - x0);
        // Clamped convex combination keeps predictions monotone under rounding.
        (y0 + t * (y1 - y0)).clamp(y0, y1)
    }
}

/// Least-squares nondecreasing fit of `f` on `g`.
///
/// Pairs sharing a `g` value are averaged first and carry their multiplicity
/// as a weight.
pub fn fit_isotonic(pairs: &[(f64, f64)]) -> Result<IsotonicModel> {
    if pairs.is_empty() {
        return Err(invalid("cannot fit an isotonic model to no data"));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("calibration pairs must be finite"));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // (x, mean y, weight) per distinct x
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let j = sorted[i..].partition_point(|p| p.0 == x) + i;
        let ys = sorted[i..j].iter().map(|p| p.1);
        let w = (j - i) as f64;
        points.push((x, numeric::sum(ys) / w, w));
        i = j;
    }

    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let ws: Vec<f64> = points.iter().map(|p| p.2).collect();
    let fitted = pool_adjacent_violators(&ys, &ws);
    Ok(IsotonicModel {
        breakpoints: points.iter().zip(fitted).map(|(p, y)| (p.0, y)).collect(),
    })
}

/// Weighted PAV: the L2 projection of `ys` onto nondecreasing sequences.
pub fn pool_adjacent_violators(ys: &[f64], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(ys.len(), weights.len());
    // Blocks of (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(ys.len());
    for (&y, &w) in ys.iter().zip(weights) {
        let mut cur = (y, w, 1usize);
        while let Some(&(m, wt, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = wt + cur.1;
            cur = ((m * wt + cur.0 * cur.1) / total, total, len + cur.2);
        }
        blocks.push(cur);
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat_n(m, len))
        .collect()
}

pub fn predict(model: &IsotonicModel, g: f64) -> f64 {
    model.predict(g)
}

/// `Σ_{s∈S} φ̂(raw_g(s))`. Deterministic, so no interval is attached.
pub fn estimate_calibrated(region: &Region, model: &IsotonicModel, domain: &Domain) -> Estimate {
    let value = numeric::sum(
        region
            .members()
            .iter()
            .map(|&i| model.predict(domain.unit(i).raw_g)),
    );
    Estimate::point(region.name(), Method::Cal, value)
}

/// `h(s) = φ̂(raw_g(s))` with exact region sums.
pub fn build_control_variate(
    model: &IsotonicModel,
    domain: &Domain,
    regions: &[Region],
) -> Result<ControlVariate> {
    let h = domain
        .units()
        .iter()
        .map(|u| Some(model.predict(u.raw_g)))
        .collect();
    ControlVariate::new(domain, h, regions)
}
