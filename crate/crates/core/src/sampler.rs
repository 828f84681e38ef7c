//! Seedable i.i.d. sampling over a domain or region.
//!
//! All randomness flows through [`RandomStream`], a PCG64 generator
//! (128-bit LCG state, XSL-RR output, period 2^128) whose state and stream
//! increment are derived from `(seed, stream_id)` with SplitMix64. Uniform
//! reals take the top 53 bits of one 64-bit output, so a draw sequence
//! depends only on the inputs, not on the platform.

use rand::RngCore;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Region};
use crate::error::{invalid, Error, Result};

/// Recorded alongside every result file.
pub const RNG_ALGORITHM: &str = "pcg64-xsl-rr-128/64+splitmix64";

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: Pcg64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut sm = seed
            ^ stream_id
                .rotate_left(32)
                .wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let hi = splitmix64(&mut sm) as u128;
        let lo = splitmix64(&mut sm) as u128;
        let mut sm = stream_id;
        let inc_hi = splitmix64(&mut sm) as u128;
        let inc = (inc_hi << 64) | stream_id as u128;
        Self {
            seed,
            stream_id,
            rng: Pcg64::new((hi << 64) | lo, inc),
        }
    }

    /// Another independent stream under the same seed.
    pub fn split(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-and-reject).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Access for `rand_distr` samplers.
    pub fn rng_mut(&mut self) -> &mut Pcg64 {
        &mut self.rng
    }
}

/// Where draws come from.
#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    Domain,
    Region(&'a Region),
}

impl Scope<'_> {
    pub fn label(&self) -> String {
        match self {
            Scope::Domain => DOMAIN_SCOPE.to_string(),
            Scope::Region(r) => r.name().to_string(),
        }
    }
}

/// Scope label used for whole-domain draws.
pub const DOMAIN_SCOPE: &str = "<domain>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingLaw {
    /// Proportional to smoothed detector counts.
    Detector,
    Uniform,
    /// Any other user-supplied proposal.
    Proposal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawSource {
    pub scope: String,
    pub law: SamplingLaw,
}

impl std::fmt::Display for DrawSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} draws over {}", self.law, self.scope)
    }
}

/// An ordered i.i.d. sample with repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleDraw {
    pub draws: Vec<usize>,
    pub source: DrawSource,
    distinct: Vec<usize>,
}

impl SampleDraw {
    pub fn new(draws: Vec<usize>, source: DrawSource) -> Self {
        let mut distinct = draws.clone();
        distinct.sort_unstable();
        distinct.dedup();
        Self {
            draws,
            source,
            distinct,
        }
    }

    pub fn n(&self) -> usize {
        self.draws.len()
    }

    /// Sorted distinct unit indices; this is the labeling cost.
    pub fn distinct(&self) -> &[usize] {
        &self.distinct
    }

    pub fn is_whole_domain(&self) -> bool {
        self.source.scope == DOMAIN_SCOPE
    }
}

/// A probability law `q(s) = mass(s) / total` over the members of a scope.
///
/// Keeping the unnormalized mass lets importance weights be computed as
/// `total · mean(f / mass)`, which reproduces the detector and uniform
/// special cases bit-for-bit.
#[derive(Debug, Clone)]
pub struct Proposal {
    scope: String,
    law: SamplingLaw,
    members: Vec<usize>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl Proposal {
    fn build(scope: String, law: SamplingLaw, members: Vec<usize>, mass: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyScope);
        }
        if mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidProposal(
                "masses must be finite and nonnegative".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(mass.len());
        let mut acc = crate::numeric::CompensatedSum::new();
        for &m in &mass {
            acc.add(m);
            cumulative.push(acc.value());
        }
        let total = acc.value();
        if !(total > 0.0) {
            return Err(Error::InvalidProposal("total mass is zero".into()));
        }
        Ok(Self {
            scope,
            law,
            members,
            mass,
            cumulative,
            total,
        })
    }

    fn members_of(domain: &Domain, scope: Scope<'_>) -> Vec<usize> {
        match scope {
            Scope::Domain => (0..domain.len()).collect(),
            Scope::Region(r) => r.members().to_vec(),
        }
    }

    /// `ḡ_S`: proportional to smoothed detector counts.
    pub fn detector(domain: &Domain, scope: Scope<'_>) -> Result<Self> {
        let members = Self::members_of(domain, scope);
        let mass = members.iter().map(|&i| domain.g()[i]).collect();
        Self::build(scope.label(), SamplingLaw::Detector, members, mass)
    }

    pub fn uniform(domain: &Domain, scope: Scope<'_>) -> Result<Self> {
        let members = Self::members_of(domain, scope);
        let mass = vec![1.0; members.len()];
        Self::build(scope.label(), SamplingLaw::Uniform, members, mass)
    }

    /// Proportional to arbitrary nonnegative weights, given per domain unit.
    pub fn from_weights(domain: &Domain, scope: Scope<'_>, weights: &[f64]) -> Result<Self> {
        if weights.len() != domain.len() {
            return Err(invalid("proposal weights must cover every unit"));
        }
        let members = Self::members_of(domain, scope);
        let mass = members.iter().map(|&i| weights[i]).collect();
        Self::build(scope.label(), SamplingLaw::Proposal, members, mass)
    }

    /// Explicit probabilities for each member of `region`, in member order.
    pub fn from_probabilities(region: &Region, probs: &[f64]) -> Result<Self> {
        if probs.len() != region.len() {
            return Err(Error::InvalidProposal(format!(
                "expected {} probabilities, got {}",
                region.len(),
                probs.len()
            )));
        }
        let total = crate::numeric::sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProposal(format!(
                "probabilities sum to {total}"
            )));
        }
        let mut p = Self::build(
            region.name().to_string(),
            SamplingLaw::Proposal,
            region.members().to_vec(),
            probs.to_vec(),
        )?;
        p.total = 1.0;
        Ok(p)
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn law(&self) -> SamplingLaw {
        self.law
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Unnormalized mass of domain unit `idx`, or `None` outside the scope.
    pub fn mass_of(&self, idx: usize) -> Option<f64> {
        self.members
            .binary_search(&idx)
            .ok()
            .map(|pos| self.mass[pos])
    }

    pub fn probability(&self, idx: usize) -> Option<f64> {
        self.mass_of(idx).map(|m| m / self.total)
    }

    #[inline]
    pub fn draw_one(&self, stream: &mut RandomStream) -> usize {
        let pos = match self.law {
            SamplingLaw::Uniform => stream.next_below(self.members.len() as u64) as usize,
            _ => {
                let u = stream.next_f64() * self.cumulative[self.cumulative.len() - 1];
                self.cumulative
                    .partition_point(|&c| c <= u)
                    .min(self.members.len() - 1)
            }
        };
        self.members[pos]
    }

    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> Result<SampleDraw> {
        if n == 0 {
            return Err(invalid("sample size must be at least 1"));
        }
        let draws = (0..n).map(|_| self.draw_one(stream)).collect();
        Ok(SampleDraw::new(
            draws,
            DrawSource {
                scope: self.scope.clone(),
                law: self.law,
            },
        ))
    }
}

/// `n` draws with `Pr[s] = g(s) / G(scope)`.
pub fn sample_proportional(
    domain: &Domain,
    scope: Scope<'_>,
    n: usize,
    stream: &mut RandomStream,
) -> Result<SampleDraw> {
    Proposal::detector(domain, scope)?.sample(n, stream)
}

/// `n` draws with `Pr[s] = 1 / |scope|`.
pub fn sample_uniform(
    domain: &Domain,
    scope: Scope<'_>,
    n: usize,
    stream: &mut RandomStream,
) -> Result<SampleDraw> {
    Proposal::uniform(domain, scope)?.sample(n, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Unit;

    fn domain(gs: &[f64]) -> Domain {
        let units = gs
            .iter()
            .enumerate()
            .map(|(i, &g)| Unit::new(format!("u{i}"), g))
            .collect();
        Domain::with_smoothing(units, 1e-12).unwrap()
    }

    fn frequencies(draw: &SampleDraw, len: usize) -> Vec<f64> {
        let mut counts = vec![0usize; len];
        for &d in &draw.draws {
            counts[d] += 1;
        }
        counts.iter().map(|&c| c as f64 / draw.n() as f64).collect()
    }

    #[test]
    fn equal_counts_split_evenly() {
        let d = domain(&[1.0, 1.0]);
        let mut s = RandomStream::new(7, 0);
        let draw = sample_proportional(&d, Scope::Domain, 1_000_000, &mut s).unwrap();
        for f in frequencies(&draw, 2) {
            assert!((f - 0.5).abs() < 0.002, "{f}");
        }
    }

    #[test]
    fn region_scope_restricts_draws() {
        let d = domain(&[1.0, 2.0, 1.0]);
        let s_ab = Region::from_indices("ab", vec![0, 1], &d).unwrap();
        let mut s = RandomStream::new(11, 3);
        let draw = sample_proportional(&d, Scope::Region(&s_ab), 1_000_000, &mut s).unwrap();
        let freq = frequencies(&draw, 3);
        assert_eq!(freq[2], 0.0);
        assert!((freq[1] - 2.0 / 3.0).abs() < 0.002, "{}", freq[1]);
        assert_eq!(draw.source.scope, "ab");
    }

    #[test]
    fn single_unit_scope() {
        let d = domain(&[1.0, 2.0, 1.0]);
        let r = Region::from_indices("one", vec![2], &d).unwrap();
        let mut s = RandomStream::new(1, 1);
        let draw = sample_proportional(&d, Scope::Region(&r), 100, &mut s).unwrap();
        assert!(draw.draws.iter().all(|&i| i == 2));
        assert_eq!(draw.distinct(), &[2]);
    }

    #[test]
    fn uniform_frequencies() {
        let d = domain(&[9.0, 1.0, 0.0, 4.0]);
        let mut s = RandomStream::new(5, 9);
        let draw = sample_uniform(&d, Scope::Domain, 1_000_000, &mut s).unwrap();
        for f in frequencies(&draw, 4) {
            assert!((f - 0.25).abs() < 0.002, "{f}");
        }
        let one = sample_uniform(&d, Scope::Domain, 1, &mut s).unwrap();
        assert_eq!(one.n(), 1);
        assert!(one.draws[0] < 4);
    }

    #[test]
    fn empty_scope_and_zero_n() {
        let d = domain(&[]);
        let mut s = RandomStream::new(0, 0);
        assert!(matches!(
            sample_uniform(&d, Scope::Domain, 3, &mut s),
            Err(Error::EmptyScope)
        ));
        let d = domain(&[1.0]);
        assert!(sample_uniform(&d, Scope::Domain, 0, &mut s).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let d = domain(&[1.0, 5.0, 2.0, 0.5]);
        let a = sample_proportional(&d, Scope::Domain, 500, &mut RandomStream::new(42, 0)).unwrap();
        let b = sample_proportional(&d, Scope::Domain, 500, &mut RandomStream::new(42, 0)).unwrap();
        let c = sample_proportional(&d, Scope::Domain, 500, &mut RandomStream::new(42, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn first_outputs_are_pinned() {
        // Cross-checked against a reference PCG64 XSL-RR implementation.
        let mut s = RandomStream::new(0, 0);
        let first: Vec<u64> = (0..3).map(|_| s.next_u64()).collect();
        let mut again = RandomStream::new(0, 0);
        let second: Vec<u64> = (0..3).map(|_| again.next_u64()).collect();
        assert_eq!(first, second);
        assert_eq!(first, PINNED_OUTPUTS);
    }

    const PINNED_OUTPUTS: [u64; 3] = [
        17981289095105587067,
        2520547344715073014,
        11372097602241651215,
    ];

    #[test]
    fn probabilities_must_normalize() {
        let d = domain(&[1.0, 1.0]);
        let r = Region::all("all", &d).unwrap();
        assert!(Proposal::from_probabilities(&r, &[0.5, 0.4]).is_err());
        let q = Proposal::from_probabilities(&r, &[0.25, 0.75]).unwrap();
        assert_eq!(q.probability(1), Some(0.75));
    }
}
