use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::calibration::{build_control_variate, IsotonicModel};
use crate::domain::{Domain, LabelStore, Region, RegionSpec};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    estimate_kdiscount, estimate_kdiscount_cv, ControlVariate, Estimate, EstimatorOptions, Method,
    VarianceSelection,
};
use crate::evaluation::{labeling_effort, make_regions, C_DIS};
use crate::numeric;
use crate::sampler::{
    DrawSource, Proposal, RandomStream, SampleDraw, SamplingLaw, Scope, DOMAIN_SCOPE,
};

/// Format version of persisted session records.
pub const RECORD_VERSION: u32 = 1;

fn default_method() -> Method {
    Method::KDis
}

fn default_alpha() -> f64 {
    0.05
}

/// Session settings. Omitted fields take defaults when the session is created.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Dataset name; may be omitted when exactly one dataset is loaded.
    #[serde(default)]
    pub dataset: Option<String>,
    /// Region spec; defaults to the dataset's regions.
    #[serde(default)]
    pub regions: Option<RegionSpec>,
    /// `kDIS` or `kDIScv`.
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub variance: VarianceSelection,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Calibration model supplying the control variate for `kDIScv`.
    #[serde(default)]
    pub control_variate: Option<IsotonicModel>,
    /// Default target for `(ci_high − ci_low) / F̂(Ω)`.
    #[serde(default)]
    pub stop_target: Option<f64>,
    /// Per-region overrides of `stop_target`.
    #[serde(default)]
    pub stop_targets: BTreeMap<String, f64>,
    /// Master seed; drawn from the OS when omitted and recorded.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub stream_id: u64,
    /// Labeling cost factor `c`; defaults to the verification cost ratio.
    #[serde(default)]
    pub cost_factor: Option<f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            regions: None,
            method: Method::KDis,
            variance: VarianceSelection::Auto,
            alpha: 0.05,
            control_variate: None,
            stop_target: None,
            stop_targets: BTreeMap::new(),
            seed: None,
            stream_id: 0,
            cost_factor: None,
        }
    }
}

/// In-session edits; absent fields are left unchanged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigUpdate {
    #[serde(default)]
    pub stop_target: Option<f64>,
    #[serde(default)]
    pub stop_targets: Option<BTreeMap<String, f64>>,
}

fn check_target(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "stopping target must be positive, got {t}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawnUnit {
    /// Position in the session's draw sequence.
    pub position: usize,
    pub unit_id: String,
    /// Raw detector count.
    pub g: f64,
    /// Whether the unit is already labeled; such draws need no screening.
    pub labeled: bool,
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSubmission {
    pub unit_id: String,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionStatus {
    pub region: String,
    pub value: f64,
    pub n_region: usize,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub empty: bool,
    /// `(ci_high − ci_low) / F̂(Ω)`.
    pub normalized_ci_width: Option<f64>,
    pub stop_target: Option<f64>,
    pub stop_ok: bool,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEstimates {
    pub session_id: String,
    pub method: Method,
    /// Draws used: the longest fully labeled prefix of the draw sequence.
    pub labeled_draws: usize,
    pub total_draws: usize,
    /// Draws after the labeled prefix.
    pub pending_draws: usize,
    /// `F̂(Ω)` from the same draws, the normalizer for interval widths.
    pub domain_estimate: f64,
    pub distinct_labels: usize,
    pub cost_factor: f64,
    pub effort_pct: f64,
    pub regions: Vec<RegionStatus>,
}

/// Everything needed to rebuild a session; one JSON document on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub version: u32,
    pub id: String,
    pub dataset: String,
    pub config: SessionConfig,
    pub stream: RandomStream,
    /// Drawn unit ids in order, with repeats.
    pub draws: Vec<String>,
    pub labels: BTreeMap<String, f64>,
    pub created_ms: u64,
    pub updated_ms: u64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// A screening session over one domain.
///
/// Draws are append-only and labels write-once. Estimates are a pure
/// function of the stored state.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    dataset: String,
    domain: Arc<Domain>,
    config: SessionConfig,
    regions: Vec<Region>,
    proposal: Proposal,
    cv: Option<ControlVariate>,
    stream: RandomStream,
    draws: Vec<usize>,
    labels: LabelStore,
    created_ms: u64,
    updated_ms: u64,
}

impl Session {
    /// Validates `config` and starts an empty session.
    ///
    /// `config.dataset` and `config.regions` are overwritten with the
    /// resolved values, and a missing seed is drawn and recorded.
    pub fn create(
        id: impl Into<String>,
        dataset: impl Into<String>,
        domain: Arc<Domain>,
        mut config: SessionConfig,
    ) -> Result<Self> {
        let dataset = dataset.into();
        config.dataset = Some(dataset.clone());
        let seed = *config.seed.get_or_insert_with(rand::random);
        let stream = RandomStream::new(seed, config.stream_id);
        let now = now_ms();
        Self::assemble(
            id.into(),
            dataset,
            domain,
            config,
            stream,
            Vec::new(),
            None,
            now,
            now,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        id: String,
        dataset: String,
        domain: Arc<Domain>,
        config: SessionConfig,
        stream: RandomStream,
        draws: Vec<usize>,
        labels: Option<LabelStore>,
        created_ms: u64,
        updated_ms: u64,
    ) -> Result<Self> {
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(invalid(format!(
                "alpha must be in (0, 1), got {}",
                config.alpha
            )));
        }
        if let Some(c) = config.cost_factor {
            if !(c > 0.0 && c <= 1.0) {
                return Err(invalid(format!("cost factor must be in (0, 1], got {c}")));
            }
        }
        if let Some(t) = config.stop_target {
            check_target(t)?;
        }
        let spec = config
            .regions
            .clone()
            .ok_or_else(|| invalid("session needs a region spec"))?;
        let regions = make_regions(&domain, &spec)?;
        for (name, &t) in &config.stop_targets {
            check_target(t)?;
            if !regions.iter().any(|r| r.name() == name) {
                return Err(Error::UnknownRegion(name.clone()));
            }
        }
        let cv = match (config.method, &config.control_variate) {
            (Method::KDis, None) => None,
            (Method::KDisCv, Some(model)) => {
                let model = IsotonicModel::from_breakpoints(model.breakpoints().to_vec())?;
                Some(build_control_variate(&model, &domain, &regions)?)
            }
            (Method::KDisCv, None) => {
                return Err(invalid("kDIScv sessions need a control_variate model"))
            }
            (Method::KDis, Some(_)) => {
                return Err(invalid("a control_variate model requires method kDIScv"))
            }
            (m, _) => {
                return Err(invalid(format!(
                    "sessions support kDIS and kDIScv, not {m}"
                )))
            }
        };
        let proposal = Proposal::detector(&domain, Scope::Domain)?;
        let labels = labels.unwrap_or_else(|| LabelStore::new(domain.len()));
        Ok(Self {
            id,
            dataset,
            domain,
            config,
            regions,
            proposal,
            cv,
            stream,
            draws,
            labels,
            created_ms,
            updated_ms,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn draws(&self) -> &[usize] {
        &self.draws
    }

    pub fn labels(&self) -> &LabelStore {
        &self.labels
    }

    pub fn stream(&self) -> &RandomStream {
        &self.stream
    }

    pub fn control_variate(&self) -> Option<&ControlVariate> {
        self.cv.as_ref()
    }

    pub fn cost_factor(&self) -> f64 {
        self.config.cost_factor.unwrap_or(C_DIS)
    }

    fn drawn_unit(&self, position: usize) -> DrawnUnit {
        let idx = self.draws[position];
        let unit = self.domain.unit(idx);
        DrawnUnit {
            position,
            unit_id: unit.id.clone(),
            g: unit.raw_g,
            labeled: self.labels.contains(idx),
            f: self.labels.get(idx),
            url: unit.url.clone(),
        }
    }

    /// Appends `n` draws from the whole domain, proportional to `g`.
    pub fn draw_batch(&mut self, n: usize) -> Result<Vec<DrawnUnit>> {
        if n == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        let start = self.draws.len();
        for _ in 0..n {
            self.draws.push(self.proposal.draw_one(&mut self.stream));
        }
        self.updated_ms = now_ms();
        Ok((start..self.draws.len())
            .map(|p| self.drawn_unit(p))
            .collect())
    }

    /// Draws after the labeled prefix that still need a label.
    pub fn pending(&self) -> Vec<DrawnUnit> {
        let mut seen = HashSet::new();
        (self.labeled_prefix()..self.draws.len())
            .filter(|&p| !self.labels.contains(self.draws[p]) && seen.insert(self.draws[p]))
            .map(|p| self.drawn_unit(p))
            .collect()
    }

    /// Stores labels atomically: either all are accepted or none.
    pub fn submit_labels(&mut self, labels: &[LabelSubmission]) -> Result<SessionEstimates> {
        let mut drawn = vec![false; self.domain.len()];
        for &i in &self.draws {
            drawn[i] = true;
        }
        let mut seen = HashSet::new();
        let mut staged = Vec::with_capacity(labels.len());
        for l in labels {
            let idx = self.domain.index_of(&l.unit_id)?;
            if !(l.f >= 0.0) || !l.f.is_finite() {
                return Err(Error::NegativeCount {
                    id: l.unit_id.clone(),
                    value: l.f,
                });
            }
            if !drawn[idx] {
                return Err(Error::NotDrawn(l.unit_id.clone()));
            }
            if self.labels.contains(idx) || !seen.insert(idx) {
                return Err(Error::Relabel(l.unit_id.clone()));
            }
            staged.push((idx, l.f));
        }
        let mut next = self.labels.clone();
        for (idx, f) in staged {
            next.insert(&self.domain, idx, f)?;
        }
        self.labels = next;
        self.updated_ms = now_ms();
        self.current_estimates()
    }

    /// Length of the longest prefix of draws whose units are all labeled.
    pub fn labeled_prefix(&self) -> usize {
        self.draws
            .iter()
            .position(|&i| !self.labels.contains(i))
            .unwrap_or(self.draws.len())
    }

    /// The labeled prefix as an estimator input.
    pub fn labeled_sample(&self) -> SampleDraw {
        SampleDraw::new(
            self.draws[..self.labeled_prefix()].to_vec(),
            DrawSource {
                scope: DOMAIN_SCOPE.to_string(),
                law: SamplingLaw::Detector,
            },
        )
    }

    pub fn options(&self) -> EstimatorOptions {
        EstimatorOptions {
            alpha: self.config.alpha,
            variance: self.config.variance,
        }
    }

    pub fn current_estimates(&self) -> Result<SessionEstimates> {
        let sample = self.labeled_sample();
        let (d, labels, opts) = (&*self.domain, &self.labels, self.options());
        let estimates = match &self.cv {
            Some(cv) => estimate_kdiscount_cv(d, &self.regions, &sample, labels, cv, opts)?,
            None => estimate_kdiscount(d, &self.regions, &sample, labels, opts)?,
        };
        let domain_estimate = self.domain_estimate(&sample)?;
        let regions = estimates
            .into_iter()
            .map(|e| {
                let target = self
                    .config
                    .stop_targets
                    .get(&e.region)
                    .copied()
                    .or(self.config.stop_target);
                let normalized = e.ci_width().and_then(|w| {
                    if w == 0.0 {
                        Some(0.0)
                    } else if domain_estimate > 0.0 {
                        Some(w / domain_estimate)
                    } else {
                        None
                    }
                });
                let stop_ok = matches!((normalized, target), (Some(w), Some(t)) if w <= t);
                RegionStatus {
                    region: e.region.clone(),
                    value: e.value,
                    n_region: e.n_region,
                    ci_low: e.ci_low,
                    ci_high: e.ci_high,
                    empty: e.empty_region,
                    normalized_ci_width: normalized,
                    stop_target: target,
                    stop_ok,
                    estimate: e,
                }
            })
            .collect();
        let cost = self.cost_factor();
        Ok(SessionEstimates {
            session_id: self.id.clone(),
            method: self.config.method,
            labeled_draws: sample.n(),
            total_draws: self.draws.len(),
            pending_draws: self.draws.len() - sample.n(),
            domain_estimate,
            distinct_labels: self.labels.len(),
            cost_factor: cost,
            effort_pct: labeling_effort(self.labels.len() as f64, cost, self.domain.len())?,
            regions,
        })
    }

    /// `F̂(Ω)` from the labeled prefix, with the control variate if configured.
    fn domain_estimate(&self, sample: &SampleDraw) -> Result<f64> {
        if sample.n() == 0 {
            return Ok(0.0);
        }
        let g = self.domain.g();
        let mut h_total = 0.0;
        let weights = sample
            .draws
            .iter()
            .map(|&i| {
                let f = self.labels.get(i).unwrap_or(0.0);
                let h = self.cv.as_ref().and_then(|cv| cv.h(i)).unwrap_or(0.0);
                (f - h) / g[i]
            })
            .collect::<Vec<_>>();
        if let Some(cv) = &self.cv {
            h_total = numeric::sum((0..self.domain.len()).filter_map(|i| cv.h(i)));
        }
        let mean = numeric::sum(weights.iter().copied()) / weights.len() as f64;
        Ok(self.domain.total_g() * mean + h_total)
    }

    pub fn update_config(&mut self, update: &ConfigUpdate) -> Result<()> {
        if let Some(t) = update.stop_target {
            check_target(t)?;
        }
        if let Some(targets) = &update.stop_targets {
            for (name, &t) in targets {
                check_target(t)?;
                if !self.regions.iter().any(|r| r.name() == name) {
                    return Err(Error::UnknownRegion(name.clone()));
                }
            }
        }
        if let Some(t) = update.stop_target {
            self.config.stop_target = Some(t);
        }
        if let Some(targets) = &update.stop_targets {
            self.config.stop_targets = targets.clone();
        }
        self.updated_ms = now_ms();
        Ok(())
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            version: RECORD_VERSION,
            id: self.id.clone(),
            dataset: self.dataset.clone(),
            config: self.config.clone(),
            stream: self.stream.clone(),
            draws: self
                .draws
                .iter()
                .map(|&i| self.domain.unit(i).id.clone())
                .collect(),
            labels: self.labels.to_map(&self.domain),
            created_ms: self.created_ms,
            updated_ms: self.updated_ms,
        }
    }

    /// Rebuilds a session from its record, checking it against `domain`.
    pub fn from_record(record: SessionRecord, domain: Arc<Domain>) -> Result<Self> {
        let sid = record.id.clone();
        let corrupt = |e: Error| Error::CorruptRecord(format!("session {sid}: {e}"));
        if record.version != RECORD_VERSION {
            return Err(Error::CorruptRecord(format!(
                "unsupported record version {}",
                record.version
            )));
        }
        let draws = record
            .draws
            .iter()
            .map(|id| domain.index_of(id))
            .collect::<Result<Vec<_>>>()
            .map_err(corrupt)?;
        let labels = LabelStore::from_map(&domain, &record.labels).map_err(corrupt)?;
        let drawn: HashSet<usize> = draws.iter().copied().collect();
        if let Some(id) = record
            .labels
            .keys()
            .find(|id| domain.index_of(id).is_ok_and(|i| !drawn.contains(&i)))
        {
            return Err(corrupt(Error::NotDrawn(id.clone())));
        }
        let SessionRecord {
            id,
            dataset,
            config,
            stream,
            created_ms,
            updated_ms,
            ..
        } = record;
        Self::assemble(
            id,
            dataset,
            domain,
            config,
            stream,
            draws,
            Some(labels),
            created_ms,
            updated_ms,
        )
        .map_err(corrupt)
    }
}
