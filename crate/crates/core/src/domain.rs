//! Units, detector counts, regions and labels.
//!
//! A [`Domain`] is the flat, ordered set of labelable units. Each unit carries
//! a raw detector count; the domain stores a smoothed, strictly positive copy
//! (`raw_g + ε`) which defines the sampling proposal. Regions are named subsets
//! of unit indices; labels are the screened true counts.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    /// Detector count before smoothing.
    pub raw_g: f64,
    /// Ground-truth count, only present in benchmark datasets.
    pub oracle_f: Option<f64>,
    /// Optional non-detector covariate, used as an alternative proposal.
    pub covariate: Option<f64>,
    /// Optional link to externally hosted imagery.
    pub url: Option<String>,
}

impl Unit {
    pub fn new(id: impl Into<String>, raw_g: f64) -> Self {
        Self {
            id: id.into(),
            raw_g,
            oracle_f: None,
            covariate: None,
            url: None,
        }
    }

    pub fn with_oracle(mut self, f: f64) -> Self {
        self.oracle_f = Some(f);
        self
    }

    pub fn with_covariate(mut self, c: f64) -> Self {
        self.covariate = Some(c);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Domain {
    units: Vec<Unit>,
    smoothing: f64,
    g: Vec<f64>,
    total_g: f64,
    index: HashMap<String, usize>,
}

/// `1e-6 · max(1, mean positive raw_g)`.
pub fn default_smoothing(units: &[Unit]) -> f64 {
    let positive: Vec<f64> = units.iter().map(|u| u.raw_g).filter(|&g| g > 0.0).collect();
    let mean = if positive.is_empty() {
        0.0
    } else {
        numeric::sum(positive.iter().copied()) / positive.len() as f64
    };
    1e-6 * mean.max(1.0)
}

impl Domain {
    /// Builds a domain with the default smoothing.
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        let eps = default_smoothing(&units);
        Self::with_smoothing(units, eps)
    }

    pub fn with_smoothing(units: Vec<Unit>, smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0) || !smoothing.is_finite() {
            return Err(invalid(format!(
                "smoothing must be positive, got {smoothing}"
            )));
        }
        let mut index = HashMap::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            if !(u.raw_g >= 0.0) || !u.raw_g.is_finite() {
                return Err(Error::NegativeCount {
                    id: u.id.clone(),
                    value: u.raw_g,
                });
            }
            if let Some(f) = u.oracle_f {
                if !(f >= 0.0) || !f.is_finite() {
                    return Err(Error::NegativeCount {
                        id: u.id.clone(),
                        value: f,
                    });
                }
            }
            if index.insert(u.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(u.id.clone()));
            }
        }
        let g: Vec<f64> = units.iter().map(|u| u.raw_g + smoothing).collect();
        let total_g = numeric::sum(g.iter().copied());
        Ok(Self {
            units,
            smoothing,
            g,
            total_g,
            index,
        })
    }

    /// Re-smooths the raw detector counts with a new `ε`.
    pub fn smooth_counts(&self, smoothing: f64) -> Result<Self> {
        Self::with_smoothing(self.units.clone(), smoothing)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, idx: usize) -> &Unit {
        &self.units[idx]
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Smoothed detector counts, indexed like `units()`.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn total_g(&self) -> f64 {
        self.total_g
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownUnit(id.to_string()))
    }

    /// Detector mass `G(S)` and single-draw hit probability `p(S) = G(S)/G(Ω)`.
    pub fn region_mass(&self, region: &Region) -> Result<RegionMass> {
        if let Some(&bad) = region.members.iter().find(|&&i| i >= self.len()) {
            return Err(Error::UnknownUnit(format!("#{bad}")));
        }
        let mass = numeric::sum(region.members.iter().map(|&i| self.g[i]));
        Ok(RegionMass {
            mass,
            probability: mass / self.total_g,
        })
    }

    /// Oracle labels, if every unit carries one.
    pub fn oracle_labels(&self) -> Option<LabelStore> {
        let mut store = LabelStore::new(self.len());
        for (i, u) in self.units.iter().enumerate() {
            store.labels[i] = Some(u.oracle_f?);
            store.count += 1;
        }
        Some(store)
    }

    /// Covariate column, if every unit carries one.
    pub fn covariates(&self) -> Option<Vec<f64>> {
        self.units.iter().map(|u| u.covariate).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMass {
    /// `G(S)`
    pub mass: f64,
    /// `p(S)`
    pub probability: f64,
}

/// A named, nonempty subset of a domain, stored as sorted unit indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    name: String,
    members: Vec<usize>,
}

impl Region {
    pub fn new<'a, I>(name: impl Into<String>, ids: I, domain: &Domain) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let members = ids
            .into_iter()
            .map(|id| domain.index_of(id))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(name, members, domain)
    }

    pub fn from_indices(
        name: impl Into<String>,
        mut members: Vec<usize>,
        domain: &Domain,
    ) -> Result<Self> {
        let name = name.into();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptyRegion(name));
        }
        if let Some(&bad) = members.iter().find(|&&i| i >= domain.len()) {
            return Err(Error::UnknownUnit(format!("#{bad}")));
        }
        Ok(Self { name, members })
    }

    /// The whole domain as a region.
    pub fn all(name: impl Into<String>, domain: &Domain) -> Result<Self> {
        Self::from_indices(name, (0..domain.len()).collect(), domain)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }

    /// Dense membership mask over `0..domain_len`.
    pub fn mask(&self, domain_len: usize) -> Vec<bool> {
        let mut mask = vec![false; domain_len];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }

    pub fn ids<'d>(&self, domain: &'d Domain) -> Vec<&'d str> {
        self.members
            .iter()
            .map(|&i| domain.unit(i).id.as_str())
            .collect()
    }
}

/// Screened true counts, indexed by unit. Append-only.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStore {
    labels: Vec<Option<f64>>,
    count: usize,
}

impl LabelStore {
    pub fn new(domain_len: usize) -> Self {
        Self {
            labels: vec![None; domain_len],
            count: 0,
        }
    }

    pub fn from_map(domain: &Domain, labels: &BTreeMap<String, f64>) -> Result<Self> {
        let mut store = Self::new(domain.len());
        for (id, &f) in labels {
            store.insert(domain, domain.index_of(id)?, f)?;
        }
        Ok(store)
    }

    /// Records `f(s)` for unit `idx`. A label can be written only once.
    pub fn insert(&mut self, domain: &Domain, idx: usize, f: f64) -> Result<()> {
        let id = &domain.unit(idx).id;
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::NegativeCount {
                id: id.clone(),
                value: f,
            });
        }
        match self.labels[idx] {
            Some(_) => Err(Error::Relabel(id.clone())),
            None => {
                self.labels[idx] = Some(f);
                self.count += 1;
                Ok(())
            }
        }
    }

    pub fn get(&self, idx: usize) -> Option<f64> {
        self.labels.get(idx).copied().flatten()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.get(idx).is_some()
    }

    /// Number of labeled units.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn capacity(&self) -> usize {
        self.labels.len()
    }

    pub fn to_map(&self, domain: &Domain) -> BTreeMap<String, f64> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.map(|f| (domain.unit(i).id.clone(), f)))
            .collect()
    }

    /// `F(S)`, requiring every member to be labeled.
    pub fn region_total(&self, domain: &Domain, region: &Region) -> Result<f64> {
        let values = region
            .members()
            .iter()
            .map(|&i| {
                self.get(i)
                    .ok_or_else(|| Error::Unlabeled(domain.unit(i).id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(numeric::sum(values))
    }
}

/// Column names for dataset CSV files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub id: String,
    pub g: String,
    pub f: String,
    pub covariate: String,
    pub url: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            id: "id".into(),
            g: "g".into(),
            f: "f".into(),
            covariate: "covariate".into(),
            url: "url".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub domain: Domain,
    /// Present iff the `f` column is filled for every row.
    pub oracle: Option<LabelStore>,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnMapping) -> Result<Dataset> {
    read_dataset(File::open(path)?, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &ColumnMapping) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column(&schema.id).ok_or_else(|| Error::MalformedRow {
        line: 1,
        message: format!("missing column {:?}", schema.id),
    })?;
    let g_col = column(&schema.g).ok_or_else(|| Error::MalformedRow {
        line: 1,
        message: format!("missing column {:?}", schema.g),
    })?;
    let f_col = column(&schema.f);
    let cov_col = column(&schema.covariate);
    let url_col = column(&schema.url);

    let mut units = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let number = |col: usize, what: &str| -> Result<Option<f64>> {
            match record.get(col) {
                None | Some("") => Ok(None),
                Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::MalformedRow {
                    line,
                    message: format!("cannot parse {what} value {s:?}"),
                }),
            }
        };
        let id = record.get(id_col).unwrap_or("");
        if id.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty id".into(),
            });
        }
        let raw_g = number(g_col, "g")?.ok_or_else(|| Error::MalformedRow {
            line,
            message: "missing g value".into(),
        })?;
        let oracle_f = f_col.map(|c| number(c, "f")).transpose()?.flatten();
        let covariate = cov_col
            .map(|c| number(c, "covariate"))
            .transpose()?
            .flatten();
        for v in [Some(raw_g), oracle_f, covariate].into_iter().flatten() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NegativeCount {
                    id: id.to_string(),
                    value: v,
                });
            }
        }
        let url = url_col
            .and_then(|c| record.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        units.push(Unit {
            id: id.to_string(),
            raw_g,
            oracle_f,
            covariate,
            url,
        });
    }
    let domain = Domain::new(units)?;
    let oracle = domain.oracle_labels();
    Ok(Dataset { domain, oracle })
}

pub fn save_dataset(path: impl AsRef<Path>, domain: &Domain) -> Result<()> {
    write_dataset(File::create(path)?, domain)
}

/// Writes `id,g[,f][,covariate][,url]`. Optional columns are emitted when any unit has them.
pub fn write_dataset<W: Write>(writer: W, domain: &Domain) -> Result<()> {
    let units = domain.units();
    let has_f = units.iter().any(|u| u.oracle_f.is_some());
    let has_cov = units.iter().any(|u| u.covariate.is_some());
    let has_url = units.iter().any(|u| u.url.is_some());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id", "g"];
    if has_f {
        header.push("f");
    }
    if has_cov {
        header.push("covariate");
    }
    if has_url {
        header.push("url");
    }
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(&header).map_err(csv_err)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for u in units {
        let mut row = vec![u.id.clone(), u.raw_g.to_string()];
        if has_f {
            row.push(fmt(u.oracle_f));
        }
        if has_cov {
            row.push(fmt(u.covariate));
        }
        if has_url {
            row.push(u.url.clone().unwrap_or_default());
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Region definitions as read from a region file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Generated(GeneratedRegions),
    Explicit(serde_json::Map<String, serde_json::Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GeneratedRegions {
    /// Nested prefixes of the dataset row order.
    Prefix { sizes: Vec<usize> },
    /// Disjoint consecutive chunks of the dataset row order.
    Partition { sizes: Vec<usize> },
    /// A single region covering the whole domain.
    All,
}

impl RegionSpec {
    pub fn all() -> Self {
        RegionSpec::Generated(GeneratedRegions::All)
    }

    pub fn prefix(sizes: Vec<usize>) -> Self {
        RegionSpec::Generated(GeneratedRegions::Prefix { sizes })
    }

    pub fn partition(sizes: Vec<usize>) -> Self {
        RegionSpec::Generated(GeneratedRegions::Partition { sizes })
    }

    pub fn explicit<'a, I, J>(regions: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, J)>,
        J: IntoIterator<Item = &'a str>,
    {
        let map = regions
            .into_iter()
            .map(|(name, ids)| {
                let ids = ids
                    .into_iter()
                    .map(|id| serde_json::Value::String(id.to_string()))
                    .collect();
                (name.to_string(), serde_json::Value::Array(ids))
            })
            .collect();
        RegionSpec::Explicit(map)
    }
}

pub fn load_region_spec(path: impl AsRef<Path>) -> Result<RegionSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_region_spec(&text)
}

pub fn parse_region_spec(text: &str) -> Result<RegionSpec> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("type").is_some() {
        return Ok(RegionSpec::Generated(serde_json::from_value(value)?));
    }
    match value {
        serde_json::Value::Object(map) => Ok(RegionSpec::Explicit(map)),
        _ => Err(invalid("region file must be a JSON object")),
    }
}
