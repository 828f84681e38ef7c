use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::core::{
    ConfigUpdate, DrawnUnit, LabelSubmission, Session, SessionConfig, SessionEstimates,
    SessionRecord,
};
use crate::domain::{Domain, RegionSpec};
use crate::error::{invalid, Error, Result};
use crate::evaluation::make_regions;

/// A dataset the service can open sessions on.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub name: String,
    pub domain: Arc<Domain>,
    /// Regions used when a session does not bring its own.
    pub regions: RegionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub units: usize,
    pub regions: Vec<String>,
    pub has_oracle: bool,
    pub has_covariate: bool,
}

/// Full session state as served to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub record: SessionRecord,
    pub pending: Vec<DrawnUnit>,
    pub estimates: SessionEstimates,
}

/// Writes `record` to `<dir>/<id>.json` through a temporary file and rename.
pub fn persist(dir: impl AsRef<Path>, record: &SessionRecord) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let path = record_path(dir, &record.id)?;
    let tmp = dir.join(format!(".{}.json.tmp", record.id));
    {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut file, record)?;
        file.write_all(b"\n")?;
        file.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Reads and parses `<dir>/<id>.json`.
pub fn load_record(dir: impl AsRef<Path>, id: &str) -> Result<SessionRecord> {
    let path = record_path(dir.as_ref(), id)?;
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::UnknownSession(id.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let record: SessionRecord = serde_json::from_str(&text)
        .map_err(|e| Error::CorruptRecord(format!("{}: {e}", path.display())))?;
    if record.id != id {
        return Err(Error::CorruptRecord(format!(
            "{} holds session {:?}",
            path.display(),
            record.id
        )));
    }
    Ok(record)
}

fn record_path(dir: &Path, id: &str) -> Result<PathBuf> {
    let safe = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if !safe {
        return Err(Error::UnknownSession(id.to_string()));
    }
    Ok(dir.join(format!("{id}.json")))
}

/// Owns datasets and sessions. Each session sits behind its own mutex, so
/// mutations of one session are serialized and distinct sessions proceed
/// independently. Every successful mutation is persisted before it returns
/// when a state directory is configured.
#[derive(Debug)]
pub struct SessionService {
    datasets: BTreeMap<String, LoadedDataset>,
    state_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionService {
    pub fn new(datasets: Vec<LoadedDataset>, state_dir: Option<PathBuf>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for d in datasets {
            make_regions(&d.domain, &d.regions)?;
            if map.insert(d.name.clone(), d).is_some() {
                return Err(invalid("dataset names must be unique"));
            }
        }
        Ok(Self {
            datasets: map,
            state_dir,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn state_dir(&self) -> Option<&Path> {
        self.state_dir.as_deref()
    }

    pub fn datasets(&self) -> Vec<DatasetInfo> {
        self.datasets
            .values()
            .map(|d| DatasetInfo {
                name: d.name.clone(),
                units: d.domain.len(),
                regions: make_regions(&d.domain, &d.regions)
                    .map(|rs| rs.iter().map(|r| r.name().to_string()).collect())
                    .unwrap_or_default(),
                has_oracle: d.domain.units().iter().all(|u| u.oracle_f.is_some()),
                has_covariate: d.domain.units().iter().all(|u| u.covariate.is_some()),
            })
            .collect()
    }

    fn dataset(&self, name: Option<&str>) -> Result<&LoadedDataset> {
        match name {
            Some(n) => self
                .datasets
                .get(n)
                .ok_or_else(|| Error::UnknownDataset(n.to_string())),
            None if self.datasets.len() == 1 => Ok(self.datasets.values().next().unwrap()),
            None => Err(invalid("several datasets are loaded; name one")),
        }
    }

    fn save(&self, session: &Session) -> Result<()> {
        match &self.state_dir {
            Some(dir) => persist(dir, &session.record()).map(|_| ()),
            None => Ok(()),
        }
    }

    pub fn create_session(&self, mut config: SessionConfig) -> Result<String> {
        let dataset = self.dataset(config.dataset.as_deref())?;
        if config.regions.is_none() {
            config.regions = Some(dataset.regions.clone());
        }
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::create(&id, &dataset.name, dataset.domain.clone(), config)?;
        self.save(&session)?;
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// The live session, loading it from the state directory if needed.
    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        if let Some(s) = self
            .sessions
            .read()
            .expect("session table poisoned")
            .get(id)
        {
            return Ok(s.clone());
        }
        let dir = self
            .state_dir
            .as_ref()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))?;
        let record = load_record(dir, id)?;
        let dataset = self.datasets.get(&record.dataset).ok_or_else(|| {
            Error::CorruptRecord(format!("dataset {:?} not loaded", record.dataset))
        })?;
        let session = Session::from_record(record, dataset.domain.clone())?;
        let mut table = self.sessions.write().expect("session table poisoned");
        Ok(table
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(session)))
            .clone())
    }

    /// Runs `f` on a copy of the session and commits it only if `f` and the
    /// persist step both succeed.
    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let handle = self.session(id)?;
        let mut guard = handle.lock().expect("session poisoned");
        let mut next = guard.clone();
        let out = f(&mut next)?;
        self.save(&next)?;
        *guard = next;
        Ok(out)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T>) -> Result<T> {
        let handle = self.session(id)?;
        let guard = handle.lock().expect("session poisoned");
        f(&guard)
    }

    pub fn draw_batch(&self, id: &str, n: usize) -> Result<Vec<DrawnUnit>> {
        self.mutate(id, |s| s.draw_batch(n))
    }

    pub fn submit_labels(&self, id: &str, labels: &[LabelSubmission]) -> Result<SessionEstimates> {
        self.mutate(id, |s| s.submit_labels(labels))
    }

    pub fn update_config(&self, id: &str, update: &ConfigUpdate) -> Result<SessionEstimates> {
        self.mutate(id, |s| {
            s.update_config(update)?;
            s.current_estimates()
        })
    }

    pub fn current_estimates(&self, id: &str) -> Result<SessionEstimates> {
        self.read(id, Session::current_estimates)
    }

    pub fn state(&self, id: &str) -> Result<SessionState> {
        self.read(id, |s| {
            Ok(SessionState {
                record: s.record(),
                pending: s.pending(),
                estimates: s.current_estimates()?,
            })
        })
    }

    /// A snapshot of the session.
    pub fn snapshot(&self, id: &str) -> Result<Session> {
        self.read(id, |s| Ok(s.clone()))
    }

    /// Drops the in-memory copy; the next access reloads from disk.
    pub fn evict(&self, id: &str) -> bool {
        self.sessions
            .write()
            .expect("session table poisoned")
            .remove(id)
            .is_some()
    }
}
