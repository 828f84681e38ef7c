//! Screening sessions: draw batches, collect labels, serve live estimates.
//!
//! A session draws from the whole domain proportionally to `g` and estimates
//! every region jointly. Only the longest fully labeled prefix of the draw
//! sequence enters the estimates, so a screener lagging behind the sampler
//! never biases them. Sessions persist as one JSON file each and replay
//! exactly after a restart.

mod core;
mod http;
mod store;

pub use self::core::{
    ConfigUpdate, DrawnUnit, LabelSubmission, RegionStatus, Session, SessionConfig,
    SessionEstimates, SessionRecord, RECORD_VERSION,
};
pub use self::http::{router, serve, ApiError};
pub use self::store::{
    load_record, persist, DatasetInfo, LoadedDataset, SessionService, SessionState,
};
