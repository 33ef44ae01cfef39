//! Knowledge: goals, policies, model versions and the system logs.

pub mod export;
mod store;
mod types;

pub use export::{
    adaptations_csv, parse_adaptations_csv, parse_telemetry_csv, telemetry_csv, LogKind, ADAPTATIONS_HEADER, TELEMETRY_HEADER,
};
pub use store::KnowledgeStore;
pub use types::*;
