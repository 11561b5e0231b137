//! Cycle-accurate network-on-chip simulator for lookahead-bypass routers and
//! the non-empty buffer bypass (NEBB) family of flow-control mechanisms.

pub mod arbiters;
pub mod buffers;
pub mod config;
pub mod engine;
pub mod error;
pub mod flow_control;
pub mod metrics;
pub mod model;
pub mod router;
pub mod scenario;
pub mod sweep;
pub mod topology;
pub mod traffic;

pub use error::{ConfigError, SimError, ViolationKind, ViolationRecord};
pub use model::{Mechanism, PacketDescriptor};
