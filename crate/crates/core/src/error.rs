use std::fmt;

use thiserror::Error;

use crate::model::{Cycle, RouterId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
    #[error("config file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read config file {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Interleaving,
    CreditNegative,
    CreditOverflow,
    FlitLoss,
    Deadlock,
    HybridLock,
    Misroute,
    BufferOverflow,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Interleaving => "interleaving",
            ViolationKind::CreditNegative => "credit-negative",
            ViolationKind::CreditOverflow => "credit-overflow",
            ViolationKind::FlitLoss => "flit-loss",
            ViolationKind::Deadlock => "deadlock",
            ViolationKind::HybridLock => "hybrid-lock",
            ViolationKind::Misroute => "misroute",
            ViolationKind::BufferOverflow => "buffer-overflow",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationRecord {
    pub cycle: Cycle,
    /// `None` for network-wide checks.
    pub router: Option<RouterId>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl ViolationRecord {
    pub fn new(
        cycle: Cycle,
        router: Option<RouterId>,
        kind: ViolationKind,
        detail: impl Into<String>,
    ) -> Self {
        ViolationRecord {
            cycle,
            router,
            kind,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ViolationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.router {
            Some(r) => write!(
                f,
                "cycle {} router {}: {}: {}",
                self.cycle, r, self.kind, self.detail
            ),
            None => write!(f, "cycle {}: {}: {}", self.cycle, self.kind, self.detail),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation aborted: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Violation(Vec<ViolationRecord>),
}
