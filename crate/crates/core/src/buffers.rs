//! Input buffer organizations: a shared DAMQ per input port with one private
//! slot per VC, or private per-VC FIFOs.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::ConfigError;
use crate::model::{Cycle, Flit, HopRecord, PacketDescriptor, RouterId, VcId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BufferOrganization {
    /// DAMQ: `total_slots` per port, one of them private to each VC.
    Shared {
        total_slots: u32,
    },
    Private {
        slots_per_vc: u32,
    },
}

impl BufferOrganization {
    /// Slots a single VC can hold at most.
    pub fn vc_capacity(self, vc_count: usize) -> u32 {
        match self {
            BufferOrganization::Shared { total_slots } => total_slots + 1 - vc_count as u32,
            BufferOrganization::Private { slots_per_vc } => slots_per_vc,
        }
    }

    pub fn total_capacity(self, vc_count: usize) -> u32 {
        match self {
            BufferOrganization::Shared { total_slots } => total_slots,
            BufferOrganization::Private { slots_per_vc } => slots_per_vc * vc_count as u32,
        }
    }

    pub fn validate(self, vc_count: usize) -> Result<(), ConfigError> {
        if vc_count == 0 {
            return Err(ConfigError::Invalid("at least one VC is required".into()));
        }
        match self {
            BufferOrganization::Shared { total_slots } if (total_slots as usize) < vc_count => {
                Err(ConfigError::Invalid(format!(
                    "shared buffer of {total_slots} slots cannot give {vc_count} VCs a private slot each"
                )))
            }
            BufferOrganization::Private { slots_per_vc: 0 } => {
                Err(ConfigError::Invalid("private buffers need at least one slot".into()))
            }
            _ => Ok(()),
        }
    }

    /// Free slots VC `vc` can still accept given per-VC usage counts. Usage may
    /// be physical occupancy or an upstream credit mirror of it.
    pub fn free_for(self, used: &[u32], vc: usize) -> u32 {
        match self {
            BufferOrganization::Private { slots_per_vc } => slots_per_vc.saturating_sub(used[vc]),
            BufferOrganization::Shared { total_slots } => {
                let pool = total_slots - used.len() as u32;
                let pool_used: u32 = used.iter().map(|&u| u.saturating_sub(1)).sum();
                let private = u32::from(used[vc] == 0);
                private + pool.saturating_sub(pool_used)
            }
        }
    }
}

impl fmt::Display for BufferOrganization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferOrganization::Shared { total_slots } => write!(f, "shared:{total_slots}"),
            BufferOrganization::Private { slots_per_vc } => write!(f, "private:{slots_per_vc}"),
        }
    }
}

impl FromStr for BufferOrganization {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, n) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| ConfigError::Invalid(format!("buffer spec '{s}' must be kind:slots")))?;
        let n: u32 = n
            .trim()
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("bad slot count in '{s}'")))?;
        match kind.trim() {
            "shared" | "damq" => Ok(BufferOrganization::Shared { total_slots: n }),
            "private" => Ok(BufferOrganization::Private { slots_per_vc: n }),
            other => Err(ConfigError::Invalid(format!(
                "unknown buffer kind '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcStatus {
    Idle,
    Active,
}

/// Per input-VC control registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VcState {
    pub state: VcStatus,
    pub out_port: Option<u8>,
    pub out_vc: Option<VcId>,
    pub active_packet: Option<PacketDescriptor>,
    /// The active packet is crossing this router on the bypass path.
    pub bypassing: bool,
}

impl Default for VcState {
    fn default() -> Self {
        VcState {
            state: VcStatus::Idle,
            out_port: None,
            out_vc: None,
            active_packet: None,
            bypassing: false,
        }
    }
}

impl VcState {
    pub fn is_active(&self) -> bool {
        self.state == VcStatus::Active
    }

    pub fn activate(
        &mut self,
        packet: PacketDescriptor,
        out_port: u8,
        out_vc: VcId,
        bypassing: bool,
    ) {
        self.state = VcStatus::Active;
        self.out_port = Some(out_port);
        self.out_vc = Some(out_vc);
        self.active_packet = Some(packet);
        self.bypassing = bypassing;
    }

    pub fn release(&mut self) {
        *self = VcState::default();
    }

    pub fn holds(&self, packet_id: u64) -> bool {
        self.is_active() && self.active_packet.map(|p| p.id) == Some(packet_id)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BufferError {
    #[error("push into VC {vc} with no free slot (occupancy {occupancy})")]
    Full { vc: usize, occupancy: u32 },
    #[error("pop from empty VC {vc}")]
    Empty { vc: usize },
}

#[derive(Debug, Clone)]
pub struct InputBuffer {
    organization: BufferOrganization,
    queues: Vec<VecDeque<Flit>>,
    occupancy: Vec<u32>,
    pub vc_states: Vec<VcState>,
}

impl InputBuffer {
    pub fn new(organization: BufferOrganization, vc_count: usize) -> Self {
        let cap = organization.vc_capacity(vc_count) as usize;
        InputBuffer {
            organization,
            queues: (0..vc_count)
                .map(|_| VecDeque::with_capacity(cap))
                .collect(),
            occupancy: vec![0; vc_count],
            vc_states: vec![VcState::default(); vc_count],
        }
    }

    pub fn organization(&self) -> BufferOrganization {
        self.organization
    }

    pub fn vc_count(&self) -> usize {
        self.queues.len()
    }

    pub fn occupancy(&self, vc: usize) -> u32 {
        self.occupancy[vc]
    }

    pub fn total_occupancy(&self) -> u32 {
        self.occupancy.iter().sum()
    }

    pub fn free_slots(&self, vc: usize) -> u32 {
        self.organization.free_for(&self.occupancy, vc)
    }

    /// Buffer write. Marks the flit as buffered at `router`.
    pub fn push(
        &mut self,
        vc: usize,
        mut flit: Flit,
        router: RouterId,
        cycle: Cycle,
    ) -> Result<(), BufferError> {
        if self.free_slots(vc) == 0 {
            return Err(BufferError::Full {
                vc,
                occupancy: self.occupancy[vc],
            });
        }
        flit.hops.push(HopRecord {
            router,
            was_buffered: true,
        });
        flit.buffered_at = cycle;
        flit.vc = vc as VcId;
        self.queues[vc].push_back(flit);
        self.occupancy[vc] += 1;
        Ok(())
    }

    /// Removes the front flit of `vc`. The caller owes the upstream router one credit.
    pub fn pop(&mut self, vc: usize) -> Result<Flit, BufferError> {
        let flit = self.queues[vc]
            .pop_front()
            .ok_or(BufferError::Empty { vc })?;
        self.occupancy[vc] -= 1;
        Ok(flit)
    }

    pub fn front(&self, vc: usize) -> Option<&Flit> {
        self.queues[vc].front()
    }

    pub fn queue(&self, vc: usize) -> &VecDeque<Flit> {
        &self.queues[vc]
    }

    /// Occupancy and activity of `vc` as seen by a lookahead this cycle.
    pub fn vc_bypassable(&self, vc: usize) -> (u32, VcStatus) {
        (self.occupancy[vc], self.vc_states[vc].state)
    }

    /// Checks that no VC queue mixes flits of different packets between a
    /// head and its tail. Returns a description of the first problem.
    pub fn check_interleaving(&self) -> Option<String> {
        for (vc, q) in self.queues.iter().enumerate() {
            let mut prev: Option<&Flit> = None;
            for f in q {
                match prev {
                    None => {
                        if !f.is_head() && !self.vc_states[vc].holds(f.packet.id) {
                            return Some(format!(
                                "vc {vc}: {}{} of packet {} at front without its packet active",
                                f.role.symbol(),
                                f.seq,
                                f.packet.id
                            ));
                        }
                    }
                    Some(p) if !p.is_tail() => {
                        if f.packet.id != p.packet.id || f.seq != p.seq + 1 {
                            return Some(format!(
                                "vc {vc}: packet {} flit {} follows unfinished packet {} flit {}",
                                f.packet.id, f.seq, p.packet.id, p.seq
                            ));
                        }
                    }
                    Some(p) => {
                        if !f.is_head() {
                            return Some(format!(
                                "vc {vc}: {} of packet {} follows tail of packet {}",
                                f.role.symbol(),
                                f.packet.id,
                                p.packet.id
                            ));
                        }
                    }
                }
                prev = Some(f);
            }
        }
        None
    }
}
