//! Forwarding and bypass eligibility, credit accounting and torus deadlock
//! avoidance rules.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::buffers::{BufferOrganization, VcStatus};
use crate::error::ConfigError;
use crate::model::{BypassRule, Cycle, FlitRole, Mechanism, VcId};

/// Cycles between a credit being sent and it being usable upstream.
pub const CREDIT_DELAY: Cycle = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopKind {
    /// From a local input port into the network.
    Injection,
    DimensionChange,
    /// Continuing in the same ring/dimension.
    InRing,
    /// Leaving the network through a local output port.
    Ejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeadlockRule {
    None,
    FbfcL,
    Bubble,
    Dateline,
}

impl DeadlockRule {
    pub fn name(self) -> &'static str {
        match self {
            DeadlockRule::None => "none",
            DeadlockRule::FbfcL => "fbfc",
            DeadlockRule::Bubble => "bubble",
            DeadlockRule::Dateline => "dateline",
        }
    }
}

impl fmt::Display for DeadlockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeadlockRule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(DeadlockRule::None),
            "fbfc" | "fbfc-l" | "fbfcl" => Ok(DeadlockRule::FbfcL),
            "bubble" => Ok(DeadlockRule::Bubble),
            "dateline" => Ok(DeadlockRule::Dateline),
            other => Err(ConfigError::Invalid(format!(
                "unknown deadlock rule '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BypassDecision {
    Deny,
    AllowWh,
    AllowVct,
}

impl BypassDecision {
    pub fn allowed(self) -> bool {
        self != BypassDecision::Deny
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardContext {
    pub rule: BypassRule,
    /// Buffered flits are forwarded with whole-packet reservations.
    pub standard_vct: bool,
    pub packet_size: u16,
    pub max_packet_size: u16,
    pub flit_role: FlitRole,
    pub bypass_vc_occupancy: u32,
    pub bypass_vc_state: VcStatus,
    /// Credit view of the destination VC at the next router.
    pub dest_free: u32,
    /// Free space of the bypassed VC at this router.
    pub bypass_free: u32,
    pub hop_kind: HopKind,
}

impl ForwardContext {
    pub fn new(mechanism: Mechanism, packet_size: u16, flit_role: FlitRole) -> Self {
        ForwardContext {
            rule: mechanism.bypass_rule(),
            standard_vct: mechanism.standard_is_vct(),
            packet_size,
            max_packet_size: packet_size,
            flit_role,
            bypass_vc_occupancy: 0,
            bypass_vc_state: VcStatus::Idle,
            dest_free: 0,
            bypass_free: 0,
            hop_kind: HopKind::InRing,
        }
    }
}

/// Whether a buffered flit holding an output VC may cross the switch.
/// `prepaid` marks packets whose whole size was debited at the head.
pub fn can_forward_standard(ctx: &ForwardContext, rule: DeadlockRule, prepaid: bool) -> bool {
    let head = ctx.flit_role.is_head();
    let space = if ctx.standard_vct && ctx.packet_size > 1 {
        !head || ctx.dest_free >= ctx.packet_size as u32
    } else if prepaid && !head {
        true
    } else {
        ctx.dest_free >= 1
    };
    space && (!head || deadlock_condition(rule, ctx))
}

pub fn bypass_eligible(ctx: &ForwardContext) -> BypassDecision {
    if ctx.bypass_vc_state == VcStatus::Active {
        return BypassDecision::Deny;
    }
    let size = ctx.packet_size as u32;
    let empty = ctx.bypass_vc_occupancy == 0;
    let wh = ctx.dest_free >= 1;
    let vct = ctx.dest_free >= size && ctx.bypass_free >= size;
    let allow = |ok: bool, d: BypassDecision| if ok { d } else { BypassDecision::Deny };
    match ctx.rule {
        BypassRule::Vct => allow(empty && vct, BypassDecision::AllowVct),
        BypassRule::WhEmptyVc | BypassRule::WhBaseline => {
            allow(empty && wh, BypassDecision::AllowWh)
        }
        BypassRule::NebbWh => allow((empty || size == 1) && wh, BypassDecision::AllowWh),
        BypassRule::NebbVct => allow(vct, BypassDecision::AllowVct),
        BypassRule::NebbHybrid => {
            if empty || size == 1 {
                allow(wh, BypassDecision::AllowWh)
            } else {
                allow(vct, BypassDecision::AllowVct)
            }
        }
    }
}

/// Space rule for heads entering a ring. In-ring FBFC hops only need the
/// ordinary flow-control space, which the caller checks separately.
pub fn deadlock_condition(rule: DeadlockRule, ctx: &ForwardContext) -> bool {
    let size = ctx.packet_size as u32;
    let entering = matches!(ctx.hop_kind, HopKind::Injection | HopKind::DimensionChange);
    match rule {
        DeadlockRule::None | DeadlockRule::Dateline => true,
        DeadlockRule::FbfcL => !entering || ctx.dest_free > size,
        DeadlockRule::Bubble => match ctx.hop_kind {
            HopKind::Injection | HopKind::DimensionChange => {
                ctx.dest_free >= 2 * ctx.max_packet_size as u32
            }
            HopKind::InRing => ctx.dest_free >= size,
            HopKind::Ejection => true,
        },
    }
}

/// Whether the head debits the whole packet size at once.
pub fn whole_packet_debit(
    vct_forwarding: bool,
    torus_shared: bool,
    packet_size: u16,
    hop_kind: HopKind,
) -> bool {
    packet_size > 1
        && (vct_forwarding
            || (torus_shared && matches!(hop_kind, HopKind::Injection | HopKind::DimensionChange)))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CreditError {
    #[error("debit of {amount} on vc {vc} with only {free} free")]
    Negative { vc: usize, amount: u32, free: u32 },
    #[error("credit returned to vc {vc} with nothing outstanding")]
    Overflow { vc: usize },
}

/// Upstream mirror of one downstream input port. Tracks how many slots of
/// each downstream VC are spoken for (buffered, in flight, reserved or
/// awaiting a returning credit).
#[derive(Debug, Clone)]
pub struct CreditLedger {
    organization: BufferOrganization,
    used: Vec<u32>,
    /// (apply_cycle, vc) in nondecreasing cycle order.
    returns: VecDeque<(Cycle, VcId)>,
    /// Sink with unbounded space (ejection).
    unbounded: bool,
}

impl CreditLedger {
    pub fn new(organization: BufferOrganization, vc_count: usize) -> Self {
        CreditLedger {
            organization,
            used: vec![0; vc_count],
            returns: VecDeque::new(),
            unbounded: false,
        }
    }

    pub fn unbounded(vc_count: usize) -> Self {
        CreditLedger {
            organization: BufferOrganization::Private {
                slots_per_vc: u32::MAX,
            },
            used: vec![0; vc_count],
            returns: VecDeque::new(),
            unbounded: true,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn vc_count(&self) -> usize {
        self.used.len()
    }

    pub fn free(&self, vc: usize) -> u32 {
        if self.unbounded {
            return u32::MAX / 2;
        }
        self.organization.free_for(&self.used, vc)
    }

    pub fn used(&self, vc: usize) -> u32 {
        self.used[vc]
    }

    /// Initial credit of a VC.
    pub fn capacity(&self) -> u32 {
        self.organization.vc_capacity(self.used.len())
    }

    pub fn debit(&mut self, vc: usize, amount: u32) -> Result<(), CreditError> {
        if self.unbounded {
            return Ok(());
        }
        let free = self.free(vc);
        if amount > free {
            return Err(CreditError::Negative { vc, amount, free });
        }
        self.used[vc] += amount;
        Ok(())
    }

    /// A slot of `vc` was freed downstream at `cycle`.
    pub fn schedule_return(&mut self, vc: usize, cycle: Cycle) {
        if self.unbounded {
            return;
        }
        self.returns.push_back((cycle + CREDIT_DELAY, vc as VcId));
    }

    pub fn apply_returns(&mut self, cycle: Cycle) -> Result<(), CreditError> {
        while let Some(&(at, vc)) = self.returns.front() {
            if at > cycle {
                break;
            }
            self.returns.pop_front();
            let vc = vc as usize;
            if self.used[vc] == 0 {
                return Err(CreditError::Overflow { vc });
            }
            self.used[vc] -= 1;
        }
        Ok(())
    }

    pub fn pending_returns(&self, vc: usize) -> u32 {
        self.returns.iter().filter(|r| r.1 as usize == vc).count() as u32
    }
}
