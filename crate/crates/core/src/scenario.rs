//! Scripted switch-allocator deadlock on a three-router unidirectional ring
//! with flit-bubble flow control.
//!
//! Every router holds one packet whose head already left and whose tail is
//! favored at the switch input but cannot move because the next router's VC
//! is full. Keeping that favor until the tail leaves locks the ring; dropping
//! it on a stall lets another VC at the same input go first and the ring
//! drains.

use crate::arbiters::SaInputMode;
use crate::buffers::BufferOrganization;
use crate::engine::{Network, SimConfig};
use crate::error::{ConfigError, SimError, ViolationKind, ViolationRecord};
use crate::flow_control::DeadlockRule;
use crate::model::{Cycle, Direction, Mechanism, PacketDescriptor, PortId, RouterId};
use crate::topology::{NetworkShape, TopologyKind};
use crate::traffic::SizeDist;

/// Packets in the script, in creation order.
pub const PACKETS: [(char, RouterId, RouterId); 7] = [
    ('A', 0, 2),
    ('B', 0, 2),
    ('C', 1, 0),
    ('D', 1, 0),
    ('E', 2, 1),
    ('F', 2, 1),
    ('G', 1, 0),
];

/// Cycles the scripted network is given to drain.
pub const DRAIN_LIMIT: Cycle = 5_000;

pub fn stalled_ring_config(mode: SaInputMode) -> SimConfig {
    SimConfig {
        topology: TopologyKind::Torus,
        k: 3,
        concentration: 1,
        mechanism: Mechanism::WhBaseline,
        vcs: 2,
        // two flits plus the bubble
        buffer: BufferOrganization::Private { slots_per_vc: 3 },
        packet_sizes: SizeDist::Bimodal {
            p_short: 1.0,
            short: 2,
            long: 2,
        },
        load: 0.0,
        deadlock_rule: Some(DeadlockRule::FbfcL),
        sa_input_mode: mode,
        cycles: DRAIN_LIMIT,
        warmup_fraction: 0.0,
        check: true,
        ..SimConfig::default()
    }
}

pub fn stalled_ring_shape() -> NetworkShape {
    NetworkShape::ring(3, 1)
}

/// Builds the ring in the state just before the lock-up: every input VC
/// bound to its output VC, the stalled tails favored at the switch input,
/// and packet D still waiting at its source.
pub fn stalled_ring(mode: SaInputMode) -> Result<Network, ConfigError> {
    let mut net = Network::with_shape(stalled_ring_config(mode), stalled_ring_shape())?;
    let pkts: Vec<PacketDescriptor> = PACKETS
        .iter()
        .map(|&(_, s, d)| net.new_packet(s, d, 2))
        .collect();
    let [a, b, c, d, e, f, g] = [0, 1, 2, 3, 4, 5, 6].map(|i| pkts[i]);
    let input = PortId::Transit(Direction::XPlus).index();
    const HEAD: u16 = 0;
    const TAIL: u16 = 1;

    // (router, vc, flits front to back)
    type Slots<'a> = &'a [(PacketDescriptor, u16)];
    let contents: [(RouterId, usize, Slots); 6] = [
        (0, 0, &[(e, HEAD), (e, TAIL), (g, HEAD)]),
        (0, 1, &[(f, TAIL)]),
        (1, 0, &[(a, TAIL)]),
        (1, 1, &[(b, HEAD), (b, TAIL), (f, HEAD)]),
        (2, 0, &[(c, HEAD), (c, TAIL), (a, HEAD)]),
        (2, 1, &[(g, TAIL)]),
    ];
    for (router, vc, flits) in contents {
        for &(pkt, seq) in flits {
            net.preload_flit(router, input, vc, &pkt, seq)?;
        }
    }
    // (router, input vc, packet at its front, output vc)
    let bindings = [
        (0, 0, e, 0),
        (0, 1, f, 1),
        (1, 0, a, 0),
        (1, 1, b, 1),
        (2, 0, c, 1),
        (2, 1, g, 0),
    ];
    for (router, vc, pkt, ovc) in bindings {
        net.assign_vc(router, input, vc, ovc, &pkt);
    }
    for (router, vc) in [(0, 1), (1, 0), (2, 1)] {
        net.hold_sa(router, input, vc);
    }
    net.enqueue_packet(d);
    Ok(net)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub deadlock: Option<ViolationRecord>,
    pub ejected_packets: u64,
    pub cycles: Cycle,
}

/// Runs the scripted ring until it drains or stops making progress.
pub fn run_stalled_ring(mode: SaInputMode) -> Result<ScenarioOutcome, SimError> {
    let mut net = stalled_ring(mode)?;
    let deadlock = match net.run_until_drained(DRAIN_LIMIT) {
        Ok(_) => None,
        Err(SimError::Violation(v)) => {
            if let Some(other) = v.iter().find(|r| r.kind != ViolationKind::Deadlock) {
                return Err(SimError::Violation(vec![other.clone()]));
            }
            v.into_iter().next()
        }
        Err(e) => return Err(e),
    };
    Ok(ScenarioOutcome {
        deadlock,
        ejected_packets: net.ejected_packets,
        cycles: net.cycle,
    })
}
