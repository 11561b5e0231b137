//! Domain vocabulary shared by every part of the simulator: packets, flits,
//! lookaheads, mechanism identifiers and router ports.

use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;

pub type NodeId = u32;
pub type RouterId = u32;
pub type VcId = u8;
pub type Cycle = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketDescriptor {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    /// Length in flits, always >= 1.
    pub size: u16,
    pub creation_cycle: Cycle,
}

impl PacketDescriptor {
    pub fn is_multi_flit(&self) -> bool {
        self.size > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlitRole {
    /// Single-flit packet: acts as both head and tail.
    HeadTail,
    Head,
    Body,
    Tail,
}

impl FlitRole {
    pub fn is_head(self) -> bool {
        matches!(self, FlitRole::HeadTail | FlitRole::Head)
    }

    pub fn is_tail(self) -> bool {
        matches!(self, FlitRole::HeadTail | FlitRole::Tail)
    }

    pub fn symbol(self) -> char {
        match self {
            FlitRole::HeadTail => 'S',
            FlitRole::Head => 'H',
            FlitRole::Body => 'B',
            FlitRole::Tail => 'T',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopRecord {
    pub router: RouterId,
    pub was_buffered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flit {
    pub packet: PacketDescriptor,
    pub role: FlitRole,
    pub seq: u16,
    pub injection_cycle: Cycle,
    /// Router-level path taken so far.
    pub hops: Vec<HopRecord>,
    /// VC occupied (or reserved) at the input port the flit is heading to or sits in.
    pub vc: VcId,
    /// Output port at the router the flit is heading to / sits in (lookahead route).
    pub route: u8,
    /// Dateline already crossed in the current dimension.
    pub dateline_crossed: bool,
    /// Cycle the flit was written into its current input buffer.
    pub buffered_at: Cycle,
}

impl Flit {
    pub fn is_head(&self) -> bool {
        self.role.is_head()
    }

    pub fn is_tail(&self) -> bool {
        self.role.is_tail()
    }
}

/// Split a packet into its flits. Per-hop records start out empty.
pub fn segment_packet(pkt: &PacketDescriptor) -> Result<Vec<Flit>, ConfigError> {
    if pkt.size == 0 {
        return Err(ConfigError::Invalid(format!(
            "packet {} has zero flits",
            pkt.id
        )));
    }
    let n = pkt.size;
    Ok((0..n)
        .map(|seq| {
            let role = if n == 1 {
                FlitRole::HeadTail
            } else if seq == 0 {
                FlitRole::Head
            } else if seq == n - 1 {
                FlitRole::Tail
            } else {
                FlitRole::Body
            };
            Flit {
                packet: *pkt,
                role,
                seq,
                injection_cycle: 0,
                hops: Vec::with_capacity(16),
                vc: 0,
                route: 0,
                dateline_crossed: false,
                buffered_at: 0,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LaPriority {
    Normal,
    Max,
}

/// Control record sent one cycle ahead of its flit to pre-configure the crossbar
/// at the receiving router.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lookahead {
    pub packet: PacketDescriptor,
    pub flit_role: FlitRole,
    pub seq: u16,
    /// Output port requested at the receiving router.
    pub out_port: u8,
    /// Input VC the flit occupies if it ends up buffered.
    pub in_vc: VcId,
    /// VC chosen at the router after next; filled in when the bypass is granted.
    pub dest_vc: Option<VcId>,
    pub vct_mode: bool,
    pub priority: LaPriority,
}

pub fn make_lookahead(
    flit: &Flit,
    out_port: u8,
    in_vc: VcId,
    dest_vc: Option<VcId>,
    vct_mode: bool,
) -> Lookahead {
    let priority = if vct_mode && flit.packet.is_multi_flit() {
        LaPriority::Max
    } else {
        LaPriority::Normal
    };
    Lookahead {
        packet: flit.packet,
        flit_role: flit.role,
        seq: flit.seq,
        out_port,
        in_vc,
        dest_vc,
        vct_mode,
        priority,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    EmptyVc,
    EmptyVcArb,
    WhBaseline,
    WhBaselineArb,
    NebbWh,
    NebbVct,
    NebbHybrid,
}

/// How lookaheads competing for an output are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaArbMode {
    ConflictCheck,
    Arbiter,
    HybridPriority,
}

/// Bypass admission rule, one per row of the bypass decision table. Plain
/// `Vct` has no simulated mechanism of its own but is part of the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BypassRule {
    Vct,
    WhEmptyVc,
    WhBaseline,
    NebbWh,
    NebbVct,
    NebbHybrid,
}

impl BypassRule {
    pub const ALL: [BypassRule; 6] = [
        BypassRule::Vct,
        BypassRule::WhEmptyVc,
        BypassRule::WhBaseline,
        BypassRule::NebbWh,
        BypassRule::NebbVct,
        BypassRule::NebbHybrid,
    ];
}

impl Mechanism {
    pub const ALL: [Mechanism; 7] = [
        Mechanism::EmptyVc,
        Mechanism::EmptyVcArb,
        Mechanism::WhBaseline,
        Mechanism::WhBaselineArb,
        Mechanism::NebbWh,
        Mechanism::NebbVct,
        Mechanism::NebbHybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::EmptyVc => "empty-vc",
            Mechanism::EmptyVcArb => "empty-vc+arb",
            Mechanism::WhBaseline => "wh-baseline",
            Mechanism::WhBaselineArb => "wh-baseline+arb",
            Mechanism::NebbWh => "nebb-wh",
            Mechanism::NebbVct => "nebb-vct",
            Mechanism::NebbHybrid => "nebb-hybrid",
        }
    }

    pub fn is_empty_vc(self) -> bool {
        matches!(self, Mechanism::EmptyVc | Mechanism::EmptyVcArb)
    }

    /// The standard (buffered) pipeline forwards whole packets.
    pub fn standard_is_vct(self) -> bool {
        self == Mechanism::NebbVct
    }

    pub fn la_mode(self) -> LaArbMode {
        match self {
            Mechanism::EmptyVc | Mechanism::WhBaseline => LaArbMode::ConflictCheck,
            Mechanism::EmptyVcArb | Mechanism::WhBaselineArb | Mechanism::NebbWh => {
                LaArbMode::Arbiter
            }
            Mechanism::NebbVct | Mechanism::NebbHybrid => LaArbMode::HybridPriority,
        }
    }

    pub fn bypass_rule(self) -> BypassRule {
        match self {
            Mechanism::EmptyVc | Mechanism::EmptyVcArb => BypassRule::WhEmptyVc,
            Mechanism::WhBaseline | Mechanism::WhBaselineArb => BypassRule::WhBaseline,
            Mechanism::NebbWh => BypassRule::NebbWh,
            Mechanism::NebbVct => BypassRule::NebbVct,
            Mechanism::NebbHybrid => BypassRule::NebbHybrid,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        let m = match norm.as_str() {
            "empty-vc" | "emptyvc" => Mechanism::EmptyVc,
            "empty-vc+arb" | "emptyvc+arb" | "empty-vc-arb" => Mechanism::EmptyVcArb,
            "wh-baseline" | "baseline" => Mechanism::WhBaseline,
            "wh-baseline+arb" | "baseline+arb" | "wh-baseline-arb" => Mechanism::WhBaselineArb,
            "nebb-wh" => Mechanism::NebbWh,
            "nebb-vct" => Mechanism::NebbVct,
            "nebb-hybrid" | "hybrid" | "nebb" => Mechanism::NebbHybrid,
            _ => return Err(ConfigError::Invalid(format!("unknown mechanism '{s}'"))),
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::XPlus,
        Direction::XMinus,
        Direction::YPlus,
        Direction::YMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn dimension(self) -> usize {
        match self {
            Direction::XPlus | Direction::XMinus => 0,
            Direction::YPlus | Direction::YMinus => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Direction::XPlus | Direction::YPlus)
    }
}

pub const TRANSIT_PORTS: usize = 4;

/// Upper bound on router radix (transit plus local ports).
pub const MAX_PORTS: usize = 64;

/// A router port. Transit ports are numbered 0..4 in `Direction` order, local
/// ports follow. An input port named by a direction receives flits travelling
/// in that direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortId {
    Transit(Direction),
    Local(u8),
}

impl PortId {
    pub fn index(self) -> usize {
        match self {
            PortId::Transit(d) => d.index(),
            PortId::Local(slot) => TRANSIT_PORTS + slot as usize,
        }
    }

    pub fn from_index(idx: usize) -> PortId {
        if idx < TRANSIT_PORTS {
            PortId::Transit(Direction::ALL[idx])
        } else {
            PortId::Local((idx - TRANSIT_PORTS) as u8)
        }
    }

    pub fn is_local(self) -> bool {
        matches!(self, PortId::Local(_))
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            PortId::Transit(d) => Some(d),
            PortId::Local(_) => None,
        }
    }

    /// All ports of a router with concentration `c`: 4 transit + `c` local.
    pub fn all(concentration: usize) -> Vec<PortId> {
        (0..TRANSIT_PORTS + concentration)
            .map(PortId::from_index)
            .collect()
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortId::Transit(Direction::XPlus) => f.write_str("X+"),
            PortId::Transit(Direction::XMinus) => f.write_str("X-"),
            PortId::Transit(Direction::YPlus) => f.write_str("Y+"),
            PortId::Transit(Direction::YMinus) => f.write_str("Y-"),
            PortId::Local(s) => write!(f, "L{s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pkt(size: u16) -> PacketDescriptor {
        PacketDescriptor {
            id: 7,
            source: 0,
            destination: 3,
            size,
            creation_cycle: 0,
        }
    }

    fn roles(size: u16) -> Vec<FlitRole> {
        segment_packet(&pkt(size))
            .unwrap()
            .iter()
            .map(|f| f.role)
            .collect()
    }

    #[test]
    fn segment_single_flit() {
        assert_eq!(roles(1), vec![FlitRole::HeadTail]);
    }

    #[test]
    fn segment_five_flits() {
        use FlitRole::*;
        assert_eq!(roles(5), vec![Head, Body, Body, Body, Tail]);
    }

    #[test]
    fn segment_two_flits() {
        assert_eq!(roles(2), vec![FlitRole::Head, FlitRole::Tail]);
    }

    #[test]
    fn segment_zero_is_error() {
        assert!(segment_packet(&pkt(0)).is_err());
    }

    #[test]
    fn lookahead_priority() {
        let five = segment_packet(&pkt(5)).unwrap();
        let one = segment_packet(&pkt(1)).unwrap();
        assert_eq!(
            make_lookahead(&five[0], 0, 0, None, true).priority,
            LaPriority::Max
        );
        assert_eq!(
            make_lookahead(&one[0], 0, 0, None, true).priority,
            LaPriority::Normal
        );
        assert_eq!(
            make_lookahead(&five[2], 0, 0, None, false).priority,
            LaPriority::Normal
        );
    }

    #[test]
    fn port_index_roundtrip() {
        for (i, p) in PortId::all(4).into_iter().enumerate() {
            assert_eq!(p.index(), i);
        }
        assert_eq!(PortId::all(4).len(), 8);
    }

    #[test]
    fn mechanism_names_parse() {
        for m in Mechanism::ALL {
            assert_eq!(m.name().parse::<Mechanism>().unwrap(), m);
        }
        assert!("bogus".parse::<Mechanism>().is_err());
    }

    proptest! {
        #[test]
        fn roles_match_head_body_tail_pattern(size in 1u16..40) {
            let flits = segment_packet(&pkt(size)).unwrap();
            prop_assert_eq!(flits.len(), size as usize);
            let s: String = flits.iter().map(|f| f.role.symbol()).collect();
            let ok = s == "S" || (s.starts_with('H') && s.ends_with('T')
                && s[1..s.len() - 1].chars().all(|c| c == 'B'));
            prop_assert!(ok, "bad role string {}", s);
            for (i, f) in flits.iter().enumerate() {
                prop_assert_eq!(f.seq as usize, i);
                prop_assert!(f.hops.is_empty());
            }
        }
    }
}
