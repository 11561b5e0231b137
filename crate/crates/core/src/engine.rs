//! Network assembly, the cycle loop, runtime checkers and the deadlock
//! watchdog.

use std::collections::VecDeque;
use std::fmt;

use crate::arbiters::SaInputMode;
use crate::buffers::BufferOrganization;
use crate::error::{ConfigError, SimError, ViolationKind, ViolationRecord};
use crate::flow_control::{CreditLedger, DeadlockRule};
use crate::metrics::{zero_load_latency, MetricsCollector, SimReport};
use crate::model::{
    segment_packet, Cycle, Flit, Mechanism, NodeId, PacketDescriptor, PortId, RouterId, VcId,
    TRANSIT_PORTS,
};
use crate::router::{CreditSink, CycleCtx, LaPriorityMode, Links, Router, RouterParams};
use crate::topology::{dor_route, NetworkShape, TopologyKind};
use crate::traffic::{Pattern, SizeDist, TrafficGenerator, TrafficSpec};

pub const DEFAULT_WATCHDOG_HORIZON: Cycle = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: TopologyKind,
    /// Routers per dimension.
    pub k: u32,
    /// Nodes per router.
    pub concentration: u32,
    pub mechanism: Mechanism,
    pub vcs: usize,
    pub buffer: BufferOrganization,
    /// Cycles per link. Only single-cycle links are modeled.
    pub link_latency: u32,
    pub packet_sizes: SizeDist,
    pub pattern: Pattern,
    /// Offered load in flits per node per cycle.
    pub load: f64,
    /// `None` picks the default rule for the topology and mechanism.
    pub deadlock_rule: Option<DeadlockRule>,
    pub la_priority: LaPriorityMode,
    pub la_threshold: Option<u64>,
    pub sa_input_mode: SaInputMode,
    pub cycles: Cycle,
    /// Fraction of `cycles` excluded from statistics.
    pub warmup_fraction: f64,
    pub seed: u64,
    pub check: bool,
    pub watchdog_horizon: Cycle,
    /// Test hook: allows unsafe multi-flit bypasses into occupied VCs.
    pub unsafe_bypass: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            topology: TopologyKind::Mesh,
            k: 8,
            concentration: 4,
            mechanism: Mechanism::NebbHybrid,
            vcs: 2,
            buffer: BufferOrganization::Shared { total_slots: 12 },
            link_latency: 1,
            packet_sizes: SizeDist::bimodal(),
            pattern: Pattern::Uniform,
            load: 0.05,
            deadlock_rule: None,
            la_priority: LaPriorityMode::Lookaheads,
            la_threshold: None,
            sa_input_mode: SaInputMode::DemoteOnStall,
            cycles: 50_000,
            warmup_fraction: 0.2,
            seed: 1,
            check: false,
            watchdog_horizon: DEFAULT_WATCHDOG_HORIZON,
            unsafe_bypass: false,
        }
    }
}

impl SimConfig {
    pub fn shape(&self) -> NetworkShape {
        NetworkShape::new(self.topology, self.k, self.concentration)
    }

    pub fn traffic(&self) -> TrafficSpec {
        TrafficSpec {
            pattern: self.pattern.clone(),
            injection_rate: self.load,
            size_dist: self.packet_sizes,
            seed: self.seed,
        }
    }

    /// The torus deadlock-avoidance rule in effect.
    pub fn effective_deadlock_rule(&self) -> DeadlockRule {
        if let Some(r) = self.deadlock_rule {
            return r;
        }
        match self.topology {
            TopologyKind::Mesh => DeadlockRule::None,
            TopologyKind::Torus => match self.mechanism {
                m if m.is_empty_vc() => DeadlockRule::Dateline,
                Mechanism::NebbVct => DeadlockRule::Bubble,
                _ => DeadlockRule::FbfcL,
            },
        }
    }

    pub fn warmup_end(&self) -> Cycle {
        (self.cycles as f64 * self.warmup_fraction).round() as Cycle
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let shape = self.shape();
        shape.validate()?;
        self.validate_for(&shape)?;
        let mut traffic = self.traffic();
        if let Pattern::Hotspot { nodes, fraction } = &traffic.pattern {
            if nodes.is_empty() {
                traffic.pattern = Pattern::hotspot(shape.nodes(), *fraction);
            }
        }
        traffic.validate(shape.nodes())
    }

    fn validate_for(&self, shape: &NetworkShape) -> Result<(), ConfigError> {
        if self.vcs == 0 || self.vcs > u8::MAX as usize {
            return Err(ConfigError::Invalid(format!(
                "vc count {} out of range",
                self.vcs
            )));
        }
        self.buffer.validate(self.vcs)?;
        if self.link_latency != 1 {
            return Err(ConfigError::Invalid(format!(
                "link latency {} unsupported (only 1-cycle links)",
                self.link_latency
            )));
        }
        if self.cycles == 0 {
            return Err(ConfigError::Invalid("cycle count must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ConfigError::Invalid(format!(
                "warmup fraction {} outside [0, 1)",
                self.warmup_fraction
            )));
        }
        if self.watchdog_horizon == 0 {
            return Err(ConfigError::Invalid(
                "watchdog horizon must be positive".into(),
            ));
        }
        let rule = self.effective_deadlock_rule();
        let torus = shape.kind == TopologyKind::Torus;
        match (torus, rule) {
            (false, DeadlockRule::None) => {}
            (false, r) => {
                return Err(ConfigError::Incompatible(format!(
                    "deadlock rule {r} applies to tori only"
                )))
            }
            (true, DeadlockRule::None) => {
                return Err(ConfigError::Incompatible(
                    "a torus needs a deadlock-avoidance rule".into(),
                ))
            }
            (true, _) => {}
        }
        if self.mechanism.is_empty_vc() && rule == DeadlockRule::FbfcL {
            return Err(ConfigError::Incompatible(
                "FBFC does not support the Empty VC mechanisms".into(),
            ));
        }
        if rule == DeadlockRule::Bubble && !self.mechanism.standard_is_vct() {
            return Err(ConfigError::Incompatible(format!(
                "bubble flow control needs whole-packet forwarding, {} forwards flits",
                self.mechanism
            )));
        }
        if rule == DeadlockRule::Dateline && self.vcs < 2 {
            return Err(ConfigError::Incompatible(
                "dateline needs at least 2 VCs".into(),
            ));
        }
        let cap = self.buffer.vc_capacity(self.vcs);
        let max = self.packet_sizes.max() as u32;
        let need = match rule {
            DeadlockRule::FbfcL => max + 1,
            DeadlockRule::Bubble => 2 * max,
            _ if self.mechanism.standard_is_vct() => max,
            _ => 1,
        };
        if cap < need {
            return Err(ConfigError::Incompatible(format!(
                "a VC holds at most {cap} flits, {need} needed for {max}-flit packets under {rule}"
            )));
        }
        if self.mechanism.standard_is_vct() && cap < max {
            return Err(ConfigError::Incompatible(format!(
                "whole-packet forwarding needs {max} slots per VC, only {cap}"
            )));
        }
        Ok(())
    }

    pub fn router_params(&self, shape: NetworkShape) -> RouterParams {
        let rule = self.effective_deadlock_rule();
        RouterParams {
            shape,
            mechanism: self.mechanism,
            la_mode: self.mechanism.la_mode(),
            bypass_rule: self.mechanism.bypass_rule(),
            standard_vct: self.mechanism.standard_is_vct(),
            vcs: self.vcs,
            buffer: self.buffer,
            deadlock_rule: rule,
            prepaid_entry: rule == DeadlockRule::FbfcL
                && matches!(self.buffer, BufferOrganization::Shared { .. }),
            max_packet_size: self.packet_sizes.max(),
            la_priority: self.la_priority,
            la_threshold: self.la_threshold,
            sa_input_mode: self.sa_input_mode,
            unsafe_bypass: self.unsafe_bypass,
        }
    }
}

/// Source queue and injection state of one node.
#[derive(Debug, Clone)]
pub struct Interface {
    pub node: NodeId,
    pub router: RouterId,
    pub port: usize,
    pub queue: VecDeque<PacketDescriptor>,
    sending: VecDeque<Flit>,
    vc: VcId,
    pub ledger: CreditLedger,
}

impl Interface {
    /// Picks a VC for the next packet: admissible, most credits, lowest index.
    fn choose_vc(&self, p: &RouterParams, pkt: &PacketDescriptor) -> Option<VcId> {
        let need = if p.standard_vct { pkt.size as u32 } else { 1 };
        (0..p.vcs)
            .filter(|&v| self.ledger.free(v) >= need)
            .filter(|&v| !p.mechanism.is_empty_vc() || self.ledger.used(v) == 0)
            .max_by(|&a, &b| {
                self.ledger
                    .free(a)
                    .cmp(&self.ledger.free(b))
                    .then(b.cmp(&a))
            })
            .map(|v| v as VcId)
    }

    fn step(&mut self, t: Cycle, p: &RouterParams, links: &mut Links) -> Result<bool, String> {
        self.ledger.apply_returns(t).map_err(|e| e.to_string())?;
        if self.sending.is_empty() {
            let Some(pkt) = self.queue.front().copied() else {
                return Ok(false);
            };
            let Some(vc) = self.choose_vc(p, &pkt) else {
                return Ok(false);
            };
            self.queue.pop_front();
            self.vc = vc;
            self.sending = segment_packet(&pkt).map_err(|e| e.to_string())?.into();
        }
        if self.ledger.free(self.vc as usize) == 0 {
            return Ok(false);
        }
        let mut flit = self.sending.pop_front().unwrap();
        self.ledger
            .debit(self.vc as usize, 1)
            .map_err(|e| e.to_string())?;
        flit.vc = self.vc;
        flit.injection_cycle = t;
        let idx = links.index(self.router, self.port);
        links.flits[idx][((t + 1) % 3) as usize] = Some(flit);
        Ok(true)
    }
}

/// A whole simulated network.
pub struct Network {
    pub config: SimConfig,
    pub params: RouterParams,
    pub routers: Vec<Router>,
    pub links: Links,
    pub interfaces: Vec<Interface>,
    traffic: Option<TrafficGenerator>,
    pub metrics: MetricsCollector,
    pub cycle: Cycle,
    pub injected_flits: u64,
    pub ejected_flits: u64,
    pub ejected_packets: u64,
    last_progress: Cycle,
    violations: Vec<ViolationRecord>,
    credits: Vec<(CreditSink, VcId)>,
    zero_load: f64,
    next_packet_id: u64,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Network")
            .field("cycle", &self.cycle)
            .field("routers", &self.routers.len())
            .field("injected_flits", &self.injected_flits)
            .field("ejected_flits", &self.ejected_flits)
            .finish()
    }
}

impl Network {
    /// Network with synthetic traffic from the config.
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let shape = config.shape();
        let mut spec = config.traffic();
        if let Pattern::Hotspot { nodes, fraction } = &spec.pattern {
            if nodes.is_empty() {
                spec.pattern = Pattern::hotspot(shape.nodes(), *fraction);
            }
        }
        let zero_load = zero_load_latency(&shape, &spec);
        let gen = TrafficGenerator::new(spec, shape.nodes());
        let mut net = Self::build(config, shape);
        net.traffic = Some(gen);
        net.zero_load = zero_load;
        Ok(net)
    }

    /// Network without a traffic source; packets are added by the caller.
    pub fn with_shape(config: SimConfig, shape: NetworkShape) -> Result<Self, ConfigError> {
        shape.validate()?;
        config.validate_for(&shape)?;
        Ok(Self::build(config, shape))
    }

    fn build(config: SimConfig, shape: NetworkShape) -> Self {
        let params = config.router_params(shape);
        let routers: Vec<Router> = (0..shape.routers())
            .map(|r| Router::new(r, &params))
            .collect();
        let interfaces = (0..shape.nodes())
            .map(|n| Interface {
                node: n,
                router: shape.router_of(n),
                port: PortId::Local(shape.slot_of(n)).index(),
                queue: VecDeque::new(),
                sending: VecDeque::new(),
                vc: 0,
                ledger: CreditLedger::new(config.buffer, config.vcs),
            })
            .collect();
        let metrics = MetricsCollector::new(config.warmup_end(), config.cycles);
        Network {
            links: Links::new(routers.len(), shape.ports()),
            routers,
            interfaces,
            traffic: None,
            metrics,
            cycle: 0,
            injected_flits: 0,
            ejected_flits: 0,
            ejected_packets: 0,
            last_progress: 0,
            violations: Vec::new(),
            credits: Vec::new(),
            zero_load: crate::metrics::BASE_LATENCY,
            next_packet_id: 0,
            params,
            config,
        }
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.params.shape
    }

    /// Queues a packet at its source node.
    pub fn enqueue(&mut self, source: NodeId, destination: NodeId, size: u16) -> PacketDescriptor {
        let pkt = PacketDescriptor {
            id: self.next_packet_id,
            source,
            destination,
            size,
            creation_cycle: self.cycle,
        };
        self.next_packet_id += 1;
        self.metrics.record_generated(&pkt);
        self.interfaces[source as usize].queue.push_back(pkt);
        pkt
    }

    /// Queues a packet made by `new_packet` at its source node.
    pub fn enqueue_packet(&mut self, pkt: PacketDescriptor) {
        self.interfaces[pkt.source as usize].queue.push_back(pkt);
    }

    /// New packet descriptor for scripted placement.
    pub fn new_packet(
        &mut self,
        source: NodeId,
        destination: NodeId,
        size: u16,
    ) -> PacketDescriptor {
        let pkt = PacketDescriptor {
            id: self.next_packet_id,
            source,
            destination,
            size,
            creation_cycle: self.cycle,
        };
        self.next_packet_id += 1;
        self.metrics.record_generated(&pkt);
        pkt
    }

    /// Writes flit `seq` of `pkt` straight into an input buffer, charging the
    /// credit to whoever feeds that input.
    pub fn preload_flit(
        &mut self,
        router: RouterId,
        input: usize,
        vc: usize,
        pkt: &PacketDescriptor,
        seq: u16,
    ) -> Result<(), ConfigError> {
        let mut flit = segment_packet(pkt)?
            .into_iter()
            .nth(seq as usize)
            .ok_or_else(|| ConfigError::Invalid(format!("packet {} has no flit {seq}", pkt.id)))?;
        flit.route = dor_route(&self.params.shape, router, pkt.destination)
            .out_port
            .index() as u8;
        let r = &mut self.routers[router as usize];
        r.inputs[input]
            .push(vc, flit, router, self.cycle)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let charged = match r.upstream[input] {
            Some(CreditSink::Router { router: u, port }) => {
                self.routers[u as usize].ledgers[port as usize].debit(vc, 1)
            }
            Some(CreditSink::Interface(n)) => self.interfaces[n as usize].ledger.debit(vc, 1),
            None => Ok(()),
        };
        charged.map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.injected_flits += 1;
        Ok(())
    }

    /// Binds an input VC to an output VC for `pkt`, as after VC allocation.
    pub fn assign_vc(
        &mut self,
        router: RouterId,
        input: usize,
        vc: usize,
        out_vc: usize,
        pkt: &PacketDescriptor,
    ) {
        let out = dor_route(&self.params.shape, router, pkt.destination)
            .out_port
            .index();
        self.routers[router as usize].preload_owner(input, vc, out, out_vc, *pkt);
    }

    /// Gives an input VC the switch-allocation priority of a packet in progress.
    pub fn hold_sa(&mut self, router: RouterId, input: usize, vc: usize) {
        self.routers[router as usize].sa_inputs[input].held_vc = Some(vc);
    }

    pub fn flits_in_network(&self) -> u64 {
        self.injected_flits - self.ejected_flits
    }

    pub fn violations(&self) -> &[ViolationRecord] {
        &self.violations
    }

    /// Advances one cycle. Returns the violations found in it.
    pub fn step(&mut self) -> &[ViolationRecord] {
        let t = self.cycle;
        let start = self.violations.len();
        if let Some(gen) = self.traffic.as_mut() {
            for n in 0..self.interfaces.len() {
                if let Some(pkt) = gen.next_injection(n as NodeId, t) {
                    self.metrics.record_generated(&pkt);
                    self.interfaces[n].queue.push_back(pkt);
                }
            }
        }
        for ni in &mut self.interfaces {
            match ni.step(t, &self.params, &mut self.links) {
                Ok(true) => self.injected_flits += 1,
                Ok(false) => {}
                Err(msg) => self.violations.push(ViolationRecord::new(
                    t,
                    Some(ni.router),
                    ViolationKind::CreditNegative,
                    format!("node {}: {msg}", ni.node),
                )),
            }
        }

        let mut cx = CycleCtx {
            cycle: t,
            params: &self.params,
            links: &mut self.links,
            credits: &mut self.credits,
            metrics: &mut self.metrics,
            violations: &mut self.violations,
            switch_traversals: 0,
            ejected_flits: 0,
            ejected_packets: 0,
        };
        for r in &mut self.routers {
            r.step(&mut cx);
        }
        let (moved, ef, ep) = (cx.switch_traversals, cx.ejected_flits, cx.ejected_packets);
        self.ejected_flits += ef;
        self.ejected_packets += ep;
        if moved > 0 || self.flits_in_network() == 0 {
            self.last_progress = t;
        }
        for (sink, vc) in self.credits.drain(..) {
            match sink {
                CreditSink::Router { router, port } => self.routers[router as usize].ledgers
                    [port as usize]
                    .schedule_return(vc as usize, t),
                CreditSink::Interface(n) => self.interfaces[n as usize]
                    .ledger
                    .schedule_return(vc as usize, t),
            }
        }

        if self.config.check {
            let found = self.check_invariants();
            self.violations.extend(found);
        }
        if let Some(v) = self.watchdog() {
            self.violations.push(v);
        }
        dedupe(&mut self.violations, start);
        self.cycle += 1;
        &self.violations[start..]
    }

    /// Deadlock report when flits are in the network and none crossed a
    /// switch for a full horizon.
    pub fn watchdog(&self) -> Option<ViolationRecord> {
        let t = self.cycle;
        if self.flits_in_network() == 0 || t - self.last_progress < self.config.watchdog_horizon {
            return None;
        }
        let summary: Vec<String> = self
            .routers
            .iter()
            .filter(|r| r.buffered_flits() > 0)
            .map(|r| format!("R{}: {}", r.id, r.wait_summary()))
            .collect();
        Some(ViolationRecord::new(
            t,
            None,
            ViolationKind::Deadlock,
            format!(
                "no switch traversal for {} cycles with {} flits in flight; {}",
                t - self.last_progress,
                self.flits_in_network(),
                summary.join(" | ")
            ),
        ))
    }

    /// Interleaving, credit conservation, flit conservation and output-lock
    /// consistency.
    pub fn check_invariants(&self) -> Vec<ViolationRecord> {
        let t = self.cycle;
        let mut out = Vec::new();
        let mut in_buffers = 0u64;
        let mut latched = 0u64;
        for r in &self.routers {
            in_buffers += r.buffered_flits() as u64;
            latched += r.st_latch.len() as u64;
            for (p, buf) in r.inputs.iter().enumerate() {
                if let Some(msg) = buf.check_interleaving() {
                    out.push(ViolationRecord::new(
                        t,
                        Some(r.id),
                        ViolationKind::Interleaving,
                        format!("input {}: {msg}", PortId::from_index(p)),
                    ));
                }
            }
            for o in 0..TRANSIT_PORTS {
                let Some(d) = r.downstream[o] else { continue };
                let down = &self.routers[d as usize];
                for w in 0..self.params.vcs {
                    let on_link = self
                        .links
                        .in_flight(d, o)
                        .filter(|f| f.vc as usize == w)
                        .count();
                    let latch = r
                        .st_latch
                        .iter()
                        .filter(|e| e.out_port as usize == o && e.out_vc as usize == w)
                        .count();
                    let setups = r
                        .setups
                        .iter()
                        .flatten()
                        .filter(|s| s.out_port as usize == o && s.out_vc as usize == w)
                        .count();
                    let reserved = r.owners[o][w].map_or(0, |x| x.reserved as u32);
                    let expect = down.inputs[o].occupancy(w)
                        + (on_link + latch + setups) as u32
                        + r.ledgers[o].pending_returns(w)
                        + reserved;
                    let used = r.ledgers[o].used(w);
                    if used != expect {
                        out.push(ViolationRecord::new(
                            t,
                            Some(r.id),
                            ViolationKind::CreditOverflow,
                            format!(
                                "output {} vc{w}: ledger says {used} in use, downstream accounts for {expect}",
                                PortId::from_index(o)
                            ),
                        ));
                    }
                }
            }
            for (o, vcs) in r.owners.iter().enumerate() {
                for (w, own) in vcs.iter().enumerate() {
                    let Some(own) = own else { continue };
                    let vs = &r.inputs[own.input as usize].vc_states[own.vc as usize];
                    let bound = vs.holds(own.packet)
                        && vs.out_port == Some(o as u8)
                        && vs.out_vc == Some(w as VcId);
                    if !bound {
                        out.push(ViolationRecord::new(
                            t,
                            Some(r.id),
                            ViolationKind::FlitLoss,
                            format!(
                                "output {} vc{w} held for packet {} which no input VC is sending",
                                PortId::from_index(o),
                                own.packet
                            ),
                        ));
                    }
                }
            }
            for (o, lock) in r.locked.iter().enumerate() {
                if let Some(pkt) = lock {
                    let owned = r.owners[o]
                        .iter()
                        .flatten()
                        .any(|x| x.packet == *pkt && x.vct);
                    if !owned {
                        out.push(ViolationRecord::new(
                            t,
                            Some(r.id),
                            ViolationKind::HybridLock,
                            format!(
                                "output {} locked by packet {pkt} which owns none of its VCs",
                                PortId::from_index(o)
                            ),
                        ));
                    }
                }
            }
        }
        for ni in &self.interfaces {
            let r = &self.routers[ni.router as usize];
            for w in 0..self.params.vcs {
                let on_link = self
                    .links
                    .in_flight(ni.router, ni.port)
                    .filter(|f| f.vc as usize == w)
                    .count();
                let expect =
                    r.inputs[ni.port].occupancy(w) + on_link as u32 + ni.ledger.pending_returns(w);
                if ni.ledger.used(w) != expect {
                    out.push(ViolationRecord::new(
                        t,
                        Some(ni.router),
                        ViolationKind::CreditOverflow,
                        format!(
                            "node {} vc{w}: ledger says {} in use, router accounts for {expect}",
                            ni.node,
                            ni.ledger.used(w)
                        ),
                    ));
                }
            }
        }
        let in_network = in_buffers + latched + self.links.flit_count() as u64;
        if self.injected_flits != self.ejected_flits + in_network {
            out.push(ViolationRecord::new(
                t,
                None,
                ViolationKind::FlitLoss,
                format!(
                    "{} injected, {} ejected, {in_network} in the network",
                    self.injected_flits, self.ejected_flits
                ),
            ));
        }
        out
    }

    /// Runs until the configured cycle count or the first violation.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while self.cycle < self.config.cycles {
            if !self.step().is_empty() {
                return Err(SimError::Violation(self.violations.clone()));
            }
        }
        Ok(())
    }

    /// Runs until every queued packet has left the network, a violation
    /// occurs, or `limit` cycles pass. Returns whether the network drained.
    pub fn run_until_drained(&mut self, limit: Cycle) -> Result<bool, SimError> {
        let stop = self.cycle + limit;
        while self.cycle < stop {
            if !self.step().is_empty() {
                return Err(SimError::Violation(self.violations.clone()));
            }
            let idle = self.flits_in_network() == 0
                && self
                    .interfaces
                    .iter()
                    .all(|n| n.queue.is_empty() && n.sending.is_empty());
            if idle {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn report(&self) -> SimReport {
        self.metrics.finalize(
            self.shape().nodes(),
            self.zero_load,
            self.violations.clone(),
        )
    }
}

/// Keeps the first record per (kind, router) among those added since `start`.
fn dedupe(v: &mut Vec<ViolationRecord>, start: usize) {
    let mut seen: Vec<(ViolationKind, Option<RouterId>)> =
        v[..start].iter().map(|r| (r.kind, r.router)).collect();
    let mut i = start;
    while i < v.len() {
        let key = (v[i].kind, v[i].router);
        if seen.contains(&key) {
            v.remove(i);
        } else {
            seen.push(key);
            i += 1;
        }
    }
}

/// Builds the network, runs it for the configured cycles and reports.
pub fn run(config: &SimConfig) -> Result<SimReport, SimError> {
    let mut net = Network::new(config.clone())?;
    net.run_to_end()?;
    Ok(net.report())
}
