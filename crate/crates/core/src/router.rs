//! Per-router pipeline: buffer write, lookahead bypass, VC and switch
//! allocation, switch and link traversal.
//!
//! Timing at one router, for a flit that reaches it in cycle `t`:
//! buffered path `BW t | VA+SA t+1 | ST t+2 | LT t+3`, bypass path
//! `ST t | LT t+1`. A lookahead travels one cycle ahead of its flit and is
//! resolved in the cycle before the flit arrives.

use std::mem;

use crate::arbiters::{
    la_arbitrate, switch_allocate_into, vc_allocate_into, LaRequest, MatrixArbiter, RoundRobin, SaInputMode,
    SaInputState, SaRequest, VaRequest,
};
use crate::buffers::{BufferOrganization, InputBuffer};
use crate::error::{ViolationKind, ViolationRecord};
use crate::flow_control::{
    bypass_eligible, can_forward_standard, deadlock_condition, whole_packet_debit, BypassDecision,
    CreditLedger, DeadlockRule, ForwardContext, HopKind,
};
use crate::metrics::MetricsCollector;
use crate::model::{
    make_lookahead, BypassRule, Cycle, Flit, HopRecord, LaArbMode, LaPriority, Lookahead,
    Mechanism, NodeId, PortId, RouterId, VcId, TRANSIT_PORTS,
};
use crate::topology::{dateline_vc, dateline_vc_range, dor_route, NetworkShape, TopologyKind};

/// Which side wins when a lookahead and a buffered flit want the same output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaPriorityMode {
    #[default]
    Lookaheads,
    Flits,
}

impl std::str::FromStr for LaPriorityMode {
    type Err = crate::error::ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "la" | "las" | "lookahead" | "lookaheads" => Ok(LaPriorityMode::Lookaheads),
            "flit" | "flits" => Ok(LaPriorityMode::Flits),
            other => Err(crate::error::ConfigError::Invalid(format!(
                "unknown la priority '{other}' (expected la or flit)"
            ))),
        }
    }
}

/// Static parameters shared by every router of a network.
#[derive(Debug, Clone)]
pub struct RouterParams {
    pub shape: NetworkShape,
    pub mechanism: Mechanism,
    pub la_mode: LaArbMode,
    pub bypass_rule: BypassRule,
    pub standard_vct: bool,
    pub vcs: usize,
    pub buffer: BufferOrganization,
    pub deadlock_rule: DeadlockRule,
    /// Multi-flit heads entering a ring debit the whole packet.
    pub prepaid_entry: bool,
    pub max_packet_size: u16,
    pub la_priority: LaPriorityMode,
    pub la_threshold: Option<u64>,
    pub sa_input_mode: SaInputMode,
    /// Test hook: lets multi-flit packets bypass non-empty VCs under WH rules.
    pub unsafe_bypass: bool,
}

impl RouterParams {
    pub fn ports(&self) -> usize {
        self.shape.ports()
    }

    fn is_torus(&self) -> bool {
        self.shape.kind == TopologyKind::Torus
    }
}

/// Flit and lookahead wires between routers. A flit leaving a router in
/// cycle `s` is read by the next router in cycle `s + 2`; its lookahead in
/// cycle `s + 1`.
#[derive(Debug, Clone)]
pub struct Links {
    ports: usize,
    pub flits: Vec<[Option<Flit>; 3]>,
    pub lookaheads: Vec<[Option<Lookahead>; 2]>,
}

impl Links {
    pub fn new(routers: usize, ports: usize) -> Self {
        Links {
            ports,
            flits: vec![Default::default(); routers * ports],
            lookaheads: vec![Default::default(); routers * ports],
        }
    }

    pub fn index(&self, router: RouterId, port: usize) -> usize {
        router as usize * self.ports + port
    }

    /// Flits still on the wire toward `router`'s input `port`.
    pub fn in_flight(&self, router: RouterId, port: usize) -> impl Iterator<Item = &Flit> {
        self.flits[self.index(router, port)].iter().flatten()
    }

    pub fn flit_count(&self) -> usize {
        self.flits.iter().map(|s| s.iter().flatten().count()).sum()
    }
}

/// Where a freed input slot sends its credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CreditSink {
    Router { router: RouterId, port: u8 },
    Interface(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutVcOwner {
    pub input: u8,
    pub vc: VcId,
    pub packet: u64,
    /// Slots debited in advance and not yet used by a forwarded flit.
    pub reserved: u16,
    /// Bypassing under whole-packet rules.
    pub vct: bool,
}

#[derive(Debug, Clone)]
pub struct Latched {
    pub input: u8,
    pub flit: Flit,
    pub out_port: u8,
    pub out_vc: VcId,
}

/// Crossbar path reserved for a flit arriving next cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BypassSetup {
    pub packet: u64,
    pub seq: u16,
    pub out_port: u8,
    pub out_vc: VcId,
    pub vct: bool,
}

/// Mutable network state a router touches while stepping.
pub struct CycleCtx<'a> {
    pub cycle: Cycle,
    pub params: &'a RouterParams,
    pub links: &'a mut Links,
    pub credits: &'a mut Vec<(CreditSink, VcId)>,
    pub metrics: &'a mut MetricsCollector,
    pub violations: &'a mut Vec<ViolationRecord>,
    pub switch_traversals: u64,
    pub ejected_flits: u64,
    pub ejected_packets: u64,
}

impl CycleCtx<'_> {
    fn violation(&mut self, router: RouterId, kind: ViolationKind, detail: String) {
        self.violations
            .push(ViolationRecord::new(self.cycle, Some(router), kind, detail));
    }
}

#[derive(Debug, Clone, Copy)]
enum CandKind {
    Head {
        decision: BypassDecision,
        prepaid: bool,
    },
    Continuation,
}

#[derive(Debug, Clone, Copy)]
struct LaCandidate {
    input: usize,
    la: Lookahead,
    out: usize,
    ovc: usize,
    kind: CandKind,
}

#[derive(Debug, Clone)]
pub struct Router {
    pub id: RouterId,
    pub inputs: Vec<InputBuffer>,
    /// Credit view of the input port each output feeds.
    pub ledgers: Vec<CreditLedger>,
    pub owners: Vec<Vec<Option<OutVcOwner>>>,
    pub sa_inputs: Vec<SaInputState>,
    sa_outputs: Vec<MatrixArbiter>,
    la_arbiters: Vec<MatrixArbiter>,
    /// Outputs held by a packet bypassing under whole-packet rules.
    pub locked: Vec<Option<u64>>,
    va_rr: Vec<RoundRobin>,
    pub st_latch: Vec<Latched>,
    pub setups: Vec<Option<BypassSetup>>,
    /// Router fed by each output (transit ports only).
    pub downstream: Vec<Option<RouterId>>,
    pub upstream: Vec<Option<CreditSink>>,
    taken_in: Vec<bool>,
    taken_out: Vec<bool>,
    claimed: Vec<bool>,
    selected: Vec<Option<usize>>,
    ready: Vec<bool>,
    can_advance: Vec<bool>,
    scratch: Scratch,
}

/// Per-cycle working storage kept between cycles to avoid reallocating.
#[derive(Debug, Clone, Default)]
struct Scratch {
    va_requests: Vec<VaRequest>,
    va_classes: Vec<Option<u8>>,
    va_free: Vec<Vec<bool>>,
    va_pending: Vec<bool>,
    va_grants: Vec<(VaRequest, usize)>,
    sa_requests: Vec<SaRequest>,
    sa_grants: Vec<SaRequest>,
    cands: Vec<LaCandidate>,
    la_requests: Vec<LaRequest>,
    blocked: Vec<bool>,
}

impl Router {
    pub fn new(id: RouterId, p: &RouterParams) -> Self {
        let ports = p.ports();
        let shape = &p.shape;
        let mut downstream = vec![None; ports];
        let mut upstream = vec![None; ports];
        let mut ledgers = Vec::with_capacity(ports);
        for port in PortId::all(shape.concentration as usize) {
            match port {
                PortId::Transit(d) => {
                    downstream[port.index()] = shape.neighbor(id, d);
                    // input d is fed by the neighbor behind us along d
                    upstream[port.index()] = shape.upstream(id, d).map(|u| CreditSink::Router {
                        router: u,
                        port: port.index() as u8,
                    });
                    ledgers.push(CreditLedger::new(p.buffer, p.vcs));
                }
                PortId::Local(s) => {
                    upstream[port.index()] = Some(CreditSink::Interface(shape.node_at(id, s)));
                    ledgers.push(CreditLedger::unbounded(p.vcs));
                }
            }
        }
        Router {
            id,
            inputs: (0..ports)
                .map(|_| InputBuffer::new(p.buffer, p.vcs))
                .collect(),
            ledgers,
            owners: vec![vec![None; p.vcs]; ports],
            sa_inputs: (0..ports)
                .map(|_| SaInputState::new(p.vcs, p.sa_input_mode))
                .collect(),
            sa_outputs: (0..ports).map(|_| MatrixArbiter::new(ports)).collect(),
            la_arbiters: (0..ports).map(|_| MatrixArbiter::new(ports)).collect(),
            locked: vec![None; ports],
            va_rr: (0..ports).map(|_| RoundRobin::new(ports * p.vcs)).collect(),
            st_latch: Vec::new(),
            setups: vec![None; ports],
            downstream,
            upstream,
            taken_in: vec![false; ports],
            taken_out: vec![false; ports],
            claimed: vec![false; ports],
            selected: vec![None; ports],
            ready: vec![false; p.vcs],
            can_advance: vec![false; p.vcs],
            scratch: Scratch {
                va_free: vec![vec![false; p.vcs]; ports],
                ..Scratch::default()
            },
        }
    }

    /// Flits buffered at this router.
    pub fn buffered_flits(&self) -> u32 {
        self.inputs.iter().map(|b| b.total_occupancy()).sum()
    }

    fn is_quiet(&self, cx: &CycleCtx) -> bool {
        if !self.st_latch.is_empty() || self.setups.iter().any(Option::is_some) {
            return false;
        }
        if self.inputs.iter().any(|b| b.total_occupancy() > 0) {
            return false;
        }
        let base = cx.links.index(self.id, 0);
        let ports = cx.params.ports();
        let la_slot = (cx.cycle % 2) as usize;
        let fl_slot = (cx.cycle % 3) as usize;
        (base..base + ports).all(|i| {
            cx.links.flits[i][fl_slot].is_none() && cx.links.lookaheads[i][la_slot].is_none()
        })
    }

    /// One clock cycle of this router.
    pub fn step(&mut self, cx: &mut CycleCtx) {
        let t = cx.cycle;
        for (o, l) in self.ledgers.iter_mut().enumerate() {
            if let Err(e) = l.apply_returns(t) {
                cx.violations.push(ViolationRecord::new(
                    t,
                    Some(self.id),
                    ViolationKind::CreditOverflow,
                    format!("output {}: {e}", PortId::from_index(o)),
                ));
            }
        }
        if self.is_quiet(cx) {
            return;
        }

        for e in mem::take(&mut self.st_latch) {
            self.traverse(
                e.input as usize,
                e.flit,
                e.out_port as usize,
                e.out_vc as usize,
                true,
                false,
                cx,
            );
        }
        self.receive(cx);

        self.taken_in.iter_mut().for_each(|x| *x = false);
        self.taken_out.iter_mut().for_each(|x| *x = false);
        let mut las = self.collect_lookaheads(cx);
        let mut claimed = mem::take(&mut self.claimed);
        claimed.iter_mut().for_each(|x| *x = false);
        match cx.params.la_priority {
            LaPriorityMode::Lookaheads => {
                self.urgent_claims(cx, &mut claimed);
                self.la_stage(&mut las, false, &claimed, cx);
                self.va_stage(cx);
                self.sa_stage(cx);
            }
            LaPriorityMode::Flits => {
                self.la_stage(&mut las, true, &claimed, cx);
                self.va_stage(cx);
                self.sa_stage(cx);
                self.la_stage(&mut las, false, &claimed, cx);
            }
        }
        self.claimed = claimed;
    }

    fn receive(&mut self, cx: &mut CycleCtx) {
        let t = cx.cycle;
        let slot = (t % 3) as usize;
        for p in 0..self.inputs.len() {
            let idx = cx.links.index(self.id, p);
            let arriving = cx.links.flits[idx][slot].take();
            let setup = self.setups[p].take();
            let Some(mut flit) = arriving else {
                if let Some(s) = setup {
                    cx.violation(
                        self.id,
                        ViolationKind::FlitLoss,
                        format!(
                            "bypass setup for packet {} seq {} expired unused",
                            s.packet, s.seq
                        ),
                    );
                }
                continue;
            };
            match setup {
                Some(s) if s.packet == flit.packet.id && s.seq == flit.seq => {
                    if let Some(sink) = self.upstream[p] {
                        cx.credits.push((sink, flit.vc));
                    }
                    flit.hops.push(HopRecord {
                        router: self.id,
                        was_buffered: false,
                    });
                    self.traverse(
                        p,
                        flit,
                        s.out_port as usize,
                        s.out_vc as usize,
                        false,
                        s.vct,
                        cx,
                    );
                }
                other => {
                    if let Some(s) = other {
                        cx.violation(
                            self.id,
                            ViolationKind::FlitLoss,
                            format!(
                                "bypass setup for packet {} met packet {} seq {}",
                                s.packet, flit.packet.id, flit.seq
                            ),
                        );
                    }
                    if p >= TRANSIT_PORTS {
                        flit.route = dor_route(&cx.params.shape, self.id, flit.packet.destination)
                            .out_port
                            .index() as u8;
                    }
                    let vc = flit.vc as usize;
                    if let Err(e) = self.inputs[p].push(vc, flit, self.id, t) {
                        cx.violation(
                            self.id,
                            ViolationKind::BufferOverflow,
                            format!("input {}: {e}", PortId::from_index(p)),
                        );
                    }
                }
            }
        }
    }

    fn collect_lookaheads(&mut self, cx: &mut CycleCtx) -> [Option<(usize, Lookahead)>; TRANSIT_PORTS] {
        let slot = (cx.cycle % 2) as usize;
        std::array::from_fn(|p| {
            let idx = cx.links.index(self.id, p);
            cx.links.lookaheads[idx][slot].take().map(|la| (p, la))
        })
    }

    fn hop_kind(&self, input: usize, out: usize) -> HopKind {
        NetworkShape::hop_kind(PortId::from_index(input), PortId::from_index(out))
    }

    /// Dateline class a packet needs on `out` after arriving through `input`.
    fn required_class(
        &self,
        p: &RouterParams,
        input: usize,
        out: usize,
        crossed: bool,
    ) -> Option<u8> {
        if p.deadlock_rule != DeadlockRule::Dateline || out >= TRANSIT_PORTS {
            return None;
        }
        let dir = PortId::from_index(out).direction().unwrap();
        let step_crosses = {
            let (x, y) = p.shape.coords(self.id);
            let (c, k) = if dir.dimension() == 0 {
                (x, p.shape.kx)
            } else {
                (y, p.shape.ky)
            };
            if dir.is_positive() {
                c == k - 1
            } else {
                c == 0
            }
        };
        let dim_change = match PortId::from_index(input).direction() {
            Some(d) => d.dimension() != dir.dimension(),
            None => true,
        };
        Some(dateline_vc(u8::from(crossed), step_crosses, dim_change))
    }

    fn vc_admissible(&self, p: &RouterParams, out: usize, ovc: usize, class: Option<u8>) -> bool {
        if self.owners[out][ovc].is_some() {
            return false;
        }
        if p.mechanism.is_empty_vc() && self.ledgers[out].used(ovc) != 0 {
            return false;
        }
        match class {
            Some(c) => {
                let (lo, hi) = dateline_vc_range(c, p.vcs);
                ovc >= lo && ovc < hi
            }
            None => true,
        }
    }

    /// Admissible unowned output VC with the most credits.
    fn best_output_vc(&self, p: &RouterParams, out: usize, class: Option<u8>) -> Option<usize> {
        (0..p.vcs)
            .filter(|&v| self.vc_admissible(p, out, v, class))
            .max_by(|&a, &b| {
                self.ledgers[out]
                    .free(a)
                    .cmp(&self.ledgers[out].free(b))
                    .then(b.cmp(&a))
            })
    }

    /// Outputs wanted by buffered heads that have waited past the threshold.
    fn urgent_claims(&self, cx: &CycleCtx, claimed: &mut [bool]) {
        let Some(limit) = cx.params.la_threshold else {
            return;
        };
        for buf in &self.inputs {
            for v in 0..buf.vc_count() {
                let vs = &buf.vc_states[v];
                if let (true, Some(f)) = (vs.is_active() && !vs.bypassing, buf.front(v)) {
                    let out = vs.out_port.unwrap() as usize;
                    if f.is_head() && cx.cycle - f.buffered_at > limit && self.locked[out].is_none()
                    {
                        claimed[out] = true;
                    }
                }
            }
        }
    }

    fn evaluate_lookahead(
        &mut self,
        input: usize,
        la: Lookahead,
        cx: &CycleCtx,
    ) -> Option<LaCandidate> {
        let p = cx.params;
        let out = la.out_port as usize;
        let in_vc = la.in_vc as usize;
        let buf = &self.inputs[input];
        let mut la = la;
        if !la.flit_role.is_head() {
            let vs = &buf.vc_states[in_vc];
            if !(vs.holds(la.packet.id) && vs.bypassing) {
                return None;
            }
            let ovc = vs.out_vc.unwrap() as usize;
            let owner = self.owners[out][ovc]?;
            let ok = owner.vct || owner.reserved > 0 || self.ledgers[out].free(ovc) >= 1;
            if !ok {
                return None;
            }
            la.vct_mode = owner.vct;
            la.priority = if owner.vct {
                LaPriority::Max
            } else {
                LaPriority::Normal
            };
            return Some(LaCandidate {
                input,
                la,
                out,
                ovc,
                kind: CandKind::Continuation,
            });
        }
        let (occupancy, state) = buf.vc_bypassable(in_vc);
        if state == crate::buffers::VcStatus::Active {
            return None;
        }
        // dateline class of the incoming flit equals that of its VC
        let crossed = p.deadlock_rule == DeadlockRule::Dateline && in_vc >= p.vcs / 2;
        let class = self.required_class(p, input, out, crossed);
        let ovc = self.best_output_vc(p, out, class)?;
        let hop_kind = self.hop_kind(input, out);
        let ctx = ForwardContext {
            rule: p.bypass_rule,
            standard_vct: p.standard_vct,
            packet_size: la.packet.size,
            max_packet_size: p.max_packet_size,
            flit_role: la.flit_role,
            bypass_vc_occupancy: occupancy,
            bypass_vc_state: state,
            dest_free: self.ledgers[out].free(ovc),
            bypass_free: buf.free_slots(in_vc),
            hop_kind,
        };
        let mut decision = bypass_eligible(&ctx);
        if p.unsafe_bypass
            && decision == BypassDecision::Deny
            && occupancy > 0
            && ctx.dest_free >= 1
        {
            decision = BypassDecision::AllowWh;
        }
        if decision == BypassDecision::Deny {
            return None;
        }
        if p.is_torus() && !deadlock_condition(p.deadlock_rule, &ctx) {
            return None;
        }
        let prepaid = decision == BypassDecision::AllowWh
            && whole_packet_debit(false, p.prepaid_entry, la.packet.size, hop_kind);
        if prepaid && ctx.dest_free < la.packet.size as u32 {
            return None;
        }
        la.vct_mode = decision == BypassDecision::AllowVct;
        la.priority = if la.vct_mode && la.packet.is_multi_flit() {
            LaPriority::Max
        } else {
            LaPriority::Normal
        };
        la.dest_vc = Some(ovc as VcId);
        Some(LaCandidate {
            input,
            la,
            out,
            ovc,
            kind: CandKind::Head { decision, prepaid },
        })
    }

    /// A bypassing packet whose next flit cannot bypass continues through
    /// the buffer.
    fn fall_back(&mut self, input: usize, la: &Lookahead) {
        if la.flit_role.is_head() {
            return;
        }
        let vs = &mut self.inputs[input].vc_states[la.in_vc as usize];
        if vs.holds(la.packet.id) {
            vs.bypassing = false;
        }
    }

    /// Resolves this cycle's lookaheads. With `max_only`, only continuation
    /// flits of whole-packet bypasses are handled (they never lose).
    fn la_stage(
        &mut self,
        las: &mut [Option<(usize, Lookahead)>],
        max_only: bool,
        claimed: &[bool],
        cx: &mut CycleCtx,
    ) {
        let mut cands = mem::take(&mut self.scratch.cands);
        cands.clear();
        let mut discarded = 0usize;
        for slot in las.iter_mut() {
            let Some((input, la)) = *slot else { continue };
            if max_only {
                let vs = &self.inputs[input].vc_states[la.in_vc as usize];
                let out = la.out_port as usize;
                let is_max_cont = !la.flit_role.is_head()
                    && vs.holds(la.packet.id)
                    && vs.bypassing
                    && self.locked[out] == Some(la.packet.id);
                if !is_max_cont {
                    continue;
                }
            }
            *slot = None;
            if self.taken_in[input] {
                discarded += 1;
                self.fall_back(input, &la);
                continue;
            }
            match self.evaluate_lookahead(input, la, cx) {
                Some(c) => cands.push(c),
                None => {
                    discarded += 1;
                    self.fall_back(input, &la);
                }
            }
        }
        if cands.is_empty() {
            self.scratch.cands = cands;
            cx.metrics.record_la_outcome(cx.cycle, 0, discarded);
            return;
        }
        let mut requests = mem::take(&mut self.scratch.la_requests);
        requests.clear();
        requests.extend(cands.iter().map(|c| LaRequest {
            input: c.input,
            la: c.la,
        }));
        let mut blocked = mem::take(&mut self.scratch.blocked);
        blocked.clear();
        blocked.extend(self.taken_out.iter().zip(claimed).map(|(a, b)| *a || *b));
        let outcome = la_arbitrate(
            &requests,
            cx.params.la_mode,
            &mut self.la_arbiters,
            &mut self.locked,
            &blocked,
        );
        if let Some(msg) = outcome.lock_violation {
            cx.violation(self.id, ViolationKind::HybridLock, msg);
        }
        for &i in &outcome.discarded {
            self.fall_back(cands[i].input, &cands[i].la);
        }
        cx.metrics.record_la_outcome(
            cx.cycle,
            outcome.conflicts,
            discarded + outcome.discarded.len(),
        );
        for &i in &outcome.winners {
            self.commit_bypass(cands[i], cx);
        }
        self.scratch.cands = cands;
        self.scratch.la_requests = requests;
        self.scratch.blocked = blocked;
    }

    fn commit_bypass(&mut self, c: LaCandidate, cx: &mut CycleCtx) {
        self.taken_in[c.input] = true;
        self.taken_out[c.out] = true;
        let pkt = c.la.packet;
        let in_vc = c.la.in_vc as usize;
        let vct = match c.kind {
            CandKind::Head { decision, prepaid } => {
                let vct = decision == BypassDecision::AllowVct;
                let amount = if (vct || prepaid) && pkt.is_multi_flit() {
                    pkt.size
                } else {
                    1
                };
                self.debit(c.out, c.ovc, amount as u32, cx);
                if pkt.is_multi_flit() {
                    self.owners[c.out][c.ovc] = Some(OutVcOwner {
                        input: c.input as u8,
                        vc: in_vc as VcId,
                        packet: pkt.id,
                        reserved: amount - 1,
                        vct,
                    });
                    self.inputs[c.input].vc_states[in_vc].activate(
                        pkt,
                        c.out as u8,
                        c.ovc as VcId,
                        true,
                    );
                }
                vct
            }
            CandKind::Continuation => {
                let owner = self.owners[c.out][c.ovc].as_mut().unwrap();
                let vct = owner.vct;
                if owner.reserved > 0 {
                    owner.reserved -= 1;
                } else {
                    self.debit(c.out, c.ovc, 1, cx);
                }
                if c.la.flit_role.is_tail() {
                    self.owners[c.out][c.ovc] = None;
                    self.inputs[c.input].vc_states[in_vc].release();
                    self.sa_inputs[c.input].forget(in_vc);
                }
                vct
            }
        };
        self.setups[c.input] = Some(BypassSetup {
            packet: pkt.id,
            seq: c.la.seq,
            out_port: c.out as u8,
            out_vc: c.ovc as VcId,
            vct,
        });
    }

    fn debit(&mut self, out: usize, ovc: usize, amount: u32, cx: &mut CycleCtx) {
        if let Err(e) = self.ledgers[out].debit(ovc, amount) {
            cx.violation(
                self.id,
                ViolationKind::CreditNegative,
                format!("output {}: {e}", PortId::from_index(out)),
            );
        }
    }

    fn va_stage(&mut self, cx: &mut CycleCtx) {
        let p = cx.params;
        let t = cx.cycle;
        let mut sc = mem::take(&mut self.scratch);
        sc.va_requests.clear();
        for (input, buf) in self.inputs.iter().enumerate() {
            if buf.total_occupancy() == 0 {
                continue;
            }
            for v in 0..buf.vc_count() {
                if buf.vc_states[v].is_active() {
                    continue;
                }
                if let Some(f) = buf.front(v) {
                    if f.is_head() && f.buffered_at < t {
                        sc.va_requests.push(VaRequest {
                            input,
                            vc: v,
                            out_port: f.route as usize,
                        });
                    }
                }
            }
        }
        if sc.va_requests.is_empty() {
            self.scratch = sc;
            return;
        }
        for (free, owners) in sc.va_free.iter_mut().zip(&self.owners) {
            for (f, o) in free.iter_mut().zip(owners) {
                *f = o.is_none();
            }
        }
        sc.va_classes.clear();
        for r in &sc.va_requests {
            let f = self.inputs[r.input].front(r.vc).unwrap();
            let class = self.required_class(p, r.input, r.out_port, f.dateline_crossed);
            sc.va_classes.push(class);
        }
        let ledgers = &self.ledgers;
        let empty_vc = p.mechanism.is_empty_vc();
        let vcs = p.vcs;
        let requests = &sc.va_requests;
        let classes = &sc.va_classes;
        vc_allocate_into(
            requests,
            &mut self.va_rr,
            vcs,
            &mut sc.va_free,
            |out, v| ledgers[out].free(v),
            |i, v| {
                if empty_vc && ledgers[requests[i].out_port].used(v) != 0 {
                    return false;
                }
                match classes[i] {
                    Some(c) => {
                        let (lo, hi) = dateline_vc_range(c, vcs);
                        v >= lo && v < hi
                    }
                    None => true,
                }
            },
            &mut sc.va_pending,
            &mut sc.va_grants,
        );
        for &(req, ovc) in &sc.va_grants {
            let pkt = self.inputs[req.input].front(req.vc).unwrap().packet;
            self.inputs[req.input].vc_states[req.vc].activate(
                pkt,
                req.out_port as u8,
                ovc as VcId,
                false,
            );
            self.owners[req.out_port][ovc] = Some(OutVcOwner {
                input: req.input as u8,
                vc: req.vc as VcId,
                packet: pkt.id,
                reserved: 0,
                vct: false,
            });
        }
        self.scratch = sc;
    }

    #[allow(clippy::needless_range_loop)]
    fn sa_stage(&mut self, cx: &mut CycleCtx) {
        let p = cx.params;
        let t = cx.cycle;
        let vcs = p.vcs;
        let mut requests = mem::take(&mut self.scratch.sa_requests);
        requests.clear();
        let mut selected = mem::take(&mut self.selected);
        let mut ready = mem::take(&mut self.ready);
        let mut can = mem::take(&mut self.can_advance);
        selected.iter_mut().for_each(|s| *s = None);
        for input in 0..self.inputs.len() {
            if self.taken_in[input] || self.inputs[input].total_occupancy() == 0 {
                continue;
            }
            let mut any = false;
            for v in 0..vcs {
                ready[v] = false;
                can[v] = false;
                let buf = &self.inputs[input];
                let vs = &buf.vc_states[v];
                if !vs.is_active() || vs.bypassing {
                    continue;
                }
                let Some(f) = buf.front(v) else { continue };
                if f.packet.id != vs.active_packet.unwrap().id || f.buffered_at >= t {
                    continue;
                }
                ready[v] = true;
                any = true;
                let out = vs.out_port.unwrap() as usize;
                let ovc = vs.out_vc.unwrap() as usize;
                if self.taken_out[out] {
                    continue;
                }
                let reserved = self.owners[out][ovc].map_or(0, |o| o.reserved);
                let hop_kind = self.hop_kind(input, out);
                let ctx = ForwardContext {
                    rule: p.bypass_rule,
                    standard_vct: p.standard_vct,
                    packet_size: f.packet.size,
                    max_packet_size: p.max_packet_size,
                    flit_role: f.role,
                    bypass_vc_occupancy: 0,
                    bypass_vc_state: crate::buffers::VcStatus::Idle,
                    dest_free: self.ledgers[out].free(ovc),
                    bypass_free: 0,
                    hop_kind,
                };
                let rule = if p.is_torus() {
                    p.deadlock_rule
                } else {
                    DeadlockRule::None
                };
                let mut ok = can_forward_standard(&ctx, rule, reserved > 0);
                if ok
                    && f.is_head()
                    && whole_packet_debit(p.standard_vct, p.prepaid_entry, f.packet.size, hop_kind)
                {
                    ok = ctx.dest_free >= f.packet.size as u32;
                }
                can[v] = ok;
            }
            if !any {
                continue;
            }
            let sel = self.sa_inputs[input].select(&ready, &can);
            if let Some(v) = sel {
                selected[input] = Some(v);
                if can[v] {
                    let out = self.inputs[input].vc_states[v].out_port.unwrap() as usize;
                    requests.push(SaRequest {
                        input,
                        vc: v,
                        out_port: out,
                    });
                }
            }
        }
        self.ready = ready;
        self.can_advance = can;
        if selected.iter().all(Option::is_none) {
            self.selected = selected;
            self.scratch.sa_requests = requests;
            self.release_stalled_entries(p);
            return;
        }
        let mut grants = mem::take(&mut self.scratch.sa_grants);
        switch_allocate_into(&requests, &mut self.sa_outputs, &self.taken_out, &mut grants);
        self.scratch.sa_requests = requests;
        for (input, sel) in selected.iter().enumerate() {
            let Some(v) = *sel else { continue };
            let granted = grants.iter().any(|g| g.input == input);
            let tail = self.inputs[input].front(v).is_some_and(|f| f.is_tail());
            self.sa_inputs[input].report(v, granted, tail);
        }
        self.selected = selected;
        for &g in &grants {
            self.grant_switch(g, cx);
        }
        self.scratch.sa_grants = grants;
        self.release_stalled_entries(p);
    }

    /// A head entering a ring under a bubble rule gives its output VC back
    /// when it could not cross the switch, so it never holds a VC that
    /// traffic already in the ring needs.
    fn release_stalled_entries(&mut self, p: &RouterParams) {
        if !p.is_torus() || !matches!(p.deadlock_rule, DeadlockRule::FbfcL | DeadlockRule::Bubble) {
            return;
        }
        for input in 0..self.inputs.len() {
            for v in 0..p.vcs {
                let vs = &self.inputs[input].vc_states[v];
                if !vs.is_active() || vs.bypassing {
                    continue;
                }
                let Some(f) = self.inputs[input].front(v) else { continue };
                if !f.is_head() || !vs.holds(f.packet.id) {
                    continue;
                }
                let (out, ovc) = (vs.out_port.unwrap() as usize, vs.out_vc.unwrap() as usize);
                if !matches!(self.hop_kind(input, out), HopKind::Injection | HopKind::DimensionChange) {
                    continue;
                }
                self.inputs[input].vc_states[v].release();
                self.owners[out][ovc] = None;
                self.sa_inputs[input].forget(v);
            }
        }
    }

    fn grant_switch(&mut self, g: SaRequest, cx: &mut CycleCtx) {
        let p = cx.params;
        let (input, v, out) = (g.input, g.vc, g.out_port);
        let flit = match self.inputs[input].pop(v) {
            Ok(f) => f,
            Err(e) => {
                cx.violation(self.id, ViolationKind::FlitLoss, e.to_string());
                return;
            }
        };
        if let Some(sink) = self.upstream[input] {
            cx.credits.push((sink, v as VcId));
        }
        let ovc = self.inputs[input].vc_states[v].out_vc.unwrap() as usize;
        self.taken_in[input] = true;
        self.taken_out[out] = true;
        let size = flit.packet.size;
        if flit.is_head() {
            let hop_kind = self.hop_kind(input, out);
            let whole = whole_packet_debit(p.standard_vct, p.prepaid_entry, size, hop_kind);
            let amount = if whole { size } else { 1 };
            self.debit(out, ovc, amount as u32, cx);
            if let Some(o) = self.owners[out][ovc].as_mut() {
                o.reserved = amount - 1;
            }
        } else {
            let owner = self.owners[out][ovc].as_mut();
            match owner {
                Some(o) if o.reserved > 0 => o.reserved -= 1,
                _ => self.debit(out, ovc, 1, cx),
            }
        }
        if flit.is_tail() {
            self.owners[out][ovc] = None;
            self.inputs[input].vc_states[v].release();
        }
        self.st_latch.push(Latched {
            input: input as u8,
            flit,
            out_port: out as u8,
            out_vc: ovc as VcId,
        });
    }

    /// Switch and link traversal of one flit.
    #[allow(clippy::too_many_arguments)]
    fn traverse(
        &mut self,
        input: usize,
        mut flit: Flit,
        out: usize,
        ovc: usize,
        buffered: bool,
        vct: bool,
        cx: &mut CycleCtx,
    ) {
        let t = cx.cycle;
        cx.switch_traversals += 1;
        if let (Some(owner), true) = (self.locked[out], vct && flit.packet.is_multi_flit()) {
            if owner != flit.packet.id {
                cx.violation(
                    self.id,
                    ViolationKind::HybridLock,
                    format!(
                        "whole-packet bypass of packet {} crossed output {} locked by packet {owner}",
                        flit.packet.id,
                        PortId::from_index(out)
                    ),
                );
            }
        }
        if input < TRANSIT_PORTS {
            cx.metrics.record_hop(t, buffered, vct);
        }
        let shape = &cx.params.shape;
        match PortId::from_index(out) {
            PortId::Local(slot) => {
                let dest = flit.packet.destination;
                if shape.router_of(dest) != self.id || shape.slot_of(dest) != slot {
                    cx.violation(
                        self.id,
                        ViolationKind::Misroute,
                        format!(
                            "packet {} for node {dest} ejected at slot {slot}",
                            flit.packet.id
                        ),
                    );
                }
                let delivered = t + 2;
                cx.ejected_flits += 1;
                cx.metrics.record_flit_ejection(delivered);
                if flit.is_tail() {
                    cx.ejected_packets += 1;
                    cx.metrics.record_ejection(&flit.packet, delivered);
                }
            }
            PortId::Transit(dir) => {
                let Some(next) = self.downstream[out] else {
                    cx.violation(
                        self.id,
                        ViolationKind::Misroute,
                        format!(
                            "packet {} routed off the edge through {dir:?}",
                            flit.packet.id
                        ),
                    );
                    return;
                };
                if cx.params.deadlock_rule == DeadlockRule::Dateline {
                    let class = self.required_class(cx.params, input, out, flit.dateline_crossed);
                    flit.dateline_crossed = class == Some(1);
                }
                flit.vc = ovc as VcId;
                flit.route = dor_route(shape, next, flit.packet.destination)
                    .out_port
                    .index() as u8;
                let la = make_lookahead(&flit, flit.route, flit.vc, None, false);
                let idx = cx.links.index(next, out);
                let la_slot = ((t + 1) % 2) as usize;
                let fl_slot = ((t + 2) % 3) as usize;
                if cx.links.lookaheads[idx][la_slot].is_some()
                    || cx.links.flits[idx][fl_slot].is_some()
                {
                    cx.violation(
                        self.id,
                        ViolationKind::FlitLoss,
                        format!("two flits on link {dir:?} in one cycle"),
                    );
                }
                cx.links.lookaheads[idx][la_slot] = Some(la);
                cx.links.flits[idx][fl_slot] = Some(flit);
            }
        }
    }

    /// Debits, VC state and ownership for a flit placed in an input buffer
    /// from outside the pipeline (scripted scenarios).
    pub fn preload_owner(
        &mut self,
        input: usize,
        vc: usize,
        out: usize,
        ovc: usize,
        pkt: crate::model::PacketDescriptor,
    ) {
        self.inputs[input].vc_states[vc].activate(pkt, out as u8, ovc as VcId, false);
        self.owners[out][ovc] = Some(OutVcOwner {
            input: input as u8,
            vc: vc as VcId,
            packet: pkt.id,
            reserved: 0,
            vct: false,
        });
    }

    /// One-line summary of what each occupied VC is waiting for.
    pub fn wait_summary(&self) -> String {
        let mut parts = Vec::new();
        for (p, buf) in self.inputs.iter().enumerate() {
            for v in 0..buf.vc_count() {
                let Some(f) = buf.front(v) else { continue };
                let vs = &buf.vc_states[v];
                let what = match (vs.out_port, vs.out_vc) {
                    (Some(o), Some(ov)) if vs.is_active() => format!(
                        "-> {}.vc{ov} (credits {})",
                        PortId::from_index(o as usize),
                        self.ledgers[o as usize].free(ov as usize)
                    ),
                    _ => "awaiting VA".to_string(),
                };
                parts.push(format!(
                    "{}.vc{v}[{}] pkt {} {}{} {what}",
                    PortId::from_index(p),
                    buf.occupancy(v),
                    f.packet.id,
                    f.role.symbol(),
                    f.seq
                ));
            }
        }
        parts.join("; ")
    }
}
