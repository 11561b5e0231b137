//! Arbitration primitives and the allocators built from them.

use crate::model::{LaArbMode, LaPriority, Lookahead, MAX_PORTS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRobin {
    n: usize,
    /// Last granted index.
    pointer: usize,
}

impl RoundRobin {
    pub fn new(n: usize) -> Self {
        RoundRobin {
            n,
            pointer: n.saturating_sub(1),
        }
    }

    pub fn with_pointer(n: usize, pointer: usize) -> Self {
        assert!(pointer < n);
        RoundRobin { n, pointer }
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// First requester after the pointer, cyclically.
    pub fn peek(&self, requests: &[bool]) -> Option<usize> {
        debug_assert_eq!(requests.len(), self.n);
        (1..=self.n)
            .map(|off| (self.pointer + off) % self.n)
            .find(|&i| requests[i])
    }

    pub fn grant(&mut self, requests: &[bool]) -> Option<usize> {
        let w = self.peek(requests)?;
        self.pointer = w;
        Some(w)
    }
}

/// Matrix arbiter. `m[i][j]` set means `i` beats `j`. Starts with lower
/// indices ahead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixArbiter {
    n: usize,
    m: Vec<bool>,
}

impl MatrixArbiter {
    pub fn new(n: usize) -> Self {
        let mut m = vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                m[i * n + j] = true;
            }
        }
        MatrixArbiter { n, m }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn beats(&self, i: usize, j: usize) -> bool {
        self.m[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.m[i * self.n + j] = v;
        self.m[j * self.n + i] = !v;
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.beats(i, j) != self.beats(j, i)))
    }

    pub fn peek(&self, requests: &[bool]) -> Option<usize> {
        debug_assert_eq!(requests.len(), self.n);
        (0..self.n).find(|&i| {
            requests[i] && (0..self.n).all(|j| j == i || !requests[j] || !self.beats(j, i))
        })
    }

    /// Winner drops to lowest priority.
    pub fn grant(&mut self, requests: &[bool]) -> Option<usize> {
        let w = self.peek(requests)?;
        self.demote(w);
        Some(w)
    }

    pub fn demote(&mut self, w: usize) {
        for j in 0..self.n {
            if j != w {
                self.m[w * self.n + j] = false;
                self.m[j * self.n + w] = true;
            }
        }
    }
}

pub fn rr_grant(state: &mut RoundRobin, requests: &[bool]) -> Option<usize> {
    state.grant(requests)
}

pub fn matrix_grant(state: &mut MatrixArbiter, requests: &[bool]) -> Option<usize> {
    state.grant(requests)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaInputMode {
    /// Drop the body-flit priority as soon as the favored VC fails to advance.
    #[default]
    DemoteOnStall,
    /// Keep favoring the VC until its tail leaves, even while it cannot advance.
    LockUntilTail,
}

impl std::str::FromStr for SaInputMode {
    type Err = crate::error::ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "demote" | "demote-on-stall" | "demoteonstall" => Ok(SaInputMode::DemoteOnStall),
            "lock" | "lock-until-tail" | "lockuntiltail" => Ok(SaInputMode::LockUntilTail),
            other => Err(crate::error::ConfigError::Invalid(format!(
                "unknown sa input mode '{other}'"
            ))),
        }
    }
}

/// Variable-priority input arbiter of one input port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaInputState {
    pub held_vc: Option<usize>,
    pub rr: RoundRobin,
    pub mode: SaInputMode,
}

impl SaInputState {
    pub fn new(vc_count: usize, mode: SaInputMode) -> Self {
        SaInputState {
            held_vc: None,
            rr: RoundRobin::new(vc_count),
            mode,
        }
    }

    /// `ready[v]`: VC `v` has a flit of its active packet at the front.
    /// `can_advance[v]`: that flit also passes the flow-control checks.
    /// A held VC that is ready keeps the input under `LockUntilTail` even
    /// when it cannot advance.
    pub fn select(&mut self, ready: &[bool], can_advance: &[bool]) -> Option<usize> {
        if let Some(h) = self.held_vc {
            match self.mode {
                SaInputMode::LockUntilTail => {
                    if ready[h] {
                        return Some(h);
                    }
                }
                SaInputMode::DemoteOnStall => {
                    if can_advance[h] {
                        return Some(h);
                    }
                    self.held_vc = None;
                }
            }
        }
        self.rr.grant(can_advance)
    }

    /// Outcome of the VC returned by `select`.
    pub fn report(&mut self, vc: usize, advanced: bool, was_tail: bool) {
        if advanced {
            self.held_vc = if was_tail { None } else { Some(vc) };
        } else if self.mode == SaInputMode::DemoteOnStall {
            self.held_vc = None;
        }
    }

    /// A packet left this input outside the switch allocator (bypass
    /// fallback bookkeeping or tail forwarded elsewhere).
    pub fn forget(&mut self, vc: usize) {
        if self.held_vc == Some(vc) {
            self.held_vc = None;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaRequest {
    pub input: usize,
    pub vc: usize,
    pub out_port: usize,
}

/// Output stage of the switch allocator. `requests` holds at most one entry
/// per input. Outputs marked in `blocked` grant nothing.
pub fn switch_allocate(
    requests: &[SaRequest],
    outputs: &mut [MatrixArbiter],
    blocked: &[bool],
) -> Vec<SaRequest> {
    let mut grants = Vec::new();
    switch_allocate_into(requests, outputs, blocked, &mut grants);
    grants
}

/// `switch_allocate` writing grants into a reusable buffer.
pub fn switch_allocate_into(
    requests: &[SaRequest],
    outputs: &mut [MatrixArbiter],
    blocked: &[bool],
    grants: &mut Vec<SaRequest>,
) {
    grants.clear();
    let n_in = outputs.first().map_or(0, |m| m.len());
    let mut req = [false; MAX_PORTS];
    for (out, arb) in outputs.iter_mut().enumerate() {
        if blocked.get(out).copied().unwrap_or(false) {
            continue;
        }
        req[..n_in].iter_mut().for_each(|r| *r = false);
        let mut any = false;
        for r in requests.iter().filter(|r| r.out_port == out) {
            req[r.input] = true;
            any = true;
        }
        if !any {
            continue;
        }
        if let Some(w) = arb.grant(&req[..n_in]) {
            grants.push(
                *requests
                    .iter()
                    .find(|r| r.input == w && r.out_port == out)
                    .unwrap(),
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaRequest {
    pub input: usize,
    pub vc: usize,
    pub out_port: usize,
}

/// Separable VC allocator: for each output, requesters are served in
/// round-robin order over `input * vcs_per_input + vc`; each winner takes the
/// admissible free output VC with the most credits, lowest index on ties.
/// `free[out][ovc]` is cleared for every assignment made. `admissible` gets
/// the request's index.
pub fn vc_allocate(
    requests: &[VaRequest],
    rr: &mut [RoundRobin],
    vcs_per_input: usize,
    free: &mut [Vec<bool>],
    credits: impl Fn(usize, usize) -> u32,
    admissible: impl Fn(usize, usize) -> bool,
) -> Vec<(VaRequest, usize)> {
    let mut out_assign = Vec::new();
    let mut pending = Vec::new();
    vc_allocate_into(
        requests,
        rr,
        vcs_per_input,
        free,
        credits,
        admissible,
        &mut pending,
        &mut out_assign,
    );
    out_assign
}

/// `vc_allocate` with caller-owned scratch and output buffers.
#[allow(clippy::too_many_arguments)]
pub fn vc_allocate_into(
    requests: &[VaRequest],
    rr: &mut [RoundRobin],
    vcs_per_input: usize,
    free: &mut [Vec<bool>],
    credits: impl Fn(usize, usize) -> u32,
    admissible: impl Fn(usize, usize) -> bool,
    pending: &mut Vec<bool>,
    out_assign: &mut Vec<(VaRequest, usize)>,
) {
    out_assign.clear();
    for out in 0..rr.len() {
        if !requests.iter().any(|r| r.out_port == out) {
            continue;
        }
        pending.clear();
        pending.resize(rr[out].len(), false);
        for r in requests.iter().filter(|r| r.out_port == out) {
            pending[r.input * vcs_per_input + r.vc] = true;
        }
        while let Some(slot) = rr[out].peek(pending) {
            pending[slot] = false;
            let idx = requests
                .iter()
                .position(|r| r.out_port == out && r.input * vcs_per_input + r.vc == slot)
                .unwrap();
            let best = (0..free[out].len())
                .filter(|&v| free[out][v] && admissible(idx, v))
                .max_by(|&a, &b| credits(out, a).cmp(&credits(out, b)).then(b.cmp(&a)));
            if let Some(v) = best {
                rr[out].grant_index(slot);
                free[out][v] = false;
                out_assign.push((requests[idx], v));
            }
            if !free[out].iter().any(|&f| f) {
                break;
            }
        }
    }
}

impl RoundRobin {
    fn grant_index(&mut self, i: usize) {
        self.pointer = i;
    }
}

/// One lookahead competing in the lookahead stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaRequest {
    pub input: usize,
    pub la: Lookahead,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaOutcome {
    /// Indices into the request slice.
    pub winners: Vec<usize>,
    pub discarded: Vec<usize>,
    /// Requests discarded because two or more wanted the same output.
    pub conflicts: usize,
    /// Set when two different packets claim the same locked output.
    pub lock_violation: Option<String>,
}

/// Resolves lookaheads per output. `locked[out]` names the packet that owns
/// an output under the hybrid priority scheme: its lookaheads always win, and
/// in cycles where it sends nothing the output is open to normal-priority
/// lookaheads only. `blocked` marks outputs already taken this cycle. Lock
/// bookkeeping (acquire on a winning multi-flit head, release at tail) is
/// applied here for winners.
pub fn la_arbitrate(
    requests: &[LaRequest],
    mode: LaArbMode,
    matrices: &mut [MatrixArbiter],
    locked: &mut [Option<u64>],
    blocked: &[bool],
) -> LaOutcome {
    assert!(requests.len() <= 64);
    let mut out = LaOutcome::default();
    let mut won = 0u64;
    let mut lost = 0u64;
    let mut req = [false; MAX_PORTS];
    let n_in = matrices.first().map_or(0, |m| m.len());
    let ids = |mask: u64| (0..requests.len()).filter(move |i| mask >> i & 1 == 1);
    for port in 0..matrices.len() {
        let mut mine = 0u64;
        for (i, r) in requests.iter().enumerate() {
            if r.la.out_port as usize == port {
                mine |= 1 << i;
            }
        }
        if mine == 0 {
            continue;
        }
        if blocked.get(port).copied().unwrap_or(false) {
            lost |= mine;
            continue;
        }
        let mut contenders = mine;
        if mode == LaArbMode::HybridPriority {
            let max = ids(mine)
                .filter(|&i| requests[i].la.priority == LaPriority::Max)
                .fold(0u64, |m, i| m | 1 << i);
            if let Some(owner) = locked[port] {
                let owners = ids(mine)
                    .filter(|&i| requests[i].la.packet.id == owner)
                    .fold(0u64, |m, i| m | 1 << i);
                if owners.count_ones() > 1 {
                    out.lock_violation = Some(format!(
                        "output {port} locked by packet {owner} claimed by {} lookaheads",
                        owners.count_ones()
                    ));
                }
                if owners != 0 {
                    let w = owners.trailing_zeros() as usize;
                    won |= 1 << w;
                    lost |= mine & !(1 << w);
                    if requests[w].la.flit_role.is_tail() {
                        locked[port] = None;
                    }
                    continue;
                }
                // a hole in the owner's stream: open to flits following WH only
                lost |= max;
                contenders = mine & !max;
                if contenders == 0 {
                    continue;
                }
            } else if max != 0 {
                lost |= mine & !max;
                contenders = max;
            }
        }
        let count = contenders.count_ones() as usize;
        if count > 1 {
            out.conflicts += count;
        }
        let winner = match mode {
            LaArbMode::ConflictCheck => (count == 1).then(|| contenders.trailing_zeros() as usize),
            LaArbMode::Arbiter | LaArbMode::HybridPriority => {
                req[..n_in].iter_mut().for_each(|r| *r = false);
                for i in ids(contenders) {
                    req[requests[i].input] = true;
                }
                matrices[port]
                    .grant(&req[..n_in])
                    .map(|inp| ids(contenders).find(|&i| requests[i].input == inp).unwrap())
            }
        };
        match winner {
            Some(w) => {
                won |= 1 << w;
                lost |= contenders & !(1 << w);
                let la = &requests[w].la;
                if mode == LaArbMode::HybridPriority
                    && la.priority == LaPriority::Max
                    && !la.flit_role.is_tail()
                {
                    locked[port] = Some(la.packet.id);
                }
            }
            None => lost |= contenders,
        }
    }
    out.winners.extend(ids(won));
    out.discarded.extend(ids(lost));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_lookahead, segment_packet, PacketDescriptor};
    use proptest::prelude::*;

    fn reqs(n: usize, on: &[usize]) -> Vec<bool> {
        let mut r = vec![false; n];
        for &i in on {
            r[i] = true;
        }
        r
    }

    #[test]
    fn rr_after_pointer() {
        let mut rr = RoundRobin::with_pointer(3, 1);
        assert_eq!(rr_grant(&mut rr, &reqs(3, &[0, 2])), Some(2));
        assert_eq!(rr.pointer(), 2);
    }

    #[test]
    fn rr_wraps() {
        let mut rr = RoundRobin::with_pointer(3, 2);
        assert_eq!(rr_grant(&mut rr, &reqs(3, &[0, 2])), Some(0));
    }

    #[test]
    fn rr_no_requests() {
        let mut rr = RoundRobin::with_pointer(3, 1);
        assert_eq!(rr_grant(&mut rr, &reqs(3, &[])), None);
        assert_eq!(rr.pointer(), 1);
    }

    #[test]
    fn matrix_example() {
        let mut m = MatrixArbiter::new(3);
        m.set(2, 0, true);
        assert_eq!(matrix_grant(&mut m, &reqs(3, &[0, 2])), Some(2));
        assert!(m.beats(0, 2));
        assert!(m.is_antisymmetric());
    }

    #[test]
    fn matrix_single() {
        let mut m = MatrixArbiter::new(8);
        assert_eq!(matrix_grant(&mut m, &reqs(8, &[5])), Some(5));
    }

    /// Hand-run of the update rule: 0 wins first, drops below 1, and so on.
    #[test]
    fn matrix_alternates() {
        let mut m = MatrixArbiter::new(2);
        let r = reqs(2, &[0, 1]);
        let got: Vec<_> = (0..4).map(|_| matrix_grant(&mut m, &r).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 0, 1]);
    }

    #[test]
    fn sa_held_vc_wins() {
        let mut s = SaInputState::new(3, SaInputMode::DemoteOnStall);
        s.held_vc = Some(1);
        s.rr = RoundRobin::with_pointer(3, 1);
        let all = [true, true, true];
        assert_eq!(s.select(&all, &all), Some(1));
    }

    #[test]
    fn sa_demote_then_rr() {
        let mut s = SaInputState::new(2, SaInputMode::DemoteOnStall);
        let all = [true, true];
        assert_eq!(s.select(&all, &all), Some(0));
        s.report(0, true, false);
        assert_eq!(s.held_vc, Some(0));
        // output arbitration lost
        assert_eq!(s.select(&all, &all), Some(0));
        s.report(0, false, false);
        assert_eq!(s.held_vc, None);
        assert_eq!(s.select(&all, &all), Some(1));
    }

    #[test]
    fn sa_lock_sticks_on_blocked_vc() {
        let mut s = SaInputState::new(2, SaInputMode::LockUntilTail);
        s.held_vc = Some(0);
        for _ in 0..5 {
            assert_eq!(s.select(&[true, true], &[false, true]), Some(0));
            s.report(0, false, false);
        }
        assert_eq!(s.held_vc, Some(0));
    }

    #[test]
    fn sa_demote_skips_blocked_held() {
        let mut s = SaInputState::new(2, SaInputMode::DemoteOnStall);
        s.held_vc = Some(0);
        assert_eq!(s.select(&[true, true], &[false, true]), Some(1));
    }

    #[test]
    fn switch_distinct_and_shared_outputs() {
        let mut outs: Vec<_> = (0..3).map(|_| MatrixArbiter::new(3)).collect();
        let r = [
            SaRequest {
                input: 0,
                vc: 0,
                out_port: 1,
            },
            SaRequest {
                input: 1,
                vc: 1,
                out_port: 2,
            },
        ];
        assert_eq!(switch_allocate(&r, &mut outs, &[]).len(), 2);
        let r = [
            SaRequest {
                input: 0,
                vc: 0,
                out_port: 1,
            },
            SaRequest {
                input: 2,
                vc: 1,
                out_port: 1,
            },
        ];
        let g = switch_allocate(&r, &mut outs, &[]);
        assert_eq!(g.len(), 1);
        assert!(switch_allocate(&[], &mut outs, &[]).is_empty());
    }

    fn va(credits: [u32; 2], free: [bool; 2], adm: impl Fn(usize) -> bool) -> Option<usize> {
        let r = [VaRequest {
            input: 0,
            vc: 0,
            out_port: 0,
        }];
        let mut rr = vec![RoundRobin::new(2)];
        let mut f = vec![free.to_vec()];
        vc_allocate(&r, &mut rr, 2, &mut f, |_, v| credits[v], |_, v| adm(v))
            .first()
            .map(|x| x.1)
    }

    #[test]
    fn va_highest_credits() {
        assert_eq!(va([3, 5], [true, true], |_| true), Some(1));
    }

    #[test]
    fn va_tie_lowest() {
        assert_eq!(va([4, 4], [true, true], |_| true), Some(0));
    }

    #[test]
    fn va_inadmissible() {
        // an empty-VC rule rejecting VC 0 (occupancy 1)
        assert_eq!(va([9, 1], [true, true], |v| v != 0), Some(1));
        assert_eq!(va([9, 1], [true, false], |v| v != 0), None);
    }

    #[test]
    fn va_one_vc_per_winner() {
        let r = [
            VaRequest {
                input: 0,
                vc: 0,
                out_port: 0,
            },
            VaRequest {
                input: 1,
                vc: 0,
                out_port: 0,
            },
            VaRequest {
                input: 2,
                vc: 1,
                out_port: 0,
            },
        ];
        let mut rr = vec![RoundRobin::new(6)];
        let mut f = vec![vec![true, true]];
        let g = vc_allocate(&r, &mut rr, 2, &mut f, |_, _| 1, |_, _| true);
        assert_eq!(g.len(), 2);
        assert_ne!(g[0].1, g[1].1);
    }

    fn la(id: u64, size: u16, seq: usize, out: u8, vct: bool) -> Lookahead {
        let p = PacketDescriptor {
            id,
            source: 0,
            destination: 1,
            size,
            creation_cycle: 0,
        };
        let f = &segment_packet(&p).unwrap()[seq];
        make_lookahead(f, out, 0, None, vct)
    }

    fn arb_setup() -> (Vec<MatrixArbiter>, Vec<Option<u64>>) {
        (
            (0..4).map(|_| MatrixArbiter::new(4)).collect(),
            vec![None; 4],
        )
    }

    #[test]
    fn conflict_check_discards_all() {
        let (mut m, mut l) = arb_setup();
        let r = [
            LaRequest {
                input: 0,
                la: la(1, 1, 0, 2, false),
            },
            LaRequest {
                input: 1,
                la: la(2, 1, 0, 2, false),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::ConflictCheck, &mut m, &mut l, &[]);
        assert!(o.winners.is_empty());
        assert_eq!(o.discarded, vec![0, 1]);
    }

    #[test]
    fn arbiter_picks_one() {
        let (mut m, mut l) = arb_setup();
        let r = [
            LaRequest {
                input: 0,
                la: la(1, 1, 0, 2, false),
            },
            LaRequest {
                input: 1,
                la: la(2, 1, 0, 2, false),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::Arbiter, &mut m, &mut l, &[]);
        assert_eq!(o.winners.len(), 1);
        assert_eq!(o.discarded.len(), 1);
    }

    #[test]
    fn hybrid_max_beats_normal_and_locks() {
        let (mut m, mut l) = arb_setup();
        let r = [
            LaRequest {
                input: 0,
                la: la(1, 1, 0, 2, false),
            },
            LaRequest {
                input: 1,
                la: la(2, 5, 0, 2, true),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::HybridPriority, &mut m, &mut l, &[]);
        assert_eq!(o.winners, vec![1]);
        assert_eq!(l[2], Some(2));
        // owner present: locked output refuses a normal head, another output stays open
        let r = [
            LaRequest {
                input: 0,
                la: la(3, 1, 0, 2, false),
            },
            LaRequest {
                input: 3,
                la: la(4, 1, 0, 1, false),
            },
            LaRequest {
                input: 1,
                la: la(2, 5, 1, 2, true),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::HybridPriority, &mut m, &mut l, &[]);
        assert_eq!(o.winners, vec![1, 2]);
        assert_eq!(o.discarded, vec![0]);
        // owner silent: a normal flit fills the hole, a second max packet cannot
        let r = [
            LaRequest {
                input: 0,
                la: la(3, 1, 0, 2, false),
            },
            LaRequest {
                input: 3,
                la: la(5, 5, 0, 2, true),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::HybridPriority, &mut m, &mut l, &[]);
        assert_eq!(o.winners, vec![0]);
        assert_eq!(o.discarded, vec![1]);
        assert_eq!(l[2], Some(2));
        // tail releases the lock
        let r = [LaRequest {
            input: 1,
            la: la(2, 5, 4, 2, true),
        }];
        la_arbitrate(&r, LaArbMode::HybridPriority, &mut m, &mut l, &[]);
        assert_eq!(l[2], None);
    }

    #[test]
    fn hybrid_double_owner_is_violation() {
        let (mut m, mut l) = arb_setup();
        l[2] = Some(2);
        let r = [
            LaRequest {
                input: 0,
                la: la(2, 5, 1, 2, true),
            },
            LaRequest {
                input: 1,
                la: la(2, 5, 2, 2, true),
            },
        ];
        let o = la_arbitrate(&r, LaArbMode::HybridPriority, &mut m, &mut l, &[]);
        assert!(o.lock_violation.is_some());
    }

    proptest! {
        #[test]
        fn matrix_fair_within_n(n in 2usize..8, mask in 1u32..256) {
            let on: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            prop_assume!(!on.is_empty());
            let mut m = MatrixArbiter::new(n);
            let r = reqs(n, &on);
            let mut seen = vec![false; n];
            for _ in 0..on.len() {
                let w = matrix_grant(&mut m, &r).unwrap();
                prop_assert!(r[w]);
                seen[w] = true;
                prop_assert!(m.is_antisymmetric());
            }
            for i in on {
                prop_assert!(seen[i]);
            }
        }

        #[test]
        fn switch_one_per_input_and_output(
            picks in proptest::collection::vec(proptest::option::of(0usize..5), 5),
        ) {
            let r: Vec<SaRequest> = picks.iter().enumerate()
                .filter_map(|(i, o)| o.map(|o| SaRequest { input: i, vc: 0, out_port: o }))
                .collect();
            let mut outs: Vec<_> = (0..5).map(|_| MatrixArbiter::new(5)).collect();
            let g = switch_allocate(&r, &mut outs, &[]);
            let mut used_in = [false; 5];
            let mut used_out = [false; 5];
            for x in &g {
                prop_assert!(r.contains(x));
                prop_assert!(!used_in[x.input] && !used_out[x.out_port]);
                used_in[x.input] = true;
                used_out[x.out_port] = true;
            }
            let outs_requested: std::collections::BTreeSet<_> = r.iter().map(|x| x.out_port).collect();
            prop_assert_eq!(g.len(), outs_requested.len());
        }
    }
}
