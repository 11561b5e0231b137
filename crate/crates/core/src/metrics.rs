//! Measurement-window statistics and the final report.

use crate::error::ViolationRecord;
use crate::model::{Cycle, PacketDescriptor};
use crate::topology::NetworkShape;
use crate::traffic::{SizeDist, TrafficSpec};

/// Histogram buckets are one cycle wide below this bound; the last bucket
/// collects everything at or above it.
pub const HISTOGRAM_LIMIT: usize = 200;

/// Avg latency above this multiple of the zero-load latency marks saturation.
pub const SATURATION_FACTOR: f64 = 10.0;

/// Fixed pipeline cost of a packet that crosses no router-to-router link:
/// link from the interface, four buffered stages, ejection link.
pub const BASE_LATENCY: f64 = 5.0;

/// Cycles added per router-to-router link on a bypassed path.
pub const BYPASS_HOP_LATENCY: f64 = 2.0;

#[derive(Debug, Clone, Default)]
pub struct MetricsCollector {
    warmup_end: Cycle,
    end: Cycle,
    latencies: Vec<u64>,
    pub buffered_hops: u64,
    pub bypassed_wh: u64,
    pub bypassed_vct: u64,
    pub la_conflicts: u64,
    pub las_discarded: u64,
    ejected_flits: u64,
    generated_flits: u64,
    pub packets_created: u64,
    pub packets_completed: u64,
}

impl MetricsCollector {
    pub fn new(warmup_end: Cycle, end: Cycle) -> Self {
        MetricsCollector {
            warmup_end,
            end,
            ..Default::default()
        }
    }

    pub fn in_window(&self, cycle: Cycle) -> bool {
        cycle >= self.warmup_end && cycle < self.end
    }

    /// One router traversal. `vct` marks a bypass made under whole-packet rules.
    pub fn record_hop(&mut self, cycle: Cycle, buffered: bool, vct: bool) {
        if !self.in_window(cycle) {
            return;
        }
        if buffered {
            self.buffered_hops += 1;
        } else if vct {
            self.bypassed_vct += 1;
        } else {
            self.bypassed_wh += 1;
        }
    }

    pub fn record_generated(&mut self, pkt: &PacketDescriptor) {
        self.packets_created += 1;
        if self.in_window(pkt.creation_cycle) {
            self.generated_flits += pkt.size as u64;
        }
    }

    pub fn record_flit_ejection(&mut self, cycle: Cycle) {
        if self.in_window(cycle) {
            self.ejected_flits += 1;
        }
    }

    /// Tail delivered at `cycle`.
    pub fn record_ejection(&mut self, pkt: &PacketDescriptor, cycle: Cycle) {
        self.packets_completed += 1;
        if self.in_window(pkt.creation_cycle) && cycle < self.end {
            self.latencies.push(cycle - pkt.creation_cycle);
        }
    }

    pub fn record_la_outcome(&mut self, cycle: Cycle, conflicts: usize, discarded: usize) {
        if self.in_window(cycle) {
            self.la_conflicts += conflicts as u64;
            self.las_discarded += discarded as u64;
        }
    }

    pub fn total_hops(&self) -> u64 {
        self.buffered_hops + self.bypassed_wh + self.bypassed_vct
    }

    pub fn finalize(
        &self,
        nodes: u32,
        zero_load_latency: f64,
        violations: Vec<ViolationRecord>,
    ) -> SimReport {
        let window = self.end.saturating_sub(self.warmup_end).max(1);
        let mut sorted = self.latencies.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        let avg = if n == 0 {
            0.0
        } else {
            sorted.iter().sum::<u64>() as f64 / n as f64
        };
        let p99 = if n == 0 {
            0
        } else {
            // nearest rank
            let rank = ((0.99 * n as f64).ceil() as usize).max(1);
            sorted[rank - 1]
        };
        let mut histogram = vec![0u64; HISTOGRAM_LIMIT + 1];
        for &l in &sorted {
            histogram[(l as usize).min(HISTOGRAM_LIMIT)] += 1;
        }
        let total = self.total_hops();
        let denom = nodes as f64 * window as f64;
        SimReport {
            avg_packet_latency: avg,
            p99,
            latency_histogram: histogram,
            packets_measured: n as u64,
            throughput: self.ejected_flits as f64 / denom,
            offered_load: self.generated_flits as f64 / denom,
            buffered_flit_ratio: if total == 0 {
                0.0
            } else {
                self.buffered_hops as f64 / total as f64
            },
            buffered_hops: self.buffered_hops,
            bypassed_wh: self.bypassed_wh,
            bypassed_vct: self.bypassed_vct,
            la_conflicts: self.la_conflicts,
            las_discarded: self.las_discarded,
            packets_created: self.packets_created,
            packets_completed: self.packets_completed,
            warmup_end: self.warmup_end,
            end: self.end,
            zero_load_latency,
            saturated: n > 0 && avg > SATURATION_FACTOR * zero_load_latency,
            empty: n == 0,
            violations,
            rng_algorithm: crate::traffic::RNG_ALGORITHM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub avg_packet_latency: f64,
    pub p99: u64,
    /// One-cycle buckets, last bucket is overflow.
    pub latency_histogram: Vec<u64>,
    pub packets_measured: u64,
    /// Ejected flits per node per cycle in the measurement window.
    pub throughput: f64,
    pub offered_load: f64,
    pub buffered_flit_ratio: f64,
    pub buffered_hops: u64,
    pub bypassed_wh: u64,
    pub bypassed_vct: u64,
    pub la_conflicts: u64,
    pub las_discarded: u64,
    pub packets_created: u64,
    pub packets_completed: u64,
    pub warmup_end: Cycle,
    pub end: Cycle,
    pub zero_load_latency: f64,
    pub saturated: bool,
    /// No packet completed inside the window.
    pub empty: bool,
    pub violations: Vec<ViolationRecord>,
    pub rng_algorithm: &'static str,
}

/// Latency of a packet with `size` flits over `links` router-to-router links
/// in an idle network.
pub fn packet_zero_load_latency(links: u32, size: u16) -> f64 {
    BASE_LATENCY + BYPASS_HOP_LATENCY * links as f64 + (size - 1) as f64
}

/// Mean zero-load latency of the traffic mix, weighting sources by how often
/// they inject.
pub fn zero_load_latency(shape: &NetworkShape, traffic: &TrafficSpec) -> f64 {
    let nodes = shape.nodes();
    let mean_extra = traffic.size_dist.mean() - 1.0;
    let (mut acc, mut weight) = (0.0, 0.0);
    for src in 0..nodes {
        for (dst, p) in traffic.pattern.destination_distribution(src, nodes) {
            let links = shape.hops(shape.router_of(src), shape.router_of(dst));
            acc += p * packet_zero_load_latency(links, 1);
            weight += p;
        }
    }
    if weight == 0.0 {
        return BASE_LATENCY;
    }
    acc / weight + mean_extra
}

pub fn size_extra(sizes: &SizeDist) -> f64 {
    sizes.mean() - 1.0
}
