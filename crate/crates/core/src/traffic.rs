//! Synthetic traffic: destination patterns, packet sizes and a Bernoulli
//! injection process with one deterministic random stream per node.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ConfigError;
use crate::model::{Cycle, NodeId, PacketDescriptor};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), stream = node id";

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Uniform,
    BitReversal,
    Transpose,
    /// `fraction` of packets go to one of `nodes`, the rest are uniform.
    Hotspot {
        nodes: Vec<NodeId>,
        fraction: f64,
    },
}

impl Pattern {
    pub fn name(&self) -> &'static str {
        match self {
            Pattern::Uniform => "uniform",
            Pattern::BitReversal => "bitrev",
            Pattern::Transpose => "transpose",
            Pattern::Hotspot { .. } => "hotspot",
        }
    }

    pub fn default_hotspots(nodes: u32) -> Vec<NodeId> {
        let e = (nodes / 16).max(1);
        let mut v = vec![0, e - 1, nodes - e, nodes - 1];
        v.dedup();
        v
    }

    /// Hotspot pattern with the default node set and the given fraction.
    pub fn hotspot(nodes: u32, fraction: f64) -> Pattern {
        Pattern::Hotspot {
            nodes: Self::default_hotspots(nodes),
            fraction,
        }
    }

    pub fn validate(&self, nodes: u32) -> Result<(), ConfigError> {
        if nodes < 2 {
            return Err(ConfigError::Invalid(
                "traffic needs at least two nodes".into(),
            ));
        }
        match self {
            Pattern::Uniform => Ok(()),
            Pattern::BitReversal if nodes.is_power_of_two() => Ok(()),
            Pattern::Transpose if nodes.is_power_of_two() && nodes.trailing_zeros().is_multiple_of(2) => {
                Ok(())
            }
            Pattern::Hotspot {
                nodes: hs,
                fraction,
            } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(ConfigError::Invalid(format!(
                        "hotspot fraction {fraction} outside [0,1]"
                    )));
                }
                if hs.is_empty() || hs.iter().any(|&h| h >= nodes) {
                    return Err(ConfigError::Invalid("hotspot nodes out of range".into()));
                }
                Ok(())
            }
            Pattern::BitReversal => Err(ConfigError::Invalid(format!(
                "bit reversal needs a power-of-two node count, got {nodes}"
            ))),
            Pattern::Transpose => Err(ConfigError::Invalid(format!(
                "transpose needs an even power-of-two node count, got {nodes}"
            ))),
        }
    }

    /// Fixed destination for permutation patterns.
    pub fn permutation(&self, src: NodeId, nodes: u32) -> Option<NodeId> {
        let bits = nodes.trailing_zeros();
        match self {
            Pattern::BitReversal => Some(bit_reverse(src, bits)),
            Pattern::Transpose => Some(transpose(src, bits)),
            _ => None,
        }
    }

    /// Probability of each destination for packets from `src`.
    pub fn destination_distribution(&self, src: NodeId, nodes: u32) -> Vec<(NodeId, f64)> {
        let uniform = |w: f64| -> Vec<(NodeId, f64)> {
            let share = w / (nodes - 1) as f64;
            (0..nodes)
                .filter(|&d| d != src)
                .map(|d| (d, share))
                .collect()
        };
        match self {
            Pattern::Uniform => uniform(1.0),
            Pattern::BitReversal | Pattern::Transpose => {
                let d = self.permutation(src, nodes).unwrap();
                if d == src {
                    Vec::new()
                } else {
                    vec![(d, 1.0)]
                }
            }
            Pattern::Hotspot {
                nodes: hs,
                fraction,
            } => {
                let targets: Vec<NodeId> = hs.iter().copied().filter(|&h| h != src).collect();
                let mut dist = uniform(1.0 - fraction);
                if !targets.is_empty() {
                    let share = fraction / targets.len() as f64;
                    for (d, p) in dist.iter_mut() {
                        if targets.contains(d) {
                            *p += share;
                        }
                    }
                }
                dist
            }
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = ConfigError;

    /// Hotspot parses with placeholder nodes; callers fill them in once the
    /// node count is known.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "random" => Ok(Pattern::Uniform),
            "bitrev" | "bit-reversal" | "bitreversal" => Ok(Pattern::BitReversal),
            "transpose" => Ok(Pattern::Transpose),
            "hotspot" => Ok(Pattern::Hotspot {
                nodes: Vec::new(),
                fraction: 0.25,
            }),
            other => Err(ConfigError::Invalid(format!(
                "unknown traffic pattern '{other}'"
            ))),
        }
    }
}

pub fn bit_reverse(x: u32, bits: u32) -> u32 {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (32 - bits)
    }
}

/// Swaps the high and low halves of a `bits`-wide node index.
pub fn transpose(x: u32, bits: u32) -> u32 {
    let half = bits / 2;
    let mask = (1u32 << half) - 1;
    ((x & mask) << half) | (x >> half)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDist {
    SingleFlit,
    /// Short packets with probability `p_short`, long ones otherwise.
    Bimodal {
        p_short: f64,
        short: u16,
        long: u16,
    },
}

impl SizeDist {
    pub fn bimodal() -> Self {
        SizeDist::Bimodal {
            p_short: 0.8,
            short: 1,
            long: 5,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SizeDist::SingleFlit => 1.0,
            SizeDist::Bimodal {
                p_short,
                short,
                long,
            } => p_short * short as f64 + (1.0 - p_short) * long as f64,
        }
    }

    pub fn max(&self) -> u16 {
        match *self {
            SizeDist::SingleFlit => 1,
            SizeDist::Bimodal { short, long, .. } => short.max(long),
        }
    }

    pub fn outcomes(&self) -> Vec<(u16, f64)> {
        match *self {
            SizeDist::SingleFlit => vec![(1, 1.0)],
            SizeDist::Bimodal {
                p_short,
                short,
                long,
            } => vec![(short, p_short), (long, 1.0 - p_short)],
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u16 {
        match *self {
            SizeDist::SingleFlit => 1,
            SizeDist::Bimodal {
                p_short,
                short,
                long,
            } => {
                if rng.gen_bool(p_short) {
                    short
                } else {
                    long
                }
            }
        }
    }
}

impl fmt::Display for SizeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeDist::SingleFlit => f.write_str("1"),
            SizeDist::Bimodal { short, long, .. } => write!(f, "{short},{long}"),
        }
    }
}

impl FromStr for SizeDist {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u16> = s
            .split(',')
            .map(|p| p.trim().parse::<u16>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::Invalid(format!("bad packet sizes '{s}'")))?;
        match parts.as_slice() {
            [1] => Ok(SizeDist::SingleFlit),
            [a, b] if *a >= 1 && *b >= 1 => Ok(SizeDist::Bimodal {
                p_short: 0.8,
                short: *a,
                long: *b,
            }),
            _ => Err(ConfigError::Invalid(format!(
                "packet sizes must be '1' or 'short,long', got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    pub pattern: Pattern,
    /// Offered load in flits per node per cycle.
    pub injection_rate: f64,
    pub size_dist: SizeDist,
    pub seed: u64,
}

impl TrafficSpec {
    pub fn packet_probability(&self) -> f64 {
        self.injection_rate / self.size_dist.mean()
    }

    pub fn validate(&self, nodes: u32) -> Result<(), ConfigError> {
        if !(self.injection_rate > 0.0 && self.injection_rate <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "injection rate {} outside (0, 1]",
                self.injection_rate
            )));
        }
        if let SizeDist::Bimodal { p_short, .. } = self.size_dist {
            if !(0.0..=1.0).contains(&p_short) {
                return Err(ConfigError::Invalid(
                    "size probabilities must sum to 1".into(),
                ));
            }
        }
        self.pattern.validate(nodes)
    }
}

/// Per-node packet sources.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    spec: TrafficSpec,
    nodes: u32,
    streams: Vec<ChaCha8Rng>,
    next_id: u64,
    packet_prob: f64,
}

impl TrafficGenerator {
    pub fn new(spec: TrafficSpec, nodes: u32) -> Self {
        let streams = (0..nodes)
            .map(|n| {
                let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
                r.set_stream(n as u64);
                r
            })
            .collect();
        let packet_prob = spec.packet_probability().min(1.0);
        TrafficGenerator {
            spec,
            nodes,
            streams,
            next_id: 0,
            packet_prob,
        }
    }

    pub fn spec(&self) -> &TrafficSpec {
        &self.spec
    }

    /// Packet created at `node` this cycle, if any.
    pub fn next_injection(&mut self, node: NodeId, cycle: Cycle) -> Option<PacketDescriptor> {
        let nodes = self.nodes;
        let rng = &mut self.streams[node as usize];
        if !rng.gen_bool(self.packet_prob) {
            return None;
        }
        let destination = match &self.spec.pattern {
            Pattern::Uniform => uniform_other(rng, node, nodes),
            Pattern::BitReversal | Pattern::Transpose => {
                let d = self.spec.pattern.permutation(node, nodes).unwrap();
                if d == node {
                    return None;
                }
                d
            }
            Pattern::Hotspot {
                nodes: hs,
                fraction,
            } => {
                if rng.gen_bool(*fraction) {
                    let targets: Vec<NodeId> = hs.iter().copied().filter(|&h| h != node).collect();
                    if targets.is_empty() {
                        uniform_other(rng, node, nodes)
                    } else {
                        targets[rng.gen_range(0..targets.len())]
                    }
                } else {
                    uniform_other(rng, node, nodes)
                }
            }
        };
        let size = self.spec.size_dist.sample(rng);
        let id = self.next_id;
        self.next_id += 1;
        Some(PacketDescriptor {
            id,
            source: node,
            destination,
            size,
            creation_cycle: cycle,
        })
    }
}

fn uniform_other(rng: &mut ChaCha8Rng, src: NodeId, nodes: u32) -> NodeId {
    let d = rng.gen_range(0..nodes - 1);
    if d >= src {
        d + 1
    } else {
        d
    }
}
