//! 2D mesh and torus shapes with concentration, dimension-ordered routing and
//! dateline VC classes.

use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::flow_control::HopKind;
use crate::model::{Direction, NodeId, PortId, RouterId, MAX_PORTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Mesh,
    Torus,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::Mesh => "mesh",
            TopologyKind::Torus => "torus",
        })
    }
}

impl FromStr for TopologyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mesh" => Ok(TopologyKind::Mesh),
            "torus" => Ok(TopologyKind::Torus),
            other => Err(ConfigError::Invalid(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub kind: TopologyKind,
    pub kx: u32,
    pub ky: u32,
    pub concentration: u32,
    /// Torus rings only run in the positive direction.
    pub unidirectional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteStep {
    pub out_port: PortId,
    /// The link taken is the wraparound link of its ring.
    pub dateline_crossed: bool,
}

impl NetworkShape {
    pub fn new(kind: TopologyKind, k: u32, concentration: u32) -> Self {
        NetworkShape {
            kind,
            kx: k,
            ky: k,
            concentration,
            unidirectional: false,
        }
    }

    /// Unidirectional ring of `k` routers along X.
    pub fn ring(k: u32, concentration: u32) -> Self {
        NetworkShape {
            kind: TopologyKind::Torus,
            kx: k,
            ky: 1,
            concentration,
            unidirectional: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.kx == 0 || self.ky == 0 || self.concentration == 0 {
            return Err(ConfigError::Invalid(
                "topology dimensions must be positive".into(),
            ));
        }
        if self.unidirectional && self.kind != TopologyKind::Torus {
            return Err(ConfigError::Invalid(
                "unidirectional rings need a torus".into(),
            ));
        }
        if self.concentration as usize > MAX_PORTS - 4 {
            return Err(ConfigError::Invalid(format!(
                "concentration {} too large (at most {})",
                self.concentration,
                MAX_PORTS - 4
            )));
        }
        Ok(())
    }

    pub fn routers(&self) -> u32 {
        self.kx * self.ky
    }

    pub fn nodes(&self) -> u32 {
        self.routers() * self.concentration
    }

    pub fn ports(&self) -> usize {
        crate::model::TRANSIT_PORTS + self.concentration as usize
    }

    pub fn router_of(&self, node: NodeId) -> RouterId {
        node / self.concentration
    }

    pub fn slot_of(&self, node: NodeId) -> u8 {
        (node % self.concentration) as u8
    }

    pub fn node_at(&self, router: RouterId, slot: u8) -> NodeId {
        router * self.concentration + slot as u32
    }

    pub fn coords(&self, router: RouterId) -> (u32, u32) {
        (router % self.kx, router / self.kx)
    }

    pub fn router_at(&self, x: u32, y: u32) -> RouterId {
        y * self.kx + x
    }

    fn ring_len(&self, dim: usize) -> u32 {
        if dim == 0 {
            self.kx
        } else {
            self.ky
        }
    }

    /// Router on the far side of output `dir`, if the link exists.
    pub fn neighbor(&self, router: RouterId, dir: Direction) -> Option<RouterId> {
        let (x, y) = self.coords(router);
        let k = self.ring_len(dir.dimension());
        let c = if dir.dimension() == 0 { x } else { y };
        let torus = self.kind == TopologyKind::Torus;
        if self.unidirectional && !dir.is_positive() {
            return None;
        }
        let next = if dir.is_positive() {
            if c + 1 < k {
                c + 1
            } else if torus && k > 1 {
                0
            } else {
                return None;
            }
        } else if c > 0 {
            c - 1
        } else if torus && k > 1 {
            k - 1
        } else {
            return None;
        };
        Some(if dir.dimension() == 0 {
            self.router_at(next, y)
        } else {
            self.router_at(x, next)
        })
    }

    /// Router whose output `dir` feeds `router`'s input `dir`.
    pub fn upstream(&self, router: RouterId, dir: Direction) -> Option<RouterId> {
        let (x, y) = self.coords(router);
        let k = self.ring_len(dir.dimension());
        let c = if dir.dimension() == 0 { x } else { y };
        let torus = self.kind == TopologyKind::Torus;
        if self.unidirectional && !dir.is_positive() {
            return None;
        }
        let prev = if dir.is_positive() {
            if c > 0 {
                c - 1
            } else if torus && k > 1 {
                k - 1
            } else {
                return None;
            }
        } else if c + 1 < k {
            c + 1
        } else if torus && k > 1 {
            0
        } else {
            return None;
        };
        Some(if dir.dimension() == 0 {
            self.router_at(prev, y)
        } else {
            self.router_at(x, prev)
        })
    }

    /// Direction and hop count along one dimension.
    fn dim_step(&self, dim: usize, from: u32, to: u32) -> Option<(Direction, u32)> {
        if from == to {
            return None;
        }
        let k = self.ring_len(dim);
        let (pos, neg) = if dim == 0 {
            (Direction::XPlus, Direction::XMinus)
        } else {
            (Direction::YPlus, Direction::YMinus)
        };
        match self.kind {
            TopologyKind::Mesh => {
                if to > from {
                    Some((pos, to - from))
                } else {
                    Some((neg, from - to))
                }
            }
            TopologyKind::Torus => {
                let fwd = (to + k - from) % k;
                let back = k - fwd;
                if self.unidirectional || fwd <= back {
                    Some((pos, fwd))
                } else {
                    Some((neg, back))
                }
            }
        }
    }

    fn crosses_dateline(&self, router: RouterId, dir: Direction) -> bool {
        if self.kind != TopologyKind::Torus {
            return false;
        }
        let (x, y) = self.coords(router);
        let k = self.ring_len(dir.dimension());
        let c = if dir.dimension() == 0 { x } else { y };
        if dir.is_positive() {
            c == k - 1
        } else {
            c == 0
        }
    }

    /// Router-to-router links between two routers under DOR.
    pub fn hops(&self, from: RouterId, to: RouterId) -> u32 {
        let (fx, fy) = self.coords(from);
        let (tx, ty) = self.coords(to);
        self.dim_step(0, fx, tx).map_or(0, |s| s.1) + self.dim_step(1, fy, ty).map_or(0, |s| s.1)
    }

    /// Kind of transition a flit makes crossing a router from `input` to `output`.
    pub fn hop_kind(input: PortId, output: PortId) -> HopKind {
        match (input, output) {
            (_, PortId::Local(_)) => HopKind::Ejection,
            (PortId::Local(_), _) => HopKind::Injection,
            (PortId::Transit(a), PortId::Transit(b)) if a.dimension() != b.dimension() => {
                HopKind::DimensionChange
            }
            _ => HopKind::InRing,
        }
    }

    /// Router sequence visited from `src` to `dst` node, both ends included.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Vec<RouterId> {
        let mut r = self.router_of(src);
        let mut out = vec![r];
        loop {
            match dor_route(self, r, dst).out_port {
                PortId::Local(_) => return out,
                PortId::Transit(d) => {
                    r = self.neighbor(r, d).expect("route leaves the network");
                    out.push(r);
                }
            }
        }
    }
}

pub fn dor_route(shape: &NetworkShape, current: RouterId, dest: NodeId) -> RouteStep {
    let (cx, cy) = shape.coords(current);
    let (dx, dy) = shape.coords(shape.router_of(dest));
    let dir = shape
        .dim_step(0, cx, dx)
        .or_else(|| shape.dim_step(1, cy, dy))
        .map(|s| s.0);
    match dir {
        Some(d) => RouteStep {
            out_port: PortId::Transit(d),
            dateline_crossed: shape.crosses_dateline(current, d),
        },
        None => RouteStep {
            out_port: PortId::Local(shape.slot_of(dest)),
            dateline_crossed: false,
        },
    }
}

/// Route the flit will need at the router it reaches next.
pub fn lookahead_route(shape: &NetworkShape, next_router: RouterId, dest: NodeId) -> RouteStep {
    dor_route(shape, next_router, dest)
}

/// VC class after taking a hop. Class 0 below the dateline, 1 after it;
/// a change of dimension starts over in class 0.
pub fn dateline_vc(current_class: u8, crossing: bool, dimension_change: bool) -> u8 {
    if crossing {
        1
    } else if dimension_change {
        0
    } else {
        current_class
    }
}

/// VC range `[lo, hi)` of a dateline class.
pub fn dateline_vc_range(class: u8, vc_count: usize) -> (usize, usize) {
    let half = vc_count / 2;
    if class == 0 {
        (0, half)
    } else {
        (half, vc_count)
    }
}
