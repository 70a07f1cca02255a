//! Unit-disk radio medium with serialization delay, plus MAC-level link
//! sensing (LSM) for the protocols that rely on it.
//!
//! There are no collisions, fading or losses: a transmission reaches every
//! node within `range` of the sender at the moment it is sent.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::mobility::Position;
use crate::protocol::{NodeId, Packet};
use crate::sim::{RandomSource, SimTime};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    pub range: f64,
    /// Bits per second.
    pub bandwidth: f64,
    pub jitter_max: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            range: 250.0,
            bandwidth: 2_000_000.0,
            jitter_max: 0.001,
        }
    }
}

/// Inclusive at the boundary.
pub fn in_range(a: Position, b: Position, range: f64) -> bool {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy <= range * range
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkKind {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkEvent {
    pub node: NodeId,
    pub neighbor: NodeId,
    pub kind: LinkKind,
    pub at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delivery {
    pub to: NodeId,
    pub at: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnicastOutcome {
    Delivered(Delivery),
    /// Next hop out of range. Carries the down notification for the
    /// sender's protocol when one is due.
    LinkBreak(Option<LinkEvent>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediumError {
    #[error("unicast from {0} to itself")]
    SelfUnicast(NodeId),
    #[error("unknown next hop {0}")]
    UnknownNode(NodeId),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TxCounters {
    pub broadcasts: u64,
    pub unicast_attempts: u64,
    pub control: u64,
    pub data: u64,
}

impl TxCounters {
    pub fn total(&self) -> u64 {
        self.broadcasts + self.unicast_attempts
    }
}

#[derive(Debug)]
pub struct Medium {
    params: RadioParams,
    /// Last sensed neighbour set per node (LSM state).
    sensed: Vec<BTreeSet<NodeId>>,
    lsm_enabled: bool,
    rng: RandomSource,
    counters: TxCounters,
}

impl Medium {
    pub fn new(params: RadioParams, nodes: usize, lsm_enabled: bool, rng: RandomSource) -> Self {
        assert!(params.range > 0.0 && params.bandwidth > 0.0 && params.jitter_max >= 0.0);
        Medium {
            params,
            sensed: vec![BTreeSet::new(); nodes],
            lsm_enabled,
            rng,
            counters: TxCounters::default(),
        }
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn counters(&self) -> TxCounters {
        self.counters
    }

    pub fn sensed(&self, node: NodeId) -> &BTreeSet<NodeId> {
        &self.sensed[node.index()]
    }

    /// Serialization delay plus one jitter draw.
    fn transmission_delay(&mut self, size: u32) -> f64 {
        let serialization = f64::from(size) * 8.0 / self.params.bandwidth;
        serialization + self.rng.uniform(0.0, self.params.jitter_max)
    }

    pub fn neighbors(&self, node: NodeId, positions: &[Position]) -> Vec<NodeId> {
        let me = positions[node.index()];
        positions
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i != node.index() && in_range(me, p, self.params.range))
            .map(|(i, _)| NodeId::from(i))
            .collect()
    }

    fn count(&mut self, pkt: &Packet) {
        if pkt.is_data() {
            self.counters.data += 1;
        } else {
            self.counters.control += 1;
        }
    }

    /// One transmission heard by every in-range node at the same instant.
    pub fn broadcast(
        &mut self,
        src: NodeId,
        pkt: &Packet,
        now: SimTime,
        positions: &[Position],
    ) -> Vec<Delivery> {
        assert!(pkt.size > 0);
        self.counters.broadcasts += 1;
        self.count(pkt);
        let at = now + self.transmission_delay(pkt.size);
        self.neighbors(src, positions)
            .into_iter()
            .map(|to| Delivery { to, at })
            .collect()
    }

    pub fn unicast(
        &mut self,
        src: NodeId,
        next_hop: NodeId,
        pkt: &Packet,
        now: SimTime,
        positions: &[Position],
    ) -> Result<UnicastOutcome, MediumError> {
        if next_hop == src {
            return Err(MediumError::SelfUnicast(src));
        }
        if next_hop.index() >= positions.len() {
            return Err(MediumError::UnknownNode(next_hop));
        }
        self.counters.unicast_attempts += 1;
        self.count(pkt);
        if in_range(
            positions[src.index()],
            positions[next_hop.index()],
            self.params.range,
        ) {
            let at = now + self.transmission_delay(pkt.size);
            return Ok(UnicastOutcome::Delivered(Delivery { to: next_hop, at }));
        }
        let down = LinkEvent {
            node: src,
            neighbor: next_hop,
            kind: LinkKind::Down,
            at: now,
        };
        let notify = if self.lsm_enabled {
            // Keep up/down alternation: only a sensed link can go down.
            self.sensed[src.index()].remove(&next_hop).then_some(down)
        } else {
            Some(down)
        };
        Ok(UnicastOutcome::LinkBreak(notify))
    }

    /// Compares the current neighbour set with the last sensed one.
    pub fn lsm_tick(&mut self, node: NodeId, now: SimTime, positions: &[Position]) -> Vec<LinkEvent> {
        let current: BTreeSet<NodeId> = self.neighbors(node, positions).into_iter().collect();
        let last = &mut self.sensed[node.index()];
        let mut events: Vec<LinkEvent> = last
            .difference(&current)
            .map(|&nb| LinkEvent {
                node,
                neighbor: nb,
                kind: LinkKind::Down,
                at: now,
            })
            .collect();
        events.extend(current.difference(last).map(|&nb| LinkEvent {
            node,
            neighbor: nb,
            kind: LinkKind::Up,
            at: now,
        }));
        *last = current;
        events
    }
}
