//! Throughput, cost of time (mean end-to-end delay) and cost of energy
//! (control transmissions), with packet conservation accounting.

use std::collections::HashSet;

use crate::error::SimError;
use crate::protocol::{Body, ControlVariant, NodeId, Packet};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    NoRoute,
    Ttl,
    Buffer,
}

/// Control transmissions broken down by [`ControlVariant`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VariantCounts([u64; ControlVariant::ALL.len()]);

impl VariantCounts {
    pub fn get(&self, v: ControlVariant) -> u64 {
        self.0[v as usize]
    }

    pub fn single(v: ControlVariant) -> Self {
        let mut c = Self::default();
        c.bump(v);
        c
    }

    pub fn bump(&mut self, v: ControlVariant) {
        self.0[v as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ControlVariant, u64)> + '_ {
        ControlVariant::ALL.iter().map(|&v| (v, self.get(v)))
    }
}

impl std::ops::AddAssign for VariantCounts {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    /// Delivered payload bits per second of run time.
    pub throughput: f64,
    /// Mean end-to-end delay; `None` when nothing was delivered.
    pub ct_mean: Option<f64>,
    pub ct_samples: u64,
    pub ce_control_tx: u64,
    pub ce_control_bytes: u64,
    pub sent: u64,
    pub delivered: u64,
    pub dropped_no_route: u64,
    pub dropped_ttl: u64,
    pub dropped_buffer: u64,
    pub in_flight_at_end: u64,
    pub duplicates: u64,
    pub offered_bits: u64,
    pub variants: VariantCounts,
}

impl MetricsRecord {
    pub fn delivery_ratio(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.delivered as f64 / self.sent as f64
        }
    }
}

#[derive(Debug)]
pub struct MetricsCollector {
    duration: f64,
    sent: u64,
    offered_bits: u64,
    delivered: u64,
    delivered_bits: u64,
    delay_sum: f64,
    dropped: [u64; 3],
    seen: HashSet<(u32, u64)>,
    duplicates: u64,
    control_bytes: u64,
    per_node: Vec<VariantCounts>,
}

impl MetricsCollector {
    pub fn new(nodes: usize, duration: f64) -> Self {
        MetricsCollector {
            duration,
            sent: 0,
            offered_bits: 0,
            delivered: 0,
            delivered_bits: 0,
            delay_sum: 0.0,
            dropped: [0; 3],
            seen: HashSet::new(),
            duplicates: 0,
            control_bytes: 0,
            per_node: vec![VariantCounts::default(); nodes],
        }
    }

    pub fn on_send(&mut self, pkt: &Packet) {
        self.sent += 1;
        self.offered_bits += u64::from(pkt.size) * 8;
    }

    /// Records a data packet arriving at its destination.
    pub fn on_delivery(&mut self, pkt: &Packet, now: SimTime) {
        let Body::Data { flow, payload_seq } = pkt.body else {
            panic!("on_delivery called with a control packet");
        };
        if !self.seen.insert((flow, payload_seq)) {
            self.duplicates += 1;
            return;
        }
        let delay = now - pkt.created_at;
        debug_assert!(delay > 0.0, "non-positive delay {delay}");
        self.delivered += 1;
        self.delivered_bits += u64::from(pkt.size) * 8;
        self.delay_sum += delay;
    }

    pub fn on_drop(&mut self, reason: DropReason) {
        self.dropped[reason as usize] += 1;
    }

    pub fn on_control_tx(&mut self, node: NodeId, pkt: &Packet) {
        let msg = pkt.control().expect("on_control_tx called with a data packet");
        self.per_node[node.index()].bump(msg.variant(node));
        self.control_bytes += u64::from(pkt.size);
    }

    pub fn node_counts(&self, node: NodeId) -> VariantCounts {
        self.per_node[node.index()]
    }

    pub fn per_node(&self) -> &[VariantCounts] {
        &self.per_node
    }

    pub fn totals(&self) -> VariantCounts {
        let mut t = VariantCounts::default();
        for c in &self.per_node {
            t += *c;
        }
        t
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    /// Aggregates the run and checks conservation.
    pub fn finalize(&self, in_flight: u64) -> Result<MetricsRecord, SimError> {
        let dropped: u64 = self.dropped.iter().sum();
        if self.delivered + dropped + in_flight != self.sent {
            return Err(SimError::Conservation {
                sent: self.sent,
                delivered: self.delivered,
                dropped,
                in_flight,
            });
        }
        let variants = self.totals();
        let throughput = if self.duration > 0.0 {
            self.delivered_bits as f64 / self.duration
        } else {
            0.0
        };
        Ok(MetricsRecord {
            throughput,
            ct_mean: (self.delivered > 0).then(|| self.delay_sum / self.delivered as f64),
            ct_samples: self.delivered,
            ce_control_tx: variants.total(),
            ce_control_bytes: self.control_bytes,
            sent: self.sent,
            delivered: self.delivered,
            dropped_no_route: self.dropped[DropReason::NoRoute as usize],
            dropped_ttl: self.dropped[DropReason::Ttl as usize],
            dropped_buffer: self.dropped[DropReason::Buffer as usize],
            in_flight_at_end: in_flight,
            duplicates: self.duplicates,
            offered_bits: self.offered_bits,
            variants,
        })
    }
}
