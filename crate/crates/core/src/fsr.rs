//! Fisheye State Routing.
//!
//! Each node keeps a link-state database and periodically broadcasts it to
//! its one-hop neighbours, never relaying on receipt. Every stored record
//! remembers how many hops it has travelled from its origin; the intra-scope
//! exchange (frequent) carries records that are still within `intra_ttl`
//! hops, the inter-scope exchange (rare) carries everything within
//! `inter_ttl`. Link events only mutate local state: the protocol never
//! transmits outside its two periodic schedules.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{shortest_paths, Adjacency, PathInfo};
use crate::medium::{LinkEvent, LinkKind};
use crate::protocol::{ControlMsg, ControlVariant, Ctx, NodeId, Packet, Protocol, RouteEntry, Timer};
use crate::sim::SimTime;

const HEADER_BYTES: u32 = 12;
const RECORD_BYTES: u32 = 8;
const NEIGHBOR_BYTES: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct FsrConfig {
    pub intra_ttl: u32,
    pub intra_interval: f64,
    pub inter_ttl: u32,
    pub inter_interval: f64,
}

impl Default for FsrConfig {
    fn default() -> Self {
        FsrConfig {
            intra_ttl: 2,
            intra_interval: 5.0,
            inter_ttl: 255,
            inter_interval: 15.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Intra,
    Inter,
}

impl Scope {
    pub fn variant(self) -> ControlVariant {
        match self {
            Scope::Intra => ControlVariant::Ias,
            Scope::Inter => ControlVariant::Ies,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkStateRecord {
    pub origin: NodeId,
    pub neighbors: Vec<NodeId>,
    pub ls_seq: u64,
}

/// A record together with its hop distance from the transmitting node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopedRecord {
    pub record: LinkStateRecord,
    pub hops: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FsrUpdateMsg {
    pub sender: NodeId,
    pub scope: Scope,
    pub records: Vec<ScopedRecord>,
}

impl FsrUpdateMsg {
    pub fn size(&self) -> u32 {
        HEADER_BYTES
            + self
                .records
                .iter()
                .map(|r| RECORD_BYTES + NEIGHBOR_BYTES * r.record.neighbors.len() as u32)
                .sum::<u32>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredRecord {
    pub record: LinkStateRecord,
    pub hops: u32,
    pub received_at: SimTime,
}

#[derive(Debug)]
pub struct Fsr {
    id: NodeId,
    cfg: FsrConfig,
    phases: [f64; 2],
    neighbors: BTreeSet<NodeId>,
    db: BTreeMap<NodeId, StoredRecord>,
    routes: BTreeMap<NodeId, PathInfo>,
    intra_rounds: u64,
    inter_rounds: u64,
}

impl Fsr {
    /// `phases` place the first intra and inter ticks at that fraction of
    /// their interval.
    pub fn new(id: NodeId, cfg: FsrConfig, phases: [f64; 2]) -> Self {
        assert!(
            cfg.intra_ttl < cfg.inter_ttl && cfg.intra_interval < cfg.inter_interval,
            "fsr scopes must be graded: {cfg:?}"
        );
        let mut fsr = Fsr {
            id,
            cfg,
            phases,
            neighbors: BTreeSet::new(),
            db: BTreeMap::new(),
            routes: BTreeMap::new(),
            intra_rounds: 0,
            inter_rounds: 0,
        };
        fsr.refresh_own_record(SimTime::ZERO, 0);
        fsr
    }

    pub fn intra_rounds(&self) -> u64 {
        self.intra_rounds
    }

    pub fn inter_rounds(&self) -> u64 {
        self.inter_rounds
    }

    pub fn neighbors(&self) -> &BTreeSet<NodeId> {
        &self.neighbors
    }

    pub fn record(&self, origin: NodeId) -> Option<&StoredRecord> {
        self.db.get(&origin)
    }

    pub fn database(&self) -> &BTreeMap<NodeId, StoredRecord> {
        &self.db
    }

    fn refresh_own_record(&mut self, now: SimTime, ls_seq: u64) {
        self.db.insert(
            self.id,
            StoredRecord {
                record: LinkStateRecord {
                    origin: self.id,
                    neighbors: self.neighbors.iter().copied().collect(),
                    ls_seq,
                },
                hops: 0,
                received_at: now,
            },
        );
    }

    fn own_seq(&self) -> u64 {
        self.db[&self.id].record.ls_seq
    }

    fn ttl(&self, scope: Scope) -> u32 {
        match scope {
            Scope::Intra => self.cfg.intra_ttl,
            Scope::Inter => self.cfg.inter_ttl,
        }
    }

    /// Builds the message for one periodic exchange of `scope`.
    pub fn scoped_message(&self, scope: Scope) -> FsrUpdateMsg {
        let ttl = self.ttl(scope);
        FsrUpdateMsg {
            sender: self.id,
            scope,
            records: self
                .db
                .values()
                .filter(|s| s.hops < ttl)
                .map(|s| ScopedRecord {
                    record: s.record.clone(),
                    hops: s.hops,
                })
                .collect(),
        }
    }

    fn tick(&mut self, ctx: &mut Ctx, scope: Scope) {
        let seq = self.own_seq() + 1;
        self.refresh_own_record(ctx.now, seq);
        let msg = self.scoped_message(scope);
        let interval = match scope {
            Scope::Intra => {
                self.intra_rounds += 1;
                ctx.set_timer_in(self.cfg.intra_interval, Timer::FsrIntra);
                self.cfg.intra_interval
            }
            Scope::Inter => {
                self.inter_rounds += 1;
                ctx.set_timer_in(self.cfg.inter_interval, Timer::FsrInter);
                self.cfg.inter_interval
            }
        };
        debug_assert!(interval > 0.0);
        ctx.broadcast(ControlMsg::Fsr(msg), 1);
    }

    /// Merges a neighbour's exchange into the database. Returns whether
    /// anything changed.
    pub fn merge(&mut self, msg: &FsrUpdateMsg, now: SimTime) -> bool {
        let mut changed = false;
        for sr in &msg.records {
            let origin = sr.record.origin;
            if origin == self.id {
                continue;
            }
            let hops = sr.hops + 1;
            match self.db.get_mut(&origin) {
                Some(stored) if sr.record.ls_seq < stored.record.ls_seq => {}
                Some(stored) if sr.record.ls_seq == stored.record.ls_seq => {
                    if hops < stored.hops {
                        stored.hops = hops;
                    }
                }
                _ => {
                    let topology_changed = self
                        .db
                        .get(&origin)
                        .is_none_or(|s| s.record.neighbors != sr.record.neighbors);
                    self.db.insert(
                        origin,
                        StoredRecord {
                            record: sr.record.clone(),
                            hops,
                            received_at: now,
                        },
                    );
                    changed |= topology_changed;
                }
            }
        }
        if changed {
            self.compute_routes();
        }
        changed
    }

    /// Hop-count shortest paths over the neighbour set plus every stored record.
    pub fn compute_routes(&mut self) {
        let mut adj: Adjacency = Adjacency::new();
        adj.insert(self.id, self.neighbors.clone());
        for (&origin, s) in &self.db {
            if origin != self.id {
                adj.insert(origin, s.record.neighbors.iter().copied().collect());
            }
        }
        self.routes = shortest_paths(&adj, self.id);
    }
}

impl Protocol for Fsr {
    fn name(&self) -> &'static str {
        "fsr"
    }

    fn uses_lsm(&self) -> bool {
        true
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        ctx.set_timer_in(self.phases[0] * self.cfg.intra_interval, Timer::FsrIntra);
        ctx.set_timer_in(self.phases[1] * self.cfg.inter_interval, Timer::FsrInter);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::FsrIntra => self.tick(ctx, Scope::Intra),
            Timer::FsrInter => self.tick(ctx, Scope::Inter),
            other => unreachable!("fsr received foreign timer {other:?}"),
        }
    }

    fn on_control(&mut self, ctx: &mut Ctx, _pkt: &Packet, msg: &ControlMsg, _from: NodeId) {
        if let ControlMsg::Fsr(m) = msg {
            self.merge(m, ctx.now);
        }
    }

    fn on_link_event(&mut self, ctx: &mut Ctx, ev: LinkEvent) {
        let changed = match ev.kind {
            LinkKind::Up => self.neighbors.insert(ev.neighbor),
            LinkKind::Down => self.neighbors.remove(&ev.neighbor),
        };
        if changed {
            let seq = self.own_seq() + 1;
            self.refresh_own_record(ctx.now, seq);
            self.compute_routes();
        }
    }

    fn route_lookup(&self, dest: NodeId) -> Option<RouteEntry> {
        if dest == self.id {
            return Some(RouteEntry::self_route(self.id));
        }
        let p = self.routes.get(&dest)?;
        Some(RouteEntry {
            dest,
            next_hop: p.next_hop,
            metric: p.hops,
            seq_num: None,
            installed_at: self.db.get(&dest).map_or(SimTime::ZERO, |s| s.received_at),
            advertised: true,
        })
    }

    fn routing_table(&self) -> Vec<RouteEntry> {
        std::iter::once(self.id)
            .chain(self.routes.keys().copied())
            .filter_map(|d| self.route_lookup(d))
            .collect()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Action;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn up(p: &mut Fsr, nb: u32) {
        let mut acts = Vec::new();
        let ev = LinkEvent {
            node: p.id,
            neighbor: n(nb),
            kind: LinkKind::Up,
            at: SimTime::ZERO,
        };
        p.on_link_event(&mut Ctx::new(SimTime::ZERO, p.id, &mut acts), ev);
        assert!(acts.is_empty(), "link events must not transmit");
    }

    /// Delivers one `scope` exchange from every node to its line neighbours,
    /// in index order.
    fn exchange_round(line: &mut [Fsr], scope: Scope, now: f64) {
        for i in 0..line.len() {
            let msg = line[i].scoped_message(scope);
            for j in [i.wrapping_sub(1), i + 1] {
                if let Some(node) = line.get_mut(j) {
                    node.merge(&msg, t(now));
                }
            }
        }
    }

    fn line(len: u32) -> Vec<Fsr> {
        let mut v: Vec<Fsr> = (0..len)
            .map(|i| Fsr::new(n(i), FsrConfig::default(), [0.0, 0.0]))
            .collect();
        for i in 0..len {
            if i > 0 {
                up(&mut v[i as usize], i - 1);
            }
            if i + 1 < len {
                up(&mut v[i as usize], i + 1);
            }
        }
        v
    }

    #[test]
    fn intra_scope_stops_at_ttl() {
        let mut nodes = line(5);
        for r in 0..6 {
            exchange_round(&mut nodes, Scope::Intra, r as f64);
        }
        let has_a = |k: usize| nodes[k].record(n(0)).is_some();
        assert!(has_a(1) && has_a(2));
        assert!(!has_a(3) && !has_a(4));
        assert_eq!(nodes[2].record(n(0)).unwrap().hops, 2);
    }

    #[test]
    fn inter_scope_reaches_whole_line() {
        let mut nodes = line(10);
        for r in 0..10 {
            exchange_round(&mut nodes, Scope::Inter, r as f64);
        }
        for k in 1..10 {
            assert!(nodes[k].record(n(0)).is_some(), "node {k}");
            assert_eq!(nodes[k].route_lookup(n(0)).unwrap().metric, k as u32);
        }
    }

    #[test]
    fn duplicate_record_not_reapplied() {
        let mut a = line(2);
        let msg = a[0].scoped_message(Scope::Intra);
        assert!(a[1].merge(&msg, t(1.0)));
        assert!(!a[1].merge(&msg, t(2.0)));
    }

    #[test]
    fn stale_record_rejected() {
        let mut nodes = line(3);
        let old = nodes[0].scoped_message(Scope::Intra);
        let mut acts = Vec::new();
        nodes[0].tick(&mut Ctx::new(t(5.0), n(0), &mut acts), Scope::Intra);
        let fresh = nodes[0].scoped_message(Scope::Intra);
        nodes[1].merge(&fresh, t(5.0));
        let seq = nodes[1].record(n(0)).unwrap().record.ls_seq;
        nodes[1].merge(&old, t(6.0));
        assert_eq!(nodes[1].record(n(0)).unwrap().record.ls_seq, seq);
    }

    #[test]
    fn empty_database_only_self_route() {
        let p = Fsr::new(n(3), FsrConfig::default(), [0.0, 0.0]);
        let table = p.routing_table();
        assert_eq!(table.len(), 1);
        assert_eq!(table[0].metric, 0);
    }

    #[test]
    fn down_event_sends_nothing() {
        let mut p = Fsr::new(n(0), FsrConfig::default(), [0.0, 0.0]);
        up(&mut p, 1);
        let mut acts = Vec::new();
        let ev = LinkEvent {
            node: n(0),
            neighbor: n(1),
            kind: LinkKind::Down,
            at: t(1.0),
        };
        p.on_link_event(&mut Ctx::new(t(1.0), n(0), &mut acts), ev);
        assert!(acts.is_empty());
        assert!(p.neighbors().is_empty());
    }

    #[test]
    fn tick_reschedules_and_broadcasts() {
        let mut p = Fsr::new(n(0), FsrConfig::default(), [0.0, 0.0]);
        let mut acts = Vec::new();
        p.on_timer(&mut Ctx::new(t(5.0), n(0), &mut acts), Timer::FsrIntra);
        assert!(acts.contains(&Action::SetTimer {
            at: t(10.0),
            timer: Timer::FsrIntra
        }));
        assert!(acts
            .iter()
            .any(|a| matches!(a, Action::Broadcast { ttl: 1, .. })));
        assert_eq!(p.intra_rounds(), 1);
    }
}
