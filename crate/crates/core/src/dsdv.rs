//! Destination-Sequenced Distance Vector.
//!
//! * periodic full-table dumps every `ru_per_interval`, each bumping the
//!   node's own (even) sequence number by two;
//! * triggered updates on link break, carrying only the invalidated routes
//!   (odd sequence number, infinite metric);
//! * incremental updates for newly discovered or newly settled routes;
//! * a fixed settling gate: a changed route is withheld from advertisements
//!   until it has been stable for `settling_time`, and data for it can be
//!   buffered meanwhile.

use std::any::Any;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::medium::{LinkEvent, LinkKind};
use crate::metrics::DropReason;
use crate::protocol::{
    ControlMsg, ControlVariant, Ctx, NodeId, Packet, Protocol, RouteEntry, Timer,
};
use crate::sim::SimTime;

pub const INFINITE_METRIC: u32 = u32::MAX;

const HEADER_BYTES: u32 = 12;
const ENTRY_BYTES: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct DsdvConfig {
    pub ru_per_interval: f64,
    pub settling_time: f64,
    pub buffer_during_settling: bool,
    /// Held packets per destination before further ones are dropped.
    pub buffer_capacity: usize,
}

impl Default for DsdvConfig {
    fn default() -> Self {
        DsdvConfig {
            ru_per_interval: 15.0,
            settling_time: 6.0,
            buffer_during_settling: true,
            buffer_capacity: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateKind {
    Periodic,
    Triggered,
    Incremental,
}

impl UpdateKind {
    pub fn variant(self) -> ControlVariant {
        match self {
            UpdateKind::Periodic => ControlVariant::RuPer,
            UpdateKind::Triggered => ControlVariant::RuTri,
            UpdateKind::Incremental => ControlVariant::Npdu,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdvertisedRoute {
    pub dest: NodeId,
    pub metric: u32,
    pub seq: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsdvUpdateMsg {
    pub origin: NodeId,
    pub entries: Vec<AdvertisedRoute>,
    pub kind: UpdateKind,
}

impl DsdvUpdateMsg {
    pub fn full_dump(&self) -> bool {
        self.kind == UpdateKind::Periodic
    }

    pub fn size(&self) -> u32 {
        HEADER_BYTES + ENTRY_BYTES * self.entries.len() as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Route {
    next_hop: NodeId,
    metric: u32,
    seq: u64,
    installed_at: SimTime,
    /// While `Some`, the route is withheld from advertisements.
    settles_at: Option<SimTime>,
}

impl Route {
    fn is_valid(&self) -> bool {
        self.metric != INFINITE_METRIC
    }
}

/// Outcome of the settling gate for one destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Advertise,
    Hold,
}

#[derive(Debug)]
pub struct Dsdv {
    id: NodeId,
    cfg: DsdvConfig,
    own_seq: u64,
    routes: BTreeMap<NodeId, Route>,
    /// Destinations queued for the next incremental update.
    pending: BTreeSet<NodeId>,
    flush_scheduled: bool,
    held: BTreeMap<NodeId, VecDeque<Packet>>,
    periodic_dumps: u64,
    triggered_updates: u64,
    link_breaks: u64,
    phase: f64,
}

impl Dsdv {
    pub fn new(id: NodeId, cfg: DsdvConfig) -> Self {
        assert!(cfg.ru_per_interval > 0.0 && cfg.settling_time >= 0.0);
        Dsdv {
            id,
            cfg,
            own_seq: 0,
            routes: BTreeMap::new(),
            pending: BTreeSet::new(),
            flush_scheduled: false,
            held: BTreeMap::new(),
            periodic_dumps: 0,
            triggered_updates: 0,
            link_breaks: 0,
            phase: 0.0,
        }
    }

    pub fn own_seq(&self) -> u64 {
        self.own_seq
    }

    /// Offsets the first periodic dump by `fraction` of the interval.
    pub fn with_phase(mut self, fraction: f64) -> Self {
        assert!((0.0..1.0).contains(&fraction), "phase fraction {fraction} outside [0, 1)");
        self.phase = fraction;
        self
    }

    pub fn periodic_dumps(&self) -> u64 {
        self.periodic_dumps
    }

    pub fn triggered_updates(&self) -> u64 {
        self.triggered_updates
    }

    /// Down events that invalidated at least one active route.
    pub fn link_breaks(&self) -> u64 {
        self.link_breaks
    }

    /// Stored (possibly broken) entry: `(next_hop, metric, seq)`.
    pub fn entry(&self, dest: NodeId) -> Option<(NodeId, u32, u64)> {
        self.routes
            .get(&dest)
            .map(|r| (r.next_hop, r.metric, r.seq))
    }

    pub fn settle_gate(&self, dest: NodeId, now: SimTime) -> Gate {
        match self.routes.get(&dest).and_then(|r| r.settles_at) {
            Some(t) if t > now => Gate::Hold,
            _ => Gate::Advertise,
        }
    }

    fn advertisable(&self, now: SimTime) -> impl Iterator<Item = AdvertisedRoute> + '_ {
        self.routes.iter().filter_map(move |(&dest, r)| {
            (self.settle_gate(dest, now) == Gate::Advertise).then_some(AdvertisedRoute {
                dest,
                metric: r.metric,
                seq: r.seq,
            })
        })
    }

    pub fn periodic_dump(&mut self, ctx: &mut Ctx) {
        self.own_seq += 2;
        let mut entries = vec![AdvertisedRoute {
            dest: self.id,
            metric: 0,
            seq: self.own_seq,
        }];
        entries.extend(self.advertisable(ctx.now));
        // A full dump supersedes anything queued for incremental advertising.
        self.pending.clear();
        self.periodic_dumps += 1;
        ctx.broadcast(
            ControlMsg::Dsdv(DsdvUpdateMsg {
                origin: self.id,
                entries,
                kind: UpdateKind::Periodic,
            }),
            1,
        );
        ctx.set_timer_in(self.cfg.ru_per_interval, Timer::DsdvPeriodic);
    }

    /// Invalidates every active route through `neighbor`; returns the
    /// destinations affected.
    fn invalidate_via(&mut self, neighbor: NodeId) -> Vec<NodeId> {
        let mut broken = Vec::new();
        for (&dest, r) in self.routes.iter_mut() {
            if r.next_hop == neighbor && r.is_valid() {
                r.metric = INFINITE_METRIC;
                r.seq = next_odd(r.seq);
                r.settles_at = None;
                broken.push(dest);
            }
        }
        broken
    }

    fn send_triggered(&mut self, ctx: &mut Ctx, dests: &[NodeId]) {
        let entries = dests
            .iter()
            .map(|d| {
                let r = &self.routes[d];
                AdvertisedRoute {
                    dest: *d,
                    metric: r.metric,
                    seq: r.seq,
                }
            })
            .collect();
        for d in dests {
            self.pending.remove(d);
        }
        self.triggered_updates += 1;
        ctx.broadcast(
            ControlMsg::Dsdv(DsdvUpdateMsg {
                origin: self.id,
                entries,
                kind: UpdateKind::Triggered,
            }),
            1,
        );
    }

    pub fn on_link_break(&mut self, ctx: &mut Ctx, neighbor: NodeId) {
        let broken = self.invalidate_via(neighbor);
        if broken.is_empty() {
            return;
        }
        self.link_breaks += 1;
        self.send_triggered(ctx, &broken);
        for d in broken {
            self.drop_held(ctx, d);
        }
    }

    fn queue_incremental(&mut self, ctx: &mut Ctx, dest: NodeId) {
        self.pending.insert(dest);
        if !self.flush_scheduled {
            self.flush_scheduled = true;
            ctx.set_timer(ctx.now, Timer::DsdvFlush);
        }
    }

    fn flush_incremental(&mut self, ctx: &mut Ctx) {
        self.flush_scheduled = false;
        let now = ctx.now;
        let entries: Vec<AdvertisedRoute> = std::mem::take(&mut self.pending)
            .into_iter()
            .filter(|&d| self.settle_gate(d, now) == Gate::Advertise)
            .filter_map(|d| {
                self.routes.get(&d).map(|r| AdvertisedRoute {
                    dest: d,
                    metric: r.metric,
                    seq: r.seq,
                })
            })
            .collect();
        if entries.is_empty() {
            return;
        }
        ctx.broadcast(
            ControlMsg::Dsdv(DsdvUpdateMsg {
                origin: self.id,
                entries,
                kind: UpdateKind::Incremental,
            }),
            1,
        );
    }

    pub fn process_update(&mut self, ctx: &mut Ctx, msg: &DsdvUpdateMsg, from: NodeId) {
        let now = ctx.now;
        let mut broken = Vec::new();
        for e in &msg.entries {
            if e.dest == self.id {
                continue;
            }
            if e.metric == INFINITE_METRIC {
                // Odd sequence numbers only kill routes through the reporter.
                if let Some(r) = self.routes.get_mut(&e.dest) {
                    if r.next_hop == from && r.is_valid() && e.seq > r.seq {
                        r.metric = INFINITE_METRIC;
                        r.seq = e.seq;
                        r.settles_at = None;
                        broken.push(e.dest);
                    } else if !r.is_valid() && e.seq > r.seq {
                        r.seq = e.seq;
                    }
                }
                continue;
            }
            let metric = e.metric.saturating_add(1);
            let Some(stored) = self.routes.get_mut(&e.dest) else {
                self.routes.insert(
                    e.dest,
                    Route {
                        next_hop: from,
                        metric,
                        seq: e.seq,
                        installed_at: now,
                        settles_at: None,
                    },
                );
                self.queue_incremental(ctx, e.dest);
                continue;
            };
            let fresher = e.seq > stored.seq;
            let better = e.seq == stored.seq && metric < stored.metric;
            if !(fresher || better) {
                continue;
            }
            let was_valid = stored.is_valid();
            let changed = stored.metric != metric;
            stored.seq = e.seq;
            if !was_valid {
                // Rediscovery after a break is advertised at once.
                stored.next_hop = from;
                stored.metric = metric;
                stored.installed_at = now;
                stored.settles_at = None;
                self.queue_incremental(ctx, e.dest);
                self.release_held(ctx, e.dest);
            } else if changed {
                stored.next_hop = from;
                stored.metric = metric;
                stored.installed_at = now;
                if self.cfg.settling_time > 0.0 {
                    let until = now + self.cfg.settling_time;
                    stored.settles_at = Some(until);
                    ctx.set_timer(until, Timer::DsdvSettle(e.dest));
                } else {
                    self.queue_incremental(ctx, e.dest);
                }
            } else {
                // Same metric: a sequence refresh, passed on at once so it
                // reaches every node along shortest paths first.
                if stored.next_hop != from {
                    stored.next_hop = from;
                    stored.installed_at = now;
                }
                if stored.settles_at.is_none() {
                    self.queue_incremental(ctx, e.dest);
                }
            }
        }
        if !broken.is_empty() {
            self.send_triggered(ctx, &broken);
            for d in broken {
                self.drop_held(ctx, d);
            }
        }
    }

    fn on_settle(&mut self, ctx: &mut Ctx, dest: NodeId) {
        let Some(r) = self.routes.get_mut(&dest) else { return };
        match r.settles_at {
            Some(t) if t <= ctx.now => {
                r.settles_at = None;
                self.queue_incremental(ctx, dest);
                self.release_held(ctx, dest);
            }
            // Superseded by a later change or a break.
            _ => {}
        }
    }

    fn release_held(&mut self, ctx: &mut Ctx, dest: NodeId) {
        if let Some(q) = self.held.remove(&dest) {
            for p in q {
                ctx.release(p);
            }
        }
    }

    fn drop_held(&mut self, ctx: &mut Ctx, dest: NodeId) {
        if let Some(q) = self.held.remove(&dest) {
            for p in q {
                ctx.drop_data(p, DropReason::NoRoute);
            }
        }
    }
}

fn next_odd(seq: u64) -> u64 {
    if seq.is_multiple_of(2) {
        seq + 1
    } else {
        seq + 2
    }
}

impl Protocol for Dsdv {
    fn name(&self) -> &'static str {
        "dsdv"
    }

    fn uses_lsm(&self) -> bool {
        true
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        ctx.set_timer_in(self.phase * self.cfg.ru_per_interval, Timer::DsdvPeriodic);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::DsdvPeriodic => self.periodic_dump(ctx),
            Timer::DsdvSettle(dest) => self.on_settle(ctx, dest),
            Timer::DsdvFlush => self.flush_incremental(ctx),
            other => unreachable!("dsdv received foreign timer {other:?}"),
        }
    }

    fn on_control(&mut self, ctx: &mut Ctx, _pkt: &Packet, msg: &ControlMsg, from: NodeId) {
        if let ControlMsg::Dsdv(m) = msg {
            self.process_update(ctx, m, from);
        }
    }

    fn on_link_event(&mut self, ctx: &mut Ctx, ev: LinkEvent) {
        if ev.kind == LinkKind::Down {
            self.on_link_break(ctx, ev.neighbor);
        }
    }

    fn route_lookup(&self, dest: NodeId) -> Option<RouteEntry> {
        if dest == self.id {
            return Some(RouteEntry {
                seq_num: Some(self.own_seq),
                ..RouteEntry::self_route(self.id)
            });
        }
        let r = self.routes.get(&dest).filter(|r| r.is_valid())?;
        Some(RouteEntry {
            dest,
            next_hop: r.next_hop,
            metric: r.metric,
            seq_num: Some(r.seq),
            installed_at: r.installed_at,
            advertised: r.settles_at.is_none(),
        })
    }

    fn routing_table(&self) -> Vec<RouteEntry> {
        std::iter::once(self.id)
            .chain(self.routes.keys().copied())
            .filter_map(|d| self.route_lookup(d))
            .collect()
    }

    fn intercept_data(&mut self, ctx: &mut Ctx, pkt: Packet) -> Option<Packet> {
        if !self.cfg.buffer_during_settling {
            return Some(pkt);
        }
        let dest = pkt.dst_node()?;
        let settling = self
            .routes
            .get(&dest)
            .is_some_and(|r| r.is_valid() && r.settles_at.is_some_and(|t| t > ctx.now));
        if !settling {
            return Some(pkt);
        }
        let q = self.held.entry(dest).or_default();
        if q.len() >= self.cfg.buffer_capacity {
            ctx.drop_data(pkt, DropReason::Buffer);
        } else {
            q.push_back(pkt);
        }
        None
    }

    fn held_packets(&self) -> usize {
        self.held.values().map(VecDeque::len).sum()
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

    fn update(origin: u32, entries: &[(u32, u32, u64)]) -> DsdvUpdateMsg {
        DsdvUpdateMsg {
            origin: n(origin),
            entries: entries
                .iter()
                .map(|&(d, m, s)| AdvertisedRoute {
                    dest: n(d),
                    metric: m,
                    seq: s,
                })
                .collect(),
            kind: UpdateKind::Periodic,
        }
    }

    fn apply(p: &mut Dsdv, now: f64, msg: &DsdvUpdateMsg, from: u32) -> Vec<Action> {
        let mut acts = Vec::new();
        p.process_update(&mut Ctx::new(t(now), p.id, &mut acts), msg, n(from));
        acts
    }

    fn broadcasts(acts: &[Action]) -> Vec<&DsdvUpdateMsg> {
        acts.iter()
            .filter_map(|a| match a {
                Action::Broadcast {
                    msg: ControlMsg::Dsdv(m),
                    ..
                } => Some(m),
                _ => None,
            })
            .collect()
    }

    fn instant() -> DsdvConfig {
        DsdvConfig {
            settling_time: 0.0,
            ..DsdvConfig::default()
        }
    }

    #[test]
    fn periodic_dump_bumps_even_seq() {
        let mut p = Dsdv::new(n(0), DsdvConfig::default());
        let mut acts = Vec::new();
        p.periodic_dump(&mut Ctx::new(t(15.0), n(0), &mut acts));
        let first = p.own_seq();
        p.periodic_dump(&mut Ctx::new(t(30.0), n(0), &mut acts));
        assert_eq!(p.own_seq() - first, 2);
        assert_eq!(p.own_seq() % 2, 0);
        let dumps = broadcasts(&acts);
        assert_eq!(dumps[0].entries.len(), 1);
        assert!(dumps[0].full_dump());
        assert!(acts.contains(&Action::SetTimer {
            at: t(45.0),
            timer: Timer::DsdvPeriodic
        }));
    }

    #[test]
    fn higher_sequence_wins() {
        let mut p = Dsdv::new(n(0), instant());
        apply(&mut p, 1.0, &update(1, &[(5, 2, 10)]), 1);
        assert_eq!(p.entry(n(5)), Some((n(1), 3, 10)));
        apply(&mut p, 2.0, &update(2, &[(5, 5, 12)]), 2);
        assert_eq!(p.entry(n(5)), Some((n(2), 6, 12)));
    }

    #[test]
    fn equal_sequence_better_metric() {
        let mut p = Dsdv::new(n(0), instant());
        apply(&mut p, 1.0, &update(1, &[(5, 2, 10)]), 1);
        apply(&mut p, 2.0, &update(2, &[(5, 1, 10)]), 2);
        assert_eq!(p.entry(n(5)), Some((n(2), 2, 10)));
        // Worse metric with the same sequence is ignored.
        apply(&mut p, 3.0, &update(3, &[(5, 4, 10)]), 3);
        assert_eq!(p.entry(n(5)), Some((n(2), 2, 10)));
    }

    #[test]
    fn odd_sequence_invalidates_route_through_reporter() {
        let mut p = Dsdv::new(n(0), instant());
        apply(&mut p, 1.0, &update(1, &[(5, 2, 12)]), 1);
        let acts = apply(&mut p, 2.0, &update(1, &[(5, INFINITE_METRIC, 13)]), 1);
        assert!(p.route_lookup(n(5)).is_none());
        assert_eq!(p.entry(n(5)).unwrap().2, 13);
        let sent = broadcasts(&acts);
        assert_eq!(sent[0].kind, UpdateKind::Triggered);
    }

    #[test]
    fn link_break_triggers_update_for_affected_routes() {
        let mut p = Dsdv::new(n(0), instant());
        apply(&mut p, 1.0, &update(1, &[(1, 0, 2), (5, 1, 4), (6, 2, 8)]), 1);
        apply(&mut p, 1.0, &update(2, &[(2, 0, 2)]), 2);
        let mut acts = Vec::new();
        p.on_link_break(&mut Ctx::new(t(5.0), n(0), &mut acts), n(1));
        let sent = broadcasts(&acts);
        assert_eq!(sent.len(), 1);
        assert_eq!(sent[0].kind, UpdateKind::Triggered);
        assert_eq!(sent[0].entries.len(), 3);
        assert!(sent[0]
            .entries
            .iter()
            .all(|e| e.metric == INFINITE_METRIC && e.seq % 2 == 1));
        assert_eq!(p.triggered_updates(), 1);

        // Nothing left via n1.
        let mut acts = Vec::new();
        p.on_link_break(&mut Ctx::new(t(6.0), n(0), &mut acts), n(1));
        assert!(broadcasts(&acts).is_empty());
        assert_eq!(p.triggered_updates(), 1);
    }

    #[test]
    fn settling_gate_windows() {
        let mut p = Dsdv::new(n(0), DsdvConfig::default());
        apply(&mut p, 0.0, &update(1, &[(5, 3, 10)]), 1);
        // A new route is advertised at once; a change starts the window.
        assert_eq!(p.settle_gate(n(5), t(0.0)), Gate::Advertise);
        apply(&mut p, 0.0, &update(2, &[(5, 1, 10)]), 2);
        assert_eq!(p.settle_gate(n(5), t(5.9)), Gate::Hold);
        assert_eq!(p.settle_gate(n(5), t(6.0)), Gate::Advertise);

        let mut q = Dsdv::new(n(0), DsdvConfig::default());
        apply(&mut q, 0.0, &update(1, &[(5, 3, 10)]), 1);
        apply(&mut q, 0.0, &update(2, &[(5, 2, 10)]), 2);
        apply(&mut q, 3.0, &update(3, &[(5, 1, 10)]), 3);
        assert_eq!(q.settle_gate(n(5), t(6.0)), Gate::Hold);
        // The timer armed at the first change is stale by now.
        let mut acts = Vec::new();
        q.on_timer(&mut Ctx::new(t(6.0), n(0), &mut acts), Timer::DsdvSettle(n(5)));
        assert_eq!(q.settle_gate(n(5), t(6.0)), Gate::Hold);
        assert_eq!(q.settle_gate(n(5), t(9.0)), Gate::Advertise);
    }

    #[test]
    fn zero_settling_advertises_immediately() {
        let mut p = Dsdv::new(n(0), instant());
        apply(&mut p, 0.0, &update(1, &[(5, 3, 10)]), 1);
        apply(&mut p, 0.5, &update(2, &[(5, 1, 10)]), 2);
        assert_eq!(p.settle_gate(n(5), t(0.5)), Gate::Advertise);
    }

    #[test]
    fn data_buffered_while_settling() {
        let cfg = DsdvConfig {
            buffer_capacity: 2,
            ..DsdvConfig::default()
        };
        let mut p = Dsdv::new(n(0), cfg);
        apply(&mut p, 0.0, &update(1, &[(5, 3, 10)]), 1);
        apply(&mut p, 1.0, &update(2, &[(5, 1, 10)]), 2);

        let mut acts = Vec::new();
        for s in 0..3 {
            let pkt = Packet::data(n(0), n(5), 0, s, 512, 32, t(2.0));
            let mut ctx = Ctx::new(t(2.0), n(0), &mut acts);
            assert!(p.intercept_data(&mut ctx, pkt).is_none());
        }
        assert_eq!(p.held_packets(), 2);
        assert!(matches!(acts[..], [Action::Drop(_, DropReason::Buffer)]));

        let mut acts = Vec::new();
        p.on_timer(&mut Ctx::new(t(7.0), n(0), &mut acts), Timer::DsdvSettle(n(5)));
        assert_eq!(p.held_packets(), 0);
        assert_eq!(acts.iter().filter(|a| matches!(a, Action::Release(_))).count(), 2);
    }

    proptest::proptest! {
        #[test]
        fn sequence_numbers_never_decrease(
            ops in proptest::collection::vec((1u32..4, 0u32..6, 0u32..5, 0u64..40, proptest::bool::ANY), 1..80)
        ) {
            let mut p = Dsdv::new(n(0), DsdvConfig::default());
            let mut last: BTreeMap<NodeId, u64> = BTreeMap::new();
            for (i, (from, dest, metric, seq, brk)) in ops.into_iter().enumerate() {
                let now = i as f64;
                if brk {
                    let mut acts = Vec::new();
                    p.on_link_break(&mut Ctx::new(t(now), n(0), &mut acts), n(from));
                } else {
                    let m = if seq % 2 == 1 { INFINITE_METRIC } else { metric };
                    apply(&mut p, now, &update(from, &[(dest + 1, m, seq)]), from);
                }
                for d in 1..8 {
                    if let Some((_, metric, s)) = p.entry(n(d)) {
                        let prev = last.insert(n(d), s).unwrap_or(0);
                        proptest::prop_assert!(s >= prev);
                        proptest::prop_assert!(metric >= 1);
                        if metric == INFINITE_METRIC {
                            proptest::prop_assert!(s % 2 == 1);
                        }
                    }
                }
            }
        }
    }
}
