//! Optimized Link State Routing.
//!
//! Neighbour sensing runs on HELLO messages (never forwarded). Each node
//! picks multipoint relays covering its strict two-hop neighbourhood; nodes
//! selected as MPRs advertise their selector set in TC messages, which only
//! MPRs relay. TCs are periodic while a node has selectors, with an extra
//! immediate TC whenever the MPR neighbourhood changes. OLSR-M is the same
//! machine with shorter HELLO and TC intervals.

use std::any::Any;
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{shortest_paths, Adjacency, PathInfo};
use crate::medium::{LinkEvent, LinkKind};
use crate::protocol::{ControlMsg, Ctx, NodeId, Packet, Protocol, RouteEntry, Timer};
use crate::sim::SimTime;

const HEADER_BYTES: u32 = 12;
const ADDR_BYTES: u32 = 4;
/// TCs travel network-wide.
pub const TC_TTL: u32 = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OlsrVariant {
    Standard,
    M,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsrConfig {
    pub hello_interval: f64,
    pub tc_interval: f64,
    pub neighbor_hold: f64,
    pub topology_hold: f64,
    pub variant: OlsrVariant,
}

impl OlsrConfig {
    pub fn standard() -> Self {
        Self::with_intervals(2.0, 5.0, OlsrVariant::Standard)
    }

    /// Half the standard HELLO and TC intervals.
    pub fn variant_m() -> Self {
        Self::with_intervals(1.0, 2.5, OlsrVariant::M)
    }

    pub fn with_intervals(hello: f64, tc: f64, variant: OlsrVariant) -> Self {
        OlsrConfig {
            hello_interval: hello,
            tc_interval: tc,
            neighbor_hold: 3.0 * hello,
            topology_hold: 3.0 * tc,
            variant,
        }
    }
}

impl Default for OlsrConfig {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkStatus {
    Asymmetric,
    Symmetric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HelloMsg {
    pub sender: NodeId,
    pub links: Vec<(NodeId, LinkStatus)>,
    pub mprs: Vec<NodeId>,
}

impl HelloMsg {
    pub fn size(&self) -> u32 {
        HEADER_BYTES + ADDR_BYTES * self.links.len() as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TcMsg {
    pub origin: NodeId,
    /// Per-origin message sequence number, used for duplicate detection.
    pub msg_seq: u64,
    /// Advertised neighbour sequence number, bumps with the selector set.
    pub ansn: u64,
    pub selectors: Vec<NodeId>,
    /// Sent off-schedule because the MPR neighbourhood changed.
    pub triggered: bool,
}

impl TcMsg {
    pub fn size(&self) -> u32 {
        HEADER_BYTES + ADDR_BYTES * self.selectors.len() as u32
    }
}

/// Greedy MPR selection.
///
/// `neighbors` maps each symmetric neighbour of `me` to that neighbour's own
/// symmetric neighbours. Neighbours that are the only route to some two-hop
/// node are taken first; then the neighbour covering most uncovered two-hop
/// nodes is added until all are covered (ties: higher degree, then lower id).
pub fn select_mprs(me: NodeId, neighbors: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    // Two-hop node -> (number of neighbours reaching it, last such neighbour).
    let mut reach: BTreeMap<NodeId, (usize, NodeId)> = BTreeMap::new();
    for (&n, s) in neighbors {
        for &y in s {
            if y != me && !neighbors.contains_key(&y) {
                let r = reach.entry(y).or_insert((0, n));
                r.0 += 1;
                r.1 = n;
            }
        }
    }
    let two_hop: BTreeSet<NodeId> = reach.keys().copied().collect();
    let mut mprs: BTreeSet<NodeId> = reach
        .values()
        .filter(|&&(count, _)| count == 1)
        .map(|&(_, n)| n)
        .collect();
    let mut uncovered: BTreeSet<NodeId> = two_hop
        .iter()
        .filter(|y| !mprs.iter().any(|m| neighbors[m].contains(y)))
        .copied()
        .collect();
    while !uncovered.is_empty() {
        let best = neighbors
            .iter()
            .filter(|(n, _)| !mprs.contains(*n))
            .map(|(&n, s)| {
                let gain = s.intersection(&uncovered).count();
                let degree = s.iter().filter(|&&x| x != me).count();
                (gain, degree, std::cmp::Reverse(n))
            })
            .max()
            .expect("uncovered two-hop node with no candidate relay");
        let pick = best.2 .0;
        mprs.insert(pick);
        for y in &neighbors[&pick] {
            uncovered.remove(y);
        }
    }
    debug_assert!(covers(me, neighbors, &mprs));
    mprs
}

/// Two-hop nodes that are neither `me` nor a one-hop neighbour.
pub fn strict_two_hop(me: NodeId, neighbors: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    neighbors
        .values()
        .flatten()
        .filter(|&&y| y != me && !neighbors.contains_key(&y))
        .copied()
        .collect()
}

/// Whether every strict two-hop node is adjacent to some member of `mprs`.
pub fn covers(
    me: NodeId,
    neighbors: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    mprs: &BTreeSet<NodeId>,
) -> bool {
    strict_two_hop(me, neighbors)
        .iter()
        .all(|y| mprs.iter().any(|m| neighbors.get(m).is_some_and(|s| s.contains(y))))
}

/// MPR sets every node of `adj` would choose with exact one- and two-hop knowledge.
pub fn mpr_sets(adj: &Adjacency) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    adj.iter()
        .map(|(&me, nbrs)| {
            let view: BTreeMap<NodeId, BTreeSet<NodeId>> =
                nbrs.iter().map(|&nb| (nb, adj[&nb].clone())).collect();
            (me, select_mprs(me, &view))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FloodStats {
    pub transmissions: usize,
    pub reached: BTreeSet<NodeId>,
}

/// Synchronous-round flood from `origin`. A node retransmits at most once,
/// when `relays(receiver, sender)` holds for some copy it hears.
fn flood(adj: &Adjacency, origin: NodeId, relays: impl Fn(NodeId, NodeId) -> bool) -> FloodStats {
    let mut reached = BTreeSet::from([origin]);
    let mut transmitted = BTreeSet::from([origin]);
    let mut senders = vec![origin];
    let mut transmissions = 1;
    while !senders.is_empty() {
        let mut next = BTreeSet::new();
        for &s in &senders {
            for &r in &adj[&s] {
                reached.insert(r);
                if !transmitted.contains(&r) && relays(r, s) {
                    next.insert(r);
                }
            }
        }
        transmissions += next.len();
        transmitted.extend(next.iter().copied());
        senders = next.into_iter().collect();
    }
    FloodStats {
        transmissions,
        reached,
    }
}

/// Every node relays the first copy it hears.
pub fn full_flood(adj: &Adjacency, origin: NodeId) -> FloodStats {
    flood(adj, origin, |_, _| true)
}

/// A node relays only copies heard from a node that selected it as MPR.
pub fn mpr_flood(adj: &Adjacency, mprs: &BTreeMap<NodeId, BTreeSet<NodeId>>, origin: NodeId) -> FloodStats {
    flood(adj, origin, |receiver, sender| mprs[&sender].contains(&receiver))
}

#[derive(Clone, Debug, PartialEq)]
struct Link {
    last_heard: SimTime,
    symmetric: bool,
    /// The neighbour's symmetric neighbours, excluding us.
    two_hop: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
struct TopologyEntry {
    ansn: u64,
    selectors: BTreeSet<NodeId>,
    expires: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct DupEntry {
    msg_seq: u64,
    retransmitted: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OlsrStats {
    pub hellos: u64,
    pub tc_periodic: u64,
    pub tc_triggered: u64,
    pub tc_forwarded: u64,
    pub mpr_recomputations: u64,
}

#[derive(Debug)]
pub struct Olsr {
    id: NodeId,
    cfg: OlsrConfig,
    phases: [f64; 2],
    links: BTreeMap<NodeId, Link>,
    mpr_set: BTreeSet<NodeId>,
    selectors: BTreeSet<NodeId>,
    ansn: u64,
    topology: BTreeMap<NodeId, TopologyEntry>,
    dup: BTreeMap<NodeId, DupEntry>,
    msg_seq: u64,
    routes: RefCell<Option<BTreeMap<NodeId, PathInfo>>>,
    stats: OlsrStats,
}

impl Olsr {
    pub fn new(id: NodeId, cfg: OlsrConfig, phases: [f64; 2]) -> Self {
        assert!(
            cfg.hello_interval < cfg.neighbor_hold,
            "hello interval must be below neighbour hold: {cfg:?}"
        );
        Olsr {
            id,
            cfg,
            phases,
            links: BTreeMap::new(),
            mpr_set: BTreeSet::new(),
            selectors: BTreeSet::new(),
            ansn: 0,
            topology: BTreeMap::new(),
            dup: BTreeMap::new(),
            msg_seq: 0,
            routes: RefCell::new(None),
            stats: OlsrStats::default(),
        }
    }

    pub fn config(&self) -> &OlsrConfig {
        &self.cfg
    }

    pub fn mpr_set(&self) -> &BTreeSet<NodeId> {
        &self.mpr_set
    }

    pub fn selectors(&self) -> &BTreeSet<NodeId> {
        &self.selectors
    }

    pub fn ansn(&self) -> u64 {
        self.ansn
    }

    pub fn stats(&self) -> OlsrStats {
        self.stats
    }

    pub fn symmetric_neighbors(&self) -> BTreeSet<NodeId> {
        self.links
            .iter()
            .filter(|(_, l)| l.symmetric)
            .map(|(&n, _)| n)
            .collect()
    }

    fn neighborhood(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        self.links
            .iter()
            .filter(|(_, l)| l.symmetric)
            .map(|(&n, l)| (n, l.two_hop.clone()))
            .collect()
    }

    /// Re-derives MPRs and routes after a neighbourhood mutation and fires a
    /// triggered TC if the MPR neighbourhood became unstable.
    fn neighborhood_changed(&mut self, ctx: &mut Ctx, old_selectors: &BTreeSet<NodeId>) {
        self.state_changed(ctx, old_selectors, true);
    }

    /// `links_changed` is false when only the selector set moved, which
    /// leaves MPRs and routes as they are.
    fn state_changed(&mut self, ctx: &mut Ctx, old_selectors: &BTreeSet<NodeId>, links_changed: bool) {
        let mut mprs_changed = false;
        if links_changed {
            let mprs = select_mprs(self.id, &self.neighborhood());
            self.stats.mpr_recomputations += 1;
            mprs_changed = mprs != self.mpr_set;
            self.mpr_set = mprs;
            self.invalidate_routes();
        }
        let selectors_changed = *old_selectors != self.selectors;
        if selectors_changed {
            self.ansn += 1;
        }
        if selectors_changed || (mprs_changed && !self.selectors.is_empty()) {
            self.emit_tc(ctx, true);
        }
    }

    fn expire(&mut self, now: SimTime) -> bool {
        let hold = self.cfg.neighbor_hold;
        let before = self.links.len();
        self.links.retain(|_, l| now - l.last_heard <= hold);
        let links_gone = self.links.len() != before;
        if links_gone {
            let links = &self.links;
            self.selectors.retain(|s| links.get(s).is_some_and(|l| l.symmetric));
        }
        let before = self.topology.len();
        self.topology.retain(|_, e| e.expires >= now);
        let topo_gone = self.topology.len() != before;
        if topo_gone && !links_gone {
            self.invalidate_routes();
        }
        links_gone
    }

    fn housekeeping(&mut self, ctx: &mut Ctx) {
        let old = self.selectors.clone();
        if self.expire(ctx.now) {
            self.neighborhood_changed(ctx, &old);
        }
    }

    pub fn hello_message(&self) -> HelloMsg {
        HelloMsg {
            sender: self.id,
            links: self
                .links
                .iter()
                .map(|(&n, l)| {
                    let status = if l.symmetric {
                        LinkStatus::Symmetric
                    } else {
                        LinkStatus::Asymmetric
                    };
                    (n, status)
                })
                .collect(),
            mprs: self.mpr_set.iter().copied().collect(),
        }
    }

    fn hello_tick(&mut self, ctx: &mut Ctx) {
        self.housekeeping(ctx);
        self.stats.hellos += 1;
        ctx.broadcast(ControlMsg::Hello(self.hello_message()), 1);
        ctx.set_timer_in(self.cfg.hello_interval, Timer::OlsrHello);
    }

    pub fn process_hello(&mut self, ctx: &mut Ctx, hello: &HelloMsg) {
        let me = self.id;
        let from = hello.sender;
        let listed = hello.links.iter().any(|&(n, _)| n == me);
        let two_hop: BTreeSet<NodeId> = if listed {
            hello
                .links
                .iter()
                .filter(|&&(n, s)| s == LinkStatus::Symmetric && n != me)
                .map(|&(n, _)| n)
                .collect()
        } else {
            BTreeSet::new()
        };
        let link = self.links.entry(from).or_insert(Link {
            last_heard: ctx.now,
            symmetric: false,
            two_hop: BTreeSet::new(),
        });
        link.last_heard = ctx.now;
        let changed = link.symmetric != listed || link.two_hop != two_hop;
        link.symmetric = listed;
        link.two_hop = two_hop;

        let old = self.selectors.clone();
        if listed && hello.mprs.contains(&me) {
            self.selectors.insert(from);
        } else {
            self.selectors.remove(&from);
        }
        if changed || old != self.selectors {
            self.state_changed(ctx, &old, changed);
        }
    }

    fn tc_tick(&mut self, ctx: &mut Ctx) {
        self.housekeeping(ctx);
        if !self.selectors.is_empty() {
            self.emit_tc(ctx, false);
        }
        ctx.set_timer_in(self.cfg.tc_interval, Timer::OlsrTc);
    }

    fn emit_tc(&mut self, ctx: &mut Ctx, triggered: bool) {
        self.msg_seq += 1;
        let msg = TcMsg {
            origin: self.id,
            msg_seq: self.msg_seq,
            ansn: self.ansn,
            selectors: self.selectors.iter().copied().collect(),
            triggered,
        };
        ctx.broadcast(ControlMsg::Tc(msg), TC_TTL);
        if triggered {
            self.stats.tc_triggered += 1;
        } else {
            self.stats.tc_periodic += 1;
        }
    }

    pub fn process_tc(&mut self, ctx: &mut Ctx, pkt: &Packet, tc: &TcMsg, sender: NodeId) {
        if tc.origin == self.id {
            return;
        }
        if !self.links.get(&sender).is_some_and(|l| l.symmetric) {
            return;
        }
        let entry = self.dup.get(&tc.origin).copied();
        if entry.is_some_and(|d| tc.msg_seq < d.msg_seq) {
            return;
        }
        let mut dup = match entry {
            Some(d) if d.msg_seq == tc.msg_seq => d,
            _ => {
                self.apply_tc(ctx.now, tc);
                DupEntry {
                    msg_seq: tc.msg_seq,
                    retransmitted: false,
                }
            }
        };
        if !dup.retransmitted && self.selectors.contains(&sender) && pkt.ttl > 1 {
            dup.retransmitted = true;
            self.stats.tc_forwarded += 1;
            ctx.broadcast(ControlMsg::Tc(tc.clone()), pkt.ttl - 1);
        }
        self.dup.insert(tc.origin, dup);
    }

    fn apply_tc(&mut self, now: SimTime, tc: &TcMsg) {
        let expires = now + self.cfg.topology_hold;
        let selectors: BTreeSet<NodeId> = tc.selectors.iter().copied().collect();
        let changed = match self.topology.get_mut(&tc.origin) {
            Some(e) if tc.ansn < e.ansn => false,
            Some(e) => {
                e.expires = expires;
                e.ansn = tc.ansn;
                let changed = e.selectors != selectors;
                e.selectors = selectors;
                changed
            }
            None => {
                let nonempty = !selectors.is_empty();
                self.topology.insert(
                    tc.origin,
                    TopologyEntry {
                        ansn: tc.ansn,
                        selectors,
                        expires,
                    },
                );
                nonempty
            }
        };
        if changed {
            self.invalidate_routes();
        }
    }

    /// Known links: own symmetric neighbours, their HELLO-advertised
    /// neighbours, and every unexpired TC.
    pub fn topology_graph(&self) -> Adjacency {
        let mut adj = Adjacency::new();
        let mut link = |a: NodeId, b: NodeId| {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        };
        for (&nb, l) in self.links.iter().filter(|(_, l)| l.symmetric) {
            for &y in &l.two_hop {
                link(nb, y);
            }
        }
        for (&origin, e) in &self.topology {
            for &s in &e.selectors {
                link(origin, s);
            }
        }
        // Our own first hop is exactly the symmetric neighbour set.
        adj.insert(self.id, self.symmetric_neighbors());
        adj
    }

    fn invalidate_routes(&mut self) {
        *self.routes.get_mut() = None;
    }

    /// Shortest paths over the known topology, recomputed on first use after
    /// any change.
    fn with_routes<R>(&self, f: impl FnOnce(&BTreeMap<NodeId, PathInfo>) -> R) -> R {
        let mut cache = self.routes.borrow_mut();
        let routes = cache.get_or_insert_with(|| shortest_paths(&self.topology_graph(), self.id));
        f(routes)
    }

    fn drop_neighbor(&mut self, ctx: &mut Ctx, nb: NodeId) {
        if self.links.remove(&nb).is_none() {
            return;
        }
        let old = self.selectors.clone();
        self.selectors.remove(&nb);
        self.neighborhood_changed(ctx, &old);
    }
}

impl Protocol for Olsr {
    fn name(&self) -> &'static str {
        match self.cfg.variant {
            OlsrVariant::Standard => "olsr",
            OlsrVariant::M => "olsr_m",
        }
    }

    fn uses_lsm(&self) -> bool {
        false
    }

    fn on_start(&mut self, ctx: &mut Ctx) {
        ctx.set_timer_in(self.phases[0] * self.cfg.hello_interval, Timer::OlsrHello);
        ctx.set_timer_in(self.phases[1] * self.cfg.tc_interval, Timer::OlsrTc);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::OlsrHello => self.hello_tick(ctx),
            Timer::OlsrTc => self.tc_tick(ctx),
            other => unreachable!("olsr received foreign timer {other:?}"),
        }
    }

    fn on_control(&mut self, ctx: &mut Ctx, pkt: &Packet, msg: &ControlMsg, from: NodeId) {
        match msg {
            ControlMsg::Hello(h) => self.process_hello(ctx, h),
            ControlMsg::Tc(tc) => self.process_tc(ctx, pkt, tc, from),
            _ => {}
        }
    }

    /// Failed unicasts expire the neighbour at once.
    fn on_link_event(&mut self, ctx: &mut Ctx, ev: LinkEvent) {
        if ev.kind == LinkKind::Down {
            self.drop_neighbor(ctx, ev.neighbor);
        }
    }

    fn route_lookup(&self, dest: NodeId) -> Option<RouteEntry> {
        if dest == self.id {
            return Some(RouteEntry::self_route(self.id));
        }
        let p = self.with_routes(|r| r.get(&dest).copied())?;
        Some(RouteEntry {
            dest,
            next_hop: p.next_hop,
            metric: p.hops,
            seq_num: None,
            installed_at: SimTime::ZERO,
            advertised: true,
        })
    }

    fn routing_table(&self) -> Vec<RouteEntry> {
        std::iter::once(self.id)
            .chain(self.with_routes(|r| r.keys().copied().collect::<Vec<_>>()))
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
    use crate::protocol::{Action, Body, Dest};

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn adjacency(edges: &[(u32, u32)]) -> Adjacency {
        let mut adj = Adjacency::new();
        for &(a, b) in edges {
            adj.entry(n(a)).or_default().insert(n(b));
            adj.entry(n(b)).or_default().insert(n(a));
        }
        adj
    }

    fn view(adj: &Adjacency, me: u32) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        adj[&n(me)]
            .iter()
            .map(|&nb| (nb, adj[&nb].clone()))
            .collect()
    }

    #[test]
    fn forced_cover_on_path() {
        let adj = adjacency(&[(0, 1), (1, 2)]);
        assert_eq!(select_mprs(n(0), &view(&adj, 0)), BTreeSet::from([n(1)]));
    }

    #[test]
    fn star_center_needs_no_mprs() {
        let adj = adjacency(&[(0, 1), (0, 2), (0, 3)]);
        assert!(select_mprs(n(0), &view(&adj, 0)).is_empty());
    }

    #[test]
    fn five_cycle() {
        let adj = adjacency(&[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(
            select_mprs(n(0), &view(&adj, 0)),
            BTreeSet::from([n(1), n(4)])
        );
    }

    #[test]
    fn greedy_prefers_wider_cover() {
        // 1 covers {10, 11, 12}; 2 covers {10}; 3 covers {11, 12}; nothing is forced.
        let adj = adjacency(&[
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 10),
            (1, 11),
            (1, 12),
            (2, 10),
            (3, 11),
            (3, 12),
        ]);
        assert_eq!(select_mprs(n(0), &view(&adj, 0)), BTreeSet::from([n(1)]));
    }

    fn hello(sender: u32, links: &[(u32, LinkStatus)], mprs: &[u32]) -> HelloMsg {
        HelloMsg {
            sender: n(sender),
            links: links.iter().map(|&(x, s)| (n(x), s)).collect(),
            mprs: mprs.iter().map(|&x| n(x)).collect(),
        }
    }

    #[test]
    fn symmetric_on_second_exchange() {
        let mut a = Olsr::new(n(0), OlsrConfig::standard(), [0.0, 0.0]);
        let mut acts = Vec::new();
        a.process_hello(&mut Ctx::new(t(0.1), n(0), &mut acts), &hello(1, &[], &[]));
        assert!(a.symmetric_neighbors().is_empty());
        let h = a.hello_message();
        assert_eq!(h.links, vec![(n(1), LinkStatus::Asymmetric)]);
        a.process_hello(
            &mut Ctx::new(t(2.1), n(0), &mut acts),
            &hello(1, &[(0, LinkStatus::Asymmetric)], &[]),
        );
        assert_eq!(a.symmetric_neighbors(), BTreeSet::from([n(1)]));
        assert_eq!(a.route_lookup(n(1)).unwrap().metric, 1);
    }

    #[test]
    fn isolated_hello_is_empty() {
        let a = Olsr::new(n(0), OlsrConfig::standard(), [0.0, 0.0]);
        let h = a.hello_message();
        assert!(h.links.is_empty());
        assert_eq!(h.size(), 12);
    }

    #[test]
    fn selector_change_bumps_ansn_and_triggers_tc() {
        let mut a = Olsr::new(n(0), OlsrConfig::standard(), [0.0, 0.0]);
        let mut acts = Vec::new();
        let sym = LinkStatus::Symmetric;
        a.process_hello(&mut Ctx::new(t(1.0), n(0), &mut acts), &hello(1, &[(0, sym)], &[0]));
        assert_eq!(a.selectors(), &BTreeSet::from([n(1)]));
        assert_eq!(a.ansn(), 1);
        let tcs: Vec<_> = acts
            .iter()
            .filter(|a| matches!(a, Action::Broadcast { msg: ControlMsg::Tc(_), .. }))
            .collect();
        assert_eq!(tcs.len(), 1);
        assert_eq!(a.stats().tc_triggered, 1);

        // Same HELLO again: nothing changes, no TC, no ansn bump.
        let mut acts = Vec::new();
        a.process_hello(&mut Ctx::new(t(3.0), n(0), &mut acts), &hello(1, &[(0, sym)], &[0]));
        assert_eq!(a.ansn(), 1);
        assert!(acts.is_empty());
    }

    #[test]
    fn periodic_tc_only_with_selectors() {
        let mut a = Olsr::new(n(0), OlsrConfig::standard(), [0.0, 0.0]);
        let mut acts = Vec::new();
        a.on_timer(&mut Ctx::new(t(5.0), n(0), &mut acts), Timer::OlsrTc);
        assert_eq!(acts, vec![Action::SetTimer { at: t(10.0), timer: Timer::OlsrTc }]);
    }

    fn tc_packet(origin: u32, sender: u32, msg_seq: u64, selectors: &[u32]) -> (Packet, TcMsg) {
        let tc = TcMsg {
            origin: n(origin),
            msg_seq,
            ansn: 1,
            selectors: selectors.iter().map(|&x| n(x)).collect(),
            triggered: false,
        };
        let pkt = Packet {
            src: n(sender),
            origin: n(origin),
            dst: Dest::Broadcast,
            ttl: TC_TTL,
            size: tc.size(),
            created_at: t(0.0),
            body: Body::Control(ControlMsg::Tc(tc.clone())),
        };
        (pkt, tc)
    }

    fn with_neighbors(selects_me: &[u32], plain: &[u32]) -> Olsr {
        let mut a = Olsr::new(n(0), OlsrConfig::standard(), [0.0, 0.0]);
        let sym = LinkStatus::Symmetric;
        let mut acts = Vec::new();
        for &s in selects_me {
            a.process_hello(&mut Ctx::new(t(1.0), n(0), &mut acts), &hello(s, &[(0, sym)], &[0]));
        }
        for &s in plain {
            a.process_hello(&mut Ctx::new(t(1.0), n(0), &mut acts), &hello(s, &[(0, sym)], &[]));
        }
        a
    }

    fn forwards(acts: &[Action]) -> usize {
        acts.iter()
            .filter(|a| matches!(a, Action::Broadcast { msg: ControlMsg::Tc(tc), .. } if tc.origin != n(0)))
            .count()
    }

    #[test]
    fn only_mprs_forward_tc() {
        let mut a = with_neighbors(&[1], &[2]);
        let (pkt, tc) = tc_packet(7, 2, 1, &[2]);
        let mut acts = Vec::new();
        a.process_tc(&mut Ctx::new(t(2.0), n(0), &mut acts), &pkt, &tc, n(2));
        assert_eq!(forwards(&acts), 0, "non-selector sender must not be relayed");
        assert!(a.route_lookup(n(7)).is_some(), "content still stored");

        // The same message later heard from a selector is relayed once.
        let (pkt, tc) = tc_packet(7, 1, 1, &[2]);
        let mut acts = Vec::new();
        a.process_tc(&mut Ctx::new(t(2.1), n(0), &mut acts), &pkt, &tc, n(1));
        assert_eq!(forwards(&acts), 1);
        let mut acts = Vec::new();
        a.process_tc(&mut Ctx::new(t(2.2), n(0), &mut acts), &pkt, &tc, n(1));
        assert_eq!(forwards(&acts), 0);
    }

    #[test]
    fn expired_topology_removes_route() {
        let mut a = with_neighbors(&[], &[2]);
        let (pkt, tc) = tc_packet(7, 2, 1, &[2]);
        let mut acts = Vec::new();
        a.process_tc(&mut Ctx::new(t(2.0), n(0), &mut acts), &pkt, &tc, n(2));
        assert_eq!(a.route_lookup(n(7)).unwrap().metric, 2);
        // Keep the neighbour alive, but let the TC lapse.
        let sym = LinkStatus::Symmetric;
        for k in 1..10 {
            let now = 2.0 + 2.0 * k as f64;
            a.process_hello(&mut Ctx::new(t(now), n(0), &mut acts), &hello(2, &[(0, sym)], &[]));
            a.on_timer(&mut Ctx::new(t(now), n(0), &mut acts), Timer::OlsrHello);
        }
        assert!(a.route_lookup(n(7)).is_none());
        assert!(a.route_lookup(n(2)).is_some());
    }

    #[test]
    fn equal_paths_choose_smallest_next_hop() {
        let mut a = with_neighbors(&[], &[]);
        let sym = LinkStatus::Symmetric;
        let mut acts = Vec::new();
        for s in [5, 3] {
            a.process_hello(
                &mut Ctx::new(t(1.0), n(0), &mut acts),
                &hello(s, &[(0, sym), (9, sym)], &[]),
            );
        }
        assert_eq!(a.route_lookup(n(9)).unwrap().next_hop, n(3));
    }

    #[test]
    fn flood_counts_on_line() {
        let adj = adjacency(&[(0, 1), (1, 2), (2, 3)]);
        let mprs = mpr_sets(&adj);
        let full = full_flood(&adj, n(0));
        let mpr = mpr_flood(&adj, &mprs, n(0));
        assert_eq!(full.transmissions, 4);
        // Node 3 has no one to relay to.
        assert_eq!(mpr.transmissions, 3);
        assert_eq!(mpr.reached, full.reached);
    }

    fn arb_graph() -> impl proptest::strategy::Strategy<Value = Adjacency> {
        use proptest::prelude::*;
        (2u32..12).prop_flat_map(|nodes| {
            proptest::collection::vec(proptest::bool::weighted(0.3), (nodes * (nodes - 1) / 2) as usize)
                .prop_map(move |bits| {
                    let mut adj: Adjacency = (0..nodes).map(|i| (n(i), BTreeSet::new())).collect();
                    let mut k = 0;
                    for a in 0..nodes {
                        for b in (a + 1)..nodes {
                            if bits[k] {
                                adj.get_mut(&n(a)).unwrap().insert(n(b));
                                adj.get_mut(&n(b)).unwrap().insert(n(a));
                            }
                            k += 1;
                        }
                    }
                    adj
                })
        })
    }

    proptest::proptest! {
        #[test]
        fn mpr_cover_and_flood_reach(adj in arb_graph()) {
            let mprs = mpr_sets(&adj);
            for (&me, set) in &mprs {
                proptest::prop_assert!(covers(me, &view(&adj, me.0), set));
                proptest::prop_assert!(set.is_subset(&adj[&me]));
            }
            for &origin in adj.keys() {
                let full = full_flood(&adj, origin);
                let mpr = mpr_flood(&adj, &mprs, origin);
                proptest::prop_assert_eq!(&mpr.reached, &full.reached);
                proptest::prop_assert!(mpr.transmissions <= full.transmissions);
            }
        }
    }
}
