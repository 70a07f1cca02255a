//! One simulated network: the event loop tying nodes, protocols, the
//! medium, mobility and traffic together.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::analytic::{reconcile, AnalyticInputs, Reconciliation};
use crate::dsdv::{Dsdv, DsdvConfig};
use crate::error::{ConfigError, SimError};
use crate::fsr::{Fsr, FsrConfig};
use crate::graph::{hop_distances, unit_disk_graph};
use crate::medium::{LinkEvent, Medium, RadioParams, UnicastOutcome};
use crate::metrics::{DropReason, MetricsCollector, MetricsRecord, VariantCounts};
use crate::mobility::{MobilityState, Position};
use crate::olsr::{Olsr, OlsrConfig};
use crate::protocol::{
    Action, Body, ControlMsg, ControlVariant, Ctx, Dest, NodeId, Packet, Protocol, ProtocolKind,
    Timer,
};
use crate::sim::{RandomSource, Scheduler, SimTime, Stream};
use crate::traffic::{Flow, FlowConfig};

pub const DEFAULT_LSM_INTERVAL: f64 = 0.5;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProtocolParams {
    pub dsdv: DsdvConfig,
    pub fsr: FsrConfig,
    pub olsr: OlsrConfig,
    pub olsr_m: OlsrConfig,
}

impl ProtocolParams {
    pub fn standard() -> Self {
        ProtocolParams {
            dsdv: DsdvConfig::default(),
            fsr: FsrConfig::default(),
            olsr: OlsrConfig::standard(),
            olsr_m: OlsrConfig::variant_m(),
        }
    }
}

/// Fully resolved input of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSetup {
    pub protocol: ProtocolKind,
    pub params: ProtocolParams,
    pub radio: RadioParams,
    pub field_side: f64,
    pub speed: f64,
    pub pause: f64,
    pub duration: f64,
    pub lsm_interval: f64,
    pub seed: u64,
    pub positions: Vec<Position>,
    pub flows: Vec<FlowConfig>,
    /// Record every control transmission.
    pub trace: bool,
}

impl SimSetup {
    /// Nodes that never move: the initial pause covers the whole run.
    pub fn static_network(protocol: ProtocolKind, positions: Vec<Position>, duration: f64) -> Self {
        SimSetup {
            protocol,
            params: ProtocolParams::standard(),
            radio: RadioParams::default(),
            field_side: 1000.0,
            speed: 1.0,
            pause: duration,
            duration,
            lsm_interval: DEFAULT_LSM_INTERVAL,
            seed: 1,
            positions,
            flows: Vec::new(),
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be positive, got {v}")))
            }
        };
        if self.positions.is_empty() {
            return Err(ConfigError::invalid("n", "need at least one node"));
        }
        positive("duration", self.duration)?;
        positive("field_side", self.field_side)?;
        positive("speed", self.speed)?;
        positive("range", self.radio.range)?;
        positive("bandwidth", self.radio.bandwidth)?;
        positive("lsm_interval", self.lsm_interval)?;
        if !(self.radio.jitter_max >= 0.0) {
            return Err(ConfigError::invalid("jitter_max", "must be non-negative"));
        }
        if !(0.0..=self.duration).contains(&self.pause) {
            return Err(ConfigError::invalid(
                "pause",
                format!("{} outside [0, duration = {}]", self.pause, self.duration),
            ));
        }
        let side = self.field_side;
        if let Some(p) = self
            .positions
            .iter()
            .find(|p| !(0.0..=side).contains(&p.x) || !(0.0..=side).contains(&p.y))
        {
            return Err(ConfigError::invalid("positions", format!("{p:?} outside the field")));
        }
        for f in &self.flows {
            f.validate(self.duration)?;
            if f.src.index() >= self.positions.len() || f.dst.index() >= self.positions.len() {
                return Err(ConfigError::invalid("flow", "endpoint outside the network"));
            }
        }
        Ok(())
    }
}

/// What made a node transmit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cause {
    Start,
    Timer(Timer),
    Control,
    Link,
    Data,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub node: NodeId,
    pub variant: ControlVariant,
    pub size: u32,
    pub cause: Cause,
}

#[derive(Clone, Debug)]
enum Payload {
    Timer { node: NodeId, timer: Timer },
    Deliver { to: NodeId, pkt: Arc<Packet> },
    Mobility { node: NodeId },
    Lsm,
    Flow { flow: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub metrics: MetricsRecord,
    pub per_node: Vec<VariantCounts>,
    pub analytic: AnalyticInputs,
    pub reconciliation: Reconciliation,
    pub dispatched: u64,
}

pub struct Simulation {
    setup: SimSetup,
    sched: Scheduler<Payload>,
    medium: Medium,
    mobility: Vec<MobilityState>,
    mobility_rng: RandomSource,
    positions: Vec<Position>,
    positions_at: SimTime,
    positions_stale: bool,
    protocols: Vec<Box<dyn Protocol>>,
    phases: Vec<[f64; 2]>,
    flows: Vec<Flow>,
    metrics: MetricsCollector,
    trace: Option<Vec<TraceRecord>>,
}

fn build_protocol(kind: ProtocolKind, params: &ProtocolParams, id: NodeId, phases: [f64; 2]) -> Box<dyn Protocol> {
    match kind {
        ProtocolKind::Dsdv => Box::new(Dsdv::new(id, params.dsdv.clone()).with_phase(phases[0])),
        ProtocolKind::Fsr => Box::new(Fsr::new(id, params.fsr.clone(), phases)),
        ProtocolKind::Olsr => Box::new(Olsr::new(id, params.olsr.clone(), phases)),
        ProtocolKind::OlsrM => Box::new(Olsr::new(id, params.olsr_m.clone(), phases)),
    }
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Result<Self, ConfigError> {
        setup.validate()?;
        let n = setup.positions.len();
        let mut phase_rng = RandomSource::stream(setup.seed, Stream::TimerPhase);
        let phases: Vec<[f64; 2]> = (0..n)
            .map(|_| [phase_rng.uniform(0.0, 1.0), phase_rng.uniform(0.0, 1.0)])
            .collect();
        let protocols: Vec<Box<dyn Protocol>> = (0..n)
            .map(|i| build_protocol(setup.protocol, &setup.params, NodeId::from(i), phases[i]))
            .collect();
        let lsm = protocols[0].uses_lsm();
        let medium = Medium::new(
            setup.radio,
            n,
            lsm,
            RandomSource::stream(setup.seed, Stream::Jitter),
        );
        let mobility = setup
            .positions
            .iter()
            .map(|&p| MobilityState::new(p, setup.speed, setup.pause))
            .collect();
        let flows = setup
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| Flow::new(i as u32, f.clone()))
            .collect();
        let mut sim = Simulation {
            sched: Scheduler::new(),
            medium,
            mobility,
            mobility_rng: RandomSource::stream(setup.seed, Stream::Mobility),
            positions: setup.positions.clone(),
            positions_at: SimTime::ZERO,
            positions_stale: false,
            protocols,
            phases,
            flows,
            metrics: MetricsCollector::new(n, setup.duration),
            trace: setup.trace.then(Vec::new),
            setup,
        };
        sim.start();
        Ok(sim)
    }

    fn start(&mut self) {
        let end = SimTime::from_secs(self.setup.duration);
        if self.protocols[0].uses_lsm() {
            self.sched.schedule(SimTime::ZERO, Payload::Lsm);
        }
        for i in 0..self.mobility.len() {
            if let Some(t) = self.mobility[i].next_transition().filter(|&t| t < end) {
                self.sched.schedule(t, Payload::Mobility { node: NodeId::from(i) });
            }
        }
        for (i, f) in self.flows.iter().enumerate() {
            if let Some(t) = f.first_tick() {
                self.sched.schedule(t, Payload::Flow { flow: i });
            }
        }
        for i in 0..self.protocols.len() {
            let node = NodeId::from(i);
            let mut actions = Vec::new();
            self.protocols[i].on_start(&mut Ctx::new(SimTime::ZERO, node, &mut actions));
            self.apply(node, actions, Cause::Start);
        }
    }

    pub fn setup(&self) -> &SimSetup {
        &self.setup
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn node_count(&self) -> usize {
        self.protocols.len()
    }

    pub fn protocol(&self, node: NodeId) -> &dyn Protocol {
        self.protocols[node.index()].as_ref()
    }

    /// Timer phase fractions drawn for `node`.
    pub fn timer_phases(&self, node: NodeId) -> [f64; 2] {
        self.phases[node.index()]
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn metrics(&self) -> &MetricsCollector {
        &self.metrics
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn positions(&mut self) -> &[Position] {
        self.refresh_positions();
        &self.positions
    }

    /// Moves `node` to `pos` now and keeps it there.
    pub fn park(&mut self, node: NodeId, pos: Position) {
        self.refresh_positions();
        self.mobility[node.index()].park(pos);
        self.positions[node.index()] = pos;
    }

    fn refresh_positions(&mut self) {
        let now = self.sched.now();
        if now == self.positions_at && !self.positions_stale {
            return;
        }
        for (p, m) in self.positions.iter_mut().zip(&self.mobility) {
            *p = m.position_at(now);
        }
        self.positions_at = now;
        self.positions_stale = false;
    }

    pub fn run_until(&mut self, t: f64) {
        let t = SimTime::from_secs(t.min(self.setup.duration));
        while let Some(ev) = self.sched.pop_until(t) {
            self.dispatch(ev.payload);
        }
        self.sched.advance_to(t);
    }

    pub fn run(mut self) -> Result<RunOutput, SimError> {
        self.run_until(self.setup.duration);
        self.finish()
    }

    /// Data packets still travelling or buffered.
    pub fn in_flight(&self) -> u64 {
        let travelling = self
            .sched
            .pending_payloads()
            .filter(|p| matches!(p, Payload::Deliver { pkt, .. } if pkt.is_data()))
            .count();
        let held: usize = self.protocols.iter().map(|p| p.held_packets()).sum();
        (travelling + held) as u64
    }

    pub fn finish(mut self) -> Result<RunOutput, SimError> {
        let metrics = self.metrics.finalize(self.in_flight())?;
        let analytic = self.analytic_inputs();
        let per_node = self.metrics.per_node().to_vec();
        let reconciliation = reconcile(self.setup.protocol, &analytic, &per_node, metrics.ce_control_tx)
            .expect("analytic inputs derived from a validated setup");
        Ok(RunOutput {
            metrics,
            per_node,
            analytic,
            reconciliation,
            dispatched: self.sched.dispatched(),
        })
    }

    /// Model inputs measured from the final topology and protocol state.
    pub fn analytic_inputs(&mut self) -> AnalyticInputs {
        let n = self.node_count();
        let p = &self.setup.params;
        let olsr_cfg = match self.setup.protocol {
            ProtocolKind::OlsrM => &p.olsr_m,
            _ => &p.olsr,
        };
        let mut a = AnalyticInputs::new(n, self.setup.duration);
        a.tau_ru_per = p.dsdv.ru_per_interval;
        a.tau_ias = p.fsr.intra_interval;
        a.tau_ies = p.fsr.inter_interval;
        a.tau_hello = olsr_cfg.hello_interval;
        a.tau_tc = olsr_cfg.tc_interval;
        a.stable_rounds = (self.setup.duration / olsr_cfg.tc_interval).floor() as u64;

        let range = self.setup.radio.range;
        let intra = p.fsr.intra_ttl;
        let inter = p.fsr.inter_ttl;
        let adj = unit_disk_graph(self.positions(), range);
        for i in 0..n {
            let node = NodeId::from(i);
            a.nb[i] = adj[&node].len() as u64;
            let d = hop_distances(&adj, node);
            a.n_ias[i] = d.values().filter(|&&h| h >= 1 && h <= intra).count() as u64;
            a.n_ies[i] = d.values().filter(|&&h| h > intra && h <= inter).count() as u64;
        }

        let mut mprs = BTreeSet::new();
        for proto in &self.protocols {
            let any = proto.as_any();
            if let Some(d) = any.downcast_ref::<Dsdv>() {
                a.trigger_events += d.link_breaks();
            } else if let Some(o) = any.downcast_ref::<Olsr>() {
                mprs.extend(o.mpr_set().iter().copied());
                a.unstable_events += o.stats().tc_triggered;
            }
        }
        a.n_mprs = mprs.len() as u64;
        a
    }

    fn dispatch(&mut self, payload: Payload) {
        match payload {
            Payload::Timer { node, timer } => {
                let mut actions = Vec::new();
                let ctx = &mut Ctx::new(self.sched.now(), node, &mut actions);
                self.protocols[node.index()].on_timer(ctx, timer);
                self.apply(node, actions, Cause::Timer(timer));
            }
            Payload::Deliver { to, pkt } => self.receive(to, pkt),
            Payload::Mobility { node } => {
                let now = self.sched.now();
                let next = self.mobility[node.index()].advance(
                    now,
                    self.setup.field_side,
                    &mut self.mobility_rng,
                );
                self.positions_stale = true;
                if let Some(t) = next.filter(|&t| t < SimTime::from_secs(self.setup.duration)) {
                    self.sched.schedule(t, Payload::Mobility { node });
                }
            }
            Payload::Lsm => {
                let now = self.sched.now();
                self.refresh_positions();
                for i in 0..self.protocols.len() {
                    let node = NodeId::from(i);
                    let events = self.medium.lsm_tick(node, now, &self.positions);
                    for ev in events {
                        self.link_event(node, ev);
                    }
                }
                self.sched.schedule_in(self.setup.lsm_interval, Payload::Lsm);
            }
            Payload::Flow { flow } => {
                let now = self.sched.now();
                let (pkt, next) = self.flows[flow].tick(now);
                if let Some(t) = next {
                    self.sched.schedule(t, Payload::Flow { flow });
                }
                self.metrics.on_send(&pkt);
                let src = pkt.origin;
                self.forward_data(src, pkt, true);
            }
        }
    }

    fn link_event(&mut self, node: NodeId, ev: LinkEvent) {
        let mut actions = Vec::new();
        let ctx = &mut Ctx::new(self.sched.now(), node, &mut actions);
        self.protocols[node.index()].on_link_event(ctx, ev);
        self.apply(node, actions, Cause::Link);
    }

    fn receive(&mut self, to: NodeId, pkt: Arc<Packet>) {
        match &pkt.body {
            Body::Data { .. } => {
                let pkt = Arc::unwrap_or_clone(pkt);
                if pkt.dst_node() == Some(to) {
                    self.metrics.on_delivery(&pkt, self.sched.now());
                } else {
                    self.forward_data(to, pkt, true);
                }
            }
            Body::Control(msg) => {
                let mut actions = Vec::new();
                let ctx = &mut Ctx::new(self.sched.now(), to, &mut actions);
                self.protocols[to.index()].on_control(ctx, &pkt, msg, pkt.src);
                self.apply(to, actions, Cause::Control);
            }
        }
    }

    /// Routes one data packet out of `node`; every failure is an accounted drop.
    fn forward_data(&mut self, node: NodeId, pkt: Packet, intercept: bool) {
        let dst = pkt.dst_node().expect("data packets are unicast");
        if dst == node {
            self.metrics.on_delivery(&pkt, self.sched.now());
            return;
        }
        if pkt.ttl == 0 {
            self.metrics.on_drop(DropReason::Ttl);
            return;
        }
        let pkt = if intercept {
            let mut actions = Vec::new();
            let ctx = &mut Ctx::new(self.sched.now(), node, &mut actions);
            let passed = self.protocols[node.index()].intercept_data(ctx, pkt);
            self.apply(node, actions, Cause::Data);
            match passed {
                Some(p) => p,
                None => return,
            }
        } else {
            pkt
        };
        for _attempt in 0..2 {
            let Some(route) = self.protocols[node.index()].route_lookup(dst) else {
                break;
            };
            let mut out = pkt.clone();
            out.src = node;
            out.ttl -= 1;
            self.refresh_positions();
            let now = self.sched.now();
            let outcome = self
                .medium
                .unicast(node, route.next_hop, &out, now, &self.positions)
                .expect("protocol produced an invalid next hop");
            match outcome {
                UnicastOutcome::Delivered(d) => {
                    self.sched.schedule(
                        d.at,
                        Payload::Deliver {
                            to: d.to,
                            pkt: Arc::new(out),
                        },
                    );
                    return;
                }
                UnicastOutcome::LinkBreak(ev) => {
                    if let Some(ev) = ev {
                        self.link_event(node, ev);
                    }
                }
            }
        }
        self.metrics.on_drop(DropReason::NoRoute);
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>, cause: Cause) {
        for action in actions {
            match action {
                Action::Broadcast { msg, ttl } => self.transmit(node, msg, ttl, cause),
                Action::SetTimer { at, timer } => {
                    if at <= SimTime::from_secs(self.setup.duration) {
                        self.sched.schedule(at, Payload::Timer { node, timer });
                    }
                }
                Action::Release(pkt) => self.forward_data(node, pkt, false),
                Action::Drop(_, reason) => self.metrics.on_drop(reason),
            }
        }
    }

    fn transmit(&mut self, node: NodeId, msg: ControlMsg, ttl: u32, cause: Cause) {
        let origin = match &msg {
            ControlMsg::Tc(tc) => tc.origin,
            _ => node,
        };
        let now = self.sched.now();
        let pkt = Packet {
            src: node,
            origin,
            dst: Dest::Broadcast,
            ttl,
            size: msg.size(),
            created_at: now,
            body: Body::Control(msg),
        };
        self.metrics.on_control_tx(node, &pkt);
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord {
                at: now,
                node,
                variant: pkt.control().unwrap().variant(node),
                size: pkt.size,
                cause,
            });
        }
        self.refresh_positions();
        let deliveries = self.medium.broadcast(node, &pkt, now, &self.positions);
        let pkt = Arc::new(pkt);
        for d in deliveries {
            self.sched.schedule(
                d.at,
                Payload::Deliver {
                    to: d.to,
                    pkt: Arc::clone(&pkt),
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, spacing: f64) -> Vec<Position> {
        (0..n).map(|i| Position::new(10.0 + spacing * i as f64, 10.0)).collect()
    }

    fn flow(src: u32, dst: u32, start: f64, stop: f64) -> FlowConfig {
        FlowConfig {
            src: NodeId(src),
            dst: NodeId(dst),
            rate: 4.0,
            pkt_size: 512,
            start,
            stop,
        }
    }

    #[test]
    fn static_line_delivers_for_every_protocol() {
        for kind in ProtocolKind::ALL {
            let mut setup = SimSetup::static_network(kind, line(4, 200.0), 120.0);
            setup.flows = vec![flow(0, 3, 40.0, 100.0)];
            let out = Simulation::new(setup).unwrap().run().unwrap();
            let m = &out.metrics;
            assert_eq!(m.sent, 240, "{kind}");
            assert_eq!(m.delivered, 240, "{kind}: {m:?}");
            assert!(m.ct_mean.unwrap() > 3.0 * 512.0 * 8.0 / 2e6);
        }
    }

    #[test]
    fn disconnected_pair_drops_no_route() {
        let mut setup = SimSetup::static_network(ProtocolKind::Dsdv, vec![Position::new(0.0, 0.0), Position::new(900.0, 900.0)], 50.0);
        setup.flows = vec![flow(0, 1, 10.0, 20.0)];
        let out = Simulation::new(setup).unwrap().run().unwrap();
        assert_eq!(out.metrics.delivered, 0);
        assert_eq!(out.metrics.dropped_no_route, 40);
    }

    #[test]
    fn periodic_counts_static() {
        let mut setup = SimSetup::static_network(ProtocolKind::Dsdv, line(3, 200.0), 900.0);
        setup.radio.jitter_max = 0.0;
        let out = Simulation::new(setup).unwrap().run().unwrap();
        for c in &out.per_node {
            assert_eq!(c.get(ControlVariant::RuPer), 60);
            assert_eq!(c.get(ControlVariant::RuTri), 0);
        }
    }

    #[test]
    fn invalid_setup_rejected() {
        let mut setup = SimSetup::static_network(ProtocolKind::Fsr, line(2, 100.0), 100.0);
        setup.pause = 200.0;
        assert!(Simulation::new(setup).is_err());
        assert!(Simulation::new(SimSetup::static_network(ProtocolKind::Fsr, Vec::new(), 10.0)).is_err());
    }

    #[test]
    fn ttl_exhaustion_is_a_drop() {
        let mut setup = SimSetup::static_network(ProtocolKind::Olsr, line(3, 200.0), 60.0);
        setup.flows = vec![flow(0, 2, 30.0, 31.0)];
        let mut sim = Simulation::new(setup).unwrap();
        sim.run_until(30.5);
        let pkt = Packet::data(NodeId(0), NodeId(2), 9, 0, 512, 1, sim.now());
        sim.metrics.on_send(&pkt);
        sim.forward_data(NodeId(0), pkt, true);
        let out = sim.run().unwrap();
        assert_eq!(out.metrics.dropped_ttl, 1);
        assert_eq!(out.metrics.delivered, 4);
    }
}
