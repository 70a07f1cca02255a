//! Shared packet and routing vocabulary, and the contract every routing
//! protocol implements.
//!
//! Protocols never touch the medium or other nodes directly. Every hook
//! receives a [`Ctx`] and records [`Action`]s on it; the network applies
//! them after the hook returns.

use std::fmt;

use crate::dsdv::DsdvUpdateMsg;
use crate::fsr::FsrUpdateMsg;
use crate::medium::LinkEvent;
use crate::metrics::DropReason;
use crate::olsr::{HelloMsg, TcMsg};
use crate::sim::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolKind {
    Dsdv,
    Fsr,
    Olsr,
    OlsrM,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::Dsdv,
        ProtocolKind::Fsr,
        ProtocolKind::Olsr,
        ProtocolKind::OlsrM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Dsdv => "dsdv",
            ProtocolKind::Fsr => "fsr",
            ProtocolKind::Olsr => "olsr",
            ProtocolKind::OlsrM => "olsr_m",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dest {
    Node(NodeId),
    Broadcast,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ControlMsg {
    Dsdv(DsdvUpdateMsg),
    Fsr(FsrUpdateMsg),
    Hello(HelloMsg),
    Tc(TcMsg),
}

/// Accounting class of a control transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlVariant {
    /// DSDV periodic full dump.
    RuPer,
    /// DSDV update triggered by a link break (local or propagated).
    RuTri,
    /// DSDV incremental update carrying new or settled routes.
    Npdu,
    /// FSR intra-scope exchange.
    Ias,
    /// FSR inter-scope exchange.
    Ies,
    Hello,
    /// Periodic TC originated by this node.
    Tc,
    /// TC originated by this node on an MPR neighbourhood change.
    TcTri,
    /// TC relayed by an MPR.
    TcForward,
}

impl ControlVariant {
    pub const ALL: [ControlVariant; 9] = [
        ControlVariant::RuPer,
        ControlVariant::RuTri,
        ControlVariant::Npdu,
        ControlVariant::Ias,
        ControlVariant::Ies,
        ControlVariant::Hello,
        ControlVariant::Tc,
        ControlVariant::TcTri,
        ControlVariant::TcForward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlVariant::RuPer => "ru_per",
            ControlVariant::RuTri => "ru_tri",
            ControlVariant::Npdu => "npdu",
            ControlVariant::Ias => "ias",
            ControlVariant::Ies => "ies",
            ControlVariant::Hello => "hello",
            ControlVariant::Tc => "tc",
            ControlVariant::TcTri => "tc_tri",
            ControlVariant::TcForward => "tc_fwd",
        }
    }
}

impl ControlMsg {
    pub fn variant(&self, transmitter: NodeId) -> ControlVariant {
        match self {
            ControlMsg::Dsdv(m) => m.kind.variant(),
            ControlMsg::Fsr(m) => m.scope.variant(),
            ControlMsg::Hello(_) => ControlVariant::Hello,
            ControlMsg::Tc(m) if m.origin == transmitter && m.triggered => ControlVariant::TcTri,
            ControlMsg::Tc(m) if m.origin == transmitter => ControlVariant::Tc,
            ControlMsg::Tc(_) => ControlVariant::TcForward,
        }
    }

    /// Serialized size in bytes under the fixed message-size model.
    pub fn size(&self) -> u32 {
        match self {
            ControlMsg::Dsdv(m) => m.size(),
            ControlMsg::Fsr(m) => m.size(),
            ControlMsg::Hello(m) => m.size(),
            ControlMsg::Tc(m) => m.size(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Data { flow: u32, payload_seq: u64 },
    Control(ControlMsg),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    /// Transmitter of the current hop.
    pub src: NodeId,
    pub origin: NodeId,
    pub dst: Dest,
    pub ttl: u32,
    pub size: u32,
    pub created_at: SimTime,
    pub body: Body,
}

impl Packet {
    pub fn data(
        origin: NodeId,
        dst: NodeId,
        flow: u32,
        payload_seq: u64,
        size: u32,
        ttl: u32,
        now: SimTime,
    ) -> Self {
        assert!(size > 0, "packet size must be positive");
        Packet {
            src: origin,
            origin,
            dst: Dest::Node(dst),
            ttl,
            size,
            created_at: now,
            body: Body::Data { flow, payload_seq },
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self.body, Body::Data { .. })
    }

    pub fn control(&self) -> Option<&ControlMsg> {
        match &self.body {
            Body::Control(m) => Some(m),
            Body::Data { .. } => None,
        }
    }

    pub fn dst_node(&self) -> Option<NodeId> {
        match self.dst {
            Dest::Node(n) => Some(n),
            Dest::Broadcast => None,
        }
    }
}

/// Per-destination routing state as exposed to the forwarding plane.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub metric: u32,
    /// Destination sequence number; only DSDV maintains one.
    pub seq_num: Option<u64>,
    pub installed_at: SimTime,
    pub advertised: bool,
}

impl RouteEntry {
    pub fn self_route(node: NodeId) -> Self {
        RouteEntry {
            dest: node,
            next_hop: node,
            metric: 0,
            seq_num: None,
            installed_at: SimTime::ZERO,
            advertised: true,
        }
    }
}

/// Protocol timers. Each protocol only ever sees its own variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Timer {
    DsdvPeriodic,
    DsdvSettle(NodeId),
    DsdvFlush,
    FsrIntra,
    FsrInter,
    OlsrHello,
    OlsrTc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Broadcast { msg: ControlMsg, ttl: u32 },
    SetTimer { at: SimTime, timer: Timer },
    /// Hand a previously held data packet back to the forwarding plane.
    Release(Packet),
    Drop(Packet, DropReason),
}

/// Per-hook execution context.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub node: NodeId,
    actions: &'a mut Vec<Action>,
}

impl<'a> Ctx<'a> {
    pub fn new(now: SimTime, node: NodeId, actions: &'a mut Vec<Action>) -> Self {
        Ctx { now, node, actions }
    }

    pub fn broadcast(&mut self, msg: ControlMsg, ttl: u32) {
        self.actions.push(Action::Broadcast { msg, ttl });
    }

    pub fn set_timer(&mut self, at: SimTime, timer: Timer) {
        self.actions.push(Action::SetTimer { at, timer });
    }

    pub fn set_timer_in(&mut self, delay: f64, timer: Timer) {
        let at = self.now + delay;
        self.set_timer(at, timer);
    }

    pub fn release(&mut self, pkt: Packet) {
        self.actions.push(Action::Release(pkt));
    }

    pub fn drop_data(&mut self, pkt: Packet, reason: DropReason) {
        self.actions.push(Action::Drop(pkt, reason));
    }
}

/// Behavioural contract of a proactive routing protocol instance (one per node).
pub trait Protocol: Send {
    fn name(&self) -> &'static str;

    /// Whether the medium's periodic link sensing feeds this protocol.
    fn uses_lsm(&self) -> bool;

    fn on_start(&mut self, ctx: &mut Ctx);

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer);

    /// A control packet heard from neighbour `from`.
    fn on_control(&mut self, ctx: &mut Ctx, pkt: &Packet, msg: &ControlMsg, from: NodeId);

    fn on_link_event(&mut self, ctx: &mut Ctx, ev: LinkEvent);

    /// Must not mutate state.
    fn route_lookup(&self, dest: NodeId) -> Option<RouteEntry>;

    /// Every usable route, including the self-route.
    fn routing_table(&self) -> Vec<RouteEntry>;

    /// Offered each data packet before it is forwarded. Returning `None`
    /// means the protocol took ownership (buffered or dropped it via `ctx`).
    fn intercept_data(&mut self, _ctx: &mut Ctx, pkt: Packet) -> Option<Packet> {
        Some(pkt)
    }

    /// Data packets currently buffered inside the protocol.
    fn held_packets(&self) -> usize {
        0
    }

    fn as_any(&self) -> &dyn std::any::Any;
}
