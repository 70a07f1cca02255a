//! Deterministic packet-level simulator for proactive MANET routing:
//! DSDV, FSR, OLSR and OLSR-M over a unit-disk radio with Random Waypoint
//! mobility and CBR traffic, plus closed-form control-cost models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dsdv;
pub mod error;
pub mod fsr;
pub mod graph;
pub mod medium;
pub mod metrics;
pub mod mobility;
pub mod network;
pub mod olsr;
pub mod protocol;
pub mod scenario;
pub mod sim;
pub mod traffic;

pub use error::{ConfigError, SimError};
pub use metrics::{MetricsRecord, VariantCounts};
pub use mobility::Position;
pub use network::{RunOutput, SimSetup, Simulation};
pub use protocol::{ControlVariant, NodeId, Packet, Protocol, ProtocolKind, RouteEntry};
pub use scenario::{ScenarioConfig, SweepAxis, SweepSpec};
pub use sim::SimTime;
