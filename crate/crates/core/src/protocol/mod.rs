//! Per-node protocol logic: hello dissemination, route discovery and the
//! two simplified baseline routers.
//!
//! Everything here is pure over snapshots of per-node state; the
//! discrete-event engine assembles the views and delivers the packets.

pub mod baselines;
pub mod hello;
pub mod undercover;

pub use baselines::{flood_discover, greedy_next_hop, BaselineKind, FloodOutcome};
pub use hello::{HelloPacket, NeighborState, ProtocolConfig};
pub use undercover::{
    handle_rreq, select_next_hop, Ack, AckReply, RouteReply, RouteRequest, RreqOutcome, RreqView,
};
