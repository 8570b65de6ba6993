//! Cooperative-beamforming routing for cognitive radio networks.
//!
//! Secondary users (SUs) in an overlay cognitive radio network may not
//! interfere with licensed primary users (PUs).  Instead of avoiding PU
//! territory altogether, groups of SUs can transmit *through* it by
//! precoding a shared data packet so that the superposition cancels at
//! every in-range primary receiver while reinforcing at the intended next
//! hop.  This crate provides everything needed to study that idea:
//!
//! - [`channel`] / [`beam`] — fading channel sampling, null-space
//!   beamforming weights, and link capacities.
//! - [`geometry`] — positions, polygon-area density estimates, and the
//!   interference footprint of a cooperative group.
//! - [`metric`] — the interference-aware composite link metric, the
//!   group-size elimination heuristic, and threshold-table regeneration.
//! - [`protocol`] — hello dissemination, route discovery
//!   (RREQ/RREP/ACK/AREP), and two simplified baseline routers.
//! - [`sim`] — a deterministic discrete-event engine with PU ON-OFF
//!   activity, a fair-share MAC abstraction, and metrics collection.
//! - [`scenario`] — experiment configuration (text format with
//!   `key = value` lines).
//!
//! Everything is deterministic: a scenario plus a seed reproduces the
//! same results bit for bit.

pub mod beam;
pub mod channel;
pub mod geometry;
pub mod metric;
pub mod protocol;
pub mod scenario;
pub mod sim;

pub use beam::{
    avg_max_capacity, capacity_coop, capacity_p2p, compute_null_weights, effective_capacity,
    BeamError, BeamWeights, ChannelMatrix,
};
pub use channel::{sample_channel, ChannelCoeff, ChannelModel, RadioConfig};
pub use geometry::{
    estimate_affected_flows, flow_density, flows_per_node, hull_area, interference_radius,
    DensityEstimate, GeometryError, Position, PropagationConfig,
};
pub use metric::{
    count_flow_neighbors, enumerate_candidates, link_metric, max_group_size, score_group,
    CandidateInputs, LinkCandidate, MetricConfig, MetricError, ThresholdTable,
};
pub use scenario::{parse_config, ConfigError, Protocol, RouteReuse, ScenarioConfig};
pub use sim::{run, run_full, MetricsReport, SimOutput};

/// Secondary-user node identifier.
pub type NodeId = u32;
/// Primary-user identifier.
pub type PuId = u32;
/// Data-flow identifier.
pub type FlowId = u32;
