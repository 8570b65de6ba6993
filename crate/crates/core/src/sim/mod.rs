//! Deterministic discrete-event simulation core.

pub mod engine;
pub mod event;
pub mod field;
pub mod metrics;
pub mod pu;
pub mod trace;

pub use engine::{run, run_full, run_with_table, AuditReport, FlowCounts, SimOutput};
pub use event::{ArrivedPacket, CtrlPacket, Event, EventKind, EventQueue};
pub use field::ChannelField;
pub use metrics::MetricsReport;
pub use pu::{sample_pu_schedule, PuProcess};
pub use trace::TraceEvent;
