//! Master/slave distribution of tile segmentation.
//!
//! The master holds the tile map and the boundary readiness ledger and reacts
//! to one message at a time. Slaves segment tiles (PT -> TC) and unified
//! boundary clouds (PB -> BC) until they receive FIN. The same master and
//! slave code runs over in-process channels, loopback TCP, or a simulated
//! clock that replays measured task durations as if every slave had its own
//! processor.

mod master;
mod message;
mod metrics;
pub mod modelcheck;
mod run;
mod sim;
mod slave;
mod transport;

pub use master::{Master, Outgoing, SlaveId, SlaveStatus, TilePolicy, TileStatus};
pub use message::{decode_frame, encode_frame, read_frame, write_frame, Message, Tag};
pub use metrics::{MessageCounts, RunMetrics, SlaveMetrics};
pub use run::{run_distributed, serve_master, DistributedRun, RunOptions, TransportKind};
pub use sim::SimClock;
pub use slave::{slave_run, MemorySource, ManifestSource, SlaveLink, SlaveReport, SlaveWorker, TaskTiming, TileSource};
pub use transport::{connect_slave, TcpSlaveLink};
