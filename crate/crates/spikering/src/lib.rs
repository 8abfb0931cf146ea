//! spikering: a transaction-level simulator of a multi-core spiking neural
//! network accelerator built around a bidirectional ring of cores.
//!
//! Each core owns a slice of leaky integrate-and-fire neurons, a
//! delay-indexed weight accumulator, and a packet router. Spikes are fetched
//! as proximity-sorted synapse lists, encoded into 64-bit packets, and
//! routed along the shorter ring direction; per-core synchronization tokens
//! close each timestep. A sequential oracle over the same network files
//! reproduces the ring's spike recordings exactly in canonical accumulation
//! order, and spike-train statistics (firing rate, CV of inter-spike
//! intervals, Pearson correlation) quantify agreement when it runs free.
//!
//! Start with the runnable examples (`cargo run --example sudoku_solve`) or
//! the `spikering` CLI (`gen`, `run`, `validate`, `sudoku-check`).

// `!(x > 0.0)` in config validation intentionally rejects NaN, which the
// suggested `x <= 0.0` would accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accumulator;
pub mod cli;
pub mod error;
pub mod network;
pub mod neuron;
pub mod oracle;
pub mod packet;
pub mod recording;
pub mod rng;
pub mod router;
pub mod sim;
pub mod stats;
pub mod store;
pub mod topology;
pub mod workloads;

pub use error::SimError;
pub use network::{Network, PopKind, Population};
pub use recording::{RunMetrics, SpikeRecording};
pub use sim::{run_ring, RunConfig};
pub use store::SynapseEdge;
pub use topology::TopologyConfig;
