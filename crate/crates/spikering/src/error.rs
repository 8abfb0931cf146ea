//! Simulator-level fault taxonomy.

use crate::accumulator::AccumError;
use crate::network::NetworkError;
use crate::store::StoreError;
use crate::topology::TopologyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite state at neuron {neuron}, step {step} (corrupted accumulation?)")]
    NonFinite { neuron: u32, step: u64 },
    #[error("deadlock at step {step} after {micro_steps} idle micro-steps\n{diagnostics}")]
    Deadlock { step: u64, micro_steps: u64, diagnostics: String },
    #[error("barrier skew: core {core} completing step {step} saw core {other} at step {other_step}")]
    BarrierSkew { core: u32, step: u64, other: u32, other_step: u64 },
    #[error("ring protocol violation at core {core}: {what}")]
    Protocol { core: u32, what: String },
    #[error("metrics identity violated: {0}")]
    MetricsIdentity(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Accumulator(#[from] AccumError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("worker thread panicked")]
    WorkerPanic,
}

impl SimError {
    /// Process exit code for the CLI contract: 1 usage/config, 2 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Topology(_) | SimError::Network(_) => 1,
            _ => 2,
        }
    }
}
