//! Network generators emitting the flattened synapse-list format: the
//! layered cortical microcircuit, the winner-takes-all Sudoku solver, and a
//! synthetic random network for fabric stress tests.

pub mod microcircuit;
pub mod random;
pub mod sudoku;

use crate::neuron::LifParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("population {0} empties at scale {1}")]
    EmptiedPopulation(String, f64),
    #[error("connection {0}: unknown population {1}")]
    UnknownPopulation(usize, String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("puzzle string must be 81 cells of [0-9.], got {0}")]
    BadPuzzle(String),
    #[error("inconsistent givens: {0}")]
    InconsistentGivens(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Neuron parameters as written in config files: capacitance-based, with
/// the membrane resistance derived as `tau_m / C_m`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeuronSpec {
    /// Membrane capacitance (pF).
    pub c_m: f64,
    /// Membrane time constant (ms).
    pub tau_m: f64,
    /// Synaptic time constant (ms).
    pub tau_syn: f64,
    /// Leak reversal (mV).
    pub e_l: f64,
    /// Threshold (mV).
    pub v_th: f64,
    /// Reset potential (mV).
    pub v_reset: f64,
    /// Refractory period (ms).
    pub t_ref: f64,
    /// Direct-current drive (pA).
    #[serde(default)]
    pub i_dc: f64,
}

impl NeuronSpec {
    pub fn to_params(&self, dt: f64) -> LifParams {
        LifParams {
            tau_m: self.tau_m,
            tau_syn: self.tau_syn,
            e_l: self.e_l,
            v_th: self.v_th,
            v_reset: self.v_reset,
            r_m: self.tau_m / self.c_m,
            i_dc: self.i_dc,
            t_ref: self.t_ref,
            dt,
        }
    }
}
