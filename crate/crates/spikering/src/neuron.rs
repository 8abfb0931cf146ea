//! Leaky integrate-and-fire dynamics and Poisson spike sources.
//!
//! The membrane equation pair
//!
//! ```text
//! tau_m  dV/dt     = -(V - E_L) + R * (I_syn + I_DC)
//! tau_syn dI_syn/dt = -I_syn            (+ impulse w on spike arrival)
//! ```
//!
//! is advanced one timestep at a time by its exact propagator, matching the
//! current-based exponential-synapse convention: with `a = exp(-dt/tau_m)`
//! and `b = exp(-dt/tau_syn)`,
//!
//! ```text
//! V'     = a.V + (E_L + R.I_DC)(1 - a) + P21.I_syn
//! I_syn' = b.I_syn + w_in
//! P21    = R . tau_syn / (tau_syn - tau_m) . (b - a)
//! ```
//!
//! `P21` degenerates to `R.(dt/tau_m).a` when the two time constants
//! coincide. Arriving weights enter `I_syn` at the end of the interval, so
//! they first influence `V` one step later.
//!
//! Units: mV, pA, ms, and GOhm, so that `R * I` is directly in mV and
//! `R = tau_m / C_m` with `C_m` in pF.

use crate::rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuronError {
    #[error("invalid LIF parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite membrane state or input")]
    NonFinite,
}

/// Per-population LIF parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    /// Membrane time constant (ms).
    pub tau_m: f64,
    /// Synaptic time constant (ms).
    pub tau_syn: f64,
    /// Leak reversal potential (mV).
    pub e_l: f64,
    /// Spike threshold (mV); strict comparison `V > V_th`.
    pub v_th: f64,
    /// Post-spike reset potential (mV).
    pub v_reset: f64,
    /// Membrane resistance (GOhm); `tau_m / C_m` for `C_m` in pF.
    pub r_m: f64,
    /// Constant direct-current drive (pA).
    pub i_dc: f64,
    /// Refractory period (ms).
    pub t_ref: f64,
    /// Timestep (ms).
    pub dt: f64,
}

impl LifParams {
    pub fn validate(&self) -> Result<(), NeuronError> {
        if !(self.tau_m > 0.0) {
            return Err(NeuronError::InvalidParams(format!("tau_m = {}", self.tau_m)));
        }
        if !(self.tau_syn > 0.0) {
            return Err(NeuronError::InvalidParams(format!("tau_syn = {}", self.tau_syn)));
        }
        if !(self.dt > 0.0) {
            return Err(NeuronError::InvalidParams(format!("dt = {}", self.dt)));
        }
        if !(self.v_th > self.v_reset) {
            return Err(NeuronError::InvalidParams(format!(
                "v_th {} must exceed v_reset {}",
                self.v_th, self.v_reset
            )));
        }
        if !(self.t_ref >= 0.0) {
            return Err(NeuronError::InvalidParams(format!("t_ref = {}", self.t_ref)));
        }
        Ok(())
    }

    /// Precompute the per-step propagator constants.
    pub fn propagators(&self) -> LifPropagators {
        let alpha = (-self.dt / self.tau_m).exp();
        let beta = (-self.dt / self.tau_syn).exp();
        // Degenerate limit of (b - a)/(tau_syn - tau_m) as the constants meet.
        let p21 = if (self.tau_syn - self.tau_m).abs() < 1e-7 * self.tau_m {
            self.r_m * (self.dt / self.tau_m) * alpha
        } else {
            self.r_m * self.tau_syn / (self.tau_syn - self.tau_m) * (beta - alpha)
        };
        LifPropagators {
            alpha,
            beta,
            p21,
            drive: (self.e_l + self.r_m * self.i_dc) * (1.0 - alpha),
            v_th: self.v_th,
            v_reset: self.v_reset,
            ref_steps: (self.t_ref / self.dt).round() as u32,
        }
    }
}

/// Constants of the one-step exact update, derived from [`LifParams`].
#[derive(Debug, Clone, Copy)]
pub struct LifPropagators {
    pub alpha: f64,
    pub beta: f64,
    pub p21: f64,
    pub drive: f64,
    pub v_th: f64,
    pub v_reset: f64,
    pub ref_steps: u32,
}

/// Mutable per-neuron state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Synaptic current (pA).
    pub i_syn: f64,
    /// Remaining refractory timesteps; `v == v_reset` while positive.
    pub ref_count: u32,
}

impl NeuronState {
    pub fn new(v: f64) -> Self {
        Self { v, i_syn: 0.0, ref_count: 0 }
    }
}

/// Advance one neuron by one timestep. `w_in` is the delay-resolved sum of
/// synaptic weights (pA) released for this step. Returns whether the neuron
/// spiked.
///
/// Refractory neurons keep decaying and accumulating `I_syn`; only `V` is
/// clamped at reset.
#[inline]
pub fn lif_step(
    s: &mut NeuronState,
    p: &LifPropagators,
    w_in: f64,
) -> Result<bool, NeuronError> {
    if !(s.v.is_finite() && s.i_syn.is_finite() && w_in.is_finite()) {
        return Err(NeuronError::NonFinite);
    }
    let i_prev = s.i_syn;
    s.i_syn = p.beta * s.i_syn + w_in;
    if s.ref_count > 0 {
        s.ref_count -= 1;
        s.v = p.v_reset;
        return Ok(false);
    }
    let v_next = p.alpha * s.v + p.drive + p.p21 * i_prev;
    if v_next > p.v_th {
        s.v = p.v_reset;
        s.ref_count = p.ref_steps;
        Ok(true)
    } else {
        s.v = v_next;
        Ok(false)
    }
}

/// Spike probability of a Poisson source per timestep.
#[inline]
pub fn poisson_prob(rate_hz: f64, dt_ms: f64) -> f64 {
    1.0 - (-rate_hz * dt_ms / 1000.0).exp()
}

/// Bernoulli draw for a Poisson source, keyed by `(seed, neuron, step)`.
#[inline]
pub fn poisson_step(prob: f64, seed: u64, neuron: u32, step: u64) -> bool {
    rng::draw_f64(seed, rng::stream::POISSON, neuron as u64, step) < prob
}

/// Uniform membrane initialization in `[lo, hi)`, keyed by `(seed, neuron)`.
#[inline]
pub fn init_membrane(seed: u64, neuron: u32, lo: f64, hi: f64) -> f64 {
    rng::draw_uniform(seed, rng::stream::MEMBRANE_INIT, neuron as u64, 0, lo, hi)
}


#[cfg(test)]
mod decay_property {
    use super::*;
    use crate::rng;

    /// Absent input, I_syn shrinks by exactly beta each step, across random
    /// trajectories and parameter draws.
    #[test]
    fn i_syn_decays_by_exactly_beta() {
        for k in 0..50u64 {
            let prm = LifParams {
                tau_m: rng::draw_uniform(21, 1, k, 0, 5.0, 30.0),
                tau_syn: rng::draw_uniform(21, 2, k, 0, 0.5, 10.0),
                e_l: -65.0,
                v_th: -50.0,
                v_reset: -70.0,
                r_m: 0.08,
                i_dc: rng::draw_uniform(21, 3, k, 0, 0.0, 150.0),
                t_ref: 2.0,
                dt: 0.1,
            };
            let p = prm.propagators();
            let mut s = NeuronState {
                v: rng::draw_uniform(21, 4, k, 0, -75.0, -55.0),
                i_syn: rng::draw_uniform(21, 5, k, 0, -800.0, 800.0),
                ref_count: (k % 4) as u32,
            };
            for _ in 0..100 {
                let before = s.i_syn;
                lif_step(&mut s, &p, 0.0).unwrap();
                assert_eq!(s.i_syn.to_bits(), (before * p.beta).to_bits());
            }
        }
    }
}
