//! Delay-indexed weight accumulation: a 64-slot circular buffer per neuron.
//!
//! A packet arriving at step `t` with delay `d` lands in slot
//! `(t + d) % 64`; `release(t)` hands slot `t % 64` to the neuron engine and
//! zeroes it. Because delays are confined to `1..=64`, a slot is always
//! drained before any contribution targeting its next reuse can arrive.
//!
//! Two accumulation orders exist. In delivery order, weights are summed as
//! packets arrive, so the result depends on routing schedule. In canonical
//! order, contributions are buffered and summed sorted by
//! `(neuron, src, edge index)` at release time, which makes the released
//! sums bit-identical across any delivery schedule — the property that lets
//! the ring fabric reproduce the sequential oracle exactly.

use crate::store::MAX_DELAY;
use thiserror::Error;

/// Slots per neuron; matches the deepest representable delay.
pub const DELAY_SLOTS: usize = MAX_DELAY as usize;

#[derive(Debug, Error, PartialEq)]
pub enum AccumError {
    #[error("delay {0} outside [1, {MAX_DELAY}] reached the accumulator")]
    DelayOutOfRange(u8),
    #[error("release called twice for step {0}")]
    DoubleRelease(u64),
    #[error("release for step {got} but {expected} is next")]
    ReleaseOutOfOrder { got: u64, expected: u64 },
    #[error("neuron {0} does not belong to this accumulator")]
    ForeignNeuron(u32),
}

/// One buffered contribution, keyed for canonical summation.
#[derive(Debug, Clone, Copy)]
struct Contribution {
    local: u32,
    src: u32,
    edge_idx: u32,
    weight: f32,
}

/// Per-core (or, for the oracle, whole-network) delay accumulator.
#[derive(Debug)]
pub struct DelayAccumulator {
    base: u32,
    n_local: u32,
    canonical: bool,
    /// Delivery-order storage: `dense[slot * n_local + local]`.
    dense: Vec<f64>,
    /// Canonical-order storage: unsorted contributions per slot.
    pending: Vec<Vec<Contribution>>,
    next_release: u64,
}

impl DelayAccumulator {
    /// Accumulator for global neuron IDs `base .. base + n_local`.
    pub fn new(base: u32, n_local: u32, canonical: bool) -> Self {
        Self {
            base,
            n_local,
            canonical,
            dense: if canonical { Vec::new() } else { vec![0.0; DELAY_SLOTS * n_local as usize] },
            pending: if canonical {
                (0..DELAY_SLOTS).map(|_| Vec::new()).collect()
            } else {
                Vec::new()
            },
            next_release: 0,
        }
    }

    #[inline]
    pub fn n_local(&self) -> u32 {
        self.n_local
    }

    /// Add one delivered weight. `t` is the origination step of the packet
    /// (equal to the consuming core's current step once barriers are
    /// honored); `src` and `edge_idx` key the canonical summation order.
    #[inline]
    pub fn accumulate(
        &mut self,
        dst: u32,
        delay: u8,
        weight: f32,
        src: u32,
        edge_idx: u32,
        t: u64,
    ) -> Result<(), AccumError> {
        if delay == 0 || delay > MAX_DELAY {
            return Err(AccumError::DelayOutOfRange(delay));
        }
        if dst < self.base || dst - self.base >= self.n_local {
            return Err(AccumError::ForeignNeuron(dst));
        }
        let local = dst - self.base;
        let slot = ((t + delay as u64) % DELAY_SLOTS as u64) as usize;
        if self.canonical {
            self.pending[slot].push(Contribution { local, src, edge_idx, weight });
        } else {
            self.dense[slot * self.n_local as usize + local as usize] += weight as f64;
        }
        Ok(())
    }

    /// Drain slot `t % 64` into `out` (length `n_local`) and zero it. Must be
    /// called exactly once per step, in step order.
    pub fn release(&mut self, t: u64, out: &mut [f64]) -> Result<(), AccumError> {
        assert_eq!(out.len(), self.n_local as usize);
        if t + 1 == self.next_release {
            return Err(AccumError::DoubleRelease(t));
        }
        if t != self.next_release {
            return Err(AccumError::ReleaseOutOfOrder { got: t, expected: self.next_release });
        }
        self.next_release = t + 1;
        let slot = (t % DELAY_SLOTS as u64) as usize;
        out.fill(0.0);
        if self.canonical {
            let mut contribs = std::mem::take(&mut self.pending[slot]);
            contribs.sort_unstable_by_key(|c| (c.local, c.src, c.edge_idx));
            for c in &contribs {
                out[c.local as usize] += c.weight as f64;
            }
            contribs.clear();
            self.pending[slot] = contribs; // keep the allocation
        } else {
            let row = &mut self.dense[slot * self.n_local as usize..][..self.n_local as usize];
            out.copy_from_slice(row);
            row.fill(0.0);
        }
        Ok(())
    }
}
