//! Sequential reference simulator: no ring, no packets, no scheduling.
//!
//! The oracle consumes the same network file, topology, and seed as the
//! ring simulator, applies delayed inputs through one flat
//! `(neuron x 64)` delay matrix, and uses the identical neuron math,
//! identical keyed RNG streams, and identical canonical per-slot summation
//! order. The ring fabric in canonical mode must reproduce its spike
//! recording exactly; that equality is the repository's central
//! theorem-by-test.

use crate::accumulator::DelayAccumulator;
use crate::error::SimError;
use crate::network::Network;
use crate::neuron::{init_membrane, lif_step, poisson_step, NeuronError, NeuronState};
use crate::packet::word;
use crate::recording::{RunMetrics, SpikeRecording};
use crate::sim::{build_pop_tables, RunConfig};
use crate::store::SynapseList;

/// Run the sequential reference over the same inputs as [`crate::sim::run_ring`].
pub fn run_oracle(
    net: &Network,
    cfg: &RunConfig,
) -> Result<(SpikeRecording, RunMetrics), SimError> {
    net.validate()?;
    let topo = net.topology(cfg.cores, cfg.capacity).with_devices(cfg.devices)?;
    topo.validate(net.n_neurons)?;
    let steps = cfg.steps(net.dt)?;
    // The store is topology-sorted exactly as the ring's, so edge indices
    // (the canonical summation key) agree between the two simulators.
    let store = SynapseList::build(&net.edges, &topo, net.n_neurons)?;
    let pops = build_pop_tables(net);
    let pop_of = net.pop_lookup();
    let n = net.n_neurons;

    let mut v = vec![0.0f64; n as usize];
    let mut i_syn = vec![0.0f64; n as usize];
    let mut refc = vec![0u32; n as usize];
    for gid in 0..n {
        let pop = pop_of[gid as usize] as usize;
        if pops.props[pop].is_some() {
            let (lo, hi) = pops.v_init[pop];
            v[gid as usize] = init_membrane(cfg.seed, gid, lo, hi);
        }
    }

    // The oracle always sums in canonical order; that is its definition.
    let mut acc = DelayAccumulator::new(0, n, true);
    let mut w_in = vec![0.0f64; n as usize];
    let mut rec = SpikeRecording::new(steps, net.dt);
    let mut metrics = RunMetrics::new(topo.n_cores);
    metrics.steps = steps;
    let mut spikes_t: Vec<u32> = Vec::new();

    for t in 0..steps {
        acc.release(t, &mut w_in)?;
        spikes_t.clear();
        for gid in 0..n {
            let gi = gid as usize;
            let pop = pop_of[gi] as usize;
            let spiked = match pops.props[pop] {
                Some(props) => {
                    let mut state =
                        NeuronState { v: v[gi], i_syn: i_syn[gi], ref_count: refc[gi] };
                    let spiked = lif_step(&mut state, &props, w_in[gi]).map_err(|e| match e {
                        NeuronError::NonFinite => SimError::NonFinite { neuron: gid, step: t },
                        other => SimError::Config(other.to_string()),
                    })?;
                    v[gi] = state.v;
                    i_syn[gi] = state.i_syn;
                    refc[gi] = state.ref_count;
                    spiked
                }
                None => poisson_step(pops.poisson[pop], cfg.seed, gid, t),
            };
            if spiked {
                spikes_t.push(gid);
                rec.events.push((t as u32, gid));
                metrics.total_spikes += 1;
                metrics.synaptic_events += store.fanout(gid) as u64;
            }
        }
        for &gid in &spikes_t {
            for (edge_idx, &w) in store.edges_of(gid).iter().enumerate() {
                acc.accumulate(
                    word::dst(w),
                    word::delay(w),
                    word::weight(w),
                    gid,
                    edge_idx as u32,
                    t,
                )?;
            }
        }
    }
    Ok((rec, metrics))
}
