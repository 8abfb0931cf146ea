//! Flattened per-neuron synapse lists with destination-core proximity
//! sorting and per-spike fetch.
//!
//! Entries are stored as encoded 64-bit DATA packets, grouped contiguously
//! per source neuron. Within a group, entries are ordered by ascending ring
//! distance of the destination core from the source's core, so locally
//! consumed and nearest-neighbor packets are generated first. Ties break by
//! destination ID, then input order, which makes the store byte-identical
//! for identical input.

use crate::packet::{self, SynapsePacket};
use crate::topology::{min_distance, TopologyConfig};
use thiserror::Error;

/// Deepest delay slot; the accumulator allocates this many per neuron.
pub const MAX_DELAY: u8 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum StoreError {
    #[error("edge {index}: delay {delay} outside [1, {MAX_DELAY}]")]
    DelayOutOfRange { index: usize, delay: u8 },
    #[error("edge {index}: destination {dst} outside network of {n_neurons} neurons")]
    DstOutOfRange { index: usize, dst: u32, n_neurons: u32 },
    #[error("edge {index}: source {src} outside network of {n_neurons} neurons")]
    SrcOutOfRange { index: usize, src: u32, n_neurons: u32 },
    #[error("edge {index}: {0}", index = .1)]
    Packet(packet::PacketError, usize),
}

/// One directed synapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseEdge {
    pub src: u32,
    pub dst: u32,
    /// Delay in timesteps, 1..=64.
    pub delay: u8,
    /// Synaptic weight (pA).
    pub weight: f32,
}

/// Immutable proximity-sorted synapse store, shared read-only by all cores.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseList {
    /// Entry range of neuron `i` is `offsets[i]..offsets[i + 1]`.
    offsets: Vec<u32>,
    /// Encoded DATA packets.
    entries: Vec<u64>,
    n_neurons: u32,
}

impl SynapseList {
    /// Group edges by source and proximity-sort each group.
    pub fn build(
        edges: &[SynapseEdge],
        topo: &TopologyConfig,
        n_neurons: u32,
    ) -> Result<Self, StoreError> {
        let mut counts = vec![0u32; n_neurons as usize + 1];
        for (index, e) in edges.iter().enumerate() {
            if e.delay == 0 || e.delay > MAX_DELAY {
                return Err(StoreError::DelayOutOfRange { index, delay: e.delay });
            }
            if e.dst >= n_neurons {
                return Err(StoreError::DstOutOfRange { index, dst: e.dst, n_neurons });
            }
            if e.src >= n_neurons {
                return Err(StoreError::SrcOutOfRange { index, src: e.src, n_neurons });
            }
            counts[e.src as usize + 1] += 1;
        }
        let mut offsets = counts;
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }

        // Bucket-fill preserving input order, keyed for the in-group sort by
        // (ring distance, dst); the stable sort keeps input order for ties.
        let mut keyed: Vec<(u32, u32, u64)> = vec![(0, 0, 0); edges.len()];
        let mut cursor = offsets.clone();
        for (index, e) in edges.iter().enumerate() {
            let word = SynapsePacket::data(e.weight, e.dst, e.delay)
                .map_err(|p| StoreError::Packet(p, index))?
                .encode();
            let dist = min_distance(topo.core_of(e.src), topo.core_of(e.dst), topo.n_cores);
            let slot = cursor[e.src as usize];
            keyed[slot as usize] = (dist, e.dst, word);
            cursor[e.src as usize] += 1;
        }
        for src in 0..n_neurons as usize {
            let range = offsets[src] as usize..offsets[src + 1] as usize;
            keyed[range].sort_by_key(|&(dist, dst, _)| (dist, dst));
        }

        let entries = keyed.into_iter().map(|(_, _, w)| w).collect();
        Ok(Self { offsets, entries, n_neurons })
    }

    #[inline]
    pub fn n_neurons(&self) -> u32 {
        self.n_neurons
    }

    #[inline]
    pub fn total_edges(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Outgoing synapse count of `src`.
    #[inline]
    pub fn fanout(&self, src: u32) -> u32 {
        assert!(src < self.n_neurons, "unknown source neuron {src}");
        self.offsets[src as usize + 1] - self.offsets[src as usize]
    }

    /// Encoded DATA packets of `src`, in dispatch order.
    #[inline]
    pub fn edges_of(&self, src: u32) -> &[u64] {
        assert!(src < self.n_neurons, "unknown source neuron {src}");
        &self.entries[self.offsets[src as usize] as usize..self.offsets[src as usize + 1] as usize]
    }

    /// The full fetch sequence for one spike: each edge as a DATA packet,
    /// terminated by one LOCAL_SYNC token carrying the source's core ID.
    pub fn fetch<'a>(
        &'a self,
        src: u32,
        topo: &TopologyConfig,
    ) -> impl Iterator<Item = SynapsePacket> + 'a {
        let origin = topo.core_of(src);
        self.edges_of(src)
            .iter()
            .map(|&w| SynapsePacket::decode(w))
            .chain(std::iter::once(SynapsePacket::local_sync(origin)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{word, SyncClass};

    fn topo20() -> TopologyConfig {
        TopologyConfig::new(20, 4096, 0.1)
    }

    fn edge(src: u32, dst: u32, delay: u8) -> SynapseEdge {
        SynapseEdge { src, dst, delay, weight: 1.0 }
    }

    #[test]
    fn empty_store_fetches_only_tokens() {
        let topo = TopologyConfig::new(2, 4, 0.1);
        let store = SynapseList::build(&[], &topo, 8).unwrap();
        assert_eq!(store.total_edges(), 0);
        let seq: Vec<_> = store.fetch(5, &topo).collect();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0].sync(), SyncClass::LocalSync);
        assert_eq!(seq[0].origin(), 1);
    }

    #[test]
    fn proximity_sort_on_twenty_core_ring() {
        // src on core 0; dsts on cores 0, 5, 19 -> order core 0 (d=0),
        // core 19 (d=1), core 5 (d=5).
        let topo = topo20();
        let edges = [
            edge(0, 5 * 4096 + 7, 1),  // core 5
            edge(0, 19 * 4096 + 3, 1), // core 19
            edge(0, 42, 1),            // core 0
        ];
        let store = SynapseList::build(&edges, &topo, 20 * 4096).unwrap();
        let out: Vec<u32> =
            store.edges_of(0).iter().map(|&w| topo.core_of(word::dst(w))).collect();
        assert_eq!(out, vec![0, 19, 5]);
    }

    #[test]
    fn fetch_is_data_then_local_sync() {
        let topo = TopologyConfig::new(4, 16, 0.1);
        let edges = [edge(17, 3, 2), edge(17, 40, 1), edge(17, 18, 4)];
        let store = SynapseList::build(&edges, &topo, 64).unwrap();
        let seq: Vec<_> = store.fetch(17, &topo).collect();
        assert_eq!(seq.len(), 4);
        assert!(seq[..3].iter().all(|p| p.sync() == SyncClass::Data));
        assert_eq!(seq[3].sync(), SyncClass::LocalSync);
        assert_eq!(seq[3].origin(), 1); // 17 / 16
    }

    #[test]
    fn single_core_sort_falls_back_to_dst_then_input_order() {
        let topo = TopologyConfig::new(1, 64, 0.1);
        let mut edges = vec![edge(0, 9, 1), edge(0, 2, 1), edge(0, 9, 2), edge(0, 5, 1)];
        edges[2].weight = -7.0; // distinguish the two dst-9 edges
        let store = SynapseList::build(&edges, &topo, 64).unwrap();
        let dsts: Vec<u32> = store.edges_of(0).iter().map(|&w| word::dst(w)).collect();
        assert_eq!(dsts, vec![2, 5, 9, 9]);
        // Equal (distance, dst) keeps input order: weight 1.0 before -7.0.
        assert_eq!(word::weight(store.edges_of(0)[2]), 1.0);
        assert_eq!(word::weight(store.edges_of(0)[3]), -7.0);
    }

    #[test]
    fn delay_bounds_enforced() {
        let topo = TopologyConfig::new(1, 8, 0.1);
        let err = SynapseList::build(&[edge(0, 1, 0)], &topo, 8).unwrap_err();
        assert_eq!(err, StoreError::DelayOutOfRange { index: 0, delay: 0 });
        let err = SynapseList::build(&[edge(0, 1, 65)], &topo, 8).unwrap_err();
        assert_eq!(err, StoreError::DelayOutOfRange { index: 0, delay: 65 });
        assert!(SynapseList::build(&[edge(0, 1, 64)], &topo, 8).is_ok());
    }

    #[test]
    fn dst_bounds_enforced() {
        let topo = TopologyConfig::new(1, 8, 0.1);
        let err = SynapseList::build(&[edge(0, 8, 1)], &topo, 8).unwrap_err();
        assert_eq!(err, StoreError::DstOutOfRange { index: 0, dst: 8, n_neurons: 8 });
    }

    #[test]
    fn fanout_partitions_edges() {
        let topo = TopologyConfig::new(2, 8, 0.1);
        let edges = [edge(0, 1, 1), edge(3, 1, 1), edge(3, 9, 2), edge(15, 0, 3)];
        let store = SynapseList::build(&edges, &topo, 16).unwrap();
        let total: u32 = (0..16).map(|i| store.fanout(i)).sum();
        assert_eq!(total as u64, store.total_edges());
        assert_eq!(store.fanout(3), 2);
        assert_eq!(store.fanout(7), 0);
    }

    #[test]
    fn build_is_deterministic() {
        let topo = topo20();
        let edges: Vec<SynapseEdge> = (0..500)
            .map(|i| SynapseEdge {
                src: (i * 37) % 1000,
                dst: (i * 91) % (20 * 4096),
                delay: (i % 64) as u8 + 1,
                weight: i as f32 * 0.5 - 100.0,
            })
            .collect();
        let a = SynapseList::build(&edges, &topo, 20 * 4096).unwrap();
        let b = SynapseList::build(&edges, &topo, 20 * 4096).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn groups_are_proximity_monotone() {
        let topo = topo20();
        let edges: Vec<SynapseEdge> = (0..2000)
            .map(|i| SynapseEdge {
                src: (i * 13) % 100,
                dst: (i * 7919) % (20 * 4096),
                delay: 1,
                weight: 0.0,
            })
            .collect();
        let store = SynapseList::build(&edges, &topo, 20 * 4096).unwrap();
        for src in 0..100 {
            let src_core = topo.core_of(src);
            let dists: Vec<u32> = store
                .edges_of(src)
                .iter()
                .map(|&w| min_distance(src_core, topo.core_of(word::dst(w)), 20))
                .collect();
            assert!(dists.windows(2).all(|w| w[0] <= w[1]), "src {src}: {dists:?}");
        }
    }
}
