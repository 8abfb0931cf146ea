//! Ring topology: core IDs, neuron-to-core mapping, and shortest-route
//! direction selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("topology needs at least one core and capacity >= 1")]
    Degenerate,
    #[error("{n_cores} cores x {capacity} capacity = {total} slots < {needed} neurons")]
    TooSmall { n_cores: u32, capacity: u32, total: u64, needed: u32 },
    #[error("device count {devices} does not divide core count {n_cores}")]
    UnevenDevices { devices: u32, n_cores: u32 },
}

/// Static layout of the ring: core count, per-core neuron capacity, and
/// which ring edges cross a device boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub n_cores: u32,
    pub core_capacity: u32,
    /// Ring-edge indices marked inter-device; edge `i` joins core `i` and
    /// core `(i + 1) % n_cores`.
    pub device_boundaries: Vec<u32>,
    /// Timestep in ms.
    pub dt: f64,
}

impl TopologyConfig {
    pub fn new(n_cores: u32, core_capacity: u32, dt: f64) -> Self {
        Self { n_cores, core_capacity, device_boundaries: Vec::new(), dt }
    }

    /// Spread the ring evenly over `devices` devices. The edge leaving the
    /// last core of each device is a boundary edge.
    pub fn with_devices(mut self, devices: u32) -> Result<Self, TopologyError> {
        if devices == 0 || !self.n_cores.is_multiple_of(devices) {
            return Err(TopologyError::UnevenDevices { devices, n_cores: self.n_cores });
        }
        let per = self.n_cores / devices;
        self.device_boundaries =
            if devices == 1 { Vec::new() } else { (1..=devices).map(|d| d * per - 1).collect() };
        Ok(self)
    }

    pub fn validate(&self, n_neurons: u32) -> Result<(), TopologyError> {
        if self.n_cores == 0 || self.core_capacity == 0 {
            return Err(TopologyError::Degenerate);
        }
        let total = self.n_cores as u64 * self.core_capacity as u64;
        if total < n_neurons as u64 {
            return Err(TopologyError::TooSmall {
                n_cores: self.n_cores,
                capacity: self.core_capacity,
                total,
                needed: n_neurons,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn core_of(&self, neuron: u32) -> u32 {
        neuron / self.core_capacity
    }

    #[inline]
    pub fn local_index(&self, neuron: u32) -> u32 {
        neuron % self.core_capacity
    }

    #[inline]
    pub fn is_boundary_edge(&self, edge: u32) -> bool {
        self.device_boundaries.contains(&edge)
    }
}

/// Travel direction chosen at injection time; fixed for the packet's life.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Local,
    Left,
    Right,
}

/// Hop counts around the ring in each direction: `(left, right)`.
#[inline]
pub fn ring_distance(src_core: u32, dst_core: u32, n_cores: u32) -> (u32, u32) {
    debug_assert!(src_core < n_cores && dst_core < n_cores);
    let right = (dst_core + n_cores - src_core) % n_cores;
    let left = (src_core + n_cores - dst_core) % n_cores;
    (left, right)
}

/// Minimum hop count between two cores.
#[inline]
pub fn min_distance(src_core: u32, dst_core: u32, n_cores: u32) -> u32 {
    let (l, r) = ring_distance(src_core, dst_core, n_cores);
    l.min(r)
}

/// Shorter-route direction; antipodal ties break RIGHT.
#[inline]
pub fn route_direction(src_core: u32, dst_core: u32, n_cores: u32) -> Direction {
    if src_core == dst_core {
        return Direction::Local;
    }
    let (left, right) = ring_distance(src_core, dst_core, n_cores);
    if right <= left {
        Direction::Right
    } else {
        Direction::Left
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_core_distance_is_zero() {
        assert_eq!(ring_distance(3, 3, 20), (0, 0));
        assert_eq!(route_direction(3, 3, 20), Direction::Local);
    }

    #[test]
    fn twenty_core_examples() {
        assert_eq!(ring_distance(0, 5, 20), (15, 5));
        assert_eq!(route_direction(0, 5, 20), Direction::Right);
        assert_eq!(ring_distance(0, 19, 20), (1, 19));
        assert_eq!(route_direction(0, 19, 20), Direction::Left);
    }

    #[test]
    fn antipodal_tie_goes_right() {
        assert_eq!(ring_distance(0, 10, 20), (10, 10));
        assert_eq!(route_direction(0, 10, 20), Direction::Right);
    }

    #[test]
    fn distances_are_symmetric_complements() {
        for n in [1u32, 2, 3, 7, 20] {
            for s in 0..n {
                for d in 0..n {
                    let (l, r) = ring_distance(s, d, n);
                    assert_eq!((l + r) % n, 0);
                    assert!(min_distance(s, d, n) <= n / 2);
                }
            }
        }
    }

    #[test]
    fn device_boundaries_split_evenly() {
        let topo = TopologyConfig::new(20, 4096, 0.1).with_devices(2).unwrap();
        assert_eq!(topo.device_boundaries, vec![9, 19]);
        assert!(topo.is_boundary_edge(9) && topo.is_boundary_edge(19));
        assert!(!topo.is_boundary_edge(0));
        assert!(TopologyConfig::new(20, 1, 0.1).with_devices(3).is_err());
    }

    #[test]
    fn capacity_check() {
        let topo = TopologyConfig::new(4, 256, 0.1);
        assert!(topo.validate(1024).is_ok());
        assert!(topo.validate(1025).is_err());
    }
}
