//! In-memory network model and the binary network file format.
//!
//! A network is a set of contiguous populations (LIF or Poisson-generator
//! neurons) plus a flat edge list. The on-disk layout is little-endian:
//!
//! ```text
//! magic "SPKR" | u32 version | u32 n_neurons | u32 default_cores
//! | u32 default_capacity | f64 dt_ms | u32 n_populations | u64 n_edges
//! | populations | edges
//! ```
//!
//! Each population: `u16 name_len | name | u8 kind | u32 first_id | u32 size`
//! followed by kind-specific parameters (LIF: ten f64 values, Poisson: one).
//! Each edge record is the 64-bit packet word prefixed by a 32-bit source
//! neuron ID.

use crate::neuron::LifParams;
use crate::packet::{word, SynapsePacket, SyncClass};
use crate::store::{SynapseEdge, MAX_DELAY};
use crate::topology::TopologyConfig;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: [u8; 4] = *b"SPKR";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a network file (bad magic)")]
    BadMagic,
    #[error("unsupported network file version {0}")]
    BadVersion(u32),
    #[error("populations must tile neuron IDs contiguously from 0; gap at {0}")]
    PopulationGap(u32),
    #[error("population {0}: {1}")]
    BadPopulation(String, String),
    #[error("edge {index}: {what}")]
    BadEdge { index: u64, what: String },
}

/// Population flavor and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PopKind {
    Lif {
        params: LifParams,
        /// Uniform membrane-init bounds (mV), drawn per neuron at run start.
        v_init: (f64, f64),
    },
    Poisson { rate_hz: f64 },
}

/// A contiguous run of neurons sharing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub name: String,
    pub first_id: u32,
    pub size: u32,
    pub kind: PopKind,
}

/// A complete simulatable network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    /// Timestep in ms.
    pub dt: f64,
    pub n_neurons: u32,
    /// Topology the generator sized the network for; the runner may override.
    pub default_cores: u32,
    pub default_capacity: u32,
    pub populations: Vec<Population>,
    pub edges: Vec<SynapseEdge>,
}

impl Network {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut next = 0u32;
        for p in &self.populations {
            if p.first_id != next {
                return Err(NetworkError::PopulationGap(next));
            }
            next += p.size;
            match &p.kind {
                PopKind::Lif { params, v_init } => {
                    params.validate().map_err(|e| {
                        NetworkError::BadPopulation(p.name.clone(), e.to_string())
                    })?;
                    if !(v_init.0 <= v_init.1) {
                        return Err(NetworkError::BadPopulation(
                            p.name.clone(),
                            format!("v_init bounds {:?} inverted", v_init),
                        ));
                    }
                }
                PopKind::Poisson { rate_hz } => {
                    if !(*rate_hz >= 0.0) {
                        return Err(NetworkError::BadPopulation(
                            p.name.clone(),
                            format!("rate {rate_hz} must be >= 0"),
                        ));
                    }
                }
            }
        }
        if next != self.n_neurons {
            return Err(NetworkError::PopulationGap(next));
        }
        for (index, e) in self.edges.iter().enumerate() {
            if e.src >= self.n_neurons || e.dst >= self.n_neurons {
                return Err(NetworkError::BadEdge {
                    index: index as u64,
                    what: format!("endpoint {}->{} outside network", e.src, e.dst),
                });
            }
            if e.delay == 0 || e.delay > MAX_DELAY {
                return Err(NetworkError::BadEdge {
                    index: index as u64,
                    what: format!("delay {} outside [1, {MAX_DELAY}]", e.delay),
                });
            }
        }
        Ok(())
    }

    /// Population containing `neuron`, by binary search.
    pub fn population_of(&self, neuron: u32) -> usize {
        match self.populations.binary_search_by_key(&neuron, |p| p.first_id) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// Dense neuron -> population index map for hot loops.
    pub fn pop_lookup(&self) -> Vec<u16> {
        let mut map = vec![0u16; self.n_neurons as usize];
        for (i, p) in self.populations.iter().enumerate() {
            map[p.first_id as usize..(p.first_id + p.size) as usize].fill(i as u16);
        }
        map
    }

    /// Topology to run this network on, honoring overrides.
    pub fn topology(&self, cores: Option<u32>, capacity: Option<u32>) -> TopologyConfig {
        TopologyConfig::new(
            cores.unwrap_or(self.default_cores),
            capacity.unwrap_or(self.default_capacity),
            self.dt,
        )
    }

    pub fn write(&self, path: &Path) -> Result<(), NetworkError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), NetworkError> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.n_neurons.to_le_bytes())?;
        w.write_all(&self.default_cores.to_le_bytes())?;
        w.write_all(&self.default_capacity.to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.populations.len() as u32).to_le_bytes())?;
        w.write_all(&(self.edges.len() as u64).to_le_bytes())?;
        for p in &self.populations {
            let name = p.name.as_bytes();
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name)?;
            match &p.kind {
                PopKind::Lif { params, v_init } => {
                    w.write_all(&[0u8])?;
                    w.write_all(&p.first_id.to_le_bytes())?;
                    w.write_all(&p.size.to_le_bytes())?;
                    for v in [
                        params.tau_m,
                        params.tau_syn,
                        params.e_l,
                        params.v_th,
                        params.v_reset,
                        params.r_m,
                        params.i_dc,
                        params.t_ref,
                        v_init.0,
                        v_init.1,
                    ] {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
                PopKind::Poisson { rate_hz } => {
                    w.write_all(&[1u8])?;
                    w.write_all(&p.first_id.to_le_bytes())?;
                    w.write_all(&p.size.to_le_bytes())?;
                    w.write_all(&rate_hz.to_le_bytes())?;
                }
            }
        }
        for e in &self.edges {
            let pkt = SynapsePacket::data(e.weight, e.dst, e.delay).map_err(|err| {
                NetworkError::BadEdge { index: 0, what: err.to_string() }
            })?;
            w.write_all(&e.src.to_le_bytes())?;
            w.write_all(&pkt.encode().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, NetworkError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, NetworkError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(NetworkError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(NetworkError::BadVersion(version));
        }
        let n_neurons = read_u32(r)?;
        let default_cores = read_u32(r)?;
        let default_capacity = read_u32(r)?;
        let dt = read_f64(r)?;
        let n_pops = read_u32(r)?;
        let n_edges = read_u64(r)?;
        let mut populations = Vec::with_capacity(n_pops as usize);
        for _ in 0..n_pops {
            let name_len = read_u16(r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8_lossy(&name).into_owned();
            let mut kind = [0u8; 1];
            r.read_exact(&mut kind)?;
            let first_id = read_u32(r)?;
            let size = read_u32(r)?;
            let kind = match kind[0] {
                0 => {
                    let mut v = [0f64; 10];
                    for x in &mut v {
                        *x = read_f64(r)?;
                    }
                    PopKind::Lif {
                        params: LifParams {
                            tau_m: v[0],
                            tau_syn: v[1],
                            e_l: v[2],
                            v_th: v[3],
                            v_reset: v[4],
                            r_m: v[5],
                            i_dc: v[6],
                            t_ref: v[7],
                            dt,
                        },
                        v_init: (v[8], v[9]),
                    }
                }
                1 => PopKind::Poisson { rate_hz: read_f64(r)? },
                k => {
                    return Err(NetworkError::BadPopulation(
                        name,
                        format!("unknown population kind {k}"),
                    ))
                }
            };
            populations.push(Population { name, first_id, size, kind });
        }
        let mut edges = Vec::with_capacity(n_edges as usize);
        for index in 0..n_edges {
            let src = read_u32(r)?;
            let w = read_u64(r)?;
            if word::sync(w) != SyncClass::Data {
                return Err(NetworkError::BadEdge {
                    index,
                    what: "edge record is not a DATA packet".into(),
                });
            }
            edges.push(SynapseEdge {
                src,
                dst: word::dst(w),
                delay: word::delay(w),
                weight: word::weight(w),
            });
        }
        let net = Network { dt, n_neurons, default_cores, default_capacity, populations, edges };
        net.validate()?;
        Ok(net)
    }
}

/// FNV-1a over a byte stream; identifies a network file in run metadata.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn read_u16<R: Read>(r: &mut R) -> io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
