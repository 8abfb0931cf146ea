//! Layered cortical-microcircuit generator.
//!
//! Populations, pairwise connection probabilities, weight and delay
//! distributions, and DC drives are loaded from a JSON config (the repo
//! ships one transcribed from the standard Potjans-Diesmann model).
//! Connectivity is pairwise Bernoulli per ordered neuron pair (autapses
//! excluded), sampled by geometric gap-skipping so generation cost is
//! proportional to the edge count. Delays are quantized to timesteps and
//! clipped to the accumulator range.
//!
//! Neuron counts scale per population by round-half-to-even of
//! `size * scale`, which reproduces the reference counts at full, half,
//! and quarter scale exactly.
//!
//! [`fanout_stats`] streams the identical edge sequence without
//! materializing it, so full-scale generator statistics run in constant
//! memory.

use super::{GenError, NeuronSpec};
use crate::network::{Network, PopKind, Population};
use crate::store::SynapseEdge;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub name: String,
    pub size: u32,
    pub neuron: NeuronSpec,
    /// Uniform membrane-init bounds (mV).
    pub v_init: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionSpec {
    pub src: String,
    pub dst: String,
    /// Pairwise Bernoulli connection probability.
    pub p: f64,
    /// Weight distribution (pA), normal, clipped to the mean's sign.
    pub weight_mean: f64,
    pub weight_sd: f64,
    /// Delay distribution (ms), normal, quantized to steps in [1, 64].
    pub delay_mean_ms: f64,
    pub delay_sd_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicrocircuitConfig {
    pub dt_ms: f64,
    /// Core capacity the generator sizes the default topology for.
    pub core_capacity: u32,
    pub populations: Vec<PopulationSpec>,
    pub connections: Vec<ConnectionSpec>,
}

impl MicrocircuitConfig {
    pub fn from_path(path: &Path) -> Result<Self, GenError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.dt_ms > 0.0) {
            return Err(GenError::Invalid(format!("dt {} must be positive", self.dt_ms)));
        }
        for (i, c) in self.connections.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.p) {
                return Err(GenError::Invalid(format!(
                    "connection {i} probability {} outside [0, 1]",
                    c.p
                )));
            }
            for name in [&c.src, &c.dst] {
                if !self.populations.iter().any(|p| &p.name == name) {
                    return Err(GenError::UnknownPopulation(i, name.clone()));
                }
            }
        }
        Ok(())
    }

    fn pop_index(&self, name: &str) -> usize {
        self.populations.iter().position(|p| p.name == name).expect("validated name")
    }
}

/// Per-population sizes at the given scale: round-half-to-even of
/// `size * scale`. Faults if a nonempty population empties.
pub fn scaled_sizes(cfg: &MicrocircuitConfig, scale: f64) -> Result<Vec<u32>, GenError> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(GenError::Invalid(format!("scale {scale} outside (0, 1]")));
    }
    let mut sizes = Vec::with_capacity(cfg.populations.len());
    for p in &cfg.populations {
        let n = (p.size as f64 * scale).round_ties_even() as u32;
        if n == 0 && p.size > 0 {
            return Err(GenError::EmptiedPopulation(p.name.clone(), scale));
        }
        sizes.push(n);
    }
    Ok(sizes)
}

/// Walk every edge of the scaled network in generation order. Both
/// [`generate`] and [`fanout_stats`] consume exactly this sequence.
fn for_each_edge(
    cfg: &MicrocircuitConfig,
    sizes: &[u32],
    first_ids: &[u32],
    seed: u64,
    mut emit: impl FnMut(SynapseEdge),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = cfg.dt_ms;
    for c in &cfg.connections {
        let si = cfg.pop_index(&c.src);
        let di = cfg.pop_index(&c.dst);
        let n_src = sizes[si] as u64;
        let n_dst = sizes[di] as u64;
        let total = n_src * n_dst;
        if total == 0 || c.p <= 0.0 {
            continue;
        }
        let weight = Normal::new(c.weight_mean, c.weight_sd.max(0.0)).unwrap();
        let delay = Normal::new(c.delay_mean_ms, c.delay_sd_ms.max(0.0)).unwrap();
        let ln_q = if c.p < 1.0 { (1.0 - c.p).ln() } else { f64::NEG_INFINITY };
        let mut pos: u64 = 0;
        loop {
            if c.p < 1.0 {
                let u: f64 = rng.random();
                // Geometric gap; u == 0 saturates and ends the pair scan.
                pos = pos.saturating_add((u.ln() / ln_q) as u64);
            }
            if pos >= total {
                break;
            }
            let i = (pos / n_dst) as u32;
            let j = (pos % n_dst) as u32;
            pos += 1;
            if si == di && i == j {
                continue; // no autapses
            }
            let mut w = weight.sample(&mut rng);
            w = if c.weight_mean >= 0.0 { w.max(0.0) } else { w.min(0.0) };
            let d_ms = delay.sample(&mut rng);
            let d_steps = ((d_ms / dt).round_ties_even() as i64).clamp(1, 64) as u8;
            emit(SynapseEdge {
                src: first_ids[si] + i,
                dst: first_ids[di] + j,
                delay: d_steps,
                weight: w as f32,
            });
        }
    }
}

fn layout(sizes: &[u32]) -> (Vec<u32>, u32) {
    let mut first_ids = Vec::with_capacity(sizes.len());
    let mut next = 0u32;
    for &s in sizes {
        first_ids.push(next);
        next += s;
    }
    (first_ids, next)
}

/// Generate the scaled network. Deterministic: `(config, scale, seed)`
/// yields a byte-identical network file.
pub fn generate(
    cfg: &MicrocircuitConfig,
    scale: f64,
    seed: u64,
) -> Result<Network, GenError> {
    cfg.validate()?;
    let sizes = scaled_sizes(cfg, scale)?;
    let (first_ids, n_neurons) = layout(&sizes);
    let populations = cfg
        .populations
        .iter()
        .zip(&sizes)
        .zip(&first_ids)
        .map(|((spec, &size), &first_id)| Population {
            name: spec.name.clone(),
            first_id,
            size,
            kind: PopKind::Lif {
                params: spec.neuron.to_params(cfg.dt_ms),
                v_init: (spec.v_init[0], spec.v_init[1]),
            },
        })
        .collect();
    let mut edges = Vec::new();
    for_each_edge(cfg, &sizes, &first_ids, seed, |e| edges.push(e));
    let default_capacity = cfg.core_capacity;
    let default_cores = n_neurons.div_ceil(default_capacity).max(1);
    Ok(Network {
        dt: cfg.dt_ms,
        n_neurons,
        default_cores,
        default_capacity,
        populations,
        edges,
    })
}

/// Generator fanout statistics without materializing edges.
#[derive(Debug, Clone)]
pub struct FanoutStats {
    pub n_neurons: u32,
    pub n_edges: u64,
    pub mean_fanout: f64,
    pub max_fanout: u32,
    /// `(population name, mean fanout of its neurons)`.
    pub per_pop_mean: Vec<(String, f64)>,
}

/// Stream the same edge sequence as [`generate`] and reduce it to
/// per-source fanout counts. Constant memory in the edge count.
pub fn fanout_stats(
    cfg: &MicrocircuitConfig,
    scale: f64,
    seed: u64,
) -> Result<FanoutStats, GenError> {
    cfg.validate()?;
    let sizes = scaled_sizes(cfg, scale)?;
    let (first_ids, n_neurons) = layout(&sizes);
    let mut counts = vec![0u32; n_neurons as usize];
    let mut n_edges = 0u64;
    for_each_edge(cfg, &sizes, &first_ids, seed, |e| {
        counts[e.src as usize] += 1;
        n_edges += 1;
    });
    let mean_fanout = if n_neurons > 0 { n_edges as f64 / n_neurons as f64 } else { 0.0 };
    let max_fanout = counts.iter().copied().max().unwrap_or(0);
    let per_pop_mean = cfg
        .populations
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let lo = first_ids[i] as usize;
            let hi = lo + sizes[i] as usize;
            let sum: u64 = counts[lo..hi].iter().map(|&c| c as u64).sum();
            (p.name.clone(), if hi > lo { sum as f64 / (hi - lo) as f64 } else { 0.0 })
        })
        .collect();
    Ok(FanoutStats { n_neurons, n_edges, mean_fanout, max_fanout, per_pop_mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pop_config() -> MicrocircuitConfig {
        let neuron = NeuronSpec {
            c_m: 250.0,
            tau_m: 10.0,
            tau_syn: 0.5,
            e_l: -65.0,
            v_th: -50.0,
            v_reset: -65.0,
            t_ref: 2.0,
            i_dc: 300.0,
        };
        MicrocircuitConfig {
            dt_ms: 0.1,
            core_capacity: 64,
            populations: vec![
                PopulationSpec {
                    name: "A".into(),
                    size: 80,
                    neuron,
                    v_init: [-65.0, -55.0],
                },
                PopulationSpec {
                    name: "B".into(),
                    size: 20,
                    neuron,
                    v_init: [-65.0, -55.0],
                },
            ],
            connections: vec![
                ConnectionSpec {
                    src: "A".into(),
                    dst: "B".into(),
                    p: 0.2,
                    weight_mean: 80.0,
                    weight_sd: 8.0,
                    delay_mean_ms: 1.5,
                    delay_sd_ms: 0.75,
                },
                ConnectionSpec {
                    src: "B".into(),
                    dst: "A".into(),
                    p: 0.0,
                    weight_mean: -300.0,
                    weight_sd: 30.0,
                    delay_mean_ms: 0.75,
                    delay_sd_ms: 0.375,
                },
                ConnectionSpec {
                    src: "A".into(),
                    dst: "A".into(),
                    p: 0.05,
                    weight_mean: 80.0,
                    weight_sd: 8.0,
                    delay_mean_ms: 1.5,
                    delay_sd_ms: 0.75,
                },
            ],
        }
    }

    #[test]
    fn zero_probability_pairs_make_zero_edges() {
        let net = generate(&two_pop_config(), 1.0, 1).unwrap();
        assert!(net.edges.iter().all(|e| !(e.src >= 80 && e.dst < 80)));
        // But A->B edges exist.
        assert!(net.edges.iter().any(|e| e.src < 80 && e.dst >= 80));
    }

    #[test]
    fn edge_count_tracks_expectation() {
        let net = generate(&two_pop_config(), 1.0, 7).unwrap();
        // E = 0.2*80*20 + 0.05*(80*80 - 80) = 320 + 316 = 636; sd ~ 23.
        let n = net.edges.len() as f64;
        assert!((n - 636.0).abs() < 100.0, "edges {n}");
    }

    #[test]
    fn no_autapses() {
        let net = generate(&two_pop_config(), 1.0, 3).unwrap();
        assert!(net.edges.iter().all(|e| e.src != e.dst));
    }

    #[test]
    fn weights_keep_their_sign_and_delays_quantize() {
        let net = generate(&two_pop_config(), 1.0, 5).unwrap();
        for e in &net.edges {
            assert!(e.weight >= 0.0);
            assert!((1..=64).contains(&e.delay));
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate(&two_pop_config(), 0.5, 11).unwrap();
        let b = generate(&two_pop_config(), 0.5, 11).unwrap();
        assert_eq!(a, b);
        let c = generate(&two_pop_config(), 0.5, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stats_match_materialized_generation() {
        let cfg = two_pop_config();
        let net = generate(&cfg, 1.0, 9).unwrap();
        let stats = fanout_stats(&cfg, 1.0, 9).unwrap();
        assert_eq!(stats.n_edges, net.edges.len() as u64);
        let mut counts = vec![0u32; net.n_neurons as usize];
        for e in &net.edges {
            counts[e.src as usize] += 1;
        }
        assert_eq!(stats.max_fanout, counts.iter().copied().max().unwrap());
    }

    #[test]
    fn empty_population_at_tiny_scale_faults() {
        let err = scaled_sizes(&two_pop_config(), 0.001).unwrap_err();
        assert!(matches!(err, GenError::EmptiedPopulation(_, _)));
    }

    #[test]
    fn scaling_rounds_half_to_even() {
        let mut cfg = two_pop_config();
        cfg.populations[0].size = 5; // 5 * 0.5 = 2.5 -> 2
        cfg.populations[1].size = 7; // 7 * 0.5 = 3.5 -> 4
        assert_eq!(scaled_sizes(&cfg, 0.5).unwrap(), vec![2, 4]);
    }
}
