//! Cortical-microcircuit workflows: exact scaled neuron counts, streamed
//! full-scale generator fanout statistics, and a desk-scale dynamics
//! comparison between the concurrent ring and the sequential oracle.
//!
//! ```text
//! cargo run --example microcircuit_stats            # desk scale (1/16)
//! cargo run --example microcircuit_stats -- --full  # adds full-scale fanout streaming
//! ```

use spikering::oracle::run_oracle;
use spikering::sim::{run_ring, RunConfig};
use spikering::stats;
use spikering::workloads::microcircuit::{self, MicrocircuitConfig};
use std::path::Path;

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let cfg_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/microcircuit.json");
    let cfg = MicrocircuitConfig::from_path(&cfg_path).unwrap();

    for (scale, label) in [(1.0, "full"), (0.5, "half"), (0.25, "quarter"), (0.0625, "1/16")] {
        let sizes = microcircuit::scaled_sizes(&cfg, scale).unwrap();
        let total: u32 = sizes.iter().sum();
        println!("{label:>8} scale: {total} neurons {sizes:?}");
    }

    if full {
        println!("\nstreaming full-scale connectivity (hundreds of millions of draws)...");
        let start = std::time::Instant::now();
        let st = microcircuit::fanout_stats(&cfg, 1.0, 1).unwrap();
        println!(
            "full scale: {} synapses over {} neurons in {:.1?}; fanout mean {:.1}, max {}",
            st.n_edges,
            st.n_neurons,
            start.elapsed(),
            st.mean_fanout,
            st.max_fanout
        );
        for (name, mean) in &st.per_pop_mean {
            println!("  {name:<6} mean fanout {mean:.1}");
        }
    }

    // Desk-scale dynamics: concurrent ring vs oracle over one second.
    let scale = 1.0 / 16.0;
    println!("\ngenerating 1/16-scale network and simulating 1 s...");
    let net = microcircuit::generate(&cfg, scale, 5).unwrap();
    let run = RunConfig {
        cores: Some(10),
        capacity: Some(512),
        devices: 2,
        seed: 3,
        t_bio_ms: 1000.0,
        canonical: false,
        workers: 4,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let (ring, metrics) = run_ring(&net, &run).unwrap();
    let t1 = std::time::Instant::now();
    let (oracle, _) = run_oracle(&net, &run).unwrap();
    println!(
        "ring {:.1?} ({} hops, {} inter-device), oracle {:.1?}",
        t1 - t0,
        metrics.data_hops,
        metrics.inter_device_crossings,
        t1.elapsed()
    );

    let (cmp, ring_stats, _) = stats::compare(&ring, &oracle, &net, 2.0, 1000, 11).unwrap();
    println!("\nring statistics:\n{}", ring_stats.render_text());
    println!("ring vs oracle deltas:\n{}", cmp.render_text());
}
