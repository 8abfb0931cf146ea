//! Barrier and backpressure stress: a 20-core ring split over two devices
//! under heavy random traffic, with shallow queues to force stalls. Prints
//! conservation counters and per-edge traffic.
//!
//! ```text
//! cargo run --example barrier_stress
//! ```

use spikering::sim::{run_ring, RunConfig};
use spikering::workloads::random::{generate, RandomNetSpec};

fn main() {
    let net = generate(&RandomNetSpec {
        n_cores: 20,
        capacity: 64,
        max_fanout: 48,
        poisson_fraction: 0.5,
        rate_range_hz: (100.0, 400.0),
        seed: 99,
        ..Default::default()
    });
    let cfg = RunConfig {
        t_bio_ms: 100.0,
        canonical: true,
        workers: 4,
        queue_capacity: 64,
        devices: 2,
        ..Default::default()
    };
    let (rec, m) = run_ring(&net, &cfg).unwrap();
    println!(
        "{} cores x {} neurons, {} edges, {} steps",
        20,
        64,
        net.edges.len(),
        m.steps
    );
    println!(
        "spikes {}  synaptic events {}  injected {}  hops {} (expected {})",
        m.total_spikes, m.synaptic_events, m.data_injected, m.data_hops, m.expected_data_hops
    );
    println!(
        "token hops {}  stalls {}  peak queue {}  inter-device crossings {}",
        m.token_hops, m.stall_events, m.max_queue_occupancy, m.inter_device_crossings
    );
    assert_eq!(m.data_hops, m.expected_data_hops, "no packet strayed from its shortest route");
    assert_eq!(rec.events.len() as u64, m.total_spikes);

    println!("\nedge   right-traffic   left-traffic");
    for e in 0..20usize {
        let marker = if e == 9 || e == 19 { "  <- device boundary" } else { "" };
        println!(
            "{e:>4} {:>14} {:>14}{marker}",
            m.edge_traffic_right[e], m.edge_traffic_left[e]
        );
    }
}
