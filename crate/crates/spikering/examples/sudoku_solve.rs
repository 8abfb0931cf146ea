//! Winner-takes-all Sudoku, end to end: build the constraint network for a
//! bundled puzzle, run it on the ring for half a second of biological
//! time, decode the loudest digit population per cell, and verify the
//! solution.
//!
//! ```text
//! cargo run --example sudoku_solve [puzzle_number] [seed]
//! ```

use spikering::sim::{run_ring, RunConfig};
use spikering::workloads::sudoku;
use std::path::Path;

fn main() {
    let puzzle_no: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let seed: u64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(1);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let spec = sudoku::SudokuSpec::from_path(&dir.join("sudoku.json")).unwrap();
    let text = std::fs::read_to_string(dir.join(format!("puzzles/puzzle{puzzle_no}.txt")))
        .expect("bundled puzzles are 1..=3");
    let givens = sudoku::parse_puzzle(&text).unwrap();

    println!("puzzle {puzzle_no} (seed {seed}):");
    println!("{}", sudoku::render_grid(&givens));

    let net = sudoku::generate(&spec, &givens).unwrap();
    println!(
        "network: {} neurons ({} digit + generators), {} synapses",
        net.n_neurons,
        sudoku::DIGIT_POPS * spec.neurons_per_digit as usize,
        net.edges.len()
    );

    let cfg = RunConfig { seed, t_bio_ms: 500.0, canonical: true, ..Default::default() };
    let start = std::time::Instant::now();
    let (rec, metrics) = run_ring(&net, &cfg).unwrap();
    println!(
        "simulated {} steps in {:.2?}: {} spikes, {} synaptic events\n",
        metrics.steps,
        start.elapsed(),
        metrics.total_spikes,
        metrics.synaptic_events
    );

    let grid = sudoku::decode(&rec, 100.0, spec.neurons_per_digit);
    println!("decoded (final 100 ms):");
    println!("{}", sudoku::render_grid(&grid));
    let (ok, violations) = sudoku::validate_grid(&grid, &givens);
    if ok {
        println!("solved: every row, column, and box is a permutation of 1..9");
    } else {
        println!("unsolved: {}", violations.join("; "));
        println!("(stochastic dynamics; retry with another seed)");
        std::process::exit(3);
    }
}
