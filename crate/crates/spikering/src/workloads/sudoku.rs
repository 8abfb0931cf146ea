//! Winner-takes-all Sudoku network: generation, decoding, validation.
//!
//! Each of the 81 cells holds nine digit populations of five neurons.
//! Mutually exclusive populations — same cell/different digit, and same
//! digit within a row, column, or 3x3 box — inhibit each other all-to-all.
//! Every digit neuron receives an independent Poisson noise source; the
//! five neurons of each given digit also receive independent Poisson
//! stimulus sources. The solution is decoded as the digit population with
//! the highest spike count per cell over the final window.

use super::{GenError, NeuronSpec};
use crate::network::{Network, PopKind, Population};
use crate::recording::SpikeRecording;
use crate::store::SynapseEdge;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const GRID: usize = 9;
pub const CELLS: usize = 81;
/// Digit populations: one per (cell, digit).
pub const DIGIT_POPS: usize = CELLS * GRID;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SudokuSpec {
    pub dt_ms: f64,
    pub neurons_per_digit: u32,
    pub stim_rate_hz: f64,
    pub noise_rate_hz: f64,
    /// Constraint-edge weight (pA); negative.
    pub w_inh: f32,
    pub w_stim: f32,
    pub w_noise: f32,
    /// Delay of every edge (ms).
    pub delay_ms: f64,
    pub neuron: NeuronSpec,
    pub v_init: [f64; 2],
    pub core_capacity: u32,
}

impl SudokuSpec {
    pub fn from_path(path: &Path) -> Result<Self, GenError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn delay_steps(&self) -> Result<u8, GenError> {
        let d = (self.delay_ms / self.dt_ms).round_ties_even() as i64;
        if !(1..=64).contains(&d) {
            return Err(GenError::Invalid(format!(
                "delay {} ms quantizes to {d} steps, outside [1, 64]",
                self.delay_ms
            )));
        }
        Ok(d as u8)
    }
}

/// Parse an 81-character puzzle string; `0` or `.` is an empty cell.
pub fn parse_puzzle(s: &str) -> Result<[u8; CELLS], GenError> {
    let cells: Vec<u8> = s
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '.' | '0' => Ok(0),
            '1'..='9' => Ok(c as u8 - b'0'),
            other => Err(GenError::BadPuzzle(format!("character {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    cells
        .try_into()
        .map_err(|v: Vec<u8>| GenError::BadPuzzle(format!("{} cells", v.len())))
}

/// Cells in the same row, column, or box as `cell` (excluding it).
fn peers(cell: usize) -> Vec<usize> {
    let (r, c) = (cell / GRID, cell % GRID);
    let mut out = Vec::with_capacity(20);
    for k in 0..GRID {
        if k != c {
            out.push(r * GRID + k);
        }
        if k != r {
            out.push(k * GRID + c);
        }
    }
    let (br, bc) = (r / 3 * 3, c / 3 * 3);
    for rr in br..br + 3 {
        for cc in bc..bc + 3 {
            if rr != r && cc != c {
                out.push(rr * GRID + cc);
            }
        }
    }
    out
}

/// Digit populations mutually exclusive with `(cell, digit)`: the eight
/// other digits of the cell plus the same digit in the twenty peer cells.
/// Population index = `cell * 9 + digit`.
pub fn exclusive_pops(pop: usize) -> Vec<usize> {
    let (cell, digit) = (pop / GRID, pop % GRID);
    let mut out = Vec::with_capacity(28);
    for d in 0..GRID {
        if d != digit {
            out.push(cell * GRID + d);
        }
    }
    for peer in peers(cell) {
        out.push(peer * GRID + digit);
    }
    out.sort_unstable();
    out
}

/// Reject givens that already violate a constraint.
pub fn validate_givens(givens: &[u8; CELLS]) -> Result<(), GenError> {
    for cell in 0..CELLS {
        let d = givens[cell];
        if d == 0 {
            continue;
        }
        if d > 9 {
            return Err(GenError::InconsistentGivens(format!("cell {cell} holds {d}")));
        }
        for peer in peers(cell) {
            if givens[peer] == d {
                return Err(GenError::InconsistentGivens(format!(
                    "digit {d} repeats at cells {cell} and {peer}"
                )));
            }
        }
    }
    Ok(())
}

/// Build the solver network for one puzzle. The structure is fully
/// determined by the parameter set and givens; randomness enters only at
/// run time.
pub fn generate(spec: &SudokuSpec, givens: &[u8; CELLS]) -> Result<Network, GenError> {
    validate_givens(givens)?;
    if spec.w_inh >= 0.0 {
        return Err(GenError::Invalid(format!("inhibitory weight {} must be negative", spec.w_inh)));
    }
    let npd = spec.neurons_per_digit;
    if npd == 0 {
        return Err(GenError::Invalid("neurons_per_digit must be >= 1".into()));
    }
    let delay = spec.delay_steps()?;
    let n_digit = DIGIT_POPS as u32 * npd;
    let n_noise = n_digit; // one independent source per digit neuron
    let givens_list: Vec<(usize, u8)> = (0..CELLS)
        .filter(|&c| givens[c] != 0)
        .map(|c| (c, givens[c]))
        .collect();
    let n_stim = givens_list.len() as u32 * npd;
    let n_neurons = n_digit + n_noise + n_stim;

    let mut edges = Vec::new();
    // Constraint edges: all-to-all between every ordered exclusive pair.
    for src_pop in 0..DIGIT_POPS {
        for dst_pop in exclusive_pops(src_pop) {
            for i in 0..npd {
                for j in 0..npd {
                    edges.push(SynapseEdge {
                        src: src_pop as u32 * npd + i,
                        dst: dst_pop as u32 * npd + j,
                        delay,
                        weight: spec.w_inh,
                    });
                }
            }
        }
    }
    // Per-neuron noise.
    for n in 0..n_noise {
        edges.push(SynapseEdge { src: n_digit + n, dst: n, delay, weight: spec.w_noise });
    }
    // Stimulus onto each given digit's neurons.
    for (k, &(cell, d)) in givens_list.iter().enumerate() {
        let pop = cell * GRID + (d as usize - 1);
        for i in 0..npd {
            edges.push(SynapseEdge {
                src: n_digit + n_noise + k as u32 * npd + i,
                dst: pop as u32 * npd + i,
                delay,
                weight: spec.w_stim,
            });
        }
    }

    let mut populations = vec![
        Population {
            name: "digits".into(),
            first_id: 0,
            size: n_digit,
            kind: PopKind::Lif {
                params: spec.neuron.to_params(spec.dt_ms),
                v_init: (spec.v_init[0], spec.v_init[1]),
            },
        },
        Population {
            name: "noise".into(),
            first_id: n_digit,
            size: n_noise,
            kind: PopKind::Poisson { rate_hz: spec.noise_rate_hz },
        },
    ];
    if n_stim > 0 {
        populations.push(Population {
            name: "stim".into(),
            first_id: n_digit + n_noise,
            size: n_stim,
            kind: PopKind::Poisson { rate_hz: spec.stim_rate_hz },
        });
    }
    let default_capacity = spec.core_capacity;
    Ok(Network {
        dt: spec.dt_ms,
        n_neurons,
        default_cores: n_neurons.div_ceil(default_capacity).max(1),
        default_capacity,
        populations,
        edges,
    })
}

/// Decode a recording: per cell, the digit population with the highest
/// spike count over the final `window_ms`; ties (including all-silent)
/// decode to 0 (undecided).
pub fn decode(rec: &SpikeRecording, window_ms: f64, npd: u32) -> [u8; CELLS] {
    let window_steps = (window_ms / rec.dt).round() as u64;
    let from = rec.steps.saturating_sub(window_steps);
    let mut counts = [[0u32; GRID]; CELLS];
    for &(t, n) in &rec.events {
        let t = t as u64;
        if t < from || n >= DIGIT_POPS as u32 * npd {
            continue;
        }
        let pop = (n / npd) as usize;
        counts[pop / GRID][pop % GRID] += 1;
    }
    let mut grid = [0u8; CELLS];
    for cell in 0..CELLS {
        let best = *counts[cell].iter().max().unwrap();
        if best == 0 {
            continue; // silent cell stays undecided
        }
        let winners: Vec<usize> =
            (0..GRID).filter(|&d| counts[cell][d] == best).collect();
        if winners.len() == 1 {
            grid[cell] = winners[0] as u8 + 1;
        } // ties stay 0
    }
    grid
}

/// Check a decoded grid: each row, column, and box must be a permutation
/// of 1..9, and every given must be preserved. Returns the violations.
pub fn validate_grid(grid: &[u8; CELLS], givens: &[u8; CELLS]) -> (bool, Vec<String>) {
    let mut violations = Vec::new();
    let undecided = grid.iter().filter(|&&d| d == 0).count();
    if undecided > 0 {
        violations.push(format!("{undecided} undecided cells"));
    }
    for (what, cells) in groups() {
        let mut seen = [false; 10];
        for &cell in &cells {
            let d = grid[cell] as usize;
            if d == 0 {
                continue;
            }
            if seen[d] {
                violations.push(format!("digit {d} repeats in {what}"));
            }
            seen[d] = true;
        }
    }
    for cell in 0..CELLS {
        if givens[cell] != 0 && grid[cell] != givens[cell] {
            violations.push(format!(
                "given {} at cell {cell} decoded as {}",
                givens[cell], grid[cell]
            ));
        }
    }
    (violations.is_empty(), violations)
}

fn groups() -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::with_capacity(27);
    for r in 0..GRID {
        out.push((format!("row {r}"), (0..GRID).map(|c| r * GRID + c).collect()));
    }
    for c in 0..GRID {
        out.push((format!("column {c}"), (0..GRID).map(|r| r * GRID + c).collect()));
    }
    for b in 0..GRID {
        let (br, bc) = (b / 3 * 3, b % 3 * 3);
        let cells = (0..GRID).map(|k| (br + k / 3) * GRID + bc + k % 3).collect();
        out.push((format!("box {b}"), cells));
    }
    out
}

/// Render a grid for terminal output.
pub fn render_grid(grid: &[u8; CELLS]) -> String {
    let mut out = String::new();
    for r in 0..GRID {
        if r % 3 == 0 && r > 0 {
            out.push_str("------+-------+------\n");
        }
        for c in 0..GRID {
            if c % 3 == 0 && c > 0 {
                out.push_str("| ");
            }
            let d = grid[r * GRID + c];
            out.push(if d == 0 { '.' } else { (b'0' + d) as char });
            out.push(' ');
        }
        out.pop();
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUZZLE1: &str = ".58.3..2.4.2...9.5..7...68.29..54.7.5...62.....381.25.1.9..3.6486549.13..7...6...";
    const SOLUTION1: &str = "658931427432678915917245683296354871581762349743819256129583764865497132374126598";

    #[test]
    fn puzzle_parsing() {
        let g = parse_puzzle(PUZZLE1).unwrap();
        assert_eq!(g.iter().filter(|&&d| d != 0).count(), 38);
        assert!(parse_puzzle("123").is_err());
        assert!(parse_puzzle(&"x".repeat(81)).is_err());
        // Whitespace is ignored.
        let spaced: String =
            PUZZLE1.chars().enumerate().flat_map(|(i, c)| {
                if i % 9 == 0 { vec![' ', c] } else { vec![c] }
            }).collect();
        assert_eq!(parse_puzzle(&spaced).unwrap(), g);
    }

    #[test]
    fn exclusivity_has_28_populations_and_is_symmetric() {
        for pop in [0usize, 40 * 9 + 4, 728] {
            let ex = exclusive_pops(pop);
            assert_eq!(ex.len(), 28);
            assert!(!ex.contains(&pop));
            for &other in &ex {
                assert!(exclusive_pops(other).contains(&pop));
            }
        }
    }

    #[test]
    fn inconsistent_givens_rejected() {
        let mut g = [0u8; CELLS];
        g[0] = 5;
        g[8] = 5; // same row
        assert!(validate_givens(&g).is_err());
        g[8] = 0;
        g[72] = 5; // same column
        assert!(validate_givens(&g).is_err());
        g[72] = 0;
        g[10] = 5; // same box
        assert!(validate_givens(&g).is_err());
        g[10] = 0;
        assert!(validate_givens(&g).is_ok());
    }

    fn spec() -> SudokuSpec {
        SudokuSpec {
            dt_ms: 0.1,
            neurons_per_digit: 5,
            stim_rate_hz: 200.0,
            noise_rate_hz: 200.0,
            w_inh: -100.0,
            w_stim: 200.0,
            w_noise: 200.0,
            delay_ms: 1.0,
            neuron: NeuronSpec {
                c_m: 250.0,
                tau_m: 20.0,
                tau_syn: 5.0,
                e_l: -65.0,
                v_th: -50.0,
                v_reset: -70.0,
                t_ref: 2.0,
                i_dc: 200.0,
            },
            v_init: [-65.0, -55.0],
            core_capacity: 4096,
        }
    }

    #[test]
    fn network_shape_and_edge_counts() {
        let givens = parse_puzzle(PUZZLE1).unwrap();
        let net = generate(&spec(), &givens).unwrap();
        net.validate().unwrap();
        // 3645 digit neurons + 3645 noise + 5 per given.
        assert_eq!(net.n_neurons, 3645 + 3645 + 38 * 5);
        // Constraint edges: 729 pops x 28 exclusive x 25 pairs.
        let inh = net.edges.iter().filter(|e| e.weight < 0.0).count();
        assert_eq!(inh, 729 * 28 * 25);
        // Per-population inbound inhibition: (8 + 20) x 25 = 700.
        let pop = 40 * 9 + 4;
        let lo = pop as u32 * 5;
        let inbound = net
            .edges
            .iter()
            .filter(|e| e.weight < 0.0 && e.dst >= lo && e.dst < lo + 5)
            .count();
        assert_eq!(inbound, 700);
        assert_eq!(net.edges.len(), 729 * 28 * 25 + 3645 + 38 * 5);
    }

    #[test]
    fn empty_grid_has_noise_but_no_stimulus() {
        let net = generate(&spec(), &[0u8; CELLS]).unwrap();
        assert_eq!(net.n_neurons, 3645 * 2);
        assert_eq!(net.populations.len(), 2);
        let noise_edges =
            net.edges.iter().filter(|e| e.src >= 3645 && e.weight > 0.0).count();
        assert_eq!(noise_edges, 3645);
    }

    #[test]
    fn decode_picks_the_loudest_population_and_flags_ties() {
        let mut rec = SpikeRecording::new(1000, 0.1);
        // Cell 0: digit 3 (pop 2) spikes thrice, digit 1 once.
        rec.events = vec![(900, 2 * 5), (910, 2 * 5 + 1), (920, 2 * 5 + 3), (905, 0)];
        rec.events.sort_unstable();
        let grid = decode(&rec, 100.0, 5);
        assert_eq!(grid[0], 3);
        assert_eq!(grid[1], 0);
        // Tie between digits 1 and 2 of cell 1 -> undecided.
        let mut rec = SpikeRecording::new(1000, 0.1);
        rec.events = vec![(950, 9 * 5), (951, 10 * 5)];
        assert_eq!(decode(&rec, 100.0, 5)[1], 0);
        // Spikes before the final window are ignored.
        let mut rec = SpikeRecording::new(5000, 0.1);
        rec.events = vec![(10, 0)];
        assert_eq!(decode(&rec, 100.0, 5), [0u8; CELLS]);
    }

    #[test]
    fn grid_validation() {
        let sol = parse_puzzle(SOLUTION1).unwrap();
        let givens = parse_puzzle(PUZZLE1).unwrap();
        let (ok, v) = validate_grid(&sol, &givens);
        assert!(ok, "{v:?}");
        // Duplicate in a row is cited.
        let mut bad = sol;
        bad[1] = sol[0];
        let (ok, v) = validate_grid(&bad, &givens);
        assert!(!ok);
        assert!(v.iter().any(|m| m.contains("row 0")), "{v:?}");
        // Mutated given is cited.
        let mut bad = sol;
        let cell = (0..CELLS).find(|&c| givens[c] != 0).unwrap();
        bad[cell] = if sol[cell] == 1 { 2 } else { 1 };
        let (ok, v) = validate_grid(&bad, &givens);
        assert!(!ok && v.iter().any(|m| m.contains("given")), "{v:?}");
        // All-silent grid: 81 undecided.
        let (ok, v) = validate_grid(&[0u8; CELLS], &[0u8; CELLS]);
        assert!(!ok);
        assert!(v[0].contains("81 undecided"));
    }

    #[test]
    fn render_shows_blocks() {
        let sol = parse_puzzle(SOLUTION1).unwrap();
        let text = render_grid(&sol);
        assert_eq!(text.lines().count(), 11);
        assert!(text.contains('|'));
    }
}
