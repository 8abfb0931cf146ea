//! Command-line driver: network generation, ring/oracle runs, recording
//! validation, and Sudoku checking.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime fault,
//! 3 validation failure.

use crate::error::SimError;
use crate::network::{fnv1a64, Network};
use crate::oracle::run_oracle;
use crate::recording::{self, SpikeRecording};
use crate::sim::{run_ring, RunConfig};
use crate::stats;
use crate::workloads::{microcircuit, sudoku, GenError};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "SPIKERING_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "spikering", version, about = "Ring-of-cores spiking neural network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    Microcircuit,
    Sudoku,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Ring,
    Oracle,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a network file from a workload config.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Workload config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Microcircuit neuron scale in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Sudoku puzzle as an 81-character string (0/. = empty).
        #[arg(long)]
        puzzle: Option<String>,
        /// Sudoku puzzle file holding the 81-character string.
        #[arg(long)]
        puzzle_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output network file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a network file and write recording + metrics.
    Run {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_enum, default_value = "ring")]
        mode: Mode,
        /// Core count override (default: from the network file).
        #[arg(long)]
        cores: Option<u32>,
        /// Core capacity override (default: from the network file).
        #[arg(long)]
        capacity: Option<u32>,
        /// Devices the ring spans (boundary-edge metrics).
        #[arg(long, default_value_t = 1)]
        devices: u32,
        /// Worker threads; 1 = deterministic scheduler.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Biological time to simulate (ms).
        #[arg(long, default_value_t = 100.0)]
        t_bio_ms: f64,
        /// Canonical accumulation order (schedule-independent sums).
        #[arg(long)]
        canonical: bool,
        /// Stream queue depth.
        #[arg(long, default_value_t = 1024)]
        queue_cap: usize,
        /// Output directory (default: $SPIKERING_OUT_DIR or ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two run outputs over the same network.
    Validate {
        /// Run output directory (or spikes.txt path) A.
        #[arg(long)]
        rec_a: PathBuf,
        /// Run output directory (or spikes.txt path) B.
        #[arg(long)]
        rec_b: PathBuf,
        #[arg(long)]
        network: PathBuf,
        /// Pearson bin width (ms).
        #[arg(long, default_value_t = 2.0)]
        bin_ms: f64,
        /// Sampled neuron pairs per population.
        #[arg(long, default_value_t = 1000)]
        pairs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report output directory (default: $SPIKERING_OUT_DIR or ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a Sudoku run and verify the solution.
    SudokuCheck {
        /// Run output directory (or spikes.txt path).
        #[arg(long)]
        rec: PathBuf,
        #[arg(long)]
        puzzle: Option<String>,
        #[arg(long)]
        puzzle_file: Option<PathBuf>,
        /// Decoding window over the end of the run (ms).
        #[arg(long, default_value_t = 100.0)]
        window_ms: f64,
        /// Neurons per digit population.
        #[arg(long, default_value_t = 5)]
        neurons_per_digit: u32,
    },
}


/// Print to stdout, tolerating a closed pipe (`spikering ... | head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! out_raw {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

pub struct CmdError {
    code: u8,
    msg: String,
}

impl CmdError {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 1, msg: msg.into() }
    }

    fn validation(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }
}

impl From<SimError> for CmdError {
    fn from(e: SimError) -> Self {
        Self { code: e.exit_code() as u8, msg: e.to_string() }
    }
}

impl From<GenError> for CmdError {
    fn from(e: GenError) -> Self {
        Self { code: 1, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, msg: e.to_string() }
    }
}

impl From<recording::RecordingError> for CmdError {
    fn from(e: recording::RecordingError) -> Self {
        Self { code: 1, msg: e.to_string() }
    }
}

impl From<crate::network::NetworkError> for CmdError {
    fn from(e: crate::network::NetworkError) -> Self {
        Self { code: 1, msg: e.to_string() }
    }
}

impl From<stats::StatsError> for CmdError {
    fn from(e: stats::StatsError) -> Self {
        Self { code: 3, msg: e.to_string() }
    }
}

/// Entry point used by the `spikering` binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version print and exit cleanly; real usage errors exit 1.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            out_raw!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CmdError> {
    match cmd {
        Command::Gen { kind, config, scale, puzzle, puzzle_file, seed, out } => {
            cmd_gen(kind, &config, scale, puzzle, puzzle_file, seed, &out)
        }
        Command::Run {
            network,
            mode,
            cores,
            capacity,
            devices,
            workers,
            seed,
            t_bio_ms,
            canonical,
            queue_cap,
            out,
        } => {
            let cfg = RunConfig {
                cores,
                capacity,
                devices,
                seed,
                t_bio_ms,
                canonical,
                workers,
                queue_capacity: queue_cap,
                step_budget: 10_000_000,
                deadlock_timeout: Duration::from_secs(30),
            };
            cmd_run(&network, mode, &cfg, &out_dir(out))
        }
        Command::Validate { rec_a, rec_b, network, bin_ms, pairs, seed, out } => {
            cmd_validate(&rec_a, &rec_b, &network, bin_ms, pairs, seed, &out_dir(out))
        }
        Command::SudokuCheck { rec, puzzle, puzzle_file, window_ms, neurons_per_digit } => {
            cmd_sudoku_check(&rec, puzzle, puzzle_file, window_ms, neurons_per_digit)
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn read_puzzle(
    puzzle: Option<String>,
    puzzle_file: Option<PathBuf>,
) -> Result<[u8; sudoku::CELLS], CmdError> {
    let text = match (puzzle, puzzle_file) {
        (Some(p), None) => p,
        (None, Some(f)) => std::fs::read_to_string(f)?,
        _ => return Err(CmdError::usage("give exactly one of --puzzle / --puzzle-file")),
    };
    Ok(sudoku::parse_puzzle(&text)?)
}

fn cmd_gen(
    kind: Kind,
    config: &Path,
    scale: f64,
    puzzle: Option<String>,
    puzzle_file: Option<PathBuf>,
    seed: u64,
    out: &Path,
) -> Result<(), CmdError> {
    let net = match kind {
        Kind::Microcircuit => {
            let cfg = microcircuit::MicrocircuitConfig::from_path(config)?;
            microcircuit::generate(&cfg, scale, seed)?
        }
        Kind::Sudoku => {
            let spec = sudoku::SudokuSpec::from_path(config)?;
            let givens = read_puzzle(puzzle, puzzle_file)?;
            sudoku::generate(&spec, &givens)?
        }
    };
    net.validate().map_err(SimError::from)?;
    net.write(out).map_err(SimError::from)?;
    let mut fanouts = vec![0u32; net.n_neurons as usize];
    for e in &net.edges {
        fanouts[e.src as usize] += 1;
    }
    let mean = if net.n_neurons > 0 {
        net.edges.len() as f64 / net.n_neurons as f64
    } else {
        0.0
    };
    out!(
        "wrote {} | {} neurons, {} edges, fanout mean {:.1} max {}",
        out.display(),
        net.n_neurons,
        net.edges.len(),
        mean,
        fanouts.iter().max().copied().unwrap_or(0),
    );
    for p in &net.populations {
        out!("  {:<10} [{}, {})", p.name, p.first_id, p.first_id + p.size);
    }
    Ok(())
}

fn cmd_run(network: &Path, mode: Mode, cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let bytes = std::fs::read(network)?;
    let hash = fnv1a64(&bytes);
    let net = Network::read_from(&mut bytes.as_slice())?;
    let (rec, metrics) = match mode {
        Mode::Ring => run_ring(&net, cfg)?,
        Mode::Oracle => run_oracle(&net, cfg)?,
    };
    std::fs::create_dir_all(out)?;
    rec.write_text(&out.join("spikes.txt"))?;
    rec.write_binary(&out.join("spikes.bin"))?;
    let topo = net.topology(cfg.cores, cfg.capacity);
    let mut meta: Vec<(String, String)> = vec![
        ("mode".into(), format!("{mode:?}").to_lowercase()),
        ("network".into(), network.display().to_string()),
        ("network_hash".into(), format!("{hash:016x}")),
        ("seed".into(), cfg.seed.to_string()),
        ("t_bio_ms".into(), cfg.t_bio_ms.to_string()),
        ("dt_ms".into(), net.dt.to_string()),
        ("cores".into(), topo.n_cores.to_string()),
        ("capacity".into(), topo.core_capacity.to_string()),
        ("devices".into(), cfg.devices.to_string()),
        ("workers".into(), cfg.workers.to_string()),
        ("canonical".into(), cfg.canonical.to_string()),
    ];
    meta.extend(metrics.to_pairs());
    recording::write_meta(&out.join("meta.txt"), &meta)?;
    out!(
        "{} steps, {} spikes, {} synaptic events, {} data hops ({} inter-device), peak queue {}",
        metrics.steps,
        metrics.total_spikes,
        metrics.synaptic_events,
        metrics.data_hops,
        metrics.inter_device_crossings,
        metrics.max_queue_occupancy,
    );
    out!("recording in {}", out.display());
    Ok(())
}

/// Load `spikes.txt` + `meta.txt` from a run output directory (or from a
/// recording path with a sibling meta.txt).
pub fn load_run_output(path: &Path) -> Result<(SpikeRecording, Vec<(String, String)>), CmdError> {
    let (rec_path, meta_path) = if path.is_dir() {
        (path.join("spikes.txt"), path.join("meta.txt"))
    } else {
        let meta = path.with_file_name("meta.txt");
        (path.to_path_buf(), meta)
    };
    let meta = recording::read_meta(&meta_path)?;
    let steps: u64 = recording::meta_get(&meta, "steps")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CmdError::usage(format!("{} lacks a steps entry", meta_path.display())))?;
    let dt: f64 = recording::meta_get(&meta, "dt_ms")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CmdError::usage(format!("{} lacks a dt_ms entry", meta_path.display())))?;
    let rec = SpikeRecording::read_text(&rec_path, steps, dt)?;
    Ok((rec, meta))
}

fn cmd_validate(
    rec_a: &Path,
    rec_b: &Path,
    network: &Path,
    bin_ms: f64,
    pairs: u32,
    seed: u64,
    out: &Path,
) -> Result<(), CmdError> {
    let bytes = std::fs::read(network)?;
    let hash = format!("{:016x}", fnv1a64(&bytes));
    let net = Network::read_from(&mut bytes.as_slice())?;
    let (ra, meta_a) = load_run_output(rec_a)?;
    let (rb, meta_b) = load_run_output(rec_b)?;
    for (name, meta) in [("A", &meta_a), ("B", &meta_b)] {
        if let Some(h) = recording::meta_get(meta, "network_hash") {
            if h != hash {
                return Err(CmdError::validation(format!(
                    "recording {name} was produced from a different network (hash {h} != {hash})"
                )));
            }
        }
    }
    let (cmp, sa, sb) = stats::compare(&ra, &rb, &net, bin_ms, pairs, seed)?;
    std::fs::create_dir_all(out)?;
    let mut report = String::new();
    report.push_str("== A ==\n");
    report.push_str(&sa.render_text());
    report.push_str("== B ==\n");
    report.push_str(&sb.render_text());
    report.push_str("== deltas ==\n");
    report.push_str(&cmp.render_text());
    std::fs::write(out.join("report.txt"), &report)?;
    let mut pairs_kv = cmp.to_pairs();
    pairs_kv.extend(sa.to_pairs("a."));
    pairs_kv.extend(sb.to_pairs("b."));
    recording::write_meta(&out.join("report.kv"), &pairs_kv)?;
    let mut csv = Vec::new();
    sa.write_csv(&mut csv).map_err(stats::StatsError::from)?;
    std::fs::write(out.join("distributions_a.csv"), &csv)?;
    csv.clear();
    sb.write_csv(&mut csv).map_err(stats::StatsError::from)?;
    std::fs::write(out.join("distributions_b.csv"), &csv)?;
    out_raw!("{report}");
    out!("report in {}", out.display());
    Ok(())
}

fn cmd_sudoku_check(
    rec: &Path,
    puzzle: Option<String>,
    puzzle_file: Option<PathBuf>,
    window_ms: f64,
    neurons_per_digit: u32,
) -> Result<(), CmdError> {
    let givens = read_puzzle(puzzle, puzzle_file)?;
    let (recording, _) = load_run_output(rec)?;
    let grid = sudoku::decode(&recording, window_ms, neurons_per_digit);
    out_raw!("{}", sudoku::render_grid(&grid));
    let (ok, violations) = sudoku::validate_grid(&grid, &givens);
    if ok {
        out!("solved");
        Ok(())
    } else {
        Err(CmdError::validation(format!("unsolved: {}", violations.join("; "))))
    }
}
