//! The ring simulator: per-timestep orchestration across all cores.
//!
//! Each step runs four phases per core: (1) release the accumulator slot
//! scheduled for this step, (2) update every local neuron with the released
//! inputs and record spikes, (3) fetch each spiking neuron's synapse list in
//! ascending local order and dispatch the packets (shorter ring route,
//! LOCAL_SYNC after each list), (4) emit GLOBAL_SYNC tokens and route until
//! the barrier completes. No core begins step `t + 1` before every core has
//! finished step `t`.
//!
//! Two drivers share the same core state machine. The deterministic driver
//! pumps all cores round-robin from one thread in a fixed order and is the
//! reference semantics. The concurrent driver spawns workers that own
//! disjoint groups of cores and communicate only through the bounded ring
//! streams; under canonical accumulation order its recordings are identical
//! to the deterministic driver's.

use crate::accumulator::DelayAccumulator;
use crate::error::SimError;
use crate::network::{Network, PopKind};
use crate::neuron::{
    init_membrane, lif_step, poisson_prob, poisson_step, LifPropagators, NeuronError, NeuronState,
};
use crate::packet::{word, SynapsePacket};
use crate::recording::{RunMetrics, SpikeRecording};
use crate::router::{DeliverCtx, RoutedPacket, RouterState};
use crate::store::SynapseList;
use crate::topology::{min_distance, route_direction, Direction, TopologyConfig};
use crossbeam_channel::bounded;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// Packets handled per inbound stream per pump call.
const SERVICE_BUDGET: u32 = 256;
/// Dispatch operations per pump call.
const DISPATCH_BUDGET: u32 = 256;

/// Everything a run needs besides the network itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Core count; defaults to the network file's value.
    pub cores: Option<u32>,
    /// Neurons per core; defaults to the network file's value.
    pub capacity: Option<u32>,
    /// Devices the ring is split over (metrics label on boundary edges).
    pub devices: u32,
    pub seed: u64,
    /// Biological time to simulate (ms); must be a multiple of dt.
    pub t_bio_ms: f64,
    /// Canonical accumulation order: schedule-independent, oracle-exact.
    pub canonical: bool,
    /// Worker threads; 1 = deterministic reference scheduler, more =
    /// concurrent mode (cores divided among workers).
    pub workers: usize,
    /// Stream queue depth (packets).
    pub queue_capacity: usize,
    /// Router micro-step budget per timestep before a deterministic run
    /// declares deadlock.
    pub step_budget: u64,
    /// Zero-progress wall-clock bound for concurrent runs.
    pub deadlock_timeout: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cores: None,
            capacity: None,
            devices: 1,
            seed: 0,
            t_bio_ms: 100.0,
            canonical: true,
            workers: 1,
            queue_capacity: 1024,
            step_budget: 10_000_000,
            deadlock_timeout: Duration::from_secs(10),
        }
    }
}

impl RunConfig {
    pub fn steps(&self, dt: f64) -> Result<u64, SimError> {
        if !(dt > 0.0) {
            return Err(SimError::Config(format!("dt {dt} must be positive")));
        }
        if !(self.t_bio_ms >= 0.0) {
            return Err(SimError::Config(format!("t_bio {} must be >= 0", self.t_bio_ms)));
        }
        let steps = (self.t_bio_ms / dt).round();
        if (steps * dt - self.t_bio_ms).abs() > 1e-9 * self.t_bio_ms.max(1.0) {
            return Err(SimError::Config(format!(
                "t_bio {} ms is not a multiple of dt {} ms",
                self.t_bio_ms, dt
            )));
        }
        if steps >= u32::MAX as f64 {
            return Err(SimError::Config(format!("{steps} steps exceed the recording range")));
        }
        Ok(steps as u64)
    }
}

/// Per-population constants shared by all cores (and the oracle).
pub(crate) struct PopTables {
    pub props: Vec<Option<LifPropagators>>,
    pub poisson: Vec<f64>,
    pub v_init: Vec<(f64, f64)>,
}

pub(crate) fn build_pop_tables(net: &Network) -> PopTables {
    let mut props = Vec::with_capacity(net.populations.len());
    let mut poisson = Vec::with_capacity(net.populations.len());
    let mut v_init = Vec::with_capacity(net.populations.len());
    for p in &net.populations {
        match &p.kind {
            PopKind::Lif { params, v_init: vi } => {
                props.push(Some(params.propagators()));
                poisson.push(0.0);
                v_init.push(*vi);
            }
            PopKind::Poisson { rate_hz } => {
                props.push(None);
                poisson.push(poisson_prob(*rate_hz, net.dt));
                v_init.push((0.0, 0.0));
            }
        }
    }
    PopTables { props, poisson, v_init }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Barrier done (or run start); awaiting begin_step.
    Ready,
    Dispatching,
    EmitTokens,
    Barrier,
    Done,
}

/// One core's complete runtime: neuron states, accumulator, router, fetch
/// cursor, and local recording buffer.
struct CoreRuntime {
    core: u32,
    base: u32,
    n_local: u32,
    topo: TopologyConfig,
    store: Arc<SynapseList>,
    pops: Arc<PopTables>,
    pop_of: Arc<Vec<u16>>,
    seed: u64,
    steps_total: u64,
    v: Vec<f64>,
    i_syn: Vec<f64>,
    refc: Vec<u32>,
    w_in: Vec<f64>,
    acc: DelayAccumulator,
    router: RouterState,
    deferred: Vec<RoutedPacket>,
    spikes: Vec<u32>,
    spike_pos: usize,
    edge_pos: usize,
    emitted_right: bool,
    emitted_left: bool,
    phase: Phase,
    step: u64,
    recording: Vec<(u32, u32)>,
    metrics: RunMetrics,
    delivered: u64,
    counters: Arc<Vec<AtomicU64>>,
}

impl CoreRuntime {
    /// Release, apply parked packets, update neurons, queue the dispatch.
    fn begin_step(&mut self) -> Result<(), SimError> {
        debug_assert_eq!(self.phase, Phase::Ready);
        let t = self.step;
        self.acc.release(t, &mut self.w_in)?;
        // Early arrivals from fast neighbors were parked until this release;
        // they originated in this epoch.
        for pkt in std::mem::take(&mut self.deferred) {
            self.acc.accumulate(
                word::dst(pkt.word),
                word::delay(pkt.word),
                word::weight(pkt.word),
                pkt.src,
                pkt.edge_idx,
                t,
            )?;
            self.delivered += 1;
        }
        self.spikes.clear();
        for local in 0..self.n_local {
            let gid = self.base + local;
            let pop = self.pop_of[gid as usize] as usize;
            let spiked = match self.pops.props[pop] {
                Some(props) => {
                    let li = local as usize;
                    let mut state =
                        NeuronState { v: self.v[li], i_syn: self.i_syn[li], ref_count: self.refc[li] };
                    let spiked = lif_step(&mut state, &props, self.w_in[li]).map_err(|e| {
                        match e {
                            NeuronError::NonFinite => SimError::NonFinite { neuron: gid, step: t },
                            other => SimError::Config(other.to_string()),
                        }
                    })?;
                    self.v[li] = state.v;
                    self.i_syn[li] = state.i_syn;
                    self.refc[li] = state.ref_count;
                    spiked
                }
                None => poisson_step(self.pops.poisson[pop], self.seed, gid, t),
            };
            if spiked {
                self.spikes.push(local);
                self.recording.push((t as u32, gid));
                self.metrics.total_spikes += 1;
                self.metrics.synaptic_events += self.store.fanout(gid) as u64;
            }
        }
        self.spike_pos = 0;
        self.edge_pos = 0;
        self.emitted_right = false;
        self.emitted_left = false;
        self.phase = Phase::Dispatching;
        Ok(())
    }

    /// Advance as far as possible without blocking. Returns whether any
    /// packet moved or any state advanced.
    fn pump(&mut self) -> Result<bool, SimError> {
        let mut progressed = false;
        // Neighbor traffic first.
        {
            let mut ctx = DeliverCtx {
                step: self.step,
                acc: &mut self.acc,
                deferred: &mut self.deferred,
                metrics: &mut self.metrics,
                delivered: &mut self.delivered,
            };
            progressed |= self.router.service(SERVICE_BUDGET, &mut ctx)? > 0;
        }
        if self.phase == Phase::Dispatching {
            progressed |= self.advance_dispatch()?;
        }
        if self.phase == Phase::EmitTokens {
            progressed |= self.emit_tokens()?;
        }
        if self.phase == Phase::Barrier && self.router.barrier_passed(self.step) {
            self.complete_barrier()?;
            progressed = true;
        }
        Ok(progressed)
    }

    fn advance_dispatch(&mut self) -> Result<bool, SimError> {
        let mut progressed = false;
        for _ in 0..DISPATCH_BUDGET {
            if self.spike_pos == self.spikes.len() {
                self.phase = Phase::EmitTokens;
                return Ok(progressed);
            }
            let gid = self.base + self.spikes[self.spike_pos];
            let n_edges = self.store.fanout(gid) as usize;
            if self.edge_pos == n_edges {
                // End of this neuron's list: the LOCAL_SYNC marker paces the
                // fetch stage and is consumed by the core's own router.
                self.metrics.local_sync_tokens += 1;
                self.spike_pos += 1;
                self.edge_pos = 0;
                progressed = true;
                continue;
            }
            let w = self.store.edges_of(gid)[self.edge_pos];
            let dst = word::dst(w);
            let dst_core = self.topo.core_of(dst);
            match route_direction(self.core, dst_core, self.topo.n_cores) {
                Direction::Local => {
                    self.acc.accumulate(
                        dst,
                        word::delay(w),
                        word::weight(w),
                        gid,
                        self.edge_pos as u32,
                        self.step,
                    )?;
                    self.delivered += 1;
                }
                dir => {
                    let pkt = RoutedPacket { word: w, src: gid, edge_idx: self.edge_pos as u32 };
                    if self.router.try_push(dir, pkt, true, &mut self.metrics)? {
                        self.metrics.data_injected += 1;
                        self.metrics.expected_data_hops +=
                            min_distance(self.core, dst_core, self.topo.n_cores) as u64;
                    } else {
                        // Backpressure: retry after servicing more inbound.
                        return Ok(progressed);
                    }
                }
            }
            self.edge_pos += 1;
            progressed = true;
        }
        Ok(progressed)
    }

    fn emit_tokens(&mut self) -> Result<bool, SimError> {
        let mut progressed = false;
        let token = RoutedPacket {
            word: SynapsePacket::global_sync(self.core).encode(),
            src: 0,
            edge_idx: 0,
        };
        if !self.emitted_right && self.router.try_push(Direction::Right, token, true, &mut self.metrics)? {
            self.emitted_right = true;
            progressed = true;
        }
        if !self.emitted_left && self.router.try_push(Direction::Left, token, true, &mut self.metrics)? {
            self.emitted_left = true;
            progressed = true;
        }
        if self.emitted_right && self.emitted_left {
            self.phase = Phase::Barrier;
        }
        Ok(progressed)
    }

    fn complete_barrier(&mut self) -> Result<(), SimError> {
        let t = self.step;
        // Lockstep assertion: everyone else is executing step t or t + 1.
        for (i, c) in self.counters.iter().enumerate() {
            if i as u32 == self.core {
                continue;
            }
            let v = c.load(Ordering::SeqCst);
            if v < t || v > t + 1 {
                return Err(SimError::BarrierSkew {
                    core: self.core,
                    step: t,
                    other: i as u32,
                    other_step: v,
                });
            }
        }
        self.step = t + 1;
        self.counters[self.core as usize].store(self.step, Ordering::SeqCst);
        self.phase = if self.step == self.steps_total { Phase::Done } else { Phase::Ready };
        Ok(())
    }

    fn diagnostics(&self) -> String {
        format!(
            "{} phase {:?} step {} dispatch {}/{} edge {} deferred {}\n",
            self.router.diagnostics(),
            self.phase,
            self.step,
            self.spike_pos,
            self.spikes.len(),
            self.edge_pos,
            self.deferred.len(),
        )
    }
}

fn build_world(net: &Network, cfg: &RunConfig) -> Result<(Vec<CoreRuntime>, u64), SimError> {
    net.validate()?;
    let topo = net
        .topology(cfg.cores, cfg.capacity)
        .with_devices(cfg.devices)?;
    topo.validate(net.n_neurons)?;
    if cfg.queue_capacity < 4 {
        return Err(SimError::Config(format!(
            "queue capacity {} leaves no room for the injection bubble",
            cfg.queue_capacity
        )));
    }
    let steps = cfg.steps(net.dt)?;
    let n = topo.n_cores;
    let store = Arc::new(SynapseList::build(&net.edges, &topo, net.n_neurons)?);
    let pops = Arc::new(build_pop_tables(net));
    let pop_of = Arc::new(net.pop_lookup());
    let counters: Arc<Vec<AtomicU64>> =
        Arc::new((0..n).map(|_| AtomicU64::new(0)).collect());

    // Stream plumbing: right[i] carries core i -> i+1, left[i] carries
    // core i -> i-1.
    let mut right_tx = Vec::new();
    let mut right_rx = Vec::new();
    let mut left_tx = Vec::new();
    let mut left_rx = Vec::new();
    for _ in 0..n {
        let (tx, rx) = bounded(cfg.queue_capacity);
        right_tx.push(Some(tx));
        right_rx.push(Some(rx));
        let (tx, rx) = bounded(cfg.queue_capacity);
        left_tx.push(Some(tx));
        left_rx.push(Some(rx));
    }

    let mut cores = Vec::with_capacity(n as usize);
    for core in 0..n {
        let base = core * topo.core_capacity;
        let n_local = net.n_neurons.saturating_sub(base).min(topo.core_capacity);
        let router = RouterState::new(
            core,
            &topo,
            cfg.queue_capacity,
            right_tx[core as usize].take().unwrap(),
            left_tx[core as usize].take().unwrap(),
            right_rx[((core + n - 1) % n) as usize].take().unwrap(),
            left_rx[((core + 1) % n) as usize].take().unwrap(),
        );
        let mut rt = CoreRuntime {
            core,
            base,
            n_local,
            topo: topo.clone(),
            store: Arc::clone(&store),
            pops: Arc::clone(&pops),
            pop_of: Arc::clone(&pop_of),
            seed: cfg.seed,
            steps_total: steps,
            v: vec![0.0; n_local as usize],
            i_syn: vec![0.0; n_local as usize],
            refc: vec![0; n_local as usize],
            w_in: vec![0.0; n_local as usize],
            acc: DelayAccumulator::new(base, n_local, cfg.canonical),
            router,
            deferred: Vec::new(),
            spikes: Vec::new(),
            spike_pos: 0,
            edge_pos: 0,
            emitted_right: false,
            emitted_left: false,
            phase: Phase::Ready,
            step: 0,
            recording: Vec::new(),
            metrics: RunMetrics::new(n),
            delivered: 0,
            counters: Arc::clone(&counters),
        };
        for local in 0..n_local {
            let gid = base + local;
            let pop = pop_of[gid as usize] as usize;
            if pops.props[pop].is_some() {
                let (lo, hi) = pops.v_init[pop];
                rt.v[local as usize] = init_membrane(cfg.seed, gid, lo, hi);
            }
        }
        cores.push(rt);
    }
    Ok((cores, steps))
}

fn finalize(
    cores: Vec<CoreRuntime>,
    steps: u64,
    net: &Network,
) -> Result<(SpikeRecording, RunMetrics), SimError> {
    let n_cores = cores.len() as u32;
    let mut metrics = RunMetrics::new(n_cores);
    metrics.steps = steps;
    let mut events = Vec::new();
    let mut delivered = 0u64;
    for c in &cores {
        if !c.deferred.is_empty() {
            return Err(SimError::MetricsIdentity(format!(
                "core {} finished with {} undelivered parked packets",
                c.core,
                c.deferred.len()
            )));
        }
        let (il, ir, _, _) = c.router.queue_lens();
        if il != 0 || ir != 0 {
            return Err(SimError::MetricsIdentity(format!(
                "core {} finished with occupied inbound streams ({il}, {ir})",
                c.core
            )));
        }
        metrics.absorb(&c.metrics);
        delivered += c.delivered;
        events.extend_from_slice(&c.recording);
    }
    if delivered != metrics.synaptic_events {
        return Err(SimError::MetricsIdentity(format!(
            "delivered {} packets but spikes x fanout = {}",
            delivered, metrics.synaptic_events
        )));
    }
    if metrics.data_hops != metrics.expected_data_hops {
        return Err(SimError::MetricsIdentity(format!(
            "data hops {} != sum of shortest distances {}",
            metrics.data_hops, metrics.expected_data_hops
        )));
    }
    events.sort_unstable();
    let mut rec = SpikeRecording::new(steps, net.dt);
    rec.events = events;
    Ok((rec, metrics))
}

/// Run the ring simulator. `workers == 1` uses the deterministic
/// single-worker scheduler (the reference semantics); `workers > 1` runs
/// the concurrent scheduler.
pub fn run_ring(net: &Network, cfg: &RunConfig) -> Result<(SpikeRecording, RunMetrics), SimError> {
    let (cores, steps) = build_world(net, cfg)?;
    if steps == 0 {
        return finalize(cores, 0, net);
    }
    let workers = if cfg.workers == 0 {
        std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(cores.len())
    } else {
        cfg.workers.min(cores.len())
    };
    if workers <= 1 {
        run_deterministic(cores, steps, net, cfg)
    } else {
        run_concurrent(cores, steps, net, cfg, workers)
    }
}

fn run_deterministic(
    mut cores: Vec<CoreRuntime>,
    steps: u64,
    net: &Network,
    cfg: &RunConfig,
) -> Result<(SpikeRecording, RunMetrics), SimError> {
    for t in 0..steps {
        for c in &mut cores {
            c.begin_step()?;
        }
        let mut micro = 0u64;
        loop {
            let mut progressed = false;
            let mut all_waiting = true;
            for c in &mut cores {
                progressed |= c.pump()?;
                all_waiting &= matches!(c.phase, Phase::Ready | Phase::Done);
            }
            if all_waiting {
                break;
            }
            micro += 1;
            if !progressed || micro > cfg.step_budget {
                let diagnostics: String = cores.iter().map(|c| c.diagnostics()).collect();
                return Err(SimError::Deadlock { step: t, micro_steps: micro, diagnostics });
            }
        }
    }
    finalize(cores, steps, net)
}

fn run_concurrent(
    cores: Vec<CoreRuntime>,
    steps: u64,
    net: &Network,
    cfg: &RunConfig,
    workers: usize,
) -> Result<(SpikeRecording, RunMetrics), SimError> {
    let timeout = cfg.deadlock_timeout;
    // Deal cores to workers in contiguous chunks.
    let mut chunks: Vec<Vec<CoreRuntime>> = (0..workers).map(|_| Vec::new()).collect();
    let per = cores.len().div_ceil(workers);
    for (i, c) in cores.into_iter().enumerate() {
        chunks[i / per].push(c);
    }
    let handles: Vec<_> = chunks
        .into_iter()
        .map(|chunk| std::thread::spawn(move || worker_loop(chunk, timeout)))
        .collect();
    let mut all_cores = Vec::new();
    let mut first_err: Option<SimError> = None;
    for h in handles {
        match h.join() {
            Ok(Ok(mut chunk)) => all_cores.append(&mut chunk),
            Ok(Err(e)) => {
                // Prefer the most diagnostic fault when several workers fail.
                let replace = matches!(
                    (&first_err, &e),
                    (None, _) | (Some(SimError::Protocol { .. }), SimError::Deadlock { .. })
                );
                if replace {
                    first_err = Some(e);
                }
            }
            Err(_) => {
                if first_err.is_none() {
                    first_err = Some(SimError::WorkerPanic);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    all_cores.sort_by_key(|c| c.core);
    finalize(all_cores, steps, net)
}

fn worker_loop(
    mut chunk: Vec<CoreRuntime>,
    timeout: Duration,
) -> Result<Vec<CoreRuntime>, SimError> {
    let mut last_progress = Instant::now();
    let mut idle: u64 = 0;
    loop {
        let mut progressed = false;
        let mut all_done = true;
        for c in &mut chunk {
            if c.phase == Phase::Ready {
                c.begin_step()?;
                progressed = true;
            }
            progressed |= c.pump()?;
            all_done &= c.phase == Phase::Done;
        }
        if all_done {
            return Ok(chunk);
        }
        if progressed {
            last_progress = Instant::now();
            idle = 0;
        } else {
            idle += 1;
            if idle.is_multiple_of(64) {
                std::thread::yield_now();
            }
            if idle.is_multiple_of(4096) {
                std::thread::sleep(Duration::from_micros(200));
                if last_progress.elapsed() > timeout {
                    let step = chunk.iter().map(|c| c.step).min().unwrap_or(0);
                    let diagnostics: String = chunk.iter().map(|c| c.diagnostics()).collect();
                    return Err(SimError::Deadlock { step, micro_steps: idle, diagnostics });
                }
            }
        }
    }
}
