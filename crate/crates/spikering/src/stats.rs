//! Spike-train statistics and recording comparison: per-neuron firing
//! rates, CV of inter-spike intervals, and Pearson correlation of binned
//! spike trains over sampled neuron pairs.

use crate::network::Network;
use crate::recording::SpikeRecording;
use crate::rng;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("recordings disagree on network metadata: {0}")]
    Mismatch(String),
    #[error("bin width {bin_ms} ms is not a positive multiple of dt {dt} ms")]
    BadBin { bin_ms: f64, dt: f64 },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Statistics of one population in one recording.
#[derive(Debug, Clone)]
pub struct PopStats {
    pub name: String,
    pub first_id: u32,
    pub size: u32,
    /// Firing rate (Hz) per neuron.
    pub rates: Vec<f64>,
    /// CV of inter-spike intervals per neuron; `None` below 3 spikes.
    pub cvs: Vec<Option<f64>>,
    /// Pearson r over sampled distinct neuron pairs.
    pub pearson: Vec<f64>,
    /// Pairs skipped because one train had zero variance.
    pub skipped_pairs: u32,
}

impl PopStats {
    pub fn median_rate(&self) -> f64 {
        median(self.rates.iter().copied())
    }

    pub fn median_cv(&self) -> Option<f64> {
        let defined: Vec<f64> = self.cvs.iter().flatten().copied().collect();
        if defined.is_empty() {
            None
        } else {
            Some(median(defined.into_iter()))
        }
    }

    pub fn mean_pearson(&self) -> Option<f64> {
        if self.pearson.is_empty() {
            None
        } else {
            Some(self.pearson.iter().sum::<f64>() / self.pearson.len() as f64)
        }
    }
}

/// Whole-recording statistics report.
#[derive(Debug, Clone)]
pub struct StatsReport {
    pub populations: Vec<PopStats>,
    pub total_spikes: u64,
    pub duration_s: f64,
}

/// Per-population deltas between two recordings.
#[derive(Debug, Clone)]
pub struct PopDelta {
    pub name: String,
    /// |median rate A - median rate B| relative to B (absolute when B ~ 0).
    pub rate_delta_rel: f64,
    pub rate_delta_abs: f64,
    /// |median CV A - median CV B| when both are defined.
    pub cv_delta: Option<f64>,
    /// |mean Pearson A - mean Pearson B| when both are defined.
    pub pearson_mean_delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub per_pop: Vec<PopDelta>,
    /// Recordings are event-for-event identical.
    pub exact_match: bool,
}

/// Firing rate in Hz for each neuron in `[first_id, first_id + size)`.
pub fn firing_rates(rec: &SpikeRecording, first_id: u32, size: u32) -> Vec<f64> {
    let t_s = rec.duration_s();
    let mut counts = vec![0u32; size as usize];
    for &(_, n) in &rec.events {
        if n >= first_id && n < first_id + size {
            counts[(n - first_id) as usize] += 1;
        }
    }
    counts.iter().map(|&c| if t_s > 0.0 { c as f64 / t_s } else { 0.0 }).collect()
}

/// CV of inter-spike intervals for one spike-time sequence (in steps).
/// Undefined (None) below 3 spikes.
pub fn cv_isi(spike_steps: &[u32]) -> Option<f64> {
    if spike_steps.len() < 3 {
        return None;
    }
    let isis: Vec<f64> = spike_steps.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let mean = isis.iter().sum::<f64>() / isis.len() as f64;
    if mean == 0.0 {
        return None;
    }
    let var =
        isis.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (isis.len() - 1) as f64;
    Some(var.sqrt() / mean)
}

/// Pearson correlation between two equal-length count vectors; `None` if
/// either has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Bin one neuron's spike steps into counts of width `bin_steps`.
fn bin_train(spike_steps: &[u32], steps: u64, bin_steps: u64) -> Vec<f64> {
    let n_bins = steps.div_ceil(bin_steps) as usize;
    let mut bins = vec![0.0f64; n_bins];
    for &t in spike_steps {
        bins[(t as u64 / bin_steps) as usize] += 1.0;
    }
    bins
}

/// Pearson r over `n_pairs` sampled distinct neuron pairs of a population.
/// Sampling is deterministic under `seed`; zero-variance pairs are skipped
/// and counted.
pub fn pearson_pairs(
    trains: &[Vec<u32>],
    steps: u64,
    bin_steps: u64,
    n_pairs: u32,
    seed: u64,
) -> (Vec<f64>, u32) {
    let n = trains.len() as u64;
    if n < 2 || steps == 0 {
        return (Vec::new(), 0);
    }
    let mut rs = Vec::with_capacity(n_pairs as usize);
    let mut skipped = 0u32;
    for k in 0..n_pairs as u64 {
        let a = rng::draw_u64(seed, rng::stream::STATS_PAIRS, 2 * k, 0) % n;
        let mut b = rng::draw_u64(seed, rng::stream::STATS_PAIRS, 2 * k + 1, 0) % (n - 1);
        if b >= a {
            b += 1;
        }
        let xa = bin_train(&trains[a as usize], steps, bin_steps);
        let xb = bin_train(&trains[b as usize], steps, bin_steps);
        match pearson(&xa, &xb) {
            Some(r) => rs.push(r),
            None => skipped += 1,
        }
    }
    (rs, skipped)
}

/// Group spike steps per neuron.
pub fn spike_trains(rec: &SpikeRecording, n_neurons: u32) -> Vec<Vec<u32>> {
    let mut trains = vec![Vec::new(); n_neurons as usize];
    for &(t, n) in &rec.events {
        trains[n as usize].push(t);
    }
    trains
}

/// Compute the full per-population report for one recording.
pub fn population_stats(
    rec: &SpikeRecording,
    net: &Network,
    bin_ms: f64,
    n_pairs: u32,
    seed: u64,
) -> Result<StatsReport, StatsError> {
    let bin_steps = (bin_ms / net.dt).round();
    if !(bin_ms > 0.0) || (bin_steps * net.dt - bin_ms).abs() > 1e-9 {
        return Err(StatsError::BadBin { bin_ms, dt: net.dt });
    }
    let trains = spike_trains(rec, net.n_neurons);
    let mut pops = Vec::new();
    for p in &net.populations {
        let rates = firing_rates(rec, p.first_id, p.size);
        let slice = &trains[p.first_id as usize..(p.first_id + p.size) as usize];
        let cvs = slice.iter().map(|t| cv_isi(t)).collect();
        let (pearson, skipped_pairs) =
            pearson_pairs(slice, rec.steps, bin_steps as u64, n_pairs, seed ^ p.first_id as u64);
        pops.push(PopStats {
            name: p.name.clone(),
            first_id: p.first_id,
            size: p.size,
            rates,
            cvs,
            pearson,
            skipped_pairs,
        });
    }
    Ok(StatsReport {
        populations: pops,
        total_spikes: rec.events.len() as u64,
        duration_s: rec.duration_s(),
    })
}

/// Compare two recordings of the same network.
pub fn compare(
    rec_a: &SpikeRecording,
    rec_b: &SpikeRecording,
    net: &Network,
    bin_ms: f64,
    n_pairs: u32,
    seed: u64,
) -> Result<(CompareReport, StatsReport, StatsReport), StatsError> {
    if rec_a.steps != rec_b.steps {
        return Err(StatsError::Mismatch(format!(
            "step counts differ: {} vs {}",
            rec_a.steps, rec_b.steps
        )));
    }
    if (rec_a.dt - rec_b.dt).abs() > 1e-12 {
        return Err(StatsError::Mismatch(format!("dt differs: {} vs {}", rec_a.dt, rec_b.dt)));
    }
    let sa = population_stats(rec_a, net, bin_ms, n_pairs, seed)?;
    let sb = population_stats(rec_b, net, bin_ms, n_pairs, seed)?;
    let mut per_pop = Vec::new();
    for (a, b) in sa.populations.iter().zip(&sb.populations) {
        let ma = a.median_rate();
        let mb = b.median_rate();
        let rate_delta_abs = (ma - mb).abs();
        let rate_delta_rel = if mb.abs() > 0.1 { rate_delta_abs / mb } else { rate_delta_abs };
        let cv_delta = match (a.median_cv(), b.median_cv()) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        };
        let pearson_mean_delta = match (a.mean_pearson(), b.mean_pearson()) {
            (Some(x), Some(y)) => Some((x - y).abs()),
            _ => None,
        };
        per_pop.push(PopDelta {
            name: a.name.clone(),
            rate_delta_rel,
            rate_delta_abs,
            cv_delta,
            pearson_mean_delta,
        });
    }
    let exact = rec_a.events == rec_b.events;
    Ok((CompareReport { per_pop, exact_match: exact }, sa, sb))
}

impl StatsReport {
    /// Human-readable table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "total spikes {} over {:.3} s\n{:<10} {:>8} {:>12} {:>10} {:>12} {:>8}\n",
            self.total_spikes, self.duration_s, "pop", "n", "med.rate Hz", "med.CV", "mean r", "pairs"
        ));
        for p in &self.populations {
            out.push_str(&format!(
                "{:<10} {:>8} {:>12.4} {:>10} {:>12} {:>8}\n",
                p.name,
                p.size,
                p.median_rate(),
                p.median_cv().map_or("n/a".into(), |v| format!("{v:.4}")),
                p.mean_pearson().map_or("n/a".into(), |v| format!("{v:+.5}")),
                p.pearson.len(),
            ));
        }
        out
    }

    /// Machine-readable key=value pairs.
    pub fn to_pairs(&self, prefix: &str) -> Vec<(String, String)> {
        let mut pairs = vec![
            (format!("{prefix}total_spikes"), self.total_spikes.to_string()),
            (format!("{prefix}duration_s"), self.duration_s.to_string()),
        ];
        for p in &self.populations {
            pairs.push((format!("{prefix}{}.median_rate_hz", p.name), p.median_rate().to_string()));
            if let Some(cv) = p.median_cv() {
                pairs.push((format!("{prefix}{}.median_cv", p.name), cv.to_string()));
            }
            if let Some(r) = p.mean_pearson() {
                pairs.push((format!("{prefix}{}.mean_pearson", p.name), r.to_string()));
            }
        }
        pairs
    }

    /// Plot-ready CSV of the per-neuron / per-pair distributions.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "population,metric,value")?;
        for p in &self.populations {
            for r in &p.rates {
                writeln!(w, "{},rate_hz,{r}", p.name)?;
            }
            for cv in p.cvs.iter().flatten() {
                writeln!(w, "{},cv_isi,{cv}", p.name)?;
            }
            for r in &p.pearson {
                writeln!(w, "{},pearson,{r}", p.name)?;
            }
        }
        Ok(())
    }
}

impl CompareReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "exact match: {}\n{:<10} {:>12} {:>12} {:>10} {:>10}\n",
            self.exact_match, "pop", "d.rate(rel)", "d.rate(Hz)", "d.CV", "d.mean_r"
        ));
        for d in &self.per_pop {
            out.push_str(&format!(
                "{:<10} {:>12.5} {:>12.5} {:>10} {:>10}\n",
                d.name,
                d.rate_delta_rel,
                d.rate_delta_abs,
                d.cv_delta.map_or("n/a".into(), |v| format!("{v:.5}")),
                d.pearson_mean_delta.map_or("n/a".into(), |v| format!("{v:.5}")),
            ));
        }
        out
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = vec![("exact_match".to_string(), self.exact_match.to_string())];
        for d in &self.per_pop {
            pairs.push((format!("{}.rate_delta_rel", d.name), d.rate_delta_rel.to_string()));
            if let Some(cv) = d.cv_delta {
                pairs.push((format!("{}.cv_delta", d.name), cv.to_string()));
            }
            if let Some(r) = d.pearson_mean_delta {
                pairs.push((format!("{}.pearson_mean_delta", d.name), r.to_string()));
            }
        }
        pairs
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
