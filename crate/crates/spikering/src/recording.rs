//! Spike recordings, run metrics, and their on-disk formats.
//!
//! Recording text format: one `timestep<TAB>neuron_id` line per spike, in
//! nondecreasing timestep order (ties sorted by neuron ID). The compact
//! binary variant stores the same pairs as little-endian u32 pairs. The
//! sidecar metadata file is `key=value` text, one pair per line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordingError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {0}: malformed spike record")]
    Malformed(usize),
    #[error("recording not sorted at line {0}")]
    Unsorted(usize),
}

/// An ordered spike event log plus the run dimensions needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRecording {
    /// Timestep count of the run that produced this recording.
    pub steps: u64,
    /// Timestep in ms.
    pub dt: f64,
    /// `(timestep, global neuron ID)`, sorted.
    pub events: Vec<(u32, u32)>,
}

impl SpikeRecording {
    pub fn new(steps: u64, dt: f64) -> Self {
        Self { steps, dt, events: Vec::new() }
    }

    /// Biological duration covered, in seconds.
    pub fn duration_s(&self) -> f64 {
        self.steps as f64 * self.dt / 1000.0
    }

    pub fn write_text(&self, path: &Path) -> Result<(), RecordingError> {
        let mut w = BufWriter::new(File::create(path)?);
        for &(t, n) in &self.events {
            writeln!(w, "{t}\t{n}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the text format. `steps` and `dt` come from the caller (the
    /// sidecar metadata), since spike lines alone do not carry them.
    pub fn read_text(path: &Path, steps: u64, dt: f64) -> Result<Self, RecordingError> {
        let r = BufReader::new(File::open(path)?);
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once('\t').ok_or(RecordingError::Malformed(i + 1))?;
            let t: u32 = a.parse().map_err(|_| RecordingError::Malformed(i + 1))?;
            let n: u32 = b.parse().map_err(|_| RecordingError::Malformed(i + 1))?;
            if let Some(&last) = events.last() {
                if (t, n) < last {
                    return Err(RecordingError::Unsorted(i + 1));
                }
            }
            events.push((t, n));
        }
        Ok(Self { steps, dt, events })
    }

    pub fn write_binary(&self, path: &Path) -> Result<(), RecordingError> {
        let mut w = BufWriter::new(File::create(path)?);
        for &(t, n) in &self.events {
            w.write_all(&t.to_le_bytes())?;
            w.write_all(&n.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path, steps: u64, dt: f64) -> Result<Self, RecordingError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut events = Vec::new();
        let mut buf = [0u8; 8];
        loop {
            match r.read_exact(&mut buf) {
                Ok(()) => {
                    let t = u32::from_le_bytes(buf[0..4].try_into().unwrap());
                    let n = u32::from_le_bytes(buf[4..8].try_into().unwrap());
                    events.push((t, n));
                }
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Self { steps, dt, events })
    }

    /// Spike count per neuron over `[from_step, to_step)`.
    pub fn counts_in_window(&self, n_neurons: u32, from_step: u64, to_step: u64) -> Vec<u32> {
        let mut counts = vec![0u32; n_neurons as usize];
        for &(t, n) in &self.events {
            if (t as u64) >= from_step && (t as u64) < to_step {
                counts[n as usize] += 1;
            }
        }
        counts
    }
}

/// Counters gathered over one run. Event counts are deterministic; queue
/// occupancy and stall counters reflect the actual schedule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub steps: u64,
    pub total_spikes: u64,
    /// Sum of fanout over all spikes == packets that reached an accumulator.
    pub synaptic_events: u64,
    /// DATA packets injected into ring streams (excludes local deliveries).
    pub data_injected: u64,
    /// DATA stream-edge crossings; equals the sum of shortest distances.
    pub data_hops: u64,
    /// Sum of shortest ring distances over all dispatched packets.
    pub expected_data_hops: u64,
    /// Sync-token stream-edge crossings.
    pub token_hops: u64,
    /// LOCAL_SYNC tokens emitted by fetch stages (consumed core-locally).
    pub local_sync_tokens: u64,
    /// DATA crossings of inter-device boundary edges.
    pub inter_device_crossings: u64,
    /// DATA crossings per directed ring edge: `[right edge 0.., left edge 0..]`.
    pub edge_traffic_right: Vec<u64>,
    pub edge_traffic_left: Vec<u64>,
    /// Highest stream occupancy observed (producer-side sample).
    pub max_queue_occupancy: usize,
    /// Failed push attempts that stalled a stream.
    pub stall_events: u64,
}

impl RunMetrics {
    pub fn new(n_cores: u32) -> Self {
        Self {
            edge_traffic_right: vec![0; n_cores as usize],
            edge_traffic_left: vec![0; n_cores as usize],
            ..Default::default()
        }
    }

    pub fn absorb(&mut self, other: &RunMetrics) {
        self.total_spikes += other.total_spikes;
        self.synaptic_events += other.synaptic_events;
        self.data_injected += other.data_injected;
        self.data_hops += other.data_hops;
        self.expected_data_hops += other.expected_data_hops;
        self.token_hops += other.token_hops;
        self.local_sync_tokens += other.local_sync_tokens;
        self.inter_device_crossings += other.inter_device_crossings;
        for (a, b) in self.edge_traffic_right.iter_mut().zip(&other.edge_traffic_right) {
            *a += b;
        }
        for (a, b) in self.edge_traffic_left.iter_mut().zip(&other.edge_traffic_left) {
            *a += b;
        }
        self.max_queue_occupancy = self.max_queue_occupancy.max(other.max_queue_occupancy);
        self.stall_events += other.stall_events;
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("steps".into(), self.steps.to_string()),
            ("total_spikes".into(), self.total_spikes.to_string()),
            ("synaptic_events".into(), self.synaptic_events.to_string()),
            ("data_injected".into(), self.data_injected.to_string()),
            ("data_hops".into(), self.data_hops.to_string()),
            ("token_hops".into(), self.token_hops.to_string()),
            ("local_sync_tokens".into(), self.local_sync_tokens.to_string()),
            ("inter_device_crossings".into(), self.inter_device_crossings.to_string()),
            ("max_queue_occupancy".into(), self.max_queue_occupancy.to_string()),
            ("stall_events".into(), self.stall_events.to_string()),
        ]
    }
}

/// Write `key=value` metadata lines.
pub fn write_meta(path: &Path, pairs: &[(String, String)]) -> Result<(), RecordingError> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read `key=value` metadata lines.
pub fn read_meta(path: &Path) -> Result<Vec<(String, String)>, RecordingError> {
    let r = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(RecordingError::Malformed(i + 1))?;
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

/// Look up one metadata key.
pub fn meta_get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn text_and_binary_round_trip() {
        let dir = tempdir().unwrap();
        let mut rec = SpikeRecording::new(100, 0.1);
        rec.events = vec![(0, 5), (0, 9), (3, 1), (99, 0)];
        let tp = dir.path().join("spikes.txt");
        let bp = dir.path().join("spikes.bin");
        rec.write_text(&tp).unwrap();
        rec.write_binary(&bp).unwrap();
        assert_eq!(SpikeRecording::read_text(&tp, 100, 0.1).unwrap(), rec);
        assert_eq!(SpikeRecording::read_binary(&bp, 100, 0.1).unwrap(), rec);
        let raw = std::fs::read_to_string(&tp).unwrap();
        assert_eq!(raw.lines().next(), Some("0\t5"));
    }

    #[test]
    fn unsorted_text_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.txt");
        std::fs::write(&p, "5\t1\n4\t1\n").unwrap();
        assert!(matches!(
            SpikeRecording::read_text(&p, 10, 0.1),
            Err(RecordingError::Unsorted(2))
        ));
    }

    #[test]
    fn meta_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("meta.txt");
        let pairs = vec![
            ("seed".to_string(), "42".to_string()),
            ("mode".to_string(), "ring".to_string()),
        ];
        write_meta(&p, &pairs).unwrap();
        let back = read_meta(&p).unwrap();
        assert_eq!(back, pairs);
        assert_eq!(meta_get(&back, "seed"), Some("42"));
        assert_eq!(meta_get(&back, "missing"), None);
    }

    #[test]
    fn window_counts() {
        let mut rec = SpikeRecording::new(10, 0.1);
        rec.events = vec![(1, 0), (2, 0), (5, 1), (9, 0)];
        let c = rec.counts_in_window(2, 2, 10);
        assert_eq!(c, vec![2, 1]);
    }
}
