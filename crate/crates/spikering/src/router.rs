//! Per-core packet router: bidirectional ring streams, neighbor-priority
//! arbitration, local consumption, and sync-token bookkeeping.
//!
//! Streams are bounded FIFOs. A packet picks its travel direction at
//! injection (shorter route) and keeps it; routers either consume a packet
//! locally or forward it unchanged. Transit traffic always outranks local
//! injection: a forward needs one free slot downstream, while an injection
//! must leave a spare slot behind it (the classic injection bubble), which
//! keeps every ring direction from filling completely and therefore keeps
//! transit packets able to move — backpressure stalls, never drops or
//! wedges.
//!
//! Timestep barrier: after its fetch stage drains, each core emits one
//! GLOBAL_SYNC token carrying its core ID into *both* ring directions.
//! Tokens are forwarded in their travel direction until they return to
//! their origin. Because a stream is FIFO and every core forwards in
//! arrival order, a token can never overtake DATA traveling the same
//! direction, so observing every origin's token on an inbound stream
//! proves that all of the previous step's DATA on that stream has been
//! delivered. Each inbound stream therefore sees exactly `n_cores` tokens
//! per step; counting them ("token waves") both completes the barrier and
//! tells the receiver which timestep an early packet from a fast neighbor
//! originated in, so it can be parked until this core's matching release
//! has happened.

use crate::accumulator::DelayAccumulator;
use crate::error::SimError;
use crate::packet::{word, SyncClass};
use crate::recording::RunMetrics;
use crate::topology::{Direction, TopologyConfig};
use crossbeam_channel::{Receiver, Sender, TryRecvError};

/// One in-flight packet: the 64-bit wire word plus provenance sideband.
///
/// Routing and consumption read only the word; `src` and `edge_idx` exist
/// solely so canonical-order accumulation can sort contributions by
/// `(src, edge index)` at the consumer.
#[derive(Debug, Clone, Copy)]
pub struct RoutedPacket {
    pub word: u64,
    pub src: u32,
    pub edge_idx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    FromLeft,
    FromRight,
}

/// Delivery context handed to the router by the owning core.
pub struct DeliverCtx<'a> {
    pub step: u64,
    pub acc: &'a mut DelayAccumulator,
    /// Packets from the next epoch, parked until this core's next release.
    pub deferred: &'a mut Vec<RoutedPacket>,
    pub metrics: &'a mut RunMetrics,
    pub delivered: &'a mut u64,
}

/// Router state of one core.
pub struct RouterState {
    core: u32,
    n_cores: u32,
    core_capacity: u32,
    queue_cap: usize,
    out_right: Sender<RoutedPacket>,
    out_left: Sender<RoutedPacket>,
    in_from_left: Receiver<RoutedPacket>,
    in_from_right: Receiver<RoutedPacket>,
    pend_from_left: Option<RoutedPacket>,
    pend_from_right: Option<RoutedPacket>,
    /// Token-wave counters per inbound stream; the stream's current epoch.
    epoch_from_left: u64,
    epoch_from_right: u64,
    tokens_from_left: u32,
    tokens_from_right: u32,
    seen_left: Vec<bool>,
    seen_right: Vec<bool>,
    right_edge: u32,
    left_edge: u32,
    boundary_right: bool,
    boundary_left: bool,
}

impl RouterState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        core: u32,
        topo: &TopologyConfig,
        queue_cap: usize,
        out_right: Sender<RoutedPacket>,
        out_left: Sender<RoutedPacket>,
        in_from_left: Receiver<RoutedPacket>,
        in_from_right: Receiver<RoutedPacket>,
    ) -> Self {
        let n = topo.n_cores;
        let right_edge = core;
        let left_edge = (core + n - 1) % n;
        Self {
            core,
            n_cores: n,
            core_capacity: topo.core_capacity,
            queue_cap,
            out_right,
            out_left,
            in_from_left,
            in_from_right,
            pend_from_left: None,
            pend_from_right: None,
            epoch_from_left: 0,
            epoch_from_right: 0,
            tokens_from_left: 0,
            tokens_from_right: 0,
            seen_left: vec![false; n as usize],
            seen_right: vec![false; n as usize],
            right_edge,
            left_edge,
            boundary_right: topo.is_boundary_edge(right_edge),
            boundary_left: topo.is_boundary_edge(left_edge),
        }
    }

    /// Both inbound streams have closed out the given step's token wave.
    #[inline]
    pub fn barrier_passed(&self, step: u64) -> bool {
        self.epoch_from_left > step && self.epoch_from_right > step
    }

    /// Occupancies `(in_left, in_right, out_left, out_right)` for diagnostics.
    pub fn queue_lens(&self) -> (usize, usize, usize, usize) {
        (
            self.in_from_left.len(),
            self.in_from_right.len(),
            self.out_left.len(),
            self.out_right.len(),
        )
    }

    pub fn diagnostics(&self) -> String {
        let (il, ir, ol, or) = self.queue_lens();
        format!(
            "core {}: epochs L{}+{} R{}+{} pend(L:{} R:{}) queues in_l={il} in_r={ir} out_l={ol} out_r={or}",
            self.core,
            self.epoch_from_left,
            self.tokens_from_left,
            self.epoch_from_right,
            self.tokens_from_right,
            self.pend_from_left.is_some(),
            self.pend_from_right.is_some(),
        )
    }

    /// Push toward a neighbor. Transit needs one free slot; injection keeps
    /// one slot spare. Returns false when backpressure stalls the push.
    pub fn try_push(
        &mut self,
        dir: Direction,
        pkt: RoutedPacket,
        inject: bool,
        metrics: &mut RunMetrics,
    ) -> Result<bool, SimError> {
        let (tx, edge, boundary) = match dir {
            Direction::Right => (&self.out_right, self.right_edge, self.boundary_right),
            Direction::Left => (&self.out_left, self.left_edge, self.boundary_left),
            Direction::Local => unreachable!("local delivery does not cross a stream"),
        };
        let len = tx.len();
        let room = if inject { len + 2 <= self.queue_cap } else { len < self.queue_cap };
        if !room {
            metrics.stall_events += 1;
            return Ok(false);
        }
        match tx.try_send(pkt) {
            Ok(()) => {
                let occ = tx.len();
                if occ > metrics.max_queue_occupancy {
                    metrics.max_queue_occupancy = occ;
                }
                match word::sync(pkt.word) {
                    SyncClass::Data => {
                        metrics.data_hops += 1;
                        match dir {
                            Direction::Right => metrics.edge_traffic_right[edge as usize] += 1,
                            Direction::Left => metrics.edge_traffic_left[edge as usize] += 1,
                            Direction::Local => unreachable!(),
                        }
                        if boundary {
                            metrics.inter_device_crossings += 1;
                        }
                    }
                    SyncClass::GlobalSync => metrics.token_hops += 1,
                    other => {
                        return Err(SimError::Protocol {
                            core: self.core,
                            what: format!("{other:?} packet entered a ring stream"),
                        })
                    }
                }
                Ok(true)
            }
            Err(_) => {
                // Full (raced with our len check is impossible single-producer;
                // disconnected peer means a worker died).
                Err(SimError::Protocol {
                    core: self.core,
                    what: "neighbor stream disconnected".into(),
                })
            }
        }
    }

    /// Service both inbound streams, neighbor traffic first, up to `budget`
    /// packets per side. Returns the number of packets fully processed.
    pub fn service(&mut self, budget: u32, ctx: &mut DeliverCtx) -> Result<u32, SimError> {
        let mut done = 0;
        for side in [Side::FromLeft, Side::FromRight] {
            for _ in 0..budget {
                if self.service_one(side, ctx)? {
                    done += 1;
                } else {
                    break;
                }
            }
        }
        Ok(done)
    }

    /// Process at most one packet from the given side. Returns whether a
    /// packet was fully processed (consumed or forwarded).
    fn service_one(&mut self, side: Side, ctx: &mut DeliverCtx) -> Result<bool, SimError> {
        let pend = match side {
            Side::FromLeft => &mut self.pend_from_left,
            Side::FromRight => &mut self.pend_from_right,
        };
        let pkt = match pend.take() {
            Some(p) => p,
            None => {
                let rx = match side {
                    Side::FromLeft => &self.in_from_left,
                    Side::FromRight => &self.in_from_right,
                };
                match rx.try_recv() {
                    Ok(p) => p,
                    Err(TryRecvError::Empty) => return Ok(false),
                    Err(TryRecvError::Disconnected) => return Ok(false),
                }
            }
        };
        // Packets keep their travel direction: traffic arriving from the
        // left neighbor is rightward traffic, and vice versa.
        let forward_dir = match side {
            Side::FromLeft => Direction::Right,
            Side::FromRight => Direction::Left,
        };
        match word::sync(pkt.word) {
            SyncClass::Data => {
                let dst = word::dst(pkt.word);
                if dst / self.core_capacity == self.core {
                    let epoch = self.stream_epoch(side);
                    if epoch == ctx.step {
                        ctx.acc.accumulate(
                            dst,
                            word::delay(pkt.word),
                            word::weight(pkt.word),
                            pkt.src,
                            pkt.edge_idx,
                            ctx.step,
                        )?;
                        *ctx.delivered += 1;
                    } else if epoch == ctx.step + 1 {
                        ctx.deferred.push(pkt);
                    } else {
                        return Err(SimError::Protocol {
                            core: self.core,
                            what: format!(
                                "DATA of epoch {epoch} arrived while core is at step {}",
                                ctx.step
                            ),
                        });
                    }
                    Ok(true)
                } else if self.try_push(forward_dir, pkt, false, ctx.metrics)? {
                    Ok(true)
                } else {
                    self.park(side, pkt);
                    Ok(false)
                }
            }
            SyncClass::GlobalSync => {
                let origin = word::dst(pkt.word);
                if origin >= self.n_cores {
                    return Err(SimError::Protocol {
                        core: self.core,
                        what: format!("sync token from nonexistent core {origin}"),
                    });
                }
                if origin == self.core {
                    // Own token completed the loop; sink it.
                    self.note_token(side, origin)?;
                    Ok(true)
                } else if self.try_push(forward_dir, pkt, false, ctx.metrics)? {
                    self.note_token(side, origin)?;
                    Ok(true)
                } else {
                    self.park(side, pkt);
                    Ok(false)
                }
            }
            other => Err(SimError::Protocol {
                core: self.core,
                what: format!("{other:?} packet received from a neighbor"),
            }),
        }
    }

    fn park(&mut self, side: Side, pkt: RoutedPacket) {
        match side {
            Side::FromLeft => self.pend_from_left = Some(pkt),
            Side::FromRight => self.pend_from_right = Some(pkt),
        }
    }

    #[inline]
    fn stream_epoch(&self, side: Side) -> u64 {
        match side {
            Side::FromLeft => self.epoch_from_left,
            Side::FromRight => self.epoch_from_right,
        }
    }

    /// Count one token of the stream's current wave; a complete wave of
    /// `n_cores` distinct origins advances the stream epoch.
    fn note_token(&mut self, side: Side, origin: u32) -> Result<(), SimError> {
        let (seen, count, epoch) = match side {
            Side::FromLeft => {
                (&mut self.seen_left, &mut self.tokens_from_left, &mut self.epoch_from_left)
            }
            Side::FromRight => {
                (&mut self.seen_right, &mut self.tokens_from_right, &mut self.epoch_from_right)
            }
        };
        let slot = &mut seen[origin as usize];
        if *slot {
            return Err(SimError::Protocol {
                core: self.core,
                what: format!("origin {origin} token seen twice in one wave"),
            });
        }
        *slot = true;
        *count += 1;
        if *count == self.n_cores {
            seen.fill(false);
            *count = 0;
            *epoch += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::SynapsePacket;
    use crossbeam_channel::bounded;

    struct Harness {
        router: RouterState,
        feed_left: Sender<RoutedPacket>,   // into in_from_left
        tap_right: Receiver<RoutedPacket>, // out of out_right
        acc: DelayAccumulator,
        deferred: Vec<RoutedPacket>,
        metrics: RunMetrics,
        delivered: u64,
    }

    /// Core 1 of a 3-core ring with capacity-4 streams; we drive its left
    /// input and observe its right output.
    fn harness(queue_cap: usize) -> Harness {
        let topo = TopologyConfig::new(3, 8, 0.1);
        let (feed_left, in_from_left) = bounded(queue_cap);
        let (_feed_right, in_from_right) = bounded(queue_cap);
        let (out_right, tap_right) = bounded(queue_cap);
        let (out_left, _tap_left) = bounded(queue_cap);
        let router =
            RouterState::new(1, &topo, queue_cap, out_right, out_left, in_from_left, in_from_right);
        Harness {
            router,
            feed_left,
            tap_right,
            acc: DelayAccumulator::new(8, 8, true),
            deferred: Vec::new(),
            metrics: RunMetrics::new(3),
            delivered: 0,
        }
    }

    fn data(dst: u32) -> RoutedPacket {
        RoutedPacket { word: SynapsePacket::data(1.0, dst, 1).unwrap().encode(), src: 0, edge_idx: 0 }
    }

    fn token(origin: u32) -> RoutedPacket {
        RoutedPacket { word: SynapsePacket::global_sync(origin).encode(), src: 0, edge_idx: 0 }
    }

    fn service_all(h: &mut Harness, step: u64) -> u32 {
        let mut ctx = DeliverCtx {
            step,
            acc: &mut h.acc,
            deferred: &mut h.deferred,
            metrics: &mut h.metrics,
            delivered: &mut h.delivered,
        };
        h.router.service(64, &mut ctx).unwrap()
    }

    #[test]
    fn local_data_is_consumed_remote_is_forwarded() {
        let mut h = harness(8);
        h.feed_left.send(data(9)).unwrap(); // core 1: consumed
        h.feed_left.send(data(17)).unwrap(); // core 2: forwarded right
        assert_eq!(service_all(&mut h, 0), 2);
        assert_eq!(h.delivered, 1);
        assert_eq!(h.tap_right.len(), 1);
        assert_eq!(word::dst(h.tap_right.recv().unwrap().word), 17);
        assert_eq!(h.metrics.data_hops, 1);
    }

    #[test]
    fn transit_outranks_injection_at_the_bubble() {
        let mut h = harness(4);
        // Injection must leave one slot spare (len + 2 <= 4): three fit,
        // the fourth stalls at len 3.
        for _ in 0..3 {
            assert!(h.router.try_push(Direction::Right, data(17), true, &mut h.metrics).unwrap());
        }
        assert!(!h.router.try_push(Direction::Right, data(17), true, &mut h.metrics).unwrap());
        assert_eq!(h.metrics.stall_events, 1);
        // Transit may still use the reserved slot.
        h.feed_left.send(data(18)).unwrap();
        h.feed_left.send(data(19)).unwrap();
        assert_eq!(service_all(&mut h, 0), 1);
        assert_eq!(h.tap_right.len(), 4);
        // The stream is full: the next transit packet parks, nothing drops.
        assert_eq!(service_all(&mut h, 0), 0);
        h.tap_right.recv().unwrap();
        assert_eq!(service_all(&mut h, 0), 1);
    }

    #[test]
    fn token_wave_advances_epoch_and_barrier() {
        let mut h = harness(8);
        assert!(!h.router.barrier_passed(0));
        // Rightward tokens of every origin cross this stream once per wave;
        // origin 1 is the router's own returning token (sunk, not forwarded).
        for origin in [0u32, 2] {
            h.feed_left.send(token(origin)).unwrap();
        }
        assert_eq!(service_all(&mut h, 0), 2);
        assert!(!h.router.barrier_passed(0), "own token still missing");
        h.feed_left.send(token(1)).unwrap();
        assert_eq!(service_all(&mut h, 0), 1);
        // Left wave complete; foreign tokens were forwarded, own was sunk.
        assert_eq!(h.tap_right.len(), 2);
        assert_eq!(h.metrics.token_hops, 2);
        // The barrier needs the right-side wave too (driven elsewhere).
        assert!(!h.router.barrier_passed(0));
    }

    #[test]
    fn next_epoch_data_is_deferred_until_release() {
        let mut h = harness(8);
        // Close epoch 0 on the left stream.
        for origin in [0u32, 1, 2] {
            h.feed_left.send(token(origin)).unwrap();
        }
        service_all(&mut h, 0);
        // A fast neighbor's epoch-1 packet arrives while we are at step 0.
        h.feed_left.send(data(9)).unwrap();
        assert_eq!(service_all(&mut h, 0), 1);
        assert_eq!(h.delivered, 0);
        assert_eq!(h.deferred.len(), 1, "early packet parks until our release");
    }

    #[test]
    fn duplicate_origin_in_one_wave_is_a_protocol_fault() {
        let mut h = harness(8);
        h.feed_left.send(token(0)).unwrap();
        h.feed_left.send(token(0)).unwrap();
        let mut ctx = DeliverCtx {
            step: 0,
            acc: &mut h.acc,
            deferred: &mut h.deferred,
            metrics: &mut h.metrics,
            delivered: &mut h.delivered,
        };
        let err = h.router.service(64, &mut ctx).unwrap_err();
        assert!(matches!(err, SimError::Protocol { .. }));
    }

    #[test]
    fn local_sync_never_arrives_from_neighbors() {
        let mut h = harness(8);
        h.feed_left
            .send(RoutedPacket {
                word: SynapsePacket::local_sync(0).encode(),
                src: 0,
                edge_idx: 0,
            })
            .unwrap();
        let mut ctx = DeliverCtx {
            step: 0,
            acc: &mut h.acc,
            deferred: &mut h.deferred,
            metrics: &mut h.metrics,
            delivered: &mut h.delivered,
        };
        assert!(h.router.service(64, &mut ctx).is_err());
    }
}
