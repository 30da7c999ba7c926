//! Discrete-event execution on a virtual clock.
//!
//! Every slave task is run for real, one after another, and its duration is
//! charged to that slave's own timeline. The master is a single server: it
//! handles arrivals in time order and each handling costs its measured
//! duration. Messages take their encode plus decode time to travel. The
//! resulting makespan is what the run would take with one processor per
//! party and no contention between them.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;

use super::master::{Master, Outgoing};
use super::message::{decode_frame, encode_frame, Message};
use super::metrics::{Accounting, RunMetrics};
use super::slave::{SlaveReport, SlaveWorker, TileSource};
use super::SlaveId;
use crate::error::Result;
use crate::pointdata::TileMap;
use crate::segmentation::SegmentationParams;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SimClock {
    /// Charge measured wall-clock durations.
    #[default]
    Measured,
    /// Charge fixed costs per point, for reproducible schedules. Master
    /// handling is free.
    PerPoint { segment_secs: f64, transfer_secs: f64 },
}

#[derive(Clone, Copy, Debug)]
struct At(f64, u64);

impl PartialEq for At {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for At {}

impl PartialOrd for At {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for At {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Arrival {
    from: SlaveId,
    msg: Message,
    bytes: usize,
}

/// Ships `msg` through the wire codec and returns it with its transfer time.
fn transfer(msg: Message, map: &TileMap, clock: SimClock) -> Result<(Message, f64, usize)> {
    match clock {
        SimClock::Measured => {
            let t0 = Instant::now();
            let mut buf = Vec::with_capacity(msg.wire_len());
            encode_frame(&msg, map, &mut buf)?;
            let back = decode_frame(&buf[4..], map)?;
            Ok((back, t0.elapsed().as_secs_f64(), buf.len()))
        }
        SimClock::PerPoint { transfer_secs, .. } => {
            let n = msg.wire_len();
            let secs = transfer_secs * msg.point_count() as f64;
            Ok((msg, secs, n))
        }
    }
}

struct Sim<'a> {
    map: &'a TileMap,
    clock: SimClock,
    slaves: Vec<SlaveWorker>,
    busy: Vec<f64>,
    finished_at: Vec<f64>,
    acct: Accounting,
    events: BinaryHeap<Reverse<(At, usize)>>,
    arrivals: Vec<Option<Arrival>>,
    seq: u64,
}

impl Sim<'_> {
    fn handle_cost(&self, t0: Instant) -> f64 {
        match self.clock {
            SimClock::Measured => t0.elapsed().as_secs_f64(),
            SimClock::PerPoint { .. } => 0.0,
        }
    }

    /// Sends the master's output at time `depart`. Each receiving slave runs
    /// its task immediately and its reply is queued for the master.
    fn deliver(&mut self, out: Vec<Outgoing>, depart: f64) -> Result<()> {
        for Outgoing(to, msg) in out {
            self.acct.sent(depart, to, &msg, msg.wire_len());
            let (msg, down, _) = transfer(msg, self.map, self.clock)?;
            self.acct.transfer_secs += down;
            let begin = depart + down;
            let t0 = Instant::now();
            let Some(reply) = self.slaves[to].process(msg)? else {
                self.finished_at[to] = begin;
                continue;
            };
            let work = match self.clock {
                SimClock::Measured => t0.elapsed().as_secs_f64(),
                SimClock::PerPoint { segment_secs, .. } => {
                    segment_secs * self.slaves[to].report().tasks.last().map_or(0, |t| t.points) as f64
                }
            };
            self.busy[to] += work;
            let (reply, up, bytes) = transfer(reply, self.map, self.clock)?;
            self.acct.transfer_secs += up;
            self.arrivals.push(Some(Arrival { from: to, msg: reply, bytes }));
            self.events.push(Reverse((At(begin + work + up, self.seq), self.arrivals.len() - 1)));
            self.seq += 1;
        }
        Ok(())
    }
}

pub(crate) fn run_simulated(
    master: &mut Master,
    map: &TileMap,
    source: Arc<dyn TileSource>,
    params: &SegmentationParams,
    clock: SimClock,
) -> Result<(Vec<SlaveReport>, RunMetrics)> {
    let workers = master.workers();
    let mut sim = Sim {
        map,
        clock,
        slaves: (0..workers).map(|_| SlaveWorker::new(source.clone(), map.clone(), params.clone())).collect(),
        busy: vec![0.0; workers],
        finished_at: vec![0.0; workers],
        acct: Accounting::new(workers),
        events: BinaryHeap::new(),
        arrivals: Vec::new(),
        seq: 0,
    };

    let t0 = Instant::now();
    let out = master.start()?;
    let mut master_free = sim.handle_cost(t0);
    sim.acct.master_busy += master_free;
    sim.deliver(out, master_free)?;
    sim.acct.note_drain(master_free, master.unassigned_tiles());

    while let Some(Reverse((At(t, _), idx))) = sim.events.pop() {
        let Arrival { from, msg, bytes } = sim.arrivals[idx].take().expect("each arrival handled once");
        let begin = t.max(master_free);
        sim.acct.received(t, from, &msg, bytes);
        let t0 = Instant::now();
        let out = master.handle(from, msg)?;
        let cost = sim.handle_cost(t0);
        sim.acct.master_busy += cost;
        master_free = begin + cost;
        sim.deliver(out, master_free)?;
        sim.acct.note_drain(master_free, master.unassigned_tiles());
    }
    debug_assert!(master.is_finished());

    let wall = sim.finished_at.iter().copied().fold(master_free, f64::max);
    let reports: Vec<SlaveReport> = sim.slaves.into_iter().map(SlaveWorker::into_report).collect();
    let mut metrics = sim.acct.finish("simulated", wall, &reports, Some(sim.busy));
    if let SimClock::PerPoint { segment_secs, .. } = clock {
        // Report the charged durations rather than the measured ones.
        metrics.mean_tile_secs = segment_secs * metrics.mean_tile_points;
        metrics.measured_speedup = metrics.tiles as f64 * metrics.mean_tile_secs / wall;
        metrics.segment_secs_per_point = segment_secs;
        metrics.coeff_ratio = if metrics.comm_secs_per_point > 0.0 {
            segment_secs / metrics.comm_secs_per_point
        } else {
            f64::INFINITY
        };
    }
    Ok((reports, metrics))
}
