use std::net::TcpListener;
use std::sync::Arc;
use std::time::Instant;

use super::master::{Master, Outgoing, TilePolicy};
use super::metrics::{Accounting, RunMetrics};
use super::sim::{run_simulated, SimClock};
use super::slave::{slave_run, SlaveReport, SlaveWorker, TileSource};
use super::transport::{connect_slave, ChannelMaster, ChannelSlave, MasterLink, TcpMaster};
use crate::error::{Error, Result};
use crate::pointdata::TileMap;
use crate::segmentation::{sort_records, CrownRecord, SegmentationParams};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum TransportKind {
    /// Slave threads linked by channels.
    #[default]
    InProcess,
    /// Slave threads talking length-prefixed frames over loopback TCP.
    Socket,
    /// One thread; slaves run back to back and a virtual clock schedules them
    /// as if each had its own processor.
    Simulated(SimClock),
}

impl TransportKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransportKind::InProcess => "in-process",
            TransportKind::Socket => "socket",
            TransportKind::Simulated(_) => "simulated",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: usize,
    pub transport: TransportKind,
    pub policy: TilePolicy,
}

#[derive(Clone, Debug)]
pub struct DistributedRun {
    /// All crowns written by the slaves, in canonical order.
    pub crowns: Vec<CrownRecord>,
    pub metrics: RunMetrics,
}

/// Segments every tile of `map` with `opts.workers` slaves.
pub fn run_distributed(
    map: &TileMap,
    source: Arc<dyn TileSource>,
    params: &SegmentationParams,
    opts: &RunOptions,
) -> Result<DistributedRun> {
    params.validate()?;
    let mut master = Master::new(map, opts.workers, opts.policy)?;
    let (reports, metrics) = match opts.transport {
        TransportKind::Simulated(clock) => run_simulated(&mut master, map, source, params, clock)?,
        TransportKind::InProcess => run_threads(&mut master, map, source, params, false)?,
        TransportKind::Socket => run_threads(&mut master, map, source, params, true)?,
    };
    let mut crowns: Vec<CrownRecord> = reports.into_iter().flat_map(|r| r.crowns).collect();
    sort_records(&mut crowns);
    Ok(DistributedRun { crowns, metrics })
}

fn run_threads(
    master: &mut Master,
    map: &TileMap,
    source: Arc<dyn TileSource>,
    params: &SegmentationParams,
    socket: bool,
) -> Result<(Vec<SlaveReport>, RunMetrics)> {
    let workers = master.workers();
    let start = Instant::now();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        let mut link: Box<dyn MasterLink> = if socket {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            for _ in 0..workers {
                let worker = SlaveWorker::new(source.clone(), map.clone(), params.clone());
                let map = map.clone();
                handles.push(scope.spawn(move || {
                    let mut link = connect_slave(addr, &map)?;
                    slave_run(&mut link, worker)
                }));
            }
            Box::new(TcpMaster::accept(&listener, workers, map)?)
        } else {
            let (to_master, inbox) = std::sync::mpsc::channel();
            let mut outboxes = Vec::with_capacity(workers);
            for id in 0..workers {
                let (tx, rx) = std::sync::mpsc::channel();
                outboxes.push(tx);
                let mut link = ChannelSlave { id, inbox: rx, outbox: to_master.clone() };
                let worker = SlaveWorker::new(source.clone(), map.clone(), params.clone());
                handles.push(scope.spawn(move || {
                    let r = slave_run(&mut link, worker);
                    if let Err(e) = &r {
                        let _ = link.outbox.send(super::transport::Envelope::Failed(id, e.to_string()));
                    }
                    r
                }));
            }
            Box::new(ChannelMaster { inbox, outboxes })
        };
        let acct = master_loop(master, link.as_mut(), start)?;
        drop(link);
        let wall = start.elapsed().as_secs_f64();
        let reports = handles
            .into_iter()
            .map(|h| h.join().map_err(|_| Error::Transport("slave thread panicked".into()))?)
            .collect::<Result<Vec<_>>>()?;
        let name = if socket { "socket" } else { "in-process" };
        let metrics = acct.finish(name, wall, &reports, None);
        Ok((reports, metrics))
    })
}

/// Drives `master` over `link` until every slave has been sent FIN.
pub(crate) fn master_loop(master: &mut Master, link: &mut dyn MasterLink, start: Instant) -> Result<Accounting> {
    let now = || start.elapsed().as_secs_f64();
    let mut acct = Accounting::new(master.workers());
    let t0 = Instant::now();
    let out = master.start()?;
    acct.master_busy += t0.elapsed().as_secs_f64();
    dispatch(master, link, &mut acct, out, now())?;
    while !master.is_finished() {
        let (from, msg, bytes) = link.recv()?;
        acct.received(now(), from, &msg, bytes);
        let t0 = Instant::now();
        let out = master.handle(from, msg)?;
        acct.master_busy += t0.elapsed().as_secs_f64();
        dispatch(master, link, &mut acct, out, now())?;
    }
    Ok(acct)
}

fn dispatch(
    master: &Master,
    link: &mut dyn MasterLink,
    acct: &mut Accounting,
    out: Vec<Outgoing>,
    now: f64,
) -> Result<()> {
    for Outgoing(to, msg) in out {
        acct.sent(now, to, &msg, msg.wire_len());
        link.send(to, msg)?;
    }
    acct.note_drain(now, master.unassigned_tiles());
    Ok(())
}

/// Serves externally started slaves (for example separate processes) that
/// connect to `listener`. Returns the metrics without slave-side numbers.
pub fn serve_master(listener: &TcpListener, map: &TileMap, workers: usize, policy: TilePolicy) -> Result<RunMetrics> {
    let mut master = Master::new(map, workers, policy)?;
    let start = Instant::now();
    let mut link = TcpMaster::accept(listener, workers, map)?;
    let acct = master_loop(&mut master, &mut link, start)?;
    let wall = start.elapsed().as_secs_f64();
    let mut metrics = acct.finish("socket", wall, &vec![SlaveReport::default(); workers], None);
    metrics.tiles = metrics.messages.tc as usize;
    metrics.boundaries = metrics.messages.bc as usize;
    Ok(metrics)
}
