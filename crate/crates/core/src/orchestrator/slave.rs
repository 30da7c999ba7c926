use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;

use super::message::Message;
use crate::boundary::{partition_boundary, shared_sides};
use crate::error::{Error, Result};
use crate::pointdata::{Manifest, Tile, TileId, TileMap};
use crate::segmentation::{segment, segment_surface, CrownRecord, SegmentationParams};
use crate::timing::Stopwatch;

/// Where slaves load tile point data from.
pub trait TileSource: Send + Sync {
    fn load(&self, id: TileId) -> Result<Tile>;
}

/// Tiles held in memory, shared between in-process slaves.
#[derive(Clone, Debug, Default)]
pub struct MemorySource(pub Arc<BTreeMap<TileId, Tile>>);

impl MemorySource {
    pub fn new(tiles: impl IntoIterator<Item = Tile>) -> Self {
        Self(Arc::new(tiles.into_iter().map(|t| (t.id, t)).collect()))
    }
}

impl TileSource for MemorySource {
    fn load(&self, id: TileId) -> Result<Tile> {
        self.0.get(&id).cloned().ok_or_else(|| Error::protocol(format!("no data for tile {id}")))
    }
}

/// Tiles read from the files listed in a manifest.
#[derive(Clone, Debug)]
pub struct ManifestSource {
    pub manifest: Manifest,
    pub base_dir: PathBuf,
}

impl TileSource for ManifestSource {
    fn load(&self, id: TileId) -> Result<Tile> {
        let entry = self.manifest.entry(id).ok_or_else(|| Error::protocol(format!("tile {id} not in manifest")))?;
        entry.load_tile(&self.base_dir)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaskTiming {
    pub boundary: bool,
    pub points: usize,
    pub crowns: usize,
    /// Time spent segmenting.
    pub segment_secs: f64,
    /// Whole task, loading and classification included.
    pub total_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlaveReport {
    pub tiles: usize,
    pub boundaries: usize,
    pub crowns: Vec<CrownRecord>,
    pub tasks: Vec<TaskTiming>,
}

impl SlaveReport {
    pub fn busy_secs(&self) -> f64 {
        self.tasks.iter().map(|t| t.total_secs).sum()
    }
}

/// Executes PT and PB assignments and accumulates the crowns it writes.
pub struct SlaveWorker {
    source: Arc<dyn TileSource>,
    map: TileMap,
    params: SegmentationParams,
    report: SlaveReport,
}

impl SlaveWorker {
    pub fn new(source: Arc<dyn TileSource>, map: TileMap, params: SegmentationParams) -> Self {
        Self { source, map, params, report: SlaveReport::default() }
    }

    /// Runs one assignment and returns its completion message, or `None` on FIN.
    pub fn process(&mut self, msg: Message) -> Result<Option<Message>> {
        let sw = Stopwatch::start();
        match msg {
            Message::Pt(id) => {
                let tile = self.source.load(id)?;
                let seg_sw = Stopwatch::start();
                let seg = segment(&tile.points, &self.params)?;
                let segment_secs = seg_sw.secs();
                let records = seg.records();
                let crowns = records.len();
                let shared =
                    shared_sides(&self.map, id).ok_or_else(|| Error::protocol(format!("tile {id} not in the map")))?;
                let part = partition_boundary(id, records, &tile.bounds, tile.nps, &shared)?;
                let (interior, report) = part.into_report();
                self.report.crowns.extend(interior);
                self.report.tiles += 1;
                self.report.tasks.push(TaskTiming {
                    boundary: false,
                    points: tile.points.len(),
                    crowns,
                    segment_secs,
                    total_secs: sw.secs(),
                });
                Ok(Some(Message::Tc(report)))
            }
            Message::Pb(key, cloud) => {
                let seg_sw = Stopwatch::start();
                let seg = segment_surface(cloud, &self.params)?;
                let segment_secs = seg_sw.secs();
                let records = seg.records();
                let n = records.len();
                self.report.crowns.extend(records);
                self.report.boundaries += 1;
                self.report.tasks.push(TaskTiming {
                    boundary: true,
                    points: seg.surface.len(),
                    crowns: n,
                    segment_secs,
                    total_secs: sw.secs(),
                });
                Ok(Some(Message::Bc(key, n as u32)))
            }
            Message::Fin => Ok(None),
            other => Err(Error::protocol(format!("slave received {:?}", other.tag()))),
        }
    }

    pub fn report(&self) -> &SlaveReport {
        &self.report
    }

    pub fn into_report(self) -> SlaveReport {
        self.report
    }
}

/// A slave's connection to the master.
pub trait SlaveLink {
    fn send(&mut self, msg: Message) -> Result<()>;
    fn recv(&mut self) -> Result<Message>;
}

/// Serves assignments until FIN.
pub fn slave_run(link: &mut dyn SlaveLink, mut worker: SlaveWorker) -> Result<SlaveReport> {
    loop {
        let msg = link.recv()?;
        match worker.process(msg)? {
            Some(reply) => link.send(reply)?,
            None => return Ok(worker.into_report()),
        }
    }
}
