use serde::Serialize;

use super::message::{Message, Tag};
use super::slave::SlaveReport;
use super::SlaveId;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub pt: u64,
    pub tc: u64,
    pub pb: u64,
    pub bc: u64,
    pub fin: u64,
}

impl MessageCounts {
    fn bump(&mut self, tag: Tag) {
        match tag {
            Tag::Pt => self.pt += 1,
            Tag::Tc => self.tc += 1,
            Tag::Pb => self.pb += 1,
            Tag::Bc => self.bc += 1,
            Tag::Fin => self.fin += 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SlaveMetrics {
    pub busy_secs: f64,
    pub idle_secs: f64,
    pub tiles: usize,
    pub boundaries: usize,
    pub crowns: usize,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

/// Measurements of one distributed run. Byte counts are framed wire sizes;
/// `bytes_sent`/`bytes_received` are seen from the master.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub transport: String,
    pub workers: usize,
    pub wall_secs: f64,
    pub master_busy_secs: f64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages: MessageCounts,
    pub slaves: Vec<SlaveMetrics>,
    pub tiles: usize,
    pub boundaries: usize,
    pub crowns: usize,
    pub tile_points: u64,
    pub boundary_points: u64,
    /// Points carried by TC and PB messages together.
    pub transferred_points: u64,
    pub mean_tile_secs: f64,
    /// Tile count times mean tile time, over wall time.
    pub measured_speedup: f64,
    pub mean_tile_points: f64,
    pub mean_crown_points: f64,
    pub segment_secs_per_point: f64,
    pub comm_secs_per_point: f64,
    /// Segmentation cost per point over communication cost per point.
    pub coeff_ratio: f64,
    /// When the last unassigned tile was handed out.
    pub drain_start_secs: f64,
    pub idle_fraction_before_drain: f64,
}

/// Running totals kept by a master loop; `now` is seconds since the start.
#[derive(Debug, Default)]
pub(crate) struct Accounting {
    pub master_busy: f64,
    pub transfer_secs: f64,
    bytes_sent: u64,
    bytes_received: u64,
    counts: MessageCounts,
    per_slave: Vec<(u64, u64)>,
    open: Vec<Option<f64>>,
    intervals: Vec<Vec<(f64, f64)>>,
    drain_start: Option<f64>,
    transferred_points: u64,
    boundary_points: u64,
}

impl Accounting {
    pub fn new(workers: usize) -> Self {
        Self {
            per_slave: vec![(0, 0); workers],
            open: vec![None; workers],
            intervals: vec![Vec::new(); workers],
            ..Default::default()
        }
    }

    pub fn sent(&mut self, now: f64, to: SlaveId, msg: &Message, bytes: usize) {
        self.bytes_sent += bytes as u64;
        self.per_slave[to].1 += bytes as u64;
        self.counts.bump(msg.tag());
        self.transferred_points += msg.point_count() as u64;
        if let Message::Pb(_, c) = msg {
            self.boundary_points += c.len() as u64;
        }
        if !matches!(msg, Message::Fin) {
            self.open[to] = Some(now);
        }
    }

    pub fn received(&mut self, now: f64, from: SlaveId, msg: &Message, bytes: usize) {
        self.bytes_received += bytes as u64;
        self.per_slave[from].0 += bytes as u64;
        self.counts.bump(msg.tag());
        self.transferred_points += msg.point_count() as u64;
        if let Some(t0) = self.open[from].take() {
            self.intervals[from].push((t0, now));
        }
    }

    pub fn note_drain(&mut self, now: f64, unassigned: usize) {
        if unassigned == 0 && self.drain_start.is_none() {
            self.drain_start = Some(now);
        }
    }

    pub fn finish(self, transport: &str, wall: f64, reports: &[SlaveReport], busy: Option<Vec<f64>>) -> RunMetrics {
        let workers = reports.len();
        let busy = busy.unwrap_or_else(|| reports.iter().map(SlaveReport::busy_secs).collect());
        let slaves: Vec<SlaveMetrics> = reports
            .iter()
            .zip(&busy)
            .zip(&self.per_slave)
            .map(|((r, &b), &(sent, recv))| SlaveMetrics {
                busy_secs: b,
                idle_secs: (wall - b).max(0.0),
                tiles: r.tiles,
                boundaries: r.boundaries,
                crowns: r.crowns.len(),
                bytes_sent: sent,
                bytes_received: recv,
            })
            .collect();
        let tile_tasks: Vec<_> = reports.iter().flat_map(|r| r.tasks.iter().filter(|t| !t.boundary)).collect();
        let tiles = tile_tasks.len();
        let tile_points: u64 = tile_tasks.iter().map(|t| t.points as u64).sum();
        let tile_crowns: usize = tile_tasks.iter().map(|t| t.crowns).sum();
        let tile_secs: f64 = tile_tasks.iter().map(|t| t.total_secs).sum();
        let seg_secs: f64 = tile_tasks.iter().map(|t| t.segment_secs).sum();
        let mean_tile_secs = if tiles > 0 { tile_secs / tiles as f64 } else { 0.0 };
        let segment_secs_per_point = if tile_points > 0 { seg_secs / tile_points as f64 } else { 0.0 };
        let comm_secs = self.master_busy + self.transfer_secs;
        let comm_secs_per_point =
            if self.transferred_points > 0 { comm_secs / self.transferred_points as f64 } else { 0.0 };
        let drain = self.drain_start.unwrap_or(wall);
        let idle_fraction_before_drain = if drain > 0.0 && workers > 0 {
            let covered: f64 = self
                .intervals
                .iter()
                .flatten()
                .map(|&(a, b)| (b.min(drain) - a.min(drain)).max(0.0))
                .sum();
            (1.0 - covered / (drain * workers as f64)).max(0.0)
        } else {
            0.0
        };
        RunMetrics {
            transport: transport.to_string(),
            workers,
            wall_secs: wall,
            master_busy_secs: self.master_busy,
            bytes_sent: self.bytes_sent,
            bytes_received: self.bytes_received,
            messages: self.counts,
            tiles,
            boundaries: slaves.iter().map(|s| s.boundaries).sum(),
            crowns: slaves.iter().map(|s| s.crowns).sum(),
            slaves,
            tile_points,
            boundary_points: self.boundary_points,
            transferred_points: self.transferred_points,
            mean_tile_secs,
            measured_speedup: if wall > 0.0 { tiles as f64 * mean_tile_secs / wall } else { 0.0 },
            mean_tile_points: if tiles > 0 { tile_points as f64 / tiles as f64 } else { 0.0 },
            mean_crown_points: if tile_crowns > 0 { tile_points as f64 / tile_crowns as f64 } else { 0.0 },
            segment_secs_per_point,
            comm_secs_per_point,
            coeff_ratio: if comm_secs_per_point > 0.0 { segment_secs_per_point / comm_secs_per_point } else { f64::INFINITY },
            drain_start_secs: drain,
            idle_fraction_before_drain,
        }
    }
}
