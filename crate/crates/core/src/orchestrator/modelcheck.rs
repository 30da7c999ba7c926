//! Schedule exploration for the master protocol.
//!
//! Slaves are abstract: a PT completes with an empty TC and a PB with a BC.
//! The only nondeterminism left is which in-flight assignment completes next,
//! and that is what the explorers enumerate. Every step is checked against
//! bookkeeping kept here, independent of the master's own.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::master::{Master, Outgoing, SlaveId, SlaveStatus, TilePolicy, TileStatus};
use super::message::Message;
use crate::boundary::{BoundaryKey, BoundaryReport, KeyKind};
use crate::error::{Error, Result};
use crate::pointdata::{TileId, TileMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Complete runs checked. For exhaustive search, distinct terminal paths
    /// are not counted separately once their states merge.
    pub schedules: u64,
    pub states: u64,
    pub steps: u64,
    pub max_depth: usize,
}

fn violation(msg: impl Into<String>) -> Error {
    Error::Protocol(format!("model check: {}", msg.into()))
}

/// Boundary keys a map should produce, derived from occupancy alone:
/// `(all keys, keys shared by two or more tiles)`.
pub fn expected_keys(map: &TileMap) -> (BTreeSet<BoundaryKey>, BTreeSet<BoundaryKey>) {
    let occupied = |r: i64, c: i64| map.tile_at(r, c).is_some();
    let mut all = BTreeSet::new();
    let mut shared = BTreeSet::new();
    let (rows, cols) = (map.rows() as i32, map.cols() as i32);
    let mut add = |kind, row: i32, col: i32, around: &[(i32, i32)]| {
        let n = around.iter().filter(|&&(r, c)| occupied(r as i64, c as i64)).count();
        if n > 0 {
            let key = BoundaryKey { kind, row, col };
            all.insert(key);
            if n >= 2 {
                shared.insert(key);
            }
        }
    };
    for r in 0..=rows {
        for c in 0..=cols {
            // Vertical edge (r, c) separates tiles (r, c - 1) and (r, c).
            if r < rows {
                add(KeyKind::VerticalEdge, r, c, &[(r, c - 1), (r, c)]);
            }
            // Horizontal edge (r, c) separates tiles (r - 1, c) and (r, c).
            if c < cols {
                add(KeyKind::HorizontalEdge, r, c, &[(r - 1, c), (r, c)]);
            }
            add(KeyKind::Corner, r, c, &[(r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)]);
        }
    }
    (all, shared)
}

/// What has been sent so far, checked message by message.
#[derive(Clone, Debug, Default)]
struct Tally {
    pt: BTreeMap<TileId, u32>,
    tc: BTreeSet<TileId>,
    pb: BTreeMap<BoundaryKey, u32>,
    bc: BTreeSet<BoundaryKey>,
    fin: BTreeSet<SlaveId>,
    inflight: BTreeMap<SlaveId, Message>,
}

impl Tally {
    fn observe(&mut self, out: &[Outgoing], tiles: usize, keys: usize) -> Result<()> {
        for Outgoing(s, msg) in out {
            if self.fin.contains(s) {
                return Err(violation(format!("slave {s} got {:?} after FIN", msg.tag())));
            }
            if self.inflight.contains_key(s) {
                return Err(violation(format!("slave {s} given a second assignment")));
            }
            match msg {
                Message::Pt(t) => {
                    let n = self.pt.entry(*t).or_default();
                    *n += 1;
                    if *n > 1 {
                        return Err(violation(format!("tile {t} assigned twice")));
                    }
                    self.inflight.insert(*s, msg.clone());
                }
                Message::Pb(k, _) => {
                    let n = self.pb.entry(*k).or_default();
                    *n += 1;
                    if *n > 1 {
                        return Err(violation(format!("boundary {k} unified twice")));
                    }
                    self.inflight.insert(*s, msg.clone());
                }
                Message::Fin => {
                    if self.tc.len() != tiles || self.bc.len() != keys || !self.inflight.is_empty() {
                        return Err(violation(format!(
                            "FIN to slave {s} with {}/{tiles} tiles and {}/{keys} boundaries done",
                            self.tc.len(),
                            self.bc.len()
                        )));
                    }
                    self.fin.insert(*s);
                }
                other => return Err(violation(format!("master sent {:?}", other.tag()))),
            }
        }
        Ok(())
    }

    /// Completes slave `s`'s assignment, returning its reply.
    fn complete(&mut self, s: SlaveId) -> Message {
        match self.inflight.remove(&s).expect("slave has an assignment") {
            Message::Pt(tile) => {
                self.tc.insert(tile);
                Message::Tc(BoundaryReport { tile, ..Default::default() })
            }
            Message::Pb(key, _) => {
                self.bc.insert(key);
                Message::Bc(key, 0)
            }
            _ => unreachable!("only PT and PB are tracked"),
        }
    }
}

struct Checker<'a> {
    map: &'a TileMap,
    all_keys: BTreeSet<BoundaryKey>,
    shared: BTreeSet<BoundaryKey>,
    workers: usize,
}

impl<'a> Checker<'a> {
    fn new(map: &'a TileMap, workers: usize) -> Self {
        let (all_keys, shared) = expected_keys(map);
        Self { map, all_keys, shared, workers }
    }

    fn start(&self, policy: TilePolicy) -> Result<(Master, Tally)> {
        let mut m = Master::new(self.map, self.workers, policy)?;
        if m.ledger().key_count() != self.all_keys.len() {
            return Err(violation(format!(
                "ledger has {} keys, occupancy implies {}",
                m.ledger().key_count(),
                self.all_keys.len()
            )));
        }
        let mut tally = Tally::default();
        let out = m.start()?;
        tally.observe(&out, self.map.len(), self.all_keys.len())?;
        Ok((m, tally))
    }

    fn step(&self, m: &mut Master, tally: &mut Tally, s: SlaveId) -> Result<()> {
        let reply = tally.complete(s);
        let out = m.handle(s, reply)?;
        tally.observe(&out, self.map.len(), self.all_keys.len())
    }

    /// Called when nothing is in flight.
    fn check_terminal(&self, m: &Master, tally: &Tally) -> Result<()> {
        if !m.is_finished() || tally.fin.len() != self.workers {
            return Err(violation(format!(
                "deadlock: nothing in flight, {} of {} slaves finalized",
                tally.fin.len(),
                self.workers
            )));
        }
        for t in self.map.tile_ids() {
            if tally.pt.get(&t) != Some(&1) || !tally.tc.contains(&t) {
                return Err(violation(format!("tile {t} not segmented exactly once")));
            }
            if m.tile_status(t) != Some(TileStatus::Segmented) {
                return Err(violation(format!("tile {t} not marked segmented")));
            }
        }
        let unified: BTreeSet<BoundaryKey> = tally.pb.keys().copied().collect();
        if unified != self.all_keys || tally.bc != self.all_keys {
            return Err(violation("unified keys differ from the keys implied by occupancy"));
        }
        if !self.shared.iter().all(|k| tally.pb.get(k) == Some(&1)) {
            return Err(violation("a shared key was not unified exactly once"));
        }
        Ok(())
    }

    fn inflight(m: &Master) -> Vec<SlaveId> {
        (0..m.workers())
            .filter(|&s| matches!(m.slave_status(s), SlaveStatus::OnTile(_) | SlaveStatus::OnBoundary(_)))
            .collect()
    }
}

/// Explores every completion order reachable on `map` with `workers` slaves,
/// merging paths that reach the same state up to a relabelling of slaves.
pub fn explore_exhaustive(map: &TileMap, workers: usize) -> Result<CheckStats> {
    let checker = Checker::new(map, workers);
    let (m, tally) = checker.start(TilePolicy::RowMajor)?;
    let mut stats = CheckStats::default();
    let mut seen = HashSet::new();
    let mut stack = vec![(m, tally, 0usize)];
    while let Some((m, tally, depth)) = stack.pop() {
        if !seen.insert(m.symmetric_fingerprint()) {
            continue;
        }
        stats.states += 1;
        stats.max_depth = stats.max_depth.max(depth);
        let ready = Checker::inflight(&m);
        if ready.is_empty() {
            checker.check_terminal(&m, &tally)?;
            stats.schedules += 1;
            continue;
        }
        for s in ready {
            let (mut m2, mut t2) = (m.clone(), tally.clone());
            checker.step(&mut m2, &mut t2, s)?;
            stats.steps += 1;
            stack.push((m2, t2, depth + 1));
        }
    }
    Ok(stats)
}

/// Runs `count` schedules where the next completion is drawn uniformly from
/// the in-flight assignments.
pub fn explore_random(map: &TileMap, workers: usize, count: u64, seed: u64, policy: TilePolicy) -> Result<CheckStats> {
    let checker = Checker::new(map, workers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = CheckStats::default();
    for _ in 0..count {
        let (mut m, mut tally) = checker.start(policy)?;
        let mut depth = 0;
        loop {
            let ready = Checker::inflight(&m);
            let Some(&s) = ready.choose(&mut rng) else { break };
            checker.step(&mut m, &mut tally, s)?;
            depth += 1;
        }
        checker.check_terminal(&m, &tally)?;
        stats.schedules += 1;
        stats.steps += depth as u64;
        stats.states += depth as u64 + 1;
        stats.max_depth = stats.max_depth.max(depth);
    }
    Ok(stats)
}
