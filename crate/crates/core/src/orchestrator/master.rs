use std::collections::{BTreeMap, VecDeque};
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::message::Message;
use crate::boundary::{BoundaryKey, KeyState, ReadinessLedger};
use crate::error::{Error, Result};
use crate::pointdata::{TileId, TileMap};

pub type SlaveId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TileStatus {
    Unassigned,
    Assigned(SlaveId),
    Segmented,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlaveStatus {
    Idle,
    OnTile(TileId),
    OnBoundary(BoundaryKey),
    Finalized,
}

/// Order in which unassigned tiles are handed out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TilePolicy {
    /// Row by row from the north-west tile.
    #[default]
    RowMajor,
    Shuffled(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outgoing(pub SlaveId, pub Message);

/// The coordinating state machine. It never blocks: each call consumes one
/// message and returns the messages to send in response.
///
/// Ready boundary keys wait in a FIFO that is served before any new tile is
/// assigned. A slave with nothing to do is parked rather than finalized, and
/// gets the next boundary that becomes ready; FIN goes out to everyone once
/// every tile is segmented and every boundary completed.
#[derive(Clone, Debug)]
pub struct Master {
    tiles: BTreeMap<TileId, TileStatus>,
    order: VecDeque<TileId>,
    ledger: ReadinessLedger,
    slaves: Vec<SlaveStatus>,
    queue: VecDeque<BoundaryKey>,
    keys_done: usize,
    started: bool,
}

impl Master {
    pub fn new(map: &TileMap, workers: usize, policy: TilePolicy) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::validation("tile map has no tiles"));
        }
        if workers == 0 {
            return Err(Error::validation("at least one worker is required"));
        }
        let mut order: Vec<TileId> = map.tile_ids().collect();
        if let TilePolicy::Shuffled(seed) = policy {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        Ok(Self {
            tiles: order.iter().map(|&t| (t, TileStatus::Unassigned)).collect(),
            order: order.into(),
            ledger: ReadinessLedger::new(map),
            slaves: vec![SlaveStatus::Idle; workers],
            queue: VecDeque::new(),
            keys_done: 0,
            started: false,
        })
    }

    pub fn workers(&self) -> usize {
        self.slaves.len()
    }

    pub fn slave_status(&self, s: SlaveId) -> SlaveStatus {
        self.slaves[s]
    }

    pub fn tile_status(&self, t: TileId) -> Option<TileStatus> {
        self.tiles.get(&t).copied()
    }

    pub fn ledger(&self) -> &ReadinessLedger {
        &self.ledger
    }

    pub fn queued(&self) -> impl Iterator<Item = &BoundaryKey> {
        self.queue.iter()
    }

    pub fn unassigned_tiles(&self) -> usize {
        self.order.len()
    }

    pub fn keys_completed(&self) -> usize {
        self.keys_done
    }

    /// Hash of the complete scheduling state, for state-space exploration.
    /// Boundary payloads are left out; they follow from which tiles reported.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.tiles.iter().for_each(|e| e.hash(&mut h));
        self.slaves.hash(&mut h);
        self.hash_shared(&mut h);
        h.finish()
    }

    /// Like [`Master::fingerprint`] but equal for states that differ only by
    /// a relabelling of slaves. Nothing here branches on a slave's number, so
    /// such states have the same futures up to that relabelling.
    pub fn symmetric_fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (t, st) in &self.tiles {
            t.hash(&mut h);
            std::mem::discriminant(st).hash(&mut h);
        }
        let mut slaves = self.slaves.clone();
        slaves.sort_by_key(|s| match s {
            SlaveStatus::Idle => (0, None, None),
            SlaveStatus::OnTile(t) => (1, Some(*t), None),
            SlaveStatus::OnBoundary(k) => (2, None, Some(*k)),
            SlaveStatus::Finalized => (3, None, None),
        });
        slaves.hash(&mut h);
        self.hash_shared(&mut h);
        h.finish()
    }

    fn hash_shared(&self, h: &mut impl Hasher) {
        self.order.hash(h);
        self.queue.hash(h);
        self.keys_done.hash(h);
        self.started.hash(h);
        for k in self.ledger.keys() {
            self.ledger.state(&k).hash(h);
        }
    }

    /// All slaves have been sent FIN.
    pub fn is_finished(&self) -> bool {
        self.slaves.iter().all(|s| *s == SlaveStatus::Finalized)
    }

    fn work_complete(&self) -> bool {
        self.order.is_empty()
            && self.queue.is_empty()
            && self.tiles.values().all(|s| *s == TileStatus::Segmented)
            && self.keys_done == self.ledger.key_count()
            && self.slaves.iter().all(|s| matches!(s, SlaveStatus::Idle | SlaveStatus::Finalized))
    }

    /// Initial assignments: one tile per slave while tiles last.
    pub fn start(&mut self) -> Result<Vec<Outgoing>> {
        if self.started {
            return Err(Error::protocol("master started twice"));
        }
        self.started = true;
        let mut out = Vec::new();
        for s in 0..self.slaves.len() {
            if let Some(m) = self.next_assignment(s)? {
                out.push(Outgoing(s, m));
            }
        }
        Ok(out)
    }

    /// Handles one message from slave `from`.
    pub fn handle(&mut self, from: SlaveId, msg: Message) -> Result<Vec<Outgoing>> {
        let status = *self.slaves.get(from).ok_or_else(|| Error::protocol(format!("unknown slave {from}")))?;
        match msg {
            Message::Tc(report) => {
                let tile = report.tile;
                if status != SlaveStatus::OnTile(tile) || self.tiles.get(&tile) != Some(&TileStatus::Assigned(from)) {
                    return Err(Error::protocol(format!("slave {from} reported tile {tile} it was not assigned")));
                }
                self.tiles.insert(tile, TileStatus::Segmented);
                let ready = self.ledger.update(report)?;
                self.queue.extend(ready);
            }
            Message::Bc(key, _) => {
                if status != SlaveStatus::OnBoundary(key) {
                    return Err(Error::protocol(format!("slave {from} completed boundary {key} it was not assigned")));
                }
                self.keys_done += 1;
            }
            other => {
                return Err(Error::protocol(format!("master cannot handle {:?} from slave {from}", other.tag())));
            }
        }
        self.slaves[from] = SlaveStatus::Idle;

        let mut out = Vec::new();
        if let Some(m) = self.next_assignment(from)? {
            out.push(Outgoing(from, m));
        }
        for s in 0..self.slaves.len() {
            if s != from && self.slaves[s] == SlaveStatus::Idle && !self.queue.is_empty() {
                if let Some(m) = self.next_assignment(s)? {
                    out.push(Outgoing(s, m));
                }
            }
        }
        if self.work_complete() {
            for s in 0..self.slaves.len() {
                if self.slaves[s] == SlaveStatus::Idle {
                    self.slaves[s] = SlaveStatus::Finalized;
                    out.push(Outgoing(s, Message::Fin));
                }
            }
        }
        Ok(out)
    }

    /// Queued boundary first, then a new tile; `None` parks the slave.
    fn next_assignment(&mut self, s: SlaveId) -> Result<Option<Message>> {
        if let Some(key) = self.queue.pop_front() {
            debug_assert_eq!(self.ledger.state(&key), Some(KeyState::Ready));
            let cloud = self.ledger.unify(&key)?;
            self.slaves[s] = SlaveStatus::OnBoundary(key);
            return Ok(Some(Message::Pb(key, cloud)));
        }
        if let Some(tile) = self.order.pop_front() {
            self.tiles.insert(tile, TileStatus::Assigned(s));
            self.slaves[s] = SlaveStatus::OnTile(tile);
            return Ok(Some(Message::Pt(tile)));
        }
        Ok(None)
    }
}
