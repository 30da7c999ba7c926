//! Tile-boundary crowns: classification, canonical keys, readiness and
//! unification.
//!
//! A crown with a member point within `2 x nps` of a tile edge may continue in
//! the neighbouring tile, so it is shipped to the master instead of being
//! written out. Crowns touching one edge go to that edge's set, crowns touching
//! two adjacent edges to the corner's set. Once every tile sharing an edge or
//! corner has reported, the pieces are unified and segmented again as one cloud.
//!
//! Keys live on the global tile lattice, with row 0 the northern tile row:
//! `VerticalEdge(r, c)` is the western edge of tile `(r, c)`,
//! `HorizontalEdge(r, c)` its northern edge and `Corner(r, c)` its north-west
//! corner. The eastern edge of `(r, c)` is therefore `VerticalEdge(r, c + 1)`,
//! whichever tile asks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pointdata::{decode_points, encode_points, GridPos, Point3D, PointCloud, TileBounds, TileId, TileMap};
use crate::segmentation::CrownRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    N,
    S,
    E,
    W,
    NE,
    NW,
    SE,
    SW,
}

impl Side {
    pub const ALL: [Side; 8] = [Side::N, Side::S, Side::E, Side::W, Side::NE, Side::NW, Side::SE, Side::SW];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_corner(self) -> bool {
        self.index() >= 4
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum KeyKind {
    VerticalEdge = 0,
    HorizontalEdge = 1,
    Corner = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BoundaryKey {
    pub kind: KeyKind,
    pub row: i32,
    pub col: i32,
}

pub const KEY_WIRE_LEN: usize = 9;

impl BoundaryKey {
    pub fn for_side(pos: GridPos, side: Side) -> Self {
        let (r, c) = (pos.row as i32, pos.col as i32);
        let (kind, row, col) = match side {
            Side::N => (KeyKind::HorizontalEdge, r, c),
            Side::S => (KeyKind::HorizontalEdge, r + 1, c),
            Side::W => (KeyKind::VerticalEdge, r, c),
            Side::E => (KeyKind::VerticalEdge, r, c + 1),
            Side::NW => (KeyKind::Corner, r, c),
            Side::NE => (KeyKind::Corner, r, c + 1),
            Side::SW => (KeyKind::Corner, r + 1, c),
            Side::SE => (KeyKind::Corner, r + 1, c + 1),
        };
        Self { kind, row, col }
    }

    pub fn is_edge(&self) -> bool {
        self.kind != KeyKind::Corner
    }

    /// Lattice positions of the tiles that can share this edge or corner.
    pub fn adjacent_positions(&self) -> Vec<(i64, i64)> {
        let (r, c) = (self.row as i64, self.col as i64);
        match self.kind {
            KeyKind::VerticalEdge => vec![(r, c - 1), (r, c)],
            KeyKind::HorizontalEdge => vec![(r - 1, c), (r, c)],
            KeyKind::Corner => vec![(r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)],
        }
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.kind as u8);
        out.extend_from_slice(&self.row.to_le_bytes());
        out.extend_from_slice(&self.col.to_le_bytes());
    }

    pub fn decode(buf: &[u8], base: u64) -> Result<Self> {
        if buf.len() < KEY_WIRE_LEN {
            return Err(Error::Parse { offset: base + buf.len() as u64, message: "truncated boundary key".into() });
        }
        let kind = match buf[0] {
            0 => KeyKind::VerticalEdge,
            1 => KeyKind::HorizontalEdge,
            2 => KeyKind::Corner,
            k => return Err(Error::Parse { offset: base, message: format!("unknown boundary key kind {k}") }),
        };
        let row = i32::from_le_bytes(buf[1..5].try_into().unwrap());
        let col = i32::from_le_bytes(buf[5..9].try_into().unwrap());
        Ok(Self { kind, row, col })
    }
}

impl fmt::Display for BoundaryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            KeyKind::VerticalEdge => "V",
            KeyKind::HorizontalEdge => "H",
            KeyKind::Corner => "C",
        };
        write!(f, "{k}({},{})", self.row, self.col)
    }
}

/// The crowns of one segmented tile split into interior and eight boundary sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryPartition {
    pub tile: TileId,
    pub interior: Vec<CrownRecord>,
    pub sets: [Vec<CrownRecord>; 8],
}

impl BoundaryPartition {
    pub fn set(&self, side: Side) -> &[CrownRecord] {
        &self.sets[side.index()]
    }

    pub fn crown_count(&self) -> usize {
        self.interior.len() + self.sets.iter().map(Vec::len).sum::<usize>()
    }

    pub fn boundary_count(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// Splits off the interior crowns and keeps only the boundary point sets,
    /// which is what a slave sends back to the master.
    pub fn into_report(self) -> (Vec<CrownRecord>, BoundaryReport) {
        let sets = self.sets.map(|s| s.into_iter().map(|c| c.points).collect());
        let report = BoundaryReport { tile: self.tile, interior_crowns: self.interior.len() as u32, sets };
        (self.interior, report)
    }
}

/// Boundary point sets of one tile, as carried by a tile-complete message.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryReport {
    pub tile: TileId,
    pub interior_crowns: u32,
    pub sets: [Vec<Vec<Point3D>>; 8],
}

impl BoundaryReport {
    pub fn point_count(&self) -> usize {
        self.sets.iter().flatten().map(Vec::len).sum()
    }

    pub fn wire_len(&self) -> usize {
        8 + self.sets.iter().map(|s| contribution_wire_len(s)).sum::<usize>()
    }

    pub fn encode(&self, pos: GridPos, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.tile.0.to_le_bytes());
        out.extend_from_slice(&self.interior_crowns.to_le_bytes());
        for side in Side::ALL {
            encode_contribution(BoundaryKey::for_side(pos, side), &self.sets[side.index()], out);
        }
    }

    /// Decodes a report; `map` checks that every key belongs to the tile.
    pub fn decode(buf: &[u8], map: &TileMap) -> Result<Self> {
        if buf.len() < 8 {
            return Err(Error::Parse { offset: buf.len() as u64, message: "truncated tile report".into() });
        }
        let tile = TileId(u32::from_le_bytes(buf[0..4].try_into().unwrap()));
        let interior_crowns = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        let pos = map.position(tile).ok_or_else(|| Error::protocol(format!("report for unknown tile {tile}")))?;
        let mut sets: [Vec<Vec<Point3D>>; 8] = Default::default();
        let mut at = 8;
        for side in Side::ALL {
            let (key, crowns, used) = decode_contribution(&buf[at..], at as u64)?;
            if key != BoundaryKey::for_side(pos, side) {
                return Err(Error::protocol(format!("tile {tile} reported key {key} for side {side}")));
            }
            sets[side.index()] = crowns;
            at += used;
        }
        if at != buf.len() {
            return Err(Error::Parse { offset: at as u64, message: "trailing bytes after tile report".into() });
        }
        Ok(Self { tile, interior_crowns, sets })
    }
}

pub fn contribution_wire_len(crowns: &[Vec<Point3D>]) -> usize {
    KEY_WIRE_LEN + 4 + crowns.iter().map(|c| crate::pointdata::encoded_points_len(c.len())).sum::<usize>()
}

/// Key, crown count, then one point dump per crown.
pub fn encode_contribution(key: BoundaryKey, crowns: &[Vec<Point3D>], out: &mut Vec<u8>) {
    key.encode(out);
    out.extend_from_slice(&(crowns.len() as u32).to_le_bytes());
    for c in crowns {
        encode_points(c, out);
    }
}

pub fn decode_contribution(buf: &[u8], base: u64) -> Result<(BoundaryKey, Vec<Vec<Point3D>>, usize)> {
    let key = BoundaryKey::decode(buf, base)?;
    let mut at = KEY_WIRE_LEN;
    if buf.len() < at + 4 {
        return Err(Error::Parse { offset: base + buf.len() as u64, message: "truncated crown count".into() });
    }
    let n = u32::from_le_bytes(buf[at..at + 4].try_into().unwrap()) as usize;
    at += 4;
    let mut crowns = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let (pts, used) = decode_points(&buf[at..], base + at as u64)?;
        crowns.push(pts);
        at += used;
    }
    Ok((key, crowns, at))
}

/// Which of the N, S, E, W edges have a point within `band` of them.
pub fn touched_edges(points: &[Point3D], bounds: &TileBounds, band: f64) -> [bool; 4] {
    let mut t = [false; 4];
    for p in points {
        t[0] |= bounds.max_y() - p.y <= band;
        t[1] |= p.y - bounds.min_y <= band;
        t[2] |= bounds.max_x() - p.x <= band;
        t[3] |= p.x - bounds.min_x <= band;
    }
    t
}

fn side_for(edges: [bool; 4]) -> std::result::Result<Option<Side>, String> {
    let names = ["N", "S", "E", "W"];
    let touched: Vec<&str> = (0..4).filter(|&i| edges[i]).map(|i| names[i]).collect();
    Ok(Some(match touched.as_slice() {
        [] => return Ok(None),
        ["N"] => Side::N,
        ["S"] => Side::S,
        ["E"] => Side::E,
        ["W"] => Side::W,
        ["N", "E"] => Side::NE,
        ["N", "W"] => Side::NW,
        ["S", "E"] => Side::SE,
        ["S", "W"] => Side::SW,
        other => return Err(other.join("+")),
    }))
}

/// Which of a tile's eight boundary keys are shared with another tile, in
/// `Side::ALL` order.
pub fn shared_sides(map: &TileMap, id: TileId) -> Option<[bool; 8]> {
    let pos = map.position(id)?;
    let mut shared = [false; 8];
    for side in Side::ALL {
        let key = BoundaryKey::for_side(pos, side);
        let n = key.adjacent_positions().into_iter().filter(|&(r, c)| map.tile_at(r, c).is_some()).count();
        shared[side.index()] = n >= 2;
    }
    Some(shared)
}

/// Every side shared, as for a tile surrounded by neighbours.
pub const ALL_SHARED: [bool; 8] = [true; 8];

/// Classifies the crowns of one tile by the edges they come within `2 x nps` of.
///
/// Edges with no tile across them are the edge of the data; crowns that only
/// reach those stay interior, since no other tile holds the rest of them.
pub fn partition_boundary(
    tile: TileId,
    crowns: Vec<CrownRecord>,
    bounds: &TileBounds,
    nps: f64,
    shared: &[bool; 8],
) -> Result<BoundaryPartition> {
    let band = 2.0 * nps;
    // Edge order in `touched_edges` is N, S, E, W.
    let open = [shared[Side::N.index()], shared[Side::S.index()], shared[Side::E.index()], shared[Side::W.index()]];
    let mut part = BoundaryPartition { tile, ..Default::default() };
    for (i, crown) in crowns.into_iter().enumerate() {
        let touched = touched_edges(&crown.points, bounds, band);
        let side = match side_for(touched) {
            Ok(Some(s)) if shared[s.index()] => Ok(Some(s)),
            _ => side_for(std::array::from_fn(|e| touched[e] && open[e])),
        };
        match side {
            Ok(None) => part.interior.push(crown),
            Ok(Some(side)) => part.sets[side.index()].push(crown),
            Err(edges) => return Err(Error::OversizeObject { crown: i, edges }),
        }
    }
    Ok(part)
}

/// Union of contributed crowns, exact duplicates removed, in canonical order.
pub fn unify_contributions<I>(contributions: I) -> PointCloud
where
    I: IntoIterator<Item = Vec<Point3D>>,
{
    let mut pts: Vec<Point3D> = contributions.into_iter().flatten().collect();
    pts.sort_by(|a, b| a.canonical_cmp(b));
    pts.dedup_by(|a, b| a.bit_key() == b.bit_key());
    PointCloud::new(pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyState {
    Pending,
    Ready,
    Unified,
}

#[derive(Clone, Debug)]
struct Entry {
    expected: Vec<TileId>,
    received: BTreeMap<TileId, Vec<Vec<Point3D>>>,
    state: KeyState,
}

/// Per-key bookkeeping of which tiles have reported boundary data.
#[derive(Clone, Debug)]
pub struct ReadinessLedger {
    entries: BTreeMap<BoundaryKey, Entry>,
    reported: BTreeSet<TileId>,
    positions: BTreeMap<TileId, GridPos>,
}

impl ReadinessLedger {
    pub fn new(map: &TileMap) -> Self {
        let mut entries = BTreeMap::new();
        let mut positions = BTreeMap::new();
        for id in map.tile_ids() {
            let pos = map.position(id).expect("listed tile");
            positions.insert(id, pos);
            for side in Side::ALL {
                let key = BoundaryKey::for_side(pos, side);
                entries.entry(key).or_insert_with(|| {
                    let expected =
                        key.adjacent_positions().into_iter().filter_map(|(r, c)| map.tile_at(r, c)).collect();
                    Entry { expected, received: BTreeMap::new(), state: KeyState::Pending }
                });
            }
        }
        Self { entries, reported: BTreeSet::new(), positions }
    }

    pub fn key_count(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = BoundaryKey> + '_ {
        self.entries.keys().copied()
    }

    /// Keys shared by at least two tiles.
    pub fn shared_keys(&self) -> impl Iterator<Item = BoundaryKey> + '_ {
        self.entries.iter().filter(|(_, e)| e.expected.len() >= 2).map(|(k, _)| *k)
    }

    pub fn expected(&self, key: &BoundaryKey) -> Option<&[TileId]> {
        self.entries.get(key).map(|e| e.expected.as_slice())
    }

    pub fn state(&self, key: &BoundaryKey) -> Option<KeyState> {
        self.entries.get(key).map(|e| e.state)
    }

    pub fn unified_count(&self) -> usize {
        self.entries.values().filter(|e| e.state == KeyState::Unified).count()
    }

    pub fn all_unified(&self) -> bool {
        self.entries.values().all(|e| e.state == KeyState::Unified)
    }

    /// Records a tile's boundary sets and returns the keys that became ready.
    pub fn update(&mut self, report: BoundaryReport) -> Result<Vec<BoundaryKey>> {
        let tile = report.tile;
        let pos = *self.positions.get(&tile).ok_or_else(|| Error::protocol(format!("unknown tile {tile}")))?;
        if !self.reported.insert(tile) {
            return Err(Error::protocol(format!("tile {tile} reported twice")));
        }
        let mut ready = Vec::new();
        for (side, crowns) in Side::ALL.into_iter().zip(report.sets) {
            let key = BoundaryKey::for_side(pos, side);
            let e = self.entries.get_mut(&key).expect("keys of every tile exist");
            e.received.insert(tile, crowns);
            if e.state == KeyState::Pending && e.received.len() == e.expected.len() {
                e.state = KeyState::Ready;
                ready.push(key);
            }
        }
        ready.sort_unstable();
        Ok(ready)
    }

    /// Unifies a ready key; its contributions are released.
    pub fn unify(&mut self, key: &BoundaryKey) -> Result<PointCloud> {
        let e = self.entries.get_mut(key).ok_or_else(|| Error::protocol(format!("unknown boundary key {key}")))?;
        match e.state {
            KeyState::Pending => Err(Error::protocol(format!("boundary {key} unified before it was ready"))),
            KeyState::Unified => Err(Error::protocol(format!("boundary {key} unified twice"))),
            KeyState::Ready => {
                e.state = KeyState::Unified;
                Ok(unify_contributions(std::mem::take(&mut e.received).into_values().flatten()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> TileBounds {
        TileBounds { min_x: 0.0, min_y: 0.0, side: 50.0 }
    }

    fn crown(points: Vec<(f64, f64)>) -> CrownRecord {
        let points: Vec<Point3D> = points.into_iter().map(|(x, y)| Point3D::new(x, y, 10.0)).collect();
        CrownRecord { apex: points[0], height: 10.0, crown_radius: 1.0, points }
    }

    #[test]
    fn classification_cases() {
        let nps = 0.2;
        let crowns = vec![
            crown(vec![(25.0, 25.0), (26.0, 25.0)]),
            crown(vec![(0.3, 20.0), (2.0, 20.0)]),
            crown(vec![(49.9, 49.8), (47.0, 47.0)]),
            crown(vec![(0.41, 10.0)]),
        ];
        let p = partition_boundary(TileId(0), crowns, &bounds(), nps, &ALL_SHARED).unwrap();
        assert_eq!(p.interior.len(), 2);
        assert_eq!(p.set(Side::W).len(), 1);
        assert_eq!(p.set(Side::NE).len(), 1);
        assert_eq!(p.crown_count(), 4);
    }

    #[test]
    fn oversize_crowns_rejected() {
        let wide = crown(vec![(0.1, 25.0), (49.9, 25.0)]);
        let err = partition_boundary(TileId(0), vec![wide], &bounds(), 0.2, &ALL_SHARED).unwrap_err();
        assert!(matches!(err, Error::OversizeObject { crown: 0, .. }));
        let three = crown(vec![(0.1, 0.1), (49.9, 0.1)]);
        assert!(partition_boundary(TileId(0), vec![three], &bounds(), 0.2, &ALL_SHARED).is_err());
    }

    #[test]
    fn keys_are_canonical_across_tiles() {
        let a = GridPos { row: 1, col: 1 };
        let east = GridPos { row: 1, col: 2 };
        let south = GridPos { row: 2, col: 1 };
        let se = GridPos { row: 2, col: 2 };
        assert_eq!(BoundaryKey::for_side(a, Side::E), BoundaryKey::for_side(east, Side::W));
        assert_eq!(BoundaryKey::for_side(a, Side::S), BoundaryKey::for_side(south, Side::N));
        let c = BoundaryKey::for_side(a, Side::SE);
        assert_eq!(c, BoundaryKey::for_side(east, Side::SW));
        assert_eq!(c, BoundaryKey::for_side(south, Side::NE));
        assert_eq!(c, BoundaryKey::for_side(se, Side::NW));
    }

    #[test]
    fn key_wire_round_trip() {
        let k = BoundaryKey { kind: KeyKind::Corner, row: -3, col: 7 };
        let mut buf = Vec::new();
        k.encode(&mut buf);
        assert_eq!(buf.len(), KEY_WIRE_LEN);
        assert_eq!(BoundaryKey::decode(&buf, 0).unwrap(), k);
        buf[0] = 9;
        assert!(matches!(BoundaryKey::decode(&buf, 0), Err(Error::Parse { .. })));
    }

    fn empty_report(tile: u32) -> BoundaryReport {
        BoundaryReport { tile: TileId(tile), ..Default::default() }
    }

    #[test]
    fn two_by_two_centre_corner_ready_last() {
        let map = TileMap::full(2, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
        let mut ledger = ReadinessLedger::new(&map);
        let centre = BoundaryKey { kind: KeyKind::Corner, row: 1, col: 1 };
        assert_eq!(ledger.expected(&centre).unwrap().len(), 4);
        for t in 0..4 {
            let ready = ledger.update(empty_report(t)).unwrap();
            assert_eq!(ready.contains(&centre), t == 3, "tile {t}");
        }
        assert!(ledger.keys().all(|k| ledger.state(&k) == Some(KeyState::Ready)));
    }

    #[test]
    fn single_tile_all_keys_ready_at_once() {
        let map = TileMap::full(1, 1, (0.0, 0.0), 50.0, 0.2).unwrap();
        let mut ledger = ReadinessLedger::new(&map);
        assert_eq!(ledger.update(empty_report(0)).unwrap().len(), 8);
        assert_eq!(ledger.shared_keys().count(), 0);
    }

    #[test]
    fn one_by_two_shared_edge_ready_on_second() {
        let map = TileMap::full(1, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
        let mut ledger = ReadinessLedger::new(&map);
        let shared = BoundaryKey { kind: KeyKind::VerticalEdge, row: 0, col: 1 };
        let first = ledger.update(empty_report(0)).unwrap();
        // N, S, W edges and NW, SW corners of tile 0 are perimeter keys.
        assert_eq!(first.len(), 5);
        assert!(!first.contains(&shared));
        let second = ledger.update(empty_report(1)).unwrap();
        assert!(second.contains(&shared));
        // Everything of tile 1 is either its own perimeter or shared with tile 0.
        assert_eq!(second.len(), 8);
        assert!(ledger.update(empty_report(1)).is_err());
    }

    #[test]
    fn shared_key_counts_match_lattice() {
        for (rows, cols) in [(1, 1), (2, 3), (4, 4), (5, 2)] {
            let map = TileMap::full(rows, cols, (0.0, 0.0), 10.0, 0.2).unwrap();
            let ledger = ReadinessLedger::new(&map);
            let (r, c) = (rows as usize, cols as usize);
            let edges = r * (c - 1) + c * (r - 1);
            let corners = (r - 1) * (c - 1);
            let shared_corners = ledger.shared_keys().filter(|k| !k.is_edge()).count();
            let shared_edges = ledger.shared_keys().filter(|k| k.is_edge()).count();
            assert_eq!(shared_edges, edges);
            // Corner keys on the map border are shared by two tiles as well.
            let border_corners = 2 * (r - 1) + 2 * (c - 1);
            assert_eq!(shared_corners, corners + border_corners);
            assert_eq!(ledger.key_count(), (c + 1) * r + (r + 1) * c + (r + 1) * (c + 1));
        }
    }

    #[test]
    fn unify_protocol_errors() {
        let map = TileMap::full(1, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
        let mut ledger = ReadinessLedger::new(&map);
        let shared = BoundaryKey { kind: KeyKind::VerticalEdge, row: 0, col: 1 };
        assert!(matches!(ledger.unify(&shared), Err(Error::Protocol(_))));
        let mut a = empty_report(0);
        a.sets[Side::E.index()] = vec![vec![Point3D::new(49.9, 1.0, 8.0), Point3D::new(49.8, 1.0, 9.0)]];
        let mut b = empty_report(1);
        b.sets[Side::W.index()] = vec![vec![Point3D::new(50.1, 1.0, 8.5)]];
        ledger.update(a).unwrap();
        ledger.update(b).unwrap();
        let cloud = ledger.unify(&shared).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(matches!(ledger.unify(&shared), Err(Error::Protocol(_))));
    }

    #[test]
    fn unify_dedups_and_handles_empty() {
        assert!(unify_contributions(Vec::<Vec<Point3D>>::new()).is_empty());
        let p = Point3D::new(1.0, 2.0, 3.0);
        let u = unify_contributions(vec![vec![p], vec![p, Point3D::new(0.0, 0.0, 1.0)]]);
        assert_eq!(u.len(), 2);
        assert_eq!(u[0], Point3D::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn report_wire_round_trip() {
        let map = TileMap::full(2, 2, (0.0, 0.0), 50.0, 0.2).unwrap();
        let mut r = empty_report(3);
        r.interior_crowns = 7;
        r.sets[Side::NW.index()] = vec![vec![Point3D::new(50.1, 49.9, 12.0)], vec![]];
        r.sets[Side::S.index()] = vec![vec![Point3D::new(60.0, 0.1, 3.0), Point3D::new(61.0, 0.2, 4.0)]];
        let mut buf = Vec::new();
        r.encode(map.position(TileId(3)).unwrap(), &mut buf);
        assert_eq!(buf.len(), r.wire_len());
        assert_eq!(BoundaryReport::decode(&buf, &map).unwrap(), r);
        // Keys belonging to another tile are refused.
        let mut wrong = Vec::new();
        r.encode(map.position(TileId(0)).unwrap(), &mut wrong);
        assert!(BoundaryReport::decode(&wrong, &map).is_err());
        assert!(BoundaryReport::decode(&buf[..buf.len() - 1], &map).is_err());
    }
}
