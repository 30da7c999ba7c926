//! Points, tiles and tile maps.
//!
//! Tiling follows a min-edge-inclusive, max-edge-exclusive convention so that
//! every point of a cloud lands in exactly one tile. Grid rows are counted
//! from the north (row 0 is the top row) and tile ids are assigned row-major.

mod generator;
mod io;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generator::{
    generate_forest, AreaBounds, CrownModel, ForestSpec, GroundTruth, HeightDistribution, Story,
    TreeTruth,
};
pub use io::{
    decode_points, encode_points, encoded_points_len, read_tile_points, write_tile_points,
    TILE_HEADER_LEN, TILE_MAGIC, TILE_VERSION,
};
pub use manifest::{Manifest, ManifestEntry};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn horizontal_distance(&self, other: &Point3D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Total order used for canonical sorting: (y, x, z) with IEEE total ordering.
    pub fn canonical_cmp(&self, other: &Point3D) -> std::cmp::Ordering {
        self.y
            .total_cmp(&other.y)
            .then(self.x.total_cmp(&other.x))
            .then(self.z.total_cmp(&other.z))
    }

    pub fn bit_key(&self) -> (u64, u64, u64) {
        (self.x.to_bits(), self.y.to_bits(), self.z.to_bits())
    }
}

/// An owned collection of points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3D>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3D>) -> Self {
        Self { points }
    }

    pub fn into_inner(self) -> Vec<Point3D> {
        self.points
    }

    /// Horizontal bounding box as `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.points.first()?;
        let init = (first.x, first.y, first.x, first.y);
        Some(self.points.iter().fold(init, |(a, b, c, d), p| {
            (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y))
        }))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::validation(format!("point {i} has a non-finite coordinate")));
            }
            if p.z < 0.0 {
                return Err(Error::validation(format!("point {i} has negative height {}", p.z)));
            }
        }
        Ok(())
    }
}

impl Deref for PointCloud {
    type Target = Vec<Point3D>;
    fn deref(&self) -> &Self::Target {
        &self.points
    }
}

impl DerefMut for PointCloud {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.points
    }
}

impl From<Vec<Point3D>> for PointCloud {
    fn from(points: Vec<Point3D>) -> Self {
        Self { points }
    }
}

impl FromIterator<Point3D> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3D>>(iter: I) -> Self {
        Self { points: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TileId(pub u32);

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub row: u32,
    pub col: u32,
}

/// Axis-aligned square, inclusive of its min edges and exclusive of its max edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileBounds {
    pub min_x: f64,
    pub min_y: f64,
    pub side: f64,
}

impl TileBounds {
    pub fn max_x(&self) -> f64 {
        self.min_x + self.side
    }

    pub fn max_y(&self) -> f64 {
        self.min_y + self.side
    }

    pub fn contains(&self, p: &Point3D) -> bool {
        p.x >= self.min_x && p.x < self.max_x() && p.y >= self.min_y && p.y < self.max_y()
    }

    /// `contains` with a few ulps of slack, for bounds recomputed from a grid origin.
    pub fn contains_approx(&self, p: &Point3D) -> bool {
        let eps = 1e-9 * (1.0 + self.min_x.abs().max(self.min_y.abs()) + self.side);
        p.x >= self.min_x - eps
            && p.x <= self.max_x() + eps
            && p.y >= self.min_y - eps
            && p.y <= self.max_y() + eps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub id: TileId,
    pub bounds: TileBounds,
    pub points: PointCloud,
    pub nps: f64,
}

impl Tile {
    pub fn new(id: TileId, bounds: TileBounds, points: PointCloud, nps: f64) -> Result<Self> {
        validate_tiling(bounds.side, nps)?;
        if let Some(i) = points.iter().position(|p| !bounds.contains_approx(p)) {
            return Err(Error::validation(format!(
                "tile {id}: point {i} lies outside the tile bounds"
            )));
        }
        Ok(Self { id, bounds, points, nps })
    }
}

pub(crate) fn validate_tiling(side: f64, nps: f64) -> Result<()> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::validation(format!("tile side must be positive, got {side}")));
    }
    if !(nps > 0.0) || !nps.is_finite() {
        return Err(Error::validation(format!("nominal pulse spacing must be positive, got {nps}")));
    }
    if side <= 4.0 * nps {
        return Err(Error::validation(format!(
            "tile side {side} must exceed 4 x nps ({})",
            4.0 * nps
        )));
    }
    Ok(())
}

/// Global layout of square tiles on a regular grid, possibly with holes.
#[derive(Clone, Debug, PartialEq)]
pub struct TileMap {
    rows: u32,
    cols: u32,
    origin_x: f64,
    origin_y: f64,
    side: f64,
    nps: f64,
    cells: Vec<Option<TileId>>,
    positions: BTreeMap<TileId, GridPos>,
}

impl TileMap {
    /// Fully occupied `rows x cols` map. `origin` is the south-west corner of
    /// the grid; tile ids run row-major from the north-west tile.
    pub fn full(rows: u32, cols: u32, origin: (f64, f64), side: f64, nps: f64) -> Result<Self> {
        let mask = vec![true; rows as usize * cols as usize];
        Self::with_occupancy(rows, cols, origin, side, nps, &mask)
    }

    /// Map where only cells with `mask[row * cols + col]` carry a tile.
    pub fn with_occupancy(
        rows: u32,
        cols: u32,
        origin: (f64, f64),
        side: f64,
        nps: f64,
        mask: &[bool],
    ) -> Result<Self> {
        validate_tiling(side, nps)?;
        if mask.len() != rows as usize * cols as usize {
            return Err(Error::validation("occupancy mask does not match grid dimensions"));
        }
        let mut cells = Vec::with_capacity(mask.len());
        let mut positions = BTreeMap::new();
        for row in 0..rows {
            for col in 0..cols {
                let idx = (row * cols + col) as usize;
                if mask[idx] {
                    let id = TileId(row * cols + col);
                    cells.push(Some(id));
                    positions.insert(id, GridPos { row, col });
                } else {
                    cells.push(None);
                }
            }
        }
        Ok(Self { rows, cols, origin_x: origin.0, origin_y: origin.1, side, nps, cells, positions })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn nps(&self) -> f64 {
        self.nps
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Tile ids in row-major order from the north-west corner.
    pub fn tile_ids(&self) -> impl Iterator<Item = TileId> + '_ {
        self.positions.keys().copied()
    }

    pub fn position(&self, id: TileId) -> Option<GridPos> {
        self.positions.get(&id).copied()
    }

    /// Tile at signed grid coordinates; `None` outside the grid or at a hole.
    pub fn tile_at(&self, row: i64, col: i64) -> Option<TileId> {
        if row < 0 || col < 0 || row >= self.rows as i64 || col >= self.cols as i64 {
            return None;
        }
        self.cells[(row as u32 * self.cols + col as u32) as usize]
    }

    pub fn bounds(&self, id: TileId) -> Option<TileBounds> {
        let pos = self.position(id)?;
        Some(TileBounds {
            min_x: self.origin_x + pos.col as f64 * self.side,
            min_y: self.origin_y + (self.rows - 1 - pos.row) as f64 * self.side,
            side: self.side,
        })
    }

    /// Edge neighbours: grid positions differing by one in exactly one axis.
    pub fn edge_neighbors(&self, id: TileId) -> Vec<TileId> {
        let Some(pos) = self.position(id) else { return Vec::new() };
        let (r, c) = (pos.row as i64, pos.col as i64);
        [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            .into_iter()
            .filter_map(|(rr, cc)| self.tile_at(rr, cc))
            .collect()
    }
}

/// Splits `cloud` into square tiles of `side` metres anchored at the cloud's
/// south-west bounding-box corner.
pub fn partition_into_tiles(cloud: &PointCloud, side: f64, nps: f64) -> Result<(TileMap, Vec<Tile>)> {
    validate_tiling(side, nps)?;
    let Some((min_x, min_y, max_x, max_y)) = cloud.bbox() else {
        let map = TileMap::full(0, 0, (0.0, 0.0), side, nps)?;
        return Ok((map, Vec::new()));
    };
    let cols = ((max_x - min_x) / side).floor() as u32 + 1;
    let rows = ((max_y - min_y) / side).floor() as u32 + 1;
    partition_with_grid(cloud, (min_x, min_y), rows, cols, side, nps)
}

/// Splits `cloud` over an explicit `rows x cols` grid whose south-west corner
/// is `origin`. Every point must fall inside the grid.
pub fn partition_with_grid(
    cloud: &PointCloud,
    origin: (f64, f64),
    rows: u32,
    cols: u32,
    side: f64,
    nps: f64,
) -> Result<(TileMap, Vec<Tile>)> {
    let map = TileMap::full(rows, cols, origin, side, nps)?;
    let mut buckets: Vec<Vec<Point3D>> = vec![Vec::new(); rows as usize * cols as usize];
    for (i, p) in cloud.iter().enumerate() {
        let col = ((p.x - origin.0) / side).floor();
        let row_from_south = ((p.y - origin.1) / side).floor();
        if col < 0.0 || row_from_south < 0.0 || col >= cols as f64 || row_from_south >= rows as f64 {
            return Err(Error::validation(format!("point {i} lies outside the tiling grid")));
        }
        let row = rows - 1 - row_from_south as u32;
        buckets[(row * cols + col as u32) as usize].push(*p);
    }
    let mut tiles = Vec::with_capacity(buckets.len());
    for (idx, pts) in buckets.into_iter().enumerate() {
        let id = TileId(idx as u32);
        let bounds = map.bounds(id).expect("full map");
        // The grid index is authoritative; recomputed bounds may be an ulp off.
        tiles.push(Tile { id, bounds, points: PointCloud::new(pts), nps });
    }
    Ok((map, tiles))
}
