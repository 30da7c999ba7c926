use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_tile_points, PointCloud, Tile, TileBounds, TileId, TileMap};
use crate::error::{Error, Result};

/// JSON description of a tiled dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub rows: u32,
    pub cols: u32,
    pub origin_x: f64,
    pub origin_y: f64,
    pub side: f64,
    pub nps: f64,
    pub tiles: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: TileId,
    pub row: u32,
    pub col: u32,
    pub min_x: f64,
    pub min_y: f64,
    pub side: f64,
    pub nps: f64,
    /// Tile file path, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
}

impl Manifest {
    pub fn from_map(map: &TileMap, path_for: impl Fn(TileId) -> PathBuf) -> Self {
        let (origin_x, origin_y) = map.origin();
        let tiles = map
            .tile_ids()
            .map(|id| {
                let pos = map.position(id).unwrap();
                let b = map.bounds(id).unwrap();
                ManifestEntry {
                    id,
                    row: pos.row,
                    col: pos.col,
                    min_x: b.min_x,
                    min_y: b.min_y,
                    side: b.side,
                    nps: map.nps(),
                    path: path_for(id),
                }
            })
            .collect();
        Self {
            version: 1,
            rows: map.rows(),
            cols: map.cols(),
            origin_x,
            origin_y,
            side: map.side(),
            nps: map.nps(),
            tiles,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        manifest.tile_map()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn tile_map(&self) -> Result<TileMap> {
        let mut mask = vec![false; self.rows as usize * self.cols as usize];
        for e in &self.tiles {
            if e.row >= self.rows || e.col >= self.cols {
                return Err(Error::validation(format!("tile {} outside the {}x{} grid", e.id, self.rows, self.cols)));
            }
            if e.id != TileId(e.row * self.cols + e.col) {
                return Err(Error::validation(format!("tile {} has a non row-major id", e.id)));
            }
            let cell = &mut mask[e.id.0 as usize];
            if *cell {
                return Err(Error::validation(format!("tile {} listed twice", e.id)));
            }
            *cell = true;
        }
        TileMap::with_occupancy(self.rows, self.cols, (self.origin_x, self.origin_y), self.side, self.nps, &mask)
    }

    pub fn entry(&self, id: TileId) -> Option<&ManifestEntry> {
        self.tiles.iter().find(|e| e.id == id)
    }
}

impl ManifestEntry {
    pub fn bounds(&self) -> TileBounds {
        TileBounds { min_x: self.min_x, min_y: self.min_y, side: self.side }
    }

    pub fn resolve(&self, base_dir: &Path) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            base_dir.join(&self.path)
        }
    }

    pub fn load_tile(&self, base_dir: &Path) -> Result<Tile> {
        let points = read_tile_points(&self.resolve(base_dir))?;
        Tile::new(self.id, self.bounds(), PointCloud::new(points), self.nps)
    }
}
