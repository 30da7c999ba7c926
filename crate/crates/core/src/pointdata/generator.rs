//! Seeded synthetic forests.
//!
//! Each tree is a paraboloid of revolution: a crown of radius `R` whose
//! surface drops from the apex height `h` to `h - depth` at the rim. Crown
//! returns are sampled uniformly over the crown disk; ground returns are
//! uniform over the area with a small height jitter.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Point3D, PointCloud};
use crate::error::{Error, Result};

const MIN_APEX_SEPARATION: f64 = 1.0;
const GROUND_Z_MAX: f64 = 0.3;
const MIN_TREE_HEIGHT: f64 = 1.5;
const MIN_CROWN_RADIUS: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub min_x: f64,
    pub min_y: f64,
    pub width: f64,
    pub height: f64,
}

impl AreaBounds {
    pub fn square(min_x: f64, min_y: f64, side: f64) -> Self {
        Self { min_x, min_y, width: side, height: side }
    }

    pub fn area_m2(&self) -> f64 {
        self.width * self.height
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x < self.min_x + self.width && y >= self.min_y && y < self.min_y + self.height
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightDistribution {
    pub mean: f64,
    pub sd: f64,
}

/// Crown radius `intercept + slope * height + N(0, noise_sd)`, clamped to
/// `[0.5, max_radius]`; crown depth is `depth_ratio * height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrownModel {
    pub intercept: f64,
    pub slope: f64,
    pub noise_sd: f64,
    pub max_radius: f64,
    pub depth_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestSpec {
    pub bounds: AreaBounds,
    /// Trees per hectare.
    pub stem_density: f64,
    pub overstory: HeightDistribution,
    pub midstory: HeightDistribution,
    pub midstory_fraction: f64,
    pub crown: CrownModel,
    /// Returns per square metre.
    pub point_density: f64,
    /// Ground returns as a fraction of `point_density` over the whole area.
    pub ground_noise_fraction: f64,
    pub seed: u64,
}

impl Default for ForestSpec {
    fn default() -> Self {
        Self {
            bounds: AreaBounds::square(0.0, 0.0, 200.0),
            stem_density: 250.0,
            overstory: HeightDistribution { mean: 26.9, sd: 6.6 },
            midstory: HeightDistribution { mean: 9.4, sd: 2.6 },
            midstory_fraction: 0.35,
            crown: CrownModel { intercept: 0.8, slope: 0.1, noise_sd: 0.3, max_radius: 8.0, depth_ratio: 0.25 },
            point_density: 4.0,
            ground_noise_fraction: 0.2,
            seed: 1,
        }
    }
}

impl ForestSpec {
    /// Nominal pulse spacing implied by the point density.
    pub fn nps(&self) -> f64 {
        1.0 / self.point_density.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let finite = [b.min_x, b.min_y, b.width, b.height].iter().all(|v| v.is_finite());
        if !finite || !(b.width > 0.0) || !(b.height > 0.0) {
            return Err(Error::validation("forest area must have positive finite width and height"));
        }
        if !(self.stem_density >= 0.0) || !self.stem_density.is_finite() {
            return Err(Error::validation(format!("stem density must be >= 0, got {}", self.stem_density)));
        }
        if !(self.point_density > 0.0) || !self.point_density.is_finite() {
            return Err(Error::validation(format!("point density must be > 0, got {}", self.point_density)));
        }
        for (name, v) in [("mid-story fraction", self.midstory_fraction), ("ground-noise fraction", self.ground_noise_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, d) in [("over-story", self.overstory), ("mid-story", self.midstory)] {
            if !(d.sd >= 0.0) || !d.mean.is_finite() || !d.sd.is_finite() {
                return Err(Error::validation(format!("{name} height distribution is invalid")));
            }
        }
        let c = &self.crown;
        if !(c.noise_sd >= 0.0) || !(c.max_radius >= MIN_CROWN_RADIUS) || !(c.depth_ratio > 0.0 && c.depth_ratio <= 1.0) {
            return Err(Error::validation("crown model is invalid"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Story {
    Over,
    Mid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeTruth {
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub crown_radius: f64,
    pub story: Story,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub trees: Vec<TreeTruth>,
}

fn sample_height(rng: &mut ChaCha8Rng, d: HeightDistribution) -> f64 {
    if d.sd == 0.0 {
        return d.mean.max(MIN_TREE_HEIGHT);
    }
    let normal = Normal::new(d.mean, d.sd).expect("sd validated");
    for _ in 0..64 {
        let h = normal.sample(rng);
        if h >= MIN_TREE_HEIGHT {
            return h;
        }
    }
    MIN_TREE_HEIGHT
}

pub fn generate_forest(spec: &ForestSpec) -> Result<(PointCloud, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = spec.bounds;
    let n_trees = (spec.stem_density * b.area_m2() / 10_000.0).round() as usize;

    // Hard-core placement on a 1 m hash grid keeps apices >= 1 m apart.
    let mut occupied: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
    let key = |x: f64, y: f64| ((x / MIN_APEX_SEPARATION).floor() as i64, (y / MIN_APEX_SEPARATION).floor() as i64);
    let mut truth = GroundTruth::default();
    for _ in 0..n_trees {
        let mut placed = None;
        for _ in 0..100 {
            let x = b.min_x + rng.random::<f64>() * b.width;
            let y = b.min_y + rng.random::<f64>() * b.height;
            let (kx, ky) = key(x, y);
            let clash = (kx - 1..=kx + 1).any(|i| {
                (ky - 1..=ky + 1).any(|j| {
                    occupied.get(&(i, j)).is_some_and(|v| {
                        v.iter().any(|&(ox, oy)| (ox - x).hypot(oy - y) < MIN_APEX_SEPARATION)
                    })
                })
            });
            if !clash {
                placed = Some((x, y));
                break;
            }
        }
        let Some((x, y)) = placed else { continue };
        occupied.entry(key(x, y)).or_default().push((x, y));

        let story = if rng.random::<f64>() < spec.midstory_fraction { Story::Mid } else { Story::Over };
        let dist = match story {
            Story::Over => spec.overstory,
            Story::Mid => spec.midstory,
        };
        let height = sample_height(&mut rng, dist);
        let c = spec.crown;
        let noise = if c.noise_sd > 0.0 { Normal::new(0.0, c.noise_sd).unwrap().sample(&mut rng) } else { 0.0 };
        let crown_radius = (c.intercept + c.slope * height + noise).clamp(MIN_CROWN_RADIUS, c.max_radius);
        truth.trees.push(TreeTruth { x, y, height, crown_radius, story });
    }

    let mut points = Vec::new();
    for t in &truth.trees {
        let depth = spec.crown.depth_ratio * t.height;
        let count = (spec.point_density * PI * t.crown_radius * t.crown_radius).round() as usize;
        // The first return of every tree is its apex, so the top is unambiguous.
        if b.contains(t.x, t.y) && count > 0 {
            points.push(Point3D::new(t.x, t.y, t.height));
        }
        for _ in 1..count {
            let r = t.crown_radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            let (x, y) = (t.x + r * theta.cos(), t.y + r * theta.sin());
            if !b.contains(x, y) {
                continue;
            }
            let rel = r / t.crown_radius;
            let z = (t.height - depth * rel * rel).max(0.0);
            points.push(Point3D::new(x, y, z));
        }
    }
    let n_ground = (spec.ground_noise_fraction * spec.point_density * b.area_m2()).round() as usize;
    for _ in 0..n_ground {
        let x = b.min_x + rng.random::<f64>() * b.width;
        let y = b.min_y + rng.random::<f64>() * b.height;
        let z = rng.random::<f64>() * GROUND_Z_MAX;
        points.push(Point3D::new(x, y, z));
    }
    Ok((PointCloud::new(points), truth))
}
