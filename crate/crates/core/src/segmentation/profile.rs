//! Vertical profiles cast from a GMX and the crown-boundary rule.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use super::grid::GridIndex;
use super::SegmentationParams;
use crate::pointdata::Point3D;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Along(f64, u32);

impl Eq for Along {}

impl PartialOrd for Along {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Along {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Scratch state reused across profiles of one segmentation run.
#[derive(Debug)]
pub struct ProfileScratch {
    stamp: Vec<u32>,
    current: u32,
    heap: BinaryHeap<Reverse<Along>>,
}

impl ProfileScratch {
    pub fn new(n_cells: usize) -> Self {
        Self { stamp: vec![0; n_cells], current: 0, heap: BinaryHeap::new() }
    }

    fn next_profile(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.current = 1;
        }
        self.heap.clear();
    }
}

/// Walk state of the boundary rule along one profile.
struct Walk {
    apex_z: f64,
    last: usize,
    min_z: f64,
    min_point: usize,
}

enum Step {
    Continue,
    Stop(usize),
}

impl Walk {
    fn step(&mut self, i: usize, p: &Point3D, visited: bool, params: &SegmentationParams) -> Step {
        if visited || p.z < params.ground_cutoff || p.z > self.apex_z {
            return Step::Stop(self.last);
        }
        let dropped = self.apex_z - self.min_z >= params.drop_fraction * self.apex_z;
        if dropped && p.z > self.min_z + params.rise_tolerance {
            return Step::Stop(self.min_point);
        }
        self.last = i;
        if p.z < self.min_z {
            self.min_z = p.z;
            self.min_point = i;
        }
        Step::Continue
    }
}

/// Boundary point of one profile at azimuth `theta` radians.
///
/// Points inside a corridor one cell wide are visited in order of distance
/// from the GMX, up to the maximum crown radius. The walk stops before a point
/// that is already clustered, below the ground cut-off or above the GMX, and
/// at the first rise of more than `rise_tolerance` once the profile has
/// dropped by `drop_fraction` of the GMX height; the valley point before that
/// rise is the boundary. Without a stop the farthest point is the boundary.
pub fn cast_profile(
    gmx: usize,
    theta: f64,
    points: &[Point3D],
    grid: &GridIndex,
    params: &SegmentationParams,
    scratch: &mut ProfileScratch,
) -> usize {
    scratch.next_profile();
    let g = points[gmx];
    let (ux, uy) = (theta.cos(), theta.sin());
    let cell = grid.cell_size();
    let half_width = cell;
    let radius = params.max_crown_radius;
    let step = 0.5 * cell;
    let n_stations = (radius / step).ceil() as usize + 1;
    let mut walk = Walk { apex_z: g.z, last: gmx, min_z: g.z, min_point: gmx };

    for s in 0..=n_stations {
        let d = (s as f64 * step).min(radius);
        let (r, c) = grid.signed_rc(g.x + d * ux, g.y + d * uy);
        for dr in -1..=1 {
            for dc in -1..=1 {
                let Some(cell_id) = grid.cell_rc(r + dr, c + dc) else { continue };
                if scratch.stamp[cell_id] == scratch.current {
                    continue;
                }
                scratch.stamp[cell_id] = scratch.current;
                for &i in grid.points_in(cell_id) {
                    if i as usize == gmx {
                        continue;
                    }
                    let p = points[i as usize];
                    let (dx, dy) = (p.x - g.x, p.y - g.y);
                    let along = dx * ux + dy * uy;
                    let lateral = (dx * uy - dy * ux).abs();
                    if along > 0.0 && along <= radius && lateral <= half_width {
                        scratch.heap.push(Reverse(Along(along, i)));
                    }
                }
            }
        }
        // Every corridor point with along-distance below d - step/2 has been
        // seen by now, so those can be walked in order.
        let settled = if s >= n_stations { f64::INFINITY } else { d - step };
        while let Some(&Reverse(Along(along, i))) = scratch.heap.peek() {
            if along > settled {
                break;
            }
            scratch.heap.pop();
            let i = i as usize;
            let visited = grid.cell_at(points[i].x, points[i].y).is_some_and(|c| grid.is_visited(c));
            if let Step::Stop(b) = walk.step(i, &points[i], visited, params) {
                return b;
            }
        }
    }
    walk.last
}

/// One boundary point per equally spaced azimuth.
pub fn cast_profiles(
    gmx: usize,
    points: &[Point3D],
    grid: &GridIndex,
    params: &SegmentationParams,
    scratch: &mut ProfileScratch,
) -> Vec<usize> {
    let k = params.profile_count;
    (0..k)
        .map(|j| cast_profile(gmx, TAU * j as f64 / k as f64, points, grid, params, scratch))
        .collect()
}
