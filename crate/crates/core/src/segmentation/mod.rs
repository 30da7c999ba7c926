//! Single-processor crown segmentation.
//!
//! After preprocessing, the surface cloud is indexed on a horizontal grid and
//! the occupied cells are sorted by their highest point. The main loop then
//! repeatedly takes the highest unclustered cell maximum (the GMX), casts
//! vertical profiles from it, builds the convex hull of the profile boundary
//! points and clusters every unvisited cell whose maximum falls inside that
//! hull. A forward-only cursor over the sorted cells makes each GMX lookup
//! amortised constant time.

mod benchmark;
mod grid;
mod output;
mod preprocess;
mod profile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{self, Vertex};
use crate::pointdata::{Point3D, PointCloud};
use crate::timing::Stopwatch;

pub use benchmark::{benchmark_runtime, loglog_slope, BenchmarkRow, BenchmarkTable};
use grid::ranks_above;
pub use grid::{build_sorted_cells, locate_gmx, locate_gmx_naive, Cursor, GridIndex};
pub use output::{read_records_jsonl, read_crowns_csv, write_crowns_csv, write_records_jsonl, CrownRow};
pub use preprocess::{preprocess, preprocess_indexed};
pub use profile::{cast_profile, cast_profiles, ProfileScratch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub cell_size: f64,
    pub max_crown_radius: f64,
    pub profile_count: usize,
    pub smoothing_radius: f64,
    /// Points more than this far below their cell maximum are non-surface.
    pub surface_threshold: f64,
    pub min_tree_height: f64,
    /// Cumulative drop, as a fraction of the GMX height, that arms the rise test.
    pub drop_fraction: f64,
    pub rise_tolerance: f64,
    /// Returns below this height end a profile.
    pub ground_cutoff: f64,
    /// Crowns whose member hull is smaller than this (m^2) are suppressed.
    pub min_crown_area: f64,
}

impl SegmentationParams {
    pub fn for_nps(nps: f64) -> Self {
        Self {
            cell_size: nps,
            max_crown_radius: 10.0,
            profile_count: 16,
            smoothing_radius: 2.0 * nps,
            surface_threshold: 1.0,
            min_tree_height: 5.0,
            drop_fraction: 0.1,
            rise_tolerance: 0.5,
            ground_cutoff: 2.0,
            min_crown_area: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.cell_size) {
            return Err(Error::validation("cell size must be positive"));
        }
        if self.profile_count < 8 {
            return Err(Error::validation(format!("profile count must be >= 8, got {}", self.profile_count)));
        }
        if !(self.max_crown_radius > self.cell_size) {
            return Err(Error::validation("max crown radius must exceed the cell size"));
        }
        if !(self.min_tree_height >= 0.0) {
            return Err(Error::validation("min tree height must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.drop_fraction) {
            return Err(Error::validation("drop fraction must lie in [0, 1]"));
        }
        for (name, v) in [
            ("smoothing radius", self.smoothing_radius),
            ("surface threshold", self.surface_threshold),
            ("rise tolerance", self.rise_tolerance),
            ("ground cut-off", self.ground_cutoff),
            ("min crown area", self.min_crown_area),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self::for_nps(0.2)
    }
}

/// One detected tree. `members` index the surface cloud of the segmentation.
///
/// `apex` and `height` come from the unsmoothed returns: the apex is the
/// member whose original height is greatest.
#[derive(Clone, Debug, PartialEq)]
pub struct CrownSegment {
    pub id: usize,
    pub apex: Point3D,
    pub apex_index: usize,
    pub members: Vec<usize>,
    /// Horizontal convex hull of the member points, counter-clockwise.
    pub hull: Vec<Vertex>,
    pub height: f64,
    pub crown_radius: f64,
}

impl CrownSegment {
    pub fn points<'a>(&'a self, cloud: &'a [Point3D]) -> impl Iterator<Item = Point3D> + 'a {
        self.members.iter().map(move |&i| cloud[i])
    }

    pub fn hull_area(&self) -> f64 {
        hull::area(&self.hull)
    }
}

/// A crown as slaves write it out and ship it across tile boundaries: its
/// surface points (smoothed heights) plus apex and shape summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrownRecord {
    pub apex: Point3D,
    pub height: f64,
    pub crown_radius: f64,
    pub points: Vec<Point3D>,
}

impl CrownRecord {
    /// Member points sorted by bit pattern; equal crowns give equal keys.
    pub fn point_key(&self) -> Vec<(u64, u64, u64)> {
        let mut k: Vec<_> = self.points.iter().map(Point3D::bit_key).collect();
        k.sort_unstable();
        k
    }
}

/// Sorts crowns by apex position then size, for order-independent comparison.
pub fn sort_records(records: &mut [CrownRecord]) {
    records.sort_by(|a, b| {
        a.apex
            .canonical_cmp(&b.apex)
            .then(a.points.len().cmp(&b.points.len()))
            .then_with(|| a.point_key().cmp(&b.point_key()))
    });
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentationStats {
    pub n: usize,
    /// Main-loop iterations, one per GMX.
    pub m: usize,
    pub preprocess_secs: f64,
    pub sort_secs: f64,
    pub loop_secs: f64,
}

impl SegmentationStats {
    pub fn total_secs(&self) -> f64 {
        self.preprocess_secs + self.sort_secs + self.loop_secs
    }
}

#[derive(Clone, Debug, Default)]
pub struct Segmentation {
    /// The cloud the crowns index into (the preprocessed surface for [`segment`]).
    pub surface: PointCloud,
    pub crowns: Vec<CrownSegment>,
    pub stats: SegmentationStats,
    /// GMX point index of every iteration, in order, including suppressed crowns.
    pub gmx_trace: Vec<usize>,
    /// Owning iteration of every surface point.
    pub assignment: Vec<usize>,
    /// Index in the input cloud of every surface point.
    pub source: Vec<usize>,
}

impl Segmentation {
    /// Crowns as records over the surface cloud. Apex and height keep the
    /// unsmoothed values when the input went through [`segment`].
    pub fn records(&self) -> Vec<CrownRecord> {
        self.crowns
            .iter()
            .map(|c| CrownRecord {
                apex: c.apex,
                height: c.height,
                crown_radius: c.crown_radius,
                points: c.members.iter().map(|&i| self.surface[i]).collect(),
            })
            .collect()
    }
}

/// How the main loop finds the next GMX.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GmxSearch {
    #[default]
    SortedCursor,
    /// Full scan of all cells per iteration; reference implementation.
    NaiveScan,
}

/// Preprocesses `cloud` and segments the resulting surface.
pub fn segment(cloud: &PointCloud, params: &SegmentationParams) -> Result<Segmentation> {
    params.validate()?;
    let sw = Stopwatch::start();
    let (surface, source) = preprocess_indexed(cloud, params);
    let preprocess_secs = sw.secs();
    let mut seg = run(surface, Some((cloud, source)), params, GmxSearch::SortedCursor)?;
    seg.stats.n = cloud.len();
    seg.stats.preprocess_secs += preprocess_secs;
    Ok(seg)
}

/// Segments an already preprocessed surface cloud.
pub fn segment_surface(surface: PointCloud, params: &SegmentationParams) -> Result<Segmentation> {
    segment_surface_with(surface, params, GmxSearch::SortedCursor)
}

pub fn segment_surface_with(surface: PointCloud, params: &SegmentationParams, search: GmxSearch) -> Result<Segmentation> {
    run(surface, None, params, search)
}

fn run(
    surface: PointCloud,
    raw: Option<(&PointCloud, Vec<usize>)>,
    params: &SegmentationParams,
    search: GmxSearch,
) -> Result<Segmentation> {
    params.validate()?;
    let (raw_points, source): (&[Point3D], Vec<usize>) = match raw {
        Some((cloud, source)) => (cloud, source),
        None => (&surface, (0..surface.len()).collect()),
    };
    let n = surface.len();
    let sw = Stopwatch::start();
    let mut grid = GridIndex::build(&surface, params.cell_size);
    let index_secs = sw.secs();

    let sw = Stopwatch::start();
    let sorted = match search {
        GmxSearch::SortedCursor => build_sorted_cells(&mut grid, &surface),
        GmxSearch::NaiveScan => Vec::new(),
    };
    let sort_secs = sw.secs();

    let sw = Stopwatch::start();
    let mut scratch = ProfileScratch::new(grid.n_cells());
    let mut crowns = Vec::new();
    let mut gmx_trace = Vec::new();
    let mut assignment = vec![usize::MAX; n];
    let mut cursor = Cursor(0);
    let tol = 2.0 * params.cell_size;
    loop {
        let gmx_cell = match search {
            GmxSearch::SortedCursor => match locate_gmx(&sorted, cursor, &grid) {
                Some((c, cur)) => {
                    cursor = cur;
                    c
                }
                None => break,
            },
            GmxSearch::NaiveScan => match locate_gmx_naive(&grid, &surface) {
                Some(c) => c,
                None => break,
            },
        };
        let iteration = gmx_trace.len();
        let gmx = grid.max_point(gmx_cell).expect("occupied cell");
        gmx_trace.push(gmx);
        let apex = surface[gmx];

        let boundary = if apex.z < params.ground_cutoff {
            Vec::new()
        } else {
            cast_profiles(gmx, &surface, &grid, params, &mut scratch)
        };
        let outline = hull::convex_hull(
            boundary.iter().chain(std::iter::once(&gmx)).map(|&i| (surface[i].x, surface[i].y)),
        );

        let mut clustered_cells = vec![gmx_cell];
        grid.mark_visited(gmx_cell);
        let (mut x0, mut y0, mut x1, mut y1) = (apex.x, apex.y, apex.x, apex.y);
        for v in &outline {
            x0 = x0.min(v.x);
            y0 = y0.min(v.y);
            x1 = x1.max(v.x);
            y1 = y1.max(v.y);
        }
        let (r0, c0) = grid.signed_rc(x0 - tol, y0 - tol);
        let (r1, c1) = grid.signed_rc(x1 + tol, y1 + tol);
        for r in r0.max(0)..=r1.min(grid.rows() as i64 - 1) {
            for c in c0.max(0)..=c1.min(grid.cols() as i64 - 1) {
                let cell = r as usize * grid.cols() + c as usize;
                if grid.is_visited(cell) {
                    continue;
                }
                let Some(m) = grid.max_point(cell) else { continue };
                if hull::contains(&outline, surface[m].x, surface[m].y, tol) {
                    grid.mark_visited(cell);
                    clustered_cells.push(cell);
                }
            }
        }

        let mut members: Vec<usize> =
            clustered_cells.iter().flat_map(|&c| grid.points_in(c).iter().map(|&i| i as usize)).collect();
        members.sort_unstable();
        for &i in &members {
            assignment[i] = iteration;
        }
        let apex_index = members
            .iter()
            .copied()
            .reduce(|a, b| if ranks_above(raw_points, source[b], source[a]) { b } else { a })
            .expect("the GMX is a member");
        let top = raw_points[source[apex_index]];
        if top.z < params.min_tree_height {
            continue;
        }
        let member_hull = hull::convex_hull(members.iter().map(|&i| (surface[i].x, surface[i].y)));
        if hull::area(&member_hull) < params.min_crown_area {
            continue;
        }
        let crown_radius = member_hull
            .iter()
            .map(|v| (v.x - top.x).hypot(v.y - top.y))
            .fold(0.0, f64::max);
        crowns.push(CrownSegment {
            id: crowns.len(),
            apex: top,
            apex_index,
            members,
            hull: member_hull,
            height: top.z,
            crown_radius,
        });
    }
    let loop_secs = sw.secs();
    let stats = SegmentationStats {
        n,
        m: gmx_trace.len(),
        preprocess_secs: index_secs,
        sort_secs,
        loop_secs,
    };
    Ok(Segmentation { surface, crowns, stats, gmx_trace, assignment, source })
}
