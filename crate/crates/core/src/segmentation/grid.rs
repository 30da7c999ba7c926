//! Horizontal grid index over a point cloud.
//!
//! Cells are addressed on a global lattice (`floor(coord / cell_size)`), so
//! grids built over a tile and over the whole area agree cell for cell.
//! Point membership is stored compactly: `order[start[c]..start[c + 1]]` lists
//! the points of cell `c`.

use std::cmp::Ordering;

use crate::pointdata::Point3D;

pub const NO_POINT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct GridIndex {
    cell_size: f64,
    row0: i64,
    col0: i64,
    rows: usize,
    cols: usize,
    start: Vec<u32>,
    order: Vec<u32>,
    max_point: Vec<u32>,
    visited: Vec<bool>,
}

/// `a` ranks above `b` as a cell maximum: higher z, then smaller (y, x), then
/// smaller index.
pub(crate) fn ranks_above(points: &[Point3D], a: usize, b: usize) -> bool {
    let (pa, pb) = (&points[a], &points[b]);
    match pa.z.total_cmp(&pb.z) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => pb.y.total_cmp(&pa.y).then(pb.x.total_cmp(&pa.x)).then(b.cmp(&a)) == Ordering::Greater,
    }
}

impl GridIndex {
    pub fn build(points: &[Point3D], cell_size: f64) -> Self {
        assert!(cell_size > 0.0, "cell size must be positive");
        assert!(points.len() < NO_POINT as usize, "too many points for the grid index");
        if points.is_empty() {
            return Self {
                cell_size,
                row0: 0,
                col0: 0,
                rows: 0,
                cols: 0,
                start: vec![0],
                order: Vec::new(),
                max_point: Vec::new(),
                visited: Vec::new(),
            };
        }
        let key = |v: f64| (v / cell_size).floor() as i64;
        let (mut rmin, mut rmax, mut cmin, mut cmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for p in points {
            let (r, c) = (key(p.y), key(p.x));
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        let rows = (rmax - rmin + 1) as usize;
        let cols = (cmax - cmin + 1) as usize;
        let n_cells = rows * cols;
        let mut cell_of = Vec::with_capacity(points.len());
        let mut counts = vec![0u32; n_cells + 1];
        for p in points {
            let c = (key(p.y) - rmin) as usize * cols + (key(p.x) - cmin) as usize;
            cell_of.push(c as u32);
            counts[c + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let start = counts;
        let mut fill = start.clone();
        let mut order = vec![0u32; points.len()];
        let mut max_point = vec![NO_POINT; n_cells];
        for (i, &c) in cell_of.iter().enumerate() {
            let c = c as usize;
            order[fill[c] as usize] = i as u32;
            fill[c] += 1;
            let m = max_point[c];
            if m == NO_POINT || ranks_above(points, i, m as usize) {
                max_point[c] = i as u32;
            }
        }
        Self {
            cell_size,
            row0: rmin,
            col0: cmin,
            rows,
            cols,
            start,
            order,
            max_point,
            visited: vec![false; n_cells],
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.cols, cell % self.cols)
    }

    /// Cell id containing the horizontal position, or `None` outside the grid.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<usize> {
        let r = (y / self.cell_size).floor() as i64 - self.row0;
        let c = (x / self.cell_size).floor() as i64 - self.col0;
        self.cell_rc(r, c)
    }

    pub fn cell_rc(&self, r: i64, c: i64) -> Option<usize> {
        if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
            None
        } else {
            Some(r as usize * self.cols + c as usize)
        }
    }

    /// Signed (row, col) of a position on this grid, possibly outside it.
    pub fn signed_rc(&self, x: f64, y: f64) -> (i64, i64) {
        ((y / self.cell_size).floor() as i64 - self.row0, (x / self.cell_size).floor() as i64 - self.col0)
    }

    pub fn points_in(&self, cell: usize) -> &[u32] {
        &self.order[self.start[cell] as usize..self.start[cell + 1] as usize]
    }

    pub fn max_point(&self, cell: usize) -> Option<usize> {
        match self.max_point[cell] {
            NO_POINT => None,
            m => Some(m as usize),
        }
    }

    pub fn is_visited(&self, cell: usize) -> bool {
        self.visited[cell]
    }

    pub fn mark_visited(&mut self, cell: usize) {
        self.visited[cell] = true;
    }

    pub fn reset_visited(&mut self) {
        self.visited.iter_mut().for_each(|v| *v = false);
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(|&c| self.max_point[c] != NO_POINT)
    }
}

/// Occupied cells ordered by descending maximum height, ties by (row, col)
/// ascending. Resets every visited flag.
pub fn build_sorted_cells(grid: &mut GridIndex, points: &[Point3D]) -> Vec<u32> {
    grid.reset_visited();
    let mut cells: Vec<u32> = grid.occupied_cells().map(|c| c as u32).collect();
    // Cell ids are row-major, so ascending id is ascending (row, col).
    cells.sort_unstable_by(|&a, &b| {
        let za = points[grid.max_point[a as usize] as usize].z;
        let zb = points[grid.max_point[b as usize] as usize].z;
        zb.total_cmp(&za).then(a.cmp(&b))
    });
    cells
}

/// Forward-only cursor over the sorted cell list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Cursor(pub usize);

/// Returns the first unvisited cell at or after `cursor`, with the cursor
/// advanced to that position, or `None` when every cell is visited.
pub fn locate_gmx(sorted: &[u32], cursor: Cursor, grid: &GridIndex) -> Option<(usize, Cursor)> {
    let mut pos = cursor.0;
    while pos < sorted.len() {
        let cell = sorted[pos] as usize;
        if !grid.is_visited(cell) {
            return Some((cell, Cursor(pos)));
        }
        pos += 1;
    }
    None
}

/// Reference search: scans every cell for the highest unvisited maximum.
pub fn locate_gmx_naive(grid: &GridIndex, points: &[Point3D]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for c in grid.occupied_cells() {
        if grid.is_visited(c) {
            continue;
        }
        best = match best {
            None => Some(c),
            Some(b) => {
                let (zc, zb) = (points[grid.max_point[c] as usize].z, points[grid.max_point[b] as usize].z);
                if zc > zb { Some(c) } else { Some(b) }
            }
        };
    }
    best
}
