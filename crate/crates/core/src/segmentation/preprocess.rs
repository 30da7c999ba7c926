use super::grid::GridIndex;
use super::SegmentationParams;
use crate::pointdata::{Point3D, PointCloud};

/// Keeps surface returns and smooths the canopy surface.
///
/// A point survives when it lies within `surface_threshold` of the local
/// maximum, the highest return in its own and the eight neighbouring cells.
/// At one return per cell this is what removes ground hits under a crown.
/// Each surviving cell maximum is then replaced by the mean of the surviving
/// cell maxima in the `(2k + 1) x (2k + 1)` window around it, with
/// `k = round(smoothing_radius / cell_size)`, and the cell's surviving points
/// are shifted by the same amount. Heights are clamped at zero.
pub fn preprocess(cloud: &PointCloud, params: &SegmentationParams) -> PointCloud {
    preprocess_indexed(cloud, params).0
}

/// [`preprocess`] plus, for every output point, its index in `cloud`.
pub fn preprocess_indexed(cloud: &PointCloud, params: &SegmentationParams) -> (PointCloud, Vec<usize>) {
    if cloud.is_empty() {
        return (PointCloud::default(), Vec::new());
    }
    let grid = GridIndex::build(cloud, params.cell_size);
    let (rows, cols) = (grid.rows(), grid.cols());
    let top: Vec<f64> = (0..grid.n_cells())
        .map(|c| grid.max_point(c).map_or(f64::NEG_INFINITY, |m| cloud[m].z))
        .collect();
    let floor: Vec<f64> = (0..grid.n_cells())
        .map(|cell| {
            let (r, c) = grid.row_col(cell);
            let mut local = f64::NEG_INFINITY;
            for rr in r.saturating_sub(1)..(r + 2).min(rows) {
                for cc in c.saturating_sub(1)..(c + 2).min(cols) {
                    local = local.max(top[rr * cols + cc]);
                }
            }
            local - params.surface_threshold
        })
        .collect();

    let survives = |cell: usize| top[cell].is_finite() && top[cell] >= floor[cell];

    // Window sums run in lattice order so a cell's mean is bit-identical in
    // any tile that contains its whole window.
    let k = (params.smoothing_radius / params.cell_size).round() as usize;
    let mut keep: Vec<Option<f64>> = vec![None; cloud.len()];
    for cell in 0..grid.n_cells() {
        if !survives(cell) {
            continue;
        }
        let (r, c) = grid.row_col(cell);
        let (mut s, mut n) = (0.0, 0u32);
        for rr in r.saturating_sub(k)..(r + k + 1).min(rows) {
            for cc in c.saturating_sub(k)..(c + k + 1).min(cols) {
                let other = rr * cols + cc;
                if survives(other) {
                    s += top[other];
                    n += 1;
                }
            }
        }
        let shift = s / n as f64 - top[cell];
        for &i in grid.points_in(cell) {
            let p = cloud[i as usize];
            if p.z >= floor[cell] {
                keep[i as usize] = Some((p.z + shift).max(0.0));
            }
        }
    }
    let mut source = Vec::new();
    let out = cloud
        .iter()
        .zip(keep)
        .enumerate()
        .filter_map(|(i, (p, z))| {
            z.map(|z| {
                source.push(i);
                Point3D::new(p.x, p.y, z)
            })
        })
        .collect();
    (out, source)
}
