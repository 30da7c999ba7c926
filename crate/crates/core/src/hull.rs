//! Horizontal convex hulls (Andrew's monotone chain) and containment tests.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
}

fn cross(o: Vertex, a: Vertex, b: Vertex) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull in counter-clockwise order without repeated end vertex.
/// Collinear boundary points are dropped; degenerate inputs yield one or two
/// vertices.
pub fn convex_hull(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<Vertex> {
    let mut pts: Vec<Vertex> = points.into_iter().map(|(x, y)| Vertex { x, y }).collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vertex> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn segment_distance(p: Vertex, a: Vertex, b: Vertex) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    (p.x - (a.x + t * dx)).hypot(p.y - (a.y + t * dy))
}

/// True when `(x, y)` lies inside the closed hull or within `tol` of it.
pub fn contains(hull: &[Vertex], x: f64, y: f64, tol: f64) -> bool {
    let p = Vertex { x, y };
    match hull.len() {
        0 => false,
        1 => (hull[0].x - x).hypot(hull[0].y - y) <= tol,
        2 => segment_distance(p, hull[0], hull[1]) <= tol,
        n => {
            let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0.0);
            inside || (0..n).any(|i| segment_distance(p, hull[i], hull[(i + 1) % n]) <= tol)
        }
    }
}

pub fn area(hull: &[Vertex]) -> f64 {
    let n = hull.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| cross(Vertex { x: 0.0, y: 0.0 }, hull[i], hull[(i + 1) % n])).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_interior_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)];
        let h = convex_hull(pts);
        assert_eq!(h.len(), 4);
        assert!((area(&h) - 1.0).abs() < 1e-12);
        assert!(contains(&h, 0.5, 0.5, 0.0));
        assert!(contains(&h, 1.0, 0.3, 0.0));
        assert!(!contains(&h, 1.1, 0.3, 0.0));
        assert!(contains(&h, 1.1, 0.3, 0.1 + 1e-12));
    }

    #[test]
    fn degenerate_hulls() {
        assert_eq!(convex_hull([(1.0, 1.0), (1.0, 1.0)]).len(), 1);
        let seg = convex_hull([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(seg.len(), 2);
        assert!(contains(&seg, 1.5, 1.5, 1e-12));
        assert!(!contains(&seg, 1.5, 0.0, 0.1));
    }

    proptest::proptest! {
        #[test]
        fn hull_contains_all_inputs(pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60)) {
            let h = convex_hull(pts.iter().copied());
            for &(x, y) in &pts {
                proptest::prop_assert!(contains(&h, x, y, 1e-9));
            }
        }
    }
}
