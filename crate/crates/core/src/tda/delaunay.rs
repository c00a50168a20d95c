use std::collections::HashMap;

use spade::{DelaunayTriangulation, Point2, Triangulation as _};

use crate::pattern::{Point, PointPattern};

/// Delaunay triangulation of a pattern, with vertex indices matching the
/// pattern's point order.
///
/// Predicates are evaluated robustly by `spade`; cocircular configurations
/// get one consistent diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub points: Vec<Point>,
    /// Edges `[a, b]` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    /// Triangles as counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// For every triangle, the indices of its three edges.
    pub triangle_edges: Vec<[usize; 3]>,
}

impl Triangulation {
    /// Triangles incident to each edge (zero, one or two).
    pub fn edge_cofaces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(2); self.edges.len()];
        for (t, es) in self.triangle_edges.iter().enumerate() {
            for &e in es {
                out[e].push(t);
            }
        }
        out
    }
}

pub fn delaunay(p: &PointPattern) -> Triangulation {
    let points = p.points().to_vec();
    let verts: Vec<Point2<f64>> = points.iter().map(|q| Point2::new(q.x, q.y)).collect();
    let dt = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(verts)
        .expect("validated patterns have finite, distinct coordinates");
    debug_assert_eq!(dt.num_vertices(), points.len());

    let mut edge_index = HashMap::new();
    let mut edges = Vec::with_capacity(dt.num_undirected_edges());
    for e in dt.undirected_edges() {
        let [a, b] = e.vertices().map(|v| v.fix().index());
        let key = (a.min(b), a.max(b));
        edge_index.insert(key, edges.len());
        edges.push([key.0, key.1]);
    }
    let mut triangles = Vec::with_capacity(dt.num_inner_faces());
    let mut triangle_edges = Vec::with_capacity(dt.num_inner_faces());
    for f in dt.inner_faces() {
        let v = f.vertices().map(|v| v.fix().index());
        let e = |a: usize, b: usize| edge_index[&(a.min(b), a.max(b))];
        triangle_edges.push([e(v[0], v[1]), e(v[1], v[2]), e(v[2], v[0])]);
        triangles.push(v);
    }
    Triangulation { points, edges, triangles, triangle_edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Window;
    use proptest::prelude::*;

    fn tri(pts: &[(f64, f64)]) -> Triangulation {
        delaunay(&PointPattern::new(pts.iter().copied(), Window::unit()).unwrap())
    }

    #[test]
    fn three_points() {
        let t = tri(&[(0.1, 0.1), (0.9, 0.1), (0.5, 0.8)]);
        assert_eq!(t.edges.len(), 3);
        assert_eq!(t.triangles.len(), 1);
    }

    #[test]
    fn square() {
        let t = tri(&[(0.2, 0.2), (0.8, 0.2), (0.8, 0.8), (0.2, 0.8)]);
        assert_eq!(t.edges.len(), 5);
        assert_eq!(t.triangles.len(), 2);
    }

    #[test]
    fn collinear() {
        let t = tri(&[(0.1, 0.5), (0.3, 0.5), (0.6, 0.5), (0.9, 0.5)]);
        assert_eq!(t.edges.len(), 3);
        assert!(t.triangles.is_empty());
    }

    #[test]
    fn single_point() {
        let t = tri(&[(0.5, 0.5)]);
        assert!(t.edges.is_empty() && t.triangles.is_empty());
    }

    /// Strict empty-circumcircle test in exact-enough double arithmetic for
    /// well-separated random points.
    fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
        let (adx, ady) = (a.x - d.x, a.y - d.y);
        let (bdx, bdy) = (b.x - d.x, b.y - d.y);
        let (cdx, cdy) = (c.x - d.x, c.y - d.y);
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
            + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    }

    proptest! {
        #[test]
        fn empty_circumcircles_and_euler(v in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..60)) {
            let Ok(p) = PointPattern::new(v, Window::unit()) else { return Ok(()) };
            let t = delaunay(&p);
            for tr in &t.triangles {
                let [a, b, c] = tr.map(|i| t.points[i]);
                for (k, &d) in t.points.iter().enumerate() {
                    if tr.contains(&k) { continue; }
                    prop_assert!(in_circle(a, b, c, d) <= 1e-12);
                }
            }
            // planar Euler formula for a triangulated convex hull: V - E + F = 1
            if !t.triangles.is_empty() {
                let chi = t.points.len() as i64 - t.edges.len() as i64 + t.triangles.len() as i64;
                prop_assert_eq!(chi, 1);
            }
        }
    }
}
