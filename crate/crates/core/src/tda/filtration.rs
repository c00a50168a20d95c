use crate::pattern::{Point, PointPattern};

use super::delaunay::{delaunay, Triangulation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    /// Vertex indices; only the first `dim + 1` entries are meaningful.
    pub vertices: [usize; 3],
    pub dim: u8,
    pub value: f64,
    /// Index of the simplex within its dimension (vertex, edge or
    /// triangle index of the triangulation).
    pub index: usize,
}

/// Alpha filtration sorted by `(value, dim, insertion order)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub simplices: Vec<Simplex>,
    pub triangulation: Triangulation,
    /// Filtration values per edge and per triangle, indexed like the triangulation.
    pub edge_values: Vec<f64>,
    pub triangle_values: Vec<f64>,
}

impl Filtration {
    pub fn num_vertices(&self) -> usize {
        self.triangulation.points.len()
    }

    /// Simplex counts `(V, E, F)` of the complex at scale `r`.
    pub fn counts_at(&self, r: f64) -> (usize, usize, usize) {
        let e = self.edge_values.iter().filter(|&&v| v <= r).count();
        let f = self.triangle_values.iter().filter(|&&v| v <= r).count();
        (self.num_vertices(), e, f)
    }
}

fn circumradius(a: Point, b: Point, c: Point) -> f64 {
    let (la, lb, lc) = (b.dist(&c), a.dist(&c), a.dist(&b));
    let twice_area = ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs();
    la * lb * lc / (2.0 * twice_area)
}

/// `c` lies strictly inside the circle with diameter `ab`.
fn in_diametral_circle(a: Point, b: Point, c: Point) -> bool {
    (a.x - c.x) * (b.x - c.x) + (a.y - c.y) * (b.y - c.y) < 0.0
}

pub fn alpha_filtration(p: &PointPattern) -> Filtration {
    let tri = delaunay(p);
    let pts = &tri.points;
    let triangle_values: Vec<f64> =
        tri.triangles.iter().map(|t| circumradius(pts[t[0]], pts[t[1]], pts[t[2]])).collect();
    let cofaces = tri.edge_cofaces();
    let edge_values: Vec<f64> = tri
        .edges
        .iter()
        .zip(&cofaces)
        .map(|(&[a, b], cf)| {
            let attached = cf.iter().any(|&t| {
                let c = *tri.triangles[t].iter().find(|&&v| v != a && v != b).unwrap();
                in_diametral_circle(pts[a], pts[b], pts[c])
            });
            if attached {
                cf.iter().map(|&t| triangle_values[t]).fold(f64::INFINITY, f64::min)
            } else {
                0.5 * pts[a].dist(&pts[b])
            }
        })
        .collect();

    let mut simplices = Vec::with_capacity(pts.len() + edge_values.len() + triangle_values.len());
    simplices.extend((0..pts.len()).map(|i| Simplex { vertices: [i, 0, 0], dim: 0, value: 0.0, index: i }));
    simplices.extend(tri.edges.iter().zip(&edge_values).enumerate().map(|(i, (e, &v))| Simplex {
        vertices: [e[0], e[1], 0],
        dim: 1,
        value: v,
        index: i,
    }));
    simplices.extend(tri.triangles.iter().zip(&triangle_values).enumerate().map(|(i, (t, &v))| Simplex {
        vertices: *t,
        dim: 2,
        value: v,
        index: i,
    }));
    // stable sort keeps insertion order among equal (value, dim)
    simplices.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.dim.cmp(&b.dim)));
    Filtration { simplices, triangulation: tri, edge_values, triangle_values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Window;
    use proptest::prelude::*;

    fn filt(pts: &[(f64, f64)]) -> Filtration {
        alpha_filtration(&PointPattern::new(pts.iter().copied(), Window::unit()).unwrap())
    }

    #[test]
    fn two_points() {
        let f = filt(&[(0.2, 0.5), (0.5, 0.5)]);
        assert_eq!(f.edge_values.len(), 1);
        assert!((f.edge_values[0] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn equilateral() {
        let s = 0.5;
        let h = s * 3f64.sqrt() / 2.0;
        let f = filt(&[(0.2, 0.2), (0.2 + s, 0.2), (0.2 + s / 2.0, 0.2 + h)]);
        for &e in &f.edge_values {
            assert!((e - s / 2.0).abs() < 1e-12);
        }
        assert!((f.triangle_values[0] - s / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unit_square_diagonal_enters_with_triangles() {
        let big = Window::new(-1.0, 2.0, -1.0, 2.0).unwrap();
        let p = PointPattern::new([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], big).unwrap();
        let f = alpha_filtration(&p);
        let mut ev = f.edge_values.clone();
        ev.sort_by(f64::total_cmp);
        let d = 2f64.sqrt() / 2.0;
        assert_eq!(&ev[..4], &[0.5; 4]);
        assert!((ev[4] - d).abs() < 1e-12);
        for &t in &f.triangle_values {
            assert!((t - d).abs() < 1e-12);
        }
    }

    #[test]
    fn sort_order_is_value_then_dim() {
        let f = filt(&[(0.1, 0.1), (0.9, 0.1), (0.5, 0.8), (0.5, 0.3)]);
        for w in f.simplices.windows(2) {
            assert!((w[0].value, w[0].dim) <= (w[1].value, w[1].dim));
        }
        assert!(f.simplices[..4].iter().all(|s| s.dim == 0 && s.value == 0.0));
    }

    proptest! {
        #[test]
        fn faces_enter_no_later_than_cofaces(v in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..80)) {
            let Ok(p) = PointPattern::new(v, Window::unit()) else { return Ok(()) };
            let f = alpha_filtration(&p);
            for (t, es) in f.triangulation.triangle_edges.iter().enumerate() {
                for &e in es {
                    prop_assert!(f.edge_values[e] <= f.triangle_values[t]);
                }
            }
            prop_assert!(f.edge_values.iter().all(|&v| v > 0.0));
        }
    }
}
