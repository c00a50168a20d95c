//! Point patterns in rectangular windows, distance primitives and
//! evaluation grids shared by every summary statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used when no grid is specified.
pub const DEFAULT_GRID_POINTS: usize = 513;
/// Default upper scale as a fraction of the shorter window side.
pub const DEFAULT_RMAX_FRACTION: f64 = 0.25;
/// Default side length of the test-location lattice used by `F`.
pub const DEFAULT_TEST_GRID_SIDE: usize = 128;

/// Axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidWindow("non-finite bounds".into()));
        }
        if !(x_min < x_max && y_min < y_max) {
            return Err(Error::InvalidWindow(format!(
                "need x_min < x_max and y_min < y_max, got [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Window { x_min, x_max, y_min, y_max })
    }

    /// The unit square `[0,1]^2`.
    pub fn unit() -> Self {
        Window { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn min_side(&self) -> f64 {
        self.width().min(self.height())
    }

    /// Closed-boundary containment.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Distance from an interior location to the window boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        (x - self.x_min).min(self.x_max - x).min(y - self.y_min).min(self.y_max - y)
    }

    /// Window grown by `d` on every side.
    pub fn dilate(&self, d: f64) -> Window {
        Window { x_min: self.x_min - d, x_max: self.x_max + d, y_min: self.y_min - d, y_max: self.y_max + d }
    }

    /// Area of `W ∩ (W + h)` for a translation `h = (dx, dy)`.
    pub fn translated_overlap(&self, dx: f64, dy: f64) -> f64 {
        let ox = (self.width() - dx.abs()).max(0.0);
        let oy = (self.height() - dy.abs()).max(0.0);
        ox * oy
    }

    /// Centers of a `side x side` lattice of cells covering the window.
    pub fn lattice_centers(&self, side: usize) -> Vec<Point> {
        let (w, h) = (self.width(), self.height());
        let mut out = Vec::with_capacity(side * side);
        for iy in 0..side {
            let y = self.y_min + (iy as f64 + 0.5) * h / side as f64;
            for ix in 0..side {
                let x = self.x_min + (ix as f64 + 0.5) * w / side as f64;
                out.push(Point::new(x, y));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// A finite simple point pattern observed in a window.
///
/// Construction checks that every point lies in the (closed) window and that
/// no two points share coordinates exactly. Point order is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    pub fn new<P: Into<Point>>(points: impl IntoIterator<Item = P>, window: Window) -> Result<Self> {
        let points: Vec<Point> = points.into_iter().map(Into::into).collect();
        for (index, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() || !window.contains(p.x, p.y) {
                return Err(Error::OutOfWindow { index, x: p.x, y: p.y });
            }
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicatePoint { first, second });
            }
        }
        Ok(PointPattern { points, window })
    }

    pub fn empty(window: Window) -> Self {
        PointPattern { points: Vec::new(), window }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `n / |W|`.
    pub fn intensity(&self) -> f64 {
        self.points.len() as f64 / self.window.area()
    }

    pub fn pairwise_distances(&self) -> DistanceMatrix {
        let n = self.points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.points[i].dist(&self.points[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    /// Nearest-neighbour distance of every point.
    pub fn nn_distances(&self) -> Result<Vec<f64>> {
        let n = self.points.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        let index = CellIndex::new(&self.points, &self.window);
        Ok((0..n).map(|i| index.nearest(self.points[i], Some(i)).1).collect())
    }

    /// Distance from every cell centre of a `side x side` lattice to the
    /// nearest pattern point.
    pub fn empty_space_distances(&self, test_grid_side: usize) -> Result<Vec<f64>> {
        if self.points.is_empty() {
            return Err(Error::EmptyPattern);
        }
        if test_grid_side == 0 {
            return Err(Error::InvalidArgs("test grid side must be >= 1".into()));
        }
        let index = CellIndex::new(&self.points, &self.window);
        Ok(self.window.lattice_centers(test_grid_side).into_iter().map(|u| index.nearest(u, None).1).collect())
    }

    /// Distance from an arbitrary location to the nearest pattern point.
    pub fn distance_to_nearest(&self, x: f64, y: f64) -> Result<f64> {
        let u = Point::new(x, y);
        self.points.iter().map(|p| p.dist(&u)).min_by(f64::total_cmp).ok_or(Error::EmptyPattern)
    }
}

/// Dense symmetric matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Uniform bucket grid for nearest-neighbour queries.
pub(crate) struct CellIndex<'a> {
    points: &'a [Point],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl<'a> CellIndex<'a> {
    pub(crate) fn new(points: &'a [Point], window: &Window) -> Self {
        let n = points.len().max(1);
        let cell = (window.area() / n as f64).sqrt().max(f64::MIN_POSITIVE);
        let nx = ((window.width() / cell).ceil() as usize).clamp(1, 4096);
        let ny = ((window.height() / cell).ceil() as usize).clamp(1, 4096);
        let cell = (window.width() / nx as f64).max(window.height() / ny as f64);
        let mut cells = vec![Vec::new(); nx * ny];
        let (x0, y0) = (window.x_min, window.y_min);
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - x0) / cell) as usize).min(nx - 1);
            let cy = (((p.y - y0) / cell) as usize).min(ny - 1);
            cells[cy * nx + cx].push(i);
        }
        CellIndex { points, x0, y0, cell, nx, ny, cells }
    }

    /// Index and distance of the nearest point to `u`, skipping `exclude`.
    pub(crate) fn nearest(&self, u: Point, exclude: Option<usize>) -> (usize, f64) {
        let cx = (((u.x - self.x0) / self.cell).max(0.0) as usize).min(self.nx - 1) as isize;
        let cy = (((u.y - self.y0) / self.cell).max(0.0) as usize).min(self.ny - 1) as isize;
        let mut best = (usize::MAX, f64::INFINITY);
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            // every point in ring k is at least (k-1)*cell away
            if best.0 != usize::MAX && ((ring - 1) as f64) * self.cell > best.1 {
                break;
            }
            for gy in (cy - ring)..=(cy + ring) {
                if gy < 0 || gy >= self.ny as isize {
                    continue;
                }
                let on_edge_row = gy == cy - ring || gy == cy + ring;
                let step = if on_edge_row { 1 } else { (2 * ring).max(1) };
                let mut gx = cx - ring;
                while gx <= cx + ring {
                    if gx >= 0 && gx < self.nx as isize {
                        for &j in &self.cells[gy as usize * self.nx + gx as usize] {
                            if Some(j) == exclude {
                                continue;
                            }
                            let d = self.points[j].dist(&u);
                            if d < best.1 {
                                best = (j, d);
                            }
                        }
                    }
                    gx += step;
                }
            }
        }
        best
    }
}

/// Equidistant grid of evaluation scales `r_min = r_0 < ... < r_{n-1} = r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    r: Vec<f64>,
}

impl EvalGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2 points, got {n}")));
        }
        if !(r_min.is_finite() && r_max.is_finite()) || r_min < 0.0 || r_max <= r_min {
            return Err(Error::InvalidGrid(format!("need 0 <= r_min < r_max, got [{r_min}, {r_max}]")));
        }
        let step = (r_max - r_min) / (n - 1) as f64;
        let mut r: Vec<f64> = (0..n).map(|k| r_min + k as f64 * step).collect();
        r[n - 1] = r_max;
        Ok(EvalGrid { r })
    }

    /// `n = 513` points on `[0, r_max]` with `r_max` a quarter of the shorter side.
    pub fn default_for(window: &Window) -> Self {
        EvalGrid::new(0.0, DEFAULT_RMAX_FRACTION * window.min_side(), DEFAULT_GRID_POINTS)
            .expect("valid window gives a valid grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    pub fn step(&self) -> f64 {
        (self.r_max() - self.r_min()) / (self.r.len() - 1) as f64
    }

    /// Smallest grid index `k` with `r_k >= d`, or `len()` if none.
    pub(crate) fn first_index_at_or_above(&self, d: f64) -> usize {
        let n = self.r.len();
        if d <= self.r[0] {
            return 0;
        }
        if d > self.r[n - 1] {
            return n;
        }
        let mut k = (((d - self.r[0]) / self.step()).ceil() as usize).min(n - 1);
        while k > 0 && self.r[k - 1] >= d {
            k -= 1;
        }
        while k < n && self.r[k] < d {
            k += 1;
        }
        k
    }

    /// Smallest grid index `k` with `r_k > d`, or `len()` if none.
    pub(crate) fn first_index_above(&self, d: f64) -> usize {
        let mut k = self.first_index_at_or_above(d);
        while k < self.r.len() && self.r[k] <= d {
            k += 1;
        }
        k
    }
}

/// A functional summary statistic evaluated on an [`EvalGrid`].
///
/// Grid values where the estimator is undefined (e.g. the tail of `J` once
/// `F` reaches one) carry `defined = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCurve {
    pub label: String,
    pub grid: EvalGrid,
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
}

impl SummaryCurve {
    pub fn new(label: impl Into<String>, grid: EvalGrid, values: Vec<f64>) -> Self {
        let defined = values.iter().map(|v| v.is_finite()).collect();
        SummaryCurve { label: label.into(), grid, values, defined }
    }

    pub fn with_defined(label: impl Into<String>, grid: EvalGrid, values: Vec<f64>, defined: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), defined.len());
        SummaryCurve { label: label.into(), grid, values, defined }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the first undefined value, if any.
    pub fn first_undefined(&self) -> Option<usize> {
        self.defined.iter().position(|d| !d)
    }

    /// Applies `f` to every defined value.
    pub fn map(mut self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        for (v, &d) in self.values.iter_mut().zip(&self.defined) {
            if d {
                *v = f(*v);
            }
        }
        self.label = label.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Window {
        Window::unit()
    }

    #[test]
    fn new_pattern_cases() {
        let p = PointPattern::new([(0.5, 0.5)], unit()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(
            PointPattern::new([(0.1, 0.1), (0.1, 0.1)], unit()),
            Err(Error::DuplicatePoint { first: 0, second: 1 })
        );
        assert!(matches!(PointPattern::new([(2.0, 0.0)], unit()), Err(Error::OutOfWindow { index: 0, .. })));
        // closed boundary
        assert!(PointPattern::new([(0.0, 1.0), (1.0, 0.0)], unit()).is_ok());
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, f64::NAN, 0.0, 1.0).is_err());
        assert_eq!(Window::new(0.0, 2.0, 0.0, 3.0).unwrap().area(), 6.0);
    }

    #[test]
    fn pairwise_distance_examples() {
        let w = Window::new(-1.0, 5.0, -1.0, 5.0).unwrap();
        let p = PointPattern::new([(0.0, 0.0), (3.0, 4.0)], w).unwrap();
        assert_eq!(p.pairwise_distances().get(0, 1), 5.0);
        let single = PointPattern::new([(0.0, 0.0)], w).unwrap();
        let d = single.pairwise_distances();
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(0, 0), 0.0);
        let tri = PointPattern::new([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], w).unwrap();
        assert!((tri.pairwise_distances().get(1, 2) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nn_distance_examples() {
        let w = Window::new(-1.0, 5.0, -1.0, 5.0).unwrap();
        let p = PointPattern::new([(0.0, 0.0), (3.0, 4.0)], w).unwrap();
        assert_eq!(p.nn_distances().unwrap(), vec![5.0, 5.0]);
        let c = PointPattern::new([(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)], w).unwrap();
        assert_eq!(c.nn_distances().unwrap(), vec![1.0, 1.0, 2.0]);
        let one = PointPattern::new([(0.0, 0.0)], w).unwrap();
        assert_eq!(one.nn_distances(), Err(Error::TooFewPoints { needed: 2, got: 1 }));
    }

    #[test]
    fn empty_space_examples() {
        let p = PointPattern::new([(0.5, 0.5)], unit()).unwrap();
        assert_eq!(p.empty_space_distances(1).unwrap(), vec![0.0]);
        let corner = PointPattern::new([(0.0, 0.0)], unit()).unwrap();
        assert!((corner.distance_to_nearest(1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(PointPattern::empty(unit()).empty_space_distances(4), Err(Error::EmptyPattern));
    }

    #[test]
    fn grid_is_equidistant() {
        let g = EvalGrid::new(0.0, 0.25, 513).unwrap();
        let step = g.step();
        for w in g.values().windows(2) {
            assert!(((w[1] - w[0]) - step).abs() <= 1e-12 * step.max(1.0));
        }
        assert!(EvalGrid::new(0.0, 1.0, 1).is_err());
        assert!(EvalGrid::new(0.5, 0.5, 3).is_err());
        assert_eq!(EvalGrid::default_for(&unit()).len(), DEFAULT_GRID_POINTS);
    }

    #[test]
    fn grid_index_lookup() {
        let g = EvalGrid::new(0.0, 1.0, 11).unwrap();
        assert_eq!(g.first_index_at_or_above(0.0), 0);
        assert_eq!(g.first_index_at_or_above(0.1), 1);
        assert_eq!(g.first_index_at_or_above(0.15), 2);
        assert_eq!(g.first_index_at_or_above(1.5), 11);
        assert_eq!(g.first_index_above(0.1), 2);
        assert_eq!(g.first_index_above(-1.0), 0);
    }

    fn random_pattern() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..200)
    }

    proptest! {
        #[test]
        fn nn_matches_brute_force(pts in random_pattern()) {
            let Ok(p) = PointPattern::new(pts, Window::unit()) else { return Ok(()); };
            let nn = p.nn_distances().unwrap();
            for (i, a) in p.points().iter().enumerate() {
                let brute = p.points().iter().enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| a.dist(b))
                    .fold(f64::INFINITY, f64::min);
                prop_assert_eq!(nn[i], brute);
            }
        }

        #[test]
        fn distance_matrix_metric(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30)) {
            let Ok(p) = PointPattern::new(pts, Window::unit()) else { return Ok(()); };
            let d = p.pairwise_distances();
            let n = d.len();
            for i in 0..n {
                prop_assert_eq!(d.get(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(d.get(i, j), d.get(j, i));
                    for k in 0..n {
                        prop_assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn empty_space_matches_brute_force(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60)) {
            let Ok(p) = PointPattern::new(pts, Window::unit()) else { return Ok(()); };
            let d = p.empty_space_distances(9).unwrap();
            for (u, du) in Window::unit().lattice_centers(9).iter().zip(&d) {
                let brute = p.distance_to_nearest(u.x, u.y).unwrap();
                prop_assert_eq!(*du, brute);
            }
        }
    }
}
