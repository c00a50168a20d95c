//! Nonparametric estimators of the classical summary functions
//! `K`, `L`, `pcf`, `F`, `G`, `G*` and `J`.
//!
//! Second-order estimators use the ratio-unbiased squared intensity
//! `n (n - 1) / |W|^2`, so that `K` equals the plain pair sum scaled by
//! `|W| / (n (n - 1))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{EvalGrid, Point, PointPattern, SummaryCurve, DEFAULT_TEST_GRID_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EdgeCorrection {
    /// Weight `|W| / |W ∩ (W + x - y)|` per pair.
    #[default]
    Translation,
    /// Reduced sample: only points at least `r` from the boundary act as centres.
    Border,
    None,
}

/// Calls `f(i, j, d, dx, dy)` once for every unordered pair with `d <= r_max`.
fn close_pairs(points: &[Point], r_max: f64, mut f: impl FnMut(usize, usize, f64, f64, f64)) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
    let r2 = r_max * r_max;
    for (a, &i) in order.iter().enumerate() {
        let pi = points[i];
        for &j in &order[a + 1..] {
            let pj = points[j];
            let dx = pj.x - pi.x;
            if dx > r_max {
                break;
            }
            let dy = pj.y - pi.y;
            let d2 = dx * dx + dy * dy;
            if d2 <= r2 {
                f(i, j, d2.sqrt(), dx, dy);
            }
        }
    }
}

fn require_pairs(p: &PointPattern) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: p.len() });
    }
    Ok(())
}

fn cumsum(v: &mut [f64]) {
    let mut acc = 0.0;
    for x in v.iter_mut() {
        acc += *x;
        *x = acc;
    }
}

/// Per grid point, the number of centres whose boundary distance is `>= r`.
fn border_counts(grid: &EvalGrid, b: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut diff = vec![0.0; n + 1];
    for &bi in b {
        diff[grid.first_index_above(bi)] -= 1.0;
        diff[0] += 1.0;
    }
    cumsum(&mut diff);
    diff.truncate(n);
    diff
}

/// Ripley's K-function.
pub fn estimate_k(p: &PointPattern, grid: &EvalGrid, corr: EdgeCorrection) -> Result<SummaryCurve> {
    require_pairs(p)?;
    let pts = p.points();
    let w = p.window();
    let area = w.area();
    let n = pts.len() as f64;
    let len = grid.len();
    let mut acc = vec![0.0; len + 1];
    let values = match corr {
        EdgeCorrection::None | EdgeCorrection::Translation => {
            close_pairs(pts, grid.r_max(), |_, _, d, dx, dy| {
                let weight = match corr {
                    EdgeCorrection::Translation => area / w.translated_overlap(dx, dy),
                    _ => 1.0,
                };
                acc[grid.first_index_at_or_above(d)] += 2.0 * weight;
            });
            cumsum(&mut acc);
            acc.truncate(len);
            let scale = area / (n * (n - 1.0));
            acc.iter().map(|s| s * scale).collect::<Vec<_>>()
        }
        EdgeCorrection::Border => {
            let b: Vec<f64> = pts.iter().map(|q| w.boundary_distance(q.x, q.y)).collect();
            // pair (i, j) counts for centre i on [d, b_i]
            close_pairs(pts, grid.r_max(), |i, j, d, _, _| {
                let lo = grid.first_index_at_or_above(d);
                for c in [i, j] {
                    let hi = grid.first_index_above(b[c]);
                    if lo < hi {
                        acc[lo] += 1.0;
                        acc[hi] -= 1.0;
                    }
                }
            });
            cumsum(&mut acc);
            let centres = border_counts(grid, &b);
            let scale = area / (n - 1.0);
            (0..len).map(|k| if centres[k] > 0.0 { scale * acc[k] / centres[k] } else { f64::NAN }).collect()
        }
    };
    Ok(SummaryCurve::new("K", grid.clone(), values))
}

/// Besag's L-function `sqrt(K / pi)`.
pub fn estimate_l(p: &PointPattern, grid: &EvalGrid, corr: EdgeCorrection) -> Result<SummaryCurve> {
    Ok(estimate_k(p, grid, corr)?.map("L", |k| (k.max(0.0) / PI).sqrt()))
}

/// Stoyan's bandwidth rule `0.15 / sqrt(lambda)`.
pub fn default_pcf_bandwidth(p: &PointPattern) -> f64 {
    0.15 / p.intensity().sqrt()
}

fn epanechnikov(u: f64, b: f64) -> f64 {
    let t = u / b;
    if t.abs() < 1.0 {
        0.75 / b * (1.0 - t * t)
    } else {
        0.0
    }
}

/// Kernel estimate of the pair correlation function with an Epanechnikov
/// kernel of half-width `bandwidth` (default [`default_pcf_bandwidth`]).
///
/// The grid must start strictly above zero, where the `1/r` factor blows up.
pub fn estimate_pcf(
    p: &PointPattern,
    grid: &EvalGrid,
    corr: EdgeCorrection,
    bandwidth: Option<f64>,
) -> Result<SummaryCurve> {
    require_pairs(p)?;
    let b = bandwidth.unwrap_or_else(|| default_pcf_bandwidth(p));
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::BandwidthNonpositive(b));
    }
    if grid.r_min() <= 0.0 {
        return Err(Error::InvalidArgs("pcf grid must start at r_min > 0".into()));
    }
    let pts = p.points();
    let w = p.window();
    let area = w.area();
    let n = pts.len() as f64;
    let r = grid.values();
    let mut acc = vec![0.0; r.len()];
    let bd: Vec<f64> = pts.iter().map(|q| w.boundary_distance(q.x, q.y)).collect();
    close_pairs(pts, grid.r_max() + b, |i, j, d, dx, dy| {
        let lo = grid.first_index_above(d - b);
        let hi = grid.first_index_at_or_above(d + b);
        for k in lo..hi {
            let kern = epanechnikov(r[k] - d, b);
            match corr {
                EdgeCorrection::None => acc[k] += 2.0 * kern,
                EdgeCorrection::Translation => acc[k] += 2.0 * kern * area / w.translated_overlap(dx, dy),
                EdgeCorrection::Border => {
                    let centres = (bd[i] >= r[k]) as u8 + (bd[j] >= r[k]) as u8;
                    acc[k] += centres as f64 * kern;
                }
            }
        }
    });
    let values = match corr {
        EdgeCorrection::Border => {
            let centres = border_counts(grid, &bd);
            (0..r.len())
                .map(|k| {
                    if centres[k] > 0.0 {
                        area / (n - 1.0) * acc[k] / (centres[k] * 2.0 * PI * r[k])
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        }
        _ => {
            let scale = area / (n * (n - 1.0));
            (0..r.len()).map(|k| scale * acc[k] / (2.0 * PI * r[k])).collect()
        }
    };
    Ok(SummaryCurve::new("pcf", grid.clone(), values))
}

/// Reduced-sample ratio `#{b_u >= r, d_u <= r} / #{b_u >= r}` on the grid.
fn reduced_sample(grid: &EvalGrid, dist: &[f64], bdist: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = grid.len();
    let mut num = vec![0.0; len + 1];
    for (&d, &b) in dist.iter().zip(bdist) {
        let lo = grid.first_index_at_or_above(d);
        let hi = grid.first_index_above(b);
        if lo < hi {
            num[lo] += 1.0;
            num[hi] -= 1.0;
        }
    }
    cumsum(&mut num);
    num.truncate(len);
    (num, border_counts(grid, bdist))
}

/// Empty-space function with a border-corrected reduced-sample estimator over
/// the cell centres of a `test_grid_side x test_grid_side` lattice.
pub fn estimate_f(p: &PointPattern, grid: &EvalGrid, test_grid_side: usize) -> Result<SummaryCurve> {
    let dist = p.empty_space_distances(test_grid_side)?;
    let w = p.window();
    let bdist: Vec<f64> = w.lattice_centers(test_grid_side).iter().map(|u| w.boundary_distance(u.x, u.y)).collect();
    let (num, den) = reduced_sample(grid, &dist, &bdist);
    let mut values = Vec::with_capacity(grid.len());
    for (k, &r) in grid.values().iter().enumerate() {
        if den[k] == 0.0 {
            return Err(Error::NoValidTestLocations { r });
        }
        values.push(num[k] / den[k]);
    }
    Ok(SummaryCurve::new("F", grid.clone(), values))
}

/// Nearest-neighbour distance distribution, border corrected. Scales with no
/// eligible centre are flagged undefined.
pub fn estimate_g(p: &PointPattern, grid: &EvalGrid) -> Result<SummaryCurve> {
    let nn = p.nn_distances()?;
    let w = p.window();
    let bdist: Vec<f64> = p.points().iter().map(|q| w.boundary_distance(q.x, q.y)).collect();
    let (num, den) = reduced_sample(grid, &nn, &bdist);
    let values = num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { f64::NAN }).collect();
    Ok(SummaryCurve::new("G", grid.clone(), values))
}

/// Variance-stabilised `arcsin(sqrt(G))`.
pub fn estimate_g_star(p: &PointPattern, grid: &EvalGrid) -> Result<SummaryCurve> {
    Ok(estimate_g(p, grid)?.map("Gstar", |g| g.clamp(0.0, 1.0).sqrt().asin()))
}

/// `J = (1 - G) / (1 - F)`. From the first scale where `F` reaches one (or
/// `G` is undefined) onwards, every value is flagged undefined.
pub fn estimate_j(p: &PointPattern, grid: &EvalGrid) -> Result<SummaryCurve> {
    estimate_j_with(p, grid, DEFAULT_TEST_GRID_SIDE)
}

pub fn estimate_j_with(p: &PointPattern, grid: &EvalGrid, test_grid_side: usize) -> Result<SummaryCurve> {
    let g = estimate_g(p, grid)?;
    let f = estimate_f(p, grid, test_grid_side)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut defined = Vec::with_capacity(grid.len());
    let mut alive = true;
    for k in 0..grid.len() {
        alive = alive && g.defined[k] && f.values[k] < 1.0;
        if alive {
            values.push((1.0 - g.values[k]) / (1.0 - f.values[k]));
        } else {
            values.push(f64::NAN);
        }
        defined.push(alive);
    }
    Ok(SummaryCurve::with_defined("J", grid.clone(), values, defined))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Window;
    use crate::rng::RngSeed;
    use crate::simulate::{simulate, ModelSpec};
    use proptest::prelude::*;

    fn pattern(pts: &[(f64, f64)]) -> PointPattern {
        PointPattern::new(pts.iter().copied(), Window::unit()).unwrap()
    }

    fn csr(lambda: f64, i: u64) -> PointPattern {
        simulate(&ModelSpec::Poisson { lambda }, &Window::unit(), RngSeed::new(2024, i)).unwrap()
    }

    /// O(n^2) reference with unit weights.
    fn brute_k_none(p: &PointPattern, r: f64) -> f64 {
        let pts = p.points();
        let n = pts.len() as f64;
        let mut count = 0.0;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j && pts[i].dist(&pts[j]) <= r {
                    count += 1.0;
                }
            }
        }
        count * p.window().area() / (n * (n - 1.0))
    }

    #[test]
    fn k_zero_below_pair_distance() {
        let p = pattern(&[(0.2, 0.5), (0.5, 0.5)]);
        let grid = EvalGrid::new(0.0, 0.29, 30).unwrap();
        for corr in [EdgeCorrection::Translation, EdgeCorrection::Border, EdgeCorrection::None] {
            let k = estimate_k(&p, &grid, corr).unwrap();
            assert!(k.values.iter().all(|&v| v == 0.0), "{corr:?}");
        }
    }

    #[test]
    fn k_needs_two_points() {
        let p = pattern(&[(0.2, 0.5)]);
        let grid = EvalGrid::new(0.0, 0.25, 10).unwrap();
        assert_eq!(estimate_k(&p, &grid, EdgeCorrection::None).unwrap_err(), Error::TooFewPoints { needed: 2, got: 1 });
    }

    #[test]
    fn l_of_known_k() {
        let grid = EvalGrid::new(0.0, 1.0, 2).unwrap();
        let c = SummaryCurve::new("K", grid, vec![0.0, PI * 0.04]).map("L", |k| (k / PI).sqrt());
        assert_eq!(c.values[0], 0.0);
        assert!((c.values[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn pcf_single_pair_matches_hand_formula() {
        let p = pattern(&[(0.4, 0.5), (0.5, 0.5)]);
        let grid = EvalGrid::new(0.05, 0.15, 11).unwrap();
        let b = 0.02;
        let g = estimate_pcf(&p, &grid, EdgeCorrection::Translation, Some(b)).unwrap();
        let k = 5; // r = 0.1
        assert!((grid.values()[k] - 0.1).abs() < 1e-12);
        let u = grid.values()[k] - 0.1;
        let kern = 0.75 / b * (1.0 - (u / b).powi(2));
        let w = 1.0 / ((1.0 - 0.1) * 1.0);
        // 1 / (2 pi r) * |W| / (n (n - 1)) * sum over both ordered pairs
        let expected = 1.0 / (2.0 * PI * 0.1) * (1.0 / 2.0) * 2.0 * w * kern;
        assert!((g.values[k] - expected).abs() < 1e-9 * expected);
        assert!(g.values[k] > 0.0);
    }

    #[test]
    fn pcf_zero_when_pairs_far() {
        let p = pattern(&[(0.05, 0.05), (0.95, 0.95)]);
        let grid = EvalGrid::new(0.01, 0.25, 25).unwrap();
        let g = estimate_pcf(&p, &grid, EdgeCorrection::Translation, Some(0.02)).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pcf_argument_checks() {
        let p = pattern(&[(0.4, 0.5), (0.5, 0.5)]);
        let grid = EvalGrid::new(0.01, 0.25, 25).unwrap();
        assert_eq!(
            estimate_pcf(&p, &grid, EdgeCorrection::None, Some(0.0)).unwrap_err(),
            Error::BandwidthNonpositive(0.0)
        );
        let zero = EvalGrid::new(0.0, 0.25, 25).unwrap();
        assert!(matches!(estimate_pcf(&p, &zero, EdgeCorrection::None, None), Err(Error::InvalidArgs(_))));
    }

    #[test]
    fn f_basic_cases() {
        let p = pattern(&[(0.5, 0.5)]);
        let grid = EvalGrid::new(0.0, 0.45, 10).unwrap();
        let f = estimate_f(&p, &grid, 64).unwrap();
        assert_eq!(f.values[0], 0.0);
        // at r = 0.45 the retained region is [0.45, 0.55]^2, within 0.071 of the centre
        assert_eq!(*f.values.last().unwrap(), 1.0);
        let too_far = EvalGrid::new(0.0, 0.6, 10).unwrap();
        assert!(matches!(estimate_f(&p, &too_far, 64), Err(Error::NoValidTestLocations { .. })));
        let empty = PointPattern::empty(Window::unit());
        assert_eq!(estimate_f(&empty, &grid, 64).unwrap_err(), Error::EmptyPattern);
    }

    #[test]
    fn g_star_endpoints_and_hard_core() {
        let p = simulate(&ModelSpec::Ssi { n: 80, r_inhibit: 0.05 }, &Window::unit(), RngSeed::new(1, 1)).unwrap();
        let grid = EvalGrid::new(0.0, 0.25, 101).unwrap();
        let g = estimate_g(&p, &grid).unwrap();
        for (r, v) in grid.values().iter().zip(&g.values) {
            if *r < 0.05 {
                assert_eq!(*v, 0.0);
            }
        }
        let gs = estimate_g_star(&p, &grid).unwrap();
        assert_eq!(gs.values[0], 0.0);
        let top = g.values.iter().rposition(|&v| v == 1.0);
        if let Some(k) = top {
            assert!((gs.values[k] - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn j_starts_at_one_and_tail_is_undefined() {
        let p = pattern(&[(0.3, 0.3), (0.7, 0.7), (0.3, 0.7), (0.7, 0.3)]);
        let grid = EvalGrid::new(0.0, 0.45, 46).unwrap();
        let j = estimate_j_with(&p, &grid, 64).unwrap();
        assert_eq!(j.values[0], 1.0);
        // the lattice is fully covered long before r = 0.45
        let first = j.first_undefined().expect("F reaches one");
        assert!(j.defined[..first].iter().all(|&d| d));
        assert!(j.defined[first..].iter().all(|&d| !d));
    }

    #[test]
    fn csr_means_match_theory() {
        let reps = 200;
        let grid = EvalGrid::new(0.0, 0.1, 11).unwrap();
        let (mut k, mut f, mut g) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..reps {
            let p = csr(100.0, i);
            k.push(estimate_k(&p, &grid, EdgeCorrection::Translation).unwrap().values[10]);
            f.push(estimate_f(&p, &grid, 64).unwrap().values[5]);
            g.push(estimate_g(&p, &grid).unwrap().values[5]);
        }
        let check = |v: &[f64], target: f64| {
            let n = v.len() as f64;
            let m = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((m - target).abs() < 3.0 * sd / n.sqrt(), "mean {m} target {target}");
        };
        check(&k, PI * 0.01);
        let fg = 1.0 - (-100.0 * PI * 0.05f64.powi(2)).exp();
        check(&f, fg);
        check(&g, fg);
    }

    fn arb_pattern() -> impl Strategy<Value = PointPattern> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..100)
            .prop_filter_map("duplicates", |v| PointPattern::new(v, Window::unit()).ok())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn k_none_matches_brute_force(p in arb_pattern()) {
            let grid = EvalGrid::new(0.0, 0.25, 26).unwrap();
            let k = estimate_k(&p, &grid, EdgeCorrection::None).unwrap();
            for (r, v) in grid.values().iter().zip(&k.values) {
                let b = brute_k_none(&p, *r);
                prop_assert!((v - b).abs() <= 1e-9 * b.max(1.0));
            }
        }

        #[test]
        fn k_monotone_and_summaries_bounded(p in arb_pattern()) {
            let grid = EvalGrid::new(0.0, 0.25, 51).unwrap();
            let mono = |c: &SummaryCurve| c.values.windows(2).zip(c.defined.windows(2))
                .all(|(v, d)| !(d[0] && d[1]) || v[1] >= v[0] - 1e-12);
            for corr in [EdgeCorrection::Translation, EdgeCorrection::None] {
                prop_assert!(mono(&estimate_k(&p, &grid, corr).unwrap()));
            }
            let f = estimate_f(&p, &grid, 32).unwrap();
            prop_assert!(f.values.iter().all(|v| (0.0..=1.0).contains(v)));
            let g = estimate_g(&p, &grid).unwrap();
            prop_assert!(g.values.iter().zip(&g.defined).all(|(v, d)| !d || (0.0..=1.0).contains(v)));
            let gs = estimate_g_star(&p, &grid).unwrap();
            prop_assert!(gs.values.iter().zip(&gs.defined).all(|(v, d)| !d || (0.0..=PI / 2.0).contains(v)));
            let l = estimate_l(&p, &grid, EdgeCorrection::Translation).unwrap();
            prop_assert!(l.values.iter().all(|&v| v >= 0.0));
        }
    }
}
