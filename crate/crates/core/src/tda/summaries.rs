use crate::error::{Error, Result};
use crate::pattern::{EvalGrid, SummaryCurve};

use super::filtration::Filtration;
use super::persistence::PersistenceDiagram;

/// Persistent rank function `#{(b_j, d_j) in PD^p : b_j <= b, d_j > d}`.
pub fn rank_function(pd: &PersistenceDiagram, p: u8, b: f64, d: f64) -> Result<usize> {
    if b > d {
        return Err(Error::InvalidArgs(format!("rank function needs b <= d, got b={b}, d={d}")));
    }
    Ok(pd.dim(p).filter(|q| q.birth <= b && q.death > d).count())
}

/// Adds `w` on the grid indices `k` with `lo <= r_k < hi`.
fn add_interval(acc: &mut [f64], grid: &EvalGrid, lo: f64, hi: f64, w: f64) {
    let a = grid.first_index_at_or_above(lo);
    let b = if hi.is_finite() { grid.first_index_at_or_above(hi) } else { grid.len() };
    if a < b {
        acc[a] += w;
        acc[b] -= w;
    }
}

fn finish(mut acc: Vec<f64>, grid: &EvalGrid, label: &str) -> SummaryCurve {
    let mut s = 0.0;
    for v in acc.iter_mut() {
        s += *v;
        *v = s;
    }
    acc.truncate(grid.len());
    SummaryCurve::new(label, grid.clone(), acc)
}

/// Betti curve `r -> beta_p(r, r)`.
pub fn betti_curve(pd: &PersistenceDiagram, grid: &EvalGrid, p: u8) -> SummaryCurve {
    let mut acc = vec![0.0; grid.len() + 1];
    for q in pd.dim(p) {
        add_interval(&mut acc, grid, q.birth, q.death, 1.0);
    }
    finish(acc, grid, &format!("betti{p}"))
}

/// Accumulated persistence function. In dimension 0 lifetimes are
/// accumulated by death scale, in dimension 1 by birth scale; the
/// never-dying component is left out.
pub fn apf(pd: &PersistenceDiagram, grid: &EvalGrid, p: u8) -> SummaryCurve {
    let mut acc = vec![0.0; grid.len() + 1];
    for q in pd.dim(p).filter(|q| q.death.is_finite()) {
        let at = if p == 0 { q.death } else { q.birth };
        add_interval(&mut acc, grid, at, f64::INFINITY, q.death - q.birth);
    }
    finish(acc, grid, &format!("apf{p}"))
}

/// Number of component deaths up to scale `r`.
pub fn nd0(pd: &PersistenceDiagram, grid: &EvalGrid) -> SummaryCurve {
    let mut acc = vec![0.0; grid.len() + 1];
    for q in pd.dim(0).filter(|q| q.death.is_finite()) {
        add_interval(&mut acc, grid, q.death, f64::INFINITY, 1.0);
    }
    finish(acc, grid, "nd0")
}

/// Euler characteristic `V - E(r) + F(r)` of the alpha complex.
pub fn euler_curve(f: &Filtration, grid: &EvalGrid) -> SummaryCurve {
    let mut acc = vec![0.0; grid.len() + 1];
    acc[0] += f.num_vertices() as f64;
    acc[grid.len()] -= f.num_vertices() as f64;
    for &e in &f.edge_values {
        add_interval(&mut acc, grid, e, f64::INFINITY, -1.0);
    }
    for &t in &f.triangle_values {
        add_interval(&mut acc, grid, t, f64::INFINITY, 1.0);
    }
    finish(acc, grid, "euler")
}
