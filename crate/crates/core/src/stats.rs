//! Test statistics computed from an `(m+1) x n` matrix of summary curves.
//!
//! Row 0 is the observed pattern, rows `1..=m` are simulations. Reference
//! curves are always leave-one-out means, and integrals are left Riemann
//! sums `sum_t f(r_t) (r_{t+1} - r_t)` over the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::SummaryCurve;

/// Quantile levels used by the directional quantile scaling.
pub const QDIR_LEVELS: (f64, f64) = (0.025, 0.975);
/// Simulations needed before sd and quantile scalings are estimable.
pub const MIN_SIMS_SCALED: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMatrix {
    r: Vec<f64>,
    weights: Vec<f64>,
    rows: usize,
    data: Vec<f64>,
    truncated_at: Option<f64>,
}

fn riemann_weights(r: &[f64]) -> Vec<f64> {
    if r.len() == 1 {
        return vec![1.0];
    }
    let mut w: Vec<f64> = r.windows(2).map(|p| p[1] - p[0]).collect();
    w.push(0.0);
    w
}

impl CurveMatrix {
    /// Builds a matrix from row-major `data` of `rows` curves evaluated at `r`.
    pub fn new(r: Vec<f64>, rows: usize, data: Vec<f64>) -> Result<Self> {
        if r.is_empty() || rows < 2 || data.len() != rows * r.len() {
            return Err(Error::MismatchedShapes(format!(
                "{} values for {rows} rows x {} columns (need at least 2 rows, 1 column)",
                data.len(),
                r.len()
            )));
        }
        let weights = riemann_weights(&r);
        Ok(CurveMatrix { r, weights, rows, data, truncated_at: None })
    }

    /// Stacks curves sharing one grid. If any curve has undefined values the
    /// grid is cut before the first undefined scale of any row.
    pub fn from_curves(curves: &[SummaryCurve]) -> Result<Self> {
        let first = curves.first().ok_or_else(|| Error::MismatchedShapes("no curves".into()))?;
        if curves.iter().any(|c| c.grid != first.grid) {
            return Err(Error::MismatchedShapes("curves use different grids".into()));
        }
        let n = curves.iter().filter_map(SummaryCurve::first_undefined).min().unwrap_or(first.len());
        if n == 0 {
            return Err(Error::InsufficientSimulations(format!(
                "summary '{}' is undefined already at r = {}",
                first.label,
                first.grid.r_min()
            )));
        }
        let truncated_at = (n < first.len()).then(|| first.grid.values()[n]);
        let r = first.grid.values()[..n].to_vec();
        let data = curves.iter().flat_map(|c| c.values[..n].iter().copied()).collect();
        let mut cm = CurveMatrix::new(r, curves.len(), data)?;
        cm.truncated_at = truncated_at;
        Ok(cm)
    }

    /// Row-wise concatenation of matrices with equal shapes.
    pub fn concat(parts: &[CurveMatrix]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::MismatchedShapes("nothing to combine".into()))?;
        for p in parts {
            if p.rows != first.rows || p.cols() != first.cols() {
                return Err(Error::MismatchedShapes(format!(
                    "{}x{} vs {}x{}",
                    p.rows,
                    p.cols(),
                    first.rows,
                    first.cols()
                )));
            }
        }
        let mut r = Vec::new();
        let mut weights = Vec::new();
        for p in parts {
            r.extend_from_slice(&p.r);
            weights.extend_from_slice(&p.weights);
        }
        let mut data = Vec::with_capacity(first.data.len() * parts.len());
        for i in 0..first.rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        let truncated_at = parts.iter().find_map(|p| p.truncated_at);
        Ok(CurveMatrix { r, weights, rows: first.rows, data, truncated_at })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.r.len()
    }

    /// Number of simulations `m`.
    pub fn m(&self) -> usize {
        self.rows - 1
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncated_at(&self) -> Option<f64> {
        self.truncated_at
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> CurveMatrix {
        CurveMatrix { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    /// Pointwise mean over all rows.
    pub fn mean_curve(&self) -> Vec<f64> {
        let mut s = self.column_sums();
        for v in &mut s {
            *v /= self.rows as f64;
        }
        s
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols()];
        for i in 0..self.rows {
            for (a, b) in s.iter_mut().zip(self.row(i)) {
                *a += b;
            }
        }
        s
    }

    fn integrate(&self, f: impl Iterator<Item = f64>) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| if *w == 0.0 { 0.0 } else { w * v }).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatVariant {
    Mad,
    Dclf,
    St,
    Qdir,
    StDclf,
    QdirDclf,
    Crps,
    /// Evaluation at a fixed grid index.
    Point(usize),
    Int,
    Fun,
    Score,
}

impl StatVariant {
    pub fn is_vector(&self) -> bool {
        matches!(self, StatVariant::Fun | StatVariant::Score)
    }

    pub fn is_deviation(&self) -> bool {
        matches!(
            self,
            StatVariant::Mad
                | StatVariant::Dclf
                | StatVariant::St
                | StatVariant::Qdir
                | StatVariant::StDclf
                | StatVariant::QdirDclf
        )
    }

    pub fn extremeness(&self) -> Extremeness {
        match self {
            StatVariant::Point(_) | StatVariant::Int => Extremeness::TwoSided,
            StatVariant::Fun => Extremeness::VectorDepth,
            _ => Extremeness::LargeOnly,
        }
    }

    /// Parses a statistic name; `point` takes its grid index from `r_index`.
    pub fn from_name(name: &str, r_index: Option<usize>) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "mad" => StatVariant::Mad,
            "dclf" => StatVariant::Dclf,
            "st" => StatVariant::St,
            "qdir" => StatVariant::Qdir,
            "st_dclf" => StatVariant::StDclf,
            "qdir_dclf" => StatVariant::QdirDclf,
            "crps" => StatVariant::Crps,
            "point" => StatVariant::Point(
                r_index.ok_or_else(|| Error::InvalidArgs("statistic 'point' needs a grid index".into()))?,
            ),
            "int" => StatVariant::Int,
            "fun" => StatVariant::Fun,
            "score" => StatVariant::Score,
            other => return Err(Error::InvalidArgs(format!("unknown statistic '{other}'"))),
        })
    }

    pub fn name(&self) -> String {
        match self {
            StatVariant::Mad => "mad".into(),
            StatVariant::Dclf => "dclf".into(),
            StatVariant::St => "st".into(),
            StatVariant::Qdir => "qdir".into(),
            StatVariant::StDclf => "st_dclf".into(),
            StatVariant::QdirDclf => "qdir_dclf".into(),
            StatVariant::Crps => "crps".into(),
            StatVariant::Point(k) => format!("point({k})"),
            StatVariant::Int => "int".into(),
            StatVariant::Fun => "fun".into(),
            StatVariant::Score => "score".into(),
        }
    }
}

/// Which values of a statistic count as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremeness {
    LargeOnly,
    TwoSided,
    /// Vector statistic ordered through a two-sided depth measure.
    VectorDepth,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatValue {
    Scalar(f64, Extremeness),
    Vector(Vec<f64>, Extremeness),
}

impl StatValue {
    pub fn tag(&self) -> Extremeness {
        match self {
            StatValue::Scalar(_, t) | StatValue::Vector(_, t) => *t,
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            StatValue::Scalar(v, _) => Some(*v),
            StatValue::Vector(..) => None,
        }
    }
}

/// Leave-one-out mean `mu_{-i}(r)`, from the column sums in O(n).
pub fn reference_mean(cm: &CurveMatrix, i: usize) -> Vec<f64> {
    let m = cm.m() as f64;
    cm.column_sums().iter().zip(cm.row(i)).map(|(s, t)| (s - t) / m).collect()
}

/// Pointwise sd and central quantiles over all `m+1` rows.
#[derive(Debug, Clone)]
pub struct ColumnStats {
    pub sums: Vec<f64>,
    pub sd: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ColumnStats {
    pub fn new(cm: &CurveMatrix) -> Self {
        let sums = cm.column_sums();
        let k = cm.rows() as f64;
        let mut sd = Vec::with_capacity(cm.cols());
        let mut q_lo = Vec::with_capacity(cm.cols());
        let mut q_hi = Vec::with_capacity(cm.cols());
        for (j, s) in sums.iter().enumerate() {
            let mut col = cm.column(j);
            let mean = s / k;
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            sd.push((ss / (k - 1.0)).sqrt());
            col.sort_by(f64::total_cmp);
            q_lo.push(quantile_sorted(&col, QDIR_LEVELS.0));
            q_hi.push(quantile_sorted(&col, QDIR_LEVELS.1));
        }
        ColumnStats { sums, sd, q_lo, q_hi }
    }
}

/// `num / den`, with `0/0 = 0` and `x/0 = inf` for `x != 0`.
fn scaled(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

pub type WeightFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Deviation statistics for every row, sharing one pass over the columns.
pub fn deviation_statistics(cm: &CurveMatrix, variant: StatVariant, weight: Option<WeightFn<'_>>) -> Result<Vec<f64>> {
    let needs_scale =
        matches!(variant, StatVariant::St | StatVariant::Qdir | StatVariant::StDclf | StatVariant::QdirDclf);
    if !variant.is_deviation() {
        return Err(Error::InvalidArgs(format!("{} is not a deviation statistic", variant.name())));
    }
    if needs_scale && cm.m() < MIN_SIMS_SCALED {
        return Err(Error::TooFewSimulations { needed: MIN_SIMS_SCALED, got: cm.m() });
    }
    let stats = ColumnStats::new(cm);
    let m = cm.m() as f64;
    let w: Vec<f64> = cm.r().iter().map(|&r| weight.map_or(1.0, |f| f(r))).collect();
    let out = (0..cm.rows())
        .map(|i| {
            let terms = cm.row(i).iter().enumerate().map(|(j, &t)| {
                let mu = (stats.sums[j] - t) / m;
                let dev = t - mu;
                let s = match variant {
                    StatVariant::Mad | StatVariant::Dclf => dev.abs(),
                    StatVariant::St | StatVariant::StDclf => scaled(dev.abs(), stats.sd[j]),
                    _ => {
                        if dev >= 0.0 {
                            scaled(dev, (stats.q_hi[j] - mu).abs())
                        } else {
                            scaled(-dev, (stats.q_lo[j] - mu).abs())
                        }
                    }
                };
                w[j] * s
            });
            match variant {
                StatVariant::Mad | StatVariant::St | StatVariant::Qdir => terms.fold(0.0, f64::max),
                _ => cm.integrate(terms.map(|s| s * s)),
            }
        })
        .collect();
    Ok(out)
}

pub fn deviation_statistic(
    cm: &CurveMatrix,
    i: usize,
    variant: StatVariant,
    weight: Option<WeightFn<'_>>,
) -> Result<StatValue> {
    check_row(cm, i)?;
    let all = deviation_statistics(cm, variant, weight)?;
    Ok(StatValue::Scalar(all[i], Extremeness::LargeOnly))
}

fn check_row(cm: &CurveMatrix, i: usize) -> Result<()> {
    if i >= cm.rows() {
        return Err(Error::InvalidArgs(format!("row {i} out of range for {} rows", cm.rows())));
    }
    Ok(())
}

/// Pointwise fair CRPS of every row against the other `m` rows, as a
/// row-major `(m+1) x n` vector. O(n m log m).
pub fn crps_matrix(cm: &CurveMatrix) -> Result<Vec<f64>> {
    let m = cm.m();
    if m < 2 {
        return Err(Error::TooFewSimulations { needed: 2, got: m });
    }
    let (rows, n) = (cm.rows(), cm.cols());
    let mf = m as f64;
    let mut out = vec![0.0; rows * n];
    let mut idx: Vec<usize> = (0..rows).collect();
    let mut a = vec![0.0; rows];
    for j in 0..n {
        idx.sort_by(|&p, &q| cm.get(p, j).total_cmp(&cm.get(q, j)));
        // A_i = sum_k |x_i - x_k| via prefix sums over the sorted column
        let total: f64 = idx.iter().map(|&p| cm.get(p, j)).sum();
        let mut prefix = 0.0;
        for (rank, &p) in idx.iter().enumerate() {
            let x = cm.get(p, j);
            let below = rank as f64 * x - prefix;
            let above = (total - prefix - x) - (rows - rank - 1) as f64 * x;
            a[p] = below + above;
            prefix += x;
        }
        let b: f64 = a.iter().sum();
        for i in 0..rows {
            out[i * n + j] = a[i] / mf - (b - 2.0 * a[i]) / (2.0 * mf * (mf - 1.0));
        }
    }
    Ok(out)
}

/// Integrated fair CRPS for every row.
pub fn crps_statistics(cm: &CurveMatrix) -> Result<Vec<f64>> {
    let d = crps_matrix(cm)?;
    let n = cm.cols();
    Ok((0..cm.rows()).map(|i| cm.integrate(d[i * n..(i + 1) * n].iter().copied())).collect())
}

pub fn crps_statistic(cm: &CurveMatrix, i: usize) -> Result<StatValue> {
    check_row(cm, i)?;
    Ok(StatValue::Scalar(crps_statistics(cm)?[i], Extremeness::LargeOnly))
}

pub fn pointwise_score(cm: &CurveMatrix, i: usize) -> Result<StatValue> {
    check_row(cm, i)?;
    let n = cm.cols();
    let d = crps_matrix(cm)?;
    Ok(StatValue::Vector(d[i * n..(i + 1) * n].to_vec(), Extremeness::LargeOnly))
}

pub fn point_statistic(cm: &CurveMatrix, i: usize, r_index: usize) -> Result<StatValue> {
    check_row(cm, i)?;
    if r_index >= cm.cols() {
        return Err(Error::IndexOutOfGrid { index: r_index, len: cm.cols() });
    }
    Ok(StatValue::Scalar(cm.get(i, r_index), Extremeness::TwoSided))
}

pub fn integral_statistic(cm: &CurveMatrix, i: usize) -> Result<StatValue> {
    check_row(cm, i)?;
    Ok(StatValue::Scalar(cm.integrate(cm.row(i).iter().copied()), Extremeness::TwoSided))
}

pub fn functional_statistic(cm: &CurveMatrix, i: usize) -> Result<StatValue> {
    check_row(cm, i)?;
    Ok(StatValue::Vector(cm.row(i).to_vec(), Extremeness::VectorDepth))
}

/// The statistic of every row, ready for ordering.
#[derive(Debug, Clone, PartialEq)]
pub enum StatBatch {
    Scalar { values: Vec<f64>, tag: Extremeness },
    Vector { matrix: CurveMatrix, tag: Extremeness },
}

impl StatBatch {
    pub fn tag(&self) -> Extremeness {
        match self {
            StatBatch::Scalar { tag, .. } | StatBatch::Vector { tag, .. } => *tag,
        }
    }
}

pub fn statistic_batch(cm: &CurveMatrix, variant: StatVariant, weight: Option<WeightFn<'_>>) -> Result<StatBatch> {
    let tag = variant.extremeness();
    Ok(match variant {
        v if v.is_deviation() => StatBatch::Scalar { values: deviation_statistics(cm, v, weight)?, tag },
        StatVariant::Crps => StatBatch::Scalar { values: crps_statistics(cm)?, tag },
        StatVariant::Point(k) => {
            if k >= cm.cols() {
                return Err(Error::IndexOutOfGrid { index: k, len: cm.cols() });
            }
            StatBatch::Scalar { values: (0..cm.rows()).map(|i| cm.get(i, k)).collect(), tag }
        }
        StatVariant::Int => {
            StatBatch::Scalar { values: (0..cm.rows()).map(|i| cm.integrate(cm.row(i).iter().copied())).collect(), tag }
        }
        StatVariant::Fun => StatBatch::Vector { matrix: cm.clone(), tag },
        StatVariant::Score => {
            let data = crps_matrix(cm)?;
            let mut matrix = CurveMatrix::new(cm.r().to_vec(), cm.rows(), data)?;
            matrix.truncated_at = cm.truncated_at;
            StatBatch::Vector { matrix, tag }
        }
        _ => unreachable!("deviation variants handled above"),
    })
}
