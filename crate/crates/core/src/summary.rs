//! Selection of a functional summary statistic and its evaluation grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{self, EdgeCorrection};
use crate::error::{Error, Result};
use crate::pattern::{EvalGrid, PointPattern, SummaryCurve, Window, DEFAULT_GRID_POINTS, DEFAULT_TEST_GRID_SIDE};
use crate::tda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryKind {
    K,
    L,
    Pcf,
    F,
    G,
    GStar,
    J,
    Betti0,
    Betti1,
    Apf0,
    Apf1,
    Nd0,
    Euler,
}

impl SummaryKind {
    pub const ALL: [SummaryKind; 13] = [
        SummaryKind::K,
        SummaryKind::L,
        SummaryKind::Pcf,
        SummaryKind::F,
        SummaryKind::G,
        SummaryKind::GStar,
        SummaryKind::J,
        SummaryKind::Betti0,
        SummaryKind::Betti1,
        SummaryKind::Apf0,
        SummaryKind::Apf1,
        SummaryKind::Nd0,
        SummaryKind::Euler,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SummaryKind::K => "k",
            SummaryKind::L => "l",
            SummaryKind::Pcf => "pcf",
            SummaryKind::F => "f",
            SummaryKind::G => "g",
            SummaryKind::GStar => "gstar",
            SummaryKind::J => "j",
            SummaryKind::Betti0 => "betti0",
            SummaryKind::Betti1 => "betti1",
            SummaryKind::Apf0 => "apf0",
            SummaryKind::Apf1 => "apf1",
            SummaryKind::Nd0 => "nd0",
            SummaryKind::Euler => "euler",
        }
    }

    pub fn is_topological(&self) -> bool {
        matches!(
            self,
            SummaryKind::Betti0
                | SummaryKind::Betti1
                | SummaryKind::Apf0
                | SummaryKind::Apf1
                | SummaryKind::Nd0
                | SummaryKind::Euler
        )
    }
}

impl fmt::Display for SummaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SummaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SummaryKind::ALL
            .into_iter()
            .find(|k| k.name() == lower || (lower == "g_star" && *k == SummaryKind::GStar))
            .ok_or_else(|| Error::InvalidArgs(format!("unknown summary '{s}'")))
    }
}

/// A summary statistic together with everything needed to evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySpec {
    pub kind: SummaryKind,
    pub grid: EvalGrid,
    pub correction: EdgeCorrection,
    /// Kernel half-width for `pcf`; `None` uses the default rule.
    pub bandwidth: Option<f64>,
    pub test_grid_side: usize,
}

impl SummarySpec {
    pub fn new(kind: SummaryKind, grid: EvalGrid) -> Self {
        SummarySpec {
            kind,
            grid,
            correction: EdgeCorrection::Translation,
            bandwidth: None,
            test_grid_side: DEFAULT_TEST_GRID_SIDE,
        }
    }

    /// Default grid for `kind` in `window`: `[0, r_max]` with 513 points,
    /// except `pcf`, which starts at `r_max / 50`.
    pub fn with_default_grid(kind: SummaryKind, window: &Window) -> Self {
        let grid = default_grid(kind, window);
        SummarySpec::new(kind, grid)
    }

    pub fn compute(&self, p: &PointPattern) -> Result<SummaryCurve> {
        let g = &self.grid;
        match self.kind {
            SummaryKind::K => classical::estimate_k(p, g, self.correction),
            SummaryKind::L => classical::estimate_l(p, g, self.correction),
            SummaryKind::Pcf => classical::estimate_pcf(p, g, self.correction, self.bandwidth),
            SummaryKind::F => classical::estimate_f(p, g, self.test_grid_side),
            SummaryKind::G => classical::estimate_g(p, g),
            SummaryKind::GStar => classical::estimate_g_star(p, g),
            SummaryKind::J => classical::estimate_j_with(p, g, self.test_grid_side),
            SummaryKind::Euler => Ok(tda::euler_curve(&tda::alpha_filtration(p), g)),
            kind => {
                let pd = tda::persistence(&tda::alpha_filtration(p));
                Ok(match kind {
                    SummaryKind::Betti0 => tda::betti_curve(&pd, g, 0),
                    SummaryKind::Betti1 => tda::betti_curve(&pd, g, 1),
                    SummaryKind::Apf0 => tda::apf(&pd, g, 0),
                    SummaryKind::Apf1 => tda::apf(&pd, g, 1),
                    _ => tda::nd0(&pd, g),
                })
            }
        }
    }
}

pub fn default_grid(kind: SummaryKind, window: &Window) -> EvalGrid {
    let full = EvalGrid::default_for(window);
    if kind == SummaryKind::Pcf {
        let r_max = full.r_max();
        EvalGrid::new(r_max / 50.0, r_max, DEFAULT_GRID_POINTS).expect("positive r_max")
    } else {
        full
    }
}
