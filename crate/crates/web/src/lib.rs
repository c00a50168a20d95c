//! Browser bindings: simulate a pattern, inspect its alpha complex at a
//! radius, and run a global envelope test. All values cross the boundary
//! as JSON strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use spatial_gof::study::{ModelConfig, TestDefaults, TestSelector};
use spatial_gof::tda::{alpha_filtration, persistence, rank_function, PersistencePair};
use spatial_gof::{run_test, simulate, PointPattern, RngSeed, Window};

#[derive(Serialize, Deserialize)]
struct PatternJson {
    window: [f64; 4],
    points: Vec<[f64; 2]>,
}

impl PatternJson {
    fn from_pattern(p: &PointPattern) -> Self {
        let w = p.window();
        PatternJson {
            window: [w.x_min, w.x_max, w.y_min, w.y_max],
            points: p.points().iter().map(|q| [q.x, q.y]).collect(),
        }
    }

    fn into_pattern(self) -> Result<PointPattern, String> {
        let [x0, x1, y0, y1] = self.window;
        let w = Window::new(x0, x1, y0, y1).map_err(|e| e.to_string())?;
        PointPattern::new(self.points.into_iter().map(|[x, y]| (x, y)), w).map_err(|e| e.to_string())
    }
}

fn parse_pattern(json: &str) -> Result<PointPattern, String> {
    serde_json::from_str::<PatternJson>(json).map_err(|e| e.to_string())?.into_pattern()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Simulates a pattern in the unit square. `model` is a JSON object such as
/// `{"model": "matern", "kappa": 50, "radius": 0.1, "mu": 5}`.
#[wasm_bindgen]
pub fn simulate_pattern(model: &str, seed: u64) -> Result<String, String> {
    let window = Window::unit();
    let cfg: ModelConfig = serde_json::from_str(model).map_err(|e| e.to_string())?;
    let spec = cfg.spec(&window).map_err(|e| e.to_string())?.ok_or("csr needs an intensity; use the poisson model")?;
    let p = simulate(&spec, &window, RngSeed::new(seed, 0)).map_err(|e| e.to_string())?;
    to_json(&PatternJson::from_pattern(&p))
}

#[derive(Serialize)]
struct ComplexJson {
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    betti0: usize,
    betti1: usize,
    diagram: Vec<PersistencePair>,
}

/// Simplices of the alpha complex at radius `r`, the Betti numbers there and
/// the full persistence diagram.
#[wasm_bindgen]
pub fn alpha_complex(pattern: &str, r: f64) -> Result<String, String> {
    let p = parse_pattern(pattern)?;
    let f = alpha_filtration(&p);
    let pd = persistence(&f);
    let tri = &f.triangulation;
    let edges = tri.edges.iter().zip(&f.edge_values).filter(|(_, v)| **v <= r).map(|(e, _)| *e).collect();
    let triangles = tri.triangles.iter().zip(&f.triangle_values).filter(|(_, v)| **v <= r).map(|(t, _)| *t).collect();
    let betti = |dim| rank_function(&pd, dim, r, r).map_err(|e| e.to_string());
    let out = ComplexJson { edges, triangles, betti0: betti(0)?, betti1: betti(1)?, diagram: pd.pairs };
    to_json(&out)
}

#[derive(Serialize)]
struct EnvelopeJson {
    p_value: f64,
    decision: String,
    m: usize,
    r: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    obs: Vec<f64>,
    mean: Vec<f64>,
}

/// Global envelope test of `pattern` against CSR, conditioned on the number
/// of points, with the extreme rank length measure.
#[wasm_bindgen]
pub fn envelope_test(pattern: &str, summary: &str, m: usize, seed: u64) -> Result<String, String> {
    let p = parse_pattern(pattern)?;
    let window = *p.window();
    let selector = TestSelector {
        measure: Some("erl".into()),
        m: Some(m),
        grid_points: Some(129),
        ..TestSelector::new(summary, "fun")
    };
    let defaults = TestDefaults { seed, ..TestDefaults::default() };
    let null = ModelConfig::Csr.null_model(&window).map_err(|e| e.to_string())?;
    let cfg = selector.config(null, &window, &defaults).map_err(|e| e.to_string())?;
    let report = run_test(&cfg, &p).map_err(|e| e.to_string())?;
    let env = report.details.envelope.ok_or("no envelope at this level; increase m")?;
    to_json(&EnvelopeJson {
        p_value: report.p_value,
        decision: report.decision,
        m: report.m,
        r: env.r,
        lo: env.lo,
        hi: env.hi,
        obs: env.obs,
        mean: env.mean,
    })
}
