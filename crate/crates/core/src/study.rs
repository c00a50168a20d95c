//! Power studies: rejection rates of several tests against several
//! alternatives, configured by a TOML file.
//!
//! ```toml
//! [study]
//! seed = 1
//! replications = 100
//! window = [0.0, 1.0, 0.0, 1.0]
//! m = 99
//! alpha = 0.05
//!
//! [null]
//! model = "csr"
//!
//! [[alternative]]
//! name = "matclust"
//! model = "matern"
//! kappa = 50.0
//! radius = 0.1
//! mu = 5.0
//!
//! [[test]]
//! name = "l-fun-erl"
//! summary = "l"
//! statistic = "fun"
//! measure = "erl"
//! ```
//!
//! Every (alternative, test) cell writes its counts to `cells/` under the
//! output directory as soon as it finishes; a rerun with the same
//! configuration reuses those files. `results.csv` depends only on the
//! configuration and seed, wall-clock times go to `timings.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;

use crate::classical::EdgeCorrection;
use crate::error::{Error, Result};
use crate::io::write_file;
use crate::ordering::DepthMeasure;
use crate::pattern::{EvalGrid, Window, DEFAULT_GRID_POINTS};
use crate::procedures::{default_m, par_map, run_test, Method, NullModel, TestConfig, DEFAULT_BITS_M, DEFAULT_BITS_S};
use crate::rng::RngSeed;
use crate::simulate::{simulate, Intensity, ModelSpec};
use crate::stats::StatVariant;
use crate::summary::{default_grid, SummaryKind, SummarySpec};

/// A model as written in configuration files.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Poisson process with intensity estimated from the data.
    Csr,
    Binomial {
        n: usize,
    },
    Poisson {
        lambda: f64,
    },
    #[serde(alias = "matclust")]
    Matern {
        kappa: f64,
        radius: f64,
        mu: f64,
    },
    Thomas {
        kappa: f64,
        sigma: f64,
        mu: f64,
    },
    Strauss {
        beta: f64,
        gamma: f64,
        radius: f64,
    },
    Ssi {
        n: usize,
        r: f64,
    },
    /// Intensity `a + b * x` (or `y` when `axis = "y"`).
    InhomPoisson {
        a: f64,
        b: f64,
        #[serde(default)]
        axis: Axis,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    X,
    Y,
}

impl ModelConfig {
    /// The model as a fully specified process; `None` for `csr`.
    pub fn spec(&self, window: &Window) -> Result<Option<ModelSpec>> {
        let spec = match *self {
            ModelConfig::Csr => return Ok(None),
            ModelConfig::Binomial { n } => ModelSpec::Binomial { n },
            ModelConfig::Poisson { lambda } => ModelSpec::Poisson { lambda },
            ModelConfig::Matern { kappa, radius, mu } => ModelSpec::MaternCluster { kappa, radius, mu },
            ModelConfig::Thomas { kappa, sigma, mu } => ModelSpec::Thomas { kappa, sigma, mu },
            ModelConfig::Strauss { beta, gamma, radius } => ModelSpec::Strauss { beta, gamma, radius },
            ModelConfig::Ssi { n, r } => ModelSpec::Ssi { n, r_inhibit: r },
            ModelConfig::InhomPoisson { a, b, axis } => {
                let (lo, hi) = match axis {
                    Axis::X => (window.x_min, window.x_max),
                    Axis::Y => (window.y_min, window.y_max),
                };
                let rho_max = (a + b * lo).max(a + b * hi);
                let intensity = match axis {
                    Axis::X => Intensity::LinearX { a, b },
                    Axis::Y => Intensity::LinearY { a, b },
                };
                ModelSpec::InhomPoisson { rho_max, intensity }
            }
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn null_model(&self, window: &Window) -> Result<NullModel> {
        Ok(match self.spec(window)? {
            None => NullModel::Csr,
            Some(s) => NullModel::Simple(s),
        })
    }
}

/// Which test to run, as written in configuration files or on the command
/// line.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSelector {
    #[serde(default)]
    pub name: Option<String>,
    pub summary: String,
    pub statistic: String,
    #[serde(default)]
    pub measure: Option<String>,
    #[serde(default)]
    pub r_index: Option<usize>,
    #[serde(default)]
    pub correction: Option<EdgeCorrection>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub r_min: Option<f64>,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
}

impl TestSelector {
    pub fn new(summary: &str, statistic: &str) -> Self {
        TestSelector {
            name: None,
            summary: summary.into(),
            statistic: statistic.into(),
            measure: None,
            r_index: None,
            correction: None,
            bandwidth: None,
            r_min: None,
            r_max: None,
            grid_points: None,
            method: None,
            m: None,
            s: None,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let mut l = format!("{}-{}", self.summary, self.statistic);
            if let Some(m) = &self.measure {
                l = format!("{l}-{m}");
            }
            l
        })
    }

    pub fn summary_spec(&self, window: &Window) -> Result<SummarySpec> {
        let kind: SummaryKind = self.summary.parse()?;
        let default = default_grid(kind, window);
        let grid = if self.r_min.is_some() || self.r_max.is_some() || self.grid_points.is_some() {
            EvalGrid::new(
                self.r_min.unwrap_or(default.r_min()),
                self.r_max.unwrap_or(default.r_max()),
                self.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            )?
        } else {
            default
        };
        let mut spec = SummarySpec::new(kind, grid);
        if let Some(c) = self.correction {
            spec.correction = c;
        }
        spec.bandwidth = self.bandwidth;
        Ok(spec)
    }

    /// Builds a complete test configuration. `m`, `s` and `method` on the
    /// selector override the defaults given here.
    pub fn config(&self, null: NullModel, window: &Window, defaults: &TestDefaults) -> Result<TestConfig> {
        let statistic = StatVariant::from_name(&self.statistic, self.r_index)?;
        let measure = match &self.measure {
            Some(m) => m.parse()?,
            None => DepthMeasure::Erl,
        };
        let method = self.method.unwrap_or(defaults.method);
        let default_m = match method {
            Method::Mc => default_m(statistic, measure),
            Method::Bits => DEFAULT_BITS_M,
        };
        let mut cfg = TestConfig::new(null, self.summary_spec(window)?, statistic);
        cfg.measure = measure;
        cfg.method = method;
        cfg.m = self.m.or(defaults.m).unwrap_or(default_m);
        cfg.s = self.s.or(defaults.s).unwrap_or(DEFAULT_BITS_S);
        cfg.alpha = defaults.alpha;
        cfg.condition = defaults.condition;
        cfg.seed = defaults.seed;
        Ok(cfg)
    }
}

/// Settings shared by all tests of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDefaults {
    pub m: Option<usize>,
    pub s: Option<usize>,
    pub alpha: f64,
    pub method: Method,
    pub condition: bool,
    pub seed: u64,
}

impl Default for TestDefaults {
    fn default() -> Self {
        TestDefaults { m: None, s: None, alpha: 0.05, method: Method::Mc, condition: true, seed: 0 }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

fn default_window() -> [f64; 4] {
    [0.0, 1.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub replications: usize,
    #[serde(default = "default_window")]
    pub window: [f64; 4],
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct NullSection {
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(default = "default_true")]
    pub condition: bool,
    #[serde(default)]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AlternativeSection {
    pub name: String,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(flatten)]
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudySection,
    pub null: NullSection,
    pub alternative: Vec<AlternativeSection>,
    pub test: Vec<TestSelector>,
}

/// A validated study, ready to run.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: StudyConfig,
    pub window: Window,
    alternatives: Vec<(String, ModelSpec, usize)>,
    tests: Vec<(String, TestConfig)>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks every selector and model, overriding the master seed if given.
    pub fn validate(mut self, seed: Option<u64>) -> Result<Study> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if let Some(s) = seed {
            self.study.seed = s;
        }
        let [x0, x1, y0, y1] = self.study.window;
        let window = Window::new(x0, x1, y0, y1).map_err(cfg_err)?;
        if self.alternative.is_empty() || self.test.is_empty() {
            return Err(Error::Config("a study needs at least one [[alternative]] and one [[test]]".into()));
        }
        let mut alternatives = Vec::new();
        for alt in &self.alternative {
            let reps = alt.replications.unwrap_or(self.study.replications);
            if reps < 1 {
                return Err(Error::Config(format!("alternative '{}': replications must be >= 1", alt.name)));
            }
            let spec = alt.model.spec(&window).map_err(cfg_err)?.ok_or_else(|| {
                Error::Config(format!("alternative '{}': csr needs an intensity, use model = \"poisson\"", alt.name))
            })?;
            alternatives.push((alt.name.clone(), spec, reps));
        }
        let null = self.null.model.null_model(&window).map_err(cfg_err)?;
        let defaults = TestDefaults {
            m: self.study.m,
            s: self.study.s,
            alpha: self.study.alpha,
            method: self.null.method.unwrap_or(Method::Mc),
            condition: self.null.condition,
            seed: self.study.seed,
        };
        let mut tests = Vec::new();
        for sel in &self.test {
            let cfg = sel.config(null.clone(), &window, &defaults).map_err(cfg_err)?;
            if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) || cfg.m < 1 {
                return Err(Error::Config(format!("test '{}': need m >= 1 and alpha in (0, 1)", sel.label())));
            }
            if matches!(cfg.null, NullModel::Csr) && !cfg.condition && cfg.method == Method::Mc {
                return Err(Error::Config(format!(
                    "test '{}': unconditioned csr is composite, set method = \"bits\" or condition = true",
                    sel.label()
                )));
            }
            tests.push((sel.label(), cfg));
        }
        Ok(Study { config: self, window, alternatives, tests })
    }
}

/// Outcome of one (alternative, test) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub alternative: String,
    pub test: String,
    pub replications: usize,
    pub rejections: usize,
    pub failures: usize,
    pub seconds: f64,
}

impl CellResult {
    /// Rejections over successful replications.
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / (self.replications - self.failures) as f64
    }

    pub fn mc_se(&self) -> f64 {
        let p = self.rejection_rate();
        (p * (1.0 - p) / (self.replications - self.failures) as f64).sqrt()
    }

    fn file_line(&self) -> String {
        format!("{},{},{}", self.replications, self.rejections, self.failures)
    }
}

impl Study {
    pub fn cells(&self) -> usize {
        self.alternatives.len() * self.tests.len()
    }

    fn cell_path(dir: &Path, alt: &str, test: &str) -> PathBuf {
        let clean = |s: &str| {
            s.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                .collect::<String>()
        };
        dir.join("cells").join(format!("{}__{}.csv", clean(alt), clean(test)))
    }

    fn cached(path: &Path, reps: usize) -> Option<(usize, usize)> {
        let text = fs::read_to_string(path).ok()?;
        let line = text.lines().nth(1)?;
        let v: Vec<usize> = line.split(',').map(|f| f.trim().parse().ok()).collect::<Option<_>>()?;
        (v.len() == 3 && v[0] == reps).then_some((v[1], v[2]))
    }

    /// Runs one cell. Replication `r` of alternative `a` observes the same
    /// pattern under every test; the Monte Carlo streams of the test are
    /// keyed by (cell, replication).
    pub fn run_cell(&self, a: usize, t: usize) -> CellResult {
        let (alt_name, spec, reps) = &self.alternatives[a];
        let (test_name, cfg) = &self.tests[t];
        let master = RngSeed::new(self.config.study.seed, 0);
        let data_streams = master.substream(1).substream(a as u64);
        let cell = (a * self.tests.len() + t) as u64;
        let test_streams = master.substream(2).substream(cell);
        let start = Instant::now();
        let outcomes = par_map(*reps, |r| {
            let pattern = simulate(spec, &self.window, data_streams.substream(r as u64))?;
            let mut cfg = cfg.clone();
            cfg.seed = test_streams.substream(r as u64).stream;
            run_test(&cfg, &pattern).map(|rep| rep.rejects())
        });
        let rejections = outcomes.iter().filter(|o| matches!(o, Ok(true))).count();
        let failures = outcomes.iter().filter(|o| o.is_err()).count();
        CellResult {
            alternative: alt_name.clone(),
            test: test_name.clone(),
            replications: *reps,
            rejections,
            failures,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    /// Runs every cell, resuming from cell files under `out_dir`, and
    /// writes `results.csv` and `timings.csv`.
    pub fn run(&self, out_dir: &Path, mut progress: impl FnMut(&CellResult)) -> Result<Vec<CellResult>> {
        let mut results = Vec::with_capacity(self.cells());
        for a in 0..self.alternatives.len() {
            for t in 0..self.tests.len() {
                let (alt, _, reps) = &self.alternatives[a];
                let test = &self.tests[t].0;
                let path = Self::cell_path(out_dir, alt, test);
                let res = match Self::cached(&path, *reps) {
                    Some((rejections, failures)) => CellResult {
                        alternative: alt.clone(),
                        test: test.clone(),
                        replications: *reps,
                        rejections,
                        failures,
                        seconds: 0.0,
                    },
                    None => {
                        let res = self.run_cell(a, t);
                        write_file(&path, &format!("replications,rejections,failures\n{}\n", res.file_line()))?;
                        res
                    }
                };
                progress(&res);
                results.push(res);
            }
        }
        write_file(out_dir.join("results.csv"), &results_csv(&results))?;
        write_file(out_dir.join("timings.csv"), &timings_csv(&results))?;
        Ok(results)
    }
}

fn fmt_rate(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".into()
    }
}

pub fn results_csv(results: &[CellResult]) -> String {
    let mut out = String::from("alternative,test,replications,rejections,failures,rejection_rate,mc_se\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.alternative,
            r.test,
            r.replications,
            r.rejections,
            r.failures,
            fmt_rate(r.rejection_rate()),
            fmt_rate(r.mc_se())
        );
    }
    out
}

pub fn timings_csv(results: &[CellResult]) -> String {
    let mut out = String::from("alternative,test,seconds\n");
    for r in results {
        let _ = writeln!(out, "{},{},{:.3}", r.alternative, r.test, r.seconds);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[study]
seed = 3
replications = 4
m = 19

[null]
model = "csr"

[[alternative]]
name = "null"
model = "poisson"
lambda = 50.0

[[alternative]]
name = "hardcore"
model = "strauss"
beta = 100.0
gamma = 0.0
radius = 0.05
replications = 3

[[test]]
summary = "l"
statistic = "mad"
r_max = 0.2
grid_points = 33

[[test]]
name = "g-dclf"
summary = "g"
statistic = "dclf"
r_max = 0.1
grid_points = 33

[[test]]
summary = "l"
statistic = "fun"
measure = "erl"
r_max = 0.2
grid_points = 33
"#;

    #[test]
    fn parses_and_validates() {
        let study = StudyConfig::from_toml(SMALL).unwrap().validate(None).unwrap();
        assert_eq!(study.cells(), 6);
        assert_eq!(study.tests[0].0, "l-mad");
        assert_eq!(study.tests[2].0, "l-fun-erl");
        assert_eq!(study.tests[2].1.m, 19);
        assert_eq!(study.alternatives[1].2, 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = SMALL.replace("statistic = \"mad\"", "statistic = \"wat\"");
        assert!(matches!(StudyConfig::from_toml(&bad).unwrap().validate(None), Err(Error::Config(_))));
        let bad = SMALL.replace("gamma = 0.0", "gamma = 2.0");
        assert!(matches!(StudyConfig::from_toml(&bad).unwrap().validate(None), Err(Error::Config(_))));
        let bad = SMALL.replace("replications = 4", "replications = 0");
        assert!(matches!(StudyConfig::from_toml(&bad).unwrap().validate(None), Err(Error::Config(_))));
        assert!(matches!(StudyConfig::from_toml("[study]\nreplications=1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn runs_deterministically_and_resumes() {
        let study = StudyConfig::from_toml(SMALL).unwrap().validate(None).unwrap();
        let base = std::env::temp_dir().join(format!("spgof-study-{}", std::process::id()));
        let (d1, d2) = (base.join("a"), base.join("b"));
        let r1 = study.run(&d1, |_| {}).unwrap();
        study.run(&d2, |_| {}).unwrap();
        let csv1 = fs::read_to_string(d1.join("results.csv")).unwrap();
        assert_eq!(csv1, fs::read_to_string(d2.join("results.csv")).unwrap());
        assert_eq!(csv1.lines().count(), 7);
        assert!(r1.iter().all(|r| r.failures == 0));
        let again = study.run(&d1, |_| {}).unwrap();
        assert!(again.iter().all(|r| r.seconds == 0.0));
        assert_eq!(csv1, fs::read_to_string(d1.join("results.csv")).unwrap());
        let _ = fs::remove_dir_all(base);
    }
}
