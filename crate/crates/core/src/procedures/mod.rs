//! Monte Carlo tests, the balanced two-stage test for composite nulls,
//! global envelopes and combined tests.

mod combine;
mod envelope;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::{depths, pointwise_ranks, DepthMeasure, RankMatrix};
use crate::pattern::{PointPattern, SummaryCurve, Window};
use crate::rng::RngSeed;
use crate::simulate::{condition_on_count, simulate, ModelSpec};
use crate::stats::{statistic_batch, CurveMatrix, StatBatch, StatVariant, WeightFn};
use crate::summary::SummarySpec;

pub use combine::{combine_one_step, combine_two_step, invert_depths, ScalarColumn};
pub use envelope::{
    analytic_envelope, global_envelope, local_level, mad_family_envelope, mad_threshold, simulation_pointwise_envelope,
    wiegand_simulation_envelope, Envelope, EnvelopeKind,
};

/// Two-sided 97.5% standard normal quantile used for p-value intervals.
pub const Z_975: f64 = 1.959963984540054;

/// Fits a null model to a pattern.
pub type Estimator = Arc<dyn Fn(&PointPattern) -> Result<ModelSpec> + Send + Sync>;

#[derive(Clone)]
pub enum NullModel {
    /// Fully specified model.
    Simple(ModelSpec),
    /// Homogeneous Poisson process with intensity estimated by `n / |W|`.
    Csr,
    /// Parametric family with a fitting procedure.
    Composite(Estimator),
}

impl fmt::Debug for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullModel::Simple(s) => f.debug_tuple("Simple").field(s).finish(),
            NullModel::Csr => f.write_str("Csr"),
            NullModel::Composite(_) => f.write_str("Composite(..)"),
        }
    }
}

impl NullModel {
    pub fn fit(&self, p: &PointPattern) -> Result<ModelSpec> {
        match self {
            NullModel::Simple(s) => Ok(s.clone()),
            NullModel::Csr => Ok(ModelSpec::Poisson { lambda: p.intensity() }),
            NullModel::Composite(est) => est(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain Monte Carlo test of a simple hypothesis.
    Mc,
    /// Balanced independent two-stage test.
    Bits,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Bits => "bits",
        }
    }
}

/// Default number of simulations: 99 for scalar statistics, 2499 for the
/// extreme rank measure and 499 for the other depth measures.
pub fn default_m(statistic: StatVariant, measure: DepthMeasure) -> usize {
    if !statistic.is_vector() {
        99
    } else if measure == DepthMeasure::Rank {
        2499
    } else {
        499
    }
}

pub const DEFAULT_BITS_M: usize = 99;
pub const DEFAULT_BITS_S: usize = 99;

#[derive(Debug, Clone)]
pub struct TestConfig {
    pub null: NullModel,
    /// One summary, or several for a one-step combined test.
    pub summaries: Vec<SummarySpec>,
    pub statistic: StatVariant,
    /// Ordering for vector statistics.
    pub measure: DepthMeasure,
    pub m: usize,
    pub s: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Replace a CSR null by the binomial process with the observed count.
    pub condition: bool,
    pub method: Method,
}

impl TestConfig {
    pub fn new(null: NullModel, summary: SummarySpec, statistic: StatVariant) -> Self {
        let measure = DepthMeasure::Erl;
        TestConfig {
            null,
            summaries: vec![summary],
            statistic,
            measure,
            m: default_m(statistic, measure),
            s: DEFAULT_BITS_S,
            alpha: 0.05,
            seed: 0,
            condition: true,
            method: Method::Mc,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidArgs("m must be at least 1".into()));
        }
        if self.method == Method::Bits && self.s < 1 {
            return Err(Error::InvalidArgs("s must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgs(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.summaries.is_empty() {
            return Err(Error::InvalidArgs("no summary statistic selected".into()));
        }
        if self.summaries.len() > 1 && !self.statistic.is_vector() {
            return Err(Error::InvalidArgs("combined summaries need a vector statistic (fun or score)".into()));
        }
        Ok(())
    }
}

/// Outcome of a test. Only the scalar metadata is serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub p_value: f64,
    pub method: String,
    pub statistic: String,
    pub measure: Option<String>,
    pub m: usize,
    pub s: Option<usize>,
    pub alpha: f64,
    pub decision: String,
    pub ci_halfwidth: f64,
    pub seed: u64,
    pub truncated_at: Option<f64>,
    #[serde(skip)]
    pub details: TestDetails,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestDetails {
    /// Scalar statistic per row (row 0 observed), if scalar.
    pub statistics: Option<Vec<f64>>,
    /// Depth per row, if a vector statistic was ordered.
    pub depths: Option<Vec<f64>>,
    pub envelope: Option<Envelope>,
    /// First-stage p-value of a two-stage test.
    pub p_stage1: Option<f64>,
    pub warnings: Vec<String>,
}

impl TestReport {
    pub fn rejects(&self) -> bool {
        self.decision == "reject"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn ci_halfwidth(p: f64, m: usize) -> f64 {
    Z_975 * (p * (1.0 - p) / m as f64).sqrt()
}

/// `(1 + #{i >= 1 : e_i <= e_0}) / (m + 1)` for extremeness scores `e`
/// where small means extreme. Ties count against the observation.
pub fn mc_p_value(e: &[f64]) -> f64 {
    let count = e[1..].iter().filter(|&&v| v <= e[0]).count();
    (1 + count) as f64 / e.len() as f64
}

/// Statistic values and extremeness scores of every row of a curve matrix.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub batch: StatBatch,
    /// Small means extreme: pointwise ranks for scalars, depths for vectors.
    pub scores: Vec<f64>,
}

impl Evaluation {
    pub fn p_value(&self) -> f64 {
        mc_p_value(&self.scores)
    }
}

pub fn evaluate(
    cm: &CurveMatrix,
    statistic: StatVariant,
    measure: DepthMeasure,
    weight: Option<WeightFn<'_>>,
) -> Result<Evaluation> {
    let batch = statistic_batch(cm, statistic, weight)?;
    let scores = match &batch {
        StatBatch::Scalar { values, tag } => pointwise_ranks(values, (*tag).into()),
        StatBatch::Vector { matrix, tag } => depths(&RankMatrix::new(matrix, (*tag).into()), measure),
    };
    Ok(Evaluation { batch, scores })
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order never depends on scheduling.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn curves_of(p: &PointPattern, summaries: &[SummarySpec]) -> Result<Vec<SummaryCurve>> {
    summaries.iter().map(|s| s.compute(p)).collect()
}

/// Simulates `count` patterns from `spec` on streams `base.substream(1..=count)`
/// and evaluates every summary on each.
pub fn simulate_curves(
    spec: &ModelSpec,
    window: &Window,
    summaries: &[SummarySpec],
    base: RngSeed,
    count: usize,
) -> Result<Vec<Vec<SummaryCurve>>> {
    par_map(count, |i| {
        let p = simulate(spec, window, base.substream(i as u64 + 1))?;
        curves_of(&p, summaries)
    })
    .into_iter()
    .collect()
}

/// One curve matrix per summary (row 0 = `observed`), concatenated.
pub fn build_matrix(observed: &[SummaryCurve], sims: &[Vec<SummaryCurve>]) -> Result<CurveMatrix> {
    let parts = (0..observed.len())
        .map(|k| {
            let mut rows = Vec::with_capacity(sims.len() + 1);
            rows.push(observed[k].clone());
            rows.extend(sims.iter().map(|s| s[k].clone()));
            CurveMatrix::from_curves(&rows)
        })
        .collect::<Result<Vec<_>>>()?;
    if parts.len() == 1 {
        Ok(parts.into_iter().next().expect("one part"))
    } else {
        CurveMatrix::concat(&parts)
    }
}

/// Envelope matching the statistic, where one exists.
fn envelope_for(cm: &CurveMatrix, ev: &Evaluation, statistic: StatVariant, alpha: f64) -> Option<Envelope> {
    match (&ev.batch, statistic) {
        (StatBatch::Vector { matrix, .. }, _) => global_envelope(matrix, &ev.scores, alpha).ok(),
        (_, StatVariant::Mad | StatVariant::St | StatVariant::Qdir) => {
            mad_family_envelope(cm, statistic, alpha).ok().map(|(e, _)| e)
        }
        _ => None,
    }
}

pub(crate) fn decision(p: f64, alpha: f64) -> String {
    if p <= alpha { "reject" } else { "accept" }.to_string()
}

fn measure_name(cfg: &TestConfig) -> Option<String> {
    cfg.statistic.is_vector().then(|| cfg.measure.name().to_string())
}

fn resolve_simple(cfg: &TestConfig, observed: &PointPattern) -> Result<(ModelSpec, Vec<String>)> {
    match &cfg.null {
        NullModel::Simple(spec) => {
            if cfg.condition {
                if let ModelSpec::Poisson { .. } = spec {
                    return Ok((condition_on_count(spec, observed.len()).0, Vec::new()));
                }
            }
            Ok((spec.clone(), Vec::new()))
        }
        NullModel::Csr if cfg.condition => {
            let (spec, _) = condition_on_count(&ModelSpec::Poisson { lambda: observed.intensity() }, observed.len());
            Ok((spec, Vec::new()))
        }
        NullModel::Csr => Err(Error::InvalidArgs(
            "CSR with estimated intensity is composite: enable conditioning or use the two-stage test".into(),
        )),
        NullModel::Composite(_) => Err(Error::InvalidArgs("composite null hypotheses need the two-stage test".into())),
    }
}

/// Monte Carlo test of a simple null hypothesis.
pub fn monte_carlo_test(cfg: &TestConfig, observed: &PointPattern) -> Result<TestReport> {
    cfg.validate()?;
    let (spec, warnings) = resolve_simple(cfg, observed)?;
    let seed = RngSeed::new(cfg.seed, 0);
    let obs = curves_of(observed, &cfg.summaries)?;
    let sims = simulate_curves(&spec, observed.window(), &cfg.summaries, seed.substream(1), cfg.m)?;
    let cm = build_matrix(&obs, &sims)?;
    let ev = evaluate(&cm, cfg.statistic, cfg.measure, None)?;
    let p = ev.p_value();
    let envelope = envelope_for(&cm, &ev, cfg.statistic, cfg.alpha);
    let mut details = TestDetails { warnings, ..Default::default() };
    match &ev.batch {
        StatBatch::Scalar { values, .. } => details.statistics = Some(values.clone()),
        StatBatch::Vector { .. } => details.depths = Some(ev.scores.clone()),
    }
    if let Some(env) = &envelope {
        if env.threshold_tie {
            details.warnings.push("depth ties straddle the envelope threshold; consider raising m".into());
        }
    }
    details.envelope = envelope;
    Ok(TestReport {
        p_value: p,
        method: Method::Mc.name().into(),
        statistic: cfg.statistic.name(),
        measure: measure_name(cfg),
        m: cfg.m,
        s: None,
        alpha: cfg.alpha,
        decision: decision(p, cfg.alpha),
        ci_halfwidth: ci_halfwidth(p, cfg.m),
        seed: cfg.seed,
        truncated_at: cm.truncated_at(),
        details,
    })
}

/// First-stage p-value of `pattern` against `m` simulations from `spec`.
fn stage_p_value(
    cfg: &TestConfig,
    pattern: &PointPattern,
    spec: &ModelSpec,
    base: RngSeed,
) -> Result<(f64, Option<f64>)> {
    let obs = curves_of(pattern, &cfg.summaries)?;
    let sims = simulate_curves(spec, pattern.window(), &cfg.summaries, base, cfg.m)?;
    let cm = build_matrix(&obs, &sims)?;
    Ok((evaluate(&cm, cfg.statistic, cfg.measure, None)?.p_value(), cm.truncated_at()))
}

/// Balanced independent two-stage Monte Carlo test.
///
/// Stage one fits the null to the data and computes `p_0` from `m`
/// simulations. Stage two draws `s` patterns from the fitted model, refits
/// and recomputes a p-value `p_j` for each from `m` fresh simulations. The
/// adjusted p-value is the randomized rank of `p_0` among
/// `p_0, p_1, ..., p_s`: `(#{p_j < p_0} + V) / (s + 1)` with `V` uniform on
/// `1..=T+1`, `T` the number of ties. The tie draw uses its own stream of
/// the master seed.
pub fn bits_test(cfg: &TestConfig, observed: &PointPattern) -> Result<TestReport> {
    cfg.validate()?;
    if cfg.s < 1 {
        return Err(Error::InvalidArgs("s must be at least 1".into()));
    }
    let seed = RngSeed::new(cfg.seed, 0);
    let theta0 = cfg.null.fit(observed)?;
    let (p0, truncated_at) = stage_p_value(cfg, observed, &theta0, seed.substream(1))?;
    let window = observed.window();
    let stage2 = seed.substream(2);
    let pj: Vec<f64> = par_map(cfg.s, |j| {
        let outer = stage2.substream(j as u64 + 1);
        let y = simulate(&theta0, window, outer.substream(0))?;
        let theta_j = cfg.null.fit(&y)?;
        Ok(stage_p_value(cfg, &y, &theta_j, outer)?.0)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let p = adjusted_p_value(p0, &pj, seed.substream(3));
    Ok(TestReport {
        p_value: p,
        method: Method::Bits.name().into(),
        statistic: cfg.statistic.name(),
        measure: measure_name(cfg),
        m: cfg.m,
        s: Some(cfg.s),
        alpha: cfg.alpha,
        decision: decision(p, cfg.alpha),
        ci_halfwidth: ci_halfwidth(p, cfg.s),
        seed: cfg.seed,
        truncated_at,
        details: TestDetails { p_stage1: Some(p0), ..Default::default() },
    })
}

/// Randomized rank of `p0` among `p0` and the second-stage p-values.
pub fn adjusted_p_value(p0: f64, pj: &[f64], tie_seed: RngSeed) -> f64 {
    use rand::Rng;
    let below = pj.iter().filter(|&&p| p < p0).count();
    let ties = pj.iter().filter(|&&p| p == p0).count();
    let v = tie_seed.rng().random_range(1..=ties + 1);
    (below + v) as f64 / (pj.len() + 1) as f64
}

/// Dispatches on `cfg.method`.
pub fn run_test(cfg: &TestConfig, observed: &PointPattern) -> Result<TestReport> {
    match cfg.method {
        Method::Mc => monte_carlo_test(cfg, observed),
        Method::Bits => bits_test(cfg, observed),
    }
}
