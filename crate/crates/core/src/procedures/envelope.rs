use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::{deviation_statistics, reference_mean, ColumnStats, CurveMatrix, StatVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    DepthMeasure,
    MadFamily,
    Analytic,
    Pointwise,
}

/// Lower and upper curves around a central curve, with the observed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub r: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub obs: Vec<f64>,
    pub mean: Vec<f64>,
    /// Depth ties straddle the threshold, so the envelope's level differs
    /// from the nominal one. Raising `m` usually resolves this.
    pub threshold_tie: bool,
}

impl Envelope {
    /// Whether the observed curve leaves the band somewhere.
    pub fn observed_outside(&self) -> bool {
        self.obs.iter().zip(self.lo.iter().zip(&self.hi)).any(|(o, (l, h))| o < l || o > h)
    }

    /// First grid values where the observed curve leaves the band.
    pub fn exits(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.obs)
            .zip(self.lo.iter().zip(&self.hi))
            .filter(|((_, o), (l, h))| o < l || o > h)
            .map(|((r, _), _)| *r)
            .collect()
    }
}

fn alpha_count(alpha: f64, rows: usize) -> Result<f64> {
    let k = alpha * rows as f64;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgs(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if k < 1.0 - 1e-9 {
        return Err(Error::AlphaTooSmall(k));
    }
    Ok(k + 1e-9)
}

/// Global envelope from depth values `nu` (small means extreme) of the rows
/// of `cm`, which must include the observed curve as row 0.
pub fn global_envelope(cm: &CurveMatrix, nu: &[f64], alpha: f64) -> Result<Envelope> {
    if nu.len() != cm.rows() {
        return Err(Error::MismatchedShapes(format!("{} depths for {} rows", nu.len(), cm.rows())));
    }
    let k = alpha_count(alpha, cm.rows())?;
    // largest depth value whose strict lower count is within alpha (m+1)
    let mut sorted = nu.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut threshold = sorted[0];
    let mut below_at_threshold = 0;
    for (pos, &v) in sorted.iter().enumerate() {
        let below = sorted.partition_point(|&x| x < v);
        if (below as f64) <= k && (pos == 0 || v > threshold) {
            threshold = v;
            below_at_threshold = below;
        }
    }
    let members: Vec<usize> = (0..cm.rows()).filter(|&i| nu[i] >= threshold).collect();
    let n = cm.cols();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for &i in &members {
        for (j, &v) in cm.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    Ok(Envelope {
        kind: EnvelopeKind::DepthMeasure,
        r: cm.r().to_vec(),
        lo,
        hi,
        obs: cm.row(0).to_vec(),
        mean: cm.mean_curve(),
        threshold_tie: below_at_threshold != k.floor() as usize,
    })
}

/// The `alpha (m+1)`-th largest of the statistics.
pub fn mad_threshold(stats: &[f64], alpha: f64) -> Result<f64> {
    let k = alpha_count(alpha, stats.len())?.floor() as usize;
    let mut sorted = stats.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[k - 1])
}

/// Envelope of a maximum-deviation statistic: centre `mu_{-0}` plus and
/// minus `d_alpha` times the variant's pointwise scale.
pub fn mad_family_envelope(cm: &CurveMatrix, variant: StatVariant, alpha: f64) -> Result<(Envelope, f64)> {
    if !matches!(variant, StatVariant::Mad | StatVariant::St | StatVariant::Qdir) {
        return Err(Error::InvalidArgs(format!("no envelope for {}", variant.name())));
    }
    let stats = deviation_statistics(cm, variant, None)?;
    let d = mad_threshold(&stats, alpha)?;
    let centre = reference_mean(cm, 0);
    let cs = ColumnStats::new(cm);
    let (mut lo, mut hi) = (Vec::with_capacity(cm.cols()), Vec::with_capacity(cm.cols()));
    for (j, &c) in centre.iter().enumerate() {
        let (sl, sh) = match variant {
            StatVariant::Mad => (1.0, 1.0),
            StatVariant::St => (cs.sd[j], cs.sd[j]),
            _ => ((cs.q_lo[j] - c).abs(), (cs.q_hi[j] - c).abs()),
        };
        lo.push(c - d * sl);
        hi.push(c + d * sh);
    }
    let env = Envelope {
        kind: EnvelopeKind::MadFamily,
        r: cm.r().to_vec(),
        lo,
        hi,
        obs: cm.row(0).to_vec(),
        mean: cm.mean_curve(),
        threshold_tie: false,
    };
    Ok((env, d))
}

/// Per-point level `beta = 1 - (1 - alpha)^(1/n)` giving global level alpha
/// for `n` independent local tests.
pub fn local_level(alpha: f64, n: usize) -> f64 {
    1.0 - (1.0 - alpha).powf(1.0 / n as f64)
}

/// Normal-theory envelope `T +- q sd` with `q` the `1 - beta/2` quantile.
pub fn analytic_envelope(r: &[f64], reference: &[f64], sd: &[f64], observed: &[f64], alpha: f64) -> Result<Envelope> {
    let n = r.len();
    if reference.len() != n || sd.len() != n || observed.len() != n || n == 0 {
        return Err(Error::MismatchedShapes("analytic envelope inputs differ in length".into()));
    }
    let beta = local_level(alpha, n);
    let q = Normal::standard().inverse_cdf(1.0 - beta / 2.0);
    Ok(Envelope {
        kind: EnvelopeKind::Analytic,
        r: r.to_vec(),
        lo: reference.iter().zip(sd).map(|(t, s)| t - q * s).collect(),
        hi: reference.iter().zip(sd).map(|(t, s)| t + q * s).collect(),
        obs: observed.to_vec(),
        mean: reference.to_vec(),
        threshold_tie: false,
    })
}

fn kth_band(cm: &CurveMatrix, k: usize) -> Envelope {
    let mut lo = Vec::with_capacity(cm.cols());
    let mut hi = Vec::with_capacity(cm.cols());
    for j in 0..cm.cols() {
        let mut sims: Vec<f64> = (1..cm.rows()).map(|i| cm.get(i, j)).collect();
        sims.sort_by(f64::total_cmp);
        lo.push(sims[k - 1]);
        hi.push(sims[sims.len() - k]);
    }
    Envelope {
        kind: EnvelopeKind::Pointwise,
        r: cm.r().to_vec(),
        lo,
        hi,
        obs: cm.row(0).to_vec(),
        mean: cm.mean_curve(),
        threshold_tie: false,
    }
}

/// Band between the `k`-th lowest and highest simulated values per point,
/// `k = beta (m+1) / 2`, which must be a positive integer.
pub fn simulation_pointwise_envelope(cm: &CurveMatrix, beta: f64) -> Result<Envelope> {
    let kf = beta * cm.rows() as f64 / 2.0;
    let k = kf.round();
    if (kf - k).abs() > 1e-9 || k < 1.0 || 2.0 * k > cm.m() as f64 {
        return Err(Error::InsufficientSimulations(format!(
            "beta (m+1) / 2 = {kf} is not a positive integer with m = {}",
            cm.m()
        )));
    }
    Ok(kth_band(cm, k as usize))
}

/// Simulation envelope at global level `alpha`: local level from
/// [`local_level`], `k = floor(beta (m+1) / 2)`.
pub fn wiegand_simulation_envelope(cm: &CurveMatrix, alpha: f64) -> Result<Envelope> {
    let beta = local_level(alpha, cm.cols());
    let kf = beta * cm.rows() as f64 / 2.0;
    if kf < 1.0 {
        let needed = (2.0 / beta).ceil() as usize - 1;
        return Err(Error::InsufficientSimulations(format!(
            "k = beta (m+1) / 2 = {kf:.4} < 1; need m >= {needed} for alpha = {alpha} and n = {}",
            cm.cols()
        )));
    }
    Ok(kth_band(cm, kf.floor() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::{depths, DepthMeasure, RankMatrix, Sidedness};
    use rand::{Rng, SeedableRng};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CurveMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
        CurveMatrix::new((0..cols).map(|k| k as f64).collect(), rows, data).unwrap()
    }

    #[test]
    fn removes_unique_most_extreme() {
        let cm = random_matrix(20, 5, 1);
        let rm = RankMatrix::new(&cm, Sidedness::TwoSided);
        let nu = depths(&rm, DepthMeasure::Erl);
        let env = global_envelope(&cm, &nu, 0.05).unwrap();
        let worst = (0..20).min_by(|&a, &b| nu[a].total_cmp(&nu[b])).unwrap();
        for j in 0..5 {
            let rest: Vec<f64> = (0..20).filter(|&i| i != worst).map(|i| cm.get(i, j)).collect();
            assert_eq!(env.lo[j], rest.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(env.hi[j], rest.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        assert!(!env.threshold_tie);
    }

    #[test]
    fn identical_rows_never_reject() {
        let cm = CurveMatrix::new(vec![0.0, 1.0], 20, vec![3.0; 40]).unwrap();
        let rm = RankMatrix::new(&cm, Sidedness::TwoSided);
        let env = global_envelope(&cm, &depths(&rm, DepthMeasure::Rank), 0.05).unwrap();
        assert!(!env.observed_outside());
    }

    #[test]
    fn alpha_too_small() {
        let cm = random_matrix(10, 3, 2);
        assert_eq!(global_envelope(&cm, &[1.0; 10], 0.05).unwrap_err(), Error::AlphaTooSmall(0.5));
    }

    #[test]
    fn mad_band_constant_width() {
        let cm = random_matrix(40, 7, 3);
        let (env, d) = mad_family_envelope(&cm, StatVariant::Mad, 0.05).unwrap();
        for (l, h) in env.lo.iter().zip(&env.hi) {
            assert!((h - l - 2.0 * d).abs() < 1e-12);
        }
        let stats = deviation_statistics(&cm, StatVariant::Mad, None).unwrap();
        assert_eq!(env.observed_outside(), stats[0] > d);
    }

    #[test]
    fn st_band_proportional_to_sd() {
        let cm = random_matrix(40, 7, 4);
        let (env, d) = mad_family_envelope(&cm, StatVariant::St, 0.05).unwrap();
        let cs = ColumnStats::new(&cm);
        for j in 0..7 {
            assert!(((env.hi[j] - env.lo[j]) - 2.0 * d * cs.sd[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn local_level_and_k() {
        assert!((local_level(0.05, 1) - 0.05).abs() < 1e-15);
        let cm = random_matrix(2000, 50, 5);
        let env = wiegand_simulation_envelope(&cm, 0.05).unwrap();
        for j in 0..50 {
            let sims: Vec<f64> = (1..2000).map(|i| cm.get(i, j)).collect();
            assert_eq!(env.lo[j], sims.iter().copied().fold(f64::INFINITY, f64::min));
            assert_eq!(env.hi[j], sims.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        let small = random_matrix(100, 50, 6);
        assert!(matches!(wiegand_simulation_envelope(&small, 0.05), Err(Error::InsufficientSimulations(_))));
        assert!(matches!(simulation_pointwise_envelope(&small, 0.03), Err(Error::InsufficientSimulations(_))));
        let env = simulation_pointwise_envelope(&small, 0.04).unwrap(); // k = 2
        let mut c0: Vec<f64> = (1..100).map(|i| small.get(i, 0)).collect();
        c0.sort_by(f64::total_cmp);
        assert_eq!(env.lo[0], c0[1]);
        assert_eq!(env.hi[0], c0[97]);
    }

    #[test]
    fn analytic_band() {
        let env = analytic_envelope(&[0.0], &[1.0], &[2.0], &[0.0], 0.05).unwrap();
        assert!((env.hi[0] - (1.0 + 1.959963984540054 * 2.0)).abs() < 1e-9);
        assert!(env.observed_outside() == (0.0 < env.lo[0]));
    }
}
