//! Samplers for null models and alternatives.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::pattern::{Point, PointPattern, Window};
use crate::rng::RngSeed;

/// Number of birth-death proposals per Strauss realization.
pub const STRAUSS_STEPS: usize = 100_000;
/// Consecutive rejections after which sequential inhibition gives up.
pub const SSI_MAX_REJECTIONS: usize = 10_000;

/// Intensity function of an inhomogeneous Poisson process.
#[derive(Clone)]
pub enum Intensity {
    Constant(f64),
    /// `a + b * x`
    LinearX {
        a: f64,
        b: f64,
    },
    /// `a + b * y`
    LinearY {
        a: f64,
        b: f64,
    },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl Intensity {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Intensity::Constant(c) => *c,
            Intensity::LinearX { a, b } => a + b * x,
            Intensity::LinearY { a, b } => a + b * y,
            Intensity::Custom(f) => f(x, y),
        }
    }
}

impl fmt::Debug for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Constant(c) => write!(f, "Constant({c})"),
            Intensity::LinearX { a, b } => write!(f, "LinearX({a} + {b}x)"),
            Intensity::LinearY { a, b } => write!(f, "LinearY({a} + {b}y)"),
            Intensity::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A point process model. Rates are per unit area, lengths in window units.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Binomial { n: usize },
    Poisson { lambda: f64 },
    MaternCluster { kappa: f64, radius: f64, mu: f64 },
    Thomas { kappa: f64, sigma: f64, mu: f64 },
    Strauss { beta: f64, gamma: f64, radius: f64 },
    Ssi { n: usize, r_inhibit: f64 },
    InhomPoisson { rho_max: f64, intensity: Intensity },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        fn nonneg(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite and >= 0, got {v}")))
            }
        }
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite and > 0, got {v}")))
            }
        }
        match *self {
            ModelSpec::Binomial { .. } => Ok(()),
            ModelSpec::Poisson { lambda } => nonneg("lambda", lambda),
            ModelSpec::MaternCluster { kappa, radius, mu } => {
                nonneg("kappa", kappa)?;
                positive("radius", radius)?;
                nonneg("mu", mu)
            }
            ModelSpec::Thomas { kappa, sigma, mu } => {
                nonneg("kappa", kappa)?;
                positive("sigma", sigma)?;
                nonneg("mu", mu)
            }
            ModelSpec::Strauss { beta, gamma, radius } => {
                nonneg("beta", beta)?;
                positive("radius", radius)?;
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::InvalidSpec(format!("gamma must lie in [0, 1], got {gamma}")));
                }
                Ok(())
            }
            ModelSpec::Ssi { r_inhibit, .. } => positive("r_inhibit", r_inhibit),
            ModelSpec::InhomPoisson { rho_max, .. } => nonneg("rho_max", rho_max),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Binomial { .. } => "binomial",
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::MaternCluster { .. } => "matern",
            ModelSpec::Thomas { .. } => "thomas",
            ModelSpec::Strauss { .. } => "strauss",
            ModelSpec::Ssi { .. } => "ssi",
            ModelSpec::InhomPoisson { .. } => "inhom",
        }
    }
}

/// Replaces a Poisson null by the binomial process with the observed count.
///
/// The count is sufficient for the intensity, so conditioning on it turns
/// the composite CSR hypothesis into a simple one. For any other model the
/// spec is returned unchanged and the flag is `true`.
pub fn condition_on_count(spec: &ModelSpec, observed_n: usize) -> (ModelSpec, bool) {
    match spec {
        ModelSpec::Poisson { .. } => (ModelSpec::Binomial { n: observed_n }, false),
        other => (other.clone(), true),
    }
}

/// Draws one realization of `spec` in `window`.
pub fn simulate(spec: &ModelSpec, window: &Window, seed: RngSeed) -> Result<PointPattern> {
    spec.validate()?;
    let mut rng = seed.rng();
    let points = match spec {
        ModelSpec::Binomial { n } => uniform_points(&mut rng, window, *n),
        ModelSpec::Poisson { lambda } => {
            let n = poisson_count(&mut rng, lambda * window.area());
            uniform_points(&mut rng, window, n)
        }
        ModelSpec::MaternCluster { kappa, radius, mu } => {
            let parents_window = window.dilate(*radius);
            let np = poisson_count(&mut rng, kappa * parents_window.area());
            let parents = uniform_points(&mut rng, &parents_window, np);
            let mut pts = Vec::new();
            for c in parents {
                let k = poisson_count(&mut rng, *mu);
                for _ in 0..k {
                    let r = radius * rng.random::<f64>().sqrt();
                    let theta = 2.0 * PI * rng.random::<f64>();
                    let (x, y) = (c.x + r * theta.cos(), c.y + r * theta.sin());
                    if window.contains(x, y) {
                        pts.push(Point::new(x, y));
                    }
                }
            }
            pts
        }
        ModelSpec::Thomas { kappa, sigma, mu } => {
            let parents_window = window.dilate(4.0 * sigma);
            let np = poisson_count(&mut rng, kappa * parents_window.area());
            let parents = uniform_points(&mut rng, &parents_window, np);
            let normal = Normal::new(0.0, *sigma).expect("sigma validated positive");
            let mut pts = Vec::new();
            for c in parents {
                let k = poisson_count(&mut rng, *mu);
                for _ in 0..k {
                    let x = c.x + normal.sample(&mut rng);
                    let y = c.y + normal.sample(&mut rng);
                    if window.contains(x, y) {
                        pts.push(Point::new(x, y));
                    }
                }
            }
            pts
        }
        ModelSpec::Strauss { beta, gamma, radius } => {
            strauss_birth_death(&mut rng, window, *beta, *gamma, *radius, STRAUSS_STEPS)
        }
        ModelSpec::Ssi { n, r_inhibit } => ssi(&mut rng, window, *n, *r_inhibit)?,
        ModelSpec::InhomPoisson { rho_max, intensity } => {
            let n = poisson_count(&mut rng, rho_max * window.area());
            let proposals = uniform_points(&mut rng, window, n);
            let mut kept = Vec::with_capacity(n);
            for p in proposals {
                let rho = intensity.eval(p.x, p.y);
                if rho > *rho_max * (1.0 + 1e-12) {
                    return Err(Error::InvalidSpec(format!(
                        "intensity {rho} at ({}, {}) exceeds rho_max {rho_max}",
                        p.x, p.y
                    )));
                }
                if rng.random::<f64>() * rho_max < rho {
                    kept.push(p);
                }
            }
            kept
        }
    };
    PointPattern::new(points, *window)
}

fn uniform_points<R: Rng>(rng: &mut R, window: &Window, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| {
            Point::new(
                window.x_min + window.width() * rng.random::<f64>(),
                window.y_min + window.height() * rng.random::<f64>(),
            )
        })
        .collect()
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as usize
}

/// Birth-death Metropolis-Hastings for the Strauss density
/// `beta^n * gamma^s_R(x)` on `window`, started from the empty pattern.
fn strauss_birth_death<R: Rng>(
    rng: &mut R,
    window: &Window,
    beta: f64,
    gamma: f64,
    radius: f64,
    steps: usize,
) -> Vec<Point> {
    let area = window.area();
    let r2 = radius * radius;
    let mut pts: Vec<Point> = Vec::new();
    let close = |pts: &[Point], u: &Point, skip: Option<usize>| -> i32 {
        if gamma == 1.0 {
            return 0;
        }
        let mut t = 0;
        for (j, q) in pts.iter().enumerate() {
            if Some(j) != skip && q.dist2(u) <= r2 {
                t += 1;
                if gamma == 0.0 {
                    break;
                }
            }
        }
        t
    };
    for _ in 0..steps {
        if rng.random::<f64>() < 0.5 {
            let u = Point::new(
                window.x_min + window.width() * rng.random::<f64>(),
                window.y_min + window.height() * rng.random::<f64>(),
            );
            let t = close(&pts, &u, None);
            let ratio = beta * area * gamma.powi(t) / (pts.len() + 1) as f64;
            if rng.random::<f64>() < ratio {
                pts.push(u);
            }
        } else if !pts.is_empty() {
            let i = rng.random_range(0..pts.len());
            let t = close(&pts, &pts[i], Some(i));
            let ratio = pts.len() as f64 / (beta * area * gamma.powi(t));
            if rng.random::<f64>() < ratio {
                pts.swap_remove(i);
            }
        }
    }
    pts
}

fn ssi<R: Rng>(rng: &mut R, window: &Window, n: usize, r_inhibit: f64) -> Result<Vec<Point>> {
    let r2 = r_inhibit * r_inhibit;
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    let mut rejections = 0;
    while pts.len() < n {
        let u = Point::new(
            window.x_min + window.width() * rng.random::<f64>(),
            window.y_min + window.height() * rng.random::<f64>(),
        );
        if pts.iter().any(|q| q.dist2(&u) < r2) {
            rejections += 1;
            if rejections >= SSI_MAX_REJECTIONS {
                return Err(Error::SsiFailure { placed: pts.len(), requested: n });
            }
        } else {
            pts.push(u);
            rejections = 0;
        }
    }
    Ok(pts)
}
