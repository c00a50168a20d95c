use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spatial_gof::classical::EdgeCorrection;
use spatial_gof::io;
use spatial_gof::procedures::Method;
use spatial_gof::study::{Axis, ModelConfig, StudyConfig, TestDefaults, TestSelector};
use spatial_gof::tda::{alpha_filtration, persistence};
use spatial_gof::{simulate, Error, RngSeed, Window};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "spgof", version, about = "Goodness-of-fit tests for planar point patterns")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPGOF_THREADS")]
    threads: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Simulate a point pattern and write it as CSV.
    Simulate(SimulateArgs),
    /// Test a pattern against a null model.
    Test(TestArgs),
    /// Run a power study described by a TOML file.
    PowerStudy(StudyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelName {
    Csr,
    Binomial,
    Poisson,
    Matern,
    Thomas,
    Strauss,
    Ssi,
    InhomPoisson,
}

#[derive(Args, Debug, Default)]
struct ModelParams {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Inhibition distance for `ssi`.
    #[arg(long)]
    r: Option<f64>,
    /// Intercept of a linear intensity.
    #[arg(long)]
    a: Option<f64>,
    /// Slope of a linear intensity.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, value_enum, default_value = "x")]
    axis: AxisArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum AxisArg {
    #[default]
    X,
    Y,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[command(flatten)]
    params: ModelParams,
    /// Observation window: x_min x_max y_min y_max.
    #[arg(long, num_args = 4, value_names = ["X_MIN", "X_MAX", "Y_MIN", "Y_MAX"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Output file, relative to --out-dir.
    #[arg(long, default_value = "pattern.csv")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CorrectionArg {
    Translation,
    Border,
    None,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Mc,
    Bits,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Pattern CSV file.
    pattern: PathBuf,
    /// Window, overriding the one recorded in the file.
    #[arg(long, num_args = 4, value_names = ["X_MIN", "X_MAX", "Y_MIN", "Y_MAX"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Null model.
    #[arg(long, value_enum, default_value = "csr")]
    null: ModelName,
    #[command(flatten)]
    params: ModelParams,
    /// Do not condition CSR on the observed number of points.
    #[arg(long)]
    no_condition: bool,
    #[arg(long, value_enum, default_value = "mc")]
    method: MethodArg,
    /// Summary function: k, l, pcf, f, g, gstar, j, betti0, betti1, apf0, apf1, nd0, euler.
    #[arg(long, default_value = "l")]
    summary: String,
    /// Test statistic: mad, dclf, st, qdir, st_dclf, qdir_dclf, crps, point, int, fun, score.
    #[arg(long = "stat", default_value = "fun")]
    statistic: String,
    /// Depth measure for fun and score: rank, erl, cont, area.
    #[arg(long)]
    measure: Option<String>,
    /// Grid index for the point statistic.
    #[arg(long)]
    r_index: Option<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long, value_enum)]
    correction: Option<CorrectionArg>,
    /// Kernel half-width for pcf.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Number of simulations.
    #[arg(long)]
    m: Option<usize>,
    /// Second-stage simulations of the two-stage test.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report file, relative to --out-dir.
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
    /// Also write the global envelope (`r,lo,hi,obs,mean`).
    #[arg(long)]
    envelope: Option<PathBuf>,
    /// Also write the observed summary curve (`r,value,defined`).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Also write the persistence diagram of the pattern (`dim,birth,death`).
    #[arg(long)]
    diagram: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// TOML configuration.
    config: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn need<T: Copy>(v: Option<T>, flag: &str, model: ModelName) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("model {model:?} needs --{flag}").to_lowercase()))
}

fn model_config(name: ModelName, p: &ModelParams) -> CliResult<ModelConfig> {
    Ok(match name {
        ModelName::Csr => ModelConfig::Csr,
        ModelName::Binomial => ModelConfig::Binomial { n: need(p.n, "n", name)? },
        ModelName::Poisson => ModelConfig::Poisson { lambda: need(p.lambda, "lambda", name)? },
        ModelName::Matern => ModelConfig::Matern {
            kappa: need(p.kappa, "kappa", name)?,
            radius: need(p.radius, "radius", name)?,
            mu: need(p.mu, "mu", name)?,
        },
        ModelName::Thomas => ModelConfig::Thomas {
            kappa: need(p.kappa, "kappa", name)?,
            sigma: need(p.sigma, "sigma", name)?,
            mu: need(p.mu, "mu", name)?,
        },
        ModelName::Strauss => ModelConfig::Strauss {
            beta: need(p.beta, "beta", name)?,
            gamma: need(p.gamma, "gamma", name)?,
            radius: need(p.radius, "radius", name)?,
        },
        ModelName::Ssi => ModelConfig::Ssi { n: need(p.n, "n", name)?, r: need(p.r, "r", name)? },
        ModelName::InhomPoisson => ModelConfig::InhomPoisson {
            a: need(p.a, "a", name)?,
            b: need(p.b, "b", name)?,
            axis: match p.axis {
                AxisArg::X => Axis::X,
                AxisArg::Y => Axis::Y,
            },
        },
    })
}

fn window_arg(w: &Option<Vec<f64>>) -> CliResult<Option<Window>> {
    match w.as_deref() {
        None => Ok(None),
        Some([x0, x1, y0, y1]) => Ok(Some(Window::new(*x0, *x1, *y0, *y1)?)),
        Some(_) => Err(CliError::Usage("--window takes four numbers".into())),
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> CliResult<()> {
    let window = window_arg(&args.window)?.unwrap_or_else(Window::unit);
    let spec = model_config(args.model, &args.params)?
        .spec(&window)?
        .ok_or_else(|| CliError::Usage("csr needs an intensity: use --model poisson --lambda".into()))?;
    let seed = RngSeed::new(cli.seed.unwrap_or(0), 0);
    let pattern = simulate(&spec, &window, seed)?;
    let path = cli.out_dir.join(&args.out);
    io::write_file(&path, &io::pattern_csv(&pattern))?;
    println!("{}", pattern.len());
    Ok(())
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> CliResult<()> {
    let pattern = io::read_pattern(&args.pattern, window_arg(&args.window)?)?;
    let window = *pattern.window();
    let null = model_config(args.null, &args.params)?.null_model(&window)?;
    let selector = TestSelector {
        measure: args.measure.clone(),
        r_index: args.r_index,
        correction: args.correction.map(|c| match c {
            CorrectionArg::Translation => EdgeCorrection::Translation,
            CorrectionArg::Border => EdgeCorrection::Border,
            CorrectionArg::None => EdgeCorrection::None,
        }),
        bandwidth: args.bandwidth,
        r_min: args.r_min,
        r_max: args.r_max,
        grid_points: args.grid_points,
        m: args.m,
        s: args.s,
        ..TestSelector::new(&args.summary, &args.statistic)
    };
    let defaults = TestDefaults {
        alpha: args.alpha,
        method: match args.method {
            MethodArg::Mc => Method::Mc,
            MethodArg::Bits => Method::Bits,
        },
        condition: !args.no_condition,
        seed: cli.seed.unwrap_or(0),
        ..TestDefaults::default()
    };
    let cfg = selector.config(null, &window, &defaults)?;
    let report = spatial_gof::run_test(&cfg, &pattern)?;
    for w in &report.details.warnings {
        eprintln!("warning: {w}");
    }
    let json = report.to_json();
    io::write_file(cli.out_dir.join(&args.report), &format!("{json}\n"))?;
    if let Some(path) = &args.envelope {
        match &report.details.envelope {
            Some(env) => io::write_file(cli.out_dir.join(path), &io::envelope_csv(env))?,
            None => {
                eprintln!("warning: statistic {} has no envelope; {} not written", report.statistic, path.display())
            }
        }
    }
    if let Some(path) = &args.curve {
        let curve = cfg.summaries[0].compute(&pattern)?;
        io::write_file(cli.out_dir.join(path), &io::curve_csv(&curve))?;
    }
    if let Some(path) = &args.diagram {
        let pd = persistence(&alpha_filtration(&pattern));
        io::write_file(cli.out_dir.join(path), &io::diagram_csv(&pd))?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_power_study(cli: &Cli, args: &StudyArgs) -> CliResult<()> {
    let study = StudyConfig::load(&args.config)?.validate(cli.seed)?;
    let total = study.cells();
    let mut done = 0;
    study.run(&cli.out_dir, |cell| {
        done += 1;
        eprintln!(
            "[{done}/{total}] {} / {}: {}/{} rejected, {} failed",
            cell.alternative,
            cell.test,
            cell.rejections,
            cell.replications - cell.failures,
            cell.failures
        );
    })?;
    println!("{}", Path::new(&cli.out_dir).join("results.csv").display());
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Test(a) => cmd_test(cli, a),
        Command::PowerStudy(a) => cmd_power_study(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_NUMERIC })
        }
    }
}
