//! `rlt`: simulate paths, compute realized Laplace transforms, estimate the
//! activity index, fit the time-change law and run Monte Carlo studies.

mod parse;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use realized_laplace::activity::{
    bootstrap_se, estimate_activity, ActivityEstimate, DEFAULT_K_FRAC, DEFAULT_P0,
};
use realized_laplace::fit::{
    default_starts, fit_standard_errors, fit_theta_multistart, solve_u_max, FitOptions, KernelSpec,
    Quadrature, TemperedStableParams, U_MAX_SLOPE,
};
use realized_laplace::ingest::{ingest, save_with_sidecar, IngestFormat, IngestSpec};
use realized_laplace::mc::{run_study, table_one_columns, BetaMode, MCConfig};
use realized_laplace::sim::{
    simulate_levy_path, simulate_model, CIRSpec, CirStart, Driver, ModelOptions, SimulationMeta,
    StableSpec, TemperedStableSpec,
};
use realized_laplace::transform::{
    activity_correction_se, block_stats_with, empirical_laplace, g_hat_curve, hac_covariance,
    standard_errors, HACResult, HacKernel, RLTCurve,
};
use realized_laplace::{Execution, PathGrid, RngStream};

use parse::{UList, UMax};

const Z_95: f64 = realized_laplace::mc::Z_95;

#[derive(Parser)]
#[command(
    name = "rlt",
    version,
    about = "Realized Laplace transforms of the stochastic scale of pure-jump processes"
)]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path of the model and write it as CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Realized Laplace transform with HAC standard errors.
    Rlt(RltArgs),
    /// Activity index from two-scale power variations.
    Activity(ActivityArgs),
    /// Minimum-distance fit of the tempered stable time-change law.
    Fit(FitArgs),
    /// Monte Carlo study in the layout of the published table.
    Mc(McArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DriverArg {
    Stable,
    TemperedStable,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Levels,
    Timestamped,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "stable")]
    driver: DriverArg,
    /// Activity index of the driver, in (1,2).
    #[arg(long, default_value_t = 1.7)]
    beta: f64,
    /// Lévy density level [default: A(β) for stable, 0.11 for tempered stable].
    #[arg(long)]
    c_level: Option<f64>,
    /// Tempering rate (tempered stable only).
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    /// Scale mean-reversion speed per day.
    #[arg(long, default_value_t = 0.02)]
    cir_kappa: f64,
    /// Scale long-run mean.
    #[arg(long, default_value_t = 1.0)]
    cir_theta: f64,
    /// Scale volatility; 0 gives a deterministic scale.
    #[arg(long, default_value_t = 0.05)]
    cir_sigma: f64,
    /// Initial scale: a number or "stationary".
    #[arg(long, default_value = "stationary")]
    cir_v0: String,
    /// Constant unit scale: write the driver path itself.
    #[arg(long, conflicts_with_all = ["cir_kappa", "cir_theta", "cir_sigma", "cir_v0"])]
    constant_scale: bool,
    #[arg(long, default_value_t = 300.0)]
    days: f64,
    #[arg(long, default_value_t = 78)]
    per_day: usize,
    /// Simulation steps per observation interval.
    #[arg(long, default_value_t = 1)]
    substeps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Observation file (CSV).
    #[arg(long)]
    input: PathBuf,
    /// Mesh as a fraction of a day [default: read from the sidecar].
    #[arg(long)]
    delta_n: Option<f64>,
    /// Observations per day; alternative to --delta-n.
    #[arg(long, conflicts_with = "delta_n")]
    per_day: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// The file holds increments rather than levels.
    #[arg(long)]
    returns: bool,
    /// Take logs of the levels first.
    #[arg(long = "log", conflicts_with = "returns")]
    log_transform: bool,
    /// Fail on irregular timestamps instead of warning.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct InferenceArgs {
    #[arg(long, value_enum, default_value = "bartlett")]
    hac_kernel: HacKernelArg,
    /// HAC lag count [default: ⌈1.3·T^{1/3}⌉].
    #[arg(long)]
    hac_lags: Option<usize>,
    /// Bootstrap resamples for the standard error of an estimated activity.
    #[arg(long, default_value_t = 500)]
    bootstrap: usize,
    /// Seed for the bootstrap.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum HacKernelArg {
    Bartlett,
    Parzen,
}

impl From<HacKernelArg> for HacKernel {
    fn from(k: HacKernelArg) -> Self {
        match k {
            HacKernelArg::Bartlett => HacKernel::Bartlett,
            HacKernelArg::Parzen => HacKernel::Parzen,
        }
    }
}

#[derive(Args)]
struct RltArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Activity: a value in (0,2] (e.g. 2 for the Brownian rate) or estimate[:days].
    #[arg(long, value_parser = parse::beta)]
    beta: BetaMode,
    /// Evaluation points: a comma list or grid:lo,hi,n.
    #[arg(long, value_parser = parse::u_list, default_value = "0.1,0.5,1.25,2.5,3.75")]
    u: UList,
    /// Use the drift-robust differenced statistic.
    #[arg(long)]
    differenced: bool,
    #[command(flatten)]
    inference: InferenceArgs,
    /// CSV u,value,se [default: stdout].
    #[arg(long)]
    out_table: Option<PathBuf>,
    /// CSV u,value,se,lower,upper with 95% bands.
    #[arg(long)]
    out_bands: Option<PathBuf>,
    /// The curve as JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// The HAC matrix as JSON.
    #[arg(long)]
    out_hac: Option<PathBuf>,
    /// The HAC matrix as CSV.
    #[arg(long)]
    out_hac_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ActivityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Pilot power.
    #[arg(long, default_value_t = DEFAULT_P0)]
    p0: f64,
    /// Final power as a fraction of the pilot estimate.
    #[arg(long, default_value_t = DEFAULT_K_FRAC)]
    k_frac: f64,
    /// Bootstrap resamples over days for a standard error (0 = none).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use only the first DAYS of the sample.
    #[arg(long)]
    window: Option<f64>,
    /// JSON output [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Activity: a value in (0,2] or estimate[:days].
    #[arg(long, value_parser = parse::beta)]
    beta: BetaMode,
    /// Starting point alpha,c,lambda [default: moment-matched starts].
    #[arg(long, value_parser = parse::theta)]
    init: Option<TemperedStableParams>,
    /// Pilot grid used to locate the kernel width.
    #[arg(long, value_parser = parse::u_list, default_value = "grid:0,10,201")]
    u_grid: UList,
    /// Kernel width: auto (slope −0.05 of the pilot curve) or a value.
    #[arg(long, value_parser = parse::u_max, default_value = "auto")]
    kernel_umax: UMax,
    /// Quadrature nodes on [0, 3·u_max].
    #[arg(long, default_value_t = 151)]
    nodes: usize,
    #[command(flatten)]
    inference: InferenceArgs,
    /// FitResult JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV u,empirical,fitted,lower,upper with 95% bands about the empirical curve.
    #[arg(long)]
    out_curve: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Flat TOML file with the fields of one study column
    /// [default: the five published columns at desk scale].
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (1 = sequential) [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// 1000 replications of 1200 days (long-running).
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<f64>,
    /// Also compute HAC standard errors and coverage.
    #[arg(long)]
    inference: bool,
    /// Table CSV [default: stdout].
    #[arg(long)]
    out_table: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Include per-replication records in the JSON.
    #[arg(long, requires = "out_json")]
    detail: bool,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Rlt(a) => rlt(a),
        Command::Activity(a) => activity(a),
        Command::Fit(a) => fit(a),
        Command::Mc(a) => mc(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn usage_error(kind: ErrorKind, msg: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let driver = match a.driver {
        DriverArg::Stable => Driver::Stable(match a.c_level {
            Some(c) => StableSpec::with_level(a.beta, c)?,
            None => StableSpec::new(a.beta)?,
        }),
        DriverArg::TemperedStable => Driver::TemperedStable(TemperedStableSpec::new(
            a.beta,
            a.c_level
                .unwrap_or(TemperedStableSpec::paper_design().c_level),
            a.lambda,
        )?),
    };
    let stream = RngStream::new(a.seed, a.stream);
    let options = ModelOptions {
        substeps: a.substeps,
        ..ModelOptions::default()
    };
    let (path, cir) = if a.constant_scale {
        (
            simulate_levy_path(&driver, a.days, a.per_day, stream)?,
            None,
        )
    } else {
        let v0 = if a.cir_v0.eq_ignore_ascii_case("stationary") {
            CirStart::Stationary
        } else {
            CirStart::Level(
                a.cir_v0
                    .parse()
                    .with_context(|| format!("bad --cir-v0 '{}'", a.cir_v0))?,
            )
        };
        let cir = CIRSpec {
            kappa_mr: a.cir_kappa,
            theta_mean: a.cir_theta,
            sigma_vol: a.cir_sigma,
            v0,
        };
        (
            simulate_model(&driver, &cir, a.days, a.per_day, options, stream)?,
            Some(cir),
        )
    };
    let meta = SimulationMeta {
        driver,
        cir,
        options,
        seed: a.seed,
        stream_id: a.stream,
        delta_n: path.delta_n,
        m_per_day: a.per_day,
        t_span: path.t_span,
        n_increments: path.n_increments(),
    };
    save_with_sidecar(&path, &meta, &a.out)?;
    info!(
        "wrote {} observations to {}",
        path.values.len(),
        a.out.display()
    );
    Ok(())
}

fn load(input: &InputArgs) -> Result<PathGrid> {
    let spec = IngestSpec {
        input: input.input.clone(),
        format: match input.format {
            FormatArg::Auto => IngestFormat::Auto,
            FormatArg::Levels => IngestFormat::Levels,
            FormatArg::Timestamped => IngestFormat::Timestamped,
        },
        returns: input.returns,
        delta_n: input.delta_n.or(input.per_day.map(|m| 1.0 / m as f64)),
        log_transform: input.log_transform,
        strict: input.strict,
    };
    let got = ingest(&spec)?;
    info!(
        "read {} increments over {} days",
        got.path.n_increments(),
        got.path.t_span
    );
    Ok(got.path)
}

struct ResolvedBeta {
    beta: f64,
    /// Estimate and its estimation window, when estimated.
    estimate: Option<(ActivityEstimate, PathGrid)>,
}

fn resolve_beta(path: &PathGrid, mode: BetaMode) -> Result<ResolvedBeta> {
    Ok(match mode {
        BetaMode::FixedAt(b) => ResolvedBeta {
            beta: b,
            estimate: None,
        },
        BetaMode::Known => bail!("the true activity is unknown for observed data"),
        BetaMode::Estimated { days } => {
            if days > path.t_span + 1e-9 {
                bail!("estimation window of {days} days exceeds the {} days of data; use estimate:<days>", path.t_span);
            }
            let w = path.window(days)?;
            let est = estimate_activity(&w, DEFAULT_P0, DEFAULT_K_FRAC)?;
            info!(
                "estimated activity {:.4} on the first {days} days",
                est.beta_hat
            );
            ResolvedBeta {
                beta: est.beta_hat,
                estimate: Some((est, w)),
            }
        }
    })
}

/// HAC matrix and standard errors on the curve's grid; `None` when the
/// sample has fewer than 2 whole days.
fn curve_inference(
    path: &PathGrid,
    curve: &RLTCurve,
    beta: &ResolvedBeta,
    args: &InferenceArgs,
) -> Result<Option<(HACResult, Vec<f64>)>> {
    let blocks = match block_stats_with(path, beta.beta, &curve.u_grid, curve.statistic()) {
        Ok(b) => b,
        Err(e) => {
            warn!("no standard errors: {e}");
            return Ok(None);
        }
    };
    let hac = hac_covariance(&blocks, args.hac_kernel.into(), args.hac_lags)?;
    let inflation = match (&beta.estimate, curve.differenced) {
        (Some(_), true) => {
            warn!("the estimated-activity correction is not applied to the differenced statistic");
            None
        }
        (Some((est, window)), false) => {
            let se = bootstrap_se(window, est, args.bootstrap, RngStream::new(args.seed, 0))?;
            let g = g_hat_curve(path, beta.beta, &curve.u_grid)?;
            Some(activity_correction_se(
                curve,
                &g,
                se,
                path.delta_n,
                &curve.u_grid,
            )?)
        }
        (None, _) => None,
    };
    let se = standard_errors(&hac, path.t_span, inflation.as_deref())?;
    Ok(Some((hac, se)))
}

fn rlt(a: RltArgs) -> Result<()> {
    if a.differenced && a.u.0.iter().all(|&u| u == 0.0) {
        usage_error(
            ErrorKind::ArgumentConflict,
            "--differenced needs at least one u > 0",
        );
    }
    let path = load(&a.input)?;
    let beta = resolve_beta(&path, a.beta)?;
    let mut curve = empirical_laplace(&path, beta.beta, &a.u.0, a.differenced)?;
    let inference = curve_inference(&path, &curve, &beta, &a.inference)?;
    if let Some((hac, se)) = &inference {
        curve.se = Some(se.clone());
        if let Some(p) = &a.out_hac {
            hac.save_json(p)?;
        }
        if let Some(p) = &a.out_hac_csv {
            hac.write_csv(create(p)?)?;
        }
    } else if a.out_hac.is_some() || a.out_hac_csv.is_some() || a.out_bands.is_some() {
        bail!("standard errors need at least 2 whole days of data");
    }
    emit(a.out_table.as_deref(), |w| Ok(curve.write_csv(w)?))?;
    if let Some(p) = &a.out_bands {
        curve.write_bands_csv(create(p)?, Z_95)?;
    }
    if let Some(p) = &a.out_json {
        serde_json::to_writer_pretty(create(p)?, &curve)?;
    }
    Ok(())
}

fn activity(a: ActivityArgs) -> Result<()> {
    let mut path = load(&a.input)?;
    if let Some(days) = a.window {
        path = path.window(days)?;
    }
    let mut est = estimate_activity(&path, a.p0, a.k_frac)?;
    if a.bootstrap > 0 {
        est.se = Some(bootstrap_se(
            &path,
            &est,
            a.bootstrap,
            RngStream::new(a.seed, 0),
        )?);
    }
    emit(a.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &est)?;
        writeln!(w)?;
        Ok(())
    })
}

fn fit(a: FitArgs) -> Result<()> {
    let path = load(&a.input)?;
    let beta = resolve_beta(&path, a.beta)?;
    let kernel = match a.kernel_umax {
        UMax::Value(v) => KernelSpec::new(v)?,
        UMax::Auto => {
            let pilot = empirical_laplace(&path, beta.beta, &a.u_grid.0, false)?;
            KernelSpec::new(solve_u_max(&pilot, U_MAX_SLOPE)?)?
        }
    };
    info!("kernel width u_max = {:.4}", kernel.u_max);
    if a.nodes < 3 {
        usage_error(ErrorKind::ValueValidation, "--nodes must be at least 3");
    }
    let quadrature = Quadrature::Uniform {
        upper_factor: 3.0,
        nodes: a.nodes,
    };
    let nodes = quadrature
        .nodes(&kernel)
        .expect("uniform quadrature has nodes");
    let mut curve = empirical_laplace(&path, beta.beta, &nodes, false)?;
    let starts = match a.init {
        Some(t) => vec![t],
        None => default_starts(&curve, &kernel),
    };
    let mut result = fit_theta_multistart(
        &curve,
        &kernel,
        &starts,
        &Quadrature::CurveNodes,
        &FitOptions::default(),
    )?;
    if !result.converged {
        warn!("fit did not converge in {} iterations", result.iterations);
    }
    match curve_inference(&path, &curve, &beta, &a.inference)? {
        Some((hac, se)) => {
            result.se = Some(fit_standard_errors(&result, &hac, &kernel, path.t_span)?);
            curve.se = Some(se);
        }
        None => warn!("parameter standard errors unavailable"),
    }
    emit(a.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &result)?;
        writeln!(w)?;
        Ok(())
    })?;
    if let Some(p) = &a.out_curve {
        result.write_csv(create(p)?, curve.se.as_deref(), Z_95)?;
    }
    Ok(())
}

fn mc(a: McArgs) -> Result<()> {
    let mut columns = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            let cfg: MCConfig =
                toml::from_str(&text).with_context(|| format!("bad config {}", p.display()))?;
            vec![cfg]
        }
        None => table_one_columns(),
    };
    for c in &mut columns {
        if a.paper_scale {
            *c = c.clone().paper_scale();
        }
        if let Some(r) = a.reps {
            c.n_reps = r;
        }
        if let Some(s) = a.seed {
            c.seed = s;
        }
        if let Some(d) = a.days {
            c.t_span = d;
        }
        c.inference |= a.inference;
        if let BetaMode::Estimated { days } = c.beta_mode {
            if days > c.t_span {
                warn!(
                    "{}: estimation window shortened from {days} to {} days",
                    c.label(),
                    c.t_span
                );
                c.beta_mode = BetaMode::Estimated { days: c.t_span };
            }
        }
    }
    let exec = a.workers.map_or(Execution::Parallel, Execution::workers);
    let summary = run_study(&columns, exec)?;
    for c in &summary.columns {
        if c.n_failed > 0 {
            warn!(
                "{}: {} of {} replications failed",
                c.label,
                c.n_failed,
                c.n_failed + c.n_ok
            );
        }
    }
    emit(a.out_table.as_deref(), |w| Ok(summary.write_table_csv(w)?))?;
    if let Some(p) = &a.out_json {
        summary.write_json(create(p)?, a.detail)?;
    }
    Ok(())
}
