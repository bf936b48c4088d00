use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hawkespop::asymptotics::{as_symmetric, convergence_sweep, scaled_family};
use hawkespop::bivariate::{psi_recursive_stationary, psi_recursive_transient};
use hawkespop::config::ModelConfig;
use hawkespop::fd::{cross_matrices, default_solver, fd_moment, CrossKind, FdSpec};
use hawkespop::moments::{
    assemble_system, enumerate_indices, stationary_moments, transient_moments, Horizon, MomentIndex, MomentTable,
    TransientMethod,
};
use hawkespop::numerics::OdeConfig;
use hawkespop::report::{fmt_num, write_table, CsvOut, MethodTag, RunReport};
use hawkespop::simulator::{estimate_counts, estimate_cross_moments, estimate_moments, simulate_stream, DEFAULT_EVENT_CAP};
use hawkespop::transform::{zeta, TransformArgs};
use hawkespop::Model;

/// Environment variable that caps worker threads.
const THREADS_ENV: &str = "HAWKESPOP_THREADS";

#[derive(Parser)]
#[command(name = "hawkespop", version, about = "Moments of Hawkes population processes")]
struct Cli {
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact reduced moments up to a given order.
    Moments(MomentsArgs),
    /// Score finite differences and Monte Carlo against the exact moments.
    Compare(CompareArgs),
    /// Two-time moments and covariances over a grid of lags.
    Cross(CrossArgs),
    /// Simulate paths and summarise first moments.
    Simulate(SimulateArgs),
    /// Distance to the Gamma limit along a symmetric family.
    NearlyUnstable(NearlyUnstableArgs),
    /// Evaluate the joint transform at one point.
    Transform(TransformCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Ode,
    Closed,
    Blocks,
}

#[derive(Args)]
struct MomentsArgs {
    config: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Stationary moments instead of moments at `t`.
    #[arg(long)]
    stationary: bool,
}

#[derive(Args)]
struct CompareArgs {
    config: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    order: Option<u32>,
    /// Finite-difference widths.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// Monte Carlo replication counts.
    #[arg(long, value_delimiter = ',')]
    mc_runs: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CrossArgs {
    config: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long)]
    h: Option<f64>,
    /// Monte Carlo replications; 0 skips simulation.
    #[arg(long)]
    mc_runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for one event CSV per run.
    #[arg(long)]
    dump_events: Option<PathBuf>,
}

#[derive(Args)]
struct NearlyUnstableArgs {
    config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    theta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args)]
struct TransformCmd {
    config: PathBuf,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
}

type CliResult<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn load(path: &Path) -> CliResult<(ModelConfig, Model)> {
    let cfg = ModelConfig::load(path).map_err(err)?;
    let model = cfg.model::<f64>().map_err(err)?;
    Ok((cfg, model))
}

fn ode_config() -> OdeConfig {
    OdeConfig::with_tolerances(1e-10, 1e-12)
}

fn need<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| format!("missing --{what} (no default in the config's [run] section)"))
}

fn blocks_table(model: &Model, n: u32, horizon: Horizon, values: nalgebra::DVector<f64>) -> MomentTable<f64> {
    MomentTable::new(horizon, enumerate_indices(model.d(), n), values.iter().copied().collect())
}

fn cmd_moments(a: MomentsArgs) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let n = a.order.or(cfg.run.order).unwrap_or(1);
    let method = match (a.method, cfg.run.method.as_deref()) {
        (Some(m), _) => m,
        (None, Some(s)) => Method::from_str(s, true).map_err(|_| format!("unknown method `{s}` in [run]"))?,
        (None, None) => Method::Closed,
    };
    let stationary = a.stationary || cfg.run.stationary.unwrap_or(false);
    let table = if stationary {
        match method {
            Method::Blocks => {
                let x = psi_recursive_stationary(&model, n).map_err(err)?;
                blocks_table(&model, n, Horizon::Stationary, x)
            }
            _ => stationary_moments(&model, n).map_err(err)?,
        }
    } else {
        let t = need(a.t.or(cfg.run.t), "t")?;
        match method {
            Method::Blocks => {
                let x = psi_recursive_transient(&model, n, t, &ode_config()).map_err(err)?;
                blocks_table(&model, n, Horizon::At(t), x)
            }
            Method::Ode | Method::Closed => {
                let sys = assemble_system(&model, n).map_err(err)?;
                let how = if matches!(method, Method::Ode) { TransientMethod::Ode } else { TransientMethod::Auto };
                transient_moments(&sys, t, how, &ode_config()).map_err(err)?
            }
        }
    };
    write_table(Vec::new(), &table).map_err(err)
}

fn cmd_compare(a: CompareArgs) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let t = need(a.t.or(cfg.run.t), "t")?;
    let n = a.order.or(cfg.run.order).unwrap_or(1);
    let hs = a.h.or(cfg.run.h).unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    let runs = a.mc_runs.or(cfg.run.mc_runs).unwrap_or_else(|| vec![100, 1000, 10_000]);
    let seed = a.seed.or(cfg.run.seed).unwrap_or(1);

    let start = Instant::now();
    let sys = assemble_system(&model, n).map_err(err)?;
    let bm = transient_moments(&sys, t, TransientMethod::Auto, &ode_config()).map_err(err)?;
    let bm_secs = start.elapsed().as_secs_f64();
    let targets: Vec<MomentIndex> = bm.indices().iter().filter(|i| i.order() == n).cloned().collect();
    let exact: Vec<(MomentIndex, f64)> = targets.iter().map(|i| (i.clone(), bm.value(i).unwrap())).collect();

    let mut reports = vec![RunReport::score(MethodTag::Engine, "-", &bm, exact, bm_secs).map_err(err)?];
    let solver = default_solver();
    for &h in &hs {
        let spec = FdSpec::new(h).map_err(err)?;
        let start = Instant::now();
        let vals = targets
            .iter()
            .map(|i| fd_moment(&model, t, i, &spec, &solver).map(|v| (i.clone(), v)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        reports.push(RunReport::score(MethodTag::Fd, format!("h={}", fmt_num(h)), &bm, vals, secs).map_err(err)?);
    }
    for &m in &runs {
        let start = Instant::now();
        let mc = estimate_moments(&model, t, n, m, seed).map_err(err)?;
        let vals = targets.iter().map(|i| (i.clone(), mc.value(i).unwrap().mean)).collect();
        let secs = start.elapsed().as_secs_f64();
        reports.push(RunReport::score(MethodTag::Mc, format!("m={m}"), &bm, vals, secs).map_err(err)?);
    }

    let mut out = CsvOut::new(Vec::new(), &["method", "parameter", "order", "seconds", "mae", "mre"]).map_err(err)?;
    for r in &reports {
        out.row(&[
            r.method.as_str().to_string(),
            r.parameter.clone(),
            n.to_string(),
            fmt_num(r.seconds),
            fmt_num(r.mae),
            fmt_num(r.mre),
        ])
        .map_err(err)?;
    }
    out.finish().map_err(err)
}

fn cmd_cross(a: CrossArgs) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let t = a.t.or(cfg.run.t).unwrap_or(1.5);
    let taus = a.tau_grid.or(cfg.run.tau_grid).unwrap_or_else(|| (0..=20).map(|k| k as f64 * 0.5).collect());
    let h = a.h.or_else(|| cfg.run.h.as_ref().and_then(|v| v.first().copied())).unwrap_or(1e-3);
    let runs = a.mc_runs.or_else(|| cfg.run.mc_runs.as_ref().and_then(|v| v.first().copied())).unwrap_or(0);
    let seed = a.seed.or(cfg.run.seed).unwrap_or(1);
    let spec = FdSpec::new(h).map_err(err)?;
    let solver = default_solver();
    let d = model.d();

    let mut out = CsvOut::new(Vec::new(), &["tau", "pair", "method", "value"]).map_err(err)?;
    let mut emit = |tau: f64, pair: String, method: &str, v: f64| {
        out.row(&[fmt_num(tau), pair, method.to_string(), fmt_num(v)]).map_err(err)
    };
    let label = |what: &str, kind: CrossKind, i: usize, j: usize| format!("{what}_{}_{}_{}", kind.tag(), i + 1, j + 1);
    for &tau in &taus {
        for kind in CrossKind::ALL {
            let (r, c) = cross_matrices(&model, t, tau, kind, &spec, &solver).map_err(err)?;
            for i in 0..d {
                for j in 0..d {
                    emit(tau, label("R", kind, i, j), "FD", r[(i, j)])?;
                    emit(tau, label("C", kind, i, j), "FD", c[(i, j)])?;
                }
            }
        }
    }
    if runs > 0 {
        for est in estimate_cross_moments(&model, t, &taus, runs, seed).map_err(err)? {
            for kind in CrossKind::ALL {
                let r = est.product(kind);
                let c = est.covariance(kind);
                for i in 0..d {
                    for j in 0..d {
                        emit(est.tau, label("R", kind, i, j), "MC", r[(i, j)].mean)?;
                        emit(est.tau, label("C", kind, i, j), "MC", c[(i, j)])?;
                    }
                }
            }
        }
    }
    out.finish().map_err(err)
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let horizon = need(a.horizon.or(cfg.run.horizon).or(cfg.run.t), "horizon")?;
    let runs = a.runs.map(|r| r as usize).or(cfg.run.runs).unwrap_or(1000);
    if runs < 2 {
        return Err("--runs must be at least 2".into());
    }
    let seed = a.seed.or(cfg.run.seed).unwrap_or(1);
    let tab = estimate_moments(&model, horizon, 1, runs, seed).map_err(err)?;
    let counts = estimate_counts(&model, horizon, runs, seed).map_err(err)?;

    let mut out = CsvOut::new(Vec::new(), &["quantity", "mean", "std_error", "replications"]).map_err(err)?;
    let rows = tab
        .iter()
        .map(|(i, e)| (i.to_string(), *e))
        .chain(counts.iter().enumerate().map(|(i, e)| (format!("N{}", i + 1), *e)));
    for (name, e) in rows {
        out.row(&[name, fmt_num(e.mean), fmt_num(e.std_error), e.replications.to_string()]).map_err(err)?;
    }
    let buf = out.finish().map_err(err)?;

    if let Some(dir) = a.dump_events {
        fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        for r in 0..runs as u64 {
            let log = simulate_stream(&model, horizon, seed, r, DEFAULT_EVENT_CAP).map_err(err)?;
            let path = dir.join(format!("events_{}.csv", r + 1));
            let file = fs::File::create(&path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            log.write_csv(std::io::BufWriter::new(file)).map_err(err)?;
        }
    }
    Ok(buf)
}

fn cmd_nearly_unstable(a: NearlyUnstableArgs) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let base = as_symmetric(&model).map_err(err)?;
    let thetas = a.theta_grid.or(cfg.run.theta_grid).unwrap_or_else(|| vec![0.5, 0.9, 0.99]);
    let grid = a.s_grid.or(cfg.run.s_grid).unwrap_or_else(|| (0..=20).map(|k| k as f64 * 0.25).collect());
    let family = scaled_family(&base).map_err(err)?;
    let rows = convergence_sweep(family, &thetas, &grid, a.tol).map_err(err)?;
    let mut out = CsvOut::new(Vec::new(), &["theta", "sigma", "distance", "rescaled_variance"]).map_err(err)?;
    for r in rows {
        out.row(&[fmt_num(r.theta), fmt_num(r.sigma), fmt_num(r.distance), fmt_num(r.rescaled_variance)])
            .map_err(err)?;
    }
    out.finish().map_err(err)
}

fn cmd_transform(a: TransformCmd) -> CliResult<Vec<u8>> {
    let (cfg, model) = load(&a.config)?;
    let d = model.d();
    let t = need(a.t.or(cfg.run.t), "t")?;
    let args = TransformArgs::new(a.s.unwrap_or_else(|| vec![0.0; d]), a.z.unwrap_or_else(|| vec![1.0; d]))
        .map_err(err)?;
    let v = zeta(&model, t, &args, &ode_config()).map_err(err)?;
    let mut out = CsvOut::new(Vec::new(), &["t", "value"]).map_err(err)?;
    out.row(&[fmt_num(t), fmt_num(v)]).map_err(err)?;
    out.finish().map_err(err)
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be a positive integer"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(err)
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let buf = match cli.command {
        Command::Moments(a) => cmd_moments(a)?,
        Command::Compare(a) => cmd_compare(a)?,
        Command::Cross(a) => cmd_cross(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::NearlyUnstable(a) => cmd_nearly_unstable(a)?,
        Command::Transform(a) => cmd_transform(a)?,
    };
    match cli.output {
        Some(path) => fs::write(&path, buf).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&buf).map_err(err),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
