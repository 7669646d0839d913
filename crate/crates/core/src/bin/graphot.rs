use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use graphot::export::{write_flow_csv, FlowReport, GeodesicReport};
use graphot::flow::{euler_heat_flow, euler_porous_flow, jko_flow, JkoOptions};
use graphot::prox::entropy::EntropyKind;
use graphot::validate::{self, Suite, ValidateOptions};
use graphot::{builtins, solve_geodesic, BoundaryPair, Error, MarkovGraph, MeanKind, SolverConfig, TimeGrid};

/// Transport distances, geodesics and entropy flows on reversible Markov graphs.
///
/// Densities are given with respect to the stationary distribution: a file
/// holding a JSON array or whitespace/comma separated numbers, an inline JSON
/// array, `dirac:K` or `uniform`. Logging is controlled by GRAPHOT_LOG.
/// Exit codes: 2 invalid input, 3 no convergence, 1 other failures.
#[derive(Parser)]
#[command(name = "graphot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transport distance between two densities.
    Distance(Common),
    /// Discrete geodesic between two densities.
    Geodesic(Common),
    /// JKO entropy gradient flow from --rho-a.
    Jko(JkoArgs),
    /// Run the validation checks.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum EntropyArg {
    Shannon,
    Renyi,
}

#[derive(Args)]
struct Common {
    /// Graph description in JSON.
    #[arg(long, conflicts_with = "builtin")]
    graph: Option<PathBuf>,
    /// Named graph such as cube, chain(8) or two-node(1,0.5).
    #[arg(long)]
    builtin: Option<String>,
    #[arg(long = "rho-a")]
    rho_a: Option<String>,
    #[arg(long = "rho-b")]
    rho_b: Option<String>,
    /// Number of time intervals.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value = "log")]
    mean: MeanKind,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for the pointwise projections.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct JkoArgs {
    #[command(flatten)]
    common: Common,
    /// JKO time step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = EntropyArg::Shannon)]
    entropy: EntropyArg,
    #[arg(long = "renyi-m", default_value_t = 0.5)]
    renyi_m: f64,
    /// Also run the explicit Euler scheme of the matching equation with the same step.
    #[arg(long)]
    euler: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

enum Failure {
    Input(String),
    NotConverged(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged(_) => Failure::NotConverged(e.to_string()),
            Error::DimensionMismatch { .. }
            | Error::InvalidGraph(_)
            | Error::InvalidDensity(_)
            | Error::Domain(_)
            | Error::InvalidConfig(_)
            | Error::Parse(_)
            | Error::Json(_) => Failure::Input(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRAPHOT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Distance(c) => geodesic(c, true),
        Command::Geodesic(c) => geodesic(c, false),
        Command::Jko(j) => jko(j),
        Command::Validate(v) => run_validate(v),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("graphot: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("graphot: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("graphot: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn set_threads(k: usize) -> Result<bool, Failure> {
    if k == 0 {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| Failure::Other(e.to_string()))?;
    Ok(k > 1)
}

fn solver_config(args: &SolverArgs, mean: MeanKind, parallel: bool) -> Result<SolverConfig, Failure> {
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        sigma: args.sigma.unwrap_or(d.sigma),
        tau: args.tau.unwrap_or(d.tau),
        lambda: args.lambda.unwrap_or(d.lambda),
        tol: args.tol.unwrap_or(d.tol),
        max_iters: args.max_iters.unwrap_or(d.max_iters),
        mean,
        parallel,
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph(c: &Common) -> Result<MarkovGraph, Failure> {
    match (&c.graph, &c.builtin) {
        (Some(path), _) => Ok(MarkovGraph::from_json_file(path).map_err(|e| match e {
            Error::Io(io) => Failure::Input(format!("{}: {io}", path.display())),
            other => other.into(),
        })?),
        (None, Some(name)) => Ok(builtins::by_name(name)?),
        (None, None) => Err(Failure::Input("give --graph PATH or --builtin NAME".into())),
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, Failure> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| Failure::Input(format!("density: {e}")));
    }
    trimmed
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Failure::Input(format!("density entry {s:?}: {e}"))))
        .collect()
}

fn load_density(g: &MarkovGraph, spec: Option<&str>, which: &str) -> Result<Vec<f64>, Failure> {
    let spec = spec.ok_or_else(|| Failure::Input(format!("missing --{which}")))?;
    let rho = if spec == "uniform" {
        g.uniform_density()
    } else if let Some(k) = spec.strip_prefix("dirac:") {
        let x = k.parse::<usize>().map_err(|e| Failure::Input(format!("{spec}: {e}")))?;
        g.dirac(x)?
    } else if spec.trim_start().starts_with('[') {
        parse_numbers(spec)?
    } else {
        let text = std::fs::read_to_string(spec).map_err(|e| Failure::Input(format!("{spec}: {e}")))?;
        parse_numbers(&text)?
    };
    g.validate_density(&rho).map_err(|e| Failure::Input(format!("--{which}: {e}")))?;
    Ok(rho)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn geodesic(c: Common, distance_only: bool) -> Outcome {
    let parallel = set_threads(c.threads)?;
    let g = load_graph(&c)?;
    let cfg = solver_config(&c.solver, c.mean, parallel)?;
    let bc = BoundaryPair::new(&g, load_density(&g, c.rho_a.as_deref(), "rho-a")?, load_density(&g, c.rho_b.as_deref(), "rho-b")?)?;
    let sol = solve_geodesic(&g, TimeGrid::new(c.n)?, &bc, &cfg)?;
    let report = GeodesicReport::new(&g, c.mean, &sol);
    let mut out = output(c.out.as_deref())?;
    if distance_only {
        match c.format {
            Format::Json => {
                let summary = serde_json::json!({
                    "distance": report.distance.is_finite().then_some(report.distance),
                    "clamped_distance": report.clamped_distance,
                    "skipped_entries": report.skipped_entries,
                    "mean": report.mean,
                    "n_intervals": report.n_intervals,
                    "iterations": report.iterations,
                    "converged": report.converged,
                    "ce_residual": report.ce_residual,
                    "min_density": report.min_density,
                    "wall_time_s": report.wall_time_s,
                });
                serde_json::to_writer_pretty(&mut out, &summary).map_err(Error::from)?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "distance,clamped_distance,iterations,converged")?;
                writeln!(out, "{:.16e},{:.16e},{},{}", report.distance, report.clamped_distance, report.iterations, report.converged)?;
            }
        }
    } else {
        match c.format {
            Format::Json => {
                report.to_json(&mut out)?;
                writeln!(out)?;
            }
            Format::Csv => report.to_csv(&mut out)?,
        }
    }
    out.flush()?;
    if !sol.converged {
        return Err(Failure::NotConverged(format!(
            "stopped after {} iterations with stopping value {:.3e}",
            sol.iterations, sol.stopping_value
        )));
    }
    Ok(())
}

fn jko(j: JkoArgs) -> Outcome {
    let c = &j.common;
    let parallel = set_threads(c.threads)?;
    let g = load_graph(c)?;
    let entropy = match j.entropy {
        EntropyArg::Shannon => EntropyKind::Shannon,
        EntropyArg::Renyi => EntropyKind::Renyi { m: j.renyi_m },
    };
    let rho0 = match (&c.rho_a, c.builtin.as_deref()) {
        (None, Some("line5")) => builtins::line5_initial_density(),
        _ => load_density(&g, c.rho_a.as_deref(), "rho-a")?,
    };
    let opts = JkoOptions {
        tau: j.step,
        n_steps: j.steps,
        grid: TimeGrid::new(c.n)?,
        entropy,
        solver: solver_config(&c.solver, c.mean, parallel)?,
        warm_start: true,
    };
    let flow = jko_flow(&g, &rho0, &opts)?;
    let mut reports = vec![FlowReport { scheme: "jko".into(), trajectory: flow.trajectory }];
    if j.euler {
        let euler = match entropy {
            EntropyKind::Shannon => euler_heat_flow(&g, &rho0, j.step, j.steps)?,
            EntropyKind::Renyi { m } => euler_porous_flow(&g, &rho0, j.step, j.steps, m)?,
        };
        reports.push(FlowReport { scheme: "euler".into(), trajectory: euler });
    }
    let mut out = output(c.out.as_deref())?;
    match c.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &reports).map_err(Error::from)?;
            writeln!(out)?;
        }
        Format::Csv => write_flow_csv(&mut out, &reports)?,
    }
    out.flush()?;
    if !flow.completed {
        return Err(Failure::NotConverged(format!(
            "an inner transport problem did not converge; {} of {} steps written",
            reports[0].trajectory.len() - 1,
            j.steps
        )));
    }
    Ok(())
}

fn run_validate(v: ValidateArgs) -> Outcome {
    let parallel = set_threads(v.threads)?;
    let mut opts = ValidateOptions::default();
    if let Some(seed) = v.seed {
        opts.seed = seed;
    }
    opts.solver = solver_config(&v.solver, MeanKind::Logarithmic, parallel)?;
    let results = validate::run(v.suite, &opts)?;
    let mut out = output(v.out.as_deref())?;
    match v.format {
        Some(Format::Json) => {
            serde_json::to_writer_pretty(&mut out, &results).map_err(Error::from)?;
            writeln!(out)?;
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in &results {
                w.serialize(r).map_err(Error::from)?;
            }
            w.flush()?;
        }
        None => {
            for r in &results {
                writeln!(out, "{r}")?;
            }
        }
    }
    out.flush()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Other(format!("{failed} of {} checks failed", results.len())));
    }
    Ok(())
}
