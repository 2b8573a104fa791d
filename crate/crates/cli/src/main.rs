use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cans::bench::{bench_csv, run_bench, BenchConfig, BenchMethod, BoundsMode};
use cans::engine::{orthogonality_error, orthogonalize, set_parallel, NormalizationMethod, OrthoConfig};
use cans::io::{read_matrix, trace_csv, write_matrix};
use cans::minimax::{best_cubic, best_odd, remez, MinimaxResult, RemezOptions};
use cans::schedule::verify::{parse_coefficient_file, verify_composition, DEFAULT_GRID};
use cans::schedule::{
    backchained_schedule, cans_schedule, cans_schedule_to_target, delta_design, max_derivative_poly, terms_for_degree,
    Schedule, ScheduleEntry, DELTA_DESIGN_TOL,
};
use cans::stiefel::{polar_retract_report, project_tangent, StiefelPoint};
use cans::Error;

#[derive(Parser)]
#[command(name = "cans", version, about = "Chebyshev-optimized Newton-Schulz polynomials and orthogonalization")]
struct Cli {
    /// Multiply row tiles in parallel (same results, more threads).
    #[arg(long, global = true)]
    parallel: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Best odd polynomial approximating 1 on [a, b].
    Remez(RemezArgs),
    /// Build an iteration schedule.
    Schedule(ScheduleArgs),
    /// Orthogonalize a matrix file.
    Orthogonalize(OrthogonalizeArgs),
    /// Convergence benchmark on a seeded Gaussian matrix.
    Bench(BenchArgs),
    /// Check that a composition keeps [a*, right] inside [1-delta, 1+delta].
    Verify(VerifyArgs),
    /// Approximate polar retraction on the Stiefel manifold.
    Retract(RetractArgs),
}

#[derive(Args)]
struct RemezArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    /// Odd degree 1..=15.
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleMode {
    Exact,
    Delta,
    Maxderiv,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_enum)]
    mode: ScheduleMode,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated odd degrees, innermost first.
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<usize>,
    /// Stage count for maxderiv.
    #[arg(long)]
    iters: Option<usize>,
    /// Exact mode: one degree repeated until epsilon <= target.
    #[arg(long)]
    target: Option<f64>,
    /// Delta mode: right end of the design domain (default 1 + delta).
    #[arg(long)]
    right: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OrthogonalizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Schedule JSON produced by `cans schedule`.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Lower bound of the normalized spectrum.
    #[arg(long)]
    a_hint: Option<f64>,
    /// Run a delta-orthogonalization design first.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "5,5,5,5")]
    delta_degrees: Vec<usize>,
    /// frobenius, spectral, gelfand or gelfand:K.
    #[arg(long, default_value = "gelfand:2")]
    normalization: String,
    #[arg(long, default_value_t = 1e-6)]
    target: f64,
    /// Record the spectral error with the oracle SVD.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated subset of ns, cans3, cans5, delta-preproc.
    #[arg(long, value_delimiter = ',', default_value = "ns,cans3")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1e-6)]
    target: f64,
    /// Used unless bounds are exact.
    #[arg(long, default_value = "gelfand:2")]
    normalization: String,
    /// exact, overestimate:A0 or underestimate:A0.
    #[arg(long, default_value = "exact")]
    bounds: String,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Skip the oracle SVD; stop on the Frobenius error instead.
    #[arg(long)]
    no_oracle: bool,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    #[arg(long, value_delimiter = ',', default_value = "5,5,5,5")]
    delta_degrees: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Schedule JSON, {"coeffs": [[..]], "delta", "right"}, or [[..], ..].
    #[arg(long)]
    coeffs: PathBuf,
    /// Defaults to the file's delta.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Right end of the checked domain (default: the file's, else 1 + delta).
    #[arg(long)]
    right: Option<f64>,
}

#[derive(Args)]
struct RetractArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    xi: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    s: usize,
    #[arg(long)]
    output: PathBuf,
}

/// `Usage` exits with status 2, `Numeric` with 1.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInterval { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidPolynomial(_)
            | Error::Parse(_)
            | Error::Dimension(_)
            | Error::UnknownInterval
            | Error::Io(_)
            | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Pretty JSON; `Value` maps keep their keys sorted.
fn emit(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_remez(args: RemezArgs) -> CmdResult {
    if !(args.a > 0.0 && args.a.is_finite()) {
        return Err(usage("a must be positive"));
    }
    if !(args.b >= args.a && args.b.is_finite()) {
        return Err(usage("b must be finite and at least a"));
    }
    if args.degree.is_multiple_of(2) || args.degree > 15 {
        return Err(usage("degree must be odd and at most 15"));
    }
    let terms = args.degree.div_ceil(2);
    let result: MinimaxResult = if terms <= 2 || args.a == args.b {
        if terms == 2 {
            best_cubic(args.a, args.b)?
        } else {
            best_odd(args.a, args.b, terms)?
        }
    } else {
        remez(args.a, args.b, terms, RemezOptions { tol: args.tol, max_iter: args.max_iter })?
    };
    print!("{}", emit(&serde_json::to_value(&result).expect("serializable")));
    Ok(ExitCode::SUCCESS)
}

fn schedule_json(schedule: &Schedule, grid: usize, extra: Value) -> Result<Value, Failure> {
    let mut value = serde_json::to_value(schedule).expect("serializable");
    let ranges = schedule.stage_ranges(grid)?;
    let stages: Vec<Value> = schedule
        .entries()
        .iter()
        .zip(&ranges)
        .map(|(e, (lo, hi))| {
            json!({
                "min": lo,
                "max": hi,
                "contained": *lo >= e.post_interval.0 - 1e-9 && *hi <= e.post_interval.1 + 1e-9,
            })
        })
        .collect();
    let contained = stages.iter().all(|s| s["contained"] == Value::Bool(true));
    value["certificate"] = json!({ "grid": grid, "stages": stages, "contained": contained });
    if let (Value::Object(map), Value::Object(more)) = (&mut value, extra) {
        map.extend(more);
    }
    Ok(value)
}

fn cmd_schedule(args: ScheduleArgs) -> CmdResult {
    if args.grid < 2 {
        return Err(usage("grid must be at least 2"));
    }
    let need_delta = || args.delta.ok_or_else(|| usage("--delta is required for this mode"));
    let (schedule, extra) = match args.mode {
        ScheduleMode::Exact => {
            let a = args.a.ok_or_else(|| usage("--a is required for exact mode"))?;
            let b = args.b.unwrap_or(1.0);
            let schedule = match (args.target, args.degrees.as_slice()) {
                (Some(target), [degree]) => cans_schedule_to_target(a, b, *degree, target, 200)?,
                (Some(_), _) => return Err(usage("--target takes exactly one degree")),
                (None, []) => return Err(usage("--degrees is required")),
                (None, degrees) => cans_schedule(a, b, degrees)?,
            };
            (schedule, json!({ "mode": "exact" }))
        }
        ScheduleMode::Delta => {
            let delta = need_delta()?;
            if args.degrees.is_empty() {
                return Err(usage("--degrees is required"));
            }
            let design = delta_design(delta, &args.degrees, args.right, DELTA_DESIGN_TOL)?;
            let extra = json!({
                "mode": "delta",
                "a_reach": design.a_reach,
                "right": design.right,
                "residual": design.residual,
            });
            (design.schedule, extra)
        }
        ScheduleMode::Maxderiv => {
            let delta = need_delta()?;
            let [degree] = args.degrees.as_slice() else {
                return Err(usage("maxderiv takes exactly one degree"));
            };
            let terms = terms_for_degree(*degree)?;
            let iters = args.iters.unwrap_or(1);
            if iters == 0 {
                return Err(usage("--iters must be positive"));
            }
            if iters == 1 {
                let q = max_derivative_poly(terms, delta)?;
                let extra = json!({ "mode": "maxderiv", "left": q.a, "right": q.b });
                (Schedule::new(vec![ScheduleEntry::from(q)], Some(delta))?, extra)
            } else {
                let bc = backchained_schedule(terms, iters, delta)?;
                let extra = json!({
                    "mode": "maxderiv",
                    "left": bc.left,
                    "right": 1.0 + delta,
                    "half_widths": bc.half_widths,
                });
                (bc.schedule()?, extra)
            }
        }
    };
    let mut value = schedule_json(&schedule, args.grid, extra)?;
    value["derivative_at_zero"] = json!(schedule.composition().derivative_at_zero());
    value["final_epsilon"] = json!(schedule.final_epsilon());
    write_or_print(args.out.as_deref(), &emit(&value))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_normalization(s: &str) -> Result<NormalizationMethod, Failure> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn cmd_orthogonalize(args: OrthogonalizeArgs) -> CmdResult {
    if args.schedule.is_none() && args.delta.is_none() && args.a_hint.is_none() {
        return Err(usage("the spectrum interval is unknown: pass --schedule, --delta or --a-hint"));
    }
    let normalization = parse_normalization(&args.normalization)?;
    let a = read_matrix(&args.input)?;
    let schedule = match &args.schedule {
        Some(path) => Some(serde_json::from_str::<Schedule>(&read_text(path)?).map_err(Error::from)?),
        None => None,
    };
    let delta_preprocess = match args.delta {
        Some(d) => Some(delta_design(d, &args.delta_degrees, Some(1.0), DELTA_DESIGN_TOL)?),
        None => None,
    };
    let config = OrthoConfig {
        a_hint: args.a_hint,
        schedule,
        delta_preprocess,
        normalization,
        target_eps: args.target,
        use_oracle: args.oracle,
        ..OrthoConfig::default()
    };
    let (q, trace) = orthogonalize(&a, &config)?;
    write_matrix(&args.output, &q)?;
    if let Some(path) = &args.trace_out {
        fs::write(path, trace_csv(&trace)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let last = trace.last().expect("trace has the initial record");
    let report = json!({
        "diverged": trace.diverged,
        "iterations": last.iter,
        "matmuls": last.matmuls,
        "fro_err": last.fro_err,
        "spec_err": last.spec_err,
    });
    print!("{}", emit(&report));
    if trace.diverged {
        eprintln!("error: iteration diverged (||Q^T Q - I||_F = {:e})", last.fro_err);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<BenchMethod>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(e.to_string()))?;
    let bounds: BoundsMode = args.bounds.parse().map_err(|e: Error| usage(e.to_string()))?;
    let config = BenchConfig {
        n: args.n,
        seed: args.seed,
        methods,
        target_eps: args.target,
        normalization: parse_normalization(&args.normalization)?,
        bounds,
        max_iters: args.max_iters,
        spectral: !args.no_oracle,
        delta: args.delta,
        delta_degrees: args.delta_degrees,
    };
    let runs = run_bench(&config)?;
    write_or_print(args.out.as_deref(), &bench_csv(&runs))?;
    for run in &runs {
        match run.iterations_to_target(config.target_eps) {
            Some(it) => log::info!("{}: target reached at iteration {it}", run.method),
            None => eprintln!(
                "warning: {} did not reach {:e} in {} iterations",
                run.method, config.target_eps, config.max_iters
            ),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let set = parse_coefficient_file(&read_text(&args.coeffs)?)?;
    let delta = args.delta.or(set.delta).ok_or_else(|| usage("--delta is required (the file has none)"))?;
    let right = args.right.or(set.right).unwrap_or(1.0 + delta);
    let report = verify_composition(&set.composition, delta, right, args.grid)?;
    let mut value = serde_json::to_value(&report).expect("serializable");
    if let Some(name) = set.name {
        value["name"] = json!(name);
    }
    print!("{}", emit(&value));
    Ok(if report.contained { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_retract(args: RetractArgs) -> CmdResult {
    if !args.alpha.is_finite() {
        return Err(usage("alpha must be finite"));
    }
    let x = read_matrix(&args.x)?;
    let xi = read_matrix(&args.xi)?;
    if x.shape() != xi.shape() {
        return Err(usage(format!("x is {}x{} but xi is {}x{}", x.rows(), x.cols(), xi.rows(), xi.cols())));
    }
    let point = match StiefelPoint::new(x) {
        Ok(p) => p,
        Err(e @ Error::InvalidArgument(_)) => return Err(Failure::Numeric(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let v = project_tangent(&point, &xi)?.scale(args.alpha);
    let r = polar_retract_report(&point, &v, args.s)?;
    let (residual, _) = orthogonality_error(r.point.matrix(), false)?;
    write_matrix(&args.output, r.point.matrix())?;
    let e = r.epsilon;
    print!(
        "{}",
        emit(&json!({
            "residual": residual,
            "sigma1_bound": r.sigma1_bound,
            "epsilon": e,
            "spectral_bound": 2.0 * e + e * e,
        }))
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    set_parallel(cli.parallel);
    let result = match cli.command {
        Command::Remez(a) => cmd_remez(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Orthogonalize(a) => cmd_orthogonalize(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Retract(a) => cmd_retract(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
