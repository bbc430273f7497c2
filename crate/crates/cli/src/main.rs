//! Command-line front end for the approximation pipeline.
//!
//! Exit codes: 0 success, 1 domain/convexity/argument errors, 2 IO and
//! schema errors, 3 reference-table deviation (`table1` only).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pwlopt::balancer::{balance_from, BalanceSettings, Partition};
use pwlopt::bounds::error_bounds;
use pwlopt::error::Error;
use pwlopt::files::{
    ApproxFile, FunctionSource, FunctionSpec, NetworkFile, RunSettings, APPROX_SCHEMA,
};
use pwlopt::functions::{builtin, validate_convexity, Convexity, Interval, TargetFunction};
use pwlopt::relu::{build_fixed_depth, build_fixed_width, verify_equivalence};

/// Grid used for convexity validation before a run.
const CONVEXITY_GRID: usize = 1024;

/// Published reference results reproduced by `table1`:
/// (function, n, mean error, upper bound, lower bound).
const REFERENCE: [(&str, usize, f64, f64, f64); 12] = [
    ("exp", 2, 0.02635, 0.04247, 0.01563),
    ("exp", 3, 0.01170, 0.01886, 0.00694),
    ("exp", 5, 0.00421, 0.00680, 0.00250),
    ("exp", 10, 0.00105, 0.00171, 0.00063),
    ("square", 2, 0.125, 0.125, 0.125),
    ("square", 3, 0.05556, 0.05556, 0.05556),
    ("square", 5, 0.02000, 0.02000, 0.02000),
    ("square", 10, 0.00500, 0.00500, 0.00500),
    ("cube", 2, 0.04486, 0.09375, 0.0),
    ("cube", 3, 0.01946, 0.04167, 0.0),
    ("cube", 5, 0.00687, 0.01500, 0.0),
    ("cube", 10, 0.00169, 0.00375, 0.0),
];

/// Tolerance on the mean-error columns of `table1`.
const TABLE_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "pwlopt",
    version,
    about = "Optimal piecewise-linear approximation of convex functions, compiled to ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal n-segment approximation and write it to a file
    Approx(ApproxArgs),
    /// Print closed-form error bounds for a function and segment count
    Bounds(BoundsArgs),
    /// Compile an approximation file into explicit ReLU network weights
    BuildNet(BuildNetArgs),
    /// Evaluate a network file at a point or over a grid
    EvalNet(EvalNetArgs),
    /// Re-run the twelve reference experiments and check the mean errors
    Table1,
    /// Emit plot-ready CSV data for an approximation file
    PlotData(PlotDataArgs),
}

#[derive(Args)]
struct FunctionArgs {
    /// Built-in target function: exp, square, or cube
    #[arg(long, conflicts_with = "expr")]
    builtin: Option<String>,

    /// Expression in x, e.g. "exp(x) + x^2" (requires --domain)
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,

    /// Approximation interval; optional for built-ins, which have defaults
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    domain: Option<Vec<f64>>,

    /// Accept f'' = 0 at the domain endpoints (e.g. x^3 on [0, 1])
    #[arg(long)]
    relaxed_convexity: bool,
}

impl FunctionArgs {
    fn resolve(&self) -> Result<(TargetFunction, FunctionSpec), Error> {
        let domain = match &self.domain {
            Some(bounds) => Some(Interval::new(bounds[0], bounds[1])?),
            None => None,
        };
        let (f, source) = match (&self.builtin, &self.expr) {
            (Some(name), None) => {
                let mut f = builtin(name)?;
                if let Some(d) = domain {
                    f = f.with_domain(d);
                }
                (f, FunctionSource::Builtin(name.clone()))
            }
            (None, Some(src)) => {
                let d = domain.ok_or_else(|| {
                    Error::InvalidArgument("--expr requires --domain LO HI".into())
                })?;
                (
                    TargetFunction::from_expression(src, d)?,
                    FunctionSource::Expression(src.clone()),
                )
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "exactly one of --builtin or --expr is required".into(),
                ))
            }
        };
        let mode = if self.relaxed_convexity {
            Convexity::BoundaryRelaxed
        } else {
            Convexity::Strict
        };
        validate_convexity(&f, CONVEXITY_GRID, mode)?;
        let spec = FunctionSpec {
            source,
            domain: f.domain(),
            relaxed_convexity: self.relaxed_convexity,
        };
        Ok((f, spec))
    }
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    function: FunctionArgs,

    /// Number of linear segments
    #[arg(long)]
    n: usize,

    /// Breakpoint move granularity
    #[arg(long, default_value_t = 1e-5)]
    stepsize: f64,

    /// Safety cap on balancing rounds
    #[arg(long, default_value_t = 200_000)]
    max_rounds: usize,

    /// Abscissa tolerance for the per-segment root finds
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    /// Start from a seeded random partition instead of the uniform one
    #[arg(long)]
    seed: Option<u64>,

    /// Output path for the approximation file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    function: FunctionArgs,

    /// Number of linear segments
    #[arg(long)]
    n: usize,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ArchChoice {
    FixedDepth,
    FixedWidth,
}

#[derive(Args)]
struct BuildNetArgs {
    /// Approximation file produced by `approx`
    #[arg(long)]
    approx: PathBuf,

    /// Network layout
    #[arg(long, value_enum)]
    arch: ArchChoice,

    /// Output path for the network file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalNetArgs {
    /// Network file produced by `build-net`
    #[arg(long)]
    net: PathBuf,

    /// Evaluate at a single point
    #[arg(long, conflicts_with = "grid", allow_negative_numbers = true)]
    x: Option<f64>,

    /// Evaluate on this many uniform points over the network domain
    #[arg(long)]
    grid: Option<usize>,

    /// Write CSV here instead of printing rows
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotDataArgs {
    /// Approximation file produced by `approx`
    #[arg(long)]
    approx: PathBuf,

    /// Number of sample points (at least 2)
    #[arg(long)]
    grid: usize,

    /// Output CSV path
    #[arg(long)]
    csv: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Json(_) | Error::Schema(_) => 2,
        _ => 1,
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Approx(args) => cmd_approx(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::BuildNet(args) => cmd_build_net(args),
        Command::EvalNet(args) => cmd_eval_net(args),
        Command::Table1 => cmd_table1(),
        Command::PlotData(args) => cmd_plot_data(args),
    }
}

fn cmd_approx(args: ApproxArgs) -> Result<ExitCode, Error> {
    let (f, spec) = args.function.resolve()?;
    let settings = BalanceSettings {
        stepsize: args.stepsize,
        max_rounds: args.max_rounds,
        fit_tol: args.tol,
    };
    let partition = match args.seed {
        Some(seed) => Partition::random(f.domain(), args.n, seed)?,
        None => Partition::uniform(f.domain(), args.n)?,
    };
    let (pwl, report) = balance_from(&f, partition, &settings)?;
    let bounds = error_bounds(&f, args.n)?;
    let gap = report.per_round_gap.last().copied().unwrap_or(0.0);
    let file = ApproxFile {
        schema: APPROX_SCHEMA.to_owned(),
        function: spec,
        settings: RunSettings {
            n: args.n,
            stepsize: args.stepsize,
            max_rounds: args.max_rounds,
            tol: args.tol,
            seed: args.seed,
        },
        approximation: pwl,
        report,
        bounds,
    };
    file.save(&args.out)?;
    println!(
        "mean_error={:.5} gap={:.4e} rounds={} converged={} bounds=[{:.5}, {:.5}] sew_gap={:.2e} wrote {}",
        file.report.mean_error,
        gap,
        file.report.rounds,
        file.report.converged,
        file.bounds.lower,
        file.bounds.upper,
        file.approximation.max_sew_gap(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode, Error> {
    let (f, _) = args.function.resolve()?;
    let b = error_bounds(&f, args.n)?;
    println!(
        "n={} lower={:.6} upper={:.6} f2_min={:.6} f2_max={:.6}",
        b.n, b.lower, b.upper, b.f2_min, b.f2_max
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_build_net(args: BuildNetArgs) -> Result<ExitCode, Error> {
    let approx = ApproxFile::load(&args.approx)?;
    let net = match args.arch {
        ArchChoice::FixedDepth => build_fixed_depth(&approx.approximation)?,
        ArchChoice::FixedWidth => build_fixed_width(&approx.approximation)?,
    };
    let residual = verify_equivalence(&net, &approx.approximation, 10_000);
    let file = NetworkFile::new(net, Some(approx.function.clone()));
    file.save(&args.out)?;
    let net = &file.network;
    println!(
        "architecture={} hidden={} max_width={} depth={}+2 residual={:.2e} wrote {}",
        net.architecture,
        net.hidden_neuron_count(),
        net.max_hidden_width(),
        net.hidden_layer_count(),
        residual,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_net(args: EvalNetArgs) -> Result<ExitCode, Error> {
    let file = NetworkFile::load(&args.net)?;
    let net = &file.network;
    let domain = net.meta.domain;
    let f = file
        .function
        .as_ref()
        .map(FunctionSpec::resolve)
        .transpose()?;

    let points: Vec<f64> = match (args.x, args.grid) {
        (Some(x), None) => vec![x],
        (None, Some(grid)) => {
            if grid < 2 {
                return Err(Error::InvalidArgument(
                    "--grid needs at least 2 points".into(),
                ));
            }
            domain.grid(grid).collect()
        }
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --x or --grid is required".into(),
            ))
        }
    };

    let mut out = String::new();
    let header = if f.is_some() {
        "x,net,f,residual,note"
    } else {
        "x,net,note"
    };
    writeln!(out, "{header}").expect("string write");
    for &x in &points {
        let y = net.forward(x);
        let note = if domain.contains(x) {
            ""
        } else {
            "outside-domain"
        };
        match &f {
            Some(f) => {
                let fx = f.eval(x);
                writeln!(out, "{x},{y},{fx},{},{note}", fx - y).expect("string write");
            }
            None => writeln!(out, "{x},{y},{note}").expect("string write"),
        }
    }

    match &args.csv {
        Some(path) => {
            fs::write(path, &out)?;
            println!("wrote {} rows to {}", points.len(), path.display());
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_table1() -> Result<ExitCode, Error> {
    struct Row {
        name: &'static str,
        n: usize,
        expected_mean: f64,
        mean: f64,
        upper: f64,
        lower: f64,
        gap: f64,
        rounds: usize,
        seconds: f64,
    }

    // The twelve runs are independent; run them concurrently and assemble
    // the table in the fixed reference order.
    let rows: Vec<(&str, usize, Result<Row, Error>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = REFERENCE
            .iter()
            .map(|&(name, n, expected_mean, _, _)| {
                let cell = scope.spawn(move || {
                    let f = builtin(name)?;
                    let mode = if name == "cube" {
                        Convexity::BoundaryRelaxed
                    } else {
                        Convexity::Strict
                    };
                    validate_convexity(&f, CONVEXITY_GRID, mode)?;
                    let start = Instant::now();
                    let settings = BalanceSettings::default();
                    let partition = Partition::uniform(f.domain(), n)?;
                    let (_, report) = balance_from(&f, partition, &settings)?;
                    let bounds = error_bounds(&f, n)?;
                    Ok(Row {
                        name,
                        n,
                        expected_mean,
                        mean: report.mean_error,
                        upper: bounds.upper,
                        lower: bounds.lower,
                        gap: report.per_round_gap.last().copied().unwrap_or(0.0),
                        rounds: report.rounds,
                        seconds: start.elapsed().as_secs_f64(),
                    })
                });
                (name, n, cell)
            })
            .collect();
        handles
            .into_iter()
            .map(|(name, n, h)| (name, n, h.join().expect("no panic")))
            .collect()
    });

    println!(
        "{:<8} {:>3} {:>12} {:>12} {:>12} {:>12} {:>8} {:>10}",
        "function", "n", "mean_error", "upper", "lower", "gap", "rounds", "time_s"
    );
    let mut deviations = Vec::new();
    for (name, n, row) in rows {
        let row = row.map_err(|e| {
            eprintln!("table cell {name} n={n} failed: {e}");
            e
        })?;
        println!(
            "{:<8} {:>3} {:>12.5} {:>12.5} {:>12.5} {:>12.4e} {:>8} {:>10.4}",
            row.name, row.n, row.mean, row.upper, row.lower, row.gap, row.rounds, row.seconds
        );
        let dev = (row.mean - row.expected_mean).abs();
        if dev > TABLE_TOLERANCE {
            deviations.push(format!(
                "{} n={}: mean {:.6} deviates from {:.5} by {dev:.2e}",
                row.name, row.n, row.mean, row.expected_mean
            ));
        }
    }
    if deviations.is_empty() {
        println!("all 12 mean errors within {TABLE_TOLERANCE:.0e} of the reference values");
        Ok(ExitCode::SUCCESS)
    } else {
        for d in &deviations {
            eprintln!("deviation: {d}");
        }
        Ok(ExitCode::from(3))
    }
}

fn cmd_plot_data(args: PlotDataArgs) -> Result<ExitCode, Error> {
    if args.grid < 2 {
        return Err(Error::InvalidArgument(
            "--grid needs at least 2 points".into(),
        ));
    }
    let approx = ApproxFile::load(&args.approx)?;
    let f = approx.function.resolve()?;
    let pwl = &approx.approximation;

    let mut out = String::new();
    writeln!(out, "x,f,pwl,residual").expect("string write");
    for x in pwl.domain().grid(args.grid) {
        let fx = f.eval(x);
        let px = pwl.evaluate(x);
        writeln!(out, "{x},{fx},{px},{}", fx - px).expect("string write");
    }
    writeln!(out).expect("string write");
    writeln!(out, "breakpoint,node_value").expect("string write");
    for (x, v) in pwl.breakpoints().iter().zip(pwl.node_values()) {
        writeln!(out, "{x},{v}").expect("string write");
    }
    fs::write(&args.csv, &out)?;
    println!(
        "wrote {} samples and {} breakpoints to {}",
        args.grid,
        pwl.breakpoints().len(),
        args.csv.display()
    );
    Ok(ExitCode::SUCCESS)
}
