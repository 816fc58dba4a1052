//! Command-line front end.
//!
//! [`run`] takes argv-style arguments and returns the exit status together
//! with everything destined for standard output and standard error, so the
//! binary is a thin wrapper and the command surface is testable in-process.
//!
//! Exit statuses: 0 success, 2 bad input, 3 a mathematical precondition
//! failed (seed not a solution, boundary hypothesis violated, no closed
//! form), 4 numeric failure (quadrature non-convergence, non-finite or
//! undefined values).

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::expr::{parse, parse_rational, render, render_rational, Expr, ExprError, Rational};
use crate::numeric::{
    solution_with_fallback, verify_on_grid, Grid, NumericError, VerificationReport,
    DEFAULT_FD_STEP, DEFAULT_QUAD_TOL,
};
use crate::tricomi::{
    boundary_slope, construct_solution, construct_solution_unchecked, derivation_trace,
    dirichlet_solution, first_order_residuals, iterate_solutions, iterate_solutions_unchecked,
    neumann_check, neumann_datum, SolutionRecord, TricomiError, TricomiProblem,
};

/// Environment variable consulted for `--quad-tol` when the flag is absent.
pub const QUAD_TOL_ENV: &str = "TRICOMI_FORGE_QUAD_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "tricomi-forge",
    version,
    about = "Construct and verify exact solutions of f_xx + a(x) f_yy = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a new solution from the seed t
    Construct {
        #[command(flatten)]
        common: Common,
        /// Skip the check that t solves the equation
        #[arg(long)]
        unchecked: bool,
    },
    /// Apply the construction n times starting from the seed t
    Iterate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(long)]
        unchecked: bool,
    },
    /// Show the intermediate functions u, g, h of the derivation
    Trace {
        #[command(flatten)]
        common: Common,
    },
    /// Measure the residual of the constructed solution on a grid
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        y_max: f64,
        #[arg(long, default_value_t = 21)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
        /// Finite-difference step, used when no closed form exists
        #[arg(long, default_value_t = DEFAULT_FD_STEP)]
        fd_step: f64,
        /// Quadrature tolerance, used when no closed form exists
        #[arg(long, env = QUAD_TOL_ENV, default_value_t = DEFAULT_QUAD_TOL)]
        quad_tol: f64,
        #[arg(long)]
        unchecked: bool,
    },
    /// Dirichlet and Neumann data of the solution built from t
    Bvp {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Coefficient a(x)
    #[arg(long = "a", value_name = "EXPR", allow_hyphen_values = true)]
    coeff_a: String,
    /// Seed solution t(x, y)
    #[arg(long = "t", value_name = "EXPR", allow_hyphen_values = true)]
    seed_t: String,
    /// Lower x bound of integration
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    base_x: String,
    /// Lower y bound of integration
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    base_y: String,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Write the result here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Csv,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
    residual: Option<String>,
    boundary_slope: Option<String>,
}

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        let (code, kind) = match e {
            ExprError::EvalDomain { .. } => (EXIT_NUMERIC, "eval_domain"),
            ExprError::IllegalBound { .. } => (EXIT_INPUT, "illegal_bound"),
            ExprError::Syntax { .. } => (EXIT_INPUT, "syntax"),
            ExprError::UnknownIdentifier { .. } => (EXIT_INPUT, "unknown_identifier"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
            residual: None,
            boundary_slope: None,
        }
    }
}

impl From<TricomiError> for Failure {
    fn from(e: TricomiError) -> Self {
        let message = e.to_string();
        let mut boundary_slope = None;
        let (code, kind, residual) = match e.root() {
            TricomiError::CoefficientDependsOnY { .. } => {
                (EXIT_INPUT, "coefficient_depends_on_y", None)
            }
            TricomiError::EmptyIteration => (EXIT_INPUT, "empty_iteration", None),
            TricomiError::Expr(inner) => {
                return Failure {
                    message,
                    ..Failure::from(inner.clone())
                }
            }
            TricomiError::SeedNotASolution { residual } => (
                EXIT_PRECONDITION,
                "seed_not_a_solution",
                Some(render(residual)),
            ),
            TricomiError::BoundaryHypothesisViolated {
                boundary_slope: slope,
            } => {
                boundary_slope = Some(render(slope));
                (EXIT_PRECONDITION, "boundary_hypothesis_violated", None)
            }
            TricomiError::NotSymbolicallyIntegrable { .. } => {
                (EXIT_PRECONDITION, "not_symbolically_integrable", None)
            }
            TricomiError::ClosureFailed { residual } => {
                (EXIT_PRECONDITION, "closure_failed", Some(render(residual)))
            }
            TricomiError::TraceInconsistent(_) => (EXIT_PRECONDITION, "trace_inconsistent", None),
            TricomiError::AtDepth { .. } => unreachable!("root strips depth"),
        };
        Failure {
            code,
            kind,
            message,
            residual,
            boundary_slope,
        }
    }
}

fn numeric_root(e: &NumericError) -> &NumericError {
    match e {
        NumericError::Integral { source, .. } | NumericError::AtPoint { source, .. } => {
            numeric_root(source)
        }
        other => other,
    }
}

impl From<NumericError> for Failure {
    fn from(e: NumericError) -> Self {
        let message = e.to_string();
        let (code, kind) = match numeric_root(&e) {
            NumericError::Construction(inner) => {
                return Failure {
                    message,
                    ..Failure::from(inner.clone())
                }
            }
            NumericError::Eval(inner) => {
                return Failure {
                    message,
                    ..Failure::from(inner.clone())
                }
            }
            NumericError::MaxDepthExceeded { .. } => (EXIT_NUMERIC, "max_depth_exceeded"),
            NumericError::NonFinite { .. } => (EXIT_NUMERIC, "non_finite"),
            NumericError::InvalidTolerance(_) => (EXIT_INPUT, "invalid_tolerance"),
            NumericError::InvalidGrid(_) => (EXIT_INPUT, "invalid_grid"),
            NumericError::InvalidStep(_) => (EXIT_INPUT, "invalid_step"),
            NumericError::Integral { .. } | NumericError::AtPoint { .. } => unreachable!(),
        };
        Failure {
            code,
            kind,
            message,
            residual: None,
            boundary_slope: None,
        }
    }
}

fn input_failure(kind: &'static str, message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        kind,
        message,
        residual: None,
        boundary_slope: None,
    }
}

#[derive(Serialize)]
struct ProblemJson {
    a: String,
    base_x: String,
    base_y: String,
}

impl ProblemJson {
    fn new(p: &TricomiProblem) -> Self {
        ProblemJson {
            a: render(p.coeff_a()),
            base_x: render_rational(p.base_x()),
            base_y: render_rational(p.base_y()),
        }
    }
}

/// Serialized form of a [`SolutionRecord`].
#[derive(Serialize)]
pub struct RecordJson {
    problem: ProblemJson,
    seed: String,
    depth: usize,
    path: &'static str,
    f: String,
    residual: String,
}

impl RecordJson {
    pub fn new(r: &SolutionRecord) -> Self {
        RecordJson {
            problem: ProblemJson::new(&r.problem),
            seed: render(&r.seed),
            depth: r.depth,
            path: r.path.as_str(),
            f: render(&r.f),
            residual: render(&r.residual()),
        }
    }
}

#[derive(Serialize)]
struct TraceJson {
    problem: ProblemJson,
    t: String,
    u: String,
    g: String,
    h: String,
    f: String,
    first_order_residuals: [String; 2],
}

#[derive(Serialize)]
struct BvpJson {
    problem: ProblemJson,
    seed: String,
    f: String,
    dirichlet_value: String,
    neumann_datum: String,
    neumann_residual: String,
}

#[derive(Serialize)]
struct GridJson {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
}

#[derive(Serialize)]
struct WorstJson {
    x: f64,
    y: f64,
    residual: f64,
}

#[derive(Serialize)]
struct ReportJson {
    grid: GridJson,
    method: &'static str,
    symbolic_zero: bool,
    max_abs_residual: f64,
    mean_abs_residual: f64,
    worst_point: WorstJson,
}

impl ReportJson {
    fn new(r: &VerificationReport) -> Self {
        let g = r.grid;
        ReportJson {
            grid: GridJson {
                x_min: g.x_min,
                x_max: g.x_max,
                y_min: g.y_min,
                y_max: g.y_max,
                nx: g.nx,
                ny: g.ny,
            },
            method: r.method.as_str(),
            symbolic_zero: r.symbolic_zero,
            max_abs_residual: r.max_abs_residual,
            mean_abs_residual: r.mean_abs_residual,
            worst_point: WorstJson {
                x: r.worst_point.0,
                y: r.worst_point.1,
                residual: r.worst_point.2,
            },
        }
    }
}

#[derive(Serialize)]
struct VerifyJson {
    problem: ProblemJson,
    seed: String,
    path: &'static str,
    f: Option<String>,
    report: ReportJson,
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: i32,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_slope: Option<&'a str>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn records_csv(records: &[SolutionRecord]) -> String {
    let mut out = String::from("depth,path,seed,f,residual\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.depth,
            r.path.as_str(),
            csv_field(&render(&r.seed)),
            csv_field(&render(&r.f)),
            csv_field(&render(&r.residual()))
        );
    }
    out
}

fn named_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("name,expr\n");
    for (name, value) in rows {
        let _ = writeln!(out, "{},{}", name, csv_field(value));
    }
    out
}

fn problem_from(common: &Common) -> Result<(TricomiProblem, Expr), Failure> {
    let coeff_a = parse(&common.coeff_a).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            message: format!("--a: {}", f.message),
            ..f
        }
    })?;
    let seed = parse(&common.seed_t).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            message: format!("--t: {}", f.message),
            ..f
        }
    })?;
    let rational = |flag: &str, text: &str| -> Result<Rational, Failure> {
        parse_rational(text)
            .map_err(|e| input_failure("invalid_base_point", format!("{flag}: {e}")))
    };
    let base_x = rational("--base-x", &common.base_x)?;
    let base_y = rational("--base-y", &common.base_y)?;
    let problem = TricomiProblem::new(coeff_a, base_x, base_y)?;
    Ok((problem, seed))
}

fn execute(command: &Command) -> Result<String, Failure> {
    match command {
        Command::Construct { common, unchecked } => {
            let (problem, t) = problem_from(common)?;
            let record = if *unchecked {
                construct_solution_unchecked(&problem, &t, 1)?
            } else {
                construct_solution(&problem, &t)?
            };
            Ok(match common.output {
                Output::Text => format!("f(x,y) = {}\n", render(&record.f)),
                Output::Json => to_json(&RecordJson::new(&record)),
                Output::Csv => records_csv(std::slice::from_ref(&record)),
            })
        }
        Command::Iterate {
            common,
            n,
            unchecked,
        } => {
            let (problem, t) = problem_from(common)?;
            let records = if *unchecked {
                iterate_solutions_unchecked(&problem, &t, *n as usize)?
            } else {
                iterate_solutions(&problem, &t, *n as usize)?
            };
            Ok(match common.output {
                Output::Text => records
                    .iter()
                    .map(|r| format!("f_{}(x,y) = {}\n", r.depth, render(&r.f)))
                    .collect(),
                Output::Json => to_json(&records.iter().map(RecordJson::new).collect::<Vec<_>>()),
                Output::Csv => records_csv(&records),
            })
        }
        Command::Trace { common } => {
            let (problem, t) = problem_from(common)?;
            let trace = derivation_trace(&problem, &t)?;
            let (r1, r2) = first_order_residuals(&problem, &trace.u, &trace.t);
            let rows = [
                ("t", render(&trace.t)),
                ("u", render(&trace.u)),
                ("g", render(&trace.g)),
                ("h", render(&trace.h)),
                ("f", render(&trace.f)),
            ];
            Ok(match common.output {
                Output::Text => {
                    let mut out = String::new();
                    let _ = writeln!(out, "t(x,y) = {}", rows[0].1);
                    let _ = writeln!(out, "u(x,y) = {}", rows[1].1);
                    let _ = writeln!(out, "g(y) = {}", rows[2].1);
                    let _ = writeln!(out, "h(x) = {}", rows[3].1);
                    let _ = writeln!(out, "f(x,y) = {}", rows[4].1);
                    let _ = writeln!(out, "u_x + a*t_y = {}", render(&r1));
                    let _ = writeln!(out, "u_y - t_x = {}", render(&r2));
                    out
                }
                Output::Json => to_json(&TraceJson {
                    problem: ProblemJson::new(&problem),
                    t: rows[0].1.clone(),
                    u: rows[1].1.clone(),
                    g: rows[2].1.clone(),
                    h: rows[3].1.clone(),
                    f: rows[4].1.clone(),
                    first_order_residuals: [render(&r1), render(&r2)],
                }),
                Output::Csv => named_csv(&rows),
            })
        }
        Command::Verify {
            common,
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            fd_step,
            quad_tol,
            unchecked,
        } => {
            let (problem, t) = problem_from(common)?;
            let grid = Grid::new(*x_min, *x_max, *y_min, *y_max, *nx, *ny)?;
            let solution = solution_with_fallback(&problem, &t, *quad_tol, *unchecked)?;
            let report = verify_on_grid(&problem, &solution.evaluable, &grid, *fd_step)?;
            let f = solution.record.as_ref().map(|r| render(&r.f));
            Ok(match common.output {
                Output::Text => {
                    let mut out = String::new();
                    let _ = writeln!(out, "path: {}", solution.path.as_str());
                    if let Some(f) = &f {
                        let _ = writeln!(out, "f(x,y) = {f}");
                    }
                    let _ = writeln!(out, "method: {}", report.method.as_str());
                    let _ = writeln!(out, "symbolic_zero: {}", report.symbolic_zero);
                    let _ = writeln!(out, "points: {}", report.samples.len());
                    let _ = writeln!(
                        out,
                        "max_abs_residual: {}",
                        format_float(report.max_abs_residual)
                    );
                    let _ = writeln!(
                        out,
                        "mean_abs_residual: {}",
                        format_float(report.mean_abs_residual)
                    );
                    let (wx, wy, wr) = report.worst_point;
                    let _ = writeln!(
                        out,
                        "worst_point: ({}, {}) residual {}",
                        format_float(wx),
                        format_float(wy),
                        format_float(wr)
                    );
                    out
                }
                Output::Json => to_json(&VerifyJson {
                    problem: ProblemJson::new(&problem),
                    seed: render(&t),
                    path: solution.path.as_str(),
                    f,
                    report: ReportJson::new(&report),
                }),
                Output::Csv => {
                    let mut out = String::from("x,y,f,residual\n");
                    for s in &report.samples {
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            format_float(s.x),
                            format_float(s.y),
                            format_float(s.f),
                            format_float(s.residual)
                        );
                    }
                    out
                }
            })
        }
        Command::Bvp { common } => {
            let (problem, t) = problem_from(common)?;
            let record = dirichlet_solution(&problem, &t)?;
            let y0 = Expr::Constant(problem.base_y().clone());
            let dirichlet_value = crate::expr::substitute(&record.f, crate::expr::Var::Y, &y0);
            let datum = neumann_datum(&problem, &t);
            let neumann = neumann_check(&problem, &t, &record);
            debug_assert!(boundary_slope(&problem, &t).is_zero());
            let rows = [
                ("f", render(&record.f)),
                ("dirichlet_value", render(&dirichlet_value)),
                ("neumann_datum", render(&datum)),
                ("neumann_residual", render(&neumann)),
            ];
            let b = render_rational(problem.base_y());
            Ok(match common.output {
                Output::Text => {
                    let mut out = String::new();
                    let _ = writeln!(out, "f(x,y) = {}", rows[0].1);
                    let _ = writeln!(out, "f(x,{b}) = {}", rows[1].1);
                    let _ = writeln!(out, "f_y(x,{b}) = {}", rows[2].1);
                    let _ = writeln!(out, "f_y(x,{b}) - t(x,{b}) = {}", rows[3].1);
                    out
                }
                Output::Json => to_json(&BvpJson {
                    problem: ProblemJson::new(&problem),
                    seed: render(&t),
                    f: rows[0].1.clone(),
                    dirichlet_value: rows[1].1.clone(),
                    neumann_datum: rows[2].1.clone(),
                    neumann_residual: rows[3].1.clone(),
                }),
                Output::Csv => named_csv(&rows),
            })
        }
    }
}

fn output_of(command: &Command) -> (Output, Option<&PathBuf>) {
    let common = match command {
        Command::Construct { common, .. }
        | Command::Iterate { common, .. }
        | Command::Trace { common }
        | Command::Verify { common, .. }
        | Command::Bvp { common } => common,
    };
    (common.output, common.out.as_ref())
}

/// Runs one invocation. `args[0]` is the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let (output, out_path) = output_of(&cli.command);
    let result = execute(&cli.command).and_then(|payload| match out_path {
        Some(path) => std::fs::write(path, &payload)
            .map(|_| String::new())
            .map_err(|e| input_failure("io", format!("cannot write {}: {e}", path.display()))),
        None => Ok(payload),
    });
    match result {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(failure) => {
            let stdout = if output == Output::Json {
                to_json(&ErrorJson {
                    error: ErrorBody {
                        kind: failure.kind,
                        exit_code: failure.code,
                        message: &failure.message,
                        residual: failure.residual.as_deref(),
                        boundary_slope: failure.boundary_slope.as_deref(),
                    },
                })
            } else {
                String::new()
            };
            let mut stderr = format!("error: {}\n", failure.message);
            if let Some(r) = &failure.residual {
                let _ = writeln!(stderr, "residual: {r}");
            }
            if let Some(b) = &failure.boundary_slope {
                let _ = writeln!(stderr, "boundary slope: {b}");
            }
            Outcome {
                code: failure.code,
                stdout,
                stderr,
            }
        }
    }
}
