//! Numeric fallback and independent verification.
//!
//! [`quad`] is adaptive Simpson. [`NumericSolution`] evaluates the
//! construction formula pointwise by nested quadrature when the closed form
//! is unavailable. [`verify_on_grid`] measures the residual
//! `f_xx + a(x) f_yy` over a tensor lattice, symbolically differentiated
//! when `f` is an expression and by central differences otherwise.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{differentiate, substitute, CompiledExpr, Expr, ExprError, Var};
use crate::tricomi::{
    construct_solution, construct_solution_unchecked, residual_expr, IntegralTerm, SolutionPath,
    SolutionRecord, TricomiError, TricomiProblem,
};

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Maximum bisection depth of [`quad`].
pub const MAX_DEPTH: u32 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("quadrature on [{lower}, {upper}] did not converge within depth {MAX_DEPTH}")]
    MaxDepthExceeded { lower: f64, upper: f64 },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("{integral}: {source}")]
    Integral {
        integral: IntegralTerm,
        #[source]
        source: Box<NumericError>,
    },
    #[error("at lattice point ({x}, {y}): {source}")]
    AtPoint {
        x: f64,
        y: f64,
        #[source]
        source: Box<NumericError>,
    },
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error(transparent)]
    Construction(#[from] TricomiError),
}

impl NumericError {
    /// True when the failure is non-convergence rather than bad input.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            NumericError::MaxDepthExceeded { .. } => true,
            NumericError::Integral { source, .. } | NumericError::AtPoint { source, .. } => {
                source.is_non_convergence()
            }
            _ => false,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive<F>(f: &mut F, p: Panel, tol: f64, depth: u32) -> Result<f64, NumericError>
where
    F: FnMut(f64) -> Result<f64, NumericError>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = sample(f, lm)?;
    let frm = sample(f, rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    // rounding floor: below this the estimate cannot improve
    let floor = 4.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= floor || lm <= p.a || rm >= p.b {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(NumericError::MaxDepthExceeded {
            lower: p.a,
            upper: p.b,
        });
    }
    let l = adaptive(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        0.5 * tol,
        depth + 1,
    )?;
    let r = adaptive(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        0.5 * tol,
        depth + 1,
    )?;
    Ok(l + r)
}

fn sample<F>(f: &mut F, at: f64) -> Result<f64, NumericError>
where
    F: FnMut(f64) -> Result<f64, NumericError>,
{
    let v = f(at)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumericError::NonFinite { at })
    }
}

/// [`quad`] for integrands that can fail.
pub fn try_quad<F>(mut f: F, lower: f64, upper: f64, tol: f64) -> Result<f64, NumericError>
where
    F: FnMut(f64) -> Result<f64, NumericError>,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(NumericError::InvalidTolerance(tol));
    }
    if lower == upper {
        return Ok(0.0);
    }
    if upper < lower {
        return try_quad(f, upper, lower, tol).map(|v| -v);
    }
    let fa = sample(&mut f, lower)?;
    let fb = sample(&mut f, upper)?;
    let fm = sample(&mut f, 0.5 * (lower + upper))?;
    let whole = simpson(lower, upper, fa, fm, fb);
    adaptive(
        &mut f,
        Panel {
            a: lower,
            b: upper,
            fa,
            fm,
            fb,
            whole,
        },
        tol,
        0,
    )
}

/// Adaptive Simpson estimate of `∫_lower^upper integrand`.
///
/// Reversed bounds flip the sign and equal bounds give exactly 0.
pub fn quad<F>(integrand: F, lower: f64, upper: f64, tol: f64) -> Result<f64, NumericError>
where
    F: Fn(f64) -> f64,
{
    try_quad(|s| Ok(integrand(s)), lower, upper, tol)
}

/// Pointwise evaluation of the construction formula by nested quadrature.
///
/// The seed's `y`-derivative is taken symbolically; all integrals are
/// numeric. The inner integral runs at a tenth of the outer tolerance.
#[derive(Debug, Clone)]
pub struct NumericSolution {
    problem: TricomiProblem,
    seed: Expr,
    tol: f64,
    seed_eval: CompiledExpr,
    kernel: CompiledExpr,
}

impl NumericSolution {
    pub fn new(problem: &TricomiProblem, t: &Expr, tol: f64) -> Result<Self, NumericError> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(NumericError::InvalidTolerance(tol));
        }
        let y0 = Expr::Constant(problem.base_y().clone());
        let slope_at_base = substitute(&differentiate(t, Var::Y), Var::Y, &y0);
        let kernel = Expr::mul(problem.coeff_a(), &slope_at_base);
        Ok(NumericSolution {
            problem: problem.clone(),
            seed: t.clone(),
            tol,
            seed_eval: CompiledExpr::new(t),
            kernel: CompiledExpr::new(&kernel),
        })
    }

    pub fn problem(&self) -> &TricomiProblem {
        &self.problem
    }

    pub fn seed(&self) -> &Expr {
        &self.seed
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64, NumericError> {
        let x0 = rational_to_f64(self.problem.base_x());
        let y0 = rational_to_f64(self.problem.base_y());
        let tol = self.tol;

        let seed_term = try_quad(|r| Ok(self.seed_eval.eval(x, r)?), y0, y, tol).map_err(|e| {
            NumericError::Integral {
                integral: IntegralTerm::Seed,
                source: Box::new(e),
            }
        })?;

        // kernel is free of y; any ordinate works
        let inner = |q: f64| {
            try_quad(|s| Ok(self.kernel.eval(s, 0.0)?), x0, q, tol / 10.0).map_err(|e| {
                NumericError::Integral {
                    integral: IntegralTerm::CorrectionInner,
                    source: Box::new(e),
                }
            })
        };
        let correction = try_quad(inner, x0, x, tol).map_err(|e| match e {
            e @ NumericError::Integral { .. } => e,
            e => NumericError::Integral {
                integral: IntegralTerm::CorrectionOuter,
                source: Box::new(e),
            },
        })?;
        Ok(seed_term - correction)
    }
}

fn rational_to_f64(r: &crate::expr::Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Value at `(x, y)` of the solution constructed from `t`, by quadrature.
pub fn numeric_f(
    problem: &TricomiProblem,
    t: &Expr,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<f64, NumericError> {
    NumericSolution::new(problem, t, tol)?.value(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondPartial {
    XX,
    YY,
}

/// Central second difference `(f(p+h) - 2 f(p) + f(p-h)) / h^2` along `which`.
pub fn fd_second_derivative<F>(f: F, which: SecondPartial, x: f64, y: f64, h: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let (plus, minus) = match which {
        SecondPartial::XX => (f(x + h, y), f(x - h, y)),
        SecondPartial::YY => (f(x, y + h), f(x, y - h)),
    };
    (plus - 2.0 * f(x, y) + minus) / (h * h)
}

fn ordered(lo: f64, hi: f64) -> bool {
    lo < hi
}

/// Closed tensor lattice `nx × ny` including the endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
            nx: 21,
            ny: 21,
        }
    }
}

impl Grid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, NumericError> {
        let g = Grid {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), NumericError> {
        if !ordered(self.x_min, self.x_max) || !ordered(self.y_min, self.y_max) {
            return Err(NumericError::InvalidGrid(format!(
                "need x_min < x_max and y_min < y_max, got [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(NumericError::InvalidGrid(format!(
                "need at least 2 points per axis, got {} x {}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    fn coord(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if i + 1 == n {
            max
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        Grid::coord(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        Grid::coord(self.y_min, self.y_max, self.ny, j)
    }

    /// Lattice points in row-major order: `x` index outer, `y` index inner.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.nx)
            .flat_map(|i| (0..self.ny).map(move |j| (self.x(i), self.y(j))))
            .collect()
    }

    /// Points away from the boundary, same order as [`Grid::points`].
    pub fn interior_points(&self) -> Vec<(f64, f64)> {
        (1..self.nx.saturating_sub(1))
            .flat_map(|i| (1..self.ny.saturating_sub(1)).map(move |j| (self.x(i), self.y(j))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationMethod {
    SymbolicExprEval,
    FiniteDifference,
}

impl VerificationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            VerificationMethod::SymbolicExprEval => "symbolic",
            VerificationMethod::FiniteDifference => "finite_difference",
        }
    }
}

/// One evaluated lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub x: f64,
    pub y: f64,
    pub f: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub grid: Grid,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
    pub symbolic_zero: bool,
    /// `(x, y, residual)` where `|residual|` is largest; first in lattice
    /// order on ties.
    pub worst_point: (f64, f64, f64),
    pub method: VerificationMethod,
    pub samples: Vec<PointSample>,
}

type PointFn = dyn Fn(f64, f64) -> Result<f64, NumericError> + Send + Sync;

/// Something that can be verified on a grid.
#[derive(Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Evaluable {
    /// Closed form; derivatives are taken symbolically.
    Symbolic(Expr),
    /// Nested-quadrature evaluation; derivatives by finite differences.
    Numeric(NumericSolution),
    /// Arbitrary pointwise function; derivatives by finite differences.
    Function(Arc<PointFn>),
}

impl fmt::Debug for Evaluable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluable::Symbolic(e) => f.debug_tuple("Symbolic").field(e).finish(),
            Evaluable::Numeric(n) => f.debug_tuple("Numeric").field(n).finish(),
            Evaluable::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Evaluable {
    pub fn function<F>(f: F) -> Evaluable
    where
        F: Fn(f64, f64) -> Result<f64, NumericError> + Send + Sync + 'static,
    {
        Evaluable::Function(Arc::new(f))
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64, NumericError> {
        match self {
            Evaluable::Symbolic(e) => Ok(crate::expr::evaluate(e, x, y)?),
            Evaluable::Numeric(n) => n.value(x, y),
            Evaluable::Function(f) => f(x, y),
        }
    }
}

fn reduce(
    grid: Grid,
    method: VerificationMethod,
    symbolic_zero: bool,
    results: Vec<Result<PointSample, NumericError>>,
) -> Result<VerificationReport, NumericError> {
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut max_abs = 0.0_f64;
    let mut sum_abs = 0.0_f64;
    let mut worst = samples
        .first()
        .map_or((f64::NAN, f64::NAN, f64::NAN), |s| (s.x, s.y, s.residual));
    for s in &samples {
        let r = s.residual.abs();
        sum_abs += r;
        if r > max_abs || r.is_nan() {
            max_abs = r;
            worst = (s.x, s.y, s.residual);
        }
    }
    let mean_abs = if samples.is_empty() {
        0.0
    } else {
        sum_abs / samples.len() as f64
    };
    Ok(VerificationReport {
        grid,
        max_abs_residual: max_abs,
        mean_abs_residual: mean_abs,
        symbolic_zero,
        worst_point: worst,
        method,
        samples,
    })
}

fn at_point(x: f64, y: f64) -> impl Fn(NumericError) -> NumericError {
    move |e| NumericError::AtPoint {
        x,
        y,
        source: Box::new(e),
    }
}

/// Residual `f_xx + a(x) f_yy` of `f` over `grid`.
///
/// Symbolic `f`: the residual expression is derived exactly and evaluated
/// at every lattice point. Otherwise second derivatives are central
/// differences with step `fd_step`, evaluated on interior points only.
/// Points are processed in parallel; the reduction runs in lattice order so
/// reports are reproducible bit for bit.
pub fn verify_on_grid(
    problem: &TricomiProblem,
    f: &Evaluable,
    grid: &Grid,
    fd_step: f64,
) -> Result<VerificationReport, NumericError> {
    grid.validate()?;
    match f {
        Evaluable::Symbolic(expr) => {
            let residual = residual_expr(problem, expr);
            let symbolic_zero = residual.is_zero();
            let residual = CompiledExpr::new(&residual);
            let value = CompiledExpr::new(expr);
            let results = grid
                .points()
                .into_par_iter()
                .map(|(x, y)| {
                    let sample = (|| -> Result<PointSample, NumericError> {
                        Ok(PointSample {
                            x,
                            y,
                            f: value.eval(x, y)?,
                            residual: residual.eval(x, y)?,
                        })
                    })();
                    sample.map_err(at_point(x, y))
                })
                .collect();
            reduce(
                *grid,
                VerificationMethod::SymbolicExprEval,
                symbolic_zero,
                results,
            )
        }
        _ => {
            if fd_step.is_nan() || fd_step <= 0.0 {
                return Err(NumericError::InvalidStep(fd_step));
            }
            let points = grid.interior_points();
            if points.is_empty() {
                return Err(NumericError::InvalidGrid(
                    "finite-difference verification needs at least 3 points per axis".into(),
                ));
            }
            let coeff = CompiledExpr::new(problem.coeff_a());
            let h = fd_step;
            let results = points
                .into_par_iter()
                .map(|(x, y)| {
                    let sample = (|| -> Result<PointSample, NumericError> {
                        let center = f.value(x, y)?;
                        let fxx =
                            (f.value(x + h, y)? - 2.0 * center + f.value(x - h, y)?) / (h * h);
                        let fyy =
                            (f.value(x, y + h)? - 2.0 * center + f.value(x, y - h)?) / (h * h);
                        let a = coeff.eval(x, y)?;
                        Ok(PointSample {
                            x,
                            y,
                            f: center,
                            residual: fxx + a * fyy,
                        })
                    })();
                    sample.map_err(at_point(x, y))
                })
                .collect();
            reduce(*grid, VerificationMethod::FiniteDifference, false, results)
        }
    }
}

/// Constructed solution in whichever form is available: closed form when
/// every integral is symbolic, nested quadrature otherwise.
#[derive(Debug, Clone)]
pub struct Solution {
    pub path: SolutionPath,
    /// Present on the symbolic path.
    pub record: Option<SolutionRecord>,
    pub evaluable: Evaluable,
}

/// Builds the solution from `t`, falling back to quadrature when a closed
/// form is out of reach. The seed check still applies on the fallback path
/// unless `unchecked` is set.
pub fn solution_with_fallback(
    problem: &TricomiProblem,
    t: &Expr,
    tol: f64,
    unchecked: bool,
) -> Result<Solution, NumericError> {
    let attempt = if unchecked {
        construct_solution_unchecked(problem, t, 1)
    } else {
        construct_solution(problem, t)
    };
    match attempt {
        Ok(record) => Ok(Solution {
            path: SolutionPath::Symbolic,
            evaluable: Evaluable::Symbolic(record.f.clone()),
            record: Some(record),
        }),
        Err(TricomiError::NotSymbolicallyIntegrable { .. }) => Ok(Solution {
            path: SolutionPath::Hybrid,
            record: None,
            evaluable: Evaluable::Numeric(NumericSolution::new(problem, t, tol)?),
        }),
        Err(e) => Err(e.into()),
    }
}
