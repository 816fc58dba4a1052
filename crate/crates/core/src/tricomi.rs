//! Construction of new solutions of `f_xx + a(x) f_yy = 0` from a seed.
//!
//! Given a seed solution `t` and base point `(x0, y0)`, the new solution is
//!
//! ```text
//! f(x, y) = ∫_{y0}^{y} t(x, r) dr - ∫_{x0}^{x} ∫_{x0}^{q} a(s) t_y(s, y0) ds dq
//! ```
//!
//! It comes from writing the equation as the first-order system
//! `u_x + a v_y = 0`, `u_y - v_x = 0` with `u = f_x`, `v = f_y = t`, and
//! integrating back. [`derivation_trace`] exposes the intermediate `u`, `g`
//! and `h` of that reduction so they can be cross-checked against `f`.
//!
//! All constructions here are exact: every integral is taken by
//! [`crate::expr::integrate_from`], and a construction that leaves the
//! integrable class fails with [`TricomiError::NotSymbolicallyIntegrable`].
//! Callers that need a value anyway go through [`crate::numeric`].

use std::fmt;

use thiserror::Error;

use crate::expr::{
    differentiate, equivalence, integrate_from, simplify, substitute, EquivalenceMethod, Expr,
    ExprError, Rational, Var,
};

/// The coefficient `a(x)` together with the base point of integration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TricomiProblem {
    coeff_a: Expr,
    base_x: Rational,
    base_y: Rational,
}

impl TricomiProblem {
    pub fn new(coeff_a: Expr, base_x: Rational, base_y: Rational) -> Result<Self, TricomiError> {
        let coeff_a = simplify(&coeff_a);
        if coeff_a.contains(Var::Y) {
            return Err(TricomiError::CoefficientDependsOnY { coeff_a });
        }
        Ok(TricomiProblem {
            coeff_a,
            base_x,
            base_y,
        })
    }

    /// Problem with base point `(0, 0)`.
    pub fn with_coefficient(coeff_a: Expr) -> Result<Self, TricomiError> {
        Self::new(coeff_a, Rational::default(), Rational::default())
    }

    pub fn coeff_a(&self) -> &Expr {
        &self.coeff_a
    }

    pub fn base_x(&self) -> &Rational {
        &self.base_x
    }

    pub fn base_y(&self) -> &Rational {
        &self.base_y
    }

    fn base_x_expr(&self) -> Expr {
        Expr::Constant(self.base_x.clone())
    }

    fn base_y_expr(&self) -> Expr {
        Expr::Constant(self.base_y.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionPath {
    /// Every integral taken in closed form.
    Symbolic,
    /// Seed derivatives symbolic, integrals by quadrature.
    Hybrid,
}

impl SolutionPath {
    pub fn as_str(self) -> &'static str {
        match self {
            SolutionPath::Symbolic => "symbolic",
            SolutionPath::Hybrid => "hybrid",
        }
    }
}

/// A constructed solution and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub f: Expr,
    pub seed: Expr,
    /// 0 is the seed itself.
    pub depth: usize,
    pub path: SolutionPath,
    pub problem: TricomiProblem,
    /// False when built with [`construct_solution_unchecked`]; the seed was
    /// then never shown to solve the equation.
    pub seed_checked: bool,
}

impl SolutionRecord {
    pub fn residual(&self) -> Expr {
        residual_expr(&self.problem, &self.f)
    }
}

/// Intermediate functions of the first-order reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationTrace {
    /// `v = f_y`.
    pub t: Expr,
    /// `f_x`.
    pub u: Expr,
    /// The function of `y` alone fixed by the second equation of the system.
    pub g: Expr,
    /// The function of `x` alone completing `f`.
    pub h: Expr,
    pub f: Expr,
}

/// Which integral of the construction had no closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralTerm {
    /// `∫ t(x, r) dr`.
    Seed,
    /// `∫ a(s) t_y(s, y0) ds`.
    CorrectionInner,
    /// `∫ (∫ a(s) t_y(s, y0) ds) dq`.
    CorrectionOuter,
    /// `∫ t_x(x, r) dr` in the trace's `u`.
    TraceU,
    /// The integrals defining the trace's `g`.
    TraceG,
}

impl fmt::Display for IntegralTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegralTerm::Seed => "seed integral ∫ t(x,r) dr",
            IntegralTerm::CorrectionInner => "inner correction integral ∫ a(s) t_y(s,y0) ds",
            IntegralTerm::CorrectionOuter => "outer correction integral ∫∫ a(s) t_y(s,y0) ds dq",
            IntegralTerm::TraceU => "trace integral ∫ t_x(x,r) dr",
            IntegralTerm::TraceG => "trace integral defining g(y)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TricomiError {
    #[error("coefficient a(x) = {coeff_a} depends on y")]
    CoefficientDependsOnY { coeff_a: Expr },
    #[error("seed is not a solution: residual t_xx + a(x) t_yy = {residual}")]
    SeedNotASolution { residual: Expr },
    #[error("no closed form for the {integral}; use numeric evaluation")]
    NotSymbolicallyIntegrable { integral: IntegralTerm },
    #[error("boundary hypothesis t_y(x, y0) = 0 fails: t_y(x, y0) = {boundary_slope}")]
    BoundaryHypothesisViolated { boundary_slope: Expr },
    #[error("constructed f has nonzero canonical residual {residual}")]
    ClosureFailed { residual: Expr },
    #[error("derivation trace inconsistent: {0}")]
    TraceInconsistent(String),
    #[error("iteration count must be at least 1")]
    EmptyIteration,
    #[error("at depth {depth}: {source}")]
    AtDepth {
        depth: usize,
        #[source]
        source: Box<TricomiError>,
    },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl TricomiError {
    /// The error with any depth annotation removed.
    pub fn root(&self) -> &TricomiError {
        match self {
            TricomiError::AtDepth { source, .. } => source.root(),
            other => other,
        }
    }
}

/// `f_xx + a(x) f_yy`, canonicalized.
pub fn residual_expr(problem: &TricomiProblem, f: &Expr) -> Expr {
    let fxx = differentiate(&differentiate(f, Var::X), Var::X);
    let fyy = differentiate(&differentiate(f, Var::Y), Var::Y);
    simplify(&Expr::Sum(vec![
        fxx,
        Expr::Product(vec![problem.coeff_a.clone(), fyy]),
    ]))
}

/// Residuals `(u_x + a v_y, u_y - v_x)` of the first-order system.
pub fn first_order_residuals(problem: &TricomiProblem, u: &Expr, v: &Expr) -> (Expr, Expr) {
    let first = simplify(&Expr::Sum(vec![
        differentiate(u, Var::X),
        Expr::Product(vec![problem.coeff_a.clone(), differentiate(v, Var::Y)]),
    ]));
    let second = Expr::sub(&differentiate(u, Var::Y), &differentiate(v, Var::X));
    (first, second)
}

fn check_seed(problem: &TricomiProblem, t: &Expr) -> Result<(), TricomiError> {
    let residual = residual_expr(problem, t);
    if residual.is_zero() {
        Ok(())
    } else {
        Err(TricomiError::SeedNotASolution { residual })
    }
}

fn closed_form(e: &Expr, v: Var, lower: &Expr, term: IntegralTerm) -> Result<Expr, TricomiError> {
    integrate_from(e, v, lower)?.ok_or(TricomiError::NotSymbolicallyIntegrable { integral: term })
}

/// The pieces of the construction formula.
struct Pieces {
    /// `∫_{y0}^{y} t(x, r) dr`.
    seed_integral: Expr,
    /// `∫_{x0}^{x} a(s) t_y(s, y0) ds`.
    inner: Expr,
    /// `∫_{x0}^{x} inner(q) dq`.
    outer: Expr,
}

impl Pieces {
    fn f(&self) -> Expr {
        Expr::sub(&self.seed_integral, &self.outer)
    }
}

fn pieces(problem: &TricomiProblem, t: &Expr) -> Result<Pieces, TricomiError> {
    let x0 = problem.base_x_expr();
    let y0 = problem.base_y_expr();
    let seed_integral = closed_form(t, Var::Y, &y0, IntegralTerm::Seed)?;
    let slope_at_base = substitute(&differentiate(t, Var::Y), Var::Y, &y0);
    let kernel = Expr::mul(&problem.coeff_a, &slope_at_base);
    let inner = closed_form(&kernel, Var::X, &x0, IntegralTerm::CorrectionInner)?;
    let outer = closed_form(&inner, Var::X, &x0, IntegralTerm::CorrectionOuter)?;
    Ok(Pieces {
        seed_integral,
        inner,
        outer,
    })
}

/// Builds a new solution from the seed `t`, checking first that `t` solves
/// the equation. The record has depth 1.
pub fn construct_solution(
    problem: &TricomiProblem,
    t: &Expr,
) -> Result<SolutionRecord, TricomiError> {
    construct_solution_at(problem, t, 1)
}

/// [`construct_solution`] with an explicit depth for the record.
pub fn construct_solution_at(
    problem: &TricomiProblem,
    t: &Expr,
    depth: usize,
) -> Result<SolutionRecord, TricomiError> {
    let t = simplify(t);
    check_seed(problem, &t)?;
    let f = pieces(problem, &t)?.f();
    let residual = residual_expr(problem, &f);
    if !residual.is_zero() {
        return Err(TricomiError::ClosureFailed { residual });
    }
    Ok(SolutionRecord {
        f,
        seed: t,
        depth,
        path: SolutionPath::Symbolic,
        problem: problem.clone(),
        seed_checked: true,
    })
}

/// Applies the construction formula without checking the seed. The result
/// need not solve the equation when the seed does not.
pub fn construct_solution_unchecked(
    problem: &TricomiProblem,
    t: &Expr,
    depth: usize,
) -> Result<SolutionRecord, TricomiError> {
    let t = simplify(t);
    let f = pieces(problem, &t)?.f();
    Ok(SolutionRecord {
        f,
        seed: t,
        depth,
        path: SolutionPath::Symbolic,
        problem: problem.clone(),
        seed_checked: false,
    })
}

fn require_canonical(a: &Expr, b: &Expr, what: &str) -> Result<(), TricomiError> {
    let eq = equivalence(a, b);
    if eq.equal && eq.method == EquivalenceMethod::Canonical {
        Ok(())
    } else {
        Err(TricomiError::TraceInconsistent(format!(
            "{what}: {a} vs {b}"
        )))
    }
}

/// Computes `u`, `g`, `h` and `f` for the seed `t` and checks them against
/// each other.
///
/// On success: `f_y = t` and `f_x = u` canonically, `g` is free of `x`,
/// `h` is free of `y`, and `u` agrees with its alternative form
/// `-∫ a(s) t_y(s, y) ds + g(y)`.
pub fn derivation_trace(
    problem: &TricomiProblem,
    t: &Expr,
) -> Result<DerivationTrace, TricomiError> {
    let t = simplify(t);
    check_seed(problem, &t)?;
    let x0 = problem.base_x_expr();
    let y0 = problem.base_y_expr();
    let parts = pieces(problem, &t)?;

    let tx = differentiate(&t, Var::X);
    let ty = differentiate(&t, Var::Y);
    let tyy = differentiate(&ty, Var::Y);

    let u = Expr::sub(
        &closed_form(&tx, Var::Y, &y0, IntegralTerm::TraceU)?,
        &parts.inner,
    );
    let h = Expr::neg(&parts.outer);
    let f = parts.f();

    // g(y) = ∫_{y0}^{y} [t_x(x, r) + ∫_{x0}^{x} a(s) t_yy(s, r) ds] dr
    let a_tyy = Expr::mul(&problem.coeff_a, &tyy);
    let bracket = Expr::add(
        &tx,
        &closed_form(&a_tyy, Var::X, &x0, IntegralTerm::TraceG)?,
    );
    let g = closed_form(&bracket, Var::Y, &y0, IntegralTerm::TraceG)?;
    if g.contains(Var::X) {
        return Err(TricomiError::TraceInconsistent(format!(
            "g should depend on y only, got {g}"
        )));
    }
    if h.contains(Var::Y) {
        return Err(TricomiError::TraceInconsistent(format!(
            "h should depend on x only, got {h}"
        )));
    }

    require_canonical(&differentiate(&f, Var::Y), &t, "f_y = t")?;
    require_canonical(&differentiate(&f, Var::X), &u, "f_x = u")?;

    // u = -∫_{x0}^{x} a(s) t_y(s, y) ds + g(y)
    let a_ty = Expr::mul(&problem.coeff_a, &ty);
    let u_alt = Expr::sub(&g, &closed_form(&a_ty, Var::X, &x0, IntegralTerm::TraceG)?);
    if !equivalence(&u_alt, &u).equal {
        return Err(TricomiError::TraceInconsistent(format!(
            "two forms of u disagree: {u_alt} vs {u}"
        )));
    }

    Ok(DerivationTrace { t, u, g, h, f })
}

/// Repeatedly applies the construction, starting from `seed` at depth 0.
/// Returns the records of depths `1..=n` in order.
pub fn iterate_solutions(
    problem: &TricomiProblem,
    seed: &Expr,
    n: usize,
) -> Result<Vec<SolutionRecord>, TricomiError> {
    if n == 0 {
        return Err(TricomiError::EmptyIteration);
    }
    let mut records: Vec<SolutionRecord> = Vec::with_capacity(n);
    let mut current = simplify(seed);
    for depth in 1..=n {
        let record =
            construct_solution_at(problem, &current, depth).map_err(|e| TricomiError::AtDepth {
                depth,
                source: Box::new(e),
            })?;
        current = record.f.clone();
        records.push(record);
    }
    Ok(records)
}

/// [`iterate_solutions`] without the seed check at each step.
pub fn iterate_solutions_unchecked(
    problem: &TricomiProblem,
    seed: &Expr,
    n: usize,
) -> Result<Vec<SolutionRecord>, TricomiError> {
    if n == 0 {
        return Err(TricomiError::EmptyIteration);
    }
    let mut records: Vec<SolutionRecord> = Vec::with_capacity(n);
    let mut current = simplify(seed);
    for depth in 1..=n {
        let record = construct_solution_unchecked(problem, &current, depth).map_err(|e| {
            TricomiError::AtDepth {
                depth,
                source: Box::new(e),
            }
        })?;
        current = record.f.clone();
        records.push(record);
    }
    Ok(records)
}

/// `t_y(x, y0)`: zero exactly when the Dirichlet construction applies.
pub fn boundary_slope(problem: &TricomiProblem, t: &Expr) -> Expr {
    substitute(&differentiate(t, Var::Y), Var::Y, &problem.base_y_expr())
}

/// Solution vanishing on the line `y = y0`.
///
/// Requires `t_y(x, y0) = 0` for all `x`; the correction term of the
/// construction then vanishes and `f = ∫_{y0}^{y} t(x, r) dr`.
pub fn dirichlet_solution(
    problem: &TricomiProblem,
    t: &Expr,
) -> Result<SolutionRecord, TricomiError> {
    let t = simplify(t);
    check_seed(problem, &t)?;
    let slope = boundary_slope(problem, &t);
    if !slope.is_zero() {
        return Err(TricomiError::BoundaryHypothesisViolated {
            boundary_slope: slope,
        });
    }
    let f = closed_form(&t, Var::Y, &problem.base_y_expr(), IntegralTerm::Seed)?;
    Ok(SolutionRecord {
        f,
        seed: t,
        depth: 1,
        path: SolutionPath::Symbolic,
        problem: problem.clone(),
        seed_checked: true,
    })
}

/// The Neumann datum `t(x, y0)` that a constructed `f` matches as `f_y(x, y0)`.
pub fn neumann_datum(problem: &TricomiProblem, t: &Expr) -> Expr {
    substitute(t, Var::Y, &problem.base_y_expr())
}

/// `f_y(x, y0) - t(x, y0)` for a record built from `t`; zero for every
/// record produced by [`construct_solution`].
pub fn neumann_check(problem: &TricomiProblem, t: &Expr, record: &SolutionRecord) -> Expr {
    let y0 = problem.base_y_expr();
    Expr::sub(
        &substitute(&differentiate(&record.f, Var::Y), Var::Y, &y0),
        &substitute(t, Var::Y, &y0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn problem(a: &str) -> TricomiProblem {
        TricomiProblem::with_coefficient(p(a)).unwrap()
    }

    #[test]
    fn coefficient_must_be_free_of_y() {
        assert!(matches!(
            TricomiProblem::with_coefficient(p("x*y")),
            Err(TricomiError::CoefficientDependsOnY { .. })
        ));
    }

    #[test]
    fn residuals() {
        assert_eq!(
            residual_expr(&problem("x"), &p("1/2*y^2 - 1/6*x^3")),
            Expr::zero()
        );
        assert_eq!(
            residual_expr(&problem("cos(x)"), &p("-1 + 1/2*y^2 + cos(x)")),
            Expr::zero()
        );
        assert_eq!(residual_expr(&problem("x"), &p("x^2")), Expr::int(2));
    }

    #[test]
    fn first_order_system() {
        let pr = problem("x");
        assert_eq!(
            first_order_residuals(&pr, &Expr::zero(), &Expr::zero()),
            (Expr::zero(), Expr::zero())
        );
        assert_eq!(
            first_order_residuals(&pr, &Expr::y(), &Expr::zero()),
            (Expr::zero(), Expr::one())
        );
    }

    #[test]
    fn linear_coefficient_seed_y() {
        let rec = construct_solution(&problem("x"), &Expr::y()).unwrap();
        assert_eq!(rec.f, p("(1/2)*y^2 - (1/6)*x^3"));
        assert_eq!(rec.depth, 1);
        assert_eq!(rec.path, SolutionPath::Symbolic);
        assert!(rec.seed_checked);
    }

    #[test]
    fn cosine_coefficient_seed_y() {
        let rec = construct_solution(&problem("cos(x)"), &Expr::y()).unwrap();
        assert_eq!(rec.f, p("-1 + (1/2)*y^2 + cos(x)"));
    }

    #[test]
    fn second_iterate_by_hand() {
        // ∫_0^y (r^2/2 - x^3/6) dr = y^3/6 - x^3 y/6; t_y(s, 0) = 0 kills the correction
        let rec = construct_solution(&problem("x"), &p("1/2*y^2 - 1/6*x^3")).unwrap();
        assert_eq!(rec.f, p("(1/6)*y^3 - (1/6)*x^3*y"));
    }

    #[test]
    fn nonzero_base_point() {
        let pr = TricomiProblem::new(
            p("x"),
            Rational::from_integer(1.into()),
            Rational::new((-1).into(), 2.into()),
        )
        .unwrap();
        let rec = construct_solution(&pr, &p("x*y + y^2 - 1/3*x^3")).unwrap();
        assert_eq!(rec.residual(), Expr::zero());
        let at_base = substitute(
            &substitute(&rec.f, Var::X, &Expr::one()),
            Var::Y,
            &Expr::ratio(-1, 2),
        );
        assert_eq!(at_base, Expr::zero());
    }

    #[test]
    fn rejects_non_solutions() {
        match construct_solution(&problem("x"), &p("x^2")) {
            Err(TricomiError::SeedNotASolution { residual }) => assert_eq!(residual, Expr::int(2)),
            other => panic!("unexpected {other:?}"),
        }
        let rec = construct_solution_unchecked(&problem("x"), &p("x^2"), 1).unwrap();
        assert!(!rec.seed_checked);
        assert_ne!(rec.residual(), Expr::zero());
    }

    #[test]
    fn zero_seed_gives_zero() {
        let rec = construct_solution(&problem("x"), &Expr::zero()).unwrap();
        assert_eq!(rec.f, Expr::zero());
    }

    #[test]
    fn outside_the_integrable_class() {
        let err = construct_solution(&problem("exp(x^2)"), &Expr::y()).unwrap_err();
        assert_eq!(
            err,
            TricomiError::NotSymbolicallyIntegrable {
                integral: IntegralTerm::CorrectionInner
            }
        );
    }

    #[test]
    fn traces() {
        let tr = derivation_trace(&problem("x"), &Expr::y()).unwrap();
        assert_eq!(tr.u, p("-1/2*x^2"));
        assert_eq!(tr.h, p("-1/6*x^3"));
        assert_eq!(tr.g, Expr::zero());

        let tr = derivation_trace(&problem("x"), &Expr::one()).unwrap();
        assert_eq!(
            (tr.u, tr.g, tr.h, tr.f),
            (Expr::zero(), Expr::zero(), Expr::zero(), Expr::y())
        );

        let tr = derivation_trace(&problem("cos(x)"), &Expr::y()).unwrap();
        assert_eq!(tr.u, p("-sin(x)"));
        assert_eq!(tr.h, p("cos(x) - 1"));

        let tr = derivation_trace(&problem("x"), &p("x*y")).unwrap();
        assert_eq!(
            first_order_residuals(&problem("x"), &tr.u, &tr.t),
            (Expr::zero(), Expr::zero())
        );
        assert!(!tr.g.contains(Var::X));
    }

    #[test]
    fn trace_with_nonzero_base_y_has_nontrivial_g() {
        // t = x*y + y^2 - x^3/3 solves a = x; with y0 = 1, g picks up t_x(x0, r)
        let pr = TricomiProblem::new(
            p("x"),
            Rational::from_integer(0.into()),
            Rational::from_integer(1.into()),
        )
        .unwrap();
        let tr = derivation_trace(&pr, &p("x*y + y^2 - 1/3*x^3")).unwrap();
        assert!(!tr.g.contains(Var::X));
        assert!(!tr.g.is_zero());
    }

    #[test]
    fn solutions_machine() {
        let recs = iterate_solutions(&problem("x"), &Expr::one(), 3).unwrap();
        let fs: Vec<Expr> = recs.iter().map(|r| r.f.clone()).collect();
        assert_eq!(
            fs,
            vec![p("y"), p("1/2*y^2 - 1/6*x^3"), p("1/6*y^3 - 1/6*x^3*y")]
        );
        assert_eq!(
            recs.iter().map(|r| r.depth).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(
            iterate_solutions(&problem("x"), &Expr::one(), 0),
            Err(TricomiError::EmptyIteration)
        );
    }

    #[test]
    fn iteration_errors_carry_depth() {
        // a = cos(x): the third step needs ∫ cos(s)^2 ds
        let err = iterate_solutions(&problem("cos(x)"), &Expr::y(), 4).unwrap_err();
        match &err {
            TricomiError::AtDepth { depth, .. } => assert!(*depth >= 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            err.root(),
            TricomiError::NotSymbolicallyIntegrable { .. }
        ));
    }

    #[test]
    fn dirichlet() {
        let rec = dirichlet_solution(&problem("x"), &p("-1/6*x^3 + 1/2*y^2")).unwrap();
        assert_eq!(rec.f, p("-1/6*x^3*y + 1/6*y^3"));
        assert_eq!(substitute(&rec.f, Var::Y, &Expr::zero()), Expr::zero());

        let rec = dirichlet_solution(&problem("x"), &Expr::one()).unwrap();
        assert_eq!(rec.f, Expr::y());

        match dirichlet_solution(&problem("x"), &Expr::y()) {
            Err(TricomiError::BoundaryHypothesisViolated { boundary_slope }) => {
                assert_eq!(boundary_slope, Expr::one())
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn neumann() {
        let pr = problem("x");
        for t in [Expr::y(), Expr::one(), p("1/2*y^2 - 1/6*x^3")] {
            let rec = construct_solution(&pr, &t).unwrap();
            assert_eq!(neumann_check(&pr, &t, &rec), Expr::zero());
        }
        assert_eq!(neumann_datum(&pr, &p("1/2*y^2 - 1/6*x^3")), p("-1/6*x^3"));
    }
}
