use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{simplify, Expr, ExprError};

/// Number of sample points used when canonicalization cannot decide.
pub const SAMPLE_POINTS: usize = 32;
/// Relative agreement required at every sample point.
pub const SAMPLE_RTOL: f64 = 1e-10;
const SAMPLE_SEED: u64 = 0x7472_6963_6f6d_6931;

/// Floating-point value of `e` at `(x, y)`.
pub fn evaluate(e: &Expr, x: f64, y: f64) -> Result<f64, ExprError> {
    CompiledExpr::new(e).eval(x, y)
}

/// An expression with constants pre-converted to `f64`, for repeated
/// evaluation inside quadrature and grid loops.
#[derive(Debug, Clone)]
pub enum CompiledExpr {
    Constant(f64),
    X,
    Y,
    Sum(Vec<CompiledExpr>),
    Product(Vec<CompiledExpr>),
    Power(Box<CompiledExpr>, i64),
    Sin(Box<CompiledExpr>),
    Cos(Box<CompiledExpr>),
    Exp(Box<CompiledExpr>),
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> CompiledExpr {
        let boxed = |a: &Expr| Box::new(CompiledExpr::new(a));
        match e {
            Expr::Constant(c) => CompiledExpr::Constant(c.to_f64().unwrap_or(f64::NAN)),
            Expr::Variable(super::Var::X) => CompiledExpr::X,
            Expr::Variable(super::Var::Y) => CompiledExpr::Y,
            Expr::Sum(items) => CompiledExpr::Sum(items.iter().map(CompiledExpr::new).collect()),
            Expr::Product(items) => {
                CompiledExpr::Product(items.iter().map(CompiledExpr::new).collect())
            }
            Expr::Power(base, n) => CompiledExpr::Power(boxed(base), *n),
            Expr::Sin(arg) => CompiledExpr::Sin(boxed(arg)),
            Expr::Cos(arg) => CompiledExpr::Cos(boxed(arg)),
            Expr::ExpFn(arg) => CompiledExpr::Exp(boxed(arg)),
        }
    }

    /// Same contract as [`evaluate`].
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        Ok(match self {
            CompiledExpr::Constant(c) => *c,
            CompiledExpr::X => x,
            CompiledExpr::Y => y,
            CompiledExpr::Sum(items) => {
                let mut acc = 0.0;
                for item in items {
                    acc += item.eval(x, y)?;
                }
                acc
            }
            CompiledExpr::Product(items) => {
                let mut acc = 1.0;
                for item in items {
                    acc *= item.eval(x, y)?;
                }
                acc
            }
            CompiledExpr::Power(base, n) => {
                let b = base.eval(x, y)?;
                if *n < 0 && b == 0.0 {
                    return Err(ExprError::EvalDomain { x, y });
                }
                match i32::try_from(*n) {
                    Ok(k) => b.powi(k),
                    Err(_) => b.powf(*n as f64),
                }
            }
            CompiledExpr::Sin(arg) => arg.eval(x, y)?.sin(),
            CompiledExpr::Cos(arg) => arg.eval(x, y)?.cos(),
            CompiledExpr::Exp(arg) => arg.eval(x, y)?.exp(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivalenceMethod {
    /// The canonical difference reduced to a constant.
    Canonical,
    /// Decided by pointwise sampling; the answer is probabilistic.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equivalence {
    pub equal: bool,
    pub method: EquivalenceMethod,
}

impl Equivalence {
    pub fn is_probabilistic(&self) -> bool {
        self.method == EquivalenceMethod::Sampled
    }
}

/// The fixed sample lattice used by the sampling fallback, in `[-2, 2]^2`.
pub fn sample_points() -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    (0..SAMPLE_POINTS)
        .map(|_| (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)))
        .collect()
}

fn agree(a: Result<f64, ExprError>, b: Result<f64, ExprError>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            if a.is_finite() && b.is_finite() {
                (a - b).abs() <= SAMPLE_RTOL * a.abs().max(b.abs()).max(1.0)
            } else {
                a == b || (a.is_nan() && b.is_nan())
            }
        }
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Decides whether `e1` and `e2` denote the same function, reporting how
/// the decision was made.
pub fn equivalence(e1: &Expr, e2: &Expr) -> Equivalence {
    let diff = simplify(&Expr::Sum(vec![e1.clone(), Expr::neg_raw(e2.clone())]));
    if let Expr::Constant(c) = &diff {
        return Equivalence {
            equal: num_traits::Zero::is_zero(c),
            method: EquivalenceMethod::Canonical,
        };
    }
    let equal = sample_points()
        .into_iter()
        .all(|(x, y)| agree(evaluate(e1, x, y), evaluate(e2, x, y)));
    Equivalence {
        equal,
        method: EquivalenceMethod::Sampled,
    }
}

/// True if `e1` and `e2` denote the same function. See [`equivalence`].
pub fn equivalent(e1: &Expr, e2: &Expr) -> bool {
    equivalence(e1, e2).equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn evaluates_cubic_solution() {
        assert_eq!(
            evaluate(&p("(1/2)*y^2 - (1/6)*x^3"), 0.0, 2.0).unwrap(),
            2.0
        );
        assert_eq!(evaluate(&p("cos(x)"), 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_power_of_zero_is_a_domain_error() {
        assert_eq!(
            evaluate(&p("x^(-1)"), 0.0, 0.0),
            Err(ExprError::EvalDomain { x: 0.0, y: 0.0 })
        );
        assert_eq!(evaluate(&p("x^(-1)"), 4.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn equivalence_paths() {
        let canon = equivalence(&p("x + x"), &p("2*x"));
        assert!(canon.equal && !canon.is_probabilistic());

        let pyth = equivalence(&p("sin(x)^2"), &p("1 - cos(x)^2"));
        assert!(pyth.equal);
        assert!(pyth.is_probabilistic());

        assert!(!equivalent(&Expr::x(), &Expr::y()));
        assert!(!equivalent(&p("sin(x)^2"), &p("cos(x)^2")));
    }

    #[test]
    fn matches_hand_written_formula() {
        let c = CompiledExpr::new(&p("1/3*x^-2*sin(y) - exp(x*y)*cos(2*x) + 7/9"));
        for (x, y) in sample_points() {
            let direct = y.sin() / (3.0 * x * x) - (x * y).exp() * (2.0 * x).cos() + 7.0 / 9.0;
            let got = c.eval(x, y).unwrap();
            assert!(
                (got - direct).abs() <= 1e-13 * direct.abs().max(1.0),
                "{got} vs {direct}"
            );
        }
    }

    #[test]
    fn sample_points_are_fixed_and_in_range() {
        let a = sample_points();
        assert_eq!(a, sample_points());
        assert_eq!(a.len(), SAMPLE_POINTS);
        assert!(a
            .iter()
            .all(|&(x, y)| (-2.0..=2.0).contains(&x) && (-2.0..=2.0).contains(&y)));
    }
}
