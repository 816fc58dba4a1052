//! Symbolic expression core.
//!
//! Expressions are immutable trees over the two independent variables `x`
//! and `y`, with exact rational constants, integer powers, and the
//! transcendental functions `sin`, `cos` and `exp`. Every public operation
//! returns its result in canonical form (see [`simplify`]), so structural
//! equality of two results is a meaningful mathematical comparison.
//!
//! ```
//! use tricomi_forge::expr::{parse, differentiate, Var};
//!
//! let f = parse("1/2*y^2 - 1/6*x^3").unwrap();
//! let fx = differentiate(&f, Var::X);
//! assert_eq!(fx, parse("-1/2*x^2").unwrap());
//! ```

mod calculus;
mod eval;
mod parse;
mod render;
mod simplify;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use calculus::{antiderivative, definite_integral, differentiate, integrate_from, substitute};
pub use eval::{
    equivalence, equivalent, evaluate, sample_points, CompiledExpr, Equivalence, EquivalenceMethod,
};
pub use parse::parse;
pub use simplify::simplify;

/// Exact rational number used for every constant in a tree.
pub type Rational = BigRational;

/// The two independent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Expression tree node.
///
/// Trees built by hand need not be canonical; run them through [`simplify`]
/// before comparing structurally.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Constant(Rational),
    Variable(Var),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, i64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    ExpFn(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("integration bound depends on the integration variable {var}")]
    IllegalBound { var: Var },
    #[error("negative power of zero when evaluating at ({x}, {y})")]
    EvalDomain { x: f64, y: f64 },
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Constant(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Constant(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Constant(Rational::from_integer(BigInt::from(n)))
    }

    /// The constant `numer/denom`. Panics if `denom` is zero.
    pub fn ratio(numer: i64, denom: i64) -> Expr {
        Expr::Constant(Rational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn var(v: Var) -> Expr {
        Expr::Variable(v)
    }

    pub fn x() -> Expr {
        Expr::Variable(Var::X)
    }

    pub fn y() -> Expr {
        Expr::Variable(Var::Y)
    }

    pub fn pow(base: Expr, exponent: i64) -> Expr {
        Expr::Power(Box::new(base), exponent)
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::Sin(Box::new(arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::Cos(Box::new(arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::ExpFn(Box::new(arg))
    }

    /// Canonical sum of `a` and `b`.
    pub fn add(a: &Expr, b: &Expr) -> Expr {
        simplify(&Expr::Sum(vec![a.clone(), b.clone()]))
    }

    /// Canonical difference `a - b`.
    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        simplify(&Expr::Sum(vec![a.clone(), Expr::neg_raw(b.clone())]))
    }

    /// Canonical product of `a` and `b`.
    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        simplify(&Expr::Product(vec![a.clone(), b.clone()]))
    }

    /// Canonical negation.
    pub fn neg(a: &Expr) -> Expr {
        simplify(&Expr::neg_raw(a.clone()))
    }

    pub(crate) fn neg_raw(a: Expr) -> Expr {
        Expr::Product(vec![Expr::int(-1), a])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Constant(c) if c.is_zero())
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        match self {
            Expr::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// True if `v` occurs anywhere in the tree.
    pub fn contains(&self, v: Var) -> bool {
        match self {
            Expr::Constant(_) => false,
            Expr::Variable(w) => *w == v,
            Expr::Sum(items) | Expr::Product(items) => items.iter().any(|e| e.contains(v)),
            Expr::Power(base, _) => base.contains(v),
            Expr::Sin(arg) | Expr::Cos(arg) | Expr::ExpFn(arg) => arg.contains(v),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Constant(_) | Expr::Variable(_) => 1,
            Expr::Sum(items) | Expr::Product(items) => {
                1 + items.iter().map(Expr::size).sum::<usize>()
            }
            Expr::Power(base, _) => 1 + base.size(),
            Expr::Sin(arg) | Expr::Cos(arg) | Expr::ExpFn(arg) => 1 + arg.size(),
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Expr::Constant(_) => 0,
            Expr::Variable(Var::X) => 1,
            Expr::Variable(Var::Y) => 2,
            Expr::Power(..) => 3,
            Expr::Sin(_) => 4,
            Expr::Cos(_) => 5,
            Expr::ExpFn(_) => 6,
            Expr::Product(_) => 7,
            Expr::Sum(_) => 8,
        }
    }
}

/// Canonical ordering: node kind first, then children, then constant value.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_kind = self.kind_rank().cmp(&other.kind_rank());
        if by_kind != Ordering::Equal {
            return by_kind;
        }
        match (self, other) {
            (Expr::Constant(a), Expr::Constant(b)) => a.cmp(b),
            (Expr::Variable(_), Expr::Variable(_)) => Ordering::Equal,
            (Expr::Power(b1, e1), Expr::Power(b2, e2)) => b1.cmp(b2).then(e1.cmp(e2)),
            (Expr::Sin(a), Expr::Sin(b))
            | (Expr::Cos(a), Expr::Cos(b))
            | (Expr::ExpFn(a), Expr::ExpFn(b)) => a.cmp(b),
            (Expr::Sum(a), Expr::Sum(b)) | (Expr::Product(a), Expr::Product(b)) => {
                a.as_slice().cmp(b.as_slice())
            }
            _ => unreachable!("equal kind rank implies equal variant"),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render(self))
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Renders `e` in the input grammar.
pub fn render(e: &Expr) -> String {
    render::render(e)
}

/// Parses a rational literal such as `3`, `-1/6` or `0.25`.
pub fn parse_rational(text: &str) -> Result<Rational, ExprError> {
    match parse(text)? {
        Expr::Constant(c) => Ok(c),
        _ => Err(ExprError::Syntax {
            position: 0,
            expected: "a rational constant".to_string(),
        }),
    }
}

/// Renders a rational as `p` or `p/q`.
pub fn render_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
