//! Differentiation, rule-based antidifferentiation and substitution.
//!
//! `antiderivative` succeeds on the following class, per term of the
//! canonical sum, integrating with respect to `v`:
//!
//! * the factors that depend on `v` are absent or form `v^m` with `m >= 0`;
//! * or they are a single `sin`, `cos` or `exp` whose argument is
//!   `lambda*v + rest` with `lambda` a nonzero rational and `rest` free of `v`,
//!   optionally times `v^m` with `0 <= m <= 64` (integration by parts).
//!
//! The remaining factors of the term may be anything free of `v`. Outside
//! this class the result is `None`; there is no search.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{simplify, Expr, ExprError, Rational, Var};

fn d_raw(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Constant(_) => Expr::zero(),
        Expr::Variable(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Sum(items) => Expr::Sum(items.iter().map(|t| d_raw(t, v)).collect()),
        Expr::Product(items) => {
            let terms = (0..items.len())
                .filter(|&i| items[i].contains(v))
                .map(|i| {
                    let mut factors = items.clone();
                    factors[i] = d_raw(&items[i], v);
                    Expr::Product(factors)
                })
                .collect::<Vec<_>>();
            Expr::Sum(terms)
        }
        Expr::Power(base, n) => {
            if !base.contains(v) {
                return Expr::zero();
            }
            let lowered = if *n == 1 {
                Expr::one()
            } else {
                Expr::Power(base.clone(), n - 1)
            };
            Expr::Product(vec![Expr::int(*n), lowered, d_raw(base, v)])
        }
        Expr::Sin(arg) => Expr::Product(vec![Expr::Cos(arg.clone()), d_raw(arg, v)]),
        Expr::Cos(arg) => Expr::Product(vec![Expr::int(-1), Expr::Sin(arg.clone()), d_raw(arg, v)]),
        Expr::ExpFn(arg) => Expr::Product(vec![Expr::ExpFn(arg.clone()), d_raw(arg, v)]),
    }
}

/// Partial derivative of `e` with respect to `v`, canonicalized.
pub fn differentiate(e: &Expr, v: Var) -> Expr {
    simplify(&d_raw(e, v))
}

fn replace(e: &Expr, v: Var, with: &Expr) -> Expr {
    match e {
        Expr::Constant(_) => e.clone(),
        Expr::Variable(w) => {
            if *w == v {
                with.clone()
            } else {
                e.clone()
            }
        }
        Expr::Sum(items) => Expr::Sum(items.iter().map(|t| replace(t, v, with)).collect()),
        Expr::Product(items) => Expr::Product(items.iter().map(|t| replace(t, v, with)).collect()),
        Expr::Power(base, n) => Expr::Power(Box::new(replace(base, v, with)), *n),
        Expr::Sin(arg) => Expr::Sin(Box::new(replace(arg, v, with))),
        Expr::Cos(arg) => Expr::Cos(Box::new(replace(arg, v, with))),
        Expr::ExpFn(arg) => Expr::ExpFn(Box::new(replace(arg, v, with))),
    }
}

/// Replaces every occurrence of `v` by `replacement` and canonicalizes.
pub fn substitute(e: &Expr, v: Var, replacement: &Expr) -> Expr {
    simplify(&replace(e, v, replacement))
}

fn terms_of(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Sum(items) => items.clone(),
        other if other.is_zero() => Vec::new(),
        other => vec![other.clone()],
    }
}

fn factors_of(e: &Expr) -> Vec<Expr> {
    match e {
        Expr::Product(items) => items.clone(),
        other => vec![other.clone()],
    }
}

/// Slope of `arg` in `v` when `arg = slope*v + rest` with `rest` free of `v`.
fn linear_slope(arg: &Expr, v: Var) -> Option<Rational> {
    let slope = differentiate(arg, v);
    let lambda = slope.as_constant()?.clone();
    if lambda.is_zero() {
        return None;
    }
    let rest = simplify(&Expr::Sum(vec![
        arg.clone(),
        Expr::Product(vec![Expr::Constant(-lambda.clone()), Expr::Variable(v)]),
    ]));
    (!rest.contains(v)).then_some(lambda)
}

/// Largest power of `v` multiplying a `sin`/`cos`/`exp` factor that is
/// integrated by parts.
const MAX_PARTS_POWER: i64 = 64;

/// `∫ f dv` for `f` a `sin`, `cos` or `exp` of `lambda*v + rest`.
fn integrate_function(f: &Expr, lambda: &Rational) -> Expr {
    let scale = Expr::Constant(lambda.recip());
    match f {
        Expr::Sin(arg) => Expr::Product(vec![Expr::int(-1), scale, Expr::Cos(arg.clone())]),
        Expr::Cos(arg) => Expr::Product(vec![scale, Expr::Sin(arg.clone())]),
        Expr::ExpFn(arg) => Expr::Product(vec![scale, Expr::ExpFn(arg.clone())]),
        _ => unreachable!("caller passes a function node"),
    }
}

/// `∫ v^m f dv` by repeated integration by parts:
/// `∫ v^m f = v^m F - m ∫ v^(m-1) F` with `F = ∫ f`.
fn integrate_by_parts(m: i64, f: &Expr, lambda: &Rational, v: Var) -> Expr {
    let big_f = integrate_function(f, lambda);
    if m == 0 {
        return big_f;
    }
    let (coeff, g) = match big_f {
        Expr::Product(mut items) => {
            let g = items.pop().expect("scaled function");
            (Expr::Product(items), g)
        }
        _ => unreachable!(),
    };
    let rest = integrate_by_parts(m - 1, &g, lambda, v);
    Expr::Product(vec![
        coeff,
        Expr::Sum(vec![
            Expr::Product(vec![Expr::pow(Expr::Variable(v), m), g]),
            Expr::Product(vec![Expr::int(-m), rest]),
        ]),
    ])
}

fn power_of(f: &Expr, v: Var) -> Option<i64> {
    match f {
        Expr::Variable(w) if *w == v => Some(1),
        Expr::Power(base, m) if **base == Expr::Variable(v) && *m >= 0 => Some(*m),
        _ => None,
    }
}

fn linear_function(f: &Expr, v: Var) -> Option<Rational> {
    match f {
        Expr::Sin(arg) | Expr::Cos(arg) | Expr::ExpFn(arg) => linear_slope(arg, v),
        _ => None,
    }
}

fn integrate_term(term: &Expr, v: Var) -> Option<Expr> {
    let (dependent, mut free): (Vec<Expr>, Vec<Expr>) =
        factors_of(term).into_iter().partition(|f| f.contains(v));
    let integrated = match dependent.as_slice() {
        [] => Expr::Variable(v),
        [f] if power_of(f, v).is_some() => {
            let m = power_of(f, v)?;
            Expr::Product(vec![
                Expr::Constant(Rational::new(BigInt::from(1), BigInt::from(m + 1))),
                Expr::pow(Expr::Variable(v), m + 1),
            ])
        }
        [f] => integrate_function(f, &linear_function(f, v)?),
        [p, f] | [f, p] if power_of(p, v).is_some() && linear_function(f, v).is_some() => {
            let m = power_of(p, v)?;
            if m > MAX_PARTS_POWER {
                return None;
            }
            integrate_by_parts(m, f, &linear_function(f, v)?, v)
        }
        _ => return None,
    };
    free.push(integrated);
    Some(Expr::Product(free))
}

/// An antiderivative of `e` with respect to `v`, or `None` when `e` lies
/// outside the integrable class described in the module docs.
///
/// The constant of integration is zero: every term of the result depends
/// on `v`.
pub fn antiderivative(e: &Expr, v: Var) -> Option<Expr> {
    let e = simplify(e);
    let terms = terms_of(&e)
        .iter()
        .map(|t| integrate_term(t, v))
        .collect::<Option<Vec<_>>>()?;
    Some(simplify(&Expr::Sum(terms)))
}

fn check_bound(bound: &Expr, v: Var) -> Result<(), ExprError> {
    if bound.contains(v) {
        Err(ExprError::IllegalBound { var: v })
    } else {
        Ok(())
    }
}

/// `∫_lower^upper e dv`. Neither bound may mention `v`.
///
/// `Ok(None)` means no closed-form antiderivative exists in the integrable
/// class.
pub fn definite_integral(
    e: &Expr,
    v: Var,
    lower: &Expr,
    upper: &Expr,
) -> Result<Option<Expr>, ExprError> {
    check_bound(lower, v)?;
    check_bound(upper, v)?;
    Ok(antiderivative(e, v).map(|anti| {
        simplify(&Expr::Sum(vec![
            replace(&anti, v, upper),
            Expr::neg_raw(replace(&anti, v, lower)),
        ]))
    }))
}

/// Integral with a variable upper limit: `∫_lower^v e(w) dw`, where the
/// dummy `w` runs over the same axis as `v`.
pub fn integrate_from(e: &Expr, v: Var, lower: &Expr) -> Result<Option<Expr>, ExprError> {
    check_bound(lower, v)?;
    Ok(antiderivative(e, v).map(|anti| {
        simplify(&Expr::Sum(vec![
            anti.clone(),
            Expr::neg_raw(replace(&anti, v, lower)),
        ]))
    }))
}
