//! Canonical simplification.
//!
//! A tree is normalized by converting it into a polynomial whose
//! indeterminates ("atoms") are the variables, canonical `sin`/`cos`/`exp`
//! nodes, and multi-term sums raised to negative powers. Polynomials in that
//! representation are unique, so converting back yields a canonical tree:
//! products are expanded, like terms collected with exact rational
//! arithmetic, and children sorted by the `Ord` on [`Expr`].

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::{Expr, Rational};

/// Atom -> exponent. Exponents are never zero.
type Monomial = BTreeMap<Expr, i64>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    fn constant(c: Rational) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    fn atom(a: Expr, exponent: i64) -> Poly {
        let mut m = Monomial::new();
        m.insert(a, exponent);
        let mut p = Poly::default();
        p.terms.insert(m, Rational::one());
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (atom, e) in m2 {
                    let slot = m.entry(atom.clone()).or_insert(0);
                    *slot += e;
                    if *slot == 0 {
                        m.remove(atom);
                    }
                }
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    fn pow(&self, n: i64) -> Poly {
        if n == 0 {
            return Poly::one();
        }
        if self.is_zero() {
            return if n > 0 {
                Poly::default()
            } else {
                Poly::atom(Expr::zero(), n)
            };
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return monomial_pow(m, c, n);
        }
        if n < 0 {
            return Poly::atom(from_poly(self), n);
        }
        let mut base = self.clone();
        let mut acc = Poly::one();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// `(c * prod a^e)^n`, re-expanding any sum or zero atom whose exponent
/// turns positive.
fn monomial_pow(m: &Monomial, c: &Rational, n: i64) -> Poly {
    let mut head = Monomial::new();
    let mut expand = Poly::one();
    for (atom, e) in m {
        let k = e * n;
        match atom {
            Expr::Sum(_) | Expr::Constant(_) if k > 0 => {
                expand = expand.mul(&to_poly(atom).pow(k));
            }
            _ => {
                head.insert(atom.clone(), k);
            }
        }
    }
    let mut p = Poly::default();
    p.add_term(head, c.pow(n as i32));
    p.mul(&expand)
}

fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Constant(c) => Poly::constant(c.clone()),
        Expr::Variable(_) => Poly::atom(e.clone(), 1),
        Expr::Sum(items) => {
            let mut acc = Poly::default();
            for item in items {
                acc.add_assign(&to_poly(item));
            }
            acc
        }
        Expr::Product(items) => {
            let mut acc = Poly::one();
            for item in items {
                if acc.is_zero() {
                    break;
                }
                acc = acc.mul(&to_poly(item));
            }
            acc
        }
        Expr::Power(base, n) => to_poly(base).pow(*n),
        Expr::Sin(arg) => {
            let p = to_poly(arg);
            if p.is_zero() {
                Poly::default()
            } else {
                Poly::atom(Expr::Sin(Box::new(from_poly(&p))), 1)
            }
        }
        Expr::Cos(arg) => {
            let p = to_poly(arg);
            if p.is_zero() {
                Poly::one()
            } else {
                Poly::atom(Expr::Cos(Box::new(from_poly(&p))), 1)
            }
        }
        Expr::ExpFn(arg) => {
            let p = to_poly(arg);
            if p.is_zero() {
                Poly::one()
            } else {
                Poly::atom(Expr::ExpFn(Box::new(from_poly(&p))), 1)
            }
        }
    }
}

fn from_poly(p: &Poly) -> Expr {
    let mut terms: Vec<Expr> = p
        .terms
        .iter()
        .map(|(m, c)| {
            let mut factors: Vec<Expr> = m
                .iter()
                .map(|(atom, &e)| {
                    if e == 1 {
                        atom.clone()
                    } else {
                        Expr::Power(Box::new(atom.clone()), e)
                    }
                })
                .collect();
            factors.sort();
            if !c.is_one() || factors.is_empty() {
                factors.insert(0, Expr::Constant(c.clone()));
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                Expr::Product(factors)
            }
        })
        .collect();
    terms.sort();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.pop().unwrap(),
        _ => Expr::Sum(terms),
    }
}

/// Returns the canonical form of `e`.
///
/// Total and idempotent. The result has the same value as `e` wherever both
/// are defined; expansion may remove removable singularities such as
/// `x^-1 * x`.
pub fn simplify(e: &Expr) -> Expr {
    from_poly(&to_poly(e))
}
