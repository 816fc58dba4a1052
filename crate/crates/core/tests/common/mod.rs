#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use tricomi_forge::expr::{evaluate, Expr, Var};

fn leaf_from(kind: u8, p: i64, q: i64) -> Expr {
    match kind % 4 {
        0 => Expr::x(),
        1 => Expr::y(),
        _ => Expr::ratio(p, q),
    }
}

/// Random raw (non-canonical) tree with at most `depth` levels of operators.
pub fn random_tree<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return leaf_from(rng.gen(), rng.gen_range(-5..=5), rng.gen_range(1..=4));
    }
    let child = |rng: &mut R| random_tree(rng, depth - 1);
    match rng.gen_range(0..6) {
        0 => {
            let n = rng.gen_range(2..=3);
            Expr::Sum((0..n).map(|_| child(rng)).collect())
        }
        1 => {
            let n = rng.gen_range(2..=3);
            Expr::Product((0..n).map(|_| child(rng)).collect())
        }
        2 => Expr::pow(child(rng), rng.gen_range(-2..=3)),
        3 => Expr::sin(child(rng)),
        4 => Expr::cos(child(rng)),
        _ => Expr::exp(child(rng)),
    }
}

/// Proptest strategy for raw trees of bounded depth.
pub fn arb_tree(depth: u32) -> impl Strategy<Value = Expr> {
    let leaf = (any::<u8>(), -5i64..=5, 1i64..=4).prop_map(|(k, p, q)| leaf_from(k, p, q));
    leaf.prop_recursive(depth, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Sum),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Product),
            (inner.clone(), -2i64..=3).prop_map(|(b, n)| Expr::pow(b, n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.prop_map(Expr::exp),
        ]
    })
}

/// Points where derivative checks are made.
pub const PROBE_POINTS: [(f64, f64); 5] = [
    (0.3, -0.7),
    (1.1, 0.4),
    (-0.6, 1.3),
    (-1.4, -0.2),
    (0.75, 0.9),
];

/// Outcome of comparing a symbolic derivative with a central difference.
pub enum FdCheck {
    Agrees,
    /// Point skipped: undefined or too large for a meaningful difference.
    Skipped,
    Disagrees {
        symbolic: f64,
        difference: f64,
    },
}

pub const FD_H: f64 = 1e-5;
pub const FD_RTOL: f64 = 1e-6;
const FD_MAGNITUDE_CAP: f64 = 1e3;

/// Central difference of `e` in `v` at `(x, y)` against `de`.
pub fn fd_check(e: &Expr, de: &Expr, v: Var, x: f64, y: f64) -> FdCheck {
    let shift = |s: f64| match v {
        Var::X => (x + s, y),
        Var::Y => (x, y + s),
    };
    let (xp, yp) = shift(FD_H);
    let (xm, ym) = shift(-FD_H);
    let (Ok(fp), Ok(fm), Ok(f0), Ok(d)) = (
        evaluate(e, xp, yp),
        evaluate(e, xm, ym),
        evaluate(e, x, y),
        evaluate(de, x, y),
    ) else {
        return FdCheck::Skipped;
    };
    if ![fp, fm, f0, d]
        .iter()
        .all(|v| v.is_finite() && v.abs() <= FD_MAGNITUDE_CAP)
    {
        return FdCheck::Skipped;
    }
    let difference = (fp - fm) / (2.0 * FD_H);
    // A difference that still moves when the step doubles has not converged,
    // so it cannot judge the symbolic value either way.
    let (xp2, yp2) = shift(2.0 * FD_H);
    let (xm2, ym2) = shift(-2.0 * FD_H);
    let (Ok(fp2), Ok(fm2)) = (evaluate(e, xp2, yp2), evaluate(e, xm2, ym2)) else {
        return FdCheck::Skipped;
    };
    let coarse = (fp2 - fm2) / (4.0 * FD_H);
    let spread = (coarse - difference).abs();
    if spread.is_nan() || spread > FD_RTOL * (1.0 + d.abs()) {
        return FdCheck::Skipped;
    }
    if (difference - d).abs() <= FD_RTOL * (1.0 + d.abs()) {
        FdCheck::Agrees
    } else {
        FdCheck::Disagrees {
            symbolic: d,
            difference,
        }
    }
}
