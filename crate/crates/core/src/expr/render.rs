use num_traits::{One, Signed};

use super::{render_rational, Expr};

pub(super) fn render(e: &Expr) -> String {
    let mut out = String::new();
    write_sum_term(&mut out, e);
    out
}

/// Splits a leading negative coefficient off a term: `-3*x` -> `3*x`.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Constant(c) if c.is_negative() => Some(Expr::Constant(-c)),
        Expr::Product(items) => match items.first() {
            Some(Expr::Constant(c)) if c.is_negative() => {
                let c = -c;
                let mut rest: Vec<Expr> = items[1..].to_vec();
                if !c.is_one() {
                    rest.insert(0, Expr::Constant(c));
                }
                Some(match rest.len() {
                    0 => Expr::one(),
                    1 => rest.pop().unwrap(),
                    _ => Expr::Product(rest),
                })
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_sum_term(out: &mut String, e: &Expr) {
    match e {
        Expr::Sum(terms) => {
            for (i, term) in terms.iter().enumerate() {
                if i == 0 {
                    write_sum_child(out, term);
                } else if let Some(pos) = negated(term) {
                    out.push_str(" - ");
                    write_sum_child(out, &pos);
                } else {
                    out.push_str(" + ");
                    write_sum_child(out, term);
                }
            }
        }
        _ => write_term(out, e),
    }
}

fn write_sum_child(out: &mut String, e: &Expr) {
    if matches!(e, Expr::Sum(_)) {
        out.push('(');
        write_sum_term(out, e);
        out.push(')');
    } else {
        write_term(out, e);
    }
}

fn write_term(out: &mut String, e: &Expr) {
    match e {
        Expr::Product(items) => {
            let mut rest = &items[..];
            if let Some(Expr::Constant(c)) = items.first() {
                if (-c).is_one() && items.len() > 1 {
                    out.push('-');
                } else {
                    out.push_str(&render_rational(c));
                    if items.len() > 1 {
                        out.push('*');
                    }
                }
                rest = &items[1..];
            }
            for (i, factor) in rest.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_factor(out, factor);
            }
        }
        Expr::Constant(c) => out.push_str(&render_rational(c)),
        _ => write_factor(out, e),
    }
}

fn write_factor(out: &mut String, e: &Expr) {
    match e {
        Expr::Power(base, n) => {
            write_power_base(out, base);
            out.push('^');
            out.push_str(&n.to_string());
        }
        _ => write_atom(out, e),
    }
}

fn write_power_base(out: &mut String, e: &Expr) {
    match e {
        Expr::Variable(_) | Expr::Sin(_) | Expr::Cos(_) | Expr::ExpFn(_) => write_atom(out, e),
        Expr::Constant(c) if c.is_integer() && !c.is_negative() => write_atom(out, e),
        _ => {
            out.push('(');
            write_sum_term(out, e);
            out.push(')');
        }
    }
}

fn write_atom(out: &mut String, e: &Expr) {
    match e {
        Expr::Variable(v) => out.push_str(v.name()),
        Expr::Constant(c) if !c.is_negative() => out.push_str(&render_rational(c)),
        Expr::Sin(arg) => write_call(out, "sin", arg),
        Expr::Cos(arg) => write_call(out, "cos", arg),
        Expr::ExpFn(arg) => write_call(out, "exp", arg),
        _ => {
            out.push('(');
            write_sum_term(out, e);
            out.push(')');
        }
    }
}

fn write_call(out: &mut String, name: &str, arg: &Expr) {
    out.push_str(name);
    out.push('(');
    write_sum_term(out, arg);
    out.push(')');
}
