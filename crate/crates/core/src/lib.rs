//! Exact solutions of the generalized Tricomi equation `f_xx + a(x) f_yy = 0`.
//!
//! * [`expr`]: symbolic expression core (parse, simplify, differentiate,
//!   integrate, evaluate).
//! * [`tricomi`]: the integral construction of new solutions from a seed,
//!   its derivation trace, iteration, and boundary-value constructions.
//! * [`numeric`]: quadrature fallback and grid verification.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod expr;
pub mod numeric;
pub mod tricomi;
