use super::expr::{Expr, Node, Var};
use thiserror::Error;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivError {
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
}

/// First partial derivative of `e` with respect to `v`.
pub fn d(e: &Expr, v: Var) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::constant(0.0),
        Node::Var(w) => Expr::constant(if *w == v { 1.0 } else { 0.0 }),
        Node::Add(a, b) => Expr::add(d(a, v), d(b, v)),
        Node::Sub(a, b) => Expr::sub(d(a, v), d(b, v)),
        Node::Mul(a, b) => Expr::add(Expr::mul(d(a, v), b.clone()), Expr::mul(a.clone(), d(b, v))),
        Node::Div(a, b) => {
            let da = d(a, v);
            let db = d(b, v);
            if db.is_zero() {
                Expr::div(da, b.clone())
            } else {
                // a'/b - a b'/b^2
                Expr::sub(
                    Expr::div(da, b.clone()),
                    Expr::div(Expr::mul(a.clone(), db), Expr::pow(b.clone(), 2.0)),
                )
            }
        }
        Node::Pow(a, k) => {
            let da = d(a, v);
            if da.is_zero() {
                return Expr::constant(0.0);
            }
            Expr::mul(Expr::mul(Expr::constant(*k), Expr::pow(a.clone(), k - 1.0)), da)
        }
        Node::Neg(a) => Expr::neg(d(a, v)),
        Node::Sqrt(a) => {
            let da = d(a, v);
            if da.is_zero() {
                return Expr::constant(0.0);
            }
            // a' / (2 sqrt(a)), reusing the node `e` itself.
            Expr::div(da, Expr::mul(Expr::constant(2.0), e.clone()))
        }
        Node::Exp(a) => {
            let da = d(a, v);
            if da.is_zero() {
                return Expr::constant(0.0);
            }
            Expr::mul(e.clone(), da)
        }
        Node::Log(a) => {
            let da = d(a, v);
            if da.is_zero() {
                return Expr::constant(0.0);
            }
            Expr::div(da, a.clone())
        }
    }
}

/// Exact symbolic partial derivative for a multi-index of total order <= 4.
///
/// The multi-index is sorted before differentiating, so permutations of the
/// same index set produce the identical tree.
pub fn deriv(e: &Expr, multi_index: &[Var]) -> Result<Expr, DerivError> {
    if multi_index.len() > MAX_ORDER {
        return Err(DerivError::OrderTooHigh(multi_index.len()));
    }
    let mut idx = multi_index.to_vec();
    idx.sort();
    Ok(idx.iter().fold(e.clone(), |acc, &v| d(&acc, v)))
}

/// Same as [`deriv`] but differentiating in the given order, without sorting.
/// Exposed for symmetry tests of mixed partials.
pub fn deriv_in_order(e: &Expr, multi_index: &[Var]) -> Result<Expr, DerivError> {
    if multi_index.len() > MAX_ORDER {
        return Err(DerivError::OrderTooHigh(multi_index.len()));
    }
    Ok(multi_index.iter().fold(e.clone(), |acc, &v| d(&acc, v)))
}
