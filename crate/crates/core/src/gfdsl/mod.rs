//! Expression language for generating functions `g(x, y, z)`.
//!
//! Parsing expands vector syntax componentwise for a declared dimension, so
//! the resulting [`Expr`] is a purely scalar tree that can be differentiated
//! exactly in every variable up to order four.

mod deriv;
mod domain;
mod eval;
mod expr;
mod parse;

pub use deriv::{d, deriv, deriv_in_order, DerivError, MAX_ORDER};
pub use domain::{DomainBox, DomainError, Interval};
pub use eval::{eval, eval_flat, DomainKind, EvalError, Program};
pub use expr::{Expr, Node, Var};
pub use parse::{parse, ParseError};

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64], y: &[f64], z: f64) -> f64 {
        eval(&parse(src, 2).unwrap(), x, y, z).unwrap()
    }

    #[test]
    fn evaluates_bilinear_example() {
        let v = ev("dot(x,y) - z", &[0.3, 0.7], &[1.0, -0.5], -0.25);
        assert!((v - 0.2).abs() < 1e-15);
        assert_eq!(ev("-z", &[0.1, 0.2], &[0.3, 0.4], 1.0), -1.0);
    }

    #[test]
    fn parses_builtin_shapes() {
        for src in ["dot(x,y) - z", "-0.5*norm2(x-y) - z", "-log(norm(x-y)) - z", "x[0]^2 + neg(y[1]) * z"] {
            parse(src, 2).unwrap();
        }
    }

    #[test]
    fn reports_errors_with_positions() {
        match parse("dot(x,y) - q", 2) {
            Err(ParseError::UnknownIdentifier { line: 1, col: 12, name }) => assert_eq!(name, "q"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x[2] - z", 2), Err(ParseError::DimensionMismatch { .. })));
        assert!(matches!(parse("x + z", 2), Err(ParseError::DimensionMismatch { .. })));
        assert!(matches!(parse("x * y", 2), Err(ParseError::DimensionMismatch { .. })));
        assert!(matches!(parse("norm(x", 2), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1 +\n  $", 2), Err(ParseError::Syntax { line: 2, col: 3, .. })));
        assert!(matches!(parse("x", 2), Err(ParseError::DimensionMismatch { .. })));
    }

    #[test]
    fn derivative_examples() {
        let g = parse("dot(x,y) - z", 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = deriv(&g, &[Var::X(i), Var::Y(j)]).unwrap();
                assert_eq!(e.as_const(), Some(if i == j { 1.0 } else { 0.0 }));
            }
        }
        assert_eq!(deriv(&g, &[Var::Z]).unwrap().as_const(), Some(-1.0));
        let q = parse("-0.5*norm2(x-y) - z", 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = deriv(&q, &[Var::X(i), Var::X(j)]).unwrap();
                assert_eq!(e.as_const(), Some(if i == j { -1.0 } else { 0.0 }));
            }
        }
        assert!(matches!(deriv(&g, &[Var::Z; 5]), Err(DerivError::OrderTooHigh(5))));
    }

    #[test]
    fn norm_derivative_at_zero_fails_at_evaluation() {
        let g = parse("norm(x-y)", 2).unwrap();
        let dg = deriv(&g, &[Var::X(0)]).unwrap();
        assert!(eval(&g, &[0.0, 0.0], &[0.0, 0.0], 0.0).is_ok());
        let err = eval(&dg, &[0.0, 0.0], &[0.0, 0.0], 0.0).unwrap_err();
        assert_eq!(err.kind, DomainKind::DivisionByZero);
        assert!(err.node.contains("sqrt"));
    }

    #[test]
    fn log_domain_error_names_node() {
        let err = eval(&parse("log(x[0]) - z", 2).unwrap(), &[-1.0, 0.0], &[0.0, 0.0], 0.0).unwrap_err();
        assert_eq!(err.kind, DomainKind::LogNonPositive);
        assert_eq!(err.node, "log(x[0])");
    }

    #[test]
    fn program_matches_tree_and_reports_errors() {
        let g = parse("-log(norm(x-y)) - z + exp(x[0]*y[1])/3", 2).unwrap();
        let exprs: Vec<Expr> = vec![
            g.clone(),
            deriv(&g, &[Var::X(0)]).unwrap(),
            deriv(&g, &[Var::X(0), Var::Y(1), Var::X(1)]).unwrap(),
        ];
        let prog = Program::new(&exprs, 2);
        let vars = [0.1, -0.2, 0.9, 0.3, 0.5];
        let out = prog.eval(&vars).unwrap();
        for (e, o) in exprs.iter().zip(out) {
            assert_eq!(eval_flat(e, &vars).unwrap(), o);
        }
        let bad = [0.5, 0.5, 0.5, 0.5, 0.0];
        assert!(prog.eval(&bad).is_err());
    }

    #[test]
    fn printing_reparses_identically() {
        for src in ["dot(x,y) - z", "-0.5*norm2(x-y) - z", "-log(norm(x-y)) - z", "x[0]^-1.5 * 1e-7 - -z"] {
            let e = parse(src, 2).unwrap();
            let again = parse(&e.to_string(), 2).unwrap();
            assert_eq!(e, again, "{src}");
            assert_eq!(e.to_string(), again.to_string());
        }
    }
}
