//! Scalar expressions in the coupling parameter `g`.
//!
//! The grammar covers exactly what measurement-operator entries need:
//! rationals, `g`, the four arithmetic operations, unary minus, integer
//! powers and `sqrt`. Expressions are immutable after parsing and evaluation
//! is reentrant.

mod matrix_fn;
mod parse;

pub use matrix_fn::{
    default_taylor_anchor, taylor_coeffs, taylor_coeffs_at, taylor_fit_fn, GMatrixFn, GRange,
    TaylorSeries,
};
pub use parse::parse;

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::fmt;

/// Expression tree over numeric literals and the symbol `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum GExpr<R: Real> {
    Num(R),
    G,
    Neg(Box<GExpr<R>>),
    Add(Box<GExpr<R>>, Box<GExpr<R>>),
    Sub(Box<GExpr<R>>, Box<GExpr<R>>),
    Mul(Box<GExpr<R>>, Box<GExpr<R>>),
    Div(Box<GExpr<R>>, Box<GExpr<R>>),
    /// Integer power of a base expression.
    Pow(Box<GExpr<R>>, i32),
    Sqrt(Box<GExpr<R>>),
}

impl<R: Real> GExpr<R> {
    pub fn num(x: R) -> Self {
        assert!(x.is_finite(), "expression literals must be finite");
        GExpr::Num(x)
    }

    /// Evaluates at a coupling value. Negative square-root arguments and
    /// vanishing divisors are domain errors, never NaN or ±Inf.
    pub fn eval(&self, g: R) -> Result<R> {
        match self {
            GExpr::Num(x) => Ok(*x),
            GExpr::G => Ok(g),
            GExpr::Neg(x) => Ok(-x.eval(g)?),
            GExpr::Add(a, b) => Ok(a.eval(g)? + b.eval(g)?),
            GExpr::Sub(a, b) => Ok(a.eval(g)? - b.eval(g)?),
            GExpr::Mul(a, b) => Ok(a.eval(g)? * b.eval(g)?),
            GExpr::Div(a, b) => {
                let den = b.eval(g)?;
                if den.is_zero() {
                    return Err(self.domain_error(g, format!("division by zero in `{b}`")));
                }
                Ok(a.eval(g)? / den)
            }
            GExpr::Pow(base, e) => {
                let b = base.eval(g)?;
                if *e < 0 && b.is_zero() {
                    return Err(self.domain_error(g, format!("zero base `{base}` with negative exponent")));
                }
                let v = b.powi(*e);
                if !v.is_finite() {
                    return Err(self.domain_error(g, "non-finite power".into()));
                }
                Ok(v)
            }
            GExpr::Sqrt(x) => {
                let arg = x.eval(g)?;
                if arg < R::zero() {
                    return Err(self.domain_error(
                        g,
                        format!("negative square-root argument {arg} in `sqrt({x})`"),
                    ));
                }
                Ok(arg.sqrt())
            }
        }
    }

    fn domain_error(&self, g: R, msg: String) -> Error {
        Error::Domain {
            expr: self.to_string(),
            g: g.to_f64().unwrap_or(f64::NAN),
            msg,
        }
    }

    /// True when the tree never references `g`.
    pub fn is_constant(&self) -> bool {
        match self {
            GExpr::Num(_) => true,
            GExpr::G => false,
            GExpr::Neg(x) | GExpr::Sqrt(x) | GExpr::Pow(x, _) => x.is_constant(),
            GExpr::Add(a, b) | GExpr::Sub(a, b) | GExpr::Mul(a, b) | GExpr::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// True when some subtree applies `sqrt` to a g-dependent argument, i.e.
    /// the entry is expandable around 0 only one-sidedly.
    pub fn has_g_dependent_sqrt(&self) -> bool {
        match self {
            GExpr::Num(_) | GExpr::G => false,
            GExpr::Sqrt(x) => !x.is_constant() || x.has_g_dependent_sqrt(),
            GExpr::Neg(x) | GExpr::Pow(x, _) => x.has_g_dependent_sqrt(),
            GExpr::Add(a, b) | GExpr::Sub(a, b) | GExpr::Mul(a, b) | GExpr::Div(a, b) => {
                a.has_g_dependent_sqrt() || b.has_g_dependent_sqrt()
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            GExpr::Add(..) | GExpr::Sub(..) => 1,
            GExpr::Mul(..) | GExpr::Div(..) => 2,
            GExpr::Neg(_) => 3,
            GExpr::Pow(..) => 4,
            GExpr::Num(_) | GExpr::G | GExpr::Sqrt(_) => 5,
        }
    }
}

/// Prints with the minimal parenthesization that reparses to the same tree.
impl<R: Real> fmt::Display for GExpr<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child<R: Real>(
            f: &mut fmt::Formatter<'_>,
            e: &GExpr<R>,
            min_prec: u8,
        ) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            GExpr::Num(x) => write!(f, "{x}"),
            GExpr::G => write!(f, "g"),
            GExpr::Neg(x) => {
                write!(f, "-")?;
                child(f, x, 4)
            }
            GExpr::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                // Right operand of +/- must bind tighter to keep
                // left-associativity on reparse.
                child(f, b, 2)
            }
            GExpr::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            GExpr::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            GExpr::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 3)
            }
            GExpr::Pow(base, e) => {
                child(f, base, 5)?;
                write!(f, "^{e}")
            }
            GExpr::Sqrt(x) => write!(f, "sqrt({x})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = GExpr<f64>;

    fn p(src: &str) -> E {
        parse(src).unwrap()
    }

    #[test]
    fn eval_paper_entries() {
        assert_eq!(p("1/2 - 2*g^2").eval(0.5).unwrap(), 0.0);
        let v = p("sqrt(1/6 - g - g^2)").eval(0.1).unwrap();
        assert!((v - (1.0f64 / 6.0 - 0.1 - 0.01).sqrt()).abs() < 1e-15);
        assert!((v - 0.238_047_6).abs() < 1e-7);
    }

    #[test]
    fn sqrt_domain_error_reports_subexpression() {
        let err = p("sqrt(1/6 - g - g^2)").eval(0.2).unwrap_err();
        match err {
            Error::Domain { expr, g, msg } => {
                assert_eq!(g, 0.2);
                assert!(expr.contains("sqrt"));
                assert!(msg.contains("-0.073"), "msg was: {msg}");
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn division_by_vanishing_subexpression_fails() {
        assert!(p("1/g").eval(0.0).is_err());
        assert!(p("1/(1 - g)").eval(1.0).is_err());
        assert!(p("g^-2").eval(0.0).is_err());
        assert!((p("1/g^2").eval(0.1).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn display_round_trips_structures() {
        for src in [
            "sqrt(1/2 + g)",
            "1/2 - 2*g^2",
            "-(g + 1)^3",
            "g*(1 - g)/(1 + g^2)",
            "1 - (2 - g)",
            "g^-2",
            "-g^2",
            "sqrt(sqrt(g))",
        ] {
            let ast = p(src);
            let printed = ast.to_string();
            assert_eq!(p(&printed), ast, "round trip failed for {src} -> {printed}");
        }
    }

    #[test]
    fn constant_and_sqrt_classification() {
        assert!(p("1/2 + 3^2").is_constant());
        assert!(!p("1/2 + g").is_constant());
        assert!(p("sqrt(1/2 + g)").has_g_dependent_sqrt());
        assert!(!p("sqrt(2)*g").has_g_dependent_sqrt());
    }
}
