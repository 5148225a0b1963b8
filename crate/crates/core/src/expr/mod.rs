//! A small arithmetic expression language over two variable blocks.
//!
//! Variables are written `x0, x1, ...` and `y0, y1, ...`; the operators are
//! `+ - * /`, unary minus, and the calls `min(a,b)`, `max(a,b)`, `abs(a)`.
//! Parsing reports byte offsets, printing is canonical (fully
//! parenthesized), and `parse(print(parse(s))) == parse(s)` for every
//! string `s` the parser accepts.
//!
//! Beyond pointwise IEEE evaluation the module provides sound interval
//! enclosures (outward-rounded) and Lipschitz bounds derived from interval
//! enclosures of the partial derivatives; those bounds feed every solver
//! grid in the crate.

mod interval;
mod modulus;
mod parse;

pub use interval::{interval_eval, lipschitz_modulus, Interval};
pub use modulus::ContinuityModulus;
pub use parse::parse;

use crate::{Error, Result};

/// Smallest denominator magnitude accepted by pointwise division.
pub const DIV_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Block {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub block: Block,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// IEEE double evaluation. Division by a denominator within
    /// [`DIV_GUARD`] of zero is an error, as is a variable index beyond the
    /// supplied slices.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => {
                let slice = match v.block {
                    Block::X => x,
                    Block::Y => y,
                };
                *slice.get(v.index).ok_or(Error::DimensionMismatch {
                    expected: v.index + 1,
                    got: slice.len(),
                })?
            }
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Abs(a) => a.eval(x, y)?.abs(),
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => {
                let denom = b.eval(x, y)?;
                if denom.abs() < DIV_GUARD {
                    return Err(Error::DivisionNearZero);
                }
                a.eval(x, y)? / denom
            }
            Expr::Min(a, b) => a.eval(x, y)?.min(b.eval(x, y)?),
            Expr::Max(a, b) => a.eval(x, y)?.max(b.eval(x, y)?),
        })
    }

    /// Number of leading variables referenced per block: `(max x-index + 1,
    /// max y-index + 1)`, zero when a block is unused.
    pub fn arity(&self) -> (usize, usize) {
        let mut nx = 0;
        let mut ny = 0;
        self.visit_vars(&mut |v| match v.block {
            Block::X => nx = nx.max(v.index + 1),
            Block::Y => ny = ny.max(v.index + 1),
        });
        (nx, ny)
    }

    fn visit_vars<F: FnMut(Var)>(&self, f: &mut F) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Abs(a) => a.visit_vars(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Canonical printer: fully parenthesized, `{}` float formatting (no
    /// exponents, shortest round-trip digits).
    pub fn print(&self) -> String {
        match self {
            Expr::Const(c) => format!("{c}"),
            Expr::Var(v) => match v.block {
                Block::X => format!("x{}", v.index),
                Block::Y => format!("y{}", v.index),
            },
            Expr::Neg(a) => format!("(-{})", a.print()),
            Expr::Abs(a) => format!("abs({})", a.print()),
            Expr::Add(a, b) => format!("({}+{})", a.print(), b.print()),
            Expr::Sub(a, b) => format!("({}-{})", a.print(), b.print()),
            Expr::Mul(a, b) => format!("({}*{})", a.print(), b.print()),
            Expr::Div(a, b) => format!("({}/{})", a.print(), b.print()),
            Expr::Min(a, b) => format!("min({},{})", a.print(), b.print()),
            Expr::Max(a, b) => format!("max({},{})", a.print(), b.print()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let e = parse("(x0-0.5)*(y0-0.5)").unwrap();
        assert_eq!(e.eval(&[1.0], &[1.0]).unwrap(), 0.25);
        assert_eq!(e.eval(&[0.0], &[1.0]).unwrap(), -0.25);
        let id = parse("x0").unwrap();
        assert_eq!(id.eval(&[0.75], &[]).unwrap(), 0.75);
    }

    #[test]
    fn eval_operator_precedence() {
        let e = parse("1+2*3").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 7.0);
        let e = parse("2*3-1/2").unwrap();
        assert_eq!(e.eval(&[], &[]).unwrap(), 5.5);
        let e = parse("-x0*x0").unwrap();
        // factor := ['-'] atom, so this is (-x0)*x0.
        assert_eq!(e.eval(&[2.0], &[]).unwrap(), -4.0);
    }

    #[test]
    fn eval_division_guard() {
        let e = parse("1/x0").unwrap();
        assert!(matches!(
            e.eval(&[1e-13], &[]),
            Err(Error::DivisionNearZero)
        ));
        assert_eq!(e.eval(&[0.5], &[]).unwrap(), 2.0);
    }

    #[test]
    fn eval_min_max_abs() {
        let e = parse("min(x0, max(y0, 0.25)) + abs(0 - x0)").unwrap();
        assert_eq!(e.eval(&[0.5], &[0.1]).unwrap(), 0.75);
    }

    #[test]
    fn arity_counts_blocks() {
        let e = parse("x0 + x2*y1").unwrap();
        assert_eq!(e.arity(), (3, 2));
        assert_eq!(parse("3").unwrap().arity(), (0, 0));
    }

    #[test]
    fn print_round_trips_examples() {
        for src in [
            "x0 +1 - 0.5*y1",
            "(x0-0.5)*(y0-0.5)",
            "min(x0, max(x1, abs(-x2)))",
            "-x0/ ( y0 + 2 )",
            "1+2+3+4",
            "2*3-1/2",
        ] {
            let ast = parse(src).unwrap();
            let printed = ast.print();
            let reparsed = parse(&printed).unwrap();
            assert_eq!(ast, reparsed, "round trip through {printed:?}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Const(n as f64 / 8.0)),
            (0usize..3).prop_map(|i| Expr::Var(Var {
                block: Block::X,
                index: i
            })),
            (0usize..3).prop_map(|i| Expr::Var(Var {
                block: Block::Y,
                index: i
            })),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Min(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Max(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Abs(Box::new(a))),
                // The parser folds a negated literal into the constant, so
                // generate that canonical form directly.
                inner.prop_map(|a| match a {
                    Expr::Const(c) => Expr::Const(-c),
                    other => Expr::Neg(Box::new(other)),
                }),
            ]
        })
    }

    proptest! {
        // The printer emits a parse of itself for any AST built from
        // nonnegative literals (the parser folds "-c" into a constant, so
        // `Neg(Const)` is not a canonical form).
        #[test]
        fn print_parse_is_identity(ast in arb_expr()) {
            let printed = ast.print();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &ast);
            prop_assert_eq!(reparsed.print(), printed);
        }
    }
}
