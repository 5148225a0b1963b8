//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ['-'] atom
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! number := digit+ ['.' digit+]
//! ```
//!
//! Errors carry the byte offset where parsing failed.

use super::{Block, Expr, Var};
use crate::{Error, Result};

pub fn parse(input: &str) -> Result<Expr> {
    let mut p = Parser {
        bytes: input.as_bytes(),
        pos: 0,
    };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if op == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let atom = self.atom()?;
            // A negated literal is the literal; keeps printing canonical.
            return Ok(match atom {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.ident(),
            _ => Err(self.error("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.')
            && self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit)
        {
            self.pos += 1;
            while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("invalid number {text:?}"),
        })?;
        Ok(Expr::Const(value))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii ident");
        if let Some(var) = parse_var(name) {
            return Ok(Expr::Var(var));
        }
        let arity = match name {
            "abs" => 1,
            "min" | "max" => 2,
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unknown identifier {name:?}"),
                })
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.error(&format!("expected '(' after {name:?}")));
        }
        self.pos += 1;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        if self.peek() != Some(b')') {
            return Err(self.error("expected ')'"));
        }
        self.pos += 1;
        if args.len() != arity {
            return Err(Error::Parse {
                offset: start,
                message: format!("{name} expects {arity} argument(s), got {}", args.len()),
            });
        }
        let mut iter = args.into_iter();
        Ok(match name {
            "abs" => Expr::Abs(Box::new(iter.next().expect("arity checked"))),
            "min" => Expr::Min(
                Box::new(iter.next().expect("arity checked")),
                Box::new(iter.next().expect("arity checked")),
            ),
            "max" => Expr::Max(
                Box::new(iter.next().expect("arity checked")),
                Box::new(iter.next().expect("arity checked")),
            ),
            _ => unreachable!("arity table covers all functions"),
        })
    }
}

/// `x<digits>` or `y<digits>`, e.g. `x0`, `y12`.
fn parse_var(name: &str) -> Option<Var> {
    let (head, digits) = name.split_at(1);
    let block = match head {
        "x" => Block::X,
        "y" => Block::Y,
        _ => return None,
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|index| Var { block, index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variables_and_numbers() {
        assert_eq!(
            parse("x0").unwrap(),
            Expr::Var(Var {
                block: Block::X,
                index: 0
            })
        );
        assert_eq!(
            parse("y12").unwrap(),
            Expr::Var(Var {
                block: Block::Y,
                index: 12
            })
        );
        assert_eq!(parse("3.25").unwrap(), Expr::Const(3.25));
        assert_eq!(parse("-7").unwrap(), Expr::Const(-7.0));
    }

    #[test]
    fn reports_offset_of_missing_operand() {
        match parse("x0 +") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_unknown_identifier() {
        match parse("x0 + foo") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 5);
                assert!(message.contains("foo"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_arity_mismatch() {
        assert!(parse("min(x0)").is_err());
        assert!(parse("abs(x0, x1)").is_err());
        assert!(parse("min(x0, x1, x2)").is_err());
    }

    #[test]
    fn rejects_trailing_input() {
        match parse("x0 x1") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("(x0").is_err());
        assert!(parse("x0)").is_err());
    }

    #[test]
    fn bad_variable_names_are_unknown_idents() {
        assert!(parse("x").is_err());
        assert!(parse("x0a").is_err());
        assert!(parse("z0").is_err());
    }
}
