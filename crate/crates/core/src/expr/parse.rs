//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-x1^2` is `-(x1^2)`) and is right
//! associative. An exponent that is not an integer literal is desugared to
//! `exp(exponent*ln(base))`.

use std::sync::Arc;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var, MAX_SPATIAL_INDEX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable `x{index}` at position {pos} exceeds dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its start offset.
    fn next(&mut self) -> Result<(Token, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[self.pos..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let len = number_len(rest);
            let text = &rest[..len];
            let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            self.pos += len;
            return Ok((Token::Number(value), start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Token::Ident(rest[..len].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            other => {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok((tok, start))
    }
}

fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    current_pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, pos) = self.lexer.next()?;
        self.current = tok;
        self.current_pos = pos;
        Ok(())
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), ParseError> {
        if self.current == tok {
            self.advance()
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = match &self.current {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(s) => format!("`{s}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        };
        ParseError::Syntax {
            pos: self.current_pos,
            msg: format!("expected {expected}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.current {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.current {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.current == Token::Op('-') {
            self.advance()?;
            let literal = matches!(self.current, Token::Number(_));
            let inner = self.factor()?;
            // `-2` is a negative literal; `-(2)` and `-2^2` are negations
            return Ok(match inner {
                Expr::Const(c) if literal => Expr::Const(-c),
                other => Expr::Neg(Arc::new(other)),
            });
        }
        let base = self.base()?;
        if self.current != Token::Op('^') {
            return Ok(base);
        }
        self.advance()?;
        let exponent = self.factor()?;
        Ok(match exponent {
            Expr::Const(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => {
                Expr::Pow(Arc::new(base), c as i32)
            }
            other => Expr::Func(
                Func::Exp,
                Arc::new(Expr::Binary(
                    BinOp::Mul,
                    Arc::new(other),
                    Arc::new(Expr::Func(Func::Ln, Arc::new(base))),
                )),
            ),
        })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.current.clone() {
            Token::Number(v) => {
                self.advance()?;
                Ok(Expr::Const(v))
            }
            Token::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let pos = self.current_pos;
                self.advance()?;
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Token::LParen, &format!("`(` after `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    return Ok(Expr::Func(f, Arc::new(arg)));
                }
                let var = ident_to_var(&name).ok_or_else(|| ParseError::UnknownIdentifier {
                    name: name.clone(),
                    pos,
                })?;
                if let Var::X(index) = var {
                    if index > self.dim {
                        return Err(ParseError::VariableOutOfRange {
                            index,
                            dim: self.dim,
                            pos,
                        });
                    }
                }
                Ok(Expr::Var(var))
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }
}

fn ident_to_var(name: &str) -> Option<Var> {
    if name == "eps" {
        return Some(Var::Eps);
    }
    let digits = name.strip_prefix('x')?;
    if digits.len() != 1 {
        return None;
    }
    let index = digits.parse::<usize>().ok()?;
    (1..=MAX_SPATIAL_INDEX).contains(&index).then_some(Var::X(index))
}

/// Parses an expression whose spatial variables must lie in `x1..xd`.
pub fn parse(text: &str, d: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        current: Token::End,
        current_pos: 0,
        dim: d,
    };
    parser.advance()?;
    let e = parser.expr()?;
    if parser.current != Token::End {
        return Err(parser.unexpected("end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_corpus_expressions() {
        let e = parse("exp(-(x1^2+x2^2))", 2).unwrap();
        assert_eq!(e.max_spatial_index(), 2);
        let e = parse("eps*sin(x1)", 1).unwrap();
        assert!(e.uses_eps());
    }

    #[test]
    fn rejects_variable_beyond_dimension() {
        assert_eq!(
            parse("sin(x3)", 2),
            Err(ParseError::VariableOutOfRange { index: 3, dim: 2, pos: 4 })
        );
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert!(matches!(parse("abs(x1)", 1), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("x10", 9), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("pi", 1), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(
            parse("x1 + * 2", 1),
            Err(ParseError::Syntax {
                pos: 5,
                msg: "expected a number, variable, function or `(`, found `*`".into()
            })
        );
        assert!(matches!(parse("sin x1", 1), Err(ParseError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("(x1", 1), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1 x1", 1), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x1 # 2", 1), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("", 1), Err(ParseError::Syntax { pos: 0, .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x1^2", 1).unwrap();
        assert!(matches!(e, Expr::Neg(ref inner) if matches!(**inner, Expr::Pow(_, 2))));
        let e = parse("1 - 2 - 3", 0).unwrap();
        assert_eq!(e.eval(0.5, &[]).unwrap(), -4.0);
        // 3^2 is not an integer literal, so the outer power goes through exp/ln
        let e = parse("2^3^2", 0).unwrap();
        assert!((e.eval(0.5, &[]).unwrap() - 512.0).abs() < 1e-12);
        let e = parse("8/2/2", 0).unwrap();
        assert_eq!(e.eval(0.5, &[]).unwrap(), 2.0);
    }

    #[test]
    fn non_integer_powers_desugar() {
        let e = parse("eps^(1/eps)", 0).unwrap();
        assert_eq!(e.to_string(), "exp(1/eps*ln(eps))");
        let e = parse("x1^0.5", 1).unwrap();
        assert!((e.eval(0.1, &[4.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(parse("x1^-2", 1).unwrap(), Expr::Pow(_, -2)));
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(parse("1e-3", 0).unwrap(), Expr::Const(1e-3));
        assert_eq!(parse("2.5E+2", 0).unwrap(), Expr::Const(250.0));
        assert_eq!(parse(".5", 0).unwrap(), Expr::Const(0.5));
    }
}
