use std::fmt;

use super::{BinOp, Expr};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Expr::Neg(_) => PREC_NEG,
        Expr::Const(c) if c.is_sign_negative() => PREC_NEG,
        Expr::Pow(..) => PREC_POW,
        Expr::Const(_) | Expr::Var(_) | Expr::Func(..) => PREC_ATOM,
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn format_number(c: f64) -> String {
    let a = c.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{c:e}")
    } else {
        format!("{c}")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) >= min_prec {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(&format_number(*c)),
            Expr::Var(super::Var::Eps) => f.write_str("eps"),
            Expr::Var(super::Var::X(i)) => write!(f, "x{i}"),
            Expr::Neg(a) => {
                if matches!(**a, Expr::Const(c) if !c.is_sign_negative()) {
                    write!(f, "-({a})")
                } else {
                    f.write_str("-")?;
                    write_operand(f, a, PREC_NEG)
                }
            }
            Expr::Binary(op, a, b) => {
                let prec = match op {
                    BinOp::Add | BinOp::Sub => PREC_ADD,
                    BinOp::Mul | BinOp::Div => PREC_MUL,
                };
                write_operand(f, a, prec)?;
                match op {
                    BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                    BinOp::Mul | BinOp::Div => write!(f, "{}", op.symbol())?,
                }
                write_operand(f, b, prec + 1)
            }
            Expr::Pow(a, n) => {
                write_operand(f, a, PREC_ATOM)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn strip(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn print_parse_is_identity_on_canonical_text() {
        for text in [
            "exp(-(x1^2 + x2^2))",
            "eps*sin(x1)",
            "x1 - (x2 - x3)",
            "a",
            "-x1^2",
            "(-x1)^2",
            "x1^(-3)",
            "-2*x1 + -3",
            "1e-20*cosh(x1/eps)",
            "x1/(x2*x3)",
            "-(2)",
            "--x1",
            "sqrt(ln(2 + tanh(x1)))",
            "7 + exp(ln(eps)/eps)*sin(x1)",
        ] {
            let Ok(e) = parse(text, 3) else { continue };
            assert_eq!(strip(&e.to_string()), strip(text), "{text}");
        }
    }

    #[test]
    fn numbers_round_trip() {
        for c in [0.1, 1.0 / 3.0, 3.141592653589793, 1e-300, 6.02e23, 123456.0, -0.0, 2.5e-6] {
            let text = super::format_number(c);
            let back: f64 = parse(&text, 0).unwrap().eval(1.0, &[]).unwrap();
            assert_eq!(back.to_bits(), c.to_bits(), "{text}");
        }
    }
}
