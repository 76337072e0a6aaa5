use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

/// Evaluation failure. Domain errors carry the offending subexpression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("square root of negative value {value} in `{expr}`")]
    SqrtOfNegative { value: f64, expr: String },
    #[error("logarithm of non-positive value {value} in `{expr}`")]
    LnOfNonPositive { value: f64, expr: String },
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("coordinate x{index} requested but the point has dimension {dim}")]
    MissingCoordinate { index: usize, dim: usize },
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(f64),
}

impl Expr {
    /// Evaluates at scale `eps` and point `x`.
    ///
    /// Underflow to zero is not an error. Overflow yields an infinite value,
    /// which the asymptotic classifiers treat as a failure of moderateness.
    pub fn eval(&self, eps: f64, x: &[f64]) -> Result<f64, EvalError> {
        if !(eps > 0.0) {
            return Err(EvalError::NonPositiveEps(eps));
        }
        self.eval_unchecked(eps, x)
    }

    fn eval_unchecked(&self, eps: f64, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::Eps) => eps,
            Expr::Var(Var::X(i)) => *x.get(i - 1).ok_or(EvalError::MissingCoordinate {
                index: *i,
                dim: x.len(),
            })?,
            Expr::Neg(a) => -a.eval_unchecked(eps, x)?,
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.eval_unchecked(eps, x)?, b.eval_unchecked(eps, x)?);
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => {
                        if v == 0.0 {
                            return Err(EvalError::DivisionByZero { expr: self.to_string() });
                        }
                        u / v
                    }
                }
            }
            Expr::Pow(a, n) => {
                let u = a.eval_unchecked(eps, x)?;
                if u == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero { expr: self.to_string() });
                }
                u.powi(*n)
            }
            Expr::Func(f, a) => {
                let u = a.eval_unchecked(eps, x)?;
                match f.apply(u) {
                    Some(v) => v,
                    None if *f == Func::Sqrt => {
                        return Err(EvalError::SqrtOfNegative { value: u, expr: self.to_string() })
                    }
                    None => {
                        return Err(EvalError::LnOfNonPositive { value: u, expr: self.to_string() })
                    }
                }
            }
        })
    }
}
