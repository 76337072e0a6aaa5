use super::{BinOp, Expr, Func, MultiIndex, Var};

impl Expr {
    /// Exact symbolic partial derivative with respect to `var`.
    pub fn partial(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.partial(var)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                let (da, db) = (a.partial(var), b.partial(var));
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                    // (a/b)' = a'/b - a*b'/b^2
                    BinOp::Div => Expr::sub(
                        Expr::div(da, b.clone()),
                        Expr::div(Expr::mul(a, db), Expr::powi(b, 2)),
                    ),
                }
            }
            Expr::Pow(a, n) => {
                let a = a.as_ref().clone();
                let da = a.partial(var);
                Expr::mul(
                    Expr::mul(Expr::Const(f64::from(*n)), Expr::powi(a, n - 1)),
                    da,
                )
            }
            Expr::Func(f, a) => {
                let a = a.as_ref().clone();
                let da = a.partial(var);
                if da.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, a)),
                    Func::Exp => self.clone(),
                    Func::Cosh => Expr::func(Func::Sinh, a),
                    Func::Sinh => Expr::func(Func::Cosh, a),
                    Func::Tanh => Expr::sub(Expr::Const(1.0), Expr::powi(self.clone(), 2)),
                    Func::Sqrt => Expr::div(Expr::Const(0.5), self.clone()),
                    Func::Ln => Expr::div(Expr::Const(1.0), a),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// ∂^α with respect to the spatial variables; `alpha[i]` is the order in `x{i+1}`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Expr {
        let mut e = self.clone();
        for (axis, &order) in alpha.orders().iter().enumerate() {
            for _ in 0..order {
                e = e.partial(Var::X(axis + 1));
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, MultiIndex, Var};

    #[test]
    fn power_rule() {
        let d = parse("x1^2", 1).unwrap().partial(Var::X(1));
        for x in [-2.0, 0.0, 0.5, 3.0] {
            assert_eq!(d.eval(0.1, &[x]).unwrap(), 2.0 * x);
        }
    }

    #[test]
    fn sine_derivative_at_zero() {
        let d = parse("sin(x1)", 1).unwrap().partial(Var::X(1));
        assert_eq!(d.eval(0.1, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn second_derivative_of_gaussian_matches_finite_difference() {
        // oracle: central difference of the first derivative, step 1e-5
        let e = parse("exp(-(x1^2))", 1).unwrap();
        let d1 = e.partial(Var::X(1));
        let d2 = d1.partial(Var::X(1));
        let h = 1e-5;
        let fd = (d1.eval(0.1, &[h]).unwrap() - d1.eval(0.1, &[-h]).unwrap()) / (2.0 * h);
        let exact = d2.eval(0.1, &[0.0]).unwrap();
        assert!((fd - exact).abs() <= 1e-6 * exact.abs());
        assert!((exact + 2.0).abs() < 1e-15);
    }

    #[test]
    fn eps_derivative() {
        let d = parse("eps^3*x1", 1).unwrap().partial(Var::Eps);
        assert!((d.eval(0.5, &[2.0]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_partials_commute() {
        let e = parse("sin(x1*x2)*exp(x2)/(1 + x1^2)", 2).unwrap();
        let a = e.derivative(&MultiIndex::new(vec![1, 1]));
        let b = e.partial(Var::X(2)).partial(Var::X(1));
        let (va, vb) = (a.eval(0.1, &[0.3, -0.8]).unwrap(), b.eval(0.1, &[0.3, -0.8]).unwrap());
        assert!((va - vb).abs() < 1e-13);
    }

    #[test]
    fn derivative_of_constant_function_folds_to_zero() {
        let e = parse("exp(ln(eps)/eps)", 1).unwrap();
        assert_eq!(e.partial(Var::X(1)).as_const(), Some(0.0));
    }
}
