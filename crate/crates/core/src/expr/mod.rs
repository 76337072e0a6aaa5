//! Smooth closed-form expressions in the spatial variables `x1..x9` and the
//! scale parameter `eps`.
//!
//! Every representative of a net is an [`Expr`]. Expressions are immutable;
//! subtrees are reference counted so derivatives and substitutions share
//! structure instead of copying it.

mod diff;
mod eval;
mod parse;
mod print;

use std::sync::Arc;

pub use eval::EvalError;
pub use parse::{parse, ParseError};

/// Largest spatial index the grammar accepts (`x1..x9`).
pub const MAX_SPATIAL_INDEX: usize = 9;

/// Default bound on the total order of a [`MultiIndex`].
pub const DEFAULT_MAX_ORDER: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Eps,
    /// Spatial coordinate, 1-based.
    X(usize),
}

impl Var {
    pub fn x(index: usize) -> Self {
        Var::X(index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Cosh,
    Sinh,
    Tanh,
    Sqrt,
    Ln,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Cosh,
        Func::Sinh,
        Func::Tanh,
        Func::Sqrt,
        Func::Ln,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function, or `None` outside its domain.
    pub fn apply(self, v: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(v.sin()),
            Func::Cos => Some(v.cos()),
            Func::Exp => Some(v.exp()),
            Func::Cosh => Some(v.cosh()),
            Func::Sinh => Some(v.sinh()),
            Func::Tanh => Some(v.tanh()),
            Func::Sqrt => (v >= 0.0).then(|| v.sqrt()),
            Func::Ln => (v > 0.0).then(|| v.ln()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    /// Integer power. Non-integer powers are desugared to `exp(b*ln(a))`.
    Pow(Arc<Expr>, i32),
    Func(Func, Arc<Expr>),
}

impl Expr {
    /// Parses `text` and checks every spatial variable against dimension `d`.
    pub fn parse(text: &str, d: usize) -> Result<Expr, ParseError> {
        parse(text, d)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn eps() -> Expr {
        Expr::Var(Var::Eps)
    }

    pub fn x(index: usize) -> Expr {
        Expr::Var(Var::X(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_const(&self, value: f64) -> bool {
        matches!(self, Expr::Const(c) if *c == value)
    }

    // Smart constructors. They fold constants and drop additive/multiplicative
    // identities; nothing else is rewritten.

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => Arc::unwrap_or_clone(inner),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Add, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => Expr::Binary(BinOp::Sub, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x == 0.0 => Expr::Const(0.0),
            (_, Some(y)) if y == 0.0 => Expr::Const(0.0),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Binary(BinOp::Mul, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(x), _) if x == 0.0 && !b.is_const(0.0) => Expr::Const(0.0),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Binary(BinOp::Div, Arc::new(a), Arc::new(b)),
        }
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        match (n, a.as_const()) {
            (0, _) => Expr::Const(1.0),
            (1, _) => a,
            (_, Some(c)) if c != 0.0 || n > 0 => Expr::Const(c.powi(n)),
            _ => Expr::Pow(Arc::new(a), n),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if let Some(v) = a.as_const().and_then(|c| f.apply(c)) {
            return Expr::Const(v);
        }
        Expr::Func(f, Arc::new(a))
    }

    /// `base^exponent` for an arbitrary exponent expression: integer
    /// constants give [`Expr::Pow`], anything else `exp(exponent*ln(base))`.
    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        match exponent.as_const() {
            Some(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => Expr::powi(base, c as i32),
            _ => Expr::func(Func::Exp, Expr::mul(exponent, Expr::func(Func::Ln, base))),
        }
    }

    /// Replaces variables for which `map` returns `Some`, refolding constants.
    pub fn substitute(&self, map: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => map(*v).unwrap_or(Expr::Var(*v)),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.substitute(map), b.substitute(map));
                match op {
                    BinOp::Add => Expr::add(a, b),
                    BinOp::Sub => Expr::sub(a, b),
                    BinOp::Mul => Expr::mul(a, b),
                    BinOp::Div => Expr::div(a, b),
                }
            }
            Expr::Pow(a, n) => Expr::powi(a.substitute(map), *n),
            Expr::Func(f, a) => Expr::func(*f, a.substitute(map)),
        }
    }

    /// Visits every variable occurrence.
    pub fn for_each_var(&self, visit: &mut dyn FnMut(Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => visit(*v),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.for_each_var(visit),
            Expr::Binary(_, a, b) => {
                a.for_each_var(visit);
                b.for_each_var(visit);
            }
        }
    }

    /// Highest spatial index referenced, 0 if none.
    pub fn max_spatial_index(&self) -> usize {
        let mut max = 0;
        self.for_each_var(&mut |v| {
            if let Var::X(i) = v {
                max = max.max(i);
            }
        });
        max
    }

    pub fn uses_eps(&self) -> bool {
        let mut found = false;
        self.for_each_var(&mut |v| found |= v == Var::Eps);
        found
    }

    /// Number of nodes in the tree, counting shared subtrees once per use.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }
}

/// A point of ℝ^d.
pub type Point = Vec<f64>;

/// Orders of a mixed partial derivative ∂^α, one entry per spatial axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct MultiIndex {
    orders: Vec<u32>,
}

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        MultiIndex { orders }
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex { orders: vec![0; d] }
    }

    /// The multi-index with a single 1 on `axis` (0-based).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut orders = vec![0; d];
        orders[axis] = 1;
        MultiIndex { orders }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn total(&self) -> u32 {
        self.orders.iter().sum()
    }

    /// All multi-indices of dimension `d` with total order at most `max`,
    /// ordered by total order, then lexicographically descending.
    pub fn all_up_to(d: usize, max: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=max {
            let mut current = vec![0u32; d];
            compositions(&mut current, 0, total, &mut out);
            if d == 0 {
                break;
            }
        }
        out
    }
}

fn compositions(current: &mut Vec<u32>, axis: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let d = current.len();
    if axis + 1 >= d {
        if d > 0 {
            current[axis] = remaining;
        } else if remaining > 0 {
            return;
        }
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[axis] = k;
        compositions(current, axis + 1, remaining - k, out);
    }
    current[axis] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_indices_enumerated_by_order() {
        let all = MultiIndex::all_up_to(2, 2);
        let orders: Vec<_> = all.iter().map(|m| m.orders().to_vec()).collect();
        assert_eq!(
            orders,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(MultiIndex::all_up_to(3, 4).len(), 35);
        assert_eq!(MultiIndex::all_up_to(0, 3), vec![MultiIndex::zero(0)]);
    }

    #[test]
    fn smart_constructors_fold() {
        assert_eq!(Expr::add(Expr::Const(1.0), Expr::Const(2.0)), Expr::Const(3.0));
        assert_eq!(Expr::mul(Expr::Const(0.0), Expr::x(1)), Expr::Const(0.0));
        assert_eq!(Expr::mul(Expr::Const(1.0), Expr::x(1)), Expr::x(1));
        assert_eq!(Expr::neg(Expr::neg(Expr::x(2))), Expr::x(2));
        assert_eq!(Expr::func(Func::Cos, Expr::Const(0.0)), Expr::Const(1.0));
        // out-of-domain constants stay symbolic so evaluation can report them
        assert!(matches!(Expr::func(Func::Ln, Expr::Const(-1.0)), Expr::Func(Func::Ln, _)));
        assert!(matches!(Expr::div(Expr::Const(1.0), Expr::Const(0.0)), Expr::Binary(..)));
    }

    #[test]
    fn variable_queries() {
        let e = Expr::parse("eps*sin(x3) + x1", 3).unwrap();
        assert_eq!(e.max_spatial_index(), 3);
        assert!(e.uses_eps());
        assert!(!Expr::parse("x1", 1).unwrap().uses_eps());
    }
}
