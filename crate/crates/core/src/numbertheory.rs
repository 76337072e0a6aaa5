//! Diophantine approximation: Dirichlet pairs, Liouville constants for
//! algebraic irrationals and the `(k, l, M)` triples used by the two-period
//! constancy argument.
//!
//! Irrationals are carried as double-double values (about 106 bits), so
//! defects `|k - lα|` stay accurate down to ~1e-20 for `l` up to 1e12.

use serde::Serialize;
use thiserror::Error;
use twofloat::TwoFloat;

/// Above this `N`, [`dirichlet`] uses convergents instead of a scan.
pub const SCAN_LIMIT: u64 = 1_000_000;
/// Largest `N` (and convergent denominator) supported at double-double
/// precision.
pub const MAX_DENOMINATOR: u64 = 1_000_000_000_000;
/// Residual allowed for `|poly(α)|`.
pub const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumberTheoryError {
    #[error("polynomial must have degree at least 2, got {0}")]
    DegreeTooLow(usize),
    #[error("value must be positive, got {0}")]
    NotPositive(f64),
    #[error("|poly(alpha)| = {residual:e} exceeds {ROOT_TOL:e}")]
    NotARoot { residual: f64 },
    #[error("derivative of the polynomial vanishes near alpha")]
    DegenerateDerivative,
    #[error("N must be at least 1")]
    ZeroN,
    #[error("N = {0} exceeds the supported maximum {MAX_DENOMINATOR}")]
    NTooLarge(u64),
    #[error("continued fraction precision exhausted before denominator {0}")]
    PrecisionExhausted(u64),
    #[error("R must exceed 2, got {0}")]
    RTooSmall(f64),
    #[error("unknown constant {0:?}")]
    UnknownConstant(String),
}

/// A real algebraic irrational with its integer minimal polynomial
/// (coefficients from the leading one down).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicNumber {
    name: String,
    value: TwoFloat,
    poly: Vec<i64>,
}

/// Double-double quotient. The crate's own division is only accurate to
/// about double precision; two residual corrections restore full accuracy.
pub(crate) fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = TwoFloat::from(a.hi() / b.hi());
    let r = a - q1 * b;
    let q2 = TwoFloat::from(r.hi() / b.hi());
    let r = r - q2 * b;
    q1 + q2 + TwoFloat::from(r.hi() / b.hi())
}

fn horner(poly: &[i64], t: TwoFloat) -> TwoFloat {
    poly.iter().fold(TwoFloat::from(0.0), |acc, &c| acc * t + TwoFloat::from(c))
}

fn derivative(poly: &[i64]) -> Vec<i64> {
    let n = poly.len().saturating_sub(1);
    poly.iter().take(n).enumerate().map(|(i, &c)| c * (n - i) as i64).collect()
}

fn horner_f64(poly: &[i64], t: f64) -> f64 {
    poly.iter().fold(0.0, |acc, &c| acc * t + c as f64)
}

impl AlgebraicNumber {
    /// Refines `approx` to a root of `poly` by Newton steps in double-double.
    pub fn new(name: &str, approx: f64, poly: Vec<i64>) -> Result<Self, NumberTheoryError> {
        let first = poly.iter().position(|&c| c != 0).unwrap_or(poly.len());
        let poly = poly[first..].to_vec();
        let degree = poly.len().saturating_sub(1);
        if degree < 2 {
            return Err(NumberTheoryError::DegreeTooLow(degree));
        }
        if !(approx > 0.0) {
            return Err(NumberTheoryError::NotPositive(approx));
        }
        let dp = derivative(&poly);
        let mut x = TwoFloat::from(approx);
        for _ in 0..8 {
            let slope = horner(&dp, x);
            if slope.hi() == 0.0 {
                return Err(NumberTheoryError::DegenerateDerivative);
            }
            x -= dd_div(horner(&poly, x), slope);
        }
        let residual = horner(&poly, x).hi().abs();
        if !(residual <= ROOT_TOL) || !(x.hi() > 0.0) {
            return Err(NumberTheoryError::NotARoot { residual });
        }
        Ok(AlgebraicNumber { name: name.to_string(), value: x, poly })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> TwoFloat {
        self.value
    }

    pub fn value_f64(&self) -> f64 {
        self.value.hi()
    }

    pub fn poly(&self) -> &[i64] {
        &self.poly
    }

    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }

    /// √2, √3, √5, the golden ratio, ∛2 and ∛3.
    pub fn catalog() -> Vec<AlgebraicNumber> {
        CATALOG.iter().map(|&(name, approx, ref poly)| build(name, approx, poly)).collect()
    }

    pub fn named(name: &str) -> Option<AlgebraicNumber> {
        CATALOG.iter().find(|e| e.0 == name).map(|&(name, approx, ref poly)| build(name, approx, poly))
    }
}

fn build(name: &str, approx: f64, poly: &[i64]) -> AlgebraicNumber {
    AlgebraicNumber::new(name, approx, poly.to_vec()).expect("catalog entries are valid")
}

const CATALOG: [(&str, f64, [i64; 4]); 6] = [
    ("sqrt2", std::f64::consts::SQRT_2, [0, 1, 0, -2]),
    ("sqrt3", 1.7320508075688772, [0, 1, 0, -3]),
    ("sqrt5", 2.23606797749979, [0, 1, 0, -5]),
    ("phi", 1.618033988749895, [0, 1, -1, -1]),
    ("cbrt2", 1.2599210498948732, [1, 0, 0, -2]),
    ("cbrt3", 1.4422495703074083, [1, 0, 0, -3]),
];

/// Names accepted by [`named_value`].
pub const NAMED_CONSTANTS: [&str; 8] = ["sqrt2", "sqrt3", "sqrt5", "phi", "cbrt2", "cbrt3", "pi", "e"];

/// Double-double value of a catalog number, `pi` or `e`.
pub fn named_value(name: &str) -> Result<TwoFloat, NumberTheoryError> {
    match name {
        "pi" => Ok(twofloat::consts::PI),
        "e" => Ok(twofloat::consts::E),
        _ => AlgebraicNumber::named(name)
            .map(|a| a.value)
            .ok_or_else(|| NumberTheoryError::UnknownConstant(name.to_string())),
    }
}

/// `(k, l)` with `0 < l <= N` and `|k - lα| <= 1/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirichletPair {
    pub k: u64,
    pub l: u64,
    pub defect: f64,
}

fn defect(alpha: TwoFloat, k: u64, l: u64) -> TwoFloat {
    (TwoFloat::from(k) - TwoFloat::from(l) * alpha).abs()
}

fn best_k(alpha: TwoFloat, l: u64) -> u64 {
    u64::try_from((TwoFloat::from(l) * alpha).round()).unwrap_or(0)
}

/// The pair of minimal defect over `1 <= l <= N` (ties to the smaller `l`).
///
/// Up to [`SCAN_LIMIT`] every `l` is tried with `k = round(lα)`. Beyond it
/// the minimum is read off the continued fraction: the best approximation
/// with denominator at most `N` is the last convergent with `q <= N`.
pub fn dirichlet(alpha: TwoFloat, n: u64) -> Result<DirichletPair, NumberTheoryError> {
    if n == 0 {
        return Err(NumberTheoryError::ZeroN);
    }
    if n > MAX_DENOMINATOR {
        return Err(NumberTheoryError::NTooLarge(n));
    }
    if !(alpha.hi() > 0.0) {
        return Err(NumberTheoryError::NotPositive(alpha.hi()));
    }
    if n <= SCAN_LIMIT {
        let mut best = DirichletPair { k: best_k(alpha, 1), l: 1, defect: f64::INFINITY };
        let mut best_defect = TwoFloat::from(f64::INFINITY);
        for l in 1..=n {
            let k = best_k(alpha, l);
            let d = defect(alpha, k, l);
            if d < best_defect {
                best_defect = d;
                best = DirichletPair { k, l, defect: d.hi() };
            }
        }
        return Ok(best);
    }
    let l = convergents(alpha, 200)
        .into_iter()
        .take_while(|&(_, q)| q <= n)
        .last()
        .map_or(1, |(_, q)| q);
    let k = best_k(alpha, l);
    let d = defect(alpha, k, l).hi();
    if !(d <= 1.0 / n as f64) {
        return Err(NumberTheoryError::PrecisionExhausted(n));
    }
    Ok(DirichletPair { k, l, defect: d })
}

/// Continued-fraction convergents `p/q` of `alpha`, at most `count` of them.
/// Stops early for rationals, once `q` exceeds [`MAX_DENOMINATOR`], and if a
/// convergent fails `|qα - p| < 1/q` (precision exhausted).
pub fn convergents(alpha: TwoFloat, count: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(count);
    let (mut p0, mut q0, mut p1, mut q1) = (1u128, 0u128, 0u128, 1u128);
    let mut x = alpha;
    while out.len() < count {
        let a = x.floor();
        let Ok(ai) = u128::try_from(a) else { break };
        let (p, q) = (ai * p0 + p1, ai * q0 + q1);
        if q > MAX_DENOMINATOR as u128 {
            break;
        }
        let gap = (TwoFloat::from(q) * alpha - TwoFloat::from(p)).abs();
        if !(gap.hi() * (q as f64) < 1.0) {
            break;
        }
        out.push((p as u64, q as u64));
        (p1, q1, p0, q0) = (p0, q0, p, q);
        let frac = x - a;
        if frac.hi() <= 1e-28 * x.hi().abs().max(1.0) {
            break;
        }
        x = dd_div(TwoFloat::from(1.0), frac);
    }
    out
}

/// Liouville constant `c` (with `|α - k/l| >= c/l^n` for all `k`, `l >= 1`)
/// and the exponent `M` used by the approximation triples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiouvilleData {
    pub c: f64,
    #[serde(rename = "M")]
    pub m: u32,
    pub degree: usize,
    /// `sup_{|t-α|<=1} |poly'(t)|`.
    pub derivative_sup: f64,
}

fn sup_abs_on(poly: &[i64], lo: f64, hi: f64) -> f64 {
    const SAMPLES: usize = 20_000;
    let f = |t: f64| horner_f64(poly, t).abs();
    let step = (hi - lo) / SAMPLES as f64;
    let (mut best_t, mut best) = (lo, f(lo));
    for i in 1..=SAMPLES {
        let t = if i == SAMPLES { hi } else { lo + step * i as f64 };
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement around the best sample
    let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// `c = min(1, 1/sup_{|t-α|<=1} |poly'(t)|)` and
/// `M = max(2, n + round(log2(1/c)))`, raised if needed so that
/// `c·R^{M-(n-1)} >= 1` for every `R >= 2`.
pub fn liouville_constant(a: &AlgebraicNumber) -> Result<LiouvilleData, NumberTheoryError> {
    let alpha = a.value_f64();
    let sup = sup_abs_on(&derivative(&a.poly), alpha - 1.0, alpha + 1.0);
    if !(sup > 0.0) {
        return Err(NumberTheoryError::DegenerateDerivative);
    }
    let c = (1.0 / sup).min(1.0);
    let n = a.degree();
    let mut m = (n as f64 + (1.0 / c).log2().round()).max(2.0) as u32;
    while c * 2f64.powi(m as i32 - (n as i32 - 1)) < 1.0 {
        m += 1;
    }
    Ok(LiouvilleData { c, m, degree: n, derivative_sup: sup })
}

/// `(k, l)` with `l <= R` and `1/R^M <= |k - lα| <= 2/R`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryPair {
    pub alpha: String,
    pub poly: Vec<i64>,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u64,
    pub l: u64,
    pub defect: f64,
    #[serde(rename = "M")]
    pub m: u32,
    pub lower: f64,
    pub upper: f64,
    pub bounds_hold: bool,
}

/// Dirichlet pair for `N = floor(R)` (so `R - 1 <= N <= R`), checked against
/// both bounds with `M` from [`liouville_constant`].
pub fn corollary_pair(a: &AlgebraicNumber, r: f64) -> Result<CorollaryPair, NumberTheoryError> {
    if !(r > 2.0) {
        return Err(NumberTheoryError::RTooSmall(r));
    }
    let data = liouville_constant(a)?;
    let n = r.floor() as u64;
    let pair = dirichlet(a.value, n)?;
    let lower = r.powi(-(data.m as i32));
    let upper = 2.0 / r;
    Ok(CorollaryPair {
        alpha: a.name.clone(),
        poly: a.poly.clone(),
        r,
        n,
        k: pair.k,
        l: pair.l,
        defect: pair.defect,
        m: data.m,
        lower,
        upper,
        bounds_hold: pair.l as f64 <= r && lower <= pair.defect && pair.defect <= upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_is_double_double_accurate() {
        let third = dd_div(TwoFloat::from(1.0), TwoFloat::from(3.0));
        assert!((third * TwoFloat::from(3.0) - TwoFloat::from(1.0)).abs().hi() < 1e-31);
    }

    #[test]
    fn long_expansions_are_exact() {
        // known partial quotients: √2 = [1; 2, 2, ...], e = [2; 1, 2, 1, 1, 4, 1, 1, 6, ...]
        let q = |a: TwoFloat| {
            let c = convergents(a, 60);
            let mut prev = (1u64, 0u64);
            let mut out = vec![c[0].0];
            for w in c.windows(2) {
                let (p1, q1) = w[0];
                let (p2, _) = w[1];
                out.push((p2 - prev.0) / p1);
                prev = (p1, q1);
            }
            out
        };
        let s = q(AlgebraicNumber::named("sqrt2").unwrap().value());
        assert!(s.len() >= 30 && s[1..].iter().all(|&a| a == 2), "{s:?}");
        let e = q(twofloat::consts::E);
        assert!(e.len() >= 20);
        for (i, &a) in e.iter().enumerate().skip(1) {
            let want = if i % 3 == 2 { 2 * (i as u64 + 1) / 3 } else { 1 };
            assert_eq!(a, want, "term {i}");
        }
    }

    fn sqrt2() -> AlgebraicNumber {
        AlgebraicNumber::named("sqrt2").unwrap()
    }

    #[test]
    fn catalog_values_are_accurate() {
        let s = sqrt2().value();
        assert!(((s * s) - TwoFloat::from(2.0)).abs().hi() < 1e-30);
        let c = AlgebraicNumber::named("cbrt3").unwrap().value();
        assert!(((c * c * c) - TwoFloat::from(3.0)).abs().hi() < 1e-29);
        assert_eq!(AlgebraicNumber::catalog().len(), 6);
        assert!(AlgebraicNumber::new("x", 1.5, vec![1, -2]).is_err());
        assert!(AlgebraicNumber::new("x", 1.5, vec![1, 0, -2]).is_ok());
        assert!(matches!(AlgebraicNumber::new("x", 1.5, vec![1, 0, 0, 0, 1]), Err(NumberTheoryError::NotARoot { .. })));
        assert!(matches!(AlgebraicNumber::new("x", -1.4, vec![1, 0, -2]), Err(NumberTheoryError::NotPositive(_))));
    }

    #[test]
    fn dirichlet_examples() {
        // oracle: brute force over l with k = round(lα) in f64
        let brute = |alpha: f64, n: u64| {
            (1..=n)
                .map(|l| {
                    let k = (l as f64 * alpha).round();
                    (k as u64, l, (k - l as f64 * alpha).abs())
                })
                .fold((0, 0, f64::INFINITY), |b, c| if c.2 < b.2 { c } else { b })
        };
        let p = dirichlet(sqrt2().value(), 5).unwrap();
        assert_eq!((p.k, p.l), (7, 5));
        assert!((p.defect - 0.07107).abs() < 1e-5 && p.defect <= 0.2);
        assert_eq!(brute(2f64.sqrt(), 5).1, 5);

        let p = dirichlet(named_value("pi").unwrap(), 7).unwrap();
        assert_eq!((p.k, p.l), (22, 7));
        assert!((p.defect - 0.00885).abs() < 1e-5);
        let b = brute(std::f64::consts::PI, 7);
        assert_eq!((b.0, b.1), (22, 7));

        let p = dirichlet(sqrt2().value(), 1).unwrap();
        assert_eq!((p.k, p.l), (1, 1));
        assert!((p.defect - 0.41421).abs() < 1e-5);
        assert_eq!(dirichlet(sqrt2().value(), 0), Err(NumberTheoryError::ZeroN));
    }

    #[test]
    fn large_n_uses_best_convergent() {
        let a = sqrt2().value();
        for n in [SCAN_LIMIT + 1, 10_000_000, 1_000_000_000_000] {
            let p = dirichlet(a, n).unwrap();
            assert!(p.l <= n && p.defect <= 1.0 / n as f64, "{n}");
        }
        // the scan and the convergent route agree at the boundary
        let scan = dirichlet(a, SCAN_LIMIT).unwrap();
        let conv = convergents(a, 100).into_iter().take_while(|&(_, q)| q <= SCAN_LIMIT).last().unwrap();
        assert_eq!((scan.k, scan.l), conv);
    }

    #[test]
    fn convergent_examples() {
        assert_eq!(convergents(sqrt2().value(), 4), vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        assert_eq!(convergents(named_value("pi").unwrap(), 3), vec![(3, 1), (22, 7), (333, 106)]);
        assert_eq!(convergents(TwoFloat::from(2.0), 1), vec![(2, 1)]);
        assert_eq!(convergents(TwoFloat::from(2.0), 5), vec![(2, 1)]);
        for name in NAMED_CONSTANTS {
            let a = named_value(name).unwrap();
            for (p, q) in convergents(a, 30) {
                let gap = (dd_div(TwoFloat::from(p), TwoFloat::from(q)) - a).abs().hi();
                assert!(gap < 1.0 / (q as f64).powi(2), "{name} {p}/{q}");
            }
        }
    }

    #[test]
    fn liouville_examples() {
        let a = AlgebraicNumber::named("sqrt2").unwrap();
        let d = liouville_constant(&a).unwrap();
        let sup = 2.0 * (2f64.sqrt() + 1.0);
        assert!((d.derivative_sup - sup).abs() < 1e-9);
        assert!((d.c - 0.2071).abs() < 1e-4);
        assert_eq!(d.m, 4);
        assert!(d.c * 2f64.powi(d.m as i32 - 1) >= 1.0);

        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let d = liouville_constant(&AlgebraicNumber::named("phi").unwrap()).unwrap();
        assert!((d.derivative_sup - (2.0 * phi + 1.0)).abs() < 1e-9);
        assert!((d.c - 0.2361).abs() < 1e-4);
        assert_eq!(d.m, 4);

        let r = 2f64.cbrt();
        let d = liouville_constant(&AlgebraicNumber::named("cbrt2").unwrap()).unwrap();
        assert!((d.derivative_sup - 3.0 * (r + 1.0).powi(2)).abs() < 1e-9);
        assert!((d.c - 0.0653).abs() < 1e-4);
        assert_eq!(d.m, 7);
        assert!(d.c * 2f64.powi(d.m as i32 - 2) >= 1.0);
    }

    #[test]
    fn liouville_bound_holds_exhaustively() {
        for a in AlgebraicNumber::catalog() {
            let d = liouville_constant(&a).unwrap();
            let alpha = a.value();
            for l in 1..=10_000u64 {
                let k = best_k(alpha, l);
                let gap = (dd_div(TwoFloat::from(k), TwoFloat::from(l)) - alpha).abs().hi();
                assert!(gap >= d.c / (l as f64).powi(a.degree() as i32), "{} l={l}", a.name());
            }
        }
    }

    #[test]
    fn corollary_examples() {
        let p = corollary_pair(&sqrt2(), 10.0).unwrap();
        assert_eq!((p.k, p.l), (7, 5));
        assert!(p.bounds_hold && p.lower == 1e-4);

        let p = corollary_pair(&sqrt2(), 100.0).unwrap();
        assert!(p.l <= 100 && (1e-8..=0.02).contains(&p.defect) && p.bounds_hold);

        let p = corollary_pair(&AlgebraicNumber::named("phi").unwrap(), 4.0).unwrap();
        assert_eq!((p.k, p.l), (5, 3));
        assert!((p.defect - 0.1459).abs() < 1e-4);
        assert!((1.0 / 256.0..=0.5).contains(&p.defect));

        assert_eq!(corollary_pair(&sqrt2(), 2.0), Err(NumberTheoryError::RTooSmall(2.0)));
    }

    #[test]
    fn corollary_bounds_over_range() {
        for a in AlgebraicNumber::catalog() {
            for r in [3.0, 10.0, 1e2, 1e3, 1e4] {
                let p = corollary_pair(&a, r).unwrap();
                assert!(p.bounds_hold, "{} R={r}: {p:?}", a.name());
            }
        }
    }

    #[test]
    fn convergents_agree_with_dirichlet() {
        for name in NAMED_CONSTANTS {
            let a = named_value(name).unwrap();
            for (p, q) in convergents(a, 12).into_iter().filter(|&(_, q)| q <= 100_000) {
                let d = dirichlet(a, q).unwrap();
                assert!(d.defect <= defect(a, p, q).hi() + 1e-15, "{name} q={q}");
            }
        }
    }

    #[test]
    fn json_field_names() {
        let v = serde_json::to_value(corollary_pair(&sqrt2(), 10.0).unwrap()).unwrap();
        for key in ["alpha", "poly", "R", "k", "l", "defect", "M"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
