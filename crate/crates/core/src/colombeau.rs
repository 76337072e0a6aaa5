//! Nets of smooth functions and their behaviour as ε → 0.
//!
//! A [`Net`] is one representative `(u_ε)_ε`. Membership in the moderate or
//! negligible classes quantifies over every ε, every compact set and every
//! derivative, so everything here is grid evidence: sups over a uniform
//! lattice of a [`CompactBox`], at the scales of an [`EpsilonGrid`], for all
//! derivatives up to a fixed order. The lattice sup is a lower bound of the
//! true sup.
//!
//! Differences `lhs - rhs` are classified with a round-off floor: at a given
//! (ε, α), a sup deviation no larger than `roundoff_rel` times the sup of the
//! operands themselves is indistinguishable from cancellation error and is
//! recorded as zero. The raw value is kept alongside.

use std::borrow::Cow;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr, MultiIndex, ParseError, Point};
use crate::json;

/// Default upper bound for bounded generalized numbers.
pub const DEFAULT_BOUND: f64 = 1e6;
/// Default highest order probed for negligibility.
pub const DEFAULT_P_MAX: u32 = 8;
/// Default lattice density per axis.
pub const DEFAULT_SAMPLES: usize = 33;
/// Default relative round-off floor for differences.
pub const DEFAULT_ROUNDOFF_REL: f64 = 1e-10;
/// A growth trend is declared when the running-max envelope of a series has
/// a fitted exponent below `-GROWTH_TOLERANCE`.
pub const GROWTH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ColombeauError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("expression references x{index} but the net has dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("evaluation failed at eps={eps}, x={x:?}, alpha={alpha:?}: {source}")]
    Eval {
        eps: f64,
        x: Vec<f64>,
        alpha: Vec<u32>,
        #[source]
        source: EvalError,
    },
    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(String),
    #[error("invalid compact box: {0}")]
    InvalidBox(String),
    #[error("tabulated net has no value at eps={eps}")]
    MissingTableEntry { eps: f64 },
    #[error("a generalized scalar must be evaluated at a given eps")]
    NeedsEps,
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// A representative `(u_ε)_ε` in the variables `eps, x1..xd`.
/// Dimension 0 is a generalized number.
#[derive(Clone, Debug, PartialEq)]
pub struct Net {
    body: Expr,
    dim: usize,
}

impl Net {
    pub fn new(body: Expr, dim: usize) -> Result<Self, ColombeauError> {
        let index = body.max_spatial_index();
        if index > dim {
            return Err(ColombeauError::VariableOutOfRange { index, dim });
        }
        Ok(Net { body, dim })
    }

    pub fn parse(text: &str, dim: usize) -> Result<Self, ColombeauError> {
        Ok(Net { body: Expr::parse(text, dim)?, dim })
    }

    /// A generalized number given by an expression in `eps`.
    pub fn scalar(text: &str) -> Result<Self, ColombeauError> {
        Net::parse(text, 0)
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, eps: f64, x: &[f64]) -> Result<f64, EvalError> {
        self.body.eval(eps, x)
    }

    /// The net `ε ↦ u_ε(0)`, kept in the same dimension.
    pub fn at_origin(&self) -> Net {
        let body = self.body.substitute(&|v| match v {
            crate::expr::Var::X(_) => Some(Expr::Const(0.0)),
            crate::expr::Var::Eps => None,
        });
        Net { body, dim: self.dim }
    }
}

impl fmt::Display for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.fmt(f)
    }
}

/// Several nets over the same ℝ^d, e.g. the coordinates of a map ℝ^d → ℝ^d'.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorNet {
    components: Vec<Net>,
    dim: usize,
}

impl VectorNet {
    pub fn new(components: Vec<Net>, dim: usize) -> Result<Self, ColombeauError> {
        if let Some(c) = components.iter().find(|c| c.dim != dim) {
            return Err(ColombeauError::DimensionMismatch { expected: dim, found: c.dim });
        }
        Ok(VectorNet { components, dim })
    }

    pub fn parse(texts: &[&str], dim: usize) -> Result<Self, ColombeauError> {
        let components = texts.iter().map(|t| Net::parse(t, dim)).collect::<Result<_, _>>()?;
        Ok(VectorNet { components, dim })
    }

    pub fn identity(dim: usize) -> Self {
        let components =
            (1..=dim).map(|i| Net { body: Expr::x(i), dim }).collect();
        VectorNet { components, dim }
    }

    pub fn components(&self) -> &[Net] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A generalized number tabulated at grid scales only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TabulatedScalar {
    #[serde(rename = "table", serialize_with = "json::float_pairs")]
    entries: Vec<(f64, f64)>,
}

impl TabulatedScalar {
    pub fn new(entries: Vec<(f64, f64)>) -> Self {
        TabulatedScalar { entries }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn value_at(&self, eps: f64) -> Result<f64, ColombeauError> {
        self.entries
            .iter()
            .find(|(e, _)| e.to_bits() == eps.to_bits())
            .map(|&(_, v)| v)
            .ok_or(ColombeauError::MissingTableEntry { eps })
    }
}

/// A real number, a generalized number given in closed form, or one given by
/// a table over grid scales. Used for angles, offsets and matrix entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Real(f64),
    Net(Net),
    Table(TabulatedScalar),
}

impl Scalar {
    /// Parses an expression in `eps`; expressions free of `eps` become reals.
    pub fn parse(text: &str) -> Result<Self, ColombeauError> {
        let net = Net::scalar(text)?;
        if net.body.uses_eps() {
            return Ok(Scalar::Net(net));
        }
        match net.body.eval(1.0, &[]) {
            Ok(v) => Ok(Scalar::Real(v)),
            Err(source) => Err(ColombeauError::Eval { eps: 1.0, x: vec![], alpha: vec![], source }),
        }
    }

    pub fn is_generalized(&self) -> bool {
        !matches!(self, Scalar::Real(_))
    }

    /// The expression to substitute at scale `eps`. Closed-form nets stay
    /// symbolic; tables need a grid `eps`.
    pub fn expr_at(&self, eps: Option<f64>) -> Result<Expr, ColombeauError> {
        match self {
            Scalar::Real(v) => Ok(Expr::Const(*v)),
            Scalar::Net(n) => Ok(n.body.clone()),
            Scalar::Table(t) => {
                let eps = eps.ok_or(ColombeauError::NeedsEps)?;
                Ok(Expr::Const(t.value_at(eps)?))
            }
        }
    }

    pub fn value_at(&self, eps: Option<f64>) -> Result<f64, ColombeauError> {
        match self {
            Scalar::Real(v) => Ok(*v),
            Scalar::Net(n) => {
                let eps = eps.ok_or(ColombeauError::NeedsEps)?;
                n.body
                    .eval(eps, &[])
                    .map_err(|source| ColombeauError::Eval { eps, x: vec![], alpha: vec![], source })
            }
            Scalar::Table(t) => t.value_at(eps.ok_or(ColombeauError::NeedsEps)?),
        }
    }

    /// Whether the scalar has a bounded representative on `grid`.
    pub fn is_bounded(&self, grid: &EpsilonGrid, bound: f64) -> bool {
        let values: Option<Vec<(f64, f64)>> = grid
            .values()
            .iter()
            .map(|&e| self.value_at(Some(e)).ok().map(|v| (e, v.abs())))
            .collect();
        values.is_some_and(|v| series_is_bounded(&v, bound))
    }

    /// Text form: a number or the expression.
    pub fn describe(&self) -> String {
        match self {
            Scalar::Real(v) => crate::expr::Expr::Const(*v).to_string(),
            Scalar::Net(n) => n.to_string(),
            Scalar::Table(_) => "<table>".into(),
        }
    }
}

impl Scalar {
    /// `c·self`.
    pub fn scaled(&self, c: f64) -> Scalar {
        match self {
            Scalar::Real(v) => Scalar::Real(c * v),
            Scalar::Net(n) => Scalar::Net(Net { body: Expr::mul(Expr::Const(c), n.body.clone()), dim: 0 }),
            Scalar::Table(t) => {
                Scalar::Table(TabulatedScalar::new(t.entries.iter().map(|&(e, v)| (e, c * v)).collect()))
            }
        }
    }

    /// Accepts a number, an expression string in `eps`, or
    /// `{"table": [[eps, value], ...]}`.
    pub fn from_json(value: &serde_json::Value) -> Result<Scalar, ColombeauError> {
        use serde_json::Value;
        match value {
            Value::Number(n) => Ok(Scalar::Real(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) => Scalar::parse(s),
            Value::Object(m) => {
                let rows = m
                    .get("table")
                    .and_then(Value::as_array)
                    .ok_or_else(|| ColombeauError::Json("expected {\"table\": [...]}".into()))?;
                let entries = rows
                    .iter()
                    .map(|r| match r.as_array().map(Vec::as_slice) {
                        Some([e, v]) => match (e.as_f64(), v.as_f64()) {
                            (Some(e), Some(v)) => Ok((e, v)),
                            _ => Err(ColombeauError::Json("table entries must be numbers".into())),
                        },
                        _ => Err(ColombeauError::Json("table rows must be [eps, value]".into())),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Scalar::Table(TabulatedScalar::new(entries)))
            }
            other => Err(ColombeauError::Json(format!("cannot read a scalar from {other}"))),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Real(v) => json::JsonFloat(*v).serialize(s),
            Scalar::Net(n) => s.serialize_str(&n.to_string()),
            Scalar::Table(t) => t.serialize(s),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Real(v)
    }
}

/// Strictly decreasing scales in (0, 1) standing in for ε → 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonGrid {
    values: Vec<f64>,
}

impl EpsilonGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, ColombeauError> {
        if values.is_empty() {
            return Err(ColombeauError::InvalidGrid("empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(ColombeauError::InvalidGrid(format!("{v} is outside (0, 1)")));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ColombeauError::InvalidGrid("values must be strictly decreasing".into()));
        }
        Ok(EpsilonGrid { values })
    }

    /// ε_k = 2^{-k} for k = k_min..=k_max.
    pub fn dyadic(k_min: i32, k_max: i32) -> Result<Self, ColombeauError> {
        if k_min < 1 || k_max < k_min || k_max > 1000 {
            return Err(ColombeauError::InvalidGrid(format!("bad range {k_min}..={k_max}")));
        }
        EpsilonGrid::new((k_min..=k_max).map(|k| 2f64.powi(-k)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The grid restricted to values `<= eps0`.
    pub fn below(&self, eps0: f64) -> Option<EpsilonGrid> {
        let values: Vec<f64> = self.values.iter().copied().filter(|&e| e <= eps0).collect();
        (!values.is_empty()).then_some(EpsilonGrid { values })
    }
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        EpsilonGrid::dyadic(4, 40).expect("default grid is valid")
    }
}

/// Finer half of a coarse-to-fine series (rounded up).
pub fn finer_half<T>(series: &[T]) -> &[T] {
    &series[series.len() / 2..]
}

/// Finest quarter of a coarse-to-fine series (rounded up).
pub fn finest_quarter<T>(series: &[T]) -> &[T] {
    let n = series.len();
    &series[n - n.div_ceil(4)..]
}

/// Axis-aligned box `∏ [a_i, b_i]` with a uniform sampling lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactBox {
    intervals: Vec<(f64, f64)>,
    samples_per_axis: usize,
}

impl CompactBox {
    pub fn new(intervals: Vec<(f64, f64)>, samples_per_axis: usize) -> Result<Self, ColombeauError> {
        if samples_per_axis < 2 {
            return Err(ColombeauError::InvalidBox("at least 2 samples per axis".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(ColombeauError::InvalidBox(format!("bad interval [{a}, {b}]")));
            }
        }
        Ok(CompactBox { intervals, samples_per_axis })
    }

    /// `[a, b]^d`.
    pub fn cube(d: usize, a: f64, b: f64, samples_per_axis: usize) -> Result<Self, ColombeauError> {
        CompactBox::new(vec![(a, b); d], samples_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples_per_axis
    }

    pub fn with_samples(&self, samples_per_axis: usize) -> Result<Self, ColombeauError> {
        CompactBox::new(self.intervals.clone(), samples_per_axis)
    }

    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        let (a, b) = self.intervals[axis];
        let n = self.samples_per_axis;
        (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect()
    }

    /// All lattice points, last axis varying fastest.
    pub fn lattice(&self) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|i| self.axis_points(i)).collect();
        let mut points = vec![Vec::with_capacity(self.dim())];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(&(a, b), &v)| a <= v && v <= b)
    }

    pub fn contains_box(&self, other: &CompactBox) -> bool {
        other.dim() == self.dim()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(&(a, b), &(c, d))| a <= c && d <= b)
    }
}

/// Anything that yields a representative body at each scale: closed-form
/// nets, or compositions whose parameters are tabulated per ε.
pub trait Representative: Sync {
    fn dim(&self) -> usize;
    fn body_at(&self, eps: f64) -> Result<Cow<'_, Expr>, ColombeauError>;
}

impl Representative for Net {
    fn dim(&self) -> usize {
        self.dim
    }

    fn body_at(&self, _eps: f64) -> Result<Cow<'_, Expr>, ColombeauError> {
        Ok(Cow::Borrowed(&self.body))
    }
}

/// Sups of one derivative across the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormSeries {
    pub alpha: MultiIndex,
    #[serde(serialize_with = "json::float_pairs")]
    pub sups: Vec<(f64, f64)>,
    /// Pre-floor values; present only for differences.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_pairs")]
    pub raw_sups: Option<Vec<(f64, f64)>>,
    #[serde(serialize_with = "json::float")]
    pub fitted_exponent: f64,
}

fn opt_pairs<S: serde::Serializer>(v: &Option<Vec<(f64, f64)>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => json::float_pairs(v, s),
        None => s.serialize_none(),
    }
}

/// Grid evidence for the asymptotic class of a net.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    /// Per-ε maximum over all probed derivatives.
    #[serde(serialize_with = "json::float_pairs")]
    pub sups: Vec<(f64, f64)>,
    /// Least-squares slope of log sup against log ε over the finer half of
    /// the grid; `+inf` when every sup there is zero.
    #[serde(serialize_with = "json::float")]
    pub fitted_exponent: f64,
    pub moderate: bool,
    /// Largest `p <= p_max` with `sup <= ε^p` across the finest quarter of
    /// the grid, `-1` if not even `p = 0` passes.
    pub negligible_order: i32,
    pub bounded: bool,
    pub per_alpha: Vec<SeminormSeries>,
}

impl AsymptoticReport {
    pub fn is_negligible_at(&self, p: u32) -> bool {
        self.negligible_order >= p as i32
    }

    /// The series for one multi-index, if it was probed.
    pub fn series(&self, alpha: &MultiIndex) -> Option<&SeminormSeries> {
        self.per_alpha.iter().find(|s| &s.alpha == alpha)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub max_order: u32,
    pub p_max: u32,
    pub bound: f64,
    pub roundoff_rel: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            max_order: 1,
            p_max: DEFAULT_P_MAX,
            bound: DEFAULT_BOUND,
            roundoff_rel: DEFAULT_ROUNDOFF_REL,
        }
    }
}

/// `sup_{x∈K} |∂^α f_ε(x)|` over the lattice of `k`.
pub fn seminorm(f: &Net, k: &CompactBox, alpha: &MultiIndex, eps: f64) -> Result<f64, ColombeauError> {
    check_dims(f.dim, k.dim())?;
    check_dims(f.dim, alpha.dim())?;
    let d = f.body.derivative(alpha);
    let mut sup = 0.0f64;
    for x in k.lattice() {
        let v = d.eval(eps, &x).map_err(|source| ColombeauError::Eval {
            eps,
            x: x.clone(),
            alpha: alpha.orders().to_vec(),
            source,
        })?;
        sup = max_abs(sup, v);
    }
    Ok(sup)
}

/// Classifies `f` from its derivatives of total order `<= max_order`.
pub fn classify(
    f: &Net,
    k: &CompactBox,
    max_order: u32,
    grid: &EpsilonGrid,
    p_max: u32,
) -> Result<AsymptoticReport, ColombeauError> {
    let opts = ClassifyOptions { max_order, p_max, ..ClassifyOptions::default() };
    classify_with(f, k, grid, &opts)
}

pub fn classify_with(
    f: &dyn Representative,
    k: &CompactBox,
    grid: &EpsilonGrid,
    opts: &ClassifyOptions,
) -> Result<AsymptoticReport, ColombeauError> {
    check_dims(f.dim(), k.dim())?;
    let alphas = MultiIndex::all_up_to(f.dim(), opts.max_order);
    let series = seminorm_table(f, None, k, grid, &alphas, opts.roundoff_rel)?;
    Ok(assemble(series, opts))
}

/// Classifies `lhs - rhs`, flooring round-off cancellation.
pub fn classify_difference(
    lhs: &dyn Representative,
    rhs: &dyn Representative,
    k: &CompactBox,
    grid: &EpsilonGrid,
    opts: &ClassifyOptions,
) -> Result<AsymptoticReport, ColombeauError> {
    check_dims(lhs.dim(), rhs.dim())?;
    check_dims(lhs.dim(), k.dim())?;
    let alphas = MultiIndex::all_up_to(lhs.dim(), opts.max_order);
    let series = seminorm_table(lhs, Some(rhs), k, grid, &alphas, opts.roundoff_rel)?;
    Ok(assemble(series, opts))
}

fn check_dims(expected: usize, found: usize) -> Result<(), ColombeauError> {
    if expected == found {
        Ok(())
    } else {
        Err(ColombeauError::DimensionMismatch { expected, found })
    }
}

fn max_abs(sup: f64, v: f64) -> f64 {
    let a = if v.is_nan() { f64::INFINITY } else { v.abs() };
    sup.max(a)
}

fn seminorm_table(
    lhs: &dyn Representative,
    rhs: Option<&dyn Representative>,
    k: &CompactBox,
    grid: &EpsilonGrid,
    alphas: &[MultiIndex],
    roundoff_rel: f64,
) -> Result<Vec<SeminormSeries>, ColombeauError> {
    let lattice = k.lattice();
    // rows[e][a] = (effective, raw)
    let rows: Vec<Vec<(f64, f64)>> = grid
        .values()
        .par_iter()
        .map(|&eps| -> Result<Vec<(f64, f64)>, ColombeauError> {
            let lhs_body = lhs.body_at(eps)?;
            let rhs_body = rhs.map(|r| r.body_at(eps)).transpose()?;
            alphas
                .iter()
                .map(|alpha| {
                    let witness = |x: &Point, source| ColombeauError::Eval {
                        eps,
                        x: x.clone(),
                        alpha: alpha.orders().to_vec(),
                        source,
                    };
                    let dl = lhs_body.derivative(alpha);
                    let dr = rhs_body.as_ref().map(|b| b.derivative(alpha));
                    let (mut sup, mut scale) = (0.0f64, 0.0f64);
                    for x in &lattice {
                        let a = dl.eval(eps, x).map_err(|e| witness(x, e))?;
                        match &dr {
                            Some(dr) => {
                                let b = dr.eval(eps, x).map_err(|e| witness(x, e))?;
                                scale = max_abs(max_abs(scale, a), b);
                                sup = max_abs(sup, a - b);
                            }
                            None => sup = max_abs(sup, a),
                        }
                    }
                    let effective =
                        if dr.is_some() && sup.is_finite() && sup <= roundoff_rel * scale { 0.0 } else { sup };
                    Ok((effective, sup))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let eps = grid.values();
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(ai, alpha)| {
            let sups: Vec<(f64, f64)> = eps.iter().zip(&rows).map(|(&e, r)| (e, r[ai].0)).collect();
            let raw_sups = rhs.map(|_| eps.iter().zip(&rows).map(|(&e, r)| (e, r[ai].1)).collect());
            SeminormSeries { alpha: alpha.clone(), fitted_exponent: fit_exponent(&sups), sups, raw_sups }
        })
        .collect())
}

impl AsymptoticReport {
    /// Builds verdicts from per-derivative series sharing one grid.
    pub fn from_series(per_alpha: Vec<SeminormSeries>, opts: &ClassifyOptions) -> AsymptoticReport {
        assemble(per_alpha, opts)
    }

    /// Pointwise maximum of several reports over the same grid and
    /// derivatives; verdicts are recomputed.
    pub fn merge_max(reports: &[AsymptoticReport], opts: &ClassifyOptions) -> Option<AsymptoticReport> {
        let first = reports.first()?;
        let per_alpha = first
            .per_alpha
            .iter()
            .enumerate()
            .map(|(ai, s)| {
                let pick = |f: &dyn Fn(&SeminormSeries) -> Option<&Vec<(f64, f64)>>| -> Option<Vec<(f64, f64)>> {
                    let base = f(s)?.clone();
                    Some(
                        base.iter()
                            .enumerate()
                            .map(|(i, &(e, _))| {
                                let m = reports
                                    .iter()
                                    .filter_map(|r| f(&r.per_alpha[ai]).map(|v| v[i].1))
                                    .fold(0.0, max_abs);
                                (e, m)
                            })
                            .collect(),
                    )
                };
                let sups = pick(&|s| Some(&s.sups)).unwrap_or_default();
                let raw_sups = pick(&|s| s.raw_sups.as_ref());
                SeminormSeries { alpha: s.alpha.clone(), fitted_exponent: fit_exponent(&sups), sups, raw_sups }
            })
            .collect();
        Some(assemble(per_alpha, opts))
    }
}

fn assemble(per_alpha: Vec<SeminormSeries>, opts: &ClassifyOptions) -> AsymptoticReport {
    let n = per_alpha.first().map_or(0, |s| s.sups.len());
    let sups: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let eps = per_alpha[0].sups[i].0;
            (eps, per_alpha.iter().map(|s| s.sups[i].1).fold(0.0, f64::max))
        })
        .collect();
    let fitted_exponent = fit_exponent(&sups);
    let moderate = sups.iter().all(|(_, s)| s.is_finite()) && fitted_exponent > f64::NEG_INFINITY;
    let negligible_order = if moderate { negligible_order(&sups, opts.p_max) } else { -1 };
    let bounded = moderate && series_is_bounded(&sups, opts.bound);
    AsymptoticReport { sups, fitted_exponent, moderate, negligible_order, bounded, per_alpha }
}

/// Least-squares slope of `ln sup` against `ln ε` over the finer half of a
/// coarse-to-fine series. Zero sups are discarded; `+inf` if nothing is left,
/// `-inf` if a non-finite sup is present.
pub fn fit_exponent(series: &[(f64, f64)]) -> f64 {
    let half = finer_half(series);
    if half.iter().any(|(_, s)| !s.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let pts: Vec<(f64, f64)> =
        half.iter().filter(|(_, s)| *s > 0.0).map(|&(e, s)| (e.ln(), s.ln())).collect();
    match pts.len() {
        0 => f64::INFINITY,
        1 => pts[0].1 / pts[0].0,
        n => {
            let n = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx == 0.0 {
                pts[0].1 / pts[0].0
            } else {
                sxy / sxx
            }
        }
    }
}

/// Exponent of the running maximum (coarse to fine). Oscillating bounded
/// series have a flat envelope; growing ones a negative exponent.
pub fn growth_exponent(series: &[(f64, f64)]) -> f64 {
    let mut running = 0.0f64;
    let envelope: Vec<(f64, f64)> = series
        .iter()
        .map(|&(e, s)| {
            running = max_abs(running, s);
            (e, running)
        })
        .collect();
    fit_exponent(&envelope)
}

fn series_is_bounded(series: &[(f64, f64)], bound: f64) -> bool {
    series.iter().all(|(_, s)| s.is_finite() && s.abs() <= bound)
        && growth_exponent(series) >= -GROWTH_TOLERANCE
}

fn negligible_order(sups: &[(f64, f64)], p_max: u32) -> i32 {
    let tail = finest_quarter(sups);
    (0..=p_max as i32)
        .rev()
        .find(|&p| tail.iter().all(|&(e, s)| s <= e.powi(p)))
        .unwrap_or(-1)
}

/// True iff `theta` (a net of dimension 0) has a bounded representative on
/// the grid: `max |θ(ε)| <= bound` and no growth trend.
pub fn is_bounded_generalized_number(theta: &Net, grid: &EpsilonGrid) -> bool {
    is_bounded_generalized_number_with(theta, grid, DEFAULT_BOUND)
}

pub fn is_bounded_generalized_number_with(theta: &Net, grid: &EpsilonGrid, bound: f64) -> bool {
    theta.dim == 0 && Scalar::Net(theta.clone()).is_bounded(grid, bound)
}

/// Result of a c-boundedness check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CBoundedness {
    pub c_bounded: bool,
    /// Smallest axis-aligned box containing every sampled image.
    #[serde(serialize_with = "json::float_pairs")]
    pub image_box: Vec<(f64, f64)>,
    /// Per-ε radius about the origin of the image bounding box; a fixed
    /// `K'` exists iff this stays bounded.
    #[serde(serialize_with = "json::float_pairs")]
    pub extents: Vec<(f64, f64)>,
    #[serde(serialize_with = "json::float")]
    pub growth_exponent: f64,
}

impl CBoundedness {
    pub fn image_within(&self, outer: &[(f64, f64)]) -> bool {
        self.image_box.len() == outer.len()
            && self.image_box.iter().zip(outer).all(|(&(a, b), &(c, d))| c <= a && b <= d)
    }
}

/// Checks that `f` maps the lattice of `k` into a fixed box for all grid ε.
pub fn is_c_bounded(
    f: &VectorNet,
    k: &CompactBox,
    grid: &EpsilonGrid,
) -> Result<CBoundedness, ColombeauError> {
    check_dims(f.dim, k.dim())?;
    let bodies: Vec<Expr> = f.components.iter().map(|c| c.body.clone()).collect();
    c_boundedness(&|_| Ok(bodies.clone()), k, grid)
}

/// Engine behind [`is_c_bounded`] for maps given ε-wise.
pub fn c_boundedness(
    images_at: &(dyn Fn(f64) -> Result<Vec<Expr>, ColombeauError> + Sync),
    k: &CompactBox,
    grid: &EpsilonGrid,
) -> Result<CBoundedness, ColombeauError> {
    let lattice = k.lattice();
    let boxes: Vec<Vec<(f64, f64)>> = grid
        .values()
        .par_iter()
        .map(|&eps| {
            let comps = images_at(eps)?;
            comps
                .iter()
                .map(|c| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for x in &lattice {
                        let v = c.eval(eps, x).map_err(|source| ColombeauError::Eval {
                            eps,
                            x: x.clone(),
                            alpha: vec![],
                            source,
                        })?;
                        if v.is_nan() {
                            return Ok((f64::NEG_INFINITY, f64::INFINITY));
                        }
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    Ok((lo, hi))
                })
                .collect()
        })
        .collect::<Result<_, ColombeauError>>()?;

    let width = boxes.first().map_or(0, Vec::len);
    let image_box: Vec<(f64, f64)> = (0..width)
        .map(|i| {
            boxes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
                (lo.min(b[i].0), hi.max(b[i].1))
            })
        })
        .collect();
    let extents: Vec<(f64, f64)> = grid
        .values()
        .iter()
        .zip(&boxes)
        .map(|(&e, b)| (e, b.iter().map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2)).sum::<f64>().sqrt()))
        .collect();
    let growth = growth_exponent(&extents);
    let finite = image_box.iter().all(|(a, b)| a.is_finite() && b.is_finite());
    Ok(CBoundedness {
        c_bounded: finite && growth >= -GROWTH_TOLERANCE,
        image_box,
        extents,
        growth_exponent: growth,
    })
}
