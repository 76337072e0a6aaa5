//! Grid harnesses for invariance and constancy statements.
//!
//! Every verdict here is evidence on a finite ε-grid and a finite lattice,
//! never a proof.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;
use twofloat::TwoFloat;

use crate::colombeau::{
    classify_difference, fit_exponent, AsymptoticReport, ClassifyOptions, ColombeauError, CompactBox,
    EpsilonGrid, Net, Scalar,
};
use crate::decompose::{decompose_net_matrix, DecomposeError, MatrixKind};
use crate::expr::{Expr, MultiIndex};
use crate::groups::{ensure_c_bounded, Composition, Factor, Flow, GroupElement, GroupError};
use crate::json;
use crate::numbertheory::{convergents, corollary_pair, liouville_constant, AlgebraicNumber, NumberTheoryError, MAX_DENOMINATOR};

/// Real parameters always sampled for the hypothesis of the one-parameter
/// harness.
pub const DEFAULT_REAL_THETAS: [f64; 8] = [0.1, -0.1, 1.0, -1.0, PI, -PI, 3.0, -3.0];
/// Default lattice density for one-dimensional scans.
pub const DEFAULT_LINE_SAMPLES: usize = 241;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Colombeau(#[from] ColombeauError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
    #[error("generalized parameter {0} is not a bounded generalized number")]
    UnboundedParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Invariant,
    NotInvariant,
    Periodic,
    NotPeriodic,
    Holds,
    HypothesisFailed,
    ConclusionFailed,
    Inconsistent,
    Constant,
    NotConstant,
    NotApplicable,
    Certified,
    Violated,
    NonTheorem,
}

impl Verdict {
    pub fn is_positive(self) -> bool {
        matches!(
            self,
            Verdict::Invariant
                | Verdict::Periodic
                | Verdict::Holds
                | Verdict::Constant
                | Verdict::Certified
                | Verdict::NonTheorem
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Invariant => "invariant",
            Verdict::NotInvariant => "not invariant",
            Verdict::Periodic => "periodic",
            Verdict::NotPeriodic => "not periodic",
            Verdict::Holds => "holds",
            Verdict::HypothesisFailed => "hypothesis failed",
            Verdict::ConclusionFailed => "conclusion failed",
            Verdict::Inconsistent => "inconsistent",
            Verdict::Constant => "constant",
            Verdict::NotConstant => "not constant",
            Verdict::NotApplicable => "not applicable",
            Verdict::Certified => "certified",
            Verdict::Violated => "violated",
            Verdict::NonTheorem => "non-theorem",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub classify: ClassifyOptions,
    /// Reject actions that are not c-bounded instead of warning.
    pub strict: bool,
    pub line_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { classify: ClassifyOptions::default(), strict: true, line_samples: DEFAULT_LINE_SAMPLES }
    }
}

impl VerifyOptions {
    fn classify_for(&self, p: u32) -> ClassifyOptions {
        let mut o = self.classify.clone();
        o.p_max = o.p_max.max(p);
        o
    }
}

/// Deviation of `f∘g` from `f` for one group element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementEvidence {
    pub label: String,
    pub element: Value,
    pub invariant: bool,
    pub negligible_order: i32,
    /// Per-ε raw `sup_K |f_ε(g(x)) − f_ε(x)|`.
    #[serde(serialize_with = "json::float_pairs")]
    pub deviations: Vec<(f64, f64)>,
    pub report: AsymptoticReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub verdict: Verdict,
    pub order: u32,
    pub invariant: bool,
    pub evidence: Vec<ElementEvidence>,
    /// Pointwise maximum over all elements.
    pub aggregate: AsymptoticReport,
}

fn check_dim(expected: usize, found: usize) -> Result<(), VerifyError> {
    if expected == found {
        Ok(())
    } else {
        Err(VerifyError::DimensionMismatch { expected, found })
    }
}

fn element_evidence(
    f: &Net,
    label: &str,
    g: &GroupElement,
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<ElementEvidence, VerifyError> {
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), k.dim())?;
    ensure_c_bounded(g, k, grid, opts.strict)?;
    let comp = Composition::new(f.clone(), g.clone())?;
    let report = classify_difference(&comp, f, k, grid, &opts.classify_for(p))?;
    let deviations = report
        .series(&MultiIndex::zero(f.dim()))
        .and_then(|s| s.raw_sups.clone())
        .unwrap_or_default();
    Ok(ElementEvidence {
        label: label.to_string(),
        element: g.to_json(),
        invariant: report.is_negligible_at(p),
        negligible_order: report.negligible_order,
        deviations,
        report,
    })
}

fn aggregate(evidence: &[ElementEvidence], opts: &ClassifyOptions) -> Result<AsymptoticReport, VerifyError> {
    let reports: Vec<AsymptoticReport> = evidence.iter().map(|e| e.report.clone()).collect();
    AsymptoticReport::merge_max(&reports, opts)
        .ok_or_else(|| VerifyError::InvalidArgument("no group elements to test".into()))
}

fn invariance_over(
    f: &Net,
    elements: &[(String, GroupElement)],
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
    verdicts: (Verdict, Verdict),
) -> Result<InvarianceReport, VerifyError> {
    let evidence = elements
        .iter()
        .map(|(label, g)| element_evidence(f, label, g, k, grid, p, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(&evidence, &opts.classify_for(p))?;
    let invariant = aggregate.is_negligible_at(p);
    Ok(InvarianceReport {
        verdict: if invariant { verdicts.0 } else { verdicts.1 },
        order: p,
        invariant,
        evidence,
        aggregate,
    })
}

/// Whether `f∘g − f` is negligible at order `p` on `k`, with the default
/// options (strict c-boundedness).
pub fn check_invariance(
    f: &Net,
    g: &GroupElement,
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
) -> Result<InvarianceReport, VerifyError> {
    check_invariance_with(f, &[("g".to_string(), g.clone())], k, grid, p, &VerifyOptions::default())
}

/// [`check_invariance`] over several labelled elements at once.
pub fn check_invariance_with(
    f: &Net,
    elements: &[(String, GroupElement)],
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<InvarianceReport, VerifyError> {
    invariance_over(f, elements, k, grid, p, opts, (Verdict::Invariant, Verdict::NotInvariant))
}

/// Invariance of a one-dimensional net under `x ↦ x + h`.
pub fn check_periodicity(
    f: &Net,
    h: f64,
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<InvarianceReport, VerifyError> {
    check_dim(1, f.dim())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(VerifyError::InvalidArgument(format!("period must be positive, got {h}")));
    }
    let g = GroupElement::translation(vec![Scalar::Real(h)]);
    invariance_over(f, &[(format!("shift {h}"), g)], k, grid, p, opts, (Verdict::Periodic, Verdict::NotPeriodic))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Hypothesis,
    Conclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaCheck {
    pub block: Block,
    pub theta: Scalar,
    pub invariant: bool,
    pub negligible_order: i32,
    #[serde(serialize_with = "json::float_pairs")]
    pub deviations: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneParamReport {
    pub verdict: Verdict,
    pub order: u32,
    pub flow: Flow,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// Set when the hypothesis failed; the conclusion block then proves
    /// nothing.
    pub conclusion_informational: bool,
    pub evidence: Vec<ThetaCheck>,
}

/// Samples the real parameters ([`DEFAULT_REAL_THETAS`] plus `extra_real`)
/// for the hypothesis, then tests every bounded generalized parameter.
#[allow(clippy::too_many_arguments)]
pub fn one_param_theorem_harness(
    f: &Net,
    flow: &Flow,
    extra_real: &[f64],
    gen_thetas: &[Scalar],
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<OneParamReport, VerifyError> {
    check_dim(f.dim(), flow.dim())?;
    if let Some(t) = gen_thetas.iter().find(|t| !t.is_bounded(grid, opts.classify.bound)) {
        return Err(VerifyError::UnboundedParameter(t.describe()));
    }
    let mut reals: Vec<f64> = DEFAULT_REAL_THETAS.to_vec();
    for &t in extra_real {
        if !reals.contains(&t) {
            reals.push(t);
        }
    }
    let run = |block: Block, theta: Scalar| -> Result<ThetaCheck, VerifyError> {
        let g = flow.element(&theta)?;
        let e = element_evidence(f, &theta.describe(), &g, k, grid, p, opts)?;
        Ok(ThetaCheck {
            block,
            theta,
            invariant: e.invariant,
            negligible_order: e.negligible_order,
            deviations: e.deviations,
        })
    };
    let mut evidence = reals
        .into_iter()
        .map(|t| run(Block::Hypothesis, Scalar::Real(t)))
        .collect::<Result<Vec<_>, _>>()?;
    for t in gen_thetas {
        evidence.push(run(Block::Conclusion, t.clone())?);
    }
    let holds = |b: Block| evidence.iter().filter(|c| c.block == b).all(|c| c.invariant);
    let (hypothesis_holds, conclusion_holds) = (holds(Block::Hypothesis), holds(Block::Conclusion));
    let verdict = match (hypothesis_holds, conclusion_holds) {
        (false, _) => Verdict::HypothesisFailed,
        (true, true) => Verdict::Holds,
        (true, false) => Verdict::ConclusionFailed,
    };
    Ok(OneParamReport {
        verdict,
        order: p,
        flow: flow.clone(),
        hypothesis_holds,
        conclusion_holds,
        conclusion_informational: !hypothesis_holds,
        evidence,
    })
}

/// Factor-by-factor and full-matrix invariance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub verdict: Verdict,
    pub order: u32,
    pub kind: MatrixKind,
    pub factors_invariant: bool,
    pub full_invariant: bool,
    /// The full verdict equals the conjunction of the per-factor ones.
    pub consistent: bool,
    pub decomposition: Value,
    /// One entry per planar factor, then the full matrix last.
    pub evidence: Vec<ElementEvidence>,
    pub aggregate: AsymptoticReport,
}

fn factor_label(index: usize, factor: &Factor) -> String {
    match factor {
        Factor::Planar(pf) => format!("factor {} {}({},{})", index + 1, pf.kind.name(), pf.i, pf.j),
        _ => format!("factor {}", index + 1),
    }
}

fn pipeline(
    f: &Net,
    m: &[Vec<Scalar>],
    kind: MatrixKind,
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<PipelineReport, VerifyError> {
    check_dim(f.dim(), m.len())?;
    let factorization = decompose_net_matrix(m, grid, kind)?;
    let d = f.dim();
    let mut evidence = Vec::new();
    for (n, factor) in factorization.to_group_element().factors().iter().enumerate() {
        let g = GroupElement::new(d, vec![factor.clone()])?;
        evidence.push(element_evidence(f, &factor_label(n, factor), &g, k, grid, p, opts)?);
    }
    let factors_invariant = evidence.iter().all(|e| e.invariant);
    let full = GroupElement::matrix(m.to_vec())?;
    let full_evidence = element_evidence(f, "full", &full, k, grid, p, opts)?;
    let full_invariant = full_evidence.invariant;
    evidence.push(full_evidence);
    let aggregate = aggregate(&evidence, &opts.classify_for(p))?;
    let verdict = match (factors_invariant, full_invariant) {
        (true, true) => Verdict::Invariant,
        (false, false) => Verdict::NotInvariant,
        _ => Verdict::Inconsistent,
    };
    Ok(PipelineReport {
        verdict,
        order: p,
        kind,
        factors_invariant,
        full_invariant,
        consistent: factors_invariant == full_invariant,
        decomposition: factorization.to_json(),
        evidence,
        aggregate,
    })
}

/// Invariance under a (possibly generalized) element of `SO(d)`, through
/// its planar factors and as a whole.
pub fn rotation_invariance_pipeline(
    f: &Net,
    m: &[Vec<Scalar>],
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<PipelineReport, VerifyError> {
    pipeline(f, m, MatrixKind::Rotation, k, grid, p, opts)
}

/// As [`rotation_invariance_pipeline`] for a proper orthochronous Lorentz
/// matrix on `ℝ^{d+1}` (time first).
pub fn lorentz_invariance_pipeline(
    f: &Net,
    m: &[Vec<Scalar>],
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    opts: &VerifyOptions,
) -> Result<PipelineReport, VerifyError> {
    pipeline(f, m, MatrixKind::Lorentz, k, grid, p, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairEvidence {
    pub k: u64,
    pub l: u64,
    pub tested_points: usize,
    /// Lattice points whose target `x + k·h1 − l·h2` leaves `[a, b]`.
    pub hypothesis_violations: usize,
    pub hypothesis_violation: bool,
    /// The step path got stuck before reaching the target.
    pub stuck: bool,
    #[serde(serialize_with = "json::float")]
    pub measured: f64,
    #[serde(serialize_with = "json::float")]
    pub certified: f64,
    pub holds: bool,
    /// Step path from the first tested point.
    pub path: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainBoundReport {
    pub verdict: Verdict,
    pub order: Option<u32>,
    pub interval: (f64, f64),
    pub h1: f64,
    pub h2: f64,
    pub measured_eps: f64,
    pub evidence: Vec<PairEvidence>,
}

/// Alternates `+h1` steps (while staying `<= b`) and `−h2` steps (while
/// staying `>= a`) until `k` and `l` are used up. Returns the path and
/// whether it got stuck.
pub fn chain_path(x: f64, k: u64, l: u64, h1: f64, h2: f64, a: f64, b: f64) -> (Vec<f64>, bool) {
    let (mut i, mut j, mut pos) = (0u64, 0u64, x);
    let mut path = vec![x];
    while i < k || j < l {
        let mut moved = false;
        while i < k && pos + h1 <= b {
            pos += h1;
            i += 1;
            path.push(pos);
            moved = true;
        }
        while j < l && pos - h2 >= a {
            pos -= h2;
            j += 1;
            path.push(pos);
            moved = true;
        }
        if !moved {
            return (path, true);
        }
    }
    (path, false)
}

fn chain_lattice(a: f64, b: f64, h1: f64, h2: f64, samples: usize) -> Result<Vec<f64>, VerifyError> {
    let (lo, hi) = (a + h1 + h2, b - h1 - h2);
    if !(h1 > 0.0 && h2 > 0.0) || !(lo <= hi) || samples == 0 {
        return Err(VerifyError::InvalidArgument(format!(
            "need h1, h2 > 0 and a + h1 + h2 <= b − h1 − h2, got [{a}, {b}], h1={h1}, h2={h2}"
        )));
    }
    Ok(CompactBox::new(vec![(lo, hi)], samples)?.axis_points(0))
}

/// Largest one-step change `|f(y ± h) − f(y)|` seen on the lattice of
/// `[a, b]` and along every chain path of `pairs`: a measured almost-period
/// tolerance valid for everything [`chain_bound`] evaluates.
pub fn chain_tolerance(
    f: &(dyn Fn(f64) -> f64 + Sync),
    a: f64,
    b: f64,
    h1: f64,
    h2: f64,
    pairs: &[(u64, u64)],
    samples: usize,
) -> Result<f64, VerifyError> {
    let xs = chain_lattice(a, b, h1, h2, samples)?;
    let grid = CompactBox::new(vec![(a, b)], samples)?.axis_points(0);
    let mut worst = 0.0f64;
    for &h in &[h1, h2] {
        for &y in grid.iter().filter(|&&y| y + h <= b) {
            worst = worst.max((f(y + h) - f(y)).abs());
        }
    }
    let along: f64 = pairs
        .par_iter()
        .map(|&(k, l)| {
            xs.iter()
                .map(|&x| {
                    let (path, _) = chain_path(x, k, l, h1, h2, a, b);
                    path.windows(2).map(|w| (f(w[1]) - f(w[0])).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst.max(along))
}

/// Checks `|f(x + k·h1 − l·h2) − f(x)| <= (k + l)·measured_eps` on the
/// lattice of `[a + h1 + h2, b − h1 − h2]` for every pair.
#[allow(clippy::too_many_arguments)]
pub fn chain_bound(
    f: &(dyn Fn(f64) -> f64 + Sync),
    a: f64,
    b: f64,
    h1: f64,
    h2: f64,
    measured_eps: f64,
    pairs: &[(u64, u64)],
    samples: usize,
) -> Result<ChainBoundReport, VerifyError> {
    if !(measured_eps >= 0.0) {
        return Err(VerifyError::InvalidArgument(format!("tolerance must be non-negative, got {measured_eps}")));
    }
    let xs = chain_lattice(a, b, h1, h2, samples)?;
    let evidence: Vec<PairEvidence> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let shift = k as f64 * h1 - l as f64 * h2;
            let (mut tested, mut violations, mut stuck, mut measured) = (0usize, 0usize, false, 0.0f64);
            let mut first_path = None;
            for &x in &xs {
                let target = x + shift;
                if !(a <= target && target <= b) {
                    violations += 1;
                    continue;
                }
                let (path, s) = chain_path(x, k, l, h1, h2, a, b);
                tested += 1;
                stuck |= s;
                if !s {
                    let end = *path.last().expect("path starts at x");
                    measured = measured.max((f(end) - f(x)).abs());
                }
                first_path.get_or_insert(path);
            }
            let certified = (k + l) as f64 * measured_eps;
            PairEvidence {
                k,
                l,
                tested_points: tested,
                hypothesis_violations: violations,
                hypothesis_violation: violations > 0,
                stuck,
                measured,
                certified,
                holds: !stuck && measured <= certified,
                path: first_path.unwrap_or_default(),
            }
        })
        .collect();
    let ok = evidence.iter().all(|e| e.holds);
    Ok(ChainBoundReport {
        verdict: if ok { Verdict::Certified } else { Verdict::Violated },
        order: None,
        interval: (a, b),
        h1,
        h2,
        measured_eps,
        evidence,
    })
}

/// Per-ε scans behind the constancy harnesses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicityEvidence {
    /// `sup |f_ε(x+1) − f_ε(x)|` with the round-off floor.
    #[serde(serialize_with = "json::float_pairs")]
    pub period_one: Vec<(f64, f64)>,
    /// `sup |f_ε(x+α) − f_ε(x)|` with the round-off floor.
    #[serde(serialize_with = "json::float_pairs")]
    pub period_alpha: Vec<(f64, f64)>,
    /// `sup_{|x|<=R} |f_ε'(x)|`.
    #[serde(serialize_with = "json::float_pairs")]
    pub derivative_sups: Vec<(f64, f64)>,
    /// `sup_{|x|<=R−α−2} |f_ε(x) − f_ε(0)|`, no floor.
    #[serde(serialize_with = "json::float_pairs")]
    pub measured: Vec<(f64, f64)>,
}

struct Scan {
    one: f64,
    alpha: f64,
    derivative: f64,
    measured: f64,
}

fn eval_at(e: &Expr, eps: f64, x: f64) -> Result<f64, ColombeauError> {
    e.eval(eps, &[x]).map_err(|source| ColombeauError::Eval { eps, x: vec![x], alpha: vec![], source })
}

fn shift_sup(body: &Expr, eps: f64, h: f64, xs: &[f64], hi: f64, roundoff_rel: f64) -> Result<f64, ColombeauError> {
    let (mut sup, mut scale) = (0.0f64, 0.0f64);
    for &x in xs.iter().filter(|&&x| x + h <= hi) {
        let (u, v) = (eval_at(body, eps, x + h)?, eval_at(body, eps, x)?);
        let d = u - v;
        sup = if d.is_nan() { f64::INFINITY } else { sup.max(d.abs()) };
        scale = scale.max(u.abs()).max(v.abs());
    }
    Ok(if sup.is_finite() && sup <= roundoff_rel * scale { 0.0 } else { sup })
}

fn scan_two_periods(
    f: &Net,
    alpha: f64,
    r: f64,
    grid: &EpsilonGrid,
    opts: &VerifyOptions,
) -> Result<Vec<Scan>, VerifyError> {
    let xs = CompactBox::new(vec![(-r, r)], opts.line_samples)?.axis_points(0);
    let inner_r = r - alpha - 2.0;
    let inner = CompactBox::new(vec![(-inner_r, inner_r)], opts.line_samples)?.axis_points(0);
    let body = f.body();
    let derivative = body.derivative(&MultiIndex::unit(1, 0));
    let rel = opts.classify.roundoff_rel;
    let rows: Result<Vec<Scan>, ColombeauError> = grid
        .values()
        .par_iter()
        .map(|&eps| {
            let f0 = eval_at(body, eps, 0.0)?;
            let mut measured = 0.0f64;
            for &x in &inner {
                let d = eval_at(body, eps, x)? - f0;
                measured = if d.is_nan() { f64::INFINITY } else { measured.max(d.abs()) };
            }
            let mut dsup = 0.0f64;
            for &x in &xs {
                let v = eval_at(&derivative, eps, x)?;
                dsup = if v.is_nan() { f64::INFINITY } else { dsup.max(v.abs()) };
            }
            Ok(Scan {
                one: shift_sup(body, eps, 1.0, &xs, r, rel)?,
                alpha: shift_sup(body, eps, alpha, &xs, r, rel)?,
                derivative: dsup,
                measured,
            })
        })
        .collect();
    Ok(rows?)
}

fn periodicity_evidence(grid: &EpsilonGrid, scans: &[Scan]) -> PeriodicityEvidence {
    let col = |pick: &dyn Fn(&Scan) -> f64| grid.values().iter().zip(scans).map(|(&e, s)| (e, pick(s))).collect();
    PeriodicityEvidence {
        period_one: col(&|s| s.one),
        period_alpha: col(&|s| s.alpha),
        derivative_sups: col(&|s| s.derivative),
        measured: col(&|s| s.measured),
    }
}

/// Derivative exponent: `max(0, ceil(−b))` for the fitted exponent `b` of
/// `sup |f_ε'|`; `None` when the derivative is not moderate.
fn derivative_exponent(evidence: &PeriodicityEvidence) -> Option<u32> {
    let b = fit_exponent(&evidence.derivative_sups);
    if b == f64::INFINITY {
        Some(0)
    } else if b.is_finite() {
        // tolerate fit noise just above an integer
        Some((-b - 1e-6).ceil().max(0.0) as u32)
    } else {
        None
    }
}

/// The index from which `ok` holds at every finer grid value.
fn detect_eps0(ok: &[bool]) -> Option<usize> {
    let first_bad_from_end = ok.iter().rposition(|&b| !b);
    match first_bad_from_end {
        None => Some(0),
        Some(i) if i + 1 < ok.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// The Liouville-pair walk at one ε.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineAudit {
    pub k: u64,
    pub l: u64,
    pub h: f64,
    /// `ε^{Mp}`.
    pub lower: f64,
    /// `2ε^p`.
    pub upper: f64,
    /// `(α+1)/ε^p`.
    pub k_bound: f64,
    /// `1/ε^p`.
    pub l_bound: f64,
    pub within_bounds: bool,
    /// Every lattice `x` has `|λ − x/h| <= 1` and `|λ|h <= R − α − 1`.
    pub walk_ok: bool,
    pub max_lambda: i64,
    /// `max_x (|x|/h + 1)(α+2)ε^{(M+1)p}`.
    #[serde(serialize_with = "json::float")]
    pub structural_estimate: f64,
    /// `max_x |f_ε(λh) − f_ε(0)|`.
    #[serde(serialize_with = "json::float")]
    pub orbit_deviation: f64,
    /// `max_x |f_ε(x) − f_ε(λh)|`.
    #[serde(serialize_with = "json::float")]
    pub step_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstancyRow {
    pub eps: f64,
    #[serde(serialize_with = "json::float")]
    pub measured: f64,
    #[serde(serialize_with = "json::float")]
    pub bound: f64,
    pub certified: bool,
    /// Absent where `ε^{-p}` exceeds the largest trusted denominator.
    pub audit: Option<DiophantineAudit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEvidence {
    pub order: u32,
    pub eps0: Option<f64>,
    pub failing_period: Option<String>,
    /// `max (measured − 2ε^{p−N})⁺ / ε^p` over the certified rows.
    #[serde(serialize_with = "json::float")]
    pub c_empirical: f64,
    pub certified: bool,
    pub rows: Vec<ConstancyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstancyReport {
    pub verdict: Verdict,
    pub order: u32,
    pub alpha: String,
    pub alpha_value: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    /// `(R − α − 1)(α + 2)`, the constant of the certified bound.
    pub c_proof: f64,
    pub failing_period: Option<String>,
    pub evidence: Vec<OrderEvidence>,
    pub periodicity: PeriodicityEvidence,
}

#[allow(clippy::too_many_arguments)]
fn audit(
    f: &Net,
    a: &AlgebraicNumber,
    m: u32,
    r: f64,
    eps: f64,
    order: u32,
    inner: &[f64],
) -> Result<Option<DiophantineAudit>, VerifyError> {
    let ep = eps.powi(order as i32);
    let rd = 1.0 / ep;
    if rd > MAX_DENOMINATOR as f64 {
        return Ok(None);
    }
    let alpha = a.value_f64();
    let pair = corollary_pair(a, rd)?;
    let h = pair.defect;
    let lower = eps.powi((m * order) as i32);
    let upper = 2.0 * ep;
    let (k_bound, l_bound) = ((alpha + 1.0) / ep, 1.0 / ep);
    let within_bounds = lower <= h && h <= upper && pair.k as f64 <= k_bound && pair.l as f64 <= l_bound;
    let body = f.body();
    let f0 = eval_at(body, eps, 0.0)?;
    let (mut walk_ok, mut max_lambda, mut orbit, mut step) = (true, 0i64, 0.0f64, 0.0f64);
    for &x in inner {
        let ratio = x / h;
        let lambda = ratio.round();
        walk_ok &= (lambda - ratio).abs() <= 1.0 && (lambda * h).abs() <= r - alpha - 1.0;
        max_lambda = max_lambda.max(lambda.abs() as i64);
        let fl = eval_at(body, eps, lambda * h)?;
        orbit = orbit.max((fl - f0).abs());
        step = step.max((eval_at(body, eps, x)? - fl).abs());
    }
    let reach = inner.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let structural_estimate = (reach / h + 1.0) * (alpha + 2.0) * eps.powi(((m + 1) * order) as i32);
    Ok(Some(DiophantineAudit {
        k: pair.k,
        l: pair.l,
        h,
        lower,
        upper,
        k_bound,
        l_bound,
        within_bounds,
        walk_ok,
        max_lambda,
        structural_estimate,
        orbit_deviation: orbit,
        step_deviation: step,
    }))
}

/// Tests whether a one-dimensional net with periods 1 and an algebraic
/// irrational `α` is a generalized constant on `|x| <= R − α − 2`, for
/// every order `1..=p`.
pub fn two_period_constancy(
    f: &Net,
    a: &AlgebraicNumber,
    r: f64,
    p: u32,
    grid: &EpsilonGrid,
    opts: &VerifyOptions,
) -> Result<ConstancyReport, VerifyError> {
    check_dim(1, f.dim())?;
    let alpha = a.value_f64();
    if !(r > alpha + 2.0) {
        return Err(VerifyError::InvalidArgument(format!("R must exceed α + 2 = {}, got {r}", alpha + 2.0)));
    }
    if p == 0 {
        return Err(VerifyError::InvalidArgument("order must be at least 1".into()));
    }
    let m = liouville_constant(a)?.m;
    let scans = scan_two_periods(f, alpha, r, grid, opts)?;
    let periodicity = periodicity_evidence(grid, &scans);
    let n = derivative_exponent(&periodicity);
    let c_proof = (r - alpha - 1.0) * (alpha + 2.0);
    let inner_r = r - alpha - 2.0;
    let inner = CompactBox::new(vec![(-inner_r, inner_r)], opts.line_samples)?.axis_points(0);
    let eps = grid.values();

    let mut evidence = Vec::new();
    for order in 1..=p {
        let tol = |e: f64| e.powi(((m + 2) * order) as i32);
        let derivative_ok =
            |e: f64, s: &Scan| n.is_some_and(|n| s.derivative <= e.powi(-(n as i32)));
        let ok: Vec<bool> = eps
            .iter()
            .zip(&scans)
            .map(|(&e, s)| s.one <= tol(e) && s.alpha <= tol(e) && derivative_ok(e, s))
            .collect();
        let Some(start) = detect_eps0(&ok) else {
            let (e, s) = (eps[eps.len() - 1], &scans[scans.len() - 1]);
            let failing = if s.one > tol(e) {
                "1"
            } else if s.alpha > tol(e) {
                "alpha"
            } else {
                "derivative"
            };
            evidence.push(OrderEvidence {
                order,
                eps0: None,
                failing_period: Some(failing.to_string()),
                c_empirical: f64::NAN,
                certified: false,
                rows: vec![],
            });
            continue;
        };
        let n = n.expect("eps0 requires a moderate derivative");
        let rows = (start..eps.len())
            .into_par_iter()
            .map(|i| -> Result<ConstancyRow, VerifyError> {
                let e = eps[i];
                let ep = e.powi(order as i32);
                let bound = c_proof * ep + 2.0 * e.powi(order as i32 - n as i32);
                let measured = scans[i].measured;
                let audit = audit(f, a, m, r, e, order, &inner)?;
                let audit_ok = audit.as_ref().is_none_or(|a| a.within_bounds && a.walk_ok);
                Ok(ConstancyRow { eps: e, measured, bound, certified: measured <= bound && audit_ok, audit })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let c_empirical = rows
            .iter()
            .map(|row| {
                let ep = row.eps.powi(order as i32);
                (row.measured - 2.0 * row.eps.powi(order as i32 - n as i32)).max(0.0) / ep
            })
            .fold(0.0, f64::max);
        evidence.push(OrderEvidence {
            order,
            eps0: Some(eps[start]),
            failing_period: None,
            c_empirical,
            certified: rows.iter().all(|row| row.certified),
            rows,
        });
    }

    let failing_period = evidence.iter().find_map(|e| e.failing_period.clone());
    let verdict = if failing_period.is_some() {
        Verdict::NotApplicable
    } else if evidence.iter().all(|e| e.certified) {
        Verdict::Constant
    } else {
        Verdict::NotConstant
    };
    Ok(ConstancyReport {
        verdict,
        order: p,
        alpha: a.name().to_string(),
        alpha_value: alpha,
        radius: r,
        m,
        n,
        c_proof,
        failing_period,
        evidence,
        periodicity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslationConstancyReport {
    pub verdict: Verdict,
    pub order: u32,
    pub hypothesis_holds: bool,
    pub conclusion_informational: bool,
    /// One entry per translation of the hypothesis block.
    pub evidence: Vec<ElementEvidence>,
    /// Classification of `f(x) − f(0)` on the box.
    pub conclusion: AsymptoticReport,
}

/// Invariance under each sampled translation, then negligibility of
/// `x ↦ f(x) − f(0)` on `k`.
pub fn translation_constancy(
    f: &Net,
    k: &CompactBox,
    grid: &EpsilonGrid,
    p: u32,
    h_samples: &[Vec<f64>],
    opts: &VerifyOptions,
) -> Result<TranslationConstancyReport, VerifyError> {
    if h_samples.is_empty() {
        return Err(VerifyError::InvalidArgument("no translations given".into()));
    }
    let elements = h_samples
        .iter()
        .map(|h| {
            check_dim(f.dim(), h.len())?;
            let label = format!("shift {h:?}");
            Ok((label, GroupElement::translation(h.iter().map(|&c| Scalar::Real(c)).collect())))
        })
        .collect::<Result<Vec<_>, VerifyError>>()?;
    let hypothesis = check_invariance_with(f, &elements, k, grid, p, opts)?;
    let conclusion = classify_difference(f, &f.at_origin(), k, grid, &opts.classify_for(p))?;
    let verdict = if !hypothesis.invariant {
        Verdict::HypothesisFailed
    } else if conclusion.is_negligible_at(p) {
        Verdict::Constant
    } else {
        Verdict::NotConstant
    };
    Ok(TranslationConstancyReport {
        verdict,
        order: p,
        hypothesis_holds: hypothesis.invariant,
        conclusion_informational: !hypothesis.invariant,
        evidence: hypothesis.evidence,
        conclusion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExplorerStatus {
    /// Measured sups stay below `ε^p` wherever periodicity holds.
    Flat,
    NotFlat,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorerRow {
    pub eps: f64,
    pub k: u64,
    pub l: u64,
    pub h: f64,
    /// `ln h / ln ε^p`, the exponent with `h = ε^{Mp}`.
    #[serde(serialize_with = "json::float")]
    pub effective_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorerReport {
    pub label: &'static str,
    pub verdict: Verdict,
    pub order: u32,
    pub alpha: String,
    pub alpha_value: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub status: ExplorerStatus,
    pub failing_period: Option<String>,
    /// Largest effective exponent over the rows, rounded up; used for the
    /// periodicity tolerance `ε^{(M+2)p}`.
    pub effective_m: u32,
    pub eps0: Option<f64>,
    pub evidence: Vec<ExplorerRow>,
    pub periodicity: PeriodicityEvidence,
}

/// Two-period machinery for an arbitrary irrational ratio, with continued
/// fraction convergents in place of the Liouville pair. Exploratory only.
pub fn open_question_explorer(
    name: &str,
    alpha: TwoFloat,
    f: &Net,
    r: f64,
    p: u32,
    grid: &EpsilonGrid,
    opts: &VerifyOptions,
) -> Result<ExplorerReport, VerifyError> {
    check_dim(1, f.dim())?;
    let a = alpha.hi();
    if !(a > 0.0) || !(r > a + 2.0) || p == 0 {
        return Err(VerifyError::InvalidArgument(format!("need α > 0, R > α + 2 and p >= 1 (α={a}, R={r}, p={p})")));
    }
    let cf = convergents(alpha, 200);
    let mut evidence = Vec::new();
    for &e in grid.values() {
        let ep = e.powi(p as i32);
        let cap = 1.0 / ep;
        if cap > MAX_DENOMINATOR as f64 {
            continue;
        }
        let Some(&(k, l)) = cf.iter().take_while(|&&(_, q)| q as f64 <= cap).last() else { continue };
        let h = (TwoFloat::from(k) - TwoFloat::from(l) * alpha).abs().hi();
        let effective_m = if h > 0.0 { h.ln() / ep.ln() } else { f64::INFINITY };
        evidence.push(ExplorerRow { eps: e, k, l, h, effective_m });
    }
    let effective_m = evidence
        .iter()
        .map(|row| row.effective_m)
        .filter(|m| m.is_finite())
        .fold(2.0f64, f64::max)
        .ceil() as u32;
    let scans = scan_two_periods(f, a, r, grid, opts)?;
    let periodicity = periodicity_evidence(grid, &scans);
    let eps = grid.values();
    let tol = |e: f64| e.powi(((effective_m + 2) * p) as i32);
    let ok: Vec<bool> = eps.iter().zip(&scans).map(|(&e, s)| s.one <= tol(e) && s.alpha <= tol(e)).collect();
    let (status, failing_period, eps0) = match detect_eps0(&ok) {
        None => {
            let (e, s) = (eps[eps.len() - 1], &scans[scans.len() - 1]);
            let failing = if s.one > tol(e) { "1" } else { "alpha" };
            (ExplorerStatus::NotApplicable, Some(failing.to_string()), None)
        }
        Some(start) => {
            let flat = (start..eps.len()).all(|i| scans[i].measured <= eps[i].powi(p as i32));
            (if flat { ExplorerStatus::Flat } else { ExplorerStatus::NotFlat }, None, Some(eps[start]))
        }
    };
    Ok(ExplorerReport {
        label: "NON-THEOREM",
        verdict: Verdict::NonTheorem,
        order: p,
        alpha: name.to_string(),
        alpha_value: a,
        radius: r,
        status,
        failing_period,
        effective_m,
        eps0,
        evidence,
        periodicity,
    })
}
