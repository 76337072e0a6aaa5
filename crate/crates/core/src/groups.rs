//! Group actions on ℝ^d: planar rotations, hyperbolic rotations (boosts),
//! translations, explicit matrices and explicit coordinate maps, together
//! with composition of nets with such actions.
//!
//! A [`GroupElement`] is an ordered list of factors applied right to left:
//! `[F1, F2, F3]` maps `x` to `F1(F2(F3(x)))`.
//!
//! Angles and offsets are [`Scalar`]s. Closed-form generalized scalars are
//! substituted symbolically by [`compose_net`]; at a fixed ε every factor is
//! frozen to numbers and folded into a single affine map, which keeps the
//! bodies produced by [`Composition`] small.

use std::borrow::Cow;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::colombeau::{
    c_boundedness, CBoundedness, ColombeauError, CompactBox, EpsilonGrid, Net, Representative,
    Scalar, VectorNet,
};
use crate::expr::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Colombeau(#[from] ColombeauError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid axes ({i}, {j}) in dimension {dim}")]
    InvalidAxes { i: usize, j: usize, dim: usize },
    #[error("coordinate map references x{index} in dimension {dim}")]
    MapOutOfRange { index: usize, dim: usize },
    #[error("the action is not c-bounded on the box (extent exponent {exponent})")]
    NotCBounded { exponent: f64, report: Box<CBoundedness> },
    #[error("coordinate maps have no matrix form")]
    NotAffine,
    #[error("invalid group element JSON: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanarKind {
    Rotation,
    Boost,
}

impl PlanarKind {
    pub fn name(self) -> &'static str {
        match self {
            PlanarKind::Rotation => "rotation",
            PlanarKind::Boost => "boost",
        }
    }

    /// The 2×2 block `[[a, b], [c, d]]` acting on `(x_i, x_j)`.
    pub fn block(self, theta: f64) -> [[f64; 2]; 2] {
        match self {
            PlanarKind::Rotation => {
                let (s, c) = theta.sin_cos();
                [[c, -s], [s, c]]
            }
            PlanarKind::Boost => {
                let (s, c) = (theta.sinh(), theta.cosh());
                [[c, s], [s, c]]
            }
        }
    }

    fn block_exprs(self, theta: Expr) -> [[Expr; 2]; 2] {
        match self {
            PlanarKind::Rotation => {
                let c = Expr::func(Func::Cos, theta.clone());
                let s = Expr::func(Func::Sin, theta);
                [[c.clone(), Expr::neg(s.clone())], [s, c]]
            }
            PlanarKind::Boost => {
                let c = Expr::func(Func::Cosh, theta.clone());
                let s = Expr::func(Func::Sinh, theta);
                [[c.clone(), s.clone()], [s, c]]
            }
        }
    }
}

/// `R_{i,j,θ}` or `σ_{i,j,θ}`; axes are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanarFactor {
    pub kind: PlanarKind,
    pub i: usize,
    pub j: usize,
    pub theta: Scalar,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Planar(PlanarFactor),
    Translation(Vec<Scalar>),
    Matrix(Vec<Vec<Scalar>>),
    /// Explicit coordinate expressions in `eps, x1..xd`.
    Map(Vec<Expr>),
}

impl Factor {
    fn to_json(&self) -> Value {
        match self {
            Factor::Planar(p) => json!({"kind": p.kind.name(), "i": p.i, "j": p.j, "theta": p.theta}),
            Factor::Translation(t) => json!({"kind": "translation", "offset": t}),
            Factor::Matrix(m) => json!({"kind": "matrix", "matrix": m}),
            Factor::Map(m) => {
                json!({"kind": "map", "components": m.iter().map(|e| e.to_string()).collect::<Vec<_>>()})
            }
        }
    }

    fn scalars(&self) -> Box<dyn Iterator<Item = &Scalar> + '_> {
        match self {
            Factor::Planar(p) => Box::new(std::iter::once(&p.theta)),
            Factor::Translation(t) => Box::new(t.iter()),
            Factor::Matrix(m) => Box::new(m.iter().flatten()),
            Factor::Map(_) => Box::new(std::iter::empty()),
        }
    }
}

/// A composite of factors on ℝ^dim, applied right to left.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    dim: usize,
    factors: Vec<Factor>,
}

impl GroupElement {
    pub fn new(dim: usize, factors: Vec<Factor>) -> Result<Self, GroupError> {
        for f in &factors {
            match f {
                Factor::Planar(p) => {
                    if !(1 <= p.i && p.i < p.j && p.j <= dim) {
                        return Err(GroupError::InvalidAxes { i: p.i, j: p.j, dim });
                    }
                }
                Factor::Translation(t) => check_len(dim, t.len())?,
                Factor::Matrix(m) => {
                    check_len(dim, m.len())?;
                    for row in m {
                        check_len(dim, row.len())?;
                    }
                }
                Factor::Map(m) => {
                    check_len(dim, m.len())?;
                    if let Some(index) = m.iter().map(Expr::max_spatial_index).find(|&k| k > dim) {
                        return Err(GroupError::MapOutOfRange { index, dim });
                    }
                }
            }
        }
        Ok(GroupElement { dim, factors })
    }

    pub fn identity(dim: usize) -> Self {
        GroupElement { dim, factors: vec![] }
    }

    pub fn planar(
        dim: usize,
        kind: PlanarKind,
        i: usize,
        j: usize,
        theta: impl Into<Scalar>,
    ) -> Result<Self, GroupError> {
        GroupElement::new(dim, vec![Factor::Planar(PlanarFactor { kind, i, j, theta: theta.into() })])
    }

    pub fn rotation(dim: usize, i: usize, j: usize, theta: impl Into<Scalar>) -> Result<Self, GroupError> {
        GroupElement::planar(dim, PlanarKind::Rotation, i, j, theta)
    }

    pub fn boost(dim: usize, i: usize, j: usize, theta: impl Into<Scalar>) -> Result<Self, GroupError> {
        GroupElement::planar(dim, PlanarKind::Boost, i, j, theta)
    }

    pub fn translation(offset: Vec<Scalar>) -> Self {
        GroupElement { dim: offset.len(), factors: vec![Factor::Translation(offset)] }
    }

    pub fn matrix(rows: Vec<Vec<Scalar>>) -> Result<Self, GroupError> {
        GroupElement::new(rows.len(), vec![Factor::Matrix(rows)])
    }

    pub fn real_matrix(rows: &[Vec<f64>]) -> Result<Self, GroupError> {
        GroupElement::matrix(rows.iter().map(|r| r.iter().map(|&v| Scalar::Real(v)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        check_len(self.dim, other.dim)?;
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Ok(GroupElement { dim: self.dim, factors })
    }

    /// True if some angle, offset or entry is a generalized number.
    pub fn is_generalized(&self) -> bool {
        self.factors.iter().flat_map(Factor::scalars).any(Scalar::is_generalized)
            || self.factors.iter().any(|f| matches!(f, Factor::Map(m) if m.iter().any(Expr::uses_eps)))
    }

    /// Image of a point; `eps` is required when the element is generalized.
    pub fn apply_point(&self, x: &[f64], eps: Option<f64>) -> Result<Vec<f64>, GroupError> {
        check_len(self.dim, x.len())?;
        let mut y = x.to_vec();
        for f in self.factors.iter().rev() {
            y = match f {
                Factor::Planar(p) => {
                    let [[a, b], [c, d]] = p.kind.block(p.theta.value_at(eps)?);
                    let (u, v) = (y[p.i - 1], y[p.j - 1]);
                    y[p.i - 1] = a * u + b * v;
                    y[p.j - 1] = c * u + d * v;
                    y
                }
                Factor::Translation(t) => {
                    for (yk, tk) in y.iter_mut().zip(t) {
                        *yk += tk.value_at(eps)?;
                    }
                    y
                }
                Factor::Matrix(m) => m
                    .iter()
                    .map(|row| {
                        row.iter().zip(&y).try_fold(0.0, |acc, (s, v)| Ok::<_, GroupError>(acc + s.value_at(eps)? * v))
                    })
                    .collect::<Result<_, _>>()?,
                Factor::Map(m) => {
                    let e = match eps {
                        Some(e) => e,
                        None if m.iter().any(Expr::uses_eps) => return Err(ColombeauError::NeedsEps.into()),
                        None => 1.0,
                    };
                    m.iter()
                        .map(|c| {
                            c.eval(e, &y).map_err(|source| {
                                ColombeauError::Eval { eps: e, x: y.clone(), alpha: vec![], source }.into()
                            })
                        })
                        .collect::<Result<_, GroupError>>()?
                }
            };
        }
        Ok(y)
    }

    /// Numeric affine form `x ↦ A x + b` at `eps`.
    pub fn affine_at(&self, eps: Option<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>), GroupError> {
        let d = self.dim;
        let mut a: Vec<Vec<f64>> = (0..d).map(|r| (0..d).map(|c| f64::from(u8::from(r == c))).collect()).collect();
        let mut b = vec![0.0; d];
        for f in self.factors.iter().rev() {
            match f {
                Factor::Planar(p) => {
                    let [[m00, m01], [m10, m11]] = p.kind.block(p.theta.value_at(eps)?);
                    let (i, j) = (p.i - 1, p.j - 1);
                    for c in 0..d {
                        let (u, v) = (a[i][c], a[j][c]);
                        a[i][c] = m00 * u + m01 * v;
                        a[j][c] = m10 * u + m11 * v;
                    }
                    let (u, v) = (b[i], b[j]);
                    b[i] = m00 * u + m01 * v;
                    b[j] = m10 * u + m11 * v;
                }
                Factor::Translation(t) => {
                    for (bk, tk) in b.iter_mut().zip(t) {
                        *bk += tk.value_at(eps)?;
                    }
                }
                Factor::Matrix(m) => {
                    let m: Vec<Vec<f64>> = m
                        .iter()
                        .map(|row| row.iter().map(|s| s.value_at(eps)).collect::<Result<_, _>>())
                        .collect::<Result<_, _>>()?;
                    let na = (0..d).map(|r| (0..d).map(|c| (0..d).map(|k| m[r][k] * a[k][c]).sum()).collect()).collect();
                    let nb = (0..d).map(|r| (0..d).map(|k| m[r][k] * b[k]).sum()).collect();
                    a = na;
                    b = nb;
                }
                Factor::Map(_) => return Err(GroupError::NotAffine),
            }
        }
        Ok((a, b))
    }

    /// Coordinate expressions of the image `g(x)`. With `eps` given, all
    /// scalars are frozen; without it generalized scalars stay symbolic
    /// (tabulated ones then fail with [`ColombeauError::NeedsEps`]).
    pub fn image_exprs(&self, eps: Option<f64>) -> Result<Vec<Expr>, GroupError> {
        if eps.is_some() && !self.factors.iter().any(|f| matches!(f, Factor::Map(_))) {
            let (a, b) = self.affine_at(eps)?;
            return Ok(a.iter().zip(&b).map(|(row, &off)| linear_combination(row, off)).collect());
        }
        let mut coords: Vec<Expr> = (1..=self.dim).map(Expr::x).collect();
        for f in self.factors.iter().rev() {
            coords = match f {
                Factor::Planar(p) => {
                    let [[m00, m01], [m10, m11]] = p.kind.block_exprs(p.theta.expr_at(eps)?);
                    let (u, v) = (coords[p.i - 1].clone(), coords[p.j - 1].clone());
                    coords[p.i - 1] = Expr::add(Expr::mul(m00, u.clone()), Expr::mul(m01, v.clone()));
                    coords[p.j - 1] = Expr::add(Expr::mul(m10, u), Expr::mul(m11, v));
                    coords
                }
                Factor::Translation(t) => coords
                    .into_iter()
                    .zip(t)
                    .map(|(c, s)| Ok(Expr::add(c, s.expr_at(eps)?)))
                    .collect::<Result<_, GroupError>>()?,
                Factor::Matrix(m) => m
                    .iter()
                    .map(|row| {
                        row.iter().zip(&coords).try_fold(Expr::Const(0.0), |acc, (s, c)| {
                            Ok::<_, GroupError>(Expr::add(acc, Expr::mul(s.expr_at(eps)?, c.clone())))
                        })
                    })
                    .collect::<Result<_, _>>()?,
                Factor::Map(m) => m.iter().map(|e| substitute_coords(e, &coords, eps)).collect(),
            };
        }
        Ok(coords)
    }

    /// `g ∘ f` for a vector net `f` with as many components as `g` has axes.
    pub fn apply_net(&self, f: &VectorNet) -> Result<VectorNet, GroupError> {
        check_len(self.dim, f.components().len())?;
        let bodies: Vec<Expr> = f.components().iter().map(|c| c.body().clone()).collect();
        let images = self.image_exprs(None)?;
        let comps = images
            .iter()
            .map(|e| Net::new(substitute_coords(e, &bodies, None), f.dim()))
            .collect::<Result<_, _>>()?;
        Ok(VectorNet::new(comps, f.dim())?)
    }

    /// c-boundedness of the coordinate maps on `k`.
    pub fn c_boundedness(&self, k: &CompactBox, grid: &EpsilonGrid) -> Result<CBoundedness, GroupError> {
        check_len(self.dim, k.dim())?;
        let images_at = |eps: f64| self.image_exprs(Some(eps)).map_err(into_colombeau);
        Ok(c_boundedness(&images_at, k, grid)?)
    }

    pub fn to_json(&self) -> Value {
        if let [Factor::Matrix(m)] = self.factors.as_slice() {
            return json!({"matrix": m});
        }
        json!({"dim": self.dim, "factors": self.factors.iter().map(Factor::to_json).collect::<Vec<_>>()})
    }

    /// Reads `{"factors": [...]}` or `{"matrix": [[...]]}`. The dimension is
    /// taken from `"dim"`, the matrix size, or `dim_hint`.
    pub fn from_json(value: &Value, dim_hint: Option<usize>) -> Result<Self, GroupError> {
        let obj = value.as_object().ok_or_else(|| GroupError::Json("expected an object".into()))?;
        if let Some(m) = obj.get("matrix") {
            return GroupElement::matrix(read_matrix(m)?);
        }
        let factors = obj
            .get("factors")
            .and_then(Value::as_array)
            .ok_or_else(|| GroupError::Json("expected \"factors\" or \"matrix\"".into()))?;
        let dim = match obj.get("dim") {
            Some(d) => Some(d.as_u64().ok_or_else(|| GroupError::Json("\"dim\" must be an integer".into()))? as usize),
            None => dim_hint,
        };
        let mut parsed = Vec::with_capacity(factors.len());
        let mut inferred = 0;
        for f in factors {
            let kind = f.get("kind").and_then(Value::as_str).unwrap_or("");
            let factor = match kind {
                "rotation" | "boost" => {
                    let axis = |name: &str| {
                        f.get(name)
                            .and_then(Value::as_u64)
                            .map(|v| v as usize)
                            .ok_or_else(|| GroupError::Json(format!("{kind} needs integer \"{name}\"")))
                    };
                    let (i, j) = (axis("i")?, axis("j")?);
                    inferred = inferred.max(j);
                    let theta = Scalar::from_json(
                        f.get("theta").ok_or_else(|| GroupError::Json(format!("{kind} needs \"theta\"")))?,
                    )?;
                    let kind = if kind == "rotation" { PlanarKind::Rotation } else { PlanarKind::Boost };
                    Factor::Planar(PlanarFactor { kind, i, j, theta })
                }
                "translation" => {
                    let offset = f
                        .get("offset")
                        .and_then(Value::as_array)
                        .ok_or_else(|| GroupError::Json("translation needs \"offset\"".into()))?
                        .iter()
                        .map(Scalar::from_json)
                        .collect::<Result<Vec<_>, _>>()?;
                    inferred = inferred.max(offset.len());
                    Factor::Translation(offset)
                }
                "matrix" => {
                    let m = read_matrix(f.get("matrix").unwrap_or(&Value::Null))?;
                    inferred = inferred.max(m.len());
                    Factor::Matrix(m)
                }
                "map" => {
                    let comps = f
                        .get("components")
                        .and_then(Value::as_array)
                        .ok_or_else(|| GroupError::Json("map needs \"components\"".into()))?;
                    inferred = inferred.max(comps.len());
                    let d = dim.unwrap_or(comps.len());
                    Factor::Map(
                        comps
                            .iter()
                            .map(|c| {
                                let text = c.as_str().ok_or_else(|| GroupError::Json("map components are strings".into()))?;
                                Expr::parse(text, d).map_err(|e| GroupError::Colombeau(e.into()))
                            })
                            .collect::<Result<_, _>>()?,
                    )
                }
                other => return Err(GroupError::Json(format!("unknown factor kind {other:?}"))),
            };
            parsed.push(factor);
        }
        GroupElement::new(dim.unwrap_or(inferred), parsed)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

fn read_matrix(v: &Value) -> Result<Vec<Vec<Scalar>>, GroupError> {
    v.as_array()
        .ok_or_else(|| GroupError::Json("matrix must be an array of rows".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| GroupError::Json("matrix rows must be arrays".into()))?
                .iter()
                .map(|s| Scalar::from_json(s).map_err(GroupError::from))
                .collect()
        })
        .collect()
}

fn check_len(expected: usize, found: usize) -> Result<(), GroupError> {
    if expected == found {
        Ok(())
    } else {
        Err(GroupError::DimensionMismatch { expected, found })
    }
}

fn into_colombeau(e: GroupError) -> ColombeauError {
    match e {
        GroupError::Colombeau(c) => c,
        other => ColombeauError::Json(other.to_string()),
    }
}

fn linear_combination(row: &[f64], offset: f64) -> Expr {
    let mut acc = Expr::Const(0.0);
    for (k, &c) in row.iter().enumerate() {
        if c != 0.0 {
            acc = Expr::add(acc, Expr::mul(Expr::Const(c), Expr::x(k + 1)));
        }
    }
    if offset != 0.0 {
        acc = Expr::add(acc, Expr::Const(offset));
    }
    acc
}

fn substitute_coords(e: &Expr, coords: &[Expr], eps: Option<f64>) -> Expr {
    e.substitute(&|v| match v {
        Var::X(k) => coords.get(k - 1).cloned(),
        Var::Eps => eps.map(Expr::Const),
    })
}

/// `f ∘ g` as a closed-form net. Generalized scalars of `g` must be closed
/// form; tabulated ones are handled by [`Composition`].
pub fn compose_net(f: &Net, g: &GroupElement) -> Result<Net, GroupError> {
    check_len(f.dim(), g.dim())?;
    let images = g.image_exprs(None)?;
    Ok(Net::new(substitute_coords(f.body(), &images, None), f.dim())?)
}

/// [`compose_net`] after a c-boundedness check of `g` on `k`. A violation is
/// an error in strict mode and a logged warning otherwise.
pub fn compose_net_checked(
    f: &Net,
    g: &GroupElement,
    k: &CompactBox,
    grid: &EpsilonGrid,
    strict: bool,
) -> Result<Net, GroupError> {
    ensure_c_bounded(g, k, grid, strict)?;
    compose_net(f, g)
}

pub(crate) fn ensure_c_bounded(
    g: &GroupElement,
    k: &CompactBox,
    grid: &EpsilonGrid,
    strict: bool,
) -> Result<(), GroupError> {
    let report = g.c_boundedness(k, grid)?;
    if !report.c_bounded {
        if strict {
            return Err(GroupError::NotCBounded { exponent: report.growth_exponent, report: Box::new(report) });
        }
        log::warn!("group action is not c-bounded on the box (extent exponent {})", report.growth_exponent);
    }
    Ok(())
}

/// `f ∘ g` evaluated ε-wise: each body has `g` frozen at that ε.
#[derive(Clone, Debug)]
pub struct Composition {
    f: Net,
    g: GroupElement,
}

impl Composition {
    pub fn new(f: Net, g: GroupElement) -> Result<Self, GroupError> {
        check_len(f.dim(), g.dim())?;
        Ok(Composition { f, g })
    }
}

impl Representative for Composition {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn body_at(&self, eps: f64) -> Result<Cow<'_, Expr>, ColombeauError> {
        let images = self.g.image_exprs(Some(eps)).map_err(into_colombeau)?;
        Ok(Cow::Owned(substitute_coords(self.f.body(), &images, None)))
    }
}

/// Max over the lattice of `|g_{θ1+θ2}(x) − g_{θ1}(g_{θ2}(x))|` (Euclidean).
pub fn group_law_check(kind: PlanarKind, i: usize, j: usize, theta1: f64, theta2: f64, k: &CompactBox) -> Result<f64, GroupError> {
    let d = k.dim();
    let g = |t: f64| GroupElement::planar(d, kind, i, j, t);
    let (sum, g1, g2) = (g(theta1 + theta2)?, g(theta1)?, g(theta2)?);
    let mut worst = 0.0f64;
    for x in k.lattice() {
        let lhs = sum.apply_point(&x, None)?;
        let rhs = g1.apply_point(&g2.apply_point(&x, None)?, None)?;
        worst = worst.max(distance(&lhs, &rhs));
    }
    Ok(worst)
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// A one-parameter family `θ ↦ g_θ` of linear or affine factors.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Flow {
    Rotation { dim: usize, i: usize, j: usize },
    Boost { dim: usize, i: usize, j: usize },
    /// `x ↦ x + θ·direction`.
    Translation { direction: Vec<f64> },
}

impl Flow {
    pub fn dim(&self) -> usize {
        match self {
            Flow::Rotation { dim, .. } | Flow::Boost { dim, .. } => *dim,
            Flow::Translation { direction } => direction.len(),
        }
    }

    pub fn element(&self, theta: &Scalar) -> Result<GroupElement, GroupError> {
        match self {
            Flow::Rotation { dim, i, j } => GroupElement::rotation(*dim, *i, *j, theta.clone()),
            Flow::Boost { dim, i, j } => GroupElement::boost(*dim, *i, *j, theta.clone()),
            Flow::Translation { direction } => {
                Ok(GroupElement::translation(direction.iter().map(|&c| theta.scaled(c)).collect()))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Flow::Rotation { i, j, .. } => format!("rotation({i},{j})"),
            Flow::Boost { i, j, .. } => format!("boost({i},{j})"),
            Flow::Translation { direction } => {
                let parts: Vec<String> = direction.iter().map(|v| v.to_string()).collect();
                format!("translation({})", parts.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cube(d: usize, a: f64, b: f64, n: usize) -> CompactBox {
        CompactBox::cube(d, a, b, n).unwrap()
    }

    #[test]
    fn apply_examples() {
        let r = GroupElement::rotation(2, 1, 2, FRAC_PI_2).unwrap();
        let y = r.apply_point(&[1.0, 0.0], None).unwrap();
        assert!(y[0].abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);

        let b = GroupElement::boost(2, 1, 2, 0.5).unwrap();
        let y = b.apply_point(&[1.0, 0.0], None).unwrap();
        assert_eq!(y, vec![0.5f64.cosh(), 0.5f64.sinh()]);
        assert!((y[0] - 1.12763).abs() < 1e-5 && (y[1] - 0.52110).abs() < 1e-5);

        let t = GroupElement::translation(vec![1.0.into(), (-2.0).into()]);
        assert_eq!(t.apply_point(&[0.0, 0.0], None).unwrap(), vec![1.0, -2.0]);
        assert!(matches!(t.apply_point(&[0.0], None), Err(GroupError::DimensionMismatch { .. })));
    }

    #[test]
    fn factors_apply_right_to_left() {
        let r = GroupElement::rotation(2, 1, 2, FRAC_PI_2).unwrap();
        let t = GroupElement::translation(vec![1.0.into(), 0.0.into()]);
        // rotate first, then translate: (1,0) -> (0,1) -> (1,1)
        let y = t.compose(&r).unwrap().apply_point(&[1.0, 0.0], None).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_angle_needs_eps() {
        let r = GroupElement::rotation(2, 1, 2, Scalar::parse("sin(1/eps)").unwrap()).unwrap();
        assert!(r.is_generalized());
        assert!(r.apply_point(&[1.0, 0.0], None).is_err());
        let y = r.apply_point(&[1.0, 0.0], Some(0.1)).unwrap();
        assert!((y[0] - 10f64.sin().cos()).abs() < 1e-15);
    }

    #[test]
    fn compose_examples() {
        let f = Net::parse("exp(-(x1^2+x2^2))", 2).unwrap();
        let g = GroupElement::rotation(2, 1, 2, Scalar::parse("2+sin(1/eps)").unwrap()).unwrap();
        let h = compose_net(&f, &g).unwrap();
        for x in cube(2, -2.0, 2.0, 7).lattice() {
            let (a, b) = (h.eval(0.01, &x).unwrap(), f.eval(0.01, &x).unwrap());
            assert!((a - b).abs() < 1e-14);
        }

        let f = Net::parse("x1", 1).unwrap();
        let h = compose_net(&f, &GroupElement::translation(vec![0.75.into()])).unwrap();
        assert_eq!(h.eval(0.1, &[2.0]).unwrap(), 2.75);

        let f = Net::parse("x1^2 - x2^2", 2).unwrap();
        let h = compose_net(&f, &GroupElement::boost(2, 1, 2, 0.7).unwrap()).unwrap();
        for x in cube(2, -2.0, 2.0, 9).lattice() {
            let (a, b) = (h.eval(0.1, &x).unwrap(), f.eval(0.1, &x).unwrap());
            assert!((a - b).abs() <= 1e-12, "{x:?}");
        }
    }

    #[test]
    fn frozen_composition_matches_symbolic() {
        let f = Net::parse("sin(x1)*x2 + x3^2", 3).unwrap();
        let g = GroupElement::rotation(3, 1, 3, Scalar::parse("sin(1/eps)").unwrap())
            .unwrap()
            .compose(&GroupElement::boost(3, 1, 2, 0.4).unwrap())
            .unwrap()
            .compose(&GroupElement::translation(vec![0.1.into(), Scalar::parse("eps").unwrap(), 0.0.into()]))
            .unwrap();
        let sym = compose_net(&f, &g).unwrap();
        let frozen = Composition::new(f, g).unwrap();
        for eps in [0.3, 0.01] {
            let body = frozen.body_at(eps).unwrap();
            for x in cube(3, -1.0, 1.0, 4).lattice() {
                let (a, b) = (sym.eval(eps, &x).unwrap(), body.eval(eps, &x).unwrap());
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn group_law_examples() {
        let k = cube(2, -2.0, 2.0, 9);
        assert_eq!(group_law_check(PlanarKind::Rotation, 1, 2, 0.0, 0.0, &k).unwrap(), 0.0);
        assert!(group_law_check(PlanarKind::Rotation, 1, 2, 0.3, 0.4, &k).unwrap() <= 1e-12);
        assert!(group_law_check(PlanarKind::Boost, 1, 2, 1.0, -1.0, &k).unwrap() <= 1e-12);
    }

    #[test]
    fn group_law_matches_matrix_product() {
        // oracle: explicit 2×2 matrix product of the blocks
        let (t1, t2) = (0.3f64, 0.4f64);
        let m = |t: f64| [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
        let (a, b) = (m(t1), m(t2));
        let prod = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let (aff, _) = GroupElement::rotation(2, 1, 2, t1 + t2).unwrap().affine_at(None).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((aff[r][c] - prod[r][c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn apply_net_and_c_boundedness() {
        let g = GroupElement::rotation(2, 1, 2, Scalar::parse("sin(1/eps)").unwrap()).unwrap();
        let v = g.apply_net(&VectorNet::identity(2)).unwrap();
        let y = v.components()[1].eval(0.2, &[1.0, 0.0]).unwrap();
        assert!((y - 5f64.sin().sin()).abs() < 1e-15);
        let grid = EpsilonGrid::default();
        assert!(g.c_boundedness(&cube(2, -1.0, 1.0, 5), &grid).unwrap().c_bounded);

        let blow = GroupElement::translation(vec![Scalar::parse("1/eps").unwrap()]);
        let f = Net::parse("x1", 1).unwrap();
        let k = cube(1, -1.0, 1.0, 5);
        assert!(matches!(compose_net_checked(&f, &blow, &k, &grid, true), Err(GroupError::NotCBounded { .. })));
        assert!(compose_net_checked(&f, &blow, &k, &grid, false).is_ok());
    }

    #[test]
    fn invalid_axes_rejected() {
        assert!(matches!(GroupElement::rotation(2, 2, 1, 0.1), Err(GroupError::InvalidAxes { .. })));
        assert!(matches!(GroupElement::rotation(2, 1, 3, 0.1), Err(GroupError::InvalidAxes { .. })));
    }

    #[test]
    fn json_round_trip() {
        let g = GroupElement::rotation(3, 1, 2, Scalar::parse("sin(1/eps)").unwrap())
            .unwrap()
            .compose(&GroupElement::boost(3, 1, 3, 0.5).unwrap())
            .unwrap()
            .compose(&GroupElement::translation(vec![1.0.into(), 0.0.into(), (-1.0).into()]))
            .unwrap();
        let v = g.to_json();
        assert_eq!(v["factors"][0]["kind"], "rotation");
        assert_eq!(v["factors"][0]["theta"], "sin(1/eps)");
        assert_eq!(GroupElement::from_json(&v, None).unwrap(), g);

        let m = serde_json::json!({"matrix": [[0, 1], [1, 0]]});
        let g = GroupElement::from_json(&m, None).unwrap();
        assert_eq!(g.apply_point(&[2.0, 3.0], None).unwrap(), vec![3.0, 2.0]);
        assert_eq!(g.to_json(), serde_json::json!({"matrix": [[0.0, 1.0], [1.0, 0.0]]}));

        let text = serde_json::json!({"factors": [{"kind": "rotation", "i": 1, "j": 2, "theta": 0.5}]});
        assert_eq!(GroupElement::from_json(&text, None).unwrap().dim(), 2);
    }

    #[test]
    fn coordinate_maps() {
        let g = GroupElement::new(2, vec![Factor::Map(vec![Expr::parse("x1 + eps*x2^2", 2).unwrap(), Expr::x(2)])]).unwrap();
        assert_eq!(g.apply_point(&[1.0, 2.0], Some(0.5)).unwrap(), vec![3.0, 2.0]);
        let f = Net::parse("x1", 2).unwrap();
        let h = compose_net(&f, &g).unwrap();
        assert_eq!(h.eval(0.5, &[1.0, 2.0]).unwrap(), 3.0);
        assert!(matches!(g.affine_at(Some(0.5)), Err(GroupError::NotAffine)));
        let body = Composition::new(f, g).unwrap().body_at(0.25).unwrap().into_owned();
        assert_eq!(body.eval(0.25, &[1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn flows_build_elements() {
        let fl = Flow::Translation { direction: vec![1.0, -1.0] };
        let g = fl.element(&Scalar::Real(2.0)).unwrap();
        assert_eq!(g.apply_point(&[0.0, 0.0], None).unwrap(), vec![2.0, -2.0]);
        let fl = Flow::Rotation { dim: 2, i: 1, j: 2 };
        let y = fl.element(&Scalar::Real(PI)).unwrap().apply_point(&[1.0, 0.0], None).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-15);
    }
}
