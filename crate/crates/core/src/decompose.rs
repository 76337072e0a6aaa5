//! Factorizations into planar factors.
//!
//! * SO(d): a fixed schedule of `d(d-1)/2` planar rotations found by Givens
//!   elimination. Column `d` is rotated onto `e_d` against pivot axis `d`
//!   using the pairs `(1,d), (2,d), …, (d-1,d)`, then column `d-1` against
//!   axis `d-1`, and so on down to `(1,2)`.
//! * O(d): the reflection `x_d ↦ -x_d` is split off first.
//! * Proper orthochronous Lorentz matrices on ℝ^{1+d} (time is coordinate 1):
//!   `Λ = R1 ∘ σ_{1,2,θ} ∘ R2` with spatial rotations `R1`, `R2`.
//! * Full Lorentz group: time inversion and the spatial reflection are split
//!   off first.
//!
//! Matrices of generalized numbers are decomposed ε-wise on a grid and the
//! angles returned as tables.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::colombeau::{ColombeauError, EpsilonGrid, Scalar, TabulatedScalar};
use crate::groups::{Factor, GroupElement, PlanarFactor, PlanarKind};

/// Input tolerance for orthogonality and the Lorentz form.
pub const FORM_TOL: f64 = 1e-8;
/// Coordinates below this magnitude are treated as already eliminated.
pub const TIE_TOL: f64 = 1e-14;
/// Reconstruction tolerance for rotation schedules.
pub const ROTATION_RECON_TOL: f64 = 1e-10;
/// Reconstruction and spatial-block tolerance for Lorentz factorizations.
pub const LORENTZ_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("matrix must be square, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not orthogonal (deviation {deviation:e})")]
    NotOrthogonal { deviation: f64 },
    #[error("determinant is -1; use the orthogonal decomposition")]
    ImproperRotation,
    #[error("matrix does not preserve the Lorentz form (deviation {deviation:e})")]
    NotLorentz { deviation: f64 },
    #[error("matrix reverses time (Λ_00 = {value}); use the full Lorentz decomposition")]
    NotOrthochronous { value: f64 },
    #[error("matrix reverses orientation; use the full Lorentz decomposition")]
    NotProper,
    #[error("residual factor is not spatial (deviation {deviation:e})")]
    NotSpatial { deviation: f64 },
    #[error("reconstruction error {error:e} exceeds {tolerance:e}")]
    Reconstruction { error: f64, tolerance: f64 },
    #[error("Lorentz matrices need size at least 2")]
    TooSmall,
    #[error("at eps={eps}: {source}")]
    AtEps {
        eps: f64,
        #[source]
        source: Box<DecomposeError>,
    },
    #[error(transparent)]
    Colombeau(#[from] ColombeauError),
}

/// `θ mod 2π` in `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = theta.rem_euclid(tau);
    if r >= tau || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Elimination pairs for dimension `d`, 1-based `(i, pivot)`.
pub fn schedule_pairs(d: usize) -> Vec<(usize, usize)> {
    (2..=d).rev().flat_map(|p| (1..p).map(move |i| (i, p))).collect()
}

/// `n×n` matrix of `R_{i,j,θ}` or `σ_{i,j,θ}` (1-based axes).
pub fn planar_matrix(n: usize, kind: PlanarKind, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    let [[a, b], [c, d]] = kind.block(theta);
    m[(i - 1, i - 1)] = a;
    m[(i - 1, j - 1)] = b;
    m[(j - 1, i - 1)] = c;
    m[(j - 1, j - 1)] = d;
    m
}

/// `diag(1, …, 1, -1)`.
pub fn reflection(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    m[(n - 1, n - 1)] = -1.0;
    m
}

/// `diag(-1, 1, …, 1)`.
pub fn time_inversion(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n, n);
    m[(0, 0)] = -1.0;
    m
}

/// `diag(1, -1, …, -1)`.
pub fn minkowski(n: usize) -> DMatrix<f64> {
    let mut m = -DMatrix::identity(n, n);
    m[(0, 0)] = 1.0;
    m
}

/// Rotations `R_{p_1,θ_1} ∘ … ∘ R_{p_m,θ_m}` over the fixed pairs of
/// [`schedule_pairs`].
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSchedule {
    dim: usize,
    angles: Vec<Scalar>,
}

impl RotationSchedule {
    pub fn identity(dim: usize) -> Self {
        RotationSchedule { dim, angles: vec![Scalar::Real(0.0); dim * dim.saturating_sub(1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        schedule_pairs(self.dim)
    }

    pub fn angles(&self) -> &[Scalar] {
        &self.angles
    }

    /// Real angles; `None` if some angle is generalized.
    pub fn real_angles(&self) -> Option<Vec<f64>> {
        self.angles.iter().map(|a| if let Scalar::Real(v) = a { Some(*v) } else { None }).collect()
    }

    pub fn to_matrix(&self, eps: Option<f64>) -> Result<DMatrix<f64>, DecomposeError> {
        let mut m = DMatrix::identity(self.dim, self.dim);
        for ((i, j), a) in self.pairs().into_iter().zip(&self.angles) {
            m *= planar_matrix(self.dim, PlanarKind::Rotation, i, j, a.value_at(eps)?);
        }
        Ok(m)
    }

    /// The schedule acting on coordinates `offset+1..offset+dim` of ℝ^n.
    pub fn factors(&self, offset: usize) -> Vec<Factor> {
        self.pairs()
            .into_iter()
            .zip(&self.angles)
            .map(|((i, j), a)| {
                Factor::Planar(PlanarFactor {
                    kind: PlanarKind::Rotation,
                    i: i + offset,
                    j: j + offset,
                    theta: a.clone(),
                })
            })
            .collect()
    }

    pub fn to_group_element(&self) -> GroupElement {
        GroupElement::new(self.dim, self.factors(0)).expect("schedule axes are in range")
    }

    pub fn to_json(&self) -> Value {
        GroupElement::new(self.dim, self.factors(0)).expect("schedule axes are in range").to_json()
    }
}

impl Serialize for RotationSchedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<usize, DecomposeError> {
    if m.nrows() != m.ncols() {
        return Err(DecomposeError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// `‖MᵀM − I‖_F`.
pub fn orthogonality_deviation(m: &DMatrix<f64>) -> f64 {
    (m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols())).norm()
}

/// `‖ΛᵀηΛ − η‖_F`.
pub fn lorentz_deviation(m: &DMatrix<f64>) -> f64 {
    let eta = minkowski(m.nrows());
    (m.transpose() * &eta * m - eta).norm()
}

fn check_orthogonal(m: &DMatrix<f64>) -> Result<f64, DecomposeError> {
    let deviation = orthogonality_deviation(m);
    if !(deviation <= FORM_TOL) {
        return Err(DecomposeError::NotOrthogonal { deviation });
    }
    Ok(deviation)
}

/// Factors `m ∈ SO(d)` into the fixed rotation schedule.
pub fn givens_decompose(m: &DMatrix<f64>) -> Result<RotationSchedule, DecomposeError> {
    let d = check_square(m)?;
    let deviation = check_orthogonal(m)?;
    if d > 0 && m.determinant() < 0.0 {
        return Err(DecomposeError::ImproperRotation);
    }
    let mut a = m.clone();
    let mut angles = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for (i, p) in schedule_pairs(d) {
        let (r, q) = (i - 1, p - 1);
        let (xi, xp) = (a[(r, q)], a[(q, q)]);
        let phi = if xi.abs() < TIE_TOL && xp > 0.0 { 0.0 } else { xi.atan2(xp) };
        if phi != 0.0 {
            let (s, c) = phi.sin_cos();
            for col in 0..d {
                let (u, v) = (a[(r, col)], a[(q, col)]);
                a[(r, col)] = c * u - s * v;
                a[(q, col)] = s * u + c * v;
            }
        }
        angles.push(Scalar::Real(normalize_angle(-phi)));
    }
    let schedule = RotationSchedule { dim: d, angles };
    let error = (schedule.to_matrix(None)? - m).norm();
    // an input that is only orthogonal to within the form tolerance cannot be
    // reproduced more closely than that by exact rotations
    let tolerance = ROTATION_RECON_TOL + 2.0 * deviation;
    if !(error <= tolerance) {
        return Err(DecomposeError::Reconstruction { error, tolerance });
    }
    Ok(schedule)
}

/// Factors `m ∈ O(d)`; returns `reflected = true` when `m = P·R` with the
/// fixed reflection `P = diag(1, …, 1, -1)`.
pub fn orthogonal_decompose(m: &DMatrix<f64>) -> Result<(RotationSchedule, bool), DecomposeError> {
    let d = check_square(m)?;
    check_orthogonal(m)?;
    if d > 0 && m.determinant() < 0.0 {
        Ok((givens_decompose(&(reflection(d) * m))?, true))
    } else {
        Ok((givens_decompose(m)?, false))
    }
}

/// `Λ = R1 ∘ σ_{1,2,θ} ∘ R2` on ℝ^{1+d}; `R1`, `R2` act on the spatial
/// coordinates `2..=d+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzFactorization {
    pub r1: RotationSchedule,
    pub theta: Scalar,
    pub r2: RotationSchedule,
}

impl LorentzFactorization {
    /// Spatial dimension `d`.
    pub fn spatial_dim(&self) -> usize {
        self.r1.dim()
    }

    pub fn to_matrix(&self, eps: Option<f64>) -> Result<DMatrix<f64>, DecomposeError> {
        let n = self.spatial_dim() + 1;
        let boost = planar_matrix(n, PlanarKind::Boost, 1, 2, self.theta.value_at(eps)?);
        Ok(embed_spatial(&self.r1.to_matrix(eps)?) * boost * embed_spatial(&self.r2.to_matrix(eps)?))
    }

    pub fn to_group_element(&self) -> GroupElement {
        let mut factors = self.r1.factors(1);
        factors.push(Factor::Planar(PlanarFactor {
            kind: PlanarKind::Boost,
            i: 1,
            j: 2,
            theta: self.theta.clone(),
        }));
        factors.extend(self.r2.factors(1));
        GroupElement::new(self.spatial_dim() + 1, factors).expect("factor axes are in range")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "r1": self.r1.to_json(),
            "boost": {"kind": "boost", "i": 1, "j": 2, "theta": self.theta},
            "r2": self.r2.to_json(),
            "factors": self.to_group_element().to_json()["factors"],
        })
    }
}

impl Serialize for LorentzFactorization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// `diag(1, s)`.
fn embed_spatial(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows() + 1;
    let mut m = DMatrix::identity(n, n);
    m.view_mut((1, 1), (n - 1, n - 1)).copy_from(s);
    m
}

fn check_lorentz(m: &DMatrix<f64>) -> Result<usize, DecomposeError> {
    let n = check_square(m)?;
    if n < 2 {
        return Err(DecomposeError::TooSmall);
    }
    let deviation = lorentz_deviation(m);
    // relative to the entry scale, since boosts have entries of size cosh θ
    let scale = m.norm().powi(2).max(1.0);
    if !(deviation <= FORM_TOL * scale) {
        return Err(DecomposeError::NotLorentz { deviation });
    }
    Ok(n)
}

/// Rotation of ℝ^d taking `e_1` to the unit vector `u`, built from the
/// rotations `(1,m)`, `m = d..2`, that bring `u` onto `e_1`.
fn alignment(u: &[f64]) -> DMatrix<f64> {
    let d = u.len();
    let mut g = DMatrix::identity(d, d);
    let mut w = u.to_vec();
    for m in (2..=d).rev() {
        let (a, b) = (w[0], w[m - 1]);
        let phi = if b.abs() < TIE_TOL && a > 0.0 { 0.0 } else { -b.atan2(a) };
        if phi == 0.0 {
            continue;
        }
        let (s, c) = phi.sin_cos();
        w[0] = c * a - s * b;
        w[m - 1] = s * a + c * b;
        g = planar_matrix(d, PlanarKind::Rotation, 1, m, phi) * g;
    }
    g.transpose()
}

/// Factors a proper orthochronous Lorentz matrix of size `1+d`.
///
/// For `d = 1` there is no room for spatial rotations; the boost angle is
/// then signed, `θ = asinh(Λ_21)`.
pub fn lorentz_decompose(m: &DMatrix<f64>) -> Result<LorentzFactorization, DecomposeError> {
    let n = check_lorentz(m)?;
    let d = n - 1;
    let head = m[(0, 0)];
    if head < 1.0 - 1e-10 {
        return Err(DecomposeError::NotOrthochronous { value: head });
    }
    if m.determinant() < 0.0 {
        return Err(DecomposeError::NotProper);
    }
    let v: Vec<f64> = (1..n).map(|r| m[(r, 0)]).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let theta = if d == 1 { v[0].asinh() } else { head.max(1.0).acosh() };
    let r1 = if d == 1 || norm < TIE_TOL {
        RotationSchedule::identity(d)
    } else {
        let u: Vec<f64> = v.iter().map(|x| x / norm).collect();
        givens_decompose(&alignment(&u))?
    };
    let r1_full = embed_spatial(&r1.to_matrix(None)?);
    let residual = planar_matrix(n, PlanarKind::Boost, 1, 2, -theta) * r1_full.transpose() * m;
    let mut deviation = (residual[(0, 0)] - 1.0).abs();
    for k in 1..n {
        deviation = deviation.max(residual[(0, k)].abs()).max(residual[(k, 0)].abs());
    }
    let scale = m.norm().max(1.0);
    if !(deviation <= LORENTZ_TOL * scale) {
        return Err(DecomposeError::NotSpatial { deviation });
    }
    let r2 = givens_decompose(&residual.view((1, 1), (d, d)).into_owned())?;
    let f = LorentzFactorization { r1, theta: Scalar::Real(theta), r2 };
    let error = (f.to_matrix(None)? - m).norm();
    let tolerance = LORENTZ_TOL * scale;
    if !(error <= tolerance) {
        return Err(DecomposeError::Reconstruction { error, tolerance });
    }
    Ok(f)
}

/// `Λ = T^a ∘ P^b ∘ core` with `T = diag(-1, 1, …)`, `P = diag(…, 1, -1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullLorentzFactorization {
    pub core: LorentzFactorization,
    pub time_inverted: bool,
    pub orientation_inverted: bool,
}

impl FullLorentzFactorization {
    pub fn to_matrix(&self, eps: Option<f64>) -> Result<DMatrix<f64>, DecomposeError> {
        let n = self.core.spatial_dim() + 1;
        let mut m = self.core.to_matrix(eps)?;
        if self.orientation_inverted {
            m = reflection(n) * m;
        }
        if self.time_inverted {
            m = time_inversion(n) * m;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.core.to_json();
        v["time_inverted"] = json!(self.time_inverted);
        v["orientation_inverted"] = json!(self.orientation_inverted);
        v
    }
}

impl Serialize for FullLorentzFactorization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Factors any Lorentz matrix by first splitting off time inversion and the
/// fixed spatial reflection.
pub fn full_lorentz_decompose(m: &DMatrix<f64>) -> Result<FullLorentzFactorization, DecomposeError> {
    let n = check_lorentz(m)?;
    let mut core = m.clone();
    let time_inverted = core[(0, 0)] < 0.0;
    if time_inverted {
        core = time_inversion(n) * core;
    }
    let orientation_inverted = core.determinant() < 0.0;
    if orientation_inverted {
        core = reflection(n) * core;
    }
    Ok(FullLorentzFactorization { core: lorentz_decompose(&core)?, time_inverted, orientation_inverted })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Rotation,
    Lorentz,
}

/// ε-wise factorization of a matrix of generalized numbers; every angle is
/// a [`TabulatedScalar`] over the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum NetFactorization {
    Rotation(RotationSchedule),
    Lorentz(LorentzFactorization),
}

impl NetFactorization {
    pub fn to_group_element(&self) -> GroupElement {
        match self {
            NetFactorization::Rotation(s) => s.to_group_element(),
            NetFactorization::Lorentz(l) => l.to_group_element(),
        }
    }

    pub fn to_matrix(&self, eps: f64) -> Result<DMatrix<f64>, DecomposeError> {
        match self {
            NetFactorization::Rotation(s) => s.to_matrix(Some(eps)),
            NetFactorization::Lorentz(l) => l.to_matrix(Some(eps)),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            NetFactorization::Rotation(s) => json!({"kind": "rotation", "schedule": s.to_json()}),
            NetFactorization::Lorentz(l) => json!({"kind": "lorentz", "factorization": l.to_json()}),
        }
    }
}

/// Freezes `m` at a grid value.
pub fn freeze(m: &[Vec<Scalar>], eps: f64) -> Result<DMatrix<f64>, DecomposeError> {
    let n = m.len();
    let mut out = DMatrix::zeros(n, m.first().map_or(0, Vec::len));
    for (r, row) in m.iter().enumerate() {
        if row.len() != out.ncols() {
            return Err(DecomposeError::NotSquare { rows: n, cols: row.len() });
        }
        for (c, s) in row.iter().enumerate() {
            out[(r, c)] = s.value_at(Some(eps))?;
        }
    }
    Ok(out)
}

/// Decomposes `m` at every grid ε. The first failing ε (coarse to fine)
/// aborts the whole decomposition.
pub fn decompose_net_matrix(
    m: &[Vec<Scalar>],
    grid: &EpsilonGrid,
    kind: MatrixKind,
) -> Result<NetFactorization, DecomposeError> {
    let at = |eps: f64| -> Result<(Vec<f64>, f64, Vec<f64>), DecomposeError> {
        let frozen = freeze(m, eps)?;
        let reals = |s: &RotationSchedule| s.real_angles().expect("real input gives real angles");
        match kind {
            MatrixKind::Rotation => Ok((reals(&givens_decompose(&frozen)?), 0.0, vec![])),
            MatrixKind::Lorentz => {
                let f = lorentz_decompose(&frozen)?;
                let theta = f.theta.value_at(None)?;
                Ok((reals(&f.r1), theta, reals(&f.r2)))
            }
        }
    };
    let rows: Vec<Result<_, DecomposeError>> = grid
        .values()
        .par_iter()
        .map(|&eps| at(eps).map_err(|e| DecomposeError::AtEps { eps, source: Box::new(e) }))
        .collect();
    let rows: Vec<(Vec<f64>, f64, Vec<f64>)> = rows.into_iter().collect::<Result<_, _>>()?;
    let eps = grid.values();
    let table = |pick: &dyn Fn(&(Vec<f64>, f64, Vec<f64>)) -> f64| {
        Scalar::Table(TabulatedScalar::new(eps.iter().zip(&rows).map(|(&e, r)| (e, pick(r))).collect()))
    };
    let schedule = |dim: usize, part: usize| RotationSchedule {
        dim,
        angles: (0..dim * dim.saturating_sub(1) / 2)
            .map(|k| table(&|r| if part == 0 { r.0[k] } else { r.2[k] }))
            .collect(),
    };
    match kind {
        MatrixKind::Rotation => Ok(NetFactorization::Rotation(schedule(m.len(), 0))),
        MatrixKind::Lorentz => {
            let d = m.len() - 1;
            Ok(NetFactorization::Lorentz(LorentzFactorization {
                r1: schedule(d, 0),
                theta: table(&|r| r.1),
                r2: schedule(d, 2),
            }))
        }
    }
}
