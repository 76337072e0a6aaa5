//! Seeded random inputs: rotations, Lorentz matrices and expressions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::decompose::planar_matrix;
use crate::expr::{Expr, Func};
use crate::groups::PlanarKind;

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed element of `SO(d)`.
pub fn random_rotation(rng: &mut CorpusRng, d: usize) -> DMatrix<f64> {
    if d == 0 {
        return DMatrix::identity(0, 0);
    }
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..d {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Product of planar rotations over every axis pair, in random order, with
/// angles uniform in `[-π, π]`.
pub fn random_planar_product(rng: &mut CorpusRng, d: usize) -> DMatrix<f64> {
    let mut pairs: Vec<(usize, usize)> = (1..=d).flat_map(|i| (i + 1..=d).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    pairs.into_iter().fold(DMatrix::identity(d, d), |m, (i, j)| {
        m * planar_matrix(d, PlanarKind::Rotation, i, j, rng.random_range(-PI..=PI))
    })
}

/// `diag(1, R1)·σ_{1,2,θ}·diag(1, R2)` on `ℝ^{d+1}` with Haar spatial
/// rotations and `θ` uniform in `[theta_lo, theta_hi]`. Returns the matrix
/// and `θ`.
pub fn random_lorentz(rng: &mut CorpusRng, d: usize, theta_lo: f64, theta_hi: f64) -> (DMatrix<f64>, f64) {
    let theta = rng.random_range(theta_lo..=theta_hi);
    let boost = planar_matrix(d + 1, PlanarKind::Boost, 1, 2, theta);
    if d == 1 {
        return (boost, theta);
    }
    let embed = |rng: &mut CorpusRng| {
        let r = random_rotation(rng, d);
        let mut m = DMatrix::identity(d + 1, d + 1);
        m.view_mut((1, 1), (d, d)).copy_from(&r);
        m
    };
    let (r1, r2) = (embed(rng), embed(rng));
    (r1 * boost * r2, theta)
}

/// Random expression in `x1..xd` (and occasionally `eps`) that is smooth
/// and finite everywhere: quotients, roots and logarithms are guarded and
/// exponentials see a bounded argument.
pub fn random_expr(rng: &mut CorpusRng, d: usize, depth: u32) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return match rng.random_range(0..8) {
            0 => Expr::eps(),
            1 | 2 => Expr::constant(f64::from(rng.random_range(-8i32..=8)) / 4.0),
            _ => Expr::x(rng.random_range(1..=d.max(1))),
        };
    }
    let sub = |rng: &mut CorpusRng| random_expr(rng, d, depth - 1);
    match rng.random_range(0..10) {
        0 => Expr::add(sub(rng), sub(rng)),
        1 => Expr::sub(sub(rng), sub(rng)),
        2 | 3 => Expr::mul(sub(rng), sub(rng)),
        4 => {
            let den = Expr::add(Expr::constant(1.5), Expr::powi(sub(rng), 2));
            Expr::div(sub(rng), den)
        }
        5 => Expr::powi(sub(rng), rng.random_range(2..=3)),
        6 => {
            let f = [Func::Sin, Func::Cos, Func::Tanh][rng.random_range(0..3)];
            Expr::func(f, sub(rng))
        }
        7 => {
            let f = [Func::Exp, Func::Cosh, Func::Sinh][rng.random_range(0..3)];
            let arg = Expr::mul(Expr::constant(2.0), Expr::func(Func::Tanh, sub(rng)));
            Expr::func(f, arg)
        }
        _ => {
            let f = [Func::Sqrt, Func::Ln][rng.random_range(0..2)];
            let arg = Expr::add(Expr::constant(1.0), Expr::powi(sub(rng), 2));
            Expr::func(f, arg)
        }
    }
}

/// Uniform point in `[lo, hi]^d`.
pub fn random_point(rng: &mut CorpusRng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..=hi)).collect()
}
