//! Poincaré ball (curvature `c = 1`) primitives.
//!
//! Every function returning a [`BallPoint`] re-clips its result to the shell
//! `‖x‖ ≤ 1 − BALL_EPS`, so `artanh` and the conformal factor stay finite no
//! matter how close to the boundary the inputs sit. Removable singularities
//! (zero vectors) resolve to their continuity limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the clipping shell below the unit sphere.
pub const BALL_EPS: f64 = 1e-5;

/// Largest admissible Euclidean norm of a ball point.
pub const MAX_NORM: f64 = 1.0 - BALL_EPS;

/// Norms below this are treated as the zero vector.
pub(crate) const ZERO_NORM: f64 = 1e-15;

/// A point strictly inside the Poincaré ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BallPoint(Vec<f64>);

/// A vector in the tangent space at some base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl BallPoint {
    /// Validates and clips `coords` onto the ball.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        project_to_ball(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Clips without the finiteness check. Callers guarantee finite input.
    pub(crate) fn clipped(mut coords: Vec<f64>) -> Self {
        clip_in_place(&mut coords);
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Gyrovector inverse `−x`.
    pub fn negate(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    /// Conformal factor `λ_x = 2 / (1 − ‖x‖²)`.
    pub fn conformal_factor(&self) -> f64 {
        2.0 / (1.0 - norm_sq(&self.0))
    }
}

impl TryFrom<Vec<f64>> for BallPoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        BallPoint::new(coords)
    }
}

impl From<BallPoint> for Vec<f64> {
    fn from(p: BallPoint) -> Self {
        p.0
    }
}

impl TangentVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().all(|v| v.is_finite()) {
            Ok(Self(coords))
        } else {
            Err(Error::NonFinite("tangent vector"))
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

fn clip_in_place(v: &mut [f64]) {
    let n = norm(v);
    if n > MAX_NORM {
        let s = MAX_NORM / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Rescales `v` onto the `1 − BALL_EPS` shell when it lies outside.
pub fn project_to_ball(mut v: Vec<f64>) -> Result<BallPoint> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("ball point"));
    }
    clip_in_place(&mut v);
    Ok(BallPoint(v))
}

/// Möbius addition `a ⊕ b`.
pub fn mobius_add(a: &BallPoint, b: &BallPoint) -> BallPoint {
    BallPoint::clipped(mobius_add_raw(&a.0, &b.0))
}

pub(crate) fn mobius_add_raw(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "mobius_add dimension mismatch");
    let ab = dot(a, b);
    let aa = norm_sq(a);
    let bb = norm_sq(b);
    let ca = 1.0 + 2.0 * ab + bb;
    let cb = 1.0 - aa;
    let den = 1.0 + 2.0 * ab + aa * bb;
    a.iter()
        .zip(b)
        .map(|(x, y)| (ca * x + cb * y) / den)
        .collect()
}

/// Möbius scalar multiplication `α ⊗ b`.
pub fn mobius_scalar_mul(alpha: f64, b: &BallPoint) -> BallPoint {
    let n = b.norm();
    if n < ZERO_NORM {
        return BallPoint::origin(b.dim());
    }
    let s = (alpha * n.atanh()).tanh() / n;
    BallPoint::clipped(scaled(&b.0, s))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

/// Möbius matrix-vector product `M ⊗ a`, returning a point of dimension `M.rows`.
pub fn mobius_matvec(m: &Matrix, a: &BallPoint) -> BallPoint {
    let an = a.norm();
    if an < ZERO_NORM {
        return BallPoint::origin(m.rows);
    }
    let ma = m.matvec(&a.0);
    let man = norm(&ma);
    if man < ZERO_NORM {
        return BallPoint::origin(m.rows);
    }
    let s = ((man / an) * an.atanh()).tanh() / man;
    BallPoint::clipped(scaled(&ma, s))
}

/// Exponential map `exp_x(v)`.
pub fn exp_map(x: &BallPoint, v: &TangentVector) -> BallPoint {
    assert_eq!(x.dim(), v.0.len(), "exp_map dimension mismatch");
    let vn = v.norm();
    if vn < ZERO_NORM {
        return x.clone();
    }
    let s = (x.conformal_factor() * vn / 2.0).tanh() / vn;
    let step = BallPoint::clipped(scaled(&v.0, s));
    mobius_add(x, &step)
}

/// Logarithmic map `log_x(a)`.
pub fn log_map(x: &BallPoint, a: &BallPoint) -> TangentVector {
    let u = mobius_add_raw(&x.negate().0, &a.0);
    let un = norm(&u).min(MAX_NORM);
    if un < ZERO_NORM {
        return TangentVector::zeros(x.dim());
    }
    let s = (2.0 / x.conformal_factor()) * un.atanh() / un;
    TangentVector(scaled(&u, s))
}

/// Geodesic distance on the ball.
pub fn distance(p: &BallPoint, q: &BallPoint) -> f64 {
    assert_eq!(p.dim(), q.dim(), "distance dimension mismatch");
    let diff: f64 = p.0.iter().zip(&q.0).map(|(a, b)| (a - b) * (a - b)).sum();
    let den = (1.0 - norm_sq(&p.0)) * (1.0 - norm_sq(&q.0));
    arcosh1p(2.0 * diff / den)
}

/// `arcosh(1 + u)`, accurate for small `u`; negative `u` is treated as 0.
pub fn arcosh1p(u: f64) -> f64 {
    let u = u.max(0.0);
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}
