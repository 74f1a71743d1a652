//! Poincaré-ball operations recorded on a [`Tape`].
//!
//! These mirror [`crate::manifold`] but are composed from elementary tape
//! primitives so their adjoints come for free. Where the closed forms have a
//! removable singularity at a zero vector, the first-order expansion is
//! recorded instead; it has the same value and the same derivative there.

use super::tape::{Tape, Var};
use crate::manifold::{MAX_NORM, ZERO_NORM};

fn norm_value(t: &Tape, v: Var) -> f64 {
    t.value(v).iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm(t: &mut Tape, v: Var) -> Var {
    let sq = t.dot(v, v);
    t.sqrt(sq)
}

/// Rescales `v` onto the `1 − ε` shell when it lies outside it.
pub fn clip(t: &mut Tape, v: Var) -> Var {
    if norm_value(t, v) <= MAX_NORM {
        return v;
    }
    let n = norm(t, v);
    let inv = t.recip(n);
    let s = t.mul_const(inv, MAX_NORM);
    t.scale(v, s)
}

/// Möbius addition `a ⊕ b`.
pub fn mobius_add(t: &mut Tape, a: Var, b: Var) -> Var {
    let ab = t.dot(a, b);
    let aa = t.dot(a, a);
    let bb = t.dot(b, b);
    let two_ab = t.mul_const(ab, 2.0);
    // 1 + 2<a,b> + |b|^2
    let ca = t.add(two_ab, bb);
    let ca = t.add_const(ca, 1.0);
    // 1 - |a|^2
    let cb = t.neg(aa);
    let cb = t.add_const(cb, 1.0);
    // 1 + 2<a,b> + |a|^2 |b|^2
    let aabb = t.mul(aa, bb);
    let den = t.add(two_ab, aabb);
    let den = t.add_const(den, 1.0);
    let inv = t.recip(den);
    let left = t.scale(a, ca);
    let right = t.scale(b, cb);
    let num = t.add(left, right);
    let out = t.scale(num, inv);
    clip(t, out)
}

/// Möbius scalar multiplication `α ⊗ b` with a scalar node `alpha`.
pub fn scalar_mul(t: &mut Tape, alpha: Var, b: Var) -> Var {
    if norm_value(t, b) < ZERO_NORM {
        return t.scale(b, alpha);
    }
    let n = norm(t, b);
    let at = t.artanh(n);
    let arg = t.mul(alpha, at);
    let th = t.tanh(arg);
    let inv = t.recip(n);
    let s = t.mul(th, inv);
    let out = t.scale(b, s);
    clip(t, out)
}

/// Möbius matrix-vector product with a row-major `rows × cols` matrix node.
pub fn matvec(t: &mut Tape, m: Var, rows: usize, cols: usize, a: Var) -> Var {
    let ma = t.matvec(m, rows, cols, a);
    let an_val = norm_value(t, a);
    if an_val < ZERO_NORM {
        return ma;
    }
    let an = norm(t, a);
    let at = t.artanh(an);
    let inv_an = t.recip(an);
    let ratio = t.mul(at, inv_an);
    if norm_value(t, ma) < ZERO_NORM {
        return t.scale(ma, ratio);
    }
    let man = norm(t, ma);
    let arg = t.mul(man, ratio);
    let th = t.tanh(arg);
    let inv_man = t.recip(man);
    let s = t.mul(th, inv_man);
    let out = t.scale(ma, s);
    clip(t, out)
}

/// `tanh(λ_x ‖v‖ / 2) · v / ‖v‖`, the gyro-step taken by the exponential map.
fn exp_step(t: &mut Tape, half_lambda: Var, v: Var) -> Var {
    if norm_value(t, v) < ZERO_NORM {
        return t.scale(v, half_lambda);
    }
    let n = norm(t, v);
    let arg = t.mul(half_lambda, n);
    let th = t.tanh(arg);
    let inv = t.recip(n);
    let s = t.mul(th, inv);
    let out = t.scale(v, s);
    clip(t, out)
}

/// `λ_x / 2 = 1 / (1 − ‖x‖²)`.
fn half_conformal(t: &mut Tape, x: Var) -> Var {
    let xx = t.dot(x, x);
    let den = t.neg(xx);
    let den = t.add_const(den, 1.0);
    t.recip(den)
}

/// Exponential map `exp_x(v)`.
pub fn exp_map(t: &mut Tape, x: Var, v: Var) -> Var {
    let hl = half_conformal(t, x);
    let step = exp_step(t, hl, v);
    mobius_add(t, x, step)
}

/// Logarithmic map `log_x(a)`.
pub fn log_map(t: &mut Tape, x: Var, a: Var) -> Var {
    let neg_x = t.neg(x);
    let u = mobius_add(t, neg_x, a);
    // 2 / λ_x = 1 − ‖x‖²
    let xx = t.dot(x, x);
    let two_over_lambda = t.neg(xx);
    let two_over_lambda = t.add_const(two_over_lambda, 1.0);
    if norm_value(t, u) < ZERO_NORM {
        return t.scale(u, two_over_lambda);
    }
    let n = norm(t, u);
    let at = t.artanh(n);
    let inv = t.recip(n);
    let s = t.mul(at, inv);
    let s = t.mul(s, two_over_lambda);
    t.scale(u, s)
}

/// `exp_0(v) = tanh(‖v‖) v / ‖v‖`.
pub fn exp0(t: &mut Tape, v: Var) -> Var {
    let one = t.scalar_const(1.0);
    exp_step(t, one, v)
}

/// `log_0(a) = artanh(‖a‖) a / ‖a‖`.
pub fn log0(t: &mut Tape, a: Var) -> Var {
    if norm_value(t, a) < ZERO_NORM {
        return a;
    }
    let n = norm(t, a);
    let at = t.artanh(n);
    let inv = t.recip(n);
    let s = t.mul(at, inv);
    t.scale(a, s)
}

/// Geodesic distance.
pub fn distance(t: &mut Tape, p: Var, q: Var) -> Var {
    let diff = t.sub(p, q);
    let dd = t.dot(diff, diff);
    let pp = t.dot(p, p);
    let qq = t.dot(q, q);
    let one_p = t.neg(pp);
    let one_p = t.add_const(one_p, 1.0);
    let one_q = t.neg(qq);
    let one_q = t.add_const(one_q, 1.0);
    let den = t.mul(one_p, one_q);
    let inv = t.recip(den);
    let frac = t.mul(dd, inv);
    let u = t.mul_const(frac, 2.0);
    t.arcosh1p(u)
}
