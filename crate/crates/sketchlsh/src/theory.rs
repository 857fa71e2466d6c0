//! Theoretical collision probabilities used as ground truth by the
//! validators: the Euclidean discretized-projection law (closed form,
//! cross-checked by adaptive quadrature of the defining integral) and the
//! sign-projection law 1 - theta/pi, plus sensitivity tuples for m-coordinate
//! families.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::families::SchemeKind;

/// Single-coordinate collision probability of the Euclidean discretized
/// projection for points at distance `r` with bucket width `w`:
///
///   p(r) = integral_0^w (1/r) f(t/r) (1 - t/w) dt,   f half-normal,
///
/// evaluated in closed form as
/// 1 - erfc(w/(r*sqrt(2))) - (2r/(sqrt(2*pi)*w)) * (1 - exp(-w^2/(2r^2))).
pub fn p_collision_e2lsh(r: f64, w: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidDistance(r));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidWidth(w));
    }
    let t = w / r;
    let p = 1.0 - erfc(t / std::f64::consts::SQRT_2)
        - (2.0 * r / ((2.0 * PI).sqrt() * w)) * (1.0 - (-0.5 * t * t).exp());
    Ok(p.clamp(0.0, 1.0))
}

/// The same probability by adaptive Simpson quadrature of the defining
/// integral (absolute tolerance 1e-10); used to cross-check the closed form.
pub fn p_collision_e2lsh_quadrature(r: f64, w: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidDistance(r));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidWidth(w));
    }
    let f = |t: f64| {
        let x = t / r;
        (1.0 / r) * (2.0 / PI).sqrt() * (-0.5 * x * x).exp() * (1.0 - t / w)
    };
    Ok(adaptive_simpson(&f, 0.0, w, 1e-10))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
    }
}

/// Collision probability of a sign projection for points at angle `theta`:
/// 1 - theta/pi.
pub fn p_collision_srp(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::InvalidAngle(theta));
    }
    Ok(1.0 - theta / PI)
}

/// Angle between two nonzero vectors, via the clamped normalized inner
/// product.
pub fn angle_between(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    if u == v {
        // Exact zero for identical inputs; the quotient below can round to
        // just under 1 and acos would report a spurious ~1e-8 angle.
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// The geometry a sensitivity statement quantifies over: a near and a far
/// threshold in the scheme's own metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Euclidean distances r1 < r2 with bucket width w.
    Euclidean { r1: f64, r2: f64, w: f64 },
    /// Angles theta1 < theta2 (radians in [0, pi]).
    Cosine { theta1: f64, theta2: f64 },
}

/// Sensitivity of an m-coordinate family: points within the near threshold
/// collide with probability at least p1 per coordinate, points beyond the
/// far threshold with probability at most p2 (p1 > p2); the full-code
/// probabilities are the m-th powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityTuple {
    pub kind: SchemeKind,
    pub near: f64,
    pub far: f64,
    pub p1: f64,
    pub p2: f64,
    pub m: usize,
}

impl SensitivityTuple {
    /// (p1^m, p2^m): the collision bounds for the concatenated code.
    pub fn family_probabilities(&self) -> (f64, f64) {
        (self.p1.powi(self.m as i32), self.p2.powi(self.m as i32))
    }
}

/// Builds the sensitivity tuple of scheme `kind` at the given geometry and
/// code length. The geometry metric must match the scheme's metric.
pub fn sensitivity(kind: SchemeKind, geometry: Geometry, m: usize) -> Result<SensitivityTuple> {
    if m == 0 {
        return Err(Error::ZeroCodeLength);
    }
    match geometry {
        Geometry::Euclidean { r1, r2, w } => {
            if kind.is_cosine() {
                return Err(Error::MetricMismatch {
                    kind: kind.name(),
                    required: "cosine",
                });
            }
            if !(r1 < r2) {
                return Err(Error::BadThresholds(r1, r2));
            }
            Ok(SensitivityTuple {
                kind,
                near: r1,
                far: r2,
                p1: p_collision_e2lsh(r1, w)?,
                p2: p_collision_e2lsh(r2, w)?,
                m,
            })
        }
        Geometry::Cosine { theta1, theta2 } => {
            if kind.is_euclidean() {
                return Err(Error::MetricMismatch {
                    kind: kind.name(),
                    required: "euclidean",
                });
            }
            if !(theta1 < theta2) {
                return Err(Error::BadThresholds(theta1, theta2));
            }
            Ok(SensitivityTuple {
                kind,
                near: theta1,
                far: theta2,
                p1: p_collision_srp(theta1)?,
                p2: p_collision_srp(theta2)?,
                m,
            })
        }
    }
}
