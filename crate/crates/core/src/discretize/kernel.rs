use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::surface::Point;

/// Double layer kernel `k(x, y) = ⟨η(y), x − y⟩ / (4π |x − y|³)`.
///
/// With this sign `∫ k(x, ·) dσ = −1` for interior points, `−1/2` at smooth
/// boundary points and `0` outside, so `(½I − K)1 = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kernel;

impl Kernel {
    #[inline]
    pub fn eval(&self, x: &Point, y: &Point, normal_y: &Point) -> f64 {
        let d = x - y;
        let r2 = d.norm_squared();
        normal_y.dot(&d) / (4.0 * PI * r2 * r2.sqrt())
    }
}

/// Signed solid angle of the triangle `x + r1, x + r2, x + r3` seen from `x`
/// (Van Oosterom–Strackee). Positive when `x` lies behind the triangle with
/// respect to its right-handed normal.
#[inline]
pub(crate) fn triangle_angle(r1: &Point, r2: &Point, r3: &Point, n1: f64, n2: f64, n3: f64) -> f64 {
    let num = r1.dot(&r2.cross(r3));
    let den = n1 * n2 * n3 + r1.dot(r2) * n3 + r1.dot(r3) * n2 + r2.dot(r3) * n1;
    2.0 * num.atan2(den)
}

/// `∫_Q ⟨η(y), y − x⟩ / |y − x|³ dσ(y)` for a planar quadrilateral with corners
/// in counterclockwise order around its normal.
///
/// For points in the plane of the quadrilateral the value is 0 outside and
/// the integral is singular on the closed quadrilateral.
pub fn solid_angle(quad: &[Point; 4], x: &Point) -> Result<f64> {
    let r: [Point; 4] = std::array::from_fn(|i| quad[i] - x);
    let n: [f64; 4] = std::array::from_fn(|i| r[i].norm());
    let scale = n.iter().cloned().fold(0.0, f64::max);
    let normal = (quad[1] - quad[0]).cross(&(quad[3] - quad[0]));
    let height = normal.normalize().dot(&r[0]);
    if height.abs() <= 1e-14 * scale {
        let inside = (0..4).all(|k| {
            let a = quad[k];
            let b = quad[(k + 1) % 4];
            normal.cross(&(b - a)).dot(&(x - a)) >= -1e-14 * scale * scale
        });
        if inside {
            return Err(Error::Singular(format!(
                "point ({}, {}, {}) lies on the panel",
                x.x, x.y, x.z
            )));
        }
        return Ok(0.0);
    }
    if height.abs() <= NEAR_PLANE * scale {
        // Fan from the foot of the perpendicular: every term of the
        // denominators is then of order `height` and nothing cancels.
        let foot = normal.normalize() * height;
        let nf = height.abs();
        return Ok((0..4)
            .map(|k| {
                let j = (k + 1) % 4;
                triangle_angle(&foot, &r[k], &r[j], nf, n[k], n[j])
            })
            .sum());
    }
    Ok(triangle_angle(&r[0], &r[1], &r[2], n[0], n[1], n[2])
        + triangle_angle(&r[0], &r[2], &r[3], n[0], n[2], n[3]))
}

/// Relative height below which [`solid_angle`] fans from the foot point.
const NEAR_PLANE: f64 = 1e-3;

/// Solid angle without the coplanarity check; callers guarantee that `x` is
/// not on the closed quadrilateral.
#[inline]
pub(crate) fn solid_angle_unchecked(quad: &[Point; 4], x: &Point) -> f64 {
    let r: [Point; 4] = std::array::from_fn(|i| quad[i] - x);
    let n: [f64; 4] = std::array::from_fn(|i| r[i].norm());
    triangle_angle(&r[0], &r[1], &r[2], n[0], n[1], n[2])
        + triangle_angle(&r[0], &r[2], &r[3], n[0], n[2], n[3])
}

/// `ln(p + R)` with `R = sqrt(p² + q2)`, stable for negative `p`.
#[inline]
fn ln_p_plus_r(p: f64, q2: f64, r: f64) -> f64 {
    if p >= 0.0 {
        (p + r).ln()
    } else {
        q2.ln() - (r - p).ln()
    }
}

/// Antiderivative `H` with `∂u ∂v ∂w² H = u / (u² + v² + w²)^{3/2}`, modulo
/// terms that cancel in the corner sums below.
#[inline]
fn perp_antiderivative(u: f64, w: f64, v: f64) -> f64 {
    let (u2, v2, w2) = (u * u, v * v, w * w);
    let r = (u2 + v2 + w2).sqrt();
    let mut q = -0.5 * v * r;
    let c = 0.5 * (w2 - u2);
    if c != 0.0 {
        q += c * ln_p_plus_r(v, u2 + w2, r);
    }
    let c = v * w;
    if c != 0.0 {
        q += c * ln_p_plus_r(w, u2 + v2, r);
    }
    if u != 0.0 && w != 0.0 {
        q += u * w * ((w / u).atan() - (v * w / (u * r)).atan());
    }
    -q
}

/// `∫∫ u / R³` over two perpendicular axis-aligned rectangles, written in
/// the difference variables: `u ∈ [u0, u1]` is the offset of the target from
/// the source plane, `v ∈ [v0, v1]` the offset of the source from the target
/// plane, and the shared axis carries the intervals `a` (target) and `b`
/// (source).
pub(crate) fn perpendicular_integral(u: [f64; 2], v: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ws = [
        (a[1] - b[0], 1.0),
        (a[0] - b[0], -1.0),
        (a[1] - b[1], -1.0),
        (a[0] - b[1], 1.0),
    ];
    let mut total = 0.0;
    for (ui, su) in [(u[1], 1.0), (u[0], -1.0)] {
        for (vi, sv) in [(v[1], 1.0), (v[0], -1.0)] {
            for &(wi, sw) in &ws {
                total += su * sv * sw * perp_antiderivative(ui, wi, vi);
            }
        }
    }
    total
}
