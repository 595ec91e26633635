use super::entries::{box_distance, cell_para, Para};
use super::quadrature::{gauss_legendre, QuadConfig};
use crate::basis::{Cell, Kind, WaveletIndex};
use crate::error::{Error, Result};
use crate::surface::{Point, Surface};

/// Right-hand sides of the experiments, plus the constant used as an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightHandSide {
    Constant(f64),
    /// `|x − ν|^{−α}`.
    PointSingularity { alpha: f64, nu: Point },
    /// `value` where `|x − center|² ≤ radius2`, zero elsewhere.
    Cartoon { center: Point, radius2: f64, value: f64 },
}

impl RightHandSide {
    /// Point singularity at the reentrant corner of the Fichera surface.
    pub fn fichera_corner(alpha: f64) -> Self {
        Self::PointSingularity {
            alpha,
            nu: Point::new(0.5, 0.5, 0.5),
        }
    }

    /// Indicator of the disc `|x − (0,0,1)|² ≤ 1/2` on the top face of the cube.
    pub fn cube_cartoon() -> Self {
        Self::Cartoon {
            center: Point::new(0.0, 0.0, 1.0),
            radius2: 0.5,
            value: 1.0,
        }
    }

    pub fn validate(&self, surface: &Surface) -> Result<()> {
        match *self {
            Self::Constant(c) if !c.is_finite() => Err(Error::InvalidArgument("constant must be finite".into())),
            Self::Constant(_) => Ok(()),
            Self::PointSingularity { alpha, nu } => {
                if !(0.5..1.0).contains(&alpha) {
                    return Err(Error::InvalidArgument(format!("exponent {alpha} outside [1/2, 1)")));
                }
                if !surface.vertices().iter().any(|v| (v - nu).norm() < 1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "singular point ({}, {}, {}) is not a vertex of the surface",
                        nu.x, nu.y, nu.z
                    )));
                }
                Ok(())
            }
            Self::Cartoon { radius2, value, .. } => {
                if !(radius2 > 0.0) {
                    return Err(Error::InvalidArgument("cartoon radius must be positive".into()));
                }
                if value != 0.0 && value != 1.0 {
                    return Err(Error::InvalidArgument("cartoon value must be 0 or 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Point of the surface where the data is singular, if any.
    pub fn singular_point(&self) -> Option<Point> {
        match self {
            Self::PointSingularity { nu, .. } => Some(*nu),
            _ => None,
        }
    }
}

/// Pointwise value of the right-hand side.
pub fn rhs_eval(g: &RightHandSide, x: &Point) -> Result<f64> {
    match *g {
        RightHandSide::Constant(c) => Ok(c),
        RightHandSide::PointSingularity { alpha, nu } => {
            let r = (x - nu).norm();
            if r == 0.0 {
                return Err(Error::Singular("evaluation at the singular point".into()));
            }
            Ok(r.powf(-alpha))
        }
        RightHandSide::Cartoon { center, radius2, value } => {
            Ok(if (x - center).norm_squared() <= radius2 { value } else { 0.0 })
        }
    }
}

/// `∫_Q g dσ` over a cell.
pub fn cell_integral(surface: &Surface, g: &RightHandSide, cell: &Cell, cfg: &QuadConfig) -> f64 {
    let para = cell_para(surface, cell);
    para_integral(&para, g, cfg)
}

/// Quadrant integrals of a cell followed by the four Haar combinations
/// `Σ s_kind(q) ∫_{Q_q} g`, without amplitudes.
pub fn cell_moments(surface: &Surface, g: &RightHandSide, cell: &Cell, cfg: &QuadConfig) -> ([f64; 4], [f64; 4]) {
    let para = cell_para(surface, cell);
    let q: [f64; 4] = std::array::from_fn(|i| para_integral(&para.quadrant(i), g, cfg));
    (q, haar_moments(&q))
}

pub(crate) fn haar_moments(q: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for kind in Kind::ALL {
        let s = kind.signs();
        out[kind.slot()] = s[0] * q[0] + s[1] * q[1] + s[2] * q[2] + s[3] * q[3];
    }
    out
}

/// `⟨g, ψ_λ⟩`.
pub fn rhs_coefficient(surface: &Surface, g: &RightHandSide, idx: &WaveletIndex, cfg: &QuadConfig) -> Result<f64> {
    let patch = surface.patch(idx.patch as usize)?;
    let (_, m) = cell_moments(surface, g, &idx.cell(), cfg);
    Ok(idx.amplitude(patch.jacobian) * m[idx.kind.slot()])
}

pub(crate) fn para_integral(p: &Para, g: &RightHandSide, cfg: &QuadConfig) -> f64 {
    match *g {
        RightHandSide::Constant(c) => c * p.area(),
        RightHandSide::PointSingularity { alpha, nu } => point_integral(p, alpha, &nu, cfg, 0),
        RightHandSide::Cartoon { center, radius2, value } => {
            if value == 0.0 {
                0.0
            } else {
                value * disc_area(p, &center, radius2, cfg)
            }
        }
    }
}

/// `∫_P g² dσ`.
pub(crate) fn para_square_integral(p: &Para, g: &RightHandSide, cfg: &QuadConfig) -> f64 {
    match *g {
        RightHandSide::Constant(c) => c * c * p.area(),
        RightHandSide::PointSingularity { alpha, nu } => point_integral(p, 2.0 * alpha, &nu, cfg, 0),
        RightHandSide::Cartoon { value, .. } => value * para_integral(p, g, cfg),
    }
}

fn gauss_power(p: &Para, alpha: f64, nu: &Point, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let mut acc = 0.0;
    for (s, ws) in rule.nodes.iter().zip(&rule.weights) {
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            let x = p.o + p.e1 * *s + p.e2 * *t;
            acc += ws * wt * (x - nu).norm().powf(-alpha);
        }
    }
    acc * p.area()
}

/// `∫ |x − ν|^{−α}` over the triangle `(ν, a, b)` with `ν` a corner, using
/// polar coordinates around `ν`; the radial part is integrated exactly.
fn fan_triangle(nu: &Point, a: &Point, b: &Point, alpha: f64) -> f64 {
    let area2 = (a - nu).cross(&(b - nu)).norm();
    if area2 == 0.0 {
        return 0.0;
    }
    let rule = gauss_legendre(32);
    let mut acc = 0.0;
    // Split the angular variable so that the integrand stays smooth.
    const PIECES: usize = 4;
    for k in 0..PIECES {
        let lo = k as f64 / PIECES as f64;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = lo + x / PIECES as f64;
            let d = (a - nu) + (b - a) * v;
            acc += w / PIECES as f64 * d.norm().powf(-alpha);
        }
    }
    area2 / (2.0 - alpha) * acc
}

fn point_integral(p: &Para, alpha: f64, nu: &Point, cfg: &QuadConfig, depth: usize) -> f64 {
    let normal = p.e1.cross(&p.e2);
    let area = normal.norm();
    let normal = normal / area;
    let rel = nu - p.o;
    let height = normal.dot(&rel);
    let diam = p.diam();
    if height.abs() <= 1e-14 * diam {
        // Local coordinates of ν in the parallelogram.
        let g11 = p.e1.dot(&p.e1);
        let g12 = p.e1.dot(&p.e2);
        let g22 = p.e2.dot(&p.e2);
        let det = g11 * g22 - g12 * g12;
        let r1 = rel.dot(&p.e1);
        let r2 = rel.dot(&p.e2);
        let s = (g22 * r1 - g12 * r2) / det;
        let t = (g11 * r2 - g12 * r1) / det;
        let eps = 1e-14;
        if (-eps..=1.0 + eps).contains(&s) && (-eps..=1.0 + eps).contains(&t) {
            let c = p.corners();
            return (0..4)
                .map(|k| fan_triangle(nu, &c[k], &c[(k + 1) % 4], alpha))
                .sum();
        }
    }
    let d = box_distance(p, &Para { o: *nu, e1: Point::zeros(), e2: Point::zeros() });
    if diam <= cfg.admissibility * d {
        return gauss_power(p, alpha, nu, cfg.order_for_ratio(d / diam).max(2));
    }
    if depth >= cfg.rhs_depth {
        return gauss_power(p, alpha, nu, cfg.outer_order.max(8));
    }
    (0..4)
        .map(|q| point_integral(&p.quadrant(q), alpha, nu, cfg, depth + 1))
        .sum()
}

/// Area of `{x ∈ P : |x − c|² ≤ r²}`.
fn disc_area(p: &Para, center: &Point, radius2: f64, cfg: &QuadConfig) -> f64 {
    let corners = p.corners();
    let r = radius2.sqrt();
    if corners.iter().all(|c| (c - center).norm_squared() <= radius2) {
        return p.area();
    }
    let normal = p.e1.cross(&p.e2).normalize();
    let height = normal.dot(&(center - p.o));
    let rho2 = radius2 - height * height;
    if rho2 <= 0.0 || box_distance(p, &Para { o: *center, e1: Point::zeros(), e2: Point::zeros() }) >= r {
        return 0.0;
    }
    let rho = rho2.sqrt();
    if p.e1.dot(&p.e2).abs() > 1e-14 * p.e1.norm() * p.e2.norm() {
        return disc_area_quadtree(p, center, radius2, cfg.rhs_depth.min(12));
    }
    // Orthonormal frame of the rectangle.
    let l1 = p.e1.norm();
    let l2 = p.e2.norm();
    let u1 = p.e1 / l1;
    let u2 = p.e2 / l2;
    let rel = center - p.o;
    let cx = rel.dot(&u1);
    let cy = rel.dot(&u2);
    let f = |x: f64, y: f64| quarter_area(x - cx, y - cy, rho);
    (f(l1, l2) - f(0.0, l2) - f(l1, 0.0) + f(0.0, 0.0)).clamp(0.0, p.area())
}

/// Area of the disc of radius `rho` around the origin intersected with
/// `(−∞, x] × (−∞, y]`.
fn quarter_area(x: f64, y: f64, rho: f64) -> f64 {
    let xc = x.clamp(-rho, rho);
    if y >= rho {
        return 2.0 * (prim(xc, rho) - prim(-rho, rho));
    }
    if y <= -rho {
        return 0.0;
    }
    let xb = (rho * rho - y * y).sqrt();
    let mut total = 0.0;
    // Pieces of [−ρ, xc]: outer left, middle, outer right.
    let seg = |a: f64, b: f64| -> (f64, f64) {
        let lo = a.max(-rho);
        let hi = b.min(xc);
        (lo, hi)
    };
    let (a, b) = seg(-rho, -xb);
    if b > a {
        total += if y >= 0.0 { 2.0 * (prim(b, rho) - prim(a, rho)) } else { 0.0 };
    }
    let (a, b) = seg(-xb, xb);
    if b > a {
        total += y * (b - a) + prim(b, rho) - prim(a, rho);
    }
    let (a, b) = seg(xb, rho);
    if b > a {
        total += if y >= 0.0 { 2.0 * (prim(b, rho) - prim(a, rho)) } else { 0.0 };
    }
    total
}

/// Antiderivative of `sqrt(ρ² − x²)`.
fn prim(x: f64, rho: f64) -> f64 {
    let x = x.clamp(-rho, rho);
    0.5 * (x * (rho * rho - x * x).max(0.0).sqrt() + rho * rho * (x / rho).asin())
}

fn disc_area_quadtree(p: &Para, center: &Point, radius2: f64, depth: usize) -> f64 {
    let corners = p.corners();
    let inside = corners
        .iter()
        .filter(|c| (*c - center).norm_squared() <= radius2)
        .count();
    if inside == 4 {
        return p.area();
    }
    if inside == 0 && box_distance(p, &Para { o: *center, e1: Point::zeros(), e2: Point::zeros() }) >= radius2.sqrt() {
        return 0.0;
    }
    if depth == 0 {
        let mid = p.o + (p.e1 + p.e2) * 0.5;
        return if (mid - center).norm_squared() <= radius2 { p.area() } else { 0.0 };
    }
    (0..4)
        .map(|q| disc_area_quadtree(&p.quadrant(q), center, radius2, depth - 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{make_cube, make_fichera};
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        let g = RightHandSide::fichera_corner(0.5);
        let v = rhs_eval(&g, &Point::new(1.0, 1.0, 1.0)).unwrap();
        assert!((v - 0.75f64.powf(-0.25)).abs() < 1e-15);
        assert!(rhs_eval(&g, &Point::new(0.5, 0.5, 0.5)).is_err());
        let c = RightHandSide::cube_cartoon();
        assert_eq!(rhs_eval(&c, &Point::new(0.0, 0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(rhs_eval(&c, &Point::new(1.0, 1.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn validation() {
        let f = make_fichera();
        assert!(RightHandSide::fichera_corner(0.75).validate(&f).is_ok());
        assert!(RightHandSide::fichera_corner(1.0).validate(&f).is_err());
        let off = RightHandSide::PointSingularity {
            alpha: 0.5,
            nu: Point::new(0.3, 0.3, 0.3),
        };
        assert!(off.validate(&f).is_err());
    }

    #[test]
    fn cartoon_scaling_coefficient() {
        let cube = make_cube();
        let g = RightHandSide::cube_cartoon();
        let cfg = QuadConfig::default();
        let c = rhs_coefficient(&cube, &g, &WaveletIndex::scaling(5), &cfg).unwrap();
        assert!((c - PI / 4.0).abs() < 1e-14);
        for p in 0..5 {
            assert_eq!(rhs_coefficient(&cube, &g, &WaveletIndex::scaling(p), &cfg).unwrap(), 0.0);
        }
        // Support [0.375, 0.5]^2 of the top face lies inside the disc.
        let w = WaveletIndex::wavelet(5, 3, 3, 3, Kind::Diag).unwrap();
        assert_eq!(rhs_coefficient(&cube, &g, &w, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn quarter_area_limits() {
        let rho = 0.7;
        assert!((quarter_area(1.0, 1.0, rho) - PI * rho * rho).abs() < 1e-14);
        assert!((quarter_area(0.0, 0.0, rho) - PI * rho * rho / 4.0).abs() < 1e-14);
        assert!((quarter_area(0.0, 1.0, rho) - PI * rho * rho / 2.0).abs() < 1e-14);
        assert!((quarter_area(1.0, 0.0, rho) - PI * rho * rho / 2.0).abs() < 1e-14);
        assert_eq!(quarter_area(-1.0, 0.3, rho), 0.0);
    }

    #[test]
    fn corner_integral_matches_polar_closed_form() {
        // ∫ over the square [0, a]^2 with ν at a corner, compared with the
        // one-dimensional reduction integrated by a fine composite rule.
        let p = Para {
            o: Point::zeros(),
            e1: Point::new(0.25, 0.0, 0.0),
            e2: Point::new(0.0, 0.25, 0.0),
        };
        let alpha = 0.5;
        let got = point_integral(&p, alpha, &Point::zeros(), &QuadConfig::default(), 0);
        // Each half triangle: ∫_0^{π/4} ∫_0^{a/cos φ} r^{1−α} dr dφ.
        let a: f64 = 0.25;
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            let phi = (i as f64 + 0.5) / n as f64 * PI / 4.0;
            acc += (a / phi.cos()).powf(2.0 - alpha) / (2.0 - alpha);
        }
        let want = 2.0 * acc * PI / 4.0 / n as f64;
        assert!((got - want).abs() < 1e-9 * want, "{got} {want}");
    }
}
