//! Rate fits, rate predictions and regularity checks.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use crate::basis::{best_n_term_curve, CoeffVector, Tree};
use crate::discretize::{gauss_legendre, EntryCache, QuadConfig, RightHandSide};
use crate::error::{invalid, Result};
use crate::solver::{solve_galerkin, GmresConfig, RhsApprox};
use crate::surface::{Point, Surface};

/// Least-squares fit of `value ≈ C·n^{−slope}` on a log-log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    /// `log C`.
    pub intercept: f64,
    pub r2: f64,
    pub window: Range<usize>,
}

/// Last two thirds of a series of `len` points, at least three points long.
pub fn default_window(len: usize) -> Range<usize> {
    let start = (len / 3).min(len.saturating_sub(3));
    start..len
}

/// Fits the decay exponent of `points = (n, value)` over `window`, or over
/// [`default_window`] when `None`.
pub fn fit_rate(points: &[(f64, f64)], window: Option<Range<usize>>) -> Result<RateFit> {
    let window = window.unwrap_or_else(|| default_window(points.len()));
    if window.end > points.len() || window.len() < 3 {
        return invalid(format!("rate window {window:?} needs at least 3 of {} points", points.len()));
    }
    let sel = &points[window.clone()];
    if sel.iter().any(|(n, v)| !(*n > 0.0) || !(*v > 0.0)) {
        return invalid("rate fits need positive n and values");
    }
    let xs: Vec<f64> = sel.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("rate fits need distinct n");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        slope: -b,
        intercept: a,
        r2,
        window,
    })
}

/// Smoothness parameters of data and solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityParams {
    /// Besov smoothness `s` of the solution in `B^s_p(L_p)`.
    pub s: f64,
    /// Smoothness `s'` of the norm the error is measured in.
    pub s_prime: f64,
    pub p: f64,
    /// Order `k` of the weighted space.
    pub k: f64,
    /// Weight strength `ρ ∈ (0, k)`.
    pub rho: f64,
}

/// Derived quantities of [`predicted_gamma`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrediction {
    pub alpha_star: f64,
    pub theta: f64,
    pub gamma_star: f64,
    /// Rate `γ*/2` of best n-term approximation.
    pub rate: f64,
    /// `2(1 − s'/s)·min{ρ, k − ρ, s}`, the bound for `p = 2`.
    pub gamma_bound_p2: f64,
}

/// Predicted best n-term exponent for a solution in `B^s_p(L_p) ∩ X^k_ρ`.
pub fn predicted_gamma(params: &RegularityParams) -> Result<GammaPrediction> {
    let RegularityParams { s, s_prime, p, k, rho } = *params;
    if [s, s_prime, p, k, rho].iter().any(|v| !v.is_finite()) {
        return invalid("regularity parameters must be finite");
    }
    if !(s > 0.0) {
        return invalid(format!("s = {s} must be positive"));
    }
    if !(k >= 1.0) {
        return invalid(format!("k = {k} must be at least 1"));
    }
    if !(rho > 0.0 && rho < k) {
        return invalid(format!("rho = {rho} must lie in (0, k)"));
    }
    if !(s_prime >= 0.0) {
        return invalid(format!("s' = {s_prime} must be non-negative"));
    }
    let inv_p = 1.0 / p;
    if !(p > 0.0) || inv_p < 0.5 || inv_p > s / 2.0 + 0.5 {
        return invalid(format!("(s, p, p) = ({s}, {p}, {p}) is not admissible: need 1/2 <= 1/p <= s/2 + 1/2"));
    }
    let shift = 2.0 * (inv_p - 0.5);
    if s - s_prime < shift - 1e-15 {
        return invalid(format!("s - s' = {} is below 2(1/p - 1/2) = {shift}", s - s_prime));
    }
    let alpha_star = rho.min(k - rho).min(s - (inv_p - 0.5));
    let denom = s - shift;
    let theta = if s_prime == 0.0 { 1.0 } else { 1.0 - s_prime / denom };
    let gamma_star = s - s_prime + theta * (2.0 * alpha_star - s);
    Ok(GammaPrediction {
        alpha_star,
        theta,
        gamma_star,
        rate: gamma_star / 2.0,
        gamma_bound_p2: 2.0 * (1.0 - s_prime / s) * rho.min(k - rho).min(s),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks `||x|^{−α} − |x+h|^{−α}| ≥ (M^α − 2^α)|h|^{−α}` for componentwise
/// non-negative `x`, `h` with `0 < |x| ≤ |h|/M`.
pub fn lemma_a1_check(x: &[f64], h: &[f64], alpha: f64, m: f64) -> Result<bool> {
    if x.is_empty() || x.len() != h.len() {
        return invalid("x and h need the same positive dimension");
    }
    if !(alpha > 0.0) || !(m > 2.0) {
        return invalid(format!("need alpha > 0 and M > 2, got alpha = {alpha}, M = {m}"));
    }
    if x.iter().chain(h).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return invalid("components of x and h must be non-negative");
    }
    let (nx, nh) = (norm(x), norm(h));
    if !(nx > 0.0) || nx > nh / m * (1.0 + 1e-12) {
        return invalid(format!("need 0 < |x| <= |h|/M, got |x| = {nx}, |h|/M = {}", nh / m));
    }
    let sum: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
    let lhs = (nx.powf(-alpha) - norm(&sum).powf(-alpha)).abs();
    let rhs = (m.powf(alpha) - 2f64.powf(alpha)) * nh.powf(-alpha);
    Ok(lhs >= rhs * (1.0 - 1e-12))
}

/// Truncated radial integrals of [`weighted_sobolev_finiteness`].
#[derive(Debug, Clone, PartialEq)]
pub struct FinitenessReport {
    /// `ρ < 1 − α`.
    pub predicate: bool,
    /// `(m, ∫_{1/m}^{R₀} (1+r)^{2ρ} r^{1−2α−2ρ} dr)`.
    pub integrals: Vec<(f64, f64)>,
    /// The integrals keep growing as the cut-off shrinks.
    pub diverges: bool,
}

/// Outer radius of the radial integrals.
pub const RADIAL_R0: f64 = 1.0;

/// Growth ratio of successive decade increments above which the radial
/// integrals count as divergent.
const GROWTH_RATIO: f64 = 0.95;

fn radial_integral(lo: f64, hi: f64, rho: f64, e: f64) -> f64 {
    // r = e^u turns the power singularity into an exponential.
    let rule = gauss_legendre(20);
    let (a, b) = (lo.ln(), hi.ln());
    let pieces = ((b - a) / 0.5).ceil().max(1.0) as usize;
    let step = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let u0 = a + step * i as f64;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = u0 + step * x;
            let r = u.exp();
            acc += step * w * (1.0 + r).powf(2.0 * rho) * r.powf(e + 1.0);
        }
    }
    acc
}

/// Finiteness of the weighted Sobolev norm of `|x − ν|^{−α}` near the
/// singular point, predicted by `ρ < 1 − α` and checked on truncated radial
/// integrals for `m = 10, …, 10⁴`.
pub fn weighted_sobolev_finiteness(alpha: f64, rho: f64) -> Result<FinitenessReport> {
    if !(0.5..1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside [1/2, 1)"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return invalid(format!("rho = {rho} outside [0, 1]"));
    }
    let e = 1.0 - 2.0 * alpha - 2.0 * rho;
    let ms = [1e1, 1e2, 1e3, 1e4];
    let integrals: Vec<(f64, f64)> = ms
        .iter()
        .map(|&m| (m, radial_integral(1.0 / m, RADIAL_R0, rho, e)))
        .collect();
    let inc: Vec<f64> = integrals.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let diverges = inc.windows(2).all(|w| w[1] >= GROWTH_RATIO * w[0]);
    Ok(FinitenessReport {
        predicate: rho < 1.0 - alpha,
        integrals,
        diverges,
    })
}

/// Corner sector of a face: the patch with the singular point as a corner.
fn corner_sector(surface: &Surface, nu: &Point) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in surface.patches() {
        let Some(i) = p.corners.iter().position(|c| (c - nu).norm() < 1e-12) else {
            continue;
        };
        let a = p.corners[(i + 1) % 4] - p.corners[i];
        let b = p.corners[(i + 3) % 4] - p.corners[i];
        if a.dot(&b).abs() > 1e-12 * a.norm() * b.norm() {
            continue;
        }
        let (la, lb) = (a.norm(), b.norm());
        if best.map_or(true, |(x, y)| la.min(lb) > x.min(y)) {
            best = Some((la, lb));
        }
    }
    best.ok_or_else(|| crate::error::Error::InvalidArgument("no rectangular face has the singular point as a corner".into()))
}

/// `‖Δ_h g‖_{L2}` on the corner sector of a face for `g = |x − ν|^{−α}` with
/// `ν` the reentrant corner of the Fichera surface and `h` along the
/// diagonal with `|h| = t`, divided by `t^{1−α}`.
pub fn sobolev_ceiling_check(surface: &Surface, alpha: f64, t_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(0.5..1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside [1/2, 1)"));
    }
    let nu = RightHandSide::fichera_corner(alpha)
        .singular_point()
        .expect("point singularity");
    let (a, b) = corner_sector(surface, &nu)?;
    let max_t = a.min(b) * std::f64::consts::SQRT_2;
    t_list
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t < max_t) {
                return invalid(format!("t = {t} outside (0, {max_t})"));
            }
            let h = t / std::f64::consts::SQRT_2;
            let norm = difference_norm(alpha, h, a - h, b - h);
            Ok((t, norm / t.powf(1.0 - alpha)))
        })
        .collect()
}

/// `(∫_{[0,a]×[0,b]} (|x + (h,h)|^{−α} − |x|^{−α})² dx)^{1/2}` in polar
/// coordinates with radii graded towards the origin.
fn difference_norm(alpha: f64, h: f64, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre(16);
    let corner = b.atan2(a);
    let f = |x: f64, y: f64| {
        let r = (x * x + y * y).sqrt();
        let s = ((x + h).powi(2) + (y + h).powi(2)).sqrt();
        (s.powf(-alpha) - r.powf(-alpha)).powi(2)
    };
    let mut total = 0.0;
    for (lo, hi) in [(0.0, corner), (corner, FRAC_PI_2)] {
        let pieces = 8;
        let dth = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            for (xt, wt) in rule.nodes.iter().zip(&rule.weights) {
                let th = lo + dth * (k as f64 + xt);
                let (c, s) = (th.cos(), th.sin());
                let rmax = if th <= corner { a / c } else { b / s };
                // Geometric radii from far below h up to rmax.
                let mut edges = vec![0.0];
                let mut r = (h * 1e-12).min(rmax);
                while r < rmax {
                    edges.push(r);
                    r *= 2.0;
                }
                edges.push(rmax);
                let mut radial = 0.0;
                for w in edges.windows(2) {
                    let dr = w[1] - w[0];
                    for (xr, wr) in rule.nodes.iter().zip(&rule.weights) {
                        let r = w[0] + dr * xr;
                        radial += dr * wr * r * f(r * c, r * s);
                    }
                }
                total += dth * wt * radial;
            }
        }
    }
    total.sqrt()
}

/// Best n-term curve of a uniform reference solution.
#[derive(Debug, Clone)]
pub struct BestNTerm {
    pub dofs: usize,
    pub curve: Vec<(usize, f64)>,
    pub solution: CoeffVector,
}

/// Solves uniformly up to level `j_ref` and returns `σ_n` of the solution.
pub fn best_nterm_reference(
    surface: &Surface,
    g: RightHandSide,
    j_ref: u8,
    n_list: &[usize],
    quad: QuadConfig,
    gmres: &GmresConfig,
    dense_limit: usize,
) -> Result<BestNTerm> {
    let cache = EntryCache::new(surface, quad);
    let mut rhs = RhsApprox::new(surface, g, quad, j_ref)?;
    let tree = Tree::uniform(surface.num_patches(), Some(j_ref));
    let f = rhs.on_tree(&tree);
    let sol = solve_galerkin(surface, &cache, &tree, &f, None, gmres, dense_limit)?;
    Ok(BestNTerm {
        dofs: tree.len(),
        curve: best_n_term_curve(&sol.u, n_list),
        solution: sol.u,
    })
}
