//! Invariant suites run by `awbem verify`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use awbem::analysis::{lemma_a1_check, sobolev_ceiling_check, weighted_sobolev_finiteness};
use awbem::basis::{haar_analysis, haar_synthesis, Cell, CoeffVector, Kind, Tree, WaveletIndex};
use awbem::discretize::{apply_dense, assemble_dense, solid_angle, EntryCache, QuadConfig, RightHandSide};
use awbem::solver::{apply, solve_galerkin, GmresConfig, RhsApprox};
use awbem::surface::{make_cube, make_fichera, Point, Surface};
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::run_spec::UsageError;

/// One row of a suite report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn failed(name: &str, err: impl fmt::Display) -> Self {
        Self::new(name, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quadrature,
    Basis,
    Appendix,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Quadrature, Suite::Basis, Suite::Appendix, Suite::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Quadrature => "quadrature",
            Suite::Basis => "basis",
            Suite::Appendix => "appendix",
            Suite::Oracle => "oracle",
        }
    }

    pub fn run(self) -> Vec<Check> {
        match self {
            Suite::Quadrature => quadrature_suite(),
            Suite::Basis => basis_suite(),
            Suite::Appendix => appendix_suite(),
            Suite::Oracle => oracle_suite(),
        }
    }
}

impl FromStr for Suite {
    type Err = UsageError;
    fn from_str(s: &str) -> Result<Self, UsageError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UsageError(format!("unknown suite '{s}' (quadrature, basis, appendix, oracle)")))
    }
}

/// Pass/fail table.
pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status}  {:width$}  {}\n", c.name, c.detail));
    }
    out
}

fn total_solid_angle(surface: &Surface, x: &Point) -> awbem::Result<f64> {
    surface.patches().iter().map(|p| solid_angle(&p.corners, x)).sum()
}

fn in_fichera(x: &Point, margin: f64) -> bool {
    let inside_box = x.iter().all(|c| *c > -margin && *c < 1.0 + margin);
    let in_notch = x.iter().all(|c| *c < 0.5 - margin);
    inside_box && !in_notch
}

fn in_cube(x: &Point, margin: f64) -> bool {
    x.iter().all(|c| c.abs() < 1.0 + margin)
}

fn random_point(rng: &mut StdRng, lo: f64, hi: f64) -> Point {
    Point::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

/// Interior and exterior points of both surfaces, `count` of each kind in
/// total, kept at least `margin` away from the surface.
fn closure_check(count: usize, margin: f64) -> Check {
    let name = "gauss closure";
    let mut rng = StdRng::seed_from_u64(1);
    let cases: [(Surface, fn(&Point, f64) -> bool, f64, f64); 2] =
        [(make_fichera(), in_fichera, -0.5, 1.5), (make_cube(), in_cube, -2.0, 2.0)];
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (surface, inside, lo, hi) in &cases {
        let (mut n_in, mut n_out) = (0, 0);
        while n_in + n_out < count / cases.len() {
            let x = random_point(&mut rng, *lo, *hi);
            let expected = if inside(&x, -margin) && n_in < count / (2 * cases.len()) {
                n_in += 1;
                4.0 * PI
            } else if !inside(&x, margin) && n_out < count / (2 * cases.len()) {
                n_out += 1;
                0.0
            } else {
                continue;
            };
            match total_solid_angle(surface, &x) {
                Ok(v) => worst = worst.max((v - expected).abs()),
                Err(e) => return Check::failed(name, e),
            }
            points += 1;
        }
    }
    Check::new(name, worst <= 1e-10, format!("{points} points, max deviation {worst:.2e} (tol 1e-10)"))
}

fn coplanar_zero_check() -> Check {
    let name = "coplanar zero";
    let f = make_fichera();
    let mut rng = StdRng::seed_from_u64(2);
    let mut nonzero = 0;
    let mut tested = 0;
    for p in f.patches() {
        for _ in 0..20 {
            let (s, t) = (rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0));
            if (-0.01..=1.01).contains(&s) && (-0.01..=1.01).contains(&t) {
                continue;
            }
            let x = p.corners[0] + p.edge_s * s + p.edge_t * t;
            match solid_angle(&p.corners, &x) {
                Ok(v) if v == 0.0 => {}
                Ok(_) => nonzero += 1,
                Err(e) => return Check::failed(name, e),
            }
            tested += 1;
        }
    }
    let cache = EntryCache::new(&f, QuadConfig::default());
    let mut blocks = 0;
    for i in 0..f.num_patches() {
        for j in 0..f.num_patches() {
            let Ok(rel) = f.patch_relation(i, j) else {
                return Check::failed(name, "patch relation");
            };
            if !rel.coplanar {
                continue;
            }
            for (a, b) in [(Cell::root(i as u16), Cell::root(j as u16)), (Cell::new(i as u16, 2, 1, 2), Cell::new(j as u16, 1, 0, 1))] {
                let blk = cache.block(&f, &a, &b);
                if blk.iter().flatten().any(|v| *v != 0.0) {
                    nonzero += 1;
                }
                blocks += 1;
            }
        }
    }
    Check::new(
        name,
        nonzero == 0,
        format!("{tested} in-plane points, {blocks} coplanar blocks, {nonzero} nonzero"),
    )
}

fn additivity_check() -> Check {
    let name = "solid-angle additivity";
    let cube = make_cube();
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 100 {
        let p = &cube.patches()[n % cube.num_patches()];
        let x = random_point(&mut rng, -3.0, 3.0);
        if (x - p.corners[0]).dot(&p.normal).abs() < 1e-3 {
            continue;
        }
        let lift = |s: f64, t: f64| p.corners[0] + p.edge_s * s + p.edge_t * t;
        let (s, t) = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let parts = [
            [lift(0.0, 0.0), lift(s, 0.0), lift(s, t), lift(0.0, t)],
            [lift(s, 0.0), lift(1.0, 0.0), lift(1.0, t), lift(s, t)],
            [lift(0.0, t), lift(s, t), lift(s, 1.0), lift(0.0, 1.0)],
            [lift(s, t), lift(1.0, t), lift(1.0, 1.0), lift(s, 1.0)],
        ];
        let whole = match solid_angle(&p.corners, &x) {
            Ok(v) => v,
            Err(e) => return Check::failed(name, e),
        };
        let sum: awbem::Result<f64> = parts.iter().map(|q| solid_angle(q, &x)).sum();
        match sum {
            Ok(v) => worst = worst.max((v - whole).abs()),
            Err(e) => return Check::failed(name, e),
        }
        n += 1;
    }
    Check::new(name, worst <= 1e-12, format!("{n} viewpoints, max deviation {worst:.2e} (tol 1e-12)"))
}

fn quadrature_suite() -> Vec<Check> {
    vec![closure_check(200, 1e-3), coplanar_zero_check(), additivity_check()]
}

const GRID_LEVEL: u8 = 3;

/// All functions of one patch below the grid level: the scaling function and
/// the wavelets of levels `0..GRID_LEVEL`.
fn patch_functions(patch: u16) -> Vec<WaveletIndex> {
    let mut out = vec![WaveletIndex::scaling(patch)];
    for j in 0..GRID_LEVEL {
        for k2 in 0..1u32 << j {
            for k1 in 0..1u32 << j {
                for kind in Kind::WAVELETS {
                    out.push(WaveletIndex::wavelet(patch, j, k1, k2, kind).expect("valid index"));
                }
            }
        }
    }
    out
}

fn basis_suite() -> Vec<Check> {
    let f = make_fichera();
    // A 0.5 × 0.5 notch face, so that the Jacobian is not 1.
    let patch = f.patches().iter().find(|p| (p.jacobian - 0.25).abs() < 1e-12).unwrap_or(&f.patches()[0]);
    let cell_area = patch.jacobian / 4f64.powi(GRID_LEVEL as i32);
    let funcs = patch_functions(patch.id as u16);
    let grids: Vec<Vec<f64>> = match funcs
        .iter()
        .map(|i| haar_synthesis(&[(*i, 1.0)].into_iter().collect(), patch, GRID_LEVEL))
        .collect()
    {
        Ok(g) => g,
        Err(e) => return vec![Check::failed("orthonormality", e)],
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * cell_area;
    let mut ortho: f64 = 0.0;
    for (i, a) in grids.iter().enumerate() {
        for (j, b) in grids.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((dot(a, b) - expected).abs());
        }
    }
    let mut moments: f64 = 0.0;
    for (idx, g) in funcs.iter().zip(&grids) {
        if !idx.is_scaling() {
            moments = moments.max((g.iter().sum::<f64>() * cell_area).abs());
        }
    }
    let mut rng = StdRng::seed_from_u64(4);
    let mut parseval: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    for _ in 0..20 {
        let values: Vec<f64> = (0..grids[0].len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = match haar_analysis(patch, &values) {
            Ok(c) => c,
            Err(e) => return vec![Check::failed("parseval", e)],
        };
        let l2 = dot(&values, &values);
        parseval = parseval.max((coeffs.norm().powi(2) - l2).abs() / l2);
        let back = match haar_synthesis(&coeffs, patch, GRID_LEVEL) {
            Ok(b) => b,
            Err(e) => return vec![Check::failed("round trip", e)],
        };
        let diff = values.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        round_trip = round_trip.max(diff);
    }
    let n = funcs.len();
    vec![
        Check::new("orthonormality", ortho <= 1e-12, format!("{n}x{n} Gram matrix, max deviation {ortho:.2e}")),
        Check::new("parseval", parseval <= 1e-12, format!("20 random grids, max relative deviation {parseval:.2e}")),
        Check::new("vanishing moments", moments <= 1e-12, format!("{} wavelets, max |mean| {moments:.2e}", n - 1)),
        Check::new("transform round trip", round_trip <= 1e-12, format!("20 random grids, max deviation {round_trip:.2e}")),
    ]
}

fn lemma_check(samples: usize) -> Check {
    let name = "lemma A.1 randomized";
    let mut rng = StdRng::seed_from_u64(5);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut violations = 0;
    let mut done = 0;
    while done < samples {
        let d = rng.gen_range(1..=3);
        let h: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0)).collect();
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let m = rng.gen_range(2.0001..20.0);
        let alpha = rng.gen_range(0.01..3.0);
        let (nd, nh) = (norm(&dir), norm(&h));
        if nd == 0.0 || nh == 0.0 {
            continue;
        }
        let len = rng.gen_range(1e-9..1.0) * nh / m;
        let x: Vec<f64> = dir.iter().map(|v| v / nd * len).collect();
        match lemma_a1_check(&x, &h, alpha, m) {
            Ok(true) => {}
            Ok(false) => violations += 1,
            Err(e) => return Check::failed(name, e),
        }
        done += 1;
    }
    Check::new(name, violations == 0, format!("{done} samples, {violations} violations"))
}

fn finiteness_grid_check() -> Check {
    let name = "weighted Sobolev finiteness grid";
    let mut mismatches = Vec::new();
    let mut n = 0;
    for alpha in [0.5f64, 0.6, 0.75, 0.9] {
        for off in [-0.3, -0.1, -0.05, 0.05, 0.1] {
            let rho = (1.0 - alpha + off).max(0.0);
            match weighted_sobolev_finiteness(alpha, rho) {
                Ok(r) if r.diverges == !r.predicate => {}
                Ok(_) => mismatches.push(format!("({alpha}, {rho:.2})")),
                Err(e) => return Check::failed(name, e),
            }
            n += 1;
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{n} (alpha, rho) pairs, flag matches rho < 1 - alpha")
    } else {
        format!("{n} pairs, mismatches at {}", mismatches.join(" "))
    };
    Check::new(name, mismatches.is_empty(), detail)
}

fn ceiling_check() -> Check {
    let name = "modulus of smoothness ratios";
    let f = make_fichera();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for alpha in [0.5, 0.75] {
        match sobolev_ceiling_check(&f, alpha, &[1e-1, 1e-2, 1e-3]) {
            Ok(r) => {
                let (lo, hi) = r.iter().fold((f64::MAX, 0.0f64), |(l, h), (_, v)| (l.min(*v), h.max(*v)));
                worst = worst.max(hi / lo);
                parts.push(format!("alpha {alpha}: {lo:.3}..{hi:.3}"));
            }
            Err(e) => return Check::failed(name, e),
        }
    }
    Check::new(name, worst <= 3.0, format!("t = 1e-1..1e-3, {}, max/min {worst:.2} (bound 3)", parts.join(", ")))
}

fn appendix_suite() -> Vec<Check> {
    vec![lemma_check(10_000), finiteness_grid_check(), ceiling_check()]
}

/// `‖u − 1‖` in `L2` of a coefficient vector.
pub fn distance_to_one(surface: &Surface, u: &CoeffVector) -> f64 {
    let mut one = CoeffVector::new();
    for p in surface.patches() {
        one.set(WaveletIndex::scaling(p.id as u16), p.jacobian.sqrt());
    }
    u.sub(&one).norm()
}

/// Galerkin solution for `g ≡ 1` on the cube at a uniform level.
pub fn constant_density_error(level: u8) -> awbem::Result<f64> {
    let cube = make_cube();
    let quad = QuadConfig::default();
    let cache = EntryCache::new(&cube, quad);
    let mut rhs = RhsApprox::new(&cube, RightHandSide::Constant(1.0), quad, level)?;
    let tree = Tree::uniform(cube.num_patches(), Some(level));
    let f = rhs.on_tree(&tree);
    let gm = GmresConfig {
        tol: 1e-12,
        ..GmresConfig::default()
    };
    let sol = solve_galerkin(&cube, &cache, &tree, &f, None, &gm, usize::MAX)?;
    Ok(distance_to_one(&cube, &sol.u))
}

fn random_vector(tree: &Tree, seed: u64) -> CoeffVector {
    let mut rng = StdRng::seed_from_u64(seed);
    tree.iter().map(|i| (*i, rng.gen_range(-1.0..1.0))).collect()
}

/// Largest `‖apply(v) − Sv‖ / δ` over random vectors, with `Sv` from the
/// dense matrix on a finer uniform tree.
pub fn apply_dense_ratio() -> awbem::Result<(f64, usize)> {
    let quad = QuadConfig::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (surface, level, dense_level, delta, seed) in [
        (make_cube(), 1u8, 4u8, 1e-1, 1u64),
        (make_cube(), 0, 4, 5e-2, 2),
        (make_fichera(), 0, 3, 1e-1, 3),
    ] {
        let cache = EntryCache::new(&surface, quad);
        let v = random_vector(&Tree::uniform(surface.num_patches(), Some(level)), seed);
        let out = apply(&surface, &cache, &v, delta, 30)?;
        let big = Tree::uniform(surface.num_patches(), Some(dense_level));
        let dense = apply_dense(&surface, &big, &v, &cache)?;
        let err = dense.sub(&out.w.restrict(&big)).norm();
        worst = worst.max(err / delta);
        cases += 1;
    }
    Ok((worst, cases))
}

/// Largest relative difference between GMRES Galerkin solutions and dense LU
/// on trees of at most 500 indices.
pub fn galerkin_lu_difference() -> awbem::Result<(f64, usize)> {
    let quad = QuadConfig::default();
    let gm = GmresConfig {
        tol: 1e-13,
        ..GmresConfig::default()
    };
    let f = make_fichera();
    let cache = EntryCache::new(&f, quad);
    let mut rhs = RhsApprox::new(&f, RightHandSide::fichera_corner(0.5), quad, 12)?;
    let mut corner_tree = Tree::uniform(f.num_patches(), Some(1));
    let local = rhs.approximate(2e-2)?.f;
    let mut by_size: Vec<(&WaveletIndex, &f64)> = local.iter().filter(|(i, _)| i.level <= 4).collect();
    by_size.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(b.0)));
    for (idx, _) in by_size {
        let mut grown = corner_tree.clone();
        let mut chain = vec![*idx];
        while let Some(p) = chain.last().and_then(|i| i.parent()) {
            chain.push(p);
        }
        for i in chain {
            grown.insert(i);
        }
        if grown.len() > 500 {
            break;
        }
        corner_tree = grown;
    }
    let mut worst: f64 = 0.0;
    let mut sizes = 0;
    for tree in [Tree::uniform(f.num_patches(), Some(1)), corner_tree] {
        let g = rhs.on_tree(&tree);
        let sol = solve_galerkin(&f, &cache, &tree, &g, None, &gm, usize::MAX)?;
        let m = assemble_dense(&f, &tree, &cache);
        let b = DVector::from_iterator(tree.len(), tree.iter().map(|i| g.get(i)));
        let x = m
            .lu()
            .solve(&b)
            .ok_or_else(|| awbem::Error::Singular("dense Galerkin matrix".into()))?;
        let diff = tree.iter().zip(x.iter()).map(|(i, v)| (sol.u.get(i) - v).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / x.norm());
        sizes = sizes.max(tree.len());
    }
    Ok((worst, sizes))
}

fn oracle_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(match constant_density_error(2) {
        Ok(e) => Check::new("constant density", e <= 5e-3, format!("cube level 2, |u - 1| = {e:.2e} (tol 5e-3)")),
        Err(e) => Check::failed("constant density", e),
    });
    out.push(match apply_dense_ratio() {
        Ok((r, n)) => Check::new("apply vs dense", r <= 1.0, format!("{n} cases, max error/delta {r:.3}")),
        Err(e) => Check::failed("apply vs dense", e),
    });
    out.push(match galerkin_lu_difference() {
        Ok((d, n)) => Check::new("galerkin vs dense LU", d <= 1e-8, format!("trees up to {n} indices, max relative difference {d:.2e} (tol 1e-8)")),
        Err(e) => Check::failed("galerkin vs dense LU", e),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("geometry".parse::<Suite>().is_err());
    }

    #[test]
    fn table_marks_failures() {
        let t = format_table(&[Check::new("a", true, "ok".into()), Check::new("bb", false, "bad".into())]);
        assert_eq!(t, "PASS  a   ok\nFAIL  bb  bad\n");
    }

    #[test]
    fn membership_tests() {
        assert!(in_fichera(&Point::new(0.75, 0.75, 0.75), 0.0));
        assert!(!in_fichera(&Point::new(0.25, 0.25, 0.25), 0.0));
        assert!(in_fichera(&Point::new(0.25, 0.25, 0.75), 0.0));
        assert!(!in_cube(&Point::new(1.5, 0.0, 0.0), 0.0));
    }

    #[test]
    fn quadrature_and_basis_suites_pass() {
        for c in quadrature_suite().into_iter().chain(basis_suite()) {
            assert!(c.passed, "{c:?}");
        }
    }
}
