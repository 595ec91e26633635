use awbem::analysis::{fit_rate, weighted_sobolev_finiteness};
use awbem::basis::{haar_analysis, haar_synthesis, tree_complete, CoeffVector, Tree, WaveletIndex};
use awbem::discretize::{apply_dense, solid_angle, EntryCache, QuadConfig, RightHandSide};
use awbem::solver::{apply, solve, solve_galerkin, GmresConfig, Mode, RhsApprox, SolverConfig, Termination};
use awbem::surface::{make_cube, make_fichera, Point};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn fichera_encloses_its_interior() {
    let f = make_fichera();
    assert!(f.is_closed());
    let inside = Point::new(0.75, 0.75, 0.75);
    let outside = Point::new(2.0, 0.3, 0.4);
    let omega = |x: &Point| -> f64 { f.patches().iter().map(|p| solid_angle(&p.corners, x).unwrap()).sum() };
    assert!((omega(&inside) - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    assert!(omega(&outside).abs() < 1e-10);
}

#[test]
fn transform_round_trip_on_every_patch() {
    let f = make_fichera();
    let mut rng = StdRng::seed_from_u64(11);
    for p in f.patches() {
        let values: Vec<f64> = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v = haar_analysis(p, &values).unwrap();
        assert_eq!(v.len(), 64);
        let back = haar_synthesis(&v, p, 3).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let l2: f64 = values.iter().map(|x| x * x).sum::<f64>() * p.jacobian / 64.0;
        assert!((v.norm().powi(2) - l2).abs() < 1e-11 * l2.max(1.0));
    }
}

#[test]
fn apply_matches_dense_product() {
    let cube = make_cube();
    let cache = EntryCache::new(&cube, QuadConfig::default());
    let tree = Tree::uniform(6, Some(1));
    let mut rng = StdRng::seed_from_u64(5);
    let v: CoeffVector = tree.iter().map(|i| (*i, rng.gen_range(-1.0..1.0))).collect();
    let delta = 0.1;
    let out = apply(&cube, &cache, &v, delta, 30).unwrap();
    assert!(out.error_estimate <= delta);
    let fine = Tree::uniform(6, Some(3));
    let dense = apply_dense(&cube, &fine, &v, &cache).unwrap();
    assert!(dense.sub(&out.w.restrict(&fine)).norm() <= delta);
}

#[test]
fn galerkin_solution_is_unit_density() {
    let cube = make_cube();
    let quad = QuadConfig::default();
    let cache = EntryCache::new(&cube, quad);
    let mut rhs = RhsApprox::new(&cube, RightHandSide::Constant(1.0), quad, 2).unwrap();
    let tree = Tree::uniform(6, Some(2));
    let f = rhs.on_tree(&tree);
    let gm = GmresConfig { tol: 1e-12, ..GmresConfig::default() };
    let sol = solve_galerkin(&cube, &cache, &tree, &f, None, &gm, usize::MAX).unwrap();
    for (idx, c) in sol.u.iter() {
        // u ≡ 1 has scaling coefficient √jacobian = 2 on each cube face.
        let expected = if idx.is_scaling() { 2.0 } else { 0.0 };
        assert!((c - expected).abs() < 5e-3, "{idx:?} {c}");
    }
}

#[test]
fn rhs_expansion_respects_its_bound() {
    let f = make_fichera();
    let quad = QuadConfig::default();
    let mut coarse = RhsApprox::new(&f, RightHandSide::fichera_corner(0.5), quad, 30).unwrap();
    let mut fine = RhsApprox::new(&f, RightHandSide::fichera_corner(0.5), quad, 30).unwrap();
    let a = coarse.approximate(0.05).unwrap();
    let b = fine.approximate(0.002).unwrap();
    assert!(a.error <= 0.05 && b.error <= 0.002);
    let support = tree_complete(a.f.support(), 12);
    assert!(a.f.support_in(&support));
    assert!(a.f.sub(&b.f).norm() <= 0.05 + 0.002);
}

#[test]
fn adaptive_solve_reduces_residual() {
    let f = make_fichera();
    let quad = QuadConfig::default();
    let cache = EntryCache::new(&f, quad);
    let mut rhs = RhsApprox::new(&f, RightHandSide::fichera_corner(0.5), quad, 30).unwrap();
    let cfg = SolverConfig { mode: Mode::Adaptive, eps: 0.15, ..SolverConfig::default() };
    let out = solve(&f, &cache, &mut rhs, &cfg).unwrap();
    assert_eq!(out.termination, Termination::Converged);
    let h = &out.history;
    assert!(h.len() >= 3 && h.last().unwrap().residual <= 0.15);
    assert!(h.windows(2).all(|w| w[1].dofs > w[0].dofs));
    assert!(out.tree.is_valid() && out.u.support_in(&out.tree));
    let pts: Vec<(f64, f64)> = h.iter().map(|r| (r.dofs as f64, r.residual)).collect();
    assert!(fit_rate(&pts, None).unwrap().slope > 0.2);
    assert!(out.u.get(&WaveletIndex::scaling(0)).is_finite());
}

#[test]
fn finiteness_predicate_threshold() {
    for alpha in [0.5, 0.75] {
        assert!(weighted_sobolev_finiteness(alpha, 0.9 * (1.0 - alpha)).unwrap().predicate);
        assert!(!weighted_sobolev_finiteness(alpha, 1.1 * (1.0 - alpha)).unwrap().predicate);
    }
}
