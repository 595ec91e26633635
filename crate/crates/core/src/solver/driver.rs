use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use super::apply::{apply, TreeOperator};
use super::config::{GmresConfig, Mode, SolverConfig};
use super::gmres::gmres;
use super::rhs_approx::RhsApprox;
use crate::basis::{CoeffVector, Tree, WaveletIndex};
use crate::discretize::{assemble_dense, EntryCache};
use crate::error::{Error, Result};
use crate::surface::Surface;

/// Galerkin solution on a tree.
#[derive(Debug, Clone)]
pub struct GalerkinSolution {
    pub u: CoeffVector,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `((½I − K)u)_λ = f_λ` for all `λ` in the tree with restarted
/// GMRES, warm-started from `u0`. Trees with at most `dense_limit` indices
/// are assembled in full, larger ones use the fast matrix-vector product.
pub fn solve_galerkin(
    surface: &Surface,
    cache: &EntryCache,
    tree: &Tree,
    f: &CoeffVector,
    u0: Option<&CoeffVector>,
    gmres_cfg: &GmresConfig,
    dense_limit: usize,
) -> Result<GalerkinSolution> {
    if !tree.is_valid() {
        return Err(Error::InvalidArgument("tree is not ancestor-closed".into()));
    }
    let indices: Vec<WaveletIndex> = tree.iter().copied().collect();
    let b: Vec<f64> = indices.iter().map(|i| f.get(i)).collect();
    let x0: Vec<f64> = match u0 {
        Some(u) => indices.iter().map(|i| u.get(i)).collect(),
        None => vec![0.0; indices.len()],
    };
    let out = if indices.len() <= dense_limit {
        let m = assemble_dense(surface, tree, cache);
        gmres(
            |x, y| {
                let v = &m * nalgebra::DVector::from_column_slice(x);
                y.copy_from_slice(v.as_slice());
            },
            &b,
            &x0,
            gmres_cfg,
        )?
    } else {
        let op = TreeOperator::new(surface, cache, tree);
        gmres(|x, y| op.matvec(x, y), &b, &x0, gmres_cfg)?
    };
    let u = indices
        .iter()
        .zip(&out.x)
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (*i, *v))
        .collect();
    Ok(GalerkinSolution {
        u,
        iterations: out.iterations,
        relative_residual: out.relative_residual,
    })
}

/// Residual estimate of [`estimate_residual`].
#[derive(Debug, Clone)]
pub struct ResidualEstimate {
    pub r: CoeffVector,
    pub norm: f64,
    /// Accuracy `δ` at which `r` was computed: `‖r − (f − Su)‖ ≤ δ`.
    pub delta: f64,
    /// Set when the loop stopped because `‖r‖ + δ ≤ ε`.
    pub converged: bool,
}

/// Halves `δ` until `δ ≤ ω‖r_δ‖` or `‖r_δ‖ + δ ≤ ε`, where
/// `r_δ = f_{δ/2} − (½I − K)_{δ/2} u`.
pub fn estimate_residual(
    surface: &Surface,
    cache: &EntryCache,
    rhs: &mut RhsApprox<'_>,
    u: &CoeffVector,
    delta_init: f64,
    omega: f64,
    eps: f64,
    resolve_level: u8,
) -> Result<ResidualEstimate> {
    if !(delta_init > 0.0) {
        return Err(Error::InvalidArgument("initial delta must be positive".into()));
    }
    let mut delta = delta_init;
    let floor = 1e-13 * delta_init.max(1.0);
    loop {
        let f = rhs.approximate(0.5 * delta)?;
        let su = apply(surface, cache, u, 0.5 * delta, resolve_level)?;
        let r = f.f.sub(&su.w);
        let norm = r.norm();
        if norm + delta <= eps {
            return Ok(ResidualEstimate {
                r,
                norm,
                delta,
                converged: true,
            });
        }
        if delta <= omega * norm {
            return Ok(ResidualEstimate {
                r,
                norm,
                delta,
                converged: false,
            });
        }
        if delta < floor {
            return Err(Error::Stagnation { delta, residual: norm });
        }
        delta *= 0.5;
    }
}

/// Smallest greedy tree capturing all but `θ` of the residual energy:
/// indices are taken by decreasing magnitude together with their ancestors
/// until `‖r − r|_T‖ ≤ θ‖r‖`. Roots of every patch are always included.
pub fn coarse(theta: f64, r: &CoeffVector, num_patches: usize) -> Result<Tree> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, 1)")));
    }
    let total: f64 = r.iter().map(|(_, v)| v * v).sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("cannot mark from a zero residual".into()));
    }
    let mut order: Vec<(&WaveletIndex, f64)> = r.iter().map(|(i, v)| (i, *v)).collect();
    order.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(b.0)));
    let mut tree = Tree::roots(num_patches);
    let mut captured: f64 = tree.iter().map(|i| r.get(i).powi(2)).sum();
    let target = (1.0 - theta * theta) * total;
    for (idx, _) in order {
        if captured >= target {
            break;
        }
        if tree.contains(idx) {
            continue;
        }
        let mut chain = vec![*idx];
        let mut cur = *idx;
        while let Some(p) = cur.parent() {
            if tree.contains(&p) {
                break;
            }
            chain.push(p);
            cur = p;
        }
        for i in chain {
            captured += r.get(&i).powi(2);
            tree.insert(i);
        }
    }
    Ok(tree)
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub step: usize,
    pub dofs: usize,
    pub residual: f64,
    pub delta: f64,
    pub wall_time_s: f64,
    pub gmres_iterations: usize,
}

pub const HISTORY_HEADER: &str = "step,dofs,residual,delta,wall_time_s";

/// Writes the history as CSV; times are written as 0 when `timing` is off so
/// that repeated runs produce identical files.
pub fn write_history<W: Write>(mut w: W, history: &[HistoryRecord], timing: bool) -> Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for h in history {
        let t = if timing { h.wall_time_s } else { 0.0 };
        writeln!(w, "{},{},{:.10e},{:.10e},{:.3}", h.step, h.dofs, h.residual, h.delta, t)?;
    }
    Ok(())
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `‖r‖(1 + ω) ≤ ε`, or the estimation loop certified `‖r‖ + δ ≤ ε`.
    Converged,
    /// The next tree would exceed the dof budget.
    DofBudget,
    /// Refinement would exceed the level cap.
    LevelCap,
    IterationCap,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::DofBudget => "dof budget reached",
            Termination::LevelCap => "level cap reached",
            Termination::IterationCap => "iteration cap reached",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: CoeffVector,
    pub tree: Tree,
    pub history: Vec<HistoryRecord>,
    pub termination: Termination,
    /// Last residual estimate.
    pub residual: CoeffVector,
}

fn clip_tree(tree: &Tree, max_level: u8) -> Tree {
    let mut out = Tree::roots(tree.num_patches());
    for i in tree.iter() {
        if i.level <= max_level as i8 {
            out.insert(*i);
        }
    }
    out
}

/// Adaptive or uniform solve of `(½I − K)u = g`.
pub fn solve(surface: &Surface, cache: &EntryCache, rhs: &mut RhsApprox<'_>, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_with_observer(surface, cache, rhs, cfg, |_| {})
}

/// As [`solve`], calling `observer` after every step.
pub fn solve_with_observer<F>(
    surface: &Surface,
    cache: &EntryCache,
    rhs: &mut RhsApprox<'_>,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<SolveResult>
where
    F: FnMut(&HistoryRecord),
{
    cfg.validate()?;
    let start = Instant::now();
    let np = surface.num_patches();
    let delta_init = match cfg.delta_init {
        Some(d) => d,
        None => rhs.approximate(0.5)?.f.norm().max(1.0),
    };
    let mut level: u8 = 0;
    let mut tree = match cfg.mode {
        Mode::Adaptive => Tree::roots(np),
        Mode::Uniform => Tree::uniform(np, Some(0)),
    };
    let mut u = CoeffVector::new();
    let mut history = Vec::new();
    let mut step = 0;
    loop {
        let f_tree = rhs.on_tree(&tree);
        let sol = solve_galerkin(
            surface,
            cache,
            &tree,
            &f_tree,
            Some(&u),
            &cfg.gmres,
            cfg.dense_limit,
        )?;
        u = sol.u;
        let est = estimate_residual(
            surface,
            cache,
            rhs,
            &u,
            delta_init,
            cfg.omega,
            cfg.eps,
            cfg.resolve_level,
        )?;
        let record = HistoryRecord {
            step,
            dofs: tree.len(),
            residual: est.norm,
            delta: est.delta,
            wall_time_s: start.elapsed().as_secs_f64(),
            gmres_iterations: sol.iterations,
        };
        observer(&record);
        history.push(record);
        let finish = |termination, residual| {
            Ok(SolveResult {
                u: u.clone(),
                tree: tree.clone(),
                history: history.clone(),
                termination,
                residual,
            })
        };
        if est.converged || est.norm * (1.0 + cfg.omega) <= cfg.eps {
            return finish(Termination::Converged, est.r);
        }
        if step + 1 >= cfg.max_iterations {
            return finish(Termination::IterationCap, est.r);
        }
        let next = match cfg.mode {
            Mode::Uniform => {
                if level >= cfg.max_level {
                    return finish(Termination::LevelCap, est.r);
                }
                level += 1;
                Tree::uniform(np, Some(level))
            }
            Mode::Adaptive => {
                let marked = clip_tree(&coarse(cfg.theta, &est.r, np)?, cfg.max_level);
                let mut next = tree.clone();
                next.union(&marked);
                if next.len() == tree.len() {
                    return finish(Termination::LevelCap, est.r);
                }
                next
            }
        };
        if let Some(budget) = cfg.max_dofs {
            if next.len() > budget {
                return finish(Termination::DofBudget, est.r);
            }
        }
        tree = next;
        step += 1;
    }
}

/// Indices of `a` missing from `b`.
pub fn tree_difference(a: &Tree, b: &Tree) -> BTreeSet<WaveletIndex> {
    a.as_set().difference(b.as_set()).copied().collect()
}
