use std::collections::BTreeMap;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::fmm::{cell_amplitude, Evaluator, Sources};
use crate::basis::{Cell, CoeffVector, Kind, Tree, WaveletIndex};
use crate::discretize::EntryCache;
use crate::error::{Error, Result};
use crate::surface::Surface;

/// Bound for `‖K‖` on `ℓ2` used to answer requests with `δ ≥ bound·‖v‖`.
pub const K_NORM_BOUND: f64 = 2.0;

/// Output of [`apply`].
#[derive(Debug, Clone)]
pub struct ApplyOutput {
    /// Approximation of `(½I − K) v`; its support is tree-complete up to
    /// coefficients that vanish exactly.
    pub w: CoeffVector,
    /// Estimated `‖(½I − K)v − w‖` from the coefficients at the frontier of
    /// the evaluated target tree.
    pub error_estimate: f64,
    /// Number of target cells evaluated.
    pub cells: usize,
}

/// Source cells with amplitude-weighted coefficients by kind slot.
pub(crate) fn group_by_cell(surface: &Surface, v: &CoeffVector) -> Vec<(Cell, [f64; 4])> {
    let mut map: BTreeMap<Cell, [f64; 4]> = BTreeMap::new();
    for (idx, c) in v.iter() {
        let cell = idx.cell();
        let amp = cell_amplitude(surface, &cell);
        map.entry(cell).or_insert([0.0; 4])[idx.kind.slot()] += amp * c;
    }
    map.into_iter().collect()
}

pub(crate) fn index_of(cell: &Cell, kind: Kind) -> WaveletIndex {
    if kind == Kind::Scaling {
        WaveletIndex::scaling(cell.patch)
    } else {
        WaveletIndex {
            patch: cell.patch,
            level: cell.level as i8,
            k1: cell.k1,
            k2: cell.k2,
            kind,
        }
    }
}

fn wavelet_energy(y: &[f64; 4]) -> f64 {
    y[1] * y[1] + y[2] * y[2] + y[3] * y[3]
}

/// Cells evaluated by one pass and the positions of its frontier cells.
struct Pass {
    out: Vec<(Cell, [f64; 4])>,
    leaves: Vec<usize>,
}

/// Evaluates all roots, descending below every cell whose wavelet energy is
/// at least `tau`.
fn evaluate_pass(ev: &Evaluator<'_>, max_level: u8, tau: f64) -> Pass {
    let descend = |y: &[f64; 4], _: &Cell| wavelet_energy(y) >= tau && wavelet_energy(y) > 0.0;
    let parts: Vec<Pass> = ev
        .roots()
        .into_par_iter()
        .map(|st| {
            let mut out = Vec::new();
            let mut leaves = Vec::new();
            ev.subtree(st, max_level, &descend, &mut out, Some(&mut leaves));
            Pass { out, leaves }
        })
        .collect();
    let mut pass = Pass {
        out: Vec::with_capacity(parts.iter().map(|p| p.out.len()).sum()),
        leaves: Vec::new(),
    };
    for p in parts {
        let offset = pass.out.len();
        pass.leaves.extend(p.leaves.iter().map(|i| i + offset));
        pass.out.extend(p.out);
    }
    pass
}

/// Threshold for the next pass: the frontier energy above which refining
/// removes the excess `err2 − target2`, assuming refinement leaves a quarter
/// of a cell's energy below it. At most half of the current threshold.
fn next_threshold(refinable: &mut [f64], err2: f64, target2: f64, tau: f64) -> f64 {
    refinable.sort_by(|a, b| b.total_cmp(a));
    let need = err2 - target2;
    let mut acc = 0.0;
    let mut cut = refinable.last().copied().unwrap_or(0.0);
    for e in refinable.iter() {
        acc += 0.75 * e;
        if acc >= need {
            cut = *e;
            break;
        }
    }
    cut.min(0.5 * tau)
}

/// `(½I − K) v` to accuracy `δ` with targets resolved up to `max_level`.
///
/// Target cells are refined while a finer source cell is nearby and, beyond
/// that, while their coefficients carry at least a threshold energy. The
/// threshold is lowered between passes until the energy at the frontier,
/// taken as the estimate of everything below it, is at most `δ`.
pub fn apply(surface: &Surface, cache: &EntryCache, v: &CoeffVector, delta: f64, max_level: u8) -> Result<ApplyOutput> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    for idx in v.support() {
        surface.patch(idx.patch as usize)?;
    }
    let norm = v.norm();
    if delta >= K_NORM_BOUND * norm {
        return Ok(ApplyOutput {
            w: v.scaled(0.5),
            error_estimate: K_NORM_BOUND * norm,
            cells: 0,
        });
    }
    let sources = Sources::new(surface, &group_by_cell(surface, v));
    let ev = Evaluator {
        surface,
        cache,
        sources: &sources,
    };
    let target2 = delta * delta;
    let mut tau = f64::INFINITY;
    loop {
        let pass = evaluate_pass(&ev, max_level, tau);
        let energy = |i: &usize| wavelet_energy(&pass.out[*i].1);
        let err2: f64 = pass.leaves.iter().map(energy).sum();
        if err2 <= target2 {
            let cells = pass.out.len();
            return Ok(ApplyOutput {
                w: assemble_output(v, pass.out),
                error_estimate: err2.sqrt(),
                cells,
            });
        }
        let mut refinable: Vec<f64> = pass
            .leaves
            .iter()
            .filter(|i| pass.out[**i].0.level < max_level)
            .map(energy)
            .filter(|e| *e > 0.0)
            .collect();
        let capped = err2 - refinable.iter().sum::<f64>();
        if refinable.is_empty() || capped > target2 {
            return Err(Error::Certification {
                reason: format!("operator tail {:.3e} above {delta:.3e} at the level cap {max_level}", err2.sqrt()),
                level_norms: Vec::new(),
            });
        }
        let largest = refinable.iter().copied().fold(0.0, f64::max);
        tau = next_threshold(&mut refinable, err2, target2, tau.min(2.0 * largest));
    }
}

fn assemble_output(v: &CoeffVector, computed: Vec<(Cell, [f64; 4])>) -> CoeffVector {
    let mut w = v.scaled(0.5);
    let mut sorted = computed;
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for (cell, y) in &sorted {
        let first = if cell.level == 0 { 0 } else { 1 };
        for kind in &Kind::ALL[first..] {
            let val = y[kind.slot()];
            if val != 0.0 {
                w.add(index_of(cell, *kind), val);
            }
        }
    }
    w
}

/// `(½I − K)` restricted to the indices of a tree, evaluated with the fast
/// far field; used as the GMRES operator on large trees.
pub struct TreeOperator<'a> {
    surface: &'a Surface,
    cache: &'a EntryCache,
    indices: Vec<WaveletIndex>,
    cells: FxHashSet<Cell>,
    position: FxHashMap<WaveletIndex, usize>,
}

impl<'a> TreeOperator<'a> {
    pub fn new(surface: &'a Surface, cache: &'a EntryCache, tree: &Tree) -> Self {
        let indices: Vec<WaveletIndex> = tree.iter().copied().collect();
        let cells = indices.iter().map(|i| i.cell()).collect();
        let position = indices.iter().enumerate().map(|(k, i)| (*i, k)).collect();
        Self {
            surface,
            cache,
            indices,
            cells,
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[WaveletIndex] {
        &self.indices
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let v: CoeffVector = self
            .indices
            .iter()
            .zip(x)
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (*i, *v))
            .collect();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = 0.5 * xi;
        }
        if v.is_empty() {
            return;
        }
        let sources = Sources::new(self.surface, &group_by_cell(self.surface, &v));
        let ev = Evaluator {
            surface: self.surface,
            cache: self.cache,
            sources: &sources,
        };
        for (cell, contrib) in ev.on_cells(&self.cells) {
            let first = if cell.level == 0 { 0 } else { 1 };
            for kind in &Kind::ALL[first..] {
                if let Some(k) = self.position.get(&index_of(&cell, *kind)) {
                    y[*k] += contrib[kind.slot()];
                }
            }
        }
    }
}
