//! Fast evaluation of `K v` in Haar coordinates.
//!
//! Source cells are grouped into the quadtree of their ancestors. Each
//! cluster carries interpolation weights at `P × P` Chebyshev nodes, both for
//! its own wavelets and for its whole subtree. Target cells are visited top
//! down with a list of source items that are not yet separated from them:
//! separated clusters are converted into values of the far field at the
//! target nodes (passed to children by interpolation). Nearby sources coarser
//! than the target are cut into constant pieces at the level of the target,
//! so exact cached blocks are only needed between neighbours of equal size
//! and for finer sources.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::basis::{Cell, Kind};
use crate::discretize::{box_distance, cell_para, EntryCache, Para};
use crate::surface::{Point, Surface};

/// Interpolation nodes per direction.
pub const P: usize = 4;
const P2: usize = P * P;
/// Pairs with `max(diam) ≤ ETA · dist` use the interpolated far field.
pub const ETA: f64 = 1.0;

struct Tables {
    nodes: [f64; P],
    /// `transfer[o][i][m] = ℓ_i((ξ_m + o)/2)`: parent basis at child nodes.
    transfer: [[[f64; P]; P]; 2],
    /// `half_avg[o][i]`: mean of `ℓ_i` over `[o/2, (o+1)/2]`.
    half_avg: [[f64; P]; 2],
}

fn lagrange(nodes: &[f64; P], i: usize, x: f64) -> f64 {
    let mut v = 1.0;
    for (m, xm) in nodes.iter().enumerate() {
        if m != i {
            v *= (x - xm) / (nodes[i] - xm);
        }
    }
    v
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let nodes: [f64; P] = std::array::from_fn(|i| 0.5 * (1.0 - ((2 * i + 1) as f64 * PI / (2 * P) as f64).cos()));
        let mut transfer = [[[0.0; P]; P]; 2];
        let mut half_avg = [[0.0; P]; 2];
        let rule = crate::discretize::gauss_legendre(P);
        for o in 0..2 {
            for i in 0..P {
                for m in 0..P {
                    transfer[o][i][m] = lagrange(&nodes, i, (nodes[m] + o as f64) * 0.5);
                }
                half_avg[o][i] = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * lagrange(&nodes, i, (x + o as f64) * 0.5))
                    .sum();
            }
        }
        Tables {
            nodes,
            transfer,
            half_avg,
        }
    })
}

fn node_points(p: &Para) -> [Point; P2] {
    let t = tables();
    std::array::from_fn(|g| p.o + p.e1 * t.nodes[g % P] + p.e2 * t.nodes[g / P])
}

/// Weights of a piecewise constant function with quadrant values `vals` on a
/// cell of area `area`: `W_g = ∫ f ℓ_g`.
fn quadrant_weights(vals: &[f64; 4], area: f64) -> [f64; P2] {
    let t = tables();
    let mut w = [0.0; P2];
    for (q, v) in vals.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let (a1, a2) = (&t.half_avg[q & 1], &t.half_avg[q >> 1]);
        for j in 0..P {
            for i in 0..P {
                w[i + P * j] += 0.25 * area * v * a1[i] * a2[j];
            }
        }
    }
    w
}

/// `∫_{quadrant q} Σ_g L_g ℓ_g` for the four quadrants.
fn quadrant_integrals(local: &[f64; P2], area: f64) -> [f64; 4] {
    let t = tables();
    std::array::from_fn(|q| {
        let (a1, a2) = (&t.half_avg[q & 1], &t.half_avg[q >> 1]);
        let mut acc = 0.0;
        for j in 0..P {
            for i in 0..P {
                acc += local[i + P * j] * a1[i] * a2[j];
            }
        }
        0.25 * area * acc
    })
}

/// Child weights re-expressed at the parent nodes.
fn m2m(parent: &mut [f64; P2], child: &[f64; P2], quadrant: usize) {
    let t = tables();
    let (t1, t2) = (&t.transfer[quadrant & 1], &t.transfer[quadrant >> 1]);
    let mut tmp = [0.0; P2];
    for j2 in 0..P {
        for i in 0..P {
            tmp[i + P * j2] = (0..P).map(|m| t1[i][m] * child[m + P * j2]).sum();
        }
    }
    for j in 0..P {
        for i in 0..P {
            parent[i + P * j] += (0..P).map(|m| t2[j][m] * tmp[i + P * m]).sum::<f64>();
        }
    }
}

/// Parent far-field values interpolated at the nodes of a child.
fn l2l(parent: &[f64; P2], quadrant: usize) -> [f64; P2] {
    let t = tables();
    let (t1, t2) = (&t.transfer[quadrant & 1], &t.transfer[quadrant >> 1]);
    let mut tmp = [0.0; P2];
    for j in 0..P {
        for m in 0..P {
            tmp[m + P * j] = (0..P).map(|i| t1[i][m] * parent[i + P * j]).sum();
        }
    }
    let mut out = [0.0; P2];
    for m2 in 0..P {
        for m in 0..P {
            out[m + P * m2] = (0..P).map(|j| t2[j][m2] * tmp[m + P * j]).sum();
        }
    }
    out
}

struct Cluster {
    sigma: [f64; 4],
    has_own: bool,
    w_own: [f64; P2],
    w_full: [f64; P2],
    children: Vec<Cell>,
    para: Para,
    diam: f64,
    nodes: [Point; P2],
    normal: Point,
}

impl Cluster {
    /// Density of the own wavelets on each quadrant.
    fn quadrant_values(&self) -> [f64; 4] {
        std::array::from_fn(|q| Kind::ALL.iter().map(|k| self.sigma[k.slot()] * k.signs()[q]).sum())
    }
}

/// Source quadtree with interpolation weights.
pub(crate) struct Sources {
    clusters: FxHashMap<Cell, Cluster>,
    roots: Vec<Cell>,
}

pub(crate) fn cell_amplitude(surface: &Surface, cell: &Cell) -> f64 {
    (cell.level as f64).exp2() / surface.patches()[cell.patch as usize].jacobian.sqrt()
}

impl Sources {
    /// `cells` holds amplitude-weighted coefficients by kind slot.
    pub fn new(surface: &Surface, cells: &[(Cell, [f64; 4])]) -> Self {
        let mut clusters: FxHashMap<Cell, Cluster> = FxHashMap::default();
        let make = |c: &Cell| {
            let para = cell_para(surface, c);
            let n = para.e1.cross(&para.e2);
            Cluster {
                sigma: [0.0; 4],
                has_own: false,
                w_own: [0.0; P2],
                w_full: [0.0; P2],
                children: Vec::new(),
                para,
                diam: para.diam(),
                nodes: node_points(&para),
                normal: n / n.norm(),
            }
        };
        for (c, s) in cells {
            if s.iter().all(|v| *v == 0.0) {
                continue;
            }
            let mut cur = *c;
            let entry = clusters.entry(cur).or_insert_with(|| make(&cur));
            entry.has_own = true;
            for (a, b) in entry.sigma.iter_mut().zip(s) {
                *a += b;
            }
            while let Some(p) = cur.parent() {
                let exists = clusters.contains_key(&p);
                let pe = clusters.entry(p).or_insert_with(|| make(&p));
                if !pe.children.contains(&cur) {
                    pe.children.push(cur);
                }
                if exists {
                    break;
                }
                cur = p;
            }
        }
        let mut order: Vec<Cell> = clusters.keys().copied().collect();
        order.sort_by(|a, b| b.level.cmp(&a.level).then(a.cmp(b)));
        for c in &order {
            let (own, children) = {
                let cl = clusters.get_mut(c).expect("cluster");
                cl.children.sort();
                if cl.has_own {
                    cl.w_own = quadrant_weights(&cl.quadrant_values(), cl.para.area());
                }
                (cl.w_own, cl.children.clone())
            };
            let mut full = own;
            for ch in &children {
                let cw = clusters[ch].w_full;
                m2m(&mut full, &cw, ch.quadrant());
            }
            clusters.get_mut(c).expect("cluster").w_full = full;
        }
        let mut roots: Vec<Cell> = clusters.keys().filter(|c| c.level == 0).copied().collect();
        roots.sort();
        Self { clusters, roots }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Item {
    Full(Cell),
    Own(Cell),
    /// Constant density on a cell, split off a coarser source.
    Piece(Cell, f64),
}

/// State handed from a target cell to its children. Sources in `deferred`
/// are finer than the parent and were left for the children, which report
/// their integral back.
#[derive(Clone)]
pub(crate) struct TargetState {
    pub cell: Cell,
    local: [f64; P2],
    items: Vec<Item>,
    deferred: Vec<Item>,
}

/// Result of evaluating one target cell before its children are known.
pub(crate) struct Evaluated {
    /// Near and far integrals against the Haar functions of the cell.
    partial: [f64; 4],
    /// Integral over the cell of the field of the sources deferred to it.
    from_deferred: f64,
    amp: f64,
    level: u8,
    local: [f64; P2],
    items: Vec<Item>,
    deferred: Vec<Item>,
}

impl Evaluated {
    /// Finer sources are not separated from the cell, so its coefficients
    /// need the integrals over its children.
    pub fn needs_children(&self) -> bool {
        !self.deferred.is_empty()
    }

    /// Contribution of `−K v` by slot and the integral reported to the parent,
    /// given the integrals reported by the children.
    pub fn finish(&self, child: &[f64; 4]) -> ([f64; 4], f64) {
        let mut y = [0.0; 4];
        let first = if self.level == 0 { 0 } else { 1 };
        for kind in &Kind::ALL[first..] {
            let s = kind.signs();
            let near: f64 = (0..4).map(|q| s[q] * child[q]).sum();
            y[kind.slot()] = -self.amp * (self.partial[kind.slot()] + near);
        }
        (y, self.from_deferred + child.iter().sum::<f64>())
    }
}

pub(crate) struct Evaluator<'a> {
    pub surface: &'a Surface,
    pub cache: &'a EntryCache,
    pub sources: &'a Sources,
}

fn m2l(local: &mut [f64; P2], targets: &[Point; P2], sources: &[Point; P2], normal: &Point, w: &[f64; P2]) {
    for (l, x) in local.iter_mut().zip(targets) {
        let mut acc = 0.0;
        for (wg, y) in w.iter().zip(sources) {
            let d = x - y;
            let r2 = d.norm_squared();
            acc += wg * normal.dot(&d) / (r2 * r2.sqrt());
        }
        *l += acc / (4.0 * PI);
    }
}

/// Accumulators of one evaluation, split by whether a source came from the
/// deferred list of the parent.
struct Sums {
    acc: [[f64; 4]; 2],
    local: [[f64; P2]; 2],
}

impl<'a> Evaluator<'a> {
    /// Root states of every patch that sees at least one source.
    pub fn roots(&self) -> Vec<TargetState> {
        (0..self.surface.num_patches())
            .map(|p| {
                let items = self
                    .sources
                    .roots
                    .iter()
                    .filter(|r| !self.surface.coplanar(p, r.patch as usize))
                    .map(|r| Item::Full(*r))
                    .collect();
                TargetState {
                    cell: Cell::root(p as u16),
                    local: [0.0; P2],
                    items,
                    deferred: Vec::new(),
                }
            })
            .collect()
    }

    /// Evaluates one cell. With `exact`, finer sources are integrated with
    /// exact blocks instead of being deferred to the children.
    pub fn evaluate(&self, state: &TargetState, exact: bool) -> Evaluated {
        let c = state.cell;
        let pc = cell_para(self.surface, &c);
        let dc = pc.diam();
        let targets = node_points(&pc);
        let separated = |p: &Para, d: f64| dc.max(d) <= ETA * box_distance(&pc, p);
        let mut sums = Sums {
            acc: [[0.0; 4]; 2],
            local: [[0.0; P2]; 2],
        };
        let mut pass = Vec::new();
        let mut deferred = Vec::new();
        let mut pieces: FxHashMap<(Cell, usize), f64> = FxHashMap::default();
        let mut work: Vec<(Item, usize)> = state.items.iter().map(|i| (*i, 0)).collect();
        work.extend(state.deferred.iter().map(|i| (*i, 1)));
        while let Some((item, f)) = work.pop() {
            match item {
                Item::Full(b) => {
                    let cl = &self.sources.clusters[&b];
                    if separated(&cl.para, cl.diam) {
                        m2l(&mut sums.local[f], &targets, &cl.nodes, &cl.normal, &cl.w_full);
                    } else if b.level > c.level && !exact {
                        deferred.push(item);
                    } else {
                        if cl.has_own {
                            work.push((Item::Own(b), f));
                        }
                        work.extend(cl.children.iter().map(|ch| (Item::Full(*ch), f)));
                    }
                }
                Item::Own(b) => {
                    let cl = &self.sources.clusters[&b];
                    if separated(&cl.para, cl.diam) {
                        m2l(&mut sums.local[f], &targets, &cl.nodes, &cl.normal, &cl.w_own);
                    } else if b.level < c.level {
                        let vals = cl.quadrant_values();
                        for (q, ch) in b.children().iter().enumerate() {
                            if vals[q] != 0.0 {
                                work.push((Item::Piece(*ch, vals[q]), f));
                            }
                        }
                    } else if b.level > c.level && !exact {
                        deferred.push(item);
                    } else {
                        let u = self.cache.block(self.surface, &c, &b);
                        for (a, out) in sums.acc[f].iter_mut().enumerate() {
                            *out += (0..4).map(|k| u[a][k] * cl.sigma[k]).sum::<f64>();
                        }
                        pass.push(item);
                    }
                }
                Item::Piece(d, val) => {
                    let pd = cell_para(self.surface, &d);
                    if separated(&pd, pd.diam()) {
                        let n = pd.e1.cross(&pd.e2);
                        let w = quadrant_weights(&[val; 4], pd.area());
                        m2l(&mut sums.local[f], &targets, &node_points(&pd), &(n / n.norm()), &w);
                    } else if d.level < c.level {
                        work.extend(d.children().iter().map(|ch| (Item::Piece(*ch, val), f)));
                    } else {
                        *pieces.entry((d, f)).or_insert(0.0) += val;
                    }
                }
            }
        }
        let mut merged: Vec<((Cell, usize), f64)> = pieces.into_iter().collect();
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        for ((d, f), val) in merged {
            let u = self.cache.block(self.surface, &c, &d);
            for (a, out) in sums.acc[f].iter_mut().enumerate() {
                *out += u[a][0] * val;
            }
            pass.push(Item::Piece(d, val));
        }
        let area = pc.area();
        let mut partial = [0.0; 4];
        let mut from_deferred = 0.0;
        let mut local = state.local;
        for f in 0..2 {
            let qi = quadrant_integrals(&sums.local[f], area);
            for kind in &Kind::ALL {
                let s = kind.signs();
                let far: f64 = (0..4).map(|q| s[q] * qi[q]).sum();
                partial[kind.slot()] += sums.acc[f][kind.slot()] + far;
            }
            if f == 1 {
                from_deferred = sums.acc[1][0] + qi.iter().sum::<f64>();
            }
            for (l, v) in local.iter_mut().zip(&sums.local[f]) {
                *l += v;
            }
        }
        let qi = quadrant_integrals(&state.local, area);
        for kind in &Kind::ALL {
            let s = kind.signs();
            partial[kind.slot()] += (0..4).map(|q| s[q] * qi[q]).sum::<f64>();
        }
        Evaluated {
            partial,
            from_deferred,
            amp: cell_amplitude(self.surface, &c),
            level: c.level,
            local,
            items: pass,
            deferred,
        }
    }

    pub fn children(&self, cell: &Cell, ev: &Evaluated) -> [TargetState; 4] {
        let ch = cell.children();
        std::array::from_fn(|q| TargetState {
            cell: ch[q],
            local: l2l(&ev.local, q),
            items: ev.items.clone(),
            deferred: ev.deferred.clone(),
        })
    }

    /// Evaluates `state` and, below it, every child the cell needs or that
    /// `descend` asks for given the cell's provisional coefficients. Cells
    /// are appended to `out`; positions in `out` of cells without evaluated
    /// children go to `leaves` when given. Returns the integral of the field
    /// of the sources deferred to the cell.
    pub fn subtree<D: Fn(&[f64; 4], &Cell) -> bool>(
        &self,
        state: TargetState,
        max_level: u8,
        descend: &D,
        out: &mut Vec<(Cell, [f64; 4])>,
        mut leaves: Option<&mut Vec<usize>>,
    ) -> f64 {
        let cell = state.cell;
        let at_cap = cell.level >= max_level;
        let ev = self.evaluate(&state, at_cap);
        drop(state);
        let mut child = [0.0; 4];
        let mut descended = false;
        if !at_cap {
            let needs = ev.needs_children();
            let provisional = ev.finish(&[0.0; 4]).0;
            for (q, st) in self.children(&cell, &ev).into_iter().enumerate() {
                if needs || descend(&provisional, &st.cell) {
                    descended = true;
                    child[q] = self.subtree(st, max_level, descend, out, leaves.as_deref_mut());
                }
            }
        }
        let (y, s) = ev.finish(&child);
        if !descended {
            if let Some(l) = leaves {
                l.push(out.len());
            }
        }
        out.push((cell, y));
        s
    }

    /// Evaluates the cells of `targets`, an ancestor-closed set, and returns
    /// their contributions.
    pub fn on_cells(&self, targets: &rustc_hash::FxHashSet<Cell>) -> Vec<(Cell, [f64; 4])> {
        let wanted = |_: &[f64; 4], c: &Cell| targets.contains(c);
        let mut out: Vec<(Cell, [f64; 4])> = self
            .roots()
            .into_par_iter()
            .filter(|r| targets.contains(&r.cell))
            .flat_map_iter(|r| {
                let mut out = Vec::new();
                self.subtree(r, u8::MAX, &wanted, &mut out, None);
                out
            })
            .collect();
        out.retain(|(c, _)| targets.contains(c));
        out
    }
}
