use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::kernel::{perpendicular_integral, solid_angle_unchecked, triangle_angle};
use super::quadrature::{gauss_legendre, QuadConfig};
use crate::basis::{Cell, CoeffVector, Kind, Tree, WaveletIndex};
use crate::error::{Error, Result};
use crate::surface::{Point, Surface};

/// Interaction of the four Haar shapes of a target cell with the four of a
/// source cell, without amplitudes: `block[a][b] = Σ s_a(q) s_b(q') K(T_q, S_q')`
/// where `K(T, S) = ∫_T ∫_S k(x, y) dσ(y) dσ(x)` and kinds are indexed by
/// [`Kind::slot`].
pub type Block = [[f64; 4]; 4];

/// Planar parallelogram `o + s e1 + t e2`, `(s, t) ∈ [0, 1]²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Para {
    pub o: Point,
    pub e1: Point,
    pub e2: Point,
}

fn single_axis(v: &Point) -> Option<usize> {
    let nz: Vec<usize> = (0..3).filter(|&i| v[i] != 0.0).collect();
    (nz.len() == 1).then(|| nz[0])
}

impl Para {
    pub fn corners(&self) -> [Point; 4] {
        [self.o, self.o + self.e1, self.o + self.e1 + self.e2, self.o + self.e2]
    }

    pub fn area(&self) -> f64 {
        self.e1.cross(&self.e2).norm()
    }

    pub fn diam(&self) -> f64 {
        (self.e1 + self.e2).norm().max((self.e1 - self.e2).norm())
    }

    pub fn aabb(&self) -> (Point, Point) {
        let c = self.corners();
        let mut lo = c[0];
        let mut hi = c[0];
        for p in &c[1..] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn quadrant(&self, q: usize) -> Para {
        let h1 = self.e1 * 0.5;
        let h2 = self.e2 * 0.5;
        let mut o = self.o;
        if q & 1 == 1 {
            o += h1;
        }
        if q & 2 == 2 {
            o += h2;
        }
        Para { o, e1: h1, e2: h2 }
    }

    /// `(axis of e1, axis of e2)` when both edges are coordinate aligned.
    fn axes(&self) -> Option<(usize, usize)> {
        Some((single_axis(&self.e1)?, single_axis(&self.e2)?))
    }

    /// Interval of coordinate `axis` covered by the parallelogram.
    fn range(&self, axis: usize) -> [f64; 2] {
        let (lo, hi) = self.aabb();
        [lo[axis], hi[axis]]
    }
}

/// Lower bound for the distance of two parallelograms (exact for
/// coordinate-aligned rectangles).
pub(crate) fn box_distance(a: &Para, b: &Para) -> f64 {
    let (alo, ahi) = a.aabb();
    let (blo, bhi) = b.aabb();
    let mut d2 = 0.0;
    for i in 0..3 {
        let gap = (blo[i] - ahi[i]).max(alo[i] - bhi[i]).max(0.0);
        d2 += gap * gap;
    }
    d2.sqrt()
}

/// Closed form for perpendicular coordinate-aligned rectangles.
fn perpendicular(t: &Para, s: &Para) -> Option<f64> {
    let (t1, t2) = t.axes()?;
    let (s1, s2) = s.axes()?;
    if t1 == t2 || s1 == s2 {
        return None;
    }
    let c = 3 - t1 - t2; // normal axis of the target
    let b = 3 - s1 - s2; // normal axis of the source
    if b == c {
        return None;
    }
    let a = 3 - b - c; // shared axis
    let normal_s = s.e1.cross(&s.e2);
    let sigma = normal_s[b].signum();
    let b_s = s.o[b];
    let c_t = t.o[c];
    let tb = t.range(b);
    let sc = s.range(c);
    let raw = perpendicular_integral(
        [tb[0] - b_s, tb[1] - b_s],
        [c_t - sc[1], c_t - sc[0]],
        t.range(a),
        s.range(a),
    );
    Some(sigma * raw / (4.0 * PI))
}

/// `-1/(4π) Σ w Ω_S(x)` over a tensor Gauss rule on the target.
fn gauss_pair(t: &Para, s: &Para, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let quad = s.corners();
    let mut acc = 0.0;
    for (x1, w1) in rule.nodes.iter().zip(&rule.weights) {
        for (x2, w2) in rule.nodes.iter().zip(&rule.weights) {
            let x = t.o + t.e1 * *x1 + t.e2 * *x2;
            acc += w1 * w2 * solid_angle_unchecked(&quad, &x);
        }
    }
    -acc * t.area() / (4.0 * PI)
}

/// `∫_T ∫_S k(x, y) dσ(y) dσ(x)` for non-coplanar parallelograms, together
/// with the largest Gauss order used.
pub(crate) fn pair_integral(t: &Para, s: &Para, cfg: &QuadConfig, depth: usize) -> (f64, usize) {
    let d = box_distance(t, s);
    let dt = t.diam();
    if dt <= cfg.admissibility * d {
        let order = cfg.order_for_ratio(d / dt);
        return (gauss_pair(t, s, order), order);
    }
    let ds = s.diam();
    let comparable = dt.max(ds) <= 4.0 * dt.min(ds);
    if comparable || depth >= cfg.near_depth {
        if let Some(v) = perpendicular(t, s) {
            return (v, 0);
        }
        if depth >= cfg.near_depth {
            return (gauss_pair(t, s, cfg.outer_order), cfg.outer_order);
        }
    }
    let mut total = 0.0;
    let mut order = 0;
    if dt >= ds {
        for q in 0..4 {
            let (v, o) = pair_integral(&t.quadrant(q), s, cfg, depth + 1);
            total += v;
            order = order.max(o);
        }
    } else {
        for q in 0..4 {
            let (v, o) = pair_integral(t, &s.quadrant(q), cfg, depth + 1);
            total += v;
            order = order.max(o);
        }
    }
    (total, order)
}

/// Quadrant interaction matrix of two well-separated cells, sharing the
/// nine grid vectors of the source between its four quadrants.
fn far_quadrants(t: &Para, s: &Para, order: usize) -> [[f64; 4]; 4] {
    let rule = gauss_legendre(order);
    let grid: [Point; 9] = std::array::from_fn(|k| {
        let (i, j) = (k % 3, k / 3);
        s.o + s.e1 * (0.5 * i as f64) + s.e2 * (0.5 * j as f64)
    });
    let mut m = [[0.0; 4]; 4];
    for (q, row) in m.iter_mut().enumerate() {
        let tq = t.quadrant(q);
        let scale = -tq.area() / (4.0 * PI);
        let mut acc = [0.0; 4];
        for (x1, w1) in rule.nodes.iter().zip(&rule.weights) {
            for (x2, w2) in rule.nodes.iter().zip(&rule.weights) {
                let x = tq.o + tq.e1 * *x1 + tq.e2 * *x2;
                let r: [Point; 9] = std::array::from_fn(|k| grid[k] - x);
                let n: [f64; 9] = std::array::from_fn(|k| r[k].norm());
                let w = w1 * w2;
                for (qs, a) in acc.iter_mut().enumerate() {
                    let (i, j) = (qs & 1, qs >> 1);
                    let c0 = i + 3 * j;
                    let (c1, c2, c3) = (c0 + 1, c0 + 4, c0 + 3);
                    *a += w
                        * (triangle_angle(&r[c0], &r[c1], &r[c2], n[c0], n[c1], n[c2])
                            + triangle_angle(&r[c0], &r[c2], &r[c3], n[c0], n[c2], n[c3]));
                }
            }
        }
        for qs in 0..4 {
            row[qs] = scale * acc[qs];
        }
    }
    m
}

/// Block of a target and a source cell given in relative coordinates.
pub(crate) fn compute_block(t: &Para, s: &Para, cfg: &QuadConfig) -> (Block, usize) {
    let d = box_distance(t, s);
    let (m, order) = if 0.5 * t.diam() <= cfg.admissibility * d {
        let order = cfg.order_for_ratio(2.0 * d / t.diam());
        (far_quadrants(t, s, order), order)
    } else {
        let mut m = [[0.0; 4]; 4];
        let mut order = 0;
        let sq: [Para; 4] = std::array::from_fn(|q| s.quadrant(q));
        for (q, row) in m.iter_mut().enumerate() {
            let tq = t.quadrant(q);
            for (qs, v) in row.iter_mut().enumerate() {
                let (val, o) = pair_integral(&tq, &sq[qs], cfg, 1);
                *v = val;
                order = order.max(o);
            }
        }
        (m, order)
    };
    let mut block = [[0.0; 4]; 4];
    for a in Kind::ALL {
        let sa = a.signs();
        for b in Kind::ALL {
            let sb = b.signs();
            let mut acc = 0.0;
            for q in 0..4 {
                for qs in 0..4 {
                    acc += sa[q] * sb[qs] * m[q][qs];
                }
            }
            block[a.slot()][b.slot()] = acc;
        }
    }
    (block, order)
}

pub(crate) fn cell_para(surface: &Surface, cell: &Cell) -> Para {
    let p = &surface.patches()[cell.patch as usize];
    let h = cell.side();
    Para {
        o: p.corners[0] + p.edge_s * (cell.k1 as f64 * h) + p.edge_t * (cell.k2 as f64 * h),
        e1: p.edge_s * h,
        e2: p.edge_t * h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BlockKey {
    frame_t: u16,
    frame_s: u16,
    level_t: u8,
    level_s: u8,
    offset: [u64; 3],
}

#[derive(Debug, Clone, Copy)]
struct CachedBlock {
    block: Block,
    order: u8,
}

/// Memoized blocks keyed by geometry: the frames (edge vectors) of the two
/// patches, both levels and the offset between the cell origins. Values are
/// computed in coordinates relative to the source origin, so a key always
/// maps to bit-identical numbers.
pub struct EntryCache {
    cfg: QuadConfig,
    frames: Vec<u16>,
    fingerprint: u64,
    map: RwLock<FxHashMap<BlockKey, CachedBlock>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

const DUMP_MAGIC: &[u8; 8] = b"AWBEMC01";

impl EntryCache {
    pub fn new(surface: &Surface, cfg: QuadConfig) -> Self {
        let mut seen: Vec<(Point, Point)> = Vec::new();
        let frames = surface
            .patches()
            .iter()
            .map(|p| {
                let key = (p.edge_s, p.edge_t);
                match seen.iter().position(|k| *k == key) {
                    Some(i) => i as u16,
                    None => {
                        seen.push(key);
                        (seen.len() - 1) as u16
                    }
                }
            })
            .collect();
        Self {
            cfg,
            frames,
            fingerprint: fingerprint(surface, &cfg),
            map: RwLock::new(FxHashMap::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &QuadConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn clear(&self) {
        self.map.write().expect("cache lock").clear();
    }

    fn key(&self, surface: &Surface, t: &Cell, s: &Cell) -> (BlockKey, Para, Para) {
        let pt = cell_para(surface, t);
        let ps = cell_para(surface, s);
        let off = pt.o - ps.o;
        let key = BlockKey {
            frame_t: self.frames[t.patch as usize],
            frame_s: self.frames[s.patch as usize],
            level_t: t.level,
            level_s: s.level,
            offset: [off.x.to_bits(), off.y.to_bits(), off.z.to_bits()],
        };
        let rel_t = Para { o: off, ..pt };
        let rel_s = Para { o: Point::zeros(), ..ps };
        (key, rel_t, rel_s)
    }

    /// Block for a pair of cells; zero for coplanar patches.
    pub fn block(&self, surface: &Surface, t: &Cell, s: &Cell) -> Block {
        self.block_with_order(surface, t, s).0
    }

    /// Block and the largest Gauss order that entered it (0 when only closed
    /// forms were used).
    pub fn block_with_order(&self, surface: &Surface, t: &Cell, s: &Cell) -> (Block, u8) {
        if surface.coplanar(t.patch as usize, s.patch as usize) {
            return ([[0.0; 4]; 4], 0);
        }
        let (key, rt, rs) = self.key(surface, t, s);
        if let Some(c) = self.map.read().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return (c.block, c.order);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let (block, order) = compute_block(&rt, &rs, &self.cfg);
        let order = order as u8;
        self.map
            .write()
            .expect("cache lock")
            .insert(key, CachedBlock { block, order });
        (block, order)
    }

    /// Blocks for many pairs. Missing blocks are computed in parallel and
    /// inserted afterwards; the result does not depend on the thread count.
    pub fn blocks(&self, surface: &Surface, pairs: &[(Cell, Cell)]) -> Vec<Block> {
        let mut out = vec![[[0.0; 4]; 4]; pairs.len()];
        let mut missing: Vec<(usize, BlockKey, Para, Para)> = Vec::new();
        {
            let map = self.map.read().expect("cache lock");
            for (i, (t, s)) in pairs.iter().enumerate() {
                if surface.coplanar(t.patch as usize, s.patch as usize) {
                    continue;
                }
                let (key, rt, rs) = self.key(surface, t, s);
                match map.get(&key) {
                    Some(c) => out[i] = c.block,
                    None => missing.push((i, key, rt, rs)),
                }
            }
        }
        self.hits
            .fetch_add((pairs.len() - missing.len()) as u64, Ordering::Relaxed);
        if missing.is_empty() {
            return out;
        }
        // Several pairs may share a key; compute each key once.
        let mut unique: FxHashMap<BlockKey, usize> = FxHashMap::default();
        let mut jobs: Vec<(BlockKey, Para, Para)> = Vec::new();
        for (_, key, rt, rs) in &missing {
            unique.entry(*key).or_insert_with(|| {
                jobs.push((*key, *rt, *rs));
                jobs.len() - 1
            });
        }
        self.misses.fetch_add(jobs.len() as u64, Ordering::Relaxed);
        let cfg = self.cfg;
        let computed: Vec<(Block, usize)> = jobs
            .par_iter()
            .map(|(_, rt, rs)| compute_block(rt, rs, &cfg))
            .collect();
        {
            let mut map = self.map.write().expect("cache lock");
            for ((key, _, _), (block, order)) in jobs.iter().zip(&computed) {
                map.insert(
                    *key,
                    CachedBlock {
                        block: *block,
                        order: *order as u8,
                    },
                );
            }
        }
        for (i, key, _, _) in &missing {
            out[*i] = computed[unique[key]].0;
        }
        out
    }

    /// Binary dump: magic, fingerprint, count, then fixed-width little-endian
    /// records sorted by key.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        let map = self.map.read().expect("cache lock");
        let mut entries: Vec<(&BlockKey, &CachedBlock)> = map.iter().collect();
        entries.sort_by_key(|(k, _)| (k.frame_t, k.frame_s, k.level_t, k.level_s, k.offset));
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&self.fingerprint.to_le_bytes())?;
        w.write_all(&(entries.len() as u64).to_le_bytes())?;
        for (k, v) in entries {
            w.write_all(&k.frame_t.to_le_bytes())?;
            w.write_all(&k.frame_s.to_le_bytes())?;
            w.write_all(&[k.level_t, k.level_s, v.order])?;
            for o in k.offset {
                w.write_all(&o.to_le_bytes())?;
            }
            for row in &v.block {
                for x in row {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Loads a dump written for the same surface and quadrature settings.
    pub fn load<R: Read>(&self, mut r: R) -> Result<usize> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Parse { line: 0, msg: "not an entry cache dump".into() });
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        if u64::from_le_bytes(b8) != self.fingerprint {
            return Err(Error::InvalidArgument(
                "cache dump was written for a different surface or quadrature configuration".into(),
            ));
        }
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut rec = [0u8; 2 + 2 + 3 + 24 + 128];
        let mut map = self.map.write().expect("cache lock");
        for _ in 0..count {
            r.read_exact(&mut rec)?;
            let u16_at = |i: usize| u16::from_le_bytes([rec[i], rec[i + 1]]);
            let u64_at = |i: usize| u64::from_le_bytes(rec[i..i + 8].try_into().expect("8 bytes"));
            let key = BlockKey {
                frame_t: u16_at(0),
                frame_s: u16_at(2),
                level_t: rec[4],
                level_s: rec[5],
                offset: [u64_at(7), u64_at(15), u64_at(23)],
            };
            let mut block = [[0.0; 4]; 4];
            for (a, row) in block.iter_mut().enumerate() {
                for (b, x) in row.iter_mut().enumerate() {
                    *x = f64::from_bits(u64_at(31 + 8 * (4 * a + b)));
                }
            }
            map.insert(key, CachedBlock { block, order: rec[6] });
        }
        Ok(count)
    }
}

fn fingerprint(surface: &Surface, cfg: &QuadConfig) -> u64 {
    // FNV-1a over the patch geometry and the quadrature settings.
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for p in surface.patches() {
        for c in &p.corners {
            for i in 0..3 {
                eat(c[i].to_bits());
            }
        }
    }
    eat(cfg.outer_order as u64);
    eat(cfg.near_depth as u64);
    eat(cfg.admissibility.to_bits());
    eat(cfg.order_tol.to_bits());
    h
}

/// `⟨Kψ_λ', ψ_λ⟩`; exactly zero for coplanar patches.
pub fn galerkin_entry_k(surface: &Surface, target: &WaveletIndex, source: &WaveletIndex, cache: &EntryCache) -> Result<f64> {
    let pt = surface.patch(target.patch as usize)?;
    let ps = surface.patch(source.patch as usize)?;
    let block = cache.block(surface, &target.cell(), &source.cell());
    Ok(target.amplitude(pt.jacobian) * source.amplitude(ps.jacobian) * block[target.kind.slot()][source.kind.slot()])
}

/// Dense matrix of `½I − K` on the indices of a tree, in tree order.
pub fn assemble_dense(surface: &Surface, tree: &Tree, cache: &EntryCache) -> DMatrix<f64> {
    let idx: Vec<WaveletIndex> = tree.iter().copied().collect();
    let cells: Vec<Cell> = {
        let mut c: Vec<Cell> = idx.iter().map(|i| i.cell()).collect();
        c.dedup();
        c
    };
    let pos: BTreeMap<Cell, usize> = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let pairs: Vec<(Cell, Cell)> = cells
        .iter()
        .flat_map(|t| cells.iter().map(move |s| (*t, *s)))
        .collect();
    let blocks = cache.blocks(surface, &pairs);
    let n = idx.len();
    let amp: Vec<f64> = idx
        .iter()
        .map(|i| i.amplitude(surface.patches()[i.patch as usize].jacobian))
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (r, ti) in idx.iter().enumerate() {
        let ct = pos[&ti.cell()];
        for (c, si) in idx.iter().enumerate() {
            let cs = pos[&si.cell()];
            let b = &blocks[ct * cells.len() + cs];
            m[(r, c)] = -amp[r] * amp[c] * b[ti.kind.slot()][si.kind.slot()];
        }
        m[(r, r)] += 0.5;
    }
    m
}

/// `(½I − K) v` restricted to the indices of a tree, with all entries.
pub fn apply_dense(surface: &Surface, tree: &Tree, v: &CoeffVector, cache: &EntryCache) -> Result<CoeffVector> {
    if !v.support_in(tree) {
        return Err(Error::InvalidArgument("vector support is not contained in the tree".into()));
    }
    let mut src: BTreeMap<Cell, [f64; 4]> = BTreeMap::new();
    for (i, c) in v.iter() {
        let amp = i.amplitude(surface.patches()[i.patch as usize].jacobian);
        src.entry(i.cell()).or_insert([0.0; 4])[i.kind.slot()] += amp * c;
    }
    let mut tgt: BTreeMap<Cell, Vec<WaveletIndex>> = BTreeMap::new();
    for i in tree.iter() {
        tgt.entry(i.cell()).or_default().push(*i);
    }
    let src_cells: Vec<(Cell, [f64; 4])> = src.into_iter().collect();
    let mut out = CoeffVector::new();
    for (ct, indices) in &tgt {
        let pairs: Vec<(Cell, Cell)> = src_cells.iter().map(|(cs, _)| (*ct, *cs)).collect();
        let blocks = cache.blocks(surface, &pairs);
        let mut acc = [0.0; 4];
        for (b, (_, sv)) in blocks.iter().zip(&src_cells) {
            for (a, slot) in acc.iter_mut().enumerate() {
                *slot += b[a][0] * sv[0] + b[a][1] * sv[1] + b[a][2] * sv[2] + b[a][3] * sv[3];
            }
        }
        for i in indices {
            let amp = i.amplitude(surface.patches()[i.patch as usize].jacobian);
            out.set(*i, 0.5 * v.get(i) - amp * acc[i.kind.slot()]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{make_cube, make_fichera};

    #[test]
    fn coplanar_blocks_vanish() {
        let f = make_fichera();
        let cache = EntryCache::new(&f, QuadConfig::default());
        let a = Cell::new(3, 2, 1, 1);
        let b = Cell::new(4, 1, 0, 1);
        assert_eq!(cache.block(&f, &a, &b), [[0.0; 4]; 4]);
        assert!(cache.is_empty());
    }

    #[test]
    fn cache_returns_identical_values() {
        let cube = make_cube();
        let cache = EntryCache::new(&cube, QuadConfig::default());
        let t = Cell::new(5, 2, 1, 3);
        let s = Cell::new(1, 3, 7, 2);
        let first = cache.block(&cube, &t, &s);
        let second = cache.block(&cube, &t, &s);
        assert_eq!(first, second);
        assert_eq!(cache.stats(), (1, 1));
        let fresh = EntryCache::new(&cube, QuadConfig::default());
        assert_eq!(fresh.blocks(&cube, &[(t, s)])[0], first);
    }

    #[test]
    fn dump_round_trip() {
        let cube = make_cube();
        let cache = EntryCache::new(&cube, QuadConfig::default());
        cache.block(&cube, &Cell::new(0, 1, 0, 1), &Cell::new(2, 1, 1, 1));
        cache.block(&cube, &Cell::new(4, 0, 0, 0), &Cell::new(5, 2, 3, 1));
        let mut buf = Vec::new();
        cache.dump(&mut buf).unwrap();
        let other = EntryCache::new(&cube, QuadConfig::default());
        assert_eq!(other.load(buf.as_slice()).unwrap(), 2);
        assert_eq!(
            other.block(&cube, &Cell::new(4, 0, 0, 0), &Cell::new(5, 2, 3, 1)),
            cache.block(&cube, &Cell::new(4, 0, 0, 0), &Cell::new(5, 2, 3, 1))
        );
        let f = make_fichera();
        let wrong = EntryCache::new(&f, QuadConfig::default());
        assert!(wrong.load(buf.as_slice()).is_err());
    }

    #[test]
    fn closed_form_agrees_with_refined_gauss() {
        // A pair that is near but not touching: both routes apply.
        let t = Para {
            o: Point::new(0.0, 0.1, 0.0),
            e1: Point::new(0.5, 0.0, 0.0),
            e2: Point::new(0.0, 0.5, 0.0),
        };
        let s = Para {
            o: Point::new(0.2, 0.0, 0.05),
            e1: Point::new(0.0, 0.0, 0.5),
            e2: Point::new(0.5, 0.0, 0.0),
        };
        let closed = perpendicular(&t, &s).unwrap();
        let cfg = QuadConfig {
            outer_order: 24,
            ..QuadConfig::default()
        };
        let mut gauss = 0.0;
        let n = 16;
        for i in 0..n {
            for j in 0..n {
                let piece = Para {
                    o: t.o + t.e1 * (i as f64 / n as f64) + t.e2 * (j as f64 / n as f64),
                    e1: t.e1 / n as f64,
                    e2: t.e2 / n as f64,
                };
                gauss += gauss_pair(&piece, &s, cfg.outer_order);
            }
        }
        assert!((closed - gauss).abs() < 1e-9 * closed.abs(), "{closed} {gauss}");
    }
}
