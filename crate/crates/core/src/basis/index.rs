use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::surface::{PatchRect, Surface, SurfacePoint};

/// Shape of a Haar function on its support square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Scaling,
    /// Positive on the left half (small `s`), negative on the right half.
    Horiz,
    /// Positive on the bottom half (small `t`), negative on the top half.
    Vert,
    /// Product of `Horiz` and `Vert`.
    Diag,
}

impl Kind {
    pub const WAVELETS: [Kind; 3] = [Kind::Horiz, Kind::Vert, Kind::Diag];
    pub const ALL: [Kind; 4] = [Kind::Scaling, Kind::Horiz, Kind::Vert, Kind::Diag];

    /// Signs on the quadrants `[lower-left, lower-right, upper-left, upper-right]`.
    #[inline]
    pub const fn signs(self) -> [f64; 4] {
        match self {
            Kind::Scaling => [1.0, 1.0, 1.0, 1.0],
            Kind::Horiz => [1.0, -1.0, 1.0, -1.0],
            Kind::Vert => [1.0, 1.0, -1.0, -1.0],
            Kind::Diag => [1.0, -1.0, -1.0, 1.0],
        }
    }

    #[inline]
    pub const fn slot(self) -> usize {
        match self {
            Kind::Scaling => 0,
            Kind::Horiz => 1,
            Kind::Vert => 2,
            Kind::Diag => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Scaling => "scaling",
            Kind::Horiz => "horiz",
            Kind::Vert => "vert",
            Kind::Diag => "diag",
        }
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(Kind::Scaling),
            "horiz" => Ok(Kind::Horiz),
            "vert" => Ok(Kind::Vert),
            "diag" => Ok(Kind::Diag),
            other => Err(Error::InvalidArgument(format!("unknown wavelet kind '{other}'"))),
        }
    }
}

/// Dyadic square `[k1, k1+1] × [k2, k2+1] · 2^-level` in the parameter domain
/// of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub patch: u16,
    pub level: u8,
    pub k1: u32,
    pub k2: u32,
}

impl Cell {
    pub const fn new(patch: u16, level: u8, k1: u32, k2: u32) -> Self {
        Self { patch, level, k1, k2 }
    }

    pub const fn root(patch: u16) -> Self {
        Self::new(patch, 0, 0, 0)
    }

    #[inline]
    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Quadrants in the order lower-left, lower-right, upper-left, upper-right.
    #[inline]
    pub fn children(&self) -> [Cell; 4] {
        let (l, a, b) = (self.level + 1, 2 * self.k1, 2 * self.k2);
        [
            Cell::new(self.patch, l, a, b),
            Cell::new(self.patch, l, a + 1, b),
            Cell::new(self.patch, l, a, b + 1),
            Cell::new(self.patch, l, a + 1, b + 1),
        ]
    }

    pub fn parent(&self) -> Option<Cell> {
        (self.level > 0).then(|| Cell::new(self.patch, self.level - 1, self.k1 / 2, self.k2 / 2))
    }

    /// Position of this cell among its parent's quadrants.
    #[inline]
    pub fn quadrant(&self) -> usize {
        ((self.k1 & 1) + 2 * (self.k2 & 1)) as usize
    }

    pub fn rect(&self) -> PatchRect {
        let h = self.side();
        PatchRect::new(
            self.patch as usize,
            self.k1 as f64 * h,
            (self.k1 + 1) as f64 * h,
            self.k2 as f64 * h,
            (self.k2 + 1) as f64 * h,
        )
    }

    /// Ancestor at a coarser level.
    pub fn ancestor(&self, level: u8) -> Cell {
        debug_assert!(level <= self.level);
        let d = self.level - level;
        Cell::new(self.patch, level, self.k1 >> d, self.k2 >> d)
    }

    pub fn contains(&self, other: &Cell) -> bool {
        other.patch == self.patch && other.level >= self.level && other.ancestor(self.level) == *self
    }
}

/// Index of an orthonormal Haar function: either the scaling function of a
/// patch (`level == -1`) or a wavelet of the given kind at `(level, k1, k2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WaveletIndex {
    pub patch: u16,
    pub level: i8,
    pub k1: u32,
    pub k2: u32,
    pub kind: Kind,
}

impl WaveletIndex {
    pub const SCALING_LEVEL: i8 = -1;

    pub const fn scaling(patch: u16) -> Self {
        Self {
            patch,
            level: Self::SCALING_LEVEL,
            k1: 0,
            k2: 0,
            kind: Kind::Scaling,
        }
    }

    pub fn wavelet(patch: u16, level: u8, k1: u32, k2: u32, kind: Kind) -> Result<Self> {
        if kind == Kind::Scaling {
            return Err(Error::InvalidArgument("use WaveletIndex::scaling for scaling functions".into()));
        }
        if level > 30 {
            return Err(Error::InvalidArgument(format!("level {level} exceeds the supported maximum 30")));
        }
        let n = 1u64 << level;
        if k1 as u64 >= n || k2 as u64 >= n {
            return Err(Error::InvalidArgument(format!(
                "position ({k1}, {k2}) outside level {level}"
            )));
        }
        Ok(Self {
            patch,
            level: level as i8,
            k1,
            k2,
            kind,
        })
    }

    #[inline]
    pub fn is_scaling(&self) -> bool {
        self.kind == Kind::Scaling
    }

    /// Support square; the scaling function lives on the whole patch.
    #[inline]
    pub fn cell(&self) -> Cell {
        Cell::new(self.patch, self.level.max(0) as u8, self.k1, self.k2)
    }

    /// `2^level / sqrt(jacobian)`, the absolute value on the support.
    #[inline]
    pub fn amplitude(&self, jacobian: f64) -> f64 {
        (self.level.max(0) as f64).exp2() / jacobian.sqrt()
    }

    /// Level used in norm weights; scaling functions count as level 0.
    pub fn weight_level(&self) -> i32 {
        self.level.max(0) as i32
    }

    pub fn children(&self) -> Vec<WaveletIndex> {
        if self.is_scaling() {
            return Kind::WAVELETS
                .iter()
                .map(|&kind| WaveletIndex {
                    patch: self.patch,
                    level: 0,
                    k1: 0,
                    k2: 0,
                    kind,
                })
                .collect();
        }
        self.cell()
            .children()
            .iter()
            .map(|c| WaveletIndex {
                patch: self.patch,
                level: c.level as i8,
                k1: c.k1,
                k2: c.k2,
                kind: self.kind,
            })
            .collect()
    }

    pub fn parent(&self) -> Option<WaveletIndex> {
        match self.level {
            l if l < 0 => None,
            0 => Some(WaveletIndex::scaling(self.patch)),
            l => Some(WaveletIndex {
                patch: self.patch,
                level: l - 1,
                k1: self.k1 / 2,
                k2: self.k2 / 2,
                kind: self.kind,
            }),
        }
    }

    /// Value of the `L2(∂Ω)`-normalized function at a point. Points on other
    /// patches or outside the support give 0. Cells are half-open except at
    /// the far patch boundary.
    pub fn evaluate(&self, surface: &Surface, x: SurfacePoint) -> Result<f64> {
        let patch = surface.patch(self.patch as usize)?;
        if x.patch != self.patch as usize {
            return Ok(0.0);
        }
        let cell = self.cell();
        let n = 1u64 << cell.level;
        let pos = |u: f64| ((u * n as f64).floor() as u64).min(n - 1);
        let (i1, i2) = (pos(x.s), pos(x.t));
        if i1 != cell.k1 as u64 || i2 != cell.k2 as u64 {
            return Ok(0.0);
        }
        let q = {
            let m = 2 * n;
            let right = ((x.s * m as f64).floor() as u64).min(m - 1) & 1;
            let top = ((x.t * m as f64).floor() as u64).min(m - 1) & 1;
            (right + 2 * top) as usize
        };
        Ok(self.kind.signs()[q] * self.amplitude(patch.jacobian))
    }
}

impl fmt::Display for WaveletIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.patch,
            self.level,
            self.k1,
            self.k2,
            self.kind.name()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::make_cube;

    #[test]
    fn scaling_children_and_round_trip() {
        let root = WaveletIndex::scaling(0);
        let kids = root.children();
        assert_eq!(kids.len(), 3);
        let kinds: Vec<_> = kids.iter().map(|k| k.kind).collect();
        assert_eq!(kinds, vec![Kind::Horiz, Kind::Vert, Kind::Diag]);
        for k in &kids {
            assert_eq!((k.level, k.k1, k.k2), (0, 0, 0));
            assert_eq!(k.parent(), Some(root));
        }
        let w = WaveletIndex::wavelet(3, 2, 1, 3, Kind::Horiz).unwrap();
        let kids = w.children();
        assert_eq!(kids.len(), 4);
        for k in &kids {
            assert_eq!(k.level, 3);
            assert!([2, 3].contains(&k.k1) && [6, 7].contains(&k.k2));
            assert_eq!(k.parent(), Some(w));
        }
    }

    #[test]
    fn evaluate_examples() {
        let cube = make_cube();
        let root = WaveletIndex::scaling(1);
        assert_eq!(root.evaluate(&cube, SurfacePoint::new(1, 0.3, 0.9)).unwrap(), 0.5);
        let h = WaveletIndex::wavelet(1, 0, 0, 0, Kind::Horiz).unwrap();
        assert_eq!(h.evaluate(&cube, SurfacePoint::new(1, 0.2, 0.7)).unwrap(), 0.5);
        assert_eq!(h.evaluate(&cube, SurfacePoint::new(1, 0.8, 0.7)).unwrap(), -0.5);
        let v = WaveletIndex::wavelet(1, 0, 0, 0, Kind::Vert).unwrap();
        assert_eq!(v.evaluate(&cube, SurfacePoint::new(1, 0.8, 0.7)).unwrap(), -0.5);
        let w = WaveletIndex::wavelet(1, 2, 0, 0, Kind::Diag).unwrap();
        assert_eq!(w.evaluate(&cube, SurfacePoint::new(1, 0.8, 0.7)).unwrap(), 0.0);
        assert_eq!(w.evaluate(&cube, SurfacePoint::new(1, 0.1, 0.1)).unwrap(), 2.0);
        assert_eq!(w.evaluate(&cube, SurfacePoint::new(2, 0.1, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_positions() {
        assert!(WaveletIndex::wavelet(0, 1, 2, 0, Kind::Diag).is_err());
        assert!(WaveletIndex::wavelet(0, 1, 0, 0, Kind::Scaling).is_err());
    }

    #[test]
    fn cell_relations() {
        let c = Cell::new(0, 3, 5, 6);
        for (q, k) in c.children().iter().enumerate() {
            assert_eq!(k.parent(), Some(c));
            assert_eq!(k.quadrant(), q);
            assert!(c.contains(k));
        }
        assert_eq!(Cell::new(0, 5, 23, 9).ancestor(3), Cell::new(0, 3, 5, 2));
    }
}
