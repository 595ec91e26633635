use std::collections::btree_map;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::index::{Kind, WaveletIndex};
use super::tree::Tree;
use crate::error::{Error, Result};

const HEADER: &str = "# patch level k1 k2 kind value";

/// Finitely supported coefficient vector. Zeros are never stored, and
/// iteration follows the index order, which keeps every reduction
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoeffVector {
    entries: BTreeMap<WaveletIndex, f64>,
}

impl CoeffVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: &WaveletIndex) -> f64 {
        self.entries.get(idx).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, idx: WaveletIndex, value: f64) {
        if value == 0.0 {
            self.entries.remove(&idx);
        } else {
            self.entries.insert(idx, value);
        }
    }

    pub fn add(&mut self, idx: WaveletIndex, value: f64) {
        if value == 0.0 {
            return;
        }
        match self.entries.entry(idx) {
            btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            btree_map::Entry::Occupied(mut e) => {
                let v = *e.get() + value;
                if v == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WaveletIndex, &f64)> + '_ {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &WaveletIndex> + '_ {
        self.entries.keys()
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = Self::new();
        for (k, v) in &self.entries {
            out.set(*k, a * v);
        }
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add(*k, a * v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(k, v)| v * large.get(k))
            .sum()
    }

    /// Restriction to the indices of a tree.
    pub fn restrict(&self, tree: &Tree) -> Self {
        self.entries
            .iter()
            .filter(|(k, _)| tree.contains(k))
            .map(|(k, v)| (*k, *v))
            .collect()
    }

    pub fn support_in(&self, tree: &Tree) -> bool {
        self.entries.keys().all(|k| tree.contains(k))
    }

    /// Sum of squares per level; entry 0 holds the scaling part and entry
    /// `j + 1` the wavelets of level `j`.
    pub fn level_norms(&self) -> Vec<f64> {
        let mut sq: Vec<f64> = Vec::new();
        for (k, v) in &self.entries {
            let slot = (k.level + 1) as usize;
            if sq.len() <= slot {
                sq.resize(slot + 1, 0.0);
            }
            sq[slot] += v * v;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn max_level(&self) -> Option<i8> {
        self.entries.keys().map(|k| k.level).max()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{HEADER}")?;
        for (k, v) in &self.entries {
            writeln!(w, "{k} {v:e}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Self::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                line: n + 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(parse_err("expected 6 fields"));
            }
            let patch: u16 = f[0].parse().map_err(|_| parse_err("bad patch"))?;
            let level: i8 = f[1].parse().map_err(|_| parse_err("bad level"))?;
            let k1: u32 = f[2].parse().map_err(|_| parse_err("bad k1"))?;
            let k2: u32 = f[3].parse().map_err(|_| parse_err("bad k2"))?;
            let kind: Kind = f[4].parse().map_err(|_| parse_err("bad kind"))?;
            let value: f64 = f[5].parse().map_err(|_| parse_err("bad value"))?;
            let idx = if kind == Kind::Scaling {
                if level != -1 || k1 != 0 || k2 != 0 {
                    return Err(parse_err("scaling index must be at level -1, position (0, 0)"));
                }
                WaveletIndex::scaling(patch)
            } else {
                if level < 0 {
                    return Err(parse_err("negative wavelet level"));
                }
                WaveletIndex::wavelet(patch, level as u8, k1, k2, kind)
                    .map_err(|e| parse_err(&e.to_string()))?
            };
            out.add(idx, value);
        }
        Ok(out)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_from(s.as_bytes())
    }
}

impl FromIterator<(WaveletIndex, f64)> for CoeffVector {
    fn from_iter<I: IntoIterator<Item = (WaveletIndex, f64)>>(iter: I) -> Self {
        let mut out = Self::new();
        for (k, v) in iter {
            out.add(k, v);
        }
        out
    }
}

impl<'a> IntoIterator for &'a CoeffVector {
    type Item = (&'a WaveletIndex, &'a f64);
    type IntoIter = btree_map::Iter<'a, WaveletIndex, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(level: u8, k1: u32, k2: u32, kind: Kind) -> WaveletIndex {
        WaveletIndex::wavelet(0, level, k1, k2, kind).unwrap()
    }

    #[test]
    fn no_zeros_stored() {
        let mut v = CoeffVector::new();
        v.set(w(1, 0, 1, Kind::Diag), 2.0);
        v.add(w(1, 0, 1, Kind::Diag), -2.0);
        v.set(WaveletIndex::scaling(0), 0.0);
        assert!(v.is_empty());
        v.set(WaveletIndex::scaling(0), 3.0);
        v.set(w(0, 0, 0, Kind::Horiz), 4.0);
        assert_eq!(v.norm(), 5.0);
        assert_eq!(v.support().count(), 2);
    }

    #[test]
    fn text_round_trip() {
        let v: CoeffVector = vec![
            (WaveletIndex::scaling(2), 0.125),
            (w(3, 7, 1, Kind::Vert), -1.0e-17),
            (w(0, 0, 0, Kind::Diag), std::f64::consts::PI),
        ]
        .into_iter()
        .collect();
        let text = v.to_text();
        assert!(text.starts_with(HEADER));
        assert_eq!(CoeffVector::from_text(&text).unwrap(), v);
        assert!(CoeffVector::from_text("0 -1 0 0 horiz 1.0").is_err());
    }

    #[test]
    fn level_norms_group_by_level() {
        let v: CoeffVector = vec![
            (WaveletIndex::scaling(0), 1.0),
            (w(1, 0, 0, Kind::Horiz), 3.0),
            (w(1, 1, 0, Kind::Vert), 4.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(v.level_norms(), vec![1.0, 0.0, 5.0]);
    }
}
