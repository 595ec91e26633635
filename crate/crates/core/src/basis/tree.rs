use std::collections::BTreeSet;

use super::index::{Kind, WaveletIndex};

/// Parent-closed index set that contains the scaling index of every patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    num_patches: usize,
    indices: BTreeSet<WaveletIndex>,
}

impl Tree {
    /// The scaling indices of all patches.
    pub fn roots(num_patches: usize) -> Self {
        Self {
            num_patches,
            indices: (0..num_patches as u16).map(WaveletIndex::scaling).collect(),
        }
    }

    /// All indices up to and including wavelet level `max_level`; `None`
    /// gives the roots only.
    pub fn uniform(num_patches: usize, max_level: Option<u8>) -> Self {
        let mut tree = Self::roots(num_patches);
        if let Some(max_level) = max_level {
            for patch in 0..num_patches as u16 {
                for level in 0..=max_level {
                    let n = 1u32 << level;
                    for k2 in 0..n {
                        for k1 in 0..n {
                            for kind in Kind::WAVELETS {
                                tree.indices.insert(WaveletIndex {
                                    patch,
                                    level: level as i8,
                                    k1,
                                    k2,
                                    kind,
                                });
                            }
                        }
                    }
                }
            }
        }
        tree
    }

    /// Number of indices of `uniform(num_patches, Some(max_level))`.
    pub fn uniform_size(num_patches: usize, max_level: u8) -> usize {
        num_patches * (1usize << (2 * (max_level as usize + 1)))
    }

    pub fn num_patches(&self) -> usize {
        self.num_patches
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, idx: &WaveletIndex) -> bool {
        self.indices.contains(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = &WaveletIndex> + '_ {
        self.indices.iter()
    }

    /// Inserts an index together with its missing ancestors. Returns the
    /// number of new indices.
    pub fn insert(&mut self, idx: WaveletIndex) -> usize {
        let mut added = 0;
        let mut cur = Some(idx);
        while let Some(i) = cur {
            if !self.indices.insert(i) {
                break;
            }
            added += 1;
            cur = i.parent();
        }
        added
    }

    pub fn union(&mut self, other: &Tree) {
        for idx in other.iter() {
            self.insert(*idx);
        }
    }

    pub fn max_level(&self) -> i8 {
        self.indices.iter().map(|i| i.level).max().unwrap_or(-1)
    }

    /// Checks roots and parent closure.
    pub fn is_valid(&self) -> bool {
        (0..self.num_patches as u16).all(|p| self.indices.contains(&WaveletIndex::scaling(p)))
            && self.indices.iter().all(|i| {
                (i.patch as usize) < self.num_patches
                    && i.parent().map_or(true, |p| self.indices.contains(&p))
            })
    }

    pub fn as_set(&self) -> &BTreeSet<WaveletIndex> {
        &self.indices
    }
}

/// Smallest tree containing `indices`, all their ancestors and all roots.
pub fn tree_complete<'a, I>(indices: I, num_patches: usize) -> Tree
where
    I: IntoIterator<Item = &'a WaveletIndex>,
{
    let mut tree = Tree::roots(num_patches);
    for idx in indices {
        tree.insert(*idx);
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_examples() {
        let t = tree_complete(std::iter::empty(), 6);
        assert_eq!(t, Tree::roots(6));
        let deep = WaveletIndex::wavelet(2, 3, 5, 1, Kind::Vert).unwrap();
        let t = tree_complete([deep].iter(), 6);
        assert_eq!(t.len(), 6 + 4);
        assert!(t.is_valid());
        let again = tree_complete(t.iter(), 6);
        assert_eq!(again, t);
    }

    #[test]
    fn uniform_sizes() {
        for (level, size) in [(0u8, 24usize), (1, 96), (2, 384)] {
            let t = Tree::uniform(6, Some(level));
            assert_eq!(t.len(), size);
            assert_eq!(Tree::uniform_size(6, level), size);
            assert!(t.is_valid());
        }
        assert_eq!(Tree::uniform_size(12, 3), 3072);
    }
}
