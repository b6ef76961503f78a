//! Lexicographic multi-index bases of the exterior powers of R^n.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};

pub const MAX_DIM: usize = 16;

/// A strictly increasing tuple of coordinate indices, stored as a bitmask.
///
/// Indices are zero-based; `Display` prints them one-based (`e_{12}` for the
/// mask with bits 0 and 1).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(u32);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        let mut prev: Option<usize> = None;
        for &i in indices {
            if i >= MAX_DIM {
                return Err(Error::DimensionTooLarge(i + 1));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(invalid(format!("multi-index {indices:?} is not strictly increasing")));
            }
            prev = Some(i);
            mask |= 1 << i;
        }
        Ok(MultiIndex(mask))
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(1 << i)
    }

    pub fn from_mask(mask: u32) -> Self {
        MultiIndex(mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn grade(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask & (1 << i) != 0)
    }

    pub fn is_disjoint(self, other: MultiIndex) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: MultiIndex) -> MultiIndex {
        MultiIndex(self.0 | other.0)
    }

    pub fn without(self, i: usize) -> MultiIndex {
        MultiIndex(self.0 & !(1 << i))
    }

    /// Shifts every index up by `by` (used to embed space indices into space-time).
    pub fn shifted(self, by: usize) -> MultiIndex {
        MultiIndex(self.0 << by)
    }

    pub fn fits(self, n: usize) -> bool {
        n >= 32 || self.0 >> n == 0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "∅");
        }
        for i in self.indices() {
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

/// Sign of `e_I ∧ e_J` relative to `e_{I∪J}`; zero when the indices overlap.
pub fn wedge_sign(a: MultiIndex, b: MultiIndex) -> f64 {
    if !a.is_disjoint(b) {
        return 0.0;
    }
    let mut inversions = 0u32;
    for j in b.indices() {
        inversions += (a.0 >> (j + 1)).count_ones();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) struct Tables {
    by_grade: Vec<Vec<MultiIndex>>,
    rank: Vec<u32>,
}

static TABLES: [OnceLock<Tables>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];

fn build(n: usize) -> Tables {
    let mut by_grade: Vec<Vec<MultiIndex>> = vec![Vec::new(); n + 1];
    let mut rank = vec![u32::MAX; 1 << n];
    for k in 0..=n {
        let mut current = Vec::with_capacity(k);
        combinations(n, k, 0, &mut current, &mut by_grade[k]);
        for (r, idx) in by_grade[k].iter().enumerate() {
            rank[idx.0 as usize] = r as u32;
        }
    }
    Tables { by_grade, rank }
}

fn combinations(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if current.len() == k {
        out.push(MultiIndex(current.iter().fold(0, |m, &i| m | (1 << i))));
        return;
    }
    for i in start..n {
        if n - i < k - current.len() {
            break;
        }
        current.push(i);
        combinations(n, k, i + 1, current, out);
        current.pop();
    }
}

pub(crate) fn tables(n: usize) -> &'static Tables {
    TABLES[n].get_or_init(|| build(n))
}

pub fn check_dims(n: usize, k: usize) -> Result<()> {
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if k > n {
        return Err(Error::GradeOverflow { grade: k, dim: n });
    }
    Ok(())
}

/// The grade-`k` multi-indices of R^n in lexicographic order.
pub fn basis(n: usize, k: usize) -> &'static [MultiIndex] {
    &tables(n).by_grade[k]
}

/// Position of `idx` in the lexicographic basis of its grade.
pub fn rank(n: usize, idx: MultiIndex) -> usize {
    tables(n).rank[idx.0 as usize] as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let b: Vec<String> = basis(4, 2).iter().map(|i| i.to_string()).collect();
        assert_eq!(b, ["12", "13", "14", "23", "24", "34"]);
        for (r, idx) in basis(5, 3).iter().enumerate() {
            assert_eq!(rank(5, *idx), r);
        }
    }

    #[test]
    fn signs() {
        let e1 = MultiIndex::single(0);
        let e2 = MultiIndex::single(1);
        assert_eq!(wedge_sign(e1, e2), 1.0);
        assert_eq!(wedge_sign(e2, e1), -1.0);
        assert_eq!(wedge_sign(e1, e1), 0.0);
        let e13 = MultiIndex::from_indices(&[0, 2]).unwrap();
        // e2 ∧ e13 = -e123
        assert_eq!(wedge_sign(e2, e13), -1.0);
        assert_eq!(wedge_sign(e13, e2), -1.0);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(MultiIndex::from_indices(&[2, 1]).is_err());
        assert!(MultiIndex::from_indices(&[1, 1]).is_err());
    }
}
