//! Symmetric parameter-pair tables.

/// Storage for quantities indexed by an unordered parameter pair `(i, j)`.
///
/// Only the `p(p+1)/2` upper-triangle entries are kept; `get(i, j)`
/// canonicalizes the indices, so the table is symmetric in `(i, j)` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPairs<M> {
    dim: usize,
    entries: Vec<M>,
}

impl<M> SymmetricPairs<M> {
    /// Builds a table by calling `f` on every canonical pair `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> M) -> Self {
        let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Number of parameters `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        assert!(b < self.dim, "pair index ({i}, {j}) out of range");
        // Row-major upper triangle: rows before `a` hold dim - r entries each.
        a * self.dim - a * (a.saturating_sub(1)) / 2 - a + b
    }

    /// Entry for the unordered pair `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &M {
        &self.entries[self.index(i, j)]
    }

    /// Mutable entry for the unordered pair `(i, j)`.
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut M {
        let idx = self.index(i, j);
        &mut self.entries[idx]
    }

    /// Iterates the canonical pairs `(i, j)` with `i <= j`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, &M)> {
        let dim = self.dim;
        (0..dim)
            .flat_map(move |i| (i..dim).map(move |j| (i, j)))
            .zip(&self.entries)
            .map(|((i, j), m)| (i, j, m))
    }
}
