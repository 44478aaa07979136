//! Warping paths and their enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alignment set [`enumerate_alignments`] will materialize.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// A monotone, continuous warping path between series of lengths `n` and
/// `m`, stored as its cells. Cells are zero-based `(i, j)` pairs, so the
/// path runs from `(0, 0)` to `(n - 1, m - 1)`.
///
/// The dense view is the binary `n x m` matrix with a one on every path cell;
/// its vectorization concatenates rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlignmentMatrix {
    n: usize,
    m: usize,
    path: Vec<(usize, usize)>,
}

impl AlignmentMatrix {
    /// Validates endpoints and that every step is one of (1,0), (0,1), (1,1).
    pub fn new(n: usize, m: usize, path: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("alignment dimensions must be positive".into()));
        }
        match (path.first(), path.last()) {
            (Some(&(0, 0)), Some(&last)) if last == (n - 1, m - 1) => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "path must start at (0, 0) and end at ({}, {})",
                    n - 1,
                    m - 1
                )))
            }
        }
        for w in path.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (1, 0) | (0, 1) | (1, 1)) {
                return Err(Error::InvalidInput(format!(
                    "invalid step {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { n, m, path })
    }

    pub(crate) fn from_path_unchecked(n: usize, m: usize, path: Vec<(usize, usize)>) -> Self {
        debug_assert!(Self::new(n, m, path.clone()).is_ok());
        Self { n, m, path }
    }

    /// The one-cell alignment of two length-1 series.
    pub fn single() -> Self {
        Self { n: 1, m: 1, path: vec![(0, 0)] }
    }

    /// The main diagonal of an `n x n` problem.
    pub fn diagonal(n: usize) -> Self {
        Self::from_path_unchecked(n, n, (0..n).map(|i| (i, i)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    /// Row-major index of cell `(i, j)` in the vectorized matrix.
    pub fn vec_index(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        // Paths are sorted in both coordinates.
        self.path.binary_search(&(i, j)).is_ok()
    }

    /// Append cell `(i, j)` and grow the problem to `(i + 1) x (j + 1)`.
    /// The cell must be a valid step from the current end.
    pub fn extended(&self, i: usize, j: usize) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push((i, j));
        Self::from_path_unchecked(i + 1, j + 1, path)
    }

    /// Binary `n x m` matrix, row by row.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.m]; self.n];
        for &(i, j) in &self.path {
            dense[i][j] = 1;
        }
        dense
    }

    /// Row-concatenated vectorization of length `n * m`.
    pub fn vectorized(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n * self.m];
        for &(i, j) in &self.path {
            v[self.vec_index(i, j)] = 1.0;
        }
        v
    }

    /// Frobenius inner product with an `n x m` row-major matrix.
    pub fn inner(&self, matrix: &[f64]) -> f64 {
        self.path.iter().map(|&(i, j)| matrix[self.vec_index(i, j)]).sum()
    }
}

impl fmt::Display for AlignmentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.path.iter().map(|(i, j)| format!("({i},{j})")).collect();
        write!(f, "{}", cells.join(" "))
    }
}

/// Delannoy number D(a, b), saturating at `u128::MAX`.
pub fn delannoy(a: usize, b: usize) -> u128 {
    let mut row = vec![1u128; b + 1];
    for _ in 0..a {
        let mut prev_diag = row[0];
        for j in 1..=b {
            let up = row[j];
            row[j] = row[j].saturating_add(row[j - 1]).saturating_add(prev_diag);
            prev_diag = up;
        }
    }
    row[b]
}

/// All alignments of an `n x m` problem, in lexicographic path order.
/// There are `delannoy(n - 1, m - 1)` of them.
pub fn enumerate_alignments(n: usize, m: usize) -> Result<Vec<AlignmentMatrix>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("alignment dimensions must be positive".into()));
    }
    let count = delannoy(n - 1, m - 1);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLargeToEnumerate { n, m, count, limit: ENUMERATION_LIMIT });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut path = vec![(0, 0)];
    walk(n, m, &mut path, &mut out);
    Ok(out)
}

fn walk(n: usize, m: usize, path: &mut Vec<(usize, usize)>, out: &mut Vec<AlignmentMatrix>) {
    let (i, j) = *path.last().unwrap();
    if (i, j) == (n - 1, m - 1) {
        out.push(AlignmentMatrix::from_path_unchecked(n, m, path.clone()));
        return;
    }
    // (i, j+1) < (i+1, j) < (i+1, j+1) lexicographically.
    for (ni, nj) in [(i, j + 1), (i + 1, j), (i + 1, j + 1)] {
        if ni < n && nj < m {
            path.push((ni, nj));
            walk(n, m, path, out);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delannoy_recurrence(a: usize, b: usize) -> u128 {
        if a == 0 || b == 0 {
            1
        } else {
            delannoy_recurrence(a - 1, b) + delannoy_recurrence(a, b - 1) + delannoy_recurrence(a - 1, b - 1)
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_alignments(2, 2).unwrap().len(), 3);
        assert_eq!(enumerate_alignments(1, 5).unwrap().len(), 1);
        assert_eq!(enumerate_alignments(3, 3).unwrap().len(), 13);
        assert_eq!(enumerate_alignments(4, 4).unwrap().len(), 63);
        for n in 1..=6 {
            for m in 1..=6 {
                assert_eq!(
                    enumerate_alignments(n, m).unwrap().len() as u128,
                    delannoy_recurrence(n - 1, m - 1)
                );
            }
        }
    }

    #[test]
    fn horizontal_path_for_single_row() {
        let all = enumerate_alignments(1, 5).unwrap();
        assert_eq!(all[0].cells(), &[(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]);
    }

    #[test]
    fn enumerated_paths_are_valid_and_distinct() {
        let all = enumerate_alignments(4, 5).unwrap();
        for a in &all {
            assert!(AlignmentMatrix::new(a.n(), a.m(), a.cells().to_vec()).is_ok());
        }
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        assert_eq!(sorted, all);
    }

    #[test]
    fn size_guard() {
        assert_eq!(delannoy(12, 12), 251_595_969);
        let err = enumerate_alignments(13, 13).unwrap_err();
        assert!(matches!(err, Error::TooLargeToEnumerate { .. }));
    }

    #[test]
    fn rejects_invalid_paths() {
        assert!(AlignmentMatrix::new(2, 2, vec![(0, 0), (1, 1)]).is_ok());
        assert!(AlignmentMatrix::new(2, 2, vec![(0, 0), (1, 0)]).is_err());
        assert!(AlignmentMatrix::new(2, 2, vec![(0, 1), (1, 1)]).is_err());
        assert!(AlignmentMatrix::new(3, 3, vec![(0, 0), (2, 2)]).is_err());
        assert!(AlignmentMatrix::new(2, 2, vec![(0, 0), (0, 0), (1, 1)]).is_err());
        assert!(AlignmentMatrix::new(2, 2, vec![(0, 0), (0, 1), (0, 0), (1, 1)]).is_err());
    }

    #[test]
    fn dense_and_vectorized_views() {
        let a = AlignmentMatrix::new(2, 3, vec![(0, 0), (0, 1), (1, 2)]).unwrap();
        assert_eq!(a.to_dense(), vec![vec![1, 1, 0], vec![0, 0, 1]]);
        assert_eq!(a.vectorized(), vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(a.contains(0, 1) && !a.contains(1, 1));
    }
}
