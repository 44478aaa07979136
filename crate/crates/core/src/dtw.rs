//! Cost matrices, Bellman-recursion DTW, the difference operator and the
//! test-statistic direction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentMatrix;
use crate::error::{Error, Result};
use crate::series::TimeSeriesPair;

/// Squared-difference cost matrix `[(x_i - y_j)^2]`.
pub fn cost_matrix(pair: &TimeSeriesPair) -> DMatrix<f64> {
    cost_matrix_of(pair.x(), pair.y())
}

pub fn cost_matrix_of(x: &[f64], y: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), y.len(), |i, j| (x[i] - y[j]).powi(2))
}

/// Predecessor taken by the Bellman recursion when entering a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Start,
    Diagonal,
    Up,
    Left,
}

impl Step {
    /// The predecessor of `(i, j)` along this step.
    pub fn predecessor(self, i: usize, j: usize) -> Option<(usize, usize)> {
        match self {
            Step::Start => None,
            Step::Diagonal => Some((i - 1, j - 1)),
            Step::Up => Some((i - 1, j)),
            Step::Left => Some((i, j - 1)),
        }
    }
}

/// Full accumulated-cost table of the DTW recursion together with the argmin
/// choice of every cell. Ties prefer the diagonal, then `(i-1, j)`, then
/// `(i, j-1)`.
#[derive(Clone, Debug)]
pub struct BellmanTable {
    n: usize,
    m: usize,
    acc: Vec<f64>,
    choice: Vec<Step>,
}

impl BellmanTable {
    pub fn build(x: &[f64], y: &[f64]) -> Self {
        let (n, m) = (x.len(), y.len());
        assert!(n > 0 && m > 0, "DTW needs non-empty series");
        let mut acc = vec![0.0; n * m];
        let mut choice = vec![Step::Start; n * m];
        for i in 0..n {
            for j in 0..m {
                let c = (x[i] - y[j]).powi(2);
                let idx = i * m + j;
                if i == 0 && j == 0 {
                    acc[idx] = c;
                    continue;
                }
                let mut best = (f64::INFINITY, Step::Start);
                for step in [Step::Diagonal, Step::Up, Step::Left] {
                    let valid = match step {
                        Step::Diagonal => i > 0 && j > 0,
                        Step::Up => i > 0,
                        Step::Left => j > 0,
                        Step::Start => false,
                    };
                    if !valid {
                        continue;
                    }
                    let (pi, pj) = step.predecessor(i, j).unwrap();
                    let v = acc[pi * m + pj];
                    if v < best.0 {
                        best = (v, step);
                    }
                }
                acc[idx] = c + best.0;
                choice[idx] = best.1;
            }
        }
        Self { n, m, acc, choice }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Optimal loss of the sub-problem `x[..=i]`, `y[..=j]`.
    pub fn loss(&self, i: usize, j: usize) -> f64 {
        self.acc[i * self.m + j]
    }

    pub fn choice(&self, i: usize, j: usize) -> Step {
        self.choice[i * self.m + j]
    }

    /// Optimal alignment of the sub-problem ending at `(i, j)`.
    pub fn path_to(&self, i: usize, j: usize) -> AlignmentMatrix {
        let mut path = vec![(i, j)];
        let (mut ci, mut cj) = (i, j);
        while let Some(p) = self.choice(ci, cj).predecessor(ci, cj) {
            path.push(p);
            (ci, cj) = p;
        }
        path.reverse();
        AlignmentMatrix::from_path_unchecked(i + 1, j + 1, path)
    }
}

/// Optimal alignment and DTW distance of an observed pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    pub alignment: AlignmentMatrix,
    pub distance: f64,
}

pub fn dtw(pair: &TimeSeriesPair) -> DtwResult {
    dtw_series(pair.x(), pair.y())
}

pub fn dtw_series(x: &[f64], y: &[f64]) -> DtwResult {
    let table = BellmanTable::build(x, y);
    let (n, m) = (x.len(), y.len());
    DtwResult { alignment: table.path_to(n - 1, m - 1), distance: table.loss(n - 1, m - 1) }
}

/// The pairwise difference operator applied to `(x; y)`: entry `i * m + j`
/// holds `x_i - y_j`. Equivalent to multiplying by [`omega_matrix`] without
/// materializing it.
pub fn omega_apply(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * y.len());
    for &xi in x {
        out.extend(y.iter().map(|&yj| xi - yj));
    }
    out
}

/// Columns touched by row `r` of the difference operator: `(+1 column, -1 column)`.
pub fn omega_row(r: usize, n: usize, m: usize) -> (usize, usize) {
    debug_assert!(r < n * m);
    (r / m, n + r % m)
}

/// Materialized `(n m) x (n + m)` difference operator.
pub fn omega_matrix(n: usize, m: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(n * m, n + m);
    for r in 0..n * m {
        let (plus, minus) = omega_row(r, n, m);
        omega[(r, plus)] = 1.0;
        omega[(r, minus)] = -1.0;
    }
    omega
}

/// `sign(x)` with `sign(0) = 0`. Zero is detected by exact comparison.
pub fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Signs of `x_i - y_j` on the path cells, zero elsewhere (length `n m`).
pub fn sign_vector(alignment: &AlignmentMatrix, pair: &TimeSeriesPair) -> Vec<i8> {
    sign_vector_of(alignment, pair.x(), pair.y())
}

pub fn sign_vector_of(alignment: &AlignmentMatrix, x: &[f64], y: &[f64]) -> Vec<i8> {
    let mut s = vec![0i8; alignment.n() * alignment.m()];
    for &(i, j) in alignment.cells() {
        s[alignment.vec_index(i, j)] = sign(x[i] - y[j]);
    }
    s
}

/// Direction `eta` of the test statistic together with the sign vector it
/// was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDirection {
    pub eta: Vec<f64>,
    pub s_hat: Vec<i8>,
}

/// `eta = (M_vec' diag(s) Omega)'`: every path cell `(i, j)` adds `s_ij` to
/// `eta_i` and subtracts it from `eta_{n + j}`.
pub fn test_direction(alignment: &AlignmentMatrix, s_hat: &[i8]) -> Result<TestDirection> {
    let (n, m) = (alignment.n(), alignment.m());
    if s_hat.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, actual: s_hat.len() });
    }
    let mut eta = vec![0.0; n + m];
    for &(i, j) in alignment.cells() {
        let s = f64::from(s_hat[alignment.vec_index(i, j)]);
        eta[i] += s;
        eta[n + j] -= s;
    }
    Ok(TestDirection { eta, s_hat: s_hat.to_vec() })
}

/// `T = eta' (x; y)`.
pub fn test_statistic(dir: &TestDirection, pair: &TimeSeriesPair) -> Result<f64> {
    let data = pair.stacked();
    if dir.eta.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), actual: dir.eta.len() });
    }
    Ok(dir.eta.iter().zip(&data).map(|(e, v)| e * v).sum())
}

/// Direction of the observed DTW alignment of `pair`.
pub fn observed_direction(pair: &TimeSeriesPair) -> (DtwResult, TestDirection) {
    let result = dtw(pair);
    let s = sign_vector(&result.alignment, pair);
    let dir = test_direction(&result.alignment, &s).expect("sign vector sized from the alignment");
    (result, dir)
}
