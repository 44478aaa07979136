//! Comparison methods: over-conditioned selective inference, the paired
//! permutation test and data splitting.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::AlignmentMatrix;
use crate::dtw::{dtw_series, sign_vector_of, test_direction, BellmanTable, Step};
use crate::error::{Error, Result};
use crate::inference::{observe, InferenceResult};
use crate::interval::{solve_quadratic_le_zero, IntervalUnion};
use crate::parametric::{DataLine, QuadraticLoss};
use crate::series::TimeSeriesPair;
use crate::truncnorm::log_upper_tail;

/// `v' A v <= 0` for a symmetric `A` over the stacked data `v = (x; y)`,
/// stored sparsely as its non-zero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadraticConstraint {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl QuadraticConstraint {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: BTreeMap::new() }
    }

    /// `L(better) - L(worse) <= 0`, where `L(cells)` is the squared-difference
    /// loss summed over `cells` of an `n x m` cost matrix.
    pub fn loss_difference(n: usize, m: usize, better: &[(usize, usize)], worse: &[(usize, usize)]) -> Self {
        let mut c = Self::zero(n + m);
        c.add_cells(n, better, 1.0);
        c.add_cells(n, worse, -1.0);
        c
    }

    fn add_cells(&mut self, n: usize, cells: &[(usize, usize)], weight: f64) {
        for &(i, j) in cells {
            let (p, q) = (i, n + j);
            for (key, v) in [((p, p), weight), ((q, q), weight), ((p, q), -weight), ((q, p), -weight)] {
                let e = self.entries.entry(key).or_insert(0.0);
                *e += v;
                if *e == 0.0 {
                    self.entries.remove(&key);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.entries.iter()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.dim, self.dim);
        for (&(r, c), &v) in &self.entries {
            a[(r, c)] = v;
        }
        a
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|(&(r, c), &v)| (v - self.entries.get(&(c, r)).copied().unwrap_or(0.0)).abs() <= tol)
    }

    /// `v' A v`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.entries.iter().map(|(&(r, c), &a)| v[r] * a * v[c]).sum()
    }

    /// Restriction to `v = a + b z`: `(b'Ab) z^2 + (2 a'Ab) z + a'Aa`.
    pub fn restrict_to_line(&self, line: &DataLine) -> QuadraticLoss {
        let (a, b) = (&line.a, &line.b);
        let mut out = QuadraticLoss::default();
        for (&(r, c), &v) in &self.entries {
            out.w2 += b[r] * v * b[c];
            out.w1 += 2.0 * a[r] * v * b[c];
            out.w0 += a[r] * v * a[c];
        }
        out
    }

    /// `{ z : (a + b z)' A (a + b z) <= 0 }`.
    pub fn solve_on_line(&self, line: &DataLine) -> IntervalUnion {
        let q = self.restrict_to_line(line);
        solve_quadratic_le_zero(q.w2, q.w1, q.w0)
    }
}

/// Inequalities that keep every Bellman choice of the observed DTW table:
/// at each cell, the loss through the chosen predecessor's optimal path may
/// not exceed the loss through any other predecessor's optimal path.
/// Returned as `((i, j), constraint)` in row-major cell order.
pub fn over_conditioning_constraints(pair: &TimeSeriesPair) -> Vec<((usize, usize), QuadraticConstraint)> {
    let (n, m) = (pair.n(), pair.m());
    let table = BellmanTable::build(pair.x(), pair.y());
    let paths: Vec<AlignmentMatrix> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| table.path_to(i, j)).collect();
    let path = |(i, j): (usize, usize)| paths[i * m + j].cells();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let chosen = table.choice(i, j);
            let Some(best) = chosen.predecessor(i, j) else { continue };
            for step in [Step::Diagonal, Step::Up, Step::Left] {
                let valid = match step {
                    Step::Diagonal => i > 0 && j > 0,
                    Step::Up => i > 0,
                    Step::Left => j > 0,
                    Step::Start => false,
                };
                if !valid || step == chosen {
                    continue;
                }
                let other = step.predecessor(i, j).unwrap();
                out.push(((i, j), QuadraticConstraint::loss_difference(n, m, path(best), path(other))));
            }
        }
    }
    out
}

/// Region of `z` along `line` on which every sub-problem of the DTW table
/// keeps its observed optimal alignment.
pub fn si_dtw_oc_region(pair: &TimeSeriesPair, line: &DataLine) -> IntervalUnion {
    intersect_constraints(over_conditioning_constraints(pair).iter().map(|(_, c)| c), line)
}

fn intersect_constraints<'a>(
    constraints: impl Iterator<Item = &'a QuadraticConstraint>,
    line: &DataLine,
) -> IntervalUnion {
    constraints.fold(IntervalUnion::real_line(), |acc, c| acc.intersect(&c.solve_on_line(line)))
}

/// Selective p-value conditioned on every DTW sub-problem and the signs.
pub fn si_dtw_oc_p_value(pair: &TimeSeriesPair) -> Result<InferenceResult> {
    let selection = observe(pair)?;
    let region = si_dtw_oc_region(pair, &selection.line).intersect(&selection.z2());
    selection.conclude(region)
}

fn path_abs_sum(alignment: &AlignmentMatrix, x: &[f64], y: &[f64]) -> f64 {
    alignment.cells().iter().map(|&(i, j)| (x[i] - y[j]).abs()).sum()
}

/// Paired permutation test: each replicate swaps `(x_i, y_i)` with
/// probability 1/2 independently per index and recomputes the DTW statistic.
/// Returns the fraction of replicates with `T_obs <= T_b`.
pub fn permutation_test(pair: &TimeSeriesPair, replicates: usize, seed: u64) -> Result<f64> {
    let (n, m) = (pair.n(), pair.m());
    if n != m {
        return Err(Error::UnequalLengths { n, m });
    }
    if replicates == 0 {
        return Err(Error::InvalidInput("permutation test needs at least one replicate".into()));
    }
    let (x, y) = (pair.x(), pair.y());
    let t_obs = path_abs_sum(&dtw_series(x, y).alignment, x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xb = x.to_vec();
    let mut yb = y.to_vec();
    let mut hits = 0usize;
    for _ in 0..replicates {
        for i in 0..n {
            if rng.gen::<bool>() {
                (xb[i], yb[i]) = (y[i], x[i]);
            } else {
                (xb[i], yb[i]) = (x[i], y[i]);
            }
        }
        let t_b = path_abs_sum(&dtw_series(&xb, &yb).alignment, &xb, &yb);
        if t_obs <= t_b {
            hits += 1;
        }
    }
    Ok(hits as f64 / replicates as f64)
}

/// Every other element starting at `offset` (0 for odd 1-based positions).
fn every_other(v: &[f64], offset: usize) -> Vec<f64> {
    v.iter().skip(offset).step_by(2).copied().collect()
}

/// Data splitting: the odd-indexed halves select the alignment, the
/// even-indexed halves are tested with a one-sided Gaussian z-test.
///
/// Odd-half cell `(i, j)` maps to even-half cell
/// `(min(i, n_even - 1), min(j, m_even - 1))` (zero-based, i.e. 1-based
/// position `2k - 1` maps to `2k`, clamped), with repeated cells dropped.
/// The statistic is the signed path sum on the even halves, and its variance
/// comes from the even-index sub-blocks of the covariances.
pub fn data_splitting_test(pair: &TimeSeriesPair) -> Result<f64> {
    let (n, m) = (pair.n(), pair.m());
    if n < 2 || m < 2 {
        return Err(Error::InvalidInput(format!(
            "data splitting needs both series of length >= 2 (n = {n}, m = {m})"
        )));
    }
    let (x_sel, y_sel) = (every_other(pair.x(), 0), every_other(pair.y(), 0));
    let (x_inf, y_inf) = (every_other(pair.x(), 1), every_other(pair.y(), 1));
    let (ne, me) = (x_inf.len(), y_inf.len());

    let selected = dtw_series(&x_sel, &y_sel).alignment;
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(selected.len());
    for &(i, j) in selected.cells() {
        let cell = (i.min(ne - 1), j.min(me - 1));
        if cells.last() != Some(&cell) {
            cells.push(cell);
        }
    }
    let mapped = AlignmentMatrix::new(ne, me, cells)?;
    let s = sign_vector_of(&mapped, &x_inf, &y_inf);
    let dir = test_direction(&mapped, &s)?;
    let data: Vec<f64> = x_inf.iter().chain(&y_inf).copied().collect();
    let stat: f64 = dir.eta.iter().zip(&data).map(|(e, v)| e * v).sum();

    let sub = |sigma: &DMatrix<f64>, len: usize| DMatrix::from_fn(len, len, |r, c| sigma[(2 * r + 1, 2 * c + 1)]);
    let (sx, sy) = (sub(pair.sigma_x(), ne), sub(pair.sigma_y(), me));
    let ex = nalgebra::DVector::from_column_slice(&dir.eta[..ne]);
    let ey = nalgebra::DVector::from_column_slice(&dir.eta[ne..]);
    let variance = ex.dot(&(&sx * &ex)) + ey.dot(&(&sy * &ey));
    if variance <= 0.0 {
        return Ok(if stat > 0.0 { 0.0 } else { 0.5 });
    }
    Ok(log_upper_tail(stat / variance.sqrt()).exp())
}
