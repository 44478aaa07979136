//! Parametric DTW along a one-dimensional line in data space.
//!
//! On the line `(x; y) = a + b z` the loss of every alignment is a quadratic
//! in `z`, so the optimal DTW loss as a function of `z` is the lower envelope
//! of finitely many parabolas. [`para_dtw`] builds that envelope with a
//! Bellman-style recursion over sets of alignments that are optimal for some
//! `z`, instead of scanning every alignment as [`envelope_bruteforce`] does.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentMatrix;
use crate::error::{Error, Result};
use crate::interval::{quadratic_roots, Interval, IntervalUnion};

/// Breakpoints closer than this (relative to `max(1, |z|)`) are merged.
pub const BREAKPOINT_GAP: f64 = 1e-12;

/// `(x(z); y(z)) = a + b z`, with the first `n` coordinates belonging to `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataLine {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub n: usize,
}

impl DataLine {
    pub fn new(a: Vec<f64>, b: Vec<f64>, n: usize) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
        }
        if n == 0 || n >= a.len() {
            return Err(Error::InvalidInput(format!(
                "split {n} must leave both series non-empty (length {})",
                a.len()
            )));
        }
        Ok(Self { a, b, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.a.len() - self.n
    }

    /// The stacked point `a + b z`.
    pub fn point(&self, z: f64) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a + b * z).collect()
    }

    pub fn x_at(&self, z: f64) -> Vec<f64> {
        let mut p = self.point(z);
        p.truncate(self.n);
        p
    }

    pub fn y_at(&self, z: f64) -> Vec<f64> {
        self.point(z).split_off(self.n)
    }

    /// Loss of the single cell `(i, j)` as a quadratic in `z`.
    pub fn cell_loss(&self, i: usize, j: usize) -> QuadraticLoss {
        let da = self.a[i] - self.a[self.n + j];
        let db = self.b[i] - self.b[self.n + j];
        QuadraticLoss { w0: da * da, w1: 2.0 * da * db, w2: db * db }
    }
}

/// `w0 + w1 z + w2 z^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadraticLoss {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl QuadraticLoss {
    pub fn eval(&self, z: f64) -> f64 {
        (self.w2 * z + self.w1) * z + self.w0
    }

    pub fn derivative(&self, z: f64) -> f64 {
        2.0 * self.w2 * z + self.w1
    }

    pub fn add(&self, other: &QuadraticLoss) -> QuadraticLoss {
        QuadraticLoss { w0: self.w0 + other.w0, w1: self.w1 + other.w1, w2: self.w2 + other.w2 }
    }

    pub fn sub(&self, other: &QuadraticLoss) -> QuadraticLoss {
        QuadraticLoss { w0: self.w0 - other.w0, w1: self.w1 - other.w1, w2: self.w2 - other.w2 }
    }

    /// Ordering of the two functions as `z -> -inf`.
    fn cmp_at_neg_infinity(&self, other: &QuadraticLoss) -> Ordering {
        self.w2
            .total_cmp(&other.w2)
            .then_with(|| other.w1.total_cmp(&self.w1))
            .then_with(|| self.w0.total_cmp(&other.w0))
    }
}

/// Loss of `alignment` along the line, summed over path cells in path order.
pub fn quadratic_loss(alignment: &AlignmentMatrix, line: &DataLine) -> Result<QuadraticLoss> {
    if alignment.n() != line.n() || alignment.m() != line.m() {
        return Err(Error::InvalidInput(format!(
            "alignment is {}x{} but the line splits into {}x{}",
            alignment.n(),
            alignment.m(),
            line.n(),
            line.m()
        )));
    }
    Ok(path_loss(alignment.cells(), line))
}

fn path_loss(cells: &[(usize, usize)], line: &DataLine) -> QuadraticLoss {
    cells
        .iter()
        .fold(QuadraticLoss::default(), |acc, &(i, j)| acc.add(&line.cell_loss(i, j)))
}

/// An alignment paired with its loss along a line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alignment: AlignmentMatrix,
    pub loss: QuadraticLoss,
}

/// Piecewise-quadratic lower envelope: `breakpoints[k]..breakpoints[k + 1]`
/// is covered by `segments[k]`. The first breakpoint is `-inf` and the last
/// is `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseEnvelope {
    breakpoints: Vec<f64>,
    segments: Vec<Candidate>,
}

impl PiecewiseEnvelope {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Candidate] {
        &self.segments
    }

    /// Index of the segment owning `z`. A shared breakpoint belongs to the
    /// earlier segment.
    pub fn segment_index(&self, z: f64) -> usize {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        inner.partition_point(|&b| b < z)
    }

    pub fn segment_at(&self, z: f64) -> &Candidate {
        &self.segments[self.segment_index(z)]
    }

    pub fn value_at(&self, z: f64) -> f64 {
        self.segment_at(z).loss.eval(z)
    }

    /// Distinct alignments appearing on the envelope, in first-appearance order.
    pub fn alignments(&self) -> Vec<&AlignmentMatrix> {
        let mut seen = HashSet::new();
        self.segments
            .iter()
            .map(|s| &s.alignment)
            .filter(|a| seen.insert(*a))
            .collect()
    }

    /// Segment extents as intervals.
    pub fn segment_intervals(&self) -> impl Iterator<Item = (Interval, &Candidate)> {
        self.breakpoints
            .windows(2)
            .zip(&self.segments)
            .map(|(w, s)| (Interval::new(w[0], w[1]), s))
    }
}

fn gap_above(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        z + BREAKPOINT_GAP * z.abs().max(1.0)
    }
}

/// First point after `z` where `d = challenger - active` turns negative.
fn entry_point(d: &QuadraticLoss, z: f64) -> Option<f64> {
    let threshold = gap_above(z);
    let root = if d.w2 == 0.0 {
        if d.w1 < 0.0 {
            Some(-d.w0 / d.w1)
        } else {
            None
        }
    } else {
        quadratic_roots(d.w2, d.w1, d.w0).map(|(r1, r2)| if d.w2 > 0.0 { r1 } else { r2 })
    };
    root.filter(|&r| r > threshold && r.is_finite())
}

/// Lower envelope of a set of candidates by walking breakpoints from `-inf`.
///
/// The initial segment is the candidate minimal as `z -> -inf`. From each
/// breakpoint the next one is the smallest point where some other candidate
/// drops below the active quadratic; among candidates entering there, the one
/// with the smallest slope (then curvature, then path order) takes over.
pub fn lower_envelope(candidates: Vec<Candidate>) -> PiecewiseEnvelope {
    assert!(!candidates.is_empty(), "envelope of an empty candidate set");
    let mut active = (0..candidates.len())
        .min_by(|&p, &q| {
            candidates[p]
                .loss
                .cmp_at_neg_infinity(&candidates[q].loss)
                .then_with(|| candidates[p].alignment.cmp(&candidates[q].alignment))
        })
        .unwrap();
    let mut breakpoints = vec![f64::NEG_INFINITY];
    let mut owners = Vec::new();
    let mut z = f64::NEG_INFINITY;
    // A lower envelope of k parabolas has at most 2k - 1 pieces.
    let max_pieces = 4 * candidates.len() + 8;
    loop {
        let current = candidates[active].loss;
        let mut next: Option<f64> = None;
        let mut entrants: Vec<(usize, f64)> = Vec::new();
        for (idx, cand) in candidates.iter().enumerate() {
            if idx == active {
                continue;
            }
            if let Some(r) = entry_point(&cand.loss.sub(&current), z) {
                entrants.push((idx, r));
                next = Some(next.map_or(r, |best: f64| best.min(r)));
            }
        }
        let Some(r) = next else { break };
        if owners.len() + 1 >= max_pieces {
            break;
        }
        let tie = BREAKPOINT_GAP * r.abs().max(1.0);
        let successor = entrants
            .iter()
            .filter(|&&(_, e)| e <= r + tie)
            .map(|&(idx, _)| idx)
            .min_by(|&p, &q| {
                let (lp, lq) = (&candidates[p].loss, &candidates[q].loss);
                lp.derivative(r)
                    .total_cmp(&lq.derivative(r))
                    .then_with(|| lp.w2.total_cmp(&lq.w2))
                    .then_with(|| candidates[p].alignment.cmp(&candidates[q].alignment))
            })
            .unwrap();
        owners.push(active);
        breakpoints.push(r);
        active = successor;
        z = r;
    }
    owners.push(active);
    breakpoints.push(f64::INFINITY);

    // Merge consecutive pieces owned by the same alignment.
    let mut merged_bp = vec![breakpoints[0]];
    let mut merged_owner: Vec<usize> = Vec::new();
    for (k, &owner) in owners.iter().enumerate() {
        if merged_owner.last().is_some_and(|&o| candidates[o].alignment == candidates[owner].alignment) {
            *merged_bp.last_mut().unwrap() = breakpoints[k + 1];
        } else {
            merged_owner.push(owner);
            merged_bp.push(breakpoints[k + 1]);
        }
    }
    PiecewiseEnvelope {
        breakpoints: merged_bp,
        segments: merged_owner.into_iter().map(|o| candidates[o].clone()).collect(),
    }
}

/// Envelope over an explicit candidate set (typically every alignment).
pub fn envelope_bruteforce(candidates: &[AlignmentMatrix], line: &DataLine) -> Result<PiecewiseEnvelope> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty candidate set".into()));
    }
    let cands = candidates
        .iter()
        .map(|a| Ok(Candidate { alignment: a.clone(), loss: quadratic_loss(a, line)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(lower_envelope(cands))
}

/// Table of per-cell optimal sets produced by [`para_dtw_table`].
#[derive(Clone, Debug)]
pub struct ParametricTable {
    n: usize,
    m: usize,
    optimal: Vec<Vec<Candidate>>,
    candidate_counts: Vec<usize>,
    final_envelope: PiecewiseEnvelope,
}

impl ParametricTable {
    /// Alignments optimal for some `z` on the sub-problem ending at `(i, j)`.
    pub fn optimal_set(&self, i: usize, j: usize) -> &[Candidate] {
        &self.optimal[i * self.m + j]
    }

    /// Size of the candidate set examined at `(i, j)` before pruning.
    pub fn candidate_count(&self, i: usize, j: usize) -> usize {
        self.candidate_counts[i * self.m + j]
    }

    pub fn envelope(&self) -> &PiecewiseEnvelope {
        &self.final_envelope
    }

    pub fn into_envelope(self) -> PiecewiseEnvelope {
        self.final_envelope
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }
}

/// Parametric DTW over the whole line. Returns the envelope of the full
/// `n x m` problem.
pub fn para_dtw(line: &DataLine) -> PiecewiseEnvelope {
    para_dtw_table(line).into_envelope()
}

/// Fills the table cell by cell. The candidates of `(i, j)` are the optimal
/// sets of `(i-1, j)`, `(i, j-1)` and `(i-1, j-1)`, each extended by `(i, j)`;
/// the cell keeps only the alignments that appear on their lower envelope.
pub fn para_dtw_table(line: &DataLine) -> ParametricTable {
    let (n, m) = (line.n(), line.m());
    let mut optimal: Vec<Vec<Candidate>> = Vec::with_capacity(n * m);
    let mut candidate_counts = Vec::with_capacity(n * m);
    let mut final_envelope = None;
    for i in 0..n {
        for j in 0..m {
            let cell = line.cell_loss(i, j);
            let mut cands: Vec<Candidate> = Vec::new();
            if i == 0 && j == 0 {
                cands.push(Candidate { alignment: AlignmentMatrix::single(), loss: QuadraticLoss::default().add(&cell) });
            } else {
                let mut seen: HashSet<AlignmentMatrix> = HashSet::new();
                let preds = [
                    (i > 0 && j > 0).then(|| (i - 1, j - 1)),
                    (i > 0).then(|| (i - 1, j)),
                    (j > 0).then(|| (i, j - 1)),
                ];
                for (pi, pj) in preds.into_iter().flatten() {
                    for parent in &optimal[pi * m + pj] {
                        let alignment = parent.alignment.extended(i, j);
                        if seen.insert(alignment.clone()) {
                            cands.push(Candidate { alignment, loss: parent.loss.add(&cell) });
                        }
                    }
                }
            }
            candidate_counts.push(cands.len());
            let env = lower_envelope(cands);
            let kept: Vec<Candidate> = {
                let mut seen = HashSet::new();
                env.segments().iter().filter(|c| seen.insert(c.alignment.clone())).cloned().collect()
            };
            optimal.push(kept);
            if i == n - 1 && j == m - 1 {
                final_envelope = Some(env);
            }
        }
    }
    ParametricTable { n, m, optimal, candidate_counts, final_envelope: final_envelope.unwrap() }
}

/// Union of the envelope segments whose alignment equals `observed` exactly.
pub fn z1_region(env: &PiecewiseEnvelope, observed: &AlignmentMatrix) -> IntervalUnion {
    IntervalUnion::from_intervals(
        env.segment_intervals()
            .filter(|(_, c)| &c.alignment == observed)
            .map(|(iv, _)| iv)
            .collect(),
    )
}
