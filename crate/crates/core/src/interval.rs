//! Finite unions of disjoint real intervals.
//!
//! Endpoints may be infinite. Intervals are treated as closed for membership;
//! the truncation regions built from them only matter up to sets of measure
//! zero, so endpoint ownership carries no probability.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self::single(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `[lo, hi]`, or the empty set when `lo > hi`.
    pub fn single(lo: f64, hi: f64) -> Self {
        Self::from_intervals(vec![Interval::new(lo, hi)])
    }

    /// Sorts, drops empty and NaN pieces, and merges overlapping or touching
    /// intervals.
    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.retain(|iv| iv.lo <= iv.hi);
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(z))
    }

    /// Distance from `z` to the nearest point of the set (infinite if empty).
    pub fn distance_to(&self, z: f64) -> f64 {
        self.intervals
            .iter()
            .map(|iv| {
                if iv.contains(z) {
                    0.0
                } else if z < iv.lo {
                    iv.lo - z
                } else {
                    z - iv.hi
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo <= hi {
                out.push(Interval::new(lo, hi));
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    /// Whether every piece of `self` lies inside `other`, allowing endpoint
    /// slack of `tol * max(1, |endpoint|)`.
    pub fn is_subset_of(&self, other: &IntervalUnion, tol: f64) -> bool {
        let slack = |v: f64| if v.is_finite() { tol * v.abs().max(1.0) } else { 0.0 };
        self.intervals.iter().all(|iv| {
            other
                .intervals
                .iter()
                .any(|o| o.lo - slack(o.lo) <= iv.lo && iv.hi <= o.hi + slack(o.hi))
        })
    }

    /// Finite endpoints in increasing order.
    pub fn finite_endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.lo, iv.hi])
            .filter(|v| v.is_finite())
            .collect()
    }

    /// Shift and scale every endpoint: `(v - shift) / scale`.
    pub fn standardized(&self, shift: f64, scale: f64) -> IntervalUnion {
        Self {
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval::new((iv.lo - shift) / scale, (iv.hi - shift) / scale))
                .collect(),
        }
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self.intervals.iter().map(|iv| format!("[{}, {}]", iv.lo, iv.hi)).collect();
        write!(f, "{}", parts.join(" U "))
    }
}

/// Roots of `a z^2 + b z + c` with `a != 0`, ascending, or `None` when the
/// discriminant is non-positive up to a relative tolerance of 1e-12 (the
/// parabola touches zero at most tangentially).
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    debug_assert!(a != 0.0);
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc <= 1e-12 * scale {
        return None;
    }
    let sq = disc.sqrt();
    // Cancellation-free form.
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// `{ z : a z^2 + b z + c <= 0 }` in closed form.
pub fn solve_quadratic_le_zero(a: f64, b: f64, c: f64) -> IntervalUnion {
    if a == 0.0 {
        if b == 0.0 {
            return if c <= 0.0 { IntervalUnion::real_line() } else { IntervalUnion::empty() };
        }
        let root = -c / b;
        return if b > 0.0 {
            IntervalUnion::single(f64::NEG_INFINITY, root)
        } else {
            IntervalUnion::single(root, f64::INFINITY)
        };
    }
    match quadratic_roots(a, b, c) {
        Some((r1, r2)) => {
            if a > 0.0 {
                IntervalUnion::single(r1, r2)
            } else {
                IntervalUnion::from_intervals(vec![
                    Interval::new(f64::NEG_INFINITY, r1),
                    Interval::new(r2, f64::INFINITY),
                ])
            }
        }
        None => {
            if a > 0.0 {
                // Non-negative everywhere; only the tangent point could qualify.
                IntervalUnion::empty()
            } else {
                IntervalUnion::real_line()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_merges_touching_and_overlapping() {
        let u = IntervalUnion::from_intervals(vec![
            Interval::new(3.0, 4.0),
            Interval::new(0.0, 1.0),
            Interval::new(1.0, 2.0),
            Interval::new(3.5, 5.0),
            Interval::new(7.0, 6.0),
        ]);
        assert_eq!(u.intervals(), &[Interval::new(0.0, 2.0), Interval::new(3.0, 5.0)]);
    }

    #[test]
    fn intersection_and_subset() {
        let a = IntervalUnion::from_intervals(vec![Interval::new(-1.0, 1.0), Interval::new(2.0, 3.0)]);
        let b = IntervalUnion::single(0.5, 2.5);
        let c = a.intersect(&b);
        assert_eq!(c.intervals(), &[Interval::new(0.5, 1.0), Interval::new(2.0, 2.5)]);
        assert!(c.is_subset_of(&a, 0.0));
        assert!(c.is_subset_of(&b, 0.0));
        assert!(!a.is_subset_of(&b, 0.0));
        assert!(IntervalUnion::empty().is_subset_of(&b, 0.0));
        assert!(a.intersect(&IntervalUnion::empty()).is_empty());
        assert_eq!(a.intersect(&IntervalUnion::real_line()), a);
    }

    #[test]
    fn quadratic_inequalities() {
        // (z - 1)(z - 3) <= 0
        let s = solve_quadratic_le_zero(1.0, -4.0, 3.0);
        assert_eq!(s.intervals(), &[Interval::new(1.0, 3.0)]);
        // -(z - 1)(z - 3) <= 0
        let s = solve_quadratic_le_zero(-1.0, 4.0, -3.0);
        assert_eq!(
            s.intervals(),
            &[Interval::new(f64::NEG_INFINITY, 1.0), Interval::new(3.0, f64::INFINITY)]
        );
        assert!(solve_quadratic_le_zero(1.0, 0.0, 1.0).is_empty());
        assert_eq!(solve_quadratic_le_zero(-1.0, 0.0, -1.0), IntervalUnion::real_line());
        assert_eq!(solve_quadratic_le_zero(0.0, 0.0, -2.0), IntervalUnion::real_line());
        assert!(solve_quadratic_le_zero(0.0, 0.0, 2.0).is_empty());
        assert_eq!(solve_quadratic_le_zero(0.0, 2.0, -4.0), IntervalUnion::single(f64::NEG_INFINITY, 2.0));
        assert_eq!(solve_quadratic_le_zero(0.0, -1.0, -2.0), IntervalUnion::single(-2.0, f64::INFINITY));
    }

    proptest! {
        #[test]
        fn quadratic_solution_matches_pointwise_sign(
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, z in -10.0f64..10.0,
        ) {
            let set = solve_quadratic_le_zero(a, b, c);
            let v = a * z * z + b * z + c;
            // Away from the roots, membership agrees with the sign.
            if set.distance_to(z) > 1e-6 {
                prop_assert!(v > -1e-9);
            } else if set.contains(z) {
                let near_root = set.finite_endpoints().iter().any(|r| (r - z).abs() < 1e-6);
                prop_assert!(v <= 1e-9 || near_root);
            }
        }

        #[test]
        fn intersection_is_pointwise_and(
            pts in proptest::collection::vec(-10.0f64..10.0, 8),
            z in -12.0f64..12.0,
        ) {
            let a = IntervalUnion::from_intervals(vec![
                Interval::new(pts[0].min(pts[1]), pts[0].max(pts[1])),
                Interval::new(pts[2].min(pts[3]), pts[2].max(pts[3])),
            ]);
            let b = IntervalUnion::from_intervals(vec![
                Interval::new(pts[4].min(pts[5]), pts[4].max(pts[5])),
                Interval::new(pts[6].min(pts[7]), pts[6].max(pts[7])),
            ]);
            prop_assert_eq!(a.intersect(&b).contains(z), a.contains(z) && b.contains(z));
            prop_assert_eq!(a.union(&b).contains(z), a.contains(z) || b.contains(z));
            for w in a.intersect(&b).intervals().windows(2) {
                prop_assert!(w[0].hi < w[1].lo);
            }
        }
    }
}
