//! Selective p-values and confidence intervals for the DTW statistic.
//!
//! Conditioning on the observed alignment, its sign vector and the nuisance
//! component orthogonal to the test direction leaves a single free scalar
//! `z` on a line in data space. The statistic is then a Gaussian truncated
//! to the set of `z` that reproduce the selection event.

use serde::{Deserialize, Serialize};

use crate::alignment::{enumerate_alignments, AlignmentMatrix};
use crate::dtw::{observed_direction, omega_row, test_statistic, DtwResult, TestDirection};
use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::parametric::{envelope_bruteforce, para_dtw, z1_region, DataLine};
use crate::series::TimeSeriesPair;
use crate::truncnorm::truncated_sf_with_mean;

/// `eta' Sigma eta` at or below this is a degenerate direction.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Relative slack when checking that `z_obs` lies in its own region.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Bisection stops once the bracket is narrower than this many sigmas.
pub const CI_TOLERANCE: f64 = 1e-8;

/// Confidence-bound brackets are widened up to this many sigmas.
pub const CI_MAX_BRACKET: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    /// Observed statistic, the DTW path's sum of absolute differences.
    pub z_obs: f64,
    /// Standard deviation `sqrt(eta' Sigma eta)` of the statistic.
    pub sigma: f64,
    /// Truncation region the statistic is conditioned on.
    pub region: IntervalUnion,
    pub p_selective: f64,
    pub ci: Option<(f64, f64)>,
    pub alignment: AlignmentMatrix,
    pub distance: f64,
}

/// Everything about the observed selection event that does not depend on
/// how the truncation region is computed.
#[derive(Clone, Debug)]
pub struct Selection {
    pub dtw: DtwResult,
    pub direction: TestDirection,
    pub line: DataLine,
    pub z_obs: f64,
    pub sigma: f64,
}

/// Splits `(x; y)` into `a + b z` with `z = eta' (x; y)`,
/// `b = Sigma eta / (eta' Sigma eta)` and `a = (I - b eta') (x; y)`.
pub fn nuisance_decomposition(pair: &TimeSeriesPair, dir: &TestDirection) -> Result<DataLine> {
    let variance = pair.quadratic_form(&dir.eta)?;
    if !(variance > DEGENERATE_VARIANCE) {
        return Err(Error::DegenerateDirection { variance });
    }
    let sigma_eta = pair.sigma_mul(&dir.eta)?;
    let b: Vec<f64> = sigma_eta.iter().map(|v| v / variance).collect();
    let z = test_statistic(dir, pair)?;
    let a: Vec<f64> = pair.stacked().iter().zip(&b).map(|(v, bi)| v - bi * z).collect();
    DataLine::new(a, b, pair.n())
}

/// Set of `z` keeping every path difference on its observed side:
/// `s_obs * (x_i(z) - y_j(z)) >= 0` on every path cell.
pub fn z2_region(line: &DataLine, alignment: &AlignmentMatrix, s_obs: &[i8]) -> IntervalUnion {
    let (n, m) = (line.n(), line.m());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &(i, j) in alignment.cells() {
        let r = i * m + j;
        let s = f64::from(s_obs[r]);
        if s == 0.0 {
            continue;
        }
        let (plus, minus) = omega_row(r, n, m);
        let nu1 = s * (line.a[plus] - line.a[minus]);
        let nu2 = s * (line.b[plus] - line.b[minus]);
        if nu2 > 0.0 {
            lo = lo.max(-nu1 / nu2);
        } else if nu2 < 0.0 {
            hi = hi.min(-nu1 / nu2);
        } else if nu1 < 0.0 {
            return IntervalUnion::empty();
        }
    }
    IntervalUnion::single(lo, hi)
}

/// Observed alignment, direction, data line and statistic of `pair`.
pub fn observe(pair: &TimeSeriesPair) -> Result<Selection> {
    let (dtw, direction) = observed_direction(pair);
    let line = nuisance_decomposition(pair, &direction)?;
    let z_obs = test_statistic(&direction, pair)?;
    let sigma = pair.quadratic_form(&direction.eta)?.sqrt();
    Ok(Selection { dtw, direction, line, z_obs, sigma })
}

impl Selection {
    pub fn z2(&self) -> IntervalUnion {
        z2_region(&self.line, &self.dtw.alignment, &self.direction.s_hat)
    }

    /// Selective p-value over `region`, which must contain `z_obs`.
    pub fn conclude(&self, region: IntervalUnion) -> Result<InferenceResult> {
        let tol = MEMBERSHIP_TOL * self.z_obs.abs().max(1.0);
        if region.distance_to(self.z_obs) > tol {
            return Err(Error::SelectionInconsistent { z_obs: self.z_obs, region: region.to_string() });
        }
        let p_selective = truncated_sf_with_mean(self.z_obs, 0.0, self.sigma, &region)?;
        Ok(InferenceResult {
            z_obs: self.z_obs,
            sigma: self.sigma,
            region,
            p_selective,
            ci: None,
            alignment: self.dtw.alignment.clone(),
            distance: self.dtw.distance,
        })
    }
}

/// How the alignment part of the truncation region is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Z1Route {
    /// Parametric DTW over the pruned candidate table.
    Parametric,
    /// Lower envelope over every alignment; only for small problems.
    BruteForce,
}

/// Truncation region for the alignment event along the selection's line.
pub fn z1_for(selection: &Selection, route: Z1Route) -> Result<IntervalUnion> {
    let env = match route {
        Z1Route::Parametric => para_dtw(&selection.line),
        Z1Route::BruteForce => {
            let all = enumerate_alignments(selection.line.n(), selection.line.m())?;
            envelope_bruteforce(&all, &selection.line)?
        }
    };
    Ok(z1_region(&env, &selection.dtw.alignment))
}

pub fn selective_p_value(pair: &TimeSeriesPair) -> Result<InferenceResult> {
    selective_p_value_with(pair, Z1Route::Parametric)
}

pub fn selective_p_value_with(pair: &TimeSeriesPair, route: Z1Route) -> Result<InferenceResult> {
    let selection = observe(pair)?;
    let region = z1_for(&selection, route)?.intersect(&selection.z2());
    selection.conclude(region)
}

/// Equal-tailed interval for the mean `theta` of `N(theta, sigma^2)`
/// truncated to `region`: the lower end solves
/// `P_theta(Z >= z_obs | Z in region) = alpha / 2`, the upper end solves the
/// same with `1 - alpha / 2`.
pub fn confidence_interval(z_obs: f64, sigma: f64, region: &IntervalUnion, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let lo = solve_mean(z_obs, sigma, region, alpha / 2.0)?;
    let hi = solve_mean(z_obs, sigma, region, 1.0 - alpha / 2.0)?;
    Ok((lo, hi))
}

/// Mean at which the truncated survival function at `z_obs` equals `target`.
/// The survival function increases with the mean.
fn solve_mean(z_obs: f64, sigma: f64, region: &IntervalUnion, target: f64) -> Result<f64> {
    let sf = |theta: f64| truncated_sf_with_mean(z_obs, theta, sigma, region);
    let mut width = 1.0;
    let (mut lo, mut hi) = (z_obs - width * sigma, z_obs + width * sigma);
    while sf(lo)? > target || sf(hi)? < target {
        width *= 2.0;
        if width > CI_MAX_BRACKET {
            return Err(Error::BracketFailure(format!(
                "no mean within {CI_MAX_BRACKET} sigma of z_obs = {z_obs} reaches tail probability {target}"
            )));
        }
        if sf(lo)? > target {
            lo = z_obs - width * sigma;
        }
        if sf(hi)? < target {
            hi = z_obs + width * sigma;
        }
    }
    while hi - lo > CI_TOLERANCE * sigma {
        let mid = 0.5 * (lo + hi);
        if sf(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn selective_confidence_interval(pair: &TimeSeriesPair, alpha: f64) -> Result<(f64, f64)> {
    let result = selective_p_value(pair)?;
    confidence_interval(result.z_obs, result.sigma, &result.region, alpha)
}

impl InferenceResult {
    /// Attach the equal-tailed `1 - alpha` interval.
    pub fn with_ci(mut self, alpha: f64) -> Result<Self> {
        self.ci = Some(confidence_interval(self.z_obs, self.sigma, &self.region, alpha)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn random_pair(rng: &mut ChaCha8Rng, n: usize, m: usize, correlated: bool) -> TimeSeriesPair {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        if correlated {
            let ar = |k: usize| DMatrix::from_fn(k, k, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()));
            TimeSeriesPair::new(x, y, ar(n), ar(m)).unwrap()
        } else {
            TimeSeriesPair::with_identity(x, y).unwrap()
        }
    }

    #[test]
    fn decomposition_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..20 {
            let pair = random_pair(&mut rng, 4 + k % 3, 3 + k % 4, k % 2 == 0);
            let (_, dir) = observed_direction(&pair);
            let line = nuisance_decomposition(&pair, &dir).unwrap();
            let eta_b: f64 = dir.eta.iter().zip(&line.b).map(|(e, b)| e * b).sum();
            let eta_a: f64 = dir.eta.iter().zip(&line.a).map(|(e, a)| e * a).sum();
            assert!((eta_b - 1.0).abs() < 1e-10);
            assert!(eta_a.abs() < 1e-10);
            let z = test_statistic(&dir, &pair).unwrap();
            for (p, o) in line.point(z).iter().zip(pair.stacked()) {
                assert!((p - o).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn decomposition_with_identity_and_unit_direction() {
        let pair = TimeSeriesPair::with_identity(vec![3.0, 1.0], vec![2.0]).unwrap();
        let dir = TestDirection { eta: vec![1.0, 0.0, 0.0], s_hat: vec![] };
        let line = nuisance_decomposition(&pair, &dir).unwrap();
        assert_eq!(line.b, vec![1.0, 0.0, 0.0]);
        assert_eq!(line.a, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn degenerate_direction_is_rejected() {
        let pair = TimeSeriesPair::with_identity(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let (_, dir) = observed_direction(&pair);
        let err = nuisance_decomposition(&pair, &dir).unwrap_err();
        assert!(matches!(err, Error::DegenerateDirection { .. }));
        assert!(err.is_numerical());
        assert!(matches!(selective_p_value(&pair), Err(Error::DegenerateDirection { .. })));
    }

    #[test]
    fn z2_examples() {
        // Single cell with nu1 = -2, nu2 = 1 gives [2, inf).
        let line = DataLine::new(vec![-2.0, 0.0], vec![1.0, 0.0], 1).unwrap();
        let r = z2_region(&line, &AlignmentMatrix::single(), &[1]);
        assert_eq!(r.intervals(), &[Interval::new(2.0, f64::INFINITY)]);

        let flat = DataLine::new(vec![1.0, 0.0], vec![0.5, 0.5], 1).unwrap();
        assert_eq!(z2_region(&flat, &AlignmentMatrix::single(), &[1]), IntervalUnion::real_line());
        assert!(z2_region(&flat, &AlignmentMatrix::single(), &[-1]).is_empty());
    }

    #[test]
    fn observed_statistic_lies_in_both_regions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..40 {
            let pair = random_pair(&mut rng, 2 + k % 5, 2 + (k / 5) % 5, k % 3 == 0);
            let sel = observe(&pair).unwrap();
            assert!(sel.z2().contains(sel.z_obs));
            let z1 = z1_for(&sel, Z1Route::Parametric).unwrap();
            assert!(z1.distance_to(sel.z_obs) <= MEMBERSHIP_TOL * sel.z_obs.max(1.0));
        }
    }

    #[test]
    fn parametric_and_brute_force_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pair = random_pair(&mut rng, 4, 4, false);
            let fast = selective_p_value_with(&pair, Z1Route::Parametric).unwrap();
            let slow = selective_p_value_with(&pair, Z1Route::BruteForce).unwrap();
            assert!((fast.p_selective - slow.p_selective).abs() < 1e-9);
        }
    }

    #[test]
    fn jittered_identical_series_give_valid_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1e-6 * rng.gen_range(-1.0..1.0)).collect();
        let r = selective_p_value(&TimeSeriesPair::with_identity(x, y).unwrap()).unwrap();
        assert!((0.0..=1.0).contains(&r.p_selective));
        assert!(r.region.distance_to(r.z_obs) <= MEMBERSHIP_TOL * r.z_obs.max(1.0));
    }

    #[test]
    fn untruncated_interval_is_gaussian() {
        let q = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
        let (lo, hi) = confidence_interval(1.3, 2.0, &IntervalUnion::real_line(), 0.05).unwrap();
        assert!((lo - (1.3 - 2.0 * q)).abs() < 1e-6);
        assert!((hi - (1.3 + 2.0 * q)).abs() < 1e-6);
        assert!(confidence_interval(1.3, 2.0, &IntervalUnion::real_line(), 0.0).is_err());
    }

    #[test]
    fn intervals_nest_as_alpha_shrinks() {
        let region = IntervalUnion::from_intervals(vec![Interval::new(0.5, 2.0), Interval::new(3.0, 6.0)]);
        let mut prev = (f64::INFINITY, f64::NEG_INFINITY);
        for alpha in [0.5, 0.2, 0.1, 0.05, 0.01] {
            let (lo, hi) = confidence_interval(1.7, 1.0, &region, alpha).unwrap();
            assert!(hi > lo);
            if prev.0.is_finite() {
                assert!(lo <= prev.0 && hi >= prev.1);
            }
            prev = (lo, hi);
        }
    }

    #[test]
    fn interval_near_region_boundary_is_wide_but_finite() {
        let region = IntervalUnion::single(1.0, 5.0);
        let (lo, hi) = confidence_interval(1.001, 1.0, &region, 0.05).unwrap();
        assert!(lo < -100.0 && hi > lo);
    }
}
