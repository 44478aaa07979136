//! Gaussian masses of interval unions, evaluated in log space.

use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this argument `erfc` underflows and the continued fraction for the
/// Mills ratio takes over.
const TAIL_SWITCH: f64 = 30.0;

/// `ln Q(x)` where `Q(x) = P(Z >= x)` for a standard normal `Z`.
pub fn log_upper_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::NEG_INFINITY
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if x < 0.0 {
        (-0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln_1p()
    } else if x < TAIL_SWITCH {
        (0.5 * erfc(x / std::f64::consts::SQRT_2)).ln()
    } else {
        -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
    }
}

/// `Q(x) / phi(x)` by backward evaluation of the Laplace continued fraction
/// `1 / (x + 1 / (x + 2 / (x + 3 / ...)))`, accurate for large `x`.
fn mills_ratio(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + k as f64 / tail;
    }
    1.0 / tail
}

/// `ln(1 - e^d)` for `d <= 0`.
fn ln_one_minus_exp(d: f64) -> f64 {
    if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// `ln P(lo <= Z <= hi)` for a standard normal `Z`.
pub fn log_interval_mass(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        let (a, b) = (log_upper_tail(lo), log_upper_tail(hi));
        a + ln_one_minus_exp(b - a)
    } else if hi <= 0.0 {
        log_interval_mass(-hi, -lo)
    } else {
        // Straddles zero: add the two half masses, no cancellation.
        let half = |v: f64| {
            if v.is_infinite() {
                0.5
            } else {
                0.5 * erf(v / std::f64::consts::SQRT_2)
            }
        };
        (half(hi) + half(-lo)).ln()
    }
}

fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln P(Z in region)` for a standard normal `Z`.
pub fn log_region_mass(region: &IntervalUnion) -> f64 {
    log_sum_exp(region.intervals().iter().map(|iv| log_interval_mass(iv.lo, iv.hi)))
}

/// `P(Z >= z_obs | Z in region)` for `Z ~ N(mean, sigma^2)`.
pub fn truncated_sf_with_mean(z_obs: f64, mean: f64, sigma: f64, region: &IntervalUnion) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if region.is_empty() {
        return Err(Error::InvalidInput("empty truncation region".into()));
    }
    let std_region = region.standardized(mean, sigma);
    let log_total = log_region_mass(&std_region);
    if !log_total.is_finite() {
        return Err(Error::RegionMassUnderflow { log_mass: log_total });
    }
    let t = (z_obs - mean) / sigma;
    let log_upper = log_sum_exp(std_region.intervals().iter().map(|iv| {
        if iv.hi <= t {
            f64::NEG_INFINITY
        } else {
            log_interval_mass(iv.lo.max(t), iv.hi)
        }
    }));
    Ok((log_upper - log_total).exp().clamp(0.0, 1.0))
}

/// `P(Z >= z_obs | Z in region)` for `Z ~ N(0, sigma^2)`.
pub fn truncated_gaussian_sf(z_obs: f64, sigma: f64, region: &IntervalUnion) -> Result<f64> {
    truncated_sf_with_mean(z_obs, 0.0, sigma, region)
}
