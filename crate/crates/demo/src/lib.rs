//! WebAssembly entry points for the browser demo. Every function takes
//! plain strings and numbers and returns a JSON document; failures come
//! back as `{"error": "..."}`.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use sidtw::baselines::si_dtw_oc_p_value;
use sidtw::harness::{generate_pair, ExperimentConfig};
use sidtw::inference::{observe, z1_for, Z1Route};
use sidtw::parametric::{para_dtw, quadratic_loss};
use sidtw::truncnorm::{log_region_mass, log_upper_tail};
use sidtw::{selective_p_value, IntervalUnion, TimeSeriesPair};

/// Numbers separated by commas, semicolons or whitespace.
pub fn parse_series(text: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(k, t)| t.parse::<f64>().map_err(|_| format!("value {} (`{t}`) is not a number", k + 1)))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("series is empty".into());
    }
    Ok(values)
}

fn pair_from(x: &str, y: &str) -> Result<TimeSeriesPair, String> {
    let x = parse_series(x).map_err(|e| format!("x: {e}"))?;
    let y = parse_series(y).map_err(|e| format!("y: {e}"))?;
    TimeSeriesPair::with_identity(x, y).map_err(|e| e.to_string())
}

/// Intervals as `[lo, hi]` with `null` for infinite ends.
fn intervals(region: &IntervalUnion) -> Vec<[Option<f64>; 2]> {
    let finite = |v: f64| v.is_finite().then_some(v);
    region.intervals().iter().map(|iv| [finite(iv.lo), finite(iv.hi)]).collect()
}

#[derive(Serialize)]
struct Inference {
    region: Vec<[Option<f64>; 2]>,
    p_value: f64,
    ci: Option<(f64, f64)>,
}

fn to_json<T: Serialize>(value: Result<T, String>) -> String {
    match value {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn analyze_impl(x: &str, y: &str, alpha: f64) -> Result<serde_json::Value, String> {
    let pair = pair_from(x, y)?;
    let err = |e: sidtw::Error| e.to_string();
    let sel = observe(&pair).map_err(err)?;
    let z1 = z1_for(&sel, Z1Route::Parametric).map_err(err)?;
    let full = selective_p_value(&pair).and_then(|r| r.with_ci(alpha)).map_err(err)?;
    let oc = si_dtw_oc_p_value(&pair).and_then(|r| r.with_ci(alpha)).map_err(err)?;
    Ok(json!({
        "x": pair.x(),
        "y": pair.y(),
        "alignment": sel.dtw.alignment.cells(),
        "distance": sel.dtw.distance,
        "z_obs": sel.z_obs,
        "sigma": sel.sigma,
        "alpha": alpha,
        "z1": intervals(&z1),
        "z2": intervals(&sel.z2()),
        "naive_p_value": log_upper_tail(sel.z_obs / sel.sigma).exp(),
        "si_dtw": Inference { region: intervals(&full.region), p_value: full.p_selective, ci: full.ci },
        "si_dtw_oc": Inference { region: intervals(&oc.region), p_value: oc.p_selective, ci: oc.ci },
    }))
}

/// Observed alignment, statistic, truncation regions, selective and naive
/// p-values, and confidence intervals for both selective methods.
#[wasm_bindgen]
pub fn analyze(x: &str, y: &str, alpha: f64) -> String {
    to_json(analyze_impl(x, y, alpha))
}

#[derive(Serialize)]
struct Piece {
    lo: Option<f64>,
    hi: Option<f64>,
    observed: bool,
    alignment: Vec<(usize, usize)>,
}

fn envelope_impl(x: &str, y: &str, z_min: f64, z_max: f64, samples: usize) -> Result<serde_json::Value, String> {
    let pair = pair_from(x, y)?;
    let err = |e: sidtw::Error| e.to_string();
    let sel = observe(&pair).map_err(err)?;
    let env = para_dtw(&sel.line);
    let observed = quadratic_loss(&sel.dtw.alignment, &sel.line).map_err(err)?;
    let region = selective_p_value(&pair).map_err(err)?.region;
    let (lo, hi) = if z_min.is_finite() && z_max.is_finite() && z_min < z_max {
        (z_min, z_max)
    } else {
        (sel.z_obs - 4.0 * sel.sigma, sel.z_obs + 4.0 * sel.sigma)
    };
    let samples = samples.clamp(2, 5000);
    let log_mass = log_region_mass(&region.standardized(0.0, sel.sigma));
    let norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - sel.sigma.ln() - log_mass;
    let grid: Vec<f64> = (0..samples).map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64).collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&z| if region.contains(z) { (norm - 0.5 * (z / sel.sigma).powi(2)).exp() } else { 0.0 })
        .collect();
    let finite = |v: f64| v.is_finite().then_some(v);
    let pieces: Vec<Piece> = env
        .segment_intervals()
        .map(|(iv, c)| Piece {
            lo: finite(iv.lo),
            hi: finite(iv.hi),
            observed: c.alignment == sel.dtw.alignment,
            alignment: c.alignment.cells().to_vec(),
        })
        .collect();
    Ok(json!({
        "z": grid,
        "envelope": grid.iter().map(|&z| env.value_at(z)).collect::<Vec<_>>(),
        "observed_loss": grid.iter().map(|&z| observed.eval(z)).collect::<Vec<_>>(),
        "density": density,
        "pieces": pieces,
        "region": intervals(&region),
        "z_obs": sel.z_obs,
        "sigma": sel.sigma,
    }))
}

/// The parametric DTW envelope, the observed alignment's loss and the
/// truncated null density of the statistic on `samples` points of
/// `[z_min, z_max]` (a window of four sigmas around `z_obs` when the bounds
/// are not a finite increasing pair).
#[wasm_bindgen]
pub fn envelope(x: &str, y: &str, z_min: f64, z_max: f64, samples: usize) -> String {
    to_json(envelope_impl(x, y, z_min, z_max, samples))
}

fn simulate_impl(n: usize, m: usize, delta: f64, seed: u32) -> Result<serde_json::Value, String> {
    let cfg = ExperimentConfig { n, m, delta, seed: u64::from(seed), ..Default::default() };
    let pair = generate_pair(&cfg, 0).map_err(|e| e.to_string())?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    Ok(json!({ "x": fmt(pair.x()), "y": fmt(pair.y()) }))
}

/// A Gaussian pair with unit noise, `x` centred at 0 and `y` at `delta`,
/// formatted as comma-separated text.
#[wasm_bindgen]
pub fn simulate(n: usize, m: usize, delta: f64, seed: u32) -> String {
    to_json(simulate_impl(n, m, delta, seed))
}
