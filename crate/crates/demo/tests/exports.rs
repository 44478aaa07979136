use serde_json::Value;
use sidtw_demo::{analyze, envelope, parse_series, simulate};

const X: &str = "0.2, -0.4, 0.9, 1.6, 0.3, -0.8, 0.1";
const Y: &str = "1.9 2.6 1.1 2.4 3.1 1.7";

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn contains(region: &Value, z: f64) -> bool {
    region.as_array().unwrap().iter().any(|iv| {
        let lo = iv[0].as_f64().unwrap_or(f64::NEG_INFINITY);
        let hi = iv[1].as_f64().unwrap_or(f64::INFINITY);
        lo - 1e-9 <= z && z <= hi + 1e-9
    })
}

#[test]
fn analyze_reports_both_selective_methods() {
    let a = parse(analyze(X, Y, 0.05));
    let z = a["z_obs"].as_f64().unwrap();
    assert!(contains(&a["si_dtw"]["region"], z));
    assert!(contains(&a["si_dtw_oc"]["region"], z));
    assert!(contains(&a["z1"], z) && contains(&a["z2"], z));
    for key in ["si_dtw", "si_dtw_oc"] {
        let p = a[key]["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        let ci = a[key]["ci"].as_array().unwrap();
        assert!(ci[0].as_f64().unwrap() < ci[1].as_f64().unwrap());
    }
    let naive = a["naive_p_value"].as_f64().unwrap();
    assert!(naive < a["si_dtw"]["p_value"].as_f64().unwrap());
    assert_eq!(a["alignment"][0], serde_json::json!([0, 0]));
    assert_eq!(a["alignment"].as_array().unwrap().last().unwrap(), &serde_json::json!([6, 5]));
}

#[test]
fn envelope_is_below_observed_loss_and_density_integrates_to_one() {
    let e = parse(envelope(X, Y, f64::NAN, f64::NAN, 2001));
    let z: Vec<f64> = e["z"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let env = e["envelope"].as_array().unwrap();
    let obs = e["observed_loss"].as_array().unwrap();
    for k in 0..z.len() {
        assert!(env[k].as_f64().unwrap() <= obs[k].as_f64().unwrap() + 1e-9);
    }
    let z_obs = e["z_obs"].as_f64().unwrap();
    let k = z.iter().position(|&v| v >= z_obs).unwrap();
    assert!((env[k].as_f64().unwrap() - obs[k].as_f64().unwrap()).abs() < 1e-6 * obs[k].as_f64().unwrap().abs().max(1.0));
    let dens: Vec<f64> = e["density"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let h = z[1] - z[0];
    let integral: f64 = dens.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
    assert!((integral - 1.0).abs() < 0.02, "integral {integral}");
    let pieces = e["pieces"].as_array().unwrap();
    assert!(pieces.iter().any(|p| p["observed"] == true));
    assert!(pieces.first().unwrap()["lo"].is_null() && pieces.last().unwrap()["hi"].is_null());
}

#[test]
fn simulate_is_deterministic_and_parses_back() {
    let a = parse(simulate(6, 4, 2.0, 9));
    assert_eq!(a, parse(simulate(6, 4, 2.0, 9)));
    assert_eq!(parse_series(a["x"].as_str().unwrap()).unwrap().len(), 6);
    assert_eq!(parse_series(a["y"].as_str().unwrap()).unwrap().len(), 4);
    assert!(parse(simulate(0, 4, 2.0, 9))["error"].is_string());
}

#[test]
fn bad_input_comes_back_as_error() {
    assert!(parse(analyze("1, 2, x", Y, 0.05))["error"].as_str().unwrap().contains("x:"));
    assert!(parse(analyze("", Y, 0.05))["error"].is_string());
    assert!(parse(analyze("1,2,3", "1,2,3", 0.05))["error"].as_str().unwrap().contains("degenerate"));
    assert!(parse(envelope(X, "nope", 0.0, 1.0, 10))["error"].is_string());
}
