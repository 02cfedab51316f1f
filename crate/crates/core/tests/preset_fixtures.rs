//! Pins the built-in presets to the benchmark parameter table in
//! `fixtures/presets.json`.

use probreach::model::NormSpec;
use probreach::montecarlo::presets::{self, cobweb_preset_uncertified, linear_preset, uav_preset};
use probreach::montecarlo::InitialSet;
use serde_json::Value;

fn fixtures() -> Value {
    serde_json::from_str(include_str!("fixtures/presets.json")).unwrap()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

fn u(v: &Value, key: &str) -> usize {
    v[key].as_u64().unwrap_or_else(|| panic!("missing {key}")) as usize
}

#[test]
fn linear_preset_matches_fixture() {
    let fx = fixtures();
    let fx = &fx["linear"];
    let p = linear_preset(u(fx, "dim"));
    assert_eq!(presets::LINEAR_A, f(fx, "a"));
    assert_eq!(presets::LINEAR_SIGMA_SQ, f(fx, "sigma_sq"));
    assert_eq!(p.horizon, u(fx, "horizon"));
    assert_eq!(p.delta, f(fx, "delta"));
    assert_eq!(p.epsilon, f(fx, "epsilon"));
    assert_eq!(p.default_trajectories, u(fx, "trajectories"));
    assert_eq!(p.model.dim_state, u(fx, "dim"));
    assert_eq!(p.model.lipschitz.at(0), f(fx, "a").abs());
    assert_eq!(p.noise.proxy_sq(0), f(fx, "sigma_sq"));
    assert_eq!(p.r1, 0.0);
}

#[test]
fn cobweb_preset_matches_fixture() {
    let fx = fixtures();
    let fx = &fx["cobweb"];
    let p = cobweb_preset_uncertified();
    assert_eq!(presets::COBWEB_A, f(fx, "a"));
    assert_eq!(presets::COBWEB_B, f(fx, "b"));
    assert_eq!(presets::COBWEB_C, f(fx, "c"));
    assert_eq!(presets::COBWEB_D, f(fx, "d"));
    assert_eq!(presets::COBWEB_NOISE_VAR, f(fx, "noise_var"));
    assert_eq!(presets::COBWEB_CAP_FACTOR, f(fx, "cap_factor"));
    assert_eq!(p.horizon, u(fx, "horizon"));
    assert_eq!(p.delta, f(fx, "delta"));
    assert_eq!(p.epsilon, f(fx, "epsilon"));
    assert_eq!(p.default_trajectories, u(fx, "trajectories"));
    assert!((p.r1 - f(fx, "r1")).abs() < 1e-15);
    match &p.initial_set {
        InitialSet::Box(b) => {
            let lo: Vec<f64> = fx["x0_lower"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            let hi: Vec<f64> = fx["x0_upper"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert_eq!(b.lower, lo);
            assert_eq!(b.upper, hi);
        }
        other => panic!("cobweb initial set should be a box, got {other:?}"),
    }
    // the dynamics drift matches the market map at the nominal point
    let x = p.model.step(&[9.2, 3.6], &[], 0).unwrap();
    assert!((x[0] - (10.0 - 1.5 * 4.6f64.ln())).abs() < 1e-14);
    assert!((x[1] - (0.5 * 10.0 - 1.0 - 0.5 * 1.5 * 4.6f64.ln())).abs() < 1e-14);
}

#[test]
fn uav_preset_matches_fixture() {
    let fx = fixtures();
    let fx = &fx["uav"];
    let p = uav_preset();
    assert_eq!(presets::UAV_AIRSPEED, f(fx, "airspeed"));
    assert_eq!(presets::UAV_GRAVITY, f(fx, "gravity"));
    assert_eq!(presets::UAV_ETA, f(fx, "eta"));
    assert_eq!(presets::UAV_NOISE_BASE, f(fx, "noise_base"));
    assert_eq!(presets::UAV_WIND_LIMIT, f(fx, "wind_limit"));
    assert_eq!(p.horizon, u(fx, "horizon"));
    assert_eq!(p.delta, f(fx, "delta"));
    assert_eq!(p.epsilon, f(fx, "epsilon"));
    assert_eq!(p.default_trajectories, u(fx, "trajectories"));
    let x0: Vec<f64> = fx["x0"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    match &p.initial_set {
        InitialSet::Point(x) => {
            for (a, b) in x.iter().zip(x0.iter()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        other => panic!("uav initial set should be a point, got {other:?}"),
    }
    let diag: Vec<f64> = fx["weight_diag"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(presets::UAV_WEIGHT_DIAG.to_vec(), diag);
    match &p.norm {
        NormSpec::Weighted(_) => {
            // ||e_3||_P = 10 under P = diag(1,1,100,50)
            let v = p.norm.norm(&[0.0, 0.0, 1.0, 0.0]).unwrap();
            assert!((v - 10.0).abs() < 1e-12);
        }
        NormSpec::Euclidean => panic!("uav norm should be weighted"),
    }
    let wind = p.model.input_set.as_ref().unwrap();
    assert_eq!(wind.lower, vec![-0.5; 3]);
    assert_eq!(wind.upper, vec![0.5; 3]);
}
