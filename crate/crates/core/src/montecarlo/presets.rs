//! The three built-in experiment presets.
//!
//! Parameters are pinned by `tests/preset_fixtures.rs` against the fixtures
//! file; anything not stated there (the UAV guidance gains, certification
//! sample counts) is owned by this artifact.

use std::sync::Arc;

use crate::drs::IntervalBox;
use crate::error::Result;
use crate::expr::{mul, sub, Expr};
use crate::model::{
    certify_variance_proxy, CapFn, Dynamics, InputBox, NoiseSpec, NormSpec, Sequence, SystemModel,
};
use crate::montecarlo::uav::{uav_closed_loop_step, LineRef, UavGains, UavParams};
use crate::montecarlo::InitialSet;

// Linear benchmark: X' = -0.93 I X + w, w ~ N(0, 0.2 I).
pub const LINEAR_A: f64 = -0.93;
pub const LINEAR_SIGMA_SQ: f64 = 0.2;
pub const LINEAR_HORIZON: usize = 15;
pub const LINEAR_DELTA: f64 = 1e-3;
pub const LINEAR_EPSILON: f64 = 1.0 / 16.0;
pub const LINEAR_TRAJECTORIES: usize = 5000;

// Cobweb supply-demand market.
pub const COBWEB_A: f64 = 10.0;
pub const COBWEB_B: f64 = 1.5;
pub const COBWEB_C: f64 = 0.5;
pub const COBWEB_D: f64 = 1.0;
pub const COBWEB_NOISE_VAR: f64 = 1e-5;
pub const COBWEB_CAP_FACTOR: f64 = 0.05;
pub const COBWEB_X0_LOWER: [f64; 2] = [9.195, 3.595];
pub const COBWEB_X0_UPPER: [f64; 2] = [9.205, 3.605];
pub const COBWEB_HORIZON: usize = 5;
pub const COBWEB_DELTA: f64 = 1e-3;
pub const COBWEB_EPSILON: f64 = 1.0 / 32.0;
pub const COBWEB_TRAJECTORIES: usize = 2000;

// Fixed-wing UAV path following.
pub const UAV_AIRSPEED: f64 = 13.0;
pub const UAV_GRAVITY: f64 = 9.8;
pub const UAV_ETA: f64 = 0.1;
pub const UAV_NOISE_BASE: f64 = 0.1;
pub const UAV_WIND_LIMIT: f64 = 0.5;
pub const UAV_HORIZON: usize = 200;
pub const UAV_DELTA: f64 = 1e-4;
pub const UAV_EPSILON: f64 = 1.0 / 16.0;
pub const UAV_TRAJECTORIES: usize = 2000;
pub const UAV_WEIGHT_DIAG: [f64; 4] = [1.0, 1.0, 100.0, 50.0];
pub const UAV_X0: [f64; 4] = [5.0, 4.5, 0.0, 5.0 * std::f64::consts::PI / 18.0];

/// A fully populated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: String,
    pub model: SystemModel,
    pub noise: NoiseSpec,
    pub norm: NormSpec,
    pub initial_set: InitialSet,
    pub horizon: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub default_trajectories: usize,
    /// Initial-set radius in the active norm (the `r1` of the Lipschitz DRS).
    pub r1: f64,
}

pub fn preset_by_name(name: &str) -> Result<ExperimentPreset> {
    match name {
        "linear" => Ok(linear_preset(2)),
        "cobweb" => cobweb_preset(),
        "uav" => Ok(uav_preset()),
        other => Err(crate::error::Error::InvalidParameter(format!(
            "unknown preset `{other}` (expected linear, cobweb, or uav)"
        ))),
    }
}

/// The contraction benchmark in `n` dimensions.
pub fn linear_preset(n: usize) -> ExperimentPreset {
    let exprs = (0..n)
        .map(|i| mul(Expr::constant(LINEAR_A), Expr::state(i)))
        .collect();
    let model = SystemModel::new(
        n,
        0,
        Dynamics::Expressions(exprs),
        Sequence::Constant(LINEAR_A.abs()),
        None,
    )
    .expect("valid linear model");
    ExperimentPreset {
        name: "linear".into(),
        model,
        noise: NoiseSpec::gaussian_iso(n, LINEAR_SIGMA_SQ.sqrt())
            .with_proxy(Sequence::Constant(LINEAR_SIGMA_SQ)),
        norm: NormSpec::euclidean(),
        initial_set: InitialSet::Point(vec![0.0; n]),
        horizon: LINEAR_HORIZON,
        delta: LINEAR_DELTA,
        epsilon: LINEAR_EPSILON,
        default_trajectories: LINEAR_TRAJECTORIES,
        r1: 0.0,
    }
}

/// Cobweb dynamics in the primitive-op vocabulary:
/// `p' = a − b·log1p(q)`, `q' = (ca − d) − cb·log1p(q)`.
pub fn cobweb_exprs() -> Vec<Expr> {
    vec![
        sub(
            Expr::constant(COBWEB_A),
            mul(Expr::constant(COBWEB_B), Expr::Log1p(Box::new(Expr::state(1)))),
        ),
        sub(
            Expr::constant(COBWEB_C * COBWEB_A - COBWEB_D),
            mul(
                Expr::constant(COBWEB_C * COBWEB_B),
                Expr::Log1p(Box::new(Expr::state(1))),
            ),
        ),
    ]
}

/// Localized Lipschitz constant `b√(1+c²)/(1+q)` of the cobweb map.
pub fn cobweb_lipschitz_at(q: f64) -> f64 {
    COBWEB_B * (1.0 + COBWEB_C * COBWEB_C).sqrt() / (1.0 + q)
}

fn cobweb_noise() -> NoiseSpec {
    // Raw per-coordinate truncated Gaussians capped at 0.05·(candidate
    // state); the market noise enters the state as [w₁, c·w₁ + w₂].
    let cap: CapFn = Arc::new(|_, candidate: &[f64]| {
        candidate.iter().map(|v| COBWEB_CAP_FACTOR * v.abs()).collect()
    });
    NoiseSpec::truncated_gaussian(vec![COBWEB_NOISE_VAR.sqrt(); 2], cap)
        .with_mix(vec![vec![1.0, 0.0], vec![COBWEB_C, 1.0]])
}

/// Cobweb preset with a placeholder variance proxy (raw per-coordinate
/// variance); cheap to build for tests that do not touch deviation bounds.
pub fn cobweb_preset_uncertified() -> ExperimentPreset {
    let model = SystemModel::new(
        2,
        0,
        Dynamics::Expressions(cobweb_exprs()),
        // sound for the operating region q >= 0
        Sequence::Constant(cobweb_lipschitz_at(0.0)),
        None,
    )
    .expect("valid cobweb model");
    let x0 = IntervalBox::new(COBWEB_X0_LOWER.to_vec(), COBWEB_X0_UPPER.to_vec())
        .expect("valid initial box");
    let r1 = InitialSet::Box(x0.clone())
        .radius_in(&NormSpec::euclidean())
        .expect("box radius");
    ExperimentPreset {
        name: "cobweb".into(),
        model,
        noise: cobweb_noise(),
        norm: NormSpec::euclidean(),
        initial_set: InitialSet::Box(x0),
        horizon: COBWEB_HORIZON,
        delta: COBWEB_DELTA,
        epsilon: COBWEB_EPSILON,
        default_trajectories: COBWEB_TRAJECTORIES,
        r1,
    }
}

const COBWEB_CERTIFY_SAMPLES: usize = 50_000;

/// Cobweb preset with the variance proxy certified along the nominal
/// trajectory (per-horizon maximum of the per-step empirical proxies).
pub fn cobweb_preset() -> Result<ExperimentPreset> {
    let mut preset = cobweb_preset_uncertified();
    let grid: Vec<f64> = (1..=10)
        .flat_map(|k| [k as f64, -(k as f64)])
        .collect();
    let mut x = preset.initial_set.center();
    let mut proxy_sq = 0.0f64;
    for t in 0..preset.horizon {
        let candidate = preset.model.step(&x, &[], t)?;
        let sigma = certify_variance_proxy(
            &preset.noise,
            &preset.norm,
            COBWEB_CERTIFY_SAMPLES,
            &grid,
            t,
            &candidate,
        )?;
        proxy_sq = proxy_sq.max(sigma * sigma);
        x = candidate;
    }
    preset.noise = preset.noise.with_proxy(Sequence::Constant(proxy_sq));
    Ok(preset)
}

pub fn uav_line() -> LineRef {
    let s = 2f64.sqrt().recip();
    LineRef {
        origin: [0.0, 0.0, 3.0],
        direction: [s, s, 0.0],
    }
}

pub fn uav_params() -> UavParams {
    UavParams {
        airspeed: UAV_AIRSPEED,
        gravity: UAV_GRAVITY,
        eta: UAV_ETA,
    }
}

/// Per-coordinate noise standard deviations `√η·0.1·diag(1,1,1,√0.1)`.
pub fn uav_noise_scales() -> [f64; 4] {
    let base = UAV_ETA.sqrt() * UAV_NOISE_BASE;
    [base, base, base, base * 0.1f64.sqrt()]
}

pub fn uav_preset() -> ExperimentPreset {
    let params = uav_params();
    let line = uav_line();
    let gains = UavGains::default();
    let step = move |x: &[f64], u: &[f64], _t: usize| -> Vec<f64> {
        uav_closed_loop_step(x, u, &params, &line, &gains)
    };
    let model = SystemModel::new(
        4,
        3,
        Dynamics::Native(Arc::new(step)),
        // per-step constants are estimated at experiment time
        Sequence::Constant(1.0),
        Some(InputBox::symmetric(&[UAV_WIND_LIMIT; 3])),
    )
    .expect("valid uav model");
    let norm = NormSpec::weighted_diag(&UAV_WEIGHT_DIAG).expect("SPD weight");
    let noise = NoiseSpec::gaussian(uav_noise_scales().to_vec());
    // proxy in the weighted frame: largest singular value of P^{1/2}·scale
    let sigma = certify_variance_proxy(&noise, &norm, 10_000, &[-10.0, 10.0], 0, &[])
        .expect("closed-form gaussian proxy");
    let noise = noise.with_proxy(Sequence::Constant(sigma * sigma));
    ExperimentPreset {
        name: "uav".into(),
        model,
        noise,
        norm,
        initial_set: InitialSet::Point(UAV_X0.to_vec()),
        horizon: UAV_HORIZON,
        delta: UAV_DELTA,
        epsilon: UAV_EPSILON,
        default_trajectories: UAV_TRAJECTORIES,
        r1: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_by_name() {
        for name in ["linear", "cobweb", "uav"] {
            assert_eq!(preset_by_name(name).unwrap().name, name);
        }
        assert!(preset_by_name("pendulum").is_err());
    }

    #[test]
    fn linear_nominal_is_zero() {
        let preset = linear_preset(2);
        let nominal = crate::montecarlo::nominal_trajectory(&preset).unwrap();
        for x in nominal {
            assert_eq!(x, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn cobweb_r1_matches_the_box_corner() {
        let preset = cobweb_preset_uncertified();
        assert!((preset.r1 - 5.0 * 2f64.sqrt() * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn cobweb_lipschitz_stays_contractive_on_trajectory() {
        let preset = cobweb_preset_uncertified();
        let nominal = crate::montecarlo::nominal_trajectory(&preset).unwrap();
        for x in &nominal {
            let l = cobweb_lipschitz_at(x[1]);
            assert!(l > 0.0 && l < 1.0, "L = {l} at q = {}", x[1]);
        }
    }

    #[test]
    fn cobweb_certified_proxy_near_analytic() {
        // The mixed noise [w₁, c·w₁+w₂] has direction-wise variance proxy
        // √λmax(MMᵀ)·σ with M = [[1,0],[c,1]]; truncation only shrinks it.
        let preset = cobweb_preset().unwrap();
        let proxy = preset.noise.proxy_sq(0).sqrt();
        let m_gram_top = {
            let tr = 2.0 + COBWEB_C * COBWEB_C;
            let det = 1.0f64;
            (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0
        };
        let analytic = (m_gram_top * COBWEB_NOISE_VAR).sqrt();
        assert!(
            proxy >= 0.9 * analytic && proxy <= 1.15 * analytic,
            "certified {proxy} vs analytic {analytic}"
        );
    }

    #[test]
    fn uav_proxy_in_weighted_frame() {
        let preset = uav_preset();
        // max singular value of P^{1/2} diag(scales) = √0.1·0.1·10
        let expect = (UAV_ETA.sqrt() * UAV_NOISE_BASE * 10.0).powi(2);
        assert!((preset.noise.proxy_sq(0) - expect).abs() < 1e-12);
    }

    #[test]
    fn uav_step_matches_kinematics() {
        let preset = uav_preset();
        let x = UAV_X0.to_vec();
        let next = preset.model.step(&x, &[0.0, 0.0, 0.0], 0).unwrap();
        // heading update: θ + η(g/v)tan(φ) with saturated commands
        assert_eq!(next.len(), 4);
        assert!((next[0] - x[0]).abs() < UAV_ETA * (UAV_AIRSPEED + UAV_WIND_LIMIT));
        // climbing toward the line from below
        assert!(next[2] > x[2]);
    }
}
