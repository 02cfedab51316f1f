//! The three benchmark experiments: ensemble + bounds + reach sets +
//! coverage, bundled as plain data for the CLI to serialize.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::deviation::{
    amgf_bound, build_schedule, epsilon_constants, markov_bound, worstcase_bound,
    DeviationSchedule, EpsilonConstants,
};
use crate::drs::{interval_reach, natural_inclusion, BallSet, IntervalBox, ReachSet};
use crate::error::{Error, Result};
use crate::model::NormSpec;
use crate::montecarlo::presets::{
    cobweb_lipschitz_at, cobweb_preset, linear_preset, uav_line, uav_preset, ExperimentPreset,
    UAV_WIND_LIMIT,
};
use crate::montecarlo::uav::LineRef;
use crate::montecarlo::{
    deviation_matrix, empirical_quantile_radius, estimate_local_lipschitz, linear_regression,
    nominal_trajectory, run_ensemble, stream_rng, InitialSet, TrajectoryEnsemble,
};
use crate::prs::{coverage_check, make_prs, CoverageRow, ProbabilisticReachSet};

/// Scale knobs for an experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub seed: u64,
    /// Overrides the preset's default ensemble size.
    pub trajectories: Option<usize>,
    /// Sample count for the expectation-bound rows.
    pub expectation_samples: usize,
    /// Sample count per ensemble of the scaling-law sweeps.
    pub scaling_samples: usize,
    /// Paper-scale sweep (10⁷ samples, δ down to 10⁻⁴) instead of desk scale.
    pub full_scale: bool,
    /// Point pairs per step for localized Lipschitz estimation.
    pub lipschitz_pairs: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            seed: 0,
            trajectories: None,
            expectation_samples: 100_000,
            scaling_samples: 1_000_000,
            full_scale: false,
            lipschitz_pairs: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub t: usize,
    pub psi: f64,
    pub r_amgf: f64,
    pub r_markov: f64,
    pub r_worstcase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileRow {
    pub t: usize,
    pub delta: f64,
    pub r_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationRow {
    pub t: usize,
    /// Ensemble mean of the squared deviation.
    pub mean_sq: f64,
    /// `n · Ψ_t`.
    pub bound: f64,
    pub slack: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// `mean_sq ≤ bound + 3·stderr`.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    /// "delta" (x = log(1/δ)) or "n" (x = dimension).
    pub sweep: String,
    pub x: f64,
    pub r_hat_sq: f64,
    pub r_theory_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryEntry {
    pub t: usize,
    pub kind: String,
    pub center: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub inflation: f64,
    /// Semi-axes of the PRS projection for weighted-norm balls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<Vec<f64>>,
    /// 2-D boundary point cloud of the inflated set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<[f64; 2]>>,
    /// 3-D surface point cloud of the inflated set's position projection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Everything a figure needs, as plain serializable data.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub name: String,
    pub seed: u64,
    pub trajectories: usize,
    pub bounds: Vec<BoundRow>,
    pub quantiles: Vec<QuantileRow>,
    pub coverage: Vec<CoverageRow>,
    pub expectation: Vec<ExpectationRow>,
    pub scaling: Vec<ScalingRow>,
    pub geometry: Vec<GeometryEntry>,
    pub checks: Vec<CheckLine>,
}

/// Run a named experiment end to end.
pub fn reproduce_experiment(name: &str, opts: &ExperimentOptions) -> Result<ReportBundle> {
    match name {
        "linear" => linear_experiment(opts),
        "cobweb" => cobweb_experiment(opts),
        "uav" => uav_experiment(opts),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment `{other}`"
        ))),
    }
}

/// A preset together with its deviation schedule and the per-step DRS ball
/// radii around the nominal trajectory. This is the common front half of
/// every experiment, reused by the `bound`, `drs`, and `prs` subcommands.
#[derive(Debug, Clone)]
pub struct PresetPipeline {
    pub preset: ExperimentPreset,
    pub schedule: DeviationSchedule,
    pub radii: Vec<f64>,
    pub nominal: Vec<Vec<f64>>,
}

pub fn preset_pipeline(
    name: &str,
    opts: &ExperimentOptions,
    horizon_override: Option<usize>,
) -> Result<PresetPipeline> {
    match name {
        "linear" => {
            let mut preset = linear_preset(2);
            if let Some(h) = horizon_override {
                preset.horizon = h;
            }
            let horizon = preset.horizon;
            let schedule = DeviationSchedule::constant(
                preset.model.lipschitz.at(0),
                preset.noise.proxy_sq(0),
                horizon,
            )?;
            let nominal = nominal_trajectory(&preset)?;
            Ok(PresetPipeline {
                radii: vec![preset.r1; horizon + 1],
                preset,
                schedule,
                nominal,
            })
        }
        "cobweb" => {
            let mut preset = cobweb_preset()?;
            if let Some(h) = horizon_override {
                preset.horizon = h;
            }
            let horizon = preset.horizon;
            let nominal = nominal_trajectory(&preset)?;
            let (lipschitz, radii) = cobweb_localized_schedule(&nominal, preset.r1, horizon);
            let sigma2 = preset.noise.proxy_sq(0);
            let schedule = build_schedule(&lipschitz, &vec![sigma2; horizon], horizon)?;
            Ok(PresetPipeline {
                preset,
                schedule,
                radii,
                nominal,
            })
        }
        "uav" => {
            let mut preset = uav_preset();
            if let Some(h) = horizon_override {
                preset.horizon = h;
            }
            let horizon = preset.horizon;
            let nominal = nominal_trajectory(&preset)?;
            let (rho, r2) = uav_input_gain(&preset);
            let mut lipschitz = Vec::with_capacity(horizon);
            let mut radii = vec![preset.r1];
            for t in 0..horizon {
                let region = ReachSet::Ball(BallSet::new(
                    nominal[t].clone(),
                    radii[t].max(UAV_REGION_FLOOR),
                    preset.norm.clone(),
                )?);
                let est = estimate_local_lipschitz(
                    &preset.model,
                    &region,
                    opts.lipschitz_pairs,
                    t,
                    &preset.norm,
                    opts.seed ^ 0xa11c_e000 ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                )?;
                lipschitz.push(est.inflated);
                radii.push(est.inflated * radii[t] + rho * r2);
            }
            let sigma2 = preset.noise.proxy_sq(0);
            let schedule = build_schedule(&lipschitz, &vec![sigma2; horizon], horizon)?;
            Ok(PresetPipeline {
                preset,
                schedule,
                radii,
                nominal,
            })
        }
        other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
    }
}

impl PresetPipeline {
    /// The δ-PRS sequence over the horizon: DRS balls inflated by the
    /// deviation radii.
    pub fn prs_sequence(&self) -> Result<Vec<ProbabilisticReachSet>> {
        let eps = epsilon_constants(self.preset.epsilon)?;
        let n = self.preset.model.dim_state;
        (0..=self.preset.horizon)
            .map(|t| {
                make_prs(
                    ReachSet::Ball(BallSet::new(
                        self.nominal[t].clone(),
                        self.radii[t],
                        self.preset.norm.clone(),
                    )?),
                    &self.schedule,
                    n,
                    self.preset.delta,
                    &eps,
                    t,
                )
            })
            .collect()
    }

    pub fn bound_rows(&self) -> Result<Vec<BoundRow>> {
        let eps = epsilon_constants(self.preset.epsilon)?;
        bound_rows(
            &self.schedule,
            self.preset.model.dim_state,
            self.preset.delta,
            &eps,
            self.preset.horizon,
        )
    }
}

fn bound_rows(
    schedule: &DeviationSchedule,
    n: usize,
    delta: f64,
    eps: &EpsilonConstants,
    horizon: usize,
) -> Result<Vec<BoundRow>> {
    (0..=horizon)
        .map(|t| {
            Ok(BoundRow {
                t,
                psi: schedule.psi_cap_at(t)?,
                r_amgf: amgf_bound(schedule, n, delta, eps, t)?,
                r_markov: markov_bound(schedule, n, delta, t)?,
                r_worstcase: worstcase_bound(schedule, n, delta, eps, t)?,
            })
        })
        .collect()
}

fn quantile_rows(
    ensemble: &TrajectoryEnsemble,
    deltas: &[f64],
    horizon: usize,
) -> Result<Vec<QuantileRow>> {
    let mut rows = Vec::new();
    for &delta in deltas {
        if delta * (ensemble.n_traj as f64) < 1.0 {
            continue;
        }
        for t in 0..=horizon {
            rows.push(QuantileRow {
                t,
                delta,
                r_hat: ensemble.quantile_radius(delta, t)?,
            });
        }
    }
    Ok(rows)
}

fn expectation_rows(
    per_time: &[Vec<f64>],
    times: &[usize],
    schedule: &DeviationSchedule,
    n: usize,
) -> Result<Vec<ExpectationRow>> {
    times
        .iter()
        .zip(per_time.iter())
        .map(|(&t, devs)| {
            let m = devs.len() as f64;
            let mean_sq = devs.iter().map(|d| d * d).sum::<f64>() / m;
            let var = devs
                .iter()
                .map(|d| {
                    let e = d * d - mean_sq;
                    e * e
                })
                .sum::<f64>()
                / m;
            let stderr = (var / m).sqrt();
            let bound = n as f64 * schedule.psi_cap_at(t)?;
            Ok(ExpectationRow {
                t,
                mean_sq,
                bound,
                slack: bound - mean_sq,
                stderr,
                pass: mean_sq <= bound + 3.0 * stderr,
            })
        })
        .collect()
}

fn zero_violation_check(
    name: &str,
    coverage: &[CoverageRow],
    times: Option<&[usize]>,
) -> CheckLine {
    let rows: Vec<&CoverageRow> = coverage
        .iter()
        .filter(|r| times.is_none_or(|ts| ts.contains(&r.t)))
        .collect();
    let violations: usize = rows.iter().map(|r| r.total - r.inside).sum();
    CheckLine {
        name: name.into(),
        pass: violations == 0,
        value: violations as f64,
        threshold: 0.0,
        detail: format!("over {} time indices", rows.len()),
    }
}

fn circle_boundary(center: &[f64], radius: f64, m: usize) -> Vec<[f64; 2]> {
    (0..=m)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

/// Point cloud on an axis-aligned ellipsoid surface (Fibonacci sphere).
fn ellipsoid_surface(center: &[f64], semi_axes: &[f64], m: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [
                center[0] + semi_axes[0] * r * phi.cos(),
                center[1] + semi_axes[1] * r * phi.sin(),
                center[2] + semi_axes[2] * z,
            ]
        })
        .collect()
}

/// Boundary of `box ⊕ disk(r)`: support points swept over directions.
fn box_disk_boundary(b: &IntervalBox, r: f64, m: usize) -> Vec<[f64; 2]> {
    (0..=m)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let (c, s) = (a.cos(), a.sin());
            let sx = if c >= 0.0 { b.upper[0] } else { b.lower[0] };
            let sy = if s >= 0.0 { b.upper[1] } else { b.lower[1] };
            [sx + r * c, sy + r * s]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Linear benchmark
// ---------------------------------------------------------------------------

const SCALING_TIME: usize = 25;

fn linear_experiment(opts: &ExperimentOptions) -> Result<ReportBundle> {
    let preset = linear_preset(2);
    let n = 2usize;
    let eps = epsilon_constants(preset.epsilon)?;
    let horizon = preset.horizon;
    let long = horizon.max(SCALING_TIME);
    let sigma2 = preset.noise.proxy_sq(0);
    let schedule = DeviationSchedule::constant(preset.model.lipschitz.at(0), sigma2, long)?;

    let bounds = bound_rows(&schedule, n, preset.delta, &eps, horizon)?;

    let n_traj = opts.trajectories.unwrap_or(preset.default_trajectories);
    let ensemble = run_ensemble(&preset, n_traj, opts.seed)?;

    let nominal = &ensemble.nominal;
    let prs_seq: Vec<ProbabilisticReachSet> = (0..=horizon)
        .map(|t| {
            make_prs(
                ReachSet::Ball(BallSet::new(
                    nominal[t].clone(),
                    0.0,
                    NormSpec::euclidean(),
                )?),
                &schedule,
                n,
                preset.delta,
                &eps,
                t,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let coverage = coverage_check(&prs_seq, &ensemble.states)?;

    let mut checks = vec![zero_violation_check(
        "bound-validity-zero-violations",
        &coverage,
        None,
    )];

    let quantiles = quantile_rows(&ensemble, &[0.1, 0.01, preset.delta], horizon)?;

    // Expectation bound over a dedicated large sample.
    let times: Vec<usize> = (0..=horizon).collect();
    let dm = deviation_matrix(&preset, opts.expectation_samples, opts.seed ^ 0x9e37, &times)?;
    let expectation = expectation_rows(&dm.per_time, &dm.times, &schedule, n)?;
    let worst_slack = expectation
        .iter()
        .map(|r| r.slack / r.bound.max(1e-300))
        .fold(f64::INFINITY, f64::min);
    checks.push(CheckLine {
        name: "expectation-bound".into(),
        pass: expectation.iter().all(|r| r.pass),
        value: worst_slack,
        threshold: 0.0,
        detail: "mean ||X_t - x_t||^2 <= n Psi_t + 3 SE at every t; value is min relative slack".into(),
    });

    // Scaling law at t = 25: quantile-squared vs log(1/δ) and vs n.
    let mut scaling = Vec::new();
    let deltas: Vec<f64> = if opts.full_scale {
        vec![1e-1, 1e-2, 1e-3, 1e-4]
    } else {
        vec![1e-1, 3e-2, 1e-2]
    };
    let n_sweep = [2usize, 4, 8];
    let delta_fixed = if opts.full_scale { 1e-4 } else { 1e-2 };

    let mut devs_by_n: Vec<(usize, Vec<f64>)> = Vec::new();
    for &dim in &n_sweep {
        let p = linear_preset(dim);
        let dm = deviation_matrix(&p, opts.scaling_samples, opts.seed ^ 0x51ca, &[SCALING_TIME])?;
        devs_by_n.push((dim, dm.per_time.into_iter().next().unwrap()));
    }
    let devs_n2 = &devs_by_n[0].1;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &d in &deltas {
        let r_hat = empirical_quantile_radius(devs_n2, d)?;
        let r_theory = amgf_bound(&schedule, n, d, &eps, SCALING_TIME)?;
        xs.push((1.0 / d).ln());
        ys.push(r_hat * r_hat);
        scaling.push(ScalingRow {
            sweep: "delta".into(),
            x: (1.0 / d).ln(),
            r_hat_sq: r_hat * r_hat,
            r_theory_sq: r_theory * r_theory,
        });
    }
    let (_, _, r2_delta) = linear_regression(&xs, &ys);
    checks.push(CheckLine {
        name: "scaling-delta-r2".into(),
        pass: r2_delta >= 0.95,
        value: r2_delta,
        threshold: 0.95,
        detail: format!("r_hat^2 vs log(1/delta) at t = {SCALING_TIME}"),
    });

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (dim, devs) in &devs_by_n {
        let r_hat = empirical_quantile_radius(devs, delta_fixed)?;
        let r_theory = amgf_bound(&schedule, *dim, delta_fixed, &eps, SCALING_TIME)?;
        xs.push(*dim as f64);
        ys.push(r_hat * r_hat);
        scaling.push(ScalingRow {
            sweep: "n".into(),
            x: *dim as f64,
            r_hat_sq: r_hat * r_hat,
            r_theory_sq: r_theory * r_theory,
        });
    }
    let (_, _, r2_n) = linear_regression(&xs, &ys);
    checks.push(CheckLine {
        name: "scaling-n-r2".into(),
        pass: r2_n >= 0.95,
        value: r2_n,
        threshold: 0.95,
        detail: format!("r_hat^2 vs n at delta = {delta_fixed}, t = {SCALING_TIME}"),
    });

    let geometry = (0..=horizon)
        .map(|t| {
            let r = prs_seq[t].inflation;
            GeometryEntry {
                t,
                kind: "ball".into(),
                center: nominal[t].clone(),
                base_radius: Some(0.0),
                lower: None,
                upper: None,
                inflation: r,
                semi_axes: None,
                boundary: Some(circle_boundary(&nominal[t], r, 128)),
                surface: None,
            }
        })
        .collect();

    Ok(ReportBundle {
        name: "linear".into(),
        seed: opts.seed,
        trajectories: n_traj,
        bounds,
        quantiles,
        coverage,
        expectation,
        scaling,
        geometry,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Cobweb market
// ---------------------------------------------------------------------------

/// Localized per-step Lipschitz constants and DRS radii for the cobweb
/// system: `L_t` evaluated at the smallest `q` admitted by the current ball.
pub fn cobweb_localized_schedule(
    nominal: &[Vec<f64>],
    r1: f64,
    horizon: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut lipschitz = Vec::with_capacity(horizon);
    let mut radii = vec![r1];
    for t in 0..horizon {
        let q_min = nominal[t][1] - radii[t];
        let l = cobweb_lipschitz_at(q_min);
        lipschitz.push(l);
        radii.push(l * radii[t]);
    }
    (lipschitz, radii)
}

fn noiseless_trajectories(
    preset: &ExperimentPreset,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let x0 = preset.initial_set.sample(&mut rng);
            let mut traj = vec![x0];
            for t in 0..preset.horizon {
                let next = preset.model.step(&traj[t], &[], t)?;
                traj.push(next);
            }
            Ok(traj)
        })
        .collect()
}

fn cobweb_experiment(opts: &ExperimentOptions) -> Result<ReportBundle> {
    let pipeline = preset_pipeline("cobweb", opts, None)?;
    let PresetPipeline {
        preset,
        schedule,
        radii,
        nominal,
    } = &pipeline;
    let n = 2usize;
    let horizon = preset.horizon;

    let bounds = pipeline.bound_rows()?;
    let prs_seq = pipeline.prs_sequence()?;

    let n_traj = opts.trajectories.unwrap_or(preset.default_trajectories);
    let ensemble = run_ensemble(preset, n_traj, opts.seed)?;
    let coverage = coverage_check(&prs_seq, &ensemble.states)?;

    let mut checks = vec![zero_violation_check(
        "prs-zero-violations",
        &coverage,
        Some(&[1, 2, 3, 5]),
    )];

    // DRS soundness against noiseless trajectories, both backends.
    let noiseless = noiseless_trajectories(preset, 1000, opts.seed ^ 0xd5)?;
    let mut ball_violations = 0usize;
    for traj in &noiseless {
        for (t, x) in traj.iter().enumerate() {
            let d: Vec<f64> = x.iter().zip(nominal[t].iter()).map(|(a, b)| a - b).collect();
            if NormSpec::euclidean().norm(&d)? > radii[t] + 1e-12 {
                ball_violations += 1;
            }
        }
    }
    checks.push(CheckLine {
        name: "drs-lipschitz-soundness".into(),
        pass: ball_violations == 0,
        value: ball_violations as f64,
        threshold: 0.0,
        detail: "noiseless trajectories inside the Lipschitz ball at every t".into(),
    });

    let inc = natural_inclusion(&preset.model)?;
    let x0_box = match &preset.initial_set {
        InitialSet::Box(b) => b.clone(),
        InitialSet::Point(p) => IntervalBox::point(p),
    };
    let boxes = interval_reach(&inc, &x0_box, &IntervalBox::empty(), horizon)?;
    let mut box_violations = 0usize;
    for traj in &noiseless {
        for (t, x) in traj.iter().enumerate() {
            if !boxes[t].contains(x) {
                box_violations += 1;
            }
        }
    }
    checks.push(CheckLine {
        name: "drs-interval-soundness".into(),
        pass: box_violations == 0,
        value: box_violations as f64,
        threshold: 0.0,
        detail: "noiseless trajectories inside [x_lower, x_upper] at every t".into(),
    });

    let quantiles = quantile_rows(&ensemble, &[0.1, 0.01, preset.delta], horizon)?;

    let times: Vec<usize> = (0..=horizon).collect();
    let dm = deviation_matrix(preset, opts.expectation_samples, opts.seed ^ 0x9e37, &times)?;
    let expectation = expectation_rows(&dm.per_time, &dm.times, schedule, n)?;
    checks.push(CheckLine {
        name: "expectation-bound".into(),
        pass: expectation.iter().all(|r| r.pass),
        value: expectation.iter().filter(|r| !r.pass).count() as f64,
        threshold: 0.0,
        detail: "mean ||X_t - x_t||^2 <= n Psi_t + 3 SE at every t".into(),
    });

    let mut geometry = Vec::new();
    for t in 0..=horizon {
        geometry.push(GeometryEntry {
            t,
            kind: "ball".into(),
            center: nominal[t].clone(),
            base_radius: Some(radii[t]),
            lower: None,
            upper: None,
            inflation: prs_seq[t].inflation,
            semi_axes: None,
            boundary: Some(circle_boundary(
                &nominal[t],
                radii[t] + prs_seq[t].inflation,
                128,
            )),
            surface: None,
        });
        geometry.push(GeometryEntry {
            t,
            kind: "box".into(),
            center: boxes[t].center(),
            base_radius: None,
            lower: Some(boxes[t].lower.clone()),
            upper: Some(boxes[t].upper.clone()),
            inflation: prs_seq[t].inflation,
            semi_axes: None,
            boundary: Some(box_disk_boundary(&boxes[t], prs_seq[t].inflation, 256)),
            surface: None,
        });
    }

    Ok(ReportBundle {
        name: "cobweb".into(),
        seed: opts.seed,
        trajectories: n_traj,
        bounds,
        quantiles,
        coverage,
        expectation,
        scaling: Vec::new(),
        geometry,
        checks,
    })
}

// ---------------------------------------------------------------------------
// UAV path following
// ---------------------------------------------------------------------------

const UAV_REGION_FLOOR: f64 = 1.0;

/// Input-to-state gain `ρ = ‖P^{1/2} D_u f‖` for the UAV step map
/// (`D_u f = η·[I₃; 0]`) and the input radius `r₂` of the wind box.
fn uav_input_gain(preset: &ExperimentPreset) -> (f64, f64) {
    let eta = crate::montecarlo::presets::UAV_ETA;
    let mut b = DMatrix::zeros(4, 3);
    for i in 0..3 {
        b[(i, i)] = eta;
    }
    let m = preset.norm.transform_matrix(4) * b;
    let rho = m
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, s| a.max(*s));
    let r2 = (3.0f64).sqrt() * UAV_WIND_LIMIT;
    (rho, r2)
}

fn uav_experiment(opts: &ExperimentOptions) -> Result<ReportBundle> {
    let pipeline = preset_pipeline("uav", opts, None)?;
    let PresetPipeline {
        preset,
        schedule,
        radii,
        nominal,
    } = &pipeline;
    let n = 4usize;
    let horizon = preset.horizon;

    let bounds = pipeline.bound_rows()?;
    let prs_seq = pipeline.prs_sequence()?;

    let n_traj = opts.trajectories.unwrap_or(preset.default_trajectories);
    let ensemble = run_ensemble(preset, n_traj, opts.seed)?;
    let coverage = coverage_check(&prs_seq, &ensemble.states)?;

    let mut checks = vec![zero_violation_check("prs-zero-violations", &coverage, None)];

    // Closed-loop convergence of the noiseless, windless trajectory.
    let line = uav_line();
    let (cross_ok, alt_ok, final_cross) = convergence_profile(nominal, &line);
    checks.push(CheckLine {
        name: "closed-loop-crosstrack-decreasing".into(),
        pass: cross_ok,
        value: final_cross,
        threshold: 0.0,
        detail: "strictly decreasing |cross-track| for 50 <= t < 200".into(),
    });
    checks.push(CheckLine {
        name: "closed-loop-altitude-decreasing".into(),
        pass: alt_ok,
        value: (nominal[horizon][2] - line.origin[2]).abs(),
        threshold: 0.0,
        detail: "strictly decreasing |altitude error| for 50 <= t < 200".into(),
    });

    let quantiles = quantile_rows(&ensemble, &[0.1, 0.01, preset.delta], horizon)?;
    let expectation = expectation_rows(
        &(0..=horizon)
            .map(|t| ensemble.deviations_at(t))
            .collect::<Vec<_>>(),
        &(0..=horizon).collect::<Vec<_>>(),
        schedule,
        n,
    )?;
    checks.push(CheckLine {
        name: "expectation-bound".into(),
        pass: expectation.iter().all(|r| r.pass),
        value: expectation.iter().filter(|r| !r.pass).count() as f64,
        threshold: 0.0,
        detail: "mean ||X_t - x_t||_P^2 <= n Psi_t + 3 SE at every t".into(),
    });

    // PRS projections to position space, subsampled along the horizon.
    let p_diag = crate::montecarlo::presets::UAV_WEIGHT_DIAG;
    let geometry = (0..=horizon)
        .step_by(10)
        .map(|t| {
            let total = radii[t] + prs_seq[t].inflation;
            let semi_axes: Vec<f64> = (0..3).map(|i| total / p_diag[i].sqrt()).collect();
            let surface = ellipsoid_surface(&nominal[t][..3], &semi_axes, 128);
            GeometryEntry {
                t,
                kind: "ellipsoid".into(),
                center: nominal[t][..3].to_vec(),
                base_radius: Some(radii[t]),
                lower: None,
                upper: None,
                inflation: prs_seq[t].inflation,
                semi_axes: Some(semi_axes),
                boundary: None,
                surface: Some(surface),
            }
        })
        .collect();

    Ok(ReportBundle {
        name: "uav".into(),
        seed: opts.seed,
        trajectories: n_traj,
        bounds,
        quantiles,
        coverage,
        expectation,
        scaling: Vec::new(),
        geometry,
        checks,
    })
}

fn convergence_profile(nominal: &[Vec<f64>], line: &LineRef) -> (bool, bool, f64) {
    let cross: Vec<f64> = nominal
        .iter()
        .map(|x| line.cross_track(x[0], x[1]).abs())
        .collect();
    let alt: Vec<f64> = nominal.iter().map(|x| (x[2] - line.origin[2]).abs()).collect();
    let end = nominal.len() - 1;
    let mut cross_ok = true;
    let mut alt_ok = true;
    for t in 50..end {
        cross_ok &= cross[t + 1] < cross[t];
        alt_ok &= alt[t + 1] < alt[t];
    }
    (cross_ok, alt_ok, cross[end])
}
