//! Monte Carlo validation: trajectory ensembles, empirical deviation
//! quantiles, sampling-based localized Lipschitz estimation, and the built-in
//! experiment presets.
//!
//! Every ensemble derives one private RNG stream per trajectory from
//! `(master seed, trajectory index)`, so runs parallelize freely while
//! staying bit-reproducible.

pub mod experiments;
pub mod presets;
pub mod uav;

pub use experiments::{reproduce_experiment, ExperimentOptions, ReportBundle};
pub use presets::{cobweb_preset, linear_preset, preset_by_name, uav_preset, ExperimentPreset};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::drs::{IntervalBox, ReachSet};
use crate::error::{Error, Result};
use crate::model::{simulate_pair, NormSpec, SystemModel};

/// Initial state set `𝒳₀`.
#[derive(Debug, Clone)]
pub enum InitialSet {
    Point(Vec<f64>),
    Box(IntervalBox),
}

impl InitialSet {
    pub fn center(&self) -> Vec<f64> {
        match self {
            InitialSet::Point(x) => x.clone(),
            InitialSet::Box(b) => b.center(),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            InitialSet::Point(x) => x.clone(),
            InitialSet::Box(b) => b.sample(rng),
        }
    }

    /// Radius of the set around its center in the given norm
    /// (max over corners for a box).
    pub fn radius_in(&self, norm: &NormSpec) -> Result<f64> {
        match self {
            InitialSet::Point(_) => Ok(0.0),
            InitialSet::Box(b) => {
                let c = b.center();
                let n = b.dim();
                let mut best = 0.0f64;
                for mask in 0..(1usize << n) {
                    let corner: Vec<f64> = (0..n)
                        .map(|i| {
                            if mask & (1 << i) != 0 {
                                b.upper[i] - c[i]
                            } else {
                                b.lower[i] - c[i]
                            }
                        })
                        .collect();
                    best = best.max(norm.norm(&corner)?);
                }
                Ok(best)
            }
        }
    }
}

/// Private RNG stream for trajectory `index` under a master seed.
pub fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Sampled stochastic trajectories plus the nominal deterministic trajectory
/// of the preset (center initial state, center inputs).
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub horizon: usize,
    /// `states[traj][t][coord]`
    pub states: Vec<Vec<Vec<f64>>>,
    /// Deviation `‖X_t − x_t‖` of each trajectory from its own associated
    /// deterministic trajectory, in the preset norm: `deviations[traj][t]`.
    pub deviations: Vec<Vec<f64>>,
    pub nominal: Vec<Vec<f64>>,
    pub seed: u64,
}

impl TrajectoryEnsemble {
    /// Deviations of all trajectories at one time index.
    pub fn deviations_at(&self, t: usize) -> Vec<f64> {
        self.deviations.iter().map(|d| d[t]).collect()
    }

    /// Empirical `(1−δ)`-quantile of the deviation at time `t`.
    pub fn quantile_radius(&self, delta: f64, t: usize) -> Result<f64> {
        empirical_quantile_radius(&self.deviations_at(t), delta)
    }
}

/// Nominal deterministic trajectory: center initial state, center inputs,
/// zero noise.
pub fn nominal_trajectory(preset: &ExperimentPreset) -> Result<Vec<Vec<f64>>> {
    let x0 = preset.initial_set.center();
    let inputs = center_inputs(&preset.model, preset.horizon);
    let mut traj = Vec::with_capacity(preset.horizon + 1);
    traj.push(x0);
    for t in 0..preset.horizon {
        let u: &[f64] = if preset.model.dim_input > 0 {
            &inputs[t]
        } else {
            &[]
        };
        let next = preset.model.step(&traj[t], u, t)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: t + 1,
                trajectory: None,
            });
        }
        traj.push(next);
    }
    Ok(traj)
}

fn center_inputs(model: &SystemModel, horizon: usize) -> Vec<Vec<f64>> {
    match &model.input_set {
        Some(b) if model.dim_input > 0 => vec![b.center(); horizon],
        _ => Vec::new(),
    }
}

fn sampled_inputs(model: &SystemModel, horizon: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match &model.input_set {
        Some(b) if model.dim_input > 0 => (0..horizon).map(|_| b.sample(rng)).collect(),
        _ => Vec::new(),
    }
}

/// Run `n_traj` independent trajectory pairs of a preset; reproducible for a
/// fixed seed, parallel over trajectories.
pub fn run_ensemble(
    preset: &ExperimentPreset,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
    }
    let nominal = nominal_trajectory(preset)?;
    let per_traj: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..n_traj)
        .into_par_iter()
        .map(|i| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let mut rng = stream_rng(seed, i);
            let x0 = preset.initial_set.sample(&mut rng);
            let inputs = sampled_inputs(&preset.model, preset.horizon, &mut rng);
            let pair = simulate_pair(
                &preset.model,
                &preset.noise,
                &x0,
                &inputs,
                preset.horizon,
                &mut rng,
            )
            .map_err(|e| match e {
                Error::NonFinite { step, .. } => Error::NonFinite {
                    step,
                    trajectory: Some(i),
                },
                other => other,
            })?;
            let devs = pair.deviations(&preset.norm)?;
            Ok((pair.stochastic, devs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut states = Vec::with_capacity(n_traj);
    let mut deviations = Vec::with_capacity(n_traj);
    for (s, d) in per_traj {
        states.push(s);
        deviations.push(d);
    }
    Ok(TrajectoryEnsemble {
        n_traj,
        horizon: preset.horizon,
        states,
        deviations,
        nominal,
        seed,
    })
}

/// Deviations at selected times only, for large ensembles where keeping the
/// full state history would not fit in memory. `per_time[j][traj]` holds the
/// deviation at `times[j]`.
pub struct DeviationMatrix {
    pub times: Vec<usize>,
    pub per_time: Vec<Vec<f64>>,
}

pub fn deviation_matrix(
    preset: &ExperimentPreset,
    n_traj: usize,
    seed: u64,
    times: &[usize],
) -> Result<DeviationMatrix> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
    }
    let horizon = preset.horizon.max(times.iter().copied().max().unwrap_or(0));
    // Chunked so ten-million-trajectory sweeps do not pay a heap allocation
    // per trajectory; streams stay keyed by the absolute trajectory index.
    const CHUNK: usize = 8192;
    let n_chunks = n_traj.div_ceil(CHUNK);
    let chunk_results: Vec<Vec<Vec<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Vec<f64>>> {
            let start = c * CHUNK;
            let end = n_traj.min(start + CHUNK);
            let mut local = vec![Vec::with_capacity(end - start); times.len()];
            for i in start..end {
                let mut rng = stream_rng(seed, i);
                let x0 = preset.initial_set.sample(&mut rng);
                let inputs = sampled_inputs(&preset.model, horizon, &mut rng);
                let pair =
                    simulate_pair(&preset.model, &preset.noise, &x0, &inputs, horizon, &mut rng)
                        .map_err(|e| match e {
                            Error::NonFinite { step, .. } => Error::NonFinite {
                                step,
                                trajectory: Some(i),
                            },
                            other => other,
                        })?;
                let devs = pair.deviations(&preset.norm)?;
                for (j, &t) in times.iter().enumerate() {
                    local[j].push(devs[t]);
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_time = vec![Vec::with_capacity(n_traj); times.len()];
    for chunk in chunk_results {
        for (j, v) in chunk.into_iter().enumerate() {
            per_time[j].extend(v);
        }
    }
    Ok(DeviationMatrix {
        times: times.to_vec(),
        per_time,
    })
}

/// The `⌈δ·N⌉`-th largest value: the empirical `(1−δ)`-quantile of the
/// deviation sample.
pub fn empirical_quantile_radius(deviations: &[f64], delta: f64) -> Result<f64> {
    let n = deviations.len();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    if delta * (n as f64) < 1.0 {
        return Err(Error::InsufficientSamples {
            needed: (1.0 / delta).ceil() as usize,
            got: n,
        });
    }
    let k = (delta * n as f64).ceil() as usize;
    let mut sorted = deviations.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted[k - 1])
}

/// Statistical localized Lipschitz estimate over a region.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzEstimate {
    /// Largest sampled ratio `‖f(x,u,t) − f(y,u,t)‖ / ‖x − y‖`; a Monte Carlo
    /// lower bound on the true constant.
    pub raw_max: f64,
    /// `raw_max` inflated by 1.1; this is the value fed into schedules.
    pub inflated: f64,
}

/// Inflation applied on top of the sampled maximum ratio.
pub const LIPSCHITZ_INFLATION: f64 = 1.1;

/// Sample `n_pairs` point pairs in `region` (inputs drawn from the model's
/// input set) and return the largest difference ratio in the given norm,
/// inflated by [`LIPSCHITZ_INFLATION`]. A statistical estimate, not a
/// certified bound.
pub fn estimate_local_lipschitz(
    model: &SystemModel,
    region: &ReachSet,
    n_pairs: usize,
    t: usize,
    norm: &NormSpec,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if n_pairs < 1 {
        return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
    }
    let degenerate = match region {
        ReachSet::Ball(b) => b.radius == 0.0,
        ReachSet::Box(b) => b.widths().iter().all(|w| *w == 0.0),
    };
    if degenerate {
        return Err(Error::DegenerateRegion(
            "region has zero diameter, ratios are undefined".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw_max = 0.0f64;
    let empty: Vec<f64> = Vec::new();
    for _ in 0..n_pairs {
        let x = sample_region(region, &mut rng)?;
        let y = sample_region(region, &mut rng)?;
        let u = match &model.input_set {
            Some(b) if model.dim_input > 0 => b.sample(&mut rng),
            _ => empty.clone(),
        };
        let dxy: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
        let denom = norm.norm(&dxy)?;
        if denom < 1e-12 {
            continue;
        }
        let fx = model.step(&x, &u, t)?;
        let fy = model.step(&y, &u, t)?;
        let dfx: Vec<f64> = fx.iter().zip(fy.iter()).map(|(a, b)| a - b).collect();
        raw_max = raw_max.max(norm.norm(&dfx)? / denom);
    }
    Ok(LipschitzEstimate {
        raw_max,
        inflated: LIPSCHITZ_INFLATION * raw_max,
    })
}

fn sample_region(region: &ReachSet, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    match region {
        ReachSet::Box(b) => Ok(b.sample(rng)),
        ReachSet::Ball(b) => {
            // uniform in the ball of the ball's own norm: draw in the
            // transformed frame, map back
            let n = b.center.len();
            let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm_dir = crate::model::euclidean_norm(&dir);
            let radius = b.radius * rng.random::<f64>().powf(1.0 / n as f64);
            let z: Vec<f64> = dir.iter().map(|d| d / norm_dir * radius).collect();
            let offset = b.norm.inverse_transform(&z)?;
            Ok(b.center.iter().zip(offset.iter()).map(|(c, o)| c + o).collect())
        }
    }
}

/// Least-squares fit `y = a + b·x` with the coefficient of determination.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drs::BallSet;
    use crate::expr::{mul, Expr};
    use crate::model::{Dynamics, NoiseSpec, Sequence};

    #[test]
    fn quantile_order_statistic_rule() {
        // δ = 0.5 on {1,2,3,4}: ⌈0.5·4⌉ = 2nd largest = 3
        assert_eq!(
            empirical_quantile_radius(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(),
            3.0
        );
        // all equal
        assert_eq!(empirical_quantile_radius(&[2.5; 10], 0.2).unwrap(), 2.5);
        // insufficient samples for tiny delta
        assert!(matches!(
            empirical_quantile_radius(&[1.0, 2.0], 0.1),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn quantile_non_increasing_in_delta() {
        let devs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.77).sin().abs()).collect();
        let mut prev = f64::INFINITY;
        for delta in [0.001, 0.01, 0.05, 0.1, 0.2, 0.5] {
            let q = empirical_quantile_radius(&devs, delta).unwrap();
            assert!(q <= prev, "delta {delta}: {q} > {prev}");
            prev = q;
        }
    }

    #[test]
    fn ensemble_is_reproducible() {
        let preset = linear_preset(2);
        let a = run_ensemble(&preset, 50, 123).unwrap();
        let b = run_ensemble(&preset, 50, 123).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.deviations, b.deviations);
        let c = run_ensemble(&preset, 50, 124).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn ensemble_initial_states_lie_in_initial_set() {
        let preset = presets::cobweb_preset_uncertified();
        let ens = run_ensemble(&preset, 100, 17).unwrap();
        let (b, r1) = match &preset.initial_set {
            InitialSet::Box(b) => (b.clone(), preset.r1),
            _ => unreachable!(),
        };
        let center = b.center();
        for traj in &ens.states {
            assert!(b.contains(&traj[0]));
            let d: Vec<f64> = traj[0].iter().zip(center.iter()).map(|(a, c)| a - c).collect();
            assert!(crate::model::euclidean_norm(&d) <= r1 + 1e-15);
        }
    }

    #[test]
    fn ensemble_deviation_zero_at_t0_and_zero_noise() {
        let mut preset = linear_preset(2);
        for d in run_ensemble(&preset, 20, 5).unwrap().deviations {
            assert_eq!(d[0], 0.0);
        }
        preset.noise = NoiseSpec::uniform_box(vec![0.0, 0.0]);
        let ens = run_ensemble(&preset, 1, 5).unwrap();
        assert!(ens.deviations[0].iter().all(|d| *d == 0.0));
    }

    #[test]
    fn deviation_matrix_agrees_with_ensemble() {
        let preset = linear_preset(2);
        let ens = run_ensemble(&preset, 40, 9).unwrap();
        let dm = deviation_matrix(&preset, 40, 9, &[0, 7, 15]).unwrap();
        for (j, &t) in dm.times.iter().enumerate() {
            assert_eq!(dm.per_time[j], ens.deviations_at(t));
        }
    }

    #[test]
    fn lipschitz_estimate_linear_map() {
        // induced norm of A = diag(0.9, 0.3) is 0.9
        let model = SystemModel::new(
            2,
            0,
            Dynamics::Expressions(vec![
                mul(Expr::constant(0.9), Expr::state(0)),
                mul(Expr::constant(0.3), Expr::state(1)),
            ]),
            Sequence::Constant(0.9),
            None,
        )
        .unwrap();
        let region = ReachSet::Ball(
            BallSet::new(vec![0.0, 0.0], 1.0, NormSpec::euclidean()).unwrap(),
        );
        let est =
            estimate_local_lipschitz(&model, &region, 20_000, 0, &NormSpec::euclidean(), 3)
                .unwrap();
        assert!(est.raw_max <= 0.9 + 1e-12);
        assert!((est.raw_max - 0.9).abs() / 0.9 < 0.05, "raw {}", est.raw_max);
        assert!((est.inflated - LIPSCHITZ_INFLATION * est.raw_max).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_estimate_identity() {
        let model = SystemModel::new(
            2,
            0,
            Dynamics::Expressions(vec![Expr::state(0), Expr::state(1)]),
            Sequence::Constant(1.0),
            None,
        )
        .unwrap();
        let region =
            ReachSet::Box(IntervalBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap());
        let est =
            estimate_local_lipschitz(&model, &region, 2_000, 0, &NormSpec::euclidean(), 4)
                .unwrap();
        assert!((est.raw_max - 1.0).abs() < 1e-12);
        assert!((est.inflated - 1.1).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_estimate_cobweb_respects_analytic_cap() {
        let preset = presets::cobweb_preset_uncertified();
        let region =
            ReachSet::Box(IntervalBox::new(vec![9.0, 3.5], vec![9.4, 3.7]).unwrap());
        let est =
            estimate_local_lipschitz(&preset.model, &region, 20_000, 0, &NormSpec::euclidean(), 5)
                .unwrap();
        let cap = 1.5 * (1.0f64 + 0.25).sqrt() / (1.0 + 3.5);
        assert!(est.raw_max <= cap, "raw {} vs cap {cap}", est.raw_max);
    }

    #[test]
    fn lipschitz_estimate_rejects_degenerate_region() {
        let model = SystemModel::new(
            1,
            0,
            Dynamics::Expressions(vec![Expr::state(0)]),
            Sequence::Constant(1.0),
            None,
        )
        .unwrap();
        let region = ReachSet::Box(IntervalBox::point(&[1.0]));
        assert!(matches!(
            estimate_local_lipschitz(&model, &region, 100, 0, &NormSpec::euclidean(), 0),
            Err(Error::DegenerateRegion(_))
        ));
    }

    #[test]
    fn regression_r2_on_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        let (slope, intercept, r2) = linear_regression(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(intercept.abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
