//! probreach: probabilistic reachable sets for discrete-time stochastic
//! systems, with Monte Carlo validation at every step.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 validation
//! failure under `--check`.

mod config;
mod custom;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use probreach::drs::{interval_reach, natural_inclusion, IntervalBox};
use probreach::montecarlo::experiments::{preset_pipeline, PresetPipeline};
use probreach::montecarlo::{run_ensemble, ExperimentOptions};
use probreach::prs::coverage_check;

use config::{pick, FileConfig, RunConfig, DEFAULT_DELTA, DEFAULT_EPSILON, DEFAULT_OUT, DEFAULT_SEED};
use output::{fmt_float, OutputDir};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io { path: String, message: String },
}

impl From<probreach::Error> for CliError {
    fn from(e: probreach::Error) -> CliError {
        use probreach::Error::*;
        match e {
            DimensionMismatch { .. }
            | InvalidParameter(_)
            | InsufficientSamples { .. }
            | NotExpressible => CliError::Config(e.to_string()),
            NonFinite { .. }
            | Domain { .. }
            | InvertedBounds { .. }
            | NonSubGaussian(_)
            | DegenerateRegion(_) => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "probreach", version, about = "Probabilistic reachable sets for discrete-time stochastic systems")]
struct Cli {
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<CommandKind>,
}

#[derive(Subcommand, Debug, Clone)]
enum CommandKind {
    /// Emit the deviation-radius schedule (Psi and the three radii) as CSV
    Bound(CommonArgs),
    /// Deterministic reachable-set over-approximation per step
    Drs(DrsArgs),
    /// Probabilistic reachable sets with Monte Carlo coverage
    Prs(EnsembleArgs),
    /// Sample trajectory pairs and write them as CSV
    Simulate(EnsembleArgs),
    /// Run the AMGF lemma suite and emit a JSON pass/fail report
    AmgfCheck(AmgfCheckArgs),
    /// Reproduce a named experiment end to end (linear, cobweb, uav)
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Built-in system preset: linear, cobweb, or uav
    #[arg(long)]
    preset: Option<String>,
    /// Custom system spec (JSON file)
    #[arg(long, value_name = "FILE")]
    system: Option<PathBuf>,
    /// Probability level in (0,1)
    #[arg(long)]
    delta: Option<f64>,
    /// Concentration parameter in (0,1)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Horizon (defaults to the preset's)
    #[arg(long, visible_alias = "T")]
    horizon: Option<usize>,
    /// Master RNG seed (env: PROBREACH_SEED)
    #[arg(long, env = "PROBREACH_SEED")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct DrsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Reachability backend: lipschitz or interval
    #[arg(long)]
    backend: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct EnsembleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of sampled trajectories
    #[arg(long)]
    trajectories: Option<usize>,
    /// Exit with code 4 if coverage falls below threshold
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug, Clone)]
struct AmgfCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Monte Carlo samples per lemma check
    #[arg(long)]
    samples: Option<usize>,
    /// Exit with code 4 if any check fails
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug, Clone)]
struct ExperimentArgs {
    /// Experiment name: linear, cobweb, or uav
    name: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
    /// Ensemble size override
    #[arg(long)]
    trajectories: Option<usize>,
    /// Samples per ensemble of the scaling sweeps
    #[arg(long)]
    scaling_samples: Option<usize>,
    /// Samples for the expectation-bound rows
    #[arg(long)]
    expectation_samples: Option<usize>,
    /// Point pairs per step for Lipschitz estimation
    #[arg(long)]
    lipschitz_pairs: Option<usize>,
    /// Paper-scale sweeps (10^7 samples, delta down to 1e-4)
    #[arg(long)]
    full_scale: bool,
    /// Exit with code 4 if any validation check fails
    #[arg(long)]
    check: bool,
}

fn main() {
    let code = run();
    std::process::exit(code);
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                0
            } else {
                2
            };
        }
    };
    match resolve_and_execute(cli) {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            3
        }
        Err(CliError::Io { path, message }) => {
            eprintln!("i/o error at {path}: {message}");
            2
        }
    }
}

fn resolve_and_execute(cli: Cli) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = resolve(cli.command, file)?;
    cfg.validate()?;
    execute(&cfg)
}

fn resolve(command: Option<CommandKind>, file: FileConfig) -> Result<RunConfig, CliError> {
    let mut overrides = Vec::new();

    // The subcommand itself can come from the file when absent on the line.
    let command = match command {
        Some(c) => {
            if let Some(fc) = &file.subcommand {
                if fc != subcommand_name(&c) {
                    overrides.push("subcommand".to_string());
                }
            }
            c
        }
        None => match file.subcommand.as_deref() {
            Some("bound") => CommandKind::Bound(CommonArgs::default()),
            Some("drs") => CommandKind::Drs(DrsArgs {
                common: CommonArgs::default(),
                backend: None,
            }),
            Some("prs") => CommandKind::Prs(EnsembleArgs {
                common: CommonArgs::default(),
                trajectories: None,
                check: false,
            }),
            Some("simulate") => CommandKind::Simulate(EnsembleArgs {
                common: CommonArgs::default(),
                trajectories: None,
                check: false,
            }),
            Some("amgf-check") => CommandKind::AmgfCheck(AmgfCheckArgs {
                common: CommonArgs::default(),
                samples: None,
                check: false,
            }),
            Some("experiment") => CommandKind::Experiment(ExperimentArgs {
                name: None,
                common: CommonArgs::default(),
                trajectories: None,
                scaling_samples: None,
                expectation_samples: None,
                lipschitz_pairs: None,
                full_scale: false,
                check: false,
            }),
            Some(other) => {
                return Err(CliError::Config(format!("unknown subcommand `{other}`")))
            }
            None => return Err(CliError::Config("no subcommand given".into())),
        },
    };

    let subcommand = subcommand_name(&command).to_string();
    let (common, experiment, trajectories, samples, backend, extra) = split_args(command);

    let preset = pick(common.preset, file.preset, "preset", &mut overrides);
    let system = pick(common.system, file.system, "system", &mut overrides);
    let delta = pick(common.delta, file.delta, "delta", &mut overrides);
    let epsilon = pick(common.epsilon, file.epsilon, "epsilon", &mut overrides);
    let horizon = pick(common.horizon, file.horizon, "horizon", &mut overrides);
    let seed = pick(common.seed, file.seed, "seed", &mut overrides).unwrap_or(DEFAULT_SEED);
    let out = pick(common.out, file.out, "out", &mut overrides)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let experiment = pick(experiment, file.name, "name", &mut overrides);
    let trajectories = pick(trajectories, file.trajectories, "trajectories", &mut overrides);
    let samples = pick(samples, file.samples, "samples", &mut overrides).unwrap_or(100_000);
    let backend = pick(backend, file.backend, "backend", &mut overrides);
    let scaling_samples = pick(
        extra.scaling_samples,
        file.scaling_samples,
        "scaling_samples",
        &mut overrides,
    )
    .unwrap_or(1_000_000);
    let expectation_samples = pick(
        extra.expectation_samples,
        file.expectation_samples,
        "expectation_samples",
        &mut overrides,
    )
    .unwrap_or(100_000);
    let lipschitz_pairs = pick(
        extra.lipschitz_pairs,
        file.lipschitz_pairs,
        "lipschitz_pairs",
        &mut overrides,
    )
    .unwrap_or(1000);
    let full_scale = extra.full_scale || file.full_scale.unwrap_or(false);
    let check = extra.check || file.check.unwrap_or(false);

    Ok(RunConfig {
        subcommand,
        experiment,
        preset,
        system: system.map(|p| p.display().to_string()),
        delta,
        epsilon,
        horizon,
        seed,
        out,
        trajectories,
        samples,
        scaling_samples,
        expectation_samples,
        lipschitz_pairs,
        backend,
        full_scale,
        check,
        overrides,
    })
}

fn subcommand_name(c: &CommandKind) -> &'static str {
    match c {
        CommandKind::Bound(_) => "bound",
        CommandKind::Drs(_) => "drs",
        CommandKind::Prs(_) => "prs",
        CommandKind::Simulate(_) => "simulate",
        CommandKind::AmgfCheck(_) => "amgf-check",
        CommandKind::Experiment(_) => "experiment",
    }
}

#[derive(Default)]
struct ExtraArgs {
    scaling_samples: Option<usize>,
    expectation_samples: Option<usize>,
    lipschitz_pairs: Option<usize>,
    full_scale: bool,
    check: bool,
}

type SplitArgs = (
    CommonArgs,
    Option<String>,
    Option<usize>,
    Option<usize>,
    Option<String>,
    ExtraArgs,
);

fn split_args(command: CommandKind) -> SplitArgs {
    match command {
        CommandKind::Bound(c) => (c, None, None, None, None, ExtraArgs::default()),
        CommandKind::Drs(a) => (a.common, None, None, None, a.backend, ExtraArgs::default()),
        CommandKind::Prs(a) | CommandKind::Simulate(a) => (
            a.common,
            None,
            a.trajectories,
            None,
            None,
            ExtraArgs {
                check: a.check,
                ..Default::default()
            },
        ),
        CommandKind::AmgfCheck(a) => (
            a.common,
            None,
            None,
            a.samples,
            None,
            ExtraArgs {
                check: a.check,
                ..Default::default()
            },
        ),
        CommandKind::Experiment(a) => (
            a.common,
            a.name,
            a.trajectories,
            None,
            None,
            ExtraArgs {
                scaling_samples: a.scaling_samples,
                expectation_samples: a.expectation_samples,
                lipschitz_pairs: a.lipschitz_pairs,
                full_scale: a.full_scale,
                check: a.check,
            },
        ),
    }
}

fn experiment_options(cfg: &RunConfig) -> ExperimentOptions {
    ExperimentOptions {
        seed: cfg.seed,
        trajectories: cfg.trajectories,
        expectation_samples: cfg.expectation_samples,
        scaling_samples: if cfg.full_scale {
            cfg.scaling_samples.max(10_000_000)
        } else {
            cfg.scaling_samples
        },
        full_scale: cfg.full_scale,
        lipschitz_pairs: cfg.lipschitz_pairs,
    }
}

/// Build the pipeline for either a preset or a custom system spec. Explicit
/// delta/epsilon flags override the preset's published values; custom
/// systems fall back to the documented defaults.
fn pipeline_for(cfg: &RunConfig) -> Result<PresetPipeline, CliError> {
    let mut pipeline = match (&cfg.preset, &cfg.system) {
        (Some(name), None) => preset_pipeline(name, &experiment_options(cfg), cfg.horizon)?,
        (None, Some(path)) => custom::load_custom_pipeline(
            &PathBuf::from(path),
            cfg.delta.unwrap_or(DEFAULT_DELTA),
            cfg.epsilon.unwrap_or(DEFAULT_EPSILON),
            cfg.horizon,
        )?,
        _ => return Err(CliError::Config("missing system spec".into())),
    };
    if let Some(delta) = cfg.delta {
        pipeline.preset.delta = delta;
    }
    if let Some(epsilon) = cfg.epsilon {
        pipeline.preset.epsilon = epsilon;
    }
    Ok(pipeline)
}

fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    match cfg.subcommand.as_str() {
        "bound" => cmd_bound(cfg),
        "drs" => cmd_drs(cfg),
        "prs" => cmd_prs(cfg),
        "simulate" => cmd_simulate(cfg),
        "amgf-check" => cmd_amgf_check(cfg),
        "experiment" => cmd_experiment(cfg),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn cmd_bound(cfg: &RunConfig) -> Result<i32, CliError> {
    let pipeline = pipeline_for(cfg)?;
    let rows = pipeline.bound_rows()?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_csv(
        "bounds.csv",
        "t,Psi,r_amgf,r_markov,r_worstcase",
        &rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.t,
                    fmt_float(r.psi),
                    fmt_float(r.r_amgf),
                    fmt_float(r.r_markov),
                    fmt_float(r.r_worstcase)
                )
            })
            .collect::<Vec<_>>(),
    )?;
    out.finish(cfg)?;
    Ok(0)
}

fn cmd_drs(cfg: &RunConfig) -> Result<i32, CliError> {
    let pipeline = pipeline_for(cfg)?;
    let backend = cfg.backend.as_deref().unwrap_or("lipschitz");
    let mut out = OutputDir::create(&cfg.out)?;
    let dim = pipeline.preset.model.dim_state;
    match backend {
        "lipschitz" => {
            let center_cols: Vec<String> = (0..dim).map(|i| format!("center_{i}")).collect();
            let header = format!("t,radius,{}", center_cols.join(","));
            let rows: Vec<String> = (0..=pipeline.preset.horizon)
                .map(|t| {
                    let centers: Vec<String> =
                        pipeline.nominal[t].iter().copied().map(fmt_float).collect();
                    format!("{t},{},{}", fmt_float(pipeline.radii[t]), centers.join(","))
                })
                .collect();
            out.write_csv("drs.csv", &header, &rows)?;
        }
        "interval" => {
            let inc = natural_inclusion(&pipeline.preset.model)?;
            let x0_box = match &pipeline.preset.initial_set {
                probreach::montecarlo::InitialSet::Box(b) => b.clone(),
                probreach::montecarlo::InitialSet::Point(p) => IntervalBox::point(p),
            };
            let input_box = match &pipeline.preset.model.input_set {
                Some(b) => IntervalBox::new(b.lower.clone(), b.upper.clone())?,
                None => IntervalBox::empty(),
            };
            let boxes = interval_reach(&inc, &x0_box, &input_box, pipeline.preset.horizon)?;
            let lower_cols: Vec<String> = (0..dim).map(|i| format!("lower_{i}")).collect();
            let upper_cols: Vec<String> = (0..dim).map(|i| format!("upper_{i}")).collect();
            let header = format!("t,{},{}", lower_cols.join(","), upper_cols.join(","));
            let rows: Vec<String> = boxes
                .iter()
                .enumerate()
                .map(|(t, b)| {
                    let lo: Vec<String> = b.lower.iter().copied().map(fmt_float).collect();
                    let hi: Vec<String> = b.upper.iter().copied().map(fmt_float).collect();
                    format!("{t},{},{}", lo.join(","), hi.join(","))
                })
                .collect();
            out.write_csv("drs.csv", &header, &rows)?;
        }
        other => return Err(CliError::Config(format!("unknown backend `{other}`"))),
    }
    out.finish(cfg)?;
    Ok(0)
}

fn cmd_prs(cfg: &RunConfig) -> Result<i32, CliError> {
    let pipeline = pipeline_for(cfg)?;
    let prs_seq = pipeline.prs_sequence()?;
    let n_traj = cfg
        .trajectories
        .unwrap_or(pipeline.preset.default_trajectories);
    let ensemble = run_ensemble(&pipeline.preset, n_traj, cfg.seed)?;
    let coverage = coverage_check(&prs_seq, &ensemble.states)?;

    let mut out = OutputDir::create(&cfg.out)?;
    let dim = pipeline.preset.model.dim_state;
    let center_cols: Vec<String> = (0..dim).map(|i| format!("center_{i}")).collect();
    let header = format!(
        "t,base_radius,inflation,total_radius,{}",
        center_cols.join(",")
    );
    let rows: Vec<String> = prs_seq
        .iter()
        .map(|p| {
            let centers: Vec<String> =
                pipeline.nominal[p.t].iter().copied().map(fmt_float).collect();
            format!(
                "{},{},{},{},{}",
                p.t,
                fmt_float(pipeline.radii[p.t]),
                fmt_float(p.inflation),
                fmt_float(pipeline.radii[p.t] + p.inflation),
                centers.join(",")
            )
        })
        .collect();
    out.write_csv("prs.csv", &header, &rows)?;
    write_coverage_csv(&mut out, &coverage)?;

    #[derive(serde::Serialize)]
    struct PrsGeometry {
        t: usize,
        center: Vec<f64>,
        base_radius: f64,
        inflation: f64,
    }
    let geometry: Vec<PrsGeometry> = prs_seq
        .iter()
        .map(|p| PrsGeometry {
            t: p.t,
            center: pipeline.nominal[p.t].clone(),
            base_radius: pipeline.radii[p.t],
            inflation: p.inflation,
        })
        .collect();
    out.write_json("geometry.json", &geometry)?;
    out.finish(cfg)?;

    let all_pass = coverage.iter().all(|r| r.pass);
    if cfg.check && !all_pass {
        return Ok(4);
    }
    Ok(0)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<i32, CliError> {
    let pipeline = pipeline_for(cfg)?;
    let n_traj = cfg.trajectories.unwrap_or(10);
    let ensemble = run_ensemble(&pipeline.preset, n_traj, cfg.seed)?;
    let mut out = OutputDir::create(&cfg.out)?;
    let dim = pipeline.preset.model.dim_state;
    let cols: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
    let header = format!("traj,t,{},deviation", cols.join(","));
    let mut rows = Vec::new();
    for (i, traj) in ensemble.states.iter().enumerate() {
        for (t, x) in traj.iter().enumerate() {
            let coords: Vec<String> = x.iter().copied().map(fmt_float).collect();
            rows.push(format!(
                "{i},{t},{},{}",
                coords.join(","),
                fmt_float(ensemble.deviations[i][t])
            ));
        }
    }
    out.write_csv("trajectories.csv", &header, &rows)?;
    out.finish(cfg)?;
    Ok(0)
}

fn cmd_amgf_check(cfg: &RunConfig) -> Result<i32, CliError> {
    let reports = probreach::amgf::lemma_suite(cfg.samples, cfg.seed)?;
    let all_pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        println!(
            "{} {} (estimate {:.6e}, bound {:.6e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.estimate,
            r.bound
        );
    }
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("amgf_report.json", &reports)?;
    out.finish(cfg)?;
    if cfg.check && !all_pass {
        return Ok(4);
    }
    Ok(0)
}

fn cmd_experiment(cfg: &RunConfig) -> Result<i32, CliError> {
    let name = cfg
        .experiment
        .as_deref()
        .ok_or_else(|| CliError::Config("experiment name required".into()))?;
    let opts = experiment_options(cfg);
    let bundle = probreach::montecarlo::reproduce_experiment(name, &opts)?;

    for c in &bundle.checks {
        println!(
            "{} {} (value {:.6e}, threshold {:.6e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }

    let mut out = OutputDir::create(&cfg.out)?;
    out.write_csv(
        "bounds.csv",
        "t,Psi,r_amgf,r_markov,r_worstcase",
        &bundle
            .bounds
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.t,
                    fmt_float(r.psi),
                    fmt_float(r.r_amgf),
                    fmt_float(r.r_markov),
                    fmt_float(r.r_worstcase)
                )
            })
            .collect::<Vec<_>>(),
    )?;
    out.write_csv(
        "quantiles.csv",
        "t,delta,r_hat",
        &bundle
            .quantiles
            .iter()
            .map(|r| format!("{},{},{}", r.t, fmt_float(r.delta), fmt_float(r.r_hat)))
            .collect::<Vec<_>>(),
    )?;
    write_coverage_csv(&mut out, &bundle.coverage)?;
    out.write_csv(
        "expectation.csv",
        "t,mean_sq,bound,slack,stderr,pass",
        &bundle
            .expectation
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.t,
                    fmt_float(r.mean_sq),
                    fmt_float(r.bound),
                    fmt_float(r.slack),
                    fmt_float(r.stderr),
                    r.pass
                )
            })
            .collect::<Vec<_>>(),
    )?;
    if !bundle.scaling.is_empty() {
        out.write_csv(
            "scaling.csv",
            "sweep,x,r_hat_sq,r_theory_sq",
            &bundle
                .scaling
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{}",
                        r.sweep,
                        fmt_float(r.x),
                        fmt_float(r.r_hat_sq),
                        fmt_float(r.r_theory_sq)
                    )
                })
                .collect::<Vec<_>>(),
        )?;
    }
    out.write_json("geometry.json", &bundle.geometry)?;
    out.write_json("report.json", &bundle)?;
    out.finish(cfg)?;

    let all_pass = bundle.checks.iter().all(|c| c.pass);
    if cfg.check && !all_pass {
        return Ok(4);
    }
    Ok(0)
}

fn write_coverage_csv(
    out: &mut OutputDir,
    coverage: &[probreach::prs::CoverageRow],
) -> Result<(), CliError> {
    out.write_csv(
        "coverage.csv",
        "t,inside,total,coverage,threshold,pass",
        &coverage
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.t,
                    r.inside,
                    r.total,
                    fmt_float(r.coverage),
                    fmt_float(r.threshold),
                    r.pass
                )
            })
            .collect::<Vec<_>>(),
    )
}
