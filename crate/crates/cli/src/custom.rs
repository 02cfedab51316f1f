//! Custom systems loadable from a JSON spec: dimensions, one primitive-op
//! expression per state coordinate, Lipschitz constants, and optionally a
//! noise description (gaussian or uniform box), input box, and initial set.

use std::path::PathBuf;

use serde::Deserialize;

use probreach::drs::{lipschitz_radius_sequence, IntervalBox};
use probreach::expr::Expr;
use probreach::model::{Dynamics, InputBox, NoiseSpec, NormSpec, Sequence, SystemModel};
use probreach::montecarlo::experiments::PresetPipeline;
use probreach::montecarlo::{nominal_trajectory, ExperimentPreset, InitialSet};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxJson {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LipschitzJson {
    Constant(f64),
    PerStep(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NoiseJson {
    Gaussian { scale: Vec<f64> },
    UniformBox { half_width: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomSystemSpec {
    dim_state: usize,
    #[serde(default)]
    dim_input: usize,
    /// One expression per state coordinate, in the primitive-op vocabulary.
    exprs: Vec<Expr>,
    lipschitz: LipschitzJson,
    #[serde(default)]
    noise: Option<NoiseJson>,
    #[serde(default)]
    input_box: Option<BoxJson>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    x0_box: Option<BoxJson>,
    #[serde(default)]
    horizon: Option<usize>,
    /// Input-to-state gain for the Lipschitz DRS recurrence.
    #[serde(default)]
    rho: Option<f64>,
}

/// Load a custom system spec and assemble the preset plus its pipeline.
pub fn load_custom_pipeline(
    path: &PathBuf,
    delta: f64,
    epsilon: f64,
    horizon_override: Option<usize>,
) -> Result<PresetPipeline, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let spec: CustomSystemSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;

    if spec.exprs.len() != spec.dim_state {
        return Err(CliError::Config(format!(
            "expected {} expressions, got {}",
            spec.dim_state,
            spec.exprs.len()
        )));
    }
    let horizon = horizon_override.or(spec.horizon).unwrap_or(10);
    let lipschitz = match spec.lipschitz {
        LipschitzJson::Constant(c) => Sequence::Constant(c),
        LipschitzJson::PerStep(v) => {
            if v.len() < horizon {
                return Err(CliError::Config(format!(
                    "per_step lipschitz has {} entries, horizon is {horizon}",
                    v.len()
                )));
            }
            Sequence::PerStep(v)
        }
    };
    let input_set = spec.input_box.as_ref().map(|b| InputBox {
        lower: b.lower.clone(),
        upper: b.upper.clone(),
    });
    let model = SystemModel::new(
        spec.dim_state,
        spec.dim_input,
        Dynamics::Expressions(spec.exprs.clone()),
        lipschitz,
        input_set,
    )?;

    let noise = match &spec.noise {
        Some(NoiseJson::Gaussian { scale }) => NoiseSpec::gaussian(scale.clone()),
        Some(NoiseJson::UniformBox { half_width }) => NoiseSpec::uniform_box(half_width.clone()),
        None => NoiseSpec::uniform_box(vec![0.0; spec.dim_state]),
    };
    if noise.dim() != spec.dim_state {
        return Err(CliError::Config(
            "noise dimension must match dim_state".into(),
        ));
    }

    let initial_set = match (&spec.x0, &spec.x0_box) {
        (Some(x0), None) => InitialSet::Point(x0.clone()),
        (None, Some(b)) => InitialSet::Box(IntervalBox::new(b.lower.clone(), b.upper.clone())?),
        (None, None) => InitialSet::Point(vec![0.0; spec.dim_state]),
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either x0 or x0_box, not both".into()))
        }
    };

    let norm = NormSpec::euclidean();
    let r1 = initial_set.radius_in(&norm)?;
    let preset = ExperimentPreset {
        name: "custom".into(),
        model,
        noise,
        norm,
        initial_set,
        horizon,
        delta,
        epsilon,
        default_trajectories: 1000,
        r1,
    };

    let nominal = nominal_trajectory(&preset)?;
    let l_values = preset.model.lipschitz.values(horizon);
    let sigma2 = vec![preset.noise.proxy_sq(0); horizon];
    let schedule = probreach::deviation::build_schedule(&l_values, &sigma2, horizon)?;
    let rho = spec.rho.unwrap_or(0.0);
    let r2 = preset
        .model
        .input_set
        .as_ref()
        .map(|b| b.radius())
        .unwrap_or(0.0);
    let radii = lipschitz_radius_sequence(&l_values, rho, r1, r2)?;

    Ok(PresetPipeline {
        preset,
        schedule,
        radii,
        nominal,
    })
}
