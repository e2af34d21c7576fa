//! Parameter sweeps.
//!
//! A preset names a base scenario, one axis, its values and the replication
//! seeds. Built-in presets sweep the desk scenario; preset files use the
//! same fields in TOML:
//!
//! ```toml
//! name = "alpha"
//! scenario = "desk"        # or a scenario file, relative to this file
//! axis = "alpha"
//! values = [0.8, 0.9, 0.95, 0.99]
//! seeds = [0, 1, 2]
//! headline = 0.95          # optional: the value that is the reference setting
//! ```

use std::path::{Path, PathBuf};

use aerosec_core::scenario::{try_desk_scenario, Task};
use aerosec_core::{NetworkParams, Scenario, ScenarioParts};
use serde::{Deserialize, Serialize};

use crate::scenario_file::load_scenario;
use crate::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Scales every task's σ.
    #[serde(rename = "sigma_multiplier")]
    SigmaMultiplier,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "p0")]
    P0,
    #[serde(rename = "f_g")]
    FG,
    /// Scales every task's length.
    #[serde(rename = "l_scale")]
    LScale,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SigmaMultiplier => "sigma_multiplier",
            Axis::Alpha => "alpha",
            Axis::P0 => "p0",
            Axis::FG => "f_g",
            Axis::LScale => "l_scale",
        }
    }

    /// `s` with this axis set to `v`.
    pub fn apply(self, s: &Scenario, v: f64) -> aerosec_core::Result<Scenario> {
        let scale_tasks = |f: &dyn Fn(&Task) -> Task| {
            let parts = s.parts().clone();
            let tasks = parts.tasks.map(f)?;
            ScenarioParts { tasks, ..parts }.build()
        };
        match self {
            Axis::SigmaMultiplier => scale_tasks(&|t| Task { sigma: t.sigma * v, ..*t }),
            Axis::LScale => scale_tasks(&|t| Task { l: t.l * v, ..*t }),
            Axis::Alpha => s.with_params(|p| p.alpha = v),
            Axis::P0 => s.with_params(|p| p.p0 = v),
            Axis::FG => s.with_params(|p| p.f_g = v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    /// The desk scenario drawn from each replication seed.
    Desk { gus: usize, slots: usize },
    /// A fixed scenario file; seeds only drive the Monte-Carlo checks.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub base: Base,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub headline: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    name: String,
    #[serde(default = "desk")]
    scenario: String,
    #[serde(default = "ten")]
    gus: usize,
    #[serde(default = "twenty")]
    slots: usize,
    axis: Axis,
    values: Vec<f64>,
    seeds: Vec<u64>,
    out: Option<PathBuf>,
    headline: Option<f64>,
}

fn desk() -> String {
    "desk".into()
}

fn ten() -> usize {
    10
}

fn twenty() -> usize {
    20
}

pub const BUILTIN: [&str; 5] = ["reference", "alpha", "p0", "f_g", "l_scale"];

impl ExperimentPreset {
    pub fn validate(&self) -> AppResult<()> {
        if self.values.len() < 2 {
            return Err(AppError::Preset(format!("{}: the sweep axis needs at least two values", self.name)));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AppError::Preset(format!("{}: axis values must be finite and strictly increasing", self.name)));
        }
        if self.seeds.is_empty() {
            return Err(AppError::Preset(format!("{}: at least one seed is required", self.name)));
        }
        if let Some(h) = self.headline {
            if !self.values.contains(&h) {
                return Err(AppError::Preset(format!("{}: headline value {h} is not on the axis", self.name)));
            }
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let (axis, values, headline): (Axis, Vec<f64>, f64) = match name {
            "reference" => (Axis::SigmaMultiplier, vec![0.5, 1.0, 2.0, 4.0], 1.0),
            "alpha" => (Axis::Alpha, vec![0.8, 0.9, 0.95, 0.99], 0.95),
            "p0" => (Axis::P0, vec![1.0, 2.0, 4.0], 2.0),
            "f_g" => (Axis::FG, vec![0.5e8, 1e8, 2e8], 1e8),
            "l_scale" => (Axis::LScale, vec![0.5, 0.75, 1.0], 1.0),
            _ => return None,
        };
        Some(ExperimentPreset {
            name: name.into(),
            base: Base::Desk { gus: 10, slots: 20 },
            axis,
            values,
            seeds: (0..10).collect(),
            out: PathBuf::from("results").join(name),
            headline: Some(headline),
        })
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let f: PresetFile =
            toml::from_str(&text).map_err(|e| AppError::Format { path: path.into(), msg: e.to_string() })?;
        let base = if f.scenario == "desk" {
            Base::Desk { gus: f.gus, slots: f.slots }
        } else {
            Base::File(path.parent().unwrap_or(Path::new(".")).join(&f.scenario))
        };
        let out = f.out.unwrap_or_else(|| PathBuf::from("results").join(&f.name));
        let p = ExperimentPreset { name: f.name, base, axis: f.axis, values: f.values, seeds: f.seeds, out, headline: f.headline };
        p.validate()?;
        Ok(p)
    }

    /// A built-in name or a path to a preset file.
    pub fn resolve(name_or_path: &str) -> AppResult<Self> {
        match Self::builtin(name_or_path) {
            Some(p) => Ok(p),
            None => {
                let path = Path::new(name_or_path);
                if path.exists() {
                    Self::load(path)
                } else {
                    Err(AppError::Preset(format!(
                        "unknown preset {name_or_path:?}; built-in presets are {}",
                        BUILTIN.join(", ")
                    )))
                }
            }
        }
    }

    /// Base scenario for one replication, before the axis is applied.
    pub fn base_scenario(&self, seed: u64, params: &NetworkParams) -> AppResult<Scenario> {
        match &self.base {
            Base::Desk { gus, slots } => Ok(try_desk_scenario(seed, params.clone(), *gus, *slots)?),
            Base::File(path) => load_scenario(path),
        }
    }
}
