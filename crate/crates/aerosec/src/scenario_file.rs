//! TOML scenario files.
//!
//! ```toml
//! [params]                 # optional; missing keys take the defaults
//! alpha = 0.95
//! n0_dbm_per_hz = -174.0
//! g0_db = -50.0
//!
//! [[gus]]
//! x = 120.0
//! y = 340.0
//!
//! [[uavs]]
//! ini = [150.0, 150.0]
//! fin = [850.0, 150.0]
//!
//! [jammer]
//! x = 500.0
//! y = 500.0
//!
//! [eavesdropper]           # either `path` (one point per slot) or `from`/`to`
//! from = [100.0, 900.0]
//! to = [900.0, 900.0]
//!
//! [tasks]                  # exactly one of `uniform`, `generator`, `grid`
//! slots = 20
//! seed = 0
//! generator = { l_min = 1e6, l_max = 1e7, c_bar_min = 10.0, c_bar_max = 100.0, mu = 0.0, sigma_ratio = 0.01 }
//! ```
//!
//! `grid` lists, per GU, one `{ l, c_bar, mu, sigma }` table per slot.

use std::path::Path;

use aerosec_core::scenario::{
    db_to_linear, dbm_to_watts, linear_path, linear_to_db, watts_to_dbm, Endpoints, TaskGenerator,
};
use aerosec_core::{NetworkParams, Point, Scenario, ScenarioParts, Task, TaskSpec};
use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub tau: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub v0: f64,
    pub h_s: f64,
    pub h_e: f64,
    pub m_max: usize,
    pub p0: f64,
    pub p_jam: f64,
    pub n0_dbm_per_hz: f64,
    pub b0: f64,
    pub g0_db: f64,
    pub f_g: f64,
    pub f_u: f64,
    pub eps_g: f64,
    pub eps_u: f64,
    pub p1: f64,
    pub p2: f64,
    pub v_bla: f64,
    pub v_rot: f64,
    pub drag_g: f64,
    pub rho_air: f64,
    pub s0: f64,
    pub a0: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub zeta: f64,
    pub sca_tol: f64,
    pub solver_tol: f64,
}

impl From<&NetworkParams> for ParamsFile {
    fn from(p: &NetworkParams) -> Self {
        ParamsFile {
            tau: p.tau,
            alpha: p.alpha,
            kappa: p.kappa,
            v0: p.v0,
            h_s: p.h_s,
            h_e: p.h_e,
            m_max: p.m_max,
            p0: p.p0,
            p_jam: p.p_jam,
            n0_dbm_per_hz: watts_to_dbm(p.n0),
            b0: p.b0,
            g0_db: linear_to_db(p.g0),
            f_g: p.f_g,
            f_u: p.f_u,
            eps_g: p.eps_g,
            eps_u: p.eps_u,
            p1: p.p1,
            p2: p.p2,
            v_bla: p.v_bla,
            v_rot: p.v_rot,
            drag_g: p.drag_g,
            rho_air: p.rho_air,
            s0: p.s0,
            a0: p.a0,
            x_min: p.x_min,
            x_max: p.x_max,
            y_min: p.y_min,
            y_max: p.y_max,
            zeta: p.zeta,
            sca_tol: p.sca_tol,
            solver_tol: p.solver_tol,
        }
    }
}

impl From<&ParamsFile> for NetworkParams {
    fn from(f: &ParamsFile) -> Self {
        NetworkParams {
            tau: f.tau,
            alpha: f.alpha,
            kappa: f.kappa,
            v0: f.v0,
            h_s: f.h_s,
            h_e: f.h_e,
            m_max: f.m_max,
            p0: f.p0,
            p_jam: f.p_jam,
            n0: dbm_to_watts(f.n0_dbm_per_hz),
            b0: f.b0,
            g0: db_to_linear(f.g0_db),
            f_g: f.f_g,
            f_u: f.f_u,
            eps_g: f.eps_g,
            eps_u: f.eps_u,
            p1: f.p1,
            p2: f.p2,
            v_bla: f.v_bla,
            v_rot: f.v_rot,
            drag_g: f.drag_g,
            rho_air: f.rho_air,
            s0: f.s0,
            a0: f.a0,
            x_min: f.x_min,
            x_max: f.x_max,
            y_min: f.y_min,
            y_max: f.y_max,
            zeta: f.zeta,
            sca_tol: f.sca_tol,
            solver_tol: f.solver_tol,
        }
    }
}

impl Default for ParamsFile {
    fn default() -> Self {
        ParamsFile::from(&NetworkParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Xy {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavFile {
    pub ini: [f64; 2],
    pub fin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EavFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub l: f64,
    pub c_bar: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorFile {
    pub l_min: f64,
    pub l_max: f64,
    pub c_bar_min: f64,
    pub c_bar_max: f64,
    pub mu: f64,
    pub sigma_ratio: f64,
}

impl Default for GeneratorFile {
    fn default() -> Self {
        let g = TaskGenerator::default();
        GeneratorFile {
            l_min: g.l_min,
            l_max: g.l_max,
            c_bar_min: g.c_bar_min,
            c_bar_max: g.c_bar_max,
            mu: g.mu,
            sigma_ratio: g.sigma_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TasksFile {
    pub slots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform: Option<TaskFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Vec<TaskFile>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub params: ParamsFile,
    pub gus: Vec<Xy>,
    pub uavs: Vec<UavFile>,
    pub jammer: Xy,
    pub eavesdropper: EavFile,
    pub tasks: TasksFile,
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

fn task(t: &TaskFile) -> Task {
    Task { l: t.l, c_bar: t.c_bar, mu: t.mu, sigma: t.sigma }
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> aerosec_core::Result<Scenario> {
        use aerosec_core::Error;
        let slots = self.tasks.slots;
        let gus = self.gus.len();
        let eav_path = match (&self.eavesdropper.path, self.eavesdropper.from, self.eavesdropper.to) {
            (Some(path), None, None) => {
                if path.len() != slots {
                    return Err(Error::Validation(format!(
                        "eavesdropper path has {} points but tasks.slots = {slots}",
                        path.len()
                    )));
                }
                path.iter().copied().map(pt).collect()
            }
            (None, Some(a), Some(b)) => linear_path(pt(a), pt(b), slots),
            _ => return Err(Error::Validation("eavesdropper needs either `path` or both `from` and `to`".into())),
        };
        let t = &self.tasks;
        let tasks = match (&t.uniform, &t.generator, &t.grid) {
            (Some(u), None, None) => TaskSpec::uniform(gus, slots, task(u))?,
            (None, Some(g), None) => {
                let g = TaskGenerator {
                    l_min: g.l_min,
                    l_max: g.l_max,
                    c_bar_min: g.c_bar_min,
                    c_bar_max: g.c_bar_max,
                    mu: g.mu,
                    sigma_ratio: g.sigma_ratio,
                };
                TaskSpec::generate(gus, slots, &g, t.seed)?
            }
            (None, None, Some(grid)) => {
                if grid.len() != gus || grid.iter().any(|row| row.len() != slots) {
                    return Err(Error::Validation(format!("tasks.grid must be {gus} rows of {slots} tasks")));
                }
                TaskSpec::new(gus, slots, grid.iter().flatten().map(task).collect())?
            }
            _ => return Err(Error::Validation("tasks need exactly one of `uniform`, `generator`, `grid`".into())),
        };
        ScenarioParts {
            gus: self.gus.iter().map(|g| Point::new(g.x, g.y)).collect(),
            jammer: Point::new(self.jammer.x, self.jammer.y),
            eav_path,
            uav_endpoints: self.uavs.iter().map(|u| Endpoints { ini: pt(u.ini), fin: pt(u.fin) }).collect(),
            tasks,
            params: NetworkParams::from(&self.params),
        }
        .build()
    }

    /// Every field written out: explicit eavesdropper path and task grid.
    pub fn from_scenario(s: &Scenario) -> Self {
        let slots = s.num_slots();
        let grid = (0..s.num_gus())
            .map(|i| {
                (0..slots)
                    .map(|t| {
                        let k = s.task(i, t);
                        TaskFile { l: k.l, c_bar: k.c_bar, mu: k.mu, sigma: k.sigma }
                    })
                    .collect()
            })
            .collect();
        ScenarioFile {
            params: ParamsFile::from(s.params()),
            gus: s.gus().iter().map(|g| Xy { x: g.x, y: g.y }).collect(),
            uavs: s
                .uav_endpoints()
                .iter()
                .map(|e| UavFile { ini: [e.ini.x, e.ini.y], fin: [e.fin.x, e.fin.y] })
                .collect(),
            jammer: Xy { x: s.jammer().x, y: s.jammer().y },
            eavesdropper: EavFile { path: Some(s.eav_path().iter().map(|p| [p.x, p.y]).collect()), from: None, to: None },
            tasks: TasksFile { slots, seed: 0, uniform: None, generator: None, grid: Some(grid) },
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, String> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| e.to_string())?;
    file.to_scenario().map_err(|e| e.to_string())
}

pub fn load_scenario(path: &Path) -> AppResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| AppError::Format { path: path.into(), msg: e.to_string() })?;
    Ok(file.to_scenario()?)
}

pub fn scenario_to_toml(s: &Scenario) -> String {
    toml::to_string(&ScenarioFile::from_scenario(s)).expect("scenario files always serialize")
}
