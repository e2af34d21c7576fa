//! Sweep execution and the CSV reports.
//!
//! `results.csv` has one row per (axis value, seed):
//!
//! | column | meaning |
//! |---|---|
//! | `preset`, `axis`, `value`, `seed` | run identity |
//! | `headline` | 1 if `value` is the preset's reference setting |
//! | `status`, `ideal_status` | `converged`, `max_rounds`, `infeasible` or `internal` |
//! | `rounds`, `ideal_rounds` | alternation rounds |
//! | `robust_gamma`, `ideal_gamma`, `ratio` | Γ (J) and robust/ideal |
//! | `offloaded_bits`, `ideal_offloaded_bits` | bits sent to the S-UAVs |
//! | `e_local`, `e_tx`, `e_edge`, `e_fly` | robust Γ by component (J), UAV terms weighted by κ |
//! | `max_violation`, `ideal_max_violation` | worst Monte-Carlo deadline miss rate |
//! | `wall_time_s` | seconds for the whole run |
//!
//! `trajectories.csv` lists `value, seed, kind, m, t, x, y` with `kind` one
//! of `init`, `robust`, `ideal`. `violations.csv` lists `value, seed,
//! solution, family, gu, slot, local, edge`. Floats are written with 16
//! significant digits; every column except `wall_time_s` is reproducible
//! from the seeds.

use std::fs;
use std::path::Path;

use aerosec_core::driver::{optimize_with, validate_robustness, Clock, OptimizationResult, Options, RunStatus, ViolationReport};
use aerosec_core::decomposition::Robustness;
use aerosec_core::sampling::Family;
use aerosec_core::scenario::straight_line_init;
use aerosec_core::{Error, Point, Scenario};
use rayon::prelude::*;

use crate::preset::ExperimentPreset;
use crate::{AppError, AppResult, InstantClock};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
    pub max_rounds: usize,
    pub zeta: Option<f64>,
    pub tol: Option<f64>,
    /// Monte-Carlo draws per deadline.
    pub samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 0, max_rounds: 30, zeta: None, tol: None, samples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Box<OptimizationResult>),
    Internal(String),
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        match self {
            Outcome::Solved(r) => match r.status {
                RunStatus::Converged => "converged",
                RunStatus::MaxRounds => "max_rounds",
                RunStatus::Infeasible => "infeasible",
            },
            Outcome::Internal(_) => "internal",
        }
    }

    /// The result if it carries a feasible decision.
    pub fn feasible(&self) -> Option<&OptimizationResult> {
        match self {
            Outcome::Solved(r) if r.status != RunStatus::Infeasible => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub value: f64,
    pub seed: u64,
    pub headline: bool,
    pub robust: Outcome,
    pub ideal: Outcome,
    pub scenario: Scenario,
    pub init: Vec<Point>,
    pub uavs: usize,
    pub slots: usize,
    pub violations: Vec<(&'static str, ViolationReport)>,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.robust.feasible()?.gamma() / self.ideal.feasible()?.gamma())
    }

    fn max_violation(&self, which: &str) -> f64 {
        let mut worst = f64::NAN;
        for (w, rep) in &self.violations {
            if *w == which {
                worst = if worst.is_nan() { rep.max() } else { worst.max(rep.max()) };
            }
        }
        worst
    }
}

pub fn apply_overrides(s: &Scenario, opts: &RunOptions) -> aerosec_core::Result<Scenario> {
    s.with_params(|p| {
        if let Some(z) = opts.zeta {
            p.zeta = z;
        }
        if let Some(t) = opts.tol {
            p.solver_tol = t;
        }
    })
}

fn solve(s: &Scenario, rob: Robustness, opts: &RunOptions) -> Outcome {
    let o = Options { max_rounds: opts.max_rounds, robustness: rob, ..Options::default() };
    match optimize_with(s, &o, &InstantClock::new()) {
        Ok(r) => Outcome::Solved(Box::new(r)),
        Err(e) => Outcome::Internal(e.to_string()),
    }
}

/// Robust and ideal solutions of one scenario plus their Monte-Carlo
/// deadline checks.
pub fn run_scenario(s: &Scenario, value: f64, seed: u64, headline: bool, opts: &RunOptions) -> RunRecord {
    let clock = InstantClock::new();
    let robust = solve(s, Robustness::Cvar, opts);
    let ideal = solve(s, Robustness::Ideal, opts);
    let alpha = s.params().alpha;
    let mut violations = Vec::new();
    for (which, out) in [("robust", &robust), ("ideal", &ideal)] {
        if let Some(r) = out.feasible() {
            for fam in [Family::Gaussian, Family::Uniform, Family::TwoPoint { p: 1.0 - alpha }] {
                violations.push((which, validate_robustness(s, r, fam, opts.samples, seed)));
            }
        }
    }
    RunRecord {
        value,
        seed,
        headline,
        robust,
        ideal,
        scenario: s.clone(),
        init: straight_line_init(s).w,
        uavs: s.num_uavs(),
        slots: s.num_slots(),
        violations,
        wall_time: clock.seconds(),
    }
}

fn pool(jobs: usize) -> AppResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| AppError::Pool(e.to_string()))
}

/// Runs every (value, seed) of `preset` and writes the three reports to
/// `out`.
pub fn run_experiment(preset: &ExperimentPreset, out: &Path, opts: &RunOptions) -> AppResult<Vec<RunRecord>> {
    preset.validate()?;
    let mut jobs = Vec::new();
    for &value in &preset.values {
        for &seed in &preset.seeds {
            jobs.push((value, seed));
        }
    }
    let params = aerosec_core::NetworkParams::default();
    let records: Vec<AppResult<RunRecord>> = pool(opts.jobs)?.install(|| {
        jobs.par_iter()
            .map(|&(value, seed)| {
                let base = preset.base_scenario(seed, &params)?;
                let s = apply_overrides(&preset.axis.apply(&base, value)?, opts)?;
                Ok(run_scenario(&s, value, seed, preset.headline == Some(value), opts))
            })
            .collect()
    });
    let records = records.into_iter().collect::<AppResult<Vec<_>>>()?;
    write_reports(out, &preset.name, preset.axis.name(), &records)?;
    Ok(records)
}

pub fn fmt(x: f64) -> String {
    format!("{x:.15e}")
}

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        k => AppError::Format { path: path.into(), msg: format!("{k:?}") },
    }
}

pub fn write_reports(out: &Path, preset: &str, axis: &str, records: &[RunRecord]) -> AppResult<()> {
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;

    let path = out.join("results.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(RESULT_COLUMNS).map_err(|e| csv_err(&path, e))?;
    for r in records {
        let nan = f64::NAN;
        let rob = r.robust.feasible();
        let ide = r.ideal.feasible();
        let b = rob.map(|x| &x.breakdown);
        let row = [
            preset.to_string(),
            axis.to_string(),
            fmt(r.value),
            r.seed.to_string(),
            u8::from(r.headline).to_string(),
            r.robust.status().to_string(),
            r.ideal.status().to_string(),
            rounds(&r.robust),
            rounds(&r.ideal),
            fmt(rob.map_or(nan, |x| x.gamma())),
            fmt(ide.map_or(nan, |x| x.gamma())),
            fmt(r.ratio().unwrap_or(nan)),
            fmt(rob.map_or(nan, |x| x.decision.offloaded_bits(&r.scenario))),
            fmt(ide.map_or(nan, |x| x.decision.offloaded_bits(&r.scenario))),
            fmt(b.map_or(nan, |b| b.local_sum())),
            fmt(b.map_or(nan, |b| b.tx_sum())),
            fmt(rob.map_or(nan, |x| r.scenario.params().kappa * x.breakdown.edge_sum())),
            fmt(rob.map_or(nan, |x| r.scenario.params().kappa * x.breakdown.fly_sum())),
            fmt(r.max_violation("robust")),
            fmt(r.max_violation("ideal")),
            fmt(r.wall_time),
        ];
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;

    let path = out.join("trajectories.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["value", "seed", "kind", "m", "t", "x", "y"]).map_err(|e| csv_err(&path, e))?;
    for r in records {
        let mut kinds: Vec<(&str, &[Point])> = vec![("init", &r.init)];
        if let Some(x) = r.robust.feasible() {
            kinds.push(("robust", &x.decision.w));
        }
        if let Some(x) = r.ideal.feasible() {
            kinds.push(("ideal", &x.decision.w));
        }
        for (kind, w_s) in kinds {
            for m in 0..r.uavs {
                for t in 0..r.slots {
                    let q = w_s[m * r.slots + t];
                    w.write_record([fmt(r.value), r.seed.to_string(), kind.into(), m.to_string(), t.to_string(), fmt(q.x), fmt(q.y)])
                        .map_err(|e| csv_err(&path, e))?;
                }
            }
        }
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;

    let path = out.join("violations.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["value", "seed", "solution", "family", "gu", "slot", "local", "edge"]).map_err(|e| csv_err(&path, e))?;
    for r in records {
        for (which, rep) in &r.violations {
            let fam = family_name(rep.family);
            for v in &rep.entries {
                w.write_record([
                    fmt(r.value),
                    r.seed.to_string(),
                    (*which).into(),
                    fam.into(),
                    v.gu.to_string(),
                    v.slot.to_string(),
                    fmt(v.local),
                    v.edge.map(fmt).unwrap_or_default(),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
    }
    w.flush().map_err(|e| AppError::io(&path, e))?;
    Ok(())
}

pub const RESULT_COLUMNS: [&str; 21] = [
    "preset",
    "axis",
    "value",
    "seed",
    "headline",
    "status",
    "ideal_status",
    "rounds",
    "ideal_rounds",
    "robust_gamma",
    "ideal_gamma",
    "ratio",
    "offloaded_bits",
    "ideal_offloaded_bits",
    "e_local",
    "e_tx",
    "e_edge",
    "e_fly",
    "max_violation",
    "ideal_max_violation",
    "wall_time_s",
];

fn rounds(o: &Outcome) -> String {
    match o {
        Outcome::Solved(r) => r.rounds.to_string(),
        Outcome::Internal(_) => String::new(),
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Gaussian => "gaussian",
        Family::Uniform => "uniform",
        Family::TwoPoint { .. } => "two_point",
    }
}

/// First internal failure among the runs, for the exit code.
pub fn first_internal(records: &[RunRecord]) -> Option<AppError> {
    records.iter().find_map(|r| match (&r.robust, &r.ideal) {
        (Outcome::Internal(e), _) | (_, Outcome::Internal(e)) => Some(AppError::Core(Error::Internal(e.clone()))),
        _ => None,
    })
}
