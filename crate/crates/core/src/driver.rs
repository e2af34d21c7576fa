//! The alternating optimization loop, the deterministic baseline and a
//! Monte-Carlo check of the returned deadlines.
//!
//! Each round re-solves the offload ratios, the per-slot assignment and the
//! trajectories in turn. Every step starts from a point that is feasible for
//! it and never returns a worse one, so Γ is non-increasing across rounds.

use alloc::vec;
use alloc::vec::Vec;

use crate::conic::CertificateLog;
use crate::cvar::{loss_edge, loss_local, monte_carlo_violation, LinearLoss};
use crate::decomposition::assignment::{solve_assignment_with, solve_slot, AssignmentSlot, SlotInfeasible};
use crate::decomposition::offload::{diagnose, solve_offload_ratios_with};
use crate::decomposition::trajectory::solve_trajectory_sca;
use crate::decomposition::{edge_admits, local_min_ratio, Robustness};
use crate::energy::{total_energy, EnergyBreakdown};
use crate::link::LinkState;
use crate::sampling::{Family, MomentSampler};
use crate::scenario::{straight_line_init, Decision, Scenario};
use crate::{Error, Infeasibility, Result};

/// Source of elapsed wall time in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub max_rounds: usize,
    /// Iteration cap of each trajectory step.
    pub sca_max_iter: usize,
    pub robustness: Robustness,
}

impl Default for Options {
    fn default() -> Self {
        Options { max_rounds: 30, sca_max_iter: 50, robustness: Robustness::Cvar }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxRounds,
    Infeasible,
}

/// Wall time (s) spent per subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub bootstrap: f64,
    pub offload: f64,
    pub assignment: f64,
    pub trajectory: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub decision: Decision,
    pub breakdown: EnergyBreakdown,
    /// Γ (J) after the bootstrap, then after every round.
    pub gamma_trace: Vec<f64>,
    /// Exact Γ along each round's trajectory iterations.
    pub sca_traces: Vec<Vec<f64>>,
    pub rounds: usize,
    pub status: RunStatus,
    pub timings: Timings,
    /// Why the instance is infeasible; empty otherwise.
    pub diagnosis: Vec<Infeasibility>,
    pub certificates: CertificateLog,
}

impl OptimizationResult {
    pub fn gamma(&self) -> f64 {
        self.breakdown.gamma
    }
}

/// Runs the robust pipeline with default options.
pub fn optimize(s: &Scenario, max_rounds: usize) -> Result<OptimizationResult> {
    optimize_with(s, &Options { max_rounds, ..Options::default() }, &NoClock)
}

/// The same pipeline with deterministic deadlines at `c̄`.
pub fn ideal_baseline(s: &Scenario, max_rounds: usize) -> Result<OptimizationResult> {
    let opts = Options { max_rounds, robustness: Robustness::Ideal, ..Options::default() };
    optimize_with(s, &opts, &NoClock)
}

/// Straight-line trajectories, each GU that cannot meet its deadline locally
/// sent to the nearest S-UAV able to take its minimal share, then optimal
/// ratios for that assignment.
fn bootstrap(s: &Scenario, rob: Robustness) -> core::result::Result<(Decision, CertificateLog), Vec<Infeasibility>> {
    let p = s.params();
    let (gus, uavs, slots) = (s.num_gus(), s.num_uavs(), s.num_slots());
    let mut d = straight_line_init(s);
    let links = LinkState::new(s, &d.w);
    let mut diagnosis = Vec::new();
    for t in 0..slots {
        let mut cost = vec![None; gus * uavs];
        let mut mandatory = vec![false; gus];
        for i in 0..gus {
            let task = s.task(i, t);
            let lo = local_min_ratio(task, p, rob);
            mandatory[i] = lo > 0.0;
            for m in 0..uavs {
                let r = links.sec(i, m, t);
                if r > 0.0 && edge_admits(lo, task, r, p, rob) {
                    cost[i * uavs + m] = Some(s.gus()[i].dist(d.pos(m, t)));
                }
            }
        }
        let slot = AssignmentSlot { gus, uavs, cost, mandatory, capacity: p.m_max };
        match solve_slot(&slot) {
            Ok(a) => {
                for i in 0..gus {
                    d.assign[i * slots + t] = a[i];
                }
            }
            Err(SlotInfeasible::NoCandidate { gu }) => diagnosis.push(Infeasibility {
                slot: Some(t),
                gu: Some(gu),
                reason: "neither local nor offloaded execution can meet tau at level alpha".into(),
            }),
            Err(SlotInfeasible::Capacity { gu }) => diagnosis.push(Infeasibility {
                slot: Some(t),
                gu: Some(gu),
                reason: "GUs that must offload exceed the available connections".into(),
            }),
        }
    }
    if !diagnosis.is_empty() {
        return Err(diagnosis);
    }
    let off = solve_offload_ratios_with(s, &d, &links, rob).map_err(|e| match e {
        Error::Infeasible(inf) => vec![inf],
        e => vec![Infeasibility { slot: None, gu: None, reason: alloc::format!("{e}") }],
    })?;
    d.rho = off.rho;
    d.aux_local = off.aux_local;
    d.aux_edge = off.aux_edge;
    Ok((d, off.certificates))
}

/// Replaces auxiliaries that no longer certify their block at the current
/// decision with the loosest ones for that block.
fn refresh_aux(s: &Scenario, d: &mut Decision, rob: Robustness) {
    if rob == Robustness::Ideal {
        return;
    }
    let p = s.params();
    let links = LinkState::new(s, &d.w);
    let uavs = s.num_uavs();
    let certifies = |aux: &crate::cvar::CvarAux, loss: &LinearLoss| {
        aux.violations(loss, p.alpha).iter().all(|&v| v <= 1e-9)
    };
    for i in 0..s.num_gus() {
        for t in 0..s.num_slots() {
            let k = d.idx(i, t);
            let task = s.task(i, t);
            let local = loss_local(d.rho[k], task, p);
            if !certifies(&d.aux_local[k], &local) {
                d.aux_local[k] = rob.loosest_aux(local.theta * local.sigma, p.alpha);
            }
            let lam: Vec<bool> = (0..uavs).map(|m| d.lambda(i, m, t)).collect();
            let sec: Vec<f64> = (0..uavs).map(|m| links.sec(i, m, t)).collect();
            if let Ok(edge) = loss_edge(&lam, d.rho[k], task, &sec, p) {
                if !certifies(&d.aux_edge[k], &edge) {
                    d.aux_edge[k] = rob.loosest_aux(edge.theta * edge.sigma, p.alpha);
                }
            }
        }
    }
}

fn infeasible_result(
    s: &Scenario,
    d: Decision,
    gamma_trace: Vec<f64>,
    sca_traces: Vec<Vec<f64>>,
    rounds: usize,
    timings: Timings,
    diagnosis: Vec<Infeasibility>,
    certificates: CertificateLog,
) -> Result<OptimizationResult> {
    let breakdown = total_energy(s, &d).or_else(|_| total_energy(s, &straight_line_init(s)))?;
    Ok(OptimizationResult { decision: d, breakdown, gamma_trace, sca_traces, rounds, status: RunStatus::Infeasible, timings, diagnosis, certificates })
}

pub fn optimize_with(s: &Scenario, opts: &Options, clock: &dyn Clock) -> Result<OptimizationResult> {
    let p = s.params();
    let rob = opts.robustness;
    let start = clock.seconds();
    let mut timings = Timings::default();
    let mut certificates = CertificateLog::default();

    let (mut d, boot_certs) = match bootstrap(s, rob) {
        Ok(v) => v,
        Err(diagnosis) => {
            timings.bootstrap = clock.seconds() - start;
            timings.total = timings.bootstrap;
            return infeasible_result(s, straight_line_init(s), Vec::new(), Vec::new(), 0, timings, diagnosis, certificates);
        }
    };
    certificates.merge(&boot_certs);
    let mut gamma = total_energy(s, &d)?.gamma;
    let mut gamma_trace = vec![gamma];
    let mut sca_traces = Vec::new();
    timings.bootstrap = clock.seconds() - start;

    let mut status = RunStatus::MaxRounds;
    let mut rounds = 0;
    for round in 0..opts.max_rounds {
        let before = gamma;
        let mut step = |d: &mut Decision, certificates: &mut CertificateLog, timings: &mut Timings| -> Result<()> {
            // the bootstrap has just solved the ratios for this assignment
            if round > 0 {
                let t0 = clock.seconds();
                offload_step(s, d, rob, certificates)?;
                timings.offload += clock.seconds() - t0;
            }

            let t0 = clock.seconds();
            let links = LinkState::new(s, &d.w);
            let assign = solve_assignment_with(s, d, &links, rob)?;
            let mut cand = d.clone();
            cand.assign = assign;
            timings.assignment += clock.seconds() - t0;
            if !diagnose(s, &cand, &links, rob).is_empty() {
                let t0 = clock.seconds();
                let off = solve_offload_ratios_with(s, &cand, &links, rob)?;
                certificates.merge(&off.certificates);
                cand.rho = off.rho;
                cand.aux_local = off.aux_local;
                cand.aux_edge = off.aux_edge;
                timings.offload += clock.seconds() - t0;
            }
            if total_energy(s, &cand)?.gamma <= total_energy(s, d)?.gamma {
                *d = cand;
            }

            let t0 = clock.seconds();
            let sca = solve_trajectory_sca(s, d, rob, opts.sca_max_iter)?;
            certificates.merge(&sca.certificates);
            d.w = sca.w;
            sca_traces.push(sca.trace);
            timings.trajectory += clock.seconds() - t0;
            Ok(())
        };
        match step(&mut d, &mut certificates, &mut timings) {
            Ok(()) => {}
            Err(Error::Infeasible(inf)) => {
                timings.total = clock.seconds() - start;
                return infeasible_result(s, d, gamma_trace, sca_traces, round + 1, timings, vec![inf], certificates);
            }
            Err(e) => return Err(e),
        }
        rounds = round + 1;
        gamma = total_energy(s, &d)?.gamma;
        if gamma > before + 1e-9 * (1.0 + before) {
            return Err(Error::Internal(alloc::format!("round {rounds} raised gamma from {before} J to {gamma} J")));
        }
        gamma_trace.push(gamma);
        if (before - gamma).abs() <= p.zeta {
            status = RunStatus::Converged;
            break;
        }
    }

    refresh_aux(s, &mut d, rob);
    d.check(s, 1e-6).map_err(|e| Error::Internal(alloc::format!("returned decision fails its checks: {e}")))?;
    let breakdown = total_energy(s, &d)?;
    timings.total = clock.seconds() - start;
    Ok(OptimizationResult { decision: d, breakdown, gamma_trace, sca_traces, rounds, status, timings, diagnosis: Vec::new(), certificates })
}

/// Re-solves the ratios and keeps them if Γ does not rise.
fn offload_step(s: &Scenario, d: &mut Decision, rob: Robustness, certificates: &mut CertificateLog) -> Result<()> {
    let links = LinkState::new(s, &d.w);
    let off = solve_offload_ratios_with(s, d, &links, rob)?;
    certificates.merge(&off.certificates);
    let mut cand = d.clone();
    cand.rho = off.rho;
    cand.aux_local = off.aux_local;
    cand.aux_edge = off.aux_edge;
    if total_energy(s, &cand)?.gamma <= total_energy(s, d)?.gamma {
        *d = cand;
    }
    Ok(())
}

/// Empirical probability that one (GU, slot) misses the deadline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub gu: usize,
    pub slot: usize,
    pub local: f64,
    /// `None` when nothing is offloaded.
    pub edge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub family: Family,
    pub samples: usize,
    pub entries: Vec<Violation>,
}

impl ViolationReport {
    pub fn max(&self) -> f64 {
        self.entries.iter().map(|v| v.local.max(v.edge.unwrap_or(0.0))).fold(0.0, f64::max)
    }

    /// `0.05 + 3·√(0.05·0.95/n)` at α = 0.95: the target plus three binomial
    /// standard deviations.
    pub fn bound(&self, alpha: f64) -> f64 {
        let eps = 1.0 - alpha;
        eps + 3.0 * libm::sqrt(eps * alpha / self.samples as f64)
    }
}

fn derive_seed(seed: u64, k: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples the complexity error of every task `n` times from `family` with
/// the task's moments and reports how often the true latencies at the
/// returned decision exceed τ.
pub fn validate_robustness(s: &Scenario, r: &OptimizationResult, family: Family, n: usize, seed: u64) -> ViolationReport {
    let p = s.params();
    let d = &r.decision;
    let links = LinkState::new(s, &d.w);
    let uavs = s.num_uavs();
    let mut entries = Vec::with_capacity(s.num_gus() * s.num_slots());
    for i in 0..s.num_gus() {
        for t in 0..s.num_slots() {
            let k = d.idx(i, t) as u64;
            let task = s.task(i, t);
            let dist = MomentSampler::new(family, task.mu, task.sigma);
            let rho = d.ratio(i, t);
            let local = monte_carlo_violation(&loss_local(rho, task, p), &dist, n, derive_seed(seed, 2 * k));
            let lam: Vec<bool> = (0..uavs).map(|m| d.lambda(i, m, t)).collect();
            let sec: Vec<f64> = (0..uavs).map(|m| links.sec(i, m, t)).collect();
            let edge = match d.serving(i, t) {
                Some(_) if rho > 0.0 => Some(match loss_edge(&lam, rho, task, &sec, p) {
                    Ok(loss) => monte_carlo_violation(&loss, &dist, n, derive_seed(seed, 2 * k + 1)),
                    Err(_) => 1.0,
                }),
                _ => None,
            };
            entries.push(Violation { gu: i, slot: t, local, edge });
        }
    }
    ViolationReport { family, samples: n, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{desk_scenario, desk_scenario_with, Endpoints, NetworkParams, Point, ScenarioParts, Task, TaskSpec};

    fn easy() -> Scenario {
        ScenarioParts {
            gus: vec![Point::new(200.0, 200.0), Point::new(800.0, 300.0)],
            jammer: Point::new(500.0, 500.0),
            eav_path: vec![Point::new(500.0, 900.0); 8],
            uav_endpoints: vec![Endpoints { ini: Point::new(100.0, 500.0), fin: Point::new(300.0, 500.0) }],
            tasks: TaskSpec::uniform(2, 8, Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 }).unwrap(),
            params: NetworkParams::default(),
        }
        .build()
        .unwrap()
    }

    #[test]
    fn locally_feasible_tasks_stay_local() {
        let s = easy();
        let r = optimize(&s, 30).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert!(r.decision.assign.iter().all(Option::is_none));
        assert!(r.decision.rho.iter().all(|&x| x == 0.0));
        let w = r.decision.trajectory(0);
        let len: f64 = w.windows(2).map(|q| q[0].dist(q[1])).sum();
        assert!(len <= 200.0 + 1e-6, "{len}");
    }

    #[test]
    fn infinite_zeta_runs_one_round() {
        let s = desk_scenario_with(3, NetworkParams { zeta: f64::INFINITY, ..NetworkParams::default() }, 4, 20);
        let r = optimize(&s, 30).unwrap();
        assert_eq!(r.rounds, 1);
        assert_eq!(r.gamma_trace.len(), 2);
        assert_eq!(r.status, RunStatus::Converged);
    }

    #[test]
    fn small_desk_is_monotone_and_deterministic() {
        let s = desk_scenario_with(5, NetworkParams::default(), 6, 20);
        let a = optimize(&s, 30).unwrap();
        let b = optimize(&s, 30).unwrap();
        assert_eq!(a.gamma_trace, b.gamma_trace);
        assert!(a.gamma_trace.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{:?}", a.gamma_trace);
        assert_eq!(a.status, RunStatus::Converged);
        assert_eq!(*a.gamma_trace.last().unwrap(), a.gamma());
        assert!(a.certificates.worst() <= 1e-7);
        let ideal = ideal_baseline(&s, 30).unwrap();
        assert!(ideal.gamma() <= a.gamma() + 1e-8, "{} vs {}", ideal.gamma(), a.gamma());
        assert!(ideal.decision.offloaded_bits(&s) <= a.decision.offloaded_bits(&s) + 1e-6);
    }

    #[test]
    fn impossible_task_is_diagnosed() {
        let s = desk_scenario_with(2, NetworkParams { f_u: 1e7, ..NetworkParams::default() }, 3, 20);
        let s = s.with_params(|q| q.f_g = 1e6).unwrap();
        let r = optimize(&s, 5).unwrap();
        assert_eq!(r.status, RunStatus::Infeasible);
        assert!(!r.diagnosis.is_empty());
        assert!(r.diagnosis.iter().all(|x| x.gu.is_some() && x.slot.is_some()));
    }

    #[test]
    fn robust_decision_meets_the_target() {
        let s = desk_scenario_with(7, NetworkParams::default(), 5, 20);
        let r = optimize(&s, 30).unwrap();
        for fam in [Family::Gaussian, Family::Uniform, Family::TwoPoint { p: 0.05 }] {
            let rep = validate_robustness(&s, &r, fam, 20_000, 1);
            assert!(rep.max() <= rep.bound(0.95), "{fam:?} {}", rep.max());
        }
    }

    #[test]
    fn no_uncertainty_means_no_violations() {
        let base = desk_scenario(4);
        let parts = base.parts().clone();
        let tasks = parts.tasks.map(|t| Task { sigma: 0.0, mu: 0.0, ..*t }).unwrap();
        let s = ScenarioParts { tasks, ..parts }.build().unwrap();
        let r = optimize(&s, 30).unwrap();
        let rep = validate_robustness(&s, &r, Family::Gaussian, 1000, 3);
        assert_eq!(rep.max(), 0.0);
        let ideal = ideal_baseline(&s, 30).unwrap();
        assert!((ideal.gamma() - r.gamma()).abs() <= 1e-4 * r.gamma());
    }
}
