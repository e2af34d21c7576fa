//! Offload ratios and CVaR auxiliaries for fixed trajectories and
//! assignments.
//!
//! The program is block diagonal over (GU, slot): one ratio, a local and an
//! edge deadline block, and an objective affine in the ratio. Pairs whose
//! ratio is pinned at zero (no serving S-UAV) carry no variables; their
//! local deadline is checked in closed form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{local_min_ratio, ratio_window, Robustness};
use crate::conic::{solve, CertificateLog, LinExpr, ProgramBuilder, Status};
use crate::cvar::{build_cvar_block, AffineLoss, CvarAux, CvarVars, Header, MARGIN};
use crate::error::Infeasibility;
use crate::link::LinkState;
use crate::scenario::{Decision, NetworkParams, Scenario, Task};
use crate::{Error, Result};

/// Ratios, auxiliaries and the value of the ratio-dependent energy.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadSolution {
    pub rho: Vec<f64>,
    pub aux_local: Vec<CvarAux>,
    pub aux_edge: Vec<CvarAux>,
    /// Local, transmission and weighted edge energy (J).
    pub objective: f64,
    pub certificates: CertificateLog,
}

/// Energy of one (GU, slot) as `constant + slope·ρ` when served over `r_sec`.
pub(crate) fn ratio_energy(task: &Task, r_sec: f64, p: &NetworkParams) -> (f64, f64) {
    let work = (task.c_bar + task.mu) * task.l;
    let local = p.eps_g * work * p.f_g * p.f_g;
    let edge = p.kappa * p.eps_u * work * p.f_u * p.f_u;
    let tx = p.p0 * task.l / r_sec;
    (local, -local + tx + edge)
}

/// Every (GU, slot) that no ratio in `[0, 1]` can serve under the current
/// trajectories and assignment.
pub fn diagnose(s: &Scenario, d: &Decision, links: &LinkState, rob: Robustness) -> Vec<Infeasibility> {
    let p = s.params();
    let mut out = Vec::new();
    for i in 0..s.num_gus() {
        for t in 0..s.num_slots() {
            let task = s.task(i, t);
            let lo = local_min_ratio(task, p, rob);
            let reason = match d.serving(i, t) {
                None if lo > 0.0 => "local execution cannot meet tau at level alpha and no S-UAV is assigned",
                None => continue,
                Some(m) if !(links.sec(i, m, t) > 0.0) => "assigned link has zero secrecy rate",
                Some(m) => match ratio_window(task, links.sec(i, m, t), p, rob) {
                    None => "neither local nor offloaded execution can meet tau at level alpha",
                    Some(_) => continue,
                },
            };
            out.push(Infeasibility { slot: Some(t), gu: Some(i), reason: reason.into() });
        }
    }
    out
}

struct Entry {
    k: usize,
    rho: usize,
    local: Option<CvarVars>,
    edge: Option<CvarVars>,
}

/// Optimal ratios for the trajectories and assignment in `d`.
pub fn solve_offload_ratios(s: &Scenario, d: &Decision, rob: Robustness) -> Result<OffloadSolution> {
    let links = LinkState::new(s, &d.w);
    solve_offload_ratios_with(s, d, &links, rob)
}

pub fn solve_offload_ratios_with(
    s: &Scenario,
    d: &Decision,
    links: &LinkState,
    rob: Robustness,
) -> Result<OffloadSolution> {
    if let Some(bad) = diagnose(s, d, links, rob).into_iter().next() {
        return Err(Error::Infeasible(bad));
    }
    let p = s.params();
    let (gus, slots) = (s.num_gus(), s.num_slots());
    let alpha = p.alpha;
    let mut rho = vec![0.0; gus * slots];
    let mut aux_local = vec![CvarAux::default(); gus * slots];
    let mut aux_edge = vec![CvarAux::default(); gus * slots];
    let mut objective = 0.0;
    let mut b = ProgramBuilder::new();
    let mut entries = Vec::new();
    for i in 0..gus {
        for t in 0..slots {
            let k = d.idx(i, t);
            let task = s.task(i, t);
            let Some(m) = d.serving(i, t) else {
                aux_local[k] = rob.loosest_aux(task.l / p.f_g * task.sigma, alpha);
                aux_edge[k] = rob.loosest_aux(0.0, alpha);
                objective += ratio_energy(task, 1.0, p).0;
                continue;
            };
            let r_sec = links.sec(i, m, t);
            let (c0, slope) = ratio_energy(task, r_sec, p);
            let v = b.add_var();
            b.minimize(&(LinExpr::term(v, slope) + c0));
            b.nonneg(LinExpr::var(v));
            b.nonneg(LinExpr::constant(1.0) - LinExpr::var(v));
            let keep = LinExpr::constant(1.0) - LinExpr::var(v);
            let kl = task.l / p.f_g;
            let local = AffineLoss {
                theta0: keep.clone() * (kl * task.c_bar) - p.tau,
                theta: keep * kl,
                mu: task.mu,
                sigma: task.sigma,
            };
            let ke = task.l / p.f_u;
            let edge = AffineLoss {
                theta0: LinExpr::term(v, ke * task.c_bar + task.l / r_sec) - p.tau,
                theta: LinExpr::term(v, ke),
                mu: task.mu,
                sigma: task.sigma,
            };
            let (lv, ev) = match rob {
                Robustness::Cvar => (
                    Some(build_cvar_block(local, alpha).embed(&mut b, Header::Constraint)),
                    Some(build_cvar_block(edge, alpha).embed(&mut b, Header::Constraint)),
                ),
                Robustness::Ideal => {
                    b.nonneg(-local.theta0 - MARGIN);
                    b.nonneg(-edge.theta0 - MARGIN);
                    (None, None)
                }
            };
            entries.push(Entry { k, rho: v, local: lv, edge: ev });
        }
    }
    let mut certificates = CertificateLog::default();
    if !entries.is_empty() {
        let sol = solve(&b.build(), p.solver_tol, 100)?;
        certificates.record(&sol);
        match sol.status {
            Status::Optimal => {}
            Status::PrimalInfeasible => {
                return Err(Error::Infeasible(Infeasibility {
                    slot: None,
                    gu: None,
                    reason: "offload-ratio program reported infeasible".into(),
                }))
            }
            st => return Err(Error::Internal(format!("offload-ratio program ended with status {st:?}"))),
        }
        for e in &entries {
            // snap solver round-off into the exact window so the other
            // blocks see a point that meets every margin
            let (i, t) = (e.k / slots, e.k % slots);
            let m = d.serving(i, t).expect("entries are served pairs");
            let (lo, hi) = ratio_window(s.task(i, t), links.sec(i, m, t), p, rob).expect("diagnosed feasible");
            rho[e.k] = sol.x[e.rho].clamp(lo, hi);
            if let Some(v) = e.local {
                aux_local[e.k] = v.read(&sol.x);
            }
            if let Some(v) = e.edge {
                aux_edge[e.k] = v.read(&sol.x);
            }
        }
        for e in &entries {
            let (i, t) = (e.k / slots, e.k % slots);
            let m = d.serving(i, t).expect("entries are served pairs");
            let (c0, slope) = ratio_energy(s.task(i, t), links.sec(i, m, t), p);
            objective += c0 + slope * rho[e.k];
        }
    }
    Ok(OffloadSolution { rho, aux_local, aux_edge, objective, certificates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvar::{loss_edge, loss_local, worst_case_cvar_closed_form};
    use crate::scenario::{straight_line_init, Endpoints, Point, ScenarioParts, TaskSpec};

    fn single(task: Task) -> Scenario {
        ScenarioParts {
            gus: vec![Point::new(500.0, 450.0)],
            jammer: Point::new(500.0, 500.0),
            eav_path: vec![Point::new(100.0, 900.0); 3],
            uav_endpoints: vec![Endpoints { ini: Point::new(460.0, 450.0), fin: Point::new(540.0, 450.0) }],
            tasks: TaskSpec::uniform(1, 3, task).unwrap(),
            params: NetworkParams::default(),
        }
        .build()
        .unwrap()
    }

    fn served(s: &Scenario) -> Decision {
        let mut d = straight_line_init(s);
        for a in &mut d.assign {
            *a = Some(0);
        }
        d
    }

    /// Smallest ρ whose local block closes, found by bisection on the
    /// closed-form worst-case CVaR.
    fn bisect_local(task: &Task, p: &NetworkParams) -> f64 {
        let f = |r: f64| worst_case_cvar_closed_form(&loss_local(r, task, p), p.alpha) + MARGIN;
        if f(0.0) <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn unassigned_pairs_stay_local() {
        let s = single(Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 });
        let d = straight_line_init(&s);
        let sol = solve_offload_ratios(&s, &d, Robustness::Cvar).unwrap();
        assert!(sol.rho.iter().all(|&r| r == 0.0));
        assert_eq!(sol.certificates.solves, 0);
        let hard = single(Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 });
        let err = solve_offload_ratios(&hard, &straight_line_init(&hard), Robustness::Cvar).unwrap_err();
        assert!(matches!(err, Error::Infeasible(Infeasibility { gu: Some(0), slot: Some(0), .. })), "{err}");
    }

    #[test]
    fn offloads_just_enough() {
        let task = Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 };
        let s = single(task);
        let d = served(&s);
        let sol = solve_offload_ratios(&s, &d, Robustness::Cvar).unwrap();
        let want = bisect_local(&task, s.params());
        for &r in &sol.rho {
            assert!((r - want).abs() <= 1e-6 * want, "{r} vs {want}");
        }
        // objective matches the oracle ratio
        let links = LinkState::new(&s, &d.w);
        let oracle: f64 = (0..3)
            .map(|t| {
                let (c0, k) = ratio_energy(&task, links.sec(0, 0, t), s.params());
                c0 + k * want
            })
            .sum();
        assert!((sol.objective - oracle).abs() <= 1e-6 * oracle);
        // the returned auxiliaries certify both blocks
        for t in 0..3 {
            let r = sol.rho[t];
            let lv = sol.aux_local[t].violations(&loss_local(r, &task, s.params()), 0.95);
            let el = loss_edge(&[true], r, &task, &[links.sec(0, 0, t)], s.params()).unwrap();
            let ev = sol.aux_edge[t].violations(&el, 0.95);
            assert!(lv.iter().chain(&ev).all(|&x| x <= 1e-7), "{lv:?} {ev:?}");
        }
    }

    #[test]
    fn deterministic_limit_matches_linear_rows() {
        let task = Task { l: 8e6, c_bar: 60.0, mu: 0.0, sigma: 0.0 };
        let s = single(task);
        let d = served(&s);
        let robust = solve_offload_ratios(&s, &d, Robustness::Cvar).unwrap();
        let ideal = solve_offload_ratios(&s, &d, Robustness::Ideal).unwrap();
        assert!((robust.objective - ideal.objective).abs() <= 1e-7 * ideal.objective);
        for (a, b) in robust.rho.iter().zip(&ideal.rho) {
            assert!((a - b).abs() < 1e-6);
        }
        let want = 1.0 - (2.0 - MARGIN) / (8e6 * 60.0 / 1e8);
        assert!((ideal.rho[0] - want).abs() < 1e-7);
    }

    #[test]
    fn zero_ratio_when_assigned_but_local_is_enough() {
        let s = single(Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 });
        let sol = solve_offload_ratios(&s, &served(&s), Robustness::Cvar).unwrap();
        assert!(sol.rho.iter().all(|&r| r < 1e-7), "{:?}", sol.rho);
    }

    #[test]
    fn edge_too_slow_is_diagnosed() {
        let mut p = NetworkParams::default();
        p.f_u = 2e8;
        let parts = ScenarioParts { params: p, ..single(Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 }).into_parts() };
        let s = parts.build().unwrap();
        let d = served(&s);
        let links = LinkState::new(&s, &d.w);
        let diag = diagnose(&s, &d, &links, Robustness::Cvar);
        assert_eq!(diag.len(), 3);
        assert!(diag[0].reason.contains("neither local nor offloaded"));
    }
}
