//! Brute-force cross-checks of the solver building blocks.
//!
//! Each suite solves random instances twice, once with the production
//! routine and once with an independent slow method, and reports the worst
//! disagreement.

use std::fmt;

use aerosec_core::conic::{solve, CertificateLog, ProgramBuilder, Status};
use aerosec_core::cvar::{build_cvar_block, loss_edge, loss_local, worst_case_cvar_closed_form, Header, LinearLoss, MARGIN};
use aerosec_core::decomposition::assignment::{enumerate_slot, solve_slot, AssignmentSlot};
use aerosec_core::decomposition::offload::solve_offload_ratios;
use aerosec_core::decomposition::Robustness;
use aerosec_core::energy::{edge_compute, local_compute};
use aerosec_core::link::{tx_latency_energy, LinkState};
use aerosec_core::scenario::{straight_line_init, Endpoints};
use aerosec_core::{Error, NetworkParams, Point, ScenarioParts, Task, TaskSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHAS: [f64; 4] = [0.8, 0.9, 0.95, 0.99];

/// Worst-case CVaR over two-point distributions with the loss's moments,
/// by a grid of `n` masses.
pub fn two_point_grid(loss: &LinearLoss, alpha: f64, n: usize) -> f64 {
    let tail = 1.0 - alpha;
    let mut best = f64::NEG_INFINITY;
    for k in 1..n {
        let p = k as f64 / n as f64;
        let hi = loss.mu + loss.sigma * ((1.0 - p) / p).sqrt();
        let lo = loss.mu - loss.sigma * (p / (1.0 - p)).sqrt();
        let (a, b) = (loss.eval(hi), loss.eval(lo));
        let (top, ptop, bot) = if a >= b { (a, p, b) } else { (b, 1.0 - p, a) };
        let cvar = if ptop >= tail { top } else { (ptop * top + (tail - ptop) * bot) / tail };
        best = best.max(cvar);
    }
    best
}

/// Optimal value of the conic block with the header as objective and no
/// margin, which equals the worst-case CVaR.
pub fn conic_cvar(loss: &LinearLoss, alpha: f64, tol: f64, certs: &mut CertificateLog) -> Result<f64, String> {
    let mut b = ProgramBuilder::new();
    let blk = aerosec_core::cvar::CvarBlock { margin: 0.0, ..build_cvar_block(loss.to_affine(), alpha) };
    blk.embed(&mut b, Header::Objective);
    let sol = solve(&b.build(), tol, 200).map_err(|e| e.to_string())?;
    certs.record(&sol);
    match sol.status {
        Status::Optimal => Ok(sol.pcost),
        st => Err(format!("{loss:?} at alpha {alpha}: {st:?}")),
    }
}

pub fn random_loss<R: Rng>(rng: &mut R) -> (LinearLoss, f64) {
    let loss = LinearLoss {
        theta: rng.random_range(-10.0..10.0),
        theta0: rng.random_range(-10.0..10.0),
        mu: rng.random_range(-1.0..1.0),
        sigma: rng.random_range(0.0..2.0),
    };
    (loss, ALPHAS[rng.random_range(0..ALPHAS.len())])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvarReport {
    pub cases: usize,
    /// max |closed form − two-point grid|
    pub grid_gap: f64,
    /// max |conic − closed form|
    pub conic_gap: f64,
    pub failures: Vec<String>,
    pub certificates: CertificateLog,
}

pub fn cvar_suite(cases: usize, grid: usize, seed: u64, tol: f64) -> CvarReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = CvarReport { cases, grid_gap: 0.0, conic_gap: 0.0, failures: Vec::new(), certificates: CertificateLog::default() };
    for _ in 0..cases {
        let (loss, alpha) = random_loss(&mut rng);
        let cf = worst_case_cvar_closed_form(&loss, alpha);
        r.grid_gap = r.grid_gap.max((two_point_grid(&loss, alpha, grid) - cf).abs());
        match conic_cvar(&loss, alpha, tol, &mut r.certificates) {
            Ok(v) => r.conic_gap = r.conic_gap.max((v - cf).abs()),
            Err(e) => r.failures.push(e),
        }
    }
    r
}

/// Random slot with up to `max_gus` GUs and `max_uavs` S-UAVs. Costs are
/// often drawn from a few integers so that ties occur, and about a quarter
/// of the pairs are forbidden.
pub fn random_slot<R: Rng>(rng: &mut R, max_gus: usize, max_uavs: usize) -> AssignmentSlot {
    let gus = rng.random_range(1..=max_gus);
    let uavs = rng.random_range(1..=max_uavs);
    let ties = rng.random_bool(0.5);
    let cost = (0..gus * uavs)
        .map(|_| {
            if rng.random_bool(0.25) {
                None
            } else if ties {
                Some(f64::from(rng.random_range(0..4u8)))
            } else {
                Some(rng.random_range(0.0..10.0))
            }
        })
        .collect();
    let mandatory = (0..gus).map(|_| rng.random_bool(0.7)).collect();
    AssignmentSlot { gus, uavs, cost, mandatory, capacity: rng.random_range(1..=3) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentReport {
    pub cases: usize,
    pub feasible: usize,
    pub mismatches: Vec<String>,
}

pub fn assignment_suite(cases: usize, seed: u64) -> AssignmentReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = AssignmentReport { cases, feasible: 0, mismatches: Vec::new() };
    for _ in 0..cases {
        let slot = random_slot(&mut rng, 6, 3);
        let fast = solve_slot(&slot).ok();
        let slow = enumerate_slot(&slot);
        if slow.is_some() {
            r.feasible += 1;
        }
        let same = match (&fast, &slow) {
            (Some(a), Some(b)) => a == b && slot.total(a) == slot.total(b),
            (None, None) => true,
            _ => false,
        };
        if !same {
            r.mismatches.push(format!("{slot:?}: flow {fast:?}, enumeration {slow:?}"));
        }
    }
    r
}

/// End of `{ρ ∈ [0, 1] : f(ρ) ≤ 0}` for monotone `f`: the largest point if
/// `f` increases, the smallest otherwise.
fn bisect(f: impl Fn(f64) -> f64, increasing: bool) -> Option<f64> {
    let ok = |r: f64| f(r) <= 0.0;
    let (good, bad) = if increasing { (0.0, 1.0) } else { (1.0, 0.0) };
    if ok(bad) {
        return Some(bad);
    }
    if !ok(good) {
        return None;
    }
    let (mut g, mut b) = (good, bad);
    for _ in 0..200 {
        let mid = 0.5 * (g + b);
        if ok(mid) {
            g = mid;
        } else {
            b = mid;
        }
    }
    Some(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffloadReport {
    pub cases: usize,
    pub solved: usize,
    /// max relative objective gap to the bisection oracle
    pub objective_gap: f64,
    pub failures: Vec<String>,
    pub certificates: CertificateLog,
}

/// Single-GU instances: one S-UAV passes near the GU over three slots.
/// The cost is affine in ρ, so the optimum sits at an end of the window
/// cut out by the local and edge deadlines; both ends are found by
/// bisection on the closed-form worst-case CVaR.
pub fn offload_suite(cases: usize, seed: u64) -> OffloadReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = OffloadReport { cases, solved: 0, objective_gap: 0.0, failures: Vec::new(), certificates: CertificateLog::default() };
    for k in 0..cases {
        let c_bar = rng.random_range(40.0..150.0);
        let task = Task {
            l: rng.random_range(4e6..1.5e7),
            c_bar,
            mu: 0.0,
            sigma: rng.random_range(0.0..0.05) * c_bar,
        };
        let params = NetworkParams {
            alpha: ALPHAS[rng.random_range(0..ALPHAS.len())],
            f_u: rng.random_range(5e8..3e9),
            kappa: [5e-4, 1e-2, 1.0][rng.random_range(0..3)],
            ..NetworkParams::default()
        };
        let gu = Point::new(500.0, 450.0);
        let offset = rng.random_range(0.0..150.0);
        let s = ScenarioParts {
            gus: vec![gu],
            jammer: Point::new(500.0, 500.0),
            eav_path: vec![Point::new(100.0, 900.0); 3],
            uav_endpoints: vec![Endpoints { ini: Point::new(470.0 + offset, 450.0), fin: Point::new(530.0 + offset, 450.0) }],
            tasks: match TaskSpec::uniform(1, 3, task) {
                Ok(t) => t,
                Err(e) => {
                    r.failures.push(format!("case {k}: {e}"));
                    continue;
                }
            },
            params,
        }
        .build();
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                r.failures.push(format!("case {k}: {e}"));
                continue;
            }
        };
        let p = s.params();
        let mut d = straight_line_init(&s);
        d.assign.iter_mut().for_each(|a| *a = Some(0));
        let links = LinkState::new(&s, &d.w);

        let mut oracle = Some(0.0);
        for t in 0..3 {
            let sec = links.sec(0, 0, t);
            let local = |rho: f64| worst_case_cvar_closed_form(&loss_local(rho, &task, p), p.alpha) + MARGIN;
            let edge = |rho: f64| match loss_edge(&[true], rho, &task, &[sec], p) {
                Ok(l) => worst_case_cvar_closed_form(&l, p.alpha) + MARGIN,
                Err(_) => f64::INFINITY,
            };
            let energy = |rho: f64| {
                let tx = tx_latency_energy(true, rho, task.l, sec, p.p0).map_or(f64::INFINITY, |x| x.1);
                local_compute(rho, &task, p).1 + tx + p.kappa * edge_compute(true, rho, &task, p).1
            };
            let lo = bisect(local, false);
            let hi = bisect(edge, true);
            let best = match (lo, hi) {
                (Some(lo), Some(hi)) if lo <= hi => Some(energy(lo).min(energy(hi))),
                _ => None,
            };
            oracle = match (oracle, best) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        }

        match (solve_offload_ratios(&s, &d, Robustness::Cvar), oracle) {
            (Ok(sol), Some(want)) => {
                r.solved += 1;
                r.certificates.merge(&sol.certificates);
                r.objective_gap = r.objective_gap.max((sol.objective - want).abs() / want.abs().max(1e-300));
            }
            (Err(Error::Infeasible(_)), None) => {}
            (got, want) => r.failures.push(format!("case {k}: solver {:?}, oracle {want:?}", got.map(|x| x.objective))),
        }
    }
    r
}

/// Outcome of all suites, printed by `aerosec oracle`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cvar: CvarReport,
    pub assignment: AssignmentReport,
    pub offload: OffloadReport,
}

impl OracleReport {
    pub const GRID_TOL: f64 = 1e-4;
    pub const CONIC_TOL: f64 = 1e-5;
    pub const OFFLOAD_TOL: f64 = 1e-6;

    pub fn run(seed: u64) -> Self {
        OracleReport {
            cvar: cvar_suite(100, 200_000, seed, 1e-8),
            assignment: assignment_suite(100, seed),
            offload: offload_suite(50, seed),
        }
    }

    pub fn passed(&self) -> bool {
        self.lines().iter().all(|(ok, _)| *ok)
    }

    pub fn lines(&self) -> Vec<(bool, String)> {
        let c = &self.cvar;
        let a = &self.assignment;
        let o = &self.offload;
        vec![
            (
                c.grid_gap <= Self::GRID_TOL,
                format!("cvar closed form vs two-point grid: {} cases, max |diff| {:.3e} (tol {:.0e})", c.cases, c.grid_gap, Self::GRID_TOL),
            ),
            (
                c.failures.is_empty() && c.conic_gap <= Self::CONIC_TOL,
                format!(
                    "cvar conic block vs closed form: {} cases, max |diff| {:.3e} (tol {:.0e}), {} solver failures",
                    c.cases,
                    c.conic_gap,
                    Self::CONIC_TOL,
                    c.failures.len()
                ),
            ),
            (
                a.mismatches.is_empty(),
                format!("assignment min-cost flow vs enumeration: {} slots ({} feasible), {} mismatches", a.cases, a.feasible, a.mismatches.len()),
            ),
            (
                o.failures.is_empty() && o.objective_gap <= Self::OFFLOAD_TOL,
                format!(
                    "offload ratios vs bisection: {} instances ({} feasible), max relative gap {:.3e} (tol {:.0e}), {} disagreements",
                    o.cases,
                    o.solved,
                    o.objective_gap,
                    Self::OFFLOAD_TOL,
                    o.failures.len()
                ),
            ),
        ]
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ok, line) in self.lines() {
            writeln!(f, "{} {line}", if ok { "ok  " } else { "FAIL" })?;
        }
        for e in self.cvar.failures.iter().chain(&self.assignment.mismatches).chain(&self.offload.failures) {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_ends() {
        assert_eq!(bisect(|x| x - 2.0, true), Some(1.0));
        assert_eq!(bisect(|x| 6.0 - x, false), None);
        assert_eq!(bisect(|x| -x, false), Some(0.0));
        let r = bisect(|x| x - 0.3, true).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
        let r = bisect(|x| 0.3 - x, false).unwrap();
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn small_suites_agree() {
        let c = cvar_suite(5, 20_000, 3, 1e-8);
        assert!(c.failures.is_empty(), "{:?}", c.failures);
        assert!(c.conic_gap <= 1e-5 && c.grid_gap <= 1e-3, "{c:?}");
        let a = assignment_suite(30, 3);
        assert!(a.mismatches.is_empty(), "{:?}", a.mismatches);
        let o = offload_suite(8, 3);
        assert!(o.failures.is_empty(), "{:?}", o.failures);
        assert!(o.objective_gap <= 1e-6);
    }
}
