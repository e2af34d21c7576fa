//! Trajectory step: successive convex approximation of the transmission
//! latency, which is concave in the squared horizontal GU–S-UAV distance
//! over the operating area and so lies below each of its tangents.
//!
//! Positions are solved in a frame scaled to the area extent. An iterate is
//! kept per S-UAV only if it passes the exact speed, area, secrecy and
//! deadline checks and does not raise that S-UAV's share of Γ; the
//! constraints and objective separate by S-UAV, so mixing kept and rejected
//! trajectories stays feasible.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{admissible, deadline, edge_excess, Robustness};
use crate::conic::{solve, CertificateLog, LinExpr, ProgramBuilder, Status};
use crate::energy::{flight_energy, flight_energy_for_distance, hover_power, propulsion_power, total_energy};
use crate::link::{distance_3d, uplink_rate, LinkState, ZeroSecrecy};
use crate::math::{ln_1p, LN_2};
use crate::scenario::{Decision, NetworkParams, Point, Scenario};
use crate::{Error, Result};

/// Box and speed rows are pulled inward by this much (scaled units) so that
/// solver round-off lands inside the exact limits.
const SHRINK: f64 = 1e-7;

/// Deadline rows are tightened by this fraction of τ for the same reason.
const DEADLINE_SLACK: f64 = 1e-6;

/// Tangent of the transmission latency at one expansion point, in the
/// squared horizontal distance `ω = ‖w − w_i‖²` (m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorBound {
    /// Latency (s) at the expansion point.
    pub value: f64,
    /// Derivative in `ω` (s/m²); positive.
    pub slope: f64,
    /// `ω` at the expansion point.
    pub omega: f64,
}

impl TaylorBound {
    pub fn at(w_i: Point, w_exp: Point, rho: f64, l: f64, r_eav: f64, p: &NetworkParams) -> Result<Self, ZeroSecrecy> {
        let omega = (w_exp - w_i).norm_sq();
        let d = omega + p.h_s * p.h_s;
        let snr = p.p0 * p.g0 / (p.noise_power() * d);
        // ln 2 times the secrecy rate
        let gap = p.b0 * ln_1p(snr) - r_eav * LN_2;
        if !(gap > 0.0) {
            return Err(ZeroSecrecy);
        }
        let value = rho * l * LN_2 / gap;
        let slope = rho * l * p.p0 * p.g0 * LN_2 / (p.n0 * (1.0 + snr) * gap * gap * d * d);
        Ok(TaylorBound { value, slope, omega })
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.value + self.slope * (omega - self.omega)
    }
}

/// Upper bound (s) on the transmission latency of GU `w_i` to an S-UAV at
/// `w_m`, built at the expansion point `w_exp`.
#[allow(clippy::too_many_arguments)]
pub fn taylor_upper_bound(
    w_m: Point,
    w_i: Point,
    w_exp: Point,
    lambda: bool,
    rho: f64,
    l: f64,
    r_eav: f64,
    p: &NetworkParams,
) -> Result<f64, ZeroSecrecy> {
    if !lambda || rho == 0.0 {
        return Ok(0.0);
    }
    Ok(TaylorBound::at(w_i, w_exp, rho, l, r_eav, p)?.eval((w_m - w_i).norm_sq()))
}

/// Exact transmission latency (s); `None` without secrecy capacity.
pub fn exact_latency(w_m: Point, w_i: Point, rho: f64, l: f64, r_eav: f64, p: &NetworkParams) -> Option<f64> {
    let r = uplink_rate(distance_3d(w_i, w_m, p.h_s), p) - r_eav;
    (r > 0.0).then(|| rho * l / r)
}

/// Result of the trajectory step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaOutcome {
    pub w: Vec<Point>,
    /// Exact Γ (J) at the initial point and after every kept iterate.
    pub trace: Vec<f64>,
    /// Surrogate objective (J) of each solved program at its solution.
    pub surrogate: Vec<f64>,
    /// Programs solved.
    pub iterations: usize,
    pub certificates: CertificateLog,
}

struct Frame {
    origin: Point,
    len: f64,
}

impl Frame {
    fn new(p: &NetworkParams) -> Self {
        Frame { origin: Point::new(p.x_min, p.y_min), len: (p.x_max - p.x_min).max(p.y_max - p.y_min) }
    }

    fn to(&self, q: Point) -> Point {
        (q - self.origin) * (1.0 / self.len)
    }

    fn from(&self, q: Point) -> Point {
        self.origin + q * self.len
    }
}

/// A served pair with a nonzero ratio.
struct Pair {
    i: usize,
    t: usize,
    m: usize,
}

fn served_pairs(s: &Scenario, d: &Decision) -> Vec<Pair> {
    let mut out = Vec::new();
    for i in 0..s.num_gus() {
        for t in 0..s.num_slots() {
            if let Some(m) = d.serving(i, t) {
                if d.ratio(i, t) > 0.0 {
                    out.push(Pair { i, t, m });
                }
            }
        }
    }
    out
}

/// S-UAV `m`'s share of Γ along `traj`: weighted flight energy plus the
/// transmission energy of its pairs.
fn uav_energy(s: &Scenario, d: &Decision, links: &LinkState, pairs: &[Pair], m: usize, traj: &[Point]) -> Option<f64> {
    let p = s.params();
    let mut e = 0.0;
    for t in 0..traj.len() {
        let prev = traj[t.saturating_sub(1)];
        e += p.kappa * flight_energy(prev, traj[t], p).ok()?;
    }
    for q in pairs.iter().filter(|q| q.m == m) {
        let task = s.task(q.i, q.t);
        e += p.p0 * exact_latency(traj[q.t], s.gus()[q.i], d.ratio(q.i, q.t), task.l, links.eav(q.i, q.t), p)?;
    }
    Some(e)
}

/// Edge-deadline excess of a pair with the S-UAV at `w`.
fn pair_excess(s: &Scenario, d: &Decision, links: &LinkState, q: &Pair, w: Point, rob: Robustness) -> f64 {
    let p = s.params();
    let task = s.task(q.i, q.t);
    let r = uplink_rate(distance_3d(s.gus()[q.i], w, p.h_s), p) - links.eav(q.i, q.t);
    if !(r > 0.0) {
        return f64::INFINITY;
    }
    edge_excess(d.ratio(q.i, q.t), task, r, p, rob)
}

struct Program {
    b: ProgramBuilder,
    /// Variable of the scaled x coordinate per `m * T + t`; y follows it.
    pos: Vec<Option<usize>>,
    /// Tangent and `u` variable per pair.
    bounds: Vec<(TaylorBound, Option<usize>)>,
}

fn build(s: &Scenario, d: &Decision, links: &LinkState, pairs: &[Pair], rob: Robustness, first: bool) -> Result<Program> {
    let p = s.params();
    let f = Frame::new(p);
    let (uavs, slots) = (s.num_uavs(), s.num_slots());
    let mut b = ProgramBuilder::new();
    let mut pos = vec![None; uavs * slots];
    let lo = f.to(Point::new(p.x_min, p.y_min));
    let hi = f.to(Point::new(p.x_max, p.y_max));
    for m in 0..uavs {
        for t in 1..slots.saturating_sub(1) {
            let c = f.to(d.pos(m, t));
            let j = b.add_vars(2).start;
            pos[m * slots + t] = Some(j);
            for (k, (cv, l, h)) in [(c.x, lo.x, hi.x), (c.y, lo.y, hi.y)].into_iter().enumerate() {
                b.nonneg(LinExpr::var(j + k) - (l + SHRINK).min(cv));
                b.nonneg(LinExpr::constant((h - SHRINK).max(cv)) - LinExpr::var(j + k));
            }
        }
    }
    let coord = |pos: &[Option<usize>], m: usize, t: usize| -> (LinExpr, LinExpr) {
        match pos[m * slots + t] {
            Some(j) => (LinExpr::var(j), LinExpr::var(j + 1)),
            None => {
                let c = f.to(d.pos(m, t));
                (LinExpr::constant(c.x), LinExpr::constant(c.y))
            }
        }
    };
    let step = p.step_limit() / f.len;
    let per_len = p.kappa * (propulsion_power(p.v0, p) - hover_power(p)) / p.v0 * f.len;
    for m in 0..uavs {
        for t in 1..slots {
            if pos[m * slots + t].is_none() && pos[m * slots + t - 1].is_none() {
                continue;
            }
            let (x0, y0) = coord(&pos, m, t - 1);
            let (x1, y1) = coord(&pos, m, t);
            let v = b.add_var();
            b.soc(LinExpr::var(v), vec![x1 - x0, y1 - y0]);
            let cur = d.pos(m, t).dist(d.pos(m, t - 1)) / f.len;
            b.le(LinExpr::var(v), LinExpr::constant((step * (1.0 - SHRINK)).max(cur)));
            b.minimize(&LinExpr::term(v, per_len));
        }
    }
    let mut bounds = Vec::with_capacity(pairs.len());
    for q in pairs {
        let task = s.task(q.i, q.t);
        let rho = d.ratio(q.i, q.t);
        let gu = s.gus()[q.i];
        let tb = TaylorBound::at(gu, d.pos(q.m, q.t), rho, task.l, links.eav(q.i, q.t), p)
            .map_err(|_| Error::ZeroSecrecy { gu: q.i, uav: q.m, slot: q.t })?;
        let cap = deadline(p) - rho * task.l * (task.c_bar + rob.reserve(task, p.alpha)) / p.f_u;
        if tb.value > cap + 1e-9 * p.tau {
            if first {
                return Err(Error::infeasible(Some(q.t), Some(q.i), "initial trajectory violates robust deadline"));
            }
            return Err(Error::Internal(format!("GU {} slot {}: trajectory iterate left the deadline", q.i, q.t)));
        }
        let Some(j) = pos[q.m * slots + q.t] else {
            bounds.push((tb, None));
            continue;
        };
        let g = f.to(gu);
        let u = b.add_var();
        let tail = vec![
            LinExpr::var(u) - 1.0,
            (LinExpr::var(j) - g.x) * 2.0,
            (LinExpr::var(j + 1) - g.y) * 2.0,
        ];
        b.soc(LinExpr::var(u) + 1.0, tail);
        let len2 = f.len * f.len;
        let cap = (cap - DEADLINE_SLACK * p.tau).max(tb.value);
        b.le(LinExpr::term(u, tb.slope * len2) + (tb.value - tb.slope * tb.omega), LinExpr::constant(cap));
        b.minimize(&LinExpr::term(u, p.p0 * tb.slope * len2));
        bounds.push((tb, Some(u)));
    }
    Ok(Program { b, pos, bounds })
}

/// Minimizes Γ over the S-UAV trajectories in `d` with assignment and
/// ratios held fixed. Endpoints stay at the scenario's initial and final
/// positions.
pub fn solve_trajectory_sca(s: &Scenario, d: &Decision, rob: Robustness, max_iter: usize) -> Result<ScaOutcome> {
    let p = s.params();
    let f = Frame::new(p);
    let (uavs, slots) = (s.num_uavs(), s.num_slots());
    let pairs = served_pairs(s, d);
    let mut cur = d.clone();
    let mut gamma = total_energy(s, &cur)?.gamma;
    let mut out = ScaOutcome {
        w: cur.w.clone(),
        trace: vec![gamma],
        surrogate: Vec::new(),
        iterations: 0,
        certificates: CertificateLog::default(),
    };
    let movable = slots > 2 && uavs > 0;
    for it in 0..max_iter {
        if !movable {
            break;
        }
        let links = LinkState::new(s, &cur.w);
        let prog = build(s, &cur, &links, &pairs, rob, it == 0)?;
        let sol = solve(&prog.b.build(), p.solver_tol, 100)?;
        out.iterations += 1;
        out.certificates.record(&sol);
        match sol.status {
            Status::Optimal => {}
            Status::PrimalInfeasible if it == 0 => {
                return Err(Error::infeasible(None, None, "initial trajectory violates robust deadline"))
            }
            st => return Err(Error::Internal(format!("trajectory program ended with status {st:?}"))),
        }

        let mut prop = cur.w.clone();
        for (k, j) in prog.pos.iter().enumerate() {
            if let Some(j) = *j {
                let q = f.from(Point::new(sol.x[j], sol.x[j + 1]));
                prop[k] = Point::new(q.x.clamp(p.x_min, p.x_max), q.y.clamp(p.y_min, p.y_max));
            }
        }

        let mut surrogate = gamma;
        let mut next = cur.w.clone();
        let mut moved = false;
        for m in 0..uavs {
            let span = m * slots..(m + 1) * slots;
            let old = uav_energy(s, &cur, &links, &pairs, m, &cur.w[span.clone()])
                .ok_or_else(|| Error::Internal(format!("S-UAV {m}: current trajectory is not feasible")))?;
            let traj = &prop[span.clone()];
            let mut sur = 0.0;
            for t in 0..slots {
                let dist = traj[t].dist(traj[t.saturating_sub(1)]);
                sur += p.kappa * flight_energy_for_distance(dist, p);
            }
            let mut ok = true;
            for (q, (tb, _)) in pairs.iter().zip(&prog.bounds).filter(|(q, _)| q.m == m) {
                sur += p.p0 * tb.eval((traj[q.t] - s.gus()[q.i]).norm_sq());
                let now = pair_excess(s, &cur, &links, q, traj[q.t], rob);
                ok &= admissible(now) || now <= pair_excess(s, &cur, &links, q, cur.pos(m, q.t), rob);
            }
            surrogate += sur - old;
            if !ok || traj.iter().any(|&w| !p.contains(w)) {
                continue;
            }
            let Some(new) = uav_energy(s, &cur, &links, &pairs, m, traj) else { continue };
            if new > old + 1e-6 * (1.0 + old) {
                return Err(Error::Internal(format!(
                    "S-UAV {m}: trajectory step raised energy from {old} J to {new} J"
                )));
            }
            if new < old {
                next[span].copy_from_slice(traj);
                moved = true;
            }
        }
        out.surrogate.push(surrogate);
        if !moved {
            break;
        }
        cur.w = next;
        let g = total_energy(s, &cur)?.gamma;
        if g > gamma {
            return Err(Error::Internal(format!("trajectory step raised gamma from {gamma} J to {g} J")));
        }
        let drop = gamma - g;
        gamma = g;
        out.trace.push(g);
        out.w.clone_from(&cur.w);
        if drop <= p.sca_tol {
            break;
        }
    }
    Ok(out)
}
