//! Per-slot GU-to-S-UAV assignment for fixed ratios and trajectories.
//!
//! With ratios fixed, slots decouple and each slot is a capacitated
//! assignment: every GU with a positive ratio must be served, others stay
//! unassigned (serving them costs capacity and never lowers the energy).
//! It is solved exactly as a min-cost flow; among optima of equal cost the
//! lexicographically smallest assignment vector wins, with `None` ordered
//! before any S-UAV.

use alloc::vec;
use alloc::vec::Vec;

use super::{edge_admits, Robustness};
use crate::energy::edge_compute;
use crate::error::Infeasibility;
use crate::link::LinkState;
use crate::scenario::{Decision, Scenario};
use crate::{Error, Result};

/// One slot's assignment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSlot {
    pub gus: usize,
    pub uavs: usize,
    /// Cost (J) of serving GU `i` from S-UAV `m`, indexed `i * uavs + m`;
    /// `None` marks a forbidden pair.
    pub cost: Vec<Option<f64>>,
    /// GUs that must be served.
    pub mandatory: Vec<bool>,
    pub capacity: usize,
}

/// Why a slot has no valid assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotInfeasible {
    /// A mandatory GU has only forbidden pairs.
    NoCandidate { gu: usize },
    /// Mandatory GUs exceed the connections available to them; `gu` is one
    /// left unserved by a maximum assignment.
    Capacity { gu: usize },
}

impl AssignmentSlot {
    pub fn validate(&self) -> Result<()> {
        if self.cost.len() != self.gus * self.uavs || self.mandatory.len() != self.gus {
            return Err(Error::validation("assignment slot dimensions are inconsistent"));
        }
        if self.cost.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::validation("assignment costs must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn pair(&self, i: usize, m: usize) -> Option<f64> {
        self.cost[i * self.uavs + m]
    }

    /// Cost of an assignment, `None` if it breaks a constraint.
    pub fn total(&self, a: &[Option<usize>]) -> Option<f64> {
        let mut load = vec![0usize; self.uavs];
        let mut acc = 0.0;
        for (i, &am) in a.iter().enumerate() {
            match am {
                None if self.mandatory[i] => return None,
                None => {}
                Some(m) => {
                    acc += self.pair(i, m)?;
                    load[m] += 1;
                    if load[m] > self.capacity {
                        return None;
                    }
                }
            }
        }
        Some(acc)
    }

    fn tolerance(cost: f64) -> f64 {
        1e-12 * (1.0 + cost.abs())
    }
}

/// Successive-shortest-path min-cost flow on a small dense graph.
struct Flow {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<f64>,
    out: Vec<Vec<usize>>,
}

impl Flow {
    fn new(nodes: usize) -> Self {
        Flow { head: Vec::new(), cap: Vec::new(), cost: Vec::new(), out: vec![Vec::new(); nodes] }
    }

    fn edge(&mut self, a: usize, b: usize, cap: i64, cost: f64) -> usize {
        let e = self.head.len();
        self.head.extend([b, a]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.out[a].push(e);
        self.out[b].push(e + 1);
        e
    }

    /// Pushes up to `want` units from `src` to `dst`; returns (flow, cost).
    fn run(&mut self, src: usize, dst: usize, want: i64) -> (i64, f64) {
        let n = self.out.len();
        let (mut flow, mut total) = (0, 0.0);
        while flow < want {
            // Bellman-Ford: residual costs can be negative
            let mut dist = vec![f64::INFINITY; n];
            let mut via = vec![usize::MAX; n];
            dist[src] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for a in 0..n {
                    if dist[a] == f64::INFINITY {
                        continue;
                    }
                    for &e in &self.out[a] {
                        let b = self.head[e];
                        let nd = dist[a] + self.cost[e];
                        if self.cap[e] > 0 && nd < dist[b] - 1e-15 * (1.0 + nd.abs()) {
                            dist[b] = nd;
                            via[b] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[dst] == f64::INFINITY {
                break;
            }
            let mut v = dst;
            while v != src {
                let e = via[v];
                self.cap[e] -= 1;
                self.cap[e ^ 1] += 1;
                v = self.head[e ^ 1];
            }
            flow += 1;
            total += dist[dst];
        }
        (flow, total)
    }
}

/// Min cost of serving the mandatory GUs not yet in `fixed`, given the
/// capacity they use. When impossible, also reports a mandatory GU that a
/// maximum assignment leaves out.
fn completion(slot: &AssignmentSlot, fixed: &[Option<usize>], upto: usize) -> (Option<f64>, Option<usize>) {
    let (gus, uavs) = (slot.gus, slot.uavs);
    let mut load = vec![0usize; uavs];
    let mut base = 0.0;
    for (i, &am) in fixed.iter().enumerate().take(upto) {
        if let Some(m) = am {
            base += slot.pair(i, m).expect("fixed pairs are allowed");
            load[m] += 1;
        }
    }
    if load.iter().any(|&l| l > slot.capacity) {
        return (None, None);
    }
    let src = gus + uavs;
    let dst = src + 1;
    let mut f = Flow::new(dst + 1);
    let mut gu_edges = Vec::new();
    let mut need = 0;
    for i in upto..gus {
        if !slot.mandatory[i] {
            continue;
        }
        need += 1;
        let e = f.edge(src, i, 1, 0.0);
        gu_edges.push((i, e));
        for m in 0..uavs {
            if let Some(c) = slot.pair(i, m) {
                f.edge(i, gus + m, 1, c);
            }
        }
    }
    for m in 0..uavs {
        f.edge(gus + m, dst, (slot.capacity - load[m]) as i64, 0.0);
    }
    let (got, cost) = f.run(src, dst, need);
    if got < need {
        let left = gu_edges.iter().find(|&&(_, e)| f.cap[e] > 0).map(|&(i, _)| i);
        return (None, left);
    }
    (Some(base + cost), None)
}

/// Exact optimum of one slot with lexicographic tie-breaking.
pub fn solve_slot(slot: &AssignmentSlot) -> core::result::Result<Vec<Option<usize>>, SlotInfeasible> {
    for i in 0..slot.gus {
        if slot.mandatory[i] && (0..slot.uavs).all(|m| slot.pair(i, m).is_none()) {
            return Err(SlotInfeasible::NoCandidate { gu: i });
        }
    }
    let mut a: Vec<Option<usize>> = vec![None; slot.gus];
    let best = match completion(slot, &a, 0) {
        (Some(c), _) => c,
        (None, left) => return Err(SlotInfeasible::Capacity { gu: left.unwrap_or(0) }),
    };
    let limit = best + AssignmentSlot::tolerance(best);
    for i in 0..slot.gus {
        if !slot.mandatory[i] {
            continue;
        }
        let mut chosen = false;
        for m in 0..slot.uavs {
            if slot.pair(i, m).is_none() {
                continue;
            }
            a[i] = Some(m);
            if let (Some(c), _) = completion(slot, &a, i + 1) {
                if c <= limit {
                    chosen = true;
                    break;
                }
            }
        }
        debug_assert!(chosen, "an optimal completion exists for every prefix");
        if !chosen {
            return Err(SlotInfeasible::Capacity { gu: i });
        }
    }
    Ok(a)
}

/// Exhaustive search over all `(M+1)^I` assignments, using the same
/// tie-break as [`solve_slot`]. Exponential: for tests and oracles only.
pub fn enumerate_slot(slot: &AssignmentSlot) -> Option<Vec<Option<usize>>> {
    let (gus, uavs) = (slot.gus, slot.uavs);
    let mut all: Vec<(f64, Vec<Option<usize>>)> = Vec::new();
    let mut cur = vec![0usize; gus];
    loop {
        let a: Vec<Option<usize>> = cur.iter().map(|&k| if k == 0 { None } else { Some(k - 1) }).collect();
        if let Some(c) = slot.total(&a) {
            all.push((c, a));
        }
        let mut j = gus;
        loop {
            if j == 0 {
                let best = all.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
                let limit = best + AssignmentSlot::tolerance(best);
                return all.into_iter().filter(|e| e.0 <= limit).map(|e| e.1).min();
            }
            j -= 1;
            cur[j] += 1;
            if cur[j] <= uavs {
                break;
            }
            cur[j] = 0;
        }
    }
}

/// Instance for slot `t`: serving costs are the transmission plus weighted
/// edge energies at the fixed ratio; pairs without secrecy capacity or
/// whose edge deadline fails at that ratio are forbidden.
pub fn build_slot(s: &Scenario, links: &LinkState, d: &Decision, t: usize, rob: Robustness) -> AssignmentSlot {
    let (gus, uavs) = (s.num_gus(), s.num_uavs());
    let p = s.params();
    let mut cost = vec![None; gus * uavs];
    let mut mandatory = vec![false; gus];
    for i in 0..gus {
        let rho = d.ratio(i, t);
        let task = s.task(i, t);
        mandatory[i] = rho > 0.0;
        for m in 0..uavs {
            let r = links.sec(i, m, t);
            if r > 0.0 && edge_admits(rho, task, r, p, rob) {
                let tx = p.p0 * rho * task.l / r;
                cost[i * uavs + m] = Some(tx + p.kappa * edge_compute(true, rho, task, p).1);
            }
        }
    }
    AssignmentSlot { gus, uavs, cost, mandatory, capacity: p.m_max }
}

/// Per-slot optimal assignment for the ratios and trajectories in `d`.
pub fn solve_assignment(s: &Scenario, d: &Decision, rob: Robustness) -> Result<Vec<Option<usize>>> {
    let links = LinkState::new(s, &d.w);
    solve_assignment_with(s, d, &links, rob)
}

pub fn solve_assignment_with(
    s: &Scenario,
    d: &Decision,
    links: &LinkState,
    rob: Robustness,
) -> Result<Vec<Option<usize>>> {
    let (gus, slots) = (s.num_gus(), s.num_slots());
    let mut out = vec![None; gus * slots];
    for t in 0..slots {
        let slot = build_slot(s, links, d, t, rob);
        let a = solve_slot(&slot).map_err(|e| {
            let (gu, reason) = match e {
                SlotInfeasible::NoCandidate { gu } => (gu, "every S-UAV is forbidden for a GU that must offload"),
                SlotInfeasible::Capacity { gu } => (gu, "GUs that must offload exceed the available connections"),
            };
            Error::Infeasible(Infeasibility { slot: Some(t), gu: Some(gu), reason: reason.into() })
        })?;
        for i in 0..gus {
            out[i * slots + t] = a[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn slot(cost: Vec<Option<f64>>, mandatory: Vec<bool>, uavs: usize, capacity: usize) -> AssignmentSlot {
        AssignmentSlot { gus: mandatory.len(), uavs, cost, mandatory, capacity }
    }

    #[test]
    fn capacity_shortfall() {
        let s = slot(vec![Some(1.0), Some(2.0)], vec![true, true], 1, 1);
        assert!(matches!(solve_slot(&s), Err(SlotInfeasible::Capacity { .. })));
        assert_eq!(enumerate_slot(&s), None);
    }

    #[test]
    fn only_mandatory_gus_are_served() {
        let s = slot(vec![Some(1.0), Some(0.0)], vec![true, false], 1, 1);
        assert_eq!(solve_slot(&s).unwrap(), vec![Some(0), None]);
        assert_eq!(enumerate_slot(&s).unwrap(), vec![Some(0), None]);
    }

    #[test]
    fn forbidden_mandatory_gu() {
        let s = slot(vec![None, None, Some(1.0), Some(1.0)], vec![true, true], 2, 2);
        assert_eq!(solve_slot(&s), Err(SlotInfeasible::NoCandidate { gu: 0 }));
    }

    #[test]
    fn ties_pick_lowest_indices() {
        let s = slot(vec![Some(1.0), Some(1.0), Some(1.0), Some(1.0)], vec![true, true], 2, 2);
        assert_eq!(solve_slot(&s).unwrap(), vec![Some(0), Some(0)]);
        let s = slot(vec![Some(1.0), Some(1.0), Some(1.0), Some(1.0)], vec![true, true], 2, 1);
        assert_eq!(solve_slot(&s).unwrap(), vec![Some(0), Some(1)]);
    }

    #[test]
    fn swap_beats_greedy() {
        // greedy on GU 0 would take UAV 0 and push GU 1 onto a costly link
        let s = slot(vec![Some(1.0), Some(1.5), Some(1.1), Some(9.0)], vec![true, true], 2, 1);
        assert_eq!(solve_slot(&s).unwrap(), vec![Some(1), Some(0)]);
    }

    fn random_slot(rng: &mut ChaCha8Rng, gus: usize, uavs: usize) -> AssignmentSlot {
        let mut cost = Vec::new();
        for _ in 0..gus * uavs {
            // coarse values make ties common
            cost.push(if rng.random_bool(0.2) { None } else { Some(rng.random_range(0..6) as f64 * 0.5) });
        }
        let mandatory = (0..gus).map(|_| rng.random_bool(0.6)).collect();
        slot(cost, mandatory, uavs, rng.random_range(1..=3))
    }

    #[test]
    fn five_by_two_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_slot(&mut rng, 5, 2);
            assert_eq!(solve_slot(&s).ok(), enumerate_slot(&s), "{s:?}");
        }
    }

    proptest! {
        #[test]
        fn flow_equals_enumeration(seed in any::<u64>(), gus in 1usize..=6, uavs in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_slot(&mut rng, gus, uavs);
            let fast = solve_slot(&s);
            let slow = enumerate_slot(&s);
            prop_assert_eq!(fast.clone().ok(), slow.clone());
            if let Ok(a) = fast {
                prop_assert!(s.total(&a).is_some());
            }
        }
    }
}
