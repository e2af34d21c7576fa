//! The three block subproblems of the alternating scheme: offload ratios
//! with their CVaR auxiliaries, per-slot assignment, and trajectories.
//!
//! Each block holds the other two fixed. The helpers here give the
//! closed-form deadline windows that all three share, so that the assignment
//! and trajectory steps never produce a point the ratio step cannot repair.

pub mod assignment;
pub mod offload;
pub mod trajectory;

use crate::cvar::{safety_multiplier, CvarAux, MARGIN};
use crate::scenario::{NetworkParams, Task};

/// How latency deadlines are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Robustness {
    /// Distributionally robust CVaR blocks at level α.
    #[default]
    Cvar,
    /// Deterministic deadlines at the estimated complexity `c̄`.
    Ideal,
}

impl Robustness {
    /// Complexity (cycles/bit) a deadline must absorb beyond `c̄`.
    pub fn reserve(self, task: &Task, alpha: f64) -> f64 {
        match self {
            Robustness::Cvar => task.mu + task.sigma * safety_multiplier(alpha),
            Robustness::Ideal => 0.0,
        }
    }

    /// Auxiliaries that admit the largest loss for a block whose dispersion
    /// is `Θσ`; zero under [`Robustness::Ideal`], where no block exists.
    pub fn loosest_aux(self, theta_sigma: f64, alpha: f64) -> CvarAux {
        match self {
            Robustness::Cvar => CvarAux::loosest(theta_sigma, alpha),
            Robustness::Ideal => CvarAux::default(),
        }
    }
}

/// Usable deadline after the strict-inequality margin.
pub(crate) fn deadline(p: &NetworkParams) -> f64 {
    p.tau - MARGIN
}

/// Smallest offload ratio whose local share meets its deadline. Always
/// below 1, since a full offload leaves no local work.
pub fn local_min_ratio(task: &Task, p: &NetworkParams, rob: Robustness) -> f64 {
    let a = task.l * (task.c_bar + rob.reserve(task, p.alpha)) / p.f_g;
    let tau = deadline(p);
    if a <= tau {
        0.0
    } else {
        1.0 - tau / a
    }
}

/// Worst-case edge latency minus τ at ratio `rho` over secrecy rate `r_sec`.
pub fn edge_excess(rho: f64, task: &Task, r_sec: f64, p: &NetworkParams, rob: Robustness) -> f64 {
    if rho == 0.0 {
        return -p.tau;
    }
    rho * (task.l * (task.c_bar + rob.reserve(task, p.alpha)) / p.f_u + task.l / r_sec) - p.tau
}

/// Worst-case local latency minus τ at ratio `rho`.
pub fn local_excess(rho: f64, task: &Task, p: &NetworkParams, rob: Robustness) -> f64 {
    (1.0 - rho) * task.l * (task.c_bar + rob.reserve(task, p.alpha)) / p.f_g - p.tau
}

/// Largest ratio whose edge share meets its deadline over `r_sec`, capped
/// at 1; `None` for a link without secrecy capacity.
pub fn edge_max_ratio(task: &Task, r_sec: f64, p: &NetworkParams, rob: Robustness) -> Option<f64> {
    if !(r_sec > 0.0) {
        return None;
    }
    let b = task.l * (task.c_bar + rob.reserve(task, p.alpha)) / p.f_u + task.l / r_sec;
    Some((deadline(p) / b).min(1.0))
}

/// Whether a deadline excess meets the margin, up to rounding in the last
/// bits of the closed forms.
pub fn admissible(excess: f64) -> bool {
    excess <= -MARGIN * (1.0 - 1e-6)
}

/// Whether ratio `rho` meets the edge deadline over `r_sec` with margin.
pub fn edge_admits(rho: f64, task: &Task, r_sec: f64, p: &NetworkParams, rob: Robustness) -> bool {
    rho == 0.0 || (r_sec > 0.0 && admissible(edge_excess(rho, task, r_sec, p, rob)))
}

/// Closed-form ratio window `[lo, hi]` of a pair served over `r_sec`;
/// `None` when no ratio meets both deadlines.
pub fn ratio_window(task: &Task, r_sec: f64, p: &NetworkParams, rob: Robustness) -> Option<(f64, f64)> {
    let lo = local_min_ratio(task, p, rob);
    let hi = edge_max_ratio(task, r_sec, p, rob)?;
    if lo <= hi {
        Some((lo, hi))
    } else if edge_admits(lo, task, r_sec, p, rob) {
        Some((lo, lo))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvar::{loss_edge, loss_local, worst_case_cvar_closed_form};

    fn task() -> Task {
        Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 }
    }

    #[test]
    fn windows_match_closed_form() {
        let p = NetworkParams::default();
        let t = task();
        let lo = local_min_ratio(&t, &p, Robustness::Cvar);
        let at = worst_case_cvar_closed_form(&loss_local(lo, &t, &p), p.alpha);
        assert!((at + MARGIN).abs() < 1e-12, "{at}");
        let r = 1.5479e8;
        let hi = edge_max_ratio(&t, r, &p, Robustness::Cvar).unwrap();
        assert_eq!(hi, 1.0);
        let loss = loss_edge(&[true], 1.0, &t, &[r], &p).unwrap();
        let v = worst_case_cvar_closed_form(&loss, p.alpha);
        assert!((v - edge_excess(1.0, &t, r, &p, Robustness::Cvar)).abs() < 1e-12);
        // ideal needs less offloading
        assert!(local_min_ratio(&t, &p, Robustness::Ideal) < lo);
        assert!((local_min_ratio(&t, &p, Robustness::Ideal) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn window_edges() {
        let p = NetworkParams::default();
        let easy = Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 };
        assert_eq!(local_min_ratio(&easy, &p, Robustness::Cvar), 0.0);
        assert_eq!(edge_max_ratio(&easy, 0.0, &p, Robustness::Cvar), None);
        assert!(edge_admits(0.0, &easy, 0.0, &p, Robustness::Cvar));
        assert!(!edge_admits(0.5, &easy, 0.0, &p, Robustness::Cvar));
        let slow = edge_max_ratio(&task(), 1e6, &p, Robustness::Cvar).unwrap();
        assert!(slow < 1.0 && edge_excess(slow, &task(), 1e6, &p, Robustness::Cvar) <= -MARGIN * 0.999);
    }
}
