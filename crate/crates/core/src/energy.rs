//! Propulsion, flight, computation and transmission energies, and the
//! weighted total Γ.

use alloc::vec;
use alloc::vec::Vec;

use crate::link::{tx_latency_energy, LinkState};
use crate::math::sqrt;
use crate::scenario::{Decision, NetworkParams, Point, Scenario, Task};
use crate::{Error, Result};

/// Rotary-wing propulsion power (W) at horizontal speed `v` (m/s).
pub fn propulsion_power(v: f64, p: &NetworkParams) -> f64 {
    let v2 = v * v;
    let blade = p.p1 * (1.0 + 3.0 * v2 / (p.v_bla * p.v_bla));
    let vr2 = p.v_rot * p.v_rot;
    let induced = p.p2 * sqrt(sqrt(1.0 + v2 * v2 / (4.0 * vr2 * vr2)) - v2 / (2.0 * vr2));
    let parasite = 0.5 * p.drag_g * p.rho_air * p.s0 * p.a0 * v2 * v;
    blade + induced + parasite
}

pub fn hover_power(p: &NetworkParams) -> f64 {
    p.p1 + p.p2
}

/// Energy (J) of one slot in which the S-UAV covers `‖w_cur − w_prev‖` at
/// speed v0 and hovers for the rest of the slot.
pub fn flight_energy(w_prev: Point, w_cur: Point, p: &NetworkParams) -> core::result::Result<f64, (f64, f64)> {
    let dist = w_prev.dist(w_cur);
    let lim = p.step_limit();
    if dist > lim * (1.0 + 1e-9) {
        return Err((dist, lim));
    }
    Ok(flight_energy_for_distance(dist.min(lim), p))
}

pub fn flight_energy_for_distance(dist: f64, p: &NetworkParams) -> f64 {
    let t_fly = dist / p.v0;
    let p_hov = hover_power(p);
    p_hov * p.tau + (propulsion_power(p.v0, p) - p_hov) * t_fly
}

/// Nominal local latency (s, at Δ = 0) and expected local energy (J).
pub fn local_compute(rho: f64, task: &Task, p: &NetworkParams) -> (f64, f64) {
    let keep = 1.0 - rho;
    let lat = keep * task.c_bar * task.l / p.f_g;
    let en = p.eps_g * keep * (task.c_bar + task.mu) * task.l * p.f_g * p.f_g;
    (lat, en)
}

/// Nominal edge latency (s) and expected edge energy (J).
pub fn edge_compute(lambda: bool, rho: f64, task: &Task, p: &NetworkParams) -> (f64, f64) {
    if !lambda {
        return (0.0, 0.0);
    }
    let lat = rho * task.c_bar * task.l / p.f_u;
    let en = p.eps_u * rho * (task.c_bar + task.mu) * task.l * p.f_u * p.f_u;
    (lat, en)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    gus: usize,
    uavs: usize,
    slots: usize,
    /// Per (i, t).
    pub e_local: Vec<f64>,
    /// Per (i, m, t), indexed as [`LinkState::idx`].
    pub e_tx: Vec<f64>,
    /// Per (i, m, t).
    pub e_edge: Vec<f64>,
    /// Per (m, t).
    pub e_fly: Vec<f64>,
    /// Weighted total per slot.
    pub total_per_slot: Vec<f64>,
    pub gamma: f64,
}

impl EnergyBreakdown {
    pub fn local_sum(&self) -> f64 {
        self.e_local.iter().sum()
    }

    pub fn tx_sum(&self) -> f64 {
        self.e_tx.iter().sum()
    }

    pub fn edge_sum(&self) -> f64 {
        self.e_edge.iter().sum()
    }

    pub fn fly_sum(&self) -> f64 {
        self.e_fly.iter().sum()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.gus, self.uavs, self.slots)
    }
}

/// Assembles Γ for a decision. The first slot has no predecessor position and
/// is charged as a full hover at the initial point.
pub fn total_energy(s: &Scenario, d: &Decision) -> Result<EnergyBreakdown> {
    let links = LinkState::new(s, &d.w);
    total_energy_with_links(s, d, &links)
}

pub fn total_energy_with_links(s: &Scenario, d: &Decision, links: &LinkState) -> Result<EnergyBreakdown> {
    let (gus, uavs, slots) = (s.num_gus(), s.num_uavs(), s.num_slots());
    let p = s.params();
    let mut b = EnergyBreakdown {
        gus,
        uavs,
        slots,
        e_local: vec![0.0; gus * slots],
        e_tx: vec![0.0; gus * uavs * slots],
        e_edge: vec![0.0; gus * uavs * slots],
        e_fly: vec![0.0; uavs * slots],
        total_per_slot: vec![0.0; slots],
        gamma: 0.0,
    };
    for m in 0..uavs {
        for t in 0..slots {
            let prev = if t == 0 { d.pos(m, 0) } else { d.pos(m, t - 1) };
            b.e_fly[m * slots + t] = flight_energy(prev, d.pos(m, t), p).map_err(|(distance, limit)| {
                Error::SpeedViolation { uav: m, slot: t, distance, limit }
            })?;
        }
    }
    for i in 0..gus {
        for t in 0..slots {
            let task = s.task(i, t);
            let rho = d.ratio(i, t);
            b.e_local[i * slots + t] = local_compute(rho, task, p).1;
            for m in 0..uavs {
                let lam = d.lambda(i, m, t);
                let k = links.idx(i, m, t);
                let (_, etx) = tx_latency_energy(lam, rho, task.l, links.r_sec[k], p.p0)
                    .map_err(|_| Error::ZeroSecrecy { gu: i, uav: m, slot: t })?;
                b.e_tx[k] = etx;
                b.e_edge[k] = edge_compute(lam, rho, task, p).1;
            }
        }
    }
    for t in 0..slots {
        let mut gu_side = 0.0;
        let mut uav_side = 0.0;
        for i in 0..gus {
            gu_side += b.e_local[i * slots + t];
            for m in 0..uavs {
                let k = links.idx(i, m, t);
                gu_side += b.e_tx[k];
                uav_side += b.e_edge[k];
            }
        }
        for m in 0..uavs {
            uav_side += b.e_fly[m * slots + t];
        }
        b.total_per_slot[t] = gu_side + p.kappa * uav_side;
    }
    b.gamma = b.total_per_slot.iter().sum();
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{desk_scenario, straight_line_init, Endpoints, ScenarioParts, TaskSpec};
    use proptest::prelude::*;

    fn p() -> NetworkParams {
        NetworkParams::default()
    }

    #[test]
    fn hover_and_cruise_power() {
        assert!((propulsion_power(0.0, &p()) - 168.48).abs() < 1e-12);
        let v20 = propulsion_power(20.0, &p());
        assert!((v20 - 178.29).abs() < 0.01, "{v20}");
        // term by term
        let q = p();
        let blade = q.p1 * (1.0 + 3.0 * 400.0 / 14400.0);
        assert!((blade - 86.504).abs() < 1e-3);
        let parasite: f64 = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * 8000.0;
        assert!((parasite - 73.941).abs() < 1e-3);
        assert!((v20 - blade - parasite - 17.845).abs() < 2e-3);
    }

    #[test]
    fn propulsion_has_interior_minimum() {
        let q = p();
        let (vmin, pmin) = (1..400)
            .map(|k| k as f64 * 0.1)
            .map(|v| (v, propulsion_power(v, &q)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!(vmin > 0.0 && pmin < hover_power(&q));
        assert!(propulsion_power(q.v0, &q) > hover_power(&q));
    }

    #[test]
    fn flight_energy_values() {
        let q = p();
        let o = Point::new(0.0, 0.0);
        assert!((flight_energy(o, o, &q).unwrap() - 336.96).abs() < 1e-9);
        let e = flight_energy(o, Point::new(20.0, 0.0), &q).unwrap();
        assert!((e - 346.77).abs() < 0.01, "{e}");
        assert!(flight_energy(o, Point::new(41.0, 0.0), &q).is_err());
    }

    #[test]
    fn computation_values() {
        let q = p();
        let t = Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 };
        assert_eq!(local_compute(1.0, &t, &q), (0.0, 0.0));
        let (lat, en) = local_compute(0.0, &t, &q);
        assert!((lat - 0.2).abs() < 1e-15 && (en - 2e-5).abs() < 1e-18);
        let big = Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 };
        assert!((local_compute(0.0, &big, &q).0 - 10.0).abs() < 1e-12);
        let (lat, en) = edge_compute(true, 1.0, &big, &q);
        assert!((lat - 1.0).abs() < 1e-12 && (en - 0.1).abs() < 1e-12);
        assert_eq!(edge_compute(false, 1.0, &big, &q), (0.0, 0.0));
        assert_eq!(edge_compute(true, 0.0, &big, &q), (0.0, 0.0));
    }

    fn single(kappa: f64) -> Scenario {
        let task = Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 };
        ScenarioParts {
            gus: vec![Point::new(500.0, 500.0)],
            jammer: Point::new(500.0, 500.0),
            eav_path: vec![Point::new(0.0, 0.0)],
            uav_endpoints: vec![Endpoints { ini: Point::new(500.0, 500.0), fin: Point::new(500.0, 500.0) }],
            tasks: TaskSpec::uniform(1, 1, task).unwrap(),
            params: NetworkParams { kappa, ..p() },
        }
        .build()
        .unwrap()
    }

    #[test]
    fn single_slot_hand_sum() {
        let s = single(5e-4);
        let mut d = straight_line_init(&s);
        d.assign[0] = Some(0);
        d.rho[0] = 0.5;
        let b = total_energy(&s, &d).unwrap();
        let q = s.params();
        let task = s.task(0, 0);
        let r_sec = crate::link::secure_rate(
            crate::link::uplink_rate(100.0, q),
            crate::link::eavesdrop_rate(510000f64.sqrt(), 510000f64.sqrt(), q),
        );
        let want = local_compute(0.5, task, q).1
            + 0.5 * 1e6 / r_sec * q.p0
            + q.kappa * (336.96 + edge_compute(true, 0.5, task, q).1);
        assert!((b.gamma - want).abs() <= 1e-12 * want, "{} vs {want}", b.gamma);
        let s0 = single(0.0);
        let b0 = total_energy(&s0, &d).unwrap();
        assert!((b0.gamma - b0.local_sum() - b0.tx_sum()).abs() < 1e-15);
    }

    #[test]
    fn no_offload_decomposition() {
        let s = desk_scenario(11);
        let d = straight_line_init(&s);
        let b = total_energy(&s, &d).unwrap();
        let want = b.local_sum() + s.params().kappa * b.fly_sum();
        assert!((b.gamma - want).abs() <= 1e-12 * want);
        assert_eq!(b.tx_sum(), 0.0);
    }

    #[test]
    fn zero_secrecy_propagates() {
        let s = single(5e-4);
        let mut d = straight_line_init(&s);
        d.assign[0] = Some(0);
        d.rho[0] = 0.5;
        let links = {
            let mut l = LinkState::new(&s, &d.w);
            l.r_sec[0] = 0.0;
            l
        };
        assert_eq!(
            total_energy_with_links(&s, &d, &links),
            Err(Error::ZeroSecrecy { gu: 0, uav: 0, slot: 0 })
        );
    }

    proptest! {
        #[test]
        fn breakdown_is_additive(seed in any::<u64>(), picks in proptest::collection::vec((0usize..4, 0.0f64..1.0), 200)) {
            let s = desk_scenario(seed);
            let mut d = straight_line_init(&s);
            for (k, (m, r)) in picks.iter().enumerate() {
                let (i, t) = (k / 20, k % 20);
                if *m < 3 && d.load(*m, t) < s.params().m_max {
                    let idx = d.idx(i, t);
                    d.assign[idx] = Some(*m);
                    d.rho[idx] = *r;
                }
            }
            let b = total_energy(&s, &d).unwrap();
            let (gus, uavs, slots) = b.dims();
            for t in 0..slots {
                let mut sum = 0.0;
                for i in 0..gus {
                    sum += b.e_local[i * slots + t];
                    for m in 0..uavs {
                        let k = (i * uavs + m) * slots + t;
                        sum += b.e_tx[k] + s.params().kappa * b.e_edge[k];
                    }
                }
                for m in 0..uavs {
                    sum += s.params().kappa * b.e_fly[m * slots + t];
                }
                prop_assert!((sum - b.total_per_slot[t]).abs() <= 1e-12 * sum.abs());
            }
            prop_assert!(b.e_local.iter().chain(&b.e_tx).chain(&b.e_edge).chain(&b.e_fly).all(|&x| x >= 0.0));
        }

        #[test]
        fn energies_affine_in_rho(l in 1e6f64..1e7, c in 10.0f64..100.0, mu in -5.0f64..5.0, r0 in 0.0f64..0.3, r1 in 0.35f64..0.6, r2 in 0.65f64..1.0) {
            let q = p();
            let task = Task { l, c_bar: c, mu, sigma: 0.0 };
            for f in [|r: f64, t: &Task, q: &NetworkParams| local_compute(r, t, q).1,
                      |r: f64, t: &Task, q: &NetworkParams| edge_compute(true, r, t, q).1] {
                let (a, b, cc) = (f(r0, &task, &q), f(r1, &task, &q), f(r2, &task, &q));
                let slope1 = (b - a) / (r1 - r0);
                let slope2 = (cc - b) / (r2 - r1);
                prop_assert!((slope1 - slope2).abs() <= 1e-9 * slope1.abs().max(1e-30));
            }
        }
    }
}
