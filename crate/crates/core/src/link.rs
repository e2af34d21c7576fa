//! Geometry, uplink and eavesdropping rates, secrecy rate, and the
//! transmission cost of an offloaded share.

use alloc::vec::Vec;

use crate::math::{hypot, log2_1p};
use crate::scenario::{NetworkParams, Point, Scenario};

/// Distance between a ground point and an aerial point at `altitude`.
pub fn distance_3d(ground: Point, air: Point, altitude: f64) -> f64 {
    hypot(ground.dist(air), altitude)
}

/// All link quantities for one trajectory grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    gus: usize,
    uavs: usize,
    slots: usize,
    /// Indexed `(i * M + m) * T + t`.
    pub d_gu_uav: Vec<f64>,
    /// Indexed `i * T + t`.
    pub d_gu_eav: Vec<f64>,
    /// Indexed by `t`.
    pub d_eav_jam: Vec<f64>,
    pub r_up: Vec<f64>,
    pub r_eav: Vec<f64>,
    pub r_sec: Vec<f64>,
}

impl LinkState {
    /// `w` is indexed `m * T + t` as in [`crate::Decision::w`].
    pub fn new(s: &Scenario, w: &[Point]) -> Self {
        let mut ls = distances(s, w);
        let p = s.params();
        ls.r_up = ls.d_gu_uav.iter().map(|&d| uplink_rate(d, p)).collect();
        for i in 0..ls.gus {
            for t in 0..ls.slots {
                let k = i * ls.slots + t;
                ls.r_eav[k] = eavesdrop_rate(ls.d_gu_eav[k], ls.d_eav_jam[t], p);
            }
        }
        for i in 0..ls.gus {
            for m in 0..ls.uavs {
                for t in 0..ls.slots {
                    let k = ls.idx(i, m, t);
                    ls.r_sec[k] = secure_rate(ls.r_up[k], ls.r_eav[i * ls.slots + t]);
                }
            }
        }
        ls
    }

    #[inline]
    pub fn idx(&self, i: usize, m: usize, t: usize) -> usize {
        (i * self.uavs + m) * self.slots + t
    }

    pub fn sec(&self, i: usize, m: usize, t: usize) -> f64 {
        self.r_sec[self.idx(i, m, t)]
    }

    pub fn eav(&self, i: usize, t: usize) -> f64 {
        self.r_eav[i * self.slots + t]
    }
}

/// Distances only; the rate vectors are zero-filled.
pub fn distances(s: &Scenario, w: &[Point]) -> LinkState {
    let (gus, uavs, slots) = (s.num_gus(), s.num_uavs(), s.num_slots());
    assert_eq!(w.len(), uavs * slots, "trajectory grid must be M x T");
    let p = s.params();
    let mut d_gu_uav = Vec::with_capacity(gus * uavs * slots);
    for g in s.gus() {
        for m in 0..uavs {
            for t in 0..slots {
                d_gu_uav.push(distance_3d(*g, w[m * slots + t], p.h_s));
            }
        }
    }
    let mut d_gu_eav = Vec::with_capacity(gus * slots);
    for g in s.gus() {
        for e in s.eav_path() {
            d_gu_eav.push(distance_3d(*g, *e, p.h_e));
        }
    }
    let d_eav_jam = s.eav_path().iter().map(|e| distance_3d(s.jammer(), *e, p.h_e)).collect();
    let n = gus * uavs * slots;
    LinkState {
        gus,
        uavs,
        slots,
        d_gu_uav,
        d_gu_eav,
        d_eav_jam,
        r_up: alloc::vec![0.0; n],
        r_eav: alloc::vec![0.0; gus * slots],
        r_sec: alloc::vec![0.0; n],
    }
}

/// Received SNR of a GU uplink at distance `d`.
pub fn uplink_snr(d: f64, p: &NetworkParams) -> f64 {
    p.p0 * p.g0 / (d * d * p.noise_power())
}

/// `B0·log2(1 + p0·g0/(d²·n0·B0))` in bit/s.
pub fn uplink_rate(d: f64, p: &NetworkParams) -> f64 {
    p.b0 * log2_1p(uplink_snr(d, p))
}

/// SINR at the E-UAV, with the jammer as interference.
pub fn eavesdrop_sinr(d_gu_eav: f64, d_eav_jam: f64, p: &NetworkParams) -> f64 {
    let signal = p.p0 * p.g0 / (d_gu_eav * d_gu_eav);
    let jam = p.p_jam * p.g0 / (d_eav_jam * d_eav_jam);
    signal / (jam + p.noise_power())
}

pub fn eavesdrop_rate(d_gu_eav: f64, d_eav_jam: f64, p: &NetworkParams) -> f64 {
    p.b0 * log2_1p(eavesdrop_sinr(d_gu_eav, d_eav_jam, p))
}

pub fn secure_rate(r_up: f64, r_eav: f64) -> f64 {
    (r_up - r_eav).max(0.0)
}

/// An assigned share would travel over a link with no secrecy capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroSecrecy;

/// Transmission latency (s) and energy (J) of sending `rho·L` bits.
pub fn tx_latency_energy(lambda: bool, rho: f64, l: f64, r_sec: f64, p0: f64) -> Result<(f64, f64), ZeroSecrecy> {
    if !lambda || rho == 0.0 {
        return Ok((0.0, 0.0));
    }
    if !(r_sec > 0.0) {
        return Err(ZeroSecrecy);
    }
    let lat = rho * l / r_sec;
    Ok((lat, p0 * lat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::desk_scenario;
    use proptest::prelude::*;

    fn p() -> NetworkParams {
        NetworkParams::default()
    }

    #[test]
    fn vertical_distance() {
        assert_eq!(distance_3d(Point::new(3.0, 4.0), Point::new(3.0, 4.0), 100.0), 100.0);
    }

    #[test]
    fn slanted_distances() {
        let d = distance_3d(Point::new(500.0, 500.0), Point::new(0.0, 0.0), 100.0);
        assert!((d - 510000f64.sqrt()).abs() < 1e-9);
        assert!((d - 714.143).abs() < 1e-3);
    }

    #[test]
    fn uplink_at_100m() {
        let snr = uplink_snr(100.0, &p());
        assert!((snr / 5.024e4 - 1.0).abs() < 1e-3, "{snr}");
        let r = uplink_rate(100.0, &p());
        assert!((r / 1.5616e8 - 1.0).abs() < 1e-4, "{r}");
    }

    #[test]
    fn uplink_inverse_square() {
        let a = uplink_snr(123.0, &p());
        let b = uplink_snr(246.0, &p());
        assert!((a / b - 4.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let r = uplink_rate(100.0 * 1.5f64.powi(k), &p());
            assert!(r < prev && r >= 0.0);
            prev = r;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn eavesdrop_reference() {
        let d = 510000f64.sqrt();
        let sinr = eavesdrop_sinr(d, d, &p());
        assert!((sinr - 0.0999).abs() < 1e-4, "{sinr}");
        let r = eavesdrop_rate(d, d, &p());
        assert!((r / 1.374e6 - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn eavesdrop_without_jammer_is_plain_shannon() {
        let q = NetworkParams { p_jam: 0.0, ..p() };
        assert!((eavesdrop_rate(321.0, 777.0, &q) - uplink_rate(321.0, &q)).abs() < 1e-6);
        let q = NetworkParams { p_jam: 1e30, ..p() };
        assert!(eavesdrop_rate(321.0, 777.0, &q) < 1e-10);
    }

    #[test]
    fn secrecy_clamp() {
        let r = secure_rate(1.5616e8, 1.374e6);
        assert!((r / 1.5479e8 - 1.0).abs() < 1e-4);
        assert_eq!(secure_rate(5.0, 5.0), 0.0);
        assert_eq!(secure_rate(1.0, 5.0), 0.0);
    }

    #[test]
    fn transmission_cost() {
        let (t, e) = tx_latency_energy(true, 0.5, 1e6, 1.5479e8, 2.0).unwrap();
        assert!((t - 3.230e-3).abs() < 1e-6 && (e - 6.460e-3).abs() < 2e-6);
        assert_eq!(tx_latency_energy(false, 0.5, 1e6, 1e8, 2.0), Ok((0.0, 0.0)));
        assert_eq!(tx_latency_energy(true, 0.0, 1e6, 0.0, 2.0), Ok((0.0, 0.0)));
        assert_eq!(tx_latency_energy(true, 0.1, 1e6, 0.0, 2.0), Err(ZeroSecrecy));
    }

    #[test]
    fn link_state_consistent() {
        let s = desk_scenario(3);
        let d = crate::scenario::straight_line_init(&s);
        let ls = LinkState::new(&s, &d.w);
        let lo = s.params().h_s.max(s.params().h_e);
        assert!(ls.d_gu_uav.iter().chain(&ls.d_gu_eav).chain(&ls.d_eav_jam).all(|&x| x >= lo - 1e-9));
        for i in 0..s.num_gus() {
            for m in 0..s.num_uavs() {
                for t in 0..s.num_slots() {
                    let k = ls.idx(i, m, t);
                    assert_eq!(ls.r_sec[k], secure_rate(ls.r_up[k], ls.eav(i, t)));
                }
            }
        }
    }

    #[test]
    fn uplink_matches_high_precision_reference() {
        // (d, rate) pairs produced offline with 50-digit arithmetic
        let data = include_str!("../tests/data/uplink_reference.txt");
        let mut n = 0;
        for line in data.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let mut it = line.split_whitespace();
            let d: f64 = it.next().unwrap().parse().unwrap();
            let want: f64 = it.next().unwrap().parse().unwrap();
            let got = uplink_rate(d, &p());
            assert!(((got - want) / want).abs() <= 1e-12, "d={d}: {got} vs {want}");
            n += 1;
        }
        assert_eq!(n, 1000);
    }

    proptest! {
        #[test]
        fn secrecy_monotone(d1 in 100.0f64..2000.0, dd in 0.0f64..500.0, j1 in 100.0f64..2000.0, dj in 0.0f64..500.0, de in 100.0f64..2000.0, dde in 0.0f64..500.0) {
            let p = p();
            let sec = |du: f64, de: f64, dj: f64| secure_rate(uplink_rate(du, &p), eavesdrop_rate(de, dj, &p));
            let base = sec(d1, de, j1);
            prop_assert!(sec(d1 + dd, de, j1) <= base);
            // a farther jammer leaves the eavesdropper a cleaner channel
            prop_assert!(sec(d1, de, j1 + dj) <= base);
            prop_assert!(sec(d1, de + dde, j1) >= base);
            prop_assert!(base >= 0.0);
        }
    }
}
