//! World description: geometry, task streams, physical constants, and the
//! decision variables that the optimizer fills in.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cvar::CvarAux;
use crate::energy::{hover_power, propulsion_power};
use crate::math::{hypot, powf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        hypot(self.x, self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn lerp(self, other: Point, frac: f64) -> Point {
        self + (other - self) * frac
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// `dBm/Hz` to `W/Hz`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    powf(10.0, dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * libm::log10(w * 1e3)
}

pub fn db_to_linear(db: f64) -> f64 {
    powf(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Physical and algorithmic constants. `Default` gives the reference
/// configuration (3 S-UAVs over a 1 km square, 2 s slots).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// Slot duration (s).
    pub tau: f64,
    /// Required probability that a deadline holds.
    pub alpha: f64,
    /// Weight on UAV-side energy.
    pub kappa: f64,
    /// S-UAV cruise speed (m/s).
    pub v0: f64,
    pub h_s: f64,
    pub h_e: f64,
    /// Connections per S-UAV per slot.
    pub m_max: usize,
    /// GU transmit power (W).
    pub p0: f64,
    /// Jammer power (W).
    pub p_jam: f64,
    /// Noise spectral density (W/Hz).
    pub n0: f64,
    /// Bandwidth (Hz).
    pub b0: f64,
    /// Channel gain at 1 m (linear).
    pub g0: f64,
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
    /// BCD stopping threshold on |ΔΓ| (J).
    pub zeta: f64,
    /// SCA stopping threshold on the surrogate objective (J).
    pub sca_tol: f64,
    /// Conic solver tolerance on gap and residuals.
    pub solver_tol: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            tau: 2.0,
            alpha: 0.95,
            kappa: 5e-4,
            v0: 20.0,
            h_s: 100.0,
            h_e: 100.0,
            m_max: 4,
            p0: 2.0,
            p_jam: 20.0,
            n0: dbm_to_watts(-174.0),
            b0: 10e6,
            g0: db_to_linear(-50.0),
            f_g: 1e8,
            f_u: 1e9,
            eps_g: 1e-28,
            eps_u: 1e-28,
            p1: 79.85,
            p2: 88.63,
            v_bla: 120.0,
            v_rot: 4.03,
            drag_g: 0.6,
            rho_air: 1.225,
            s0: 0.05,
            a0: 0.503,
            x_min: 0.0,
            x_max: 1000.0,
            y_min: 0.0,
            y_max: 1000.0,
            zeta: 1e-2,
            sca_tol: 1e-4,
            solver_tol: 1e-8,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be strictly positive and finite, got {v}")))
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("alpha must lie in (0,1)"));
        }
        if self.m_max < 1 {
            return Err(Error::validation("M_max must be at least 1"));
        }
        for (name, v) in [
            ("tau", self.tau),
            ("v0", self.v0),
            ("h_s", self.h_s),
            ("h_e", self.h_e),
            ("p0", self.p0),
            ("p_jam", self.p_jam),
            ("n0", self.n0),
            ("B0", self.b0),
            ("g0", self.g0),
            ("f_g", self.f_g),
            ("f_u", self.f_u),
            ("eps_g", self.eps_g),
            ("eps_u", self.eps_u),
            ("P1", self.p1),
            ("P2", self.p2),
            ("v_bla", self.v_bla),
            ("v_rot", self.v_rot),
            ("drag_g", self.drag_g),
            ("rho_air", self.rho_air),
            ("s0", self.s0),
            ("a0", self.a0),
            ("sca_tol", self.sca_tol),
            ("solver_tol", self.solver_tol),
        ] {
            positive(name, v)?;
        }
        // an infinite tolerance stops the alternation after one round
        if !(self.zeta > 0.0) {
            return Err(Error::validation("zeta must be strictly positive"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::validation("kappa must be nonnegative and finite"));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::validation("X_min must be below X_max"));
        }
        if !(self.y_min < self.y_max) {
            return Err(Error::validation("Y_min must be below Y_max"));
        }
        // flight energy per slot is convex in the step length only if cruising
        // costs more than hovering
        if propulsion_power(self.v0, self) < hover_power(self) {
            return Err(Error::validation("propulsion power at v0 must not be below hover power"));
        }
        Ok(())
    }

    /// Longest horizontal move within one slot (m).
    pub fn step_limit(&self) -> f64 {
        self.v0 * self.tau
    }

    /// Receiver noise power `n0·B0` (W).
    pub fn noise_power(&self) -> f64 {
        self.n0 * self.b0
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }
}

/// One GU's task in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    /// Data length (bits).
    pub l: f64,
    /// Estimated complexity (cycles/bit).
    pub c_bar: f64,
    /// Mean of the complexity error (cycles/bit).
    pub mu: f64,
    /// Standard deviation of the complexity error (cycles/bit).
    pub sigma: f64,
}

impl Task {
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::validation("task length L must be positive"));
        }
        if !(self.c_bar > 0.0 && self.c_bar.is_finite()) {
            return Err(Error::validation("task complexity c_bar must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation("task sigma must be nonnegative"));
        }
        if !(self.c_bar + self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::validation("c_bar + mu must be positive"));
        }
        Ok(())
    }
}

/// Ranges for drawing task streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskGenerator {
    pub l_min: f64,
    pub l_max: f64,
    pub c_bar_min: f64,
    pub c_bar_max: f64,
    pub mu: f64,
    /// sigma = sigma_ratio · c_bar
    pub sigma_ratio: f64,
}

impl Default for TaskGenerator {
    fn default() -> Self {
        TaskGenerator { l_min: 1e6, l_max: 1e7, c_bar_min: 10.0, c_bar_max: 100.0, mu: 0.0, sigma_ratio: 0.01 }
    }
}

/// Tasks on the I×T grid, row-major by GU.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    gus: usize,
    slots: usize,
    tasks: Vec<Task>,
}

impl TaskSpec {
    pub fn new(gus: usize, slots: usize, tasks: Vec<Task>) -> Result<Self> {
        if tasks.len() != gus * slots {
            return Err(Error::validation(format!(
                "tasks must cover {gus}x{slots} GU-slot pairs, got {}",
                tasks.len()
            )));
        }
        TaskSpec::check(&tasks, slots)?;
        Ok(TaskSpec { gus, slots, tasks })
    }

    fn check(tasks: &[Task], slots: usize) -> Result<()> {
        for (k, t) in tasks.iter().enumerate() {
            t.validate()
                .map_err(|e| Error::validation(format!("task (GU {}, slot {}): {e}", k / slots, k % slots)))?;
        }
        Ok(())
    }

    pub fn uniform(gus: usize, slots: usize, task: Task) -> Result<Self> {
        TaskSpec::new(gus, slots, vec![task; gus * slots])
    }

    /// Draws L and c_bar uniformly from the generator ranges.
    pub fn generate(gus: usize, slots: usize, g: &TaskGenerator, seed: u64) -> Result<Self> {
        if !(g.l_min > 0.0 && g.l_min <= g.l_max && g.c_bar_min > 0.0 && g.c_bar_min <= g.c_bar_max) {
            return Err(Error::validation("task generator ranges must be positive and ordered"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tasks = Vec::with_capacity(gus * slots);
        for _ in 0..gus * slots {
            let l = uniform(&mut rng, g.l_min, g.l_max);
            let c_bar = uniform(&mut rng, g.c_bar_min, g.c_bar_max);
            tasks.push(Task { l, c_bar, mu: g.mu, sigma: g.sigma_ratio * c_bar });
        }
        TaskSpec::new(gus, slots, tasks)
    }

    pub fn gus(&self) -> usize {
        self.gus
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn at(&self, i: usize, t: usize) -> &Task {
        &self.tasks[i * self.slots + t]
    }

    pub fn as_slice(&self) -> &[Task] {
        &self.tasks
    }

    /// Applies `f` to every task and revalidates.
    pub fn map(&self, f: impl Fn(&Task) -> Task) -> Result<Self> {
        TaskSpec::new(self.gus, self.slots, self.tasks.iter().map(f).collect())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub ini: Point,
    pub fin: Point,
}

/// Mutable blueprint of a [`Scenario`]; [`ScenarioParts::build`] validates it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParts {
    pub gus: Vec<Point>,
    pub jammer: Point,
    pub eav_path: Vec<Point>,
    pub uav_endpoints: Vec<Endpoints>,
    pub tasks: TaskSpec,
    pub params: NetworkParams,
}

impl ScenarioParts {
    pub fn build(self) -> Result<Scenario> {
        Scenario::new(self)
    }
}

/// A validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    parts: ScenarioParts,
}

impl Scenario {
    pub fn new(parts: ScenarioParts) -> Result<Self> {
        let p = &parts.params;
        p.validate()?;
        let (gus, uavs, slots) = (parts.gus.len(), parts.uav_endpoints.len(), parts.eav_path.len());
        if gus == 0 {
            return Err(Error::validation("at least one GU is required"));
        }
        if uavs == 0 {
            return Err(Error::validation("at least one S-UAV is required"));
        }
        if slots == 0 {
            return Err(Error::validation("at least one time slot is required"));
        }
        if parts.tasks.gus() != gus || parts.tasks.slots() != slots {
            return Err(Error::validation(format!(
                "tasks are indexed {}x{} but the scenario has {gus} GUs and {slots} slots (eav_path length)",
                parts.tasks.gus(),
                parts.tasks.slots()
            )));
        }
        TaskSpec::check(&parts.tasks.tasks, slots)?;
        let outside = |what: &str, q: Point| {
            Error::validation(format!("{what} at ({}, {}) lies outside the area bounds", q.x, q.y))
        };
        for (i, g) in parts.gus.iter().enumerate() {
            if !p.contains(*g) {
                return Err(outside(&format!("GU {i}"), *g));
            }
        }
        if !p.contains(parts.jammer) {
            return Err(outside("jammer", parts.jammer));
        }
        for (t, e) in parts.eav_path.iter().enumerate() {
            if !p.contains(*e) {
                return Err(outside(&format!("E-UAV at slot {t}"), *e));
            }
        }
        let reach = (slots as f64 - 1.0) * p.step_limit();
        for (m, ep) in parts.uav_endpoints.iter().enumerate() {
            if !p.contains(ep.ini) {
                return Err(outside(&format!("S-UAV {m} initial point"), ep.ini));
            }
            if !p.contains(ep.fin) {
                return Err(outside(&format!("S-UAV {m} final point"), ep.fin));
            }
            let d = ep.ini.dist(ep.fin);
            if d > reach {
                return Err(Error::validation(format!(
                    "S-UAV {m} endpoints are unreachable: distance {d} m exceeds (T-1)·v0·tau = {reach} m"
                )));
            }
        }
        Ok(Scenario { parts })
    }

    pub fn parts(&self) -> &ScenarioParts {
        &self.parts
    }

    pub fn into_parts(self) -> ScenarioParts {
        self.parts
    }

    /// Copies the scenario, changes the constants, and revalidates.
    pub fn with_params(&self, f: impl FnOnce(&mut NetworkParams)) -> Result<Scenario> {
        let mut parts = self.parts.clone();
        f(&mut parts.params);
        Scenario::new(parts)
    }

    pub fn params(&self) -> &NetworkParams {
        &self.parts.params
    }

    pub fn gus(&self) -> &[Point] {
        &self.parts.gus
    }

    pub fn jammer(&self) -> Point {
        self.parts.jammer
    }

    pub fn eav_path(&self) -> &[Point] {
        &self.parts.eav_path
    }

    pub fn uav_endpoints(&self) -> &[Endpoints] {
        &self.parts.uav_endpoints
    }

    pub fn tasks(&self) -> &TaskSpec {
        &self.parts.tasks
    }

    pub fn task(&self, i: usize, t: usize) -> &Task {
        self.parts.tasks.at(i, t)
    }

    pub fn num_gus(&self) -> usize {
        self.parts.gus.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.parts.uav_endpoints.len()
    }

    pub fn num_slots(&self) -> usize {
        self.parts.eav_path.len()
    }
}

/// Stationary E-UAV path used when a configuration gives none: the point
/// reflection of the jammer through the area centre, for every slot.
pub fn default_eav_path(params: &NetworkParams, jammer: Point, slots: usize) -> Vec<Point> {
    let c = params.center();
    let p = Point::new(2.0 * c.x - jammer.x, 2.0 * c.y - jammer.y);
    let p = Point::new(p.x.clamp(params.x_min, params.x_max), p.y.clamp(params.y_min, params.y_max));
    vec![p; slots]
}

/// Evenly spaced points from `a` to `b` inclusive.
pub fn linear_path(a: Point, b: Point, slots: usize) -> Vec<Point> {
    (0..slots)
        .map(|t| if slots == 1 { a } else { a.lerp(b, t as f64 / (slots - 1) as f64) })
        .collect()
}

/// The reference desk instance: 10 GUs drawn uniformly over the area, three
/// S-UAVs on parallel 700 m lanes, jammer at the centre, an E-UAV crossing
/// the top of the area, and tasks from [`TaskGenerator::default`].
pub fn desk_scenario(seed: u64) -> Scenario {
    desk_scenario_with(seed, NetworkParams::default(), 10, 20)
}

pub fn desk_scenario_with(seed: u64, params: NetworkParams, gus: usize, slots: usize) -> Scenario {
    try_desk_scenario(seed, params, gus, slots).expect("desk scenario is valid by construction")
}

/// [`desk_scenario_with`] for parameters that may leave the lanes
/// unreachable or be invalid.
pub fn try_desk_scenario(seed: u64, params: NetworkParams, gus: usize, slots: usize) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0 is used by the task generator
    rng.set_stream(1);
    let (w, h) = (params.x_max - params.x_min, params.y_max - params.y_min);
    let at = |fx: f64, fy: f64| Point::new(params.x_min + fx * w, params.y_min + fy * h);
    let gu_pos = (0..gus)
        .map(|_| at(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let uav_endpoints = [0.15, 0.5, 0.85]
        .iter()
        .map(|&fy| Endpoints { ini: at(0.15, fy), fin: at(0.85, fy) })
        .collect();
    let tasks = TaskSpec::generate(gus, slots, &TaskGenerator::default(), seed).expect("default generator is valid");
    ScenarioParts {
        gus: gu_pos,
        jammer: at(0.5, 0.5),
        eav_path: linear_path(at(0.1, 0.9), at(0.9, 0.9), slots),
        uav_endpoints,
        tasks,
        params,
    }
    .build()
}

/// The optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    gus: usize,
    uavs: usize,
    slots: usize,
    /// S-UAV positions, indexed `m * T + t`.
    pub w: Vec<Point>,
    /// Serving S-UAV per (i, t), indexed `i * T + t`; `None` means unassigned.
    pub assign: Vec<Option<usize>>,
    /// Offload ratio per (i, t).
    pub rho: Vec<f64>,
    /// CVaR auxiliaries of the local deadline per (i, t).
    pub aux_local: Vec<CvarAux>,
    /// CVaR auxiliaries of the edge deadline per (i, t).
    pub aux_edge: Vec<CvarAux>,
}

impl Decision {
    pub fn zeroed(gus: usize, uavs: usize, slots: usize) -> Self {
        Decision {
            gus,
            uavs,
            slots,
            w: vec![Point::default(); uavs * slots],
            assign: vec![None; gus * slots],
            rho: vec![0.0; gus * slots],
            aux_local: vec![CvarAux::default(); gus * slots],
            aux_edge: vec![CvarAux::default(); gus * slots],
        }
    }

    pub fn gus(&self) -> usize {
        self.gus
    }

    pub fn uavs(&self) -> usize {
        self.uavs
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    #[inline]
    pub fn idx(&self, i: usize, t: usize) -> usize {
        i * self.slots + t
    }

    pub fn pos(&self, m: usize, t: usize) -> Point {
        self.w[m * self.slots + t]
    }

    pub fn trajectory(&self, m: usize) -> &[Point] {
        &self.w[m * self.slots..(m + 1) * self.slots]
    }

    pub fn serving(&self, i: usize, t: usize) -> Option<usize> {
        self.assign[i * self.slots + t]
    }

    /// Binary assignment indicator λ[i, m, t].
    pub fn lambda(&self, i: usize, m: usize, t: usize) -> bool {
        self.serving(i, t) == Some(m)
    }

    pub fn ratio(&self, i: usize, t: usize) -> f64 {
        self.rho[i * self.slots + t]
    }

    /// Number of GUs served by S-UAV `m` in slot `t`.
    pub fn load(&self, m: usize, t: usize) -> usize {
        (0..self.gus).filter(|&i| self.lambda(i, m, t)).count()
    }

    /// Total bits sent to the edge.
    pub fn offloaded_bits(&self, s: &Scenario) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.gus {
            for t in 0..self.slots {
                acc += self.ratio(i, t) * s.task(i, t).l;
            }
        }
        acc
    }

    /// Checks the structural invariants against the scenario. `tol` (m)
    /// absorbs solver round-off on the speed and bound constraints.
    pub fn check(&self, s: &Scenario, tol: f64) -> Result<()> {
        let (gus, uavs, slots) = (s.num_gus(), s.num_uavs(), s.num_slots());
        if (self.gus, self.uavs, self.slots) != (gus, uavs, slots)
            || self.w.len() != uavs * slots
            || self.assign.len() != gus * slots
            || self.rho.len() != gus * slots
            || self.aux_local.len() != gus * slots
            || self.aux_edge.len() != gus * slots
        {
            return Err(Error::validation("decision dimensions do not match the scenario"));
        }
        let p = s.params();
        for t in 0..slots {
            for i in 0..gus {
                if let Some(m) = self.serving(i, t) {
                    if m >= uavs {
                        return Err(Error::validation(format!("GU {i} slot {t}: S-UAV index {m} out of range")));
                    }
                }
                let r = self.ratio(i, t);
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::validation(format!("GU {i} slot {t}: offload ratio {r} outside [0,1]")));
                }
                if r > 0.0 && self.serving(i, t).is_none() {
                    return Err(Error::validation(format!(
                        "GU {i} slot {t}: offload ratio {r} without an assigned S-UAV"
                    )));
                }
            }
            for m in 0..uavs {
                let load = self.load(m, t);
                if load > p.m_max {
                    return Err(Error::validation(format!(
                        "S-UAV {m} slot {t}: {load} connections exceed M_max = {}",
                        p.m_max
                    )));
                }
            }
        }
        let lim = p.step_limit() * (1.0 + 1e-9) + tol;
        for (m, ep) in s.uav_endpoints().iter().enumerate() {
            let tr = self.trajectory(m);
            if tr[0].dist(ep.ini) > tol || tr[slots - 1].dist(ep.fin) > tol {
                return Err(Error::validation(format!("S-UAV {m}: trajectory does not meet its endpoints")));
            }
            for (t, q) in tr.iter().enumerate() {
                if q.x < p.x_min - tol || q.x > p.x_max + tol || q.y < p.y_min - tol || q.y > p.y_max + tol {
                    return Err(Error::validation(format!("S-UAV {m} slot {t}: position outside the area")));
                }
                if t > 0 {
                    let d = q.dist(tr[t - 1]);
                    if d > lim {
                        return Err(Error::SpeedViolation { uav: m, slot: t, distance: d, limit: p.step_limit() });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Straight-line trajectories, no offloading, zeroed auxiliaries.
pub fn straight_line_init(s: &Scenario) -> Decision {
    let mut d = Decision::zeroed(s.num_gus(), s.num_uavs(), s.num_slots());
    let slots = s.num_slots();
    for (m, ep) in s.uav_endpoints().iter().enumerate() {
        let path = linear_path(ep.ini, ep.fin, slots);
        d.w[m * slots..(m + 1) * slots].copy_from_slice(&path);
    }
    d
}
