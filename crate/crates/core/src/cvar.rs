//! Worst-case CVaR reformulation of the latency chance constraints.
//!
//! For a loss `Θξ + θ⁰` whose random factor ξ has known mean μ and standard
//! deviation σ, the worst-case CVaR at level α over all distributions with
//! those moments is the optimal value of
//!
//! ```text
//! minimize    β + (e + s)/(1 − α)
//! subject to  e − θ⁰ + β + q − Θμ − z ≥ 0,   e ≥ 0,   z > 0,
//!             ‖(q, Θσ, z − s)‖ ≤ z + s
//! ```
//!
//! and it equals `θ⁰ + Θμ + |Θ|σ·√(α/(1−α))`. Requiring the objective to be
//! nonpositive enforces `P(Θξ + θ⁰ ≤ 0) ≥ α` for every such distribution.
//! Strict inequalities are closed with [`MARGIN`] and [`Z_FLOOR`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conic::{LinExpr, ProgramBuilder};
use crate::link::ZeroSecrecy;
use crate::math::sqrt;
use crate::sampling::MomentSampler;
use crate::scenario::{NetworkParams, Task};

pub const MARGIN: f64 = 1e-9;
pub const Z_FLOOR: f64 = 1e-9;

/// Loss `Θξ + θ⁰` in seconds, with ξ the complexity error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLoss {
    pub theta0: f64,
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl LinearLoss {
    pub fn eval(&self, xi: f64) -> f64 {
        self.theta * xi + self.theta0
    }

    pub fn to_affine(&self) -> AffineLoss {
        AffineLoss {
            theta0: LinExpr::constant(self.theta0),
            theta: LinExpr::constant(self.theta),
            mu: self.mu,
            sigma: self.sigma,
        }
    }
}

/// Local deadline loss: `(1−ρ)(c̄ + ξ)L/f_g − τ`.
pub fn loss_local(rho: f64, task: &Task, p: &NetworkParams) -> LinearLoss {
    let theta = (1.0 - rho) * task.l / p.f_g;
    LinearLoss { theta0: theta * task.c_bar - p.tau, theta, mu: task.mu, sigma: task.sigma }
}

/// Edge deadline loss: transmission plus `ρ(c̄ + ξ)L/f_u`, minus `τ`.
pub fn loss_edge(
    lambda_row: &[bool],
    rho: f64,
    task: &Task,
    r_sec: &[f64],
    p: &NetworkParams,
) -> Result<LinearLoss, ZeroSecrecy> {
    let mut theta = 0.0;
    let mut theta0 = -p.tau;
    for (&lam, &r) in lambda_row.iter().zip(r_sec) {
        if !lam || rho == 0.0 {
            continue;
        }
        if !(r > 0.0) {
            return Err(ZeroSecrecy);
        }
        let k = rho * task.l / p.f_u;
        theta += k;
        theta0 += k * task.c_bar + rho * task.l / r;
    }
    Ok(LinearLoss { theta0, theta, mu: task.mu, sigma: task.sigma })
}

/// `√(α/(1−α))`
pub fn safety_multiplier(alpha: f64) -> f64 {
    sqrt(alpha / (1.0 - alpha))
}

pub fn worst_case_cvar_closed_form(loss: &LinearLoss, alpha: f64) -> f64 {
    loss.theta0 + loss.theta * loss.mu + loss.theta.abs() * loss.sigma * safety_multiplier(alpha)
}

/// Values of the auxiliaries of one block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CvarAux {
    pub beta: f64,
    pub e: f64,
    pub q: f64,
    pub z: f64,
    pub s: f64,
}

impl CvarAux {
    pub fn header(&self, alpha: f64) -> f64 {
        self.beta + (self.e + self.s) / (1.0 - alpha)
    }

    /// Largest admissible `θ⁰ + Θμ` under these auxiliaries (before the
    /// margin): the linear row reads `θ⁰ + Θμ ≤ budget − MARGIN`.
    pub fn budget(&self) -> f64 {
        self.e + self.beta + self.q - self.z
    }

    /// The auxiliaries that satisfy the header, sign and cone rows for a
    /// dispersion `|Θ|σ = v` while leaving the largest budget, which for
    /// `v > 0` is `−v·√(α/(1−α))`. The header row holds with equality.
    pub fn loosest(v: f64, alpha: f64) -> CvarAux {
        let v = v.abs();
        let a = -v * (2.0 * alpha - 1.0) / (2.0 * sqrt(alpha * (1.0 - alpha)));
        let z = sqrt(a * a + v * v).max(Z_FLOOR);
        let q = a + z;
        let s = (q * q + v * v) / (4.0 * z);
        CvarAux { beta: -s / (1.0 - alpha), e: 0.0, q, z, s }
    }

    /// Row violations of the block at this point; all entries are `≤ 0`
    /// when feasible.
    pub fn violations(&self, loss: &LinearLoss, alpha: f64) -> [f64; 5] {
        cone_rows(self, loss.theta0, loss.theta, loss.mu, loss.sigma, alpha)
    }
}

fn cone_rows(a: &CvarAux, theta0: f64, theta: f64, mu: f64, sigma: f64, alpha: f64) -> [f64; 5] {
    let ts = theta * sigma;
    let lhs = sqrt(a.q * a.q + ts * ts + (a.z - a.s) * (a.z - a.s));
    [
        a.header(alpha),
        MARGIN - (a.e - theta0 + a.beta + a.q - theta * mu - a.z),
        -a.e,
        Z_FLOOR - a.z,
        lhs - (a.z + a.s),
    ]
}

/// Loss whose coefficients are affine in decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLoss {
    pub theta0: LinExpr,
    pub theta: LinExpr,
    pub mu: f64,
    pub sigma: f64,
}

/// How the block's value `β + (e+s)/(1−α)` enters a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Header {
    /// `β + (e+s)/(1−α) ≤ 0`
    Constraint,
    /// Added to the objective, no header row.
    Objective,
}

/// Variable indices of an embedded block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvarVars {
    pub beta: usize,
    pub e: usize,
    pub q: usize,
    pub z: usize,
    pub s: usize,
}

impl CvarVars {
    pub fn read(&self, x: &[f64]) -> CvarAux {
        CvarAux { beta: x[self.beta], e: x[self.e], q: x[self.q], z: x[self.z], s: x[self.s] }
    }

    /// `β + (e+s)/(1−α)` as an expression.
    pub fn header_expr(&self, alpha: f64) -> LinExpr {
        let k = 1.0 / (1.0 - alpha);
        LinExpr::var(self.beta).add(self.e, k).add(self.s, k)
    }
}

/// One chance constraint in its conic form, ready to embed.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarBlock {
    pub loss: AffineLoss,
    pub alpha: f64,
    pub margin: f64,
    pub z_floor: f64,
}

pub fn build_cvar_block(loss: AffineLoss, alpha: f64) -> CvarBlock {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    CvarBlock { loss, alpha, margin: MARGIN, z_floor: Z_FLOOR }
}

impl CvarBlock {
    /// Adds the auxiliaries and rows to `b`.
    pub fn embed(&self, b: &mut ProgramBuilder, header: Header) -> CvarVars {
        let v = CvarVars { beta: b.add_var(), e: b.add_var(), q: b.add_var(), z: b.add_var(), s: b.add_var() };
        let hdr = v.header_expr(self.alpha);
        match header {
            Header::Constraint => b.nonneg(-hdr),
            Header::Objective => b.minimize(&hdr),
        }
        let loss = &self.loss;
        let lin = LinExpr::var(v.e).add(v.beta, 1.0).add(v.q, 1.0).add(v.z, -1.0) - loss.theta0.clone()
            - loss.theta.clone() * loss.mu
            - self.margin;
        b.nonneg(lin);
        b.nonneg(LinExpr::var(v.e));
        b.nonneg(LinExpr::var(v.z) - self.z_floor);
        b.soc(
            LinExpr::var(v.z).add(v.s, 1.0),
            alloc::vec![LinExpr::var(v.q), loss.theta.clone() * loss.sigma, LinExpr::var(v.z).add(v.s, -1.0)],
        );
        v
    }

    /// Row violations at external point `x` and auxiliaries `aux`.
    pub fn violations(&self, x: &[f64], aux: &CvarAux) -> [f64; 5] {
        let th0 = self.loss.theta0.eval(x);
        let th = self.loss.theta.eval(x);
        cone_rows(aux, th0, th, self.loss.mu, self.loss.sigma, self.alpha)
    }
}

/// Fraction of `n` draws with `Θξ + θ⁰ > 0`.
pub fn monte_carlo_violation(loss: &LinearLoss, dist: &MomentSampler, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0usize;
    for _ in 0..n {
        if loss.eval(dist.sample(&mut rng)) > 0.0 {
            bad += 1;
        }
    }
    bad as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, Status};
    use crate::sampling::Family;
    use proptest::prelude::*;

    /// Worst-case CVaR by grid search over two-point distributions with the
    /// given moments: mass `p` at `μ + σ√((1−p)/p)`, the rest below.
    fn two_point_grid(loss: &LinearLoss, alpha: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let n = 200_000;
        let tail = 1.0 - alpha;
        for k in 1..n {
            let p = k as f64 / n as f64;
            let hi = loss.mu + loss.sigma * ((1.0 - p) / p).sqrt();
            let lo = loss.mu - loss.sigma * (p / (1.0 - p)).sqrt();
            let (a, b) = (loss.eval(hi), loss.eval(lo));
            let (top, ptop, bot) = if a >= b { (a, p, b) } else { (b, 1.0 - p, a) };
            // CVaR: mean of the worst (1−α) probability mass
            let cvar = if ptop >= tail { top } else { (ptop * top + (tail - ptop) * bot) / tail };
            best = best.max(cvar);
        }
        best
    }

    fn solve_block(loss: &LinearLoss, alpha: f64) -> f64 {
        let mut b = ProgramBuilder::new();
        let blk = CvarBlock { margin: 0.0, ..build_cvar_block(loss.to_affine(), alpha) };
        blk.embed(&mut b, Header::Objective);
        let sol = solve(&b.build(), 1e-8, 200).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{loss:?} {alpha}");
        sol.pcost
    }

    #[test]
    fn closed_form_values() {
        let l = LinearLoss { theta0: 0.0, theta: 1.0, mu: 0.0, sigma: 1.0 };
        assert!((worst_case_cvar_closed_form(&l, 0.95) - 19f64.sqrt()).abs() < 1e-12);
        let l = LinearLoss { theta0: 0.7, theta: 0.0, mu: 3.0, sigma: 2.0 };
        assert_eq!(worst_case_cvar_closed_form(&l, 0.95), 0.7);
        let l = LinearLoss { theta0: 0.3, theta: -2.0, mu: 0.5, sigma: 0.25 };
        assert!((worst_case_cvar_closed_form(&l, 0.5) - (0.3 - 1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_two_point_search() {
        for (th0, th, mu, sig, a) in [
            (0.0, 1.0, 0.0, 1.0, 0.95),
            (-1.0, 1.0, 0.0, 0.1, 0.95),
            (0.5, -2.0, 0.3, 0.7, 0.8),
            (-3.0, 4.0, -1.0, 1.5, 0.99),
            (2.0, 0.5, 1.0, 2.0, 0.9),
        ] {
            let l = LinearLoss { theta0: th0, theta: th, mu, sigma: sig };
            let grid = two_point_grid(&l, a);
            let cf = worst_case_cvar_closed_form(&l, a);
            assert!((grid - cf).abs() <= 1e-4, "{l:?} alpha {a}: grid {grid} closed {cf}");
        }
    }

    #[test]
    fn block_examples() {
        let l = LinearLoss { theta0: -1.0, theta: 1.0, mu: 0.0, sigma: 0.1 };
        let wc = worst_case_cvar_closed_form(&l, 0.95);
        assert!((wc + 0.56411).abs() < 1e-5);
        assert!((solve_block(&l, 0.95) - wc).abs() < 1e-6);
        let l = LinearLoss { theta0: -0.4, ..l };
        assert!((worst_case_cvar_closed_form(&l, 0.95) - 0.03589).abs() < 1e-5);
        // infeasible as a constraint
        let mut b = ProgramBuilder::new();
        build_cvar_block(l.to_affine(), 0.95).embed(&mut b, Header::Constraint);
        assert_eq!(solve(&b.build(), 1e-8, 200).unwrap().status, Status::PrimalInfeasible);
    }

    #[test]
    fn deterministic_limit() {
        for th0 in [-0.5, -1e-3, 1e-3, 0.5] {
            let l = LinearLoss { theta0: th0, theta: 2.0, mu: 0.1, sigma: 0.0 };
            let mut b = ProgramBuilder::new();
            build_cvar_block(l.to_affine(), 0.9).embed(&mut b, Header::Constraint);
            let st = solve(&b.build(), 1e-8, 200).unwrap().status;
            let want = if th0 + 0.2 <= 0.0 { Status::Optimal } else { Status::PrimalInfeasible };
            assert_eq!(st, want, "theta0 {th0}");
        }
    }

    #[test]
    fn loosest_aux_is_feasible_and_tight() {
        for &(v, a) in &[(0.0, 0.95), (0.01, 0.95), (1.0, 0.8), (3.0, 0.99), (0.2, 0.5)] {
            let aux = CvarAux::loosest(v, a);
            let budget = aux.budget();
            if v > 0.0 {
                assert!((budget + v * safety_multiplier(a)).abs() <= 1e-12 * (1.0 + v));
            }
            let loss = LinearLoss { theta0: budget - MARGIN - (v / 0.5) * 3.0, theta: v / 0.5, mu: 3.0, sigma: 0.5 };
            let viol = aux.violations(&loss, a);
            assert!(viol.iter().all(|&x| x <= 1e-12), "{viol:?}");
        }
    }

    #[test]
    fn loss_examples() {
        let p = NetworkParams::default();
        let t = Task { l: 1e6, c_bar: 20.0, mu: 0.0, sigma: 0.2 };
        let l = loss_local(1.0, &t, &p);
        assert_eq!((l.theta, l.theta0), (0.0, -2.0));
        let l = loss_local(0.0, &t, &p);
        assert!((l.theta - 1e-2).abs() < 1e-15 && (l.theta0 + 1.8).abs() < 1e-12);
        let big = Task { l: 1e7, c_bar: 100.0, mu: 0.0, sigma: 1.0 };
        let l = loss_edge(&[false, true], 1.0, &big, &[0.0, 1.5479e8], &p).unwrap();
        assert!((l.theta - 1e-2).abs() < 1e-15);
        assert!((l.theta0 + 0.9354).abs() < 1e-4, "{}", l.theta0);
        let l = loss_edge(&[false, false], 1.0, &big, &[0.0, 0.0], &p).unwrap();
        assert_eq!((l.theta, l.theta0), (0.0, -2.0));
        let l = loss_edge(&[true], 0.0, &big, &[0.0], &p).unwrap();
        assert_eq!((l.theta, l.theta0), (0.0, -2.0));
        assert_eq!(loss_edge(&[true], 0.5, &big, &[0.0], &p), Err(ZeroSecrecy));
    }

    #[test]
    fn violation_extremes() {
        let g = MomentSampler::new(Family::Gaussian, 0.0, 0.0);
        let l = LinearLoss { theta0: -0.1, theta: 1.0, mu: 0.0, sigma: 0.0 };
        assert_eq!(monte_carlo_violation(&l, &g, 10_000, 1), 0.0);
        let g = MomentSampler::new(Family::Gaussian, 0.0, 1.0);
        let l = LinearLoss { theta0: 6.0, theta: 1.0, mu: 0.0, sigma: 1.0 };
        assert!(monte_carlo_violation(&l, &g, 10_000, 1) > 0.999);
    }

    #[test]
    fn minimal_feasible_deadline_monotone() {
        // smallest tau admitting the block grows with sigma and alpha
        let base = |sigma: f64, alpha: f64| {
            let l = LinearLoss { theta0: 0.0, theta: 0.02, mu: 0.1, sigma };
            worst_case_cvar_closed_form(&l, alpha)
        };
        let mut prev = f64::NEG_INFINITY;
        for s in [0.0, 0.1, 0.5, 1.0, 4.0] {
            let t = base(s, 0.9);
            assert!(t >= prev);
            prev = t;
        }
        let mut prev = f64::NEG_INFINITY;
        for a in [0.5, 0.8, 0.9, 0.95, 0.99] {
            let t = base(0.5, a);
            assert!(t >= prev);
            prev = t;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn conic_block_equals_closed_form(
            th0 in -10.0f64..10.0, th in -10.0f64..10.0, mu in -1.0f64..1.0, sig in 0.0f64..2.0,
            ai in 0usize..4,
        ) {
            let a = [0.8, 0.9, 0.95, 0.99][ai];
            let l = LinearLoss { theta0: th0, theta: th, mu, sigma: sig };
            let got = solve_block(&l, a);
            let want = worst_case_cvar_closed_form(&l, a);
            prop_assert!((got - want).abs() <= 1e-5, "{} vs {}", got, want);
        }

        #[test]
        fn feasible_blocks_are_conservative(th in 0.1f64..2.0, sig in 0.05f64..1.0, slack in 0.0f64..0.5, ai in 0usize..3, fam in 0usize..3, seed in any::<u64>()) {
            let a = [0.8, 0.9, 0.95][ai];
            let mu = 0.2;
            let l = LinearLoss { theta0: -(th * mu + th * sig * safety_multiplier(a)) - slack, theta: th, mu, sigma: sig };
            let family = [Family::Gaussian, Family::Uniform, Family::TwoPoint { p: 1.0 - a }][fam];
            let n = 20_000;
            let v = monte_carlo_violation(&l, &MomentSampler::new(family, mu, sig), n, seed);
            prop_assert!(v <= (1.0 - a) + 3.0 * (a * (1.0 - a) / n as f64).sqrt(), "{}", v);
        }
    }
}
