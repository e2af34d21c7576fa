//! Homogeneous self-dual interior point method with Nesterov-Todd scaling
//! and a Mehrotra predictor-corrector step.
//!
//! The embedding solves
//!
//! ```text
//!   [ 0 ]   [  0   Aᵀ  Gᵀ  c ] [x]   [0]
//!   [ 0 ] = [ -A   0   0   b ] [y] − [0]
//!   [ s ]   [ -G   0   0   h ] [z]   [0]
//!   [ κ ]   [ -cᵀ -bᵀ -hᵀ  0 ] [τ]   [0]
//! ```
//!
//! with `s, z ∈ K`, `τ, κ ≥ 0`; `τ > 0` at the limit recovers an optimal
//! pair, `κ > 0` an infeasibility certificate.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{self, Kind, Scaling};
use super::linalg::{householder, GivensQr, Rows};
use super::presolve::{presolve, Presolved, Reduced};
use super::{ConicProgram, ConicSolution, Status};
use crate::math::{dot, norm2, sqrt};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Bound on relative gap and residuals for `Optimal`, and on the
    /// certificate residuals for the infeasible statuses.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_frac: f64,
    /// Iterative refinement passes per linear solve.
    pub refine: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-8, max_iter: 100, step_frac: 0.99, refine: 3 }
    }
}

pub fn solve(p: &ConicProgram, tol: f64, max_iter: usize) -> Result<ConicSolution> {
    solve_with(p, &SolverSettings { tol, max_iter, ..SolverSettings::default() })
}

pub fn solve_with(p: &ConicProgram, set: &SolverSettings) -> Result<ConicSolution> {
    p.validate()?;
    let norms = Norms { b: norm2(&p.b), h: norm2(&p.h), c: norm2(&p.c) };
    let red = match presolve(p) {
        Presolved::Reduced(r) => r,
        Presolved::PrimalInfeasible => return Ok(trivial(p, Status::PrimalInfeasible)),
        Presolved::DualInfeasible { col } => {
            let mut sol = trivial(p, Status::DualInfeasible);
            sol.x[col] = -p.c[col].signum() / p.c[col].abs();
            return Ok(sol);
        }
    };
    let out = Ipm::new(&red, norms, set).run();
    Ok(finish(p, &red, out, norms))
}

fn trivial(p: &ConicProgram, status: Status) -> ConicSolution {
    ConicSolution {
        status,
        x: vec![0.0; p.n],
        y: vec![0.0; p.a.len()],
        z: vec![0.0; p.g.len()],
        s: vec![0.0; p.g.len()],
        pcost: f64::NAN,
        dcost: f64::NAN,
        gap: f64::NAN,
        pres: f64::NAN,
        dres: f64::NAN,
        iterations: 0,
    }
}

#[derive(Debug, Clone, Copy)]
struct Norms {
    b: f64,
    h: f64,
    c: f64,
}

#[derive(Debug, Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Metrics {
    pres: f64,
    dres: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

impl Metrics {
    fn merit(&self) -> f64 {
        self.pres.max(self.dres).max(self.gap)
    }
}

struct IpmOutput {
    status: Status,
    it: Iterate,
    iterations: usize,
}

struct Ipm<'a> {
    r: &'a Reduced,
    norms: Norms,
    set: &'a SolverSettings,
    n: usize,
    p: usize,
    m: usize,
    nu: f64,
    /// Per SOC block: columns touched and the block of G restricted to them
    /// (row-major, `dim × cols`).
    soc_local: Vec<Option<(Vec<usize>, Vec<f64>)>>,
}

impl<'a> Ipm<'a> {
    fn new(r: &'a Reduced, norms: Norms, set: &'a SolverSettings) -> Self {
        let soc_local = r
            .blocks
            .iter()
            .map(|b| {
                if b.kind != Kind::Soc {
                    return None;
                }
                let mut cols: Vec<usize> = b.range().flat_map(|k| r.g.rows[k].iter().map(|&(j, _)| j)).collect();
                cols.sort_unstable();
                cols.dedup();
                let mut dense = vec![0.0; b.dim * cols.len()];
                for (li, k) in b.range().enumerate() {
                    for &(j, v) in &r.g.rows[k] {
                        let lj = cols.binary_search(&j).expect("column collected above");
                        dense[li * cols.len() + lj] = v;
                    }
                }
                Some((cols, dense))
            })
            .collect();
        Ipm {
            r,
            norms,
            set,
            n: r.n,
            p: r.a.nrows(),
            m: r.g.nrows(),
            nu: cones::degree(&r.blocks) as f64,
            soc_local,
        }
    }

    fn metrics(&self, it: &Iterate) -> Metrics {
        let r = self.r;
        let tau = it.tau;
        let (n, p, m) = (self.n, self.p, self.m);
        // primal residuals in original row units
        let ax = r.a.mul_vec(&it.x);
        let gx = r.g.mul_vec(&it.x);
        let mut e = vec![0.0; p];
        for k in 0..p {
            e[k] = (ax[k] / tau - r.b[k]) / r.row_scale_a[k];
        }
        let pa = norm2(&e) / (1.0 + self.norms.b);
        let mut e = vec![0.0; m];
        for k in 0..m {
            e[k] = ((gx[k] + it.s[k]) / tau - r.h[k]) / r.row_scale_g[k];
        }
        let pres = pa.max(norm2(&e) / (1.0 + self.norms.h));
        let mut dr = r.a.tmul_vec(&it.y);
        r.g.tmul_add(&it.z, &mut dr);
        let atyz = dr.clone();
        for j in 0..n {
            dr[j] = (dr[j] / tau + r.c[j]) / r.obj_scale;
        }
        let dres = norm2(&dr) / (1.0 + self.norms.c);
        let cx = dot(&r.c, &it.x);
        let by_hz = dot(&r.b, &it.y) + dot(&r.h, &it.z);
        let pcost = cx / tau / r.obj_scale + r.c0;
        let dcost = -by_hz / tau / r.obj_scale + r.c0;
        let sz = dot(&it.s, &it.z) / (tau * tau) / r.obj_scale;
        let gap = sz.max((pcost - dcost).abs()) / pcost.abs().max(1.0);
        let pinf = if by_hz < 0.0 {
            norm2(&atyz) / (-by_hz) / self.norms.c.max(1.0)
        } else {
            f64::INFINITY
        };
        let dinf = if cx < 0.0 {
            let mut ea = vec![0.0; p];
            for k in 0..p {
                ea[k] = ax[k] / r.row_scale_a[k];
            }
            let mut eg = vec![0.0; m];
            for k in 0..m {
                eg[k] = (gx[k] + it.s[k]) / r.row_scale_g[k];
            }
            let num = (norm2(&ea) / self.norms.b.max(1.0)).max(norm2(&eg) / self.norms.h.max(1.0));
            num / (-cx / r.obj_scale)
        } else {
            f64::INFINITY
        };
        Metrics { pres, dres, gap, pinf, dinf }
    }

    fn factor(&self, sc: &Scaling) -> Kkt<'_> {
        let (n, p) = (self.n, self.p);
        // rows of W⁻¹G as (cols, values)
        let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(self.m);
        for (bi, b) in self.r.blocks.iter().enumerate() {
            match b.kind {
                Kind::NonNeg => {
                    let w = sc.nonneg_weights(bi);
                    for k in b.range() {
                        let wk = w[k - b.start];
                        let row: Vec<(usize, f64)> = self.r.g.rows[k].iter().map(|&(j, v)| (j, v / wk)).collect();
                        let mx = row.iter().fold(0.0_f64, |a, &(_, v)| a.max(v.abs()));
                        rows.push((mx, row));
                    }
                }
                Kind::Soc => {
                    let (cols, dense) = self.soc_local[bi].as_ref().expect("SOC block has local data");
                    let nc = cols.len();
                    let d = b.dim;
                    let mut y = vec![0.0; d * nc];
                    let mut col = vec![0.0; d];
                    let mut out = vec![0.0; d];
                    for lj in 0..nc {
                        for li in 0..d {
                            col[li] = dense[li * nc + lj];
                        }
                        sc.apply_block(bi, &col, &mut out, true);
                        for li in 0..d {
                            y[li * nc + lj] = out[li];
                        }
                    }
                    for li in 0..d {
                        let row: Vec<(usize, f64)> = (0..nc).map(|lj| (cols[lj], y[li * nc + lj])).collect();
                        let mx = row.iter().fold(0.0_f64, |a, &(_, v)| a.max(v.abs()));
                        rows.push((mx, row));
                    }
                }
            }
        }
        rows.sort_by(|a, b| b.0.total_cmp(&a.0));
        // equalities are handled in the null space of A
        let null = (p > 0).then(|| {
            let mut at = vec![0.0; n * p];
            for (i, row) in self.r.a.rows.iter().enumerate() {
                for &(j, v) in row {
                    at[j * p + i] += v;
                }
            }
            let (q, ra) = householder(&at, n, p);
            NullSpace { q, ra }
        });
        let k = n - p;
        let mut colnorm = vec![0.0; k];
        let mut qr = GivensQr::new(k);
        let mut dense = vec![0.0; k];
        for (_, row) in &rows {
            let (mut lo, mut hi) = (k, 0);
            match &null {
                None => {
                    for &(j, v) in row {
                        if v != 0.0 {
                            dense[j] += v;
                            lo = lo.min(j);
                            hi = hi.max(j + 1);
                        }
                    }
                }
                Some(ns) => {
                    for &(j, v) in row {
                        for c in 0..k {
                            dense[c] += v * ns.q[j * n + p + c];
                        }
                    }
                    lo = 0;
                    hi = k;
                }
            }
            for c in lo..hi {
                colnorm[c] += dense[c] * dense[c];
            }
            if lo < hi {
                qr.add_row(&mut dense, lo, hi);
            }
        }
        for j in 0..k {
            let cn = sqrt(colnorm[j]);
            if qr.diag(j).abs() <= 1e-7 * (1.0 + cn) {
                dense[j] = 1e-7 * (1.0 + cn);
                qr.add_row(&mut dense, j, j + 1);
            }
        }
        Kkt { ipm: self, sc: sc.clone(), lm: qr, null }
    }

    fn run(&self) -> IpmOutput {
        let (n, p, m) = (self.n, self.p, self.m);
        let r = self.r;
        let blocks = &r.blocks;
        let set = self.set;

        // starting point from the W = I system
        let id = Scaling::identity(blocks, m);
        let kkt = self.factor(&id);
        let neg_c: Vec<f64> = r.c.iter().map(|v| -v).collect();
        let (x, _, zp) = kkt.solve(&vec![0.0; n], &r.b, &r.h, set.refine);
        let mut s: Vec<f64> = zp.iter().map(|v| -v).collect();
        let (_, y, mut z) = kkt.solve(&neg_c, &vec![0.0; p], &vec![0.0; m], set.refine);
        for v in [&mut s, &mut z] {
            let shift = -cones::min_eig(blocks, v);
            if shift >= -1e-8 * norm2(v).max(1.0) {
                cones::add_identity(blocks, v, 1.0 + shift);
            }
        }
        let mut it = Iterate { x, y, z, s, tau: 1.0, kappa: 1.0 };
        let mut best: Option<(f64, Iterate)> = None;
        let mut stalls = 0;

        for iter in 0..=set.max_iter {
            let met = self.metrics(&it);
            if met.pres <= set.tol && met.dres <= set.tol && met.gap <= set.tol {
                return IpmOutput { status: Status::Optimal, it, iterations: iter };
            }
            if met.pinf <= set.tol {
                return IpmOutput { status: Status::PrimalInfeasible, it, iterations: iter };
            }
            if met.dinf <= set.tol {
                return IpmOutput { status: Status::DualInfeasible, it, iterations: iter };
            }
            let merit = met.merit();
            if merit.is_finite() && best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
                best = Some((merit, it.clone()));
            }
            if iter == set.max_iter || stalls >= 5 {
                break;
            }
            let Some(sc) = Scaling::new(blocks, &it.s, &it.z) else { break };
            let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (self.nu + 1.0);
            if !(mu.is_finite() && mu > 0.0) {
                break;
            }
            let kkt = self.factor(&sc);
            let lam = sc.lambda.clone();

            let mut rx = r.a.tmul_vec(&it.y);
            r.g.tmul_add(&it.z, &mut rx);
            for j in 0..n {
                rx[j] += r.c[j] * it.tau;
            }
            let ax = r.a.mul_vec(&it.x);
            let ry: Vec<f64> = (0..p).map(|k| -ax[k] + r.b[k] * it.tau).collect();
            let gx = r.g.mul_vec(&it.x);
            let rz: Vec<f64> = (0..m).map(|k| -gx[k] + r.h[k] * it.tau - it.s[k]).collect();
            let rt = -dot(&r.c, &it.x) - dot(&r.b, &it.y) - dot(&r.h, &it.z) - it.kappa;

            let (x1, y1, z1) = kkt.solve(&neg_c, &r.b, &r.h, set.refine);
            let wz1 = sc.apply_vec(&z1);
            let p1 = -dot(&wz1, &wz1);

            let mut lam_sq = vec![0.0; m];
            cones::jordan_prod(blocks, &lam, &lam, &mut lam_sq);

            let step = |sigma: f64, ds_rhs: &[f64], dk_rhs: f64| {
                let mut u = vec![0.0; m];
                cones::jordan_div(blocks, &lam, ds_rhs, &mut u);
                let wu = sc.apply_vec(&u);
                let f = 1.0 - sigma;
                let r1: Vec<f64> = rx.iter().map(|v| -f * v).collect();
                let r2: Vec<f64> = ry.iter().map(|v| f * v).collect();
                let r3: Vec<f64> = (0..m).map(|k| f * rz[k] - wu[k]).collect();
                let (x2, y2, z2) = kkt.solve(&r1, &r2, &r3, set.refine);
                let p2 = dot(&r.c, &x2) + dot(&r.b, &y2) + dot(&r.h, &z2);
                let dtau = (p2 - f * rt + dk_rhs / it.tau) / (it.kappa / it.tau - p1);
                let dx: Vec<f64> = (0..n).map(|j| x2[j] + dtau * x1[j]).collect();
                let dy: Vec<f64> = (0..p).map(|k| y2[k] + dtau * y1[k]).collect();
                let dz: Vec<f64> = (0..m).map(|k| z2[k] + dtau * z1[k]).collect();
                let wdz = sc.apply_vec(&dz);
                // scaled directions: W⁻¹ds = u − W dz, W dz
                let ds_t: Vec<f64> = (0..m).map(|k| u[k] - wdz[k]).collect();
                let ds = sc.apply_vec(&ds_t);
                let dkappa = (dk_rhs - it.kappa * dtau) / it.tau;
                let mut amax = cones::max_step(blocks, &lam, &ds_t).min(cones::max_step(blocks, &lam, &wdz));
                if dtau < 0.0 {
                    amax = amax.min(-it.tau / dtau);
                }
                if dkappa < 0.0 {
                    amax = amax.min(-it.kappa / dkappa);
                }
                Step { dx, dy, dz, ds, dtau, dkappa, ds_t, dz_t: wdz, amax }
            };

            let ds_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let aff = step(0.0, &ds_aff, -it.tau * it.kappa);
            let a_aff = aff.amax.min(1.0);
            let sigma = ((1.0 - a_aff) * (1.0 - a_aff) * (1.0 - a_aff)).clamp(0.0, 1.0);

            let mut corr = vec![0.0; m];
            cones::jordan_prod(blocks, &aff.ds_t, &aff.dz_t, &mut corr);
            let mut ds_rhs: Vec<f64> = (0..m).map(|k| -lam_sq[k] - corr[k]).collect();
            cones::add_identity(blocks, &mut ds_rhs, sigma * mu);
            let dk_rhs = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
            let st = step(sigma, &ds_rhs, dk_rhs);
            let alpha = (set.step_frac * st.amax).min(1.0);
            if !alpha.is_finite() || alpha <= 0.0 {
                break;
            }
            stalls = if alpha < 1e-8 { stalls + 1 } else { 0 };
            for j in 0..n {
                it.x[j] += alpha * st.dx[j];
            }
            for k in 0..p {
                it.y[k] += alpha * st.dy[k];
            }
            for k in 0..m {
                it.z[k] += alpha * st.dz[k];
                it.s[k] += alpha * st.ds[k];
            }
            it.tau += alpha * st.dtau;
            it.kappa += alpha * st.dkappa;
            if it.x.iter().chain(&it.s).chain(&it.z).any(|v| !v.is_finite()) {
                break;
            }
        }
        let (_, it) = best.unwrap_or((f64::INFINITY, it));
        IpmOutput { status: Status::MaxIter, it, iterations: set.max_iter }
    }
}

struct Step {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    ds_t: Vec<f64>,
    dz_t: Vec<f64>,
    amax: f64,
}

struct Kkt<'a> {
    ipm: &'a Ipm<'a>,
    sc: Scaling,
    lm: GivensQr,
    null: Option<NullSpace>,
}

/// `Aᵀ = Q[:, ..p] R`; the trailing columns of `Q` span the null space of `A`.
struct NullSpace {
    q: Vec<f64>,
    ra: Vec<f64>,
}

impl Kkt<'_> {
    fn w2(&self, v: &[f64], inverse: bool) -> Vec<f64> {
        if inverse {
            self.sc.apply_inv_vec(&self.sc.apply_inv_vec(v))
        } else {
            self.sc.apply_vec(&self.sc.apply_vec(v))
        }
    }

    fn solve_once(&self, r1: &[f64], r2: &[f64], r3: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ipm = self.ipm;
        let (n, p) = (ipm.n, ipm.p);
        let Some(ns) = &self.null else {
            let mut u = r1.to_vec();
            ipm.r.g.tmul_add(&self.w2(r3, true), &mut u);
            self.lm.solve(&mut u);
            let z = self.residual_z(&u, r3);
            return (u, Vec::new(), z);
        };
        let k = n - p;
        let (q, ra) = (&ns.q, &ns.ra);
        // particular solution of A x = r2: x_p = Q1 R⁻ᵀ r2
        let mut t = r2.to_vec();
        for i in 0..p {
            let v = (t[i] - (0..i).map(|j| ra[j * p + i] * t[j]).sum::<f64>()) / ra[i * p + i];
            t[i] = v;
        }
        let mut x: Vec<f64> = (0..n).map(|j| (0..p).map(|i| q[j * n + i] * t[i]).sum()).collect();
        // reduced system on the null space
        let gx = ipm.r.g.mul_vec(&x);
        let diff: Vec<f64> = r3.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let mut u = r1.to_vec();
        ipm.r.g.tmul_add(&self.w2(&diff, true), &mut u);
        let mut xi: Vec<f64> = (0..k).map(|c| (0..n).map(|j| q[j * n + p + c] * u[j]).sum()).collect();
        self.lm.solve(&mut xi);
        for j in 0..n {
            x[j] += (0..k).map(|c| q[j * n + p + c] * xi[c]).sum::<f64>();
        }
        let z = self.residual_z(&x, r3);
        // A ᵀy = r1 − Gᵀz, solved as R y = Q1ᵀ (r1 − Gᵀz)
        let mut e = r1.to_vec();
        let gz = ipm.r.g.tmul_vec(&z);
        e.iter_mut().zip(&gz).for_each(|(a, b)| *a -= b);
        let mut y: Vec<f64> = (0..p).map(|i| (0..n).map(|j| q[j * n + i] * e[j]).sum()).collect();
        for i in (0..p).rev() {
            let v = (y[i] - (i + 1..p).map(|j| ra[i * p + j] * y[j]).sum::<f64>()) / ra[i * p + i];
            y[i] = v;
        }
        (x, y, z)
    }

    /// `z = W⁻²(Gx − r3)`
    fn residual_z(&self, x: &[f64], r3: &[f64]) -> Vec<f64> {
        let gx = self.ipm.r.g.mul_vec(x);
        let diff: Vec<f64> = gx.iter().zip(r3).map(|(a, b)| a - b).collect();
        self.w2(&diff, true)
    }

    /// Solves `[[0, Aᵀ, Gᵀ], [A, 0, 0], [G, 0, −W²]] (x, y, z) = (r1, r2, r3)`
    /// with iterative refinement against the unregularized operator.
    fn solve(&self, r1: &[f64], r2: &[f64], r3: &[f64], refine: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let ipm = self.ipm;
        let (mut x, mut y, mut z) = self.solve_once(r1, r2, r3);
        let rhs_norm = norm2(r1).max(norm2(r2)).max(norm2(r3));
        let mut last = f64::INFINITY;
        for _ in 0..refine {
            let mut e1 = ipm.r.a.tmul_vec(&y);
            ipm.r.g.tmul_add(&z, &mut e1);
            let e1: Vec<f64> = r1.iter().zip(&e1).map(|(a, b)| a - b).collect();
            let ax = ipm.r.a.mul_vec(&x);
            let e2: Vec<f64> = r2.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let gx = ipm.r.g.mul_vec(&x);
            let w2z = self.w2(&z, false);
            let e3: Vec<f64> = (0..r3.len()).map(|k| r3[k] - gx[k] + w2z[k]).collect();
            let err = norm2(&e1).max(norm2(&e2)).max(norm2(&e3));
            if err <= 1e-15 * (1.0 + rhs_norm) || err >= last {
                break;
            }
            last = err;
            let (cx, cy, cz) = self.solve_once(&e1, &e2, &e3);
            x.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            y.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
            z.iter_mut().zip(&cz).for_each(|(a, b)| *a += b);
        }
        (x, y, z)
    }
}

fn finish(p: &ConicProgram, red: &Reduced, out: IpmOutput, norms: Norms) -> ConicSolution {
    let it = &out.it;
    let tau = it.tau;
    let certificate = matches!(out.status, Status::PrimalInfeasible | Status::DualInfeasible);
    let scale = if certificate { 1.0 } else { 1.0 / tau };
    let sc = |v: &[f64]| -> Vec<f64> { v.iter().map(|a| a * scale).collect() };
    let rest = red.restore(p, &sc(&it.x), &sc(&it.y), &sc(&it.z), &sc(&it.s), certificate);
    let mut sol = ConicSolution {
        status: out.status,
        x: rest.x,
        y: rest.y,
        z: rest.z,
        s: rest.s,
        pcost: 0.0,
        dcost: 0.0,
        gap: 0.0,
        pres: 0.0,
        dres: 0.0,
        iterations: out.iterations,
    };
    match out.status {
        Status::PrimalInfeasible => {
            let k = -(dot(&p.b, &sol.y) + dot(&p.h, &sol.z));
            if k > 0.0 {
                sol.y.iter_mut().chain(sol.z.iter_mut()).for_each(|v| *v /= k);
            }
        }
        Status::DualInfeasible => {
            let k = -dot(&p.c, &sol.x);
            if k > 0.0 {
                sol.x.iter_mut().chain(sol.s.iter_mut()).for_each(|v| *v /= k);
            }
        }
        _ => {}
    }
    let (pres, dres, pcost, dcost, gap) = original_metrics(p, &sol, norms);
    sol.pres = pres;
    sol.dres = dres;
    sol.pcost = pcost;
    sol.dcost = dcost;
    sol.gap = gap;
    sol
}

fn original_metrics(p: &ConicProgram, sol: &ConicSolution, norms: Norms) -> (f64, f64, f64, f64, f64) {
    let a = Rows::new(p.n, p.a.clone());
    let g = Rows::new(p.n, p.g.clone());
    let ax = a.mul_vec(&sol.x);
    let ea: Vec<f64> = ax.iter().zip(&p.b).map(|(u, v)| u - v).collect();
    let gx = g.mul_vec(&sol.x);
    let eg: Vec<f64> = (0..p.g.len()).map(|k| gx[k] + sol.s[k] - p.h[k]).collect();
    let pres = (norm2(&ea) / (1.0 + norms.b)).max(norm2(&eg) / (1.0 + norms.h));
    let mut dr = a.tmul_vec(&sol.y);
    g.tmul_add(&sol.z, &mut dr);
    dr.iter_mut().zip(&p.c).for_each(|(u, c)| *u += c);
    let dres = norm2(&dr) / (1.0 + norms.c);
    let pcost = p.objective(&sol.x);
    let dcost = p.c0 - dot(&p.b, &sol.y) - dot(&p.h, &sol.z);
    let gap = dot(&sol.s, &sol.z).abs().max((pcost - dcost).abs()) / pcost.abs().max(1.0);
    (pres, dres, pcost, dcost, gap)
}
