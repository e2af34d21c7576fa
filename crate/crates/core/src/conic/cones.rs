//! Cone arithmetic for products of nonnegative orthants and second-order
//! cones: Jordan products, step lengths, and Nesterov-Todd scaling.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, norm2, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    NonNeg,
    Soc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub kind: Kind,
    pub start: usize,
    pub dim: usize,
}

impl Block {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.dim
    }
}

/// Barrier degree of the product cone.
pub(crate) fn degree(blocks: &[Block]) -> usize {
    blocks.iter().map(|b| if b.kind == Kind::NonNeg { b.dim } else { 1 }).sum()
}

/// Smallest "eigenvalue" of `x`; positive iff `x` is in the interior.
pub(crate) fn min_eig(blocks: &[Block], x: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for b in blocks {
        let v = &x[b.range()];
        match b.kind {
            Kind::NonNeg => v.iter().for_each(|&a| m = m.min(a)),
            Kind::Soc => m = m.min(v[0] - norm2(&v[1..])),
        }
    }
    m
}

/// `x += a·e` with `e` the cone identity.
pub(crate) fn add_identity(blocks: &[Block], x: &mut [f64], a: f64) {
    for b in blocks {
        match b.kind {
            Kind::NonNeg => x[b.range()].iter_mut().for_each(|v| *v += a),
            Kind::Soc => x[b.start] += a,
        }
    }
}

pub(crate) fn jordan_prod(blocks: &[Block], x: &[f64], y: &[f64], out: &mut [f64]) {
    for b in blocks {
        let r = b.range();
        let (xv, yv) = (&x[r.clone()], &y[r.clone()]);
        let o = &mut out[r];
        match b.kind {
            Kind::NonNeg => {
                for k in 0..b.dim {
                    o[k] = xv[k] * yv[k];
                }
            }
            Kind::Soc => {
                o[0] = dot(xv, yv);
                for k in 1..b.dim {
                    o[k] = xv[0] * yv[k] + yv[0] * xv[k];
                }
            }
        }
    }
}

/// Solves `lam ∘ u = r` for `u`; `lam` must be interior.
pub(crate) fn jordan_div(blocks: &[Block], lam: &[f64], r: &[f64], out: &mut [f64]) {
    for b in blocks {
        let rg = b.range();
        let (l, rv) = (&lam[rg.clone()], &r[rg.clone()]);
        let o = &mut out[rg];
        match b.kind {
            Kind::NonNeg => {
                for k in 0..b.dim {
                    o[k] = rv[k] / l[k];
                }
            }
            Kind::Soc => {
                let l1n = norm2(&l[1..]);
                let det = (l[0] - l1n) * (l[0] + l1n);
                let u0 = (l[0] * rv[0] - dot(&l[1..], &rv[1..])) / det;
                o[0] = u0;
                for k in 1..b.dim {
                    o[k] = (rv[k] - u0 * l[k]) / l[0];
                }
            }
        }
    }
}

/// Largest `a ≥ 0` with `x + a·dx` in the cone, for interior `x`.
pub(crate) fn max_step(blocks: &[Block], x: &[f64], dx: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for b in blocks {
        let r = b.range();
        let (xv, dv) = (&x[r.clone()], &dx[r]);
        match b.kind {
            Kind::NonNeg => {
                for k in 0..b.dim {
                    if dv[k] < 0.0 {
                        alpha = alpha.min(-xv[k] / dv[k]);
                    }
                }
            }
            Kind::Soc => alpha = alpha.min(soc_step(xv, dv)),
        }
    }
    alpha
}

fn soc_step(x: &[f64], d: &[f64]) -> f64 {
    // f(a) = (x0 + a d0)² − ‖x1 + a d1‖² = qa·a² + qb·a + qc with qc > 0
    let x1n = norm2(&x[1..]);
    let d1n = norm2(&d[1..]);
    let qc = (x[0] - x1n) * (x[0] + x1n);
    let qa = (d[0] - d1n) * (d[0] + d1n);
    let qb = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    let disc = qb * qb - 4.0 * qa * qc;
    if qa < 0.0 || (qb < 0.0 && disc >= 0.0) {
        2.0 * qc / (-qb + sqrt(disc.max(0.0)))
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
enum BlockScaling {
    /// `W = diag(w)`
    NonNeg(Vec<f64>),
    /// `W = β (2 v vᵀ − J)`
    Soc { beta: f64, v: Vec<f64> },
}

/// Nesterov-Todd scaling `W` with `W z = W⁻¹ s = λ`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    blocks: Vec<Block>,
    parts: Vec<BlockScaling>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    pub fn identity(blocks: &[Block], m: usize) -> Self {
        let parts = blocks
            .iter()
            .map(|b| match b.kind {
                Kind::NonNeg => BlockScaling::NonNeg(vec![1.0; b.dim]),
                Kind::Soc => {
                    let mut v = vec![0.0; b.dim];
                    v[0] = 1.0;
                    BlockScaling::Soc { beta: 1.0, v }
                }
            })
            .collect();
        let mut lambda = vec![0.0; m];
        add_identity(blocks, &mut lambda, 1.0);
        Scaling { blocks: blocks.to_vec(), parts, lambda }
    }

    /// `None` when `s` or `z` has left the cone interior.
    pub fn new(blocks: &[Block], s: &[f64], z: &[f64]) -> Option<Self> {
        let mut parts = Vec::with_capacity(blocks.len());
        for b in blocks {
            let r = b.range();
            let (sv, zv) = (&s[r.clone()], &z[r]);
            match b.kind {
                Kind::NonNeg => {
                    let mut w = Vec::with_capacity(b.dim);
                    for k in 0..b.dim {
                        if !(sv[k] > 0.0 && zv[k] > 0.0) {
                            return None;
                        }
                        w.push(sqrt(sv[k] / zv[k]));
                    }
                    parts.push(BlockScaling::NonNeg(w));
                }
                Kind::Soc => {
                    let s1 = norm2(&sv[1..]);
                    let z1 = norm2(&zv[1..]);
                    let sdet = (sv[0] - s1) * (sv[0] + s1);
                    let zdet = (zv[0] - z1) * (zv[0] + z1);
                    if !(sv[0] > s1 && zv[0] > z1 && sdet > 0.0 && zdet > 0.0) {
                        return None;
                    }
                    let (sn, zn) = (sqrt(sdet), sqrt(zdet));
                    let sb: Vec<f64> = sv.iter().map(|v| v / sn).collect();
                    let zb: Vec<f64> = zv.iter().map(|v| v / zn).collect();
                    let gamma = sqrt(0.5 * (1.0 + dot(&sb, &zb)));
                    let mut wb: Vec<f64> = Vec::with_capacity(b.dim);
                    wb.push((sb[0] + zb[0]) / (2.0 * gamma));
                    for k in 1..b.dim {
                        wb.push((sb[k] - zb[k]) / (2.0 * gamma));
                    }
                    let den = sqrt(2.0 * (wb[0] + 1.0));
                    let mut v = wb;
                    v[0] += 1.0;
                    v.iter_mut().for_each(|x| *x /= den);
                    parts.push(BlockScaling::Soc { beta: sqrt(sn / zn), v });
                }
            }
        }
        let mut sc = Scaling { blocks: blocks.to_vec(), parts, lambda: Vec::new() };
        let mut lambda = vec![0.0; s.len()];
        sc.apply(z, &mut lambda);
        sc.lambda = lambda;
        Some(sc)
    }

    /// `out = W x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (bi, b) in self.blocks.iter().enumerate() {
            let r = b.range();
            self.apply_block(bi, &x[r.clone()], &mut out[r], false);
        }
    }

    /// `out = W⁻¹ x`
    pub fn apply_inv(&self, x: &[f64], out: &mut [f64]) {
        for (bi, b) in self.blocks.iter().enumerate() {
            let r = b.range();
            self.apply_block(bi, &x[r.clone()], &mut out[r], true);
        }
    }

    /// Applies block `bi` of `W` (or `W⁻¹`) to a block-sized vector.
    pub fn apply_block(&self, bi: usize, xv: &[f64], o: &mut [f64], inverse: bool) {
        let dim = xv.len();
        match &self.parts[bi] {
            BlockScaling::NonNeg(w) => {
                for k in 0..dim {
                    o[k] = if inverse { xv[k] / w[k] } else { w[k] * xv[k] };
                }
            }
            BlockScaling::Soc { beta, v } if !inverse => {
                let vx = dot(v, xv);
                o[0] = beta * (2.0 * v[0] * vx - xv[0]);
                for k in 1..dim {
                    o[k] = beta * (2.0 * v[k] * vx + xv[k]);
                }
            }
            BlockScaling::Soc { beta, v } => {
                // W⁻¹ = (2 Jv vᵀJ − J)/β
                let vjx = v[0] * xv[0] - dot(&v[1..], &xv[1..]);
                o[0] = (2.0 * v[0] * vjx - xv[0]) / beta;
                for k in 1..dim {
                    o[k] = (-2.0 * v[k] * vjx + xv[k]) / beta;
                }
            }
        }
    }

    /// Diagonal of `W` on a nonnegative block.
    pub fn nonneg_weights(&self, bi: usize) -> &[f64] {
        match &self.parts[bi] {
            BlockScaling::NonNeg(w) => w,
            BlockScaling::Soc { .. } => panic!("block {bi} is a second-order cone"),
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; x.len()];
        self.apply(x, &mut o);
        o
    }

    pub fn apply_inv_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut o = vec![0.0; x.len()];
        self.apply_inv(x, &mut o);
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blocks() -> Vec<Block> {
        vec![
            Block { kind: Kind::NonNeg, start: 0, dim: 2 },
            Block { kind: Kind::Soc, start: 2, dim: 4 },
            Block { kind: Kind::Soc, start: 6, dim: 2 },
        ]
    }

    fn interior(raw: &[f64]) -> Vec<f64> {
        let bl = blocks();
        let mut x = raw.to_vec();
        let e = min_eig(&bl, &x);
        add_identity(&bl, &mut x, 0.1 - e.min(0.0) + 0.05 * raw[0].abs());
        x
    }

    proptest! {
        #[test]
        fn nt_scaling_identities(rs in proptest::collection::vec(-3.0f64..3.0, 8), rz in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let bl = blocks();
            let s = interior(&rs);
            let z = interior(&rz);
            let sc = Scaling::new(&bl, &s, &z).unwrap();
            let ws = sc.apply_inv_vec(&s);
            for (a, b) in ws.iter().zip(&sc.lambda) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{:?} vs {:?}", ws, sc.lambda);
            }
            let back = sc.apply_vec(&sc.apply_inv_vec(&rs));
            for (a, b) in back.iter().zip(&rs) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
            prop_assert!(min_eig(&bl, &sc.lambda) > 0.0);
        }

        #[test]
        fn jordan_div_inverts_prod(rl in proptest::collection::vec(-3.0f64..3.0, 8), u in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let bl = blocks();
            let lam = interior(&rl);
            let mut r = vec![0.0; 8];
            jordan_prod(&bl, &lam, &u, &mut r);
            let mut back = vec![0.0; 8];
            jordan_div(&bl, &lam, &r, &mut back);
            for (a, b) in back.iter().zip(&u) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn step_hits_boundary(rx in proptest::collection::vec(-3.0f64..3.0, 8), dx in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let bl = blocks();
            let x = interior(&rx);
            let a = max_step(&bl, &x, &dx);
            let at = |t: f64| -> Vec<f64> { x.iter().zip(&dx).map(|(u, v)| u + t * v).collect() };
            if a.is_finite() {
                prop_assert!(min_eig(&bl, &at(a * (1.0 - 1e-9))) >= -1e-9);
                prop_assert!(min_eig(&bl, &at(a * (1.0 + 1e-6) + 1e-9)) < 1e-9);
            } else {
                prop_assert!(min_eig(&bl, &at(1e6)) >= -1e-6 * 1e6);
            }
        }
    }
}
