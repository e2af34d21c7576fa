//! Fixed-variable elimination, empty row/column removal, and row
//! equilibration, plus the inverse mapping of solutions.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{Block, Kind};
use super::linalg::Rows;
use super::{Cone, ConicProgram, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EqOrigin {
    /// Row of `A`.
    Eq(usize),
    /// Row of a zero cone in `G`.
    ZeroCone(usize),
}

/// The reduced, scaled program handed to the interior point method.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub n: usize,
    pub c: Vec<f64>,
    pub a: Rows,
    pub b: Vec<f64>,
    pub g: Rows,
    pub h: Vec<f64>,
    pub blocks: Vec<Block>,
    pub row_scale_a: Vec<f64>,
    pub row_scale_g: Vec<f64>,
    pub obj_scale: f64,
    /// Objective constant after substituting fixed variables.
    pub c0: f64,
    col_map: Vec<usize>,
    fixed: Vec<Option<f64>>,
    a_origin: Vec<EqOrigin>,
    g_origin: Vec<usize>,
    /// `(row, column, coefficient)` in the order the columns were fixed.
    fix_rows: Vec<(EqOrigin, usize, f64)>,
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    PrimalInfeasible,
    /// Column with a nonzero cost and no constraint rows.
    DualInfeasible { col: usize },
}

/// Presolve feasibility tolerance for rows that become constant.
const ROW_TOL: f64 = 1e-9;

pub(crate) fn presolve(p: &ConicProgram) -> Presolved {
    // equality rows including zero-cone segments of G
    let mut eq_rows: Vec<(EqOrigin, &SparseRow, f64)> =
        p.a.iter().zip(&p.b).enumerate().map(|(r, (row, &b))| (EqOrigin::Eq(r), row, b)).collect();
    let mut cone_rows: Vec<(usize, Kind, usize)> = Vec::new(); // (row, kind, segment)
    let mut k = 0;
    for (seg, cone) in p.cones.iter().enumerate() {
        for _ in 0..cone.dim() {
            match cone {
                Cone::Zero(_) => eq_rows.push((EqOrigin::ZeroCone(k), &p.g[k], p.h[k])),
                Cone::NonNeg(_) => cone_rows.push((k, Kind::NonNeg, seg)),
                Cone::Soc(_) => cone_rows.push((k, Kind::Soc, seg)),
            }
            k += 1;
        }
    }

    let mut fixed: Vec<Option<f64>> = vec![None; p.n];
    let mut fix_rows = Vec::new();
    let mut active = vec![true; eq_rows.len()];
    loop {
        let mut changed = false;
        for (r, (origin, row, rhs)) in eq_rows.iter().enumerate() {
            if !active[r] {
                continue;
            }
            let mut rest = *rhs;
            let mut free = None;
            let mut nfree = 0;
            for &(j, v) in row.iter() {
                match fixed[j] {
                    Some(x) => rest -= v * x,
                    None if v != 0.0 => {
                        nfree += 1;
                        free = Some((j, v));
                    }
                    None => {}
                }
            }
            let scale = 1.0 + rhs.abs() + row.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max);
            match (nfree, free) {
                (0, _) => {
                    if rest.abs() > ROW_TOL * scale {
                        return Presolved::PrimalInfeasible;
                    }
                    active[r] = false;
                    changed = true;
                }
                (1, Some((j, v))) => {
                    fixed[j] = Some(rest / v);
                    fix_rows.push((*origin, j, v));
                    active[r] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    // cone rows: drop constant nonnegative rows, keep SOC rows whole
    let mut keep_g: Vec<(usize, SparseRow, f64, Kind, usize)> = Vec::new();
    for &(row, kind, seg) in &cone_rows {
        let mut h = p.h[row];
        let mut terms = SparseRow::new();
        for &(j, v) in &p.g[row] {
            match fixed[j] {
                Some(x) => h -= v * x,
                None => terms.push((j, v)),
            }
        }
        if kind == Kind::NonNeg && terms.is_empty() {
            if h < -ROW_TOL * (1.0 + p.h[row].abs()) {
                return Presolved::PrimalInfeasible;
            }
            continue;
        }
        keep_g.push((row, terms, h, kind, seg));
    }
    let mut keep_a: Vec<(EqOrigin, SparseRow, f64)> = Vec::new();
    for (r, (origin, row, rhs)) in eq_rows.iter().enumerate() {
        if !active[r] {
            continue;
        }
        let mut b = *rhs;
        let mut terms = SparseRow::new();
        for &(j, v) in row.iter() {
            match fixed[j] {
                Some(x) => b -= v * x,
                None => terms.push((j, v)),
            }
        }
        keep_a.push((*origin, terms, b));
    }

    // columns with no remaining rows
    let mut used = vec![false; p.n];
    for (_, t, _) in &keep_a {
        t.iter().for_each(|&(j, _)| used[j] = true);
    }
    for (_, t, _, _, _) in &keep_g {
        t.iter().for_each(|&(j, _)| used[j] = true);
    }
    for j in 0..p.n {
        if fixed[j].is_none() && !used[j] {
            if p.c[j] != 0.0 {
                return Presolved::DualInfeasible { col: j };
            }
            fixed[j] = Some(0.0);
        }
    }
    let mut new_index = vec![usize::MAX; p.n];
    let mut col_map = Vec::new();
    for j in 0..p.n {
        if fixed[j].is_none() {
            new_index[j] = col_map.len();
            col_map.push(j);
        }
    }
    let n = col_map.len();
    let remap = |t: &SparseRow| -> SparseRow { t.iter().map(|&(j, v)| (new_index[j], v)).collect() };
    let c0 = p.c0 + (0..p.n).filter_map(|j| fixed[j].map(|x| p.c[j] * x)).sum::<f64>();
    let c_red: Vec<f64> = col_map.iter().map(|&j| p.c[j]).collect();
    let cmax = c_red.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let obj_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };

    let row_max = |t: &SparseRow| t.iter().fold(0.0_f64, |m, &(_, v)| m.max(v.abs()));
    let mut a_rows = Vec::with_capacity(keep_a.len());
    let mut b = Vec::with_capacity(keep_a.len());
    let mut row_scale_a = Vec::with_capacity(keep_a.len());
    let mut a_origin = Vec::with_capacity(keep_a.len());
    for (origin, t, rhs) in &keep_a {
        let mx = row_max(t);
        let d = if mx > 0.0 { 1.0 / mx } else { 1.0 };
        a_rows.push(remap(t).into_iter().map(|(j, v)| (j, v * d)).collect());
        b.push(rhs * d);
        row_scale_a.push(d);
        a_origin.push(*origin);
    }

    let mut g_rows = Vec::with_capacity(keep_g.len());
    let mut h = Vec::with_capacity(keep_g.len());
    let mut row_scale_g = Vec::with_capacity(keep_g.len());
    let mut g_origin = Vec::with_capacity(keep_g.len());
    let mut blocks: Vec<Block> = Vec::new();
    let mut start = 0;
    let mut k = 0;
    // nonnegative rows first as a single orthant, then each SOC segment
    for pass_nonneg in [true, false] {
        while k < keep_g.len() {
            let (_, _, _, kind, seg) = keep_g[k];
            let mut end = k;
            while end < keep_g.len() && keep_g[end].4 == seg {
                end += 1;
            }
            if (kind == Kind::NonNeg) == pass_nonneg {
                let group = &keep_g[k..end];
                for (row, t, hv, _, _) in group {
                    let mx = if kind == Kind::NonNeg {
                        row_max(t)
                    } else {
                        group.iter().map(|g| row_max(&g.1)).fold(0.0, f64::max)
                    };
                    let d = if mx > 0.0 { 1.0 / mx } else { 1.0 };
                    g_rows.push(remap(t).into_iter().map(|(j, v)| (j, v * d)).collect());
                    h.push(hv * d);
                    row_scale_g.push(d);
                    g_origin.push(*row);
                }
                let dim = end - k;
                match (kind, blocks.last_mut()) {
                    (Kind::NonNeg, Some(last)) if last.kind == Kind::NonNeg => last.dim += dim,
                    _ => blocks.push(Block { kind, start, dim }),
                }
                start += dim;
            }
            k = end;
        }
        k = 0;
    }

    Presolved::Reduced(Reduced {
        n,
        c: c_red.iter().map(|v| v * obj_scale).collect(),
        a: Rows::new(n, a_rows),
        b,
        g: Rows::new(n, g_rows),
        h,
        blocks,
        row_scale_a,
        row_scale_g,
        obj_scale,
        c0,
        col_map,
        fixed,
        a_origin,
        g_origin,
        fix_rows,
    })
}

/// Solution vectors in the original program's coordinates.
pub(crate) struct Restored {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
}

impl Reduced {
    /// Maps a reduced iterate back. With `recover_fixed_duals` the duals of
    /// eliminated rows are chosen so that the dual residual vanishes on the
    /// fixed columns.
    pub fn restore(&self, p: &ConicProgram, x: &[f64], y: &[f64], z: &[f64], s: &[f64], certificate: bool) -> Restored {
        let mut xo: Vec<f64> = self.fixed.iter().map(|f| if certificate { 0.0 } else { f.unwrap_or(0.0) }).collect();
        for (k, &j) in self.col_map.iter().enumerate() {
            xo[j] = x[k];
        }
        let mut yo = vec![0.0; p.a.len()];
        let mut zo = vec![0.0; p.g.len()];
        let mut so = vec![0.0; p.g.len()];
        // G rows not kept: zero-cone rows have s = 0, constant nonnegative
        // rows keep their slack
        for (r, row) in p.g.iter().enumerate() {
            let gx: f64 = row.iter().map(|&(j, v)| v * xo[j]).sum();
            so[r] = if certificate { -gx } else { p.h[r] - gx };
        }
        for (k, &r) in self.g_origin.iter().enumerate() {
            zo[r] = z[k] * self.row_scale_g[k] / self.obj_scale;
            so[r] = s[k] / self.row_scale_g[k];
        }
        let mut zero_cone_rows = Vec::new();
        for (k, origin) in self.a_origin.iter().enumerate() {
            let v = y[k] * self.row_scale_a[k] / self.obj_scale;
            match *origin {
                EqOrigin::Eq(r) => yo[r] = v,
                EqOrigin::ZeroCone(r) => zo[r] = v,
            }
        }
        for cone_row in p.cones.iter().scan(0usize, |k, c| {
            let s = *k;
            *k += c.dim();
            Some((s, *c))
        }) {
            if let (s0, Cone::Zero(d)) = cone_row {
                zero_cone_rows.extend(s0..s0 + d);
            }
        }
        for r in zero_cone_rows {
            so[r] = 0.0;
        }
        if !self.fix_rows.is_empty() {
            let scale = if certificate { 0.0 } else { 1.0 };
            let mut res: Vec<f64> = p.c.iter().map(|c| c * scale).collect();
            for (row, &yr) in p.a.iter().zip(&yo) {
                row.iter().for_each(|&(j, v)| res[j] += v * yr);
            }
            for (row, &zr) in p.g.iter().zip(&zo) {
                row.iter().for_each(|&(j, v)| res[j] += v * zr);
            }
            for &(origin, j, coef) in self.fix_rows.iter().rev() {
                let dual = -res[j] / coef;
                let row = match origin {
                    EqOrigin::Eq(r) => {
                        yo[r] = dual;
                        &p.a[r]
                    }
                    EqOrigin::ZeroCone(r) => {
                        zo[r] = dual;
                        &p.g[r]
                    }
                };
                row.iter().for_each(|&(k, v)| res[k] += v * dual);
            }
        }
        Restored { x: xo, y: yo, z: zo, s: so }
    }
}
