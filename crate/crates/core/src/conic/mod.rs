//! Second-order cone programs in the form
//!
//! ```text
//! minimize    cᵀx + c0
//! subject to  A x = b
//!             G x + s = h,   s ∈ K
//! ```
//!
//! where `K` is an ordered product of zero cones, nonnegative orthants and
//! second-order cones `{(t, u) : ‖u‖ ≤ t}`. [`ProgramBuilder`] assembles
//! programs from affine expressions and [`solve`] runs a homogeneous
//! self-dual interior point method on them.

mod cones;
mod linalg;
mod presolve;
mod solver;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

pub use solver::{solve, solve_with, SolverSettings};

use crate::{Error, Result};

pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub n: usize,
    pub c: Vec<f64>,
    pub c0: f64,
    pub a: Vec<SparseRow>,
    pub b: Vec<f64>,
    pub g: Vec<SparseRow>,
    pub h: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Program(m));
        if self.c.len() != self.n {
            return bad(format!("objective has {} entries for {} variables", self.c.len(), self.n));
        }
        if self.a.len() != self.b.len() {
            return bad(format!("{} equality rows but {} right-hand sides", self.a.len(), self.b.len()));
        }
        if self.g.len() != self.h.len() {
            return bad(format!("{} cone rows but {} right-hand sides", self.g.len(), self.h.len()));
        }
        let total: usize = self.cones.iter().map(Cone::dim).sum();
        if total != self.g.len() {
            return bad(format!("cones cover {total} rows but the program has {}", self.g.len()));
        }
        for (k, cone) in self.cones.iter().enumerate() {
            match *cone {
                Cone::Soc(d) if d < 2 => return bad(format!("cone {k}: second-order cone of length {d}")),
                Cone::Zero(0) | Cone::NonNeg(0) => return bad(format!("cone {k}: empty segment")),
                _ => {}
            }
        }
        if !self.c0.is_finite() || self.c.iter().chain(&self.b).chain(&self.h).any(|v| !v.is_finite()) {
            return bad("non-finite data".into());
        }
        let mut seen = vec![usize::MAX; self.n];
        for (kind, rows) in [("equality", &self.a), ("cone", &self.g)] {
            for (r, row) in rows.iter().enumerate() {
                for &(j, v) in row {
                    if j >= self.n {
                        return bad(format!("{kind} row {r}: variable {j} out of range"));
                    }
                    if !v.is_finite() {
                        return bad(format!("{kind} row {r}: non-finite coefficient"));
                    }
                    let tag = if kind == "cone" { r + self.a.len() } else { r };
                    if seen[j] == tag {
                        return bad(format!("{kind} row {r}: duplicate variable index {j}"));
                    }
                    seen[j] = tag;
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c0 + crate::math::dot(&self.c, x)
    }

    /// Plain-text dump, one row per line:
    ///
    /// ```text
    /// vars <n>
    /// obj <c0> <j>:<c_j> ...
    /// eq <b_r> <j>:<a_rj> ...
    /// cone zero|nonneg|soc <dim>
    /// row <h_r> <j>:<g_rj> ...
    /// ```
    ///
    /// Each `cone` line is followed by its `row` lines. Numbers use Rust's
    /// shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.n);
        let _ = write!(out, "obj {:e}", self.c0);
        for (j, &v) in self.c.iter().enumerate() {
            if v != 0.0 {
                let _ = write!(out, " {j}:{v:e}");
            }
        }
        out.push('\n');
        let row = |out: &mut String, tag: &str, rhs: f64, r: &SparseRow| {
            let _ = write!(out, "{tag} {rhs:e}");
            for &(j, v) in r {
                let _ = write!(out, " {j}:{v:e}");
            }
            out.push('\n');
        };
        for (r, rhs) in self.a.iter().zip(&self.b) {
            row(&mut out, "eq", *rhs, r);
        }
        let mut k = 0;
        for cone in &self.cones {
            let (name, d) = match *cone {
                Cone::Zero(d) => ("zero", d),
                Cone::NonNeg(d) => ("nonneg", d),
                Cone::Soc(d) => ("soc", d),
            };
            let _ = writeln!(out, "cone {name} {d}");
            for _ in 0..d {
                row(&mut out, "row", self.h[k], &self.g[k]);
                k += 1;
            }
        }
        out
    }

    /// Parses the format written by [`ConicProgram::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |ln: usize, m: &str| Error::Program(format!("line {}: {m}", ln + 1));
        let num = |ln: usize, t: &str| t.parse::<f64>().map_err(|_| err(ln, "bad number"));
        let terms = |ln: usize, toks: core::str::SplitWhitespace<'_>| -> Result<SparseRow> {
            toks.map(|t| {
                let (j, v) = t.split_once(':').ok_or_else(|| err(ln, "expected index:value"))?;
                Ok((j.parse::<usize>().map_err(|_| err(ln, "bad index"))?, num(ln, v)?))
            })
            .collect()
        };
        let mut p = ConicProgram { n: 0, c: Vec::new(), c0: 0.0, a: Vec::new(), b: Vec::new(), g: Vec::new(), h: Vec::new(), cones: Vec::new() };
        let mut pending = 0usize;
        for (ln, line) in text.lines().enumerate() {
            let mut toks = line.split_whitespace();
            let Some(kind) = toks.next() else { continue };
            match kind {
                "vars" => {
                    p.n = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(ln, "bad variable count"))?;
                    p.c = vec![0.0; p.n];
                }
                "obj" => {
                    p.c0 = num(ln, toks.next().ok_or_else(|| err(ln, "missing constant"))?)?;
                    for (j, v) in terms(ln, toks)? {
                        *p.c.get_mut(j).ok_or_else(|| err(ln, "index out of range"))? = v;
                    }
                }
                "eq" | "row" => {
                    let rhs = num(ln, toks.next().ok_or_else(|| err(ln, "missing right-hand side"))?)?;
                    let r = terms(ln, toks)?;
                    if kind == "eq" {
                        p.a.push(r);
                        p.b.push(rhs);
                    } else {
                        if pending == 0 {
                            return Err(err(ln, "row outside a cone"));
                        }
                        pending -= 1;
                        p.g.push(r);
                        p.h.push(rhs);
                    }
                }
                "cone" => {
                    if pending != 0 {
                        return Err(err(ln, "previous cone is short of rows"));
                    }
                    let name = toks.next().ok_or_else(|| err(ln, "missing cone kind"))?;
                    let d: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(ln, "bad cone size"))?;
                    p.cones.push(match name {
                        "zero" => Cone::Zero(d),
                        "nonneg" => Cone::NonNeg(d),
                        "soc" => Cone::Soc(d),
                        _ => return Err(err(ln, "unknown cone kind")),
                    });
                    pending = d;
                }
                _ => return Err(err(ln, "unknown record")),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

/// Solver output. For `Optimal`, `x, y, z, s` are primal-dual optimal; for
/// `PrimalInfeasible`, `(y, z)` is a certificate normalized to
/// `bᵀy + hᵀz = −1`; for `DualInfeasible`, `(x, s)` is a certificate
/// normalized to `cᵀx = −1`; for `MaxIter`, the best iterate seen.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub pcost: f64,
    pub dcost: f64,
    /// `max(sᵀz, |pcost − dcost|) / max(1, |pcost|)`
    pub gap: f64,
    /// `max(‖Ax − b‖/(1+‖b‖), ‖Gx + s − h‖/(1+‖h‖))`
    pub pres: f64,
    /// `‖Aᵀy + Gᵀz + c‖/(1+‖c‖)`
    pub dres: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Worst certificates over a run of optimal solves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CertificateLog {
    pub solves: usize,
    pub max_gap: f64,
    pub max_pres: f64,
    pub max_dres: f64,
}

impl CertificateLog {
    pub fn record(&mut self, sol: &ConicSolution) {
        if sol.is_optimal() {
            self.solves += 1;
            self.max_gap = self.max_gap.max(sol.gap);
            self.max_pres = self.max_pres.max(sol.pres);
            self.max_dres = self.max_dres.max(sol.dres);
        }
    }

    pub fn merge(&mut self, other: &CertificateLog) {
        self.solves += other.solves;
        self.max_gap = self.max_gap.max(other.max_gap);
        self.max_pres = self.max_pres.max(other.max_pres);
        self.max_dres = self.max_dres.max(other.max_dres);
    }

    /// Largest of the three maxima.
    pub fn worst(&self) -> f64 {
        self.max_gap.max(self.max_pres).max(self.max_dres)
    }
}

/// Sparse affine expression `Σ coef·x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(j: usize) -> Self {
        LinExpr::term(j, 1.0)
    }

    pub fn term(j: usize, coef: f64) -> Self {
        LinExpr { terms: vec![(j, coef)], constant: 0.0 }
    }

    /// Adds `coef·x_j`.
    pub fn add(mut self, j: usize, coef: f64) -> Self {
        self.terms.push((j, coef));
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, v)| v * x[j]).sum::<f64>()
    }

    /// Terms merged per variable, sorted by index, exact zeros dropped.
    pub fn normalized(&self) -> SparseRow {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(j, _)| j);
        let mut out: SparseRow = Vec::with_capacity(t.len());
        for (j, v) in t {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => out.push((j, v)),
            }
        }
        out.retain(|&(_, v)| v != 0.0);
        out
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, o: &LinExpr) {
        self.terms.extend_from_slice(&o.terms);
        self.constant += o.constant;
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, o: &LinExpr) {
        self.terms.extend(o.terms.iter().map(|&(j, v)| (j, -v)));
        self.constant -= o.constant;
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, o: LinExpr) -> LinExpr {
        self += &o;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, o: LinExpr) -> LinExpr {
        self -= &o;
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, c: f64) -> LinExpr {
        self.constant += c;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, c: f64) -> LinExpr {
        self.constant -= c;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        self.terms.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SegKind {
    NonNeg,
    Soc,
}

/// Incremental construction of a [`ConicProgram`].
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    n: usize,
    c: Vec<f64>,
    c0: f64,
    a: Vec<SparseRow>,
    b: Vec<f64>,
    segs: Vec<(SegKind, Vec<LinExpr>)>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self) -> usize {
        self.n += 1;
        self.c.push(0.0);
        self.n - 1
    }

    pub fn add_vars(&mut self, k: usize) -> core::ops::Range<usize> {
        let start = self.n;
        for _ in 0..k {
            self.add_var();
        }
        start..self.n
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Adds `e` to the objective.
    pub fn minimize(&mut self, e: &LinExpr) {
        for &(j, v) in &e.terms {
            self.c[j] += v;
        }
        self.c0 += e.constant;
    }

    /// `e = 0`
    pub fn eq(&mut self, e: &LinExpr) {
        self.a.push(e.normalized());
        self.b.push(-e.constant);
    }

    /// `e ≥ 0`
    pub fn nonneg(&mut self, e: LinExpr) {
        match self.segs.last_mut() {
            Some((SegKind::NonNeg, rows)) => rows.push(e),
            _ => self.segs.push((SegKind::NonNeg, vec![e])),
        }
    }

    /// `lhs ≤ rhs`
    pub fn le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.nonneg(rhs - lhs);
    }

    /// `‖tail‖₂ ≤ head`
    pub fn soc(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.segs.push((SegKind::Soc, rows));
    }

    pub fn build(&self) -> ConicProgram {
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut cones = Vec::with_capacity(self.segs.len());
        for (kind, rows) in &self.segs {
            cones.push(match kind {
                SegKind::NonNeg => Cone::NonNeg(rows.len()),
                SegKind::Soc => Cone::Soc(rows.len()),
            });
            for e in rows {
                // s = e = constant + a·x  ⇒  G = −a, h = constant
                g.push(e.normalized().into_iter().map(|(j, v)| (j, -v)).collect());
                h.push(e.constant);
            }
        }
        ConicProgram { n: self.n, c: self.c.clone(), c0: self.c0, a: self.a.clone(), b: self.b.clone(), g, h, cones }
    }
}
