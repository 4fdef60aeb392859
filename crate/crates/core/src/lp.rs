//! Dense two-phase primal simplex with Bland's rule, a dual simplex for
//! re-optimizing after a cut is appended, and the cutting-plane driver over
//! the regret polytope in variables `x_i`, `y_ij` and `r`.

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::model::{powp, Instance, Solution};

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// `minimize objective . x` subject to `constraints` and `x >= 0`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> LinearProgram {
        LinearProgram { n_vars, objective: vec![0.0; n_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    /// Largest violation of any constraint or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| -v).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(v, a)| a * x[v]).sum();
            let viol = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Smallest pivot magnitude; raised on retries after a numerical failure.
    pub pivot_tol: f64,
    pub max_pivots: usize,
}

impl Default for LpConfig {
    fn default() -> LpConfig {
        LpConfig { feas_tol: 1e-8, opt_tol: 1e-8, pivot_tol: 1e-9, max_pivots: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

const REINVERT_EVERY: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Original,
    Slack,
    Artificial,
}

/// Simplex tableau kept in canonical form with respect to `basis`.
#[derive(Clone, Debug)]
struct Tableau {
    n_orig: usize,
    kinds: Vec<ColKind>,
    /// Row-major, `width = kinds.len() + 1`, last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// The rows before any pivot, for reinversion.
    orig: Vec<Vec<f64>>,
    /// Cleared when a redundant row is dropped.
    orig_valid: bool,
    basis: Vec<usize>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    value: f64,
    pivots: usize,
    cfg: LpConfig,
}

impl Tableau {
    fn build(lp: &LinearProgram, cfg: LpConfig) -> Tableau {
        let n = lp.n_vars;
        let m = lp.constraints.len();
        let mut kinds = vec![ColKind::Original; n];
        let mut slack_col = vec![None; m];
        let mut art_col = vec![None; m];
        let mut flipped = vec![false; m];
        for (r, c) in lp.constraints.iter().enumerate() {
            flipped[r] = c.rhs < 0.0;
            let cmp = match (c.cmp, flipped[r]) {
                (Cmp::Le, true) => Cmp::Ge,
                (Cmp::Ge, true) => Cmp::Le,
                (cmp, _) => cmp,
            };
            if cmp != Cmp::Eq {
                slack_col[r] = Some((kinds.len(), if cmp == Cmp::Le { 1.0 } else { -1.0 }));
                kinds.push(ColKind::Slack);
            }
            if cmp != Cmp::Le {
                art_col[r] = Some(kinds.len());
                kinds.push(ColKind::Artificial);
            }
        }
        let width = kinds.len() + 1;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (r, c) in lp.constraints.iter().enumerate() {
            let sign = if flipped[r] { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for &(v, a) in &c.coeffs {
                row[v] += sign * a;
            }
            row[width - 1] = sign * c.rhs;
            if let Some((s, coef)) = slack_col[r] {
                row[s] = coef;
            }
            if let Some(a) = art_col[r] {
                row[a] = 1.0;
                basis.push(a);
            } else {
                basis.push(slack_col[r].map(|s| s.0).unwrap_or(0));
            }
            rows.push(row);
        }
        Tableau {
            n_orig: n,
            kinds,
            orig: rows.clone(),
            orig_valid: true,
            rows,
            basis,
            cost: Vec::new(),
            reduced: Vec::new(),
            value: 0.0,
            pivots: 0,
            cfg,
        }
    }

    fn width(&self) -> usize {
        self.kinds.len() + 1
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        let w = self.width();
        let mut reduced = cost.clone();
        reduced.push(0.0);
        for (r, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    reduced[j] -= cb * row[j];
                }
            }
        }
        self.value = -reduced[w - 1];
        reduced.truncate(w - 1);
        self.reduced = reduced;
        self.cost = cost;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width();
        let piv = self.rows[r][j];
        {
            let row = &mut self.rows[r];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[j] = 1.0;
        }
        let prow = self.rows[r].clone();
        for (q, row) in self.rows.iter_mut().enumerate() {
            if q == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for t in 0..w {
                    row[t] -= f * prow[t];
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for t in 0..w - 1 {
                self.reduced[t] -= f * prow[t];
            }
            self.reduced[j] = 0.0;
            self.value += f * prow[w - 1];
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn allowed(&self, j: usize, allow_art: bool) -> bool {
        allow_art || self.kinds[j] != ColKind::Artificial
    }

    /// Primal simplex with Bland's rule from the current basic feasible basis.
    fn primal(&mut self, allow_art: bool) -> Result<()> {
        let rhs = self.width() - 1;
        loop {
            if self.pivots > self.cfg.max_pivots {
                return Err(Error::Numerical("simplex pivot limit reached".into()));
            }
            self.refresh()?;
            let entering = (0..self.kinds.len())
                .find(|&j| self.allowed(j, allow_art) && self.reduced[j] < -self.cfg.opt_tol);
            let Some(j) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[j];
                if a > self.cfg.pivot_tol {
                    let ratio = row[rhs].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Err(Error::Unbounded),
            }
        }
    }

    /// Dual simplex from a dual feasible basis; Bland-style choices.
    fn dual(&mut self) -> Result<()> {
        let rhs = self.width() - 1;
        loop {
            if self.pivots > self.cfg.max_pivots {
                return Err(Error::Numerical("dual simplex pivot limit reached".into()));
            }
            self.refresh()?;
            let mut leave: Option<usize> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[rhs] < -self.cfg.feas_tol
                    && leave.is_none_or(|lr| self.basis[r] < self.basis[lr])
                {
                    leave = Some(r);
                }
            }
            let Some(r) = leave else { return Ok(()) };
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.kinds.len() {
                if self.kinds[j] == ColKind::Artificial {
                    continue;
                }
                let a = self.rows[r][j];
                if a < -self.cfg.pivot_tol {
                    let ratio = self.reduced[j].max(0.0) / -a;
                    if enter.is_none_or(|(_, best)| ratio < best - 1e-12) {
                        enter = Some((j, ratio));
                    }
                }
            }
            match enter {
                Some((j, _)) => self.pivot(r, j),
                None => return Err(Error::Infeasible),
            }
        }
    }

    fn solve(&mut self, objective: &[f64]) -> Result<()> {
        let ncol = self.kinds.len();
        let phase1: Vec<f64> = self
            .kinds
            .iter()
            .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        if phase1.iter().any(|&c| c > 0.0) {
            self.set_cost(phase1);
            self.primal(true)?;
            let scale = 1.0 + self.rows.iter().map(|r| r[ncol].abs()).fold(0.0, f64::max);
            if self.value > self.cfg.feas_tol * scale {
                return Err(Error::Infeasible);
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; ncol];
        cost[..self.n_orig].copy_from_slice(objective);
        self.set_cost(cost);
        self.primal(false)?;
        self.polish()
    }

    /// Recomputes the tableau from the original rows for the current basis.
    fn reinvert(&mut self) -> bool {
        if !self.orig_valid {
            return false;
        }
        let m = self.rows.len();
        let w = self.width();
        let mut a = self.orig.clone();
        for r in 0..m {
            let col = self.basis[r];
            let piv = (r..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("rows left");
            if a[piv][col].abs() < 1e-12 {
                return false;
            }
            a.swap(r, piv);
            let d = a[r][col];
            for v in a[r].iter_mut() {
                *v /= d;
            }
            a[r][col] = 1.0;
            let prow = a[r].clone();
            for (q, row) in a.iter_mut().enumerate() {
                let f = row[col];
                if q != r && f != 0.0 {
                    for t in 0..w {
                        row[t] -= f * prow[t];
                    }
                    row[col] = 0.0;
                }
            }
        }
        self.rows = a;
        let cost = self.cost.clone();
        self.set_cost(cost);
        true
    }

    /// Periodic reinversion against drift.
    fn refresh(&mut self) -> Result<()> {
        if self.pivots > 0 && self.pivots.is_multiple_of(REINVERT_EVERY) && self.orig_valid && !self.reinvert() {
            return Err(Error::Numerical("singular basis on reinversion".into()));
        }
        Ok(())
    }

    /// Reinverts and re-optimizes until the fresh tableau is optimal.
    fn polish(&mut self) -> Result<()> {
        let rhs = self.width() - 1;
        if !self.orig_valid {
            return Ok(());
        }
        for _ in 0..3 {
            if !self.reinvert() {
                return Err(Error::Numerical("singular basis on reinversion".into()));
            }
            let primal_bad = self.rows.iter().any(|row| row[rhs] < -self.cfg.feas_tol);
            let dual_bad = (0..self.kinds.len()).any(|j| self.allowed(j, false) && self.reduced[j] < -self.cfg.opt_tol);
            if !primal_bad && !dual_bad {
                return Ok(());
            }
            if primal_bad {
                self.dual()?;
            }
            self.primal(false)?;
        }
        Ok(())
    }

    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.kinds[self.basis[r]] == ColKind::Artificial {
                let j = (0..self.kinds.len())
                    .find(|&j| self.kinds[j] != ColKind::Artificial && self.rows[r][j].abs() > self.cfg.pivot_tol);
                match j {
                    Some(j) => self.pivot(r, j),
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        self.orig_valid = false;
                        continue;
                    }
                }
            }
            r += 1;
        }
        // Artificial columns stay in the tableau but can never enter again.
    }

    /// Appends `coeffs . x <= rhs` with a fresh slack, in canonical form.
    fn add_le_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        for row in self.rows.iter_mut().chain(self.orig.iter_mut()) {
            let last = row.pop().unwrap();
            row.push(0.0);
            row.push(last);
        }
        self.kinds.push(ColKind::Slack);
        self.reduced.push(0.0);
        self.cost.push(0.0);
        let w = self.width();
        let mut row = vec![0.0; w];
        for &(v, a) in coeffs {
            row[v] += a;
        }
        row[w - 2] = 1.0;
        row[w - 1] = rhs;
        self.orig.push(row.clone());
        for (q, other) in self.rows.iter().enumerate() {
            let b = self.basis[q];
            let f = row[b];
            if f != 0.0 {
                for t in 0..w {
                    row[t] -= f * other[t];
                }
                row[b] = 0.0;
            }
        }
        self.rows.push(row);
        self.basis.push(w - 2);
    }

    fn primal_point(&self) -> Vec<f64> {
        let rhs = self.width() - 1;
        let mut x = vec![0.0; self.n_orig];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_orig {
                x[b] = self.rows[r][rhs].max(0.0);
            }
        }
        x
    }
}

/// Cold solve, retried with larger pivot tolerances on numerical failure.
fn cold_solve(lp: &LinearProgram, cfg: LpConfig, pivots: usize) -> Result<Tableau> {
    let mut last = None;
    for scale in [1.0, 1e2, 1e3] {
        let mut t = Tableau::build(lp, LpConfig { pivot_tol: cfg.pivot_tol * scale, ..cfg });
        t.pivots = pivots;
        match t.solve(&lp.objective) {
            Ok(()) => {
                t.cfg = cfg;
                return Ok(t);
            }
            Err(Error::Numerical(msg)) => {
                debug!("cold solve failed ({msg}), raising pivot tolerance");
                last = Some(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(last.expect("at least one attempt")))
}

/// Solves `lp` from scratch.
pub fn solve_lp(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpSolution> {
    let t = cold_solve(lp, *cfg, 0)?;
    let x = t.primal_point();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, value, pivots: t.pivots })
}

/// An LP that can be re-optimized after appending `<=` rows.
pub struct IncrementalLp {
    lp: LinearProgram,
    tableau: Tableau,
}

impl IncrementalLp {
    pub fn new(lp: LinearProgram, cfg: &LpConfig) -> Result<IncrementalLp> {
        let tableau = cold_solve(&lp, *cfg, 0)?;
        Ok(IncrementalLp { lp, tableau })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn solution(&self) -> LpSolution {
        let x = self.tableau.primal_point();
        let value = self.lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpSolution { x, value, pivots: self.tableau.pivots }
    }

    /// Appends `coeffs . x <= rhs` and re-optimizes. Falls back to a cold
    /// solve if the warm start runs into numerical trouble.
    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) -> Result<LpSolution> {
        self.tableau.add_le_row(&coeffs, rhs);
        self.lp.add(coeffs, Cmp::Le, rhs);
        let warm = self.tableau.dual().and_then(|_| self.tableau.primal(false)).and_then(|_| self.tableau.polish());
        let ok = warm.is_ok()
            && self.lp.max_violation(&self.tableau.primal_point()) <= 1e-6;
        if !ok {
            debug!("warm start failed, re-solving from scratch");
            self.tableau = cold_solve(&self.lp, self.tableau.cfg, self.tableau.pivots)?;
        }
        Ok(self.solution())
    }
}

/// A fractional point of the regret polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    pub nf: usize,
    pub nc: usize,
    pub x: Vec<f64>,
    /// Row-major by facility: `y[i * nc + j]`.
    pub y: Vec<f64>,
    pub r: f64,
}

impl FractionalSolution {
    /// The integral point of a solution: every client fully assigned to its
    /// nearest open facility.
    pub fn from_solution(inst: &Instance, sol: &Solution, r: f64) -> FractionalSolution {
        let (nf, nc) = (inst.nf(), inst.nc());
        let mut x = vec![0.0; nf];
        let mut y = vec![0.0; nf * nc];
        for &i in sol.centers() {
            x[i] = 1.0;
        }
        for (j, a) in sol.assignment(inst).into_iter().enumerate() {
            if let Some(i) = a {
                y[i * nc + j] = 1.0;
            }
        }
        FractionalSolution { nf, nc, x, y, r }
    }

    #[inline]
    pub fn y(&self, i: usize, j: usize) -> f64 {
        self.y[i * self.nc + j]
    }

    /// `sum_i c_ij^p y_ij` for every client.
    pub fn fpp(&self, inst: &Instance, p: f64) -> Vec<f64> {
        (0..self.nc)
            .map(|j| (0..self.nf).map(|i| powp(inst.c(i, j), p) * self.y(i, j)).sum())
            .collect()
    }

    /// `sum_i c_ij y_ij` for every client.
    pub fn f(&self, inst: &Instance) -> Vec<f64> {
        self.fpp(inst, 1.0)
    }

    /// Largest violation of the base polytope constraints.
    pub fn base_violation(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        let sx: f64 = self.x.iter().sum();
        worst = worst.max(sx - k as f64);
        for i in 0..self.nf {
            worst = worst.max(-self.x[i]).max(self.x[i] - 1.0);
            for j in 0..self.nc {
                worst = worst.max(self.y(i, j) - self.x[i]).max(-self.y(i, j));
            }
        }
        for j in 0..self.nc {
            let s: f64 = (0..self.nf).map(|i| self.y(i, j)).sum();
            worst = worst.max(1.0 - s);
        }
        worst.max(-self.r)
    }
}

/// Where a cut came from; two cuts with equal provenance are duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct CutProvenance {
    pub adversary: Solution,
    /// Client multiplicities of the violated realization.
    pub realization: Vec<f64>,
    pub grid_y: Option<f64>,
    pub grid_m: Option<f64>,
}

/// Right-hand side `(base + r)^p`, convex in `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerShift {
    pub base: f64,
    pub p: f64,
}

/// `sum_ij y_coeffs[i*nc+j] y_ij + r_coeff r <= rhs`. With a `shift` the
/// right side is `(base + r)^p` instead and `rhs` holds its value at the
/// `r` the cut was generated for; such cuts are linear only once `r` is
/// fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut {
    pub y_coeffs: Vec<f64>,
    pub r_coeff: f64,
    pub rhs: f64,
    pub shift: Option<PowerShift>,
    pub provenance: CutProvenance,
}

impl Cut {
    pub fn lhs(&self, point: &FractionalSolution) -> f64 {
        self.y_coeffs.iter().zip(&point.y).map(|(a, y)| a * y).sum::<f64>() + self.r_coeff * point.r
    }

    pub fn rhs_at(&self, r: f64) -> f64 {
        match self.shift {
            Some(s) => (s.base + r).powf(s.p),
            None => self.rhs,
        }
    }

    /// Amount by which `point` violates the cut (negative when satisfied).
    pub fn violation(&self, point: &FractionalSolution) -> f64 {
        self.lhs(point) - self.rhs_at(point.r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation {
    Feasible,
    Cut(Cut),
    /// Several violated cuts, all added before the next solve.
    Cuts(Vec<Cut>),
}

impl Separation {
    pub fn from_cuts(mut cuts: Vec<Cut>) -> Separation {
        match cuts.len() {
            0 => Separation::Feasible,
            1 => Separation::Cut(cuts.pop().expect("one cut")),
            _ => Separation::Cuts(cuts),
        }
    }

    pub fn into_cuts(self) -> Vec<Cut> {
        match self {
            Separation::Feasible => Vec::new(),
            Separation::Cut(c) => vec![c],
            Separation::Cuts(cs) => cs,
        }
    }
}

/// Answers FEASIBLE or returns a violated valid inequality.
pub trait SeparationOracle {
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation>;
}

impl<F> SeparationOracle for F
where
    F: FnMut(&FractionalSolution) -> Result<Separation>,
{
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation> {
        self(point)
    }
}

/// Base polytope `sum x <= k`, `0 <= y_ij <= x_i <= 1`, `sum_i y_ij >= 1`,
/// `r >= 0`, minimizing `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretLp {
    pub nf: usize,
    pub nc: usize,
    pub k: usize,
    pub lp: LinearProgram,
}

impl RegretLp {
    pub fn new(nf: usize, nc: usize, k: usize) -> RegretLp {
        let n = nf + nf * nc + 1;
        let mut lp = LinearProgram::new(n);
        let r = n - 1;
        lp.objective[r] = 1.0;
        lp.add((0..nf).map(|i| (i, 1.0)).collect(), Cmp::Le, k as f64);
        for i in 0..nf {
            lp.add(vec![(i, 1.0)], Cmp::Le, 1.0);
        }
        for i in 0..nf {
            for j in 0..nc {
                lp.add(vec![(nf + i * nc + j, 1.0), (i, -1.0)], Cmp::Le, 0.0);
            }
        }
        for j in 0..nc {
            lp.add((0..nf).map(|i| (nf + i * nc + j, 1.0)).collect(), Cmp::Ge, 1.0);
        }
        RegretLp { nf, nc, k, lp }
    }

    pub fn for_instance(inst: &Instance) -> RegretLp {
        RegretLp::new(inst.nf(), inst.nc(), inst.k())
    }

    pub fn r_var(&self) -> usize {
        self.nf + self.nf * self.nc
    }

    pub fn point(&self, x: &[f64]) -> FractionalSolution {
        let clamp = |v: f64| v.clamp(0.0, 1.0);
        FractionalSolution {
            nf: self.nf,
            nc: self.nc,
            x: x[..self.nf].iter().map(|&v| clamp(v)).collect(),
            y: x[self.nf..self.nf + self.nf * self.nc].iter().map(|&v| clamp(v)).collect(),
            r: x[self.r_var()].max(0.0),
        }
    }

    /// [`RegretLp::cut_row`] and `rhs`, scaled so the largest coefficient
    /// has magnitude 1.
    pub fn scaled_cut_row(&self, cut: &Cut, rhs: f64) -> (Vec<(usize, f64)>, f64) {
        let mut row = self.cut_row(cut);
        let m = row.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        if m > 0.0 {
            for (_, a) in row.iter_mut() {
                *a /= m;
            }
            return (row, rhs / m);
        }
        (row, rhs)
    }

    pub fn cut_row(&self, cut: &Cut) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = cut
            .y_coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(t, &a)| (self.nf + t, a))
            .collect();
        if cut.r_coeff != 0.0 {
            row.push((self.r_var(), cut.r_coeff));
        }
        row
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuttingPlaneConfig {
    pub max_rounds: usize,
    pub lp: LpConfig,
    /// Bisection stops once the bracket on `r` is narrower than
    /// `r_tol (1 + r_max)`.
    pub r_tol: f64,
}

impl Default for CuttingPlaneConfig {
    fn default() -> CuttingPlaneConfig {
        CuttingPlaneConfig { max_rounds: 500, lp: LpConfig::default(), r_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuttingPlaneResult {
    pub point: FractionalSolution,
    /// LP solves performed.
    pub rounds: usize,
    pub cuts: Vec<Cut>,
    /// LP optimum after each round; for [`regret_bisection`] the upper end
    /// of the bracket after each step.
    pub objective_trace: Vec<f64>,
    /// The oracle repeated a cut the LP already holds; the iterate was
    /// accepted as feasible within tolerance.
    pub stalled: bool,
}

/// Minimizes `r` over the base polytope plus oracle cuts until the oracle
/// declares the iterate feasible.
pub fn cutting_plane(
    base: &RegretLp,
    oracle: &mut dyn SeparationOracle,
    cfg: &CuttingPlaneConfig,
) -> Result<CuttingPlaneResult> {
    let mut lp = IncrementalLp::new(base.lp.clone(), &cfg.lp)?;
    let mut sol = lp.solution();
    let mut cuts: Vec<Cut> = Vec::new();
    let mut trace = vec![sol.value];
    for round in 1..=cfg.max_rounds {
        let point = base.point(&sol.x);
        let batch = oracle.separate(&point)?.into_cuts();
        if batch.is_empty() {
            return Ok(CuttingPlaneResult { point, rounds: round, cuts, objective_trace: trace, stalled: false });
        }
        let mut fresh: Vec<Cut> = Vec::new();
        let mut repeated: Option<Cut> = None;
        for cut in batch {
            if cuts.iter().chain(&fresh).any(|c| c.provenance == cut.provenance) {
                repeated.get_or_insert(cut);
            } else {
                fresh.push(cut);
            }
        }
        if fresh.is_empty() {
            let cut = repeated.expect("non-empty batch");
            let v = cut.violation(&point);
            if v <= 1e-6 * (1.0 + cut.rhs_at(point.r).abs()) {
                warn!("oracle repeated a cut (violation {v:e}); accepting iterate");
                return Ok(CuttingPlaneResult { point, rounds: round, cuts, objective_trace: trace, stalled: true });
            }
            return Err(Error::Numerical(format!("oracle repeated a cut violated by {v:e} after it was added")));
        }
        let prev = sol.value;
        for cut in fresh {
            let (row, rhs) = base.scaled_cut_row(&cut, cut.rhs);
            sol = lp.add_le(row, rhs)?;
            cuts.push(cut);
        }
        debug!("round {round}: r = {} with {} cuts", sol.value, cuts.len());
        if sol.value < prev - 1e-7 * (1.0 + prev.abs()) {
            return Err(Error::Numerical(format!("LP objective decreased from {prev} to {}", sol.value)));
        }
        trace.push(sol.value);
    }
    Err(Error::Convergence { rounds: cfg.max_rounds, last_r: sol.value })
}

enum Probe {
    Feasible { point: FractionalSolution, stalled: bool },
    Infeasible,
}

/// Cutting plane on the feasibility problem with `r` fixed to `r0`. New cuts
/// are appended to `pool`.
fn probe_at(
    base: &RegretLp,
    oracle: &mut dyn SeparationOracle,
    r0: f64,
    pool: &mut Vec<Cut>,
    rounds: &mut usize,
    cfg: &CuttingPlaneConfig,
) -> Result<Probe> {
    let mut lp0 = base.lp.clone();
    lp0.add(vec![(base.r_var(), 1.0)], Cmp::Le, r0);
    for cut in pool.iter() {
        let (row, rhs) = base.scaled_cut_row(cut, cut.rhs_at(r0));
        lp0.add(row, Cmp::Le, rhs);
    }
    let mut lp = match IncrementalLp::new(lp0, &cfg.lp) {
        Ok(lp) => lp,
        Err(Error::Infeasible) => return Ok(Probe::Infeasible),
        Err(e) => return Err(e),
    };
    let mut sol = lp.solution();
    for _ in 0..cfg.max_rounds {
        *rounds += 1;
        let mut point = base.point(&sol.x);
        point.r = r0;
        let batch = oracle.separate(&point)?.into_cuts();
        if batch.is_empty() {
            return Ok(Probe::Feasible { point, stalled: false });
        }
        let (fresh, repeated): (Vec<Cut>, Vec<Cut>) =
            batch.into_iter().partition(|cut| !pool.iter().any(|c| c.provenance == cut.provenance));
        if fresh.is_empty() {
            let cut = &repeated[0];
            let v = cut.violation(&point);
            if v <= 1e-6 * (1.0 + cut.rhs_at(r0).abs()) {
                warn!("oracle repeated a cut (violation {v:e}); accepting iterate at r = {r0}");
                return Ok(Probe::Feasible { point, stalled: true });
            }
            return Err(Error::Numerical(format!("oracle repeated a cut violated by {v:e} after it was added")));
        }
        for cut in fresh {
            let (row, rhs) = base.scaled_cut_row(&cut, cut.rhs_at(r0));
            pool.push(cut);
            match lp.add_le(row, rhs) {
                Ok(s) => sol = s,
                Err(Error::Infeasible) => return Ok(Probe::Infeasible),
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::Convergence { rounds: cfg.max_rounds, last_r: r0 })
}

/// Minimizes `r` by bisection when the cuts are only linear for fixed `r`.
/// Each step runs a feasibility cutting plane at the midpoint; cuts are kept
/// across steps and re-evaluated at the new `r`. `r_max` must be a value at
/// which the oracle accepts any point of the base polytope.
pub fn regret_bisection(
    base: &RegretLp,
    oracle: &mut dyn SeparationOracle,
    r_max: f64,
    cfg: &CuttingPlaneConfig,
) -> Result<CuttingPlaneResult> {
    let mut pool = Vec::new();
    let mut rounds = 0;
    let done = |point, stalled, pool, rounds, trace| CuttingPlaneResult { point, rounds, cuts: pool, objective_trace: trace, stalled };
    if let Probe::Feasible { point, stalled } = probe_at(base, oracle, 0.0, &mut pool, &mut rounds, cfg)? {
        return Ok(done(point, stalled, pool, rounds, vec![0.0]));
    }
    let mut hi = r_max.max(0.0);
    let (mut best, mut best_stalled) = match probe_at(base, oracle, hi, &mut pool, &mut rounds, cfg)? {
        Probe::Feasible { point, stalled } => (point, stalled),
        Probe::Infeasible => return Err(Error::Contract(format!("oracle rejects r_max = {r_max}"))),
    };
    let mut lo = 0.0;
    let mut trace = vec![hi];
    let tol = cfg.r_tol * (1.0 + hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match probe_at(base, oracle, mid, &mut pool, &mut rounds, cfg)? {
            Probe::Feasible { point, stalled } => {
                hi = mid;
                best = point;
                best_stalled = stalled;
            }
            Probe::Infeasible => lo = mid,
        }
        debug!("bisection bracket [{lo}, {hi}] with {} cuts", pool.len());
        trace.push(hi);
    }
    Ok(done(best, best_stalled, pool, rounds, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add(vec![(0, 1.0), (1, 2.0)], Cmp::Le, 4.0);
        lp.add(vec![(0, 3.0), (1, 1.0)], Cmp::Le, 6.0);
        let s = solve_lp(&lp, &LpConfig::default()).unwrap();
        assert!((s.value + 2.8).abs() < 1e-9);
        assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn ge_and_eq_rows() {
        // min x + y  s.t. x + y >= 2, x - y = 1
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Cmp::Ge, 2.0);
        lp.add(vec![(0, 1.0), (1, -1.0)], Cmp::Eq, 1.0);
        let s = solve_lp(&lp, &LpConfig::default()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!((s.x[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, 1.0)], Cmp::Le, -1.0);
        assert!(matches!(solve_lp(&lp, &LpConfig::default()), Err(Error::Infeasible)));
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        assert!(matches!(solve_lp(&lp, &LpConfig::default()), Err(Error::Unbounded)));
    }

    #[test]
    fn warm_start_matches_cold_solve() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Cmp::Le, 4.0);
        let mut inc = IncrementalLp::new(lp.clone(), &LpConfig::default()).unwrap();
        let s = inc.add_le(vec![(1, 1.0)], 1.5).unwrap();
        lp.add(vec![(1, 1.0)], Cmp::Le, 1.5);
        let cold = solve_lp(&lp, &LpConfig::default()).unwrap();
        assert!((s.value - cold.value).abs() < 1e-9);
        assert!((s.value + 5.5).abs() < 1e-9);
    }

    #[test]
    fn always_feasible_oracle_stops_after_one_round() {
        let base = RegretLp::new(2, 3, 1);
        let mut oracle = |_: &FractionalSolution| Ok(Separation::Feasible);
        let res = cutting_plane(&base, &mut oracle, &CuttingPlaneConfig::default()).unwrap();
        assert_eq!(res.rounds, 1);
        assert_eq!(res.point.r, 0.0);
        assert!(res.point.base_violation(1) <= 1e-8);
    }

    #[test]
    fn round_limit_is_a_convergence_error() {
        let base = RegretLp::new(1, 1, 1);
        let mut n = 0.0;
        let mut oracle = |_: &FractionalSolution| {
            n += 1.0;
            Ok(Separation::Cut(Cut {
                y_coeffs: vec![0.0],
                r_coeff: -1.0,
                rhs: -n,
                shift: None,
                provenance: CutProvenance {
                    adversary: Solution::new(vec![0]),
                    realization: vec![n],
                    grid_y: None,
                    grid_m: None,
                },
            }))
        };
        let cfg = CuttingPlaneConfig { max_rounds: 5, ..Default::default() };
        assert!(matches!(cutting_plane(&base, &mut oracle, &cfg), Err(Error::Convergence { rounds: 5, .. })));
    }
}
