//! Brute-force ground truth: optimal costs, exact regret and the
//! minimum-regret solution by enumeration.
//!
//! Realizations always contain every fixed client; the remaining clients are
//! enumerated as bitmasks over [`Instance::free_clients`].

use std::cell::OnceCell;

use crate::error::{Error, Result};
use crate::model::{powp, rootp, CostVector, Instance, Objective, Realization, Solution};

/// Default bound on evaluated (solution, realization) pairs.
pub const DEFAULT_CAP: u128 = 1_000_000;

/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "UNICLUST_CAP";

/// The enumeration cap, honouring `UNICLUST_CAP` when it parses.
pub fn cap_from_env() -> u128 {
    std::env::var(CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v >= 1.0)
        .map(|v| v as u128)
        .unwrap_or(DEFAULT_CAP)
}

pub fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for t in 0..k {
        r = r * (n - t) as u128 / (t + 1) as u128;
    }
    r
}

/// All `k`-subsets of `0..n` in lexicographic order.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Combinations {
        Combinations { n, cur: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut t = k;
        loop {
            if t == 0 {
                self.done = true;
                break;
            }
            t -= 1;
            if self.cur[t] < self.n - k + t {
                self.cur[t] += 1;
                for u in t + 1..k {
                    self.cur[u] = self.cur[u - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Outcome of an exact regret computation.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub regret: f64,
    pub realization: Realization,
    /// An optimal solution for `realization`.
    pub adversary: Solution,
    /// The evaluated solution, when the costs came from one.
    pub solution: Option<Solution>,
}

/// Result of checking `SOL(C') <= alpha OPT(C') + beta MR` on every realization.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// Largest `SOL - alpha OPT - beta MR` over realizations.
    pub worst_excess: f64,
    pub worst_realization: Realization,
    /// Largest `(SOL - beta MR) / OPT` over realizations with `OPT > 0`.
    pub max_ratio: f64,
}

#[derive(Clone, Copy, Debug)]
enum Agg {
    Sum(f64),
    Max,
}

struct OptTable {
    /// Aggregated (pre-root) optimum per free-client mask.
    best: Vec<f64>,
    arg: Vec<u32>,
}

/// Enumeration oracle for one instance and objective.
pub struct ExactOracle<'a> {
    inst: &'a Instance,
    objective: Objective,
    cap: u128,
    free: Vec<usize>,
    solutions: Vec<Solution>,
    table: OnceCell<OptTable>,
}

impl<'a> ExactOracle<'a> {
    /// Builds the oracle for `objective` with the cap from the environment.
    pub fn new(inst: &'a Instance, objective: Objective) -> Result<ExactOracle<'a>> {
        ExactOracle::with_cap(inst, objective, cap_from_env())
    }

    pub fn with_cap(inst: &'a Instance, objective: Objective, cap: u128) -> Result<ExactOracle<'a>> {
        inst.ensure_valid()?;
        let n_sol = binom(inst.nf(), inst.k());
        if n_sol > cap {
            return Err(Error::CapExceeded { required: n_sol, cap });
        }
        let solutions = Combinations::new(inst.nf(), inst.k()).map(Solution::new).collect();
        Ok(ExactOracle {
            inst,
            objective,
            cap,
            free: inst.free_clients(),
            solutions,
            table: OnceCell::new(),
        })
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Every size-`k` solution in lexicographic order.
    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    /// Number of realizations (`2^|C \ C_f|`).
    pub fn n_realizations(&self) -> u128 {
        1u128 << self.free.len().min(127)
    }

    fn agg(&self) -> Agg {
        match self.objective {
            Objective::Lp(p) | Objective::Lpp(p) => Agg::Sum(p),
            Objective::Center => Agg::Max,
        }
    }

    #[inline]
    fn term(&self, j: usize, c: f64) -> f64 {
        match self.agg() {
            Agg::Sum(p) => self.inst.weight(j) * powp(c, p),
            Agg::Max => c,
        }
    }

    #[inline]
    fn combine(&self, a: f64, b: f64) -> f64 {
        match self.agg() {
            Agg::Sum(_) => a + b,
            Agg::Max => a.max(b),
        }
    }

    #[inline]
    fn finish(&self, v: f64) -> f64 {
        match self.objective {
            Objective::Lp(p) => rootp(v.max(0.0), p),
            _ => v,
        }
    }

    /// Whether the inner maximization over realizations has a closed form.
    fn closed_form(&self) -> bool {
        match self.objective {
            Objective::Lp(p) => p == 1.0,
            Objective::Lpp(_) => true,
            Objective::Center => self.inst.fixed_clients().is_empty(),
        }
    }

    pub fn realization_of_mask(&self, mask: u64) -> Realization {
        let mut v: Vec<usize> = self.inst.fixed_clients().to_vec();
        for (t, &j) in self.free.iter().enumerate() {
            if mask >> t & 1 == 1 {
                v.push(j);
            }
        }
        Realization::new(v)
    }

    fn check_cap(&self, required: u128) -> Result<()> {
        if required > self.cap {
            Err(Error::CapExceeded { required, cap: self.cap })
        } else {
            Ok(())
        }
    }

    fn table_cost(&self) -> u128 {
        if self.free.len() >= 64 {
            return u128::MAX;
        }
        (self.solutions.len() as u128).saturating_mul(1u128 << self.free.len())
    }

    /// Aggregated cost of `costs` on every mask, with fixed clients included.
    fn mask_values(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.free.len();
        let mut base = match self.agg() {
            Agg::Sum(_) => 0.0,
            Agg::Max => 0.0,
        };
        for &j in self.inst.fixed_clients() {
            base = self.combine(base, self.term(j, costs[j]));
        }
        let terms: Vec<f64> = self.free.iter().map(|&j| self.term(j, costs[j])).collect();
        let mut vals = vec![0.0; 1usize << m];
        vals[0] = base;
        for mask in 1usize..1 << m {
            let low = mask.trailing_zeros() as usize;
            vals[mask] = self.combine(vals[mask & (mask - 1)], terms[low]);
        }
        vals
    }

    fn table(&self) -> Result<&OptTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        self.check_cap(self.table_cost())?;
        let size = 1usize << self.free.len();
        let mut best = vec![f64::INFINITY; size];
        let mut arg = vec![0u32; size];
        for (s, sol) in self.solutions.iter().enumerate() {
            let vals = self.mask_values(&sol.costs(self.inst));
            for mask in 0..size {
                if vals[mask] < best[mask] {
                    best[mask] = vals[mask];
                    arg[mask] = s as u32;
                }
            }
        }
        Ok(self.table.get_or_init(|| OptTable { best, arg }))
    }

    /// Optimal cost on `real`, ties to the lexicographically first solution.
    pub fn opt_cost(&self, real: &Realization) -> Result<(f64, Solution)> {
        let mut best: Option<(f64, usize)> = None;
        for (s, sol) in self.solutions.iter().enumerate() {
            let costs = sol.costs(self.inst);
            let mut v = match self.agg() {
                Agg::Sum(_) | Agg::Max => 0.0,
            };
            for &j in real.clients() {
                v = self.combine(v, self.term(j, costs[j]));
            }
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, s));
            }
        }
        let (v, s) = best.ok_or_else(|| Error::Internal("no solutions".into()))?;
        Ok((self.finish(v), self.solutions[s].clone()))
    }

    /// Optimal cost of every realization, indexed by free-client mask.
    pub fn opt_values(&self) -> Result<Vec<f64>> {
        let t = self.table()?;
        Ok(t.best.iter().map(|&v| self.finish(v)).collect())
    }

    /// Objective value of `costs` on every realization, indexed by mask.
    pub fn values(&self, costs: &[f64]) -> Vec<f64> {
        self.mask_values(costs).into_iter().map(|v| self.finish(v)).collect()
    }

    /// `max_{C' >= C_f} [cost(C') - OPT(C')]` for a per-client cost vector.
    pub fn exact_regret(&self, costs: &[f64]) -> Result<RegretReport> {
        if costs.len() != self.inst.nc() {
            return Err(Error::Precondition(format!(
                "cost vector has {} entries for {} clients",
                costs.len(),
                self.inst.nc()
            )));
        }
        if self.closed_form() {
            self.check_cap(self.solutions.len() as u128)?;
            self.regret_closed_form(costs)
        } else {
            let t = self.table()?;
            self.regret_from_table(t, costs)
        }
    }

    pub fn regret_of(&self, sol: &Solution) -> Result<RegretReport> {
        let mut r = self.exact_regret(&sol.costs(self.inst))?;
        r.solution = Some(sol.clone());
        Ok(r)
    }

    fn regret_closed_form(&self, costs: &[f64]) -> Result<RegretReport> {
        let inst = self.inst;
        if let Objective::Center = self.objective {
            // Without fixed clients a single client is always a worst case.
            let mut best = (0.0, None);
            for j in 0..inst.nc() {
                let gap = costs[j] - inst.nearest_facility(j).1;
                if gap > best.0 {
                    best = (gap, Some(j));
                }
            }
            let real = Realization::new(best.1.into_iter().collect());
            let (opt, adversary) = self.opt_cost(&real)?;
            let sol = real.clients().iter().map(|&j| costs[j]).fold(0.0, f64::max);
            return Ok(RegretReport { regret: sol - opt, realization: real, adversary, solution: None });
        }
        let p = match self.objective {
            Objective::Lp(p) | Objective::Lpp(p) => p,
            Objective::Center => unreachable!(),
        };
        let own: Vec<f64> = (0..inst.nc()).map(|j| inst.weight(j) * powp(costs[j], p)).collect();
        let mut best: Option<(f64, usize)> = None;
        for (s, sol) in self.solutions.iter().enumerate() {
            let sc = sol.costs(inst);
            let mut v = 0.0;
            for j in 0..inst.nc() {
                let d = own[j] - inst.weight(j) * powp(sc[j], p);
                if inst.is_fixed(j) || d > 0.0 {
                    v += d;
                }
            }
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, s));
            }
        }
        let (_, s) = best.ok_or_else(|| Error::Internal("no solutions".into()))?;
        let adv = &self.solutions[s];
        let sc = adv.costs(inst);
        let real = Realization::new(
            (0..inst.nc())
                .filter(|&j| inst.is_fixed(j) || own[j] > inst.weight(j) * powp(sc[j], p))
                .collect(),
        );
        let regret: f64 = real
            .clients()
            .iter()
            .map(|&j| own[j] - inst.weight(j) * powp(sc[j], p))
            .sum::<f64>()
            + 0.0;
        Ok(RegretReport { regret, realization: real, adversary: adv.clone(), solution: None })
    }

    fn regret_from_table(&self, t: &OptTable, costs: &[f64]) -> Result<RegretReport> {
        let vals = self.mask_values(costs);
        let mut best: Option<(f64, usize)> = None;
        for mask in 0..vals.len() {
            let r = self.finish(vals[mask]) - self.finish(t.best[mask]);
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, mask));
            }
        }
        let (regret, mask) = best.ok_or_else(|| Error::Internal("no realizations".into()))?;
        Ok(RegretReport {
            regret,
            realization: self.realization_of_mask(mask as u64),
            adversary: self.solutions[t.arg[mask] as usize].clone(),
            solution: None,
        })
    }

    /// The size-`k` solution of least exact regret, ties lexicographic.
    pub fn minimum_regret(&self) -> Result<RegretReport> {
        let c = self.solutions.len() as u128;
        if self.closed_form() {
            self.check_cap(c.saturating_mul(c))?;
        } else {
            self.check_cap(self.table_cost())?;
        }
        let mut best: Option<RegretReport> = None;
        for sol in &self.solutions {
            let r = self.regret_of(sol)?;
            if best.as_ref().is_none_or(|b| r.regret < b.regret) {
                best = Some(r);
            }
        }
        best.ok_or_else(|| Error::Internal("no solutions".into()))
    }

    /// `min_S sum_j w_j (c_j(S)^p - r_j^p)^+` over size-`k` solutions.
    pub fn discounted_opt(&self, discounts: &[f64], p: f64) -> Result<(f64, Solution)> {
        let inst = self.inst;
        let mut best: Option<(f64, usize)> = None;
        for (s, sol) in self.solutions.iter().enumerate() {
            let v = discounted_cost(inst, &sol.costs(inst), discounts, p, 1.0);
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, s));
            }
        }
        let (v, s) = best.ok_or_else(|| Error::Internal("no solutions".into()))?;
        Ok((v, self.solutions[s].clone()))
    }

    /// Checks `SOL(C') <= alpha OPT(C') + beta mr + tol` on every realization.
    pub fn check_bound(&self, costs: &[f64], alpha: f64, beta: f64, mr: f64, tol: f64) -> Result<BoundCheck> {
        let t = self.table()?;
        let vals = self.mask_values(costs);
        let mut worst = (f64::NEG_INFINITY, 0usize);
        let mut max_ratio = 0.0f64;
        for mask in 0..vals.len() {
            let sol = self.finish(vals[mask]);
            let opt = self.finish(t.best[mask]);
            let excess = sol - alpha * opt - beta * mr;
            if excess > worst.0 {
                worst = (excess, mask);
            }
            if opt > 0.0 {
                max_ratio = max_ratio.max((sol - beta * mr) / opt);
            }
        }
        Ok(BoundCheck {
            holds: worst.0 <= tol,
            worst_excess: worst.0,
            worst_realization: self.realization_of_mask(worst.1 as u64),
            max_ratio,
        })
    }
}

/// `sum_j w_j (c_j^p - (scale r_j)^p)^+` over all clients.
pub fn discounted_cost(inst: &Instance, costs: &[f64], discounts: &[f64], p: f64, scale: f64) -> f64 {
    (0..inst.nc())
        .map(|j| inst.weight(j) * (powp(costs[j], p) - powp(scale * discounts[j], p)).max(0.0))
        .sum()
}

/// Optimal cost of `real` under `objective`.
pub fn opt_cost(inst: &Instance, real: &Realization, objective: Objective) -> Result<(f64, Solution)> {
    ExactOracle::new(inst, objective)?.opt_cost(real)
}

/// Exact regret of a cost vector under `objective`.
pub fn exact_regret(inst: &Instance, costs: &CostVector, objective: Objective) -> Result<RegretReport> {
    ExactOracle::new(inst, objective)?.exact_regret(costs)
}

/// Minimum-regret solution under `objective`.
pub fn minimum_regret(inst: &Instance, objective: Objective) -> Result<RegretReport> {
    ExactOracle::new(inst, objective)?.minimum_regret()
}

/// Optimal discounted cost in the `p`-th power form.
pub fn discounted_opt(inst: &Instance, discounts: &[f64], p: f64) -> Result<(f64, Solution)> {
    ExactOracle::new(inst, Objective::Lpp(p))?.discounted_opt(discounts, p)
}
