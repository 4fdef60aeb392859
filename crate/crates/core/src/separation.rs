//! Approximate separation oracles for the regret constraints.
//!
//! Given an LP iterate `(x, y, r)`, each oracle either certifies that the
//! iterate is approximately feasible or returns a violated inequality that is
//! valid for every point of the exact regret polytope.

use std::collections::HashMap;

use crate::discounts::{approx_factor_pp, clustering_approx, incremental_clustering_approx, ClusterProblem};
use crate::error::{Error, Result};
use crate::lp::{Cut, CutProvenance, FractionalSolution, PowerShift, Separation, SeparationOracle};
use crate::model::{powp, rootp, Instance, Solution};
use crate::submodular::{greedy_cardinality, FnSetFunction, SetFunction};

/// Default grid accuracy.
pub const DEFAULT_EPS: f64 = 0.05;

/// The `Y` grid accuracy matched to `eps`: `eps (e - 1) / (p e)`.
pub fn default_eps_prime(eps: f64, p: f64) -> f64 {
    let e = std::f64::consts::E;
    eps * (e - 1.0) / (p * e)
}

/// Minimum violation for a cut to be emitted.
pub fn cut_tolerance(value: f64, r: f64) -> f64 {
    1e-7 * (1.0 + value.abs().max(r.abs()))
}

/// `min_{i in set} c_ij^p` for every client; infinite for the empty set.
pub fn set_costs_pp(inst: &Instance, set: &[usize], p: f64) -> Vec<f64> {
    (0..inst.nc())
        .map(|j| set.iter().map(|&i| powp(inst.c(i, j), p)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// `f_y(S) = sum_{j not fixed} w_j (fpp_j - min_{i in S} c_ij^p)^+` and the
/// clients with a positive term.
pub fn f_y(inst: &Instance, fpp: &[f64], p: f64, set: &[usize]) -> (f64, Vec<usize>) {
    let sp = set_costs_pp(inst, set, p);
    let mut value = 0.0;
    let mut witness = Vec::new();
    for j in 0..inst.nc() {
        if inst.is_fixed(j) {
            continue;
        }
        let gap = fpp[j] - sp[j];
        if gap > 0.0 {
            value += inst.weight(j) * gap;
            witness.push(j);
        }
    }
    (value, witness)
}

/// Fractional knapsack over `(value, weight)` items. Only positive-value
/// items are taken: zero-weight ones first, then by value density, ties by
/// index. Returns the multiplicities and the total value.
pub fn fractional_knapsack(items: &[(f64, f64)], capacity: f64) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..items.len()).filter(|&t| items[t].0 > 0.0).collect();
    order.sort_by(|&a, &b| {
        let (va, wa) = items[a];
        let (vb, wb) = items[b];
        let za = wa <= 0.0;
        let zb = wb <= 0.0;
        zb.cmp(&za)
            .then_with(|| if za && zb { std::cmp::Ordering::Equal } else { (vb * wa).total_cmp(&(va * wb)) })
            .then(a.cmp(&b))
    });
    let mut d = vec![0.0; items.len()];
    let mut left = capacity;
    let mut value = 0.0;
    for t in order {
        let (v, w) = items[t];
        if w <= 0.0 {
            d[t] = 1.0;
            value += v;
            continue;
        }
        if left <= 0.0 {
            break;
        }
        let take = (left / w).min(1.0);
        d[t] = take;
        value += take * v;
        left -= take * w;
        if take < 1.0 {
            break;
        }
    }
    (d, value)
}

/// Best fractional realization against `set` with `sum_{j free} d_j w_j
/// fpp_j <= capacity`. Fixed clients are preloaded at `d_j = 1` and do not
/// count toward the value or the capacity.
pub fn knapsack_adversary(inst: &Instance, fpp: &[f64], sp: &[f64], capacity: f64) -> (Vec<f64>, f64) {
    let free = inst.free_clients();
    let items: Vec<(f64, f64)> = free
        .iter()
        .map(|&j| (inst.weight(j) * (fpp[j] - sp[j]), inst.weight(j) * fpp[j]))
        .collect();
    let (df, value) = fractional_knapsack(&items, capacity);
    let mut d = vec![0.0; inst.nc()];
    for &j in inst.fixed_clients() {
        d[j] = 1.0;
    }
    for (t, &j) in free.iter().enumerate() {
        d[j] = df[t];
    }
    (d, value)
}

/// `(sum_j d_j w_j fpp_j)^(1/p) - (sum_j d_j w_j sp_j)^(1/p)`: the `l_p`
/// regret of a fractional solution against `sp` on multiplicities `d`.
pub fn fractional_lp_gap(inst: &Instance, fpp: &[f64], sp: &[f64], d: &[f64], p: f64) -> f64 {
    let a: f64 = (0..inst.nc()).map(|j| d[j] * inst.weight(j) * fpp[j]).sum();
    let b: f64 = (0..inst.nc()).map(|j| d[j] * inst.weight(j) * sp[j]).sum();
    rootp(a, p) - rootp(b, p)
}

/// The `Y` grid `c_min (1 + eps')^t` up to `c_max`, computed over the
/// non-fixed clients. `0` is prepended when a non-fixed client has zero
/// fractional cost.
pub fn y_grid(inst: &Instance, fpp: &[f64], p: f64, eps_prime: f64) -> Vec<f64> {
    let free = inst.free_clients();
    let mut c_min = f64::INFINITY;
    let mut c_max = 0.0;
    for &j in &free {
        let mut mx = 0.0f64;
        for i in 0..inst.nf() {
            let c = powp(inst.c(i, j), p);
            if c > 0.0 {
                c_min = c_min.min(c);
            }
            mx = mx.max(c);
        }
        c_max += inst.weight(j) * mx;
    }
    let mut grid = Vec::new();
    if free.iter().any(|&j| fpp[j] == 0.0) {
        grid.push(0.0);
    }
    if c_min.is_finite() && c_max > 0.0 {
        let steps = ((c_max / c_min).ln() / eps_prime.ln_1p()).ceil().max(0.0) as usize;
        for t in 0..=steps {
            grid.push(c_min * (1.0 + eps_prime).powi(t as i32));
        }
    }
    grid
}

fn greedy_on<F: Fn(&[usize]) -> f64>(nf: usize, k: usize, f: F) -> Vec<usize> {
    greedy_cardinality(&FnSetFunction { n: nf, f }, k)
}

fn require_no_fixed(inst: &Instance) -> Result<()> {
    if inst.fixed_clients().is_empty() {
        Ok(())
    } else {
        Err(Error::Precondition("oracle requires an instance without fixed clients".into()))
    }
}

/// Cut `sum_{j in C'} w_j sum_i c_ij^p y_ij - r <= S(C')` (in `p`-th power
/// costs). `extra` clients are added to `C'`, `rhs_extra` to the right side.
fn sum_cut(inst: &Instance, p: f64, clients: &[usize], sp: &[f64], adversary: &[usize], rhs_extra: f64, grid_m: Option<f64>) -> Cut {
    let (nf, nc) = (inst.nf(), inst.nc());
    let mut y = vec![0.0; nf * nc];
    let mut d = vec![0.0; nc];
    let mut rhs = rhs_extra;
    for &j in clients {
        d[j] = 1.0;
        let w = inst.weight(j);
        for i in 0..nf {
            y[i * nc + j] += w * powp(inst.c(i, j), p);
        }
    }
    for &j in clients {
        if sp[j].is_finite() {
            rhs += inst.weight(j) * sp[j];
        }
    }
    Cut {
        y_coeffs: y,
        r_coeff: -1.0,
        rhs,
        shift: None,
        provenance: CutProvenance {
            adversary: Solution::new(adversary.to_vec()),
            realization: d,
            grid_y: None,
            grid_m,
        },
    }
}

/// Cut `(sum_j d_j w_j (fpp_j - sp_j)) / div <= r`.
#[allow(clippy::too_many_arguments)]
fn knapsack_cut(inst: &Instance, p: f64, d: &[f64], sp: &[f64], div: f64, adversary: &[usize], grid_y: f64, grid_m: Option<f64>) -> Cut {
    let (nf, nc) = (inst.nf(), inst.nc());
    let mut y = vec![0.0; nf * nc];
    let mut rhs = 0.0;
    for j in 0..nc {
        if d[j] == 0.0 {
            continue;
        }
        let w = d[j] * inst.weight(j) / div;
        for i in 0..nf {
            y[i * nc + j] = w * powp(inst.c(i, j), p);
        }
        rhs += w * sp[j];
    }
    Cut {
        y_coeffs: y,
        r_coeff: -1.0,
        rhs,
        shift: None,
        provenance: CutProvenance {
            adversary: Solution::new(adversary.to_vec()),
            realization: d.to_vec(),
            grid_y: Some(grid_y),
            grid_m,
        },
    }
}

/// Cut `sum_j d_j w_j sum_i c_ij^p y_ij <= ((sum_j d_j w_j sp_j)^(1/p) + r)^p`,
/// generated at `r`.
#[allow(clippy::too_many_arguments)]
fn power_cut(inst: &Instance, p: f64, d: &[f64], sp: &[f64], r: f64, adversary: &[usize], grid_y: f64, grid_m: Option<f64>) -> Cut {
    let (nf, nc) = (inst.nf(), inst.nc());
    let mut y = vec![0.0; nf * nc];
    let mut b = 0.0;
    for j in 0..nc {
        if d[j] == 0.0 {
            continue;
        }
        let w = d[j] * inst.weight(j);
        for i in 0..nf {
            y[i * nc + j] = w * powp(inst.c(i, j), p);
        }
        b += w * sp[j];
    }
    let shift = PowerShift { base: rootp(b, p), p };
    Cut {
        y_coeffs: y,
        r_coeff: 0.0,
        rhs: (shift.base + r).powf(p),
        shift: Some(shift),
        provenance: CutProvenance {
            adversary: Solution::new(adversary.to_vec()),
            realization: d.to_vec(),
            grid_y: Some(grid_y),
            grid_m,
        },
    }
}

/// Greedy over `f_y`: emits a cut when the greedy adversary's regret exceeds
/// `r`. With `p != 1` the costs are `c^p` throughout.
pub fn kmedian_separate(inst: &Instance, frac: &FractionalSolution, p: f64) -> Result<Separation> {
    require_no_fixed(inst)?;
    let fpp = frac.fpp(inst, p);
    let s = greedy_on(inst.nf(), inst.k(), |set| f_y(inst, &fpp, p, set).0);
    let (value, witness) = f_y(inst, &fpp, p, &s);
    if value - frac.r > cut_tolerance(value, frac.r) {
        let sp = set_costs_pp(inst, &s, p);
        return Ok(Separation::Cut(sum_cut(inst, p, &witness, &sp, &s, 0.0, None)));
    }
    Ok(Separation::Feasible)
}

/// Most violated cuts of a batch, at most [`MAX_BATCH`].
fn strongest(mut cuts: Vec<Cut>, frac: &FractionalSolution) -> Vec<Cut> {
    cuts.sort_by(|a, b| b.violation(frac).total_cmp(&a.violation(frac)));
    cuts.truncate(MAX_BATCH);
    cuts
}

pub const MAX_BATCH: usize = 1;

fn divisor(p: f64, y: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else {
        p * y.powf(1.0 - 1.0 / p)
    }
}

/// The cut for one grid cell if the iterate violates it: the knapsack cut at
/// `p = 1`, otherwise a power cut emitted when the `l_p` gap on `d` exceeds
/// `r` (the gap dominates `gain / div` inside the cell).
#[allow(clippy::too_many_arguments)]
fn grid_cut(
    inst: &Instance,
    frac: &FractionalSolution,
    p: f64,
    fpp: &[f64],
    d: &[f64],
    sp: &[f64],
    div: f64,
    adversary: &[usize],
    cap: f64,
    grid_m: Option<f64>,
) -> Option<Cut> {
    if p == 1.0 {
        let value: f64 = (0..inst.nc()).map(|j| d[j] * inst.weight(j) * (fpp[j] - sp[j])).sum::<f64>() / div;
        (value - frac.r > cut_tolerance(value, frac.r)).then(|| knapsack_cut(inst, p, d, sp, div, adversary, cap, grid_m))
    } else {
        let gap = fractional_lp_gap(inst, fpp, sp, d, p);
        (gap - frac.r > cut_tolerance(gap, frac.r)).then(|| power_cut(inst, p, d, sp, frac.r, adversary, cap, grid_m))
    }
}

/// Grid over the fractional-cost budget `Y`; for each cell, greedy over the
/// knapsack adversary and an `l_p` regret check. At `p = 1` the
/// grid collapses to a single unbounded cell.
pub fn lp_separate(inst: &Instance, frac: &FractionalSolution, p: f64, eps_prime: f64) -> Result<Separation> {
    require_no_fixed(inst)?;
    let fpp = frac.fpp(inst, p);
    let grid = if p == 1.0 { vec![f64::INFINITY] } else { y_grid(inst, &fpp, p, eps_prime) };
    let mut cuts = Vec::new();
    for &cap in &grid {
        let div = divisor(p, cap);
        if !(div > 0.0 && div.is_finite()) {
            continue;
        }
        let s = greedy_on(inst.nf(), inst.k(), |set| {
            knapsack_adversary(inst, &fpp, &set_costs_pp(inst, set, p), cap).1
        });
        let sp = set_costs_pp(inst, &s, p);
        let (d, _) = knapsack_adversary(inst, &fpp, &sp, cap);
        if let Some(cut) = grid_cut(inst, frac, p, &fpp, &d, &sp, div, &s, cap, None) {
            cuts.push(cut);
        }
    }
    Ok(Separation::from_cuts(strongest(cuts, frac)))
}

/// State shared by the fixed-client oracles across cutting-plane rounds:
/// the approximate solution `T0` on the fixed clients and a cache of
/// incremental clusterings (which do not depend on the LP iterate).
pub struct FixedContext<'a> {
    inst: &'a Instance,
    p: f64,
    t0: Vec<usize>,
    t0_cost: f64,
    memo: HashMap<(Vec<usize>, Vec<usize>), Vec<usize>>,
    pub greedy_runs: usize,
    pub incremental_calls: usize,
}

impl<'a> FixedContext<'a> {
    /// `p` is the exponent of the `l_p` cost on fixed clients.
    pub fn new(inst: &'a Instance, p: f64) -> Result<FixedContext<'a>> {
        let fixed = inst.fixed_clients().to_vec();
        let t0 = if fixed.is_empty() {
            (0..inst.k()).collect()
        } else {
            let all: Vec<usize> = (0..inst.nf()).collect();
            let prob = ClusterProblem::restricted(inst, &all, &fixed, inst.k());
            pad_to_k(inst.k(), &all, clustering_approx(&prob, p)?)
        };
        let mut ctx = FixedContext {
            inst,
            p,
            t0: Vec::new(),
            t0_cost: 0.0,
            memo: HashMap::new(),
            greedy_runs: 0,
            incremental_calls: 0,
        };
        ctx.t0_cost = ctx.fixed_cost(&t0);
        ctx.t0 = t0;
        Ok(ctx)
    }

    pub fn t0(&self) -> &[usize] {
        &self.t0
    }

    /// `l_p` cost factor of the clustering approximation.
    pub fn gamma(&self) -> f64 {
        rootp(approx_factor_pp(self.p), self.p)
    }

    /// `(sum_{j in C_f} w_j d(j, set)^p)^(1/p)`.
    pub fn fixed_cost(&self, set: &[usize]) -> f64 {
        let inst = self.inst;
        let s: f64 = inst
            .fixed_clients()
            .iter()
            .map(|&j| {
                let d = set.iter().map(|&i| inst.c(i, j)).fold(f64::INFINITY, f64::min);
                inst.weight(j) * powp(d, self.p)
            })
            .sum();
        rootp(s, self.p)
    }

    pub fn is_cheap(cost: f64, m: f64) -> bool {
        cost <= m + 1e-12 * (1.0 + m.abs())
    }

    /// `{0, u, u(1+eps), ...}` up to `gamma (sum_{C_f} w)^(1/p) max c`,
    /// where `u` is the smallest positive fixed-client cost.
    pub fn m_grid(&self, eps: f64) -> Vec<f64> {
        let inst = self.inst;
        let fixed = inst.fixed_clients();
        let mut grid = vec![0.0];
        let mut u = f64::INFINITY;
        let mut max_c = 0.0f64;
        for &j in fixed {
            for i in 0..inst.nf() {
                let c = inst.c(i, j);
                if c > 0.0 {
                    u = u.min(c);
                }
                max_c = max_c.max(c);
            }
        }
        if fixed.is_empty() || !u.is_finite() {
            return grid;
        }
        let w_min = fixed.iter().map(|&j| inst.weight(j)).fold(f64::INFINITY, f64::min);
        let w_sum: f64 = fixed.iter().map(|&j| inst.weight(j)).sum();
        if w_min > 0.0 {
            u *= rootp(w_min, self.p);
        }
        let top = self.gamma() * rootp(w_sum, self.p) * max_c;
        let steps = if top > u { ((top / u).ln() / eps.ln_1p()).ceil() as usize + 1 } else { 1 };
        for t in 0..=steps {
            grid.push(u * (1.0 + eps).powi(t as i32));
        }
        if self.t0_cost > *grid.last().unwrap() {
            grid.push(self.t0_cost);
        }
        grid
    }

    fn incremental(&mut self, alive: &[usize], existing: &[usize]) -> Result<Vec<usize>> {
        let key = (alive.to_vec(), existing.to_vec());
        if let Some(t) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        self.incremental_calls += 1;
        let inst = self.inst;
        let prob = ClusterProblem::restricted(inst, alive, inst.fixed_clients(), inst.k());
        let local: Vec<usize> = existing
            .iter()
            .map(|i| alive.iter().position(|a| a == i).expect("existing centers are alive"))
            .collect();
        let res = incremental_clustering_approx(&prob, &local, self.p)?;
        let global: Vec<usize> = res.iter().map(|&x| alive[x]).collect();
        let t = pad_to_k(inst.k(), alive, global);
        self.memo.insert(key, t.clone());
        Ok(t)
    }
}

fn pad_to_k(k: usize, allowed: &[usize], mut set: Vec<usize>) -> Vec<usize> {
    for &i in allowed {
        if set.len() >= k {
            break;
        }
        if !set.contains(&i) {
            set.push(i);
        }
    }
    set.sort_unstable();
    set
}

/// Output of [`greedy_max_fixed`].
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyMaxOutcome {
    pub solution: Vec<usize>,
    /// Smallest compared fixed-client cost above `M`: any budget below it
    /// reproduces this run exactly.
    pub next_breakpoint: f64,
}

/// Greedy over `f` restricted to extensions that stay inside some
/// `M`-cheap solution (cost on the fixed clients at most `M`).
pub fn greedy_max_fixed(ctx: &mut FixedContext<'_>, m: f64, f: &dyn SetFunction) -> Result<GreedyMaxOutcome> {
    ctx.greedy_runs += 1;
    let inst = ctx.inst;
    let (nf, k) = (inst.nf(), inst.k());
    let mut next_bp = f64::INFINITY;
    let note = |cost: f64, next_bp: &mut f64| {
        if cost > m {
            *next_bp = next_bp.min(cost);
        }
        FixedContext::is_cheap(cost, m)
    };
    if !note(ctx.t0_cost, &mut next_bp) {
        return Err(Error::Contract(format!("T0 costs {} on fixed clients, above M = {m}", ctx.t0_cost)));
    }
    let t0 = ctx.t0.clone();
    let mut cache: Vec<(Vec<usize>, f64)> = vec![(t0.clone(), ctx.t0_cost)];
    let mut alive = vec![true; nf];
    let mut s: Vec<usize> = Vec::new();
    for _ in 0..k {
        let alive_list: Vec<usize> = (0..nf).filter(|&i| alive[i]).collect();
        let mut cheap_sets: Vec<Vec<usize>> = Vec::new();
        for &i in &alive_list {
            if s.contains(&i) {
                continue;
            }
            let mut cand = s.clone();
            cand.push(i);
            cand.sort_unstable();
            let within = |t: &[usize]| cand.iter().all(|x| t.contains(x));
            let mut found: Option<Vec<usize>> = None;
            if within(&t0) {
                found = Some(t0.clone());
            } else {
                for (t, cost) in &cache {
                    if within(t) && note(*cost, &mut next_bp) {
                        found = Some(t.clone());
                        break;
                    }
                }
            }
            let t = match found {
                Some(t) => t,
                None => {
                    let t = ctx.incremental(&alive_list, &cand)?;
                    let cost = ctx.fixed_cost(&t);
                    cache.push((t.clone(), cost));
                    if !note(cost, &mut next_bp) {
                        continue;
                    }
                    t
                }
            };
            cheap_sets.push(t);
        }
        for &i in &alive_list {
            if !s.contains(&i) && !cheap_sets.iter().any(|t| t.contains(&i)) {
                alive[i] = false;
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..nf {
            if !alive[i] || s.contains(&i) {
                continue;
            }
            s.push(i);
            let v = f.eval(&s);
            s.pop();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) => s.push(i),
            None => return Err(Error::Contract("no M-cheap extension left".into())),
        }
    }
    s.sort_unstable();
    Ok(GreedyMaxOutcome { solution: s, next_breakpoint: next_bp })
}

fn next_index(grid: &[f64], t: usize, bp: f64) -> usize {
    let mut u = t + 1;
    while u < grid.len() && grid[u] < bp {
        u += 1;
    }
    u
}

/// Fixed-client k-median oracle: grid over the budget `M` on the fixed
/// clients and greedy restricted to `M`-cheap solutions.
pub fn kmedian_separate_fixed(ctx: &mut FixedContext<'_>, frac: &FractionalSolution, eps: f64) -> Result<Separation> {
    let inst = ctx.inst;
    let f = frac.f(inst);
    let fixed_sum: f64 = inst.fixed_clients().iter().map(|&j| inst.weight(j) * f[j]).sum();
    let grid = ctx.m_grid(eps);
    let t0_cost = ctx.t0_cost;
    let mut t = 0;
    while t < grid.len() {
        let m = grid[t];
        if !FixedContext::is_cheap(t0_cost, m) {
            t += 1;
            continue;
        }
        let fun = FnSetFunction { n: inst.nf(), f: |set: &[usize]| f_y(inst, &f, 1.0, set).0 };
        let out = greedy_max_fixed(ctx, m, &fun)?;
        let s = &out.solution;
        let (value, witness) = f_y(inst, &f, 1.0, s);
        let bound = m - fixed_sum + frac.r;
        if value - bound > cut_tolerance(value, bound) {
            if !FixedContext::is_cheap(ctx.fixed_cost(s), m) {
                return Err(Error::Internal("greedy output is not M-cheap".into()));
            }
            let sp = set_costs_pp(inst, s, 1.0);
            let mut clients = witness.clone();
            clients.extend_from_slice(inst.fixed_clients());
            clients.sort_unstable();
            let mut cut = sum_cut(inst, 1.0, &clients, &sp, s, m, Some(m));
            // Only the non-fixed witnesses are charged to the adversary.
            cut.rhs = m + witness.iter().map(|&j| inst.weight(j) * sp[j]).sum::<f64>();
            return Ok(Separation::Cut(cut));
        }
        t = next_index(&grid, t, out.next_breakpoint);
    }
    Ok(Separation::Feasible)
}

/// Fixed-client `l_p` oracle: double grid over `M` and `Y`.
pub fn lp_separate_fixed(
    ctx: &mut FixedContext<'_>,
    frac: &FractionalSolution,
    p: f64,
    eps: f64,
    eps_prime: f64,
) -> Result<Separation> {
    let inst = ctx.inst;
    let fpp = frac.fpp(inst, p);
    let y_fixed: f64 = inst.fixed_clients().iter().map(|&j| inst.weight(j) * fpp[j]).sum();
    let ygrid = if p == 1.0 { vec![f64::INFINITY] } else { y_grid(inst, &fpp, p, eps_prime) };
    let grid = ctx.m_grid(eps);
    let t0_cost = ctx.t0_cost;
    let mut cuts = Vec::new();
    let mut t = 0;
    while t < grid.len() {
        let m = grid[t];
        if !FixedContext::is_cheap(t0_cost, m) {
            t += 1;
            continue;
        }
        let mut bp = f64::INFINITY;
        for &cap in &ygrid {
            let div = divisor(p, y_fixed + cap);
            if !(div > 0.0 && div.is_finite()) {
                continue;
            }
            let fun = FnSetFunction {
                n: inst.nf(),
                f: |set: &[usize]| knapsack_adversary(inst, &fpp, &set_costs_pp(inst, set, p), cap).1,
            };
            let out = greedy_max_fixed(ctx, m, &fun)?;
            bp = bp.min(out.next_breakpoint);
            let s = &out.solution;
            let sp = set_costs_pp(inst, s, p);
            let (d, _) = knapsack_adversary(inst, &fpp, &sp, cap);
            if let Some(cut) = grid_cut(inst, frac, p, &fpp, &d, &sp, div, s, cap, Some(m)) {
                cuts.push(cut);
            }
        }
        t = next_index(&grid, t, bp);
    }
    Ok(Separation::from_cuts(strongest(cuts, frac)))
}

/// [`kmedian_separate`] as a cutting-plane oracle; `p` is the cost power.
pub struct KMedianOracle<'a> {
    pub inst: &'a Instance,
    pub p: f64,
}

impl SeparationOracle for KMedianOracle<'_> {
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation> {
        kmedian_separate(self.inst, point, self.p)
    }
}

/// [`lp_separate`] as a cutting-plane oracle.
pub struct LpOracle<'a> {
    pub inst: &'a Instance,
    pub p: f64,
    pub eps_prime: f64,
}

impl SeparationOracle for LpOracle<'_> {
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation> {
        lp_separate(self.inst, point, self.p, self.eps_prime)
    }
}

/// [`kmedian_separate_fixed`] as a cutting-plane oracle.
pub struct KMedianFixedOracle<'a> {
    pub ctx: FixedContext<'a>,
    pub eps: f64,
}

impl SeparationOracle for KMedianFixedOracle<'_> {
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation> {
        kmedian_separate_fixed(&mut self.ctx, point, self.eps)
    }
}

/// [`lp_separate_fixed`] as a cutting-plane oracle.
pub struct LpFixedOracle<'a> {
    pub ctx: FixedContext<'a>,
    pub p: f64,
    pub eps: f64,
    pub eps_prime: f64,
}

impl SeparationOracle for LpFixedOracle<'_> {
    fn separate(&mut self, point: &FractionalSolution) -> Result<Separation> {
        lp_separate_fixed(&mut self.ctx, point, self.p, self.eps, self.eps_prime)
    }
}
