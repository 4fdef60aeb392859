//! k-clustering with per-client discounts: a primal-dual routine for the
//! Lagrangian relaxation, bisection on the facility cost, and derandomized
//! rounding of the resulting bipoint solution.
//!
//! All costs here are in the `p`-th power form: a client `j` served at
//! distance `c` with discount `r_j` pays `w_j (c^p - r_j^p)^+`.

use std::sync::atomic::{AtomicUsize, Ordering};

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::model::{powp, Instance, Solution};

static FLD_RUNS: AtomicUsize = AtomicUsize::new(0);
static LAGRANGIAN_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

/// Primal-dual runs so far in this process.
pub fn fld_runs() -> usize {
    FLD_RUNS.load(Ordering::Relaxed)
}

/// Runs whose Lagrangian inequality failed, so far in this process.
pub fn lagrangian_violations() -> usize {
    LAGRANGIAN_VIOLATIONS.load(Ordering::Relaxed)
}

/// Slack allowed in the Lagrangian inequality, relative to `1 + rhs`.
pub const LAGRANGIAN_SLACK: f64 = 1e-7;

/// Facility-to-client distances, facility-to-facility distances, client
/// weights and `k`. Indices are local to the problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterProblem {
    pub nf: usize,
    pub nc: usize,
    /// `dist[i * nc + j]`.
    pub dist: Vec<f64>,
    /// `ff[i * nf + i2]`.
    pub ff: Vec<f64>,
    pub weights: Vec<f64>,
    pub k: usize,
}

impl ClusterProblem {
    pub fn from_instance(inst: &Instance) -> ClusterProblem {
        let f: Vec<usize> = (0..inst.nf()).collect();
        let c: Vec<usize> = (0..inst.nc()).collect();
        ClusterProblem::restricted(inst, &f, &c, inst.k())
    }

    /// The sub-problem on the given facility and client indices.
    pub fn restricted(inst: &Instance, facilities: &[usize], clients: &[usize], k: usize) -> ClusterProblem {
        let nf = facilities.len();
        let nc = clients.len();
        let mut dist = Vec::with_capacity(nf * nc);
        for &i in facilities {
            for &j in clients {
                dist.push(inst.c(i, j));
            }
        }
        let mut ff = Vec::with_capacity(nf * nf);
        for &i in facilities {
            for &i2 in facilities {
                ff.push(inst.ff(i, i2));
            }
        }
        let weights = clients.iter().map(|&j| inst.weight(j)).collect();
        ClusterProblem { nf, nc, dist, ff, weights, k }
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.nc + j]
    }

    #[inline]
    pub fn ff(&self, i: usize, i2: usize) -> f64 {
        self.ff[i * self.nf + i2]
    }

    /// Adds a client with the given distances to every facility.
    pub fn add_client(&mut self, dists: &[f64], weight: f64) {
        let nc = self.nc;
        let mut dist = Vec::with_capacity(self.nf * (nc + 1));
        for i in 0..self.nf {
            dist.extend_from_slice(&self.dist[i * nc..(i + 1) * nc]);
            dist.push(dists[i]);
        }
        self.dist = dist;
        self.weights.push(weight);
        self.nc += 1;
    }

    /// Distance from every client to its nearest facility of `sol`.
    pub fn costs(&self, sol: &[usize]) -> Vec<f64> {
        (0..self.nc)
            .map(|j| sol.iter().map(|&i| self.c(i, j)).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// `sum_j w_j (c_j^p - (scale r_j)^p)^+`.
    pub fn discounted_cost(&self, sol: &[usize], discounts: &[f64], p: f64, scale: f64) -> f64 {
        self.costs(sol)
            .iter()
            .enumerate()
            .map(|(j, &c)| self.weights[j] * (powp(c, p) - powp(scale * discounts[j], p)).max(0.0))
            .sum()
    }

    fn max_cp(&self, p: f64) -> f64 {
        self.dist.iter().map(|&c| powp(c, p)).fold(0.0, f64::max)
    }
}

/// Final state of one primal-dual run.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub z: f64,
    pub p: f64,
    /// Time each client stopped growing.
    pub t: Vec<f64>,
    /// `a_j = w_j (t_j - r_j^p)^+`.
    pub a: Vec<f64>,
    /// `b_ij = w_j (t_j - max(c_ij^p, r_j^p))^+`, row-major by facility.
    pub b: Vec<f64>,
    pub tight_time: Vec<Option<f64>>,
    /// The tight facility that stopped each client.
    pub witness: Vec<Option<usize>>,
    /// The maximal independent set of the conflict graph.
    pub open: Vec<usize>,
    /// Facility each client is connected to.
    pub connection: Vec<usize>,
    pub events: Vec<f64>,
    pub lagrangian_lhs: f64,
    pub lagrangian_rhs: f64,
}

impl DualState {
    pub fn lagrangian_holds(&self) -> bool {
        self.lagrangian_lhs <= self.lagrangian_rhs + LAGRANGIAN_SLACK * (1.0 + self.lagrangian_rhs.abs())
    }

    /// Largest `sum_j b_ij - z` at any recorded event time.
    pub fn max_dual_excess(&self, prob: &ClusterProblem, discounts: &[f64]) -> f64 {
        let tau = contact_times(prob, discounts, self.p);
        let mut worst = f64::NEG_INFINITY;
        for &time in &self.events {
            for i in 0..prob.nf {
                let s: f64 = (0..prob.nc)
                    .map(|j| prob.weights[j] * (self.t[j].min(time) - tau[i * prob.nc + j]).max(0.0))
                    .sum();
                worst = worst.max(s - self.z);
            }
        }
        worst
    }
}

fn contact_times(prob: &ClusterProblem, discounts: &[f64], p: f64) -> Vec<f64> {
    let mut tau = Vec::with_capacity(prob.nf * prob.nc);
    for i in 0..prob.nf {
        for j in 0..prob.nc {
            tau.push(powp(prob.c(i, j), p).max(powp(discounts[j], p)));
        }
    }
    tau
}

/// Primal-dual for facility location with uniform facility cost `z` and
/// discounts. Every client's dual grows at rate `w_j` from time `r_j^p`
/// until it reaches a tight facility.
pub fn fld_primal_dual(prob: &ClusterProblem, z: f64, discounts: &[f64], p: f64) -> DualState {
    FLD_RUNS.fetch_add(1, Ordering::Relaxed);
    let (nf, nc) = (prob.nf, prob.nc);
    let w = &prob.weights;
    let tau = contact_times(prob, discounts, p);
    let tol = 1e-12 * z.abs().max(1.0);

    let mut growing = vec![true; nc];
    let mut n_growing = nc;
    let mut t_freeze = vec![f64::INFINITY; nc];
    let mut witness: Vec<Option<usize>> = vec![None; nc];
    let mut tight: Vec<Option<f64>> = vec![None; nf];
    let mut frozen_sum = vec![0.0; nf];
    let mut events = Vec::new();
    let mut t = 0.0f64;

    let mut freeze = |j: usize, at: f64, by: Option<usize>, frozen_sum: &mut Vec<f64>, t_freeze: &mut Vec<f64>| {
        t_freeze[j] = at;
        witness[j] = by;
        for i in 0..nf {
            frozen_sum[i] += w[j] * (at - tau[i * nc + j]).max(0.0);
        }
    };

    while n_growing > 0 {
        loop {
            let mut changed = false;
            for i in 0..nf {
                if tight[i].is_some() {
                    continue;
                }
                let s: f64 = frozen_sum[i]
                    + (0..nc)
                        .filter(|&j| growing[j])
                        .map(|j| w[j] * (t - tau[i * nc + j]).max(0.0))
                        .sum::<f64>();
                if s >= z - tol {
                    tight[i] = Some(t);
                    changed = true;
                }
            }
            for j in 0..nc {
                if !growing[j] {
                    continue;
                }
                let mut best: Option<(f64, usize)> = None;
                for i in 0..nf {
                    if let Some(ti) = tight[i] {
                        if tau[i * nc + j] <= t && best.is_none_or(|(bt, _)| ti < bt) {
                            best = Some((ti, i));
                        }
                    }
                }
                if let Some((_, i)) = best {
                    growing[j] = false;
                    n_growing -= 1;
                    freeze(j, t, Some(i), &mut frozen_sum, &mut t_freeze);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        events.push(t);
        if n_growing == 0 {
            break;
        }
        let mut next = f64::INFINITY;
        for i in 0..nf {
            let mut wsum = 0.0;
            let mut wtau = 0.0;
            for j in 0..nc {
                let tij = tau[i * nc + j];
                if growing[j] {
                    if tij <= t {
                        wsum += w[j];
                        wtau += w[j] * tij;
                    } else {
                        next = next.min(tij);
                    }
                }
            }
            if tight[i].is_none() && wsum > 0.0 {
                let ts = (z - frozen_sum[i] + wtau) / wsum;
                next = next.min(ts.max(t));
            }
        }
        if !next.is_finite() {
            // Only weightless clients remain and nothing can become tight.
            for j in 0..nc {
                if growing[j] {
                    growing[j] = false;
                    let at = (0..nf).map(|i| tau[i * nc + j]).fold(f64::INFINITY, f64::min);
                    freeze(j, at, None, &mut frozen_sum, &mut t_freeze);
                }
            }
            break;
        }
        if next <= t {
            next = t + tol.max(t.abs() * f64::EPSILON);
        }
        t = next;
    }

    let s_p: Vec<f64> = discounts.iter().map(|&r| powp(r, p)).collect();
    let a: Vec<f64> = (0..nc).map(|j| w[j] * (t_freeze[j] - s_p[j]).max(0.0)).collect();
    let mut b = vec![0.0; nf * nc];
    for i in 0..nf {
        for j in 0..nc {
            b[i * nc + j] = w[j] * (t_freeze[j] - tau[i * nc + j]).max(0.0);
        }
    }

    // Conflict graph on tight facilities: shared positive contributions.
    let mut adj = vec![vec![false; nf]; nf];
    for j in 0..nc {
        let contrib: Vec<usize> = (0..nf).filter(|&i| tight[i].is_some() && b[i * nc + j] > 0.0).collect();
        for (x, &i) in contrib.iter().enumerate() {
            for &i2 in &contrib[x + 1..] {
                adj[i][i2] = true;
                adj[i2][i] = true;
            }
        }
    }
    let mut order: Vec<usize> = (0..nf).filter(|&i| tight[i].is_some()).collect();
    order.sort_by(|&x, &y| tight[x].unwrap().total_cmp(&tight[y].unwrap()).then(x.cmp(&y)));
    let mut in_set = vec![false; nf];
    for &i in &order {
        if !(0..nf).any(|i2| in_set[i2] && adj[i][i2]) {
            in_set[i] = true;
        }
    }
    let open: Vec<usize> = (0..nf).filter(|&i| in_set[i]).collect();

    let nearest_open = |j: usize| {
        open.iter()
            .copied()
            .min_by(|&x, &y| prob.c(x, j).total_cmp(&prob.c(y, j)).then(x.cmp(&y)))
            .unwrap_or(0)
    };
    let connection: Vec<usize> = (0..nc)
        .map(|j| {
            if let Some(&i) = open.iter().find(|&&i| b[i * nc + j] > 0.0) {
                return i;
            }
            match witness[j] {
                Some(pi) if in_set[pi] => pi,
                Some(pi) => open.iter().copied().find(|&i| adj[pi][i]).unwrap_or_else(|| nearest_open(j)),
                None => nearest_open(j),
            }
        })
        .collect();

    let three_p = powp(3.0, p);
    let mut lhs = three_p * z * open.len() as f64;
    for j in 0..nc {
        if !open.is_empty() {
            lhs += w[j] * (powp(prob.c(connection[j], j), p) - three_p * s_p[j]).max(0.0);
        }
    }
    let rhs = three_p * a.iter().sum::<f64>();
    let state = DualState {
        z,
        p,
        t: t_freeze,
        a,
        b,
        tight_time: tight,
        witness,
        open,
        connection,
        events,
        lagrangian_lhs: lhs,
        lagrangian_rhs: rhs,
    };
    if !state.lagrangian_holds() {
        LAGRANGIAN_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        warn!("Lagrangian inequality failed at z = {z}: {lhs} > {rhs}");
    }
    state
}

/// One bisection probe.
#[derive(Clone, Debug, PartialEq)]
pub struct BisectionStep {
    pub z: f64,
    pub open: usize,
}

/// Details of the rounding step when no probe opened exactly `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipointInfo {
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub z1: f64,
    pub z2: f64,
    pub s1_prime: Vec<usize>,
    pub rho: f64,
    pub start_from_s1_prime: bool,
    /// Exact expected objective of the randomized rounding.
    pub randomized_expectation: f64,
    /// Per-client three-case upper bound on the randomized rounding.
    pub randomized_bound: f64,
    pub final_objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscountOutcome {
    pub solution: Vec<usize>,
    pub trace: Vec<BisectionStep>,
    pub bipoint: Option<BipointInfo>,
    pub non_monotone_steps: usize,
}

/// Expected `sum_j w_j (c_j^p - thr_j)^+` when `m` facilities are drawn
/// uniformly from `pool` and added to `base`.
fn expected_objective(prob: &ClusterProblem, thr: &[f64], base: &[usize], pool: &[usize], m: usize, p: f64) -> f64 {
    let mut total = 0.0;
    let mut sorted: Vec<usize> = pool.to_vec();
    for j in 0..prob.nc {
        let g = |c: f64| prob.weights[j] * (powp(c, p) - thr[j]).max(0.0);
        let d_base = base.iter().map(|&i| prob.c(i, j)).fold(f64::INFINITY, f64::min);
        if m == 0 || pool.is_empty() {
            total += g(d_base);
            continue;
        }
        sorted.sort_by(|&x, &y| prob.c(x, j).total_cmp(&prob.c(y, j)).then(x.cmp(&y)));
        let n = sorted.len();
        let mut none = 1.0;
        let mut e = 0.0;
        for (t, &i) in sorted.iter().enumerate() {
            let c = prob.c(i, j);
            if c >= d_base || none == 0.0 {
                break;
            }
            let pick = (m as f64 / (n - t) as f64).min(1.0);
            e += none * pick * g(c);
            none *= 1.0 - pick;
        }
        total += e + none * g(d_base);
    }
    total
}

fn nearest_in(prob: &ClusterProblem, set: &[usize], i: usize) -> usize {
    set.iter()
        .copied()
        .min_by(|&x, &y| prob.ff(i, x).total_cmp(&prob.ff(i, y)).then(x.cmp(&y)))
        .expect("non-empty set")
}

fn pad(prob: &ClusterProblem, mut sol: Vec<usize>) -> Vec<usize> {
    let target = prob.k.min(prob.nf);
    let mut i = 0;
    while sol.len() < target && i < prob.nf {
        if !sol.contains(&i) {
            sol.push(i);
        }
        i += 1;
    }
    sol.sort_unstable();
    sol
}

/// Opens at most `k` facilities with
/// `sum_j w_j (c_j^p - 9^p r_j^p)^+ <= (2/3) 9^p` times the optimal
/// discounted cost.
pub fn clustering_with_discounts(prob: &ClusterProblem, discounts: &[f64], p: f64) -> Result<DiscountOutcome> {
    if discounts.len() != prob.nc || prob.weights.len() != prob.nc {
        return Err(Error::Precondition("one discount and weight per client required".into()));
    }
    if prob.k == 0 || prob.nf == 0 {
        return Err(Error::Precondition("need k >= 1 and at least one facility".into()));
    }
    let mut outcome = DiscountOutcome { solution: Vec::new(), trace: Vec::new(), bipoint: None, non_monotone_steps: 0 };
    if prob.nc == 0 || prob.weights.iter().all(|&w| w == 0.0) {
        outcome.solution = pad(prob, Vec::new());
        return Ok(outcome);
    }
    let k = prob.k;
    let probe = |z: f64, trace: &mut Vec<BisectionStep>| {
        let st = fld_primal_dual(prob, z, discounts, p);
        trace.push(BisectionStep { z, open: st.open.len() });
        st
    };

    let mut lo = probe(0.0, &mut outcome.trace);
    if lo.open.len() <= k {
        outcome.solution = pad(prob, lo.open);
        return Ok(outcome);
    }
    let total: f64 = (0..prob.nc).map(|j| prob.weights[j]).sum::<f64>() * prob.max_cp(p);
    let mut z_hi = total.max(1.0);
    let mut hi = probe(z_hi, &mut outcome.trace);
    let mut doublings = 0;
    while hi.open.len() > k {
        if doublings > 200 {
            return Err(Error::Numerical("facility cost upper bound not found".into()));
        }
        z_hi *= 2.0;
        hi = probe(z_hi, &mut outcome.trace);
        doublings += 1;
    }
    if hi.open.len() == k || hi.open.is_empty() {
        outcome.solution = pad(prob, hi.open);
        return Ok(outcome);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo.z + hi.z);
        if mid <= lo.z || mid >= hi.z {
            break;
        }
        let st = probe(mid, &mut outcome.trace);
        let n = st.open.len();
        if n > lo.open.len() || n < hi.open.len() {
            outcome.non_monotone_steps += 1;
        }
        if n == k {
            outcome.solution = pad(prob, st.open);
            return Ok(outcome);
        }
        if n > k {
            lo = st;
        } else {
            hi = st;
        }
    }
    debug!("bisection bracket [{}, {}] opens {} / {}", lo.z, hi.z, lo.open.len(), hi.open.len());
    let info = bipoint_round(prob, discounts, p, &lo, &hi);
    outcome.solution = pad(prob, info.s_star.clone());
    outcome.bipoint = Some(info.info);
    Ok(outcome)
}

struct Rounded {
    s_star: Vec<usize>,
    info: BipointInfo,
}

fn bipoint_round(prob: &ClusterProblem, discounts: &[f64], p: f64, lo: &DualState, hi: &DualState) -> Rounded {
    let k = prob.k;
    let s1 = lo.open.clone();
    let s2 = hi.open.clone();
    let (k1, k2) = (s1.len(), s2.len());
    let rho = (k - k2) as f64 / (k1 - k2) as f64;

    let mut s1p: Vec<usize> = Vec::new();
    for &i in &s2 {
        let n = nearest_in(prob, &s1, i);
        if !s1p.contains(&n) {
            s1p.push(n);
        }
    }
    for &i in &s1 {
        if s1p.len() >= k2 {
            break;
        }
        if !s1p.contains(&i) {
            s1p.push(i);
        }
    }
    s1p.sort_unstable();
    let pool: Vec<usize> = s1.iter().copied().filter(|i| !s1p.contains(i)).collect();
    let m = k - k2;

    let nine_p = powp(9.0, p);
    let thr: Vec<f64> = discounts.iter().map(|&r| nine_p * powp(r, p)).collect();
    let e1 = expected_objective(prob, &thr, &s1p, &pool, m, p);
    let e2 = expected_objective(prob, &thr, &s2, &pool, m, p);
    let start_from_s1_prime = e1 <= e2;
    let mut chosen: Vec<usize> = if start_from_s1_prime { s1p.clone() } else { s2.clone() };
    let mut remaining = pool.clone();
    for slots in (1..=m).rev() {
        let mut best: Option<(f64, usize)> = None;
        for (x, &i) in remaining.iter().enumerate() {
            let mut base = chosen.clone();
            base.push(i);
            let rest: Vec<usize> = remaining.iter().copied().filter(|&u| u != i).collect();
            let e = expected_objective(prob, &thr, &base, &rest, slots - 1, p);
            if best.is_none_or(|(b, _)| e < b) {
                best = Some((e, x));
            }
        }
        let (_, x) = best.expect("pool has at least m facilities");
        let i = remaining.remove(x);
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();

    let c1 = prob.costs(&s1);
    let c2 = prob.costs(&s2);
    let three_pm1 = powp(3.0, p - 1.0);
    let mut bound = 0.0;
    for j in 0..prob.nc {
        let g = |x: f64| prob.weights[j] * (x - thr[j]).max(0.0);
        let (a, b) = (powp(c1[j], p), powp(c2[j], p));
        let in_s1p = s1p.iter().any(|&i| prob.c(i, j) == c1[j]);
        bound += if in_s1p {
            rho * g(a) + (1.0 - rho) * g(b)
        } else {
            rho * g(a) + (1.0 - rho) * rho * g(three_pm1 * (a + 2.0 * b)) + (1.0 - rho) * (1.0 - rho) * g(b)
        };
    }
    let final_objective = expected_objective(prob, &thr, &chosen, &[], 0, p);
    Rounded {
        s_star: chosen,
        info: BipointInfo {
            s1,
            s2,
            z1: lo.z,
            z2: hi.z,
            s1_prime: s1p,
            rho,
            start_from_s1_prime,
            randomized_expectation: rho * e1 + (1.0 - rho) * e2,
            randomized_bound: bound,
            final_objective,
        },
    }
}

/// `(2/3) 9^p`, the approximation factor of [`clustering_approx`] in the
/// `p`-th power objective.
pub fn approx_factor_pp(p: f64) -> f64 {
    2.0 / 3.0 * powp(9.0, p)
}

/// k-clustering without discounts.
pub fn clustering_approx(prob: &ClusterProblem, p: f64) -> Result<Vec<usize>> {
    Ok(clustering_with_discounts(prob, &vec![0.0; prob.nc], p)?.solution)
}

/// k-clustering forced to keep `existing`, by adding heavy clients on top
/// of the existing centers.
pub fn incremental_clustering_approx(prob: &ClusterProblem, existing: &[usize], p: f64) -> Result<Vec<usize>> {
    let mut existing: Vec<usize> = existing.to_vec();
    existing.sort_unstable();
    existing.dedup();
    if existing.len() > prob.k {
        return Err(Error::Precondition(format!(
            "{} existing centers exceed k = {}",
            existing.len(),
            prob.k
        )));
    }
    if existing.iter().any(|&i| i >= prob.nf) {
        return Err(Error::Precondition("existing center outside the facility set".into()));
    }
    if existing.len() == prob.k {
        return Ok(existing);
    }
    let budget: f64 = (0..prob.nc)
        .map(|j| prob.weights[j] * (0..prob.nf).map(|i| powp(prob.c(i, j), p)).fold(0.0, f64::max))
        .sum();
    let mut delta = f64::INFINITY;
    for &e in &existing {
        for i in 0..prob.nf {
            let d = prob.ff(e, i);
            if d > 0.0 {
                delta = delta.min(d);
            }
        }
    }
    let heavy = if delta.is_finite() {
        approx_factor_pp(p) * budget / powp(delta, p) + 1.0
    } else {
        budget + 1.0
    };
    let mut aug = prob.clone();
    for &e in &existing {
        let d: Vec<f64> = (0..prob.nf).map(|i| prob.ff(e, i)).collect();
        aug.add_client(&d, heavy);
    }
    let mut result = clustering_approx(&aug, p)?;
    for &e in &existing {
        if result.contains(&e) {
            continue;
        }
        // A co-located twin may have been opened instead.
        match result.iter().position(|&i| prob.ff(e, i) == 0.0 && !existing.contains(&i)) {
            Some(x) => result[x] = e,
            None => {
                return Err(Error::Internal(format!(
                    "incremental clustering dropped existing center {e}"
                )))
            }
        }
    }
    result.sort_unstable();
    result.dedup();
    Ok(result)
}

/// Convenience wrapper returning a [`Solution`] over the whole instance.
pub fn solve_with_discounts(inst: &Instance, discounts: &[f64], p: f64) -> Result<(Solution, DiscountOutcome)> {
    let prob = ClusterProblem::from_instance(inst);
    let out = clustering_with_discounts(&prob, discounts, p)?;
    Ok((Solution::new(out.solution.clone()), out))
}
