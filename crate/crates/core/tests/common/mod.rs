#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniclust::generate::random_euclidean;
use uniclust::{Instance, Objective};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Euclidean instance with `2..=max_f` facilities, `2..=max_c` clients
/// and `k <= max_k`.
pub fn small_instance(seed: u64, max_f: usize, max_c: usize, max_k: usize) -> Instance {
    let mut r = rng(seed);
    let nf = r.random_range(2..=max_f);
    let nc = r.random_range(2..=max_c);
    let k = r.random_range(1..=max_k.min(nf));
    random_euclidean(&mut r, nf, nc, k)
}

/// Adds 1 or 2 fixed clients chosen by `seed`.
pub fn with_some_fixed(inst: Instance, seed: u64) -> Instance {
    let mut r = rng(seed ^ 0x5eed);
    let nc = inst.nc();
    let count = r.random_range(1..=2usize.min(nc - 1));
    let mut fixed = Vec::new();
    while fixed.len() < count {
        let j = r.random_range(0..nc);
        if !fixed.contains(&j) {
            fixed.push(j);
        }
    }
    inst.with_fixed(fixed)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// Cost of `centers` on the clients in `real`, computed from scratch.
pub fn cost(inst: &Instance, obj: Objective, centers: &[usize], real: &[usize]) -> f64 {
    let d = |j: usize| centers.iter().map(|&i| inst.c(i, j)).fold(f64::INFINITY, f64::min);
    match obj {
        Objective::Center => real.iter().map(|&j| d(j)).fold(0.0, f64::max),
        Objective::Lp(p) => real.iter().map(|&j| inst.weight(j) * d(j).powf(p)).sum::<f64>().powf(1.0 / p),
        Objective::Lpp(p) => real.iter().map(|&j| inst.weight(j) * d(j).powf(p)).sum(),
    }
}

/// Every realization containing the fixed clients.
pub fn realizations(inst: &Instance) -> Vec<Vec<usize>> {
    let nc = inst.nc();
    (0u32..1 << nc)
        .map(|mask| (0..nc).filter(|&j| mask >> j & 1 == 1).collect::<Vec<_>>())
        .filter(|r| inst.fixed_clients().iter().all(|f| r.contains(f)))
        .collect()
}

pub fn all_solutions(inst: &Instance) -> Vec<Vec<usize>> {
    subsets(inst.nf(), inst.k())
}

pub fn brute_opt(inst: &Instance, obj: Objective, real: &[usize]) -> f64 {
    all_solutions(inst).iter().map(|s| cost(inst, obj, s, real)).fold(f64::INFINITY, f64::min)
}

pub fn brute_regret(inst: &Instance, obj: Objective, centers: &[usize]) -> f64 {
    realizations(inst)
        .iter()
        .map(|r| cost(inst, obj, centers, r) - brute_opt(inst, obj, r))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn brute_mr(inst: &Instance, obj: Objective) -> f64 {
    all_solutions(inst).iter().map(|s| brute_regret(inst, obj, s)).fold(f64::INFINITY, f64::min)
}

/// The two-facility, two-client instance where the near-optimal facility has
/// unbounded regret: `c0` is at distance 1 from both facilities, `c1` sits on
/// `f0` and at distance `eps` from `f1`.
pub fn badapprox(eps: f64) -> Instance {
    // points: f0, f1, c0, c1 (c1 co-located with f0)
    let m = vec![
        vec![0.0, eps, 1.0, 0.0],
        vec![eps, 0.0, 1.0, eps],
        vec![1.0, 1.0, 0.0, 1.0],
        vec![0.0, eps, 1.0, 0.0],
    ];
    Instance::from_matrix(m, 2, 1)
}

/// Uniform metric on `k + 1` co-located facility-client pairs at distance `d`.
pub fn colocated_pairs(k: usize, d: f64) -> Instance {
    let n = k + 1;
    let ids = (0..n).map(|a| format!("p{a}")).collect();
    let m = (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { d }).collect()).collect();
    Instance::new(ids, (0..n).collect(), (0..n).collect(), m, k)
}

/// Facilities and clients at 0 and 10 on a line, `k = 1`.
pub fn line_0_10() -> Instance {
    let m = vec![
        vec![0.0, 10.0, 0.0, 10.0],
        vec![10.0, 0.0, 10.0, 0.0],
        vec![0.0, 10.0, 0.0, 10.0],
        vec![10.0, 0.0, 10.0, 0.0],
    ];
    Instance::from_matrix(m, 2, 1)
}
