mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use uniclust::generate::{generate, Family};
use uniclust::model::{lp_norm, solution_cost, solution_cost_pp, Violation};
use uniclust::{Exponent, Instance, Objective, Realization, Solution};

/// `||x||_q <= ||x||_p <= n^(1/p - 1/q) ||x||_q` for `p <= q`, `q` possibly infinite.
fn norm_fact_holds(x: &[f64], p: f64, q: Option<f64>) -> bool {
    let n = x.len() as f64;
    let np = lp_norm(x, Exponent::Finite(p));
    let (nq, inv_q) = match q {
        Some(q) => (lp_norm(x, Exponent::Finite(q)), 1.0 / q),
        None => (lp_norm(x, Exponent::Center), 0.0),
    };
    let tol = 1e-9 * (1.0 + np.max(nq));
    nq <= np + tol && np <= n.powf(1.0 / p - inv_q) * nq + tol
}

#[test]
fn norm_fact_on_random_vectors() {
    let mut r = rng(42);
    for t in 0..1000 {
        let n = r.random_range(1..=12);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-50.0..50.0)).collect();
        let p = r.random_range(1.0..=8.0);
        let q = if t % 4 == 0 { None } else { Some(r.random_range(p..=8.0)) };
        assert!(norm_fact_holds(&x, p, q), "x {x:?} p {p} q {q:?}");
    }
}

proptest! {
    #[test]
    fn norm_fact(x in prop::collection::vec(-1e3f64..1e3, 1..20), p in 1.0f64..8.0, dq in 0.0f64..7.0, inf in any::<bool>()) {
        let q = if inf { None } else { Some((p + dq).min(8.0)) };
        prop_assert!(norm_fact_holds(&x, p, q));
    }

    #[test]
    fn generated_instances_are_valid(seed in 0u64..1000, nf in 1usize..6, nc in 1usize..8, k in 1usize..4) {
        for fam in [Family::RandomEuclidean, Family::Uniform, Family::SetCoverGadget] {
            let k = k.min(nf);
            let inst = generate(fam, seed, nf, nc, k).unwrap();
            prop_assert!(inst.validate().is_empty());
        }
    }

    #[test]
    fn cost_is_monotone_in_the_realization(seed in 0u64..500) {
        let inst = small_instance(seed, 5, 7, 2);
        let costs = Solution::new(vec![0]).costs(&inst);
        let all = Realization::all(inst.nc());
        let half = Realization::new((0..inst.nc()).step_by(2).collect());
        for obj in [Objective::MEDIAN, Objective::Lp(2.0), Objective::Lpp(3.0), Objective::Center] {
            prop_assert!(obj.value(&inst, &costs, &half) <= obj.value(&inst, &costs, &all) + 1e-12);
        }
    }

    #[test]
    fn lp_cost_is_root_of_lpp_cost(seed in 0u64..500, p in 1.0f64..5.0) {
        let inst = small_instance(seed, 5, 7, 2);
        let costs = Solution::new(vec![0]).costs(&inst);
        let real = Realization::all(inst.nc());
        let a = solution_cost(&inst, &costs, &real, Exponent::Finite(p));
        let b = solution_cost_pp(&inst, &costs, &real, p).powf(1.0 / p);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }
}

#[test]
fn euclidean_instances_satisfy_the_triangle_inequality() {
    for seed in 0..50 {
        let inst = small_instance(seed, 7, 9, 3);
        assert!(inst.validate().is_empty(), "seed {seed}");
    }
}

#[test]
fn broken_metrics_are_rejected() {
    let bad = Instance::from_matrix(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]], 1, 1);
    assert!(bad.validate().iter().any(|v| matches!(v, Violation::Triangle { .. })));
    let asym = Instance::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]], 1, 1);
    assert!(asym.validate().iter().any(|v| matches!(v, Violation::Asymmetric { .. })));
    let k0 = line_0_10().with_k(0);
    assert!(k0.validate().iter().any(|v| matches!(v, Violation::KOutOfRange { .. })));
    assert!(k0.ensure_valid().is_err());
}

#[test]
fn weighted_clients_scale_costs() {
    let inst = line_0_10().with_weights(vec![1.0, 3.0]);
    let costs = Solution::new(vec![0]).costs(&inst);
    assert_eq!(Objective::MEDIAN.value(&inst, &costs, &Realization::all(2)), 30.0);
}
