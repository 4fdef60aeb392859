mod common;

use common::*;
use rand::Rng;
use uniclust::exact::ExactOracle;
use uniclust::solvers::{
    kcenter_3approx, solve, universal_kcenter, universal_kcenter_fixed, universal_kmedian, universal_kmedian_fixed,
    universal_lp, universal_lp_fixed, universal_lpp, verify, Pipeline, SolveConfig, SolveReport, Targets,
};
use uniclust::{Error, Instance, Objective, Realization};

fn check(inst: &Instance, rep: &SolveReport, what: &str) {
    let v = verify(inst, rep).unwrap();
    assert!(rep.solution.len() <= inst.k(), "{what}: too many centers");
    assert!(v.holds, "{what}: excess {} on {:?}", v.worst_excess, v.worst_realization);
    assert_ne!(v.lp_lower_bound_holds, Some(false), "{what}: fractional r above MR {}", v.mr);
    assert_ne!(v.composed_holds, Some(false), "{what}: composed pair violated");
}

#[test]
fn kmedian_meets_its_targets() {
    for seed in 0..15 {
        let inst = small_instance(seed, 7, 9, 3);
        check(&inst, &universal_kmedian(&inst).unwrap(), &format!("seed {seed}"));
    }
}

#[test]
fn lpp_meets_its_targets() {
    for seed in 0..15 {
        let inst = small_instance(seed + 50, 7, 9, 3).with_objective(Objective::Lpp(2.0));
        check(&inst, &universal_lpp(&inst, 2.0).unwrap(), &format!("seed {seed}"));
    }
}

#[test]
fn lp_meets_its_targets() {
    for seed in 0..10 {
        let inst = small_instance(seed + 100, 6, 8, 3).with_objective(Objective::Lp(2.0));
        check(&inst, &universal_lp(&inst, 2.0, 0.05).unwrap(), &format!("seed {seed}"));
    }
}

#[test]
fn lp_with_fractional_exponent() {
    for seed in 0..5 {
        let inst = small_instance(seed + 150, 5, 6, 2).with_objective(Objective::Lp(1.5));
        check(&inst, &universal_lp(&inst, 1.5, 0.05).unwrap(), &format!("seed {seed}"));
    }
}

#[test]
fn kcenter_meets_its_targets_and_covers() {
    for seed in 0..25 {
        let inst = small_instance(seed + 200, 7, 9, 3).with_objective(Objective::Center);
        let rep = universal_kcenter(&inst).unwrap();
        check(&inst, &rep, &format!("seed {seed}"));
        let mr = ExactOracle::new(&inst, Objective::Center).unwrap().minimum_regret().unwrap().regret;
        let r = rep.diagnostics.chosen_r.unwrap();
        assert!(r <= mr + 1e-9, "seed {seed}: r {r} above MR {mr}");
        let costs = rep.solution.costs(&inst);
        for j in 0..inst.nc() {
            let near = inst.nearest_facility(j).1;
            assert!(costs[j] <= 3.0 * (near + r) + 1e-9, "seed {seed}: client {j} not covered");
        }
    }
}

#[test]
fn kcenter_3approx_is_within_three() {
    for seed in 0..30 {
        let inst = small_instance(seed + 300, 6, 8, 3).with_objective(Objective::Center);
        let oracle = ExactOracle::new(&inst, Objective::Center).unwrap();
        let mut r = rng(seed);
        for _ in 0..10 {
            let real = Realization::new((0..inst.nc()).filter(|_| r.random_bool(0.5)).collect());
            let (apx, sol) = kcenter_3approx(&inst, &real);
            let (opt, _) = oracle.opt_cost(&real).unwrap();
            assert!(sol.len() <= inst.k());
            assert!((Objective::Center.value(&inst, &sol.costs(&inst), &real) - apx).abs() < 1e-12);
            assert!(apx <= 3.0 * opt + 1e-9, "seed {seed}: {apx} vs {opt}");
        }
    }
}

#[test]
fn fixed_pipelines_meet_their_targets() {
    for seed in 0..10 {
        let base = with_some_fixed(small_instance(seed + 400, 6, 8, 3), seed);
        let inst = base.clone();
        check(&inst, &universal_kmedian_fixed(&inst, 0.05).unwrap(), &format!("kmf seed {seed}"));
        let inst = base.clone().with_objective(Objective::Center);
        check(&inst, &universal_kcenter_fixed(&inst).unwrap(), &format!("kcf seed {seed}"));
    }
    for seed in 0..5 {
        let inst = with_some_fixed(small_instance(seed + 450, 5, 7, 2), seed).with_objective(Objective::Lp(2.0));
        check(&inst, &universal_lp_fixed(&inst, 2.0, 0.05).unwrap(), &format!("lpf seed {seed}"));
    }
}

#[test]
fn fixed_pipelines_accept_no_fixed_clients() {
    for seed in 0..5 {
        let inst = small_instance(seed + 500, 5, 7, 2);
        check(&inst, &universal_kmedian_fixed(&inst, 0.05).unwrap(), "kmf");
        let lp = inst.clone().with_objective(Objective::Lp(2.0));
        check(&lp, &universal_lp_fixed(&lp, 2.0, 0.05).unwrap(), "lpf");
        let c = inst.with_objective(Objective::Center);
        check(&c, &universal_kcenter_fixed(&c).unwrap(), "kcf");
    }
}

#[test]
fn lp_fixed_at_p_one_meets_the_kmedian_fixed_targets() {
    for seed in 0..5 {
        let inst = with_some_fixed(small_instance(seed + 550, 5, 7, 2), seed);
        let mut rep = universal_lp_fixed(&inst, 1.0, 0.05).unwrap();
        let t = Targets::kmedian_fixed(0.05);
        assert!(rep.alpha_target >= t.alpha - 1e-9);
        rep.alpha_target = t.alpha;
        rep.beta_target = t.beta;
        check(&inst, &rep, &format!("seed {seed}"));
    }
}

#[test]
fn badapprox_gives_the_zero_regret_solution() {
    let inst = badapprox(0.01);
    let runs: Vec<(&str, Instance, fn(&Instance) -> SolveReport)> = vec![
        ("kmedian", inst.clone(), |i| universal_kmedian(i).unwrap()),
        ("lpp", inst.clone(), |i| universal_lpp(i, 2.0).unwrap()),
        ("lp", inst.clone(), |i| universal_lp(i, 2.0, 0.05).unwrap()),
        ("kcenter", inst.clone().with_objective(Objective::Center), |i| universal_kcenter(i).unwrap()),
        ("kmedian_fixed", inst.clone(), |i| universal_kmedian_fixed(i, 0.05).unwrap()),
        ("lp_fixed", inst.clone(), |i| universal_lp_fixed(i, 2.0, 0.05).unwrap()),
        ("kcenter_fixed", inst.clone().with_objective(Objective::Center), |i| universal_kcenter_fixed(i).unwrap()),
    ];
    for (name, i, run) in runs {
        assert_eq!(run(&i).solution.centers(), &[0], "{name}");
    }
}

#[test]
fn colocated_pairs_pick_a_threshold_within_the_spacing() {
    for k in 1..=3 {
        let inst = colocated_pairs(k, 1.0).with_objective(Objective::Center);
        let rep = universal_kcenter(&inst).unwrap();
        assert!(rep.diagnostics.chosen_r.unwrap() <= 1.0);
        check(&inst, &rep, &format!("k {k}"));
    }
}

#[test]
fn line_instance_solves_with_regret_ten() {
    let inst = line_0_10();
    let rep = universal_kmedian(&inst).unwrap();
    let v = verify(&inst, &rep).unwrap();
    assert_eq!(v.mr, 10.0);
    assert_eq!(v.regret, 10.0);
}

#[test]
fn dispatcher_selects_by_objective_and_fixed_clients() {
    let inst = small_instance(7, 5, 6, 2);
    let cases = [
        (Objective::MEDIAN, false, Pipeline::KMedian),
        (Objective::Lpp(2.0), false, Pipeline::Lpp),
        (Objective::Lp(2.0), false, Pipeline::Lp),
        (Objective::Center, false, Pipeline::KCenter),
        (Objective::MEDIAN, true, Pipeline::KMedianFixed),
        (Objective::Lp(2.0), true, Pipeline::LpFixed),
        (Objective::Center, true, Pipeline::KCenterFixed),
    ];
    for (obj, fixed, want) in cases {
        assert_eq!(Pipeline::select(obj, fixed).unwrap(), want);
        let mut i = inst.clone().with_objective(obj);
        if fixed {
            i = i.with_fixed(vec![0]);
        }
        assert_eq!(solve(&i, &SolveConfig::default()).unwrap().pipeline, want);
    }
    assert!(matches!(Pipeline::select(Objective::Lpp(2.0), true), Err(Error::Precondition(_))));
}

#[test]
fn solvers_are_deterministic() {
    let inst = small_instance(21, 6, 8, 3).with_objective(Objective::Lp(2.0));
    let a = universal_lp(&inst, 2.0, 0.05).unwrap();
    let b = universal_lp(&inst, 2.0, 0.05).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.fractional, b.fractional);
}

#[test]
fn plain_pipelines_reject_fixed_clients() {
    let inst = small_instance(2, 5, 6, 2).with_fixed(vec![1]);
    assert!(matches!(universal_kmedian(&inst), Err(Error::Precondition(_))));
    assert!(matches!(universal_lp(&inst, 2.0, 0.05), Err(Error::Precondition(_))));
    assert!(matches!(universal_kcenter(&inst), Err(Error::Precondition(_))));
}

#[test]
fn solution_padding_uses_k_centers() {
    let inst = colocated_pairs(3, 2.0);
    let rep = universal_kmedian(&inst).unwrap();
    assert_eq!(rep.solution.len(), 3);
}
