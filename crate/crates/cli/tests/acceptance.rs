//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniclust::discounts::{approx_factor_pp, clustering_with_discounts, fld_runs, lagrangian_violations, ClusterProblem};
use uniclust::exact::{discounted_opt, ExactOracle};
use uniclust::generate::random_euclidean;
use uniclust::io::{parse_instance, write_instance};
use uniclust::lp::FractionalSolution;
use uniclust::model::lp_norm;
use uniclust::separation::{f_y, knapsack_adversary, set_costs_pp};
use uniclust::solvers::{
    universal_kcenter, universal_kcenter_fixed, universal_kmedian, universal_kmedian_fixed, universal_lp,
    universal_lp_fixed, universal_lpp, verify, SolveReport, Targets, VERIFY_TOL,
};
use uniclust::{Exponent, Instance, Objective, Solution};

const EPS: f64 = 0.05;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|F| <= 7`, `|C| <= 9`, `k <= 3`.
fn instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let nf = r.random_range(2..=7);
    let nc = r.random_range(2..=9);
    let k = r.random_range(1..=3usize.min(nf));
    random_euclidean(&mut r, nf, nc, k)
}

fn with_fixed(inst: Instance, seed: u64) -> Instance {
    let mut r = rng(seed ^ 0xf1);
    let count = r.random_range(1..=2usize.min(inst.nc() - 1));
    let mut fixed = Vec::new();
    while fixed.len() < count {
        let j = r.random_range(0..inst.nc());
        if !fixed.contains(&j) {
            fixed.push(j);
        }
    }
    inst.with_fixed(fixed)
}

/// A random point of the base polytope: a convex combination of integral
/// solutions.
fn random_point(inst: &Instance, r: &mut ChaCha8Rng) -> FractionalSolution {
    let sols = ExactOracle::new(inst, Objective::MEDIAN).unwrap().solutions().to_vec();
    let picks: Vec<&Solution> = (0..3).map(|_| &sols[r.random_range(0..sols.len())]).collect();
    let w: Vec<f64> = (0..3).map(|_| r.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut acc = FractionalSolution::from_solution(inst, picks[0], 0.0);
    acc.x.iter_mut().for_each(|v| *v = 0.0);
    acc.y.iter_mut().for_each(|v| *v = 0.0);
    for (s, wt) in picks.iter().zip(&w) {
        let pt = FractionalSolution::from_solution(inst, s, 0.0);
        for (a, b) in acc.x.iter_mut().zip(&pt.x) {
            *a += wt / total * b;
        }
        for (a, b) in acc.y.iter_mut().zip(&pt.y) {
            *a += wt / total * b;
        }
    }
    acc
}

fn random_subset(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| r.random_bool(0.5)).collect()
}

/// Fractional `r` against `MR` for every cutting-plane run.
struct LpRuns {
    runs: Vec<(String, f64, f64)>,
}

impl LpRuns {
    fn record(&mut self, what: String, rep: &SolveReport, mr: f64) {
        if let Some(f) = &rep.fractional {
            self.runs.push((what, f.r, mr));
        }
    }
}

type Check<'a> = Box<dyn FnOnce(&mut LpRuns) -> Result<String, String> + 'a>;

fn bound_suite(
    runs: &mut LpRuns,
    name: &str,
    count: u64,
    seed0: u64,
    want: Targets,
    make: &dyn Fn(u64) -> Instance,
    solve: &dyn Fn(&Instance) -> uniclust::Result<SolveReport>,
) -> Result<String, String> {
    let mut ok = 0;
    let mut worst_alpha: f64 = 0.0;
    for seed in seed0..seed0 + count {
        let inst = make(seed);
        let rep = solve(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        if (rep.alpha_target - want.alpha).abs() > 1e-9 || (rep.beta_target - want.beta).abs() > 1e-9 {
            return Err(format!("seed {seed}: targets ({}, {})", rep.alpha_target, rep.beta_target));
        }
        let v = verify(&inst, &rep).map_err(|e| format!("seed {seed}: {e}"))?;
        runs.record(format!("{name} seed {seed}"), &rep, v.mr);
        if !v.holds {
            return Err(format!("seed {seed}: excess {:e} on {:?}", v.worst_excess, v.worst_realization.ids(&inst)));
        }
        worst_alpha = worst_alpha.max(v.empirical_alpha);
        ok += 1;
    }
    Ok(format!("{ok}/{count} instances, largest empirical alpha {worst_alpha:.3}"))
}

fn c1(runs: &mut LpRuns) -> Result<String, String> {
    bound_suite(runs, "kmedian", 50, 0, Targets { alpha: 27.0, beta: 49.0 }, &instance, &universal_kmedian)
}

fn c2(runs: &mut LpRuns) -> Result<String, String> {
    let make = |s| instance(s).with_objective(Objective::Center);
    let msg = bound_suite(runs, "kcenter", 50, 1000, Targets { alpha: 3.0, beta: 3.0 }, &make, &universal_kcenter)?;
    for seed in 1000..1050 {
        let inst = make(seed);
        let rep = universal_kcenter(&inst).map_err(|e| e.to_string())?;
        let mr = ExactOracle::new(&inst, Objective::Center).unwrap().minimum_regret().unwrap().regret;
        let r = rep.diagnostics.chosen_r.ok_or("no chosen r")?;
        if r > mr + 1e-9 {
            return Err(format!("seed {seed}: chosen r {r} above MR {mr}"));
        }
    }
    Ok(format!("{msg}; chosen r <= MR on 50/50"))
}

fn c3(runs: &mut LpRuns) -> Result<String, String> {
    let make = |s| instance(s).with_objective(Objective::Lp(2.0));
    bound_suite(runs, "lp", 30, 2000, Targets { alpha: 108.0, beta: 412.0 }, &make, &|i| universal_lp(i, 2.0, EPS))
}

fn c4(runs: &mut LpRuns) -> Result<String, String> {
    let e = std::f64::consts::E;
    let want = Targets { alpha: 729.0, beta: 729.0 * e / (e - 1.0) + 54.0 };
    let make = |s| instance(s).with_objective(Objective::Lpp(2.0));
    bound_suite(runs, "lpp", 30, 3000, want, &make, &|i| universal_lpp(i, 2.0))
}

fn c5(_: &mut LpRuns) -> Result<String, String> {
    let mut checks = 0;
    for seed in 0..100 {
        let inst = instance(4000 + seed);
        let mut r = rng(seed);
        let scale = inst.max_fc();
        let d: Vec<f64> = (0..inst.nc()).map(|_| if r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..0.5) * scale }).collect();
        for p in [1.0, 2.0] {
            let prob = ClusterProblem::from_instance(&inst);
            let out = clustering_with_discounts(&prob, &d, p).map_err(|e| e.to_string())?;
            let got = prob.discounted_cost(&out.solution, &d, p, 9.0);
            let (opt, _) = discounted_opt(&inst, &d, p).map_err(|e| e.to_string())?;
            if got > approx_factor_pp(p) * opt + 1e-6 || out.solution.len() > inst.k() {
                return Err(format!("seed {seed} p {p}: {got} vs {opt}"));
            }
            checks += 1;
        }
    }
    Ok(format!("{checks}/200 (instance, p) pairs"))
}

fn c6(_: &mut LpRuns) -> Result<String, String> {
    let (runs, bad) = (fld_runs(), lagrangian_violations());
    if runs == 0 {
        return Err("no primal-dual runs recorded".into());
    }
    if bad > 0 {
        return Err(format!("{bad} violations in {runs} runs"));
    }
    Ok(format!("0 violations in {runs} primal-dual runs"))
}

fn marginal_gap(f: &dyn Fn(&[usize]) -> f64, a: &[usize], b: &[usize], u: usize) -> f64 {
    let plus = |s: &[usize]| {
        let mut t = s.to_vec();
        t.push(u);
        f(&t)
    };
    (plus(b) - f(b)) - (plus(a) - f(a))
}

fn c7(_: &mut LpRuns) -> Result<String, String> {
    let (mut fy, mut fyy) = (0, 0);
    let mut seed = 5000;
    while fy < 1000 || fyy < 1000 {
        seed += 1;
        let inst = instance(seed);
        let mut r = rng(seed);
        let p = [1.0, 2.0, 3.0][seed as usize % 3];
        let pt = random_point(&inst, &mut r);
        let fpp = pt.fpp(&inst, p);
        let cap = r.random_range(0.0..=fpp.iter().sum::<f64>());
        let f1 = |s: &[usize]| f_y(&inst, &fpp, p, s).0;
        let f2 = |s: &[usize]| knapsack_adversary(&inst, &fpp, &set_costs_pp(&inst, s, p), cap).1;
        for _ in 0..10 {
            let b = random_subset(&mut r, inst.nf());
            let a: Vec<usize> = b.iter().copied().filter(|_| r.random_bool(0.5)).collect();
            let u = r.random_range(0..inst.nf());
            if b.contains(&u) {
                continue;
            }
            if fy < 1000 {
                let g = marginal_gap(&f1, &a, &b, u);
                if g > 1e-9 {
                    return Err(format!("f_y seed {seed}: marginal grows by {g:e}"));
                }
                fy += 1;
            }
            if fyy < 1000 {
                let g = marginal_gap(&f2, &a, &b, u);
                if g > 1e-9 {
                    return Err(format!("f_y,Y seed {seed}: marginal grows by {g:e}"));
                }
                fyy += 1;
            }
        }
    }
    Ok(format!("{fy} checks on f_y, {fyy} on f_y,Y"))
}

fn c8(_: &mut LpRuns) -> Result<String, String> {
    let gap = |inst: &Instance, fpp: &[f64], sp: &[f64], d: &[f64], p: f64| {
        let a: f64 = (0..inst.nc()).map(|j| d[j] * inst.weight(j) * fpp[j]).sum();
        let b: f64 = (0..inst.nc()).map(|j| d[j] * inst.weight(j) * sp[j]).sum();
        a.powf(1.0 / p) - b.powf(1.0 / p)
    };
    let mut done = 0;
    let mut seed = 6000;
    while done < 500 {
        seed += 1;
        let inst = instance(seed);
        let mut r = rng(seed);
        let s = random_subset(&mut r, inst.nf());
        if s.is_empty() {
            continue;
        }
        let p = r.random_range(1.0..4.0);
        let fpp = random_point(&inst, &mut r).fpp(&inst, p);
        let sp = set_costs_pp(&inst, &s, p);
        let nc = inst.nc();
        let best = (0u32..1 << nc)
            .map(|m| {
                let d: Vec<f64> = (0..nc).map(|j| (m >> j & 1) as f64).collect();
                gap(&inst, &fpp, &sp, &d, p)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let d: Vec<f64> = (0..nc).map(|_| r.random_range(0.0..=1.0)).collect();
            let g = gap(&inst, &fpp, &sp, &d, p);
            if g > best + 1e-9 {
                return Err(format!("seed {seed}: fractional {g} beats integral {best}"));
            }
        }
        done += 1;
    }
    Ok("500 triples x 200 fractional samples".into())
}

fn c9(runs: &mut LpRuns) -> Result<String, String> {
    if runs.runs.is_empty() {
        return Err("no cutting-plane runs recorded".into());
    }
    let mut worst: f64 = f64::NEG_INFINITY;
    for (what, r, mr) in &runs.runs {
        if *r > mr + VERIFY_TOL {
            return Err(format!("{what}: r {r} above MR {mr}"));
        }
        worst = worst.max(r - mr);
    }
    Ok(format!("{} runs, max r - MR = {worst:.3e}", runs.runs.len()))
}

fn c10(runs: &mut LpRuns) -> Result<String, String> {
    let make = |s| with_fixed(instance(s), s);
    let kc = |s| with_fixed(instance(s), s).with_objective(Objective::Center);
    let a = bound_suite(runs, "kcenter_fixed", 30, 7000, Targets { alpha: 9.0, beta: 3.0 }, &kc, &universal_kcenter_fixed)?;
    let want = Targets { alpha: 324.0 + EPS, beta: 60.0 };
    let b = bound_suite(runs, "kmedian_fixed", 30, 7000, want, &make, &|i| universal_kmedian_fixed(i, EPS))?;
    Ok(format!("k-center (9, 3): {a}; k-median (324 + eps, 60): {b}"))
}

fn c11(_: &mut LpRuns) -> Result<String, String> {
    let mut r = rng(11);
    for t in 0..1000 {
        let n = r.random_range(1..=16);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-100.0..100.0)).collect();
        let p = r.random_range(1.0..=8.0);
        let (nq, inv_q) = if t % 5 == 0 {
            (lp_norm(&x, Exponent::Center), 0.0)
        } else {
            let q = r.random_range(p..=8.0);
            (lp_norm(&x, Exponent::Finite(q)), 1.0 / q)
        };
        let np = lp_norm(&x, Exponent::Finite(p));
        let tol = 1e-9 * np.max(nq).max(1e-300);
        if nq > np + tol || np > (n as f64).powf(1.0 / p - inv_q) * nq + tol {
            return Err(format!("vector {t}: p {p}, norms {np} and {nq}"));
        }
    }
    Ok("1000 vectors".into())
}

fn badapprox(eps: f64) -> Instance {
    let m = vec![
        vec![0.0, eps, 1.0, 0.0],
        vec![eps, 0.0, 1.0, eps],
        vec![1.0, 1.0, 0.0, 1.0],
        vec![0.0, eps, 1.0, 0.0],
    ];
    Instance::from_matrix(m, 2, 1)
}

fn c12(runs: &mut LpRuns) -> Result<String, String> {
    let inst = badapprox(0.01);
    let center = inst.clone().with_objective(Objective::Center);
    let all: Vec<(&str, &Instance, uniclust::Result<SolveReport>)> = vec![
        ("kmedian", &inst, universal_kmedian(&inst)),
        ("lpp", &inst, universal_lpp(&inst, 2.0)),
        ("lp", &inst, universal_lp(&inst, 2.0, EPS)),
        ("kcenter", &center, universal_kcenter(&center)),
        ("kmedian_fixed", &inst, universal_kmedian_fixed(&inst, EPS)),
        ("lp_fixed", &inst, universal_lp_fixed(&inst, 2.0, EPS)),
        ("kcenter_fixed", &center, universal_kcenter_fixed(&center)),
    ];
    for (name, i, rep) in all {
        let rep = rep.map_err(|e| format!("{name}: {e}"))?;
        if rep.solution.centers() != [0] {
            return Err(format!("{name} chose {:?}", rep.solution.ids(i)));
        }
        runs.record(format!("badapprox {name}"), &rep, 0.0);
    }
    Ok("all 7 pipelines chose the regret-0 facility".into())
}

fn cli(args: &[&str], env: Option<(&str, &str)>) -> (Option<i32>, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uniclust"));
    cmd.args(args);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    let o = cmd.output().expect("binary runs");
    (o.status.code(), o.stdout)
}

fn c13(_: &mut LpRuns) -> Result<String, String> {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = |n: &str| dir.join(n).to_string_lossy().into_owned();
    for (t, family) in ["random-euclidean", "uniform", "set-cover-gadget", "clique-gadget"].iter().enumerate() {
        let args = ["gen", "--family", family, "--seed", "5", "--nf", "3", "--nc", "4", "--k", "2"];
        let (code, a) = cli(&args, None);
        if code != Some(0) || cli(&args, None).1 != a {
            return Err(format!("gen {family} is not deterministic"));
        }
        let text = String::from_utf8(a).map_err(|e| e.to_string())?;
        let inst = parse_instance(&text).map_err(|e| e.to_string())?;
        if write_instance(&inst) != text {
            return Err(format!("{family}: serialization does not round-trip"));
        }
        let p = path(&format!("inst{t}.json"));
        std::fs::write(&p, &text).map_err(|e| e.to_string())?;
        let s1 = cli(&["solve", &p, "--verify"], None);
        if s1.0 != Some(0) || cli(&["solve", &p, "--verify"], None) != s1 {
            return Err(format!("{family}: solve --verify is not reproducible or failed"));
        }
    }
    let line = path("line.json");
    std::fs::write(
        &line,
        r#"{"facilities": ["a", "b"], "clients": ["x", "y"], "k": 1,
            "metric": {"matrix": [[0, 10, 0, 10], [10, 0, 10, 0], [0, 10, 0, 10], [10, 0, 10, 0]]}}"#,
    )
    .map_err(|e| e.to_string())?;
    let report = path("report.json");
    std::fs::write(
        &report,
        r#"{"pipeline": "kmedian", "objective": "median", "solution": ["a"], "target": {"alpha": 1.0, "beta": 0.1},
            "lp_rounds": 0, "cuts": 0, "bisection_steps": 0, "non_monotone_steps": 0}"#,
    )
    .map_err(|e| e.to_string())?;
    let bad = path("bad.json");
    std::fs::write(&bad, "{ not json").map_err(|e| e.to_string())?;
    let codes = [
        (cli(&["solve", &line, "--verify"], None).0, 0),
        (cli(&["verify", &line, "--report", &report], None).0, 1),
        (cli(&["solve", &bad], None).0, 2),
        (cli(&["mrs", &line], Some(("UNICLUST_CAP", "1"))).0, 3),
    ];
    for (got, want) in codes {
        if got != Some(want) {
            return Err(format!("expected exit {want}, got {got:?}"));
        }
    }
    Ok("round trip on 4 families, byte-identical reruns, exit codes 0/1/2/3".into())
}

fn main() -> ExitCode {
    let criteria: Vec<(usize, &str, Check)> = vec![
        (1, "universal k-median (27, 49)", Box::new(c1)),
        (2, "universal k-center (3, 3), r <= MR", Box::new(c2)),
        (3, "universal l_2 (108, 412)", Box::new(c3)),
        (4, "universal l_2^2", Box::new(c4)),
        (5, "clustering with discounts", Box::new(c5)),
        (7, "submodularity of f_y and f_y,Y", Box::new(c7)),
        (8, "knapsack integral dominance", Box::new(c8)),
        (10, "fixed clients", Box::new(c10)),
        (11, "norm fact", Box::new(c11)),
        (12, "badapprox regression", Box::new(c12)),
        (13, "CLI", Box::new(c13)),
        // Suite-wide checks run last.
        (6, "Lagrangian inequality", Box::new(c6)),
        (9, "LP lower bound r <= MR", Box::new(c9)),
    ];
    let mut runs = LpRuns { runs: Vec::new() };
    let mut lines = Vec::new();
    let mut failed = 0;
    for (n, name, check) in criteria {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(|| check(&mut runs)))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panic".into())));
        let secs = t.elapsed().as_secs_f64();
        let (tag, msg) = match res {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        lines.push((n, format!("{tag} criterion {n:>2} {name}: {msg} [{secs:.1} s]")));
    }
    lines.sort_by_key(|l| l.0);
    for (_, l) in &lines {
        println!("{l}");
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
