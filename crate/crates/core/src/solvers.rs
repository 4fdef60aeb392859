//! End-to-end universal pipelines: fractional regret LP, then rounding through
//! clustering with discounts (or the threshold greedy for k-center).

use std::fmt;

use log::info;

use crate::discounts::{approx_factor_pp, BipointInfo, BisectionStep, ClusterProblem, clustering_with_discounts};
use crate::error::{Error, Result};
use crate::exact::ExactOracle;
use crate::lp::{cutting_plane, regret_bisection, CuttingPlaneConfig, CuttingPlaneResult, FractionalSolution, RegretLp, SeparationOracle};
use crate::model::{powp, rootp, Instance, Objective, Realization, Solution};
use crate::separation::{
    default_eps_prime, FixedContext, KMedianFixedOracle, KMedianOracle, LpFixedOracle, LpOracle, DEFAULT_EPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pipeline {
    KMedian,
    Lpp,
    Lp,
    KCenter,
    KMedianFixed,
    LpFixed,
    KCenterFixed,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::KMedian,
        Pipeline::Lpp,
        Pipeline::Lp,
        Pipeline::KCenter,
        Pipeline::KMedianFixed,
        Pipeline::LpFixed,
        Pipeline::KCenterFixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::KMedian => "kmedian",
            Pipeline::Lpp => "lpp",
            Pipeline::Lp => "lp",
            Pipeline::KCenter => "kcenter",
            Pipeline::KMedianFixed => "kmedian_fixed",
            Pipeline::LpFixed => "lp_fixed",
            Pipeline::KCenterFixed => "kcenter_fixed",
        }
    }

    /// The pipeline serving an objective, with or without fixed clients.
    pub fn select(objective: Objective, has_fixed: bool) -> Result<Pipeline> {
        Ok(match (objective, has_fixed) {
            (Objective::Center, false) => Pipeline::KCenter,
            (Objective::Center, true) => Pipeline::KCenterFixed,
            (Objective::Lp(p), false) if p == 1.0 => Pipeline::KMedian,
            (Objective::Lp(p), true) if p == 1.0 => Pipeline::KMedianFixed,
            (Objective::Lp(_), false) => Pipeline::Lp,
            (Objective::Lp(_), true) => Pipeline::LpFixed,
            (Objective::Lpp(p), true) if p == 1.0 => Pipeline::KMedianFixed,
            (Objective::Lpp(_), false) => Pipeline::Lpp,
            (Objective::Lpp(p), true) => {
                return Err(Error::Precondition(format!(
                    "fixed clients are not supported for the lpp objective with p = {p}"
                )))
            }
        })
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Approximation targets `SOL(C') <= alpha OPT(C') + beta MR`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Targets {
    pub alpha: f64,
    pub beta: f64,
}

impl Targets {
    pub fn kmedian() -> Targets {
        Targets { alpha: 27.0, beta: 49.0 }
    }

    pub fn lpp(p: f64) -> Targets {
        let e = std::f64::consts::E;
        let a = 27f64.powf(p);
        Targets { alpha: a, beta: a * e / (e - 1.0) + approx_factor_pp(p) }
    }

    pub fn lp(p: f64) -> Targets {
        Targets { alpha: 54.0 * p, beta: 103.0 * p * p }
    }

    /// Fractional `(1, e/(e-1) p + eps)` read with `e/(e-1) p + eps` as the
    /// multiplicative factor and pushed through the `(54p a, 54p b + 18 p^(1/p))`
    /// rounding.
    pub fn lp_composed(p: f64, eps: f64) -> Targets {
        let e = std::f64::consts::E;
        let af = e / (e - 1.0) * p + eps;
        Targets { alpha: 54.0 * p * af, beta: 54.0 * p * af + 18.0 * p.powf(1.0 / p) }
    }

    pub fn kcenter() -> Targets {
        Targets { alpha: 3.0, beta: 3.0 }
    }

    pub fn kmedian_fixed(eps: f64) -> Targets {
        Targets { alpha: 54.0 * gamma(1.0) + eps, beta: 60.0 }
    }

    pub fn lp_fixed(p: f64, eps: f64) -> Targets {
        Targets {
            alpha: 54.0 * p * gamma(p) * 2f64.powf(1.0 / p) + eps,
            beta: 108.0 * p * p + 6.0 * p.powf(1.0 / p) + eps,
        }
    }

    pub fn kcenter_fixed() -> Targets {
        Targets { alpha: 9.0, beta: 3.0 }
    }
}

/// The `l_p` factor of the internal clustering approximation (6 at `p = 1`).
pub fn gamma(p: f64) -> f64 {
    rootp(approx_factor_pp(p), p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub eps: f64,
    pub cutting: CuttingPlaneConfig,
}

impl Default for SolveConfig {
    fn default() -> SolveConfig {
        SolveConfig { eps: DEFAULT_EPS, cutting: CuttingPlaneConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub lp_rounds: usize,
    pub cuts: usize,
    pub stalled: bool,
    pub objective_trace: Vec<f64>,
    pub discounts: Vec<f64>,
    pub bisection: Vec<BisectionStep>,
    pub non_monotone_steps: usize,
    pub bipoint: Option<BipointInfo>,
    /// Chosen threshold of the k-center search.
    pub chosen_r: Option<f64>,
    /// Per-client radii `r_j` at the chosen threshold.
    pub radii: Vec<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub pipeline: Pipeline,
    /// The objective the targets refer to.
    pub objective: Objective,
    pub solution: Solution,
    pub fractional: Option<FractionalSolution>,
    pub alpha_target: f64,
    pub beta_target: f64,
    /// Second pair checked for the `l_p` pipeline.
    pub composed_target: Option<Targets>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn targets(&self) -> Targets {
        Targets { alpha: self.alpha_target, beta: self.beta_target }
    }
}

fn require_no_fixed(inst: &Instance, what: &str) -> Result<()> {
    if inst.fixed_clients().is_empty() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{what} does not take fixed clients")))
    }
}

fn require_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("exponent must be a finite real >= 1, got {p}")))
    }
}

fn fractional(inst: &Instance, oracle: &mut dyn SeparationOracle, cfg: &SolveConfig) -> Result<CuttingPlaneResult> {
    inst.ensure_valid()?;
    let base = RegretLp::for_instance(inst);
    let res = cutting_plane(&base, oracle, &cfg.cutting)?;
    info!("fractional r = {} after {} rounds, {} cuts", res.point.r, res.rounds, res.cuts.len());
    Ok(res)
}

/// Fractional solution for `l_p` oracles, whose cuts are linear only for
/// fixed `r` once `p > 1`.
fn fractional_lp(inst: &Instance, oracle: &mut dyn SeparationOracle, p: f64, cfg: &SolveConfig) -> Result<CuttingPlaneResult> {
    if p == 1.0 {
        return fractional(inst, oracle, cfg);
    }
    inst.ensure_valid()?;
    let base = RegretLp::for_instance(inst);
    let total: f64 = (0..inst.nc())
        .map(|j| inst.weight(j) * (0..inst.nf()).map(|i| powp(inst.c(i, j), p)).fold(0.0, f64::max))
        .sum();
    let res = regret_bisection(&base, oracle, rootp(total, p), &cfg.cutting)?;
    info!("fractional r = {} after {} rounds, {} cuts", res.point.r, res.rounds, res.cuts.len());
    Ok(res)
}

fn round(
    inst: &Instance,
    pipeline: Pipeline,
    objective: Objective,
    targets: Targets,
    frac: CuttingPlaneResult,
    discounts: Vec<f64>,
    p: f64,
) -> Result<SolveReport> {
    let prob = ClusterProblem::from_instance(inst);
    let out = clustering_with_discounts(&prob, &discounts, p)?;
    Ok(SolveReport {
        pipeline,
        objective,
        solution: Solution::new(out.solution),
        alpha_target: targets.alpha,
        beta_target: targets.beta,
        composed_target: None,
        diagnostics: Diagnostics {
            lp_rounds: frac.rounds,
            cuts: frac.cuts.len(),
            stalled: frac.stalled,
            objective_trace: frac.objective_trace,
            discounts,
            bisection: out.trace,
            non_monotone_steps: out.non_monotone_steps,
            bipoint: out.bipoint,
            ..Diagnostics::default()
        },
        fractional: Some(frac.point),
    })
}

/// `scale * fpp_j^(1/p)`, zero on fixed clients.
fn scaled_discounts(inst: &Instance, frac: &FractionalSolution, p: f64, scale: f64) -> Vec<f64> {
    frac.fpp(inst, p)
        .iter()
        .enumerate()
        .map(|(j, &v)| if inst.is_fixed(j) { 0.0 } else { scale * rootp(v.max(0.0), p) })
        .collect()
}

/// Universal k-median, targets `(27, 49)`.
pub fn universal_kmedian(inst: &Instance) -> Result<SolveReport> {
    universal_kmedian_with(inst, &SolveConfig::default())
}

pub fn universal_kmedian_with(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport> {
    require_no_fixed(inst, "universal_kmedian")?;
    let frac = fractional(inst, &mut KMedianOracle { inst, p: 1.0 }, cfg)?;
    let d = scaled_discounts(inst, &frac.point, 1.0, 3.0);
    round(inst, Pipeline::KMedian, Objective::MEDIAN, Targets::kmedian(), frac, d, 1.0)
}

/// Universal `l_p^p` clustering, targets `(27^p, 27^p e/(e-1) + (2/3) 9^p)`.
pub fn universal_lpp(inst: &Instance, p: f64) -> Result<SolveReport> {
    universal_lpp_with(inst, p, &SolveConfig::default())
}

pub fn universal_lpp_with(inst: &Instance, p: f64, cfg: &SolveConfig) -> Result<SolveReport> {
    require_p(p)?;
    require_no_fixed(inst, "universal_lpp")?;
    let frac = fractional(inst, &mut KMedianOracle { inst, p }, cfg)?;
    let d = scaled_discounts(inst, &frac.point, p, 3.0);
    round(inst, Pipeline::Lpp, Objective::Lpp(p), Targets::lpp(p), frac, d, p)
}

/// Universal `l_p` clustering, targets `(54p, 103p^2)`; the composed pair is
/// reported as well.
pub fn universal_lp(inst: &Instance, p: f64, eps: f64) -> Result<SolveReport> {
    universal_lp_with(inst, p, &SolveConfig { eps, ..SolveConfig::default() })
}

pub fn universal_lp_with(inst: &Instance, p: f64, cfg: &SolveConfig) -> Result<SolveReport> {
    require_p(p)?;
    require_no_fixed(inst, "universal_lp")?;
    let eps_prime = default_eps_prime(cfg.eps, p);
    let frac = fractional_lp(inst, &mut LpOracle { inst, p, eps_prime }, p, cfg)?;
    let d = scaled_discounts(inst, &frac.point, p, 6.0);
    let mut rep = round(inst, Pipeline::Lp, Objective::Lp(p), Targets::lp(p), frac, d, p)?;
    rep.composed_target = Some(Targets::lp_composed(p, cfg.eps));
    Ok(rep)
}

/// Universal k-median with fixed clients, targets `(54 gamma + eps, 60)`.
pub fn universal_kmedian_fixed(inst: &Instance, eps: f64) -> Result<SolveReport> {
    universal_kmedian_fixed_with(inst, &SolveConfig { eps, ..SolveConfig::default() })
}

pub fn universal_kmedian_fixed_with(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport> {
    inst.ensure_valid()?;
    let g = gamma(1.0);
    let ctx = FixedContext::new(inst, 1.0)?;
    let mut oracle = KMedianFixedOracle { ctx, eps: cfg.eps / (54.0 * g) };
    let frac = fractional(inst, &mut oracle, cfg)?;
    let d = scaled_discounts(inst, &frac.point, 1.0, 3.0);
    let mut rep = round(inst, Pipeline::KMedianFixed, Objective::MEDIAN, Targets::kmedian_fixed(cfg.eps), frac, d, 1.0)?;
    rep.diagnostics.gamma = Some(g);
    Ok(rep)
}

/// Universal `l_p` clustering with fixed clients, targets
/// `(54p gamma 2^(1/p) + eps, 108p^2 + 6p^(1/p) + eps)`.
pub fn universal_lp_fixed(inst: &Instance, p: f64, eps: f64) -> Result<SolveReport> {
    universal_lp_fixed_with(inst, p, &SolveConfig { eps, ..SolveConfig::default() })
}

pub fn universal_lp_fixed_with(inst: &Instance, p: f64, cfg: &SolveConfig) -> Result<SolveReport> {
    require_p(p)?;
    inst.ensure_valid()?;
    let g = gamma(p);
    let ctx = FixedContext::new(inst, p)?;
    let mut oracle = LpFixedOracle {
        ctx,
        p,
        eps: cfg.eps / (54.0 * p * g * 2f64.powf(1.0 / p)),
        eps_prime: default_eps_prime(cfg.eps, p),
    };
    let frac = fractional_lp(inst, &mut oracle, p, cfg)?;
    let d = scaled_discounts(inst, &frac.point, p, 6.0);
    let mut rep = round(inst, Pipeline::LpFixed, Objective::Lp(p), Targets::lp_fixed(p, cfg.eps), frac, d, p)?;
    rep.diagnostics.gamma = Some(g);
    Ok(rep)
}

fn pad_to_k(inst: &Instance, mut centers: Vec<usize>) -> Solution {
    let target = inst.k().min(inst.nf());
    let mut i = 0;
    while centers.len() < target && i < inst.nf() {
        if !centers.contains(&i) {
            centers.push(i);
        }
        i += 1;
    }
    Solution::new(centers)
}

fn covers(d: f64, radius: f64) -> bool {
    d <= radius + 1e-9 * (1.0 + radius)
}

/// `{0}` and every positive difference `c_ij - c_i'j'`, ascending.
pub fn kcenter_thresholds(inst: &Instance) -> Vec<f64> {
    let mut vals: Vec<f64> = inst.fc_matrix().to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut out = vec![0.0];
    for (a, &x) in vals.iter().enumerate() {
        for &y in &vals[..a] {
            out.push(x - y);
        }
    }
    out.push(inst.max_fc());
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Clients by ascending `r_j`, each opening its nearest facility unless an
/// open one lies within `3 r_j`. Gives up once more than `limit` are open.
fn threshold_greedy(inst: &Instance, radii: &[f64], limit: usize) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..inst.nc()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
    let mut open: Vec<usize> = Vec::new();
    for j in order {
        if open.iter().any(|&i| covers(inst.c(i, j), 3.0 * radii[j])) {
            continue;
        }
        let (i, _) = inst.nearest_facility(j);
        open.push(i);
        if open.len() > limit {
            return None;
        }
    }
    Some(open)
}

fn kcenter_search(
    inst: &Instance,
    pipeline: Pipeline,
    targets: Targets,
    base: &[f64],
) -> Result<SolveReport> {
    for r in kcenter_thresholds(inst) {
        let radii: Vec<f64> = base.iter().map(|&b| b + r).collect();
        if let Some(open) = threshold_greedy(inst, &radii, inst.k()) {
            info!("{pipeline}: threshold r = {r} opens {}", open.len());
            return Ok(SolveReport {
                pipeline,
                objective: Objective::Center,
                solution: pad_to_k(inst, open),
                fractional: None,
                alpha_target: targets.alpha,
                beta_target: targets.beta,
                composed_target: None,
                diagnostics: Diagnostics { chosen_r: Some(r), radii, ..Diagnostics::default() },
            });
        }
    }
    Err(Error::Internal("no threshold admits k centers".into()))
}

/// Universal k-center, targets `(3, 3)`.
pub fn universal_kcenter(inst: &Instance) -> Result<SolveReport> {
    inst.ensure_valid()?;
    require_no_fixed(inst, "universal_kcenter")?;
    let base: Vec<f64> = (0..inst.nc()).map(|j| inst.nearest_facility(j).1).collect();
    kcenter_search(inst, Pipeline::KCenter, Targets::kcenter(), &base)
}

/// Universal k-center with fixed clients, targets `(9, 3)`. The base radius
/// of client `j` is the 3-approximate cost of `C_f` plus `j`.
pub fn universal_kcenter_fixed(inst: &Instance) -> Result<SolveReport> {
    inst.ensure_valid()?;
    let fixed = inst.fixed_clients().to_vec();
    let base_fixed = if fixed.is_empty() { 0.0 } else { kcenter_3approx(inst, &Realization::new(fixed.clone())).0 };
    let base: Vec<f64> = (0..inst.nc())
        .map(|j| {
            if fixed.is_empty() {
                kcenter_3approx(inst, &Realization::new(vec![j])).0
            } else if inst.is_fixed(j) {
                base_fixed
            } else {
                let mut real = fixed.clone();
                real.push(j);
                kcenter_3approx(inst, &Realization::new(real)).0
            }
        })
        .collect();
    kcenter_search(inst, Pipeline::KCenterFixed, Targets::kcenter_fixed(), &base)
}

/// Threshold 3-approximation for k-center on a realization. Returns the
/// achieved radius and the centers (padded to `k`).
pub fn kcenter_3approx(inst: &Instance, real: &Realization) -> (f64, Solution) {
    let clients = real.clients();
    if clients.is_empty() {
        return (0.0, pad_to_k(inst, Vec::new()));
    }
    let mut radii: Vec<f64> = clients.iter().flat_map(|&j| (0..inst.nf()).map(move |i| inst.c(i, j))).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    for &big_r in &radii {
        let mut uncovered: Vec<usize> = clients.to_vec();
        let mut open = Vec::new();
        let mut ok = true;
        while let Some(&j) = uncovered.first() {
            let (i, d) = inst.nearest_facility(j);
            if !covers(d, big_r) || open.len() == inst.k() {
                ok = false;
                break;
            }
            open.push(i);
            uncovered.retain(|&j2| !covers(inst.c(i, j2), 3.0 * big_r));
        }
        if ok {
            let sol = pad_to_k(inst, open);
            let costs = sol.costs(inst);
            let radius = clients.iter().map(|&j| costs[j]).fold(0.0, f64::max);
            return (radius, sol);
        }
    }
    unreachable!("the largest radius always covers every client")
}

/// Dispatches on the instance's objective and fixed clients.
pub fn solve(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport> {
    inst.ensure_valid()?;
    let has_fixed = !inst.fixed_clients().is_empty();
    match (Pipeline::select(inst.objective(), has_fixed)?, inst.objective()) {
        (Pipeline::KMedian, _) => universal_kmedian_with(inst, cfg),
        (Pipeline::KMedianFixed, _) => universal_kmedian_fixed_with(inst, cfg),
        (Pipeline::Lpp, Objective::Lpp(p)) => universal_lpp_with(inst, p, cfg),
        (Pipeline::Lp, Objective::Lp(p)) => universal_lp_with(inst, p, cfg),
        (Pipeline::LpFixed, Objective::Lp(p)) => universal_lp_fixed_with(inst, p, cfg),
        (Pipeline::KCenter, _) => universal_kcenter(inst),
        (Pipeline::KCenterFixed, _) => universal_kcenter_fixed(inst),
        (pl, obj) => Err(Error::Internal(format!("pipeline {pl} selected for {obj:?}"))),
    }
}

/// Exhaustive check of a report against the exact oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub mr: f64,
    pub mrs: Solution,
    pub regret: f64,
    pub regret_realization: Realization,
    pub holds: bool,
    pub worst_excess: f64,
    pub worst_realization: Realization,
    /// Max over realizations with positive optimum of `(SOL - beta MR) / OPT`.
    pub empirical_alpha: f64,
    pub composed_holds: Option<bool>,
    /// `r` of the fractional point does not exceed `MR`.
    pub lp_lower_bound_holds: Option<bool>,
}

pub const VERIFY_TOL: f64 = 1e-6;

pub fn verify(inst: &Instance, report: &SolveReport) -> Result<Verification> {
    verify_with_cap(inst, report, crate::exact::cap_from_env())
}

pub fn verify_with_cap(inst: &Instance, report: &SolveReport, cap: u128) -> Result<Verification> {
    let oracle = ExactOracle::with_cap(inst, report.objective, cap)?;
    let mrs = oracle.minimum_regret()?;
    let mr = mrs.regret;
    let costs = report.solution.costs(inst);
    let reg = oracle.exact_regret(&costs)?;
    let t = report.targets();
    let check = oracle.check_bound(&costs, t.alpha, t.beta, mr, VERIFY_TOL)?;
    let composed_holds = match report.composed_target {
        Some(c) => Some(oracle.check_bound(&costs, c.alpha, c.beta, mr, VERIFY_TOL)?.holds),
        None => None,
    };
    Ok(Verification {
        mr,
        mrs: mrs.solution.unwrap_or_else(|| Solution::new(Vec::new())),
        regret: reg.regret,
        regret_realization: reg.realization,
        holds: check.holds,
        worst_excess: check.worst_excess,
        worst_realization: check.worst_realization,
        empirical_alpha: check.max_ratio,
        composed_holds,
        lp_lower_bound_holds: report.fractional.as_ref().map(|f| f.r <= mr + VERIFY_TOL),
    })
}
