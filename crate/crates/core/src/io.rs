//! JSON instance and report files.
//!
//! The metric is given over the union of facility and client ids, facilities
//! first, then clients not already listed as facilities.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::RegretReport;
use crate::model::{Instance, Objective, Realization, Solution};
use crate::solvers::{SolveReport, Targets, Verification};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormSpec {
    Finite(f64),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Matrix {
        matrix: Vec<Vec<f64>>,
    },
    Points {
        points: BTreeMap<String, Vec<f64>>,
        #[serde(default = "default_norm")]
        norm: NormSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveSpec {
    Named(String),
    Lp { lp: f64 },
    Lpp { lpp: f64 },
}

impl ObjectiveSpec {
    pub fn from_objective(obj: Objective) -> ObjectiveSpec {
        match obj {
            Objective::Lp(p) if p == 1.0 => ObjectiveSpec::Named("median".into()),
            Objective::Lpp(p) if p == 2.0 => ObjectiveSpec::Named("means".into()),
            Objective::Center => ObjectiveSpec::Named("center".into()),
            Objective::Lp(p) => ObjectiveSpec::Lp { lp: p },
            Objective::Lpp(p) => ObjectiveSpec::Lpp { lpp: p },
        }
    }

    pub fn to_objective(&self) -> Result<Objective> {
        match self {
            ObjectiveSpec::Named(s) => match s.as_str() {
                "median" => Ok(Objective::MEDIAN),
                "means" => Ok(Objective::MEANS),
                "center" => Ok(Objective::Center),
                other => Err(Error::Malformed(format!("unknown objective `{other}`"))),
            },
            ObjectiveSpec::Lp { lp } => Ok(Objective::Lp(*lp)),
            ObjectiveSpec::Lpp { lpp } => Ok(Objective::Lpp(*lpp)),
        }
    }
}

fn default_norm() -> NormSpec {
    NormSpec::Finite(2.0)
}

fn default_objective() -> ObjectiveSpec {
    ObjectiveSpec::Named("median".into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub facilities: Vec<String>,
    pub clients: Vec<String>,
    pub metric: MetricSpec,
    pub k: usize,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed_clients: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, f64>,
}

fn norm_dist(a: &[f64], b: &[f64], norm: &NormSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Malformed("points have different dimensions".into()));
    }
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match norm {
        NormSpec::Named(s) if s == "inf" => Ok(diffs.fold(0.0, f64::max)),
        NormSpec::Finite(p) if *p == 1.0 => Ok(diffs.sum()),
        NormSpec::Finite(p) if *p == 2.0 => Ok(diffs.map(|d| d * d).sum::<f64>().sqrt()),
        other => Err(Error::Malformed(format!("norm must be 1, 2 or \"inf\", got {other:?}"))),
    }
}

impl InstanceFile {
    /// Canonical (matrix) form of an instance.
    pub fn from_instance(inst: &Instance) -> InstanceFile {
        let pts = canonical_points(inst);
        let matrix = pts.iter().map(|&a| pts.iter().map(|&b| inst.point_dist(a, b)).collect()).collect();
        let weights = if inst.has_unit_weights() {
            BTreeMap::new()
        } else {
            (0..inst.nc()).map(|j| (inst.client_id(j).to_string(), inst.weight(j))).collect()
        };
        InstanceFile {
            facilities: (0..inst.nf()).map(|i| inst.facility_id(i).to_string()).collect(),
            clients: (0..inst.nc()).map(|j| inst.client_id(j).to_string()).collect(),
            metric: MetricSpec::Matrix { matrix },
            k: inst.k(),
            objective: ObjectiveSpec::from_objective(inst.objective()),
            fixed_clients: inst.fixed_clients().iter().map(|&j| inst.client_id(j).to_string()).collect(),
            weights,
        }
    }

    /// Builds and validates the instance.
    pub fn to_instance(&self) -> Result<Instance> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut facilities = Vec::new();
        for id in &self.facilities {
            if index.contains_key(id.as_str()) {
                return Err(Error::Malformed(format!("facility `{id}` listed twice")));
            }
            index.insert(id, ids.len());
            facilities.push(ids.len());
            ids.push(id.clone());
        }
        let mut clients = Vec::new();
        let mut seen_clients = BTreeSet::new();
        for id in &self.clients {
            if !seen_clients.insert(id.as_str()) {
                return Err(Error::Malformed(format!("client `{id}` listed twice")));
            }
            let a = match index.get(id.as_str()) {
                Some(&a) => a,
                None => {
                    index.insert(id, ids.len());
                    ids.push(id.clone());
                    ids.len() - 1
                }
            };
            clients.push(a);
        }
        let n = ids.len();
        let matrix = match &self.metric {
            MetricSpec::Matrix { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Malformed(format!(
                        "metric.matrix must be {n}x{n} over facilities then new clients"
                    )));
                }
                matrix.clone()
            }
            MetricSpec::Points { points, norm } => {
                let coords: Vec<&Vec<f64>> = ids
                    .iter()
                    .map(|id| points.get(id).ok_or_else(|| Error::Malformed(format!("no coordinates for `{id}`"))))
                    .collect::<Result<_>>()?;
                let mut m = vec![vec![0.0; n]; n];
                for a in 0..n {
                    for b in 0..n {
                        m[a][b] = norm_dist(coords[a], coords[b], norm)?;
                    }
                }
                m
            }
        };
        let client_of = |id: &str| -> Result<usize> {
            self.clients.iter().position(|c| c == id).ok_or_else(|| Error::UnknownClient(id.to_string()))
        };
        let fixed = self.fixed_clients.iter().map(|id| client_of(id)).collect::<Result<Vec<_>>>()?;
        let mut weights = vec![1.0; clients.len()];
        for (id, &w) in &self.weights {
            weights[client_of(id)?] = w;
        }
        Instance::new(ids, facilities, clients, matrix, self.k)
            .with_objective(self.objective.to_objective()?)
            .with_fixed(fixed)
            .with_weights(weights)
            .validated()
    }
}

/// Points in file order: facilities, then clients not already facilities.
fn canonical_points(inst: &Instance) -> Vec<usize> {
    let mut pts: Vec<usize> = inst.facility_points().to_vec();
    for &b in inst.client_points() {
        if !pts.contains(&b) {
            pts.push(b);
        }
    }
    pts
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Malformed(format!("line {} column {}: {e}", e.line(), e.column()))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_instance()
}

pub fn write_instance(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes");
    s.push('\n');
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetPair {
    pub alpha: f64,
    pub beta: f64,
}

impl From<Targets> for TargetPair {
    fn from(t: Targets) -> TargetPair {
        TargetPair { alpha: t.alpha, beta: t.beta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationBlock {
    pub mr: f64,
    pub mrs: Vec<String>,
    pub regret: f64,
    pub regret_realization: Vec<String>,
    pub bound_holds: bool,
    pub worst_excess: f64,
    pub worst_realization: Vec<String>,
    pub empirical_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composed_bound_holds: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_lower_bound_holds: Option<bool>,
}

impl VerificationBlock {
    pub fn new(inst: &Instance, v: &Verification) -> VerificationBlock {
        VerificationBlock {
            mr: v.mr,
            mrs: v.mrs.ids(inst),
            regret: v.regret,
            regret_realization: v.regret_realization.ids(inst),
            bound_holds: v.holds,
            worst_excess: v.worst_excess,
            worst_realization: v.worst_realization.ids(inst),
            empirical_alpha: v.empirical_alpha,
            composed_bound_holds: v.composed_holds,
            lp_lower_bound_holds: v.lp_lower_bound_holds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub pipeline: String,
    pub objective: ObjectiveSpec,
    pub solution: Vec<String>,
    pub target: TargetPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composed_target: Option<TargetPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractional_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_r: Option<f64>,
    pub lp_rounds: usize,
    pub cuts: usize,
    pub bisection_steps: usize,
    pub non_monotone_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationBlock>,
}

impl ReportFile {
    pub fn new(inst: &Instance, rep: &SolveReport, verification: Option<&Verification>) -> ReportFile {
        let d = &rep.diagnostics;
        ReportFile {
            pipeline: rep.pipeline.name().to_string(),
            objective: ObjectiveSpec::from_objective(rep.objective),
            solution: rep.solution.ids(inst),
            target: rep.targets().into(),
            composed_target: rep.composed_target.map(Into::into),
            fractional_r: rep.fractional.as_ref().map(|f| f.r),
            chosen_r: d.chosen_r,
            lp_rounds: d.lp_rounds,
            cuts: d.cuts,
            bisection_steps: d.bisection.len(),
            non_monotone_steps: d.non_monotone_steps,
            gamma: d.gamma,
            verification: verification.map(|v| VerificationBlock::new(inst, v)),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<ReportFile> {
        serde_json::from_str(text).map_err(json_error)
    }
}

/// JSON form of an exact regret computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretFile {
    pub regret: f64,
    pub realization: Vec<String>,
    pub adversary: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<String>>,
}

impl RegretFile {
    pub fn new(inst: &Instance, r: &RegretReport) -> RegretFile {
        RegretFile {
            regret: r.regret,
            realization: r.realization.ids(inst),
            adversary: r.adversary.ids(inst),
            solution: r.solution.as_ref().map(|s| s.ids(inst)),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("regret serializes");
        s.push('\n');
        s
    }
}

/// Facility ids to a solution.
pub fn solution_from_ids(inst: &Instance, ids: &[String]) -> Result<Solution> {
    let idx = ids
        .iter()
        .map(|id| inst.facility_index(id).ok_or_else(|| Error::UnknownFacility(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution::new(idx))
}

/// Client ids to a realization.
pub fn realization_from_ids(inst: &Instance, ids: &[String]) -> Result<Realization> {
    let idx = ids
        .iter()
        .map(|id| inst.client_index(id).ok_or_else(|| Error::UnknownClient(id.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Realization::new(idx))
}
