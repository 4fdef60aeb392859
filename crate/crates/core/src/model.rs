//! Instances, solutions, realizations and the clustering cost functions.
//!
//! Facilities and clients are addressed by their position in the instance's
//! facility and client lists. Ids are only used at the I/O boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used by [`Instance::validate`].
pub const METRIC_TOL: f64 = 1e-9;

/// Clustering objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// `(sum w_j c_j^p)^(1/p)`; `Lp(1.0)` is k-median.
    Lp(f64),
    /// `sum w_j c_j^p`; `Lpp(2.0)` is k-means.
    Lpp(f64),
    /// `max c_j`.
    Center,
}

impl Objective {
    pub const MEDIAN: Objective = Objective::Lp(1.0);
    pub const MEANS: Objective = Objective::Lpp(2.0);

    pub fn exponent(self) -> Exponent {
        match self {
            Objective::Lp(p) | Objective::Lpp(p) => Exponent::Finite(p),
            Objective::Center => Exponent::Center,
        }
    }

    /// Objective value of a per-client cost vector on a realization.
    pub fn value(self, inst: &Instance, costs: &[f64], real: &Realization) -> f64 {
        match self {
            Objective::Lp(p) => solution_cost(inst, costs, real, Exponent::Finite(p)),
            Objective::Lpp(p) => solution_cost_pp(inst, costs, real, p),
            Objective::Center => solution_cost(inst, costs, real, Exponent::Center),
        }
    }

    fn check(self) -> Option<String> {
        match self {
            Objective::Lp(p) | Objective::Lpp(p) if !(p.is_finite() && p >= 1.0) => {
                Some(format!("objective exponent must be a finite real >= 1, got {p}"))
            }
            _ => None,
        }
    }
}

/// Norm exponent for [`solution_cost`] and [`lp_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    /// The max norm (k-center).
    Center,
}

/// A reason why an instance is rejected.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Dimension(String),
    NonFinite { a: String, b: String },
    Diagonal { point: String, value: f64 },
    Asymmetric { a: String, b: String, ab: f64, ba: f64 },
    Negative { a: String, b: String, value: f64 },
    Triangle { a: String, b: String, c: String, excess: f64 },
    KOutOfRange { k: usize, facilities: usize },
    FixedNotClient { index: usize },
    BadWeight { client: String, weight: f64 },
    BadObjective(String),
    DuplicateId(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension(s) => write!(f, "dimension mismatch: {s}"),
            Violation::NonFinite { a, b } => write!(f, "d({a},{b}) is not finite"),
            Violation::Diagonal { point, value } => write!(f, "d({point},{point}) = {value} != 0"),
            Violation::Asymmetric { a, b, ab, ba } => {
                write!(f, "d({a},{b}) = {ab} but d({b},{a}) = {ba}")
            }
            Violation::Negative { a, b, value } => write!(f, "d({a},{b}) = {value} < 0"),
            Violation::Triangle { a, b, c, excess } => {
                write!(f, "d({a},{c}) exceeds d({a},{b}) + d({b},{c}) by {excess}")
            }
            Violation::KOutOfRange { k, facilities } => {
                write!(f, "k = {k} outside 1..={facilities}")
            }
            Violation::FixedNotClient { index } => {
                write!(f, "fixed client index {index} is not a client")
            }
            Violation::BadWeight { client, weight } => {
                write!(f, "weight of client {client} is {weight}")
            }
            Violation::BadObjective(s) => write!(f, "{s}"),
            Violation::DuplicateId(s) => write!(f, "duplicate id `{s}`"),
        }
    }
}

/// A clustering instance over a finite metric.
///
/// The metric covers every point; a point may be both a facility and a client.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    point_ids: Vec<String>,
    facilities: Vec<usize>,
    clients: Vec<usize>,
    dist: Vec<f64>,
    k: usize,
    objective: Objective,
    fixed: Vec<bool>,
    fixed_list: Vec<usize>,
    weights: Vec<f64>,
    fc: Vec<f64>,
}

impl Instance {
    /// Builds an instance from a full point-to-point matrix. Facilities and
    /// clients are indices into `point_ids`. No validation happens here.
    pub fn new(
        point_ids: Vec<String>,
        facilities: Vec<usize>,
        clients: Vec<usize>,
        matrix: Vec<Vec<f64>>,
        k: usize,
    ) -> Instance {
        let n = point_ids.len();
        let mut dist = vec![f64::NAN; n * n];
        for (a, row) in matrix.iter().enumerate().take(n) {
            for (b, &v) in row.iter().enumerate().take(n) {
                dist[a * n + b] = v;
            }
        }
        let nc = clients.len();
        let mut inst = Instance {
            point_ids,
            facilities,
            clients,
            dist,
            k,
            objective: Objective::MEDIAN,
            fixed: vec![false; nc],
            fixed_list: Vec::new(),
            weights: vec![1.0; nc],
            fc: Vec::new(),
        };
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            // Keep the shape so validate() can report it.
            inst.dist = Vec::new();
        }
        inst.rebuild_cache();
        inst
    }

    /// Facilities and clients as disjoint points, the first `nf` rows being
    /// facilities. Ids are `f0..` and `c0..`.
    pub fn from_matrix(matrix: Vec<Vec<f64>>, nf: usize, k: usize) -> Instance {
        let n = matrix.len();
        let ids = (0..n)
            .map(|a| if a < nf { format!("f{a}") } else { format!("c{}", a - nf) })
            .collect();
        Instance::new(ids, (0..nf).collect(), (nf..n).collect(), matrix, k)
    }

    pub fn with_objective(mut self, objective: Objective) -> Instance {
        self.objective = objective;
        self
    }

    /// Marks clients (by client index) as fixed. Out-of-range indices are
    /// reported by [`Instance::validate`].
    pub fn with_fixed(mut self, fixed: Vec<usize>) -> Instance {
        let mut list = fixed;
        list.sort_unstable();
        list.dedup();
        self.fixed = vec![false; self.clients.len()];
        for &j in &list {
            if j < self.fixed.len() {
                self.fixed[j] = true;
            }
        }
        self.fixed_list = list;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Instance {
        self.weights = weights;
        self
    }

    pub fn with_k(mut self, k: usize) -> Instance {
        self.k = k;
        self
    }

    fn rebuild_cache(&mut self) {
        let n = self.point_ids.len();
        if self.dist.len() != n * n
            || self.facilities.iter().chain(&self.clients).any(|&a| a >= n)
        {
            self.fc = Vec::new();
            return;
        }
        let nc = self.clients.len();
        let mut fc = vec![0.0; self.facilities.len() * nc];
        for (i, &a) in self.facilities.iter().enumerate() {
            for (j, &b) in self.clients.iter().enumerate() {
                fc[i * nc + j] = self.dist[a * n + b];
            }
        }
        self.fc = fc;
    }

    /// Lists every reason the instance is unusable; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.point_ids.len();
        if self.dist.len() != n * n {
            out.push(Violation::Dimension(format!("metric must be {n}x{n}")));
            return out;
        }
        for (x, &a) in self.facilities.iter().chain(&self.clients).enumerate() {
            if a >= n {
                out.push(Violation::Dimension(format!("point index {a} at position {x}")));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in &self.point_ids {
            if !seen.insert(id) {
                out.push(Violation::DuplicateId(id.clone()));
            }
        }
        let id = |a: usize| self.point_ids[a].clone();
        let d = |a: usize, b: usize| self.dist[a * n + b];
        let mut finite = true;
        for a in 0..n {
            for b in 0..n {
                if !d(a, b).is_finite() {
                    out.push(Violation::NonFinite { a: id(a), b: id(b) });
                    finite = false;
                }
            }
        }
        if finite {
            for a in 0..n {
                if d(a, a).abs() > METRIC_TOL {
                    out.push(Violation::Diagonal { point: id(a), value: d(a, a) });
                }
                for b in 0..n {
                    if d(a, b) < -METRIC_TOL {
                        out.push(Violation::Negative { a: id(a), b: id(b), value: d(a, b) });
                    }
                    if b > a && (d(a, b) - d(b, a)).abs() > METRIC_TOL {
                        out.push(Violation::Asymmetric {
                            a: id(a),
                            b: id(b),
                            ab: d(a, b),
                            ba: d(b, a),
                        });
                    }
                }
            }
            for a in 0..n {
                for c in 0..n {
                    let ac = d(a, c);
                    for b in 0..n {
                        let excess = ac - d(a, b) - d(b, c);
                        if excess > METRIC_TOL {
                            out.push(Violation::Triangle { a: id(a), b: id(b), c: id(c), excess });
                        }
                    }
                }
            }
        }
        if self.k < 1 || self.k > self.facilities.len() {
            out.push(Violation::KOutOfRange { k: self.k, facilities: self.facilities.len() });
        }
        for &j in &self.fixed_list {
            if j >= self.clients.len() {
                out.push(Violation::FixedNotClient { index: j });
            }
        }
        if self.weights.len() != self.clients.len() {
            out.push(Violation::Dimension(format!(
                "{} weights for {} clients",
                self.weights.len(),
                self.clients.len()
            )));
        } else {
            for (j, &w) in self.weights.iter().enumerate() {
                if !(w.is_finite() && w >= 0.0) {
                    out.push(Violation::BadWeight { client: self.client_id(j).to_string(), weight: w });
                }
            }
        }
        if let Some(msg) = self.objective.check() {
            out.push(Violation::BadObjective(msg));
        }
        out
    }

    /// Returns the instance if it is valid.
    pub fn validated(self) -> Result<Instance> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    pub fn nf(&self) -> usize {
        self.facilities.len()
    }

    pub fn nc(&self) -> usize {
        self.clients.len()
    }

    pub fn n_points(&self) -> usize {
        self.point_ids.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn point_ids(&self) -> &[String] {
        &self.point_ids
    }

    pub fn facility_points(&self) -> &[usize] {
        &self.facilities
    }

    pub fn client_points(&self) -> &[usize] {
        &self.clients
    }

    pub fn facility_id(&self, i: usize) -> &str {
        &self.point_ids[self.facilities[i]]
    }

    pub fn client_id(&self, j: usize) -> &str {
        &self.point_ids[self.clients[j]]
    }

    pub fn facility_index(&self, id: &str) -> Option<usize> {
        self.facilities.iter().position(|&a| self.point_ids[a] == id)
    }

    pub fn client_index(&self, id: &str) -> Option<usize> {
        self.clients.iter().position(|&a| self.point_ids[a] == id)
    }

    /// Distance between two points.
    pub fn point_dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.point_ids.len() + b]
    }

    /// Distance from facility `i` to client `j`.
    #[inline]
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.fc[i * self.clients.len() + j]
    }

    /// Facility-to-client distances, row-major by facility.
    pub fn fc_matrix(&self) -> &[f64] {
        &self.fc
    }

    /// Distance between facilities `i` and `i2`.
    pub fn ff(&self, i: usize, i2: usize) -> f64 {
        self.point_dist(self.facilities[i], self.facilities[i2])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.fixed[j]
    }

    /// Fixed client indices, ascending.
    pub fn fixed_clients(&self) -> &[usize] {
        &self.fixed_list
    }

    /// Non-fixed client indices, ascending.
    pub fn free_clients(&self) -> Vec<usize> {
        (0..self.nc()).filter(|&j| !self.fixed[j]).collect()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Largest facility-to-client distance.
    pub fn max_fc(&self) -> f64 {
        self.fc.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest facility-to-client distance of client `j` and its facility.
    pub fn nearest_facility(&self, j: usize) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.nf() {
            let d = self.c(i, j);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

/// A set of open facilities, stored sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Solution(Vec<usize>);

impl Solution {
    pub fn new(mut centers: Vec<usize>) -> Solution {
        centers.sort_unstable();
        centers.dedup();
        Solution(centers)
    }

    pub fn centers(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_superset_of(&self, other: &[usize]) -> bool {
        other.iter().all(|&i| self.contains(i))
    }

    /// Distance from every client to its nearest open facility
    /// (infinite when no facility is open).
    pub fn costs(&self, inst: &Instance) -> CostVector {
        (0..inst.nc())
            .map(|j| self.0.iter().map(|&i| inst.c(i, j)).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Nearest open facility of each client, ties to the smaller index.
    pub fn assignment(&self, inst: &Instance) -> Vec<Option<usize>> {
        (0..inst.nc())
            .map(|j| {
                let mut best: Option<(usize, f64)> = None;
                for &i in &self.0 {
                    let d = inst.c(i, j);
                    if best.is_none_or(|(_, b)| d < b) {
                        best = Some((i, d));
                    }
                }
                best.map(|b| b.0)
            })
            .collect()
    }

    pub fn ids(&self, inst: &Instance) -> Vec<String> {
        self.0.iter().map(|&i| inst.facility_id(i).to_string()).collect()
    }
}

/// Per-client connection costs.
pub type CostVector = Vec<f64>;

/// The set of clients that actually show up, stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Realization(Vec<usize>);

impl Realization {
    pub fn new(mut clients: Vec<usize>) -> Realization {
        clients.sort_unstable();
        clients.dedup();
        Realization(clients)
    }

    pub fn all(nc: usize) -> Realization {
        Realization((0..nc).collect())
    }

    pub fn empty() -> Realization {
        Realization(Vec::new())
    }

    pub fn clients(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn ids(&self, inst: &Instance) -> Vec<String> {
        self.0.iter().map(|&j| inst.client_id(j).to_string()).collect()
    }
}

/// `(sum_{j in real} w_j c_j^p)^(1/p)`, or the max for [`Exponent::Center`].
/// The empty realization costs 0.
pub fn solution_cost(inst: &Instance, costs: &[f64], real: &Realization, p: Exponent) -> f64 {
    match p {
        Exponent::Center => real.clients().iter().map(|&j| costs[j]).fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let s = solution_cost_pp(inst, costs, real, p);
            if p == 1.0 {
                s
            } else {
                s.powf(1.0 / p)
            }
        }
    }
}

/// `sum_{j in real} w_j c_j^p`.
pub fn solution_cost_pp(inst: &Instance, costs: &[f64], real: &Realization, p: f64) -> f64 {
    real.clients()
        .iter()
        .map(|&j| {
            let c = costs[j];
            let cp = if p == 1.0 { c } else { c.powf(p) };
            inst.weight(j) * cp
        })
        .sum()
}

/// Unweighted `l_p` norm; [`Exponent::Center`] is the max norm.
pub fn lp_norm(v: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Center => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
        Exponent::Finite(p) if p == 1.0 => v.iter().map(|x| x.abs()).sum(),
        Exponent::Finite(p) => v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// `x^p` with the exact `p = 1` shortcut.
#[inline]
pub fn powp(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// `x^(1/p)` with the exact `p = 1` shortcut.
#[inline]
pub fn rootp(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x.sqrt()
    } else {
        x.powf(1.0 / p)
    }
}
