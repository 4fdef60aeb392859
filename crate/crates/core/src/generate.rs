//! Seeded instance generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Facilities and clients uniform in `[0, 100]^2`, Euclidean distances.
    RandomEuclidean,
    /// `max(nf, nc)` points at mutual distance 1; facilities and clients are
    /// prefixes of the same point list.
    Uniform,
    /// Sets as facilities and elements as clients; distance 1 to member
    /// elements and 3 to the rest, closed under shortest paths.
    SetCoverGadget,
    /// A random graph on `nc` vertices, each replaced by a `k`-clique of
    /// clients that are also facilities; unit edges inside a clique and
    /// between cliques of adjacent vertices, shortest-path metric.
    CliqueGadget,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::RandomEuclidean, Family::Uniform, Family::SetCoverGadget, Family::CliqueGadget];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomEuclidean => "random-euclidean",
            Family::Uniform => "uniform",
            Family::SetCoverGadget => "set-cover-gadget",
            Family::CliqueGadget => "clique-gadget",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown family `{s}`")))
    }
}

/// Generates a validated instance with the median objective.
pub fn generate(family: Family, seed: u64, nf: usize, nc: usize, k: usize) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = match family {
        Family::RandomEuclidean => random_euclidean(&mut rng, nf, nc, k),
        Family::Uniform => uniform(nf, nc, k),
        Family::SetCoverGadget => set_cover(&mut rng, nf, nc, k),
        Family::CliqueGadget => clique(&mut rng, nc, k),
    };
    inst.validated()
}

/// Facilities `f0..` and clients `c0..` in `[0, side]^2`.
pub fn random_euclidean<R: Rng>(rng: &mut R, nf: usize, nc: usize, k: usize) -> Instance {
    let side = 100.0;
    let pts: Vec<(f64, f64)> = (0..nf + nc).map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side))).collect();
    let matrix = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    Instance::from_matrix(matrix, nf, k)
}

fn uniform(nf: usize, nc: usize, k: usize) -> Instance {
    let n = nf.max(nc);
    let ids = (0..n).map(|a| format!("p{a}")).collect();
    let matrix = (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { 1.0 }).collect()).collect();
    Instance::new(ids, (0..nf).collect(), (0..nc).collect(), matrix, k)
}

fn closure(m: &mut [Vec<f64>]) {
    let n = m.len();
    for via in 0..n {
        for a in 0..n {
            for b in 0..n {
                let d = m[a][via] + m[via][b];
                if d < m[a][b] {
                    m[a][b] = d;
                }
            }
        }
    }
}

fn set_cover<R: Rng>(rng: &mut R, nf: usize, nc: usize, k: usize) -> Instance {
    let mut member = vec![vec![false; nc]; nf];
    for j in 0..nc {
        for row in member.iter_mut() {
            row[j] = rng.random_bool(0.5);
        }
        if nf > 0 && !member.iter().any(|row| row[j]) {
            member[rng.random_range(0..nf)][j] = true;
        }
    }
    let n = nf + nc;
    let mut m = vec![vec![f64::INFINITY; n]; n];
    for (a, row) in m.iter_mut().enumerate() {
        row[a] = 0.0;
    }
    for i in 0..nf {
        for j in 0..nc {
            let d = if member[i][j] { 1.0 } else { 3.0 };
            m[i][nf + j] = d;
            m[nf + j][i] = d;
        }
    }
    closure(&mut m);
    Instance::from_matrix(m, nf, k)
}

fn clique<R: Rng>(rng: &mut R, vertices: usize, k: usize) -> Instance {
    let size = k.max(1);
    let n = vertices * size;
    let mut adj = vec![vec![false; vertices]; vertices];
    for u in 0..vertices {
        for v in u + 1..vertices {
            let e = rng.random_bool(0.5);
            adj[u][v] = e;
            adj[v][u] = e;
        }
    }
    let mut m = vec![vec![f64::INFINITY; n]; n];
    for a in 0..n {
        for b in 0..n {
            let (u, v) = (a / size, b / size);
            if a == b {
                m[a][b] = 0.0;
            } else if u == v || adj[u][v] {
                m[a][b] = 1.0;
            }
        }
    }
    closure(&mut m);
    let far = n as f64;
    for row in m.iter_mut() {
        for d in row.iter_mut() {
            if d.is_infinite() {
                *d = far;
            }
        }
    }
    let ids = (0..n).map(|a| format!("v{}_{}", a / size, a % size)).collect();
    Instance::new(ids, (0..n).collect(), (0..n).collect(), m, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_validate() {
        for fam in Family::ALL {
            let inst = generate(fam, 7, 4, 5, 2).unwrap();
            assert!(inst.validate().is_empty(), "{fam}");
        }
    }

    #[test]
    fn set_cover_distances() {
        let inst = generate(Family::SetCoverGadget, 3, 4, 6, 2).unwrap();
        for i in 0..inst.nf() {
            for j in 0..inst.nc() {
                assert!(inst.c(i, j) == 1.0 || inst.c(i, j) == 3.0);
            }
        }
    }

    #[test]
    fn unknown_family_is_rejected() {
        assert!("petersen".parse::<Family>().is_err());
    }
}
