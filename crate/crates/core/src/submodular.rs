//! Greedy maximization of monotone submodular set functions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// A set function over the ground set `0..ground_size()`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;
    /// Value of a set given as distinct elements in any order.
    fn eval(&self, set: &[usize]) -> f64;
}

/// Wraps a closure as a [`SetFunction`].
pub struct FnSetFunction<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[usize]) -> f64> SetFunction for FnSetFunction<F> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, set: &[usize]) -> f64 {
        (self.f)(set)
    }
}

fn gain(f: &dyn SetFunction, set: &mut Vec<usize>, base: f64, u: usize) -> f64 {
    set.push(u);
    let v = f.eval(set);
    set.pop();
    v - base
}

/// Adds `min(k, n)` elements, each maximizing the marginal gain; ties go to
/// the smallest element. Returns elements in selection order.
pub fn greedy_cardinality(f: &dyn SetFunction, k: usize) -> Vec<usize> {
    let n = f.ground_size();
    let mut set = Vec::with_capacity(k);
    let mut used = vec![false; n];
    let mut base = f.eval(&set);
    while set.len() < k.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for u in 0..n {
            if used[u] {
                continue;
            }
            let g = gain(f, &mut set, base, u);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((u, g));
            }
        }
        let (u, _) = best.expect("ground set not exhausted");
        used[u] = true;
        set.push(u);
        base = f.eval(&set);
    }
    set
}

#[derive(PartialEq)]
struct Entry {
    bound: f64,
    elem: usize,
    stamp: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Entry) -> Ordering {
        self.bound
            .partial_cmp(&o.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| o.elem.cmp(&self.elem))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Entry) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Lazy evaluation of [`greedy_cardinality`]; same output on submodular `f`.
pub fn lazy_greedy_cardinality(f: &dyn SetFunction, k: usize) -> Vec<usize> {
    let n = f.ground_size();
    let mut set = Vec::with_capacity(k);
    let mut base = f.eval(&set);
    let mut heap: BinaryHeap<Entry> = (0..n)
        .map(|u| Entry { bound: gain(f, &mut set, base, u), elem: u, stamp: 0 })
        .collect();
    while set.len() < k.min(n) {
        let round = set.len();
        let top = heap.pop().expect("ground set not exhausted");
        if top.stamp == round {
            set.push(top.elem);
            base = f.eval(&set);
        } else {
            let g = gain(f, &mut set, base, top.elem);
            heap.push(Entry { bound: g, elem: top.elem, stamp: round });
        }
    }
    set
}

/// Greedy over an independence system given by `member`: keeps adding the
/// feasible element of largest value until no feasible extension exists.
/// With `rank`, stopping short of it is a contract error.
pub fn greedy_1system(
    f: &dyn SetFunction,
    member: &dyn Fn(&[usize]) -> bool,
    rank: Option<usize>,
) -> Result<Vec<usize>> {
    let n = f.ground_size();
    let mut set: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let base = f.eval(&set);
        let mut best: Option<(usize, f64)> = None;
        for u in 0..n {
            if used[u] {
                continue;
            }
            set.push(u);
            let ok = member(&set);
            set.pop();
            if !ok {
                continue;
            }
            let g = gain(f, &mut set, base, u);
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((u, g));
            }
        }
        match best {
            Some((u, _)) => {
                used[u] = true;
                set.push(u);
            }
            None => break,
        }
    }
    if let Some(r) = rank {
        if set.len() < r {
            return Err(Error::Contract(format!(
                "greedy stopped at {} elements below rank {r}",
                set.len()
            )));
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coverage(sets: Vec<Vec<usize>>) -> impl Fn(&[usize]) -> f64 {
        move |s: &[usize]| {
            let mut seen = std::collections::BTreeSet::new();
            for &u in s {
                seen.extend(sets[u].iter().copied());
            }
            seen.len() as f64
        }
    }

    #[test]
    fn greedy_picks_largest_then_complement() {
        let f = FnSetFunction { n: 3, f: coverage(vec![vec![0, 1, 2], vec![2, 3], vec![3, 4]]) };
        assert_eq!(greedy_cardinality(&f, 2), vec![0, 2]);
        assert_eq!(lazy_greedy_cardinality(&f, 2), vec![0, 2]);
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let f = FnSetFunction { n: 4, f: |s: &[usize]| s.len() as f64 };
        assert_eq!(greedy_cardinality(&f, 2), vec![0, 1]);
        assert_eq!(lazy_greedy_cardinality(&f, 2), vec![0, 1]);
    }

    #[test]
    fn one_system_respects_membership() {
        let f = FnSetFunction { n: 4, f: |s: &[usize]| s.iter().map(|&u| u as f64).sum() };
        let member = |s: &[usize]| s.len() <= 2 && !(s.contains(&3) && s.contains(&2));
        assert_eq!(greedy_1system(&f, &member, Some(2)).unwrap(), vec![3, 1]);
        assert!(greedy_1system(&f, &member, Some(3)).is_err());
    }
}
