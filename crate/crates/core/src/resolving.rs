//! Distance-difference equivalence classes and greedy resolving-set search.
//!
//! A witness set `W` partitions the nodes: `u` and `v` fall in the same
//! class when `d(u, w1) - d(u, w2) = d(v, w1) - d(v, w2)` for every pair of
//! witnesses. Equivalently (fixing any anchor `w0` in `W`) when their
//! difference signatures `(d(., w) - d(., w0))` agree componentwise. A set
//! producing only singleton classes distinguishes every pair of nodes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// Signatures are compared on a fixed grid; distances that differ by less
/// than this resolution are treated as equal.
const SIGNATURE_RESOLUTION: f64 = 1e-9;

fn quantize(x: f64) -> i64 {
    (x / SIGNATURE_RESOLUTION).round() as i64
}

/// The partition of all nodes induced by a witness set.
#[derive(Clone, Debug)]
pub struct ResolvingPartition {
    witnesses: Vec<usize>,
    class_of: Vec<u32>,
    class_count: usize,
}

impl ResolvingPartition {
    pub fn witnesses(&self) -> &[usize] {
        &self.witnesses
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Class index of a node; classes are numbered by first appearance in
    /// node-id order.
    pub fn class_of(&self, node: usize) -> usize {
        self.class_of[node] as usize
    }

    /// Materializes the classes, each sorted, ordered by class index.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.class_count];
        for (node, &class) in self.class_of.iter().enumerate() {
            classes[class as usize].push(node);
        }
        classes
    }

    /// True when every class is a singleton.
    pub fn resolves_all(&self) -> bool {
        self.class_count == self.class_of.len()
    }
}

/// Incremental partition refinement over one distance matrix.
///
/// Starts from the single-class partition of the anchor witness and refines
/// one witness at a time. `count_with` scores a candidate witness without
/// committing it, which is what the greedy search spends nearly all of its
/// time doing; on integral matrices it runs on a dense scratch table instead
/// of a hash map.
struct Refiner<'a> {
    matrix: &'a DistanceMatrix,
    anchor: usize,
    class_of: Vec<u32>,
    class_count: usize,
    dense: Option<DenseScratch>,
    sparse: HashMap<(u32, i64), u32>,
}

struct DenseScratch {
    stride: usize,
    offset: i64,
    stamp: Vec<u32>,
    value: Vec<u32>,
    epoch: u32,
}

/// Upper bound on the dense scratch table; beyond it the hash path is used.
const MAX_DENSE_CELLS: usize = 1 << 26;

impl<'a> Refiner<'a> {
    fn new(matrix: &'a DistanceMatrix, anchor: usize) -> Self {
        let n = matrix.n();
        let dense = if matrix.integral() {
            let offset = matrix.max_distance().round() as i64;
            let stride = (2 * offset + 1) as usize;
            n.checked_mul(stride)
                .filter(|&cells| cells <= MAX_DENSE_CELLS)
                .map(|cells| DenseScratch {
                    stride,
                    offset,
                    stamp: vec![0; cells],
                    value: vec![0; cells],
                    epoch: 0,
                })
        } else {
            None
        };
        Refiner {
            matrix,
            anchor,
            class_of: vec![0; n],
            class_count: 1,
            dense,
            sparse: HashMap::new(),
        }
    }

    #[inline]
    fn delta(&self, node: usize, witness: usize) -> f64 {
        self.matrix.get(node, witness) - self.matrix.get(node, self.anchor)
    }

    /// Classes the partition would have after adding `witness`.
    fn count_with(&mut self, witness: usize) -> usize {
        let n = self.matrix.n();
        if let Some(scratch) = &mut self.dense {
            scratch.epoch += 1;
            let epoch = scratch.epoch;
            let mut distinct = 0;
            for node in 0..n {
                let delta = self.matrix.get(node, witness)
                    - self.matrix.get(node, self.anchor);
                let cell = self.class_of[node] as usize * scratch.stride
                    + (delta.round() as i64 + scratch.offset) as usize;
                if scratch.stamp[cell] != epoch {
                    scratch.stamp[cell] = epoch;
                    distinct += 1;
                }
            }
            distinct
        } else {
            self.sparse.clear();
            for node in 0..n {
                let key = (self.class_of[node], quantize(self.delta(node, witness)));
                self.sparse.insert(key, 0);
            }
            self.sparse.len()
        }
    }

    /// Commits `witness`, renumbering classes by first appearance.
    fn refine(&mut self, witness: usize) {
        let n = self.matrix.n();
        let mut next = 0u32;
        if let Some(scratch) = &mut self.dense {
            scratch.epoch += 1;
            let epoch = scratch.epoch;
            for node in 0..n {
                let delta = self.matrix.get(node, witness)
                    - self.matrix.get(node, self.anchor);
                let cell = self.class_of[node] as usize * scratch.stride
                    + (delta.round() as i64 + scratch.offset) as usize;
                if scratch.stamp[cell] != epoch {
                    scratch.stamp[cell] = epoch;
                    scratch.value[cell] = next;
                    next += 1;
                }
                self.class_of[node] = scratch.value[cell];
            }
        } else {
            self.sparse.clear();
            for node in 0..n {
                let key = (self.class_of[node], quantize(self.delta(node, witness)));
                let id = *self.sparse.entry(key).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                });
                self.class_of[node] = id;
            }
        }
        self.class_count = next as usize;
    }
}

/// Groups nodes by their distance-difference signature with respect to the
/// witness set.
pub fn equivalence_classes(
    matrix: &DistanceMatrix,
    witness_set: &[usize],
) -> Result<ResolvingPartition> {
    if witness_set.is_empty() {
        return Err(Error::Domain("witness set must not be empty".into()));
    }
    let n = matrix.n();
    let mut witnesses = witness_set.to_vec();
    witnesses.sort_unstable();
    witnesses.dedup();
    if let Some(&bad) = witnesses.iter().find(|&&w| w >= n) {
        return Err(Error::Domain(format!("witness {bad} outside 0..{n}")));
    }
    let mut refiner = Refiner::new(matrix, witnesses[0]);
    for &w in &witnesses[1..] {
        refiner.refine(w);
    }
    Ok(ResolvingPartition {
        witnesses,
        class_of: refiner.class_of,
        class_count: refiner.class_count,
    })
}

/// True when the witness set distinguishes every pair of nodes.
pub fn is_drs(matrix: &DistanceMatrix, candidate_set: &[usize]) -> Result<bool> {
    Ok(equivalence_classes(matrix, candidate_set)?.resolves_all())
}

/// Greedy growth from one seed node. Adds, `steps` many times, the node
/// maximizing the class count (smallest id on ties); stops early once every
/// class is a singleton or when the set size reaches `give_up_at`.
fn grow_from_seed(
    matrix: &DistanceMatrix,
    seed: usize,
    steps: usize,
    give_up_at: usize,
) -> (usize, Vec<usize>) {
    let n = matrix.n();
    let mut refiner = Refiner::new(matrix, seed);
    let mut in_set = vec![false; n];
    in_set[seed] = true;
    let mut set = vec![seed];
    for _ in 0..steps {
        if refiner.class_count == n || set.len() >= give_up_at {
            break;
        }
        let mut best: Option<(usize, usize)> = None;
        for candidate in 0..n {
            if in_set[candidate] {
                continue;
            }
            let count = refiner.count_with(candidate);
            if best.map_or(true, |(score, _)| count > score) {
                best = Some((count, candidate));
            }
        }
        let (_, chosen) = best.expect("candidate available");
        refiner.refine(chosen);
        in_set[chosen] = true;
        set.push(chosen);
    }
    set.sort_unstable();
    (refiner.class_count, set)
}

/// Greedy search for a `k`-node set maximizing the number of equivalence
/// classes: one greedy growth per seed node, keeping the best outcome
/// (lexicographically smallest set on ties).
pub fn greedy_k_drs(matrix: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    let n = matrix.n();
    if k < 2 || k > n {
        return Err(Error::Config(format!(
            "witness budget must satisfy 2 <= k <= {n}, got {k}"
        )));
    }
    let best = (0..n)
        .into_par_iter()
        .map(|seed| {
            let (count, mut set) = grow_from_seed(matrix, seed, k - 1, n);
            // The growth stops once everything is resolved; from there every
            // candidate ties at the maximum, so the greedy tie-break fills
            // the remaining budget with the smallest free ids.
            let mut next = 0;
            while set.len() < k {
                if !set.contains(&next) {
                    set.push(next);
                }
                next += 1;
            }
            set.sort_unstable();
            (count, set)
        })
        .reduce_with(|a, b| {
            match b.0.cmp(&a.0) {
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal if b.1 < a.1 => b,
                _ => a,
            }
        })
        .expect("n >= 2");
    Ok(best.1)
}

/// Smallest set size at which the greedy growth resolves every node: an
/// upper bound on the true minimum size of a fully resolving set.
pub fn approx_dmd(matrix: &DistanceMatrix) -> Result<usize> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::Domain("need at least two nodes".into()));
    }
    // Seeds that cannot beat the best size found so far abandon early.
    let best = AtomicUsize::new(n);
    (0..n).into_par_iter().for_each(|seed| {
        let cap = best.load(Ordering::Relaxed);
        let (count, set) = grow_from_seed(matrix, seed, n, cap);
        if count == n {
            best.fetch_min(set.len(), Ordering::Relaxed);
        }
    });
    Ok(best.load(Ordering::Relaxed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::all_pairs_shortest_paths;
    use crate::graph::load_edge_list;

    fn matrix(edge_list: &str) -> DistanceMatrix {
        all_pairs_shortest_paths(&load_edge_list(edge_list).unwrap()).unwrap()
    }

    fn p3() -> DistanceMatrix {
        matrix("0 1 1\n1 2 1")
    }

    /// Hub 0 with leaves 1, 2, 3.
    fn star() -> DistanceMatrix {
        matrix("0 1 1\n0 2 1\n0 3 1")
    }

    #[test]
    fn single_witness_resolves_nothing_on_a_path() {
        let partition = equivalence_classes(&p3(), &[0]).unwrap();
        assert_eq!(partition.class_count(), 1);
        assert_eq!(partition.classes(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn path_endpoints_resolve_everything() {
        // Signatures d(., 2) - d(., 0): node 0 -> 2, node 1 -> 0, node 2 -> -2.
        let partition = equivalence_classes(&p3(), &[0, 2]).unwrap();
        assert_eq!(partition.class_count(), 3);
        assert!(partition.resolves_all());
    }

    #[test]
    fn adjacent_path_witnesses_leave_a_tie() {
        // Signatures d(., 1) - d(., 0): node 0 -> 1, nodes 1, 2 -> -1... the
        // anchored difference collapses 1 and 2 into one class.
        let partition = equivalence_classes(&p3(), &[0, 1]).unwrap();
        assert_eq!(partition.class_count(), 2);
        let classes = partition.classes();
        assert_eq!(classes[0], vec![0]);
        assert_eq!(classes[1], vec![1, 2]);
    }

    #[test]
    fn drs_checks_on_small_graphs() {
        assert!(is_drs(&p3(), &[0, 2]).unwrap());
        assert!(!is_drs(&p3(), &[0, 1]).unwrap());
        // Three leaves of the star distinguish all four nodes.
        assert!(is_drs(&star(), &[1, 2, 3]).unwrap());
        assert!(!is_drs(&star(), &[1, 2]).unwrap());
        assert!(equivalence_classes(&p3(), &[]).is_err());
        assert!(equivalence_classes(&p3(), &[5]).is_err());
    }

    #[test]
    fn greedy_pair_on_path() {
        assert_eq!(greedy_k_drs(&p3(), 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn greedy_triple_on_star_takes_leaves() {
        let set = greedy_k_drs(&star(), 3).unwrap();
        assert_eq!(set.len(), 3);
        assert!(!set.contains(&0), "picked the hub in {set:?}");
        assert!(is_drs(&star(), &set).unwrap());
    }

    #[test]
    fn full_vertex_set_resolves_everything() {
        for dm in [p3(), star(), matrix("0 1 1\n1 2 1\n2 3 1\n3 0 1")] {
            let n = dm.n();
            let all: Vec<usize> = (0..n).collect();
            assert!(is_drs(&dm, &all).unwrap());
            let set = greedy_k_drs(&dm, n).unwrap();
            assert!(equivalence_classes(&dm, &set).unwrap().resolves_all());
        }
    }

    #[test]
    fn greedy_budget_validation() {
        assert!(greedy_k_drs(&p3(), 1).is_err());
        assert!(greedy_k_drs(&p3(), 4).is_err());
    }

    #[test]
    fn dmd_matches_hand_checked_values() {
        assert_eq!(approx_dmd(&p3()).unwrap(), 2);
        assert_eq!(approx_dmd(&star()).unwrap(), 3);
        let c4 = matrix("0 1 1\n1 2 1\n2 3 1\n3 0 1");
        let dmd = approx_dmd(&c4).unwrap();
        assert!((2..=3).contains(&dmd), "C4 greedy bound {dmd}");
    }

    #[test]
    fn adding_witnesses_never_merges_classes() {
        let dm = matrix("0 1 1\n1 2 1\n2 3 1\n3 4 1\n4 0 1\n1 4 1");
        for w in 0..dm.n() {
            let base = equivalence_classes(&dm, &[0, 2]).unwrap().class_count();
            let grown = equivalence_classes(&dm, &[0, 2, w]).unwrap().class_count();
            assert!(grown >= base);
        }
    }

    #[test]
    fn partition_is_anchor_independent() {
        let dm = matrix("0 1 1\n1 2 1\n2 3 1\n3 4 1\n4 0 1\n1 4 1");
        let a = equivalence_classes(&dm, &[0, 2, 3]).unwrap();
        let b = equivalence_classes(&dm, &[3, 0, 2]).unwrap();
        assert_eq!(a.classes(), b.classes());
    }

    #[test]
    fn tolerance_groups_equal_real_signatures() {
        let dm = matrix("0 1 0.5\n1 2 0.5\n2 3 0.25");
        let partition = equivalence_classes(&dm, &[0, 3]).unwrap();
        assert!(partition.resolves_all());
    }
}
