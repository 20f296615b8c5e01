//! Shortest-path distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Heap entry; ordered so the smallest distance pops first.
#[derive(PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        // Weights are finite and non-negative, so the comparison never
        // observes NaN. Reversed for a min-heap; node id breaks ties.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest-path lengths with per-edge costs given by `cost`.
/// Unreachable nodes hold `f64::INFINITY`.
pub fn single_source_with<F>(graph: &Graph, source: usize, cost: F) -> Vec<f64>
where
    F: Fn(usize) -> f64,
{
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Visit {
        dist: 0.0,
        node: source,
    });
    while let Some(Visit { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, edge) in graph.neighbors(u) {
            let candidate = d + cost(edge);
            if candidate < dist[v] {
                dist[v] = candidate;
                heap.push(Visit {
                    dist: candidate,
                    node: v,
                });
            }
        }
    }
    dist
}

/// Single-source shortest-path lengths under the graph's own edge weights.
pub fn single_source(graph: &Graph, source: usize) -> Vec<f64> {
    single_source_with(graph, source, |edge| graph.edge(edge).weight)
}

/// Dense matrix of exact weighted shortest-path distances.
///
/// Symmetric with a zero diagonal; all entries finite (construction fails on
/// disconnected graphs).
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    /// Every entry is (within 1e-9 of) an integer; enables exact grouping.
    integral: bool,
    max: f64,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    /// Row of distances from `u`.
    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    /// True when all distances are integers (e.g. integer edge weights).
    pub fn integral(&self) -> bool {
        self.integral
    }

    /// Largest distance in the matrix (the weighted diameter).
    pub fn max_distance(&self) -> f64 {
        self.max
    }
}

/// Computes all-pairs shortest paths by one Dijkstra run per source.
pub fn all_pairs_shortest_paths(graph: &Graph) -> Result<DistanceMatrix> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::Domain("empty graph".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|source| single_source(graph, source))
        .collect();
    let mut data = vec![0.0; n * n];
    for (u, row) in rows.iter().enumerate() {
        for (v, &d) in row.iter().enumerate() {
            if d.is_infinite() {
                return Err(Error::Disconnected(u, v));
            }
            data[u * n + v] = d;
        }
    }
    // Dijkstra sums the same edge weights in a different order from each
    // endpoint, so opposite entries can differ in the last bits; copy the
    // upper triangle to make the matrix exactly symmetric.
    for u in 0..n {
        for v in (u + 1)..n {
            data[v * n + u] = data[u * n + v];
        }
    }
    let mut integral = true;
    let mut max = 0.0f64;
    for &d in &data {
        integral &= (d - d.round()).abs() <= 1e-9;
        max = max.max(d);
    }
    Ok(DistanceMatrix {
        n,
        data,
        integral,
        max,
    })
}

/// Shortest-path statistics needed to model random transmission delays
/// along a path: total expected weight, hop count, and the sum of squared
/// edge weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathProfile {
    pub dist: f64,
    pub hops: u32,
    pub weight_sq_sum: f64,
}

/// Per-node [`PathProfile`] for shortest paths from `source`, following the
/// same route Dijkstra relaxes. For unit-weight graphs this is derived from
/// the distance matrix without re-running the search.
pub fn path_profiles(graph: &Graph, matrix: &DistanceMatrix, source: usize) -> Vec<PathProfile> {
    if graph.unit_weights() {
        return matrix
            .row(source)
            .iter()
            .map(|&d| PathProfile {
                dist: d,
                hops: d.round() as u32,
                weight_sq_sum: d.round(),
            })
            .collect();
    }
    let n = graph.node_count();
    let mut profile = vec![
        PathProfile {
            dist: f64::INFINITY,
            hops: 0,
            weight_sq_sum: 0.0,
        };
        n
    ];
    let mut heap = BinaryHeap::new();
    profile[source].dist = 0.0;
    heap.push(Visit {
        dist: 0.0,
        node: source,
    });
    while let Some(Visit { dist: d, node: u }) = heap.pop() {
        if d > profile[u].dist {
            continue;
        }
        for &(v, edge) in graph.neighbors(u) {
            let w = graph.edge(edge).weight;
            let candidate = d + w;
            if candidate < profile[v].dist {
                profile[v] = PathProfile {
                    dist: candidate,
                    hops: profile[u].hops + 1,
                    weight_sq_sum: profile[u].weight_sq_sum + w * w,
                };
                heap.push(Visit {
                    dist: candidate,
                    node: v,
                });
            }
        }
    }
    profile
}
