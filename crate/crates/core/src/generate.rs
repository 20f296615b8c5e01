//! Random graph generators.
//!
//! All generators are deterministic functions of their spec (model
//! parameters, node count, seed) and return connected graphs with unit edge
//! weights. Models whose samples can be disconnected (Erdős–Rényi, random
//! geometric) are re-drawn from an incremented sub-seed until connected.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Exponent of the power-law degree distribution used for `Plt`.
const POWER_LAW_EXPONENT: f64 = 2.5;

/// Attempts before giving up on drawing a connected instance.
const MAX_CONNECT_ATTEMPTS: u64 = 100_000;

/// Random graph families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GraphModel {
    /// Erdős–Rényi G(n, p).
    Er { p: f64 },
    /// Barabási–Albert preferential attachment, `m` edges per new node.
    Ba { m: usize },
    /// Random geometric graph on the unit sphere; nodes joined when their
    /// great-circle distance is at most `radius`.
    Rgg { radius: f64 },
    /// Maximal tree with all internal degrees equal to `degree`.
    Rt { degree: usize },
    /// Random tree realizing a power-law degree sequence.
    Plt,
}

impl GraphModel {
    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::Er { .. } => "er",
            GraphModel::Ba { .. } => "ba",
            GraphModel::Rgg { .. } => "rgg",
            GraphModel::Rt { .. } => "rt",
            GraphModel::Plt => "plt",
        }
    }
}

/// A fully specified generator invocation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub model: GraphModel,
    pub n: usize,
    pub seed: u64,
}

fn validate(spec: &GeneratorSpec) -> Result<()> {
    if spec.n < 2 {
        return Err(Error::Config(format!(
            "node count must be at least 2, got {}",
            spec.n
        )));
    }
    match spec.model {
        GraphModel::Er { p } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("edge probability must be in (0, 1), got {p}")));
            }
        }
        GraphModel::Ba { m } => {
            if m < 1 || m >= spec.n {
                return Err(Error::Config(format!(
                    "attachment count must satisfy 1 <= m < n, got m={m}, n={}",
                    spec.n
                )));
            }
        }
        GraphModel::Rgg { radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::Config(format!("radius must be positive, got {radius}")));
            }
        }
        GraphModel::Rt { degree } => {
            if degree < 2 {
                return Err(Error::Config(format!("tree degree must be at least 2, got {degree}")));
            }
        }
        GraphModel::Plt => {}
    }
    Ok(())
}

/// Generates a connected unit-weight instance of the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Graph> {
    validate(spec)?;
    let n = spec.n;
    match spec.model {
        GraphModel::Er { p } => retry_connected(spec.seed, |rng| erdos_renyi(n, p, rng)),
        GraphModel::Ba { m } => {
            let graph = barabasi_albert(n, m, &mut rng::seeded_rng(spec.seed, &[0]))?;
            debug_assert!(graph.is_connected());
            Ok(graph)
        }
        GraphModel::Rgg { radius } => retry_connected(spec.seed, |rng| geometric_sphere(n, radius, rng)),
        GraphModel::Rt { degree } => regular_tree(n, degree),
        GraphModel::Plt => {
            let mut rng = rng::seeded_rng(spec.seed, &[0]);
            power_law_tree(n, &mut rng)
        }
    }
}

fn retry_connected<F>(seed: u64, mut draw: F) -> Result<Graph>
where
    F: FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<Graph>,
{
    for attempt in 0..MAX_CONNECT_ATTEMPTS {
        let mut rng = rng::seeded_rng(seed, &[attempt]);
        let graph = draw(&mut rng)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::Config(format!(
        "no connected instance found in {MAX_CONNECT_ATTEMPTS} attempts; \
         the parameters are too sparse"
    )))
}

/// G(n, p) sampled with geometric jumps over the C(n, 2) candidate pairs,
/// so the cost is proportional to the number of edges drawn.
fn erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    let log_q = (1.0 - p).ln();
    let mut v: i64 = 1;
    let mut w: i64 = -1;
    let n = n as i64;
    while v < n {
        let r: f64 = rng.random();
        w += 1 + ((1.0 - r).ln() / log_q) as i64;
        while w >= v && v < n {
            w -= v;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v as usize, 1.0));
        }
    }
    Graph::from_weighted_edges(n as usize, &edges)
}

/// Preferential attachment starting from `m` unconnected seed nodes; each
/// subsequent node attaches to `m` distinct existing nodes chosen with
/// probability proportional to degree (uniformly for the first arrival).
fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> Result<Graph> {
    let mut edges = Vec::with_capacity((n - m) * m);
    // Every endpoint of every edge; sampling an index uniformly is
    // degree-proportional sampling.
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (n - m) * m);
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            edges.push((source, t, 1.0));
            endpoints.push(source);
            endpoints.push(t);
        }
        if source + 1 == n {
            break;
        }
        targets.clear();
        while targets.len() < m {
            let pick = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
    }
    Graph::from_weighted_edges(n, &edges)
}

/// Uniform points on the unit sphere joined when the great-circle distance
/// is at most `radius`.
fn geometric_sphere(n: usize, radius: f64, rng: &mut impl Rng) -> Result<Graph> {
    let points: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).max(0.0).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let dot: f64 = (0..3).map(|k| points[u][k] * points[v][k]).sum();
            let angle = dot.clamp(-1.0, 1.0).acos();
            if angle <= radius {
                edges.push((u, v, 1.0));
            }
        }
    }
    Graph::from_weighted_edges(n, &edges)
}

/// Maximal tree in which every internal node has the given degree: node 0
/// takes `degree` children, every other node `degree - 1`, filled in
/// breadth-first order. Deterministic; the seed is unused.
fn regular_tree(n: usize, degree: usize) -> Result<Graph> {
    let mut edges = Vec::with_capacity(n - 1);
    let mut parent = 0usize;
    let mut capacity = degree;
    for child in 1..n {
        while capacity == 0 {
            parent += 1;
            capacity = degree - 1;
        }
        edges.push((parent, child, 1.0));
        capacity -= 1;
    }
    Graph::from_weighted_edges(n, &edges)
}

/// Samples a degree sequence from a truncated power law, adjusts it to be
/// realizable by a tree (all degrees >= 1, sum = 2(n-1)), and wires a
/// uniform random tree with that degree sequence through a Prüfer sequence.
fn power_law_tree(n: usize, rng: &mut impl Rng) -> Result<Graph> {
    if n == 2 {
        return Graph::from_weighted_edges(2, &[(0, 1, 1.0)]);
    }
    // Inverse-CDF sampling of P(d) proportional to d^-2.5 on 1..n-1.
    let max_degree = n - 1;
    let mut cdf = Vec::with_capacity(max_degree);
    let mut total = 0.0;
    for d in 1..=max_degree {
        total += (d as f64).powf(-POWER_LAW_EXPONENT);
        cdf.push(total);
    }
    let mut degrees: Vec<usize> = (0..n)
        .map(|_| {
            let r: f64 = rng.random_range(0.0..total);
            cdf.partition_point(|&c| c < r) + 1
        })
        .collect();
    // Nudge the sequence onto the tree manifold: total degree 2(n-1).
    let target = 2 * (n - 1);
    loop {
        let sum: usize = degrees.iter().sum();
        if sum == target {
            break;
        }
        let index = rng.random_range(0..n);
        if sum > target && degrees[index] > 1 {
            degrees[index] -= 1;
        } else if sum < target && degrees[index] < max_degree {
            degrees[index] += 1;
        }
    }
    // A labelled tree with these degrees corresponds to a Prüfer sequence
    // where node v appears degrees[v] - 1 times; shuffling yields a uniform
    // choice among them.
    let mut prufer = Vec::with_capacity(n - 2);
    for (node, &degree) in degrees.iter().enumerate() {
        prufer.extend(std::iter::repeat(node).take(degree - 1));
    }
    debug_assert_eq!(prufer.len(), n - 2);
    for i in (1..prufer.len()).rev() {
        prufer.swap(i, rng.random_range(0..=i));
    }
    Graph::from_weighted_edges(n, &prufer_decode(n, &prufer))
}

fn prufer_decode(n: usize, prufer: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut remaining = vec![1usize; n];
    for &v in prufer {
        remaining[v] += 1;
    }
    // Min-ordered set of current leaves.
    let mut leaves: std::collections::BTreeSet<usize> = (0..n)
        .filter(|&v| remaining[v] == 1)
        .collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in prufer {
        let leaf = *leaves.iter().next().expect("leaf available");
        leaves.remove(&leaf);
        edges.push((leaf, v, 1.0));
        remaining[v] -= 1;
        if remaining[v] == 1 {
            leaves.insert(v);
        }
    }
    let mut last = leaves.into_iter();
    let (a, b) = (last.next().unwrap(), last.next().unwrap());
    edges.push((a, b, 1.0));
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: GraphModel, n: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec { model, n, seed }
    }

    #[test]
    fn regular_tree_shape() {
        let g = generate(&spec(GraphModel::Rt { degree: 3 }, 250, 1)).unwrap();
        assert_eq!(g.node_count(), 250);
        assert_eq!(g.edge_count(), 249);
        assert!(g.is_connected());
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
        assert!((0..250).all(|v| g.degree(v) <= 3));
        // Degree 2 degenerates into a path.
        let path = generate(&spec(GraphModel::Rt { degree: 2 }, 5, 1)).unwrap();
        assert!((0..5).all(|v| path.degree(v) <= 2));
        assert_eq!(path.edge_count(), 4);
    }

    #[test]
    fn ba_edge_count_is_exact() {
        let g = generate(&spec(GraphModel::Ba { m: 2 }, 250, 7)).unwrap();
        assert_eq!(g.edge_count(), 496);
        assert!(g.is_connected());
    }

    #[test]
    fn er_mean_edge_count_matches_expectation() {
        // Conditioning on connectivity biases the count upward slightly;
        // the band is wide enough for both effects.
        let mut total = 0usize;
        for seed in 0..50 {
            let g = generate(&spec(GraphModel::Er { p: 0.016 }, 250, seed)).unwrap();
            assert!(g.is_connected());
            total += g.edge_count();
        }
        let mean = total as f64 / 50.0;
        assert!((460.0..=560.0).contains(&mean), "mean edge count {mean}");
    }

    #[test]
    fn trees_are_acyclic_with_n_minus_1_edges() {
        for seed in 0..5 {
            let g = generate(&spec(GraphModel::Plt, 120, seed)).unwrap();
            assert_eq!(g.edge_count(), g.node_count() - 1);
            assert!(g.is_connected()); // n-1 edges + connected = acyclic
        }
    }

    #[test]
    fn rgg_connects_on_dense_radius() {
        let g = generate(&spec(GraphModel::Rgg { radius: 0.9 }, 60, 3)).unwrap();
        assert!(g.is_connected());
    }

    #[test]
    fn generation_is_deterministic() {
        for model in [
            GraphModel::Er { p: 0.05 },
            GraphModel::Ba { m: 2 },
            GraphModel::Rgg { radius: 0.5 },
            GraphModel::Plt,
        ] {
            let a = generate(&spec(model, 80, 99)).unwrap();
            let b = generate(&spec(model, 80, 99)).unwrap();
            assert_eq!(a.edges(), b.edges(), "{model:?}");
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate(&spec(GraphModel::Er { p: 0.0 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Er { p: 1.0 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Ba { m: 0 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Ba { m: 10 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Rt { degree: 1 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Rgg { radius: 0.0 }, 10, 1)).is_err());
        assert!(generate(&spec(GraphModel::Plt, 1, 1)).is_err());
    }

    #[test]
    fn model_serde_round_trip() {
        let s = spec(GraphModel::Er { p: 0.016 }, 250, 5);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"model":"er","p":0.016,"n":250,"seed":5}"#);
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
