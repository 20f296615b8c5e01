//! Shared test support: independent oracles and graph corpora.
//!
//! Everything here deliberately recomputes from definitions (all-pairs
//! relaxation, exhaustive subsets, full pairwise consistency over the whole
//! node set) rather than reusing the library's incremental algorithms, so a
//! bug in the implementation cannot hide in its own oracle.
#![allow(dead_code)]

use epiloc::distance::DistanceMatrix;
use epiloc::epidemic::{sample_delays, spread, EpidemicTrace};
use epiloc::gain::size_gain;
use epiloc::generate::{generate, GeneratorSpec, GraphModel};
use epiloc::graph::{load_edge_list, Graph};
use epiloc::localize::{update_noisy, CandidateSet, Localizer, RunConfig};
use epiloc::observation::{Observation, ObservationLog};
use epiloc::rng::derive_seed;
use epiloc::{all_pairs_shortest_paths, GainKind};

pub const TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Distance oracle
// ---------------------------------------------------------------------------

/// All-pairs shortest paths by iterated relaxation over node triples.
pub fn floyd_warshall(graph: &Graph) -> Vec<Vec<f64>> {
    let n = graph.node_count();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for v in 0..n {
        dist[v][v] = 0.0;
    }
    for edge in graph.edges() {
        dist[edge.u][edge.v] = edge.weight;
        dist[edge.v][edge.u] = edge.weight;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Resolving-set oracle
// ---------------------------------------------------------------------------

/// From-definition check: every pair of nodes is distinguished by some pair
/// of witnesses.
pub fn resolves_pairwise(matrix: &DistanceMatrix, witnesses: &[usize]) -> bool {
    let n = matrix.n();
    for u in 0..n {
        for v in (u + 1)..n {
            let mut distinguished = false;
            'outer: for &w1 in witnesses {
                for &w2 in witnesses {
                    let du = matrix.get(u, w1) - matrix.get(u, w2);
                    let dv = matrix.get(v, w1) - matrix.get(v, w2);
                    if (du - dv).abs() > TOL {
                        distinguished = true;
                        break 'outer;
                    }
                }
            }
            if !distinguished {
                return false;
            }
        }
    }
    true
}

/// Exhaustive minimum size of a fully resolving set, with every optimal set,
/// by enumerating all vertex subsets. Only for small n.
pub fn exact_dmd_with_optima(matrix: &DistanceMatrix) -> (usize, Vec<Vec<usize>>) {
    let n = matrix.n();
    assert!(n <= 16, "exhaustive search is exponential");
    for k in 1..=n {
        let mut optima = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let set: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            if resolves_pairwise(matrix, &set) {
                optima.push(set);
            }
        }
        if !optima.is_empty() {
            return (k, optima);
        }
    }
    unreachable!("the full vertex set resolves everything");
}

// ---------------------------------------------------------------------------
// Candidate-set oracles
// ---------------------------------------------------------------------------

fn positive_records(log: &ObservationLog) -> Vec<(usize, f64)> {
    log.records()
        .iter()
        .filter_map(|o| o.time.map(|t| (o.node, t)))
        .collect()
}

/// Deterministic-delay consistency, recomputed from scratch over every node:
/// all pairs of positive reports must differ exactly as the distances
/// predict, and every sensor negative at its recording time must be farther
/// from `v` than that recording time allows. Negative records are kept as
/// historical facts even after the sensor later reports.
pub fn oracle_candidates_deterministic(
    matrix: &DistanceMatrix,
    log: &ObservationLog,
    prior: &[f64],
) -> Vec<usize> {
    let positives = positive_records(log);
    let negatives: Vec<(usize, f64)> = log
        .records()
        .iter()
        .filter(|o| o.time.is_none())
        .map(|o| (o.node, o.recorded_at))
        .collect();
    (0..matrix.n())
        .filter(|&v| {
            if prior[v] <= 0.0 {
                return false;
            }
            for (i, &(u1, t1)) in positives.iter().enumerate() {
                for &(u2, t2) in &positives[i + 1..] {
                    let predicted = matrix.get(v, u1) - matrix.get(v, u2);
                    if (predicted - (t1 - t2)).abs() > TOL {
                        return false;
                    }
                }
            }
            for &(u, t) in &positives {
                for &(w, tau_j) in &negatives {
                    if !(matrix.get(v, u) - matrix.get(v, w) < t - tau_j - TOL) {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// Random-delay consistency, recomputed from scratch over every node: every
/// pair of positive reports within the noise band, and every currently
/// negative sensor strictly pending at `tau_now`.
pub fn oracle_candidates_noisy(
    matrix: &DistanceMatrix,
    log: &ObservationLog,
    eps_eff: f64,
    tau_now: f64,
    prior: &[f64],
) -> Vec<usize> {
    let positives = positive_records(log);
    let negatives: Vec<usize> = log.current_negatives().iter().map(|o| o.node).collect();
    (0..matrix.n())
        .filter(|&v| {
            if prior[v] <= 0.0 {
                return false;
            }
            for (i, &(u1, t1)) in positives.iter().enumerate() {
                let d1 = matrix.get(u1, v);
                for &(u2, t2) in &positives[i + 1..] {
                    let d2 = matrix.get(u2, v);
                    if ((d2 - d1) - (t2 - t1)).abs() > eps_eff * (d1 + d2) + TOL {
                        return false;
                    }
                }
                for &u2 in &negatives {
                    let d2 = matrix.get(u2, v);
                    if !(tau_now - t1 - d2 + d1 < eps_eff * (d1 + d2) - TOL) {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Gain oracles
// ---------------------------------------------------------------------------

/// Exhaustively enumerates the candidate sources: for each hypothetical
/// source, simulates the report sensor `c` would give and prunes the set
/// accordingly; returns the prior-weighted average reduction.
pub fn expected_reduction_oracle(
    c: usize,
    candidates: &CandidateSet,
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> f64 {
    let (s0, tau0) = anchor;
    let members = candidates.members();
    let mass: f64 = members.iter().map(|&v| candidates.prior(v)).sum();
    if members.len() <= 1 || mass <= 0.0 {
        return 0.0;
    }
    let predicted = |v: usize| tau0 + matrix.get(v, c) - matrix.get(v, s0);
    let mut expectation = 0.0;
    for &source in members {
        let t_c = predicted(source);
        let survivors = if t_c <= tau_i + TOL {
            members
                .iter()
                .filter(|&&v| (predicted(v) - t_c).abs() <= TOL)
                .count()
        } else {
            members.iter().filter(|&&v| predicted(v) > tau_i + TOL).count()
        };
        expectation += candidates.prior(source) / mass * (members.len() - survivors) as f64;
    }
    expectation
}

/// Monte-Carlo estimate of the expected candidate-set reduction from reading
/// sensor `c` one step after detection, in a single-first-sensor scenario:
/// epidemics are sampled from the candidate prior and accepted when they
/// reproduce the detection pattern (the anchor sensor reports first, all
/// other sensors still silent), then the surviving set is computed by the
/// actual pruning rules.
#[allow(clippy::too_many_arguments)]
pub fn mc_noisy_gain_oracle(
    graph: &Graph,
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    c: usize,
    candidates: &CandidateSet,
    log: &ObservationLog,
    epsilon: f64,
    tau_1: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::Rng;

    let (s0, tau0) = log.anchor();
    let members = candidates.members();
    let mut rng = epiloc::rng::seeded_rng(seed, &[0xFACE]);
    let mut accepted = 0usize;
    let mut total_reduction = 0usize;
    let mut attempts = 0usize;
    while accepted < samples {
        attempts += 1;
        assert!(
            attempts < samples * 2_000,
            "rejection sampling is not converging (accepted {accepted})"
        );
        let source = members[rng.random_range(0..members.len())];
        let delays = sample_delays(graph, epsilon, rng.random::<u64>()).unwrap();
        let trace = spread(graph, &delays, source, 0.0).unwrap();
        // Align the unknown start time so the anchor reports at tau0.
        let shift = tau0 - trace.time(s0);
        // Accept only epidemics reproducing the detection pattern.
        if static_sensors
            .iter()
            .any(|&s| s != s0 && trace.time(s) + shift <= tau0 + TOL)
        {
            continue;
        }
        accepted += 1;
        let t_c = trace.time(c) + shift;
        let mut log_with_c = log.clone();
        log_with_c.push(Observation {
            node: c,
            time: (t_c <= tau_1 + TOL).then_some(t_c),
            step: 1,
            recorded_at: tau_1,
        });
        let after = update_noisy(candidates, &log_with_c, epsilon, tau_1, matrix)
            .map(|b| b.len())
            .unwrap_or(0);
        total_reduction += members.len() - after;
    }
    total_reduction as f64 / accepted as f64
}

// ---------------------------------------------------------------------------
// Corpora
// ---------------------------------------------------------------------------

/// Structured small graphs: paths, cycles, stars, complete graphs, a
/// caterpillar, a binary tree, and weighted variants.
pub fn structured_corpus() -> Vec<Graph> {
    let mut graphs = Vec::new();
    let path = |n: usize| {
        (0..n - 1)
            .map(|v| format!("{} {} 1", v, v + 1))
            .collect::<Vec<_>>()
            .join("\n")
    };
    for n in [2, 3, 5, 8] {
        graphs.push(load_edge_list(&path(n)).unwrap());
    }
    for n in [3, 4, 6, 9] {
        let mut lines: Vec<String> = (0..n - 1).map(|v| format!("{} {} 1", v, v + 1)).collect();
        lines.push(format!("{} 0 1", n - 1));
        graphs.push(load_edge_list(&lines.join("\n")).unwrap());
    }
    for leaves in [3, 5, 9] {
        let lines: Vec<String> = (1..=leaves).map(|v| format!("0 {v} 1")).collect();
        graphs.push(load_edge_list(&lines.join("\n")).unwrap());
    }
    for n in [4, 5] {
        let mut lines = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                lines.push(format!("{u} {v} 1"));
            }
        }
        graphs.push(load_edge_list(&lines.join("\n")).unwrap());
    }
    // Caterpillar: spine 0-1-2-3 with a leg on each spine node.
    graphs.push(load_edge_list("0 1 1\n1 2 1\n2 3 1\n0 4 1\n1 5 1\n2 6 1\n3 7 1").unwrap());
    // Complete binary tree on 11 nodes.
    let mut lines = Vec::new();
    for v in 1..11 {
        lines.push(format!("{} {} 1", (v - 1) / 2, v));
    }
    graphs.push(load_edge_list(&lines.join("\n")).unwrap());
    // Weighted triangle with a pendant: the heavy edge loses to the detour.
    graphs.push(load_edge_list("0 1 1\n1 2 1\n0 2 3\n2 3 0.5").unwrap());
    // Weighted path with mixed real weights.
    graphs.push(load_edge_list("0 1 0.25\n1 2 1.5\n2 3 0.75\n3 4 2").unwrap());
    graphs
}

/// Connected random graphs alternating between dense-enough random graphs
/// and random trees, sizes in `4..=max_n`.
pub fn random_mixed_corpus(count: usize, max_n: usize, seed: u64) -> Vec<Graph> {
    (0..count)
        .map(|index| {
            let n = 4 + (derive_seed(seed, &[index as u64, 1]) as usize) % (max_n - 3);
            let spec = if index % 2 == 0 {
                GeneratorSpec {
                    // Dense enough to be connected after few retries.
                    model: GraphModel::Er {
                        p: (2.5 / n as f64).min(0.9).max(0.25),
                    },
                    n,
                    seed: derive_seed(seed, &[index as u64, 2]),
                }
            } else {
                GeneratorSpec {
                    model: GraphModel::Plt,
                    n,
                    seed: derive_seed(seed, &[index as u64, 3]),
                }
            };
            generate(&spec).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Step-by-step verified runs
// ---------------------------------------------------------------------------

pub struct VerifiedRun {
    pub steps: usize,
    pub final_candidates: Vec<usize>,
    pub localized: bool,
    pub dynamic_count: usize,
    pub final_time: f64,
}

/// Runs one localization to completion, comparing the engine's candidate set
/// after initialization and after every step against the from-scratch
/// oracle, and asserting shrink-only updates and soundness of the true
/// source. When `check_size_gain` is set, the size-gain of every placeable
/// node is compared against the exhaustive expected-reduction oracle before
/// each placement.
pub fn run_with_oracle_checks(
    graph: &Graph,
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    trace: &EpidemicTrace,
    config: &RunConfig,
    check_size_gain: bool,
) -> VerifiedRun {
    let n = graph.node_count();
    let prior = vec![1.0 / n as f64; n];
    let eps_eff = config.epsilon * config.tolerance_scale;
    let mut localizer = Localizer::new(graph, matrix, static_sensors, trace, config)
        .expect("localizer construction");

    let compare = |localizer: &Localizer, stage: &str| {
        let expected = if config.epsilon == 0.0 {
            oracle_candidates_deterministic(matrix, localizer.observations(), &prior)
        } else {
            oracle_candidates_noisy(
                matrix,
                localizer.observations(),
                eps_eff,
                localizer.current_time(),
                &prior,
            )
        };
        assert_eq!(
            localizer.candidates().members(),
            expected.as_slice(),
            "candidate mismatch at {stage} (source {}, eps {})",
            trace.source,
            config.epsilon
        );
    };

    compare(&localizer, "initialization");
    assert!(
        localizer.candidates().contains(trace.source),
        "true source lost at initialization"
    );

    loop {
        if check_size_gain && config.epsilon == 0.0 {
            let anchor = localizer.observations().anchor();
            let tau_next = localizer.detection_time()
                + (localizer.steps() + 1) as f64 * config.delta;
            let sensed: Vec<bool> = {
                let mut sensed = vec![false; n];
                for o in localizer.observations().records() {
                    sensed[o.node] = true;
                }
                sensed
            };
            for c in (0..n).filter(|&c| !sensed[c]) {
                let fast = size_gain(c, localizer.candidates(), anchor, tau_next, matrix);
                let slow = expected_reduction_oracle(
                    c,
                    localizer.candidates(),
                    anchor,
                    tau_next,
                    matrix,
                );
                assert!(
                    (fast - slow).abs() <= 1e-9,
                    "size gain {fast} != expected reduction {slow} for sensor {c}"
                );
            }
        }
        let before: Vec<usize> = localizer.candidates().members().to_vec();
        if !localizer.step().expect("step") {
            break;
        }
        let after = localizer.candidates().members();
        assert!(
            after.iter().all(|v| before.contains(v)),
            "candidate set grew: {before:?} -> {after:?}"
        );
        assert!(
            localizer.candidates().contains(trace.source),
            "true source lost at step {} (source {})",
            localizer.steps(),
            trace.source
        );
        compare(&localizer, "step");
    }

    VerifiedRun {
        steps: localizer.steps(),
        localized: localizer.candidates().len() == 1,
        dynamic_count: localizer.dynamic_sensors().len(),
        final_time: localizer.current_time(),
        final_candidates: localizer.candidates().members().to_vec(),
    }
}

/// Convenience: a seeded epidemic on a graph.
pub fn seeded_trace(graph: &Graph, source: usize, epsilon: f64, seed: u64) -> EpidemicTrace {
    let delays = sample_delays(graph, epsilon, seed).unwrap();
    spread(graph, &delays, source, 0.0).unwrap()
}

/// Static sensors for tests: greedy witness pair (or more) over the matrix.
pub fn test_statics(matrix: &DistanceMatrix, k: usize) -> Vec<usize> {
    epiloc::greedy_k_drs(matrix, k).unwrap()
}

pub fn matrix_of(graph: &Graph) -> DistanceMatrix {
    all_pairs_shortest_paths(graph).unwrap()
}

pub fn gain_for_index(index: usize) -> GainKind {
    GainKind::ALL[index % GainKind::ALL.len()]
}
