//! Continuous-time single-source epidemic with independent random
//! transmission delays of bounded support.
//!
//! Only first-infection times matter: recovery and re-infection are out of
//! scope, so a spread is exactly a single-source shortest-path computation
//! over the sampled delays.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::single_source_with;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// One sampled transmission delay per edge, indexed by edge id.
#[derive(Clone, Debug)]
pub struct DelayAssignment {
    theta: Vec<f64>,
}

impl DelayAssignment {
    pub fn get(&self, edge: usize) -> f64 {
        self.theta[edge]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// Draws one delay per edge, uniform on `[w(1-eps), w(1+eps)]`.
///
/// Each edge's draw is a pure function of `(seed, edge id)` — the per-edge
/// value never depends on iteration order or on how many edges exist.
pub fn sample_delays(graph: &Graph, epsilon: f64, seed: u64) -> Result<DelayAssignment> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!(
            "noise parameter must be in [0, 1], got {epsilon}"
        )));
    }
    let theta = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(index, edge)| {
            if epsilon == 0.0 {
                return edge.weight;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let low = edge.weight * (1.0 - epsilon);
            let high = edge.weight * (1.0 + epsilon);
            rng.random_range(low..=high)
        })
        .collect();
    Ok(DelayAssignment { theta })
}

/// Ground truth of one epidemic: the source, its start time, and every
/// node's first-infection time.
#[derive(Clone, Debug)]
pub struct EpidemicTrace {
    pub source: usize,
    pub start_time: f64,
    infection_time: Vec<f64>,
}

impl EpidemicTrace {
    pub fn time(&self, node: usize) -> f64 {
        self.infection_time[node]
    }

    pub fn times(&self) -> &[f64] {
        &self.infection_time
    }

    /// Fraction of nodes infected at time `at`.
    pub fn infected_fraction(&self, at: f64) -> f64 {
        let infected = self
            .infection_time
            .iter()
            .filter(|&&t| t <= at + crate::TIME_TOLERANCE)
            .count();
        infected as f64 / self.infection_time.len() as f64
    }

    /// Serializes as `node,infection_time` CSV using original labels.
    pub fn to_csv(&self, graph: &Graph) -> String {
        let mut out = String::from("node,infection_time\n");
        for (node, &t) in self.infection_time.iter().enumerate() {
            let _ = writeln!(out, "{},{}", graph.label(node), t);
        }
        out
    }

    /// Parses the CSV emitted by [`EpidemicTrace::to_csv`]. Every node of
    /// `graph` must appear exactly once with a finite time. The source is
    /// reconstructed as the earliest-infected node (smallest label on ties)
    /// and the start time as its infection time.
    pub fn from_csv(text: &str, graph: &Graph) -> Result<Self> {
        let n = graph.node_count();
        let mut times: Vec<Option<f64>> = vec![None; n];
        let mut filled = 0usize;
        for (index, line) in text.lines().enumerate() {
            let line_no = index + 1;
            let content = match line.split_once('#') {
                Some((head, _)) => head,
                None => line,
            };
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            if line_no == 1 && trimmed.eq_ignore_ascii_case("node,infection_time") {
                continue;
            }
            let (label_field, time_field) = trimmed
                .split_once(',')
                .ok_or_else(|| Error::parse(line_no, "expected `node,infection_time`"))?;
            let label: u64 = label_field.trim().parse().map_err(|_| {
                Error::parse(line_no, format!("invalid node label {label_field:?}"))
            })?;
            let time: f64 = time_field.trim().parse().map_err(|_| {
                Error::parse(line_no, format!("invalid infection time {time_field:?}"))
            })?;
            if !time.is_finite() {
                return Err(Error::parse(line_no, "infection time must be finite"));
            }
            let node = graph.node_by_label(label).ok_or_else(|| {
                Error::parse(line_no, format!("node {label} does not exist in the graph"))
            })?;
            if times[node].replace(time).is_some() {
                return Err(Error::parse(line_no, format!("duplicate entry for node {label}")));
            }
            filled += 1;
        }
        if filled != n {
            return Err(Error::Domain(format!(
                "trace covers {filled} of {n} nodes"
            )));
        }
        let infection_time: Vec<f64> = times.into_iter().map(Option::unwrap).collect();
        let source = infection_time
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(node, _)| node)
            .unwrap();
        Ok(EpidemicTrace {
            source,
            start_time: infection_time[source],
            infection_time,
        })
    }
}

/// Runs one epidemic: node `v` is first infected at
/// `start_time +` (delay-weighted shortest-path length from `source` to `v`).
pub fn spread(
    graph: &Graph,
    delays: &DelayAssignment,
    source: usize,
    start_time: f64,
) -> Result<EpidemicTrace> {
    if source >= graph.node_count() {
        return Err(Error::Domain(format!(
            "source {source} outside 0..{}",
            graph.node_count()
        )));
    }
    let from_source = single_source_with(graph, source, |edge| delays.get(edge));
    if let Some(unreached) = from_source.iter().position(|d| d.is_infinite()) {
        return Err(Error::Disconnected(source, unreached));
    }
    let infection_time = from_source.iter().map(|&d| start_time + d).collect();
    Ok(EpidemicTrace {
        source,
        start_time,
        infection_time,
    })
}

/// Convenience wrapper: sample delays and spread in one call.
pub fn simulate(
    graph: &Graph,
    source: usize,
    start_time: f64,
    epsilon: f64,
    seed: u64,
) -> Result<EpidemicTrace> {
    let delays = sample_delays(graph, epsilon, seed)?;
    spread(graph, &delays, source, start_time)
}

#[allow(dead_code)]
fn _assert_send_sync(trace: EpidemicTrace) -> impl Send + Sync {
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;

    fn p3() -> Graph {
        load_edge_list("0 1 1\n1 2 1").unwrap()
    }

    #[test]
    fn zero_noise_reproduces_weights() {
        let g = load_edge_list("0 1 2\n1 2 0.5").unwrap();
        let delays = sample_delays(&g, 0.0, 9).unwrap();
        assert_eq!(delays.as_slice(), &[2.0, 0.5]);
    }

    #[test]
    fn delays_stay_in_support_and_average_out() {
        let g = p3();
        let mut sum = 0.0;
        let draws = 10_000;
        for seed in 0..draws {
            let delays = sample_delays(&g, 0.2, seed).unwrap();
            for &theta in delays.as_slice() {
                assert!((0.8..=1.2).contains(&theta));
            }
            sum += delays.get(0);
        }
        let mean = sum / draws as f64;
        assert!((mean - 1.0).abs() < 0.01, "empirical mean {mean}");
    }

    #[test]
    fn full_noise_support_endpoints() {
        let g = load_edge_list("0 1 2").unwrap();
        for seed in 0..200 {
            let delays = sample_delays(&g, 1.0, seed).unwrap();
            assert!((0.0..=4.0).contains(&delays.get(0)));
        }
        assert!(sample_delays(&g, 1.5, 0).is_err());
        assert!(sample_delays(&g, -0.1, 0).is_err());
    }

    #[test]
    fn delays_are_stable_per_edge() {
        let g = load_edge_list("0 1 1\n1 2 1\n0 2 1").unwrap();
        let a = sample_delays(&g, 0.3, 77).unwrap();
        let b = sample_delays(&g, 0.3, 77).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn deterministic_spread_from_endpoint() {
        let g = p3();
        let delays = sample_delays(&g, 0.0, 0).unwrap();
        let trace = spread(&g, &delays, 2, 0.0).unwrap();
        assert_eq!(trace.times(), &[2.0, 1.0, 0.0]);
    }

    #[test]
    fn spread_shifts_with_start_time() {
        let g = p3();
        let delays = sample_delays(&g, 0.0, 0).unwrap();
        let base = spread(&g, &delays, 1, 0.0).unwrap();
        let shifted = spread(&g, &delays, 1, 5.0).unwrap();
        for v in 0..3 {
            assert_eq!(shifted.time(v), base.time(v) + 5.0);
        }
    }

    #[test]
    fn infection_times_bounded_by_distance_band() {
        let g = load_edge_list("0 1 1\n1 2 1\n2 3 1\n0 3 1\n1 3 1").unwrap();
        let dm = crate::distance::all_pairs_shortest_paths(&g).unwrap();
        let eps = 0.4;
        for seed in 0..50 {
            let trace = simulate(&g, 0, 0.0, eps, seed).unwrap();
            for v in 0..g.node_count() {
                let d = dm.get(0, v);
                assert!(trace.time(v) >= (1.0 - eps) * d - 1e-9);
                assert!(trace.time(v) <= (1.0 + eps) * d + 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = p3();
        let trace = simulate(&g, 2, 0.0, 0.0, 0).unwrap();
        let csv = trace.to_csv(&g);
        let back = EpidemicTrace::from_csv(&csv, &g).unwrap();
        assert_eq!(back.times(), trace.times());
        assert_eq!(back.source, 2);
        assert_eq!(back.start_time, 0.0);
    }

    #[test]
    fn csv_rejects_incomplete_or_malformed_traces() {
        let g = p3();
        assert!(EpidemicTrace::from_csv("node,infection_time\n0,0.0\n", &g).is_err());
        assert!(EpidemicTrace::from_csv("0,0\n1,1\n2,x", &g).is_err());
        assert!(EpidemicTrace::from_csv("0,0\n1,1\n1,2\n2,1", &g).is_err());
        assert!(EpidemicTrace::from_csv("0,0\n1,1\n7,1", &g).is_err());
        assert!(EpidemicTrace::from_csv("0,0\n1,inf\n2,1", &g).is_err());
    }
}
