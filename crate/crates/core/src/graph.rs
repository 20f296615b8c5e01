//! Weighted undirected graphs with dense node ids.
//!
//! Nodes are identified by `usize` ids in `0..n`. Graphs loaded from edge
//! lists keep the original integer labels in a side map; generated graphs
//! use identity labels.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// One undirected edge; `u < v` always holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Weighted undirected graph. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Graph {
    labels: Vec<u64>,
    /// Per node: (neighbor, edge index).
    adjacency: Vec<Vec<(usize, usize)>>,
    edges: Vec<Edge>,
    unit_weights: bool,
}

impl Graph {
    /// Builds a graph over nodes `0..n` from `(u, v, weight)` triples.
    pub fn from_weighted_edges(n: usize, raw: &[(usize, usize, f64)]) -> Result<Self> {
        let labels = (0..n as u64).collect();
        Self::with_labels(labels, raw)
    }

    fn with_labels(labels: Vec<u64>, raw: &[(usize, usize, f64)]) -> Result<Self> {
        let n = labels.len();
        let mut edges = Vec::with_capacity(raw.len());
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashMap::new();
        let mut unit_weights = true;
        for &(u, v, weight) in raw {
            if u >= n || v >= n {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at node {u}")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) has non-positive weight {weight}"
                )));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, ()).is_some() {
                return Err(Error::Domain(format!("duplicate edge ({u}, {v})")));
            }
            let index = edges.len();
            edges.push(Edge {
                u: key.0,
                v: key.1,
                weight,
            });
            adjacency[u].push((v, index));
            adjacency[v].push((u, index));
            unit_weights &= weight == 1.0;
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            labels,
            adjacency,
            edges,
            unit_weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> Edge {
        self.edges[index]
    }

    /// Neighbors of `u` as `(neighbor, edge index)` pairs, ascending by id.
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    /// True when every edge has weight exactly 1.
    pub fn unit_weights(&self) -> bool {
        self.unit_weights
    }

    /// Original label of a node id.
    pub fn label(&self, id: usize) -> u64 {
        self.labels[id]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Resolves an original label back to the dense id.
    pub fn node_by_label(&self, label: u64) -> Option<usize> {
        // Labels are sorted for loaded graphs and identity for generated ones.
        self.labels.binary_search(&label).ok()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Renders the graph in the edge-list text format parsed by
    /// [`load_edge_list`], using original labels.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for edge in &self.edges {
            let _ = writeln!(
                out,
                "{} {} {}",
                self.labels[edge.u], self.labels[edge.v], edge.weight
            );
        }
        out
    }
}

/// Parses the edge-list text format: one `u v w` triple per line with
/// non-negative integer labels and positive real weight (`w` omitted means
/// 1.0). Blank lines and `#` comments are skipped. Labels are compacted to
/// `0..n` in ascending label order; originals are kept in the label map.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut raw: Vec<(u64, u64, f64, usize)> = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let content = match line.split_once('#') {
            Some((head, _)) => head,
            None => line,
        };
        let mut fields = content.split_whitespace();
        let Some(first) = fields.next() else {
            continue;
        };
        let u: u64 = first
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid node label {first:?}")))?;
        let second = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing second node label"))?;
        let v: u64 = second
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid node label {second:?}")))?;
        let weight = match fields.next() {
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("invalid weight {w:?}")))?,
            None => 1.0,
        };
        if fields.next().is_some() {
            return Err(Error::parse(line_no, "expected at most three fields"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::parse(
                line_no,
                format!("weight must be positive, got {weight}"),
            ));
        }
        if u == v {
            return Err(Error::parse(line_no, format!("self-loop at node {u}")));
        }
        raw.push((u, v, weight, line_no));
    }

    let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v, _, _)| [u, v]).collect();
    labels.sort_unstable();
    labels.dedup();
    let index_of: HashMap<u64, usize> = labels
        .iter()
        .enumerate()
        .map(|(index, &label)| (label, index))
        .collect();

    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut compact = Vec::with_capacity(raw.len());
    for &(u, v, weight, line_no) in &raw {
        let (a, b) = (index_of[&u], index_of[&v]);
        let key = (a.min(b), a.max(b));
        if let Some(previous) = seen.insert(key, line_no) {
            return Err(Error::parse(
                line_no,
                format!("duplicate edge ({u}, {v}); first seen at line {previous}"),
            ));
        }
        compact.push((a, b, weight));
    }
    Graph::with_labels(labels, &compact)
}

/// Expected transmission time across a flight connection offering `seats`
/// seats per day, for occupancy rate `alpha` and infected fraction `theta`:
/// the reciprocal of the daily probability that an infected traveler takes
/// the connection, rounded to the nearest integer and floored at 1.
pub fn wan_edge_weight(seats: f64, alpha: f64, theta: f64) -> Result<u64> {
    if !(seats.is_finite() && seats > 0.0) {
        return Err(Error::Domain(format!("seats must be positive, got {seats}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "occupancy rate must be in (0, 1], got {alpha}"
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!(
            "infected fraction must be in (0, 1], got {theta}"
        )));
    }
    let weight = (-(-alpha * theta * seats).exp_m1()).recip();
    if !weight.is_finite() {
        return Err(Error::Domain(format!(
            "seat count {seats} too small: expected delay overflows"
        )));
    }
    Ok((weight.round() as u64).max(1))
}

/// One `u v seats` record from a seat-count listing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeatRecord {
    pub u: u64,
    pub v: u64,
    pub seats: f64,
}

/// Parses `u v seats` lines (same comment and blank-line rules as
/// [`load_edge_list`]).
pub fn parse_seat_list(text: &str) -> Result<Vec<SeatRecord>> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let content = match line.split_once('#') {
            Some((head, _)) => head,
            None => line,
        };
        let mut fields = content.split_whitespace();
        let Some(first) = fields.next() else {
            continue;
        };
        let parse_label = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(line_no, format!("invalid node label {s:?}")))
        };
        let u = parse_label(first)?;
        let v = parse_label(
            fields
                .next()
                .ok_or_else(|| Error::parse(line_no, "missing second node label"))?,
        )?;
        let seats_field = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing seat count"))?;
        let seats: f64 = seats_field
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid seat count {seats_field:?}")))?;
        if fields.next().is_some() {
            return Err(Error::parse(line_no, "expected exactly three fields"));
        }
        if !(seats.is_finite() && seats > 0.0) {
            return Err(Error::parse(
                line_no,
                format!("seat count must be positive, got {seats}"),
            ));
        }
        records.push(SeatRecord { u, v, seats });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_path_graph() {
        let g = load_edge_list("0 1 1\n1 2 1").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.unit_weights());
        assert!(g.is_connected());
    }

    #[test]
    fn default_weight_is_one() {
        let g = load_edge_list("0 1\n1 2 2.5").unwrap();
        assert_eq!(g.edge(0).weight, 1.0);
        assert_eq!(g.edge(1).weight, 2.5);
        assert!(!g.unit_weights());
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = load_edge_list("0 1 1\n0 1 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        // Also when stated in the opposite orientation.
        let err = load_edge_list("0 1 1\n1 0 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_non_integer_label() {
        let err = load_edge_list("a b").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_weights_and_self_loops() {
        assert!(load_edge_list("0 1 0").is_err());
        assert!(load_edge_list("0 1 -2").is_err());
        assert!(load_edge_list("0 1 nan").is_err());
        assert!(load_edge_list("3 3 1").is_err());
        assert!(load_edge_list("0 1 1 9").is_err());
        assert!(load_edge_list("0").is_err());
    }

    #[test]
    fn compacts_sparse_labels() {
        let g = load_edge_list("# comment\n10 30 1\n30 20 1\n").unwrap();
        assert_eq!(g.labels(), &[10, 20, 30]);
        assert_eq!(g.node_by_label(20), Some(1));
        assert_eq!(g.node_by_label(11), None);
        // Edge between labels 30 and 20 connects ids 2 and 1.
        assert_eq!(g.neighbors(1), &[(2, 1)]);
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "0 1 1\n1 2 2.5\n0 2 0.125\n";
        let g = load_edge_list(text).unwrap();
        assert_eq!(g.to_edge_list(), text);
    }

    #[test]
    fn detects_disconnected_graph() {
        let g = load_edge_list("0 1 1\n2 3 1").unwrap();
        assert!(!g.is_connected());
    }

    #[test]
    fn wan_weight_matches_direct_evaluation() {
        // Saturated route: infection crosses every day.
        assert_eq!(wan_edge_weight(1e6, 0.7, 0.05).unwrap(), 1);
        // 1/(1 - exp(-0.7)) = 1.987
        assert_eq!(wan_edge_weight(20.0, 0.7, 0.05).unwrap(), 2);
        // 1/(1 - exp(-0.035)) = 29.07
        assert_eq!(wan_edge_weight(1.0, 0.7, 0.05).unwrap(), 29);
    }

    #[test]
    fn wan_weight_rejects_bad_domains() {
        assert!(wan_edge_weight(0.0, 0.7, 0.05).is_err());
        assert!(wan_edge_weight(-3.0, 0.7, 0.05).is_err());
        assert!(wan_edge_weight(20.0, 0.0, 0.05).is_err());
        assert!(wan_edge_weight(20.0, 0.7, 1.5).is_err());
    }

    #[test]
    fn seat_list_parsing() {
        let records = parse_seat_list("1 2 150\n# hub\n2 3 20.5\n").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1], SeatRecord { u: 2, v: 3, seats: 20.5 });
        assert!(parse_seat_list("1 2").is_err());
        assert!(parse_seat_list("1 2 -5").is_err());
    }
}
