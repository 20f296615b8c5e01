//! Sensor observations.
//!
//! A sensor reveals its state when read: a *positive* observation carries
//! the node's infection time, a *negative* one records only that the node
//! was still susceptible at the reading time. A node has at most one
//! positive observation; a negative observation can later be superseded by
//! a positive one, never the reverse.

use crate::epidemic::EpidemicTrace;
use crate::error::{Error, Result};
use crate::TIME_TOLERANCE;

/// One sensor reading. `time` is `None` for a negative observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub node: usize,
    pub time: Option<f64>,
    /// Placement step at which the reading was recorded (0 = detection).
    pub step: usize,
    /// Wall-clock time of the recording step.
    pub recorded_at: f64,
}

impl Observation {
    pub fn is_positive(&self) -> bool {
        self.time.is_some()
    }
}

/// Ordered history of observations, anchored at the detection event.
#[derive(Clone, Debug)]
pub struct ObservationLog {
    records: Vec<Observation>,
    anchor_node: usize,
    anchor_time: f64,
}

impl ObservationLog {
    fn new(anchor_node: usize, anchor_time: f64) -> Self {
        ObservationLog {
            records: Vec::new(),
            anchor_node,
            anchor_time,
        }
    }

    /// The reference observation `(s0, tau0)`: the smallest-id sensor among
    /// those infected first, and the detection time.
    pub fn anchor(&self) -> (usize, f64) {
        (self.anchor_node, self.anchor_time)
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    /// Latest state of `node` among sensors read so far.
    pub fn state_of(&self, node: usize) -> Option<&Observation> {
        self.records.iter().rev().find(|o| o.node == node)
    }

    pub fn has_positive(&self, node: usize) -> bool {
        self.records
            .iter()
            .any(|o| o.node == node && o.is_positive())
    }

    /// All positive observations, in recording order.
    pub fn positives(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.records
            .iter()
            .filter_map(|o| o.time.map(|t| (o.node, t)))
    }

    /// Sensors whose most recent reading is still negative.
    pub fn current_negatives(&self) -> Vec<Observation> {
        let mut latest: Vec<Observation> = Vec::new();
        for o in &self.records {
            match latest.iter_mut().find(|p| p.node == o.node) {
                Some(existing) => *existing = *o,
                None => latest.push(*o),
            }
        }
        latest.retain(|o| !o.is_positive());
        latest
    }

    pub fn push(&mut self, observation: Observation) {
        if let Some(time) = observation.time {
            debug_assert!(
                time <= observation.recorded_at + TIME_TOLERANCE,
                "positive observation from the future"
            );
            debug_assert!(
                !self.has_positive(observation.node),
                "second positive observation for node {}",
                observation.node
            );
        } else {
            debug_assert!(
                !self.has_positive(observation.node),
                "negative observation after a positive one for node {}",
                observation.node
            );
        }
        self.records.push(observation);
    }
}

/// Outcome of the detection event: the time the first static sensors got
/// infected, which sensors those were, and the initial observation set.
#[derive(Clone, Debug)]
pub struct Detection {
    pub tau0: f64,
    pub first_infected: Vec<usize>,
    pub log: ObservationLog,
}

/// Reads the static sensors at the moment the earliest of them is infected:
/// the detection time is the minimum infection time over `static_sensors`,
/// the first-infected set collects every sensor tied at it, and the initial
/// log holds positives for those and negatives for the rest.
pub fn detect(trace: &EpidemicTrace, static_sensors: &[usize]) -> Result<Detection> {
    if static_sensors.is_empty() {
        return Err(Error::Config("at least one static sensor is required".into()));
    }
    let tau0 = static_sensors
        .iter()
        .map(|&s| trace.time(s))
        .fold(f64::INFINITY, f64::min);
    let mut sensors: Vec<usize> = static_sensors.to_vec();
    sensors.sort_unstable();
    sensors.dedup();
    let first_infected: Vec<usize> = sensors
        .iter()
        .copied()
        .filter(|&s| trace.time(s) <= tau0 + TIME_TOLERANCE)
        .collect();
    let mut log = ObservationLog::new(first_infected[0], tau0);
    for &s in &sensors {
        let positive = first_infected.contains(&s);
        log.push(Observation {
            node: s,
            time: positive.then_some(tau0),
            step: 0,
            recorded_at: tau0,
        });
    }
    Ok(Detection {
        tau0,
        first_infected,
        log,
    })
}
