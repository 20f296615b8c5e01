//! Online sensor placement and candidate-source tracking.
//!
//! A run starts when the first static sensor reports infection. From then
//! on, one prospective sensor is read per step: the node maximizing the
//! configured gain over the not-yet-sensed nodes. Each reading (and each
//! previously placed sensor that got infected in the meantime) prunes the
//! candidate-source set; the run ends when a single candidate remains or
//! the sensor budget is spent.
//!
//! The pruning rules compare, for a hypothetical source `v`, the observed
//! report times against the shortest-path distances. With deterministic
//! delays the comparison is an equality per observation; with relative
//! delay noise `eps` the single equality relaxes into a band of width
//! `eps * (d(u1, v) + d(u2, v))` per observation pair.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::{path_profiles, DistanceMatrix};
use crate::epidemic::EpidemicTrace;
use crate::error::{Error, Result};
use crate::gain::{drs_gain, noisy_size_gain, rc_gain, size_gain, GainKind};
use crate::graph::Graph;
use crate::observation::{detect, Observation, ObservationLog};
use crate::TIME_TOLERANCE;

/// Nodes that may still be the source, with the prior over all nodes.
///
/// Members only ever shrink across updates, and the true source is never
/// removed (for tolerance scale 1).
#[derive(Clone, Debug)]
pub struct CandidateSet {
    members: Vec<usize>,
    prior: Vec<f64>,
}

impl CandidateSet {
    pub fn new(mut members: Vec<usize>, prior: Vec<f64>) -> Self {
        members.sort_unstable();
        members.dedup();
        CandidateSet { members, prior }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn prior(&self, node: usize) -> f64 {
        self.prior[node]
    }

    /// Total prior mass of the current members.
    pub fn prior_mass(&self) -> f64 {
        self.members.iter().map(|&v| self.prior[v]).sum()
    }

    fn retained(&self, mut keep: impl FnMut(usize) -> bool) -> CandidateSet {
        CandidateSet {
            members: self.members.iter().copied().filter(|&v| keep(v)).collect(),
            prior: self.prior.clone(),
        }
    }
}

/// Pair condition for two positive observations `(u1, t1)` and `(u2, t2)`:
/// the difference of the report times must match the difference of the
/// path lengths from `v`, up to the delay-noise band.
#[inline]
pub(crate) fn positive_pair_holds(
    matrix: &DistanceMatrix,
    v: usize,
    (u1, t1): (usize, f64),
    (u2, t2): (usize, f64),
    epsilon: f64,
) -> bool {
    let d1 = matrix.get(u1, v);
    let d2 = matrix.get(u2, v);
    ((d2 - d1) - (t2 - t1)).abs() <= epsilon * (d1 + d2) + TIME_TOLERANCE
}

/// Pair condition for a positive observation `(u1, t1)` against a sensor
/// `u2` still negative at `tau`: if `v` were the source, `u2`'s report could
/// not be pending unless this strict inequality holds.
#[inline]
pub(crate) fn negative_pair_holds(
    matrix: &DistanceMatrix,
    v: usize,
    (u1, t1): (usize, f64),
    u2: usize,
    tau: f64,
    epsilon: f64,
) -> bool {
    let d1 = matrix.get(u1, v);
    let d2 = matrix.get(u2, v);
    tau - t1 - d2 + d1 < epsilon * (d1 + d2) - TIME_TOLERANCE
}

/// Initial candidate set from the detection event: nodes with positive
/// prior whose distances are consistent with exactly the first-infected
/// sensors reporting at the detection time.
///
/// With `eps_eff = 0` this reduces to: the sensors nearest to `v` are
/// precisely the first-infected ones.
pub fn initialize_candidates(
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    first_infected: &[usize],
    tau0: f64,
    prior: &[f64],
    eps_eff: f64,
) -> Result<CandidateSet> {
    if first_infected.is_empty() {
        return Err(Error::Domain("no first-infected sensor".into()));
    }
    let negatives: Vec<usize> = static_sensors
        .iter()
        .copied()
        .filter(|s| !first_infected.contains(s))
        .collect();
    let members: Vec<usize> = (0..matrix.n())
        .filter(|&v| {
            prior[v] > 0.0
                && first_infected.iter().all(|&s| {
                    first_infected
                        .iter()
                        .all(|&r| positive_pair_holds(matrix, v, (s, tau0), (r, tau0), eps_eff))
                        && negatives
                            .iter()
                            .all(|&u| negative_pair_holds(matrix, v, (s, tau0), u, tau0, eps_eff))
                })
        })
        .collect();
    if members.is_empty() {
        return Err(Error::DegenerateEvidence { step: 0 });
    }
    Ok(CandidateSet::new(members, prior.to_vec()))
}

/// Deterministic-delay pruning: each new observation is compared against the
/// anchor `(s0, tau0)`. A positive report must match the predicted offset
/// exactly; a sensor negative at `tau_i` must have a predicted report
/// strictly later than `tau_i`.
pub fn update_deterministic(
    candidates: &CandidateSet,
    new_observations: &[Observation],
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> Result<CandidateSet> {
    let (s0, tau0) = anchor;
    let next = candidates.retained(|v| {
        new_observations.iter().all(|o| match o.time {
            Some(t) => positive_pair_holds(matrix, v, (s0, tau0), (o.node, t), 0.0),
            None => negative_pair_holds(matrix, v, (s0, tau0), o.node, tau_i, 0.0),
        })
    });
    if next.is_empty() {
        let step = new_observations.iter().map(|o| o.step).max().unwrap_or(0);
        return Err(Error::DegenerateEvidence { step });
    }
    Ok(next)
}

/// Random-delay pruning: keeps the members satisfying the pair condition for
/// every pair of positive observations, and the strict condition for every
/// (positive, still-negative) pair evaluated at the current step time.
pub fn update_noisy(
    candidates: &CandidateSet,
    log: &ObservationLog,
    eps_eff: f64,
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> Result<CandidateSet> {
    let positives: Vec<(usize, f64)> = log.positives().collect();
    let negatives: Vec<usize> = log.current_negatives().iter().map(|o| o.node).collect();
    let next = candidates.retained(|v| {
        positives.iter().enumerate().all(|(i, &p1)| {
            positives[i + 1..]
                .iter()
                .all(|&p2| positive_pair_holds(matrix, v, p1, p2, eps_eff))
                && negatives
                    .iter()
                    .all(|&u| negative_pair_holds(matrix, v, p1, u, tau_i, eps_eff))
        })
    });
    if next.is_empty() {
        let step = log.records().last().map(|o| o.step).unwrap_or(0);
        return Err(Error::DegenerateEvidence { step });
    }
    Ok(next)
}

/// Parameters of one localization run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gain: GainKind,
    /// Maximum number of sensors placed online; `None` means unbounded.
    pub budget: Option<usize>,
    /// Time between consecutive sensor placements.
    pub delta: f64,
    /// Relative half-width of the transmission-delay support.
    pub epsilon: f64,
    /// Scale applied to `epsilon` inside the pruning conditions. Values
    /// below 1 prune more aggressively but may lose the true source.
    pub tolerance_scale: f64,
    pub seed: u64,
    /// Re-apply negative conditions at the current step time even under
    /// deterministic delays (they are applied once, at recording time, by
    /// default).
    pub refresh_negatives: bool,
    /// Prior source weights per node; uniform when absent.
    pub prior: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gain: GainKind::Size,
            budget: None,
            delta: 1.0,
            epsilon: 0.0,
            tolerance_scale: 1.0,
            seed: 0,
            refresh_negatives: false,
            prior: None,
        }
    }
}

impl RunConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "placement delay must be positive, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "noise parameter must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale <= 1.0) {
            return Err(Error::Config(format!(
                "tolerance scale must be in (0, 1], got {}",
                self.tolerance_scale
            )));
        }
        if let Some(prior) = &self.prior {
            if prior.len() != n {
                return Err(Error::Config(format!(
                    "prior has {} entries for {n} nodes",
                    prior.len()
                )));
            }
            if prior.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(Error::Config("prior weights must be non-negative".into()));
            }
            if prior.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Config("prior must have positive total mass".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of a localization run.
#[derive(Clone, Debug)]
pub struct RunResult {
    /// Candidate sources remaining at exit.
    pub candidates: Vec<usize>,
    /// Sensors placed online, in placement order.
    pub dynamic_sensors: Vec<usize>,
    /// Placement rounds executed.
    pub steps: usize,
    /// True when a single candidate remained.
    pub localized: bool,
    /// Time the first static sensor reported.
    pub detection_time: f64,
    /// Step time at exit (equals the detection time if no round ran).
    pub final_time: f64,
}

/// State machine for one run; [`step`](Localizer::step) advances one
/// placement round. Use [`run_localization`] unless intermediate state is
/// needed.
pub struct Localizer<'a> {
    graph: &'a Graph,
    matrix: &'a DistanceMatrix,
    trace: &'a EpidemicTrace,
    gain: GainKind,
    delta: f64,
    epsilon: f64,
    eps_eff: f64,
    refresh_negatives: bool,
    budget_left: Option<usize>,
    rng: ChaCha8Rng,
    is_sensor: Vec<bool>,
    dynamic_sensors: Vec<usize>,
    log: ObservationLog,
    tau0: f64,
    candidates: CandidateSet,
    steps: usize,
    last_tau: f64,
    stagnant_steps: usize,
    finished: bool,
}

impl<'a> Localizer<'a> {
    pub fn new(
        graph: &'a Graph,
        matrix: &'a DistanceMatrix,
        static_sensors: &[usize],
        trace: &'a EpidemicTrace,
        config: &RunConfig,
    ) -> Result<Self> {
        let n = graph.node_count();
        config.validate(n)?;
        if matrix.n() != n || trace.times().len() != n {
            return Err(Error::Config(
                "graph, distance matrix and trace disagree on the node count".into(),
            ));
        }
        if let Some(&bad) = static_sensors.iter().find(|&&s| s >= n) {
            return Err(Error::Config(format!("static sensor {bad} outside 0..{n}")));
        }
        let detection = detect(trace, static_sensors)?;
        let prior = config
            .prior
            .clone()
            .unwrap_or_else(|| vec![1.0 / n as f64; n]);
        let eps_eff = config.epsilon * config.tolerance_scale;
        let candidates = initialize_candidates(
            matrix,
            static_sensors,
            &detection.first_infected,
            detection.tau0,
            &prior,
            eps_eff,
        )?;
        let mut is_sensor = vec![false; n];
        for o in detection.log.records() {
            is_sensor[o.node] = true;
        }
        Ok(Localizer {
            graph,
            matrix,
            trace,
            gain: config.gain,
            delta: config.delta,
            epsilon: config.epsilon,
            eps_eff,
            refresh_negatives: config.refresh_negatives,
            budget_left: config.budget,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            is_sensor,
            dynamic_sensors: Vec::new(),
            tau0: detection.tau0,
            log: detection.log,
            candidates,
            steps: 0,
            last_tau: detection.tau0,
            stagnant_steps: 0,
            finished: false,
        })
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn observations(&self) -> &ObservationLog {
        &self.log
    }

    pub fn detection_time(&self) -> f64 {
        self.tau0
    }

    pub fn current_time(&self) -> f64 {
        self.last_tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dynamic_sensors(&self) -> &[usize] {
        &self.dynamic_sensors
    }

    fn noisy(&self) -> bool {
        self.epsilon > 0.0
    }

    /// True if every sensor read so far has already reported positive, i.e.
    /// waiting longer cannot produce information.
    fn no_pending_information(&self) -> bool {
        self.log.current_negatives().is_empty()
    }

    fn select_sensor(&mut self, pool: &[usize], tau_i: f64) -> usize {
        let anchor = self.log.anchor();
        match self.gain {
            GainKind::Random => pool[self.rng.random_range(0..pool.len())],
            GainKind::Rc => {
                let members: Vec<usize> = pool
                    .iter()
                    .copied()
                    .filter(|&c| rc_gain(c, &self.candidates) > 0.0)
                    .collect();
                let from = if members.is_empty() { pool } else { &members };
                from[self.rng.random_range(0..from.len())]
            }
            GainKind::Drs => {
                argmax(pool.iter().copied(), |c| {
                    drs_gain(c, &self.candidates, anchor, tau_i, self.matrix)
                })
            }
            GainKind::Size => {
                if self.noisy() {
                    argmax(pool.iter().copied(), |c| {
                        let profiles = path_profiles(self.graph, self.matrix, c);
                        noisy_size_gain(
                            c,
                            &self.candidates,
                            &self.log,
                            self.eps_eff,
                            tau_i,
                            self.matrix,
                            &profiles,
                        )
                    })
                } else {
                    argmax(pool.iter().copied(), |c| {
                        size_gain(c, &self.candidates, anchor, tau_i, self.matrix)
                    })
                }
            }
        }
    }

    /// Runs one placement round. Returns false once the run is over.
    pub fn step(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        if self.candidates.len() <= 1 || self.budget_left == Some(0) {
            self.finished = true;
            return Ok(false);
        }
        let n = self.graph.node_count();
        let round = self.steps + 1;
        let tau_i = self.tau0 + round as f64 * self.delta;

        let mut pool: Vec<usize> = (0..n).filter(|&v| !self.is_sensor[v]).collect();
        if pool.is_empty() && self.no_pending_information() {
            // Every node is a sensor and has reported: nothing more can
            // ever prune the set.
            self.finished = true;
            return Ok(false);
        }
        if self.noisy() && self.stagnant_steps >= 2 {
            // Two rounds without progress: restrict the choice to current
            // candidate sources, whose reports are guaranteed to prune.
            let restricted: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&c| self.candidates.contains(c))
                .collect();
            if !restricted.is_empty() {
                pool = restricted;
            }
        }

        let placed = if pool.is_empty() {
            None
        } else {
            Some(self.select_sensor(&pool, tau_i))
        };

        let mut batch: Vec<Observation> = Vec::new();
        if let Some(sensor) = placed {
            self.is_sensor[sensor] = true;
            self.dynamic_sensors.push(sensor);
            if let Some(left) = &mut self.budget_left {
                *left -= 1;
            }
            let t = self.trace.time(sensor);
            batch.push(Observation {
                node: sensor,
                time: (t <= tau_i + TIME_TOLERANCE).then_some(t),
                step: round,
                recorded_at: tau_i,
            });
        }
        for o in self.log.current_negatives() {
            let t = self.trace.time(o.node);
            if t <= tau_i + TIME_TOLERANCE {
                batch.push(Observation {
                    node: o.node,
                    time: Some(t),
                    step: round,
                    recorded_at: tau_i,
                });
            }
        }
        batch.sort_by_key(|o| o.node);
        for &o in &batch {
            self.log.push(o);
        }

        let before = self.candidates.len();
        let anchor = self.log.anchor();
        let updated = if self.noisy() {
            update_noisy(&self.candidates, &self.log, self.eps_eff, tau_i, self.matrix)
        } else {
            let once =
                update_deterministic(&self.candidates, &batch, anchor, tau_i, self.matrix)?;
            if self.refresh_negatives {
                update_noisy(&once, &self.log, 0.0, tau_i, self.matrix)
            } else {
                Ok(once)
            }
        };
        self.candidates = updated.map_err(|e| match e {
            Error::DegenerateEvidence { .. } => Error::DegenerateEvidence { step: round },
            other => other,
        })?;
        self.stagnant_steps = if self.candidates.len() < before {
            0
        } else {
            self.stagnant_steps + 1
        };
        self.steps = round;
        self.last_tau = tau_i;
        Ok(true)
    }

    pub fn run(mut self) -> Result<RunResult> {
        while self.step()? {}
        Ok(RunResult {
            localized: self.candidates.len() == 1,
            candidates: self.candidates.members().to_vec(),
            dynamic_sensors: self.dynamic_sensors,
            steps: self.steps,
            detection_time: self.tau0,
            final_time: self.last_tau,
        })
    }
}

fn argmax(pool: impl Iterator<Item = usize>, mut score: impl FnMut(usize) -> f64) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for c in pool {
        let s = score(c);
        match best {
            // Strictly greater keeps the smallest id on ties, since the
            // pool iterates in ascending order.
            Some((bs, _)) if s <= bs => {}
            _ => best = Some((s, c)),
        }
    }
    best.expect("non-empty pool").1
}

/// Runs the full placement loop and returns the outcome.
pub fn run_localization(
    graph: &Graph,
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    trace: &EpidemicTrace,
    config: &RunConfig,
) -> Result<RunResult> {
    Localizer::new(graph, matrix, static_sensors, trace, config)?.run()
}
