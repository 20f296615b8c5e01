//! Scores estimating how informative a prospective sensor would be.
//!
//! All scores are computed against the current candidate-source set: a
//! candidate source `v` predicts that sensor `c` would report infection at
//! `tau0 + d(v, c) - d(v, s0)`, so grouping candidates by predicted report
//! partitions them into the outcomes the new sensor can distinguish.

use serde::{Deserialize, Serialize};

use crate::distance::{DistanceMatrix, PathProfile};
use crate::localize::{negative_pair_holds, positive_pair_holds, CandidateSet};
use crate::observation::ObservationLog;
use crate::TIME_TOLERANCE;

/// Strategy for choosing the next sensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKind {
    /// Expected reduction of the candidate-source set size.
    Size,
    /// Number of distinct predicted reports the sensor separates.
    Drs,
    /// One for current candidate sources, zero otherwise; ties drawn at
    /// random, so the sensor is a random candidate source.
    Rc,
    /// Ignore scores entirely and pick uniformly among placeable nodes.
    Random,
}

impl GainKind {
    pub const ALL: [GainKind; 4] = [GainKind::Size, GainKind::Drs, GainKind::Rc, GainKind::Random];

    pub fn name(&self) -> &'static str {
        match self {
            GainKind::Size => "size",
            GainKind::Drs => "drs",
            GainKind::Rc => "rc",
            GainKind::Random => "random",
        }
    }
}

impl std::fmt::Display for GainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "size" => Ok(GainKind::Size),
            "drs" => Ok(GainKind::Drs),
            "rc" => Ok(GainKind::Rc),
            "random" => Ok(GainKind::Random),
            other => Err(format!("unknown gain kind {other:?}")),
        }
    }
}

/// Predicted report time of sensor `c` if `v` were the source.
#[inline]
fn predicted_time(
    c: usize,
    v: usize,
    anchor: (usize, f64),
    matrix: &DistanceMatrix,
) -> f64 {
    let (s0, tau0) = anchor;
    tau0 + matrix.get(v, c) - matrix.get(v, s0)
}

/// Candidate sources grouped by the report they predict for `c`: groups with
/// a report no later than `tau_i` keyed by time, plus the group predicting a
/// report after `tau_i`.
fn outcome_groups(
    c: usize,
    candidates: &CandidateSet,
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> (Vec<(f64, Vec<usize>)>, Vec<usize>) {
    let mut timed: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut late = Vec::new();
    for &v in candidates.members() {
        let h = predicted_time(c, v, anchor, matrix);
        if h > tau_i + TIME_TOLERANCE {
            late.push(v);
            continue;
        }
        match timed
            .iter_mut()
            .find(|(time, _)| (*time - h).abs() <= TIME_TOLERANCE)
        {
            Some((_, group)) => group.push(v),
            None => timed.push((h, vec![v])),
        }
    }
    (timed, late)
}

/// The distinct report times sensor `c` can still show by `tau_i`, one per
/// group of candidate sources predicting it.
pub fn possible_infection_times(
    c: usize,
    candidates: &CandidateSet,
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> Vec<f64> {
    let (timed, _) = outcome_groups(c, candidates, anchor, tau_i, matrix);
    let mut times: Vec<f64> = timed.into_iter().map(|(h, _)| h).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times
}

/// Expected drop in the number of candidate sources after reading `c`,
/// under the prior restricted to the current candidates: each outcome group
/// keeps exactly itself and eliminates the rest.
pub fn size_gain(
    c: usize,
    candidates: &CandidateSet,
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> f64 {
    let (timed, late) = outcome_groups(c, candidates, anchor, tau_i, matrix);
    let total = candidates.len() as f64;
    let mass = candidates.prior_mass();
    if mass <= 0.0 {
        return 0.0;
    }
    let mut gain = 0.0;
    for (_, group) in timed.iter().chain(std::iter::once(&(0.0, late.clone()))) {
        if group.is_empty() {
            continue;
        }
        let weight: f64 = group.iter().map(|&v| candidates.prior(v)).sum();
        gain += weight / mass * (total - group.len() as f64);
    }
    gain
}

/// Number of outcomes the sensor can distinguish: distinct predicted report
/// times plus one if some candidate predicts no report by `tau_i`.
pub fn drs_gain(
    c: usize,
    candidates: &CandidateSet,
    anchor: (usize, f64),
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> f64 {
    let (timed, late) = outcome_groups(c, candidates, anchor, tau_i, matrix);
    timed.len() as f64 + if late.is_empty() { 0.0 } else { 1.0 }
}

/// One when `c` is currently a candidate source, zero otherwise.
pub fn rc_gain(c: usize, candidates: &CandidateSet) -> f64 {
    if candidates.contains(c) {
        1.0
    } else {
        0.0
    }
}

/// Largest step count for which the exact uniform-sum distribution is used;
/// longer paths switch to its normal approximation.
const EXACT_UNIFORM_SUM_MAX: u32 = 12;

/// CDF of the sum of `n` independent U(0, 1) variables at `x`.
fn uniform_sum_cdf(x: f64, n: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= n as f64 {
        return 1.0;
    }
    // Alternating inclusion-exclusion; stable for the small n used here.
    let mut factorial = 1.0;
    for k in 2..=n {
        factorial *= k as f64;
    }
    let mut binomial = 1.0;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 0..=(x.floor() as u32) {
        sum += sign * binomial * (x - k as f64).powi(n as i32);
        sign = -sign;
        binomial *= (n - k) as f64 / (k + 1) as f64;
    }
    (sum / factorial).clamp(0.0, 1.0)
}

fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return if x >= mean { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

/// CDF of a sensor's report time (relative to the detection time) under the
/// hypothesis that `v` is the source, evaluated at `y`.
///
/// The delay accumulated along the shortest path from `v` to the sensor is
/// the only randomness kept: a path of `n` unit-weight edges yields a scaled
/// uniform-sum distribution (exact for short paths), anything else a normal
/// approximation matched to the path's mean and variance.
fn report_offset_cdf(
    y: f64,
    profile: &PathProfile,
    dist_to_anchor: f64,
    epsilon: f64,
) -> f64 {
    let mean = profile.dist - dist_to_anchor;
    if profile.hops == 0 || epsilon <= 0.0 {
        return if y >= mean { 1.0 } else { 0.0 };
    }
    let unit_path = profile.hops as f64 == profile.dist;
    if unit_path && profile.hops <= EXACT_UNIFORM_SUM_MAX {
        let n = profile.hops;
        // y = sum_{path} theta - dist_to_anchor with theta ~ U(1-eps, 1+eps).
        let scaled = (y + dist_to_anchor - n as f64 * (1.0 - epsilon)) / (2.0 * epsilon);
        uniform_sum_cdf(scaled, n)
    } else {
        let sd = epsilon * (profile.weight_sq_sum / 3.0).sqrt();
        normal_cdf(y, mean, sd)
    }
}

/// Candidate sources that would survive the consistency checks if sensor `c`
/// reported infection time `h`.
fn survivors_if_reports(
    c: usize,
    h: f64,
    candidates: &CandidateSet,
    positives: &[(usize, f64)],
    negatives: &[usize],
    epsilon: f64,
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> usize {
    candidates
        .members()
        .iter()
        .filter(|&&v| {
            positives
                .iter()
                .all(|&p| positive_pair_holds(matrix, v, (c, h), p, epsilon))
                && negatives
                    .iter()
                    .all(|&u| negative_pair_holds(matrix, v, (c, h), u, tau_i, epsilon))
                && positives.iter().all(|&p| {
                    negatives
                        .iter()
                        .all(|&u| negative_pair_holds(matrix, v, p, u, tau_i, epsilon))
                })
        })
        .count()
}

/// Candidate sources that would survive if sensor `c` were still negative at
/// `tau_i`.
fn survivors_if_negative(
    c: usize,
    candidates: &CandidateSet,
    positives: &[(usize, f64)],
    negatives: &[usize],
    epsilon: f64,
    tau_i: f64,
    matrix: &DistanceMatrix,
) -> usize {
    candidates
        .members()
        .iter()
        .filter(|&&v| {
            positives.iter().all(|&p| {
                negative_pair_holds(matrix, v, p, c, tau_i, epsilon)
                    && negatives
                        .iter()
                        .all(|&u| negative_pair_holds(matrix, v, p, u, tau_i, epsilon))
            })
        })
        .count()
}

/// Expected candidate-set reduction from reading `c` under random delays.
///
/// The feasible report window is bounded through the triangle constraints
/// against the recorded positives; the expectation over the report time is
/// then approximated by a unit-step sum on the integers inside the window,
/// weighting each step by the probability mass the candidate sources assign
/// to it.
#[allow(clippy::too_many_arguments)]
pub fn noisy_size_gain(
    c: usize,
    candidates: &CandidateSet,
    log: &ObservationLog,
    epsilon: f64,
    tau_i: f64,
    matrix: &DistanceMatrix,
    profiles: &[PathProfile],
) -> f64 {
    let total = candidates.len() as f64;
    let mass = candidates.prior_mass();
    if candidates.len() <= 1 || mass <= 0.0 {
        return 0.0;
    }
    let (s0, tau0) = log.anchor();
    let positives: Vec<(usize, f64)> = log.positives().collect();
    let negatives: Vec<usize> = log.current_negatives().iter().map(|o| o.node).collect();

    // Feasible report window for c given the recorded positives.
    let mut t_low = f64::INFINITY;
    let mut t_high = f64::NEG_INFINITY;
    for &v in candidates.members() {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for &(u, t) in &positives {
            let base = matrix.get(c, v) - matrix.get(u, v) + t;
            let span = epsilon * (matrix.get(c, v) + matrix.get(u, v));
            lower = lower.max(base - span);
            upper = upper.min(base + span);
        }
        t_low = t_low.min(lower);
        t_high = t_high.max(upper);
    }

    let mut gain = 0.0;
    let mut late_mass = 0.0;
    for &v in candidates.members() {
        let weight = candidates.prior(v) / mass;
        let profile = &profiles[v];
        late_mass +=
            weight * (1.0 - report_offset_cdf(tau_i - tau0, profile, matrix.get(v, s0), epsilon));
    }

    let window_top = t_high.min(tau_i);
    let first = t_low.ceil() as i64;
    let last = window_top.floor() as i64;
    for h in first..=last {
        let h = h as f64;
        // Unit step centered on h, clipped to the feasible report window.
        let bin_low = (h - 0.5).max(t_low);
        let bin_high = (h + 0.5).min(window_top);
        if bin_high <= bin_low {
            continue;
        }
        let mut step_mass = 0.0;
        for &v in candidates.members() {
            let weight = candidates.prior(v) / mass;
            if weight <= 0.0 {
                continue;
            }
            let profile = &profiles[v];
            let d_anchor = matrix.get(v, s0);
            let upper = report_offset_cdf(bin_high - tau0, profile, d_anchor, epsilon);
            let lower = report_offset_cdf(bin_low - tau0, profile, d_anchor, epsilon);
            step_mass += weight * (upper - lower);
        }
        if step_mass <= 0.0 {
            continue;
        }
        let survivors = survivors_if_reports(
            c, h, candidates, &positives, &negatives, epsilon, tau_i, matrix,
        );
        gain += step_mass * (total - survivors as f64);
    }

    let survivors = survivors_if_negative(
        c, candidates, &positives, &negatives, epsilon, tau_i, matrix,
    );
    gain + late_mass * (total - survivors as f64)
}
