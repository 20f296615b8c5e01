//! Batch experiment runner: seeded trials, baselines, metrics, CSV output.
//!
//! Each trial draws a uniform source and fresh transmission delays, runs the
//! online placement once per configured gain, and optionally runs the
//! all-static baseline on the same epidemic. Seeds are derived per
//! (purpose, instance, trial), so two configs sharing a master seed see the
//! same epidemics regardless of which gains or baselines they enable, and
//! results are byte-identical across thread schedules.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{all_pairs_shortest_paths, DistanceMatrix};
use crate::epidemic::{sample_delays, spread, EpidemicTrace};
use crate::error::{Error, Result};
use crate::gain::GainKind;
use crate::generate::{generate, GeneratorSpec, GraphModel};
use crate::graph::{load_edge_list, Graph};
use crate::localize::{initialize_candidates, run_localization, RunConfig};
use crate::observation::detect;
use crate::resolving::greedy_k_drs;
use crate::rng::{self, purpose};

/// Where the experiment graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    /// An edge-list file.
    File { file: String },
    /// Seeded random instances of a generator model.
    Generated {
        #[serde(flatten)]
        model: GraphModel,
        n: usize,
    },
}

/// Dynamic-sensor budget: a number or unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Budget {
    Finite(usize),
    #[default]
    Unbounded,
}

impl Budget {
    pub fn as_option(&self) -> Option<usize> {
        match self {
            Budget::Finite(k) => Some(*k),
            Budget::Unbounded => None,
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Budget::Finite(k) => serializer.serialize_u64(*k as u64),
            Budget::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(k) => Ok(Budget::Finite(k as usize)),
            Raw::Text(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("unbounded") => {
                Ok(Budget::Unbounded)
            }
            Raw::Text(s) => Err(D::Error::custom(format!(
                "budget must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Baseline strategies to run next to the configured gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Spend the whole budget on static sensors placed up front.
    Allstatic,
    /// Online placement with uniformly random sensor choices.
    Random,
}

fn default_instances() -> usize {
    1
}

fn default_trials() -> usize {
    100
}

fn default_delta() -> f64 {
    1.0
}

fn default_gains() -> Vec<GainKind> {
    vec![GainKind::Size]
}

fn default_scale() -> f64 {
    1.0
}

/// Full description of one experiment; serialized as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    /// Independently generated graph instances (must be 1 for files).
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Trials per instance.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gains")]
    pub gains: Vec<GainKind>,
    /// Static sensor count; defaults to 2% of the nodes (at least 2).
    #[serde(default)]
    pub k_s: Option<usize>,
    #[serde(default)]
    pub k_d: Budget,
    #[serde(default = "default_scale")]
    pub tolerance_scale: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub baselines: Vec<Baseline>,
    #[serde(default)]
    pub refresh_negatives: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Config("instances must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if matches!(self.graph, GraphSource::File { .. }) && self.instances != 1 {
            return Err(Error::Config(
                "a file graph admits exactly one instance".into(),
            ));
        }
        if self.gains.is_empty() && self.baselines.is_empty() {
            return Err(Error::Config("nothing to run: no gains, no baselines".into()));
        }
        if self.baselines.contains(&Baseline::Allstatic)
            && self.k_d.as_option().is_none()
        {
            return Err(Error::Config(
                "the all-static baseline needs a finite dynamic budget".into(),
            ));
        }
        Ok(())
    }

    fn default_static_count(n: usize) -> usize {
        ((0.02 * n as f64).ceil() as usize).max(2)
    }
}

/// Per-trial evaluation of one strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    /// Fraction of nodes used as sensors (static and dynamic).
    pub cost: f64,
    /// Reciprocal size of the final candidate set.
    pub success: f64,
    pub localized: bool,
    /// Time from the epidemic start until exit.
    pub time_to_localize: f64,
    /// Fraction of nodes infected at exit.
    pub infected_fraction: f64,
    pub dynamic_count: usize,
}

/// Chooses the static sensors: the greedy witness set of the requested size.
pub fn place_static(matrix: &DistanceMatrix, k_s: usize) -> Result<Vec<usize>> {
    greedy_k_drs(matrix, k_s)
}

/// Runs one online localization on a prepared trace and reports metrics.
pub fn run_trial(
    graph: &Graph,
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    run_config: &RunConfig,
    trace: &EpidemicTrace,
) -> Result<MetricsRecord> {
    let result = run_localization(graph, matrix, static_sensors, trace, run_config)?;
    let n = graph.node_count() as f64;
    Ok(MetricsRecord {
        cost: (static_sensors.len() + result.dynamic_sensors.len()) as f64 / n,
        success: 1.0 / result.candidates.len() as f64,
        localized: result.localized,
        time_to_localize: result.final_time - trace.start_time,
        infected_fraction: trace.infected_fraction(result.final_time),
        dynamic_count: result.dynamic_sensors.len(),
    })
}

/// Evaluates the all-static strategy on the same trace: the whole budget is
/// spent on static sensors placed up front, and the placement loop runs
/// with a zero dynamic budget, so the answer is the initial candidate set
/// of the enlarged sensor set at detection time.
pub fn run_baseline_allstatic(
    graph: &Graph,
    matrix: &DistanceMatrix,
    static_sensors: &[usize],
    trace: &EpidemicTrace,
    epsilon: f64,
    tolerance_scale: f64,
) -> Result<MetricsRecord> {
    let n = graph.node_count();
    let detection = detect(trace, static_sensors)?;
    let prior = vec![1.0 / n as f64; n];
    let candidates = initialize_candidates(
        matrix,
        static_sensors,
        &detection.first_infected,
        detection.tau0,
        &prior,
        epsilon * tolerance_scale,
    )?;
    Ok(MetricsRecord {
        cost: static_sensors.len() as f64 / n as f64,
        success: 1.0 / candidates.len() as f64,
        localized: candidates.len() == 1,
        time_to_localize: detection.tau0 - trace.start_time,
        infected_fraction: trace.infected_fraction(detection.tau0),
        dynamic_count: 0,
    })
}

/// One CSV row: strategy label plus metrics for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub graph: String,
    pub model: String,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub gain: String,
    pub trial: usize,
    pub record: MetricsRecord,
}

/// Mean and standard error per strategy, pooled over instances and trials.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub gain: String,
    pub trials: usize,
    pub failed: usize,
    pub cost: (f64, f64),
    pub success: (f64, f64),
    pub time_to_localize: (f64, f64),
    pub infected_fraction: (f64, f64),
    pub dynamic_count: (f64, f64),
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<TrialRow>,
    /// Human-readable descriptions of trials that failed; the run continues
    /// past them and they are excluded from `rows` and the summary means.
    pub failures: Vec<String>,
    pub summary: Vec<SummaryRow>,
}

struct Instance {
    label: String,
    graph: Graph,
    matrix: DistanceMatrix,
    statics: Vec<usize>,
    allstatic: Option<Vec<usize>>,
}

fn build_instance(config: &ExperimentConfig, index: usize) -> Result<Instance> {
    let (graph, label) = match &config.graph {
        GraphSource::File { file } => {
            let text = std::fs::read_to_string(file)?;
            let stem = std::path::Path::new(file)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".to_string());
            (load_edge_list(&text)?, stem)
        }
        GraphSource::Generated { model, n } => {
            let spec = GeneratorSpec {
                model: *model,
                n: *n,
                seed: rng::derive_seed(config.master_seed, &[purpose::GRAPH, index as u64]),
            };
            (generate(&spec)?, format!("{}-{}", model.name(), index))
        }
    };
    let matrix = all_pairs_shortest_paths(&graph)?;
    let n = graph.node_count();
    let k_s = config
        .k_s
        .unwrap_or_else(|| ExperimentConfig::default_static_count(n));
    let statics = place_static(&matrix, k_s)?;
    let allstatic = if config.baselines.contains(&Baseline::Allstatic) {
        let k_d = config.k_d.as_option().expect("validated");
        let total = k_s + k_d;
        if total > n {
            return Err(Error::Config(format!(
                "all-static budget {total} exceeds the node count {n}"
            )));
        }
        Some(place_static(&matrix, total)?)
    } else {
        None
    };
    Ok(Instance {
        label,
        graph,
        matrix,
        statics,
        allstatic,
    })
}

fn model_name(config: &ExperimentConfig) -> String {
    match &config.graph {
        GraphSource::File { .. } => "file".to_string(),
        GraphSource::Generated { model, .. } => model.name().to_string(),
    }
}

/// Runs every (instance, trial, strategy) combination, in parallel over
/// trials, and aggregates the summary.
pub fn run_experiment(config: &ExperimentConfig, progress: bool) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut gains: Vec<GainKind> = config.gains.clone();
    if config.baselines.contains(&Baseline::Random) && !gains.contains(&GainKind::Random) {
        gains.push(GainKind::Random);
    }
    let model = model_name(config);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for instance_index in 0..config.instances {
        let instance = build_instance(config, instance_index)?;
        let n = instance.graph.node_count();
        let outcomes: Vec<Vec<std::result::Result<TrialRow, String>>> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut out = Vec::new();
                let source = rng::seeded_rng(
                    config.master_seed,
                    &[purpose::SOURCE, instance_index as u64, trial as u64],
                )
                .random_range(0..n);
                let delay_seed = rng::derive_seed(
                    config.master_seed,
                    &[purpose::DELAYS, instance_index as u64, trial as u64],
                );
                let delays = match sample_delays(&instance.graph, config.epsilon, delay_seed) {
                    Ok(d) => d,
                    Err(e) => {
                        out.push(Err(format!("{} trial {trial}: {e}", instance.label)));
                        return out;
                    }
                };
                let trace = match spread(&instance.graph, &delays, source, 0.0) {
                    Ok(t) => t,
                    Err(e) => {
                        out.push(Err(format!("{} trial {trial}: {e}", instance.label)));
                        return out;
                    }
                };
                let run_seed = rng::derive_seed(
                    config.master_seed,
                    &[purpose::RUN, instance_index as u64, trial as u64],
                );
                for &gain in &gains {
                    let run_config = RunConfig {
                        gain,
                        budget: config.k_d.as_option(),
                        delta: config.delta,
                        epsilon: config.epsilon,
                        tolerance_scale: config.tolerance_scale,
                        seed: run_seed,
                        refresh_negatives: config.refresh_negatives,
                        prior: None,
                    };
                    let row = run_trial(
                        &instance.graph,
                        &instance.matrix,
                        &instance.statics,
                        &run_config,
                        &trace,
                    )
                    .map(|record| TrialRow {
                        graph: instance.label.clone(),
                        model: model.clone(),
                        n,
                        eps: config.epsilon,
                        delta: config.delta,
                        gain: gain.name().to_string(),
                        trial,
                        record,
                    })
                    .map_err(|e| {
                        format!("{} trial {trial} gain {gain}: {e}", instance.label)
                    });
                    out.push(row);
                }
                if let Some(allstatic) = &instance.allstatic {
                    let row = run_baseline_allstatic(
                        &instance.graph,
                        &instance.matrix,
                        allstatic,
                        &trace,
                        config.epsilon,
                        config.tolerance_scale,
                    )
                    .map(|record| TrialRow {
                        graph: instance.label.clone(),
                        model: model.clone(),
                        n,
                        eps: config.epsilon,
                        delta: config.delta,
                        gain: "allstatic".to_string(),
                        trial,
                        record,
                    })
                    .map_err(|e| {
                        format!("{} trial {trial} allstatic: {e}", instance.label)
                    });
                    out.push(row);
                }
                out
            })
            .collect();
        for outcome in outcomes.into_iter().flatten() {
            match outcome {
                Ok(row) => {
                    if progress {
                        eprintln!(
                            "{} trial {} {}: success {:.3} cost {:.3}",
                            row.graph, row.trial, row.gain, row.record.success, row.record.cost
                        );
                    }
                    rows.push(row);
                }
                Err(message) => {
                    if progress {
                        eprintln!("FAILED {message}");
                    }
                    failures.push(message);
                }
            }
        }
    }
    let summary = summarize(&rows, &failures);
    Ok(ExperimentOutput {
        rows,
        failures,
        summary,
    })
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let count = values.len();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

fn summarize(rows: &[TrialRow], failures: &[String]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    for row in rows {
        if !order.contains(&row.gain) {
            order.push(row.gain.clone());
        }
    }
    order
        .into_iter()
        .map(|gain| {
            let group: Vec<&TrialRow> = rows.iter().filter(|r| r.gain == gain).collect();
            let pick = |f: &dyn Fn(&MetricsRecord) -> f64| -> Vec<f64> {
                group.iter().map(|r| f(&r.record)).collect()
            };
            let template = group[0];
            let failed = failures
                .iter()
                .filter(|m| m.contains(&format!(" {gain}:")))
                .count();
            SummaryRow {
                model: template.model.clone(),
                n: template.n,
                eps: template.eps,
                delta: template.delta,
                gain,
                trials: group.len(),
                failed,
                cost: mean_se(&pick(&|r| r.cost)),
                success: mean_se(&pick(&|r| r.success)),
                time_to_localize: mean_se(&pick(&|r| r.time_to_localize)),
                infected_fraction: mean_se(&pick(&|r| r.infected_fraction)),
                dynamic_count: mean_se(&pick(&|r| r.dynamic_count as f64)),
            }
        })
        .collect()
}

pub const TRIAL_CSV_HEADER: &str =
    "graph,model,n,eps,delta,gain,trial,cost,success,localized,T,mu,dynamic_count";

/// Writes per-trial rows as CSV (including the header).
pub fn write_rows_csv(rows: &[TrialRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{TRIAL_CSV_HEADER}")?;
    for row in rows {
        let r = &row.record;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.graph,
            row.model,
            row.n,
            row.eps,
            row.delta,
            row.gain,
            row.trial,
            r.cost,
            r.success,
            r.localized,
            r.time_to_localize,
            r.infected_fraction,
            r.dynamic_count
        )?;
    }
    Ok(())
}

/// Writes the aggregated per-strategy summary as CSV.
pub fn write_summary_csv(summary: &[SummaryRow], out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "model,n,eps,delta,gain,trials,failed,cost_mean,cost_se,success_mean,success_se,\
         T_mean,T_se,mu_mean,mu_se,dynamic_mean,dynamic_se"
    )?;
    for row in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.model,
            row.n,
            row.eps,
            row.delta,
            row.gain,
            row.trials,
            row.failed,
            row.cost.0,
            row.cost.1,
            row.success.0,
            row.success.1,
            row.time_to_localize.0,
            row.time_to_localize.1,
            row.infected_fraction.0,
            row.infected_fraction.1,
            row.dynamic_count.0,
            row.dynamic_count.1
        )?;
    }
    Ok(())
}
