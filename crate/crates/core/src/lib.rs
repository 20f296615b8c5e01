//! Epidemic simulation and online source localization on weighted networks.
//!
//! The pipeline: build or load a weighted graph ([`graph`], [`generate`]),
//! compute its shortest-path metric ([`distance`]), run a single-source
//! epidemic with bounded random transmission delays ([`epidemic`]), and then
//! localize the source by placing sensors one at a time where they are
//! expected to be most informative ([`localize`], [`gain`]). Static sensors
//! are chosen up front as greedy resolving sets ([`resolving`]); the
//! [`harness`] module batches seeded trials and reports CSV metrics.

pub mod distance;
pub mod epidemic;
pub mod error;
pub mod gain;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod localize;
pub mod observation;
pub mod resolving;
pub mod rng;

/// Absolute tolerance for comparing times and distance differences.
///
/// With integer edge weights and deterministic delays every compared value
/// is an exact integer, so any resolution below 0.5 is equivalent; for real
/// weights this absorbs the rounding error of summed path lengths.
pub const TIME_TOLERANCE: f64 = 1e-9;

pub use distance::{all_pairs_shortest_paths, DistanceMatrix};
pub use epidemic::{sample_delays, spread, DelayAssignment, EpidemicTrace};
pub use error::{Error, Result};
pub use gain::GainKind;
pub use generate::{generate, GeneratorSpec, GraphModel};
pub use graph::{load_edge_list, wan_edge_weight, Graph};
pub use harness::{run_experiment, ExperimentConfig, MetricsRecord};
pub use localize::{run_localization, CandidateSet, Localizer, RunConfig, RunResult};
pub use observation::{detect, Observation, ObservationLog};
pub use resolving::{approx_dmd, equivalence_classes, greedy_k_drs, is_drs};
