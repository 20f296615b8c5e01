//! Command-line driver: graph generation, epidemic simulation, resolving-set
//! search, single-run localization, and batch experiments.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use epiloc::epidemic::EpidemicTrace;
use epiloc::gain::GainKind;
use epiloc::generate::{GeneratorSpec, GraphModel};
use epiloc::graph::{load_edge_list, parse_seat_list, wan_edge_weight, Graph};
use epiloc::harness::{self, ExperimentConfig};
use epiloc::localize::{run_localization, RunConfig};
use epiloc::{all_pairs_shortest_paths, approx_dmd, equivalence_classes, greedy_k_drs};

#[derive(Parser)]
#[command(name = "epiloc", version, about = "Epidemic source localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a connected random graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Convert `u v seats` flight records into `u v w` edge weights.
    WanWeights(WanWeightsArgs),
    /// Simulate one epidemic and write per-node infection times.
    Simulate(SimulateArgs),
    /// Greedy resolving-set search: a k-node witness set or the smallest
    /// fully resolving size.
    Kdrs(KdrsArgs),
    /// Localize the source of a recorded epidemic with online sensors.
    Localize(LocalizeArgs),
    /// Run a batch experiment described by a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Graph family: er, ba, rgg, rt, plt.
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    /// Edge probability (er).
    #[arg(long)]
    p: Option<f64>,
    /// Edges per new node (ba).
    #[arg(long)]
    m: Option<usize>,
    /// Connection radius on the unit sphere (rgg).
    #[arg(long)]
    radius: Option<f64>,
    /// Internal node degree (rt), default 3.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WanWeightsArgs {
    /// Average seat occupancy rate.
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    /// Fraction of a city's population that is infected.
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
    /// Input seat listing; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Source node (original label).
    #[arg(long)]
    source: u64,
    /// Relative half-width of the transmission-delay support.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    start_time: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KdrsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Witness budget.
    #[arg(long, conflicts_with = "dmd")]
    k: Option<usize>,
    /// Report the smallest size at which the greedy search resolves all
    /// nodes instead.
    #[arg(long)]
    dmd: bool,
}

#[derive(Args)]
struct LocalizeArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Trace CSV produced by `simulate`.
    #[arg(long)]
    trace: PathBuf,
    /// Static sensors as comma-separated original labels, e.g. "0,5,9".
    #[arg(long = "static", value_name = "LABELS")]
    static_sensors: String,
    /// Gain function: size, drs, rc, random.
    #[arg(long, default_value = "size")]
    gain: GainKind,
    /// Dynamic-sensor budget: a number or "inf".
    #[arg(long, default_value = "inf")]
    kd: String,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Tolerance scale applied to eps in the pruning conditions.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Re-apply negative reports at every step under deterministic delays.
    #[arg(long)]
    refresh_negatives: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Per-trial CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Aggregated per-strategy CSV output path.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Print one line per finished trial to stderr.
    #[arg(long)]
    progress: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate_cmd(args),
        Command::WanWeights(args) => wan_weights_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Kdrs(args) => kdrs_cmd(args),
        Command::Localize(args) => localize_cmd(args),
        Command::Experiment(args) => experiment_cmd(args),
    }
}

fn write_output(path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn read_graph(path: &PathBuf) -> Result<Graph> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(load_edge_list(&text)?)
}

fn generate_cmd(args: GenerateArgs) -> Result<()> {
    let model = match args.model.as_str() {
        "er" => GraphModel::Er {
            p: args.p.context("--model er requires --p")?,
        },
        "ba" => GraphModel::Ba {
            m: args.m.context("--model ba requires --m")?,
        },
        "rgg" => GraphModel::Rgg {
            radius: args.radius.context("--model rgg requires --radius")?,
        },
        "rt" => GraphModel::Rt {
            degree: args.degree.unwrap_or(3),
        },
        "plt" => GraphModel::Plt,
        other => bail!("unknown model {other:?} (expected er, ba, rgg, rt, plt)"),
    };
    let graph = epiloc::generate(&GeneratorSpec {
        model,
        n: args.n,
        seed: args.seed,
    })?;
    write_output(&args.out, &graph.to_edge_list())
}

fn wan_weights_cmd(args: WanWeightsArgs) -> Result<()> {
    let text = match &args.input {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let mut buffer = String::new();
            std::io::stdin().read_to_string(&mut buffer)?;
            buffer
        }
    };
    let mut out = String::new();
    for record in parse_seat_list(&text)? {
        let weight = wan_edge_weight(record.seats, args.alpha, args.theta)?;
        out.push_str(&format!("{} {} {}\n", record.u, record.v, weight));
    }
    write_output(&args.out, &out)
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let source = graph
        .node_by_label(args.source)
        .with_context(|| format!("node {} does not exist in the graph", args.source))?;
    let trace = epiloc::epidemic::simulate(&graph, source, args.start_time, args.eps, args.seed)?;
    write_output(&args.out, &trace.to_csv(&graph))
}

fn kdrs_cmd(args: KdrsArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let matrix = all_pairs_shortest_paths(&graph)?;
    if args.dmd {
        println!("{}", approx_dmd(&matrix)?);
        return Ok(());
    }
    let k = args.k.context("pass --k <K> or --dmd")?;
    let set = greedy_k_drs(&matrix, k)?;
    let classes = equivalence_classes(&matrix, &set)?.class_count();
    let labels: Vec<String> = set.iter().map(|&v| graph.label(v).to_string()).collect();
    println!("{}", labels.join(","));
    println!("classes: {classes} / {}", graph.node_count());
    Ok(())
}

fn parse_label_list(graph: &Graph, text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|field| {
            let label: u64 = field
                .trim()
                .parse()
                .with_context(|| format!("invalid node label {field:?}"))?;
            graph
                .node_by_label(label)
                .with_context(|| format!("node {label} does not exist in the graph"))
        })
        .collect()
}

fn localize_cmd(args: LocalizeArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let matrix = all_pairs_shortest_paths(&graph)?;
    let trace_text = fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = EpidemicTrace::from_csv(&trace_text, &graph)?;
    let statics = parse_label_list(&graph, &args.static_sensors)?;
    let budget = match args.kd.as_str() {
        s if s.eq_ignore_ascii_case("inf") => None,
        s => Some(s.parse::<usize>().with_context(|| format!("invalid budget {s:?}"))?),
    };
    let config = RunConfig {
        gain: args.gain,
        budget,
        delta: args.delta,
        epsilon: args.eps,
        tolerance_scale: args.c,
        seed: args.seed,
        refresh_negatives: args.refresh_negatives,
        prior: None,
    };
    let result = run_localization(&graph, &matrix, &statics, &trace, &config)?;
    let label = |v: &usize| graph.label(*v);
    let sensors: Vec<u64> = statics
        .iter()
        .map(label)
        .chain(result.dynamic_sensors.iter().map(label))
        .collect();
    let record = serde_json::json!({
        "candidates": result.candidates.iter().map(label).collect::<Vec<_>>(),
        "sensors": sensors,
        "dynamic_sensors": result.dynamic_sensors.iter().map(label).collect::<Vec<_>>(),
        "steps": result.steps,
        "localized": result.localized,
        "detection_time": result.detection_time,
        "time": result.final_time - trace.start_time,
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let output = harness::run_experiment(&config, args.progress)?;
    let mut csv = Vec::new();
    harness::write_rows_csv(&output.rows, &mut csv)?;
    fs::write(&args.out, &csv).with_context(|| format!("writing {}", args.out.display()))?;
    let mut summary = Vec::new();
    harness::write_summary_csv(&output.summary, &mut summary)?;
    match &args.summary_out {
        Some(path) => {
            fs::write(path, &summary).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(&summary)?,
    }
    if !output.failures.is_empty() {
        eprintln!("{} trial(s) failed:", output.failures.len());
        for failure in &output.failures {
            eprintln!("  {failure}");
        }
    }
    Ok(())
}
