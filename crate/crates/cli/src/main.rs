//! `cascom` command line: cascade generation, community detection from
//! cascades, partition scoring, experiment grids and benchmark graphs.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or inconsistent
//! flag combinations), 2 for runtime failures (I/O, malformed data,
//! degenerate inputs).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cascom::cascade::{load_cascades, write_cascades, write_transmissions};
use cascom::clustopt::{clust_opt, fit_rates, RateEstimate};
use cascom::experiment::{parse_experiment_config, run_experiment, Algorithm};
use cascom::graph::read_community_pairs;
use cascom::lfr::{generate_lfr, realized_mixing, LfrConfig};
use cascom::metrics::{evaluate, MetricName};
use cascom::simulate::generate_set;
use cascom::surrogate::{build_surrogate, Method};
use cascom::{
    calibrate, filter_singletons, load_edge_list, write_edge_list, write_sub_communities,
    CalibrationTarget, EpidemicParams, Model, ModelKind, Partition, SubPartition,
};

#[derive(Parser)]
#[command(name = "cascom", version, about = "Community detection from information cascades")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate cascades over a graph or community structure
    Generate(GenerateArgs),
    /// Detect communities from a cascade file
    Detect(DetectArgs),
    /// Score a detected partition against ground truth
    Eval(EvalArgs),
    /// Run an experiment grid from a config file
    Bench(BenchArgs),
    /// Generate a benchmark graph with planted communities
    Lfr(LfrArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Contact graph edge list (required for sir and si-bd)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Community file defining transmission groups (required for c-si-bd)
    #[arg(long)]
    communities: Option<PathBuf>,
    #[arg(long, default_value = "si-bd")]
    model: ModelKind,
    /// Transmission rate (sir, si-bd)
    #[arg(long)]
    alpha: Option<f64>,
    /// Recovery rate (sir)
    #[arg(long)]
    beta: Option<f64>,
    /// Within-community rate (c-si-bd)
    #[arg(long)]
    alpha_in: Option<f64>,
    /// Across-community rate (c-si-bd)
    #[arg(long)]
    alpha_out: Option<f64>,
    /// Shape of the per-cascade rate multiplier (sir)
    #[arg(long)]
    lomax_shape: Option<f64>,
    /// Observation horizon (si-bd, c-si-bd)
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value_t = 100)]
    num_cascades: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tune the transmission rate until this summary statistic is met
    #[arg(long)]
    calibrate: Option<CalibrationTarget>,
    /// Cascade output file
    #[arg(long, short)]
    out: PathBuf,
    /// Also write who-infected-whom records (sir, si-bd)
    #[arg(long)]
    transmissions: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Cascade file
    cascades: PathBuf,
    /// path, clique, clique0, cosine, oracle or clustopt
    #[arg(long, default_value = "clique0")]
    method: Algorithm,
    /// Transmission records matching the cascade file (oracle)
    #[arg(long)]
    transmissions: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Community output file (stdout if omitted)
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print fitted transmission rates as key=value lines
    #[arg(long)]
    report_rates: bool,
    /// Write the surrogate graph as a weighted edge list and stop
    #[arg(long)]
    dump_surrogate: Option<PathBuf>,
    /// Keep single-event cascades instead of dropping them
    #[arg(long)]
    keep_singletons: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Detected community file (may cover a subset of nodes)
    predicted: PathBuf,
    /// Ground-truth community file over all nodes
    truth: PathBuf,
    /// Comma-separated metric names (default: all eight)
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<MetricName>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config file (key = value lines)
    config: PathBuf,
}

#[derive(Args)]
struct LfrArgs {
    #[arg(long, default_value_t = 10_000)]
    nodes: usize,
    /// Degree distribution exponent
    #[arg(long, default_value_t = 2.5)]
    tau1: f64,
    /// Community size distribution exponent
    #[arg(long, default_value_t = 1.5)]
    tau2: f64,
    /// Target fraction of inter-community edges
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 5.0)]
    avg_degree: f64,
    #[arg(long, default_value_t = 100.0)]
    max_degree: f64,
    #[arg(long, default_value_t = 100)]
    min_community: usize,
    #[arg(long, default_value_t = 600)]
    max_community: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge-list output file
    #[arg(long)]
    edges: PathBuf,
    /// Community output file
    #[arg(long)]
    communities: PathBuf,
}

enum AppError {
    Usage(String),
    Lib(cascom::Error),
}

impl From<cascom::Error> for AppError {
    fn from(e: cascom::Error) -> AppError {
        AppError::Lib(e)
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Detect(args) => detect(args),
        Command::Eval(args) => eval(args),
        Command::Bench(args) => bench(args),
        Command::Lfr(args) => lfr(args),
    }
}

/// Reads a community file into a partition in file order, returning node
/// names alongside.
fn partition_from_pairs(pairs: &[(String, String)]) -> Result<(Vec<String>, Partition), AppError> {
    let mut names = Vec::with_capacity(pairs.len());
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut comm_ids: HashMap<&str, u32> = HashMap::new();
    let mut labels = Vec::with_capacity(pairs.len());
    for (node, comm) in pairs {
        if seen.insert(node, ()).is_some() {
            return Err(AppError::Lib(cascom::Error::Validation(format!(
                "node {node:?} listed twice"
            ))));
        }
        names.push(node.clone());
        let next = comm_ids.len() as u32;
        labels.push(*comm_ids.entry(comm).or_insert(next));
    }
    Ok((names, Partition::from_labels(&labels)))
}

fn generate(args: GenerateArgs) -> Result<(), AppError> {
    let mut params = EpidemicParams::default();
    if let Some(v) = args.alpha {
        params.alpha = v;
    }
    if let Some(v) = args.beta {
        params.beta = v;
    }
    if let Some(v) = args.alpha_in {
        params.alpha_in = v;
    }
    if let Some(v) = args.alpha_out {
        params.alpha_out = v;
    }
    if let Some(v) = args.lomax_shape {
        params.lomax_shape = v;
    }
    if let Some(v) = args.tmax {
        params.t_max = v;
    }

    let graph;
    let truth;
    let (model, labels): (Model<'_>, Vec<String>) = match args.model {
        ModelKind::Sir | ModelKind::SiBd => {
            let path = args
                .graph
                .as_ref()
                .ok_or_else(|| usage(format!("--graph is required for {}", args.model)))?;
            graph = load_edge_list(path)?;
            let labels = match graph.labels() {
                Some(l) => l.to_vec(),
                None => (0..graph.node_count()).map(|v| v.to_string()).collect(),
            };
            let model = match args.model {
                ModelKind::Sir => Model::Sir(&graph),
                _ => Model::SiBd(&graph),
            };
            (model, labels)
        }
        ModelKind::CSiBd => {
            let path = args
                .communities
                .as_ref()
                .ok_or_else(|| usage("--communities is required for c-si-bd"))?;
            let pairs = read_community_pairs(path)?;
            let (names, part) = partition_from_pairs(&pairs)?;
            truth = part;
            (Model::CSiBd(&truth), names)
        }
    };

    if let Some(target) = args.calibrate {
        params = calibrate(&model, &params, target, args.seed)?;
        match args.model {
            ModelKind::CSiBd => log::info!(
                "calibrated alpha_out={} alpha_in={}",
                params.alpha_out,
                params.alpha_in
            ),
            _ => log::info!("calibrated alpha={}", params.alpha),
        }
    }

    let cs = generate_set(&model, &params, args.num_cascades, args.seed)?;
    let cs = if cs.labels().is_none() {
        cs.with_labels(labels)
    } else {
        cs
    };
    write_cascades(&cs, &args.out)?;
    if let Some(path) = &args.transmissions {
        write_transmissions(&cs, path)?;
    }
    Ok(())
}

fn sub_communities_text(sp: &SubPartition, names: Option<&[String]>) -> String {
    let mut out = String::new();
    for (i, &v) in sp.nodes().iter().enumerate() {
        let name = match names {
            Some(n) => n[v as usize].clone(),
            None => v.to_string(),
        };
        writeln!(out, "{}\t{}", name, sp.partition().community_of(i as u32)).unwrap();
    }
    out
}

fn detect(args: DetectArgs) -> Result<(), AppError> {
    let cs = load_cascades(&args.cascades, args.transmissions.as_deref())?;
    let cs = if args.keep_singletons {
        cs
    } else {
        filter_singletons(cs)
    };

    if let Some(path) = &args.dump_surrogate {
        let method = match args.method {
            Algorithm::Path => Method::Path,
            Algorithm::Clique => Method::Clique(cascom::surrogate::CliqueRate::Auto),
            Algorithm::Clique0 => Method::Clique(cascom::surrogate::CliqueRate::Zero),
            Algorithm::Cosine => Method::Cosine,
            Algorithm::Oracle => Method::Oracle,
            Algorithm::ClustOpt => {
                return Err(usage(
                    "clustopt has no surrogate graph; use path, clique, clique0, cosine or oracle",
                ))
            }
        };
        let sg = build_surrogate(&cs, method)?;
        write_edge_list(&sg.graph, path)?;
        return Ok(());
    }

    let (sp, rates): (SubPartition, Option<RateEstimate>) = if args.method == Algorithm::ClustOpt {
        let result = clust_opt(&cs, args.seed)?;
        (result.partition, Some(result.rates))
    } else {
        let sp = args.method.run(&cs, args.seed)?;
        let rates = if args.report_rates {
            Some(fit_rates(&cs, &sp)?)
        } else {
            None
        };
        (sp, rates)
    };

    if args.report_rates {
        let r = rates.expect("rates fitted when requested");
        println!("alpha_in={}", r.alpha_in);
        println!("alpha_out={}", r.alpha_out);
        println!("delta={}", r.delta);
        println!("log_likelihood={}", r.log_likelihood);
    }

    match &args.out {
        Some(path) => write_sub_communities(&sp, cs.labels(), path)?,
        None => print!("{}", sub_communities_text(&sp, cs.labels())),
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), AppError> {
    let truth_pairs = read_community_pairs(&args.truth)?;
    let (truth_names, truth) = partition_from_pairs(&truth_pairs)?;
    let index: HashMap<&str, u32> = truth_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i as u32))
        .collect();

    let pred_pairs = read_community_pairs(&args.predicted)?;
    let mut nodes = Vec::with_capacity(pred_pairs.len());
    let mut comm_ids: HashMap<&str, u32> = HashMap::new();
    let mut labels = Vec::with_capacity(pred_pairs.len());
    for (node, comm) in &pred_pairs {
        let &id = index.get(node.as_str()).ok_or_else(|| {
            cascom::Error::Validation(format!("predicted node {node:?} is not in the ground truth"))
        })?;
        nodes.push(id);
        let next = comm_ids.len() as u32;
        labels.push(*comm_ids.entry(comm).or_insert(next));
    }
    let sp = SubPartition::new(nodes, labels)?;

    let metrics = if args.metrics.is_empty() {
        MetricName::ALL.to_vec()
    } else {
        args.metrics
    };
    for metric in metrics {
        match evaluate(metric, &sp, &truth)? {
            Some(v) => println!("{metric}={v:.6}"),
            None => println!("{metric}=undefined"),
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), AppError> {
    let spec = parse_experiment_config(&args.config)?;
    let report = run_experiment(&spec)?;
    println!("results={}", spec.out_dir.join("results.csv").display());
    println!("rows={}", report.rows().len());
    Ok(())
}

fn lfr(args: LfrArgs) -> Result<(), AppError> {
    let cfg = LfrConfig {
        n: args.nodes,
        tau1: args.tau1,
        tau2: args.tau2,
        mu: args.mu,
        avg_degree: args.avg_degree,
        max_degree: args.max_degree,
        min_community: args.min_community,
        max_community: args.max_community,
        seed: args.seed,
    };
    let bundle = generate_lfr(&cfg)?;
    write_edge_list(&bundle.graph, &args.edges)?;
    let names: Vec<String> = (0..bundle.graph.node_count()).map(|v| v.to_string()).collect();
    cascom::write_communities(&bundle.ground_truth, Some(&names), &args.communities)?;
    println!(
        "mixing={:.6}",
        realized_mixing(&bundle.graph, &bundle.ground_truth)?
    );
    println!("communities={}", bundle.ground_truth.community_count());
    Ok(())
}
